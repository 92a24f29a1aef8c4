//! Run configuration documents: `{lattice, params, plan, output}`.
//!
//! Unknown keys are rejected everywhere so typos fail loudly before any
//! computation starts.

use serde::{Deserialize, Serialize};

use crate::evolve::EvolveOptions;
use crate::hamiltonian::{CouplingRange, QuenchParams};
use crate::hilbert::BasisKind;
use crate::lattice::{GeometryKind, C6_DEFAULT, OMEGA_DEFAULT};
use crate::sweep::{Disorder, Engine, GridSpec, LatticeTemplate, SweepPlan};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub plan: PlanSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub geometry: GeometryKind,
    /// Site count for the 1D kinds.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
}

impl LatticeSection {
    pub fn template(&self) -> Result<LatticeTemplate> {
        let need = |v: Option<usize>, what: &str| {
            v.ok_or_else(|| Error::Config(format!("lattice.{what} is required for {}", self.geometry.label())))
        };
        let t = match self.geometry {
            GeometryKind::Ring1d => LatticeTemplate::Ring1d { n: need(self.n, "n")? },
            GeometryKind::FlattenedRect1d => LatticeTemplate::FlattenedRect1d { n: need(self.n, "n")? },
            GeometryKind::Square2d => LatticeTemplate::Square2d { nx: need(self.nx, "nx")?, ny: need(self.ny, "ny")? },
        };
        let stray = match self.geometry {
            GeometryKind::Square2d => self.n.is_some(),
            _ => self.nx.is_some() || self.ny.is_some(),
        };
        if stray {
            return Err(Error::Config(format!("size fields do not match geometry {}", self.geometry.label())));
        }
        let n = t.n_sites();
        if n == 0 || n > 400 {
            return Err(Error::Config(format!("lattice with {n} sites is outside the supported range")));
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_c6")]
    pub c6: f64,
    #[serde(default = "default_rb")]
    pub rb_over_a: f64,
    #[serde(default)]
    pub delta_over_omega: f64,
    #[serde(default)]
    pub coupling: CouplingRange,
}

fn default_omega() -> f64 {
    OMEGA_DEFAULT
}
fn default_c6() -> f64 {
    C6_DEFAULT
}
fn default_rb() -> f64 {
    1.4
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            omega: default_omega(),
            c6: default_c6(),
            rb_over_a: default_rb(),
            delta_over_omega: 0.0,
            coupling: CouplingRange::All,
        }
    }
}

impl ParamsSection {
    pub fn quench(&self) -> QuenchParams {
        QuenchParams { omega: self.omega, delta: self.delta_over_omega * self.omega, c6: self.c6 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.omega) || !ok(self.c6) || !ok(self.rb_over_a) || !self.delta_over_omega.is_finite() {
            return Err(Error::Config("omega, c6 and rb_over_a must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Everything a command may need; each command checks what it uses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub avg_window: Option<[f64; 2]>,
    #[serde(default)]
    pub evolve: EvolveOptions,
    #[serde(default)]
    pub basis: Option<BasisKind>,
    #[serde(default)]
    pub observables: Option<Vec<String>>,
    /// Individual Δ/Ω values run one by one (`evolve`).
    #[serde(default)]
    pub points: Option<Vec<f64>>,
    #[serde(default)]
    pub delta_over_omega: Option<GridSpec>,
    #[serde(default)]
    pub rb_over_a: Option<GridSpec>,
    #[serde(default)]
    pub engine: Option<Engine>,
    #[serde(default)]
    pub disorder: Option<Disorder>,
    /// Bases compared by `thermal`.
    #[serde(default)]
    pub subspaces: Option<Vec<BasisKind>>,
    /// Add a β = 0 row per grid point to `thermal` output.
    #[serde(default)]
    pub infinite_temperature_row: bool,
    #[serde(default)]
    pub classical_dt: Option<f64>,
    #[serde(default)]
    pub classical_shells: Option<usize>,
    #[serde(default)]
    pub pt_delta_reg_over_omega: Option<f64>,
    #[serde(default)]
    pub memory_budget_mb: Option<u64>,
    /// Shot file for `islands`, relative to the working directory.
    #[serde(default)]
    pub samples: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

fn default_prefix() -> String {
    "run".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, prefix: default_prefix() }
    }
}

pub const DEFAULT_OBSERVABLES: [&str; 5] = ["O_ZZ", "O_nn", "O_L1", "O_L2", "O_L3"];

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks shared by all commands.
    pub fn validate(&self) -> Result<()> {
        self.lattice.template()?;
        self.params.validate()?;
        let p = &self.plan;
        for (name, v) in [("t_final", p.t_final), ("dt", p.dt), ("classical_dt", p.classical_dt)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Config(format!("plan.{name} must be finite and non-negative")));
                }
            }
        }
        if p.dt == Some(0.0) || p.classical_dt == Some(0.0) {
            return Err(Error::Config("time steps must be positive".into()));
        }
        if let Some(points) = &p.points {
            if points.is_empty() || points.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("plan.points must be a non-empty list of numbers".into()));
            }
        }
        if let Some(obs) = &p.observables {
            if obs.is_empty() {
                return Err(Error::Config("plan.observables is empty".into()));
            }
        }
        for g in [&p.delta_over_omega, &p.rb_over_a].into_iter().flatten() {
            g.validate()?;
        }
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            return Err(Error::Config("output.prefix must be a plain file-name stem".into()));
        }
        Ok(())
    }

    pub fn observables(&self) -> Vec<String> {
        self.plan
            .observables
            .clone()
            .unwrap_or_else(|| DEFAULT_OBSERVABLES.iter().map(|s| s.to_string()).collect())
    }

    pub fn t_final(&self) -> f64 {
        self.plan.t_final.unwrap_or(10.0)
    }

    pub fn dt(&self) -> f64 {
        self.plan.dt.unwrap_or(0.01)
    }

    /// Sweep plan from the config; grids default to the single point in
    /// `params`.
    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let p = &self.plan;
        let engine = match (&p.engine, &p.basis) {
            (Some(e), _) => e.clone(),
            (None, None | Some(BasisKind::Full)) => Engine::QuantumFull,
            (None, Some(kind)) => Engine::QuantumSubspace(kind.clone()),
        };
        let mut plan = SweepPlan::new(
            p.delta_over_omega.unwrap_or(GridSpec::single(self.params.delta_over_omega)),
            p.rb_over_a.unwrap_or(GridSpec::single(self.params.rb_over_a)),
            engine,
            &[],
        );
        plan.observables = self.observables();
        plan.disorder = p.disorder.unwrap_or_default();
        plan.t_final = self.t_final();
        if matches!(plan.engine, Engine::Classical) && p.t_final.is_none() {
            plan.t_final = 100.0;
        }
        plan.dt = self.dt();
        plan.avg_window = p.avg_window;
        plan.evolve = p.evolve;
        plan.coupling = self.params.coupling;
        plan.classical_dt = p.classical_dt;
        if let Some(s) = p.classical_shells {
            plan.classical_shells = s;
        }
        if let Some(d) = p.pt_delta_reg_over_omega {
            plan.pt_delta_reg_over_omega = d;
        }
        if let Some(b) = p.memory_budget_mb {
            plan.memory_budget_mb = b;
        }
        plan.validate()?;
        Ok(plan)
    }
}
