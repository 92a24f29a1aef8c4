//! Parameter sweeps over `(Δ/Ω, R_b/a, seed)` grids, disorder averaging and
//! peak analysis of the resulting cuts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{long_time_observables, ClassicalObservables, ClassicalParams};
use crate::evolve::{quench_from_vacuum, EvolveOptions, Propagator, Recorder, AUTO_DENSE_LIMIT};
use crate::hamiltonian::{CouplingRange, QuenchParams, RydbergModel};
use crate::hilbert::{basis_for_model, BasisKind};
use crate::lattice::{apply_disorder, build_flattened_rect, build_ring, build_square, LatticeSpec};
use crate::observables::{Estimate, Observable};
use crate::resonance::{pt_second_order, PtConfig};
use crate::{Error, Result};

/// Inclusive uniform grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn single(v: f64) -> Self {
        GridSpec { min: v, max: v, step: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) || self.step <= 0.0 || self.max < self.min {
            return Err(Error::Config(format!("invalid grid {self:?}")));
        }
        if self.len() > 1_000_000 {
            return Err(Error::Config(format!("grid {self:?} has too many points")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `min + i·step`, rounded to 12 decimals so grid labels are stable.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| round12(self.min + i as f64 * self.step)).collect()
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Geometry rebuilt at every `R_b/a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeTemplate {
    Ring1d { n: usize },
    FlattenedRect1d { n: usize },
    Square2d { nx: usize, ny: usize },
}

impl LatticeTemplate {
    pub fn build(&self, a: f64) -> Result<LatticeSpec> {
        match *self {
            LatticeTemplate::Ring1d { n } => build_ring(n, a),
            LatticeTemplate::FlattenedRect1d { n } => build_flattened_rect(n, a),
            LatticeTemplate::Square2d { nx, ny } => build_square(nx, ny, a),
        }
    }

    pub fn n_sites(&self) -> usize {
        match *self {
            LatticeTemplate::Ring1d { n } | LatticeTemplate::FlattenedRect1d { n } => n,
            LatticeTemplate::Square2d { nx, ny } => nx * ny,
        }
    }

    pub fn is_1d(&self) -> bool {
        !matches!(self, LatticeTemplate::Square2d { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    QuantumFull,
    QuantumSubspace(BasisKind),
    Classical,
    Pt,
}

impl Engine {
    pub fn label(&self) -> String {
        match self {
            Engine::QuantumFull => "quantum_full".into(),
            Engine::QuantumSubspace(k) => format!("quantum_subspace:{}", k.label()),
            Engine::Classical => "classical".into(),
            Engine::Pt => "pt".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disorder {
    /// Positional standard deviation, μm.
    pub sigma: f64,
    pub n_realizations: usize,
    pub base_seed: u64,
}

impl Default for Disorder {
    fn default() -> Self {
        Disorder { sigma: 0.0, n_realizations: 1, base_seed: 0 }
    }
}

/// Series names that are derived from the time-averaged Hamming histogram.
pub const HAMMING_MEAN: &str = "hamming_mean";
pub const HAMMING_VAR: &str = "hamming_var";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub delta_over_omega: GridSpec,
    pub rb_over_a: GridSpec,
    pub engine: Engine,
    #[serde(default)]
    pub disorder: Disorder,
    pub observables: Vec<String>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Averaging window, μs; the whole run when absent.
    #[serde(default)]
    pub avg_window: Option<[f64; 2]>,
    #[serde(default)]
    pub evolve: EvolveOptions,
    #[serde(default)]
    pub coupling: CouplingRange,
    /// Classical engine step; chosen from the field strength when absent.
    #[serde(default)]
    pub classical_dt: Option<f64>,
    #[serde(default = "default_shells")]
    pub classical_shells: usize,
    /// Perturbation-theory regularization in units of Ω.
    #[serde(default = "default_delta_reg")]
    pub pt_delta_reg_over_omega: f64,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: u64,
}

fn default_t_final() -> f64 {
    10.0
}
fn default_dt() -> f64 {
    0.01
}
fn default_shells() -> usize {
    3
}
fn default_delta_reg() -> f64 {
    0.05
}
fn default_budget() -> u64 {
    4096
}

impl SweepPlan {
    pub fn new(delta_over_omega: GridSpec, rb_over_a: GridSpec, engine: Engine, observables: &[&str]) -> Self {
        SweepPlan {
            delta_over_omega,
            rb_over_a,
            engine,
            disorder: Disorder::default(),
            observables: observables.iter().map(|s| s.to_string()).collect(),
            t_final: default_t_final(),
            dt: default_dt(),
            avg_window: None,
            evolve: EvolveOptions::default(),
            coupling: CouplingRange::All,
            classical_dt: None,
            classical_shells: default_shells(),
            pt_delta_reg_over_omega: default_delta_reg(),
            memory_budget_mb: default_budget(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.delta_over_omega.validate()?;
        self.rb_over_a.validate()?;
        if self.rb_over_a.min <= 0.0 {
            return Err(Error::Config("rb_over_a must be positive".into()));
        }
        if self.disorder.n_realizations == 0 {
            return Err(Error::Config("n_realizations must be at least 1".into()));
        }
        if !(self.disorder.sigma >= 0.0) {
            return Err(Error::Config("disorder sigma must be >= 0".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("no observables requested".into()));
        }
        if !(self.t_final > 0.0 && self.dt > 0.0) {
            return Err(Error::Config("t_final and dt must be positive".into()));
        }
        if let Some([t0, t1]) = self.avg_window {
            if !(0.0 <= t0 && t0 < t1 && t1 <= self.t_final + 1e-9) {
                return Err(Error::Config(format!("averaging window [{t0}, {t1}] outside [0, {}]", self.t_final)));
            }
        }
        if self.pt_delta_reg_over_omega <= 0.0 {
            return Err(Error::Config("pt_delta_reg_over_omega must be positive".into()));
        }
        Ok(())
    }

    pub fn window(&self) -> (f64, f64) {
        self.avg_window.map_or((0.0, self.t_final), |w| (w[0], w[1]))
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.disorder.n_realizations as u64).map(|r| self.disorder.base_seed + r).collect()
    }
}

/// One grid point × realization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta_over_omega: f64,
    pub rb_over_a: f64,
    pub seed: u64,
    pub engine: String,
    pub n_sites: usize,
    pub values: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseDiagramGrid {
    pub observables: Vec<String>,
    pub t_final: f64,
    pub rows: Vec<SweepRow>,
}

impl PhaseDiagramGrid {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|o| o == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    /// Raw CSV `delta_over_omega,rb_over_a,seed,engine,N,<obs…>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta_over_omega,rb_over_a,seed,engine,N");
        for o in &self.observables {
            out.push(',');
            out.push_str(o);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:.6},{:.6},{},{},{}", r.delta_over_omega, r.rb_over_a, r.seed, r.engine, r.n_sites));
            for v in &r.values {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Estimated peak bytes held by one job.
pub fn job_footprint(template: &LatticeTemplate, plan: &SweepPlan) -> Result<u64> {
    let n = template.n_sites();
    let dim = match &plan.engine {
        Engine::Classical | Engine::Pt => return Ok(1 << 20),
        Engine::QuantumFull => {
            if n > 20 {
                return Err(Error::DimensionTooLarge { dim: usize::MAX, limit: 1 << 20 });
            }
            1u64 << n
        }
        Engine::QuantumSubspace(kind) => match kind {
            BasisKind::Full => 1u64 << n.min(40),
            BasisKind::BlockadeNn | BasisKind::BlockadeXyd if template.is_1d() => lucas(n),
            // upper bounds for the other constrained kinds
            _ => 1u64 << n.min(40),
        },
    };
    let dense = match plan.evolve.propagator {
        Propagator::Dense => true,
        Propagator::Krylov => false,
        Propagator::Auto => dim as usize <= AUTO_DENSE_LIMIT,
    };
    let bytes = if dense {
        // Hamiltonian, eigenvectors and eigensolver workspace
        4 * dim * dim * 8
    } else {
        (plan.evolve.krylov.krylov_dim as u64 + 6) * dim * 16 + dim * (n as u64 + 2) * 12
    };
    Ok(bytes)
}

fn lucas(n: usize) -> u64 {
    let (mut a, mut b) = (2u64, 1u64);
    for _ in 0..n {
        (a, b) = (b, a.saturating_add(b));
    }
    a
}

#[derive(Clone, Copy, Debug)]
struct Job {
    delta: f64,
    rb: f64,
    seed: u64,
}

/// Run every `(Δ/Ω, R_b/a, realization)` job on `parallelism` threads.
/// Rows come back in job order (Δ outermost, then R_b/a, then seed) no
/// matter how the pool schedules them.
pub fn run_sweep(
    template: &LatticeTemplate,
    params: &QuenchParams,
    plan: &SweepPlan,
    parallelism: usize,
) -> Result<PhaseDiagramGrid> {
    plan.validate()?;
    let parallelism = parallelism.max(1);
    let mut jobs = Vec::new();
    for &delta in &plan.delta_over_omega.values() {
        for &rb in &plan.rb_over_a.values() {
            for seed in plan.seeds() {
                jobs.push(Job { delta, rb, seed });
            }
        }
    }
    let budget = plan.memory_budget_mb.saturating_mul(1 << 20);
    let needed = job_footprint(template, plan)?.saturating_mul(parallelism.min(jobs.len()) as u64);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    // fail on bad observable names before launching anything
    Observable::parse_many(&quantum_names(plan), &template.build(params.spacing_for(plan.rb_over_a.min))?)
        .map(|_| ())
        .or_else(|e| if matches!(plan.engine, Engine::Classical) { Ok(()) } else { Err(e) })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let engine = plan.engine.label();
    let rows = pool.install(|| {
        jobs.par_iter()
            .with_max_len(1)
            .map(|job| {
                let (values, error) = match run_job(template, params, plan, job) {
                    Ok(v) => (v, None),
                    Err(e) => {
                        log::warn!("job Δ/Ω={} R_b/a={} seed={} failed: {e}", job.delta, job.rb, job.seed);
                        (vec![f64::NAN; plan.observables.len()], Some(e.to_string()))
                    }
                };
                SweepRow {
                    delta_over_omega: job.delta,
                    rb_over_a: job.rb,
                    seed: job.seed,
                    engine: engine.clone(),
                    n_sites: template.n_sites(),
                    values,
                    error,
                }
            })
            .collect()
    });
    Ok(PhaseDiagramGrid { observables: plan.observables.clone(), t_final: plan.t_final, rows })
}

fn quantum_names(plan: &SweepPlan) -> Vec<String> {
    plan.observables
        .iter()
        .filter(|o| o.as_str() != HAMMING_MEAN && o.as_str() != HAMMING_VAR)
        .cloned()
        .collect()
}

/// Build the (possibly disordered) lattice of one job.
pub fn job_lattice(template: &LatticeTemplate, params: &QuenchParams, plan: &SweepPlan, rb: f64, seed: u64) -> Result<LatticeSpec> {
    let lat = template.build(params.spacing_for(rb))?;
    if plan.disorder.sigma > 0.0 {
        apply_disorder(&lat, plan.disorder.sigma, seed)
    } else {
        Ok(lat)
    }
}

fn run_job(template: &LatticeTemplate, params: &QuenchParams, plan: &SweepPlan, job: &Job) -> Result<Vec<f64>> {
    let lat = job_lattice(template, params, plan, job.rb, job.seed)?;
    let p = params.with_delta(job.delta * params.omega);
    match &plan.engine {
        Engine::QuantumFull => quantum_job(lat, p, plan, &BasisKind::Full),
        Engine::QuantumSubspace(kind) => quantum_job(lat, p, plan, kind),
        Engine::Classical => classical_job(&lat, &p, plan),
        Engine::Pt => {
            let model = RydbergModel::with_range(lat.clone(), p, plan.coupling)?;
            let cfg = PtConfig::new(plan.pt_delta_reg_over_omega * p.omega);
            plan.observables
                .iter()
                .map(|name| pt_second_order(&model, &Observable::parse(name, &lat)?, &cfg))
                .collect()
        }
    }
}

fn quantum_job(lat: LatticeSpec, p: QuenchParams, plan: &SweepPlan, kind: &BasisKind) -> Result<Vec<f64>> {
    let names = quantum_names(plan);
    let obs = Observable::parse_many(&names, &lat)?;
    let model = RydbergModel::with_range(lat, p, plan.coupling)?;
    let basis = basis_for_model(&model, kind)?;
    let wants_hamming = names.len() != plan.observables.len();
    let mut rec = Recorder::new(&basis).observe(&obs)?;
    if wants_hamming {
        rec = rec.hamming();
    }
    let traj = quench_from_vacuum(&model, &basis, plan.t_final, plan.dt, &plan.evolve, rec)?;
    let (t0, t1) = plan.window();
    let hist = if wants_hamming {
        (0..=model.n_sites())
            .map(|a| traj.average(&format!("hamming_p{a}"), t0, t1))
            .collect::<Result<Vec<f64>>>()?
    } else {
        Vec::new()
    };
    let mean: f64 = hist.iter().enumerate().map(|(a, p)| a as f64 * p).sum();
    let var: f64 = hist.iter().enumerate().map(|(a, p)| (a as f64 - mean).powi(2) * p).sum();
    plan.observables
        .iter()
        .map(|name| match name.as_str() {
            HAMMING_MEAN => Ok(mean),
            HAMMING_VAR => Ok(var),
            _ => traj.average(name, t0, t1),
        })
        .collect()
}

/// Classical parameters for a lattice: z = 4 shells on the square lattice,
/// z = 2 shells along a 1D loop.
pub fn classical_params_for(lat: &LatticeSpec, p: &QuenchParams, shells: usize) -> ClassicalParams {
    let v1 = p.v1(lat.spacing);
    if lat.is_1d() {
        ClassicalParams::ring(p.omega, p.delta, v1, shells)
    } else {
        ClassicalParams::square2d(p.omega, p.delta, v1, shells)
    }
}

fn classical_job(lat: &LatticeSpec, p: &QuenchParams, plan: &SweepPlan) -> Result<Vec<f64>> {
    let cp = classical_params_for(lat, p, plan.classical_shells);
    let (o, _) = long_time_observables(&cp, plan.t_final, plan.classical_dt)?;
    plan.observables.iter().map(|name| classical_value(&o, name)).collect()
}

pub fn classical_value(o: &ClassicalObservables, name: &str) -> Result<f64> {
    Ok(match name {
        "Sx" => o.sx,
        "Sy" => o.sy,
        "Sz" => o.sz,
        "Sx2" => o.sx2,
        "Sy2" => o.sy2,
        "Sz2" => o.sz2,
        "island1_classical" => o.island1,
        _ => return Err(Error::InvalidArgument(format!("unknown classical observable {name:?}"))),
    })
}

/// Mean and standard error per observable at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregatedRow {
    pub delta_over_omega: f64,
    pub rb_over_a: f64,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregatedGrid {
    pub observables: Vec<String>,
    pub rows: Vec<AggregatedRow>,
}

/// Group successful rows by `(Δ/Ω, R_b/a)`; each group keeps the order of the
/// input rows and is summed pairwise.
pub fn aggregate(grid: &PhaseDiagramGrid) -> AggregatedGrid {
    let key = |r: &SweepRow| ((r.delta_over_omega * 1e9).round() as i64, (r.rb_over_a * 1e9).round() as i64);
    let mut order: Vec<(i64, i64)> = Vec::new();
    let mut groups: BTreeMap<(i64, i64), Vec<&SweepRow>> = BTreeMap::new();
    for r in grid.rows.iter().filter(|r| r.error.is_none()) {
        let k = key(r);
        let g = groups.entry(k).or_default();
        if g.is_empty() {
            order.push(k);
        }
        g.push(r);
    }
    let rows = order
        .into_iter()
        .map(|k| {
            let g = &groups[&k];
            let n = g.len();
            let (means, stderrs) = (0..grid.observables.len())
                .map(|c| {
                    let vals: Vec<f64> = g.iter().map(|r| r.values[c]).collect();
                    let e = Estimate::from_values(&vals);
                    (e.mean, e.stderr)
                })
                .unzip();
            AggregatedRow { delta_over_omega: g[0].delta_over_omega, rb_over_a: g[0].rb_over_a, means, stderrs, n }
        })
        .collect();
    AggregatedGrid { observables: grid.observables.clone(), rows }
}

impl AggregatedGrid {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|o| o == name)
    }

    /// `(Δ/Ω, mean)` pairs of one observable along the `R_b/a = rb` cut.
    pub fn cut(&self, name: &str, rb: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let c = self.column(name)?;
        let rows: Vec<&AggregatedRow> = self.rows.iter().filter(|r| (r.rb_over_a - rb).abs() < 1e-9).collect();
        Some((rows.iter().map(|r| r.delta_over_omega).collect(), rows.iter().map(|r| r.means[c]).collect()))
    }

    /// CSV `delta_over_omega,rb_over_a,<o>_mean,<o>_stderr,…,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta_over_omega,rb_over_a");
        for o in &self.observables {
            out.push_str(&format!(",{o}_mean,{o}_stderr"));
        }
        out.push_str(",n\n");
        for r in &self.rows {
            out.push_str(&format!("{:.6},{:.6}", r.delta_over_omega, r.rb_over_a));
            for (m, s) in r.means.iter().zip(&r.stderrs) {
                out.push_str(&format!(",{m},{s}"));
            }
            out.push_str(&format!(",{}\n", r.n));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub location: f64,
    pub height: f64,
    /// Full width at half height.
    pub width: f64,
    pub prominence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakOptions {
    /// Peaks lower than this are ignored.
    pub min_height: f64,
    /// Peaks standing out less than this from their surroundings are ignored.
    pub min_prominence: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions { min_height: 1e-12, min_prominence: 1e-12 }
    }
}

/// Local maxima of a uniformly sampled cut, refined by a parabola through
/// the three samples around each maximum.
pub fn peak_finder(xs: &[f64], ys: &[f64], opts: PeakOptions) -> Vec<Peak> {
    let n = xs.len().min(ys.len());
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    let h = xs[1] - xs[0];
    let mut i = 1;
    while i < n - 1 {
        if !(ys[i] > ys[i - 1]) {
            i += 1;
            continue;
        }
        // walk across a flat top
        let mut j = i;
        while j + 1 < n && ys[j + 1] == ys[i] {
            j += 1;
        }
        if j + 1 < n && ys[j + 1] < ys[i] {
            let c = (i + j) / 2;
            let (mut loc, mut height) = (xs[c], ys[c]);
            if i == j {
                let (a, b, cc) = (ys[i - 1], ys[i], ys[i + 1]);
                let denom = a - 2.0 * b + cc;
                if denom < 0.0 {
                    let off = 0.5 * (a - cc) / denom;
                    loc = xs[i] + off * h;
                    height = b - 0.25 * (a - cc) * off;
                }
            }
            let prominence = prominence(ys, c);
            if height >= opts.min_height && prominence >= opts.min_prominence {
                peaks.push(Peak { location: loc, height, width: half_width(xs, ys, c, height), prominence });
            }
        }
        i = j + 1;
    }
    peaks
}

fn prominence(ys: &[f64], c: usize) -> f64 {
    let peak = ys[c];
    let side = |range: &mut dyn Iterator<Item = usize>| {
        let mut lowest = peak;
        for k in range {
            if ys[k] > peak {
                break;
            }
            lowest = lowest.min(ys[k]);
        }
        lowest
    };
    let left = side(&mut (0..c).rev());
    let right = side(&mut (c + 1..ys.len()));
    peak - left.max(right)
}

fn half_width(xs: &[f64], ys: &[f64], c: usize, height: f64) -> f64 {
    let half = 0.5 * height;
    let mut lo = xs[0];
    for k in (0..c).rev() {
        if ys[k] < half {
            lo = xs[k] + (half - ys[k]) / (ys[k + 1] - ys[k]) * (xs[k + 1] - xs[k]);
            break;
        }
    }
    let mut hi = xs[xs.len() - 1];
    for k in c + 1..ys.len() {
        if ys[k] < half {
            hi = xs[k - 1] + (ys[k - 1] - half) / (ys[k - 1] - ys[k]) * (xs[k] - xs[k - 1]);
            break;
        }
    }
    hi - lo
}

/// Tallest peak whose location lies in `[lo, hi]`.
pub fn dominant_peak(peaks: &[Peak], lo: f64, hi: f64) -> Option<Peak> {
    peaks
        .iter()
        .filter(|p| p.location >= lo && p.location <= hi)
        .copied()
        .max_by(|a, b| a.height.total_cmp(&b.height))
}

/// Trapezoidal integral of the samples with `lo <= x <= hi`.
pub fn integrate_window(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).filter(|(x, _)| *x >= lo - 1e-9 && *x <= hi + 1e-9).collect();
    pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
}
