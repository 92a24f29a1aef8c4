//! Command implementations behind the `rydquench` binary.
//!
//! Every command reads a [`RunConfig`] (from a file or an embedded preset),
//! writes CSV datasets plus a `<prefix>_manifest.json` into the output
//! directory and reports failures through [`CliError`], whose
//! [`exit_code`](CliError::exit_code) is what the binary returns.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rydquench::config::RunConfig;
use rydquench::ensembles::{eigenstate_expectations, thermal_expectation, thermal_from_eigensystem};
use rydquench::evolve::{quench_from_vacuum, Eigensystem, Recorder};
use rydquench::hilbert::{basis_for_model, BasisKind};
use rydquench::observables::{Observable, ShotSamples};
use rydquench::resonance::{build_effective_2island_h, validate_effective_h};
use rydquench::sweep::{aggregate, classical_params_for, run_sweep, Engine, LatticeTemplate, SweepPlan};
use rydquench::classical::{approx_critical_detuning, astroid_boundary};
use rydquench::{CouplingRange, Error, LatticeSpec, QuenchParams, RydbergModel};

pub mod presets;

#[derive(Debug, Parser)]
#[command(name = "rydquench", version, about = "Quench dynamics of Rydberg atom arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trajectories of the observables at each requested Δ/Ω.
    Evolve(CommonArgs),
    /// Time-averaged phase diagram over a (Δ/Ω, R_b/a) grid.
    Sweep(CommonArgs),
    /// Canonical-ensemble values at the quench energy.
    Thermal(CommonArgs),
    /// Observable estimates from a file of measured bitstrings.
    Islands(IslandArgs),
    /// Mean-field sweep and astroid boundaries.
    Classical(CommonArgs),
    /// Second-order perturbative response over the grid.
    Pt(CommonArgs),
    /// Effective 2-island Hamiltonian against the full model.
    EffectiveH(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Use a shipped configuration instead of a file.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, value_name = "K", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct IslandArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Shot file; overrides `plan.samples`.
    #[arg(long, value_name = "PATH")]
    pub samples: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::BudgetExceeded { .. }
            | Error::UnsupportedBasis(_)
            | Error::InvalidGeometry(_)
            | Error::DimensionTooLarge { .. } => CliError::Config(e.to_string()),
            Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Evolve(a) => Ctx::new(&a, "evolve")?.evolve(),
        Command::Sweep(a) => Ctx::new(&a, "sweep")?.sweep(),
        Command::Thermal(a) => Ctx::new(&a, "thermal")?.thermal(),
        Command::Islands(a) => {
            let samples = a.samples.clone();
            Ctx::new(&a.common, "islands")?.islands(samples)
        }
        Command::Classical(a) => Ctx::new(&a, "classical")?.classical(),
        Command::Pt(a) => Ctx::new(&a, "pt")?.pt(),
        Command::EffectiveH(a) => Ctx::new(&a, "effective-h")?.effective_h(),
    }
}

/// Load a config from a path or a preset name.
pub fn load_config(path: Option<&Path>, preset: Option<&str>) -> CliResult<RunConfig> {
    let text = match (path, preset) {
        (Some(p), _) => fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        (None, Some(name)) => presets::get(name)
            .ok_or_else(|| CliError::Config(format!("unknown preset {name:?}; available: {}", presets::names().join(", "))))?
            .to_string(),
        (None, None) => return Err(CliError::Config("either --config or --preset is required".into())),
    };
    Ok(RunConfig::from_json(&text)?)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    seeds: Vec<u64>,
    files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

struct Ctx {
    cfg: RunConfig,
    command: &'static str,
    out: PathBuf,
    threads: usize,
    files: Vec<String>,
    notes: Vec<String>,
}

impl Ctx {
    fn new(args: &CommonArgs, command: &'static str) -> CliResult<Self> {
        let cfg = load_config(args.config.as_deref(), args.preset.as_deref())?;
        let out = args
            .out
            .clone()
            .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        if args.threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        Ok(Ctx { cfg, command, out, threads: args.threads, files: Vec::new(), notes: Vec::new() })
    }

    fn template(&self) -> CliResult<LatticeTemplate> {
        Ok(self.cfg.lattice.template()?)
    }

    fn params(&self) -> QuenchParams {
        self.cfg.params.quench()
    }

    fn lattice_at(&self, rb: f64) -> CliResult<LatticeSpec> {
        Ok(self.template()?.build(self.params().spacing_for(rb))?)
    }

    fn write(&mut self, suffix: &str, contents: &str) -> CliResult<()> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::Io(format!("{}: {e}", self.out.display())))?;
        let name = format!("{}_{suffix}", self.cfg.output.prefix);
        let path = self.out.join(&name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        self.files.push(name);
        Ok(())
    }

    fn finish(mut self, seeds: Vec<u64>) -> CliResult<()> {
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            config: &self.cfg,
            seeds,
            files: self.files.clone(),
            notes: self.notes.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Compute(e.to_string()))? + "\n";
        self.write("manifest.json", &text)
    }

    fn points(&self) -> Vec<f64> {
        self.cfg.plan.points.clone().unwrap_or_else(|| vec![self.cfg.params.delta_over_omega])
    }

    fn evolve(mut self) -> CliResult<()> {
        let lat = self.lattice_at(self.cfg.params.rb_over_a)?;
        let obs = Observable::parse_many(&self.cfg.observables(), &lat)?;
        let kind = self.cfg.plan.basis.clone().unwrap_or(BasisKind::Full);
        for d in self.points() {
            let p = self.params().with_delta(d * self.cfg.params.omega);
            let model = RydbergModel::with_range(lat.clone(), p, self.cfg.params.coupling)?;
            let basis = basis_for_model(&model, &kind)?;
            let rec = Recorder::new(&basis).observe(&obs)?;
            let traj = quench_from_vacuum(&model, &basis, self.cfg.t_final(), self.cfg.dt(), &self.cfg.plan.evolve, rec)?;
            self.write(&format!("evolve_d{}.csv", label(d)), &traj.to_csv())?;
        }
        self.finish(Vec::new())
    }

    fn run_plan(&mut self, plan: &SweepPlan, tag: &str) -> CliResult<Vec<u64>> {
        let grid = run_sweep(&self.template()?, &self.params(), plan, self.threads)?;
        self.write(&format!("{tag}_raw.csv"), &grid.to_csv())?;
        self.write(&format!("{tag}_agg.csv"), &aggregate(&grid).to_csv())?;
        let failed: Vec<String> = grid
            .failures()
            .map(|r| format!("Δ/Ω={} R_b/a={} seed={}: {}", r.delta_over_omega, r.rb_over_a, r.seed, r.error.as_deref().unwrap_or("")))
            .collect();
        if !failed.is_empty() {
            self.notes.extend(failed.iter().cloned());
        }
        Ok(plan.seeds())
    }

    fn finish_sweep(self, seeds: Vec<u64>) -> CliResult<()> {
        let failed = self.notes.len();
        self.finish(seeds)?;
        if failed > 0 {
            return Err(CliError::Compute(format!("{failed} sweep job(s) failed; see the manifest")));
        }
        Ok(())
    }

    fn sweep(mut self) -> CliResult<()> {
        let plan = self.cfg.sweep_plan()?;
        let seeds = self.run_plan(&plan, "sweep")?;
        self.finish_sweep(seeds)
    }

    fn classical(mut self) -> CliResult<()> {
        let mut plan = self.cfg.sweep_plan()?;
        plan.engine = Engine::Classical;
        if self.cfg.plan.observables.is_none() {
            plan.observables = ["Sz2", "Sx2", "Sy2", "island1_classical"].iter().map(|s| s.to_string()).collect();
        }
        let seeds = self.run_plan(&plan, "classical")?;
        let mut csv = String::from("rb_over_a,K_over_omega,lower_over_omega,upper_over_omega,approx_lower_over_omega\n");
        for rb in plan.rb_over_a.values() {
            let lat = self.lattice_at(rb)?;
            let cp = classical_params_for(&lat, &self.params(), plan.classical_shells);
            let w = cp.omega;
            let (lo, hi) = astroid_boundary(&cp).map_or((f64::NAN, f64::NAN), |(a, b)| (a / w, b / w));
            csv.push_str(&format!("{rb:.6},{},{lo},{hi},{}\n", cp.k_total() / w, approx_critical_detuning(&cp) / w));
        }
        self.write("astroid.csv", &csv)?;
        self.finish_sweep(seeds)
    }

    fn pt(mut self) -> CliResult<()> {
        let mut plan = self.cfg.sweep_plan()?;
        plan.engine = Engine::Pt;
        let seeds = self.run_plan(&plan, "pt")?;
        self.finish_sweep(seeds)
    }

    fn thermal(mut self) -> CliResult<()> {
        let plan = self.cfg.sweep_plan()?;
        let kinds = self.cfg.plan.subspaces.clone().unwrap_or_else(|| vec![BasisKind::BlockadeNn, BasisKind::Full]);
        let names = self.cfg.observables();
        let mut csv = String::from("delta_over_omega,rb_over_a,subspace,ensemble,beta_eff,edge");
        for n in &names {
            csv.push(',');
            csv.push_str(n);
        }
        csv.push('\n');
        for rb in plan.rb_over_a.values() {
            let lat = self.lattice_at(rb)?;
            let obs = Observable::parse_many(&names, &lat)?;
            for kind in &kinds {
                let model0 = RydbergModel::with_range(lat.clone(), self.params().with_delta(0.0), self.cfg.params.coupling)?;
                let basis = basis_for_model(&model0, kind)?;
                for d in plan.delta_over_omega.values() {
                    let model = model0.with_delta(d * self.cfg.params.omega);
                    let eig = Eigensystem::new(&model.hamiltonian(&basis)?)?;
                    let e0 = model.classical_energy(0);
                    let head = format!("{d:.6},{rb:.6},{}", kind.label());
                    match thermal_from_eigensystem(&eig, &basis, e0, &obs) {
                        Ok(r) => {
                            let edge = if r.beta_eff.is_infinite() { 1 } else { 0 };
                            csv.push_str(&format!("{head},canonical,{},{edge}", r.beta_eff));
                            for (_, v) in &r.values {
                                csv.push_str(&format!(",{v}"));
                            }
                        }
                        Err(Error::UndefinedBeta(msg)) => {
                            log::warn!("Δ/Ω={d} {}: {msg}", kind.label());
                            csv.push_str(&format!("{head},canonical,NaN,1"));
                            for _ in &names {
                                csv.push_str(",NaN");
                            }
                        }
                        Err(e) => return Err(e.into()),
                    }
                    csv.push('\n');
                    if self.cfg.plan.infinite_temperature_row {
                        csv.push_str(&format!("{head},infinite_temperature,0,0"));
                        for o in &obs {
                            let ev = eigenstate_expectations(&eig, &basis, o)?;
                            csv.push_str(&format!(",{}", thermal_expectation(&eig.energies, &ev, 0.0)));
                        }
                        csv.push('\n');
                    }
                }
            }
        }
        self.write("thermal.csv", &csv)?;
        self.finish(Vec::new())
    }

    fn islands(mut self, samples: Option<PathBuf>) -> CliResult<()> {
        let path = samples
            .or_else(|| self.cfg.plan.samples.as_ref().map(PathBuf::from))
            .ok_or_else(|| CliError::Config("no shot file: pass --samples or set plan.samples".into()))?;
        let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let lat = self.lattice_at(self.cfg.params.rb_over_a)?;
        let shots = ShotSamples::parse(&text, lat.n_sites())?;
        let mut csv = String::from("observable,mean,stderr,n\n");
        for o in Observable::parse_many(&self.cfg.observables(), &lat)? {
            let e = shots.estimate(&o)?;
            csv.push_str(&format!("{},{},{},{}\n", o.name(), e.mean, e.stderr, e.n));
        }
        self.notes.push(format!("{} shot(s) with lost atoms discarded", shots.discarded));
        self.write("islands.csv", &csv)?;
        self.finish(Vec::new())
    }

    fn effective_h(mut self) -> CliResult<()> {
        let lat = self.lattice_at(self.cfg.params.rb_over_a)?;
        let p0 = self.params();
        let v1 = p0.v1(lat.spacing);
        // the resonance condition 2Δ = V1 fixes the detuning
        let p = p0.with_delta(0.5 * v1);
        let t_final = self
            .cfg
            .plan
            .t_final
            .unwrap_or(2.0 * std::f64::consts::PI * 2.0 * p.delta / (p.omega * p.omega));
        let dt = self.cfg.plan.dt.unwrap_or(t_final / 400.0);
        let range = match self.cfg.params.coupling {
            CouplingRange::All => CouplingRange::NearestNeighbor,
            other => other,
        };
        let eff = build_effective_2island_h(&lat, &p)?;
        let report = validate_effective_h(&lat, &p, range, t_final, dt)?;
        let mut csv = String::from("t_us,O_L2_full,O_L2_effective\n");
        for ((t, a), b) in report.times.iter().zip(&report.full).zip(&report.effective) {
            csv.push_str(&format!("{t:.6},{a},{b}\n"));
        }
        self.write("effective_h.csv", &csv)?;
        self.write("effective_h_basis.hex", &eff.basis.to_hex_dump())?;
        self.notes.push(format!(
            "V1/Omega={} amplitude_full={} amplitude_effective={} relative_amplitude_dev={} max_abs_dev={}",
            v1 / p.omega,
            report.amplitude_full,
            report.amplitude_effective,
            report.relative_amplitude_dev,
            report.max_abs_dev
        ));
        self.finish(Vec::new())
    }
}

/// File-name label of a Δ/Ω value: `-0.5` → `m0.500`.
fn label(d: f64) -> String {
    let s = format!("{:.3}", d.abs());
    if d < 0.0 {
        format!("m{s}")
    } else {
        s
    }
}
