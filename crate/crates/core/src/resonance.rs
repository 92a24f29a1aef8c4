//! Resonance analysis: second-order Dyson response, the minimal
//! perturbative order of a resonance and the effective Hamiltonian of the
//! 2-island resonance on a ring.

use serde::{Deserialize, Serialize};

use crate::evolve::{propagate_dense, quench_from_vacuum, EvolveOptions, Recorder};
use crate::hamiltonian::{CouplingRange, QuenchParams, RydbergModel, SparseOperator};
use crate::hilbert::{enumerate_basis, resonance_manifold, BasisIndex, BasisKind};
use crate::lattice::{GeometryKind, LatticeSpec};
use crate::observables::{ConfigOperator, Observable};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtConfig {
    /// Regularization δ, rad/μs.
    pub delta_reg: f64,
    /// 1 keeps only `d^(1)`; 2 adds `d^(2)`.
    pub order: u8,
}

impl PtConfig {
    pub fn new(delta_reg: f64) -> Self {
        PtConfig { delta_reg, order: 2 }
    }
}

/// Long-time response `2 Re[d^(1) + d^(2)]` of the shifted observable
/// `O − ⟨0|O|0⟩` after a quench from `|0…0⟩`.
///
/// Intermediate states are enumerated up to Hamming weight 2, which is
/// all the second-order ladder can reach.
pub fn pt_second_order(model: &RydbergModel, obs: &dyn ConfigOperator, cfg: &PtConfig) -> Result<f64> {
    if !(cfg.order == 1 || cfg.order == 2) {
        return Err(Error::InvalidArgument(format!("order must be 1 or 2, got {}", cfg.order)));
    }
    if cfg.delta_reg <= 0.0 {
        return Err(Error::InvalidArgument("delta_reg must be positive".into()));
    }
    let n = model.n_sites();
    let half = 0.5 * model.params.omega;
    let e0 = model.classical_energy(0);
    let denom = |m: u64| C64::new(model.classical_energy(m) - e0, -cfg.delta_reg);

    let mut buf = Vec::new();
    let mut shifted = |m: u64, target: u64| -> f64 {
        obs.act_on(m, &mut buf);
        buf.iter().filter(|e| e.0 == target).map(|e| e.1).sum()
    };
    let o00 = shifted(0, 0);
    let mut elem = |target: u64, m: u64| -> f64 {
        let v = shifted(m, target);
        if target == m {
            v - o00
        } else {
            v
        }
    };

    let singles: Vec<u64> = (0..n).map(|j| 1u64 << j).collect();
    let mut d1 = C64::new(0.0, 0.0);
    for &m in &singles {
        d1 += elem(0, m) / denom(m);
    }
    d1 *= -half;

    let mut d2 = C64::new(0.0, 0.0);
    if cfg.order == 2 {
        for &m in &singles {
            for &mp in &singles {
                let o = elem(mp, m);
                if o != 0.0 {
                    d2 += o / (denom(m) * denom(mp));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let m = (1u64 << i) | (1u64 << j);
                let o = elem(0, m);
                if o == 0.0 {
                    continue;
                }
                // two single-excitation parents reach m with one flip each
                for mp in [1u64 << i, 1u64 << j] {
                    d2 += o / (denom(m) * denom(mp));
                }
            }
        }
        d2 *= 0.5 * half * half;
    }
    Ok(2.0 * (d1 + d2).re)
}

/// `(Ω/2)² Re[1/((2Δ − V1 − iδ)(Δ − iδ)) + 1/(Δ − iδ)²]`.
pub fn pt_xx_closed_form(params: &QuenchParams, v1: f64, delta_reg: f64) -> f64 {
    let d = C64::new(params.delta, -delta_reg);
    let pair = C64::new(2.0 * params.delta - v1, -delta_reg);
    let h = 0.5 * params.omega;
    h * h * (1.0 / (pair * d) + 1.0 / (d * d)).re
}

/// CSV `delta_over_omega,response` for a list of `(Δ/Ω, response)` points.
pub fn pt_scan_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("delta_over_omega,response\n");
    for (x, y) in points {
        out.push_str(&format!("{x:.6},{y}\n"));
    }
    out
}

/// Lowest perturbative order at which `obs` picks up a resonance with the
/// configurations in `manifold`:
/// `min_m [hdist(0, m) + hdist(0, O·m)]` over `m ≠ 0` and every
/// configuration `O·m` reached with a nonzero matrix element.
pub fn minimal_order(obs: &dyn ConfigOperator, manifold: &BasisIndex) -> Result<usize> {
    let mut buf = Vec::new();
    let mut best: Option<usize> = None;
    let mut any = false;
    for &m in manifold.states() {
        if m == 0 {
            continue;
        }
        any = true;
        obs.act_on(m, &mut buf);
        for &(y, c) in &buf {
            if c != 0.0 {
                let p = (m.count_ones() + y.count_ones()) as usize;
                best = Some(best.map_or(p, |b| b.min(p)));
            }
        }
    }
    if !any {
        return Err(Error::EmptyManifold);
    }
    best.ok_or_else(|| Error::InvalidArgument("operator has no matrix elements on the manifold".into()))
}

/// Effective Hamiltonian on the 2-island resonant subspace.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub basis: BasisIndex,
    pub h: SparseOperator,
    /// Second-order diagonal shift of each basis state, already included in
    /// the diagonal of `h`.
    pub level_shifts: Vec<f64>,
}

/// Window patterns on sites `(p−1, p, p+1, p+2)` as `[before, after]`,
/// bit `i` of a pattern being window site `i`.
const CREATE: [u8; 2] = [0b0000, 0b0110];
const SHUFFLE: [u8; 2] = [0b1011, 0b1101];
const HOP: [u8; 2] = [0b0010, 0b0100];

/// Second-order effective Hamiltonian of the `2Δ ≈ V1` resonance on a ring.
///
/// The basis holds every configuration that is degenerate with `|0…0⟩` under
/// nearest-neighbor interactions at `2Δ = V1`: 2-islands and balanced mixtures
/// such as one 3-island with one 1-island. Virtual single flips generate
/// - pair creation `…0000… ↔ …0110…` with amplitude `Ω²/(2Δ)`,
/// - conversion of neighboring 2-islands into a 3+1 pair,
///   `…1011… ↔ …1101…`, with amplitude `Ω²/(6Δ)`,
/// - hopping of an isolated excitation `…0100… ↔ …0010…` with `−Ω²/(2Δ)`,
///
/// and the diagonal is `V1 Σ n_j n_{j+1} − Δ Σ n_j` plus the level shift
/// `Σ_j (Ω/2)² / (E(x) − E(x ⊕ e_j))` from flips leaving the manifold.
pub fn build_effective_2island_h(lat: &LatticeSpec, params: &QuenchParams) -> Result<EffectiveHamiltonian> {
    if lat.kind != GeometryKind::Ring1d {
        return Err(Error::UnsupportedBasis("the effective 2-island Hamiltonian is built on rings".into()));
    }
    let n = lat.n_sites();
    if n < 5 {
        return Err(Error::InvalidGeometry(format!("ring needs at least 5 sites, got {n}")));
    }
    if params.delta <= 0.0 || params.omega <= 0.0 {
        return Err(Error::InvalidArgument("effective Hamiltonian needs Ω > 0 and Δ > 0".into()));
    }
    let v1 = params.v1(lat.spacing);
    if params.delta < 5.0 * params.omega || v1 < 5.0 * params.omega {
        log::warn!("effective Hamiltonian outside Δ, V1 >> Ω (Δ/Ω={}, V1/Ω={})", params.delta / params.omega, v1 / params.omega);
    }
    let nn_model = RydbergModel::with_range(lat.clone(), params.with_delta(v1 / 2.0), CouplingRange::NearestNeighbor)?;
    let basis = resonance_manifold(&nn_model, 0.0, Some(1e-9 * v1))?;
    let diag_model = RydbergModel::with_range(lat.clone(), *params, CouplingRange::NearestNeighbor)?;

    let order = lat.order();
    let omega2 = params.omega * params.omega;
    let terms = [
        (CREATE, omega2 / (2.0 * params.delta)),
        (SHUFFLE, omega2 / (6.0 * params.delta)),
        (HOP, -omega2 / (2.0 * params.delta)),
    ];
    let quarter = 0.25 * omega2;
    let mut triplets = Vec::new();
    let mut level_shifts = Vec::with_capacity(basis.dim());
    for (i, &x) in basis.states().iter().enumerate() {
        let ex = diag_model.classical_energy(x);
        let shift: f64 = (0..n)
            .map(|j| x ^ (1 << j))
            .filter(|y| !basis.contains(*y))
            .map(|y| quarter / (ex - diag_model.classical_energy(y)))
            .sum();
        level_shifts.push(shift);
        triplets.push((i, i, ex + shift));
        for p in 0..n {
            let sites = [order[(p + n - 1) % n], order[p], order[(p + 1) % n], order[(p + 2) % n]];
            let window = sites.iter().enumerate().fold(0u8, |w, (b, &s)| w | (((x >> s) & 1) as u8) << b);
            for &(pair, amp) in &terms {
                for (from, to) in [(pair[0], pair[1]), (pair[1], pair[0])] {
                    if window != from {
                        continue;
                    }
                    let mut y = x;
                    for (b, &s) in sites.iter().enumerate() {
                        if (from ^ to) >> b & 1 == 1 {
                            y ^= 1 << s;
                        }
                    }
                    if let Some(k) = basis.index_of(y) {
                        triplets.push((i, k, amp));
                    }
                }
            }
        }
    }
    let h = SparseOperator::from_triplets(basis.dim(), &triplets, true);
    Ok(EffectiveHamiltonian { basis, h, level_shifts })
}

/// Comparison of `O_L2(t)` between full-space dynamics and the effective
/// Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveHReport {
    pub times: Vec<f64>,
    pub full: Vec<f64>,
    pub effective: Vec<f64>,
    pub max_abs_dev: f64,
    pub mean_abs_dev: f64,
    /// `max − min` of each series over the window.
    pub amplitude_full: f64,
    pub amplitude_effective: f64,
    pub relative_amplitude_dev: f64,
}

/// Evolve `|0…0⟩` with the full Hamiltonian and with the effective one and
/// compare `O_L2` on `0, dt, …, t_final`. `range` selects the interactions of
/// the full model; the effective Hamiltonian is built for nearest neighbors.
pub fn validate_effective_h(
    lat: &LatticeSpec,
    params: &QuenchParams,
    range: CouplingRange,
    t_final: f64,
    dt: f64,
) -> Result<EffectiveHReport> {
    let eff = build_effective_2island_h(lat, params)?;
    let obs = Observable::parse("O_L2", lat)?;
    let steps = (t_final / dt).round().max(1.0);
    let dt = t_final / steps;

    let model = RydbergModel::with_range(lat.clone(), *params, range)?;
    let full_basis = enumerate_basis(lat, &BasisKind::Full)?;
    let full_traj = quench_from_vacuum(
        &model,
        &full_basis,
        t_final,
        dt,
        &EvolveOptions::default(),
        Recorder::new(&full_basis).observe(std::slice::from_ref(&obs))?,
    )?;
    let times = full_traj.times.clone();
    let psi0 = eff.basis.basis_vector(0)?;
    let eff_traj = propagate_dense(&eff.h, &psi0, &times, Recorder::new(&eff.basis).observe(std::slice::from_ref(&obs))?)?;

    let full = full_traj.series("O_L2").unwrap_or_default().to_vec();
    let effective = eff_traj.series("O_L2").unwrap_or_default().to_vec();
    let devs: Vec<f64> = full.iter().zip(&effective).map(|(a, b)| (a - b).abs()).collect();
    let amp = |s: &[f64]| {
        let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        hi - lo
    };
    let amplitude_full = amp(&full);
    let amplitude_effective = amp(&effective);
    let relative_amplitude_dev = if amplitude_full > 0.0 {
        (amplitude_effective - amplitude_full).abs() / amplitude_full
    } else {
        0.0
    };
    Ok(EffectiveHReport {
        times,
        max_abs_dev: devs.iter().copied().fold(0.0, f64::max),
        mean_abs_dev: devs.iter().sum::<f64>() / devs.len() as f64,
        full,
        effective,
        amplitude_full,
        amplitude_effective,
        relative_amplitude_dev,
    })
}
