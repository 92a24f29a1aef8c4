//! Thermal, prethermal (subspace-restricted) and diagonal ensembles.

use crate::evolve::Eigensystem;
use crate::hamiltonian::RydbergModel;
use crate::hilbert::BasisIndex;
use crate::observables::Observable;
use crate::{Error, Result, C64};

/// Eigenpairs of H on a basis together with their overlaps with the initial
/// configuration.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eig: Eigensystem,
    /// `c_i = ⟨ψ_i|ψ0⟩`.
    pub amplitudes: Vec<f64>,
    /// `|c_i|²`.
    pub overlaps: Vec<f64>,
    /// `⟨ψ_i|Q_n|ψ_i⟩`.
    pub mean_hamming: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn energies(&self) -> &[f64] {
        &self.eig.energies
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    /// Energies within `tol` of each other grouped into index ranges.
    pub fn degenerate_clusters(&self, tol: f64) -> Vec<std::ops::Range<usize>> {
        let e = self.energies();
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=e.len() {
            if i == e.len() || e[i] - e[i - 1] > tol {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    fn default_tol(&self) -> f64 {
        let scale = self.energies().iter().fold(1.0f64, |m, e| m.max(e.abs()));
        1e-9 * scale
    }
}

/// Eigendecomposition of H on `basis` with overlaps against `|0…0⟩`.
pub fn overlap_spectrum(model: &RydbergModel, basis: &BasisIndex) -> Result<SpectralDecomposition> {
    let h = model.hamiltonian(basis)?;
    let eig = Eigensystem::new(&h)?;
    let i0 = basis
        .index_of(0)
        .ok_or_else(|| Error::IncompatibleBasis("basis lacks the all-zero configuration".into()))?;
    spectral_from(eig, basis, i0)
}

fn spectral_from(eig: Eigensystem, basis: &BasisIndex, i0: usize) -> Result<SpectralDecomposition> {
    let dim = eig.dim();
    let u = &eig.vectors;
    let amplitudes: Vec<f64> = (0..dim).map(|i| u[(i0, i)]).collect();
    let overlaps = amplitudes.iter().map(|c| c * c).collect();
    let weights: Vec<f64> = basis.states().iter().map(|x| x.count_ones() as f64).collect();
    let mean_hamming = column_quadratic_forms(&eig, &weights);
    Ok(SpectralDecomposition { eig, amplitudes, overlaps, mean_hamming })
}

/// `Σ_x U[x,i]² d[x]` for every column.
fn column_quadratic_forms(eig: &Eigensystem, diag: &[f64]) -> Vec<f64> {
    let u = &eig.vectors;
    (0..eig.dim())
        .map(|i| (0..eig.dim()).map(|x| u[(x, i)] * u[(x, i)] * diag[x]).sum())
        .collect()
}

fn column(eig: &Eigensystem, i: usize) -> Vec<C64> {
    (0..eig.dim()).map(|x| C64::new(eig.vectors[(x, i)], 0.0)).collect()
}

/// `⟨ψ_i|O|ψ_i⟩` for every eigenstate.
pub fn eigenstate_expectations(eig: &Eigensystem, basis: &BasisIndex, obs: &Observable) -> Result<Vec<f64>> {
    if obs.is_diagonal() {
        Ok(column_quadratic_forms(eig, &obs.table(basis)?))
    } else {
        Ok((0..eig.dim()).map(|i| obs.expect(&column(eig, i), basis)).collect())
    }
}

/// Diagonal-ensemble value and the number of degenerate eigenvalue clusters
/// that had to be resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagonalEnsemble {
    pub value: f64,
    pub degenerate_clusters: usize,
}

/// Infinite-time average `Σ_i |c_i|² ⟨ψ_i|O|ψ_i⟩`.
///
/// Within a degenerate eigenvalue cluster the initial state is projected
/// onto the whole eigenspace, so the result does not depend on the basis the
/// eigensolver picked inside it.
pub fn diagonal_ensemble(spec: &SpectralDecomposition, basis: &BasisIndex, obs: &Observable) -> Result<DiagonalEnsemble> {
    let clusters = spec.degenerate_clusters(spec.default_tol());
    let per_state = if obs.is_diagonal() { Some(obs.table(basis)?) } else { None };
    let dim = spec.dim();
    let u = &spec.eig.vectors;
    let mut value = 0.0;
    let mut degenerate = 0;
    for r in clusters {
        if r.len() == 1 {
            let i = r.start;
            if spec.overlaps[i] == 0.0 {
                continue;
            }
            let oi = match &per_state {
                Some(t) => (0..dim).map(|x| u[(x, i)] * u[(x, i)] * t[x]).sum(),
                None => obs.expect(&column(&spec.eig, i), basis),
            };
            value += spec.overlaps[i] * oi;
            continue;
        }
        degenerate += 1;
        let mut v = vec![C64::new(0.0, 0.0); dim];
        for i in r {
            let c = spec.amplitudes[i];
            if c == 0.0 {
                continue;
            }
            for (x, vx) in v.iter_mut().enumerate() {
                vx.re += c * u[(x, i)];
            }
        }
        value += obs.expect(&v, basis);
    }
    Ok(DiagonalEnsemble { value, degenerate_clusters: degenerate })
}

/// Canonical mean energy at inverse temperature `beta`, evaluated with the
/// exponent shifted by the extremal eigenvalue.
pub fn thermal_mean(energies: &[f64], values: &[f64], beta: f64) -> f64 {
    let (emin, emax) = min_max(energies);
    if beta.is_infinite() {
        let target = if beta > 0.0 { emin } else { emax };
        let tol = 1e-9 * emin.abs().max(emax.abs()).max(1.0);
        let sel: Vec<f64> = energies
            .iter()
            .zip(values)
            .filter(|(e, _)| (**e - target).abs() <= tol)
            .map(|(_, v)| *v)
            .collect();
        return sel.iter().sum::<f64>() / sel.len() as f64;
    }
    let shift = if beta >= 0.0 { emin } else { emax };
    let mut z = 0.0;
    let mut acc = 0.0;
    for (e, v) in energies.iter().zip(values) {
        let w = (-beta * (e - shift)).exp();
        z += w;
        acc += w * v;
    }
    acc / z
}

/// `Tr(O e^{−βH}) / Tr(e^{−βH})` from eigenstate expectations.
pub fn thermal_expectation(energies: &[f64], eigen_values: &[f64], beta: f64) -> f64 {
    thermal_mean(energies, eigen_values, beta)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Solve `⟨H⟩_β = e0` for β. Targets at or beyond the spectral edges give
/// `±∞`; a flat spectrum has no defined β.
pub fn effective_beta(energies: &[f64], e0: f64) -> Result<f64> {
    if energies.is_empty() {
        return Err(Error::UndefinedBeta("empty spectrum".into()));
    }
    let (emin, emax) = min_max(energies);
    let norm = emin.abs().max(emax.abs()).max(f64::MIN_POSITIVE);
    let range = emax - emin;
    if range <= 1e-12 * norm.max(1.0) {
        return Err(Error::UndefinedBeta(format!("flat spectrum at {emin}")));
    }
    let edge = 1e-12 * norm.max(1.0);
    if e0 <= emin + edge {
        return Ok(f64::INFINITY);
    }
    if e0 >= emax - edge {
        return Ok(f64::NEG_INFINITY);
    }
    let f = |b: f64| thermal_mean(energies, energies, b) - e0;
    let tol = 1e-9 * norm;
    let f0 = f(0.0);
    if f0.abs() <= tol {
        return Ok(0.0);
    }
    // f decreases with β: find a bracket on the side where the root lies
    let dir = if f0 > 0.0 { 1.0 } else { -1.0 };
    let mut lo = 0.0;
    let mut hi = dir / range;
    let mut expansions = 0;
    while f(hi) * dir > 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::UndefinedBeta(format!("no bracket for e0={e0}")));
        }
    }
    let (mut a, mut b) = if dir > 0.0 { (lo, hi) } else { (hi, lo) };
    for _ in 0..300 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * mid.abs() {
            return Ok(mid);
        }
        if fm > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mid = 0.5 * (a + b);
    if f(mid).abs() > tol {
        return Err(Error::UndefinedBeta(format!("bisection stalled for e0={e0}")));
    }
    Ok(mid)
}

/// Canonical ensemble on one basis matched to the quench energy.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub beta_eff: f64,
    pub subspace_kind: String,
    pub values: Vec<(String, f64)>,
    /// `|⟨H⟩_β − E0|`.
    pub energy_check: f64,
}

impl EnsembleResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.0 == name).map(|v| v.1)
    }
}

/// Thermal expectation values on `basis` at the β whose mean energy equals
/// `⟨0…0|H|0…0⟩`.
pub fn thermal_ensemble(model: &RydbergModel, basis: &BasisIndex, observables: &[Observable]) -> Result<EnsembleResult> {
    let h = model.hamiltonian(basis)?;
    let eig = Eigensystem::new(&h)?;
    thermal_from_eigensystem(&eig, basis, model.classical_energy(0), observables)
}

pub fn thermal_from_eigensystem(
    eig: &Eigensystem,
    basis: &BasisIndex,
    e0: f64,
    observables: &[Observable],
) -> Result<EnsembleResult> {
    let beta = effective_beta(&eig.energies, e0)?;
    let energy_check = (thermal_mean(&eig.energies, &eig.energies, beta) - e0).abs();
    let values = observables
        .iter()
        .map(|o| {
            let ev = eigenstate_expectations(eig, basis, o)?;
            Ok((o.name().to_string(), thermal_expectation(&eig.energies, &ev, beta)))
        })
        .collect::<Result<_>>()?;
    Ok(EnsembleResult { beta_eff: beta, subspace_kind: basis.kind().label(), values, energy_check })
}
