//! Time evolution under a constant Hamiltonian: exact propagation through a
//! dense eigendecomposition and Lanczos (Krylov) propagation for large bases.

use std::sync::Mutex;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{LinearOperator, RydbergModel, SparseOperator};
use crate::hilbert::{BasisIndex, BasisKind};
use crate::observables::{expect_diagonal, HammingHistogram, Observable};
use crate::{Error, Result, C64};

/// Largest dimension handled by dense eigendecomposition.
pub const DENSE_LIMIT: usize = 1 << 14;
/// Bases up to this size use the dense propagator under `Propagator::Auto`.
pub const AUTO_DENSE_LIMIT: usize = 2048;
/// Decompositions larger than this are serialized to bound peak memory.
const GATED_DIM: usize = 4096;
const MIN_SUBSTEP: f64 = 1e-6;
/// Number of time points multiplied per GEMM in dense propagation.
const TIME_BATCH: usize = 64;

static LARGE_EIGH: Mutex<()> = Mutex::new(());

/// Dense kernels run single-threaded so results do not depend on the pool
/// size; parallelism comes from running independent jobs side by side.
fn sequential_faer() {
    faer::set_global_parallelism(faer::Par::Seq);
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric
/// operator.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub energies: Vec<f64>,
    /// Column `i` is eigenvector `i`.
    pub vectors: Mat<f64>,
}

impl Eigensystem {
    pub fn new(h: &SparseOperator) -> Result<Self> {
        let dim = h.dim();
        if dim > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge { dim, limit: DENSE_LIMIT });
        }
        let _guard = (dim > GATED_DIM).then(|| LARGE_EIGH.lock().unwrap_or_else(|e| e.into_inner()));
        Self::from_dense(&h.to_dense())
    }

    pub fn from_dense(m: &Mat<f64>) -> Result<Self> {
        sequential_faer();
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::InvalidArgument(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let energies = (0..s.nrows()).map(|i| s[i]).collect();
        Ok(Eigensystem { energies, vectors: evd.U().to_owned() })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `c_i = ⟨ψ_i|ψ⟩`.
    pub fn coefficients(&self, psi: &[C64]) -> Vec<C64> {
        let u = &self.vectors;
        (0..self.dim())
            .map(|i| {
                let mut acc = ZERO;
                for x in 0..self.dim() {
                    acc += psi[x] * u[(x, i)];
                }
                acc
            })
            .collect()
    }

    /// Evaluate `ψ(t) = Σ_i e^{−iE_i t} c_i |ψ_i⟩` at each time and hand it to
    /// `visit`.
    pub fn evolve(&self, psi0: &[C64], times: &[f64], mut visit: impl FnMut(usize, &[C64])) {
        sequential_faer();
        let dim = self.dim();
        let c = self.coefficients(psi0);
        let mut psi = vec![ZERO; dim];
        for (chunk_no, chunk) in times.chunks(TIME_BATCH).enumerate() {
            let cols = chunk.len();
            let mut re = Mat::<f64>::zeros(dim, cols);
            let mut im = Mat::<f64>::zeros(dim, cols);
            for (col, &t) in chunk.iter().enumerate() {
                for i in 0..dim {
                    let phase = C64::from_polar(1.0, -self.energies[i] * t);
                    let v = phase * c[i];
                    re[(i, col)] = v.re;
                    im[(i, col)] = v.im;
                }
            }
            let out_re = &self.vectors * &re;
            let out_im = &self.vectors * &im;
            for col in 0..cols {
                for x in 0..dim {
                    psi[x] = C64::new(out_re[(x, col)], out_im[(x, col)]);
                }
                visit(chunk_no * TIME_BATCH + col, &psi);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrylovOptions {
    /// Maximum Lanczos dimension per step.
    pub krylov_dim: usize,
    /// Longest substep, μs.
    pub substep: f64,
    /// Target error per substep (vector 2-norm).
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { krylov_dim: 30, substep: 0.01, tol: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    Dense,
    Krylov,
    /// Dense up to `AUTO_DENSE_LIMIT` states, Krylov above.
    #[default]
    Auto,
}

/// Lanczos propagator with reusable work buffers.
pub struct KrylovPropagator<'a> {
    op: &'a dyn LinearOperator,
    opts: KrylovOptions,
    basis: Vec<Vec<C64>>,
    w: Vec<C64>,
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(op: &'a dyn LinearOperator, opts: KrylovOptions) -> Result<Self> {
        if opts.krylov_dim < 4 {
            return Err(Error::InvalidArgument(format!("krylov_dim must be >= 4, got {}", opts.krylov_dim)));
        }
        if !(opts.substep > 0.0 && opts.tol > 0.0) {
            return Err(Error::InvalidArgument("substep and tol must be positive".into()));
        }
        Ok(KrylovPropagator { op, opts, basis: Vec::new(), w: vec![ZERO; op.dim()] })
    }

    /// Advance `psi` in place by `dt`.
    pub fn advance(&mut self, psi: &mut [C64], dt: f64, t_now: f64) -> Result<()> {
        let mut done = 0.0;
        while dt - done > 1e-15 * dt.abs().max(1.0) {
            let want = self.opts.substep.min(dt - done);
            let taken = self.step(psi, want, t_now + done)?;
            done += taken;
        }
        Ok(())
    }

    /// One Lanczos step of at most `tau`; returns the time actually taken.
    fn step(&mut self, psi: &mut [C64], tau: f64, t_now: f64) -> Result<f64> {
        let dim = self.op.dim();
        let norm0 = norm(psi);
        if norm0 == 0.0 {
            return Ok(tau);
        }
        let m_max = self.opts.krylov_dim.min(dim);
        while self.basis.len() < m_max + 1 {
            self.basis.push(vec![ZERO; dim]);
        }
        for (b, p) in self.basis[0].iter_mut().zip(psi.iter()) {
            *b = p / norm0;
        }
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        let scale_floor = 1e-13;
        let mut exact = false;
        let mut coeffs: Option<Vec<C64>> = None;
        let mut tau = tau;
        for j in 0..m_max {
            self.op.apply(&self.basis[j], &mut self.w);
            let a: f64 = dot_re(&self.basis[j], &self.w);
            for (wi, vi) in self.w.iter_mut().zip(&self.basis[j]) {
                *wi -= vi * a;
            }
            if j > 0 {
                let b = beta[j - 1];
                for (wi, vi) in self.w.iter_mut().zip(&self.basis[j - 1]) {
                    *wi -= vi * b;
                }
            }
            alpha.push(a);
            let b = norm(&self.w);
            let scale = alpha.iter().map(|x: &f64| x.abs()).fold(1.0, f64::max);
            if b <= scale_floor * scale {
                exact = true;
                break;
            }
            beta.push(b);
            let size = j + 1;
            // check convergence every few iterations once the basis is useful
            if size >= 4 && (size % 3 == 0 || size == m_max) {
                let c = tridiag_exp(&alpha, &beta[..size - 1], tau)?;
                if b * c[size - 1].norm() <= self.opts.tol {
                    coeffs = Some(c);
                    break;
                }
            }
            if size == m_max {
                break;
            }
            for (dst, wi) in self.basis[j + 1].iter_mut().zip(&self.w) {
                *dst = wi / b;
            }
        }
        let size = alpha.len();
        let off = &beta[..size - 1];
        let c = match coeffs {
            Some(c) => c,
            None if exact => tridiag_exp(&alpha, off, tau)?,
            None => {
                // not converged at full dimension: shrink the step on the same basis
                let b_last = beta[size - 1];
                loop {
                    let c = tridiag_exp(&alpha, off, tau)?;
                    if b_last * c[size - 1].norm() <= self.opts.tol {
                        break c;
                    }
                    tau *= 0.5;
                    if tau < MIN_SUBSTEP {
                        return Err(Error::KrylovUnderflow { t: t_now, step: tau });
                    }
                }
            }
        };
        for p in psi.iter_mut() {
            *p = ZERO;
        }
        for (k, ck) in c.iter().enumerate() {
            let f = ck * norm0;
            for (p, v) in psi.iter_mut().zip(&self.basis[k]) {
                *p += v * f;
            }
        }
        Ok(tau)
    }
}

/// `exp(−iτT) e_1` for the symmetric tridiagonal `T`.
fn tridiag_exp(alpha: &[f64], beta: &[f64], tau: f64) -> Result<Vec<C64>> {
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = Eigensystem::from_dense(&t)?;
    let q = &eig.vectors;
    Ok((0..k)
        .map(|r| {
            let mut acc = ZERO;
            for (l, &e) in eig.energies.iter().enumerate() {
                acc += C64::from_polar(q[(0, l)] * q[(r, l)], -tau * e);
            }
            acc
        })
        .collect())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn dot_re(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Observables recorded along a trajectory.
pub struct Recorder<'a> {
    basis: &'a BasisIndex,
    diagonal: Vec<(String, Vec<f64>)>,
    offdiagonal: Vec<Observable>,
    energy: Option<&'a dyn LinearOperator>,
    hamming: bool,
    keep_states: bool,
    series: Vec<Vec<f64>>,
    states: Vec<Vec<C64>>,
    scratch: Vec<C64>,
}

impl<'a> Recorder<'a> {
    pub fn new(basis: &'a BasisIndex) -> Self {
        Recorder {
            basis,
            diagonal: Vec::new(),
            offdiagonal: Vec::new(),
            energy: None,
            hamming: false,
            keep_states: false,
            series: Vec::new(),
            states: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn observe(mut self, obs: &[Observable]) -> Result<Self> {
        for o in obs {
            if o.is_diagonal() {
                self.diagonal.push((o.name().to_string(), o.table(self.basis)?));
            } else {
                self.offdiagonal.push(o.clone());
            }
        }
        Ok(self)
    }

    /// Record `⟨H⟩` as series `energy`.
    pub fn energy(mut self, op: &'a dyn LinearOperator) -> Self {
        self.energy = Some(op);
        self
    }

    /// Record the Hamming-weight distribution as series `hamming_p{α}`.
    pub fn hamming(mut self) -> Self {
        self.hamming = true;
        self
    }

    pub fn keep_states(mut self) -> Self {
        self.keep_states = true;
        self
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.diagonal.iter().map(|d| d.0.clone()).collect();
        names.extend(self.offdiagonal.iter().map(|o| o.name().to_string()));
        if self.energy.is_some() {
            names.push("energy".into());
        }
        if self.hamming {
            names.extend((0..=self.basis.n_sites()).map(|a| format!("hamming_p{a}")));
        }
        names
    }

    pub fn record(&mut self, psi: &[C64]) {
        let mut row = Vec::with_capacity(self.series.first().map_or(8, Vec::len));
        for (_, table) in &self.diagonal {
            row.push(expect_diagonal(psi, table));
        }
        for o in &self.offdiagonal {
            row.push(o.expect(psi, self.basis));
        }
        if let Some(op) = self.energy {
            self.scratch.resize(psi.len(), ZERO);
            op.apply(psi, &mut self.scratch);
            row.push(dot_re(psi, &self.scratch));
        }
        if self.hamming {
            row.extend(HammingHistogram::from_state(psi, self.basis).probs);
        }
        self.series.push(row);
        if self.keep_states {
            self.states.push(psi.to_vec());
        }
    }

    pub fn finish(self, times: Vec<f64>) -> Trajectory {
        let names = self.names();
        let series = names
            .into_iter()
            .enumerate()
            .map(|(c, name)| (name, self.series.iter().map(|row| row[c]).collect()))
            .collect();
        Trajectory {
            basis_kind: self.basis.kind().clone(),
            dim: self.basis.dim(),
            times,
            states: self.keep_states.then_some(self.states),
            series,
        }
    }
}

/// Time grid with recorded observables and optionally the states.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub basis_kind: BasisKind,
    pub dim: usize,
    pub times: Vec<f64>,
    pub states: Option<Vec<Vec<C64>>>,
    pub series: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|s| s.0 == name).map(|s| s.1.as_slice())
    }

    /// Time average of a recorded series over `[t0, t1]`.
    pub fn average(&self, name: &str, t0: f64, t1: f64) -> Result<f64> {
        let s = self
            .series(name)
            .ok_or_else(|| Error::InvalidArgument(format!("series {name} was not recorded")))?;
        crate::observables::time_average(&self.times, s, t0, t1)
    }

    /// CSV with header `t_us,<series…>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_us");
        for (name, _) in &self.series {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.6}"));
            for (_, s) in &self.series {
                out.push_str(&format!(",{}", s[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Uniform grid `0, dt, …, t_final`.
pub fn time_grid(t_final: f64, dt: f64) -> Result<Vec<f64>> {
    if t_final == 0.0 {
        return Ok(vec![0.0]);
    }
    if !(dt > 0.0 && t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad time grid t_final={t_final} dt={dt}")));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidArgument(format!("t_final={t_final} is not a multiple of dt={dt}")));
    }
    Ok((0..=steps as usize).map(|i| i as f64 * dt).collect())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("times must be non-negative and strictly increasing".into()));
    }
    Ok(())
}

/// Exact propagation through the eigendecomposition of `h`.
pub fn propagate_dense(h: &SparseOperator, psi0: &[C64], times: &[f64], mut rec: Recorder<'_>) -> Result<Trajectory> {
    check_times(times)?;
    let eig = Eigensystem::new(h)?;
    eig.evolve(psi0, times, |_, psi| rec.record(psi));
    Ok(rec.finish(times.to_vec()))
}

/// Piecewise Lanczos propagation.
pub fn propagate_krylov(
    op: &dyn LinearOperator,
    psi0: &[C64],
    times: &[f64],
    opts: KrylovOptions,
    mut rec: Recorder<'_>,
) -> Result<Trajectory> {
    check_times(times)?;
    let mut prop = KrylovPropagator::new(op, opts)?;
    let mut psi = psi0.to_vec();
    let mut t = 0.0;
    for &target in times {
        if target > t {
            prop.advance(&mut psi, target - t, t)?;
            t = target;
        }
        rec.record(&psi);
    }
    Ok(rec.finish(times.to_vec()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveOptions {
    pub propagator: Propagator,
    pub krylov: KrylovOptions,
}

/// Evolve `|0…0⟩` on `basis` and record on the grid `0, dt, …, t_final`.
pub fn quench_from_vacuum(
    model: &RydbergModel,
    basis: &BasisIndex,
    t_final: f64,
    dt: f64,
    opts: &EvolveOptions,
    rec: Recorder<'_>,
) -> Result<Trajectory> {
    let times = time_grid(t_final, dt)?;
    let psi0 = basis.basis_vector(0)?;
    let dense = match opts.propagator {
        Propagator::Dense => true,
        Propagator::Krylov => false,
        Propagator::Auto => basis.dim() <= AUTO_DENSE_LIMIT,
    };
    if dense {
        let h = model.hamiltonian(basis)?;
        propagate_dense(&h, &psi0, &times, rec)
    } else if basis.is_full() {
        let op = model.full_space_operator()?;
        propagate_krylov(&op, &psi0, &times, opts.krylov, rec)
    } else {
        let h = model.hamiltonian(basis)?;
        propagate_krylov(&h, &psi0, &times, opts.krylov, rec)
    }
}
