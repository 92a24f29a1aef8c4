//! Rydberg Hamiltonian
//! `H = (Ω/2) Σ_j X_j − Δ Σ_j n_j + Σ_{j<k} V_jk n_j n_k`
//! on the full space or on a constrained basis.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::BasisIndex;
use crate::lattice::{interaction_matrix, InteractionMatrix, LatticeSpec, C6_DEFAULT};
use crate::{Error, Result, C64};

/// Largest basis an operator is assembled for.
pub const MAX_DIM: usize = 1 << 20;

/// Below this dimension matrix-vector products stay on the calling thread.
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchParams {
    /// Rabi frequency Ω, rad/μs.
    pub omega: f64,
    /// Detuning Δ, rad/μs.
    pub delta: f64,
    /// Van der Waals coefficient, rad·μm⁶/μs.
    pub c6: f64,
}

impl QuenchParams {
    pub fn new(omega: f64, delta: f64) -> Self {
        QuenchParams { omega, delta, c6: C6_DEFAULT }
    }

    /// `R_b = (C6/Ω)^(1/6)` in μm.
    pub fn blockade_radius(&self) -> f64 {
        (self.c6 / self.omega).powf(1.0 / 6.0)
    }

    /// Lattice spacing realizing the ratio `R_b / a`.
    pub fn spacing_for(&self, rb_over_a: f64) -> f64 {
        self.blockade_radius() / rb_over_a
    }

    pub fn v_at(&self, r: f64) -> f64 {
        self.c6 / r.powi(6)
    }

    /// Nearest-neighbor interaction `C6/a^6`.
    pub fn v1(&self, a: f64) -> f64 {
        self.v_at(a)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

/// Which pairs interact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRange {
    /// Every pair, `V = C6/r^6`.
    #[default]
    All,
    /// Only nearest-neighbor bonds of the lattice.
    NearestNeighbor,
}

/// Lattice, parameters and the resolved interaction matrix.
#[derive(Clone, Debug)]
pub struct RydbergModel {
    pub lattice: LatticeSpec,
    pub params: QuenchParams,
    pub couplings: InteractionMatrix,
    pub range: CouplingRange,
    /// Per-site list of `(k, V_jk)` with `k > j` and `V_jk != 0`.
    upper: Vec<Vec<(usize, f64)>>,
}

impl RydbergModel {
    pub fn new(lattice: LatticeSpec, params: QuenchParams) -> Result<Self> {
        Self::with_range(lattice, params, CouplingRange::All)
    }

    pub fn with_range(lattice: LatticeSpec, params: QuenchParams, range: CouplingRange) -> Result<Self> {
        let n = lattice.n_sites();
        if n > 64 {
            return Err(Error::InvalidArgument(format!(
                "{n} sites exceed the 64-bit configuration limit for quantum models"
            )));
        }
        let couplings = match range {
            CouplingRange::All => interaction_matrix(&lattice, &params)?,
            CouplingRange::NearestNeighbor => {
                let full = interaction_matrix(&lattice, &params)?;
                let mut m = InteractionMatrix::from_bonds(n, &[], 0.0);
                for (j, k) in lattice.nn_bonds() {
                    m = m.with_entry(j, k, full.get(j, k));
                }
                m
            }
        };
        Ok(Self::from_parts(lattice, params, couplings, range))
    }

    /// Model with an explicit interaction matrix.
    pub fn from_parts(
        lattice: LatticeSpec,
        params: QuenchParams,
        couplings: InteractionMatrix,
        range: CouplingRange,
    ) -> Self {
        let n = lattice.n_sites();
        let upper = (0..n)
            .map(|j| {
                ((j + 1)..n)
                    .filter_map(|k| {
                        let v = couplings.get(j, k);
                        (v != 0.0).then_some((k, v))
                    })
                    .collect()
            })
            .collect();
        RydbergModel { lattice, params, couplings, range, upper }
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        let mut m = self.clone();
        m.params.delta = delta;
        m
    }

    /// `E(x) = −Δ·|x| + Σ_{j<k} V_jk x_j x_k`.
    pub fn classical_energy(&self, x: u64) -> f64 {
        self.interaction_energy(x) - self.params.delta * x.count_ones() as f64
    }

    pub fn interaction_energy(&self, x: u64) -> f64 {
        let mut e = 0.0;
        let mut rest = x;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            for &(k, v) in &self.upper[j] {
                if x >> k & 1 == 1 {
                    e += v;
                }
            }
        }
        e
    }

    /// Diagonal of H on `basis`.
    pub fn diagonal(&self, basis: &BasisIndex) -> Vec<f64> {
        basis.states().par_iter().map(|&x| self.classical_energy(x)).collect()
    }

    /// Assemble H on `basis`; flips leaving the basis are dropped.
    pub fn hamiltonian(&self, basis: &BasisIndex) -> Result<SparseOperator> {
        self.check_basis(basis)?;
        let dim = basis.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, limit: MAX_DIM });
        }
        let n = self.n_sites();
        let half = 0.5 * self.params.omega;
        let rows: Vec<Vec<(u32, f64)>> = basis
            .states()
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut row = Vec::with_capacity(n + 1);
                row.push((i as u32, self.classical_energy(x)));
                if half != 0.0 {
                    for j in 0..n {
                        if let Some(k) = basis.index_of(x ^ (1u64 << j)) {
                            row.push((k as u32, half));
                        }
                    }
                }
                row.sort_unstable_by_key(|e| e.0);
                row
            })
            .collect();
        Ok(SparseOperator::from_rows(dim, rows, true))
    }

    /// Matrix-free H on the full `2^N` space.
    pub fn full_space_operator(&self) -> Result<FullSpaceOperator> {
        let n = self.n_sites();
        if n > 20 {
            return Err(Error::DimensionTooLarge { dim: 1usize << n.min(63), limit: MAX_DIM });
        }
        let diag = (0..1u64 << n).into_par_iter().map(|x| self.classical_energy(x)).collect();
        Ok(FullSpaceOperator { n_sites: n, half_omega: 0.5 * self.params.omega, diag })
    }

    /// Nearest-neighbor part `H0 = V1 Σ_<jk> n_j n_k` on `basis` and the scale
    /// `λ = max(|Δ|, Ω, V2)` of the remaining terms.
    pub fn h0_decomposition(&self, basis: &BasisIndex) -> Result<H0Decomposition> {
        self.check_basis(basis)?;
        let v1 = self.params.v1(self.lattice.spacing);
        let masks: Vec<u64> = self
            .lattice
            .nn_bonds()
            .iter()
            .map(|&(j, k)| (1u64 << j) | (1u64 << k))
            .collect();
        let h0 = basis
            .states()
            .iter()
            .map(|&x| v1 * masks.iter().filter(|&&m| x & m == m).count() as f64)
            .collect();
        let v2 = self.v2();
        let lambda = self.params.delta.abs().max(self.params.omega).max(v2);
        Ok(H0Decomposition { h0, v1, v2, lambda })
    }

    /// Strongest coupling between next-nearest neighbors: diagonal pairs in
    /// 2D, sites two steps apart along the loop in 1D.
    pub fn v2(&self) -> f64 {
        let pairs: Vec<(usize, usize)> = if self.lattice.is_1d() {
            let order = self.lattice.order();
            let n = order.len();
            (0..n).map(|p| (order[p], order[(p + 2) % n])).collect()
        } else {
            self.lattice.diagonal_bonds()
        };
        pairs
            .into_iter()
            .map(|(j, k)| self.couplings.get(j, k))
            .fold(0.0, f64::max)
    }

    fn check_basis(&self, basis: &BasisIndex) -> Result<()> {
        if basis.n_sites() != self.n_sites() {
            return Err(Error::IncompatibleBasis(format!(
                "basis has {} sites, model has {}",
                basis.n_sites(),
                self.n_sites()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct H0Decomposition {
    /// Diagonal of H0 on the basis, integer multiples of `v1`.
    pub h0: Vec<f64>,
    pub v1: f64,
    pub v2: f64,
    pub lambda: f64,
}

/// Something that can multiply complex state vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// Real symmetric matrix in compressed-row form.
///
/// The Rydberg Hamiltonian is real in the computational basis, so entries are
/// stored as `f64` and act on complex vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
    pub hermitian: bool,
}

impl SparseOperator {
    /// Build from per-row `(column, value)` lists sorted by column.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(u32, f64)>>, hermitian: bool) -> Self {
        debug_assert_eq!(rows.len(), dim);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                values.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseOperator { dim, row_ptr, cols, values, hermitian }
    }

    /// Build from unordered triplets; duplicates are summed and exact zeros
    /// dropped.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)], hermitian: bool) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in triplets {
            rows[i].push((j as u32, v));
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            *row = merged;
        }
        Self::from_rows(dim, rows, hermitian)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().zip(&self.values[r]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// All stored `(row, col, value)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        m
    }

    /// Largest `|A_ij − A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `⟨x|A|x⟩` for a complex vector.
    pub fn expectation(&self, x: &[C64]) -> f64 {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let row = |i: usize| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[p] as usize] * self.values[p];
            }
            acc
        };
        if self.dim >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row(i);
            }
        }
    }
}

/// Full-space Hamiltonian applied without storing off-diagonal entries:
/// `y[x] = d[x] v[x] + (Ω/2) Σ_j v[x ⊕ 2^j]`.
#[derive(Clone, Debug)]
pub struct FullSpaceOperator {
    pub n_sites: usize,
    pub half_omega: f64,
    pub diag: Vec<f64>,
}

impl LinearOperator for FullSpaceOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let h = self.half_omega;
        if self.diag.len() >= PAR_THRESHOLD && rayon::current_num_threads() > 1 {
            let n = self.n_sites;
            y.par_iter_mut().enumerate().for_each(|(i, yi)| {
                let mut flips = C64::new(0.0, 0.0);
                for j in 0..n {
                    flips += x[i ^ (1 << j)];
                }
                *yi = x[i] * self.diag[i] + flips * h;
            });
            return;
        }
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi * d;
        }
        // One streaming pass per site: blocks of length 2^j swap halves.
        for j in 0..self.n_sites {
            let half = 1usize << j;
            for (yb, xb) in y.chunks_exact_mut(2 * half).zip(x.chunks_exact(2 * half)) {
                let (y0, y1) = yb.split_at_mut(half);
                let (x0, x1) = xb.split_at(half);
                for k in 0..half {
                    y0[k] += x1[k] * h;
                    y1[k] += x0[k] * h;
                }
            }
        }
    }
}
