//! Computational bases: the full space and constrained subspaces.
//!
//! Configurations are `u64` words with site `j` stored in bit `j`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{RydbergModel, MAX_DIM};
use crate::lattice::{Adjacency, LatticeSpec};
use crate::{Error, Result, C64};

/// Brute-force enumeration is refused beyond this many sites.
pub const MAX_ENUM_SITES: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Full,
    /// No two excitations on nearest-neighbor sites.
    BlockadeNn,
    /// 2D blockade including diagonal neighbors.
    BlockadeXyd,
    /// 1D configurations whose excitation runs are all at most `k` long.
    IslandShell(usize),
    /// `blockade_nn` plus configurations with as many 1-islands as
    /// 2-islands (at least one of each).
    IslandPairShell,
    /// Configurations with `|E_m − e0| ≤ tol`.
    ResonanceManifold { e0: f64, tol: f64 },
    /// Read from a basis dump.
    Loaded,
}

impl BasisKind {
    pub fn label(&self) -> String {
        match self {
            BasisKind::Full => "full".into(),
            BasisKind::BlockadeNn => "blockade_nn".into(),
            BasisKind::BlockadeXyd => "blockade_xyd".into(),
            BasisKind::IslandShell(k) => format!("island_shell({k})"),
            BasisKind::IslandPairShell => "island_pair_shell".into(),
            BasisKind::ResonanceManifold { .. } => "resonance_manifold".into(),
            BasisKind::Loaded => "loaded".into(),
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Sorted list of configurations with a reverse lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisIndex {
    kind: BasisKind,
    n_sites: usize,
    states: Vec<u64>,
}

impl BasisIndex {
    /// Wrap an arbitrary configuration list; it is sorted and deduplicated.
    pub fn from_states(kind: BasisKind, n_sites: usize, mut states: Vec<u64>) -> Result<Self> {
        if n_sites == 0 || n_sites > 64 {
            return Err(Error::InvalidArgument(format!("unsupported site count {n_sites}")));
        }
        if states.len() > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim: states.len(), limit: MAX_DIM });
        }
        if let Some(&bad) = states.iter().find(|&&x| n_sites < 64 && x >> n_sites != 0) {
            return Err(Error::InvalidArgument(format!("configuration {bad:#x} has bits beyond site {n_sites}")));
        }
        states.sort_unstable();
        states.dedup();
        Ok(BasisIndex { kind, n_sites, states })
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn is_full(&self) -> bool {
        self.kind == BasisKind::Full
    }

    pub fn index_of(&self, x: u64) -> Option<usize> {
        if self.is_full() {
            return ((x as usize) < self.states.len()).then_some(x as usize);
        }
        self.states.binary_search(&x).ok()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.index_of(x).is_some()
    }

    /// Basis vector for configuration `x`.
    pub fn basis_vector(&self, x: u64) -> Result<Vec<C64>> {
        let i = self.index_of(x).ok_or_else(|| {
            Error::IncompatibleBasis(format!("configuration {x:#x} is not in the {} basis", self.kind))
        })?;
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        v[i] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// One lowercase hex configuration per line, in basis order.
    pub fn to_hex_dump(&self) -> String {
        let mut out = String::with_capacity(self.dim() * 6);
        for x in &self.states {
            out.push_str(&format!("{x:x}\n"));
        }
        out
    }

    /// Parse a hex dump. Lines must be strictly increasing and fit in
    /// `n_sites` bits; blank lines are ignored.
    pub fn from_hex_dump(text: &str, n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > 64 {
            return Err(Error::InvalidArgument(format!("unsupported site count {n_sites}")));
        }
        let mut states = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: lineno + 1, msg };
            let digits = line.strip_prefix("0x").unwrap_or(line);
            if digits.is_empty() || digits.len() > 16 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(parse_err(format!("not a hex configuration: {line:?}")));
            }
            let x = u64::from_str_radix(digits, 16).map_err(|e| parse_err(e.to_string()))?;
            if n_sites < 64 && x >> n_sites != 0 {
                return Err(parse_err(format!("{line} exceeds {n_sites} sites")));
            }
            if states.last().is_some_and(|&prev| prev >= x) {
                return Err(parse_err("configurations must be strictly increasing".into()));
            }
            if states.len() == MAX_DIM {
                return Err(Error::DimensionTooLarge { dim: MAX_DIM + 1, limit: MAX_DIM });
            }
            states.push(x);
        }
        Ok(BasisIndex { kind: BasisKind::Loaded, n_sites, states })
    }
}

/// Enumerate a basis that depends only on the lattice.
pub fn enumerate_basis(lat: &LatticeSpec, kind: &BasisKind) -> Result<BasisIndex> {
    let n = lat.n_sites();
    let too_big = |dim: usize| Error::DimensionTooLarge { dim, limit: MAX_DIM };
    match kind {
        BasisKind::Full => {
            if n > 20 {
                return Err(too_big(1usize << n.min(63)));
            }
            Ok(BasisIndex { kind: BasisKind::Full, n_sites: n, states: (0..1u64 << n).collect() })
        }
        BasisKind::BlockadeNn | BasisKind::BlockadeXyd => {
            let adjacency = match kind {
                BasisKind::BlockadeNn => lat.default_adjacency(),
                _ => Adjacency::Xyd,
            };
            let nbrs = lat.neighbors(adjacency)?;
            check_sites(n, 64)?;
            let states = independent_sets(&nbrs)?;
            BasisIndex::from_states(kind.clone(), n, states)
        }
        BasisKind::IslandShell(k) => {
            let order = one_d_order(lat, kind)?;
            if *k == 0 {
                return Err(Error::InvalidArgument("island_shell needs k >= 1".into()));
            }
            check_sites(n, MAX_ENUM_SITES)?;
            let k = *k;
            let states = filter_all(n, |x| max_run(x, &order) <= k);
            BasisIndex::from_states(kind.clone(), n, states)
        }
        BasisKind::IslandPairShell => {
            let order = one_d_order(lat, kind)?;
            check_sites(n, MAX_ENUM_SITES)?;
            let states = filter_all(n, |x| {
                let runs = cyclic_runs(x, &order);
                let ones = runs.iter().filter(|&&r| r == 1).count();
                let twos = runs.iter().filter(|&&r| r == 2).count();
                runs.iter().all(|&r| r <= 1) || (ones == twos && ones >= 1)
            });
            BasisIndex::from_states(kind.clone(), n, states)
        }
        BasisKind::ResonanceManifold { .. } => Err(Error::UnsupportedBasis(
            "resonance manifolds depend on the Hamiltonian; use resonance_manifold".into(),
        )),
        BasisKind::Loaded => Err(Error::UnsupportedBasis("loaded bases come from a basis dump".into())),
    }
}

/// Basis of any kind for a concrete model.
pub fn basis_for_model(model: &RydbergModel, kind: &BasisKind) -> Result<BasisIndex> {
    match kind {
        BasisKind::ResonanceManifold { e0, tol } => resonance_manifold(model, *e0, Some(*tol)),
        _ => enumerate_basis(&model.lattice, kind),
    }
}

/// All configurations whose classical energy lies within `tol` of `e0`
/// (default tolerance `1e-6 Ω`).
pub fn resonance_manifold(model: &RydbergModel, e0: f64, tol: Option<f64>) -> Result<BasisIndex> {
    let n = model.n_sites();
    check_sites(n, MAX_ENUM_SITES)?;
    let tol = tol.unwrap_or(1e-6 * model.params.omega);
    let states = filter_all(n, |x| (model.classical_energy(x) - e0).abs() <= tol);
    BasisIndex::from_states(BasisKind::ResonanceManifold { e0, tol }, n, states)
}

/// Copy amplitudes of `v` (on `from`) onto the configurations of `to`;
/// configurations missing from `from` get zero. No renormalization.
pub fn project_state(v: &[C64], from: &BasisIndex, to: &BasisIndex) -> Result<Vec<C64>> {
    if from.n_sites != to.n_sites {
        return Err(Error::IncompatibleBasis(format!(
            "cannot map a {}-site state onto {} sites",
            from.n_sites, to.n_sites
        )));
    }
    if v.len() != from.dim() {
        return Err(Error::IncompatibleBasis(format!(
            "vector length {} does not match basis dimension {}",
            v.len(),
            from.dim()
        )));
    }
    Ok(to
        .states
        .iter()
        .map(|&x| from.index_of(x).map_or(C64::new(0.0, 0.0), |i| v[i]))
        .collect())
}

/// Lengths of the maximal excitation runs along the cyclic loop `order`.
/// The all-ones configuration yields a single run of length `N`.
pub fn cyclic_runs(x: u64, order: &[usize]) -> Vec<usize> {
    let n = order.len();
    let bit = |p: usize| x >> order[p % n] & 1 == 1;
    let Some(start) = (0..n).find(|&p| !bit(p)) else {
        return vec![n];
    };
    let mut runs = Vec::new();
    let mut len = 0;
    for step in 1..=n {
        if bit(start + step) {
            len += 1;
        } else if len > 0 {
            runs.push(len);
            len = 0;
        }
    }
    runs
}

pub fn max_run(x: u64, order: &[usize]) -> usize {
    cyclic_runs(x, order).into_iter().max().unwrap_or(0)
}

fn one_d_order(lat: &LatticeSpec, kind: &BasisKind) -> Result<Vec<usize>> {
    if !lat.is_1d() {
        return Err(Error::UnsupportedBasis(format!("{kind} is only defined on 1D lattices")));
    }
    Ok(lat.order())
}

fn check_sites(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::InvalidArgument(format!("{n} sites exceed the enumeration limit of {limit}")));
    }
    Ok(())
}

fn filter_all(n: usize, keep: impl Fn(u64) -> bool + Sync) -> Vec<u64> {
    (0..1u64 << n).into_par_iter().filter(|&x| keep(x)).collect()
}

/// Independent sets of the neighbor graph by depth-first extension in site
/// order.
fn independent_sets(nbrs: &[Vec<usize>]) -> Result<Vec<u64>> {
    let n = nbrs.len();
    let lower: Vec<u64> = nbrs
        .iter()
        .enumerate()
        .map(|(j, l)| l.iter().filter(|&&k| k < j).fold(0u64, |m, &k| m | 1 << k))
        .collect();
    let mut out = Vec::new();
    let mut stack = vec![(0usize, 0u64)];
    while let Some((j, x)) = stack.pop() {
        if j == n {
            if out.len() == MAX_DIM {
                return Err(Error::DimensionTooLarge { dim: MAX_DIM + 1, limit: MAX_DIM });
            }
            out.push(x);
            continue;
        }
        stack.push((j + 1, x));
        if x & lower[j] == 0 {
            stack.push((j + 1, x | 1 << j));
        }
    }
    Ok(out)
}

/// Site occupations of arbitrary length, used for measured shots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bitstring {
    n: usize,
    words: Vec<u64>,
}

impl Bitstring {
    pub fn zeros(n: usize) -> Self {
        Bitstring { n, words: vec![0; n.div_ceil(64)] }
    }

    pub fn from_u64(x: u64, n: usize) -> Self {
        let mut b = Self::zeros(n);
        for j in 0..n.min(64) {
            b.set(j, x >> j & 1 == 1);
        }
        b
    }

    /// Parse a `0`/`1` string; character `j` is site `j`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut b = Self::zeros(s.len());
        for (j, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => b.set(j, true),
                _ => return None,
            }
        }
        Some(b)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, j: usize) -> bool {
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, j: usize, on: bool) {
        let mask = 1u64 << (j % 64);
        if on {
            self.words[j / 64] |= mask;
        } else {
            self.words[j / 64] &= !mask;
        }
    }

    pub fn hamming(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn as_u64(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.n {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}
