//! Correlators, island counters, Hamming-weight statistics and time
//! averages, on state vectors or on measured bitstrings.

use std::fmt;

use crate::hilbert::{BasisIndex, Bitstring};
use crate::lattice::{Adjacency, LatticeSpec};
use crate::{Error, Result, C64};

/// Which neighbors must be unexcited around an island.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Isolation {
    SameAsAdjacency,
    /// Also isolated across square-lattice diagonals.
    WithDiagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IslandSpec {
    pub k: usize,
    pub adjacency: Adjacency,
    pub isolation: Isolation,
}

/// Counts maximal excited clusters of exactly `k` sites that are isolated.
#[derive(Clone, Debug)]
pub struct IslandCounter {
    spec: IslandSpec,
    cluster: Vec<Vec<usize>>,
    isolation: Vec<Vec<usize>>,
    one_d: bool,
}

impl IslandCounter {
    pub fn new(lat: &LatticeSpec, spec: IslandSpec) -> Result<Self> {
        if spec.k == 0 {
            return Err(Error::InvalidArgument("island size must be at least 1".into()));
        }
        let cluster = lat.neighbors(spec.adjacency)?;
        let isolation = match spec.isolation {
            Isolation::SameAsAdjacency => cluster.clone(),
            Isolation::WithDiagonal => lat.neighbors(Adjacency::Xyd)?,
        };
        Ok(IslandCounter { spec, cluster, isolation, one_d: lat.is_1d() })
    }

    pub fn spec(&self) -> IslandSpec {
        self.spec
    }

    /// Number of islands in a configuration given by `occupied(j)`.
    pub fn count(&self, occupied: impl Fn(usize) -> bool) -> usize {
        let n = self.cluster.len();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        let mut component = Vec::new();
        let mut islands = 0;
        for start in 0..n {
            if seen[start] || !occupied(start) {
                continue;
            }
            component.clear();
            seen[start] = true;
            stack.push(start);
            while let Some(j) = stack.pop() {
                component.push(j);
                for &k in &self.cluster[j] {
                    if !seen[k] && occupied(k) {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
            if component.len() != self.spec.k {
                continue;
            }
            // a fully excited loop has no boundary and is not an island
            if self.one_d && component.len() == n {
                continue;
            }
            let isolated = component
                .iter()
                .all(|&j| self.isolation[j].iter().all(|&k| component.contains(&k) || !occupied(k)));
            if isolated {
                islands += 1;
            }
        }
        islands
    }

    pub fn count_u64(&self, x: u64) -> usize {
        self.count(|j| x >> j & 1 == 1)
    }

    pub fn count_bits(&self, x: &Bitstring) -> usize {
        self.count(|j| x.get(j))
    }
}

/// An observable resolved against a lattice. All are normalized per site.
#[derive(Clone, Debug)]
pub struct Observable {
    name: String,
    n: usize,
    kind: ObsKind,
}

#[derive(Clone, Debug)]
enum ObsKind {
    Z,
    N,
    Zz(Vec<(usize, usize)>),
    Nn(Vec<(usize, usize)>),
    X,
    Xx(Vec<(usize, usize)>),
    Island(IslandCounter),
}

impl Observable {
    /// Resolve a name: `O_Z`, `O_n`, `O_ZZ`, `O_nn`, `O_X`, `O_XX`,
    /// `O_L{k}` (chain in 1D, xy in 2D), `O_L{k}_xyd` and `O_H{k}` (2D).
    pub fn parse(name: &str, lat: &LatticeSpec) -> Result<Self> {
        let n = lat.n_sites();
        let bonds = || lat.nn_bonds();
        let kind = match name {
            "O_Z" => ObsKind::Z,
            "O_n" => ObsKind::N,
            "O_ZZ" => ObsKind::Zz(bonds()),
            "O_nn" => ObsKind::Nn(bonds()),
            "O_X" => ObsKind::X,
            "O_XX" => ObsKind::Xx(bonds()),
            _ => ObsKind::Island(IslandCounter::new(lat, parse_island(name, lat)?)?),
        };
        Ok(Observable { name: name.to_string(), n, kind })
    }

    pub fn parse_many(names: &[String], lat: &LatticeSpec) -> Result<Vec<Self>> {
        names.iter().map(|s| Self::parse(s, lat)).collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_diagonal(&self) -> bool {
        !matches!(self.kind, ObsKind::X | ObsKind::Xx(_))
    }

    /// Value of a diagonal observable on one configuration; `None` for
    /// off-diagonal ones.
    pub fn config_value(&self, occupied: impl Fn(usize) -> bool) -> Option<f64> {
        let z = |j: usize| if occupied(j) { -1.0 } else { 1.0 };
        let nv = |j: usize| if occupied(j) { 1.0 } else { 0.0 };
        let total = match &self.kind {
            ObsKind::Z => (0..self.n).map(z).sum(),
            ObsKind::N => (0..self.n).map(nv).sum(),
            ObsKind::Zz(b) => b.iter().map(|&(j, k)| z(j) * z(k)).sum(),
            ObsKind::Nn(b) => b.iter().map(|&(j, k)| nv(j) * nv(k)).sum(),
            ObsKind::Island(c) => c.count(&occupied) as f64,
            ObsKind::X | ObsKind::Xx(_) => return None,
        };
        Some(total / self.n as f64)
    }

    pub fn value_u64(&self, x: u64) -> Option<f64> {
        self.config_value(|j| x >> j & 1 == 1)
    }

    pub fn value_bits(&self, x: &Bitstring) -> Option<f64> {
        self.config_value(|j| x.get(j))
    }

    /// Per-configuration values on `basis` (diagonal observables only).
    pub fn table(&self, basis: &BasisIndex) -> Result<Vec<f64>> {
        if !self.is_diagonal() {
            return Err(Error::InvalidArgument(format!("{} is not diagonal", self.name)));
        }
        Ok(basis.states().iter().map(|&x| self.value_u64(x).unwrap_or(0.0)).collect())
    }

    /// `⟨ψ|O|ψ⟩`; off-diagonal operators are projected onto `basis`.
    pub fn expect(&self, psi: &[C64], basis: &BasisIndex) -> f64 {
        match &self.kind {
            ObsKind::X | ObsKind::Xx(_) => expect_offdiagonal(psi, basis, self),
            _ => basis
                .states()
                .iter()
                .zip(psi)
                .map(|(&x, a)| a.norm_sqr() * self.value_u64(x).unwrap_or(0.0))
                .sum(),
        }
    }

    /// Configurations reached from `m` with their matrix elements.
    pub fn act(&self, m: u64, out: &mut Vec<(u64, f64)>) {
        out.clear();
        let w = 1.0 / self.n as f64;
        match &self.kind {
            ObsKind::X => out.extend((0..self.n).map(|j| (m ^ 1 << j, w))),
            ObsKind::Xx(b) => out.extend(b.iter().map(|&(j, k)| (m ^ (1 << j) ^ (1 << k), w))),
            _ => {
                let v = self.value_u64(m).unwrap_or(0.0);
                if v != 0.0 {
                    out.push((m, v));
                }
            }
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn parse_island(name: &str, lat: &LatticeSpec) -> Result<IslandSpec> {
    let unknown = || Error::InvalidArgument(format!("unknown observable {name:?}"));
    let (h, rest) = if let Some(r) = name.strip_prefix("O_L") {
        (false, r)
    } else if let Some(r) = name.strip_prefix("O_H") {
        (true, r)
    } else {
        return Err(unknown());
    };
    let (digits, suffix) = match rest.split_once('_') {
        Some((d, s)) => (d, Some(s)),
        None => (rest, None),
    };
    let k: usize = digits.parse().map_err(|_| unknown())?;
    let spec = match (h, suffix) {
        (false, None) => IslandSpec { k, adjacency: lat.default_adjacency(), isolation: Isolation::SameAsAdjacency },
        (false, Some("xy")) => IslandSpec { k, adjacency: Adjacency::Xy, isolation: Isolation::SameAsAdjacency },
        (false, Some("xyd")) => IslandSpec { k, adjacency: Adjacency::Xyd, isolation: Isolation::SameAsAdjacency },
        (true, None) => IslandSpec { k, adjacency: Adjacency::Xy, isolation: Isolation::WithDiagonal },
        _ => return Err(unknown()),
    };
    if lat.is_1d() && spec.adjacency != Adjacency::Chain {
        return Err(Error::InvalidArgument(format!("{name} needs a 2D lattice")));
    }
    Ok(spec)
}

/// `⟨ψ|O|ψ⟩` for `O_X` or `O_XX`, keeping only flips inside `basis`.
pub fn expect_offdiagonal(psi: &[C64], basis: &BasisIndex, obs: &Observable) -> f64 {
    let mut acc = 0.0;
    let mut buf = Vec::new();
    for (i, &x) in basis.states().iter().enumerate() {
        if psi[i] == C64::new(0.0, 0.0) {
            continue;
        }
        obs.act(x, &mut buf);
        for &(y, w) in &buf {
            if let Some(k) = basis.index_of(y) {
                acc += w * (psi[k].conj() * psi[i]).re;
            }
        }
    }
    acc
}

/// `Σ_x |ψ_x|² table[x]`.
pub fn expect_diagonal(psi: &[C64], table: &[f64]) -> f64 {
    psi.iter().zip(table).map(|(a, v)| a.norm_sqr() * v).sum()
}

/// Probability of each Hamming weight `0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct HammingHistogram {
    pub probs: Vec<f64>,
}

impl HammingHistogram {
    pub fn from_state(psi: &[C64], basis: &BasisIndex) -> Self {
        let mut probs = vec![0.0; basis.n_sites() + 1];
        for (&x, a) in basis.states().iter().zip(psi) {
            probs[x.count_ones() as usize] += a.norm_sqr();
        }
        HammingHistogram { probs }
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(a, p)| a as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probs.iter().enumerate().map(|(a, p)| (a as f64 - m).powi(2) * p).sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Trapezoidal mean of `series` over `[t0, t1]`, interpolating linearly at
/// window edges that fall between samples.
pub fn time_average(times: &[f64], series: &[f64], t0: f64, t1: f64) -> Result<f64> {
    let out_of_range = || Error::WindowOutOfRange {
        t0,
        t1,
        start: times.first().copied().unwrap_or(f64::NAN),
        end: times.last().copied().unwrap_or(f64::NAN),
    };
    if times.len() != series.len() || times.len() < 2 || t0.partial_cmp(&t1) != Some(std::cmp::Ordering::Less) {
        return Err(out_of_range());
    }
    let eps = 1e-9 * (1.0 + times[times.len() - 1].abs());
    if t0 < times[0] - eps || t1 > times[times.len() - 1] + eps {
        return Err(out_of_range());
    }
    let mut integral = 0.0;
    for w in 0..times.len() - 1 {
        let (ta, tb) = (times[w], times[w + 1]);
        let lo = ta.max(t0);
        let hi = tb.min(t1);
        if hi <= lo {
            continue;
        }
        let at = |t: f64| series[w] + (series[w + 1] - series[w]) * (t - ta) / (tb - ta);
        integral += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    Ok(integral / (t1 - t0))
}

/// Measured configurations read from a shot file.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotSamples {
    pub shots: Vec<Bitstring>,
    /// Lines dropped because they contain a lost atom (`x`).
    pub discarded: usize,
}

impl ShotSamples {
    /// One `0`/`1` string of length `n` per line; lines containing `x` are
    /// discarded, blank lines skipped.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut shots = Vec::new();
        let mut discarded = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: lineno + 1, msg };
            if line.len() != n {
                return Err(err(format!("expected {n} sites, found {}", line.len())));
            }
            if !line.bytes().all(|b| matches!(b, b'0' | b'1' | b'x')) {
                return Err(err(format!("unexpected character in {line:?}")));
            }
            if line.contains('x') {
                discarded += 1;
                continue;
            }
            shots.push(Bitstring::parse(line).expect("validated above"));
        }
        Ok(ShotSamples { shots, discarded })
    }

    /// Sample mean and standard error of a diagonal observable.
    pub fn estimate(&self, obs: &Observable) -> Result<Estimate> {
        if !obs.is_diagonal() {
            return Err(Error::InvalidArgument(format!("{obs} cannot be estimated from bitstrings")));
        }
        let values: Vec<f64> = self.shots.iter().map(|s| obs.value_bits(s).unwrap_or(0.0)).collect();
        Ok(Estimate::from_values(&values))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    /// Mean and `s/√n` with the `n−1` sample variance; zero spread for
    /// fewer than two values.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = pairwise_sum(values) / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
            (pairwise_sum(&dev) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        };
        Estimate { mean, stderr, n }
    }
}

/// Sum in a fixed pairwise order, independent of how the slice was produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Weighted sum of Pauli strings `c · Π X · Π Z · Π n` over site masks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliSum {
    pub terms: Vec<PauliString>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliString {
    pub coeff: f64,
    pub x_mask: u64,
    pub z_mask: u64,
    pub n_mask: u64,
}

impl PauliString {
    pub fn identity(coeff: f64) -> Self {
        PauliString { coeff, x_mask: 0, z_mask: 0, n_mask: 0 }
    }

    pub fn xx(j: usize, k: usize, coeff: f64) -> Self {
        PauliString { x_mask: (1 << j) | (1 << k), ..Self::identity(coeff) }
    }

    pub fn x(j: usize, coeff: f64) -> Self {
        PauliString { x_mask: 1 << j, ..Self::identity(coeff) }
    }

    pub fn z(j: usize, coeff: f64) -> Self {
        PauliString { z_mask: 1 << j, ..Self::identity(coeff) }
    }

    pub fn nn(j: usize, k: usize, coeff: f64) -> Self {
        PauliString { n_mask: (1 << j) | (1 << k), ..Self::identity(coeff) }
    }

    /// `(m', c)` with `O|m⟩ = c|m'⟩`; diagonal factors act before the flips.
    pub fn act(&self, m: u64) -> (u64, f64) {
        let mut c = self.coeff;
        if m & self.n_mask != self.n_mask {
            c = 0.0;
        }
        if (m & self.z_mask).count_ones() % 2 == 1 {
            c = -c;
        }
        (m ^ self.x_mask, c)
    }
}

impl PauliSum {
    pub fn single(term: PauliString) -> Self {
        PauliSum { terms: vec![term] }
    }

    /// `(1/N) Σ_<jk> X_j X_k` over the lattice's nearest-neighbor bonds.
    pub fn o_xx(lat: &LatticeSpec) -> Self {
        let w = 1.0 / lat.n_sites() as f64;
        PauliSum { terms: lat.nn_bonds().into_iter().map(|(j, k)| PauliString::xx(j, k, w)).collect() }
    }

    pub fn act(&self, m: u64, out: &mut Vec<(u64, f64)>) {
        out.clear();
        for t in &self.terms {
            let (y, c) = t.act(m);
            if c == 0.0 {
                continue;
            }
            match out.iter_mut().find(|e| e.0 == y) {
                Some(e) => e.1 += c,
                None => out.push((y, c)),
            }
        }
        out.retain(|e| e.1 != 0.0);
    }
}

/// Operators given by their action on configurations.
pub trait ConfigOperator: Sync {
    fn act_on(&self, m: u64, out: &mut Vec<(u64, f64)>);
}

impl ConfigOperator for Observable {
    fn act_on(&self, m: u64, out: &mut Vec<(u64, f64)>) {
        self.act(m, out)
    }
}

impl ConfigOperator for PauliSum {
    fn act_on(&self, m: u64, out: &mut Vec<(u64, f64)>) {
        self.act(m, out)
    }
}
