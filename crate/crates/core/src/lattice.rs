//! Atom geometries, positional disorder and the pairwise van der Waals
//! interaction matrix.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::hamiltonian::QuenchParams;
use crate::{Error, Result};

/// Van der Waals coefficient, rad·μm⁶/μs.
pub const C6_DEFAULT: f64 = 2.0 * PI * 862_690.0;
/// Rabi frequency used by default, rad/μs.
pub const OMEGA_DEFAULT: f64 = 2.0 * PI * 2.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Ring1d,
    FlattenedRect1d,
    Square2d,
}

impl GeometryKind {
    pub fn is_1d(self) -> bool {
        !matches!(self, GeometryKind::Square2d)
    }

    pub fn label(self) -> &'static str {
        match self {
            GeometryKind::Ring1d => "ring1d",
            GeometryKind::FlattenedRect1d => "flattened_rect_1d",
            GeometryKind::Square2d => "square2d",
        }
    }
}

/// Atom positions plus the connectivity metadata needed to define
/// nearest-neighbor bonds and islands.
///
/// Site `j` is `positions[j]` and maps to bit `j` of a basis configuration.
/// For the 1D kinds the loop visits sites in `chain_order`; for `square2d`
/// sites are numbered row-major, `j = row * nx + col`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub kind: GeometryKind,
    /// Lattice spacing `a` in μm.
    pub spacing: f64,
    pub positions: Vec<[f64; 2]>,
    pub chain_order: Option<Vec<usize>>,
    /// `(nx, ny)` for `square2d`.
    pub dims: Option<(usize, usize)>,
}

/// Nearest-neighbor adjacency used for clustering on a lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjacency {
    /// Consecutive sites along the 1D loop.
    Chain,
    /// Horizontal and vertical grid neighbors.
    Xy,
    /// Grid neighbors including diagonals.
    Xyd,
}

pub fn build_ring(n: usize, a: f64) -> Result<LatticeSpec> {
    if n < 3 {
        return Err(Error::InvalidGeometry(format!("ring needs at least 3 sites, got {n}")));
    }
    check_spacing(a)?;
    // chord between neighbors equals a
    let radius = a / (2.0 * (PI / n as f64).sin());
    let positions = (0..n)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / n as f64;
            [radius * phi.cos(), radius * phi.sin()]
        })
        .collect();
    Ok(LatticeSpec {
        kind: GeometryKind::Ring1d,
        spacing: a,
        positions,
        chain_order: Some((0..n).collect()),
        dims: None,
    })
}

/// Closed loop on an axis-aligned rectangle whose four corners are cut by a
/// single 45° step of length `a`.
///
/// With `h` horizontal and `v` vertical unit steps per side the loop has
/// `N = 2h + 2v + 4` sites; the sides are chosen as equal as possible.
pub fn build_flattened_rect(n: usize, a: f64) -> Result<LatticeSpec> {
    check_spacing(a)?;
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGeometry(format!(
            "flattened rectangle needs an even site count of at least 8, got {n}"
        )));
    }
    let half = (n - 4) / 2;
    let h = half.div_ceil(2);
    let v = half - h;
    let d = a / 2f64.sqrt();
    let mut steps: Vec<[f64; 2]> = Vec::with_capacity(n);
    steps.extend(std::iter::repeat_n([a, 0.0], h));
    steps.push([d, d]);
    steps.extend(std::iter::repeat_n([0.0, a], v));
    steps.push([-d, d]);
    steps.extend(std::iter::repeat_n([-a, 0.0], h));
    steps.push([-d, -d]);
    steps.extend(std::iter::repeat_n([0.0, -a], v));
    steps.push([d, -d]);
    debug_assert_eq!(steps.len(), n);

    let mut positions = Vec::with_capacity(n);
    let mut p = [0.0, 0.0];
    for s in &steps[..n] {
        positions.push(p);
        p = [p[0] + s[0], p[1] + s[1]];
    }
    Ok(LatticeSpec {
        kind: GeometryKind::FlattenedRect1d,
        spacing: a,
        positions,
        chain_order: Some((0..n).collect()),
        dims: None,
    })
}

pub fn build_square(nx: usize, ny: usize, a: f64) -> Result<LatticeSpec> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidGeometry(format!("square lattice needs nx, ny >= 2, got {nx}x{ny}")));
    }
    check_spacing(a)?;
    let positions = (0..ny)
        .flat_map(|row| (0..nx).map(move |col| [col as f64 * a, row as f64 * a]))
        .collect();
    Ok(LatticeSpec {
        kind: GeometryKind::Square2d,
        spacing: a,
        positions,
        chain_order: None,
        dims: Some((nx, ny)),
    })
}

fn check_spacing(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(format!("spacing must be positive, got {a}")))
    }
}

/// Shift every coordinate by an independent Gaussian draw with standard
/// deviation `sigma` (μm). Connectivity metadata is kept.
pub fn apply_disorder(lat: &LatticeSpec, sigma: f64, seed: u64) -> Result<LatticeSpec> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("disorder sigma must be >= 0, got {sigma}")));
    }
    let mut out = lat.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in &mut out.positions {
        p[0] += normal.sample(&mut rng);
        p[1] += normal.sample(&mut rng);
    }
    Ok(out)
}

impl LatticeSpec {
    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    pub fn is_1d(&self) -> bool {
        self.kind.is_1d()
    }

    pub fn distance(&self, j: usize, k: usize) -> f64 {
        let (p, q) = (self.positions[j], self.positions[k]);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    /// Loop order for 1D kinds; identity otherwise.
    pub fn order(&self) -> Vec<usize> {
        self.chain_order.clone().unwrap_or_else(|| (0..self.n_sites()).collect())
    }

    /// Nearest-neighbor bonds `(j, k)` with `j < k`: consecutive loop sites in
    /// 1D, horizontal and vertical grid pairs in 2D.
    pub fn nn_bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds = Vec::new();
        match self.kind {
            GeometryKind::Square2d => {
                let (nx, ny) = self.dims.expect("square2d lattice without dims");
                for row in 0..ny {
                    for col in 0..nx {
                        let j = row * nx + col;
                        if col + 1 < nx {
                            bonds.push((j, j + 1));
                        }
                        if row + 1 < ny {
                            bonds.push((j, j + nx));
                        }
                    }
                }
            }
            _ => {
                let order = self.order();
                let n = order.len();
                for p in 0..n {
                    let (j, k) = (order[p], order[(p + 1) % n]);
                    bonds.push((j.min(k), j.max(k)));
                }
            }
        }
        bonds
    }

    /// Diagonal (second-neighbor) bonds of the square lattice; empty in 1D.
    pub fn diagonal_bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds = Vec::new();
        if let (GeometryKind::Square2d, Some((nx, ny))) = (self.kind, self.dims) {
            for row in 0..ny.saturating_sub(1) {
                for col in 0..nx {
                    let j = row * nx + col;
                    if col + 1 < nx {
                        bonds.push((j, j + nx + 1));
                    }
                    if col > 0 {
                        bonds.push((j, j + nx - 1));
                    }
                }
            }
        }
        bonds
    }

    /// Neighbor lists under the requested adjacency.
    pub fn neighbors(&self, adjacency: Adjacency) -> Result<Vec<Vec<usize>>> {
        let bonds = match (adjacency, self.is_1d()) {
            (Adjacency::Chain, true) => self.nn_bonds(),
            (Adjacency::Xy, false) => self.nn_bonds(),
            (Adjacency::Xyd, false) => {
                let mut b = self.nn_bonds();
                b.extend(self.diagonal_bonds());
                b
            }
            (adj, _) => {
                return Err(Error::UnsupportedBasis(format!(
                    "{adj:?} adjacency is not defined on a {} lattice",
                    self.kind.label()
                )))
            }
        };
        let mut nbrs = vec![Vec::new(); self.n_sites()];
        for (j, k) in bonds {
            nbrs[j].push(k);
            nbrs[k].push(j);
        }
        for l in &mut nbrs {
            l.sort_unstable();
            l.dedup();
        }
        Ok(nbrs)
    }

    /// Default adjacency of the geometry (chain in 1D, xy in 2D).
    pub fn default_adjacency(&self) -> Adjacency {
        if self.is_1d() {
            Adjacency::Chain
        } else {
            Adjacency::Xy
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = LatticeFile {
            geometry_kind: self.kind,
            a_um: self.spacing,
            positions: self.positions.clone(),
            chain_order: self.chain_order.clone(),
            dims: self.dims.map(|(x, y)| [x, y]),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parse and validate the JSON lattice exchange format.
    pub fn from_json(text: &str) -> Result<LatticeSpec> {
        let file: LatticeFile = serde_json::from_str(text)?;
        file.into_spec()
    }
}

/// On-disk lattice format:
/// `{geometry_kind, a_um, positions: [[x,y],…], chain_order?, dims?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeFile {
    pub geometry_kind: GeometryKind,
    pub a_um: f64,
    pub positions: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_order: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 2]>,
}

impl LatticeFile {
    pub fn into_spec(self) -> Result<LatticeSpec> {
        check_spacing(self.a_um)?;
        let n = self.positions.len();
        if n == 0 {
            return Err(Error::InvalidGeometry("no positions".into()));
        }
        if self.positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite coordinate".into()));
        }
        let (chain_order, dims) = match self.geometry_kind {
            GeometryKind::Square2d => {
                if self.chain_order.is_some() {
                    return Err(Error::InvalidGeometry("square2d lattices carry no chain_order".into()));
                }
                let [nx, ny] = self
                    .dims
                    .ok_or_else(|| Error::InvalidGeometry("square2d lattice needs dims".into()))?;
                if nx < 2 || ny < 2 || nx.checked_mul(ny) != Some(n) {
                    return Err(Error::InvalidGeometry(format!("dims {nx}x{ny} do not match {n} sites")));
                }
                (None, Some((nx, ny)))
            }
            _ => {
                if n < 3 {
                    return Err(Error::InvalidGeometry(format!("1D loop needs at least 3 sites, got {n}")));
                }
                if self.dims.is_some() {
                    return Err(Error::InvalidGeometry("1D lattices carry no dims".into()));
                }
                let order = self.chain_order.unwrap_or_else(|| (0..n).collect());
                let mut seen = vec![false; n];
                if order.len() != n {
                    return Err(Error::InvalidGeometry("chain_order is not a permutation".into()));
                }
                for &j in &order {
                    if j >= n || std::mem::replace(&mut seen[j], true) {
                        return Err(Error::InvalidGeometry("chain_order is not a permutation".into()));
                    }
                }
                (Some(order), None)
            }
        };
        Ok(LatticeSpec {
            kind: self.geometry_kind,
            spacing: self.a_um,
            positions: self.positions,
            chain_order,
            dims,
        })
    }
}

/// Symmetric pairwise interaction energies `V_jk = C6 / r_jk^6` (rad/μs).
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMatrix {
    n: usize,
    values: Vec<f64>,
    pub cutoff_radius: Option<f64>,
}

impl InteractionMatrix {
    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n + k]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    /// Matrix with only the listed bonds set to `v`.
    pub fn from_bonds(n: usize, bonds: &[(usize, usize)], v: f64) -> Self {
        let mut values = vec![0.0; n * n];
        for &(j, k) in bonds {
            values[j * n + k] = v;
            values[k * n + j] = v;
        }
        InteractionMatrix { n, values, cutoff_radius: None }
    }

    /// Copy with `V_jk = V_kj = v`.
    pub fn with_entry(mut self, j: usize, k: usize, v: f64) -> Self {
        self.values[j * self.n + k] = v;
        self.values[k * self.n + j] = v;
        self
    }
}

pub fn interaction_matrix(lat: &LatticeSpec, params: &QuenchParams) -> Result<InteractionMatrix> {
    interaction_matrix_with_cutoff(lat, params, None)
}

/// Pairs farther apart than `cutoff` (μm) are dropped.
pub fn interaction_matrix_with_cutoff(
    lat: &LatticeSpec,
    params: &QuenchParams,
    cutoff: Option<f64>,
) -> Result<InteractionMatrix> {
    let n = lat.n_sites();
    let mut values = vec![0.0; n * n];
    for j in 0..n {
        for k in (j + 1)..n {
            let r = lat.distance(j, k);
            if r <= 1e-9 {
                return Err(Error::SingularGeometry(j, k));
            }
            if cutoff.is_some_and(|rc| r > rc) {
                continue;
            }
            let v = params.c6 / r.powi(6);
            values[j * n + k] = v;
            values[k * n + j] = v;
        }
    }
    Ok(InteractionMatrix { n, values, cutoff_radius: cutoff })
}
