//! Mean-field (zero-momentum) magnetization dynamics and the
//! Stoner–Wohlfarth astroid.
//!
//! `dM/dt = B × M` with `B = (Ω, 0, −Δ + ½K(1 + M_z))` and
//! `K = Σ_i z_i V_i`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Norm drift beyond this aborts integration.
pub const MAX_NORM_DRIFT: f64 = 1e-6;
/// Target norm drift used by [`recommended_dt`].
pub const TARGET_NORM_DRIFT: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalParams {
    pub omega: f64,
    pub delta: f64,
    /// `(z_i, V_i)`: coordination number and coupling of each shell.
    pub shells: Vec<(u32, f64)>,
}

impl ClassicalParams {
    /// Square lattice with shells at `a`, `√2 a`, `2a`, ... all with `z = 4`.
    pub fn square2d(omega: f64, delta: f64, v1: f64, n_shells: usize) -> Self {
        const RATIOS: [f64; 3] = [1.0, 1.0 / 8.0, 1.0 / 64.0];
        let shells = RATIOS.iter().take(n_shells.min(3)).map(|r| (4, v1 * r)).collect();
        ClassicalParams { omega, delta, shells }
    }

    /// Chain with shells at `i·a`, `z = 2`, `V_i = V1 / i⁶`.
    pub fn ring(omega: f64, delta: f64, v1: f64, n_shells: usize) -> Self {
        let shells = (1..=n_shells).map(|i| (2, v1 / (i as f64).powi(6))).collect();
        ClassicalParams { omega, delta, shells }
    }

    /// `K = Σ z_i V_i`.
    pub fn k_total(&self) -> f64 {
        self.shells.iter().map(|&(z, v)| z as f64 * v).sum()
    }

    pub fn field(&self, m: &[f64; 3]) -> [f64; 3] {
        [self.omega, 0.0, -self.delta + 0.5 * self.k_total() * (1.0 + m[2])]
    }

    /// Upper bound on `|B|` over the unit sphere.
    pub fn max_field(&self) -> f64 {
        let bz = self.delta.abs() + self.k_total().abs();
        self.omega.hypot(bz)
    }

    /// Conserved energy `Ω M_x − Δ M_z + (K/4)(1 + M_z)²`.
    pub fn energy(&self, m: &[f64; 3]) -> f64 {
        self.omega * m[0] - self.delta * m[2] + 0.25 * self.k_total() * (1.0 + m[2]).powi(2)
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn axpy(m: &[f64; 3], h: f64, k: &[f64; 3]) -> [f64; 3] {
    [m[0] + h * k[0], m[1] + h * k[1], m[2] + h * k[2]]
}

fn rhs(p: &ClassicalParams, m: &[f64; 3]) -> [f64; 3] {
    cross(p.field(m), *m)
}

fn rk4_step(p: &ClassicalParams, m: &[f64; 3], dt: f64) -> [f64; 3] {
    let k1 = rhs(p, m);
    let k2 = rhs(p, &axpy(m, 0.5 * dt, &k1));
    let k3 = rhs(p, &axpy(m, 0.5 * dt, &k2));
    let k4 = rhs(p, &axpy(m, dt, &k3));
    std::array::from_fn(|i| m[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn norm(m: &[f64; 3]) -> f64 {
    (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt()
}

/// Largest step, capped at `1e-3` μs, for which the RK4 norm error
/// `~(|B| dt)⁶/144` per step accumulates to at most `1e-9` over `t_final`.
pub fn recommended_dt(p: &ClassicalParams, t_final: f64) -> f64 {
    let b = p.max_field();
    if b == 0.0 || t_final <= 0.0 {
        return 1e-3;
    }
    let dt = (TARGET_NORM_DRIFT * 144.0 / (t_final * b.powi(6))).powf(0.2);
    dt.min(1e-3)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub m: Vec<[f64; 3]>,
    /// Largest `| |M| − 1 |` seen at any step.
    pub max_norm_drift: f64,
}

/// Time-averaged classical observables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassicalObservables {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub sx2: f64,
    pub sy2: f64,
    pub sz2: f64,
    /// `2⁻⁵ (1 − S_z)⁴ S_z`.
    pub island1: f64,
}

impl ClassicalObservables {
    fn sample(m: &[f64; 3]) -> [f64; 7] {
        [
            m[0],
            m[1],
            m[2],
            m[0] * m[0],
            m[1] * m[1],
            m[2] * m[2],
            (1.0 - m[2]).powi(4) * m[2] / 32.0,
        ]
    }

    fn from_array(a: [f64; 7]) -> Self {
        ClassicalObservables { sx: a[0], sy: a[1], sz: a[2], sx2: a[3], sy2: a[4], sz2: a[5], island1: a[6] }
    }
}

/// Fixed-step RK4 from `m0`, keeping every `stride`-th step.
pub fn integrate_magnetization(
    p: &ClassicalParams,
    m0: [f64; 3],
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<ClassicalTrajectory> {
    let mut times = vec![0.0];
    let mut ms = vec![m0];
    let stride = stride.max(1);
    let drift = run(p, m0, t_final, dt, |step, t, m| {
        if step % stride == 0 {
            times.push(t);
            ms.push(*m);
        }
    })?;
    Ok(ClassicalTrajectory { times, m: ms, max_norm_drift: drift })
}

/// Integrate and visit every step; returns the maximal norm drift.
fn run(
    p: &ClassicalParams,
    m0: [f64; 3],
    t_final: f64,
    dt: f64,
    mut visit: impl FnMut(usize, f64, &[f64; 3]),
) -> Result<f64> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad integration grid t_final={t_final} dt={dt}")));
    }
    let n0 = norm(&m0);
    if (n0 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("initial magnetization must be a unit vector, |M|={n0}")));
    }
    let steps = (t_final / dt).round() as usize;
    let mut m = m0;
    let mut max_drift: f64 = 0.0;
    for step in 1..=steps {
        m = rk4_step(p, &m, dt);
        let drift = (norm(&m) - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > MAX_NORM_DRIFT {
            return Err(Error::StepSize { drift, limit: MAX_NORM_DRIFT });
        }
        visit(step, step as f64 * dt, &m);
    }
    Ok(max_drift)
}

/// Trapezoidal time averages over a recorded trajectory.
pub fn classical_observables(traj: &ClassicalTrajectory) -> ClassicalObservables {
    let n = traj.times.len();
    if n < 2 {
        return ClassicalObservables::from_array(traj.m.first().map(ClassicalObservables::sample).unwrap_or_default());
    }
    let mut acc = [0.0; 7];
    for w in 0..n - 1 {
        let h = traj.times[w + 1] - traj.times[w];
        let (a, b) = (ClassicalObservables::sample(&traj.m[w]), ClassicalObservables::sample(&traj.m[w + 1]));
        for i in 0..7 {
            acc[i] += 0.5 * h * (a[i] + b[i]);
        }
    }
    let span = traj.times[n - 1] - traj.times[0];
    ClassicalObservables::from_array(acc.map(|v| v / span))
}

/// Long-time averages from `−ẑ` without storing the trajectory. `dt = None`
/// picks [`recommended_dt`].
pub fn long_time_observables(p: &ClassicalParams, t_final: f64, dt: Option<f64>) -> Result<(ClassicalObservables, f64)> {
    let dt = dt.unwrap_or_else(|| recommended_dt(p, t_final));
    let m0 = [0.0, 0.0, -1.0];
    let mut acc = [0.0; 7];
    let mut prev = ClassicalObservables::sample(&m0);
    let drift = run(p, m0, t_final, dt, |_, _, m| {
        let cur = ClassicalObservables::sample(m);
        for i in 0..7 {
            acc[i] += 0.5 * dt * (prev[i] + cur[i]);
        }
        prev = cur;
    })?;
    let span = (t_final / dt).round() * dt;
    if span == 0.0 {
        return Ok((ClassicalObservables::from_array(prev), drift));
    }
    Ok((ClassicalObservables::from_array(acc.map(|v| v / span)), drift))
}

/// Detunings where the astroid `|Ω|^{2/3} + |Δ − K|^{2/3} = |K|^{2/3}` is
/// crossed: `Δ = K ∓ (K^{2/3} − Ω^{2/3})^{3/2}`. `None` when `|K| < |Ω|`
/// (crossover regime).
pub fn astroid_boundary(p: &ClassicalParams) -> Option<(f64, f64)> {
    let k = p.k_total();
    let (ka, oa) = (k.abs(), p.omega.abs());
    if ka < oa && (oa - ka) > 1e-12 * oa {
        return None;
    }
    let w = (ka.powf(2.0 / 3.0) - oa.powf(2.0 / 3.0)).max(0.0).powf(1.5);
    Some((k - w, k + w))
}

/// Residual of the astroid equation at `delta`.
pub fn astroid_residual(p: &ClassicalParams, delta: f64) -> f64 {
    let k = p.k_total();
    p.omega.abs().powf(2.0 / 3.0) + (delta - k).abs().powf(2.0 / 3.0) - k.abs().powf(2.0 / 3.0)
}

/// Large-`K` estimate of the lower critical detuning, `(3/2) K^{1/3} Ω^{2/3}`.
pub fn approx_critical_detuning(p: &ClassicalParams) -> f64 {
    1.5 * p.k_total().cbrt() * p.omega.abs().powf(2.0 / 3.0)
}

/// Midpoint of the grid interval with the largest `|Δy/Δx|`.
pub fn steepest_change(xs: &[f64], ys: &[f64]) -> Option<f64> {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (0.5 * (x[0] + x[1]), ((y[1] - y[0]) / (x[1] - x[0])).abs()))
        .filter(|(_, s)| s.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, _)| x)
}

/// CSV `delta_over_omega,rb_over_a,Sz2,Sx2,Sy2,island1_classical`.
pub fn classical_csv(rows: &[(f64, f64, ClassicalObservables)]) -> String {
    let mut out = String::from("delta_over_omega,rb_over_a,Sz2,Sx2,Sy2,island1_classical\n");
    for (d, rb, o) in rows {
        out.push_str(&format!("{d:.6},{rb:.6},{},{},{},{}\n", o.sz2, o.sx2, o.sy2, o.island1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn south_pole_is_fixed_without_drive() {
        let p = ClassicalParams { omega: 0.0, delta: 1.3, shells: vec![(4, 10.0)] };
        let tr = integrate_magnetization(&p, [0.0, 0.0, -1.0], 5.0, 1e-3, 100).unwrap();
        assert!(tr.m.iter().all(|m| *m == [0.0, 0.0, -1.0]));
    }

    #[test]
    fn rabi_precession() {
        let p = ClassicalParams { omega: 2.0, delta: 0.0, shells: vec![] };
        let tr = integrate_magnetization(&p, [0.0, 0.0, -1.0], 3.0, 1e-3, 1).unwrap();
        for (t, m) in tr.times.iter().zip(&tr.m) {
            assert!((m[2] + (2.0 * t).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_state_observables() {
        let tr = ClassicalTrajectory { times: vec![0.0, 1.0], m: vec![[0.0, 0.0, -1.0]; 2], max_norm_drift: 0.0 };
        let o = classical_observables(&tr);
        assert_eq!(o.sz2, 1.0);
        assert_eq!(o.island1, -0.5);
    }

    #[test]
    fn huge_step_is_rejected() {
        let p = ClassicalParams { omega: 100.0, delta: 0.0, shells: vec![] };
        assert!(matches!(integrate_magnetization(&p, [0.0, 0.0, -1.0], 1.0, 0.05, 1), Err(Error::StepSize { .. })));
    }

    #[test]
    fn astroid_degenerate_and_crossover() {
        let p = ClassicalParams { omega: 1.0, delta: 0.0, shells: vec![(2, 0.5)] };
        let (lo, hi) = astroid_boundary(&p).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let weak = ClassicalParams { omega: 1.0, delta: 0.0, shells: vec![(2, 0.4)] };
        assert!(astroid_boundary(&weak).is_none());
    }

    #[test]
    fn steepest_change_midpoint() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 0.1, 1.0, 1.1];
        assert_eq!(steepest_change(&xs, &ys), Some(1.5));
    }
}
