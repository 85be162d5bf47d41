//! Comparison metrics between the point trajectory and the classical and
//! quantum hierarchies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{estimate_period, integrate, integrate_point, Trajectory};
use crate::moments::{gaussian_moments, MomentSet, TruncationPolicy};
use crate::potential::PolynomialPotential;

fn same_grid(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0)) {
        return Err(Error::Mismatch(format!("time grids differ ({} vs {} samples)", a.len(), b.len())));
    }
    Ok(())
}

/// Δ(t) = [q_a(t) − q_b(t)]² + [p_a(t) − p_b(t)]².
pub fn delta_n(a: &Trajectory, b: &Trajectory) -> Result<Vec<f64>> {
    same_grid(&a.times, &b.times)?;
    Ok(a.states.iter().zip(&b.states).map(|(x, y)| (x.q - y.q).powi(2) + (x.p - y.p).powi(2)).collect())
}

/// Point trajectory and the two hierarchies on a common grid.
#[derive(Debug, Clone)]
pub struct ComparisonSet {
    pub times: Vec<f64>,
    pub q_class: Vec<f64>,
    pub p_class: Vec<f64>,
    pub q_c: Vec<f64>,
    pub p_c: Vec<f64>,
    pub q_q: Vec<f64>,
    pub p_q: Vec<f64>,
    pub period: f64,
}

impl ComparisonSet {
    pub fn new(point: &Trajectory, classical: &Trajectory, quantum: &Trajectory, period: f64) -> Result<Self> {
        same_grid(&point.times, &classical.times)?;
        same_grid(&point.times, &quantum.times)?;
        if !(period > 0.0) {
            return Err(Error::InvalidArgument(format!("period {period}")));
        }
        Ok(Self {
            times: point.times.clone(),
            q_class: point.q(),
            p_class: point.p(),
            q_c: classical.q(),
            p_c: classical.p(),
            q_q: quantum.q(),
            p_q: quantum.p(),
            period,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// The three aligned runs from a Gaussian state: point, classical and quantum
/// hierarchy at one cutoff, over `periods` periods of the point orbit.
#[derive(Debug, Clone)]
pub struct ComparisonRuns {
    pub point: Trajectory,
    pub classical: Trajectory,
    pub quantum: Trajectory,
    pub period: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn run_comparison(
    v: &PolynomialPotential,
    hbar: f64,
    width2: f64,
    q0: f64,
    p0: f64,
    n_max: usize,
    periods: f64,
    tol: f64,
    samples_per_period: usize,
) -> Result<ComparisonRuns> {
    let period = estimate_period(v, q0, p0)?;
    let t_end = periods * period;
    let dt = period / samples_per_period as f64;
    let mut init = gaussian_moments(width2, hbar, n_max)?;
    init.q = q0;
    init.p = p0;
    let policy = TruncationPolicy::new(n_max)?;
    let quantum = integrate(&init, v, policy, t_end, tol, tol, dt)?;
    let classical = integrate(&init.to_classical(), v, policy, t_end, tol, tol, dt)?;
    let point = integrate_point(q0, p0, v, t_end, tol, tol, dt)?;
    Ok(ComparisonRuns { point, classical, quantum, period })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionRow {
    pub t_over_t: f64,
    pub delta1_q: f64,
    pub delta2_q: f64,
    pub delta1_p: f64,
    pub delta2_p: f64,
    pub delta1_sq: f64,
    pub delta2_sq: f64,
    /// Ratio of the maxima of δ₂² and δ₁² over the trailing period; NaN while
    /// δ₁² is below 10⁻³⁰.
    pub gamma_running: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub rows: Vec<DecompositionRow>,
    /// max δ₂² / max δ₁² over the final simulated period (the whole run if
    /// it is shorter).
    pub gamma: Option<f64>,
    pub max_abs_delta_q: f64,
    pub max_abs_delta_p: f64,
    pub max_delta_sq: f64,
}

const GAMMA_FLOOR: f64 = 1e-30;

/// δ₁x = x_c − x_class (distributional), δ₂x = x_q − x_c (purely quantum).
pub fn decompose(cmp: &ComparisonSet) -> Decomposition {
    let n = cmp.len();
    let mut rows: Vec<DecompositionRow> = (0..n)
        .map(|i| {
            let d1q = cmp.q_c[i] - cmp.q_class[i];
            let d2q = cmp.q_q[i] - cmp.q_c[i];
            let d1p = cmp.p_c[i] - cmp.p_class[i];
            let d2p = cmp.p_q[i] - cmp.p_c[i];
            DecompositionRow {
                t_over_t: cmp.times[i] / cmp.period,
                delta1_q: d1q,
                delta2_q: d2q,
                delta1_p: d1p,
                delta2_p: d2p,
                delta1_sq: d1q * d1q + d1p * d1p,
                delta2_sq: d2q * d2q + d2p * d2p,
                gamma_running: f64::NAN,
            }
        })
        .collect();
    let ratio = |lo: usize, hi: usize, rows: &[DecompositionRow]| {
        let m1 = rows[lo..=hi].iter().map(|r| r.delta1_sq).fold(0.0, f64::max);
        let m2 = rows[lo..=hi].iter().map(|r| r.delta2_sq).fold(0.0, f64::max);
        (m1 >= GAMMA_FLOOR).then(|| m2 / m1)
    };
    let mut lo = 0;
    for i in 0..n {
        while cmp.times[i] - cmp.times[lo] > cmp.period * (1.0 + 1e-9) {
            lo += 1;
        }
        rows[i].gamma_running = ratio(lo, i, &rows).unwrap_or(f64::NAN);
    }
    let gamma = if n > 0 { ratio(lo, n - 1, &rows) } else { None };
    let max_abs_delta_q = cmp.q_q.iter().zip(&cmp.q_class).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let max_abs_delta_p = cmp.p_q.iter().zip(&cmp.p_class).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let max_delta_sq = (0..n)
        .map(|i| (cmp.q_q[i] - cmp.q_class[i]).powi(2) + (cmp.p_q[i] - cmp.p_class[i]).powi(2))
        .fold(0.0, f64::max);
    Decomposition { rows, gamma, max_abs_delta_q, max_abs_delta_p, max_delta_sq }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitReferences {
    pub q_max: f64,
    pub p_max: f64,
    /// Maximum of p² + q² along the orbit.
    pub r2_max: f64,
    /// False when q² = 1/(4λ) lies outside the orbit and the maximum sits at
    /// an endpoint.
    pub interior_maximum: bool,
}

/// Classical orbit extremes for V = λq⁴ at energy E.
pub fn orbit_references(e: f64, lambda: f64) -> Result<OrbitReferences> {
    if !(e > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("E={e}, λ={lambda}")));
    }
    let q_max = (e / lambda).powf(0.25);
    let p_max = (2.0 * e).sqrt();
    let interior = 1.0 / (4.0 * lambda) <= q_max * q_max;
    let r2_max = if interior { 2.0 * e + 1.0 / (8.0 * lambda) } else { (2.0 * e).max(q_max * q_max) };
    Ok(OrbitReferences { q_max, p_max, r2_max, interior_maximum: interior })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    /// Lag in [0, T/2] maximizing |corr(δ₁x(t), δ₂x(t+τ))|, in periods.
    pub lag_q: f64,
    pub lag_p: f64,
    /// Same for r² = q² + p².
    pub lag_r2: f64,
    /// Mean number of extrema per half period.
    pub critical_points_delta1_q: f64,
    pub critical_points_delta2_q: f64,
    pub critical_points_delta1_p: f64,
    pub critical_points_delta2_p: f64,
    /// Whether all four deltas vanish simultaneously after the first quarter
    /// period (relative to their maxima, at 10⁻³).
    pub common_zero: bool,
}

fn best_lag(x: &[f64], y: &[f64], max_shift: usize) -> usize {
    let n = x.len();
    let mut best = (0, f64::NEG_INFINITY);
    for s in 0..=max_shift.min(n.saturating_sub(2)) {
        let m = n - s;
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for i in 0..m {
            xy += x[i] * y[i + s];
            xx += x[i] * x[i];
            yy += y[i + s] * y[i + s];
        }
        let c = if xx > 0.0 && yy > 0.0 { (xy / (xx * yy).sqrt()).abs() } else { 0.0 };
        if c > best.1 {
            best = (s, c);
        }
    }
    best.0
}

fn extrema_per_half_period(x: &[f64], samples_per_half: f64) -> f64 {
    let d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let count = d.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    count as f64 / ((x.len() - 1) as f64 / samples_per_half)
}

pub fn phase_structure(cmp: &ComparisonSet) -> Result<PhaseReport> {
    let n = cmp.len();
    if n < 3 || cmp.times[n - 1] < 2.0 * cmp.period * (1.0 - 1e-9) {
        return Err(Error::InsufficientData("phase analysis needs two periods".into()));
    }
    let dt = cmp.times[1] - cmp.times[0];
    let half = cmp.period / 2.0 / dt;
    let max_shift = half.round() as usize;
    let d: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            [
                cmp.q_c[i] - cmp.q_class[i],
                cmp.q_q[i] - cmp.q_c[i],
                cmp.p_c[i] - cmp.p_class[i],
                cmp.p_q[i] - cmp.p_c[i],
            ]
        })
        .collect();
    let col = |j: usize| d.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let (d1q, d2q, d1p, d2p) = (col(0), col(1), col(2), col(3));
    let r2 = |q: &[f64], p: &[f64]| q.iter().zip(p).map(|(q, p)| q * q + p * p).collect::<Vec<f64>>();
    let r_class = r2(&cmp.q_class, &cmp.p_class);
    let r_c = r2(&cmp.q_c, &cmp.p_c);
    let r_q = r2(&cmp.q_q, &cmp.p_q);
    let d1r: Vec<f64> = r_c.iter().zip(&r_class).map(|(a, b)| a - b).collect();
    let d2r: Vec<f64> = r_q.iter().zip(&r_c).map(|(a, b)| a - b).collect();
    let lag = |x: &[f64], y: &[f64]| best_lag(x, y, max_shift) as f64 * dt / cmp.period;
    let maxes: Vec<f64> = (0..4).map(|j| d.iter().map(|r| r[j].abs()).fold(0.0, f64::max)).collect();
    // the deltas all start at zero; look only after the first quarter period
    let start = (half / 2.0).ceil() as usize;
    let common_zero = d
        .iter()
        .skip(start)
        .any(|r| r.iter().zip(&maxes).all(|(x, m)| *m == 0.0 || x.abs() < 1e-3 * m));
    Ok(PhaseReport {
        lag_q: lag(&d1q, &d2q),
        lag_p: lag(&d1p, &d2p),
        lag_r2: lag(&d1r, &d2r),
        critical_points_delta1_q: extrema_per_half_period(&d1q, half),
        critical_points_delta2_q: extrema_per_half_period(&d2q, half),
        critical_points_delta1_p: extrema_per_half_period(&d1p, half),
        critical_points_delta2_p: extrema_per_half_period(&d2p, half),
        common_zero,
    })
}

/// Times of strict local maxima of a sampled series.
pub fn local_maxima(times: &[f64], x: &[f64]) -> Vec<f64> {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] > x[i - 1] && x[i] >= x[i + 1]).map(|i| times[i]).collect()
}

/// Times of strict local minima of a sampled series.
pub fn local_minima(times: &[f64], x: &[f64]) -> Vec<f64> {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] < x[i - 1] && x[i] <= x[i + 1]).map(|i| times[i]).collect()
}

/// Moment series G^{a,b}(t) of a run.
pub fn moment_series(states: &[MomentSet], a: usize, b: usize) -> Vec<f64> {
    states.iter().map(|s| s.get(a, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_reference_values() {
        let r = orbit_references(50.0, 1.0).unwrap();
        assert!((r.p_max * r.p_max - 100.0).abs() < 1e-12);
        assert!((r.r2_max - 100.125).abs() < 1e-12);
        assert!((r.q_max - 50f64.powf(0.25)).abs() < 1e-15);
        let big = orbit_references(50.0, 1e9).unwrap();
        assert!((big.r2_max - 100.0).abs() < 1e-6);
        let small = orbit_references(1e-3, 1e-3).unwrap();
        assert!(!small.interior_maximum);
    }

    #[test]
    fn identical_runs_give_zero() {
        let v = PolynomialPotential::quartic(1.0);
        let tr = integrate_point(0.0, 1.0, &v, 1.0, 1e-10, 1e-10, 0.1).unwrap();
        assert!(delta_n(&tr, &tr).unwrap().iter().all(|&d| d == 0.0));
        let other = integrate_point(0.0, 1.0, &v, 2.0, 1e-10, 1e-10, 0.1).unwrap();
        assert!(delta_n(&tr, &other).is_err());
        let cmp = ComparisonSet::new(&tr, &tr, &tr, 1.0).unwrap();
        let d = decompose(&cmp);
        assert!(d.rows.iter().all(|r| r.delta1_sq == 0.0 && r.delta2_sq == 0.0));
        assert_eq!(d.gamma, None);
    }
}
