//! Time integration of the truncated hierarchy.

pub mod dopri;
mod period;

use serde::Serialize;

pub use dopri::{Dopri5Options, StopReason};
pub use period::{period_from_crossings, upward_crossings};

use crate::eom::{state_from_vector, state_vector, CompiledRhs};
use crate::error::{Error, Result};
use crate::hamiltonian::effective_hamiltonian;
use crate::inequalities::{check_even_even, check_heisenberg};
use crate::moments::{Flavor, MomentSet, TruncationPolicy};
use crate::potential::PolynomialPotential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleFlags {
    pub even_even_ok: bool,
    pub heisenberg_ok: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentSet>,
    pub h_eff: Vec<f64>,
    pub flags: Vec<SampleFlags>,
    pub stop: StopReason,
    pub t_reached: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// True for runs of the bare centroid with all moments pinned to zero.
    pub point: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.stop != StopReason::Completed
    }

    pub fn q(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.q).collect()
    }

    pub fn p(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.p).collect()
    }

    pub fn moment(&self, a: usize, b: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.get(a, b)).collect()
    }

    /// max_t |H(t) − H(0)| / |H(0)| (absolute when H(0) = 0).
    pub fn h_eff_drift(&self) -> f64 {
        let Some(&h0) = self.h_eff.first() else { return 0.0 };
        let scale = if h0 == 0.0 { 1.0 } else { h0.abs() };
        self.h_eff.iter().map(|h| (h - h0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn period(&self) -> Option<f64> {
        period_from_crossings(&self.times, &self.q())
    }
}

/// Uniform output grid 0, Δt, 2Δt, … up to t_end (inclusive within rounding).
pub fn output_grid(t_end: f64, dt_out: f64) -> Vec<f64> {
    let n = (t_end / dt_out * (1.0 + 1e-12)).floor() as usize;
    (0..=n).map(|i| (i as f64 * dt_out).min(t_end)).collect()
}

fn check_args(t_end: f64, rtol: f64, atol: f64, dt_out: f64) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end = {t_end}")));
    }
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    if !(dt_out > 0.0) {
        return Err(Error::InvalidArgument(format!("output step {dt_out}")));
    }
    Ok(())
}

pub fn integrate(
    initial: &MomentSet,
    v: &PolynomialPotential,
    policy: TruncationPolicy,
    t_end: f64,
    rtol: f64,
    atol: f64,
    dt_out: f64,
) -> Result<Trajectory> {
    check_args(t_end, rtol, atol, dt_out)?;
    initial.validate()?;
    let start = if initial.n_max == policy.n_max { initial.clone() } else { initial.with_cutoff(policy.n_max)? };
    let rhs = CompiledRhs::for_state(&start, v)?;
    let opts = Dopri5Options { rtol, atol, ..Default::default() };
    Ok(integrate_compiled(&start, &rhs, t_end, &opts, dt_out))
}

/// Integration with a prepared right-hand side.
pub fn integrate_compiled(
    start: &MomentSet,
    rhs: &CompiledRhs,
    t_end: f64,
    opts: &Dopri5Options,
    dt_out: f64,
) -> Trajectory {
    let grid = output_grid(t_end, dt_out);
    let y0 = state_vector(start);
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    let mut h_eff = Vec::with_capacity(grid.len());
    let mut flags = Vec::with_capacity(grid.len());
    let out = dopri::solve(
        |_, y, dy| rhs.eval(y, dy),
        0.0,
        &y0,
        t_end,
        &grid,
        opts,
        |t, y| {
            let s = state_from_vector(start, y);
            times.push(t);
            h_eff.push(effective_hamiltonian(&s, &rhs.potential));
            flags.push(SampleFlags {
                even_even_ok: check_even_even(&s).iter().all(|e| e.margin >= 0.0),
                heisenberg_ok: check_heisenberg(&s).margin >= -1e-12 * (s.get(2, 0) * s.get(0, 2)).abs().max(f64::MIN_POSITIVE),
            });
            states.push(s);
        },
    );
    Trajectory {
        times,
        states,
        h_eff,
        flags,
        stop: out.stop,
        t_reached: out.t_reached,
        accepted_steps: out.accepted,
        rejected_steps: out.rejected,
        point: false,
    }
}

/// The classical point trajectory: Newton's equation with all moments zero.
pub fn integrate_point(
    q0: f64,
    p0: f64,
    v: &PolynomialPotential,
    t_end: f64,
    rtol: f64,
    atol: f64,
    dt_out: f64,
) -> Result<Trajectory> {
    check_args(t_end, rtol, atol, dt_out)?;
    let grid = output_grid(t_end, dt_out);
    let mut template = MomentSet::zeros(Flavor::Classical, 0.0, 2)?;
    let opts = Dopri5Options { rtol, atol, ..Default::default() };
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());
    let mut h_eff = Vec::with_capacity(grid.len());
    let out = dopri::solve(
        |_, y, dy| {
            dy[0] = y[1];
            dy[1] = -v.derivative(1, y[0]);
        },
        0.0,
        &[q0, p0],
        t_end,
        &grid,
        &opts,
        |t, y| {
            template.q = y[0];
            template.p = y[1];
            times.push(t);
            h_eff.push(y[1] * y[1] / 2.0 + v.value(y[0]));
            states.push(template.clone());
        },
    );
    let n = times.len();
    Ok(Trajectory {
        times,
        states,
        h_eff,
        flags: vec![SampleFlags { even_even_ok: true, heisenberg_ok: true }; n],
        stop: out.stop,
        t_reached: out.t_reached,
        accepted_steps: out.accepted,
        rejected_steps: out.rejected,
        point: true,
    })
}

/// Period of the point trajectory from (q0, p0), by upward zero crossings of q.
pub fn estimate_period(v: &PolynomialPotential, q0: f64, p0: f64) -> Result<f64> {
    let mut horizon = 10.0;
    for _ in 0..24 {
        let tr = integrate_point(q0, p0, v, horizon, 1e-12, 1e-12, horizon / 4096.0)?;
        if tr.is_truncated() {
            return Err(Error::Numerical(format!("point trajectory stopped: {:?}", tr.stop)));
        }
        let c = upward_crossings(&tr.times, &tr.q());
        if c.len() >= 3 {
            let rough = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
            let fine = integrate_point(q0, p0, v, 3.2 * rough, 1e-12, 1e-12, rough / 2048.0)?;
            return fine
                .period()
                .ok_or_else(|| Error::Numerical("no oscillation on refined run".into()));
        }
        horizon *= 2.0;
    }
    Err(Error::Numerical("no periodic motion found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::gaussian_moments;

    #[test]
    fn grid_is_uniform() {
        let g = output_grid(1.0, 0.25);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(output_grid(1.0, 0.3).len(), 4);
    }

    #[test]
    fn point_energy_and_turning_point() {
        let v = PolynomialPotential::quartic(1.0);
        let tr = integrate_point(0.0, 10.0, &v, 3.0, 1e-11, 1e-11, 1e-3).unwrap();
        assert!(tr.h_eff_drift() < 1e-9);
        let qmax = tr.q().into_iter().fold(0.0, f64::max);
        assert!((qmax - 50f64.powf(0.25)).abs() < 1e-5, "{qmax}");
    }

    #[test]
    fn uniform_force_momentum_is_linear() {
        let v = PolynomialPotential::linear(0.7);
        let tr = integrate_point(0.0, 1.0, &v, 2.0, 1e-10, 1e-10, 0.1).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!((s.p - (1.0 - 0.7 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_period_matches_quadrature() {
        // T = 4 K q_max / p_max with K = ∫_0^1 du / sqrt(1 - u⁴) = 1.311028777...
        let v = PolynomialPotential::quartic(1.0);
        let t = estimate_period(&v, 0.0, 10.0).unwrap();
        let expect = 4.0 * 1.311_028_777_146_06 * 50f64.powf(0.25) / 10.0;
        assert!((t - expect).abs() < 1e-7, "{t} vs {expect}");
    }

    #[test]
    fn harmonic_conserved_combination() {
        let v = PolynomialPotential::harmonic(0.0, 1.0);
        let mut s = gaussian_moments(0.3, 0.1, 6).unwrap();
        s.q = 1.0;
        s.set(1, 1, 0.01);
        let rtol = 1e-10;
        let tr = integrate(&s, &v, TruncationPolicy { n_max: 6 }, 12.0, rtol, rtol, 0.05).unwrap();
        let c0 = s.get(2, 0) + s.get(0, 2);
        for st in &tr.states {
            assert!((st.get(2, 0) + st.get(0, 2) - c0).abs() < 10.0 * rtol * c0);
        }
        assert_eq!(tr.stop, StopReason::Completed);
    }
}
