use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::output_grid;
use crate::potential::PolynomialPotential;

/// Uniform periodic grid on [−L, L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
    pub dt: f64,
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Largest representable momentum ħπ/Δx.
    pub fn nyquist_momentum(&self, hbar: f64) -> f64 {
        hbar * std::f64::consts::PI / self.dx()
    }

    /// Box of 2.5 turning points, time step 10⁻⁵ of a period, and the
    /// smallest power of two ≥ 4096 points whose Nyquist momentum is at least
    /// 1.5 p_max.
    pub fn for_orbit(q_max: f64, p_max: f64, hbar: f64, period: f64) -> Self {
        let half_width = 2.5 * q_max;
        let mut points = 4096;
        while hbar * std::f64::consts::PI * points as f64 / (2.0 * half_width) < 1.5 * p_max {
            points *= 2;
        }
        Self { half_width, points, dt: 1e-5 * period }
    }
}

/// ψ ∝ exp(−(x−q₀)²/(2w²) + ip₀x/ħ): position variance w²/2, momentum
/// variance ħ²/(2w²), the same convention as [`crate::gaussian_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavePacket {
    pub q0: f64,
    pub p0: f64,
    pub width2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSample {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    /// G^{0,n}, index n = 0..=4.
    pub position: [f64; 5],
    /// G^{m,0}, index m = 0..=4.
    pub momentum: [f64; 5],
    pub g11: f64,
    pub energy: f64,
    pub norm: f64,
    /// Probability in the outer sixteenth of the box on either side.
    pub boundary: f64,
}

#[derive(Debug, Clone)]
pub struct GridSeries {
    pub spec: GridSpec,
    pub hbar: f64,
    pub samples: Vec<GridSample>,
}

struct Propagator {
    x: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    dx: f64,
    hbar: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    fn new(spec: &GridSpec, pot: &PolynomialPotential, hbar: f64) -> Self {
        let m = spec.points;
        let dx = spec.dx();
        let x: Vec<f64> = (0..m).map(|j| -spec.half_width + j as f64 * dx).collect();
        let dk = std::f64::consts::PI / spec.half_width;
        let k: Vec<f64> = (0..m).map(|j| if j < m / 2 { j as f64 } else { j as f64 - m as f64 } * dk).collect();
        let v = x.iter().map(|&x| pot.value(x)).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        Self { x, k, v, dx, hbar, fwd, inv, scratch }
    }

    fn forward(&mut self, psi: &mut [Complex64]) {
        self.fwd.process_with_scratch(psi, &mut self.scratch);
    }

    fn inverse(&mut self, psi: &mut [Complex64]) {
        self.inv.process_with_scratch(psi, &mut self.scratch);
        let s = 1.0 / psi.len() as f64;
        psi.iter_mut().for_each(|z| *z *= s);
    }

    fn observe(&mut self, t: f64, psi: &[Complex64]) -> GridSample {
        let m = psi.len();
        let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let norm = rho.iter().sum::<f64>() * self.dx;
        let q = rho.iter().zip(&self.x).map(|(r, x)| r * x).sum::<f64>() * self.dx / norm;
        let mut position = [0.0; 5];
        for (r, x) in rho.iter().zip(&self.x) {
            let d = x - q;
            let mut pw = 1.0;
            for g in position.iter_mut() {
                *g += r * pw;
                pw *= d;
            }
        }
        position.iter_mut().for_each(|g| *g *= self.dx / norm);
        let edge = m / 16;
        let boundary = (rho[..edge].iter().sum::<f64>() + rho[m - edge..].iter().sum::<f64>()) * self.dx / norm;
        let pot = rho.iter().zip(&self.v).map(|(r, v)| r * v).sum::<f64>() * self.dx / norm;

        let mut phi = psi.to_vec();
        self.forward(&mut phi);
        let w: Vec<f64> = phi.iter().map(|z| z.norm_sqr()).collect();
        let wn: f64 = w.iter().sum();
        let h = self.hbar;
        let p = w.iter().zip(&self.k).map(|(w, k)| w * h * k).sum::<f64>() / wn;
        let mut momentum = [0.0; 5];
        for (w, k) in w.iter().zip(&self.k) {
            let d = h * k - p;
            let mut pw = 1.0;
            for g in momentum.iter_mut() {
                *g += w * pw;
                pw *= d;
            }
        }
        momentum.iter_mut().for_each(|g| *g /= wn);
        // Re⟨(x − q)(p̂ − p)⟩ is the Weyl-symmetrized cross moment
        for (z, k) in phi.iter_mut().zip(&self.k) {
            *z *= h * k;
        }
        self.inverse(&mut phi);
        let g11 = psi
            .iter()
            .zip(&phi)
            .zip(&self.x)
            .map(|((a, b), x)| (a.conj() * (b - a * p)).re * (x - q))
            .sum::<f64>()
            * self.dx
            / norm;
        let energy = (momentum[2] + p * p) / 2.0 + pot;
        GridSample { t, q, p, position, momentum, g11, energy, norm, boundary }
    }
}

/// Split-operator (Strang) propagation of a Gaussian packet.
pub fn schrodinger_grid(
    spec: &GridSpec,
    v: &PolynomialPotential,
    packet: &WavePacket,
    hbar: f64,
    t_end: f64,
    dt_out: f64,
) -> Result<GridSeries> {
    if !spec.points.is_power_of_two() || spec.points < 16 {
        return Err(Error::InvalidArgument(format!("{} grid points, need a power of two ≥ 16", spec.points)));
    }
    if !(hbar > 0.0 && spec.dt > 0.0 && spec.half_width > 0.0 && t_end > 0.0 && dt_out > 0.0 && packet.width2 > 0.0) {
        return Err(Error::InvalidArgument("non-positive grid, time or width parameter".into()));
    }
    let mut prop = Propagator::new(spec, v, hbar);
    let mut psi: Vec<Complex64> = prop
        .x
        .iter()
        .map(|&x| {
            let d = x - packet.q0;
            Complex64::from_polar((-d * d / (2.0 * packet.width2)).exp(), packet.p0 * x / hbar)
        })
        .collect();
    let n0 = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * prop.dx).sqrt();
    psi.iter_mut().for_each(|z| *z /= n0);

    let grid = output_grid(t_end, dt_out);
    let sub = (dt_out / spec.dt).round().max(1.0) as usize;
    let dt = dt_out / sub as f64;
    let half_v: Vec<Complex64> = prop.v.iter().map(|v| Complex64::from_polar(1.0, -v * dt / (2.0 * hbar))).collect();
    let full_v: Vec<Complex64> = half_v.iter().map(|z| z * z).collect();
    let kin: Vec<Complex64> = prop.k.iter().map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / 2.0)).collect();

    let mut samples = Vec::with_capacity(grid.len());
    samples.push(prop.observe(0.0, &psi));
    for &t in &grid[1..] {
        for s in 0..sub {
            let pot = if s == 0 { &half_v } else { &full_v };
            psi.iter_mut().zip(pot).for_each(|(z, f)| *z *= f);
            prop.forward(&mut psi);
            psi.iter_mut().zip(&kin).for_each(|(z, f)| *z *= f);
            prop.inverse(&mut psi);
        }
        psi.iter_mut().zip(&half_v).for_each(|(z, f)| *z *= f);
        let obs = prop.observe(t, &psi);
        if (obs.norm - 1.0).abs() > 1e-10 * t.max(1.0) {
            return Err(Error::Numerical(format!("norm drifted to {} at t = {t}", obs.norm)));
        }
        if obs.boundary > 1e-12 {
            return Err(Error::Numerical(format!("probability {:.3e} at the box edge at t = {t}", obs.boundary)));
        }
        samples.push(obs);
    }
    Ok(GridSeries { spec: *spec, hbar, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_ground_state_is_stationary() {
        let h = 0.5;
        let v = PolynomialPotential::harmonic(0.0, 1.0);
        let spec = GridSpec { half_width: 8.0, points: 256, dt: 1e-3 };
        let pk = WavePacket { q0: 0.0, p0: 0.0, width2: h };
        let s = schrodinger_grid(&spec, &v, &pk, h, 2.0, 0.5).unwrap();
        for o in &s.samples {
            // the splitting error of the step is O(dt²)
            assert!((o.energy - h / 2.0).abs() < 1e-12, "{}", o.energy);
            assert!((o.position[2] - h / 2.0).abs() < 1e-7, "{}", o.position[2] - h / 2.0);
            assert!((o.momentum[2] - h / 2.0).abs() < 1e-7);
            assert!(o.g11.abs() < 1e-7 && o.q.abs() < 1e-12);
        }
    }

    #[test]
    fn free_spreading() {
        let h = 0.1;
        let v = PolynomialPotential::free();
        let spec = GridSpec { half_width: 20.0, points: 1024, dt: 1e-3 };
        let pk = WavePacket { q0: -1.0, p0: 0.5, width2: 0.2 };
        let s = schrodinger_grid(&spec, &v, &pk, h, 2.0, 1.0).unwrap();
        let (g02, g20) = (0.1, h * h / 0.4);
        for o in &s.samples {
            assert!((o.position[2] - (g02 + o.t * o.t * g20)).abs() < 1e-12, "{}", o.position[2]);
            assert!((o.q - (-1.0 + 0.5 * o.t)).abs() < 1e-12);
            assert!((o.g11 - o.t * g20).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grid() {
        let v = PolynomialPotential::free();
        let pk = WavePacket { q0: 0.0, p0: 0.0, width2: 1.0 };
        let spec = GridSpec { half_width: 1.0, points: 100, dt: 1e-3 };
        assert!(schrodinger_grid(&spec, &v, &pk, 1.0, 1.0, 0.1).is_err());
        // packet wider than the box leaks to the edge
        let spec = GridSpec { half_width: 2.0, points: 64, dt: 1e-2 };
        assert!(schrodinger_grid(&spec, &v, &pk, 1.0, 1.0, 0.5).is_err());
    }
}
