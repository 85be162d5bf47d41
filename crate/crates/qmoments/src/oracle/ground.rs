use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{Flavor, MomentSet};
use crate::potential::PolynomialPotential;

/// Dirichlet box [−L, L] with `points` interior nodes on the coarse grid; the
/// fine grid halves the spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundSpec {
    pub half_width: f64,
    pub points: usize,
}

impl GroundSpec {
    /// Box of 12 natural lengths: (ħ²/λ)^{1/6} for the quartic part,
    /// (ħ/ω) ^{1/2} for the quadratic one, whichever is larger.
    pub fn for_potential(v: &PolynomialPotential, hbar: f64) -> Self {
        let mut ell: f64 = 0.0;
        if v.coefficient(4) > 0.0 {
            ell = ell.max((hbar * hbar / v.coefficient(4)).powf(1.0 / 6.0));
        }
        if v.omega_sq() > 0.0 {
            ell = ell.max((hbar / v.omega_sq().sqrt()).sqrt());
        }
        Self { half_width: 12.0 * ell.max(f64::MIN_POSITIVE), points: 2047 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    /// Richardson-extrapolated lowest eigenvalue.
    pub energy: f64,
    pub energy_coarse: f64,
    pub energy_fine: f64,
    /// Moments through order 4. A real eigenfunction has a Wigner function
    /// even in p, so everything odd in p vanishes, and G^{2,2} is the only
    /// mixed one left.
    #[serde(skip)]
    pub moments: MomentSet,
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
    x: Vec<f64>,
    dx: f64,
}

impl Tridiagonal {
    fn new(v: &PolynomialPotential, hbar: f64, l: f64, n: usize) -> Self {
        let dx = 2.0 * l / (n + 1) as f64;
        let x: Vec<f64> = (1..=n).map(|i| -l + i as f64 * dx).collect();
        let kin = hbar * hbar / (dx * dx);
        let diag = x.iter().map(|&x| kin + v.value(x)).collect();
        Self { diag, off: -kin / 2.0, x, dx }
    }

    /// Number of eigenvalues below `s` (Sturm sequence).
    fn count_below(&self, s: f64) -> usize {
        let e2 = self.off * self.off;
        let mut d = 1.0;
        let mut count = 0;
        for (i, &a) in self.diag.iter().enumerate() {
            d = a - s - if i == 0 { 0.0 } else { e2 / d };
            if d == 0.0 {
                d = f64::EPSILON * (a.abs() + self.off.abs());
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn lowest(&self) -> f64 {
        let mut lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * self.off.abs();
        let mut hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * self.off.abs();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration with a shift just below the eigenvalue, where
    /// H − σ is positive definite and the Thomas algorithm is stable.
    fn vector(&self, e: f64) -> Vec<f64> {
        let n = self.diag.len();
        let sigma = e - 1e-9 * e.abs().max(1.0);
        let mut y = vec![1.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for _ in 0..4 {
            let mut b = self.diag[0] - sigma;
            c[0] = self.off / b;
            d[0] = y[0] / b;
            for i in 1..n {
                b = self.diag[i] - sigma - self.off * c[i - 1];
                c[i] = self.off / b;
                d[i] = (y[i] - self.off * d[i - 1]) / b;
            }
            y[n - 1] = d[n - 1];
            for i in (0..n - 1).rev() {
                y[i] = d[i] - c[i] * y[i + 1];
            }
            let s = (y.iter().map(|v| v * v).sum::<f64>() * self.dx).sqrt();
            y.iter_mut().for_each(|v| *v /= s);
        }
        y
    }
}

/// (⟨(q−⟨q⟩)^n⟩ for n ≤ 4, ⟨p^m⟩ for m ≤ 4, G^{2,2}) of a real normalized
/// vector with Dirichlet ends.
fn moments_of(t: &Tridiagonal, psi: &[f64], hbar: f64) -> ([f64; 5], [f64; 5], f64) {
    let n = psi.len();
    let dx = t.dx;
    let q: f64 = psi.iter().zip(&t.x).map(|(p, x)| p * p * x).sum::<f64>() * dx;
    let mut pos = [0.0; 5];
    for (p, x) in psi.iter().zip(&t.x) {
        let mut w = p * p;
        for g in pos.iter_mut() {
            *g += w;
            w *= x - q;
        }
    }
    pos.iter_mut().for_each(|g| *g *= dx);
    let at = |i: isize| if i < 0 || i >= n as isize { 0.0 } else { psi[i as usize] };
    // ⟨p²⟩ = ħ²∫ψ'², ⟨p⁴⟩ = ħ⁴∫ψ''²
    // Weyl symbol p²q² is (q̂²p̂² + p̂²q̂²)/2 + ħ²/2, so for real ψ
    // G^{2,2} = ħ²∫(q−⟨q⟩)²ψ'² − ħ²/2
    let mut d1 = 0.0;
    let mut d1q = 0.0;
    let mut d2 = 0.0;
    for i in -1..n as isize {
        let w = (at(i + 1) - at(i)).powi(2);
        let xm = t.x[0] + (i as f64 + 0.5) * dx;
        d1 += w;
        d1q += w * (xm - q).powi(2);
    }
    for i in 0..n as isize {
        d2 += (at(i + 1) - 2.0 * at(i) + at(i - 1)).powi(2);
    }
    let mom = [1.0, 0.0, hbar * hbar * d1 / dx, 0.0, hbar.powi(4) * d2 / dx.powi(3)];
    (pos, mom, hbar * hbar * (d1q / dx - 0.5))
}

/// Lowest eigenpair of p²/2 + V(q) by finite differences on two grids with
/// Richardson extrapolation of the energy and the moments.
pub fn ground_state_grid(v: &PolynomialPotential, hbar: f64, spec: &GroundSpec) -> Result<GroundState> {
    if !(hbar > 0.0 && spec.half_width > 0.0 && spec.points >= 15) {
        return Err(Error::InvalidArgument(format!("ħ={hbar}, {spec:?}")));
    }
    if v.degree() < 2 || v.coefficient(v.degree()) <= 0.0 || v.degree() % 2 != 0 {
        return Err(Error::InvalidArgument("potential is not confining".into()));
    }
    let coarse = Tridiagonal::new(v, hbar, spec.half_width, spec.points);
    let fine = Tridiagonal::new(v, hbar, spec.half_width, 2 * spec.points + 1);
    let (ec, ef) = (coarse.lowest(), fine.lowest());
    let energy = (4.0 * ef - ec) / 3.0;
    if !energy.is_finite() || (ef - ec).abs() > 1e-2 * ef.abs().max(1e-300) {
        return Err(Error::Numerical(format!("eigenvalue not converged: {ec} vs {ef}")));
    }
    let (pc, mc, xc) = moments_of(&coarse, &coarse.vector(ec), hbar);
    let (pf, mf, xf) = moments_of(&fine, &fine.vector(ef), hbar);
    let rich = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    let mut moments = MomentSet::zeros(Flavor::Quantum, hbar, 4)?;
    for n in [2, 4] {
        moments.set(0, n, rich(pc[n], pf[n]));
        moments.set(n, 0, rich(mc[n], mf[n]));
    }
    moments.set(2, 2, rich(xc, xf));
    Ok(GroundState { energy, energy_coarse: ec, energy_fine: ef, moments })
}
