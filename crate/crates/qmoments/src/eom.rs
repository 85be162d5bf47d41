//! Hand-written right-hand sides of the truncated hierarchy.

use std::collections::BTreeMap;

use crate::combinatorics::{binomial, factorial, falling};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::moments::{keys, moment_count, Flavor, MomentKey, MomentSet, TruncationPolicy};
use crate::potential::PolynomialPotential;
use crate::symbolic::{Expr, FlatSystem, Rational, System, Target};

fn ratio(n: u128, d: u128) -> Rational {
    Rational::new(n as i128, d as i128)
}

/// (dq/dt, dp/dt) as expressions:
/// dq/dt = p, dp/dt = −V'(q) − Σ_{n=2}^{n_max} V^{(n+1)}(q) G^{0,n}/n!.
pub fn centroid_equations(v: &PolynomialPotential, n_max: usize) -> (Expr, Expr) {
    let mut qd = Expr::new();
    qd.add(Rational::from_integer(1), None, 0, 1, 0, &[], n_max);
    let mut pd = Expr::new();
    for &k in v.coefficients().keys() {
        if k >= 1 {
            pd.add(-ratio(falling(k, 1), 1), Some(k), (k - 1) as u32, 0, 0, &[], n_max);
        }
        for n in 2..=n_max {
            if k >= n + 1 {
                let c = -ratio(falling(k, n + 1), factorial(n));
                pd.add(c, Some(k), (k - n - 1) as u32, 0, 0, &[(0, n as isize)], n_max);
            }
        }
    }
    (qd, pd)
}

/// dG^{a,b}/dt =
///   b G^{a+1,b−1}
/// + a Σ_{n≥2} V^{(n)}/(n−1)! [G^{0,n−1} G^{a−1,b} − G^{a−1,b+n−1}]
/// − Σ_{n≥3} Σ_{k≥1, 2k+1≤min(a,n)} V^{(n)}/(n−2k−1)! C(a,2k+1) (−ħ²/4)^k G^{a−2k−1,b+n−2k−1}
///
/// with V^{(n)}(q) = Σ_j λ_j j!/(j−n)! q^{j−n}. The last line is absent for
/// classical moments.
pub fn moment_equation(a: usize, b: usize, v: &PolynomialPotential, flavor: Flavor, n_max: usize) -> Expr {
    let (ai, bi) = (a as isize, b as isize);
    let mut e = Expr::new();
    e.add(Rational::from_integer(b as i128), None, 0, 0, 0, &[(ai + 1, bi - 1)], n_max);
    let deg = v.degree();
    for &j in v.coefficients().keys() {
        for n in 2..=deg.min(j) {
            let qp = (j - n) as u32;
            let c = ratio(falling(j, n) * a as u128, factorial(n - 1));
            let n = n as isize;
            e.add(c, Some(j), qp, 0, 0, &[(0, n - 1), (ai - 1, bi)], n_max);
            e.add(-c, Some(j), qp, 0, 0, &[(ai - 1, bi + n - 1)], n_max);
        }
        if flavor == Flavor::Quantum {
            for n in 3..=deg.min(j) {
                let mut k = 1;
                while 2 * k + 1 <= a.min(n) {
                    let mut c = ratio(falling(j, n) * binomial(a, 2 * k + 1), factorial(n - 2 * k - 1));
                    // −(−1/4)^k
                    c *= Rational::new(if k % 2 == 0 { -1 } else { 1 }, 4i128.pow(k as u32));
                    let s = (2 * k + 1) as isize;
                    e.add(c, Some(j), (j - n) as u32, 0, 2 * k as u32, &[(ai - s, bi + n as isize - s)], n_max);
                    k += 1;
                }
            }
        }
    }
    e
}

pub fn hand_system(v: &PolynomialPotential, flavor: Flavor, n_max: usize) -> System {
    let (qd, pd) = centroid_equations(v, n_max);
    let mut equations = BTreeMap::new();
    equations.insert(Target::Q, qd);
    equations.insert(Target::P, pd);
    for k in keys(n_max) {
        equations.insert(Target::Moment(k), moment_equation(k.a, k.b, v, flavor, n_max));
    }
    System { n_max, equations }
}

/// Hierarchy right-hand side fixed for one potential, flavor, ħ and cutoff.
#[derive(Debug, Clone)]
pub struct CompiledRhs {
    pub potential: PolynomialPotential,
    pub flavor: Flavor,
    pub hbar: f64,
    pub policy: TruncationPolicy,
    system: System,
    flat: FlatSystem,
}

impl CompiledRhs {
    pub fn new(v: &PolynomialPotential, flavor: Flavor, hbar: f64, policy: TruncationPolicy) -> Result<Self> {
        TruncationPolicy::new(policy.n_max)?;
        if flavor == Flavor::Classical && hbar != 0.0 {
            return Err(Error::InvalidArgument("classical hierarchy with hbar != 0".into()));
        }
        let system = hand_system(v, flavor, policy.n_max);
        let flat = FlatSystem::compile(&system, v, hbar);
        Ok(Self { potential: v.clone(), flavor, hbar, policy, system, flat })
    }

    pub fn for_state(state: &MomentSet, v: &PolynomialPotential) -> Result<Self> {
        Self::new(v, state.flavor, state.hbar, TruncationPolicy { n_max: state.n_max })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn dimension(&self) -> usize {
        moment_count(self.policy.n_max) + 2
    }

    pub fn term_count(&self) -> usize {
        self.flat.term_count()
    }

    /// Flattened derivative; `y = [q, p, moments in storage order]`.
    #[inline]
    pub fn eval(&self, y: &[f64], dy: &mut [f64]) {
        self.flat.eval(y, dy)
    }

    pub fn check(&self, state: &MomentSet) -> Result<()> {
        if state.n_max != self.policy.n_max || state.flavor != self.flavor || state.hbar != self.hbar {
            return Err(Error::Mismatch(format!(
                "state ({:?}, ħ={}, N={}) vs hierarchy ({:?}, ħ={}, N={})",
                state.flavor, state.hbar, state.n_max, self.flavor, self.hbar, self.policy.n_max
            )));
        }
        Ok(())
    }
}

pub fn state_vector(state: &MomentSet) -> Vec<f64> {
    let mut y = Vec::with_capacity(state.values().len() + 2);
    y.push(state.q);
    y.push(state.p);
    y.extend_from_slice(state.values());
    y
}

pub fn state_from_vector(template: &MomentSet, y: &[f64]) -> MomentSet {
    let mut s = template.clone();
    s.q = y[0];
    s.p = y[1];
    s.values_mut().copy_from_slice(&y[2..]);
    s
}

pub fn rhs_centroid(state: &MomentSet, v: &PolynomialPotential, policy: TruncationPolicy) -> (f64, f64) {
    let mut dp = -v.derivative(1, state.q);
    for n in 2..=policy.n_max.min(state.n_max) {
        let d = v.derivative(n + 1, state.q);
        if d != 0.0 {
            dp -= d * state.get(0, n) / factorial(n) as f64;
        }
    }
    (state.p, dp)
}

pub fn rhs_moments(state: &MomentSet, compiled: &CompiledRhs) -> Result<BTreeMap<MomentKey, f64>> {
    compiled.check(state)?;
    let y = state_vector(state);
    let mut dy = vec![0.0; y.len()];
    compiled.eval(&y, &mut dy);
    Ok(keys(state.n_max).zip(dy[2..].iter().copied()).collect())
}

/// d²q/dt² + V'(q) + Σ_{n≥3} V^{(n)}(q) G^{0,n−1}/(n−1)! by central second
/// differences on the trajectory's output grid (interior samples only). The
/// factorial matches the momentum equation after shifting n → n−1.
pub fn corrected_newton_residual(traj: &Trajectory, v: &PolynomialPotential) -> Result<Vec<f64>> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} samples, need at least 3")));
    }
    let mut out = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let (t0, t1, t2) = (traj.times[i - 1], traj.times[i], traj.times[i + 1]);
        let (q0, q1, q2) = (traj.states[i - 1].q, traj.states[i].q, traj.states[i + 1].q);
        let h1 = t1 - t0;
        let h2 = t2 - t1;
        let acc = 2.0 * (h1 * q2 - (h1 + h2) * q1 + h2 * q0) / (h1 * h2 * (h1 + h2));
        let s = &traj.states[i];
        let mut r = acc + v.derivative(1, s.q);
        for m in 3..=s.n_max + 1 {
            let d = v.derivative(m, s.q);
            if d != 0.0 {
                r += d * s.get(0, m - 1) / factorial(m - 1) as f64;
            }
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::gaussian_moments;

    fn quartic_state() -> MomentSet {
        let mut s = gaussian_moments(0.3, 0.3, 8).unwrap();
        s.q = 0.4;
        s.p = 1.2;
        s.set(0, 3, 0.02);
        s.set(1, 2, -0.01);
        s
    }

    #[test]
    fn quartic_centroid() {
        let v = PolynomialPotential::quartic(1.7);
        let s = quartic_state();
        let (dq, dp) = rhs_centroid(&s, &v, TruncationPolicy { n_max: 8 });
        assert_eq!(dq, s.p);
        let expect = -4.0 * 1.7 * (s.q.powi(3) + 3.0 * s.q * s.get(0, 2) + s.get(0, 3));
        assert!((dp - expect).abs() < 1e-14);
        let rhs = CompiledRhs::for_state(&s, &v).unwrap();
        let mut dy = vec![0.0; rhs.dimension()];
        rhs.eval(&state_vector(&s), &mut dy);
        assert!((dy[1] - expect).abs() < 1e-14);
    }

    #[test]
    fn harmonic_has_no_back_reaction() {
        let v = PolynomialPotential::harmonic(0.5, 2.0);
        let s = quartic_state();
        let (_, dp) = rhs_centroid(&s, &v, TruncationPolicy { n_max: 8 });
        assert_eq!(dp, -v.derivative(1, s.q));
    }

    #[test]
    fn spot_values() {
        let v = PolynomialPotential::quartic(1.0);
        let mut s = gaussian_moments(0.5, 0.5, 6).unwrap();
        let rhs = CompiledRhs::for_state(&s, &v).unwrap();
        let d = rhs_moments(&s, &rhs).unwrap();
        assert!((d[&MomentKey::new(1, 1)] - (s.get(2, 0) - 4.0 * s.get(0, 4))).abs() < 1e-15);
        s.set(1, 1, 0.3);
        let d = rhs_moments(&s, &rhs).unwrap();
        assert!((d[&MomentKey::new(0, 2)] - 0.6).abs() < 1e-15);

        // pure ħ line of G^{3,0}
        let mut z = MomentSet::zeros(Flavor::Quantum, 0.2, 6).unwrap();
        z.q = 0.9;
        let d = rhs_moments(&z, &rhs_for(&z, &v)).unwrap();
        assert!((d[&MomentKey::new(3, 0)] - 6.0 * 0.04 * 0.9).abs() < 1e-15);
    }

    fn rhs_for(s: &MomentSet, v: &PolynomialPotential) -> CompiledRhs {
        CompiledRhs::for_state(s, v).unwrap()
    }

    #[test]
    fn mismatch_rejected() {
        let v = PolynomialPotential::quartic(1.0);
        let s = gaussian_moments(0.5, 0.5, 6).unwrap();
        let rhs = CompiledRhs::new(&v, Flavor::Quantum, 0.5, TruncationPolicy { n_max: 5 }).unwrap();
        assert!(rhs_moments(&s, &rhs).is_err());
        assert!(TruncationPolicy::new(1).is_err());
    }

    #[test]
    fn classical_is_quantum_without_hbar() {
        let v = PolynomialPotential::new([(2, 0.5), (3, 0.2), (4, 1.0), (6, 0.1)]);
        for k in keys(9) {
            let q = moment_equation(k.a, k.b, &v, Flavor::Quantum, 9);
            let c = moment_equation(k.a, k.b, &v, Flavor::Classical, 9);
            assert_eq!(q.without_hbar(), c);
        }
    }
}
