use serde::{Deserialize, Serialize};

use crate::combinatorics::factorial_f64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Quantum,
    Classical,
}

/// Index pair of a central moment: `a` powers of the momentum deviation,
/// `b` powers of the position deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentKey {
    pub a: usize,
    pub b: usize,
}

impl MomentKey {
    pub const fn new(a: usize, b: usize) -> Self {
        Self { a, b }
    }

    pub const fn order(&self) -> usize {
        self.a + self.b
    }

    pub fn is_even_even(&self) -> bool {
        self.a % 2 == 0 && self.b % 2 == 0
    }
}

impl std::fmt::Display for MomentKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "G_{}_{}", self.a, self.b)
    }
}

/// Number of stored moments for orders 2..=n_max.
pub const fn moment_count(n_max: usize) -> usize {
    (n_max + 1) * (n_max + 2) / 2 - 3
}

const fn order_offset(n: usize) -> usize {
    n * (n + 1) / 2 - 3
}

/// Dense slot of a key with order >= 2. Within an order the momentum power
/// decreases, so order 2 is laid out as G20, G11, G02.
#[inline]
pub const fn slot(a: usize, b: usize) -> usize {
    order_offset(a + b) + b
}

/// All keys of orders 2..=n_max in storage order.
pub fn keys(n_max: usize) -> impl Iterator<Item = MomentKey> {
    (2..=n_max).flat_map(|n| (0..=n).map(move |b| MomentKey::new(n - b, b)))
}

/// Hard cutoff of the hierarchy at order `n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub n_max: usize,
}

impl TruncationPolicy {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidArgument(format!("cutoff {n_max} < 2")));
        }
        Ok(Self { n_max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub flavor: Flavor,
    pub hbar: f64,
    pub q: f64,
    pub p: f64,
    pub n_max: usize,
    values: Vec<f64>,
}

impl MomentSet {
    pub fn zeros(flavor: Flavor, hbar: f64, n_max: usize) -> Result<Self> {
        let s = Self {
            flavor,
            hbar,
            q: 0.0,
            p: 0.0,
            n_max,
            values: vec![0.0; moment_count(n_max.max(2))],
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_values(
        flavor: Flavor,
        hbar: f64,
        q: f64,
        p: f64,
        n_max: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let s = Self { flavor, hbar, q, p, n_max, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(Error::InvalidState(format!("n_max = {} < 2", self.n_max)));
        }
        if self.values.len() != moment_count(self.n_max) {
            return Err(Error::InvalidState(format!(
                "{} values for cutoff {}",
                self.values.len(),
                self.n_max
            )));
        }
        if !(self.hbar >= 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidState(format!("hbar = {}", self.hbar)));
        }
        if self.flavor == Flavor::Classical && self.hbar != 0.0 {
            return Err(Error::InvalidState("classical state with hbar != 0".into()));
        }
        if !self.q.is_finite() || !self.p.is_finite() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// G^{a,b} with the identities of orders 0 and 1; zero beyond the cutoff.
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        match a + b {
            0 => 1.0,
            1 => 0.0,
            n if n > self.n_max => 0.0,
            _ => self.values[slot(a, b)],
        }
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        let n = a + b;
        assert!((2..=self.n_max).contains(&n), "moment ({a},{b}) outside orders 2..={}", self.n_max);
        self.values[slot(a, b)] = v;
    }

    pub fn keys(&self) -> impl Iterator<Item = MomentKey> {
        keys(self.n_max)
    }

    /// Same moments reinterpreted as a classical phase-space distribution.
    pub fn to_classical(&self) -> Self {
        Self { flavor: Flavor::Classical, hbar: 0.0, ..self.clone() }
    }

    /// Copy restricted to (or zero-extended to) a different cutoff.
    pub fn with_cutoff(&self, n_max: usize) -> Result<Self> {
        let mut out = Self::zeros(self.flavor, self.hbar, n_max)?;
        out.q = self.q;
        out.p = self.p;
        for k in keys(n_max.min(self.n_max)) {
            out.set(k.a, k.b, self.get(k.a, k.b));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MomentSetJson::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: MomentSetJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidState(e.to_string()))?;
        j.try_into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEntry {
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

/// Interchange form; moments missing from the list are zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSetJson {
    pub flavor: Flavor,
    pub hbar: f64,
    pub n_max: usize,
    pub q: f64,
    pub p: f64,
    #[serde(default)]
    pub moments: Vec<MomentEntry>,
}

impl From<&MomentSet> for MomentSetJson {
    fn from(s: &MomentSet) -> Self {
        Self {
            flavor: s.flavor,
            hbar: s.hbar,
            n_max: s.n_max,
            q: s.q,
            p: s.p,
            moments: s
                .keys()
                .map(|k| MomentEntry { a: k.a, b: k.b, value: s.get(k.a, k.b) })
                .collect(),
        }
    }
}

impl TryFrom<MomentSetJson> for MomentSet {
    type Error = Error;

    fn try_from(j: MomentSetJson) -> Result<Self> {
        let mut s = MomentSet::zeros(j.flavor, j.hbar, j.n_max)?;
        s.q = j.q;
        s.p = j.p;
        for m in j.moments {
            let n = m.a + m.b;
            if !(2..=j.n_max).contains(&n) {
                return Err(Error::InvalidState(format!(
                    "moment ({},{}) outside orders 2..={}",
                    m.a, m.b, j.n_max
                )));
            }
            s.set(m.a, m.b, m.value);
        }
        s.validate()?;
        Ok(s)
    }
}

/// Even moments of a Gaussian Wigner function with position variance
/// `width2/2` and momentum variance `hbar²/(2 width2)`; odd ones vanish.
/// `width2 = hbar` gives the symmetric minimum-uncertainty packet.
pub fn gaussian_moments(width2: f64, hbar: f64, n_max: usize) -> Result<MomentSet> {
    if !(width2 > 0.0) {
        return Err(Error::InvalidArgument(format!("width² = {width2} must be positive")));
    }
    let mut s = MomentSet::zeros(Flavor::Quantum, hbar, n_max)?;
    let var_p = hbar * hbar / width2;
    for k in keys(n_max).filter(|k| k.is_even_even()) {
        let (i, j) = (k.a / 2, k.b / 2);
        let v = var_p.powi(i as i32) * width2.powi(j as i32) * factorial_f64(k.a) * factorial_f64(k.b)
            / (4f64.powi((i + j) as i32) * factorial_f64(i) * factorial_f64(j));
        s.set(k.a, k.b, v);
    }
    Ok(s)
}
