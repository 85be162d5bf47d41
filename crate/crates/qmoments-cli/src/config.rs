use std::path::{Path, PathBuf};

use qmoments::{Flavor, PolynomialPotential};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FlavorChoice {
    Quantum,
    Classical,
    Both,
}

impl FlavorChoice {
    pub fn flavors(self) -> Vec<Flavor> {
        match self {
            Self::Quantum => vec![Flavor::Quantum],
            Self::Classical => vec![Flavor::Classical],
            Self::Both => vec![Flavor::Quantum, Flavor::Classical],
        }
    }
}

/// A time either in absolute units or in periods of the point orbit:
/// `1.5`, `"2T"`, `"0.25T"`, `"T/512"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Absolute(f64),
    Text(String),
}

impl TimeSpec {
    pub fn periods(&self) -> Result<Option<f64>, CliError> {
        let s = match self {
            Self::Absolute(_) => return Ok(None),
            Self::Text(s) => s.trim(),
        };
        if s.parse::<f64>().is_ok() {
            return Ok(None);
        }
        let bad = || CliError::config(format!("cannot read time {s:?}"));
        if let Some(rest) = s.strip_prefix("T/") {
            let d: f64 = rest.trim().parse().map_err(|_| bad())?;
            return Ok(Some(1.0 / d));
        }
        if let Some(head) = s.strip_suffix('T') {
            let head = head.trim().trim_end_matches('*');
            return Ok(Some(if head.is_empty() { 1.0 } else { head.parse().map_err(|_| bad())? }));
        }
        Err(bad())
    }

    pub fn needs_period(&self) -> bool {
        matches!(self.periods(), Ok(Some(_)))
    }

    /// Absolute value, given the period when the spec refers to it.
    pub fn resolve(&self, period: Option<f64>) -> Result<f64, CliError> {
        let t = match (self, self.periods()?) {
            (Self::Absolute(t), _) => *t,
            (_, Some(n)) => n * period.ok_or_else(|| CliError::config("time given in periods but the orbit is not periodic"))?,
            (Self::Text(s), None) => s.trim().parse().map_err(|_| CliError::config(format!("cannot read time {s:?}")))?,
        };
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::config(format!("time {self:?} resolves to {t}")));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub power: usize,
    pub coefficient: f64,
}

/// V(q) = βq, βq + ω²q²/2, λq⁴, or Σ c_k q^k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Linear { beta: f64 },
    Harmonic {
        #[serde(default)]
        beta: f64,
        omega_sq: f64,
    },
    Quartic { lambda: f64 },
    Custom { coefficients: Vec<Term> },
}

impl PotentialSpec {
    pub fn build(&self) -> PolynomialPotential {
        match self {
            Self::Linear { beta } => PolynomialPotential::linear(*beta),
            Self::Harmonic { beta, omega_sq } => PolynomialPotential::harmonic(*beta, *omega_sq),
            Self::Quartic { lambda } => PolynomialPotential::quartic(*lambda),
            Self::Custom { coefficients } => PolynomialPotential::new(coefficients.iter().map(|t| (t.power, t.coefficient))),
        }
    }

    fn parameters(&self) -> Vec<f64> {
        match self {
            Self::Linear { beta } => vec![*beta],
            Self::Harmonic { beta, omega_sq } => vec![*beta, *omega_sq],
            Self::Quartic { lambda } => vec![*lambda],
            Self::Custom { coefficients } => coefficients.iter().map(|t| t.coefficient).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Initial {
    pub q0: f64,
    pub p0: f64,
    /// Gaussian width²; defaults to ħ (the symmetric minimum-uncertainty packet).
    pub width2: Option<f64>,
    /// Explicit moments (MomentSet JSON) instead of a Gaussian; its centroid wins.
    pub moment_file: Option<PathBuf>,
}

impl Default for Initial {
    fn default() -> Self {
        Self { q0: 0.0, p0: 10.0, width2: None, moment_file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationaryConfig {
    pub energy: f64,
    pub g02: f64,
    /// Moments of order ≤ this are listed as converged; defaults to n_max/2.
    pub report_order: Option<usize>,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self { energy: 1.0, g02: 0.3, report_order: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub orders: Vec<usize>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { orders: vec![4, 6] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub mc_samples: usize,
    pub mc_max_step: TimeSpec,
    /// Grid points; by default the smallest power of two ≥ 4096 resolving 1.5 p_max.
    pub grid_points: Option<usize>,
    pub grid_half_width: Option<f64>,
    pub grid_dt: Option<TimeSpec>,
    pub ground_state: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            mc_samples: 100_000,
            mc_max_step: TimeSpec::Text("T/1000".into()),
            grid_points: None,
            grid_half_width: None,
            grid_dt: None,
            ground_state: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub potential: PotentialSpec,
    pub hbar: f64,
    pub initial: Initial,
    pub n_max: Vec<usize>,
    pub flavor: FlavorChoice,
    pub t_end: TimeSpec,
    pub dt_out: TimeSpec,
    pub rtol: f64,
    pub atol: f64,
    pub seed: u64,
    /// Half orders r of the Schwarz suites monitored along trajectories.
    pub inequality_half_orders: Vec<usize>,
    pub stationary: StationaryConfig,
    pub bounds: BoundsConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            potential: PotentialSpec::Quartic { lambda: 1.0 },
            hbar: 1e-2,
            initial: Initial::default(),
            n_max: vec![10],
            flavor: FlavorChoice::Quantum,
            t_end: TimeSpec::Text("2T".into()),
            dt_out: TimeSpec::Text("T/512".into()),
            rtol: 1e-10,
            atol: 1e-10,
            seed: 0,
            inequality_half_orders: vec![2, 3, 4],
            stationary: StationaryConfig::default(),
            bounds: BoundsConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("reading {}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("parsing {}: {e}", path.display())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "config schema {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_max.is_empty() || self.n_max.contains(&0) {
            return Err(CliError::config("n_max needs at least one positive cutoff"));
        }
        if !(self.hbar >= 0.0 && self.hbar.is_finite()) {
            return Err(CliError::config(format!("hbar = {}", self.hbar)));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(CliError::config("tolerances must be positive"));
        }
        if self.potential.parameters().iter().any(|c| !c.is_finite()) {
            return Err(CliError::config("non-finite potential coefficient"));
        }
        if let Some(w) = self.initial.width2 {
            if !(w > 0.0) {
                return Err(CliError::config(format!("width2 = {w}")));
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> PolynomialPotential {
        self.potential.build()
    }

    pub fn width2(&self) -> f64 {
        self.initial.width2.unwrap_or(self.hbar)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable config")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_string(self).expect("serializable config").as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_specs() {
        let t = |s: &str| TimeSpec::Text(s.into());
        assert_eq!(t("2T").resolve(Some(1.5)).unwrap(), 3.0);
        assert_eq!(t("T/4").resolve(Some(2.0)).unwrap(), 0.5);
        assert_eq!(t("T").resolve(Some(2.0)).unwrap(), 2.0);
        assert_eq!(t("0.75").resolve(None).unwrap(), 0.75);
        assert_eq!(TimeSpec::Absolute(1.25).resolve(None).unwrap(), 1.25);
        assert!(t("2T").resolve(None).is_err());
        assert!(t("two").resolve(Some(1.0)).is_err());
        assert!(TimeSpec::Absolute(-1.0).resolve(None).is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&c.canonical_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let partial: RunConfig = serde_json::from_str(r#"{"hbar": 0.5, "t_end": 3.0}"#).unwrap();
        assert_eq!(partial.t_end, TimeSpec::Absolute(3.0));
        assert_eq!(partial.n_max, vec![10]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"hbarr": 0.5}"#).is_err());
        let h: RunConfig = serde_json::from_str(r#"{"potential": {"type": "harmonic", "omega_sq": 2.0}}"#).unwrap();
        assert!(h.potential().is_quadratic());
        assert!(serde_json::from_str::<RunConfig>(r#"{"potential": {"type": "sextic"}}"#).is_err());
    }
}
