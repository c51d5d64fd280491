use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::accounting::{Preference, UtilityModel};
use crate::error::{Error, Result};
use crate::extension::TwoPeriodConfig;
use crate::market::MonetaryPolicy;
use crate::simulation::Regime;
use crate::valuation::ValuationDistribution;

/// A scenario file. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub beta: f64,
    #[serde(rename = "M1", default = "one")]
    pub initial_supply: f64,
    #[serde(default = "all_regimes")]
    pub regimes: Vec<Regime>,
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub utility: UtilitySpec,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub extension: Option<ExtensionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    /// `uniform` or `discrete`.
    pub kind: String,
    #[serde(default)]
    pub low: Option<f64>,
    #[serde(default)]
    pub high: Option<f64>,
    /// `[value, probability]` pairs.
    #[serde(default)]
    pub atoms: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub tau: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    /// `risk-neutral`, `log`, or `crra`.
    #[serde(default = "risk_neutral")]
    pub kind: String,
    #[serde(default)]
    pub w1: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    #[serde(default = "default_paths")]
    pub paths: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "three")]
    pub tolerance_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSpec {
    /// Discount factor for the two-period model; defaults to the top-level `beta`.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn all_regimes() -> Vec<Regime> {
    vec![Regime::Tokens, Regime::Dollars, Regime::Equity]
}
fn risk_neutral() -> String {
    "risk-neutral".into()
}
fn default_paths() -> u64 {
    100_000
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_c_grid() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 5.0]
}

impl Default for UtilitySpec {
    fn default() -> Self {
        Self { kind: risk_neutral(), w1: 0.0, gamma: None }
    }
}

impl Default for McSpec {
    fn default() -> Self {
        Self { paths: default_paths(), seed: 0, tolerance_sigmas: three() }
    }
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

impl Default for ExtensionSpec {
    fn default() -> Self {
        Self { beta: None, c_grid: default_c_grid() }
    }
}

/// One problem found by [`ScenarioConfig::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ScenarioConfig {
    /// Parses TOML. Syntax errors and unknown keys come back as a single violation.
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, Violation> {
        toml::from_str(text).map_err(|e| Violation { field: "config".into(), message: e.message().trim().to_string() })
    }

    pub fn load(path: &Path) -> std::result::Result<Self, Violation> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Violation { field: "config".into(), message: format!("cannot read {}: {e}", path.display()) })?;
        Self::from_toml_str(&text)
    }

    /// Every rule the scenario breaks; empty iff it is runnable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |field: &str, message: String| out.push(Violation { field: field.into(), message });
        if self.n < 2 {
            bad("n", format!("need at least two bidders (got {})", self.n));
        }
        if self.horizon == 0 {
            bad("T", "horizon must be at least one period".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            bad("beta", format!("must lie in (0, 1) (got {})", self.beta));
        }
        if !(self.initial_supply.is_finite() && self.initial_supply > 0.0) {
            bad("M1", format!("initial supply must be positive (got {})", self.initial_supply));
        }
        if self.regimes.is_empty() {
            bad("regimes", "list at least one regime".into());
        }
        if let Err(e) = self.distribution() {
            bad("distribution", error_text(e));
        }
        if let Some(policy) = &self.policy {
            for (name, values) in [("tau", &policy.tau), ("sigma", &policy.sigma)] {
                if values.len() != self.horizon {
                    bad(&format!("policy.{name}"), format!("length {} does not match T = {}", values.len(), self.horizon));
                }
                for (i, v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        bad(&format!("policy.{name}[{i}]"), format!("{name} must be finite (got {v})"));
                    } else if *v < -1.0 {
                        bad(&format!("policy.{name}[{i}]"), format!("{name} below -1 (got {v})"));
                    }
                }
            }
        }
        match self.utility.kind.as_str() {
            "risk-neutral" | "log" => {}
            "crra" => match self.utility.gamma {
                Some(g) if g.is_finite() && g > 0.0 && g != 1.0 => {}
                Some(g) => bad("utility.gamma", format!("must be positive and different from 1 (got {g})")),
                None => bad("utility.gamma", "required when kind = \"crra\"".into()),
            },
            other => bad("utility.kind", format!("expected risk-neutral, log, or crra (got {other:?})")),
        }
        if !(self.utility.w1.is_finite() && self.utility.w1 >= 0.0) {
            bad("utility.w1", format!("initial assets must be nonnegative (got {})", self.utility.w1));
        }
        if self.mc.paths == 0 {
            bad("mc.paths", "need at least one path".into());
        }
        if !(self.mc.tolerance_sigmas.is_finite() && self.mc.tolerance_sigmas > 0.0) {
            bad("mc.tolerance_sigmas", format!("must be positive (got {})", self.mc.tolerance_sigmas));
        }
        if let Some(ext) = &self.extension {
            if let Some(b) = ext.beta {
                if !(b > 0.0 && b < 1.0) {
                    bad("extension.beta", format!("must lie in (0, 1) (got {b})"));
                }
            }
            if ext.c_grid.is_empty() {
                bad("extension.c_grid", "list at least one cost".into());
            }
            if ext.c_grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                bad("extension.c_grid", "costs must be finite and nonnegative".into());
            }
            if ext.c_grid.windows(2).any(|w| w[1] < w[0]) {
                bad("extension.c_grid", "costs must be sorted ascending".into());
            }
        }
        out
    }

    pub fn distribution(&self) -> Result<ValuationDistribution> {
        let d = &self.distribution;
        match d.kind.as_str() {
            "uniform" => {
                if d.atoms.is_some() {
                    return Err(Error::Domain("atoms only apply to kind = \"discrete\"".into()));
                }
                match (d.low, d.high) {
                    (Some(lo), Some(hi)) => ValuationDistribution::uniform(lo, hi),
                    _ => Err(Error::Domain("uniform needs low and high".into())),
                }
            }
            "discrete" => {
                if d.low.is_some() || d.high.is_some() {
                    return Err(Error::Domain("low/high only apply to kind = \"uniform\"".into()));
                }
                let atoms: Vec<(f64, f64)> = d.atoms.as_deref().unwrap_or_default().iter().map(|[v, p]| (*v, *p)).collect();
                ValuationDistribution::discrete(&atoms)
            }
            other => Err(Error::Domain(format!("kind must be uniform or discrete (got {other:?})"))),
        }
    }

    /// The configured policy, or `τ = σ = 0` in every period.
    pub fn policy(&self) -> Result<MonetaryPolicy> {
        match &self.policy {
            Some(p) => MonetaryPolicy::new(p.tau.clone(), p.sigma.clone()),
            None => MonetaryPolicy::constant(self.horizon, 0.0, 0.0),
        }
    }

    pub fn utility_model(&self) -> Result<UtilityModel> {
        let preference = match self.utility.kind.as_str() {
            "risk-neutral" => Preference::RiskNeutral,
            "log" => Preference::Log,
            "crra" => Preference::Crra { gamma: self.utility.gamma.unwrap_or(f64::NAN) },
            other => return Err(Error::Domain(format!("unknown utility kind {other:?}"))),
        };
        UtilityModel::new(preference, self.utility.w1, self.beta)
    }

    pub fn extension_spec(&self) -> ExtensionSpec {
        self.extension.clone().unwrap_or_default()
    }

    /// Two-period model at `c = 0`; the cost is varied by the sweep.
    pub fn two_period(&self) -> Result<TwoPeriodConfig> {
        let beta = self.extension_spec().beta.unwrap_or(self.beta);
        TwoPeriodConfig::new(beta, 0.0, self.distribution()?, self.n)
    }

    /// `sha256:<hex>` of the canonical JSON form of the scenario. The output
    /// directory is not part of the scenario and is left out.
    pub fn hash(&self) -> String {
        let scenario = Self { output: OutputSpec::default(), ..self.clone() };
        let canonical = serde_json::to_vec(&scenario).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }
}

fn error_text(e: Error) -> String {
    match e {
        Error::Domain(m) | Error::Unsupported(m) | Error::Numerical(m) | Error::Mismatch(m) => m,
    }
}

/// Loads and checks a scenario file. Only an unreadable file is an error;
/// parse failures are reported as violations.
pub fn validate(path: &Path) -> std::io::Result<Vec<Violation>> {
    let text = std::fs::read_to_string(path)?;
    Ok(match ScenarioConfig::from_toml_str(&text) {
        Ok(cfg) => cfg.validate(),
        Err(v) => vec![v],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
n = 2
T = 2
beta = 0.9

[distribution]
kind = "uniform"
low = 0.0
high = 1.0

[policy]
tau = [0.0, 0.0]
sigma = [0.0, -1.5]
"#;

    #[test]
    fn flags_sigma_below_minus_one() {
        let cfg = ScenarioConfig::from_toml_str(BASE).unwrap();
        let v = cfg.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "policy.sigma[1]: sigma below -1 (got -1.5)");
    }

    #[test]
    fn flags_length_mismatch() {
        let text = BASE.replace("tau = [0.0, 0.0]", "tau = [0.0]").replace("-1.5", "0.0");
        let v = ScenarioConfig::from_toml_str(&text).unwrap().validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "policy.tau");
    }

    #[test]
    fn unknown_keys_fail() {
        let text = format!("{BASE}\n[mc]\npaths = 10\nsed = 3\n");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.message.contains("sed"), "{}", err.message);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::from_toml_str(BASE).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.mc.seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert!(a.hash().starts_with("sha256:") && a.hash().len() == 7 + 64);
    }

    #[test]
    fn distribution_kinds() {
        let text = BASE.replace("kind = \"uniform\"\nlow = 0.0\nhigh = 1.0", "kind = \"discrete\"\natoms = [[1.0, 0.25], [2.0, 0.75]]");
        let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.distribution().unwrap().atoms().unwrap().len(), 2);
        let bad = BASE.replace("uniform", "normal");
        let v = ScenarioConfig::from_toml_str(&bad).unwrap().validate();
        assert!(v.iter().any(|v| v.field == "distribution"));
    }
}
