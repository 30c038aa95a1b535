//! Experiment configuration: a TOML file with sections `[experiment]`,
//! `[grid]`, `[fixture]`, `[lagrangian]`, `[geodesic]`, `[verification]`
//! and `[output]`. Everything except the experiment id and the fixture has
//! a default, and the defaults are written out in full before hashing, so
//! two files that parse to the same settings share a hash.

use std::path::{Path, PathBuf};

use mal_core::fixtures::{standard_pairs, trig_potential, TrigMode};
use mal_core::{DerivativeScheme, Grid, LagrangianSpec, Potential};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub grid: GridConfig,
    pub fixture: FixtureConfig,
    #[serde(default)]
    pub lagrangian: LagrangianConfig,
    #[serde(default)]
    pub geodesic: GeodesicConfig,
    #[serde(default)]
    pub verification: VerificationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(default = "default_scheme")]
    pub scheme: DerivativeScheme,
}

fn default_scheme() -> DerivativeScheme {
    DerivativeScheme::Spectral
}

/// A named standard pair, or explicit band-limited endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<PotentialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<PotentialConfig>,
}

/// `constant + Σ modes`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub modes: Vec<ModeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub kx: i32,
    pub ky: i32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianConfig {
    pub specs: Vec<String>,
}

impl Default for LagrangianConfig {
    fn default() -> Self {
        Self {
            specs: vec!["power:p1".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub time_steps: i64,
    /// Explicit ε values solved in order with warm starts. Empty means the
    /// ε → 0 limit by halving continuation.
    pub epsilon_schedule: Vec<f64>,
    pub limit_tol: f64,
    pub min_epsilon: f64,
    pub solver_tol: f64,
    pub max_iter: i64,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            time_steps: 32,
            epsilon_schedule: Vec::new(),
            limit_tol: 1e-5,
            min_epsilon: 1e-7,
            solver_tol: 1e-8,
            max_iter: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationConfig {
    pub suites: Vec<String>,
    pub seeds: Vec<u64>,
    /// Random competitors per seed (least action).
    pub count: i64,
    pub tolerance: f64,
    pub jacobi_tolerance: f64,
    /// Endpoint perturbation for Jacobi difference quotients.
    pub delta: f64,
    /// ε of the solves in the comparison and Jacobi suites.
    pub epsilon: f64,
    /// `[center, half_width]` pairs for action convexity; empty means five
    /// triples across the interval.
    pub triples: Vec<[f64; 2]>,
    /// Length of the shifted sequences in the continuity suite.
    pub sequence_length: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apex: Option<PotentialConfig>,
    /// Second endpoint pair for action convexity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner: Option<FixtureConfig>,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            suites: Vec::new(),
            seeds: vec![7],
            count: 100,
            tolerance: 5e-3,
            jacobi_tolerance: 1e-4,
            delta: 1e-5,
            epsilon: 1e-2,
            triples: Vec::new(),
            sequence_length: 6,
            apex: None,
            partner: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

pub const SUITES: [&str; 6] = [
    "least_action",
    "comparison",
    "noether",
    "jacobi",
    "action_convexity",
    "continuity",
];

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn at_least(field: &str, v: i64, min: i64) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(invalid(field, format!("must be >= {min}, got {v}")))
    }
}

impl FixtureConfig {
    fn validate(&self, field: &str) -> Result<(), CliError> {
        match (&self.preset, &self.start, &self.end) {
            (Some(name), None, None) => {
                let known = ["constants", "mode-vs-constant", "rotated-modes", "mixture", "random"];
                if known.contains(&name.as_str()) {
                    Ok(())
                } else {
                    Err(invalid(
                        &format!("{field}.preset"),
                        format!("unknown preset `{name}` (known: {})", known.join(", ")),
                    ))
                }
            }
            (None, Some(_), Some(_)) => Ok(()),
            _ => Err(invalid(field, "give either `preset` or both `start` and `end`")),
        }
    }

    pub fn endpoints(&self, grid: &Grid, field: &str) -> Result<(Potential, Potential), CliError> {
        if let Some(name) = &self.preset {
            let pair = standard_pairs(grid)
                .into_iter()
                .find(|p| p.name == name)
                .ok_or_else(|| invalid(&format!("{field}.preset"), format!("unknown preset `{name}`")))?;
            return Ok((pair.start, pair.end));
        }
        let start = self.start.as_ref().expect("validated");
        let end = self.end.as_ref().expect("validated");
        Ok((
            start.potential(grid, &format!("{field}.start"))?,
            end.potential(grid, &format!("{field}.end"))?,
        ))
    }
}

impl PotentialConfig {
    pub fn potential(&self, grid: &Grid, field: &str) -> Result<Potential, CliError> {
        let modes: Vec<TrigMode> = self
            .modes
            .iter()
            .map(|m| TrigMode {
                kx: m.kx,
                ky: m.ky,
                cos: m.cos,
                sin: m.sin,
            })
            .collect();
        trig_potential(grid, self.constant, &modes).map_err(|e| invalid(field, e))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.experiment.id.is_empty()
            || !self.experiment.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(invalid("experiment.id", "must be nonempty and use only [A-Za-z0-9._-]"));
        }
        if self.grid.n < 4 || self.grid.n % 2 != 0 {
            return Err(invalid("grid.N", format!("must be even and >= 4, got {}", self.grid.n)));
        }
        self.fixture.validate("fixture")?;
        if self.lagrangian.specs.is_empty() {
            return Err(invalid("lagrangian.specs", "at least one spec is required"));
        }
        let g = &self.geodesic;
        positive("geodesic.T", g.horizon)?;
        at_least("geodesic.time_steps", g.time_steps, 2)?;
        for (k, &e) in g.epsilon_schedule.iter().enumerate() {
            positive(&format!("geodesic.epsilon_schedule[{k}]"), e)?;
        }
        positive("geodesic.limit_tol", g.limit_tol)?;
        positive("geodesic.min_epsilon", g.min_epsilon)?;
        positive("geodesic.solver_tol", g.solver_tol)?;
        at_least("geodesic.max_iter", g.max_iter, 1)?;
        let v = &self.verification;
        for s in &v.suites {
            check_suite(s)?;
        }
        at_least("verification.count", v.count, 0)?;
        positive("verification.tolerance", v.tolerance)?;
        positive("verification.jacobi_tolerance", v.jacobi_tolerance)?;
        positive("verification.delta", v.delta)?;
        positive("verification.epsilon", v.epsilon)?;
        at_least("verification.sequence_length", v.sequence_length, 2)?;
        for (k, [c, h]) in v.triples.iter().enumerate() {
            positive(&format!("verification.triples[{k}] half width"), *h)?;
            if c - h < 0.0 || c + h > g.horizon {
                return Err(invalid(
                    &format!("verification.triples[{k}]"),
                    format!("[{}, {}] leaves [0, T]", c - h, c + h),
                ));
            }
        }
        if let Some(p) = &v.partner {
            p.validate("verification.partner")?;
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(invalid("output.formats", format!("unknown format `{f}` (csv, json)")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the JSON serialization of the parsed configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid.n as usize, self.grid.scheme).map_err(|e| invalid("grid.N", e))
    }

    /// Parses the Lagrangian specs; `supfam:` paths are taken relative to
    /// `base`.
    pub fn specs(&self, base: &Path) -> Result<Vec<LagrangianSpec>, CliError> {
        self.lagrangian
            .specs
            .iter()
            .enumerate()
            .map(|(k, text)| {
                let resolved = match text.trim().strip_prefix("supfam:") {
                    Some(p) if Path::new(p).is_relative() => format!("supfam:{}", base.join(p).display()),
                    _ => text.clone(),
                };
                LagrangianSpec::parse(&resolved).map_err(|e| invalid(&format!("lagrangian.specs[{k}]"), e))
            })
            .collect()
    }

    pub fn has_format(&self, f: &str) -> bool {
        self.output.formats.iter().any(|x| x == f)
    }
}

pub fn check_suite(name: &str) -> Result<(), CliError> {
    if SUITES.contains(&name) {
        Ok(())
    } else {
        Err(invalid("suite", format!("unknown suite `{name}` (known: {})", SUITES.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[experiment]\nid = \"x\"\n[grid]\nN = 16\n[fixture]\npreset = \"constants\"\n";

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.geodesic, GeodesicConfig::default());
        assert_eq!(c.lagrangian.specs, vec!["power:p1"]);
        assert_eq!(c.grid.scheme, DerivativeScheme::Spectral);
    }

    #[test]
    fn hash_ignores_spelled_out_defaults() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let b = ExperimentConfig::parse(&format!("{MINIMAL}[geodesic]\nT = 1.0\ntime_steps = 32\n")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::parse(&format!("{MINIMAL}[geodesic]\ntime_steps = 16\n")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("N = 16", "N = -4");
        let msg = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("grid.N"), "{msg}");
        let bad = format!("{MINIMAL}[geodesic]\nsolver_tol = 0.0\n");
        let msg = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("geodesic.solver_tol"), "{msg}");
        let bad = format!("{MINIMAL}[geodesic]\ntimesteps = 3\n");
        let msg = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("timesteps"), "{msg}");
    }

    #[test]
    fn fixture_needs_one_form() {
        let bad = MINIMAL.replace("preset = \"constants\"", "start = { constant = 1.0 }");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let ok = MINIMAL.replace(
            "preset = \"constants\"",
            "start = { constant = 0.0 }\nend = { constant = 1.0, modes = [{ kx = 1, ky = 0, cos = 0.01 }] }",
        );
        let c = ExperimentConfig::parse(&ok).unwrap();
        let g = c.grid().unwrap();
        let (_, end) = c.fixture.endpoints(&g, "fixture").unwrap();
        assert!((end.field().max() - 1.01).abs() < 1e-12);
    }
}
