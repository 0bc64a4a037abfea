//! Declarative experiment configs: one TOML file per experiment, with the
//! family-specific parameters under `[params]`. Every validation error names
//! the offending field and the violated constraint so a bad config dies with
//! an actionable message (exit code 2).

use std::collections::BTreeMap;

use ratelab_core::levy_models::{JumpComponent, JumpMixture, LevyModel, SubordinatorModel};
use ratelab_core::linalg::Matrix;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("field `{field}`: {constraint}")]
    Field { field: String, constraint: String },
    #[error("unknown family `{0}`; run `ratelab list` for the catalog")]
    UnknownFamily(String),
}

impl ConfigError {
    pub fn field(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}

/// Top-level experiment description. `seed` is mandatory: no experiment
/// ever derives randomness from the clock.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub family: String,
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub params: toml::Table,
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        if cfg.id.is_empty() {
            return Err(ConfigError::field("id", "must be a nonempty string"));
        }
        if cfg
            .id
            .chars()
            .any(|c| !(c.is_ascii_alphanumeric() || c == '-' || c == '_'))
        {
            return Err(ConfigError::field(
                "id",
                "may contain only ASCII alphanumerics, '-' and '_'",
            ));
        }
        Ok(cfg)
    }

    pub fn params(&self) -> ParamReader<'_> {
        ParamReader {
            table: &self.params,
            path: "params".to_string(),
        }
    }
}

/// Typed access into a TOML table with field-qualified error messages.
pub struct ParamReader<'a> {
    table: &'a toml::Table,
    path: String,
}

impl<'a> ParamReader<'a> {
    fn key(&self, name: &str) -> String {
        format!("{}.{}", self.path, name)
    }

    fn get(&self, name: &str) -> Option<&'a toml::Value> {
        self.table.get(name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.table.contains_key(name)
    }

    fn require(&self, name: &str) -> Result<&'a toml::Value, ConfigError> {
        self.get(name)
            .ok_or_else(|| ConfigError::field(self.key(name), "required field is missing"))
    }

    pub fn sub_table(&self, name: &str) -> Result<ParamReader<'a>, ConfigError> {
        match self.require(name)? {
            toml::Value::Table(t) => Ok(ParamReader {
                table: t,
                path: self.key(name),
            }),
            _ => Err(ConfigError::field(self.key(name), "must be a table")),
        }
    }

    pub fn opt_sub_table(&self, name: &str) -> Result<Option<ParamReader<'a>>, ConfigError> {
        match self.get(name) {
            None => Ok(None),
            Some(toml::Value::Table(t)) => Ok(Some(ParamReader {
                table: t,
                path: self.key(name),
            })),
            Some(_) => Err(ConfigError::field(self.key(name), "must be a table")),
        }
    }

    pub fn f64(&self, name: &str) -> Result<f64, ConfigError> {
        value_as_f64(self.require(name)?)
            .ok_or_else(|| ConfigError::field(self.key(name), "must be a number"))
    }

    pub fn opt_f64(&self, name: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => value_as_f64(v)
                .map(Some)
                .ok_or_else(|| ConfigError::field(self.key(name), "must be a number")),
        }
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.opt_f64(name)?.unwrap_or(default))
    }

    /// A number constrained to an open interval; the constraint text lands
    /// in the error message verbatim.
    pub fn f64_in_open(&self, name: &str, lo: f64, hi: f64) -> Result<f64, ConfigError> {
        let v = self.f64(name)?;
        if v > lo && v < hi {
            Ok(v)
        } else {
            Err(ConfigError::field(
                self.key(name),
                format!("must lie in the open interval ({lo}, {hi}), got {v}"),
            ))
        }
    }

    pub fn f64_positive(&self, name: &str) -> Result<f64, ConfigError> {
        let v = self.f64(name)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError::field(
                self.key(name),
                format!("must be a positive finite number, got {v}"),
            ))
        }
    }

    pub fn usize_or(&self, name: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(name) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 1 => Ok(*i as usize),
            Some(_) => Err(ConfigError::field(
                self.key(name),
                "must be a positive integer",
            )),
        }
    }

    pub fn str(&self, name: &str) -> Result<&'a str, ConfigError> {
        match self.require(name)? {
            toml::Value::String(s) => Ok(s.as_str()),
            _ => Err(ConfigError::field(self.key(name), "must be a string")),
        }
    }

    pub fn vec_f64(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        match self.require(name)? {
            toml::Value::Array(a) => a
                .iter()
                .map(|v| {
                    value_as_f64(v).ok_or_else(|| {
                        ConfigError::field(self.key(name), "must be an array of numbers")
                    })
                })
                .collect(),
            _ => Err(ConfigError::field(
                self.key(name),
                "must be an array of numbers",
            )),
        }
    }

    pub fn opt_vec_f64(&self, name: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        if self.get(name).is_none() {
            return Ok(None);
        }
        self.vec_f64(name).map(Some)
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix, ConfigError> {
        match self.require(name)? {
            toml::Value::Array(rows) => {
                let mut parsed: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
                for r in rows {
                    match r {
                        toml::Value::Array(cells) => {
                            let row: Option<Vec<f64>> = cells.iter().map(value_as_f64).collect();
                            parsed.push(row.ok_or_else(|| {
                                ConfigError::field(self.key(name), "rows must contain numbers")
                            })?);
                        }
                        _ => {
                            return Err(ConfigError::field(
                                self.key(name),
                                "must be an array of rows",
                            ))
                        }
                    }
                }
                let dim = parsed.len();
                if parsed.iter().any(|r| r.len() != dim) {
                    return Err(ConfigError::field(self.key(name), "must be square"));
                }
                Ok(Matrix::from_rows(&parsed))
            }
            _ => Err(ConfigError::field(self.key(name), "must be a matrix")),
        }
    }

    /// Grid of θ vectors: an array of arrays, one inner array per θ.
    pub fn theta_grid(&self, name: &str, dim: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
        match self.require(name)? {
            toml::Value::Array(rows) => {
                let mut grid = Vec::with_capacity(rows.len());
                for r in rows {
                    let v = match r {
                        toml::Value::Array(cells) => {
                            let parsed: Option<Vec<f64>> = cells.iter().map(value_as_f64).collect();
                            parsed.ok_or_else(|| {
                                ConfigError::field(self.key(name), "entries must hold numbers")
                            })?
                        }
                        scalar => vec![value_as_f64(scalar).ok_or_else(|| {
                            ConfigError::field(self.key(name), "entries must hold numbers")
                        })?],
                    };
                    if v.len() != dim {
                        return Err(ConfigError::field(
                            self.key(name),
                            format!("each point must have dimension {dim}, got {}", v.len()),
                        ));
                    }
                    grid.push(v);
                }
                if grid.is_empty() {
                    return Err(ConfigError::field(self.key(name), "must not be empty"));
                }
                Ok(grid)
            }
            _ => Err(ConfigError::field(self.key(name), "must be an array")),
        }
    }

    pub fn horizons(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        let h = self.vec_f64(name)?;
        if h.is_empty() {
            return Err(ConfigError::field(self.key(name), "must not be empty"));
        }
        if h.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::field(
                self.key(name),
                "must be strictly increasing",
            ));
        }
        Ok(h)
    }

    /// Uniform 1-d grid: a table {start, stop, points}.
    pub fn linear_grid(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        let t = self.sub_table(name)?;
        let start = t.f64("start")?;
        let stop = t.f64("stop")?;
        let points = t.usize_or("points", 51)?;
        if !(stop > start) {
            return Err(ConfigError::field(
                t.key("stop"),
                "must be greater than start",
            ));
        }
        if points < 2 {
            return Err(ConfigError::field(t.key("points"), "must be at least 2"));
        }
        Ok((0..points)
            .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
            .collect())
    }

    /// Driver model from a `[params.driver]`-style table. Drivers above
    /// dimension 6 are rejected here (conjugates are capped there), and the
    /// declared origin data must survive the finite-difference and
    /// convexity probes.
    pub fn driver(&self, name: &str) -> Result<LevyModel, ConfigError> {
        let t = self.sub_table(name)?;
        let model = match t.str("kind")? {
            "brownian" => {
                let mu = t.vec_f64("mu")?;
                let sigma = t.matrix("sigma")?;
                LevyModel::brownian(mu, sigma)
                    .map_err(|e| ConfigError::field(t.key("sigma"), e.to_string()))?
            }
            "compound-poisson" => {
                let rate = t.f64_positive("rate")?;
                let jumps = t.jumps("jumps")?;
                LevyModel::compound_poisson(rate, jumps)
                    .map_err(|e| ConfigError::field(t.key("rate"), e.to_string()))?
            }
            "drift" => LevyModel::deterministic_drift(t.vec_f64("mu")?),
            other => {
                return Err(ConfigError::field(
                    t.key("kind"),
                    format!("must be one of brownian | compound-poisson | drift, got `{other}`"),
                ))
            }
        };
        if model.dim() > 6 {
            return Err(ConfigError::field(
                t.key("kind"),
                format!("driver dimension {} exceeds the supported 6", model.dim()),
            ));
        }
        model
            .cumulant()
            .check_consistency(0)
            .map_err(|e| ConfigError::field(self.key(name), e.to_string()))?;
        Ok(model)
    }

    /// Subordinator clock from a `[params.clock]`-style table.
    pub fn clock(&self, name: &str) -> Result<SubordinatorModel, ConfigError> {
        let t = self.sub_table(name)?;
        match t.str("kind")? {
            "gamma" => SubordinatorModel::gamma(t.f64_positive("shape")?, t.f64_positive("rate")?)
                .map_err(|e| ConfigError::field(t.key("shape"), e.to_string())),
            "poisson" => SubordinatorModel::poisson(t.f64_positive("rate")?)
                .map_err(|e| ConfigError::field(t.key("rate"), e.to_string())),
            "stable" => SubordinatorModel::stable(t.f64_in_open("nu", 0.0, 1.0)?)
                .map_err(|e| ConfigError::field(t.key("nu"), e.to_string())),
            other => Err(ConfigError::field(
                t.key("kind"),
                format!("must be one of gamma | poisson | stable, got `{other}`"),
            )),
        }
    }

    /// Jump distribution from a `[... .jumps]`-style table.
    pub fn jumps(&self, name: &str) -> Result<JumpMixture, ConfigError> {
        let t = self.sub_table(name)?;
        match t.str("kind")? {
            "unit" => Ok(JumpMixture::unit_point_mass()),
            "point" => {
                let point = t.vec_f64("point")?;
                let dim = point.len();
                JumpMixture::new(dim, vec![(1.0, JumpComponent::PointMass(point))])
                    .map_err(|e| ConfigError::field(t.key("point"), e.to_string()))
            }
            "points" => {
                let weights = t.vec_f64("weights")?;
                let pts = match t.require("points")? {
                    toml::Value::Array(rows) => rows
                        .iter()
                        .map(|r| match r {
                            toml::Value::Array(cells) => cells
                                .iter()
                                .map(value_as_f64)
                                .collect::<Option<Vec<f64>>>()
                                .ok_or_else(|| {
                                    ConfigError::field(t.key("points"), "must hold numbers")
                                }),
                            _ => Err(ConfigError::field(
                                t.key("points"),
                                "must be an array of points",
                            )),
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    _ => {
                        return Err(ConfigError::field(
                            t.key("points"),
                            "must be an array of points",
                        ))
                    }
                };
                if pts.len() != weights.len() || pts.is_empty() {
                    return Err(ConfigError::field(
                        t.key("weights"),
                        "must have one weight per point",
                    ));
                }
                let dim = pts[0].len();
                let comps = weights
                    .into_iter()
                    .zip(pts)
                    .map(|(w, p)| (w, JumpComponent::PointMass(p)))
                    .collect();
                JumpMixture::new(dim, comps)
                    .map_err(|e| ConfigError::field(t.key("weights"), e.to_string()))
            }
            "gaussian" => {
                let mean = t.vec_f64("mean")?;
                let cov = t.matrix("cov")?;
                let dim = mean.len();
                JumpMixture::new(dim, vec![(1.0, JumpComponent::Gaussian { mean, cov })])
                    .map_err(|e| ConfigError::field(t.key("cov"), e.to_string()))
            }
            other => Err(ConfigError::field(
                t.key("kind"),
                format!("must be one of unit | point | points | gaussian, got `{other}`"),
            )),
        }
    }
}

fn value_as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Echo of the parsed config for the JSON report.
pub fn config_echo(cfg: &ExperimentConfig) -> BTreeMap<String, serde_json::Value> {
    let mut m = BTreeMap::new();
    m.insert("id".into(), serde_json::Value::String(cfg.id.clone()));
    m.insert(
        "family".into(),
        serde_json::Value::String(cfg.family.clone()),
    );
    m.insert("seed".into(), serde_json::json!(cfg.seed));
    m.insert(
        "params".into(),
        serde_json::to_value(&cfg.params).unwrap_or(serde_json::Value::Null),
    );
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_str(
            r#"
            id = "demo"
            family = "poisson-inequality"
            seed = 42
            [params]
            p = 0.5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.id, "demo");
        assert_eq!(cfg.params().f64("p").unwrap(), 0.5);
    }

    #[test]
    fn missing_seed_is_a_parse_error() {
        let err = ExperimentConfig::from_str("id = \"x\"\nfamily = \"y\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn field_errors_name_field_and_constraint() {
        let cfg = ExperimentConfig::from_str(
            "id = \"x\"\nfamily = \"imm-ld\"\nseed = 1\n[params]\nnu = 1.5\n",
        )
        .unwrap();
        let err = cfg.params().f64_in_open("nu", 0.0, 1.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("params.nu"), "{msg}");
        assert!(msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn scientific_notation_parses() {
        let cfg = ExperimentConfig::from_str(
            "id = \"x\"\nfamily = \"f\"\nseed = 1\n[params]\nhorizons = [1e4, 1e6]\n",
        )
        .unwrap();
        assert_eq!(cfg.params().horizons("horizons").unwrap(), vec![1e4, 1e6]);
    }

    #[test]
    fn grid_is_inclusive_and_uniform() {
        let cfg =
            ExperimentConfig::from_str("id = \"x\"\nfamily = \"f\"\nseed = 1\n[params.grid\n");
        assert!(cfg.is_err());
        let cfg = ExperimentConfig::from_str(
            "id = \"x\"\nfamily = \"f\"\nseed = 1\n[params.grid]\nstart = 0.0\nstop = 1.0\npoints = 11\n",
        )
        .unwrap();
        let g = cfg.params().linear_grid("grid").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[10], 1.0);
        assert!((g[5] - 0.5).abs() < 1e-15);
    }
}
