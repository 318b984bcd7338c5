//! Strict JSON run configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use cyldrift::cell::RegimeTag;
use cyldrift::coefficients::{CoefficientModel, ScalarField, ZoneCoefficients, Zoned};
use cyldrift::cylinder::InfiniteOptions;
use cyldrift::discretize::Scheme;
use cyldrift::geometry::CrossSection;
use cyldrift::linalg::SolveOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid value at {path}: {message}")]
    Value { path: String, message: String },
}

impl ConfigError {
    pub fn path(&self) -> &str {
        match self {
            ConfigError::Schema { path, .. } | ConfigError::Value { path, .. } => path,
        }
    }

    fn value(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Value { path: path.into(), message: message.into() }
    }
}

/// Data fields per zone; a missing zone is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonedData {
    #[serde(default = "zero_field")]
    pub left: ScalarField,
    #[serde(default = "zero_field")]
    pub middle: ScalarField,
    #[serde(default = "zero_field")]
    pub right: ScalarField,
}

impl Default for ZonedData {
    fn default() -> Self {
        ZonedData { left: zero_field(), middle: zero_field(), right: zero_field() }
    }
}

impl ZonedData {
    fn to_zoned(&self) -> Zoned<ScalarField> {
        Zoned { left: self.left.clone(), middle: self.middle.clone(), right: self.right.clone() }
    }
}

fn zero_field() -> ScalarField {
    ScalarField::constant(0.0)
}

/// Half-cylinder problem for the `semi` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiConfig {
    /// Dirichlet data on `S_0`, one value per cross-section cell or a single
    /// value for all of them.
    pub phi: Vec<f64>,
    pub far_value: f64,
    pub k: f64,
}

/// Parameter grid for the `sweep` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// JSON pointer into this config, e.g. `/zones/right/b/0/value`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    #[serde(default = "CrossSection::point")]
    pub cross_section: CrossSection,
    /// Axial cells per unit period, so `h = 1 / cells_per_unit`.
    #[serde(default = "defaults::cells_per_unit")]
    pub cells_per_unit: usize,
    #[serde(default = "defaults::k_sequence")]
    pub k_sequence: Vec<f64>,
    #[serde(default = "defaults::window")]
    pub window: f64,
    pub zones: Zoned<ZoneCoefficients>,
    #[serde(default)]
    pub f: ZonedData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<ZonedData>,
    /// Forces the regime instead of classifying the drifts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeTag>,
    /// `(K⁻, K⁺)` for the two-parameter regime.
    #[serde(default)]
    pub limits: (f64, f64),
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "defaults::eps_drift")]
    pub eps_drift: f64,
    /// Successive-`k` convergence tolerance.
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::compat_tol")]
    pub compat_tol: f64,
    #[serde(default = "defaults::anchor_window")]
    pub anchor_window: (f64, f64),
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi: Option<SemiConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

mod defaults {
    use cyldrift::cylinder::InfiniteOptions;

    pub fn cells_per_unit() -> usize {
        InfiniteOptions::default().cells_per_unit
    }
    pub fn k_sequence() -> Vec<f64> {
        InfiniteOptions::default().k_sequence
    }
    pub fn window() -> f64 {
        InfiniteOptions::default().window
    }
    pub fn eps_drift() -> f64 {
        1e-6
    }
    pub fn tol() -> f64 {
        InfiniteOptions::default().tol
    }
    pub fn compat_tol() -> f64 {
        InfiniteOptions::default().compat_tol
    }
    pub fn anchor_window() -> (f64, f64) {
        InfiniteOptions::default().anchor_window
    }
}

/// A validated configuration plus non-fatal findings.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

/// Parses and validates a configuration; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<Parsed, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Schema { path, message: e.into_inner().to_string() }
    })?;
    let warnings = config.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Parsed { config, warnings })
}

fn zone_names() -> [&'static str; 3] {
    ["left", "middle", "right"]
}

impl RunConfig {
    /// Checks ranges and builds the model once; returns aliasing warnings.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        if self.dimension == 0 {
            return Err(ConfigError::value("dimension", "must be at least 1"));
        }
        let cs = &self.cross_section;
        if cs.dim() + 1 != self.dimension {
            return Err(ConfigError::value(
                "cross_section.extents",
                format!("dimension {} needs {} extents, got {}", self.dimension, self.dimension - 1, cs.dim()),
            ));
        }
        if cs.cells_per_axis.len() != cs.dim() {
            return Err(ConfigError::value(
                "cross_section.cells_per_axis",
                format!("expected {} entries, got {}", cs.dim(), cs.cells_per_axis.len()),
            ));
        }
        for (axis, &(lo, hi)) in cs.extents.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(ConfigError::value(
                    format!("cross_section.extents[{axis}]"),
                    format!("need lo < hi, got ({lo}, {hi})"),
                ));
            }
        }
        if let Some(axis) = cs.cells_per_axis.iter().position(|&n| n == 0) {
            return Err(ConfigError::value(format!("cross_section.cells_per_axis[{axis}]"), "must be positive"));
        }
        if self.cells_per_unit == 0 {
            return Err(ConfigError::value("cells_per_unit", "must be positive"));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(ConfigError::value("window", format!("must be positive, got {}", self.window)));
        }
        if self.k_sequence.is_empty() {
            return Err(ConfigError::value("k_sequence", "must not be empty"));
        }
        for (i, &k) in self.k_sequence.iter().enumerate() {
            if !(k >= self.window + 2.0 && k.is_finite()) {
                return Err(ConfigError::value(
                    format!("k_sequence[{i}]"),
                    format!("{k} is shorter than window {} plus 2", self.window),
                ));
            }
            if i > 0 && !(k > self.k_sequence[i - 1]) {
                return Err(ConfigError::value(format!("k_sequence[{i}]"), "sequence must be strictly increasing"));
            }
        }
        for (name, v) in [("eps_drift", self.eps_drift), ("tol", self.tol), ("compat_tol", self.compat_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::value(name, format!("must be positive, got {v}")));
            }
        }
        let (lo, hi) = self.anchor_window;
        if !(hi > lo) {
            return Err(ConfigError::value("anchor_window", format!("need lo < hi, got ({lo}, {hi})")));
        }
        self.solver.validate().map_err(|e| ConfigError::value("solver", e.to_string()))?;
        if self.g.is_some() && self.dimension == 1 {
            return Err(ConfigError::value("g", "lateral data need dimension at least 2"));
        }
        if let Some(semi) = &self.semi {
            let n = cs.n_cells();
            if semi.phi.len() != 1 && semi.phi.len() != n {
                return Err(ConfigError::value(
                    "semi.phi",
                    format!("expected 1 or {n} values, got {}", semi.phi.len()),
                ));
            }
            if !(semi.k >= 4.0) {
                return Err(ConfigError::value("semi.k", format!("must be at least 4, got {}", semi.k)));
            }
        }
        if let Some(sweep) = &self.sweep {
            if !sweep.parameter.starts_with('/') {
                return Err(ConfigError::value("sweep.parameter", "must be a JSON pointer starting with '/'"));
            }
            if sweep.values.is_empty() {
                return Err(ConfigError::value("sweep.values", "must not be empty"));
            }
        }

        let mut warnings = Vec::new();
        for (zone, zc) in zone_names().into_iter().zip([&self.zones.left, &self.zones.middle, &self.zones.right]) {
            for (name, fields) in [("a", &zc.a), ("b", &zc.b)] {
                if fields.len() != self.dimension {
                    return Err(ConfigError::value(
                        format!("zones.{zone}.{name}"),
                        format!("expected {} fields, got {}", self.dimension, fields.len()),
                    ));
                }
                for (axis, field) in fields.iter().enumerate() {
                    let path = format!("zones.{zone}.{name}[{axis}]");
                    field.validate().map_err(|e| ConfigError::value(&path, e.to_string()))?;
                    warnings.extend(self.aliasing(&path, field));
                }
            }
        }
        let data = [("f", Some(&self.f)), ("g", self.g.as_ref())];
        for (name, zoned) in data {
            let Some(zoned) = zoned else { continue };
            for (zone, field) in zone_names().into_iter().zip([&zoned.left, &zoned.middle, &zoned.right]) {
                let path = format!("{name}.{zone}");
                field.validate().map_err(|e| ConfigError::value(&path, e.to_string()))?;
                warnings.extend(self.aliasing(&path, field));
            }
        }
        self.model()?;
        Ok(warnings)
    }

    /// A mode `m` oscillates `m` times per period and needs more than `2m`
    /// cells per period to be resolved.
    fn aliasing(&self, path: &str, field: &ScalarField) -> Option<String> {
        let m = field.max_mode() as usize;
        (m > 0 && self.cells_per_unit <= 2 * m).then(|| {
            format!(
                "{path}: Fourier mode {m} is aliased at cells_per_unit = {} (needs more than {})",
                self.cells_per_unit,
                2 * m
            )
        })
    }

    pub fn model(&self) -> Result<CoefficientModel, ConfigError> {
        CoefficientModel::new(
            self.dimension,
            self.zones.clone(),
            self.f.to_zoned(),
            self.g.as_ref().map(ZonedData::to_zoned),
        )
        .map_err(|e| ConfigError::value("zones", e.to_string()))
    }

    pub fn infinite_options(&self) -> InfiniteOptions {
        InfiniteOptions {
            k_sequence: self.k_sequence.clone(),
            window: self.window,
            cells_per_unit: self.cells_per_unit,
            tol: self.tol,
            compat_tol: self.compat_tol,
            scheme: self.scheme,
            solver: self.solver,
            limits: self.limits,
            anchor_window: self.anchor_window,
        }
    }

    /// Canonical text: defaults filled in, keys in declaration order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_model(model: &CoefficientModel, cs: &CrossSection) -> Self {
        let data = |z: &Zoned<ScalarField>| ZonedData {
            left: z.left.clone(),
            middle: z.middle.clone(),
            right: z.right.clone(),
        };
        RunConfig {
            dimension: model.dim(),
            cross_section: cs.clone(),
            cells_per_unit: defaults::cells_per_unit(),
            k_sequence: defaults::k_sequence(),
            window: defaults::window(),
            zones: model.zones.clone(),
            f: data(&model.f),
            g: model.g.as_ref().map(data),
            regime: None,
            limits: (0.0, 0.0),
            scheme: Scheme::Upwind,
            eps_drift: defaults::eps_drift(),
            tol: defaults::tol(),
            compat_tol: defaults::compat_tol(),
            anchor_window: defaults::anchor_window(),
            solver: SolveOptions::default(),
            out_dir: None,
            semi: None,
            sweep: None,
        }
    }
}
