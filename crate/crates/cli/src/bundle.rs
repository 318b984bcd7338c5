//! Machine-readable results of a run.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use cyldrift::cell::{CellAnalysis, RegimeCase, RegimeTag};
use cyldrift::cylinder::{CompatibilityReport, CylinderSolution, StabilizationFit, TailFit};

use crate::config::RunConfig;
use crate::emit::ProfileRow;

/// A float that serializes non-finite values as `"inf"`, `"-inf"`, `"nan"`.
#[derive(Debug, Clone, Copy)]
pub struct Real(pub f64);

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits() || (self.0.is_nan() && other.0.is_nan())
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real(v)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(Real(v)),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(Real(f64::INFINITY)),
                "-inf" => Ok(Real(f64::NEG_INFINITY)),
                "nan" => Ok(Real(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("expected a number or inf/-inf/nan, got {other:?}"))),
            },
        }
    }
}

fn opt(v: Option<f64>) -> Option<Real> {
    v.map(Real)
}

/// SHA-256 of the canonical configuration text.
pub fn config_hash(config: &RunConfig) -> String {
    let digest = Sha256::digest(config.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drifts {
    pub minus: Real,
    pub plus: Real,
    /// Before the near-zero refinement.
    pub raw_minus: Real,
    pub raw_plus: Real,
    pub refined_minus: bool,
    pub refined_plus: bool,
}

impl Drifts {
    pub fn new(left: &CellAnalysis, right: &CellAnalysis) -> Self {
        Drifts {
            minus: Real(left.drift),
            plus: Real(right.drift),
            raw_minus: Real(left.raw_drift),
            raw_plus: Real(right.raw_drift),
            refined_minus: left.refined,
            refined_plus: right.refined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub tag: RegimeTag,
    pub zero_minus: bool,
    pub zero_plus: bool,
    pub boundary_case: bool,
    pub eps_drift: Real,
    /// Set when the configuration overrode the classification.
    pub forced: bool,
}

impl RegimeInfo {
    pub fn new(case: &RegimeCase, forced: bool) -> Self {
        RegimeInfo {
            tag: case.tag,
            zero_minus: case.zero_flags.0,
            zero_plus: case.zero_flags.1,
            boundary_case: case.boundary_case(),
            eps_drift: Real(case.tolerance),
            forced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: Real,
    pub sup_change: Option<Real>,
    pub base_max_left: Option<Real>,
    pub base_max_right: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub tol: Real,
    pub final_k: Real,
    pub per_k: Vec<KRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideFit {
    pub limit: Real,
    pub gamma: Real,
    pub r_squared: Real,
    pub poor_fit: bool,
}

impl From<&StabilizationFit> for SideFit {
    fn from(f: &StabilizationFit) -> Self {
        SideFit { limit: Real(f.limit), gamma: Real(f.gamma), r_squared: Real(f.r_squared), poor_fit: f.poor_fit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub kind: String,
    pub delta: Option<Real>,
    pub r_squared: Option<Real>,
    pub distance: Option<Real>,
    pub tolerance: Option<Real>,
    pub stabilized: Option<bool>,
    pub reason: Option<String>,
}

impl From<&TailFit> for TailSummary {
    fn from(t: &TailFit) -> Self {
        let empty = TailSummary {
            kind: String::new(),
            delta: None,
            r_squared: None,
            distance: None,
            tolerance: None,
            stabilized: None,
            reason: None,
        };
        match t {
            TailFit::ExponentialRate { delta, r_squared } => TailSummary {
                kind: "ExponentialRate".into(),
                delta: Some(Real(*delta)),
                r_squared: Some(Real(*r_squared)),
                ..empty
            },
            TailFit::PeriodicStabilization { distance, tolerance, stabilized, .. } => TailSummary {
                kind: "PeriodicStabilization".into(),
                distance: Some(Real(*distance)),
                tolerance: Some(Real(*tolerance)),
                stabilized: Some(*stabilized),
                ..empty
            },
            TailFit::Unavailable { reason } => {
                TailSummary { kind: "Unavailable".into(), reason: Some(reason.clone()), ..empty }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    pub functional: Real,
    pub r_k: Real,
    pub corrected_residual: Real,
    pub tolerance: Real,
    pub data_norm: Real,
    pub compatible: bool,
}

impl From<&CompatibilityReport> for Compatibility {
    fn from(r: &CompatibilityReport) -> Self {
        Compatibility {
            functional: Real(r.functional),
            r_k: Real(r.r_k),
            corrected_residual: Real(r.corrected_residual),
            tolerance: Real(r.tolerance),
            data_norm: Real(r.data_norm),
            compatible: r.is_compatible(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub min_diffusion: Real,
    pub decay_c0: Real,
    pub decay_gamma0: Real,
    pub compact_support: bool,
    pub decay_passed: bool,
    pub m_norm: Real,
    pub boundary_case: bool,
    /// The data failed the exponential-decay check; results are advisory.
    pub hypothesis_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseSmallnessSummary {
    pub skipped: Option<String>,
    pub rate_left: Option<Real>,
    pub rate_right: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x1: Real,
    pub cross_index: usize,
    pub value: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub config_hash: String,
    pub drifts: Drifts,
    pub regime: RegimeInfo,
    pub convergence: Convergence,
    pub fit_minus: Option<SideFit>,
    pub fit_plus: Option<SideFit>,
    pub adjoint_left: Option<TailSummary>,
    pub adjoint_right: Option<TailSummary>,
    pub compatibility: Option<Compatibility>,
    pub hypotheses: Hypotheses,
    pub monotonicity_beta: Option<Real>,
    pub base_smallness: Option<BaseSmallnessSummary>,
    /// Solution on the reporting window of the final `k`.
    pub profile: Vec<Sample>,
}

impl ResultBundle {
    pub fn new(config: &RunConfig, drifts: Drifts, forced: bool, sol: &CylinderSolution) -> Self {
        let last = sol.per_k.last().expect("at least one k was solved");
        let profile = sol
            .window_x1
            .iter()
            .zip(&sol.window_cross)
            .zip(&last.window_values)
            .map(|((&x1, &cross_index), &value)| Sample { x1: Real(x1), cross_index, value: Real(value) })
            .collect();
        let h = &sol.hypotheses;
        ResultBundle {
            config_hash: config_hash(config),
            drifts,
            regime: RegimeInfo::new(&sol.regime, forced),
            convergence: Convergence {
                converged: sol.converged,
                tol: Real(config.tol),
                final_k: Real(sol.final_k),
                per_k: sol
                    .per_k
                    .iter()
                    .map(|s| KRow {
                        k: Real(s.k),
                        sup_change: opt(s.sup_change),
                        base_max_left: opt(s.base_maxima.map(|m| m.0)),
                        base_max_right: opt(s.base_maxima.map(|m| m.1)),
                    })
                    .collect(),
            },
            fit_minus: sol.fit_left.as_ref().map(SideFit::from),
            fit_plus: sol.fit_right.as_ref().map(SideFit::from),
            adjoint_left: sol.adjoint.as_ref().map(|a| TailSummary::from(&a.left)),
            adjoint_right: sol.adjoint.as_ref().map(|a| TailSummary::from(&a.right)),
            compatibility: sol.compatibility.as_ref().map(Compatibility::from),
            hypotheses: Hypotheses {
                min_diffusion: Real(h.min_diffusion),
                decay_c0: Real(h.data_decay.c0),
                decay_gamma0: Real(h.data_decay.gamma0),
                compact_support: h.data_decay.compact_support,
                decay_passed: h.data_decay.passed,
                m_norm: Real(h.m_norm),
                boundary_case: h.boundary_case,
                hypothesis_violated: !h.data_decay.passed,
            },
            monotonicity_beta: sol.monotonicity.as_ref().map(|m| Real(m.beta_estimate)),
            base_smallness: sol.base_smallness.as_ref().map(|b| BaseSmallnessSummary {
                skipped: b.skipped.clone(),
                rate_left: opt(b.rate_left),
                rate_right: opt(b.rate_right),
            }),
            profile,
        }
    }

    pub fn profile_rows(&self) -> Vec<ProfileRow> {
        self.profile.iter().map(|s| ProfileRow { x1: s.x1.0, cross_index: s.cross_index, value: s.value.0 }).collect()
    }
}

/// Run facts that change between otherwise identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub command: String,
    pub version: &'static str,
    pub created: String,
    pub threads: usize,
}

impl Metadata {
    pub fn new(config_hash: String, command: &str) -> Self {
        Metadata {
            config_hash,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            created: chrono::Utc::now().to_rfc3339(),
            threads: rayon::current_num_threads(),
        }
    }
}
