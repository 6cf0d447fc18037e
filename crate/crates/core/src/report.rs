//! Outcome records shared by the radii checks, the inequality catalog and the
//! experiment harness. Field order here is the JSON field order.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    AsStated,
    #[default]
    Corrected,
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "as_stated" => Ok(Variant::AsStated),
            "corrected" => Ok(Variant::Corrected),
            _ => Err(crate::Error::Spec(format!("unknown variant {s:?}"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::AsStated => "as_stated",
            Variant::Corrected => "corrected",
        })
    }
}

/// Serialized view of the scalar parameters a check ran with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gauge: Option<String>,
    /// `(α, γ, μ, ω)` for the block power bound.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exponents: Option<[f64; 4]>,
    /// Exponent of the power inequality.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub power: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub id: String,
    pub variant: Variant,
    pub params: ParamRecord,
    pub inputs_digest: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    /// Full inputs, attached to failure records so they replay stand-alone.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inputs: Option<Vec<ComplexMatrix>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCheck {
    pub id: String,
    pub variant: Variant,
    pub params: ParamRecord,
    pub passed: bool,
    pub skipped: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErroredCheck {
    pub id: String,
    pub variant: Variant,
    pub params: ParamRecord,
    pub inputs_digest: String,
    pub passed: bool,
    pub skipped: bool,
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inputs: Option<Vec<ComplexMatrix>>,
}

/// One entry of a catalog sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckOutcome {
    Checked(InequalityReport),
    Skipped(SkippedCheck),
    Errored(ErroredCheck),
}

impl CheckOutcome {
    pub fn id(&self) -> &str {
        match self {
            CheckOutcome::Checked(r) => &r.id,
            CheckOutcome::Skipped(s) => &s.id,
            CheckOutcome::Errored(e) => &e.id,
        }
    }

    pub fn params(&self) -> &ParamRecord {
        match self {
            CheckOutcome::Checked(r) => &r.params,
            CheckOutcome::Skipped(s) => &s.params,
            CheckOutcome::Errored(e) => &e.params,
        }
    }

    pub fn report(&self) -> Option<&InequalityReport> {
        match self {
            CheckOutcome::Checked(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self, CheckOutcome::Skipped(_))
    }

    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Checked(r) if r.passed)
    }
}

/// How lhs and rhs are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// `lhs ≤ rhs + tol`.
    Inequality,
    /// `|lhs − rhs| ≤ tol`.
    Identity,
}

/// Relative tolerance with an absolute floor: `max(rel·(1 + scale), floor)`.
pub fn relative_tolerance(relative: f64, floor: f64, scale: f64) -> f64 {
    (relative * (1.0 + scale.abs())).max(floor)
}

/// Whether the comparison holds. NaN on either side never passes.
pub fn decide(cmp: Comparison, lhs: f64, rhs: f64, tol: f64) -> bool {
    match cmp {
        Comparison::Inequality => lhs <= rhs + tol,
        Comparison::Identity => (lhs - rhs).abs() <= tol,
    }
}

/// Hex SHA-256 of the canonical JSON serialization of the inputs and params,
/// i.e. of the JSON array `[inputs, params]`.
pub fn inputs_digest(inputs: &[ComplexMatrix], params: &ParamRecord) -> String {
    DigestPrefix::new(inputs).finish(params)
}

/// Hasher state after the inputs half of [`inputs_digest`], so that many
/// parameter points over the same inputs hash the matrices once.
#[derive(Clone)]
pub struct DigestPrefix(Sha256);

impl DigestPrefix {
    pub fn new<M: Serialize>(inputs: &[M]) -> Self {
        let mut h = Sha256::new();
        h.update(b"[");
        h.update(serde_json::to_vec(inputs).expect("matrices serialize"));
        h.update(b",");
        Self(h)
    }

    pub fn finish(&self, params: &ParamRecord) -> String {
        let mut h = self.0.clone();
        h.update(serde_json::to_vec(params).expect("params serialize"));
        h.update(b"]");
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decide_semantics() {
        assert!(decide(Comparison::Inequality, 1.0, 1.0, 0.0));
        assert!(decide(Comparison::Inequality, 1.0 + 1e-9, 1.0, 1e-8));
        assert!(!decide(Comparison::Inequality, 1.1, 1.0, 1e-8));
        assert!(!decide(Comparison::Identity, 1.0, 1.1, 1e-8));
        assert!(!decide(Comparison::Inequality, f64::NAN, 1.0, 1e-8));
    }

    #[test]
    fn tolerance_has_floor() {
        assert_eq!(relative_tolerance(1e-8, 1e-12, 1.0), 2e-8);
        assert_eq!(relative_tolerance(0.0, 1e-12, 5.0), 1e-12);
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = ComplexMatrix::identity(2);
        let p = ParamRecord { t: Some(0.5), ..Default::default() };
        let d1 = inputs_digest(std::slice::from_ref(&a), &p);
        assert_eq!(d1, inputs_digest(std::slice::from_ref(&a), &p));
        assert_eq!(d1.len(), 64);
        let q = ParamRecord { t: Some(0.25), ..Default::default() };
        assert_ne!(d1, inputs_digest(std::slice::from_ref(&a), &q));
    }

    #[test]
    fn digest_is_hash_of_canonical_json() {
        let a = ComplexMatrix::identity(2);
        let p = ParamRecord { r: Some(2.0), pair: Some("rational".into()), ..Default::default() };
        let inputs = vec![a.clone(), a.scale_real(0.1)];
        let canonical = serde_json::to_string(&(&inputs, &p)).unwrap();
        assert_eq!(inputs_digest(&inputs, &p), hex::encode(Sha256::digest(canonical.as_bytes())));
        let refs: Vec<&ComplexMatrix> = inputs.iter().collect();
        assert_eq!(DigestPrefix::new(&refs).finish(&p), inputs_digest(&inputs, &p));
    }

    #[test]
    fn outcome_json_roundtrip() {
        let skipped = CheckOutcome::Skipped(SkippedCheck {
            id: "davidson_power".into(),
            variant: Variant::Corrected,
            params: ParamRecord::default(),
            passed: false,
            skipped: true,
            reason: "inputs not positive".into(),
        });
        let text = serde_json::to_string(&skipped).unwrap();
        assert_eq!(
            text,
            r#"{"id":"davidson_power","variant":"corrected","params":{},"passed":false,"skipped":true,"reason":"inputs not positive"}"#
        );
        assert_eq!(serde_json::from_str::<CheckOutcome>(&text).unwrap(), skipped);
    }
}
