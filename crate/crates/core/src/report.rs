//! The JSON analysis report: the external, schema-versioned form of an
//! [`InferenceSummary`] plus run provenance. Files are written atomically
//! (temp file + rename) so a failed run never leaves a partial report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::inference::{BfKind, InferenceSummary, RefinedVerdict, Verdict};

/// Bumped whenever the report layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// The JSON Schema document reports validate against, shipped at
/// `schema/report.schema.json`.
pub const SCHEMA_JSON: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdiJson {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Provenance the inference layer does not know about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportMeta {
    pub theta0: f64,
    pub delta: f64,
    pub tau: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub theta0: f64,
    pub delta: f64,
    pub tau: f64,
    pub eta1: f64,
    pub alpha: f64,
    pub n_draws: usize,
    pub ess_indicator: f64,
    pub p_alt: f64,
    pub p_alt_se: f64,
    /// Point estimate; null when every draw fell on one side.
    pub bf10: Option<f64>,
    pub log10_bf10: Option<f64>,
    pub log10_bf10_se: Option<f64>,
    /// One-sided rule-of-three bound, set exactly when `bf10` is null.
    pub bf10_bound: Option<f64>,
    pub bf10_kind: BfKind,
    pub hdi: HdiJson,
    pub verdict: Verdict,
    pub refined_verdict: RefinedVerdict,
    pub seed: u64,
}

impl Report {
    pub fn from_summary(summary: &InferenceSummary, meta: &ReportMeta) -> Self {
        let bf = &summary.bayes_factor;
        let (bf10, log10_bf10, log10_se, bound) = match bf.kind {
            BfKind::Point => (
                Some(bf.bf10),
                Some(bf.log10_bf10),
                Some(bf.mc_standard_error_log10),
                None,
            ),
            BfKind::LowerBound | BfKind::UpperBound => (None, None, None, Some(bf.bf10)),
        };
        Report {
            schema_version: SCHEMA_VERSION,
            theta0: meta.theta0,
            delta: meta.delta,
            tau: meta.tau,
            eta1: summary.eta1,
            alpha: summary.alpha,
            n_draws: summary.mass.n_draws,
            ess_indicator: summary.mass.n_effective,
            p_alt: summary.mass.p_alt,
            p_alt_se: summary.mass.standard_error,
            bf10,
            log10_bf10,
            log10_bf10_se: log10_se,
            bf10_bound: bound,
            bf10_kind: bf.kind,
            hdi: HdiJson {
                lower: summary.hdi.lower,
                upper: summary.hdi.upper,
                level: summary.hdi.nominal_level,
            },
            verdict: summary.decision.verdict,
            refined_verdict: summary.decision.refined_verdict,
            seed: meta.seed,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Write bytes to `path` via a temp file in the same directory and an
/// atomic rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::IntervalHypothesis;
    use crate::inference::{full_report, ParamDraws};

    fn sample_report(values: Vec<f64>) -> Report {
        let draws = ParamDraws::single_chain(values).unwrap();
        let h = IntervalHypothesis::new(0.0, 0.1).unwrap();
        let summary = full_report(&draws, &h, 0.5, 0.05).unwrap();
        Report::from_summary(
            &summary,
            &ReportMeta { theta0: 0.0, delta: 0.1, tau: 0.15, seed: 9 },
        )
    }

    #[test]
    fn report_roundtrips_through_json() {
        let mixed: Vec<f64> = (0..500).map(|i| (i as f64 / 500.0) - 0.25).collect();
        let r = sample_report(mixed);
        let text = r.to_json_pretty();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
        assert_eq!(back.schema_version, SCHEMA_VERSION);
        assert!(back.bf10.is_some());
        assert!(back.bf10_bound.is_none());
    }

    #[test]
    fn degenerate_mass_serializes_bound_not_point() {
        let all_null: Vec<f64> = (0..100).map(|i| 0.0001 * i as f64).collect();
        let r = sample_report(all_null);
        assert_eq!(r.bf10_kind, BfKind::UpperBound);
        assert!(r.bf10.is_none());
        assert!(r.bf10_bound.is_some());
        let v: serde_json::Value = serde_json::from_str(&r.to_json_pretty()).unwrap();
        assert!(v["bf10"].is_null());
        assert_eq!(v["bf10_kind"], "upper_bound");
    }

    #[test]
    fn report_carries_all_schema_required_fields() {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA_JSON).unwrap();
        let required: Vec<&str> = schema["required"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap())
            .collect();
        let mixed: Vec<f64> = (0..500).map(|i| (i as f64 / 500.0) - 0.25).collect();
        let instance: serde_json::Value =
            serde_json::from_str(&sample_report(mixed).to_json_pretty()).unwrap();
        for field in required {
            assert!(
                !instance[field].is_null() || field == "bf10",
                "missing required field {field}"
            );
            assert!(instance.get(field).is_some(), "field {field} absent");
        }
        // and no extra fields beyond the schema's properties
        let props = schema["properties"].as_object().unwrap();
        for key in instance.as_object().unwrap().keys() {
            assert!(props.contains_key(key), "field {key} not in schema");
        }
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
    }
}
