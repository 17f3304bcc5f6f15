use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    EqualityWithinTol,
    Violated,
    /// The cone hypothesis failed at some node, so the chain proves nothing.
    Degraded,
}

impl Verdict {
    pub fn is_success(self) -> bool {
        matches!(self, Verdict::Holds | Verdict::EqualityWithinTol)
    }
}

/// Where the potential came from. `GeometryOnly` reports use no potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportProvenance {
    ClosedForm,
    SemiDiscrete,
    GeometryOnly,
}

impl From<crate::transport::Provenance> for ReportProvenance {
    fn from(p: crate::transport::Provenance) -> Self {
        match p {
            crate::transport::Provenance::ClosedForm => ReportProvenance::ClosedForm,
            crate::transport::Provenance::SemiDiscrete => ReportProvenance::SemiDiscrete,
        }
    }
}

/// One inequality `left <= right` of a chain. Both sides carry the chain's
/// constant already.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    pub left: f64,
    pub right: f64,
    /// `right / left`.
    pub ratio: f64,
    pub holds: bool,
}

impl Link {
    /// `left <= right + tol · max(|left|, |right|, reference)`.
    pub fn new(name: impl Into<String>, left: f64, right: f64, tol: f64, reference: f64) -> Self {
        let scale = left.abs().max(right.abs()).max(reference.abs());
        Self {
            name: name.into(),
            left,
            right,
            ratio: right / left,
            holds: left.is_finite() && right.is_finite() && left <= right + tol * scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureInfo {
    pub order: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    /// Required membership `Γ_k⁺`.
    pub required: usize,
    /// Smallest `min_{j <= k} σ_j(L)` over the nodes.
    pub min_margin: f64,
    /// First few failing nodes, in node order.
    pub flagged_nodes: Vec<usize>,
    pub flagged_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs / lhs`; at least one when the inequality holds.
    pub ratio: f64,
    pub links: Vec<Link>,
    /// Identity and sub-claim residuals, relative to the scale noted in `notes`.
    pub residuals: BTreeMap<String, f64>,
    pub intermediates: BTreeMap<String, f64>,
    pub quadrature: QuadratureInfo,
    pub provenance: ReportProvenance,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub cone: ConeReport,
    pub notes: Vec<String>,
}

impl CheckReport {
    /// Recomputes the verdict from the stored numbers.
    pub fn derive_verdict(&self) -> Verdict {
        if self.cone.flagged_count > 0 {
            Verdict::Degraded
        } else if self.links.iter().any(|l| !l.holds) {
            Verdict::Violated
        } else if (self.ratio - 1.0).abs() <= self.tolerance {
            Verdict::EqualityWithinTol
        } else {
            Verdict::Holds
        }
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_tolerance_is_relative() {
        assert!(Link::new("a", 1.0 + 1e-9, 1.0, 1e-8, 0.0).holds);
        assert!(!Link::new("a", 1.0 + 1e-7, 1.0, 1e-8, 0.0).holds);
        // a zero-vs-zero link is judged against the reference scale
        assert!(Link::new("a", 1e-12, 0.0, 1e-8, 1.0).holds);
        assert!(!Link::new("a", f64::NAN, 0.0, 1e-8, 1.0).holds);
    }

    #[test]
    fn verdict_json_names() {
        let s = serde_json::to_string(&Verdict::EqualityWithinTol).unwrap();
        assert_eq!(s, "\"equality_within_tol\"");
    }
}
