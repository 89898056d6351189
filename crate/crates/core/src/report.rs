//! Residual bookkeeping shared by every check.

use serde::Serialize;

use crate::error::{Error, Result};

/// How a measured value is judged against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// Pass iff value ≤ threshold (the usual residual check).
    AtMost,
    /// Pass iff value ≥ threshold (witnesses that something is nonzero).
    AtLeast,
    /// Reported for the record, never graded.
    Informational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

/// One identity measured over a set of sample points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub identity: String,
    /// The identity written out, e.g. `J^2 = -eps Id`.
    pub anchor: String,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Residual {
    pub fn at_most(identity: impl Into<String>, anchor: impl Into<String>, value: f64, tol: f64, samples: usize) -> Self {
        Self {
            identity: identity.into(),
            anchor: anchor.into(),
            value,
            threshold: tol,
            bound: Bound::AtMost,
            samples,
            note: None,
        }
    }

    pub fn at_least(identity: impl Into<String>, anchor: impl Into<String>, value: f64, floor: f64, samples: usize) -> Self {
        Self {
            bound: Bound::AtLeast,
            ..Self::at_most(identity, anchor, value, floor, samples)
        }
    }

    pub fn informational(identity: impl Into<String>, anchor: impl Into<String>, value: f64, samples: usize) -> Self {
        Self {
            bound: Bound::Informational,
            ..Self::at_most(identity, anchor, value, f64::NAN, samples)
        }
    }

    /// Keeps the value but drops the pass/fail judgement.
    pub fn into_informational(mut self) -> Self {
        self.bound = Bound::Informational;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn verdict(&self) -> Verdict {
        match self.bound {
            Bound::AtMost if self.value <= self.threshold => Verdict::Pass,
            Bound::AtLeast if self.value >= self.threshold => Verdict::Pass,
            Bound::Informational => Verdict::Skip,
            _ => Verdict::Fail,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict() != Verdict::Fail
    }
}

/// The outcome of one check: a list of identities with their residuals.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub items: Vec<Residual>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, item: Residual) {
        self.items.push(item);
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.items.extend(other.items);
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(Residual::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Residual> {
        self.items.iter().filter(|r| !r.passed())
    }

    /// Largest value among graded upper-bound items (NaN if any is NaN).
    pub fn worst(&self) -> f64 {
        self.items
            .iter()
            .filter(|r| r.bound == Bound::AtMost)
            .fold(0.0, |a, r| crate::algebra::nan_max(a, r.value))
    }

    pub fn item(&self, identity: &str) -> Option<&Residual> {
        self.items.iter().find(|r| r.identity == identity)
    }

    /// Items whose identity starts with `prefix`.
    pub fn matching<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Residual> + 'a {
        self.items.iter().filter(move |r| r.identity.starts_with(prefix))
    }
}

/// Tolerance budget. Names are those accepted by [`Tolerances::set`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Constant-coefficient algebra (exact path).
    pub exact: f64,
    /// Pointwise algebra on smooth fields.
    pub algebra: f64,
    /// Identities involving one finite-difference derivative.
    pub first_derivative: f64,
    /// Connection and single-curvature identities.
    pub connection: f64,
    /// Ricci and doubly nested identities.
    pub nested: f64,
    /// Vanishing Nijenhuis tensors of integrable structures.
    pub integrable: f64,
    /// Bracket identities on tangent bundles.
    pub bracket: f64,
    /// Lower bound a nonzero witness must reach.
    pub witness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: 1e-12,
            algebra: 1e-9,
            first_derivative: 1e-6,
            connection: 1e-4,
            nested: 5e-3,
            integrable: 1e-5,
            bracket: 1e-3,
            witness: 5e-2,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 8] = [
        "exact",
        "algebra",
        "first_derivative",
        "connection",
        "nested",
        "integrable",
        "bracket",
        "witness",
    ];

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::InvalidStructure(format!(
                "tolerance `{name}` must be a finite non-negative number"
            )));
        }
        let slot = match name {
            "exact" => &mut self.exact,
            "algebra" => &mut self.algebra,
            "first_derivative" => &mut self.first_derivative,
            "connection" => &mut self.connection,
            "nested" => &mut self.nested,
            "integrable" => &mut self.integrable,
            "bracket" => &mut self.bracket,
            "witness" => &mut self.witness,
            other => {
                return Err(Error::InvalidStructure(format!(
                    "unknown tolerance `{other}` (known: {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// Exact or smooth pointwise algebra tolerance.
    pub fn pointwise(&self, constant: bool) -> f64 {
        if constant {
            self.exact
        } else {
            self.algebra
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert_eq!(Residual::at_most("a", "", 1e-13, 1e-12, 1).verdict(), Verdict::Pass);
        assert_eq!(Residual::at_most("a", "", 2.0, 1e-12, 1).verdict(), Verdict::Fail);
        assert_eq!(Residual::at_most("a", "", f64::NAN, 1.0, 1).verdict(), Verdict::Fail);
        assert_eq!(Residual::at_least("w", "", 0.1, 0.05, 1).verdict(), Verdict::Pass);
        assert_eq!(Residual::at_least("w", "", 0.01, 0.05, 1).verdict(), Verdict::Fail);
        assert_eq!(Residual::informational("i", "", 3.0, 1).verdict(), Verdict::Skip);
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.set("nested", 1e-2).unwrap();
        assert_eq!(t.nested, 1e-2);
        assert!(t.set("bogus", 1.0).is_err());
        assert!(t.set("exact", -1.0).is_err());
    }
}
