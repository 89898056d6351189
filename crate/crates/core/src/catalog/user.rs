//! User-supplied constant mixed 3-structures.
//!
//! A case file starts with the line `parahyper-case v1`, followed by TOML:
//!
//! ```text
//! parahyper-case v1
//! id = "my-case"
//! dim = 3
//! phi1 = [[0, 0, 0], [0, 0, -1], [0, 1, 0]]
//! xi1 = [1, 0, 0]
//! eta1 = [1, 0, 0]
//! # phi2, xi2, eta2, phi3, xi3, eta3 likewise
//! metric = [[1, 0, 0], [0, -1, 0], [0, 0, -1]]   # optional
//! seed = [[...]]                                 # optional, used without a metric
//! ```
//!
//! Matrices are lists of rows. The structure is validated against the mixed
//! 3-structure axioms before it is accepted.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::{pass, CatalogEntry, EntryKind, SasakianMode, Suite};
use crate::algebra::{SquareMatrix, Vector};
use crate::error::{Error, Result};
use crate::mixed3::{check_metric_mixed, check_mixed_axioms, MetricMixed, MixedTriple};
use crate::report::{CheckReport, Tolerances};
use crate::smooth::{Chart, Field, SamplePlan};

pub const USER_HEADER: &str = "parahyper-case v1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    id: String,
    dim: usize,
    phi1: Vec<Vec<f64>>,
    phi2: Vec<Vec<f64>>,
    phi3: Vec<Vec<f64>>,
    xi1: Vec<f64>,
    xi2: Vec<f64>,
    xi3: Vec<f64>,
    eta1: Vec<f64>,
    eta2: Vec<f64>,
    eta3: Vec<f64>,
    metric: Option<Vec<Vec<f64>>>,
    seed: Option<Vec<Vec<f64>>>,
}

fn matrix(rows: &[Vec<f64>], dim: usize) -> Result<SquareMatrix> {
    if rows.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rows.len(),
        });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: r.len(),
        });
    }
    Ok(SquareMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn vector(v: &[f64], dim: usize) -> Result<Vector> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    Ok(Vector::from_column_slice(v))
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn first_failure(report: &CheckReport) -> Result<()> {
    match report.failures().next() {
        Some(r) => Err(Error::ValidationFailed {
            axiom: r.identity.clone(),
            residual: r.value,
        }),
        None => Ok(()),
    }
}

/// Parses and validates a case file's contents.
pub fn parse_user(text: &str) -> Result<CatalogEntry> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "empty case file".into(),
        });
    }
    let header_end = text.find('\n').unwrap_or(text.len());
    if text[..header_end].trim() != USER_HEADER {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("expected header `{USER_HEADER}`"),
        });
    }
    let body = text.get(header_end + 1..).unwrap_or("");
    let case: CaseFile = toml::from_str(body).map_err(|e| {
        let (line, column) = e.span().map_or((0, 1), |s| line_col(body, s.start));
        Error::Parse {
            line: line + 1,
            column,
            message: e.message().to_string(),
        }
    })?;

    let d = case.dim;
    let chart = Arc::new(Chart::cube(case.id.as_str(), d, 1.0)?);
    let data = [
        (matrix(&case.phi1, d)?, vector(&case.xi1, d)?, vector(&case.eta1, d)?),
        (matrix(&case.phi2, d)?, vector(&case.xi2, d)?, vector(&case.eta2, d)?),
        (matrix(&case.phi3, d)?, vector(&case.xi3, d)?, vector(&case.eta3, d)?),
    ];
    let mixed = MixedTriple::constant(Arc::clone(&chart), data)?;
    let plan = SamplePlan::default();
    let tol = Tolerances::default();
    first_failure(&check_mixed_axioms(&mixed, &plan, &tol)?)?;

    let metric = match &case.metric {
        Some(rows) => {
            let g = Field::constant(Arc::clone(&chart), matrix(rows, d)?);
            first_failure(&check_metric_mixed(&MetricMixed::new(mixed.clone(), g.clone())?, &plan, &tol)?)?;
            Some(g)
        }
        None => None,
    };
    let seed = match (&case.seed, &metric) {
        (Some(rows), _) => Field::constant(Arc::clone(&chart), matrix(rows, d)?),
        (None, Some(g)) => g.clone(),
        (None, None) => Field::constant(Arc::clone(&chart), SquareMatrix::identity(d, d)),
    };
    Ok(CatalogEntry::new(
        &case.id,
        "user-supplied constant mixed 3-structure",
        EntryKind::Mixed {
            mixed,
            metric,
            seed,
            sasakian: SasakianMode::Informational,
            einstein: None,
        },
        vec![pass(Suite::Axioms), pass(Suite::Averaging)],
    ))
}

/// Reads, parses and validates a case file.
pub fn load_user(path: &Path) -> Result<CatalogEntry> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_user(&text)
}
