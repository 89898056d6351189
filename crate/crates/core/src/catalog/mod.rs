//! Built-in verification cases: concrete structures with their charts,
//! fields, and the verdicts they are expected to produce.

mod suites;
mod user;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{SquareMatrix, Vector};
use crate::constructions::{circle_bundle_structure, cone_structure, product_structure, Cone, DEFAULT_CONE_RANGE};
use crate::error::{Error, Result};
use crate::mixed3::{block_data, block_seed, pseudosphere, MetricMixed, MixedTriple, ReebSign};
use crate::report::{CheckReport, Tolerances};
use crate::smooth::{levi_civita, Chart, FdScheme, Field, MetricField, SamplePlan, VectorField};
use crate::structures::{flat_metric, flat_operators, ParaHypercomplexTriple, StructureField, StructureKind};
use crate::tangent::{lift_structure, TangentChart};

pub use user::{load_user, parse_user, USER_HEADER};

/// Named groups of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Axioms,
    Averaging,
    Nijenhuis,
    Lifts,
    Constructions,
    Einstein,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Axioms,
        Suite::Averaging,
        Suite::Nijenhuis,
        Suite::Lifts,
        Suite::Constructions,
        Suite::Einstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Axioms => "axioms",
            Self::Averaging => "averaging",
            Self::Nijenhuis => "nijenhuis",
            Self::Lifts => "lifts",
            Self::Constructions => "constructions",
            Self::Einstein => "einstein",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|x| x.name()).collect();
            Error::InvalidStructure(format!("unknown suite `{s}` (known: {})", known.join(", ")))
        })
    }
}

/// Numerical settings shared by every check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSettings {
    pub plan: SamplePlan,
    pub scheme: FdScheme,
    pub tol: Tolerances,
    /// Random seed metrics tried by the averaging suite.
    pub averaging_seeds: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            plan: SamplePlan::default(),
            scheme: FdScheme::default(),
            tol: Tolerances::default(),
            averaging_seeds: 100,
        }
    }
}

/// How the Sasakian identities are treated for a mixed entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SasakianMode {
    /// Reported with pass/fail verdicts.
    Required,
    /// Reported without a verdict.
    Informational,
}

#[derive(Clone)]
pub enum EntryKind {
    /// A mixed 3-structure, with a metric or with a seed for the
    /// compatible-metric construction.
    Mixed {
        mixed: MixedTriple,
        metric: Option<MetricField>,
        seed: MetricField,
        sasakian: SasakianMode,
        einstein: Option<f64>,
    },
    ParaHypercomplex {
        triple: ParaHypercomplexTriple,
        metric: MetricField,
        integrable: bool,
    },
    /// An almost product structure with a para-hermitian metric, together
    /// with the para-hypercomplex triple it induces on the tangent bundle.
    ParaHermitian {
        p: StructureField,
        g: MetricField,
        flat: bool,
        tc: TangentChart,
        lifted: ParaHypercomplexTriple,
    },
    Product { by_f: Vec<(f64, ParaHypercomplexTriple)> },
    Cone { cone: Cone, base: MetricMixed },
    Circle { triple: ParaHypercomplexTriple, metric: MetricField },
}

impl fmt::Debug for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Mixed { .. } => "Mixed",
            Self::ParaHypercomplex { .. } => "ParaHypercomplex",
            Self::ParaHermitian { .. } => "ParaHermitian",
            Self::Product { .. } => "Product",
            Self::Cone { .. } => "Cone",
            Self::Circle { .. } => "Circle",
        };
        f.write_str(name)
    }
}

/// The verdict an entry is expected to produce for one suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expectation {
    pub suite: Suite,
    pub pass: bool,
    pub reason: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub dim: usize,
    pub annotation: String,
    pub kind: EntryKind,
    pub expected: Vec<Expectation>,
}

impl CatalogEntry {
    fn new(id: &str, annotation: &str, kind: EntryKind, expected: Vec<Expectation>) -> Self {
        let dim = match &kind {
            EntryKind::Mixed { mixed, .. } => mixed.dim(),
            EntryKind::ParaHypercomplex { triple, .. } | EntryKind::Circle { triple, .. } => triple.dim(),
            EntryKind::ParaHermitian { p, .. } => p.chart().dim(),
            EntryKind::Product { by_f } => by_f[0].1.dim(),
            EntryKind::Cone { cone, .. } => cone.triple.dim(),
        };
        Self {
            id: id.to_string(),
            dim,
            annotation: annotation.to_string(),
            kind,
            expected,
        }
    }

    pub fn suites(&self) -> Vec<Suite> {
        self.expected.iter().map(|e| e.suite).collect()
    }

    pub fn expectation(&self, suite: Suite) -> Option<&Expectation> {
        self.expected.iter().find(|e| e.suite == suite)
    }

    /// Runs one suite; `None` when the suite does not apply to this entry.
    pub fn run(&self, suite: Suite, settings: &RunSettings) -> Result<Option<CheckReport>> {
        suites::run(self, suite, settings)
    }

    /// The mixed structure and metric carried by mixed entries.
    pub fn metric_mixed(&self) -> Option<MetricMixed> {
        match &self.kind {
            EntryKind::Mixed {
                mixed,
                metric: Some(g), ..
            } => MetricMixed::new(mixed.clone(), g.clone()).ok(),
            _ => None,
        }
    }
}

fn pass(suite: Suite) -> Expectation {
    Expectation { suite, pass: true, reason: None }
}

fn fail(suite: Suite, reason: &'static str) -> Expectation {
    Expectation {
        suite,
        pass: false,
        reason: Some(reason),
    }
}

/// Probe fields X, Y used wherever a check needs vector fields. They are
/// transcendental so that central differences carry a genuine truncation
/// error; on polynomials of degree two the stencils would be exact.
pub fn probe_fields(chart: &Arc<Chart>) -> (VectorField, VectorField) {
    let d = chart.dim();
    let x = Field::new(Arc::clone(chart), move |p: &[f64]| {
        Vector::from_fn(d, |i, _| {
            let base = if i % 2 == 0 { 1.0 } else { 0.0 };
            base + p[(i + 1) % d].sin() + 0.5 * p[i] * p[(i + 2) % d].cos()
        })
    });
    let y = Field::new(Arc::clone(chart), move |p: &[f64]| {
        Vector::from_fn(d, |i, _| {
            let base = if i % 3 == 1 { 1.0 } else { 0.5 };
            base * (0.5 * p[(i + 3) % d]).exp() - p[i].sin() * p[(i + 1) % d]
        })
    });
    (x, y)
}

fn cube(name: &str, dim: usize, half: f64) -> Arc<Chart> {
    Arc::new(Chart::cube(name, dim, half).expect("valid cube"))
}

fn block_entry(n: usize) -> Result<MixedTriple> {
    let dim = 4 * n + 3;
    MixedTriple::constant(cube(&format!("r{dim}"), dim, 1.0), block_data(n))
}

/// P = [[0, I], [I, 0]] on R⁴ with the split metric diag(1, 1, −1, −1).
fn split_p() -> SquareMatrix {
    let mut p = SquareMatrix::zeros(4, 4);
    for i in 0..2 {
        p[(i, i + 2)] = 1.0;
        p[(i + 2, i)] = 1.0;
    }
    p
}

fn split_eta() -> SquareMatrix {
    SquareMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, -1.0, -1.0]))
}

/// The conformal factor exponent f = 0.3x₁ + 0.2x₂² + 0.1x₁x₄.
fn conformal_exponent(x: &[f64]) -> f64 {
    0.3 * x[0] + 0.2 * x[1] * x[1] + 0.1 * x[0] * x[3]
}

fn para_hermitian(id: &str, flat: bool) -> (StructureField, MetricField) {
    let c = cube(id, 4, 0.5);
    let p = StructureField::new(Field::constant(Arc::clone(&c), split_p()), StructureKind::AlmostProduct);
    let g = if flat {
        Field::constant(c, split_eta())
    } else {
        Field::new(c, |x: &[f64]| split_eta() * (2.0 * conformal_exponent(x)).exp())
    };
    (p, g)
}

fn para_hermitian_entry(id: &str, flat: bool, settings: &RunSettings) -> Result<CatalogEntry> {
    let (p, g) = para_hermitian(id, flat);
    let conn = levi_civita(&g, &settings.scheme)?;
    let tc = TangentChart::new(conn, TangentChart::DEFAULT_WIDTH)?;
    let lifted = lift_structure(&tc, &p, &g, &settings.plan, &settings.tol)?;
    let annotation = if flat {
        "constant almost product structure on R^4 with the flat split metric (flat para-Kaehler); \
         its tangent bundle carries an integrable para-hypercomplex triple with the Sasaki metric"
    } else {
        "constant almost product structure on R^4 with the non-flat metric exp(2f) diag(1,1,-1,-1); \
         its tangent bundle carries a non-integrable para-hypercomplex triple with the Sasaki metric"
    };
    Ok(CatalogEntry::new(
        id,
        annotation,
        EntryKind::ParaHermitian { p, g, flat, tc, lifted },
        vec![pass(Suite::Axioms), pass(Suite::Lifts), pass(Suite::Nijenhuis)],
    ))
}

const SASAKIAN_CONFLICT: &str =
    "the Sasakian identity for the first triple and the Lorentzian para-Sasakian identities for the other two \
     cannot hold together; one family fails by a sign for either orientation of the Reeb fields";

/// The built-in catalog. The cases depend on the finite-difference scheme only
/// through the connection used by the tangent-bundle lifts.
pub fn load_builtin(settings: &RunSettings) -> Result<Vec<CatalogEntry>> {
    use Suite::*;
    let mut out = Vec::new();

    let names = [
        (0, "r3-mixed", "explicit mixed 3-structure on R^3 given by nine matrices, vectors and covectors"),
        (1, "r7-mixed", "block mixed 3-structure on R^7: R^3 structure plus the flat para-hypercomplex R^4"),
        (2, "r11-mixed", "block mixed 3-structure on R^11: R^3 structure plus the flat para-hypercomplex R^8"),
    ];
    let mut blocks = Vec::new();
    for (n, id, note) in names {
        let mixed = block_entry(n)?;
        let seed = Field::constant(Arc::clone(mixed.chart()), block_seed(n));
        let mm_metric = crate::mixed3::compatible_metric(&mixed, &seed, &settings.plan)?;
        blocks.push((id, MetricMixed::new(mixed.clone(), mm_metric)?));
        out.push(CatalogEntry::new(
            id,
            note,
            EntryKind::Mixed {
                mixed,
                metric: None,
                seed,
                sasakian: SasakianMode::Informational,
                einstein: None,
            },
            vec![pass(Axioms), pass(Averaging)],
        ));
    }

    let r4 = cube("r4", 4, 1.0);
    out.push(CatalogEntry::new(
        "r4-phc",
        "flat para-hypercomplex structure on R^4 with its compatible split metric",
        EntryKind::ParaHypercomplex {
            triple: ParaHypercomplexTriple::constant(Arc::clone(&r4), flat_operators(1))?,
            metric: Field::constant(Arc::clone(&r4), flat_metric(1)?),
            integrable: true,
        },
        vec![pass(Axioms), pass(Averaging), pass(Nijenhuis)],
    ));

    out.push(para_hermitian_entry("flat-parakahler", true, settings)?);
    out.push(para_hermitian_entry("conformal-ph", false, settings)?);

    let flat = ParaHypercomplexTriple::constant(Arc::clone(&r4), flat_operators(1))?;
    let shear = Field::new(Arc::clone(&r4), |x: &[f64]| {
        let mut a = SquareMatrix::identity(4, 4);
        a[(0, 2)] = x[0];
        a[(1, 3)] = 0.5 * x[0];
        a[(0, 3)] = -0.7 * x[0];
        a
    });
    let conj = flat.conjugated(&shear)?;
    let conj_metric = {
        let g0 = flat_metric(1)?;
        shear.map(move |a| {
            let inv = a.clone().try_inverse().expect("unipotent");
            inv.transpose() * &g0 * inv
        })
    };
    out.push(CatalogEntry::new(
        "conjugated-triple",
        "flat triple on R^4 conjugated by a position-dependent shear; algebraically valid, not integrable",
        EntryKind::ParaHypercomplex {
            triple: conj,
            metric: conj_metric,
            integrable: false,
        },
        vec![pass(Axioms), pass(Averaging), pass(Nijenhuis)],
    ));

    let sphere = pseudosphere(0, ReebSign::Plus, 0.25)?;
    let literal = pseudosphere(0, ReebSign::Minus, 0.25)?;
    let sphere7 = pseudosphere(1, ReebSign::Plus, 0.25)?;
    for (id, note, mm, lambda) in [
        (
            "s3-1-sphere",
            "pseudosphere S^3_1 in R^4_2 with Reeb fields xi = J N",
            &sphere,
            2.0,
        ),
        (
            "s3-1-sphere-literal",
            "pseudosphere S^3_1 in R^4_2 with Reeb fields xi = -J N",
            &literal,
            2.0,
        ),
        (
            "s7-3-sphere",
            "pseudosphere S^7_3 in R^8_4 with Reeb fields xi = J N",
            &sphere7,
            6.0,
        ),
    ] {
        out.push(CatalogEntry::new(
            id,
            note,
            EntryKind::Mixed {
                mixed: mm.mixed.clone(),
                metric: Some(mm.g.clone()),
                seed: mm.g.clone(),
                sasakian: SasakianMode::Required,
                einstein: Some(lambda),
            },
            vec![fail(Axioms, SASAKIAN_CONFLICT), pass(Averaging), pass(Einstein)],
        ));
    }

    let bases: Vec<(&str, MetricMixed)> = blocks
        .iter()
        .take(2)
        .map(|(id, mm)| (*id, mm.clone()))
        .chain(std::iter::once(("s3-1-sphere", sphere.clone())))
        .collect();
    for (id, mm) in &bases {
        let by_f = vec![
            (1.0, product_structure(&mm.mixed, 0.0, 1.0, |_| 1.0)?),
            (2.0, product_structure(&mm.mixed, 0.0, 1.0, |_| 2.0)?),
        ];
        out.push(CatalogEntry::new(
            &format!("product-{id}"),
            &format!("para-hypercomplex structure on {id} x I with constant warp f = 1 and f = 2"),
            EntryKind::Product { by_f },
            vec![pass(Constructions)],
        ));
    }
    let (lo, hi) = DEFAULT_CONE_RANGE;
    out.push(CatalogEntry::new(
        "cone-s3-1-sphere",
        "metric cone dr^2 + r^2 g over s3-1-sphere with the induced para-hypercomplex structure; flat",
        EntryKind::Cone {
            cone: cone_structure(&sphere, lo, hi)?,
            base: sphere.clone(),
        },
        vec![pass(Constructions), pass(Einstein)],
    ));
    for (id, mm) in &bases {
        let (triple, metric) = circle_bundle_structure(mm, &settings.plan)?;
        out.push(CatalogEntry::new(
            &format!("circle-{id}"),
            &format!("para-hypercomplex structure on the trivial circle bundle {id} x S^1"),
            EntryKind::Circle { triple, metric },
            vec![pass(Constructions)],
        ));
    }
    Ok(out)
}
