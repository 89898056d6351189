//! The tangent bundle in induced coordinates (x, u): horizontal and vertical
//! lifts, the connection map, the Sasaki metric, the lifted
//! para-hypercomplex triple and its Nijenhuis tensors.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{max_abs, nan_max, pullback_matrix, residual_norm, SquareMatrix, Vector};
use crate::error::{Error, Result};
use crate::report::{CheckReport, Residual, Tolerances};
use crate::smooth::{
    covariant_derivative, covariant_derivative_operator, lie_bracket, riemann, AffineConnection, Chart, FdScheme,
    Field, MetricField, OperatorField, SamplePlan, VectorField,
};
use crate::structures::{nijenhuis, ParaHypercomplexTriple, StructureField, StructureKind};

/// Local trivialisation of TM over a base chart, with fibre box [−w, w]^m.
#[derive(Debug, Clone)]
pub struct TangentChart {
    conn: AffineConnection,
    total: Arc<Chart>,
    width: f64,
}

impl TangentChart {
    pub const DEFAULT_WIDTH: f64 = 1.0;

    pub fn new(conn: AffineConnection, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidChart(format!("fibre half-width must be positive, got {width}")));
        }
        let base = conn.chart();
        let fibre = Chart::cube("fibre", base.dim(), width)?;
        let total = Arc::new(base.product(&fibre, format!("T{}", base.name()))?);
        Ok(Self { conn, total, width })
    }

    pub fn base(&self) -> &Arc<Chart> {
        self.conn.chart()
    }

    pub fn total(&self) -> &Arc<Chart> {
        &self.total
    }

    pub fn conn(&self) -> &AffineConnection {
        &self.conn
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Base dimension m.
    pub fn dim(&self) -> usize {
        self.base().dim()
    }

    /// (x, u) from a point of the total chart.
    pub fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], Vector) {
        let m = self.dim();
        (&p[..m], Vector::from_row_slice(&p[m..]))
    }

    /// The matrix (Γu)^k_i = Γ^k_{ij} u^j at (x, u).
    fn gamma_u(&self, p: &[f64]) -> SquareMatrix {
        let (x, u) = self.split(p);
        self.conn.christoffel(x).against(&u)
    }

    /// F = [[I, 0], [−Γu, I]]: columns are the horizontal then vertical lifts
    /// of the coordinate basis.
    pub fn frame(&self, p: &[f64]) -> SquareMatrix {
        self.frame_with(&self.gamma_u(p), -1.0)
    }

    /// F⁻¹ = [[I, 0], [Γu, I]].
    pub fn frame_inverse(&self, p: &[f64]) -> SquareMatrix {
        self.frame_with(&self.gamma_u(p), 1.0)
    }

    fn frame_with(&self, gu: &SquareMatrix, sign: f64) -> SquareMatrix {
        let m = self.dim();
        let mut f = SquareMatrix::identity(2 * m, 2 * m);
        f.view_mut((m, 0), (m, m)).copy_from(&(gu * sign));
        f
    }

    /// X^h at (x, u) for a base vector w: (w, −Γ(w, u)).
    pub fn horizontal_at(&self, p: &[f64], w: &Vector) -> Vector {
        let (x, u) = self.split(p);
        let m = self.dim();
        let down = -self.conn.christoffel(x).apply(w, &u);
        Vector::from_fn(2 * m, |i, _| if i < m { w[i] } else { down[i - m] })
    }

    /// X^v = (0, w).
    pub fn vertical_at(&self, w: &Vector) -> Vector {
        let m = self.dim();
        Vector::from_fn(2 * m, |i, _| if i < m { 0.0 } else { w[i - m] })
    }

    pub fn horizontal_lift(&self, x: &VectorField) -> Result<VectorField> {
        self.base().ensure_same(x.chart())?;
        let (tc, x) = (self.clone(), x.clone());
        let m = self.dim();
        Ok(Field::new(Arc::clone(&self.total), move |p| tc.horizontal_at(p, &x.eval(&p[..m]))))
    }

    pub fn vertical_lift(&self, x: &VectorField) -> Result<VectorField> {
        self.base().ensure_same(x.chart())?;
        let (tc, x) = (self.clone(), x.clone());
        let m = self.dim();
        Ok(Field::new(Arc::clone(&self.total), move |p| tc.vertical_at(&x.eval(&p[..m]))))
    }

    /// K(a, b) = b + Γ(a, u): kills horizontal vectors, inverts vertical lifts.
    pub fn connection_map(&self, p: &[f64], v: &Vector) -> Result<Vector> {
        self.total.check(p)?;
        let m = self.dim();
        if v.len() != 2 * m {
            return Err(Error::DimensionMismatch {
                expected: 2 * m,
                found: v.len(),
            });
        }
        let (x, u) = self.split(p);
        let a = v.rows(0, m).into_owned();
        let b = v.rows(m, m).into_owned();
        Ok(b + self.conn.christoffel(x).apply(&a, &u))
    }

    /// The operator field F·B(x)·F⁻¹ on TM, where B is given in the
    /// (horizontal, vertical) splitting.
    pub fn split_operator(&self, blocks: impl Fn(&[f64]) -> SquareMatrix + Send + Sync + 'static) -> OperatorField {
        let tc = self.clone();
        let m = self.dim();
        Field::new(Arc::clone(&self.total), move |p| {
            let gu = tc.gamma_u(p);
            tc.frame_with(&gu, -1.0) * blocks(&p[..m]) * tc.frame_with(&gu, 1.0)
        })
    }

    /// G(A, B) = g(KA, KB) + g(π_*A, π_*B), i.e. F^{-T} diag(g, g) F⁻¹.
    pub fn sasaki_metric(&self, g: &MetricField) -> Result<MetricField> {
        self.base().ensure_same(g.chart())?;
        let (tc, g) = (self.clone(), g.clone());
        let m = self.dim();
        Ok(Field::new(Arc::clone(&self.total), move |p| {
            let gx = g.eval(&p[..m]);
            let fi = tc.frame_inverse(p);
            let mut d = SquareMatrix::zeros(2 * m, 2 * m);
            d.view_mut((0, 0), (m, m)).copy_from(&gx);
            d.view_mut((m, m), (m, m)).copy_from(&gx);
            pullback_matrix(&d, &fi)
        }))
    }
}

fn block2(a: &SquareMatrix, b: &SquareMatrix, c: &SquareMatrix, d: &SquareMatrix) -> SquareMatrix {
    let m = a.nrows();
    let mut out = SquareMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(a);
    out.view_mut((0, m), (m, m)).copy_from(b);
    out.view_mut((m, 0), (m, m)).copy_from(c);
    out.view_mut((m, m), (m, m)).copy_from(d);
    out
}

/// Max over base samples of |g(P·, P·) + g|.
pub fn para_hermitian_defect(p: &StructureField, g: &MetricField, plan: &SamplePlan) -> Result<f64> {
    p.chart().ensure_same(g.chart())?;
    let pts = crate::structures::sample_points(p.chart(), p.op.is_constant() && g.is_constant(), plan);
    let mut worst = 0.0_f64;
    for x in &pts {
        let gx = g.at(x)?;
        worst = nan_max(worst, residual_norm(&pullback_matrix(&gx, &p.op.eval(x)), &(-gx)));
    }
    Ok(worst)
}

/// The triple on TM determined by an almost product structure P on the base:
/// J₁X^h = X^v, J₁X^v = −X^h; J₂X^h = (PX)^v, J₂X^v = (PX)^h;
/// J₃X^h = (PX)^h, J₃X^v = −(PX)^v.
///
/// Requires g(PX, PY) = −g(X, Y) on the base, so that the triple is
/// compatible with the Sasaki metric.
pub fn lift_structure(
    tc: &TangentChart,
    p: &StructureField,
    g: &MetricField,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<ParaHypercomplexTriple> {
    tc.base().ensure_same(p.chart())?;
    if p.kind != StructureKind::AlmostProduct {
        return Err(Error::InvalidStructure("lifting needs an almost product structure".into()));
    }
    let defect = para_hermitian_defect(p, g, plan)?;
    let scale = max_abs(&g.eval(&tc.base().center())).max(1.0);
    if !(defect <= tol.algebra * scale) {
        return Err(Error::IncompatibleInputs {
            what: "base metric is not para-hermitian for P: g(PX, PY) != -g(X, Y)".into(),
            residual: defect,
        });
    }
    let m = tc.dim();
    let id = SquareMatrix::identity(m, m);
    let zero = SquareMatrix::zeros(m, m);
    let j1 = {
        let b = block2(&zero, &(-&id), &id, &zero);
        tc.split_operator(move |_| b.clone())
    };
    let j2 = {
        let (op, zero) = (p.op.clone(), zero.clone());
        tc.split_operator(move |x| {
            let px = op.eval(x);
            block2(&zero, &px, &px, &zero)
        })
    };
    let j3 = {
        let op = p.op.clone();
        tc.split_operator(move |x| {
            let px = op.eval(x);
            block2(&px, &zero, &zero, &(-&px))
        })
    };
    ParaHypercomplexTriple::new(j1, j2, j3)
}

/// Sasaki-metric block structure: max over samples of
/// |G(X^h,Y^h) − g(X,Y)|, |G(X^v,Y^v) − g(X,Y)| and |G(X^h,Y^v)|, over coordinate X, Y.
pub fn check_sasaki_blocks(tc: &TangentChart, g: &MetricField, plan: &SamplePlan, tol: &Tolerances) -> Result<CheckReport> {
    let big = tc.sasaki_metric(g)?;
    let pts = plan.points(tc.total());
    let m = tc.dim();
    let mut w = [0.0_f64; 3];
    for p in &pts {
        let gp = big.at(p)?;
        let gx = g.eval(&p[..m]);
        let f = tc.frame(p);
        let in_frame = pullback_matrix(&gp, &f);
        w[0] = nan_max(w[0], residual_norm(&in_frame.view((0, 0), (m, m)), &gx));
        w[1] = nan_max(w[1], residual_norm(&in_frame.view((m, m), (m, m)), &gx));
        w[2] = nan_max(w[2], max_abs(&in_frame.view((0, m), (m, m))));
    }
    let mut report = CheckReport::new("sasaki metric");
    let k = pts.len();
    report.push(Residual::at_most("Sasaki: G(X^h, Y^h) = g(X, Y)", "G(X^h,Y^h) = g(X,Y)", w[0], tol.algebra, k));
    report.push(Residual::at_most("Sasaki: G(X^v, Y^v) = g(X, Y)", "G(X^v,Y^v) = g(X,Y)", w[1], tol.algebra, k));
    report.push(Residual::at_most("Sasaki: G(X^h, Y^v) = 0", "G(X^h,Y^v) = 0", w[2], tol.algebra, k));
    Ok(report)
}

/// The four bracket relations of horizontal and vertical lifts:
/// [X^h, Y^h] = [X, Y]^h − (R(X, Y)u)^v, [X^h, Y^v] = (∇_X Y)^v,
/// [X^v, Y^h] = −(∇_Y X)^v, [X^v, Y^v] = 0.
///
/// Brackets on TM differentiate the finite-difference connection, so they use
/// the nested step; base-level terms use the base step.
pub fn bracket_identity_residuals(
    tc: &TangentChart,
    x: &VectorField,
    y: &VectorField,
    plan: &SamplePlan,
    scheme: &FdScheme,
) -> Result<[f64; 4]> {
    let nested = scheme.nested();
    let (xh, yh) = (tc.horizontal_lift(x)?, tc.horizontal_lift(y)?);
    let (xv, yv) = (tc.vertical_lift(x)?, tc.vertical_lift(y)?);
    let brackets = [
        lie_bracket(&xh, &yh, &nested)?,
        lie_bracket(&xh, &yv, &nested)?,
        lie_bracket(&xv, &yh, &nested)?,
        lie_bracket(&xv, &yv, &nested)?,
    ];
    let xy = lie_bracket(x, y, scheme)?;
    let nxy = covariant_derivative(tc.conn(), x, y, scheme)?;
    let nyx = covariant_derivative(tc.conn(), y, x, scheme)?;
    let m = tc.dim();
    let mut w = [0.0_f64; 4];
    for p in plan.points(tc.total()) {
        tc.total().check(&p)?;
        let (base, u) = tc.split(&p);
        let r = riemann(tc.conn(), base, scheme)?;
        let rxy_u = r.apply(&x.eval(base), &y.eval(base), &u);
        let rhs = [
            tc.horizontal_at(&p, &xy.eval(base)) - tc.vertical_at(&rxy_u),
            tc.vertical_at(&nxy.eval(base)),
            -tc.vertical_at(&nyx.eval(base)),
            Vector::zeros(2 * m),
        ];
        for i in 0..4 {
            w[i] = nan_max(w[i], residual_norm(&brackets[i].eval(&p), &rhs[i]));
        }
    }
    Ok(w)
}

pub const BRACKET_IDENTITIES: [&str; 4] = [
    "lift brackets: [X^h, Y^h] = [X, Y]^h - (R(X, Y)u)^v",
    "lift brackets: [X^h, Y^v] = (nabla_X Y)^v",
    "lift brackets: [X^v, Y^h] = -(nabla_Y X)^v",
    "lift brackets: [X^v, Y^v] = 0",
];

pub fn check_bracket_identities(
    tc: &TangentChart,
    x: &VectorField,
    y: &VectorField,
    plan: &SamplePlan,
    scheme: &FdScheme,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let w = bracket_identity_residuals(tc, x, y, plan, scheme)?;
    let mut report = CheckReport::new("lift brackets");
    for (name, value) in BRACKET_IDENTITIES.iter().zip(w) {
        let anchor = name.trim_start_matches("lift brackets: ");
        report.push(Residual::at_most(*name, anchor, value, tol.bracket, plan.count));
    }
    Ok(report)
}

/// Which lifts feed the Nijenhuis tensor: N(X^h, Y^h), N(X^h, Y^v), ...
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftPair {
    HH,
    HV,
    VH,
    VV,
}

impl LiftPair {
    pub const ALL: [LiftPair; 4] = [LiftPair::HH, LiftPair::HV, LiftPair::VH, LiftPair::VV];

    fn kinds(self) -> (bool, bool) {
        match self {
            Self::HH => (true, true),
            Self::HV => (true, false),
            Self::VH => (false, true),
            Self::VV => (false, false),
        }
    }
}

impl fmt::Display for LiftPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.kinds();
        let s = |h: bool| if h { "h" } else { "v" };
        write!(f, "X^{}, Y^{}", s(a), s(b))
    }
}

/// Closed form of N_α(X^{a}, Y^{b}) at one point of TM in terms of base
/// curvature R and ∇P.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosedForm {
    /// Zero-based structure index.
    pub alpha: usize,
    pub pair: LiftPair,
}

impl ClosedForm {
    pub fn all() -> Vec<ClosedForm> {
        (0..3)
            .flat_map(|alpha| LiftPair::ALL.map(|pair| ClosedForm { alpha, pair }))
            .collect()
    }

    /// The printed right-hand side.
    pub fn formula(&self) -> &'static str {
        use LiftPair::*;
        match (self.alpha, self.pair) {
            (0, HH) => "(R(X,Y)u)^v",
            (0, VV) => "-(R(X,Y)u)^v",
            (0, HV) | (0, VH) => "(R(X,Y)u)^h",
            (1, HH) => "(P(nabla_Y P)X - P(nabla_X P)Y)^h - (R(X,Y)u)^v",
            (1, VV) => "((nabla_PX P)Y - (nabla_PY P)X)^h - (R(PX,PY)u)^v",
            (1, HV) => "-(P(nabla_X P)Y + (nabla_PY P)X)^v + (P R(X,PY)u)^h",
            (1, VH) => "((nabla_PX P)Y + P(nabla_Y P)X)^v + (P R(PX,Y)u)^h",
            (2, HH) => {
                "((nabla_X P)PY - (nabla_PY P)X + (nabla_PX P)Y + P(nabla_Y P)X)^h \
                 - (R(X,Y)u + R(PX,PY)u + P R(PX,Y)u + P R(X,PY)u)^v"
            }
            (2, VV) => "0",
            (2, HV) => "(-(nabla_PX P)Y + (nabla_X P)PY)^v",
            (_, VH) => "((nabla_PY P)X - (nabla_Y P)PX)^v",
            _ => unreachable!("structure index is 0, 1 or 2"),
        }
    }

    pub fn name(&self) -> String {
        format!("N{}({}) = {}", self.alpha + 1, self.pair, self.formula())
    }
}

/// X ↦ (∇_X P) at the base point.
type NablaP = Box<dyn Fn(&Vector) -> Result<SquareMatrix>>;

/// Base data needed by the closed forms at one point.
struct BaseTerms {
    p: SquareMatrix,
    x: Vector,
    y: Vector,
    px: Vector,
    py: Vector,
    r: crate::smooth::Riemann,
    u: Vector,
    nabla: NablaP,
}

impl BaseTerms {
    fn ru(&self, a: &Vector, b: &Vector) -> Vector {
        self.r.apply(a, b, &self.u)
    }

    fn nab(&self, along: &Vector) -> Result<SquareMatrix> {
        (self.nabla)(along)
    }
}

fn closed_form_rhs(tc: &TangentChart, cf: ClosedForm, point: &[f64], t: &BaseTerms) -> Result<Vector> {
    use LiftPair::*;
    let h = |w: Vector| tc.horizontal_at(point, &w);
    let v = |w: Vector| tc.vertical_at(&w);
    let (p, x, y, px, py) = (&t.p, &t.x, &t.y, &t.px, &t.py);
    Ok(match (cf.alpha, cf.pair) {
        (0, HH) => v(t.ru(x, y)),
        (0, VV) => -v(t.ru(x, y)),
        (0, HV) | (0, VH) => h(t.ru(x, y)),
        (1, HH) => h(p * t.nab(y)? * x - p * t.nab(x)? * y) - v(t.ru(x, y)),
        (1, VV) => h(t.nab(px)? * y - t.nab(py)? * x) - v(t.ru(px, py)),
        (1, HV) => -v(p * t.nab(x)? * y + t.nab(py)? * x) + h(p * t.ru(x, py)),
        (1, VH) => v(t.nab(px)? * y + p * t.nab(y)? * x) + h(p * t.ru(px, y)),
        (2, HH) => {
            h(t.nab(x)? * py - t.nab(py)? * x + t.nab(px)? * y + p * t.nab(y)? * x)
                - v(t.ru(x, y) + t.ru(px, py) + p * t.ru(px, y) + p * t.ru(x, py))
        }
        (2, VV) => Vector::zeros(2 * tc.dim()),
        (2, HV) => v(-(t.nab(px)? * y) + t.nab(x)? * py),
        (_, VH) => v(t.nab(py)? * x - t.nab(y)? * px),
        _ => unreachable!("structure index is 0, 1 or 2"),
    })
}

/// One closed form compared with the generic Nijenhuis tensor of the lifted
/// structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormOutcome {
    pub form: ClosedForm,
    /// max over samples of |lhs − rhs|
    pub residual: f64,
    /// max over samples of |lhs|
    pub lhs: f64,
    /// max over samples of |rhs|
    pub rhs: f64,
    pub samples: usize,
}

/// Evaluates all twelve closed forms at joint base × fibre samples.
///
/// The generic side differentiates the lifted operators, which contain the
/// finite-difference connection, so it uses the nested step.
pub fn nijenhuis_closed_forms(
    tc: &TangentChart,
    p: &StructureField,
    lifted: &ParaHypercomplexTriple,
    x: &VectorField,
    y: &VectorField,
    plan: &SamplePlan,
    scheme: &FdScheme,
) -> Result<Vec<ClosedFormOutcome>> {
    tc.base().ensure_same(p.chart())?;
    tc.total().ensure_same(lifted.chart())?;
    let nested = scheme.nested();
    let lifts = [
        (tc.horizontal_lift(x)?, tc.vertical_lift(x)?),
        (tc.horizontal_lift(y)?, tc.vertical_lift(y)?),
    ];
    let pts = plan.points(tc.total());
    let m = tc.dim();
    let mut out = Vec::with_capacity(12);
    let mut generic = Vec::with_capacity(12);
    for cf in ClosedForm::all() {
        let (a, b) = cf.pair.kinds();
        let xa = if a { &lifts[0].0 } else { &lifts[0].1 };
        let yb = if b { &lifts[1].0 } else { &lifts[1].1 };
        generic.push(nijenhuis(lifted.get(cf.alpha), xa, yb, &nested)?);
        out.push(ClosedFormOutcome {
            form: cf,
            residual: 0.0,
            lhs: 0.0,
            rhs: 0.0,
            samples: pts.len(),
        });
    }
    for point in &pts {
        tc.total().check(point)?;
        let (base, u) = tc.split(point);
        let pm = p.op.eval(base);
        let (xv, yv) = (x.eval(base), y.eval(base));
        let base_vec = base.to_vec();
        let (conn, op, sch) = (tc.conn().clone(), p.op.clone(), *scheme);
        let terms = BaseTerms {
            px: &pm * &xv,
            py: &pm * &yv,
            p: pm,
            x: xv,
            y: yv,
            r: riemann(tc.conn(), base, scheme)?,
            u,
            nabla: Box::new(move |along| covariant_derivative_operator(&conn, &op, &base_vec, along, &sch)),
        };
        debug_assert_eq!(terms.u.len(), m);
        for (o, n) in out.iter_mut().zip(&generic) {
            let lhs = n.eval(point);
            let rhs = closed_form_rhs(tc, o.form, point, &terms)?;
            o.residual = nan_max(o.residual, residual_norm(&lhs, &rhs));
            o.lhs = nan_max(o.lhs, max_abs(&lhs));
            o.rhs = nan_max(o.rhs, max_abs(&rhs));
        }
    }
    Ok(out)
}

/// Report for the closed forms. On a flat para-Kähler base every side must
/// vanish; otherwise each identity must hold and at least one must be
/// exercised with both sides large.
pub fn closed_form_report(outcomes: &[ClosedFormOutcome], flat: bool, tol: &Tolerances) -> CheckReport {
    let mut report = CheckReport::new("nijenhuis closed forms");
    let mut witness = 0.0_f64;
    for o in outcomes {
        let note = format!("max |lhs| = {:.3e}, max |rhs| = {:.3e}", o.lhs, o.rhs);
        report.push(
            Residual::at_most(o.form.name(), o.form.formula(), o.residual, tol.nested, o.samples).with_note(note),
        );
        if flat {
            report.push(Residual::at_most(
                format!("{}: both sides vanish", o.form.name()),
                "flat para-Kaehler base: N = 0",
                o.lhs.max(o.rhs),
                tol.integrable,
                o.samples,
            ));
        }
        witness = witness.max(o.lhs.min(o.rhs));
    }
    if !flat {
        report.push(Residual::at_least(
            "non-flat witness: some identity has both sides large",
            "max over identities of min(|lhs|, |rhs|)",
            witness,
            tol.witness,
            outcomes.first().map_or(0, |o| o.samples),
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{signature_of, Signature};
    use crate::smooth::levi_civita;
    use crate::structures::{check_triple_full, compatibility_defect};

    fn base() -> Arc<Chart> {
        Arc::new(Chart::cube("r4", 4, 0.5).unwrap())
    }

    fn split_p() -> SquareMatrix {
        let mut p = SquareMatrix::zeros(4, 4);
        for i in 0..2 {
            p[(i, i + 2)] = 1.0;
            p[(i + 2, i)] = 1.0;
        }
        p
    }

    fn eta() -> SquareMatrix {
        SquareMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, -1.0, -1.0]))
    }

    fn conformal(c: Arc<Chart>) -> MetricField {
        Field::new(c, |x: &[f64]| {
            let f = 0.3 * x[0] + 0.2 * x[1] * x[1] + 0.1 * x[0] * x[3];
            eta() * (2.0 * f).exp()
        })
    }

    fn fields(c: Arc<Chart>) -> (VectorField, VectorField) {
        (
            Field::new(Arc::clone(&c), |p: &[f64]| Vector::from_vec(vec![1.0 + p[1], p[0] * p[0], p[0] * p[1], 1.0])),
            Field::new(c, |p: &[f64]| Vector::from_vec(vec![p[0], 2.0 - p[1] * p[0], 1.0, p[2]])),
        )
    }

    fn setup(curved: bool) -> (TangentChart, StructureField, MetricField) {
        let c = base();
        let g = if curved { conformal(Arc::clone(&c)) } else { Field::constant(Arc::clone(&c), eta()) };
        let conn = levi_civita(&g, &FdScheme::default()).unwrap();
        let tc = TangentChart::new(conn, 1.0).unwrap();
        let p = StructureField::new(Field::constant(c, split_p()), StructureKind::AlmostProduct);
        (tc, p, g)
    }

    #[test]
    fn connection_map_inverts_lifts() {
        let (tc, _, _) = setup(true);
        let w = Vector::from_vec(vec![0.3, -1.0, 0.5, 2.0]);
        let p = [0.1, 0.2, -0.3, 0.05, 0.5, -0.4, 0.3, 0.9];
        assert!(tc.connection_map(&p, &tc.horizontal_at(&p, &w)).unwrap().amax() < 1e-12);
        assert!(residual_norm(&tc.connection_map(&p, &tc.vertical_at(&w)).unwrap(), &w) < 1e-15);
        assert!(tc.connection_map(&[9.0; 8], &w).is_err());
        // columns of the frame are the lifts of the coordinate basis
        let f = tc.frame(&p);
        let e0 = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(residual_norm(&f.column(0).into_owned(), &tc.horizontal_at(&p, &e0)) < 1e-15);
        assert!(residual_norm(&(&f * tc.frame_inverse(&p)), &SquareMatrix::identity(8, 8)) < 1e-12);
    }

    #[test]
    fn flat_connection_map_is_projection() {
        let (tc, _, _) = setup(false);
        let v = Vector::from_fn(8, |i, _| i as f64);
        assert_eq!(tc.connection_map(&[0.0; 8], &v).unwrap(), v.rows(4, 4).into_owned());
    }

    #[test]
    fn sasaki_blocks_and_signature() {
        let (tc, _, g) = setup(true);
        let plan = SamplePlan::default();
        let rep = check_sasaki_blocks(&tc, &g, &plan, &Tolerances::default()).unwrap();
        assert!(rep.worst() < 1e-12, "{rep:?}");
        let big = tc.sasaki_metric(&g).unwrap();
        for p in plan.points(tc.total()) {
            assert_eq!(signature_of(&big.eval(&p)).unwrap(), Signature::new(4, 4));
        }
    }

    #[test]
    fn lifted_triple_is_para_hyperhermitian() {
        for curved in [false, true] {
            let (tc, p, g) = setup(curved);
            let plan = SamplePlan::default();
            let tol = Tolerances::default();
            let t = lift_structure(&tc, &p, &g, &plan, &tol).unwrap();
            let rep = check_triple_full(&t, &plan, &tol).unwrap();
            assert!(rep.passed(), "{rep:?}");
            let big = tc.sasaki_metric(&g).unwrap();
            let rep = compatibility_defect(&big, &t, &plan, &tol).unwrap();
            assert!(rep.worst() < 1e-9, "{rep:?}");
        }
    }

    #[test]
    fn lift_rejects_non_para_hermitian_metric() {
        let (tc, p, _) = setup(false);
        let e = Field::constant(Arc::clone(tc.base()), SquareMatrix::identity(4, 4));
        let res = lift_structure(&tc, &p, &e, &SamplePlan::default(), &Tolerances::default());
        assert!(matches!(res, Err(Error::IncompatibleInputs { .. })));
    }

    #[test]
    fn lifted_operators_act_on_lifts_as_specified() {
        let (tc, p, g) = setup(true);
        let t = lift_structure(&tc, &p, &g, &SamplePlan::default(), &Tolerances::default()).unwrap();
        let pt = [0.1, -0.2, 0.3, 0.05, 0.5, -0.4, 0.3, 0.9];
        let w = Vector::from_vec(vec![0.3, -1.0, 0.5, 2.0]);
        let pw = split_p() * &w;
        let [j1, j2, j3] = t.eval(&pt);
        let (h, v) = (tc.horizontal_at(&pt, &w), tc.vertical_at(&w));
        let close = |a: Vector, b: Vector| assert!(residual_norm(&a, &b) < 1e-12);
        close(&j1 * &h, v.clone());
        close(&j1 * &v, -h.clone());
        close(&j2 * &h, tc.vertical_at(&pw));
        close(&j2 * &v, tc.horizontal_at(&pt, &pw));
        close(&j3 * &h, tc.horizontal_at(&pt, &pw));
        close(&j3 * &v, -tc.vertical_at(&pw));
    }

    #[test]
    fn bracket_identities_hold() {
        let plan = SamplePlan::default().with_count(6);
        for curved in [false, true] {
            let (tc, _, _) = setup(curved);
            let (x, y) = fields(Arc::clone(tc.base()));
            let w = bracket_identity_residuals(&tc, &x, &y, &plan, &FdScheme::default()).unwrap();
            assert!(w.iter().all(|r| *r < 1e-3), "{w:?}");
            assert_eq!(w[3], 0.0);
        }
    }

    #[test]
    fn closed_forms_flat_and_curved() {
        let plan = SamplePlan::default().with_count(4);
        let tol = Tolerances::default();
        let scheme = FdScheme::default();
        for curved in [false, true] {
            let (tc, p, g) = setup(curved);
            let t = lift_structure(&tc, &p, &g, &plan, &tol).unwrap();
            let (x, y) = fields(Arc::clone(tc.base()));
            let out = nijenhuis_closed_forms(&tc, &p, &t, &x, &y, &plan, &scheme).unwrap();
            assert_eq!(out.len(), 12);
            let rep = closed_form_report(&out, !curved, &tol);
            assert!(rep.passed(), "{rep:#?}");
            if !curved {
                assert!(out.iter().all(|o| o.lhs < 1e-5 && o.rhs < 1e-5));
            }
        }
    }
}
