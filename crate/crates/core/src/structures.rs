//! Almost product / almost complex structures, para-hypercomplex triples,
//! compatible metrics, adapted frames and Nijenhuis tensors.

use std::sync::Arc;

use crate::algebra::{
    max_abs, nan_max, pullback_matrix, residual_norm, signature_of, BilinearForm, SquareMatrix, Vector,
};
use crate::error::{Error, Result};
use crate::report::{CheckReport, Residual, Tolerances};
use crate::smooth::{lie_bracket, Chart, FdScheme, Field, MetricField, OperatorField, SamplePlan, VectorField};

/// Signs ε_α of the three members of a para-hypercomplex triple.
pub const EPSILON: [f64; 3] = [1.0, -1.0, -1.0];

/// Even permutations (α, β, γ) of (1, 2, 3), zero-based.
pub const EVEN_PERMUTATIONS: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StructureKind {
    /// J² = −Id, ε = +1.
    AlmostComplex,
    /// P² = Id, P ≠ ±Id, ε = −1.
    AlmostProduct,
}

impl StructureKind {
    pub fn epsilon(self) -> f64 {
        match self {
            Self::AlmostComplex => 1.0,
            Self::AlmostProduct => -1.0,
        }
    }

    pub fn from_epsilon(eps: f64) -> Self {
        if eps > 0.0 {
            Self::AlmostComplex
        } else {
            Self::AlmostProduct
        }
    }
}

/// A (1,1)-tensor field together with the sign of its square.
#[derive(Debug, Clone)]
pub struct StructureField {
    pub op: OperatorField,
    pub kind: StructureKind,
}

impl StructureField {
    pub fn new(op: OperatorField, kind: StructureKind) -> Self {
        Self { op, kind }
    }

    pub fn epsilon(&self) -> f64 {
        self.kind.epsilon()
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.op.chart()
    }
}

/// (J₁, J₂, J₃) with J₁ almost complex, J₂ and J₃ almost product.
#[derive(Debug, Clone)]
pub struct ParaHypercomplexTriple {
    members: [StructureField; 3],
}

impl ParaHypercomplexTriple {
    /// Builds the triple, fixing ε = (1, −1, −1).
    pub fn new(j1: OperatorField, j2: OperatorField, j3: OperatorField) -> Result<Self> {
        j1.chart().ensure_same(j2.chart())?;
        j1.chart().ensure_same(j3.chart())?;
        let dim = j1.chart().dim();
        if !dim.is_multiple_of(4) {
            return Err(Error::InvalidStructure(format!(
                "para-hypercomplex structures need dimension 4n, chart has {dim}"
            )));
        }
        let probe = j1.chart().center();
        for j in [&j1, &j2, &j3] {
            let v = j.eval(&probe);
            if v.nrows() != dim || v.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.nrows(),
                });
            }
        }
        Ok(Self {
            members: [
                StructureField::new(j1, StructureKind::AlmostComplex),
                StructureField::new(j2, StructureKind::AlmostProduct),
                StructureField::new(j3, StructureKind::AlmostProduct),
            ],
        })
    }

    /// Constant triple on `chart`.
    pub fn constant(chart: Arc<Chart>, ops: [SquareMatrix; 3]) -> Result<Self> {
        let [a, b, c] = ops;
        Self::new(
            Field::constant(Arc::clone(&chart), a),
            Field::constant(Arc::clone(&chart), b),
            Field::constant(chart, c),
        )
    }

    /// Zero-based access: `get(0)` is J₁.
    pub fn get(&self, alpha: usize) -> &StructureField {
        &self.members[alpha]
    }

    pub fn members(&self) -> &[StructureField; 3] {
        &self.members
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.members[0].chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn is_constant(&self) -> bool {
        self.members.iter().all(|m| m.op.is_constant())
    }

    pub fn eval(&self, p: &[f64]) -> [SquareMatrix; 3] {
        [0, 1, 2].map(|a| self.members[a].op.eval(p))
    }

    /// The triple A J_α A⁻¹ for a pointwise-invertible field A. Conjugation
    /// preserves the algebra pointwise but generally destroys integrability.
    pub fn conjugated(&self, a: &OperatorField) -> Result<Self> {
        self.chart().ensure_same(a.chart())?;
        let conj = |j: &OperatorField| -> Result<OperatorField> {
            j.zip(a, |jv, av| {
                let n = av.nrows();
                let inv = av
                    .clone()
                    .try_inverse()
                    .unwrap_or_else(|| SquareMatrix::from_element(n, n, f64::NAN));
                &av * jv * inv
            })
        };
        Self::new(
            conj(&self.members[0].op)?,
            conj(&self.members[1].op)?,
            conj(&self.members[2].op)?,
        )
    }
}

/// One point for constant data (exact path), the plan's points otherwise.
pub(crate) fn sample_points(chart: &Chart, constant: bool, plan: &SamplePlan) -> Vec<Vec<f64>> {
    if constant {
        vec![chart.center()]
    } else {
        plan.points(chart)
    }
}

/// Residual of s² = −ε·Id, plus the P ≠ ±Id witness for product structures.
pub fn check_structure(s: &StructureField, plan: &SamplePlan, tol: &Tolerances) -> Result<CheckReport> {
    let pts = sample_points(s.chart(), s.op.is_constant(), plan);
    let n = s.chart().dim();
    let id = SquareMatrix::identity(n, n);
    let target = &id * (-s.epsilon());
    let mut worst = 0.0_f64;
    for p in &pts {
        let j = s.op.at(p)?;
        worst = nan_max(worst, residual_norm(&(&j * &j), &target));
    }
    let t = tol.pointwise(s.op.is_constant());
    let mut report = CheckReport::new("structure");
    let (name, anchor) = match s.kind {
        StructureKind::AlmostComplex => ("almost complex: J^2 = -Id", "J^2 = -Id"),
        StructureKind::AlmostProduct => ("almost product: P^2 = Id", "P^2 = Id"),
    };
    report.push(Residual::at_most(name, anchor, worst, t, pts.len()));
    if s.kind == StructureKind::AlmostProduct {
        let p0 = s.op.at(&pts[0])?;
        let dist = residual_norm(&p0, &id).min(residual_norm(&p0, &(-&id)));
        report.push(Residual::at_least(
            "almost product: P != +-Id",
            "P != +-Id",
            dist,
            t.max(f64::MIN_POSITIVE),
            1,
        ));
    }
    Ok(report)
}

/// Residuals of J₂J₁ = J₃ and J₁J₂ = −J₃.
pub fn check_triple(t: &ParaHypercomplexTriple, plan: &SamplePlan, tol: &Tolerances) -> Result<CheckReport> {
    let pts = sample_points(t.chart(), t.is_constant(), plan);
    let (mut a, mut b) = (0.0_f64, 0.0_f64);
    for p in &pts {
        t.chart().check(p)?;
        let [j1, j2, j3] = t.eval(p);
        a = nan_max(a, residual_norm(&(&j2 * &j1), &j3));
        b = nan_max(b, residual_norm(&(&j1 * &j2), &(-&j3)));
    }
    let tv = tol.pointwise(t.is_constant());
    let mut report = CheckReport::new("triple");
    report.push(Residual::at_most("triple: J2 J1 = J3", "J2 J1 = J3", a, tv, pts.len()));
    report.push(Residual::at_most("triple: J1 J2 = -J3", "J1 J2 = -J3", b, tv, pts.len()));
    Ok(report)
}

/// Structure squares, P ≠ ±Id witnesses and the triple algebra together.
pub fn check_triple_full(t: &ParaHypercomplexTriple, plan: &SamplePlan, tol: &Tolerances) -> Result<CheckReport> {
    let mut report = CheckReport::new("para-hypercomplex");
    for (alpha, s) in t.members().iter().enumerate() {
        for mut item in check_structure(s, plan, tol)?.items {
            item.identity = format!("J{}: {}", alpha + 1, item.identity);
            report.push(item);
        }
    }
    report.extend(check_triple(t, plan, tol)?);
    Ok(report)
}

fn validate_metric(g: &MetricField, p: &[f64]) -> Result<SquareMatrix> {
    let gp = g.at(p)?;
    BilinearForm::new(gp.clone())
        .and_then(|b| b.signature())
        .map_err(|_| Error::DegenerateMetric { point: p.to_vec() })?;
    Ok(gp)
}

/// Max over samples and α of |g(J_α·, J_α·) − ε_α g|.
pub fn compatibility_defect(
    g: &MetricField,
    t: &ParaHypercomplexTriple,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<CheckReport> {
    g.chart().ensure_same(t.chart())?;
    let constant = t.is_constant() && g.is_constant();
    let pts = sample_points(t.chart(), constant, plan);
    let mut worst = [0.0_f64; 3];
    for p in &pts {
        let gp = validate_metric(g, p)?;
        if gp.nrows() != t.dim() {
            return Err(Error::DimensionMismatch {
                expected: t.dim(),
                found: gp.nrows(),
            });
        }
        for (alpha, j) in t.eval(p).iter().enumerate() {
            let r = residual_norm(&pullback_matrix(&gp, j), &(&gp * EPSILON[alpha]));
            worst[alpha] = nan_max(worst[alpha], r);
        }
    }
    let tv = tol.pointwise(constant);
    let mut report = CheckReport::new("compatibility");
    for (alpha, w) in worst.iter().enumerate() {
        report.push(Residual::at_most(
            format!("compatible metric: g(J{a}X, J{a}Y) = eps{a} g(X, Y)", a = alpha + 1),
            "g(J_a X, J_a Y) = eps_a g(X, Y)",
            *w,
            tv,
            pts.len(),
        ));
    }
    Ok(report)
}

/// ¼[h + Σ ε_α h(J_α·, J_α·)] at a point.
pub fn average_at(h: &SquareMatrix, js: &[SquareMatrix; 3]) -> SquareMatrix {
    let mut g = h.clone();
    for (alpha, j) in js.iter().enumerate() {
        g += pullback_matrix(h, j) * EPSILON[alpha];
    }
    g * 0.25
}

/// The averaged para-hyperhermitian metric built from an arbitrary `h`.
///
/// The average can be degenerate; nondegeneracy is checked at the plan's
/// sample points (or once, for constant data) and reported as an error.
pub fn average_metric(h: &MetricField, t: &ParaHypercomplexTriple, plan: &SamplePlan) -> Result<MetricField> {
    h.chart().ensure_same(t.chart())?;
    let constant = h.is_constant() && t.is_constant();
    let out: MetricField = if constant {
        let c = t.chart().center();
        Field::constant(Arc::clone(t.chart()), average_at(&h.eval(&c), &t.eval(&c)))
    } else {
        let (h, t2) = (h.clone(), t.clone());
        Field::new(Arc::clone(t.chart()), move |p| average_at(&h.eval(p), &t2.eval(p)))
    };
    for p in sample_points(t.chart(), constant, plan) {
        let hp = h.at(&p)?;
        BilinearForm::new(hp)?;
        if signature_of(&out.eval(&p)).is_err() {
            return Err(Error::DegenerateResult { point: p });
        }
    }
    Ok(out)
}

/// g-orthogonal projection of `v` away from the non-null vectors in `frame`.
pub(crate) fn project_out(g: &SquareMatrix, v: &Vector, frame: &[Vector]) -> Vector {
    let mut w = v.clone();
    for f in frame {
        let ff = f.dot(&(g * f));
        w -= f * (f.dot(&(g * v)) / ff);
    }
    w
}

/// Picks a non-null vector in the g-orthogonal complement of `frame`,
/// normalised so that |g(E, E)| = 1. Candidates are projected basis vectors
/// and their pairwise sums and differences.
pub(crate) fn non_null_in_complement(g: &SquareMatrix, frame: &[Vector], point: &[f64]) -> Result<Vector> {
    let n = g.nrows();
    let basis: Vec<Vector> = (0..n)
        .map(|i| project_out(g, &Vector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 }), frame))
        .collect();
    let mut best: Option<(f64, Vector)> = None;
    let mut consider = |v: Vector| {
        let q = v.dot(&(g * &v)).abs() / v.norm_squared().max(f64::MIN_POSITIVE);
        if v.norm() > 1e-12 && best.as_ref().is_none_or(|(b, _)| q > *b) {
            best = Some((q, v));
        }
    };
    for b in &basis {
        consider(b.clone());
    }
    for i in 0..n {
        for j in i + 1..n {
            consider(&basis[i] + &basis[j]);
            consider(&basis[i] - &basis[j]);
        }
    }
    match best {
        Some((q, v)) if q > 1e-8 => {
            let norm = v.dot(&(g * &v)).abs().sqrt();
            Ok(v / norm)
        }
        _ => Err(Error::DegenerateMetric { point: point.to_vec() }),
    }
}

/// Gram matrix of a frame.
pub fn gram(g: &SquareMatrix, frame: &[Vector]) -> SquareMatrix {
    let k = frame.len();
    SquareMatrix::from_fn(k, k, |i, j| frame[i].dot(&(g * &frame[j])))
}

/// Pseudo-orthonormal frame {E_i, J₁E_i, J₂E_i, J₃E_i} at `point`, ordered
/// as all E_i, then all J₁E_i, then J₂E_i, then J₃E_i. Each E_i has
/// g(E_i, E_i) = +1, so the Gram matrix is diag(+1 (2m times), −1 (2m times)).
pub fn adapted_frame(
    g: &MetricField,
    t: &ParaHypercomplexTriple,
    point: &[f64],
    tol: &Tolerances,
) -> Result<Vec<Vector>> {
    g.chart().ensure_same(t.chart())?;
    let gp = validate_metric(g, point)?;
    let js = t.eval(point);
    let scale = max_abs(&gp).max(1.0);
    for (alpha, j) in js.iter().enumerate() {
        let r = residual_norm(&pullback_matrix(&gp, j), &(&gp * EPSILON[alpha]));
        if r > tol.algebra * scale {
            return Err(Error::IncompatibleInputs {
                what: format!("metric not compatible with J{}", alpha + 1),
                residual: r,
            });
        }
    }
    let m = t.dim() / 4;
    let mut blocks: Vec<[Vector; 4]> = Vec::with_capacity(m);
    let mut flat: Vec<Vector> = Vec::new();
    for _ in 0..m {
        let mut e = non_null_in_complement(&gp, &flat, point)?;
        if e.dot(&(&gp * &e)) < 0.0 {
            // g(J₂E, J₂E) = −g(E, E)
            e = &js[1] * e;
        }
        let block = [e.clone(), &js[0] * &e, &js[1] * &e, &js[2] * &e];
        flat.extend(block.iter().cloned());
        blocks.push(block);
    }
    let frame: Vec<Vector> = (0..4).flat_map(|k| blocks.iter().map(move |b| b[k].clone())).collect();
    let expected = SquareMatrix::from_diagonal(&Vector::from_fn(4 * m, |i, _| if i < 2 * m { 1.0 } else { -1.0 }));
    let r = residual_norm(&gram(&gp, &frame), &expected);
    if r > tol.first_derivative * scale {
        return Err(Error::IncompatibleInputs {
            what: "adapted frame is not pseudo-orthonormal".into(),
            residual: r,
        });
    }
    Ok(frame)
}

/// N(X,Y) = [JX, JY] − J[X, JY] − J[JX, Y] − ε[X, Y], brackets by central
/// differences with the scheme's base step.
pub fn nijenhuis(s: &StructureField, x: &VectorField, y: &VectorField, scheme: &FdScheme) -> Result<VectorField> {
    let j = &s.op;
    let jx = j.apply(x)?;
    let jy = j.apply(y)?;
    let a = lie_bracket(&jx, &jy, scheme)?;
    let b = lie_bracket(x, &jy, scheme)?;
    let c = lie_bracket(&jx, y, scheme)?;
    let d = lie_bracket(x, y, scheme)?;
    let eps = s.epsilon();
    let j = j.clone();
    Ok(Field::new(Arc::clone(x.chart()), move |p| {
        let jp = j.eval(p);
        a.eval(p) - &jp * (b.eval(p) + c.eval(p)) - d.eval(p) * eps
    }))
}

/// max over samples of |N_α(X, Y)| for each member of the triple.
pub fn nijenhuis_magnitudes(
    t: &ParaHypercomplexTriple,
    x: &VectorField,
    y: &VectorField,
    plan: &SamplePlan,
    scheme: &FdScheme,
) -> Result<[f64; 3]> {
    let mut out = [0.0_f64; 3];
    let pts = plan.points(t.chart());
    for (alpha, s) in t.members().iter().enumerate() {
        let n = nijenhuis(s, x, y, scheme)?;
        for p in &pts {
            out[alpha] = nan_max(out[alpha], max_abs(&n.at(p)?));
        }
    }
    Ok(out)
}

/// The identity expressing 2N_α through N_β and N_γ, for each even
/// permutation (α, β, γ):
///
/// 2N_α(X,Y) = N_β(J_γX, J_γY) + N_γ(J_βX, J_βY) − J_βN_γ(J_βX, Y) − J_βN_γ(X, J_βY)
///           − J_γN_β(J_γX, Y) − J_γN_β(X, J_γY) + ε_αε_βN_β(X,Y) + ε_αε_γN_γ(X,Y)
pub fn check_two_imply_third(
    t: &ParaHypercomplexTriple,
    x: &VectorField,
    y: &VectorField,
    plan: &SamplePlan,
    scheme: &FdScheme,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let pts = sample_points(t.chart(), t.is_constant() && x.is_constant() && y.is_constant(), plan);
    let mut report = CheckReport::new("two-imply-third");
    for (a, b, c) in EVEN_PERMUTATIONS {
        let (sa, sb, sc) = (t.get(a), t.get(b), t.get(c));
        let jbx = sb.op.apply(x)?;
        let jby = sb.op.apply(y)?;
        let jcx = sc.op.apply(x)?;
        let jcy = sc.op.apply(y)?;
        let lhs = nijenhuis(sa, x, y, scheme)?;
        let terms = [
            nijenhuis(sb, &jcx, &jcy, scheme)?,
            nijenhuis(sc, &jbx, &jby, scheme)?,
            nijenhuis(sc, &jbx, y, scheme)?,
            nijenhuis(sc, x, &jby, scheme)?,
            nijenhuis(sb, &jcx, y, scheme)?,
            nijenhuis(sb, x, &jcy, scheme)?,
            nijenhuis(sb, x, y, scheme)?,
            nijenhuis(sc, x, y, scheme)?,
        ];
        let (ea, eb, ec) = (EPSILON[a], EPSILON[b], EPSILON[c]);
        let mut worst = 0.0_f64;
        for p in &pts {
            t.chart().check(p)?;
            let jb = sb.op.eval(p);
            let jc = sc.op.eval(p);
            let v: Vec<Vector> = terms.iter().map(|f| f.eval(p)).collect();
            let rhs = &v[0] + &v[1] - &jb * (&v[2] + &v[3]) - &jc * (&v[4] + &v[5]) + &v[6] * (ea * eb)
                + &v[7] * (ea * ec);
            worst = nan_max(worst, residual_norm(&(lhs.eval(p) * 2.0), &rhs));
        }
        report.push(Residual::at_most(
            format!("two structures integrable imply the third: 2 N{}", a + 1),
            "2N_a = N_b(J_c., J_c.) + N_c(J_b., J_b.) - J_b N_c(J_b., .) - ... + eps_a eps_c N_c",
            worst,
            tol.integrable,
            pts.len(),
        ));
    }
    Ok(report)
}

/// The flat para-hypercomplex operators on R^{4k}:
/// J₁(x) = (−x₂, x₁, −x₄, x₃, …),
/// J₂(x) = (−x_{4k−1}, x_{4k}, −x_{4k−3}, x_{4k−2}, …, −x₁, x₂),
/// J₃(x) = (x_{4k}, x_{4k−1}, …, x₁).
pub fn flat_operators(k: usize) -> [SquareMatrix; 3] {
    let n = 4 * k;
    let mut j1 = SquareMatrix::zeros(n, n);
    let mut j2 = SquareMatrix::zeros(n, n);
    let mut j3 = SquareMatrix::zeros(n, n);
    for pair in 0..n / 2 {
        let (a, b) = (2 * pair, 2 * pair + 1);
        // output a = −x_b, output b = x_a
        j1[(a, b)] = -1.0;
        j1[(b, a)] = 1.0;
        // output a = −x_{n−2−a}, output b = x_{n−1−a}  (zero-based)
        j2[(a, n - 2 - a)] = -1.0;
        j2[(b, n - 1 - a)] = 1.0;
    }
    for i in 0..n {
        j3[(i, n - 1 - i)] = 1.0;
    }
    [j1, j2, j3]
}

/// The flat split metric diag(+1 (2k times), −1 (2k times)) on R^{4k}, checked
/// to make J₁ an isometry and J₂, J₃ anti-isometries.
pub fn flat_metric(k: usize) -> Result<SquareMatrix> {
    let n = 4 * k;
    let g = SquareMatrix::from_diagonal(&Vector::from_fn(n, |i, _| if i < 2 * k { 1.0 } else { -1.0 }));
    for (alpha, j) in flat_operators(k).iter().enumerate() {
        let r = residual_norm(&pullback_matrix(&g, j), &(&g * EPSILON[alpha]));
        if r != 0.0 {
            return Err(Error::IncompatibleInputs {
                what: format!("flat metric vs J{}", alpha + 1),
                residual: r,
            });
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Signature;
    use crate::smooth::Chart;
    use rand::Rng;

    fn r4() -> Arc<Chart> {
        Arc::new(Chart::cube("r4", 4, 1.0).unwrap())
    }

    fn flat_triple() -> ParaHypercomplexTriple {
        ParaHypercomplexTriple::constant(r4(), flat_operators(1)).unwrap()
    }

    fn plan() -> SamplePlan {
        SamplePlan::default()
    }

    /// A(x) = Id + x₁·E with E nilpotent.
    fn nilpotent_shear(chart: Arc<Chart>) -> OperatorField {
        Field::new(chart, |p: &[f64]| {
            let mut a = SquareMatrix::identity(4, 4);
            a[(0, 2)] = p[0];
            a[(1, 3)] = 0.5 * p[0];
            a[(0, 3)] = -0.7 * p[0];
            a
        })
    }

    fn conjugated() -> ParaHypercomplexTriple {
        flat_triple().conjugated(&nilpotent_shear(r4())).unwrap()
    }

    fn x_field(chart: Arc<Chart>) -> VectorField {
        Field::new(chart, |p: &[f64]| Vector::from_vec(vec![1.0 + p[1], p[0] * p[0], p[0] * p[1], 1.0]))
    }

    fn y_field(chart: Arc<Chart>) -> VectorField {
        Field::new(chart, |p: &[f64]| Vector::from_vec(vec![p[0], 2.0 - p[1] * p[0], 1.0, p[2]]))
    }

    #[test]
    fn flat_operators_match_coordinate_formulas() {
        let [j1, j2, j3] = flat_operators(2);
        let x = Vector::from_fn(8, |i, _| (i + 1) as f64);
        let f = |v: &[f64]| Vector::from_vec(v.to_vec());
        assert_eq!(&j1 * &x, f(&[-2.0, 1.0, -4.0, 3.0, -6.0, 5.0, -8.0, 7.0]));
        assert_eq!(&j2 * &x, f(&[-7.0, 8.0, -5.0, 6.0, -3.0, 4.0, -1.0, 2.0]));
        assert_eq!(&j3 * &x, f(&[8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]));
        // J₁(e₁) = e₂
        let e1 = Vector::from_fn(8, |i, _| if i == 0 { 1.0 } else { 0.0 });
        assert_eq!((&j1 * e1)[1], 1.0);
    }

    #[test]
    fn flat_structures_are_exact() {
        let t = flat_triple();
        for k in 1..=3 {
            let c = Arc::new(Chart::cube("r", 4 * k, 1.0).unwrap());
            let tk = ParaHypercomplexTriple::constant(c, flat_operators(k)).unwrap();
            let rep = check_triple_full(&tk, &plan(), &Tolerances::default()).unwrap();
            assert!(rep.passed(), "{rep:?}");
            assert_eq!(rep.worst(), 0.0);
            assert!(flat_metric(k).is_ok());
        }
        let j1 = check_structure(t.get(0), &plan(), &Tolerances::default()).unwrap();
        assert_eq!(j1.worst(), 0.0);
        let j3 = check_structure(t.get(2), &plan(), &Tolerances::default()).unwrap();
        assert!(j3.passed());
    }

    #[test]
    fn identity_is_not_a_product_structure() {
        let s = StructureField::new(Field::constant(r4(), SquareMatrix::identity(4, 4)), StructureKind::AlmostProduct);
        let rep = check_structure(&s, &plan(), &Tolerances::default()).unwrap();
        assert_eq!(rep.items[0].value, 0.0);
        assert!(!rep.passed());
    }

    #[test]
    fn sign_error_in_triple_is_detected() {
        let [a, b, c] = flat_operators(1);
        let t = ParaHypercomplexTriple::constant(r4(), [a, b, -c]).unwrap();
        let rep = check_triple(&t, &plan(), &Tolerances::default()).unwrap();
        assert_eq!(rep.worst(), 2.0);
    }

    #[test]
    fn conjugation_preserves_algebra() {
        let rep = check_triple_full(&conjugated(), &plan(), &Tolerances::default()).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn dimension_must_be_multiple_of_four() {
        let c = Arc::new(Chart::cube("r3", 3, 1.0).unwrap());
        let z = Field::constant(Arc::clone(&c), SquareMatrix::zeros(3, 3));
        assert!(ParaHypercomplexTriple::new(z.clone(), z.clone(), z).is_err());
    }

    #[test]
    fn compatibility_of_flat_metric_and_homogeneity() {
        let t = flat_triple();
        let g = Field::constant(r4(), flat_metric(1).unwrap());
        let rep = compatibility_defect(&g, &t, &plan(), &Tolerances::default()).unwrap();
        assert_eq!(rep.worst(), 0.0);
        // the Euclidean metric fails for the product members only
        let e = Field::constant(r4(), SquareMatrix::identity(4, 4));
        let rep = compatibility_defect(&e, &t, &plan(), &Tolerances::default()).unwrap();
        assert_eq!(rep.items[0].value, 0.0);
        assert_eq!(rep.items[1].value, 2.0);
        let h = Field::constant(r4(), SquareMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0])));
        let h2 = h.map(|m| m * 2.0);
        let d1 = compatibility_defect(&h, &t, &plan(), &Tolerances::default()).unwrap().worst();
        let d2 = compatibility_defect(&h2, &t, &plan(), &Tolerances::default()).unwrap().worst();
        assert!((d2 - 2.0 * d1).abs() < 1e-12);
    }

    #[test]
    fn averaging_fixed_point_signature_and_idempotence() {
        let t = flat_triple();
        let g = Field::constant(r4(), flat_metric(1).unwrap());
        let avg = average_metric(&g, &t, &plan()).unwrap();
        assert_eq!(avg.eval(&[0.0; 4]), g.eval(&[0.0; 4]));

        let h = Field::constant(r4(), SquareMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0])));
        let avg = average_metric(&h, &t, &plan()).unwrap();
        assert!(avg.is_constant());
        let expected = SquareMatrix::from_diagonal(&Vector::from_vec(vec![-1.0, -1.0, 1.0, 1.0]));
        assert!(residual_norm(&avg.eval(&[0.0; 4]), &expected) < 1e-15);
        assert_eq!(signature_of(&avg.eval(&[0.0; 4])).unwrap(), Signature::new(2, 2));
        let again = average_metric(&avg, &t, &plan()).unwrap();
        assert!(residual_norm(&again.eval(&[0.0; 4]), &avg.eval(&[0.0; 4])) < 1e-15);
    }

    #[test]
    fn degenerate_average_is_an_error() {
        // every J_α is Euclidean-orthogonal, so the identity averages to zero
        let t = flat_triple();
        let e = Field::constant(r4(), SquareMatrix::identity(4, 4));
        assert!(matches!(average_metric(&e, &t, &plan()), Err(Error::DegenerateResult { .. })));
    }

    #[test]
    fn smooth_average_is_compatible() {
        let t = conjugated();
        let h = Field::new(r4(), |p: &[f64]| {
            let mut m = SquareMatrix::identity(4, 4);
            m[(0, 1)] = 0.3 * p[2];
            m[(1, 0)] = 0.3 * p[2];
            m[(3, 3)] = 2.0 + p[0];
            m
        });
        let g = average_metric(&h, &t, &plan()).unwrap();
        let rep = compatibility_defect(&g, &t, &plan(), &Tolerances::default()).unwrap();
        assert!(rep.worst() < 1e-9, "{}", rep.worst());
        for p in plan().points(t.chart()) {
            assert_eq!(signature_of(&g.eval(&p)).unwrap(), Signature::new(2, 2));
        }
    }

    #[test]
    fn adapted_frame_on_flat_r4() {
        let t = flat_triple();
        let g = Field::constant(r4(), flat_metric(1).unwrap());
        let frame = adapted_frame(&g, &t, &[0.0; 4], &Tolerances::default()).unwrap();
        assert_eq!(frame.len(), 4);
        let gr = gram(&g.eval(&[0.0; 4]), &frame);
        let expected = SquareMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert!(residual_norm(&gr, &expected) < 1e-12);
        // J₁ permutes the frame up to sign
        let j1 = &t.eval(&[0.0; 4])[0];
        for v in &frame {
            let w = j1 * v;
            assert!(frame.iter().any(|f| (f - &w).amax() < 1e-12 || (f + &w).amax() < 1e-12));
        }
    }

    #[test]
    fn adapted_frame_in_dimension_eight_from_random_seed() {
        let c = Arc::new(Chart::cube("r8", 8, 1.0).unwrap());
        let t = ParaHypercomplexTriple::constant(Arc::clone(&c), flat_operators(2)).unwrap();
        let mut rng = plan().rng();
        let m = SquareMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
        let h = Field::constant(Arc::clone(&c), &m + m.transpose());
        let g = average_metric(&h, &t, &plan()).unwrap();
        let frame = adapted_frame(&g, &t, &c.center(), &Tolerances::default()).unwrap();
        assert_eq!(frame.len(), 8);
        let gr = gram(&g.eval(&c.center()), &frame);
        let expected = SquareMatrix::from_diagonal(&Vector::from_fn(8, |i, _| if i < 4 { 1.0 } else { -1.0 }));
        assert!(residual_norm(&gr, &expected) < 1e-9);
    }

    #[test]
    fn adapted_frame_rejects_incompatible_metric() {
        let t = flat_triple();
        let e = Field::constant(r4(), SquareMatrix::identity(4, 4));
        assert!(matches!(
            adapted_frame(&e, &t, &[0.0; 4], &Tolerances::default()),
            Err(Error::IncompatibleInputs { .. })
        ));
    }

    #[test]
    fn constant_structure_is_integrable() {
        let t = flat_triple();
        let s = FdScheme::default();
        let mags = nijenhuis_magnitudes(&t, &x_field(r4()), &y_field(r4()), &plan(), &s).unwrap();
        assert!(mags.iter().all(|m| *m < 1e-9), "{mags:?}");
        let n = nijenhuis(t.get(0), &x_field(r4()), &x_field(r4()), &s).unwrap();
        assert!(n.eval(&[0.1, 0.2, 0.3, 0.4]).amax() < 1e-12);
    }

    /// Coordinate formula
    /// N^k_{ij} = J^l_i ∂_l J^k_j − J^l_j ∂_l J^k_i − J^k_l(∂_i J^l_j − ∂_j J^l_i)
    /// with the partial derivatives of J = A J₀ A⁻¹ taken analytically.
    fn coordinate_oracle(j0: &SquareMatrix, p: &[f64], x: &Vector, y: &Vector) -> Vector {
        let mut e = SquareMatrix::zeros(4, 4);
        e[(0, 2)] = 1.0;
        e[(1, 3)] = 0.5;
        e[(0, 3)] = -0.7;
        // A = I + x₁E, A⁻¹ = I − x₁E, so J = J₀ + x₁(EJ₀ − J₀E) − x₁² EJ₀E
        let t = p[0];
        let j = j0 + (&e * j0 - j0 * &e) * t - &e * j0 * &e * (t * t);
        let d1 = (&e * j0 - j0 * &e) - &e * j0 * &e * (2.0 * t);
        let d = |l: usize| if l == 0 { d1.clone() } else { SquareMatrix::zeros(4, 4) };
        let mut out = Vector::zeros(4);
        for k in 0..4 {
            let mut s = 0.0;
            for i in 0..4 {
                for jj in 0..4 {
                    let mut c = 0.0;
                    for l in 0..4 {
                        c += j[(l, i)] * d(l)[(k, jj)] - j[(l, jj)] * d(l)[(k, i)]
                            - j[(k, l)] * (d(i)[(l, jj)] - d(jj)[(l, i)]);
                    }
                    s += c * x[i] * y[jj];
                }
            }
            out[k] = s;
        }
        out
    }

    #[test]
    fn conjugated_nijenhuis_matches_coordinate_oracle() {
        let t = conjugated();
        let s = FdScheme::default();
        let (x, y) = (x_field(r4()), y_field(r4()));
        let j0s = flat_operators(1);
        let mut largest = 0.0_f64;
        for p in plan().points(t.chart()) {
            for alpha in 0..3 {
                let n = nijenhuis(t.get(alpha), &x, &y, &s).unwrap().eval(&p);
                let o = coordinate_oracle(&j0s[alpha], &p, &x.eval(&p), &y.eval(&p));
                assert!(residual_norm(&n, &o) < 1e-6, "alpha {alpha}: {}", residual_norm(&n, &o));
                largest = largest.max(o.amax());
            }
        }
        assert!(largest > 0.1, "conjugated triple should not be integrable");
    }

    #[test]
    fn nijenhuis_is_antisymmetric_and_tensorial() {
        let t = conjugated();
        let s = FdScheme::default();
        let (x, y) = (x_field(r4()), y_field(r4()));
        let p = [0.3, -0.2, 0.5, 0.1];
        let nxy = nijenhuis(t.get(1), &x, &y, &s).unwrap().eval(&p);
        let nyx = nijenhuis(t.get(1), &y, &x, &s).unwrap().eval(&p);
        assert!((&nxy + &nyx).amax() < 1e-9);

        // f·X with f(p) = 1 + x₂x₃: N(fX, Y)(p) = f(p) N(X, Y)(p)
        let f = Field::new(r4(), |q: &[f64]| 1.0 + q[1] * q[2]);
        let fx = x.scaled(&f).unwrap();
        let nfx = nijenhuis(t.get(1), &fx, &y, &s).unwrap().eval(&p);
        assert!(residual_norm(&nfx, &(&nxy * f.eval(&p))) < 1e-7);

        // another extension of the same X(p) gives the same value
        let xp = x.eval(&p);
        let other = Field::new(r4(), move |q: &[f64]| {
            let bump: f64 = q.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
            &xp + Vector::from_vec(vec![bump, -bump, 2.0 * bump, 0.0])
        });
        let n2 = nijenhuis(t.get(1), &other, &y, &s).unwrap().eval(&p);
        assert!(residual_norm(&n2, &nxy) < 1e-7);
    }

    #[test]
    fn two_imply_third_holds_identically() {
        let s = FdScheme::default();
        let tol = Tolerances::default();
        let (x, y) = (x_field(r4()), y_field(r4()));
        let flat = check_two_imply_third(&flat_triple(), &x, &y, &plan().with_count(3), &s, &tol).unwrap();
        assert!(flat.worst() < 1e-9);
        let conj = check_two_imply_third(&conjugated(), &x, &y, &plan().with_count(5), &s, &tol).unwrap();
        assert!(conj.passed(), "{conj:?}");

        // bilinearity: scaling X by 3 scales both sides by 3, so the residual does too
        let x3 = x.map(|v| v * 3.0);
        let conj3 = check_two_imply_third(&conjugated(), &x3, &y, &plan().with_count(5), &s, &tol).unwrap();
        assert!(conj3.worst() < 1e-5);
    }
}
