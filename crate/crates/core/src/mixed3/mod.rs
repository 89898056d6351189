//! Mixed 3-structures: one almost contact and two Lorentzian almost
//! paracontact structures coupled by the mixed axioms, compatible metrics,
//! pseudo-orthonormal frames and the Sasakian covariant identities.

mod sphere;

use std::sync::Arc;

use crate::algebra::{
    block_diag, nan_max, outer, pullback_matrix, residual_norm, signature_of, SquareMatrix, Vector,
};
use crate::error::{Error, Result};
use crate::report::{CheckReport, Residual, Tolerances};
use crate::smooth::{
    covariant_derivative_operator, levi_civita, Chart, FdScheme, Field, MetricField, OperatorField, SamplePlan,
    VectorField,
};
use crate::structures::{flat_operators, gram, project_out, sample_points, EPSILON, EVEN_PERMUTATIONS};

pub use sphere::{pseudosphere, ReebSign};

/// (φ, ξ, η) with φ² = −ε·Id + η⊗ξ and η(ξ) = ε. `eta` holds covector
/// components, so η(X) = η·X and η⊗ξ acts as the matrix ξηᵀ.
#[derive(Debug, Clone)]
pub struct ContactTriple {
    pub phi: OperatorField,
    pub xi: VectorField,
    pub eta: VectorField,
    pub epsilon: f64,
}

impl ContactTriple {
    pub fn new(phi: OperatorField, xi: VectorField, eta: VectorField, epsilon: f64) -> Result<Self> {
        phi.chart().ensure_same(xi.chart())?;
        phi.chart().ensure_same(eta.chart())?;
        if epsilon != 1.0 && epsilon != -1.0 {
            return Err(Error::InvalidStructure(format!("epsilon must be +1 or -1, got {epsilon}")));
        }
        let n = phi.chart().dim();
        let c = phi.chart().center();
        let (p, x, e) = (phi.eval(&c), xi.eval(&c), eta.eval(&c));
        for found in [p.nrows(), p.ncols(), x.len(), e.len()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        Ok(Self { phi, xi, eta, epsilon })
    }

    pub fn constant(chart: Arc<Chart>, phi: SquareMatrix, xi: Vector, eta: Vector, epsilon: f64) -> Result<Self> {
        Self::new(
            Field::constant(Arc::clone(&chart), phi),
            Field::constant(Arc::clone(&chart), xi),
            Field::constant(chart, eta),
            epsilon,
        )
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.phi.chart()
    }

    pub fn is_constant(&self) -> bool {
        self.phi.is_constant() && self.xi.is_constant() && self.eta.is_constant()
    }

    pub fn eval(&self, p: &[f64]) -> (SquareMatrix, Vector, Vector) {
        (self.phi.eval(p), self.xi.eval(p), self.eta.eval(p))
    }
}

/// Three contact triples with ε = (+1, −1, −1).
#[derive(Debug, Clone)]
pub struct MixedTriple {
    triples: [ContactTriple; 3],
}

impl MixedTriple {
    pub fn new(triples: [ContactTriple; 3]) -> Result<Self> {
        for (alpha, t) in triples.iter().enumerate() {
            triples[0].chart().ensure_same(t.chart())?;
            if t.epsilon != EPSILON[alpha] {
                return Err(Error::InvalidStructure(format!(
                    "triple {} must have epsilon {}",
                    alpha + 1,
                    EPSILON[alpha]
                )));
            }
        }
        let dim = triples[0].chart().dim();
        if dim % 4 != 3 {
            return Err(Error::InvalidStructure(format!(
                "mixed 3-structures need dimension 4n+3, chart has {dim}"
            )));
        }
        Ok(Self { triples })
    }

    /// Constant data: (φ_α, ξ_α, η_α) for α = 1, 2, 3.
    pub fn constant(chart: Arc<Chart>, data: [(SquareMatrix, Vector, Vector); 3]) -> Result<Self> {
        let mut out = Vec::with_capacity(3);
        for (alpha, (phi, xi, eta)) in data.into_iter().enumerate() {
            out.push(ContactTriple::constant(Arc::clone(&chart), phi, xi, eta, EPSILON[alpha])?);
        }
        let [a, b, c]: [ContactTriple; 3] = out.try_into().expect("three triples");
        Self::new([a, b, c])
    }

    pub fn get(&self, alpha: usize) -> &ContactTriple {
        &self.triples[alpha]
    }

    pub fn triples(&self) -> &[ContactTriple; 3] {
        &self.triples
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.triples[0].chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    /// n in dim = 4n + 3.
    pub fn quaternionic_dim(&self) -> usize {
        self.dim() / 4
    }

    pub fn is_constant(&self) -> bool {
        self.triples.iter().all(ContactTriple::is_constant)
    }

    pub fn eval(&self, p: &[f64]) -> [(SquareMatrix, Vector, Vector); 3] {
        [0, 1, 2].map(|a| self.triples[a].eval(p))
    }
}

/// A mixed triple with a metric.
#[derive(Debug, Clone)]
pub struct MetricMixed {
    pub mixed: MixedTriple,
    pub g: MetricField,
}

impl MetricMixed {
    pub fn new(mixed: MixedTriple, g: MetricField) -> Result<Self> {
        mixed.chart().ensure_same(g.chart())?;
        Ok(Self { mixed, g })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.mixed.chart()
    }

    pub fn is_constant(&self) -> bool {
        self.mixed.is_constant() && self.g.is_constant()
    }
}

/// The explicit mixed 3-structure on R³, as (φ_α, ξ_α, η_α).
pub fn r3_data() -> [(SquareMatrix, Vector, Vector); 3] {
    let m = |r: [f64; 9]| SquareMatrix::from_row_slice(3, 3, &r);
    let v = |r: [f64; 3]| Vector::from_row_slice(&r);
    [
        (
            m([0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]),
            v([0.0, 1.0, 0.0]),
            v([0.0, 1.0, 0.0]),
        ),
        (
            m([0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
            v([1.0, 0.0, 0.0]),
            v([-1.0, 0.0, 0.0]),
        ),
        (
            m([0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            v([0.0, 0.0, 1.0]),
            v([0.0, 0.0, -1.0]),
        ),
    ]
}

/// The block structure on R^{4n+3}: φ'_α = diag(φ_α, J_α), ξ'_α = (ξ_α, 0),
/// η'_α = (η_α, 0), with J_α the flat para-hypercomplex operators on R^{4n}.
pub fn block_data(n: usize) -> [(SquareMatrix, Vector, Vector); 3] {
    let base = r3_data();
    if n == 0 {
        return base;
    }
    let js = flat_operators(n);
    let dim = 4 * n + 3;
    let pad = |v: &Vector| Vector::from_fn(dim, |i, _| if i < 3 { v[i] } else { 0.0 });
    let mut out = base.clone();
    for alpha in 0..3 {
        let (phi, xi, eta) = &base[alpha];
        out[alpha] = (block_diag(&[phi, &js[alpha]]), pad(xi), pad(eta));
    }
    out
}

/// Seed metric for the compatible-metric construction on R^{4n+3}: identity
/// on the first three coordinates and diag(1, 2, 3, 4) on each four-block.
/// The Euclidean seed averages to zero on the four-blocks, since the flat
/// operators there are Euclidean-orthogonal.
pub fn block_seed(n: usize) -> SquareMatrix {
    SquareMatrix::from_diagonal(&Vector::from_fn(4 * n + 3, |i, _| if i < 3 { 1.0 } else { ((i - 3) % 4 + 1) as f64 }))
}

/// Residuals of φ² + ε·Id − ξ⊗η and η(ξ) − ε, plus the consequences φξ = 0
/// and η∘φ = 0.
pub fn check_contact(t: &ContactTriple, plan: &SamplePlan, tol: &Tolerances) -> Result<CheckReport> {
    let pts = sample_points(t.chart(), t.is_constant(), plan);
    let n = t.chart().dim();
    let id = SquareMatrix::identity(n, n);
    let mut w = [0.0_f64; 4];
    for p in &pts {
        t.chart().check(p)?;
        let (phi, xi, eta) = t.eval(p);
        let square = &phi * &phi + &id * t.epsilon - outer(&xi, &eta);
        w[0] = nan_max(w[0], residual_norm(&square, &SquareMatrix::zeros(n, n)));
        w[1] = nan_max(w[1], (eta.dot(&xi) - t.epsilon).abs());
        w[2] = nan_max(w[2], residual_norm(&(&phi * &xi), &Vector::zeros(n)));
        w[3] = nan_max(w[3], residual_norm(&(phi.transpose() * &eta), &Vector::zeros(n)));
    }
    let tv = tol.pointwise(t.is_constant());
    let kind = if t.epsilon > 0.0 { "almost contact" } else { "Lorentzian almost paracontact" };
    let mut report = CheckReport::new("contact");
    report.push(Residual::at_most(
        format!("{kind}: phi^2 = -eps Id + eta (x) xi"),
        "phi^2 = -eps I + eta (x) xi",
        w[0],
        tv,
        pts.len(),
    ));
    report.push(Residual::at_most(format!("{kind}: eta(xi) = eps"), "eta(xi) = eps", w[1], tv, pts.len()));
    report.push(Residual::at_most(format!("{kind}: phi xi = 0"), "phi xi = 0", w[2], tol.algebra, pts.len()));
    report.push(Residual::at_most(
        format!("{kind}: eta o phi = 0"),
        "eta o phi = 0",
        w[3],
        tol.algebra,
        pts.len(),
    ));
    Ok(report)
}

/// Per-axiom residuals of the coupling conditions, maximised over samples and
/// even permutations (α, β, γ), together with each member's contact check.
pub fn check_mixed_axioms(m: &MixedTriple, plan: &SamplePlan, tol: &Tolerances) -> Result<CheckReport> {
    let mut report = CheckReport::new("mixed axioms");
    for (alpha, t) in m.triples().iter().enumerate() {
        for mut item in check_contact(t, plan, tol)?.items {
            item.identity = format!("triple {}: {}", alpha + 1, item.identity);
            report.push(item);
        }
    }
    let pts = sample_points(m.chart(), m.is_constant(), plan);
    let mut w = [0.0_f64; 4];
    for p in &pts {
        m.chart().check(p)?;
        let d = m.eval(p);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    w[0] = nan_max(w[0], d[a].2.dot(&d[b].1).abs());
                }
            }
        }
        for (a, b, c) in EVEN_PERMUTATIONS {
            let (pa, xa, ea) = &d[a];
            let (pb, xb, eb) = &d[b];
            let (pc, xc, ec) = &d[c];
            let ec_xi = xc * EPSILON[c];
            w[1] = nan_max(w[1], residual_norm(&(pa * xb), &ec_xi));
            w[1] = nan_max(w[1], residual_norm(&(-(pb * xa)), &ec_xi));
            let ec_eta = ec * EPSILON[c];
            w[2] = nan_max(w[2], residual_norm(&(pb.transpose() * ea), &ec_eta));
            w[2] = nan_max(w[2], residual_norm(&(-(pa.transpose() * eb)), &ec_eta));
            let ec_phi = pc * EPSILON[c];
            w[3] = nan_max(w[3], residual_norm(&(pa * pb - outer(xa, eb)), &ec_phi));
            w[3] = nan_max(w[3], residual_norm(&(-(pb * pa) + outer(xb, ea)), &ec_phi));
        }
    }
    let tv = tol.pointwise(m.is_constant());
    let k = pts.len();
    report.push(Residual::at_most("mixed: eta_a(xi_b) = 0", "eta_a(xi_b) = 0, a != b", w[0], tv, k));
    report.push(Residual::at_most(
        "mixed: phi_a xi_b = -phi_b xi_a = eps_c xi_c",
        "phi_a(xi_b) = -phi_b(xi_a) = eps_c xi_c",
        w[1],
        tv,
        k,
    ));
    report.push(Residual::at_most(
        "mixed: eta_a o phi_b = -eta_b o phi_a = eps_c eta_c",
        "eta_a o phi_b = -eta_b o phi_a = eps_c eta_c",
        w[2],
        tv,
        k,
    ));
    report.push(Residual::at_most(
        "mixed: phi_a phi_b - eta_b (x) xi_a = eps_c phi_c",
        "phi_a phi_b - eta_b (x) xi_a = -phi_b phi_a + eta_a (x) xi_b = eps_c phi_c",
        w[3],
        tv,
        k,
    ));
    Ok(report)
}

/// Residuals of g(φ_αX, φ_αY) = ε_α g(X,Y) − η_α(X)η_α(Y) and
/// g(X, ξ_α) = η_α(X), plus the forced values g(ξ_α, ξ_β) = ε_α δ_αβ.
pub fn check_metric_mixed(mm: &MetricMixed, plan: &SamplePlan, tol: &Tolerances) -> Result<CheckReport> {
    let pts = sample_points(mm.chart(), mm.is_constant(), plan);
    let mut w = [0.0_f64; 3];
    for p in &pts {
        let g = mm.g.at(p)?;
        let d = mm.mixed.eval(p);
        for (alpha, (phi, xi, eta)) in d.iter().enumerate() {
            let lhs = pullback_matrix(&g, phi);
            let rhs = &g * EPSILON[alpha] - outer(eta, eta);
            w[0] = nan_max(w[0], residual_norm(&lhs, &rhs));
            w[1] = nan_max(w[1], residual_norm(&(&g * xi), eta));
            for (beta, (_, xb, _)) in d.iter().enumerate() {
                let target = if alpha == beta { EPSILON[alpha] } else { 0.0 };
                w[2] = nan_max(w[2], (xi.dot(&(&g * xb)) - target).abs());
            }
        }
    }
    let tv = tol.pointwise(mm.is_constant());
    let k = pts.len();
    let mut report = CheckReport::new("metric mixed");
    report.push(Residual::at_most(
        "metric: g(phi_a X, phi_a Y) = eps_a g(X, Y) - eta_a(X) eta_a(Y)",
        "g(phi_a X, phi_a Y) = eps_a g(X,Y) - eta_a(X) eta_a(Y)",
        w[0],
        tv,
        k,
    ));
    report.push(Residual::at_most("metric: g(X, xi_a) = eta_a(X)", "g(X, xi_a) = eta_a(X)", w[1], tv, k));
    report.push(Residual::at_most(
        "metric: g(xi_a, xi_b) = eps_a delta_ab",
        "g(xi_a, xi_b) = eps_a delta_ab",
        w[2],
        tv,
        k,
    ));
    Ok(report)
}

const STEP_LABELS: [&str; 4] = ["u from f", "v from u", "h from v", "average of h"];

fn compatible_at(d: &[(SquareMatrix, Vector, Vector); 3], f: &SquareMatrix) -> [SquareMatrix; 4] {
    let sq = |phi: &SquareMatrix| phi * phi;
    let u = pullback_matrix(f, &sq(&d[0].0)) + outer(&d[0].2, &d[0].2);
    let v = pullback_matrix(&u, &sq(&d[1].0)) - outer(&d[1].2, &d[1].2);
    let h = pullback_matrix(&v, &sq(&d[2].0)) - outer(&d[2].2, &d[2].2);
    let mut g = h.clone();
    for (alpha, (phi, _, eta)) in d.iter().enumerate() {
        g += (pullback_matrix(&h, phi) + outer(eta, eta)) * EPSILON[alpha];
    }
    [u, v, h, g * 0.25]
}

/// The four-step compatible metric built from an arbitrary metric `f`:
///
/// u = f(φ₁²·, φ₁²·) + η₁⊗η₁, v = u(φ₂²·, φ₂²·) − η₂⊗η₂,
/// h = v(φ₃²·, φ₃²·) − η₃⊗η₃, g = ¼[h + Σ ε_α(h(φ_α·, φ_α·) + η_α⊗η_α)].
///
/// Each intermediate form must be nondegenerate at the sample points.
pub fn compatible_metric(m: &MixedTriple, f: &MetricField, plan: &SamplePlan) -> Result<MetricField> {
    m.chart().ensure_same(f.chart())?;
    let constant = m.is_constant() && f.is_constant();
    for p in sample_points(m.chart(), constant, plan) {
        let steps = compatible_at(&m.eval(&p), &f.at(&p)?);
        for (i, s) in steps.iter().enumerate() {
            if signature_of(s).is_err() {
                return Err(Error::DegenerateIntermediate {
                    step: i + 1,
                    label: STEP_LABELS[i],
                    point: p,
                });
            }
        }
    }
    if constant {
        let c = m.chart().center();
        let [_, _, _, g] = compatible_at(&m.eval(&c), &f.eval(&c));
        return Ok(Field::constant(Arc::clone(m.chart()), g));
    }
    let (m2, f2) = (m.clone(), f.clone());
    Ok(Field::new(Arc::clone(m.chart()), move |p| {
        let [_, _, _, g] = compatible_at(&m2.eval(p), &f2.eval(p));
        g
    }))
}

/// Pseudo-orthonormal frame {(E_i, φ₁E_i, φ₂E_i, φ₃E_i)_{i=1..n}, ξ₁, ξ₂, ξ₃}.
/// Each E_i is chosen with g(E_i, E_i) = +1, so a block has Gram
/// diag(1, 1, −1, −1) and the ξ's contribute diag(1, −1, −1).
pub fn mixed_frame(mm: &MetricMixed, point: &[f64], tol: &Tolerances) -> Result<Vec<Vector>> {
    let g = mm.g.at(point)?;
    signature_of(&g).map_err(|_| Error::DegenerateMetric { point: point.to_vec() })?;
    let d = mm.mixed.eval(point);
    let xis: Vec<Vector> = d.iter().map(|t| t.1.clone()).collect();
    let mut taken: Vec<Vector> = xis.clone();
    let mut frame = Vec::with_capacity(mm.mixed.dim());
    for _ in 0..mm.mixed.quaternionic_dim() {
        let mut e = crate::structures::non_null_in_complement(&g, &taken, point)?;
        if e.dot(&(&g * &e)) < 0.0 {
            e = &d[1].0 * e;
        }
        // remove roundoff leakage into the span of the ξ's
        e = project_out(&g, &e, &xis);
        let block = [e.clone(), &d[0].0 * &e, &d[1].0 * &e, &d[2].0 * &e];
        taken.extend(block.iter().cloned());
        frame.extend(block);
    }
    frame.extend(xis);
    let gr = gram(&g, &frame);
    let off = SquareMatrix::from_fn(gr.nrows(), gr.ncols(), |i, j| if i == j { 0.0 } else { gr[(i, j)] });
    let diag_err = gr.diagonal().iter().map(|v| (v.abs() - 1.0).abs()).fold(0.0, f64::max);
    let r = crate::algebra::max_abs(&off).max(diag_err);
    if !(r <= tol.algebra.max(tol.first_derivative)) {
        return Err(Error::IncompatibleInputs {
            what: "metric is not compatible with the mixed structure".into(),
            residual: r,
        });
    }
    Ok(frame)
}

/// Left and right sides of the three covariant identities at `p`.
fn sasakian_sides(
    mm: &MetricMixed,
    conn: &crate::smooth::AffineConnection,
    p: &[f64],
    x: &Vector,
    y: &Vector,
    scheme: &FdScheme,
) -> Result<[(Vector, Vector); 3]> {
    let g = mm.g.at(p)?;
    let mut out: [(Vector, Vector); 3] = Default::default();
    for (alpha, t) in mm.mixed.triples().iter().enumerate() {
        let (phi, xi, eta) = t.eval(p);
        let lhs = covariant_derivative_operator(conn, &t.phi, p, x, scheme)? * y;
        let rhs = if alpha == 0 {
            &xi * x.dot(&(&g * y)) - x * eta.dot(y)
        } else {
            let (px, py) = (&phi * x, &phi * y);
            &xi * px.dot(&(&g * &py)) + &phi * &px * eta.dot(y)
        };
        out[alpha] = (lhs, rhs);
    }
    Ok(out)
}

/// Sasakian (α = 1) and Lorentzian para-Sasakian (α = 2, 3) defects
/// for the Levi-Civita connection of g:
///
/// (∇_Xφ₁)Y = g(X,Y)ξ₁ − η₁(Y)X,
/// (∇_Xφ_α)Y = g(φ_αX, φ_αY)ξ_α + η_α(Y)φ_α²X.
///
/// Each item carries a note with the residual of the same identity with the
/// right-hand side negated, which separates sign conventions from genuine
/// failures.
pub fn sasakian_defect(
    mm: &MetricMixed,
    scheme: &FdScheme,
    plan: &SamplePlan,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let conn = levi_civita(&mm.g, scheme)?;
    let pts = plan.points(mm.chart());
    let mut rng = plan.rng();
    let n = mm.mixed.dim();
    let mut direct = [0.0_f64; 3];
    let mut reversed = [0.0_f64; 3];
    for p in &pts {
        let g = mm.g.at(p)?;
        signature_of(&g).map_err(|_| Error::DegenerateMetric { point: p.clone() })?;
        let x = SamplePlan::random_vector(&mut rng, n);
        let y = SamplePlan::random_vector(&mut rng, n);
        for (alpha, (lhs, rhs)) in sasakian_sides(mm, &conn, p, &x, &y, scheme)?.iter().enumerate() {
            direct[alpha] = nan_max(direct[alpha], residual_norm(lhs, rhs));
            reversed[alpha] = nan_max(reversed[alpha], residual_norm(lhs, &(-rhs)));
        }
    }
    let mut report = CheckReport::new("sasakian");
    for alpha in 0..3 {
        let (name, anchor) = if alpha == 0 {
            (
                "Sasakian: (nabla_X phi1) Y = g(X,Y) xi1 - eta1(Y) X".to_string(),
                "(nabla_X phi_1) Y = g(X,Y) xi_1 - eta_1(Y) X",
            )
        } else {
            (
                format!(
                    "Lorentzian para-Sasakian: (nabla_X phi{a}) Y = g(phi{a} X, phi{a} Y) xi{a} + eta{a}(Y) phi{a}^2 X",
                    a = alpha + 1
                ),
                "(nabla_X phi_a) Y = g(phi_a X, phi_a Y) xi_a + eta_a(Y) phi_a^2 X",
            )
        };
        report.push(
            Residual::at_most(name, anchor, direct[alpha], tol.nested, pts.len())
                .with_note(format!("with the right-hand side negated: {:.3e}", reversed[alpha])),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Signature;
    use proptest::prelude::*;

    fn chart(dim: usize) -> Arc<Chart> {
        Arc::new(Chart::cube(format!("r{dim}"), dim, 1.0).unwrap())
    }

    fn block(n: usize) -> MixedTriple {
        MixedTriple::constant(chart(4 * n + 3), block_data(n)).unwrap()
    }

    fn euclid(dim: usize) -> MetricField {
        Field::constant(chart(dim), SquareMatrix::identity(dim, dim))
    }

    #[test]
    fn r3_contact_square_by_hand() {
        let [(phi, xi, eta), ..] = r3_data();
        assert_eq!(&phi * &phi, SquareMatrix::from_diagonal(&Vector::from_vec(vec![-1.0, 0.0, -1.0])));
        assert_eq!(&phi * &phi, -SquareMatrix::identity(3, 3) + outer(&xi, &eta));
    }

    #[test]
    fn r3_coupling_by_hand() {
        let [(p1, _, e1), (p2, x2, _), (_, x3, e3)] = r3_data();
        assert_eq!(&p1 * &x2, Vector::from_vec(vec![0.0, 0.0, -1.0]));
        assert_eq!(&p1 * &x2, -x3);
        assert_eq!(p2.transpose() * &e1, Vector::from_vec(vec![0.0, 0.0, 1.0]));
        assert_eq!(p2.transpose() * &e1, -e3);
    }

    #[test]
    fn block_structures_are_exact() {
        for n in 0..=2 {
            let rep = check_mixed_axioms(&block(n), &SamplePlan::default(), &Tolerances::default()).unwrap();
            assert!(rep.passed(), "{rep:?}");
            assert_eq!(rep.worst(), 0.0, "n = {n}");
        }
    }

    #[test]
    fn wrong_epsilon_is_caught() {
        let [(phi, xi, eta), ..] = r3_data();
        let t = ContactTriple::constant(chart(3), phi, xi, eta, -1.0).unwrap();
        let rep = check_contact(&t, &SamplePlan::default(), &Tolerances::default()).unwrap();
        assert_eq!(rep.items[0].value, 2.0);
        assert!(!rep.passed());
    }

    #[test]
    fn flipped_phi_breaks_coupling() {
        let mut d = r3_data();
        d[0].0 = -d[0].0.clone();
        let m = MixedTriple::constant(chart(3), d).unwrap();
        let rep = check_mixed_axioms(&m, &SamplePlan::default(), &Tolerances::default()).unwrap();
        assert!(rep.item("mixed: phi_a xi_b = -phi_b xi_a = eps_c xi_c").unwrap().value > 1.0);
    }

    #[test]
    fn dimension_and_epsilon_validation() {
        let c = chart(4);
        let z = || ContactTriple::constant(Arc::clone(&c), SquareMatrix::zeros(4, 4), Vector::zeros(4), Vector::zeros(4), 1.0);
        assert!(MixedTriple::new([z().unwrap(), z().unwrap(), z().unwrap()]).is_err());
        assert!(ContactTriple::constant(chart(3), SquareMatrix::zeros(3, 3), Vector::zeros(3), Vector::zeros(3), 0.5).is_err());
        assert!(matches!(
            ContactTriple::constant(chart(3), SquareMatrix::zeros(3, 3), Vector::zeros(4), Vector::zeros(3), 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn compatible_metric_signatures() {
        let plan = SamplePlan::default();
        for (n, sig) in [(0, Signature::new(1, 2)), (1, Signature::new(3, 4)), (2, Signature::new(5, 6))] {
            let m = block(n);
            let seed = Field::constant(chart(4 * n + 3), block_seed(n));
            let g = compatible_metric(&m, &seed, &plan).unwrap();
            assert_eq!(signature_of(&g.eval(&m.chart().center())).unwrap(), sig);
            let mm = MetricMixed::new(m.clone(), g.clone()).unwrap();
            let rep = check_metric_mixed(&mm, &plan, &Tolerances::default()).unwrap();
            assert!(rep.passed(), "{rep:?}");
            let again = compatible_metric(&m, &g, &plan).unwrap();
            assert!(residual_norm(&again.eval(&m.chart().center()), &g.eval(&m.chart().center())) < 1e-12);
        }
        let g3 = compatible_metric(&block(0), &euclid(3), &plan).unwrap();
        assert_eq!(g3.eval(&[0.0; 3]), SquareMatrix::from_diagonal(&Vector::from_vec(vec![-1.0, 1.0, -1.0])));
    }

    #[test]
    fn euclidean_seed_degenerates_on_four_blocks() {
        match compatible_metric(&block(1), &euclid(7), &SamplePlan::default()) {
            Err(Error::DegenerateIntermediate { step, .. }) => assert_eq!(step, 4),
            other => panic!("{other:?}"),
        }
    }

    fn seed(n: usize) -> MetricField {
        Field::constant(chart(4 * n + 3), block_seed(n))
    }

    #[test]
    fn degenerate_seed_reports_step() {
        let f = Field::constant(chart(3), SquareMatrix::zeros(3, 3));
        match compatible_metric(&block(0), &f, &SamplePlan::default()) {
            Err(Error::DegenerateIntermediate { step, .. }) => assert_eq!(step, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn frames_in_dimension_three_and_seven() {
        let plan = SamplePlan::default();
        let tol = Tolerances::default();
        let m = block(0);
        let mm = MetricMixed::new(m.clone(), compatible_metric(&m, &euclid(3), &plan).unwrap()).unwrap();
        let f = mixed_frame(&mm, &[0.0; 3], &tol).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(gram(&mm.g.eval(&[0.0; 3]), &f), SquareMatrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0, -1.0])));

        let m = block(1);
        let mm = MetricMixed::new(m.clone(), compatible_metric(&m, &seed(1), &plan).unwrap()).unwrap();
        let f = mixed_frame(&mm, &[0.0; 7], &tol).unwrap();
        let gr = gram(&mm.g.eval(&[0.0; 7]), &f);
        assert_eq!(f.len(), 7);
        assert_eq!(signature_of(&gr).unwrap(), Signature::new(3, 4));
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    assert!(gr[(i, j)].abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn flat_block_structure_is_not_sasakian() {
        let plan = SamplePlan::default().with_count(4);
        let m = block(1);
        let mm = MetricMixed::new(m.clone(), compatible_metric(&m, &seed(1), &plan).unwrap()).unwrap();
        let rep = sasakian_defect(&mm, &FdScheme::default(), &plan, &Tolerances::default()).unwrap();
        assert!(rep.items[0].value > 0.1);
        assert!(rep.items[0].note.is_some());
    }

    proptest! {
        #[test]
        fn compatible_metric_from_random_seed(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = SquareMatrix::from_fn(7, 7, |_, _| rng.gen_range(-0.3..0.3));
            let f = Field::constant(chart(7), SquareMatrix::identity(7, 7) + &a * a.transpose());
            let m = block(1);
            if let Ok(g) = compatible_metric(&m, &f, &SamplePlan::default()) {
                let mm = MetricMixed::new(m, g.clone()).unwrap();
                let rep = check_metric_mixed(&mm, &SamplePlan::default(), &Tolerances { exact: 1e-10, ..Tolerances::default() }).unwrap();
                prop_assert!(rep.passed(), "{:?}", rep);
                prop_assert_eq!(signature_of(&g.eval(&[0.0; 7])).unwrap(), Signature::new(3, 4));
            }
        }

        #[test]
        fn sasakian_sides_are_bilinear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let m = block(0);
            let g = compatible_metric(&m, &euclid(3), &SamplePlan::default()).unwrap();
            let warped = g.zip(&Field::new(chart(3), |p: &[f64]| 1.0 + 0.2 * p[0] * p[0]), |g, s| g * s).unwrap();
            let mm = MetricMixed::new(m, warped).unwrap();
            let scheme = FdScheme::default();
            let conn = levi_civita(&mm.g, &scheme).unwrap();
            let p = [0.3, -0.1, 0.2];
            let x = Vector::from_vec(vec![1.0, -0.5, 0.25]);
            let y = Vector::from_vec(vec![0.3, 0.7, -1.0]);
            let base = sasakian_sides(&mm, &conn, &p, &x, &y, &scheme).unwrap();
            let scaled = sasakian_sides(&mm, &conn, &p, &(&x * a), &(&y * b), &scheme).unwrap();
            for ((l0, r0), (l1, r1)) in base.iter().zip(&scaled) {
                prop_assert!(residual_norm(l1, &(l0 * (a * b))) < 1e-9);
                prop_assert!(residual_norm(r1, &(r0 * (a * b))) < 1e-9);
            }
        }
    }
}
