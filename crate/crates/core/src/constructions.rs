//! Para-hypercomplex structures built from mixed 3-structures: on M × I, on
//! the metric cone, and on the trivial circle bundle. Also the parallel and
//! Einstein checks used on the results.

use std::sync::Arc;

use crate::algebra::{block_diag, max_abs, nan_max, residual_norm, SquareMatrix, Vector};
use crate::error::{Error, Result};
use crate::mixed3::{ContactTriple, MetricMixed, MixedTriple};
use crate::report::{CheckReport, Residual, Tolerances};
use crate::smooth::{
    covariant_derivative_operator, levi_civita, ricci, Chart, FdScheme, Field, MetricField, SamplePlan,
};
use crate::structures::{average_metric, sample_points, ParaHypercomplexTriple, EPSILON};

/// Number of grid points used to check positivity of the warp function.
const WARP_GRID: usize = 1001;

/// [[φ, a ξ], [b ηᵀ, 0]] for the base data at one point.
fn bordered(phi: &SquareMatrix, xi: &Vector, eta: &Vector, a: f64, b: f64) -> SquareMatrix {
    let n = phi.nrows();
    let mut out = SquareMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(phi);
    out.view_mut((0, n), (n, 1)).copy_from(&(xi * a));
    out.view_mut((n, 0), (1, n)).copy_from(&(eta.transpose() * b));
    out
}

fn extended_chart(base: &Chart, lo: f64, hi: f64, name: String) -> Result<Arc<Chart>> {
    Ok(Arc::new(base.product(&Chart::new("factor", vec![lo], vec![hi])?, name)?))
}

/// J_α = [[φ_α, ξ_α/f], [−f η_α, 0]] on M × [lo, hi], with f > 0 a function of
/// the last coordinate.
pub fn product_structure(
    m: &MixedTriple,
    lo: f64,
    hi: f64,
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Result<ParaHypercomplexTriple> {
    for i in 0..WARP_GRID {
        let r = lo + (hi - lo) * i as f64 / (WARP_GRID - 1) as f64;
        let v = f(r);
        if !(v > 0.0) {
            return Err(Error::NonpositiveF { value: v, at: r });
        }
    }
    let chart = extended_chart(m.chart(), lo, hi, format!("{}xI", m.chart().name()))?;
    let f = Arc::new(f);
    let n = m.dim();
    let ops = [0, 1, 2].map(|alpha| {
        let (t, f) = (m.get(alpha).clone(), Arc::clone(&f));
        if t.is_constant() {
            // f(r) still varies, so only the base data is frozen
            let c = m.chart().center();
            let (phi, xi, eta) = t.eval(&c);
            Field::new(Arc::clone(&chart), move |p: &[f64]| {
                let fr = f(p[n]);
                bordered(&phi, &xi, &eta, 1.0 / fr, -fr)
            })
        } else {
            Field::new(Arc::clone(&chart), move |p: &[f64]| {
                let (phi, xi, eta) = t.eval(&p[..n]);
                let fr = f(p[n]);
                bordered(&phi, &xi, &eta, 1.0 / fr, -fr)
            })
        }
    });
    let [a, b, c] = ops;
    ParaHypercomplexTriple::new(a, b, c)
}

/// The cone M × [r_lo, r_hi] with metric dr² + r²g and
/// J_αX = φ_αX − η_α(X)Φ, J_αΦ = ξ_α, where Φ = r∂_r. The radial coordinate is last.
#[derive(Debug, Clone)]
pub struct Cone {
    pub base: Arc<Chart>,
    pub triple: ParaHypercomplexTriple,
    pub metric: MetricField,
}

impl Cone {
    pub fn chart(&self) -> &Arc<Chart> {
        self.triple.chart()
    }
}

pub const DEFAULT_CONE_RANGE: (f64, f64) = (0.5, 2.0);

pub fn cone_structure(mm: &MetricMixed, r_lo: f64, r_hi: f64) -> Result<Cone> {
    if !(r_lo > 0.0) || !(r_hi > r_lo) {
        return Err(Error::ApexIncluded { lo: r_lo, hi: r_hi });
    }
    let chart = extended_chart(mm.chart(), r_lo, r_hi, format!("C({})", mm.chart().name()))?;
    let n = mm.mixed.dim();
    let ops = [0, 1, 2].map(|alpha| {
        let t = mm.mixed.get(alpha).clone();
        Field::new(Arc::clone(&chart), move |p: &[f64]| {
            let (phi, xi, eta) = t.eval(&p[..n]);
            let r = p[n];
            bordered(&phi, &xi, &eta, 1.0 / r, -r)
        })
    });
    let [a, b, c] = ops;
    let g = mm.g.clone();
    let metric = Field::new(Arc::clone(&chart), move |p: &[f64]| {
        let r = p[n];
        block_diag(&[&(g.eval(&p[..n]) * (r * r)), &SquareMatrix::identity(1, 1)])
    });
    Ok(Cone {
        base: Arc::clone(mm.chart()),
        triple: ParaHypercomplexTriple::new(a, b, c)?,
        metric,
    })
}

/// Max over samples, α and coordinate directions of |∇_{∂_k} J_α| for the
/// Levi-Civita connection of `g`.
pub fn parallel_defect(
    t: &ParaHypercomplexTriple,
    g: &MetricField,
    plan: &SamplePlan,
    scheme: &FdScheme,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let conn = levi_civita(g, scheme)?;
    let pts = sample_points(t.chart(), t.is_constant() && g.is_constant(), plan);
    let n = t.dim();
    let mut worst = [0.0_f64; 3];
    for p in &pts {
        for k in 0..n {
            let e = Vector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
            for (alpha, s) in t.members().iter().enumerate() {
                let d = covariant_derivative_operator(&conn, &s.op, p, &e, scheme)?;
                worst[alpha] = nan_max(worst[alpha], max_abs(&d));
            }
        }
    }
    let mut report = CheckReport::new("parallel");
    for (alpha, w) in worst.iter().enumerate() {
        report.push(Residual::at_most(
            format!("parallel: nabla J{} = 0", alpha + 1),
            "nabla J_a = 0",
            *w,
            tol.nested,
            pts.len(),
        ));
    }
    Ok(report)
}

/// Max over samples of |Ric − λ g|.
pub fn einstein_defect(g: &MetricField, lambda: f64, plan: &SamplePlan, scheme: &FdScheme) -> Result<(f64, usize)> {
    let pts = sample_points(g.chart(), g.is_constant(), plan);
    let mut worst = 0.0_f64;
    for p in &pts {
        let ric = ricci(g, p, scheme)?;
        worst = nan_max(worst, residual_norm(ric.matrix(), &(g.eval(p) * lambda)));
    }
    Ok((worst, pts.len()))
}

pub fn check_einstein(
    g: &MetricField,
    lambda: f64,
    plan: &SamplePlan,
    scheme: &FdScheme,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let (w, k) = einstein_defect(g, lambda, plan, scheme)?;
    let mut report = CheckReport::new("einstein");
    let (name, anchor) = if lambda == 0.0 {
        ("Ricci-flat: Ric = 0".to_string(), "Ric = 0")
    } else {
        (format!("Einstein: Ric = {lambda} g"), "Ric = lambda g")
    };
    report.push(Residual::at_most(name, anchor, w, tol.nested, k));
    Ok(report)
}

/// Recovers a mixed structure on M ≅ M × {1} from a structure on the cone:
/// ξ_α = J_α(∂_r), φ_αX = ∇_Xξ_α, η_α(X) = g(ξ_α, X), with ∇ the
/// Levi-Civita connection of the restricted metric g. The parallel defect of
/// the cone structure is reported alongside, since the recovery is only
/// meaningful for a parallel triple.
pub fn cone_inverse(
    cone: &Cone,
    plan: &SamplePlan,
    scheme: &FdScheme,
    tol: &Tolerances,
) -> Result<(MetricMixed, CheckReport)> {
    let n = cone.base.dim();
    let at_one = {
        let chart = cone.chart();
        if !(chart.lo()[n] <= 1.0 && 1.0 <= chart.hi()[n]) {
            return Err(Error::OutOfDomain {
                chart: chart.name().to_string(),
                point: vec![1.0],
            });
        }
        |p: &[f64]| {
            let mut q = p.to_vec();
            q.push(1.0);
            q
        }
    };
    let report = parallel_defect(&cone.triple, &cone.metric, plan, scheme, tol)?;
    let g: MetricField = {
        let cm = cone.metric.clone();
        Field::new(Arc::clone(&cone.base), move |p: &[f64]| cm.eval(&at_one(p)).view((0, 0), (n, n)).into_owned())
    };
    let conn = levi_civita(&g, scheme)?;
    let mut triples = Vec::with_capacity(3);
    for alpha in 0..3 {
        let op = cone.triple.get(alpha).op.clone();
        let xi = Field::new(Arc::clone(&cone.base), move |p: &[f64]| {
            op.eval(&at_one(p)).view((0, n), (n, 1)).column(0).into_owned()
        });
        let eta = xi.zip(&g, |x, gm| gm * x)?;
        let phi = {
            let (xi, conn, scheme) = (xi.clone(), conn.clone(), *scheme);
            Field::new(Arc::clone(&cone.base), move |p: &[f64]| {
                let gamma = conn.christoffel(p);
                let xv = xi.eval(p);
                let cols: Vec<Vector> = (0..n)
                    .map(|k| {
                        let d = crate::smooth::partial(&xi, p, k, scheme.step, scheme.order);
                        let e = Vector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
                        d + gamma.apply(&e, &xv)
                    })
                    .collect();
                SquareMatrix::from_columns(&cols)
            })
        };
        triples.push(ContactTriple::new(phi, xi, eta, EPSILON[alpha])?);
    }
    let [a, b, c]: [ContactTriple; 3] = triples.try_into().expect("three triples");
    Ok((MetricMixed::new(MixedTriple::new([a, b, c])?, g)?, report))
}

/// Max over samples and α of the distances between two mixed structures'
/// φ, ξ and η.
pub fn mixed_distance(a: &MixedTriple, b: &MixedTriple, plan: &SamplePlan) -> Result<[f64; 3]> {
    a.chart().ensure_same(b.chart())?;
    let mut w = [0.0_f64; 3];
    for p in sample_points(a.chart(), a.is_constant() && b.is_constant(), plan) {
        for (x, y) in a.eval(&p).iter().zip(b.eval(&p).iter()) {
            w[0] = nan_max(w[0], residual_norm(&x.0, &y.0));
            w[1] = nan_max(w[1], residual_norm(&x.1, &y.1));
            w[2] = nan_max(w[2], residual_norm(&x.2, &y.2));
        }
    }
    Ok(w)
}

/// M × S¹ (trivial bundle, angle coordinate last) with
/// J_αX^h = (φ_αX)^h + η_α(X)Θ, J_αΘ = −ξ_α^h, and a para-hyperhermitian
/// metric averaged from π*g + dt².
pub fn circle_bundle_structure(mm: &MetricMixed, plan: &SamplePlan) -> Result<(ParaHypercomplexTriple, MetricField)> {
    let chart = extended_chart(mm.chart(), 0.0, std::f64::consts::TAU, format!("{}xS1", mm.chart().name()))?;
    let n = mm.mixed.dim();
    let constant = mm.is_constant();
    let ops = [0, 1, 2].map(|alpha| {
        let t = mm.mixed.get(alpha).clone();
        if constant {
            let (phi, xi, eta) = t.eval(&mm.chart().center());
            Field::constant(Arc::clone(&chart), bordered(&phi, &xi, &eta, -1.0, 1.0))
        } else {
            Field::new(Arc::clone(&chart), move |p: &[f64]| {
                let (phi, xi, eta) = t.eval(&p[..n]);
                bordered(&phi, &xi, &eta, -1.0, 1.0)
            })
        }
    });
    let [a, b, c] = ops;
    let triple = ParaHypercomplexTriple::new(a, b, c)?;
    let seed: MetricField = if mm.g.is_constant() {
        let g0 = mm.g.eval(&mm.chart().center());
        Field::constant(Arc::clone(&chart), block_diag(&[&g0, &SquareMatrix::identity(1, 1)]))
    } else {
        let g = mm.g.clone();
        Field::new(Arc::clone(&chart), move |p: &[f64]| {
            block_diag(&[&g.eval(&p[..n]), &SquareMatrix::identity(1, 1)])
        })
    };
    let metric = average_metric(&seed, &triple, plan)?;
    Ok((triple, metric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{signature_of, Signature};
    use crate::mixed3::{block_data, block_seed, check_mixed_axioms, compatible_metric, pseudosphere, ReebSign};
    use crate::structures::{check_triple_full, compatibility_defect, nijenhuis_magnitudes};

    fn block(n: usize) -> MetricMixed {
        let c = Arc::new(Chart::cube(format!("r{}", 4 * n + 3), 4 * n + 3, 1.0).unwrap());
        let m = MixedTriple::constant(Arc::clone(&c), block_data(n)).unwrap();
        let g = compatible_metric(&m, &Field::constant(c, block_seed(n)), &SamplePlan::default()).unwrap();
        MetricMixed::new(m, g).unwrap()
    }

    fn sphere() -> MetricMixed {
        pseudosphere(0, ReebSign::Plus, 0.25).unwrap()
    }

    #[test]
    fn product_algebra_is_independent_of_f() {
        let tol = Tolerances::default();
        let plan = SamplePlan::default();
        for mm in [block(0), block(1), sphere()] {
            let one = product_structure(&mm.mixed, 0.0, 1.0, |_| 1.0).unwrap();
            let two = product_structure(&mm.mixed, 0.0, 1.0, |_| 2.0).unwrap();
            let r1 = check_triple_full(&one, &plan, &tol).unwrap();
            let r2 = check_triple_full(&two, &plan, &tol).unwrap();
            assert!(r1.passed() && r2.passed(), "{r1:?} {r2:?}");
            assert!((r1.worst() - r2.worst()).abs() < 1e-12);
        }
    }

    #[test]
    fn product_rejects_nonpositive_f() {
        let mm = block(0);
        assert!(matches!(
            product_structure(&mm.mixed, 0.0, 1.0, |r| r - 0.5),
            Err(Error::NonpositiveF { .. })
        ));
    }

    #[test]
    fn product_over_r3_averages_to_split_signature() {
        let mm = block(0);
        let t = product_structure(&mm.mixed, 0.0, 1.0, |r| 1.0 + r).unwrap();
        let e = Field::constant(Arc::clone(t.chart()), SquareMatrix::identity(4, 4));
        let g = average_metric(&e, &t, &SamplePlan::default()).unwrap();
        for p in SamplePlan::default().points(t.chart()) {
            assert_eq!(signature_of(&g.eval(&p)).unwrap(), Signature::new(2, 2));
        }
    }

    #[test]
    fn cone_rejects_apex() {
        assert!(matches!(cone_structure(&sphere(), 0.0, 1.0), Err(Error::ApexIncluded { .. })));
        assert!(matches!(cone_structure(&sphere(), -1.0, 1.0), Err(Error::ApexIncluded { .. })));
    }

    #[test]
    fn cone_over_sphere_is_flat_para_hyperkaehler() {
        let plan = SamplePlan::default().with_count(5);
        let tol = Tolerances::default();
        let scheme = FdScheme::default();
        let (lo, hi) = DEFAULT_CONE_RANGE;
        let cone = cone_structure(&sphere(), lo, hi).unwrap();
        assert!(check_triple_full(&cone.triple, &plan, &tol).unwrap().worst() < 1e-9);
        assert!(compatibility_defect(&cone.metric, &cone.triple, &plan, &tol).unwrap().worst() < 1e-6);
        let par = parallel_defect(&cone.triple, &cone.metric, &plan, &scheme, &tol).unwrap();
        assert!(par.passed(), "{par:?}");
        let (ric, _) = einstein_defect(&cone.metric, 0.0, &plan.with_count(2), &scheme).unwrap();
        assert!(ric < 5e-3, "{ric}");
        let c = Arc::clone(cone.chart());
        let x = Field::new(Arc::clone(&c), |p: &[f64]| Vector::from_vec(vec![1.0 + p[1], p[0] * p[2], 0.5, p[3]]));
        let y = Field::new(c, |p: &[f64]| Vector::from_vec(vec![p[3], 1.0, p[0] - p[1], 0.2]));
        let mags = nijenhuis_magnitudes(&cone.triple, &x, &y, &plan, &scheme).unwrap();
        assert!(mags.iter().all(|m| *m < 5e-3), "{mags:?}");
    }

    #[test]
    fn cone_over_literal_sphere_is_not_parallel() {
        let plan = SamplePlan::default().with_count(3);
        let cone = cone_structure(&pseudosphere(0, ReebSign::Minus, 0.25).unwrap(), 0.5, 2.0).unwrap();
        let par = parallel_defect(&cone.triple, &cone.metric, &plan, &FdScheme::default(), &Tolerances::default()).unwrap();
        assert!(par.worst() > 0.1);
    }

    #[test]
    fn cone_inverse_round_trip() {
        let plan = SamplePlan::default().with_count(5);
        let tol = Tolerances::default();
        let scheme = FdScheme::default();
        let s = sphere();
        let cone = cone_structure(&s, 0.5, 2.0).unwrap();
        let (back, par) = cone_inverse(&cone, &plan, &scheme, &tol).unwrap();
        assert!(par.passed());
        let d = mixed_distance(&back.mixed, &s.mixed, &plan).unwrap();
        assert!(d.iter().all(|v| *v < 5e-3), "{d:?}");
        assert!(check_mixed_axioms(&back.mixed, &plan, &tol).unwrap().worst() < 5e-3);
        // η_α(ξ_α) = ε_α
        let p = s.chart().center();
        for (alpha, t) in back.mixed.triples().iter().enumerate() {
            assert!((t.eta.eval(&p).dot(&t.xi.eval(&p)) - EPSILON[alpha]).abs() < 1e-9);
        }
    }

    #[test]
    fn cone_inverse_needs_unit_slice() {
        let cone = cone_structure(&sphere(), 1.5, 2.0).unwrap();
        assert!(cone_inverse(&cone, &SamplePlan::default(), &FdScheme::default(), &Tolerances::default()).is_err());
    }

    #[test]
    fn circle_bundles() {
        let plan = SamplePlan::default();
        let tol = Tolerances::default();
        for (mm, sig) in [(block(0), Signature::new(2, 2)), (block(1), Signature::new(4, 4)), (sphere(), Signature::new(2, 2))] {
            let (t, g) = circle_bundle_structure(&mm, &plan).unwrap();
            let rep = check_triple_full(&t, &plan, &tol).unwrap();
            assert!(rep.passed() && rep.worst() < 1e-9, "{rep:?}");
            let p = t.chart().center();
            assert_eq!(signature_of(&g.eval(&p)).unwrap(), sig);
            assert!(compatibility_defect(&g, &t, &plan, &tol).unwrap().worst() < 1e-9);
            // on horizontal vectors J reproduces φ up to the Θ-component
            let n = mm.mixed.dim();
            let j = t.eval(&p);
            for alpha in 0..3 {
                let phi = mm.mixed.get(alpha).phi.eval(&p[..n]);
                assert!(residual_norm(&j[alpha].view((0, 0), (n, n)).into_owned(), &phi) < 1e-15);
            }
        }
    }

    #[test]
    fn sphere_is_einstein_with_constant_two() {
        let s = sphere();
        let (w, _) = einstein_defect(&s.g, 2.0, &SamplePlan::default().with_count(3), &FdScheme::default()).unwrap();
        assert!(w < 5e-3, "{w}");
    }
}
