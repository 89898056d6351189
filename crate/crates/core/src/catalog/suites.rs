use rand::Rng;

use super::{CatalogEntry, EntryKind, RunSettings, SasakianMode, Suite};
use crate::algebra::{nan_max, residual_norm, signature_of, Signature, SquareMatrix};
use crate::constructions::{check_einstein, cone_inverse, mixed_distance};
use crate::error::Result;
use crate::mixed3::{check_metric_mixed, check_mixed_axioms, compatible_metric, mixed_frame, sasakian_defect, MetricMixed};
use crate::report::{CheckReport, Residual};
use crate::smooth::{covariant_derivative_operator, levi_civita, Field, MetricField, SamplePlan};
use crate::structures::{
    adapted_frame, average_metric, check_structure, check_triple_full, check_two_imply_third, compatibility_defect,
    gram, nijenhuis_magnitudes, sample_points, ParaHypercomplexTriple,
};
use crate::tangent::{
    check_bracket_identities, check_sasaki_blocks, closed_form_report, nijenhuis_closed_forms, para_hermitian_defect,
};

pub(super) fn run(entry: &CatalogEntry, suite: Suite, s: &RunSettings) -> Result<Option<CheckReport>> {
    if entry.expectation(suite).is_none() {
        return Ok(None);
    }
    let report = match (&entry.kind, suite) {
        (EntryKind::Mixed { mixed, metric, sasakian, .. }, Suite::Axioms) => {
            let mut r = check_mixed_axioms(mixed, &s.plan, &s.tol)?;
            if let Some(g) = metric {
                let mm = MetricMixed::new(mixed.clone(), g.clone())?;
                r.extend(check_metric_mixed(&mm, &s.plan, &s.tol)?);
                if *sasakian == SasakianMode::Required {
                    r.extend(sasakian_defect(&mm, &s.scheme, &s.plan, &s.tol)?);
                }
            }
            r
        }
        (EntryKind::Mixed { mixed, metric, seed, sasakian, .. }, Suite::Averaging) => {
            let g = match metric {
                Some(g) => g.clone(),
                None => compatible_metric(mixed, seed, &s.plan)?,
            };
            let mm = MetricMixed::new(mixed.clone(), g.clone())?;
            let mut r = CheckReport::new("compatible metric");
            let n = mixed.quaternionic_dim();
            let pts = sample_points(mixed.chart(), mm.is_constant(), &s.plan);
            r.push(signature_item(&g, &pts, Signature::new(2 * n + 1, 2 * n + 2)));
            for item in check_metric_mixed(&mm, &s.plan, &s.tol)?.items {
                r.push(item);
            }
            let again = compatible_metric(mixed, &g, &s.plan)?;
            let idem = pts
                .iter()
                .fold(0.0_f64, |w, p| nan_max(w, residual_norm(&again.eval(p), &g.eval(p))));
            r.push(Residual::at_most(
                "compatible metric is a fixed point of the construction",
                "g built from a compatible g returns g",
                idem,
                s.tol.pointwise(mm.is_constant()),
                pts.len(),
            ));
            let frame = mixed_frame(&mm, &pts[0], &s.tol)?;
            let gr = gram(&g.eval(&pts[0]), &frame);
            let expected = SquareMatrix::from_diagonal(&gr.diagonal().map(|v| v.signum()));
            let mut item = Residual::at_most(
                "pseudo-orthonormal frame {E, phi1 E, phi2 E, phi3 E, xi1, xi2, xi3}",
                "Gram matrix diagonal +-1",
                residual_norm(&gr, &expected),
                s.tol.first_derivative,
                1,
            );
            let sig = signature_of(&gr).ok();
            if sig != Some(Signature::new(2 * n + 1, 2 * n + 2)) {
                item.value = f64::NAN;
            }
            r.push(item);
            if *sasakian == SasakianMode::Informational {
                let plan = s.plan.with_count(s.plan.count.min(4));
                for item in sasakian_defect(&mm, &s.scheme, &plan, &s.tol)?.items {
                    r.push(item.into_informational());
                }
            }
            r
        }
        (EntryKind::Mixed { metric, einstein: Some(lambda), .. }, Suite::Einstein) => {
            let g = metric.as_ref().expect("Einstein entries carry a metric");
            check_einstein(g, *lambda, &s.plan, &s.scheme, &s.tol)?
        }
        (EntryKind::ParaHypercomplex { triple, metric, .. }, Suite::Axioms) => {
            let mut r = check_triple_full(triple, &s.plan, &s.tol)?;
            r.extend(compatibility_defect(metric, triple, &s.plan, &s.tol)?);
            r
        }
        (EntryKind::ParaHypercomplex { triple, metric, .. }, Suite::Averaging) => averaging(triple, metric, s)?,
        (EntryKind::ParaHypercomplex { triple, integrable, .. }, Suite::Nijenhuis) => {
            let (x, y) = super::probe_fields(triple.chart());
            let mags = nijenhuis_magnitudes(triple, &x, &y, &s.plan, &s.scheme)?;
            let mut r = CheckReport::new("nijenhuis");
            if *integrable {
                for (alpha, m) in mags.iter().enumerate() {
                    r.push(Residual::at_most(
                        format!("integrable: N{} = 0", alpha + 1),
                        "N_a = 0",
                        *m,
                        s.tol.integrable,
                        s.plan.count,
                    ));
                }
            } else {
                r.push(Residual::at_least(
                    "non-integrable witness: max |N_a(X, Y)|",
                    "N_a != 0",
                    mags.iter().copied().fold(0.0, nan_max),
                    s.tol.witness,
                    s.plan.count,
                ));
            }
            let plan = s.plan.with_count(s.plan.count.min(5));
            r.extend(check_two_imply_third(triple, &x, &y, &plan, &s.scheme, &s.tol)?);
            r
        }
        (EntryKind::ParaHermitian { p, g, flat, tc, lifted }, Suite::Axioms) => {
            let mut r = check_structure(p, &s.plan, &s.tol)?;
            let constant = p.op.is_constant() && g.is_constant();
            r.push(Residual::at_most(
                "para-hermitian: g(PX, PY) = -g(X, Y)",
                "g(PX,PY) = -g(X,Y)",
                para_hermitian_defect(p, g, &s.plan)?,
                s.tol.pointwise(constant),
                s.plan.count,
            ));
            let conn = levi_civita(g, &s.scheme)?;
            let dim = p.chart().dim();
            let mut worst = 0.0_f64;
            for pt in sample_points(p.chart(), constant, &s.plan) {
                for k in 0..dim {
                    let e = crate::algebra::Vector::from_fn(dim, |i, _| if i == k { 1.0 } else { 0.0 });
                    let d = covariant_derivative_operator(&conn, &p.op, &pt, &e, &s.scheme)?;
                    worst = nan_max(worst, crate::algebra::max_abs(&d));
                }
            }
            let item = Residual::at_most("para-Kaehler: nabla P = 0", "nabla P = 0", worst, s.tol.connection, s.plan.count);
            r.push(if *flat { item } else { item.into_informational() });
            let big = tc.sasaki_metric(g)?;
            let mut lifted_report = check_triple_full(lifted, &s.plan, &s.tol)?;
            lifted_report.extend(compatibility_defect(&big, lifted, &s.plan, &s.tol)?);
            lifted_report.extend(check_sasaki_blocks(tc, g, &s.plan, &s.tol)?);
            for mut item in lifted_report.items {
                item.identity = format!("tangent bundle: {}", item.identity);
                r.push(item);
            }
            r
        }
        (EntryKind::ParaHermitian { tc, .. }, Suite::Lifts) => {
            let (x, y) = super::probe_fields(tc.base());
            check_bracket_identities(tc, &x, &y, &s.plan, &s.scheme, &s.tol)?
        }
        (EntryKind::ParaHermitian { tc, p, lifted, flat, .. }, Suite::Nijenhuis) => {
            let (x, y) = super::probe_fields(tc.base());
            let out = nijenhuis_closed_forms(tc, p, lifted, &x, &y, &s.plan, &s.scheme)?;
            closed_form_report(&out, *flat, &s.tol)
        }
        (EntryKind::Product { by_f }, Suite::Constructions) => {
            let mut r = CheckReport::new("product");
            for (f, t) in by_f {
                for mut item in check_triple_full(t, &s.plan, &s.tol)?.items {
                    item.identity = format!("f = {f}: {}", item.identity);
                    r.push(item);
                }
            }
            r
        }
        (EntryKind::Cone { cone, base }, Suite::Constructions) => {
            let mut r = check_triple_full(&cone.triple, &s.plan, &s.tol)?;
            r.extend(compatibility_defect(&cone.metric, &cone.triple, &s.plan, &s.tol)?);
            let (x, y) = super::probe_fields(cone.chart());
            let mags = nijenhuis_magnitudes(&cone.triple, &x, &y, &s.plan, &s.scheme)?;
            for (alpha, m) in mags.iter().enumerate() {
                r.push(Residual::at_most(
                    format!("cone: N{} = 0", alpha + 1),
                    "N_a = 0 on the cone",
                    *m,
                    s.tol.nested,
                    s.plan.count,
                ));
            }
            let (back, par) = cone_inverse(cone, &s.plan, &s.scheme, &s.tol)?;
            r.extend(par);
            let d = mixed_distance(&back.mixed, &base.mixed, &s.plan)?;
            for (what, v) in ["phi", "xi", "eta"].iter().zip(d) {
                r.push(Residual::at_most(
                    format!("cone inverse recovers {what}"),
                    "xi_a = J_a(d_r), phi_a X = nabla_X xi_a, eta_a(X) = g(xi_a, X)",
                    v,
                    s.tol.nested,
                    s.plan.count,
                ));
            }
            r
        }
        (EntryKind::Cone { cone, .. }, Suite::Einstein) => check_einstein(&cone.metric, 0.0, &s.plan, &s.scheme, &s.tol)?,
        (EntryKind::Circle { triple, metric }, Suite::Constructions) => {
            let mut r = check_triple_full(triple, &s.plan, &s.tol)?;
            r.extend(compatibility_defect(metric, triple, &s.plan, &s.tol)?);
            let pts = sample_points(triple.chart(), triple.is_constant() && metric.is_constant(), &s.plan);
            let half = triple.dim() / 2;
            r.push(signature_item(metric, &pts, Signature::new(half, half)));
            r
        }
        _ => return Ok(None),
    };
    Ok(Some(report))
}

/// Counts sample points whose metric signature differs from `expected`.
fn signature_item(g: &MetricField, pts: &[Vec<f64>], expected: Signature) -> Residual {
    let mut bad = 0usize;
    let mut seen = None;
    for p in pts {
        let sig = signature_of(&g.eval(p)).ok();
        if sig != Some(expected) {
            bad += 1;
            seen = Some(sig);
        }
    }
    let item = Residual::at_most(
        format!("signature is {expected}"),
        "signature (p, q) at every sample",
        bad as f64,
        0.0,
        pts.len(),
    );
    match seen {
        Some(Some(s)) => item.with_note(format!("observed {s}")),
        Some(None) => item.with_note("degenerate metric observed"),
        None => item,
    }
}

/// Averages random symmetric seeds over the triple, then checks the results.
fn averaging(triple: &ParaHypercomplexTriple, metric: &MetricField, s: &RunSettings) -> Result<CheckReport> {
    let chart = triple.chart();
    let n = triple.dim();
    let mut rng = s.plan.rng();
    let single = SamplePlan {
        count: 1,
        ..s.plan
    };
    let mut defect = 0.0_f64;
    let mut idem = 0.0_f64;
    let mut wrong_signature = 0usize;
    let mut nondegenerate = 0usize;
    let pts = sample_points(chart, triple.is_constant(), &s.plan);
    for _ in 0..s.averaging_seeds {
        let a = SquareMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = Field::constant(std::sync::Arc::clone(chart), (&a + a.transpose()) * 0.5);
        let plan = if triple.is_constant() { single } else { s.plan };
        let Ok(g) = average_metric(&h, triple, &plan) else { continue };
        nondegenerate += 1;
        defect = nan_max(defect, compatibility_defect(&g, triple, &plan, &s.tol)?.worst());
        let again = average_metric(&g, triple, &plan)?;
        for p in &pts {
            idem = nan_max(idem, residual_norm(&again.eval(p), &g.eval(p)));
            if signature_of(&g.eval(p)).ok() != Some(Signature::new(n / 2, n / 2)) {
                wrong_signature += 1;
            }
        }
    }
    let tol = s.tol.pointwise(triple.is_constant());
    let mut r = CheckReport::new("averaging");
    r.push(Residual::informational(
        "averaging: nondegenerate averages",
        "seeds whose average is a metric",
        nondegenerate as f64,
        s.averaging_seeds,
    ));
    r.push(Residual::at_most(
        "averaging: average is compatible with the triple",
        "g(J_a X, J_a Y) = eps_a g(X, Y)",
        defect,
        tol,
        nondegenerate,
    ));
    r.push(Residual::at_most(
        "averaging: average has split signature",
        "signature (2n, 2n)",
        wrong_signature as f64,
        0.0,
        nondegenerate,
    ));
    r.push(Residual::at_most(
        "averaging: averaging is idempotent",
        "average of a compatible metric is itself",
        idem,
        tol,
        nondegenerate,
    ));
    let p0 = &pts[0];
    let frame = adapted_frame(metric, triple, p0, &s.tol)?;
    let gr = gram(&metric.eval(p0), &frame);
    let expected = SquareMatrix::from_diagonal(&crate::algebra::Vector::from_fn(n, |i, _| if i < n / 2 { 1.0 } else { -1.0 }));
    r.push(Residual::at_most(
        "adapted frame {E, J1 E, J2 E, J3 E} is pseudo-orthonormal",
        "Gram = diag(+1.., -1..)",
        residual_norm(&gr, &expected),
        s.tol.algebra,
        1,
    ));
    Ok(r)
}
