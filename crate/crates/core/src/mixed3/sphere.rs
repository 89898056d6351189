//! The pseudosphere S^{4n+3}_{2n+1} = {⟨x, x⟩ = 1} in flat R^{4n+4}_{2n+2},
//! with its mixed 3-structure induced from the flat para-hypercomplex
//! operators by tangential projection.

use std::sync::Arc;

use crate::algebra::{SquareMatrix, Vector};
use crate::error::{Error, Result};
use crate::smooth::{Chart, Field, MetricField};
use crate::structures::{flat_metric, flat_operators};

use super::{ContactTriple, MetricMixed, MixedTriple};

/// Orientation of the Reeb fields relative to the unit normal N = x:
/// ξ_α = σ J_α N with σ = +1 (`Plus`) or −1 (`Minus`).
///
/// Both choices satisfy the algebraic and metric axioms. With `Plus`,
/// ∇ξ_α = φ_α and the cone over the sphere carries a parallel structure; with
/// `Minus`, ∇ξ_α = −φ_α.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReebSign {
    Plus,
    Minus,
}

impl ReebSign {
    fn sigma(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

/// Graph chart of the pseudosphere: all ambient coordinates but `solved`,
/// which is recovered from ⟨x, x⟩ = 1.
#[derive(Debug, Clone)]
struct GraphChart {
    ambient: usize,
    solved: usize,
    signs: Vec<f64>,
    branch: f64,
}

impl GraphChart {
    fn coordinate(&self, k: usize) -> usize {
        if k < self.solved {
            k
        } else {
            k + 1
        }
    }

    fn embed(&self, y: &[f64]) -> Vector {
        let mut x = Vector::zeros(self.ambient);
        let mut rest = 1.0;
        for (k, v) in y.iter().enumerate() {
            let c = self.coordinate(k);
            x[c] = *v;
            rest -= self.signs[c] * v * v;
        }
        let sq = rest / self.signs[self.solved];
        // NaN outside the graph's domain propagates to every residual
        x[self.solved] = self.branch * if sq > 0.0 { sq.sqrt() } else { f64::NAN };
        x
    }

    /// Columns are the coordinate tangent vectors ∂x/∂y_k.
    fn tangents(&self, x: &Vector) -> SquareMatrix {
        let d = self.ambient - 1;
        let s = self.solved;
        SquareMatrix::from_fn(self.ambient, d, |row, k| {
            let c = self.coordinate(k);
            if row == c {
                1.0
            } else if row == s {
                -self.signs[c] * x[c] / (self.signs[s] * x[s])
            } else {
                0.0
            }
        })
    }

    /// Chart components of an ambient vector tangent to the sphere.
    fn components(&self, v: &Vector) -> Vector {
        Vector::from_fn(self.ambient - 1, |k, _| v[self.coordinate(k)])
    }
}

/// A generic point of the pseudosphere in R^{4k}.
fn centre(k: usize, signs: &[f64]) -> Vector {
    let n = 4 * k;
    let raw = Vector::from_fn(n, |i, _| if i == 0 { 1.2 } else { 0.1 * ((i % 4) as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 } });
    let q: f64 = raw.iter().zip(signs).map(|(x, s)| s * x * x).sum();
    raw / q.sqrt()
}

/// The pseudosphere S^{4n+3}_{2n+1} on a graph chart of half-width `half`
/// around a fixed generic point, with induced metric g and
/// ξ_α = σJ_αN, η_α = g(·, ξ_α), φ_α = tangential part of J_α.
pub fn pseudosphere(n: usize, sign: ReebSign, half: f64) -> Result<MetricMixed> {
    let k = n + 1;
    let ambient = 4 * k;
    let gbar = flat_metric(k)?;
    let signs: Vec<f64> = gbar.diagonal().iter().copied().collect();
    let p0 = centre(k, &signs);
    let solved = p0.iamax();
    let graph = Arc::new(GraphChart {
        ambient,
        solved,
        branch: p0[solved].signum(),
        signs,
    });
    let y0: Vec<f64> = (0..ambient - 1).map(|i| p0[graph.coordinate(i)]).collect();
    let chart = Arc::new(Chart::around(format!("s{}-{}", 4 * n + 3, 2 * n + 1), &y0, half)?);
    for corner in [chart.lo().to_vec(), chart.hi().to_vec()] {
        let x = graph.embed(&corner);
        if !x[solved].is_finite() || x[solved].abs() < 0.1 {
            return Err(Error::InvalidChart(format!("graph chart of half-width {half} leaves the sphere")));
        }
    }

    let gbar = Arc::new(gbar);
    let js = Arc::new(flat_operators(k));
    let sigma = sign.sigma();

    let metric: MetricField = {
        let (graph, gbar) = (Arc::clone(&graph), Arc::clone(&gbar));
        Field::new(Arc::clone(&chart), move |y| {
            let t = graph.tangents(&graph.embed(y));
            t.transpose() * gbar.as_ref() * t
        })
    };

    let mut triples = Vec::with_capacity(3);
    for alpha in 0..3 {
        let xi = {
            let (graph, js) = (Arc::clone(&graph), Arc::clone(&js));
            Field::new(Arc::clone(&chart), move |y| {
                let x = graph.embed(y);
                graph.components(&(&js[alpha] * &x * sigma))
            })
        };
        let eta = {
            let (graph, js, gbar) = (Arc::clone(&graph), Arc::clone(&js), Arc::clone(&gbar));
            Field::new(Arc::clone(&chart), move |y| {
                let x = graph.embed(y);
                let t = graph.tangents(&x);
                t.transpose() * gbar.as_ref() * (&js[alpha] * &x * sigma)
            })
        };
        let phi = {
            let (graph, js, gbar) = (Arc::clone(&graph), Arc::clone(&js), Arc::clone(&gbar));
            Field::new(Arc::clone(&chart), move |y| {
                let x = graph.embed(y);
                let t = graph.tangents(&x);
                let jt = &js[alpha] * &t;
                // remove the normal part ⟨J∂_i, N⟩N, using ⟨N, N⟩ = 1
                let normal = (jt.transpose() * gbar.as_ref() * &x).transpose();
                let tangential = &jt - &x * normal;
                SquareMatrix::from_fn(ambient - 1, ambient - 1, |r, c| tangential[(graph.coordinate(r), c)])
            })
        };
        triples.push(ContactTriple::new(phi, xi, eta, crate::structures::EPSILON[alpha])?);
    }
    let [a, b, c]: [ContactTriple; 3] = triples.try_into().expect("three triples");
    MetricMixed::new(MixedTriple::new([a, b, c])?, metric)
}
