use std::sync::Arc;

use crate::algebra::{BilinearForm, SquareMatrix, Vector};
use crate::error::{Error, Result};

use super::fd::{derivative_along, partial};
use super::{Chart, FdScheme, Field, FieldValue, MetricField, OperatorField, VectorField};

/// Christoffel symbols Γ^k_{ij} at a point, stored as `data[k][i][j]`.
/// The first lower index is the differentiation direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(dim);
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    out.data[(k * dim + i) * dim + j] = f(k, i, j);
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Γ^k_{ij}
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    /// Γ(a, b)^k = Γ^k_{ij} a^i b^j.
    pub fn apply(&self, a: &Vector, b: &Vector) -> Vector {
        let n = self.dim;
        Vector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if a[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += self.get(k, i, j) * a[i] * b[j];
                }
            }
            s
        })
    }

    /// The matrix (Γ_a)^k_j = Γ^k_{ij} a^i, i.e. the connection one-form applied to `a`.
    pub fn along(&self, a: &Vector) -> SquareMatrix {
        let n = self.dim;
        SquareMatrix::from_fn(n, n, |k, j| (0..n).map(|i| self.get(k, i, j) * a[i]).sum())
    }

    /// The matrix (Γ(·, u))^k_i = Γ^k_{ij} u^j.
    pub fn against(&self, u: &Vector) -> SquareMatrix {
        let n = self.dim;
        SquareMatrix::from_fn(n, n, |k, i| (0..n).map(|j| self.get(k, i, j) * u[j]).sum())
    }

    /// max |Γ^k_{ij} − Γ^k_{ji}|
    pub fn torsion(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

impl FieldValue for Christoffel {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let mut out = Self::zeros(terms[0].1.dim);
        for (c, v) in terms {
            for (o, x) in out.data.iter_mut().zip(&v.data) {
                *o += c * x;
            }
        }
        out
    }

    fn zero_like(&self) -> Self {
        Self::zeros(self.dim)
    }
}

/// An affine connection on a chart, given by its Christoffel symbols.
#[derive(Debug, Clone)]
pub struct AffineConnection {
    symbols: Field<Christoffel>,
}

impl AffineConnection {
    pub fn flat(chart: Arc<Chart>) -> Self {
        let dim = chart.dim();
        Self {
            symbols: Field::constant(chart, Christoffel::zeros(dim)),
        }
    }

    pub fn from_fn(chart: Arc<Chart>, f: impl Fn(&[f64]) -> Christoffel + Send + Sync + 'static) -> Self {
        Self {
            symbols: Field::new(chart, f),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.symbols.chart()
    }

    pub fn is_flat(&self) -> bool {
        self.symbols.is_constant()
    }

    pub fn christoffel(&self, p: &[f64]) -> Christoffel {
        self.symbols.eval(p)
    }

    pub fn symbols(&self) -> &Field<Christoffel> {
        &self.symbols
    }
}

/// Levi-Civita connection of `g` with Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij}).
///
/// Metric derivatives use the scheme's base step. Where `g` is singular the
/// symbols are NaN, which fails every downstream residual check.
pub fn levi_civita(g: &MetricField, scheme: &FdScheme) -> Result<AffineConnection> {
    scheme.validate()?;
    let chart = Arc::clone(g.chart());
    if g.is_constant() {
        let center = chart.center();
        BilinearForm::new(g.eval(&center))
            .and_then(|b| b.signature())
            .map_err(|_| Error::DegenerateMetric { point: center })?;
        return Ok(AffineConnection::flat(chart));
    }
    let g = g.clone();
    let scheme = *scheme;
    let n = chart.dim();
    Ok(AffineConnection::from_fn(chart, move |p| {
        let gp = g.eval(p);
        let Some(inv) = gp.try_inverse() else {
            return Christoffel::from_fn(n, |_, _, _| f64::NAN);
        };
        let dg: Vec<SquareMatrix> = (0..n).map(|i| partial(&g, p, i, scheme.step, scheme.order)).collect();
        // lowered symbols Γ_{lij} = ½(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})
        let mut lowered = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    lowered[(l * n + i) * n + j] =
                        0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
            }
        }
        Christoffel::from_fn(n, |k, i, j| {
            (0..n).map(|l| inv[(k, l)] * lowered[(l * n + i) * n + j]).sum()
        })
    }))
}

/// ∇_X Y = X^i ∂_i Y + Γ(X, Y).
pub fn covariant_derivative(
    conn: &AffineConnection,
    x: &VectorField,
    y: &VectorField,
    scheme: &FdScheme,
) -> Result<VectorField> {
    conn.chart().ensure_same(x.chart())?;
    conn.chart().ensure_same(y.chart())?;
    let (conn, x, y) = (conn.clone(), x.clone(), y.clone());
    let scheme = *scheme;
    Ok(Field::new(Arc::clone(x.chart()), move |p| {
        let xv = x.eval(p);
        let yv = y.eval(p);
        derivative_along(&y, p, &xv, &scheme) + conn.christoffel(p).apply(&xv, &yv)
    }))
}

/// (∇_X A) at `p` for a (1,1)-tensor field A and a vector X:
/// X^k(∂_k A + Γ_k A − A Γ_k) with (Γ_k)^a_c = Γ^a_{kc}.
pub fn covariant_derivative_operator(
    conn: &AffineConnection,
    a: &OperatorField,
    p: &[f64],
    x: &Vector,
    scheme: &FdScheme,
) -> Result<SquareMatrix> {
    conn.chart().ensure_same(a.chart())?;
    a.chart().check(p)?;
    let n = a.chart().dim();
    let mut da = SquareMatrix::zeros(n, n);
    if !a.is_constant() {
        for (k, c) in x.iter().enumerate() {
            if *c != 0.0 {
                da += partial(a, p, k, scheme.step, scheme.order) * *c;
            }
        }
    }
    if conn.is_flat() {
        return Ok(da);
    }
    let gx = conn.christoffel(p).along(x);
    let ap = a.eval(p);
    Ok(da + &gx * &ap - &ap * &gx)
}

/// Riemann tensor R^l_{ijk} at a point, stored as `data[l][i][j][k]`, with
/// R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l and
/// R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.data[((l * n + i) * n + j) * n + k]
    }

    /// R(X, Y)Z
    pub fn apply(&self, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let n = self.dim;
        Vector::from_fn(n, |l, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let xy = x[i] * y[j];
                    if xy == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        s += self.get(l, i, j, k) * xy * z[k];
                    }
                }
            }
            s
        })
    }

    /// The endomorphism Z ↦ R(X, Y)Z.
    pub fn operator(&self, x: &Vector, y: &Vector) -> SquareMatrix {
        let n = self.dim;
        SquareMatrix::from_fn(n, n, |l, k| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.get(l, i, j, k) * x[i] * y[j];
                }
            }
            s
        })
    }

    /// Ric_{jk} = R^i_{ijk}; not symmetrized.
    pub fn ricci_matrix(&self) -> SquareMatrix {
        let n = self.dim;
        SquareMatrix::from_fn(n, n, |j, k| (0..n).map(|i| self.get(i, i, j, k)).sum())
    }
}

/// Coordinate Riemann tensor at `p`:
/// R^l_{ijk} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}.
/// Derivatives of Γ use the scheme's nested step.
pub fn riemann(conn: &AffineConnection, p: &[f64], scheme: &FdScheme) -> Result<Riemann> {
    conn.chart().check(p)?;
    let n = conn.chart().dim();
    if conn.is_flat() {
        return Ok(Riemann {
            dim: n,
            data: vec![0.0; n * n * n * n],
        });
    }
    let gamma = conn.christoffel(p);
    let dgamma: Vec<Christoffel> = (0..n)
        .map(|i| partial(conn.symbols(), p, i, scheme.nested_step, scheme.order))
        .collect();
    let mut data = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
                    for m in 0..n {
                        v += gamma.get(l, i, m) * gamma.get(m, j, k)
                            - gamma.get(l, j, m) * gamma.get(m, i, k);
                    }
                    data[((l * n + i) * n + j) * n + k] = v;
                }
            }
        }
    }
    Ok(Riemann { dim: n, data })
}

/// The field R(X, Y)Z.
pub fn curvature(
    conn: &AffineConnection,
    x: &VectorField,
    y: &VectorField,
    z: &VectorField,
    scheme: &FdScheme,
) -> Result<VectorField> {
    for f in [x, y, z] {
        conn.chart().ensure_same(f.chart())?;
    }
    let (conn, x, y, z) = (conn.clone(), x.clone(), y.clone(), z.clone());
    let scheme = *scheme;
    let chart = Arc::clone(conn.chart());
    let n = chart.dim();
    Ok(Field::new(chart, move |p| match riemann(&conn, p, &scheme) {
        Ok(r) => r.apply(&x.eval(p), &y.eval(p), &z.eval(p)),
        Err(_) => Vector::from_element(n, f64::NAN),
    }))
}

/// Ricci tensor of the Levi-Civita connection of `g` at `point`, symmetrized.
pub fn ricci(g: &MetricField, point: &[f64], scheme: &FdScheme) -> Result<BilinearForm> {
    g.chart().check(point)?;
    BilinearForm::new(g.eval(point))
        .and_then(|b| b.signature())
        .map_err(|_| Error::DegenerateMetric {
            point: point.to_vec(),
        })?;
    let conn = levi_civita(g, scheme)?;
    let ric = riemann(&conn, point, scheme)?.ricci_matrix();
    BilinearForm::new((&ric + ric.transpose()) * 0.5)
}
