use std::sync::Arc;

use crate::algebra::Vector;
use crate::error::{Error, Result};

use super::{Field, FieldValue, VectorField};

/// Central-difference stencil order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            other => Err(Error::InvalidScheme(format!("order {other} not in {{2, 4}}"))),
        }
    }

    pub fn as_u32(self) -> u32 {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }
}

/// Finite-difference configuration.
///
/// `step` is used for derivatives of closed-form data; `nested_step` for
/// derivatives of quantities that are themselves finite-difference results
/// (Christoffel symbols, lifted fields on a tangent bundle, ...).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FdScheme {
    pub step: f64,
    pub nested_step: f64,
    pub order: StencilOrder,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self {
            step: 1e-4,
            nested_step: 1e-3,
            order: StencilOrder::Second,
        }
    }
}

impl FdScheme {
    pub fn new(step: f64, nested_step: f64, order: StencilOrder) -> Result<Self> {
        let s = Self {
            step,
            nested_step,
            order,
        };
        s.validate()?;
        Ok(s)
    }

    /// A scheme whose nested step is ten times the base step.
    pub fn with_step(step: f64, order: StencilOrder) -> Result<Self> {
        Self::new(step, 10.0 * step, order)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidScheme(format!("step {} must be > 0", self.step)));
        }
        if !(self.nested_step > 0.0 && self.nested_step.is_finite()) {
            return Err(Error::InvalidScheme(format!(
                "nested step {} must be > 0",
                self.nested_step
            )));
        }
        Ok(())
    }

    /// The scheme to use one level further out: its base step is our nested step.
    pub fn nested(&self) -> Self {
        Self {
            step: self.nested_step,
            nested_step: self.nested_step,
            order: self.order,
        }
    }

    /// Both steps halved.
    pub fn halved(&self) -> Self {
        Self {
            step: 0.5 * self.step,
            nested_step: 0.5 * self.nested_step,
            order: self.order,
        }
    }

    /// Largest distance a stencil reaches from its centre.
    pub fn collar(&self) -> f64 {
        2.0 * self.step.max(self.nested_step)
    }
}

fn shifted(p: &[f64], axis: usize, by: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[axis] += by;
    q
}

/// ∂f/∂x^axis at `p`, unchecked. Constant fields differentiate to an exact zero.
pub fn partial<T: FieldValue>(f: &Field<T>, p: &[f64], axis: usize, step: f64, order: StencilOrder) -> T {
    if f.is_constant() {
        return f.eval(p).zero_like();
    }
    let h = step;
    match order {
        StencilOrder::Second => {
            let fp = f.eval(&shifted(p, axis, h));
            let fm = f.eval(&shifted(p, axis, -h));
            T::combine(&[(0.5 / h, &fp), (-0.5 / h, &fm)])
        }
        StencilOrder::Fourth => {
            let f2p = f.eval(&shifted(p, axis, 2.0 * h));
            let fp = f.eval(&shifted(p, axis, h));
            let fm = f.eval(&shifted(p, axis, -h));
            let f2m = f.eval(&shifted(p, axis, -2.0 * h));
            let c = 1.0 / (12.0 * h);
            T::combine(&[(-c, &f2p), (8.0 * c, &fp), (-8.0 * c, &fm), (c, &f2m)])
        }
    }
}

/// Central-difference ∂_i f at `point` using the scheme's base step.
pub fn directional_derivative<T: FieldValue>(
    f: &Field<T>,
    point: &[f64],
    index: usize,
    scheme: &FdScheme,
) -> Result<T> {
    f.chart().check(point)?;
    if index >= f.chart().dim() {
        return Err(Error::DimensionMismatch {
            expected: f.chart().dim(),
            found: index,
        });
    }
    Ok(partial(f, point, index, scheme.step, scheme.order))
}

/// X(p)^i ∂_i Y at p.
pub(crate) fn derivative_along(y: &VectorField, p: &[f64], dir: &Vector, scheme: &FdScheme) -> Vector {
    let mut acc = Vector::zeros(y.chart().dim());
    if y.is_constant() {
        return acc;
    }
    for (i, c) in dir.iter().enumerate() {
        if *c != 0.0 {
            acc.axpy(*c, &partial(y, p, i, scheme.step, scheme.order), 1.0);
        }
    }
    acc
}

/// [X,Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k by central differences.
pub fn lie_bracket(x: &VectorField, y: &VectorField, scheme: &FdScheme) -> Result<VectorField> {
    x.chart().ensure_same(y.chart())?;
    let (x, y) = (x.clone(), y.clone());
    let scheme = *scheme;
    let chart = Arc::clone(x.chart());
    if x.is_constant() && y.is_constant() {
        let dim = chart.dim();
        return Ok(Field::constant(chart, Vector::zeros(dim)));
    }
    Ok(Field::new(chart, move |p| {
        let xv = x.eval(p);
        let yv = y.eval(p);
        derivative_along(&y, p, &xv, &scheme) - derivative_along(&x, p, &yv, &scheme)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::Chart;
    use proptest::prelude::*;

    fn line() -> Arc<Chart> {
        Arc::new(Chart::new("line", vec![-2.0], vec![2.0]).unwrap())
    }

    fn plane() -> Arc<Chart> {
        Arc::new(Chart::cube("plane", 2, 3.0).unwrap())
    }

    #[test]
    fn derivative_of_square() {
        let f = Field::new(line(), |p: &[f64]| p[0] * p[0]);
        let d = directional_derivative(&f, &[1.0], 0, &FdScheme::default()).unwrap();
        assert!((d - 2.0).abs() < 1e-8);
        let f4 = FdScheme::new(1e-3, 1e-2, StencilOrder::Fourth).unwrap();
        let cube = Field::new(line(), |p: &[f64]| p[0].powi(3));
        let d4 = directional_derivative(&cube, &[1.0], 0, &f4).unwrap();
        assert!((d4 - 3.0).abs() < 1e-10);
    }

    #[test]
    fn constant_field_differentiates_exactly() {
        let f = Field::constant(plane(), Vector::from_vec(vec![3.0, -1.0]));
        let d = directional_derivative(&f, &[0.3, 0.1], 1, &FdScheme::default()).unwrap();
        assert_eq!(d, Vector::zeros(2));
    }

    #[test]
    fn vector_derivative_example() {
        // f(x, y) = (y, x²); ∂ₓ f at (1, 2) = (0, 2)
        let f = Field::new(plane(), |p: &[f64]| Vector::from_vec(vec![p[1], p[0] * p[0]]));
        let d = directional_derivative(&f, &[1.0, 2.0], 0, &FdScheme::default()).unwrap();
        assert!((d - Vector::from_vec(vec![0.0, 2.0])).amax() < 1e-8);
    }

    #[test]
    fn out_of_domain_is_reported() {
        let f = Field::new(line(), |p: &[f64]| p[0]);
        assert!(matches!(
            directional_derivative(&f, &[5.0], 0, &FdScheme::default()),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn bracket_examples() {
        let s = FdScheme::default();
        let x = Field::new(plane(), |p: &[f64]| Vector::from_vec(vec![1.0 + p[1], p[0]]));
        let xx = lie_bracket(&x, &x, &s).unwrap();
        assert!(xx.eval(&[0.4, -0.2]).amax() < 1e-12);

        let a = Field::constant(plane(), Vector::from_vec(vec![1.0, 2.0]));
        let b = Field::constant(plane(), Vector::from_vec(vec![-1.0, 0.5]));
        assert_eq!(lie_bracket(&a, &b, &s).unwrap().eval(&[0.0, 0.0]), Vector::zeros(2));

        // X = ∂ₓ, Y = x ∂_y: [X, Y] = ∂_y
        let e1 = Field::constant(plane(), Vector::from_vec(vec![1.0, 0.0]));
        let y = Field::new(plane(), |p: &[f64]| Vector::from_vec(vec![0.0, p[0]]));
        let xy = lie_bracket(&e1, &y, &s).unwrap().eval(&[0.7, -1.1]);
        assert!((xy - Vector::from_vec(vec![0.0, 1.0])).amax() < 1e-9);
    }

    #[test]
    fn bracket_rejects_chart_mismatch() {
        let a = Field::constant(plane(), Vector::zeros(2));
        let other = Arc::new(Chart::cube("other", 2, 1.0).unwrap());
        let b = Field::constant(other, Vector::zeros(2));
        assert!(matches!(
            lie_bracket(&a, &b, &FdScheme::default()),
            Err(Error::ChartMismatch { .. })
        ));
    }

    #[test]
    fn halving_the_step_quarters_the_error() {
        let f = Field::new(line(), |p: &[f64]| (1.3 * p[0]).sin());
        let exact = 1.3 * (1.3 * 0.4_f64).cos();
        let err = |h: f64| (partial(&f, &[0.4], 0, h, StencilOrder::Second) - exact).abs();
        let ratio = err(1e-2) / err(5e-3);
        assert!((2.5..6.0).contains(&ratio), "ratio {ratio}");
    }

    fn poly_field(c: Vec<f64>) -> VectorField {
        let chart = Arc::new(Chart::cube("poly", 3, 1.0).unwrap());
        Field::new(chart, move |p: &[f64]| {
            Vector::from_fn(3, |k, _| {
                let o = 4 * k;
                c[o] + c[o + 1] * p[0] * p[1] + c[o + 2] * p[2] * p[2] + c[o + 3] * p[(k + 1) % 3]
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn jacobi_identity(
            a in prop::collection::vec(-1.0..1.0f64, 12),
            b in prop::collection::vec(-1.0..1.0f64, 12),
            c in prop::collection::vec(-1.0..1.0f64, 12),
            p in prop::collection::vec(-0.5..0.5f64, 3),
        ) {
            let s = FdScheme::default();
            let n = s.nested();
            let (x, y, z) = (poly_field(a), poly_field(b), poly_field(c));
            let t1 = lie_bracket(&x, &lie_bracket(&y, &z, &s).unwrap(), &n).unwrap();
            let t2 = lie_bracket(&y, &lie_bracket(&z, &x, &s).unwrap(), &n).unwrap();
            let t3 = lie_bracket(&z, &lie_bracket(&x, &y, &s).unwrap(), &n).unwrap();
            let sum = t1.eval(&p) + t2.eval(&p) + t3.eval(&p);
            prop_assert!(sum.amax() < 1e-5, "jacobi residual {}", sum.amax());
        }

        #[test]
        fn bracket_is_antisymmetric(
            a in prop::collection::vec(-1.0..1.0f64, 12),
            b in prop::collection::vec(-1.0..1.0f64, 12),
            p in prop::collection::vec(-0.5..0.5f64, 3),
        ) {
            let s = FdScheme::default();
            let (x, y) = (poly_field(a), poly_field(b));
            let xy = lie_bracket(&x, &y, &s).unwrap().eval(&p);
            let yx = lie_bracket(&y, &x, &s).unwrap().eval(&p);
            prop_assert!((xy + yx).amax() < 1e-12);
        }
    }
}
