use std::fmt;
use std::sync::Arc;

use crate::algebra::{SquareMatrix, Vector};
use crate::error::Result;

use super::Chart;

/// Values a field may take: anything closed under real linear combination.
pub trait FieldValue: Clone + Send + Sync + 'static {
    /// Σ cᵢ·vᵢ over a non-empty list.
    fn combine(terms: &[(f64, &Self)]) -> Self;
    /// The zero of the same shape as `self`.
    fn zero_like(&self) -> Self;
}

impl FieldValue for f64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(c, v)| c * *v).sum()
    }

    fn zero_like(&self) -> Self {
        0.0
    }
}

macro_rules! impl_field_value_for_matrix {
    ($t:ty) => {
        impl FieldValue for $t {
            fn combine(terms: &[(f64, &Self)]) -> Self {
                let (c0, v0) = terms[0];
                let mut acc = v0 * c0;
                for (c, v) in &terms[1..] {
                    let c = *c;
                    acc.zip_apply(*v, |a, b| *a += c * b);
                }
                acc
            }

            fn zero_like(&self) -> Self {
                self.map(|_| 0.0)
            }
        }
    };
}

impl_field_value_for_matrix!(Vector);
impl_field_value_for_matrix!(SquareMatrix);

type EvalFn<T> = dyn Fn(&[f64]) -> T + Send + Sync;

/// A smooth map from chart coordinates to values of type `T`.
///
/// Fields flagged constant take the exact path through the calculus: their
/// derivatives are zero without any differencing.
pub struct Field<T> {
    chart: Arc<Chart>,
    eval: Arc<EvalFn<T>>,
    constant: bool,
}

pub type ScalarField = Field<f64>;
/// Vector fields; also used for covector fields (η) by their components.
pub type VectorField = Field<Vector>;
/// (1,1)-tensor fields as matrices in the coordinate basis.
pub type OperatorField = Field<SquareMatrix>;
/// Symmetric (0,2)-tensor fields as Gram matrices in the coordinate basis.
pub type MetricField = Field<SquareMatrix>;

impl<T> Clone for Field<T> {
    fn clone(&self) -> Self {
        Self {
            chart: Arc::clone(&self.chart),
            eval: Arc::clone(&self.eval),
            constant: self.constant,
        }
    }
}

impl<T> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("chart", &self.chart.name())
            .field("constant", &self.constant)
            .finish()
    }
}

impl<T: FieldValue> Field<T> {
    pub fn new(chart: Arc<Chart>, eval: impl Fn(&[f64]) -> T + Send + Sync + 'static) -> Self {
        Self {
            chart,
            eval: Arc::new(eval),
            constant: false,
        }
    }

    pub fn constant(chart: Arc<Chart>, value: T) -> Self {
        Self {
            chart,
            eval: Arc::new(move |_| value.clone()),
            constant: true,
        }
    }

    /// Evaluates without a domain check (used inside stencils, which reach
    /// into the collar).
    pub fn eval(&self, p: &[f64]) -> T {
        (self.eval)(p)
    }

    /// Evaluates after checking `p` lies in the chart box.
    pub fn at(&self, p: &[f64]) -> Result<T> {
        self.chart.check(p)?;
        Ok(self.eval(p))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// Pointwise transformation; constancy is preserved.
    pub fn map<U: FieldValue>(&self, f: impl Fn(T) -> U + Send + Sync + 'static) -> Field<U> {
        let inner = self.clone();
        Field {
            chart: Arc::clone(&self.chart),
            eval: Arc::new(move |p| f(inner.eval(p))),
            constant: self.constant,
        }
    }

    /// Pointwise combination of two fields on the same chart.
    pub fn zip<U: FieldValue, V: FieldValue>(
        &self,
        other: &Field<U>,
        f: impl Fn(T, U) -> V + Send + Sync + 'static,
    ) -> Result<Field<V>> {
        self.chart.ensure_same(&other.chart)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(Field {
            chart: Arc::clone(&self.chart),
            eval: Arc::new(move |p| f(a.eval(p), b.eval(p))),
            constant: self.constant && other.constant,
        })
    }

    /// Re-homes the field on another chart with identical coordinates.
    pub fn on_chart(&self, chart: Arc<Chart>) -> Self {
        Self {
            chart,
            eval: Arc::clone(&self.eval),
            constant: self.constant,
        }
    }
}

impl Field<SquareMatrix> {
    /// The field x ↦ A(x)·X(x).
    pub fn apply(&self, x: &VectorField) -> Result<VectorField> {
        self.zip(x, |a, v| a * v)
    }
}

impl Field<Vector> {
    /// Scales the field by a scalar function: x ↦ f(x)·X(x).
    pub fn scaled(&self, f: &ScalarField) -> Result<VectorField> {
        self.zip(f, |v, s| v * s)
    }
}
