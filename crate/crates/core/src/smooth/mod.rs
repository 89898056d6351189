//! Coordinate charts, smooth fields and the finite-difference calculus that
//! everything else is built on.

mod chart;
mod connection;
mod fd;
mod field;
mod sample;

pub use chart::Chart;
pub use connection::{
    covariant_derivative, covariant_derivative_operator, curvature, levi_civita, ricci, riemann,
    AffineConnection, Christoffel, Riemann,
};
pub use fd::{directional_derivative, lie_bracket, partial, FdScheme, StencilOrder};
pub use field::{Field, FieldValue, MetricField, OperatorField, ScalarField, VectorField};
pub use sample::SamplePlan;
