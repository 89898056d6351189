use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::Vector;
use crate::error::{Error, Result};

use super::Chart;

/// Deterministic sampling of points inside a margin-shrunk chart box.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SamplePlan {
    pub count: usize,
    pub seed: u64,
    /// Fraction of each box edge excluded on both sides.
    pub margin: f64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            count: 20,
            seed: 42,
            margin: 0.1,
        }
    }
}

impl SamplePlan {
    pub fn new(count: usize, seed: u64, margin: f64) -> Result<Self> {
        let plan = Self {
            count,
            seed,
            margin,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidPlan("count must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.margin) {
            return Err(Error::InvalidPlan(format!(
                "margin {} outside [0, 0.5)",
                self.margin
            )));
        }
        Ok(())
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// `count` points, identical for identical (plan, chart).
    pub fn points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let mut rng = self.rng();
        (0..self.count).map(|_| self.draw(chart, &mut rng)).collect()
    }

    pub fn draw(&self, chart: &Chart, rng: &mut impl Rng) -> Vec<f64> {
        chart
            .lo()
            .iter()
            .zip(chart.hi())
            .map(|(a, b)| {
                let w = b - a;
                let (lo, hi) = (a + self.margin * w, b - self.margin * w);
                if hi > lo {
                    rng.gen_range(lo..hi)
                } else {
                    0.5 * (a + b)
                }
            })
            .collect()
    }

    /// A vector with entries uniform in [-1, 1].
    pub fn random_vector(rng: &mut impl Rng, dim: usize) -> Vector {
        Vector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_reproducible_and_inside() {
        let chart = Chart::cube("c", 3, 1.0).unwrap();
        let plan = SamplePlan::new(50, 7, 0.1).unwrap();
        let a = plan.points(&chart);
        assert_eq!(a, plan.points(&chart));
        assert!(a.iter().all(|p| p.iter().all(|x| x.abs() <= 0.8)));
        let other = SamplePlan { seed: 8, ..plan };
        assert_ne!(a, other.points(&chart));
    }

    #[test]
    fn invalid_plans() {
        assert!(SamplePlan::new(0, 1, 0.1).is_err());
        assert!(SamplePlan::new(3, 1, 0.5).is_err());
        assert!(SamplePlan::new(3, 1, -0.1).is_err());
    }
}
