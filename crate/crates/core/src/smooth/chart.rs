use crate::error::{Error, Result};

/// An axis-aligned coordinate box. Fields registered on a chart must be
/// evaluable slightly outside the box (by the finite-difference collar).
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    name: String,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Chart {
    pub fn new(name: impl Into<String>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidChart(format!(
                "`{name}`: bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidChart(format!("`{name}`: need lo < hi on every axis")));
        }
        Ok(Self { name, lo, hi })
    }

    /// The cube [-half, half]^dim.
    pub fn cube(name: impl Into<String>, dim: usize, half: f64) -> Result<Self> {
        Self::new(name, vec![-half; dim], vec![half; dim])
    }

    /// Box centred at `center` with the given half-width on each axis.
    pub fn around(name: impl Into<String>, center: &[f64], half: f64) -> Result<Self> {
        Self::new(
            name,
            center.iter().map(|c| c - half).collect(),
            center.iter().map(|c| c + half).collect(),
        )
    }

    /// Cartesian product chart, coordinates of `self` first.
    pub fn product(&self, other: &Chart, name: impl Into<String>) -> Result<Self> {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        Self::new(name, lo, hi)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                chart: self.name.clone(),
                point: p.to_vec(),
            })
        }
    }

    pub fn ensure_same(&self, other: &Chart) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ChartMismatch {
                left: self.name.clone(),
                right: other.name.clone(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_box() {
        assert!(Chart::new("bad", vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Chart::new("bad", vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(Chart::new("bad", vec![], vec![]).is_err());
    }

    #[test]
    fn containment_and_product() {
        let a = Chart::cube("a", 2, 1.0).unwrap();
        let b = Chart::new("b", vec![0.5], vec![2.0]).unwrap();
        let ab = a.product(&b, "ab").unwrap();
        assert_eq!(ab.dim(), 3);
        assert!(ab.contains(&[0.0, -1.0, 1.0]));
        assert!(!ab.contains(&[0.0, -1.0, 0.1]));
        assert!(matches!(ab.check(&[0.0, 0.0]), Err(Error::OutOfDomain { .. })));
    }
}
