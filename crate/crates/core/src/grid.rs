use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// Geometric grid of regularization parameters: eps_j = eps0 * ratio^j.
/// All points live in (0,1) and decrease strictly; fits downstream need at
/// least 8 points to have a usable tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGrid {
    eps0: f64,
    ratio: f64,
    count: usize,
}

pub const MIN_GRID_COUNT: usize = 8;

impl EpsilonGrid {
    pub fn new(eps0: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 < 1.0) || !eps0.is_finite() {
            return Err(LabError::Parameter(format!(
                "eps0 must lie in (0,1), got {eps0}"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) || !ratio.is_finite() {
            return Err(LabError::Parameter(format!(
                "ratio must lie in (0,1), got {ratio}"
            )));
        }
        if count < MIN_GRID_COUNT {
            return Err(LabError::Parameter(format!(
                "count must be at least {MIN_GRID_COUNT}, got {count}"
            )));
        }
        Ok(Self { eps0, ratio, count })
    }

    /// Laboratory default: 24 points from 0.5 down by factors of 2^(-1/2).
    pub fn default_lab() -> Self {
        Self::new(0.5, std::f64::consts::FRAC_1_SQRT_2, 24).expect("default grid is valid")
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn value(&self, j: usize) -> f64 {
        self.eps0 * self.ratio.powi(j as i32)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.value(j)).collect()
    }
}

/// Free-function form used by the CLI and report layers.
pub fn make_eps_grid(eps0: f64, ratio: f64, count: usize) -> Result<EpsilonGrid> {
    EpsilonGrid::new(eps0, ratio, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_count_below_eight() {
        assert!(matches!(
            make_eps_grid(0.5, 0.5, 4),
            Err(LabError::Parameter(_))
        ));
    }

    #[test]
    fn rejects_eps0_outside_unit_interval() {
        assert!(matches!(
            make_eps_grid(1.5, 0.5, 9),
            Err(LabError::Parameter(_))
        ));
        assert!(make_eps_grid(0.0, 0.5, 9).is_err());
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(make_eps_grid(0.5, 1.0, 9).is_err());
        assert!(make_eps_grid(0.5, -0.25, 9).is_err());
    }

    #[test]
    fn geometric_sequence_values() {
        let g = make_eps_grid(0.5, 0.5, 9).unwrap();
        let vals = g.values();
        assert_eq!(vals.len(), 9);
        assert_eq!(vals[0], 0.5);
        assert_eq!(vals[8], 0.5 * 0.5f64.powi(8));
        for w in vals.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = EpsilonGrid::default_lab();
        assert_eq!(g.count(), 24);
        assert!(g.values().iter().all(|&e| e > 0.0 && e < 1.0));
    }
}
