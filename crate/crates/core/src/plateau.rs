//! Smooth plateau profiles: identically 1 near the origin, decaying to zero
//! either with compact support or with a strictly decreasing Schwartz tail.
//! These are the germs F of the spectral multipliers F(eps * Laplacian) and
//! the frequency-side profiles of the mollifiers.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C-infinity bridge: 0 for t <= 0, 1 for t >= 1, strictly increasing between.
pub fn smoothstep(t: f64) -> f64 {
    let rise = bump(t);
    if rise == 0.0 {
        return 0.0;
    }
    let fall = bump(1.0 - t);
    if fall == 0.0 {
        return 1.0;
    }
    rise / (rise + fall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PlateauProfile {
    /// 1 on [0,a], 0 beyond b.
    Compact { a: f64, b: f64 },
    /// 1 on [0,a], then exp(-rate * g(x-a)) with g(t) = t * exp(-1/t):
    /// strictly decreasing, asymptotically a plain exponential, still flat
    /// to infinite order at the plateau edge.
    StrictTail { a: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauFunction {
    profile: PlateauProfile,
}

impl PlateauFunction {
    pub fn compact(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a) || !a.is_finite() || !b.is_finite() {
            return Err(LabError::Parameter(format!(
                "plateau needs 0 < a < b, got a={a}, b={b}"
            )));
        }
        Ok(Self {
            profile: PlateauProfile::Compact { a, b },
        })
    }

    pub fn strict_tail(a: f64, rate: f64) -> Result<Self> {
        if !(a > 0.0 && rate > 0.0) || !a.is_finite() || !rate.is_finite() {
            return Err(LabError::Parameter(format!(
                "strict-tail plateau needs a > 0 and rate > 0, got a={a}, rate={rate}"
            )));
        }
        Ok(Self {
            profile: PlateauProfile::StrictTail { a, rate },
        })
    }

    /// Spectral-multiplier default: plateau to 1, support ends at 2.
    pub fn default_multiplier() -> Self {
        Self::compact(1.0, 2.0).expect("valid profile")
    }

    /// Mollifier-profile default. The wider transition band keeps the
    /// inverse transform concentrated, which is what makes the moment
    /// quadratures hit their tolerances on a [-100,100] grid.
    pub fn default_mollifier_profile() -> Self {
        Self::compact(1.0, 4.0).expect("valid profile")
    }

    pub fn profile(&self) -> PlateauProfile {
        self.profile
    }

    /// Edge of the region where the profile is identically 1.
    pub fn plateau_edge(&self) -> f64 {
        match self.profile {
            PlateauProfile::Compact { a, .. } => a,
            PlateauProfile::StrictTail { a, .. } => a,
        }
    }

    /// Edge of the support for compact profiles.
    pub fn support_edge(&self) -> Option<f64> {
        match self.profile {
            PlateauProfile::Compact { b, .. } => Some(b),
            PlateauProfile::StrictTail { .. } => None,
        }
    }

    /// Even in x; values in [0,1]; nonincreasing in |x|.
    pub fn eval(&self, x: f64) -> f64 {
        let t = x.abs();
        match self.profile {
            PlateauProfile::Compact { a, b } => {
                if t <= a {
                    1.0
                } else if t >= b {
                    0.0
                } else {
                    smoothstep((b - t) / (b - a))
                }
            }
            PlateauProfile::StrictTail { a, rate } => {
                if t <= a {
                    1.0
                } else {
                    let s = t - a;
                    (-rate * s * (-1.0 / s).exp()).exp()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
    }

    #[test]
    fn compact_profile_shape() {
        let f = PlateauFunction::compact(1.0, 2.0).unwrap();
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(-0.7), 1.0);
        assert_eq!(f.eval(2.0), 0.0);
        assert_eq!(f.eval(3.0), 0.0);
        let mid = f.eval(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        // nonincreasing on a sample ladder
        let mut prev = f.eval(0.0);
        for i in 1..300 {
            let cur = f.eval(i as f64 * 0.01);
            assert!(cur <= prev + 1e-15);
            prev = cur;
        }
    }

    #[test]
    fn strict_tail_is_strictly_decreasing_past_edge() {
        let f = PlateauFunction::strict_tail(1.0, 2.0).unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        let mut prev = f.eval(1.5);
        assert!(prev < 1.0);
        for i in 1..200 {
            let cur = f.eval(1.5 + i as f64 * 0.05);
            assert!(cur < prev);
            prev = cur;
        }
        assert!(f.eval(30.0) < 1e-20);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PlateauFunction::compact(0.0, 1.0).is_err());
        assert!(PlateauFunction::compact(2.0, 1.0).is_err());
        assert!(PlateauFunction::strict_tail(1.0, 0.0).is_err());
    }
}
