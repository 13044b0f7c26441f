//! Seminorm nets over epsilon grids: asymptotic-order fits, the
//! moderate/negligible/undetermined classification, generalized-scalar ring
//! arithmetic, and sharp-topology valuations.

use crate::error::{LabError, Result};
use crate::grid::EpsilonGrid;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Substitute for exact zeros inside log-log fits. Chosen at the bottom of
/// the f64 range so a single floored point forces a huge fitted slope.
pub const VALUE_FLOOR: f64 = 1e-300;

/// Fraction of the grid used for tail fits unless a caller overrides it.
pub const DEFAULT_TAIL_FRACTION: f64 = 1.0 / 3.0;

/// A seminorm evaluated along an epsilon grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarNet {
    grid: EpsilonGrid,
    values: Vec<f64>,
}

impl ScalarNet {
    pub fn new(grid: EpsilonGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(LabError::ShapeMismatch(format!(
                "net has {} values for a {}-point grid",
                values.len(),
                grid.count()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(LabError::Parameter(format!(
                "net values must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Evaluate a closure on every grid point.
    pub fn from_fn(grid: EpsilonGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.values().iter().map(|&e| f(e)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &EpsilonGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Result of a log-log least-squares fit: value ~ C * eps^slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Half-open index range of grid points used.
    pub window: (usize, usize),
    /// Number of window points at or below `VALUE_FLOOR` that were floored.
    pub floored: usize,
}

fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
        ss_tot += (y - my) * (y - my);
    }
    // Constant data fits a horizontal line exactly; report full reliability
    // instead of 0/0.
    let r_squared = if ss_tot < 1e-24 {
        if ss_res < 1e-20 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    (slope, intercept, r_squared)
}

/// Fit the asymptotic exponent of a net over the last `tail_fraction` of the
/// grid. Zeros are floored to `VALUE_FLOOR` and counted in `floored`; a net
/// that is zero everywhere is reported as `IdenticallyZero` instead of fit.
pub fn estimate_order(net: &ScalarNet, tail_fraction: f64) -> Result<OrderEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(LabError::Parameter(format!(
            "tail_fraction must lie in (0,1], got {tail_fraction}"
        )));
    }
    if net.values.iter().all(|&v| v <= VALUE_FLOOR) {
        return Err(LabError::IdenticallyZero);
    }
    let count = net.grid.count();
    let window_len = ((tail_fraction * count as f64).ceil() as usize).min(count);
    if window_len < 3 {
        return Err(LabError::TooFewPoints {
            have: window_len,
            need: 3,
        });
    }
    let start = count - window_len;
    let eps = net.grid.values();
    let mut xs = Vec::with_capacity(window_len);
    let mut ys = Vec::with_capacity(window_len);
    let mut floored = 0;
    for j in start..count {
        let v = if net.values[j] <= VALUE_FLOOR {
            floored += 1;
            VALUE_FLOOR
        } else {
            net.values[j]
        };
        xs.push(eps[j].ln());
        ys.push(v.ln());
    }
    let (slope, intercept, r_squared) = fit_line(&xs, &ys);
    Ok(OrderEstimate {
        slope,
        intercept,
        r_squared,
        window: (start, count),
        floored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyThresholds {
    /// A net whose tail slope reaches this value counts as negligible.
    pub negligible_slope: f64,
    /// Fits below this reliability mark the classification Undetermined.
    pub min_r_squared: f64,
    pub tail_fraction: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            negligible_slope: 10.0,
            min_r_squared: 0.9,
            tail_fraction: DEFAULT_TAIL_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Classification {
    /// Every seminorm grows at most like eps^(-worst_order).
    Moderate { worst_order: f64 },
    Negligible,
    Undetermined,
}

/// Per-net findings backing a classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetAssessment {
    pub estimate: Option<OrderEstimate>,
    pub negligible: bool,
    /// The net reached exact zero at the small end of the grid (e.g. a unit
    /// reproducing a band-limited function exactly).
    pub exact_zero_tail: bool,
    pub unstable: bool,
}

/// Assess a single net against the thresholds. Exact-zero tails and flat
/// tails are detected here so callers never misread roundoff dust or a
/// convergent net as an unreliable power law.
pub fn assess_net(net: &ScalarNet, thresholds: &ClassifyThresholds) -> Result<NetAssessment> {
    match estimate_order(net, thresholds.tail_fraction) {
        Err(LabError::IdenticallyZero) => Ok(NetAssessment {
            estimate: None,
            negligible: true,
            exact_zero_tail: true,
            unstable: false,
        }),
        Err(e) => Err(e),
        Ok(est) => {
            let (start, end) = est.window;
            let window = &net.values[start..end];
            let all_floor = window.iter().all(|&v| v <= VALUE_FLOOR);
            let zero_tail = *window.last().expect("window nonempty") <= VALUE_FLOOR;
            if all_floor || zero_tail {
                // Collapse to exact zero beats any power law.
                return Ok(NetAssessment {
                    estimate: Some(est),
                    negligible: true,
                    exact_zero_tail: true,
                    unstable: false,
                });
            }
            let negligible = est.slope >= thresholds.negligible_slope;
            // A net whose tail varies by less than a factor e is flat: the
            // near-zero slope is a trustworthy bound even when r_squared is
            // meaningless (subdominant terms dominate the variation).
            let logs: Vec<f64> = window
                .iter()
                .map(|&v| v.max(VALUE_FLOOR).ln())
                .collect();
            let log_range = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - logs.iter().cloned().fold(f64::INFINITY, f64::min);
            let flat = log_range <= 1.0;
            let unstable = !negligible && !flat && est.r_squared < thresholds.min_r_squared;
            Ok(NetAssessment {
                estimate: Some(est),
                negligible,
                exact_zero_tail: false,
                unstable,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    pub per_net: BTreeMap<String, NetAssessment>,
    pub classification: Classification,
}

/// Classify a family of seminorm nets. Negligible wins only if every net is
/// negligible; any unreliable fit among the remaining nets makes the family
/// Undetermined; otherwise the family is Moderate with the worst exponent.
pub fn classify_net_report(
    nets: &BTreeMap<String, ScalarNet>,
    thresholds: &ClassifyThresholds,
) -> Result<NetReport> {
    if nets.is_empty() {
        return Err(LabError::Parameter("no nets to classify".into()));
    }
    let mut per_net = BTreeMap::new();
    for (id, net) in nets {
        per_net.insert(id.clone(), assess_net(net, thresholds)?);
    }
    let classification = if per_net.values().all(|a| a.negligible) {
        Classification::Negligible
    } else if per_net.values().any(|a| a.unstable) {
        Classification::Undetermined
    } else {
        let worst_order = per_net
            .values()
            .filter_map(|a| a.estimate.as_ref())
            .map(|e| -e.slope)
            .fold(f64::NEG_INFINITY, f64::max);
        Classification::Moderate { worst_order }
    };
    Ok(NetReport {
        per_net,
        classification,
    })
}

pub fn classify_net(
    nets: &BTreeMap<String, ScalarNet>,
    thresholds: &ClassifyThresholds,
) -> Result<Classification> {
    Ok(classify_net_report(nets, thresholds)?.classification)
}

/// Convenience for the common one-net case.
pub fn classify_single(net: &ScalarNet, thresholds: &ClassifyThresholds) -> Result<Classification> {
    let mut m = BTreeMap::new();
    m.insert("value".to_string(), net.clone());
    classify_net(&m, thresholds)
}

/// Representative of a generalized number: a complex net whose magnitude is
/// pinned Moderate (or Negligible) at construction. Ring operations stay
/// inside this class; closure is re-checked on every result rather than
/// assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedScalar {
    grid: EpsilonGrid,
    values: Vec<Complex64>,
    class: Classification,
}

impl GeneralizedScalar {
    pub fn new(grid: EpsilonGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(LabError::ShapeMismatch(format!(
                "scalar has {} values for a {}-point grid",
                values.len(),
                grid.count()
            )));
        }
        let mag = ScalarNet::new(grid.clone(), values.iter().map(|c| c.norm()).collect())?;
        let class = classify_single(&mag, &ClassifyThresholds::default())?;
        if matches!(class, Classification::Undetermined) {
            return Err(LabError::Parameter(
                "representative magnitude net is not classifiable as moderate".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            class,
        })
    }

    pub fn from_fn(grid: EpsilonGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.values().iter().map(|&e| f(e)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &EpsilonGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn classification(&self) -> Classification {
        self.class
    }

    pub fn magnitude_net(&self) -> ScalarNet {
        ScalarNet::new(
            self.grid.clone(),
            self.values.iter().map(|c| c.norm()).collect(),
        )
        .expect("magnitudes of a valid scalar form a valid net")
    }
}

fn require_same_grid(a: &GeneralizedScalar, b: &GeneralizedScalar) -> Result<()> {
    if a.grid != b.grid {
        return Err(LabError::GridMismatch(
            "generalized scalars live on different grids".into(),
        ));
    }
    Ok(())
}

pub fn gen_scalar_add(a: &GeneralizedScalar, b: &GeneralizedScalar) -> Result<GeneralizedScalar> {
    require_same_grid(a, b)?;
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x + y)
        .collect();
    GeneralizedScalar::new(a.grid.clone(), values)
}

pub fn gen_scalar_mul(a: &GeneralizedScalar, b: &GeneralizedScalar) -> Result<GeneralizedScalar> {
    require_same_grid(a, b)?;
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x * y)
        .collect();
    GeneralizedScalar::new(a.grid.clone(), values)
}

/// Fitted decay exponent of |a - b|: the larger the value, the closer the
/// representatives in the sharp topology. Identical representatives (or a
/// difference that collapses to zero on the fitted tail) give +inf.
pub fn sharp_valuation(a: &GeneralizedScalar, b: &GeneralizedScalar) -> Result<f64> {
    require_same_grid(a, b)?;
    let diff: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm())
        .collect();
    let net = ScalarNet::new(a.grid.clone(), diff)?;
    match estimate_order(&net, DEFAULT_TAIL_FRACTION) {
        Err(LabError::IdenticallyZero) => Ok(f64::INFINITY),
        Err(e) => Err(e),
        Ok(est) => {
            let (start, end) = est.window;
            if net.values[start..end].iter().all(|&v| v <= VALUE_FLOOR) {
                Ok(f64::INFINITY)
            } else {
                Ok(est.slope)
            }
        }
    }
}

/// A net of coefficient vectors (one spectral function per grid point).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionNet {
    grid: EpsilonGrid,
    slots: Vec<Array1<Complex64>>,
}

impl FunctionNet {
    pub fn new(grid: EpsilonGrid, slots: Vec<Array1<Complex64>>) -> Result<Self> {
        if slots.len() != grid.count() {
            return Err(LabError::ShapeMismatch(format!(
                "net has {} slots for a {}-point grid",
                slots.len(),
                grid.count()
            )));
        }
        if let Some(first) = slots.first() {
            let dim = first.len();
            if slots.iter().any(|s| s.len() != dim) {
                return Err(LabError::ShapeMismatch(
                    "slots have inconsistent dimensions".into(),
                ));
            }
        }
        Ok(Self { grid, slots })
    }

    pub fn grid(&self) -> &EpsilonGrid {
        &self.grid
    }

    pub fn slots(&self) -> &[Array1<Complex64>] {
        &self.slots
    }

    pub fn dim(&self) -> usize {
        self.slots.first().map_or(0, |s| s.len())
    }

    /// Reduce every slot with a seminorm.
    pub fn seminorm_net(&self, rho: impl Fn(&Array1<Complex64>) -> f64) -> Result<ScalarNet> {
        ScalarNet::new(self.grid.clone(), self.slots.iter().map(rho).collect())
    }

    pub fn l2_net(&self) -> ScalarNet {
        self.seminorm_net(|s| s.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .expect("l2 values are finite and nonnegative")
    }

    pub fn map_slots(&self, f: impl Fn(&Array1<Complex64>) -> Array1<Complex64>) -> Result<Self> {
        Self::new(self.grid.clone(), self.slots.iter().map(f).collect())
    }
}

/// Apply one linear map at every grid point. Bounded maps send moderate nets
/// to moderate nets and negligible ones to negligible ones; that functorial
/// property is exercised by the property tests, not assumed here.
pub fn pushforward_net(map: &Array2<Complex64>, net: &FunctionNet) -> Result<FunctionNet> {
    if map.ncols() != net.dim() {
        return Err(LabError::ShapeMismatch(format!(
            "map takes dimension {}, net has {}",
            map.ncols(),
            net.dim()
        )));
    }
    let slots = net.slots.iter().map(|s| map.dot(s)).collect();
    FunctionNet::new(net.grid.clone(), slots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn default_grid() -> EpsilonGrid {
        EpsilonGrid::default_lab()
    }

    #[test]
    fn exact_power_law_recovered() {
        let net = ScalarNet::from_fn(default_grid(), |e| e.powi(-2)).unwrap();
        let est = estimate_order(&net, DEFAULT_TAIL_FRACTION).unwrap();
        assert_abs_diff_eq!(est.slope, -2.0, epsilon = 1e-9);
        assert!(est.r_squared > 1.0 - 1e-12);
        assert_eq!(est.floored, 0);
    }

    #[test]
    fn super_polynomial_decay_classifies_negligible() {
        let net = ScalarNet::from_fn(default_grid(), |e| (-1.0 / e).exp()).unwrap();
        let class = classify_single(&net, &ClassifyThresholds::default()).unwrap();
        assert_eq!(class, Classification::Negligible);
    }

    #[test]
    fn all_zero_net_is_negligible() {
        let net = ScalarNet::from_fn(default_grid(), |_| 0.0).unwrap();
        let class = classify_single(&net, &ClassifyThresholds::default()).unwrap();
        assert_eq!(class, Classification::Negligible);
        assert!(matches!(
            estimate_order(&net, DEFAULT_TAIL_FRACTION),
            Err(LabError::IdenticallyZero)
        ));
    }

    #[test]
    fn worst_exponent_wins() {
        let mut nets = BTreeMap::new();
        nets.insert(
            "a".to_string(),
            ScalarNet::from_fn(default_grid(), |e| e.powi(-3)).unwrap(),
        );
        nets.insert(
            "b".to_string(),
            ScalarNet::from_fn(default_grid(), |e| e.powi(-1)).unwrap(),
        );
        let class = classify_net(&nets, &ClassifyThresholds::default()).unwrap();
        match class {
            Classification::Moderate { worst_order } => {
                assert_abs_diff_eq!(worst_order, 3.0, epsilon = 1e-9)
            }
            other => panic!("expected Moderate, got {other:?}"),
        }
    }

    #[test]
    fn zero_tail_beats_poor_fit() {
        // Nonzero head, exact zero once eps is small: the signature of a
        // unit reproducing a band-limited function.
        let grid = default_grid();
        let values: Vec<f64> = grid
            .values()
            .iter()
            .map(|&e| if e > 0.01 { e * e } else { 0.0 })
            .collect();
        let net = ScalarNet::new(grid, values).unwrap();
        let class = classify_single(&net, &ClassifyThresholds::default()).unwrap();
        assert_eq!(class, Classification::Negligible);
    }

    #[test]
    fn oscillatory_net_is_undetermined() {
        let grid = default_grid();
        let values: Vec<f64> = grid
            .values()
            .iter()
            .enumerate()
            .map(|(k, &e)| if k % 2 == 0 { e.powi(-3) } else { e.powi(2) })
            .collect();
        let net = ScalarNet::new(grid, values).unwrap();
        let class = classify_single(&net, &ClassifyThresholds::default()).unwrap();
        assert_eq!(class, Classification::Undetermined);
    }

    #[test]
    fn gen_scalar_product_adds_exponents() {
        let g = default_grid();
        let a = GeneralizedScalar::from_fn(g.clone(), |e| Complex64::new(1.0 / e, 0.0)).unwrap();
        let b = GeneralizedScalar::from_fn(g.clone(), |e| Complex64::new(e, 0.0)).unwrap();
        let p = gen_scalar_mul(&a, &b).unwrap();
        let est = estimate_order(&p.magnitude_net(), DEFAULT_TAIL_FRACTION).unwrap();
        assert_abs_diff_eq!(est.slope, 0.0, epsilon = 1e-9);

        let c = GeneralizedScalar::from_fn(g, |e| Complex64::new(e.powf(-0.5), 0.0)).unwrap();
        let q = gen_scalar_mul(&c, &c).unwrap();
        let est = estimate_order(&q.magnitude_net(), DEFAULT_TAIL_FRACTION).unwrap();
        assert_abs_diff_eq!(est.slope, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn moderate_times_negligible_is_negligible() {
        let g = default_grid();
        let a = GeneralizedScalar::from_fn(g.clone(), |e| Complex64::new(1.0 / e, 0.0)).unwrap();
        let b =
            GeneralizedScalar::from_fn(g, |e| Complex64::new((-2.0 / e).exp(), 0.0)).unwrap();
        assert_eq!(b.classification(), Classification::Negligible);
        let p = gen_scalar_mul(&a, &b).unwrap();
        assert_eq!(p.classification(), Classification::Negligible);
    }

    #[test]
    fn sharp_valuation_matches_examples() {
        let g = default_grid();
        let a = GeneralizedScalar::from_fn(g.clone(), |e| Complex64::new(2.0 + e, 0.0)).unwrap();
        assert_eq!(sharp_valuation(&a, &a).unwrap(), f64::INFINITY);

        // exact cubic difference
        let zero = GeneralizedScalar::from_fn(g.clone(), |_| Complex64::new(0.0, 0.0)).unwrap();
        let cubic =
            GeneralizedScalar::from_fn(g.clone(), |e| Complex64::new(e.powi(3), 0.0)).unwrap();
        let v = sharp_valuation(&cubic, &zero).unwrap();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-9);

        // same exponent through a cancellation (rounding limits the fit)
        let b = GeneralizedScalar::from_fn(g.clone(), |e| {
            Complex64::new(2.0 + e + e.powi(3), 0.0)
        })
        .unwrap();
        let v = sharp_valuation(&a, &b).unwrap();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-3);

        let c = GeneralizedScalar::from_fn(g, |e| {
            Complex64::new(2.0 + e + e.powi(3) + (-1.0 / e).exp(), 0.0)
        })
        .unwrap();
        let v = sharp_valuation(&a, &c).unwrap();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-4);
    }

    #[test]
    fn pushforward_checks_dimensions() {
        let g = default_grid();
        let slots = vec![Array1::from_elem(4, Complex64::new(1.0, 0.0)); g.count()];
        let net = FunctionNet::new(g, slots).unwrap();
        let map = Array2::<Complex64>::zeros((3, 5));
        assert!(pushforward_net(&map, &net).is_err());

        let zero = Array2::<Complex64>::zeros((4, 4));
        let out = pushforward_net(&zero, &net).unwrap();
        assert!(out.l2_net().values().iter().all(|&v| v == 0.0));
    }
}
