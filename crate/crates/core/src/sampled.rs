use crate::error::{LabError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Uniform symmetric axis: nodes k*step for k = -half..=half, so the grid
/// always contains 0 and the extent is half*step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    half: usize,
    step: f64,
}

impl AxisGrid {
    pub fn new(half: usize, step: f64) -> Result<Self> {
        if half < 2 {
            return Err(LabError::Parameter(format!(
                "axis needs at least 5 nodes (half >= 2), got half = {half}"
            )));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(LabError::Parameter(format!(
                "axis step must be positive and finite, got {step}"
            )));
        }
        Ok(Self { half, step })
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        2 * self.half + 1
    }

    pub fn extent(&self) -> f64 {
        self.half as f64 * self.step
    }

    pub fn node(&self, index: usize) -> f64 {
        (index as f64 - self.half as f64) * self.step
    }
}

/// Catmull-Rom weights for a fractional offset u in [0,1) between the middle
/// two of four consecutive samples.
pub(crate) fn catmull_rom_weights(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        -0.5 * u3 + u2 - 0.5 * u,
        1.5 * u3 - 2.5 * u2 + 1.0,
        -1.5 * u3 + 2.0 * u2 + 0.5 * u,
        0.5 * u3 - 0.5 * u2,
    ]
}

/// Real samples of a function on a tensor grid, row-major with the last axis
/// contiguous. Off-grid evaluation is separable cubic interpolation; the
/// function is treated as 0 outside the grid, so tables must pad the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    axes: Vec<AxisGrid>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(axes: Vec<AxisGrid>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(LabError::Parameter(format!(
                "sampled functions live in 1 to 3 dimensions, got {}",
                axes.len()
            )));
        }
        let expect: usize = axes.iter().map(AxisGrid::count).product();
        if values.len() != expect {
            return Err(LabError::ShapeMismatch(format!(
                "grid holds {expect} nodes but {} values were supplied",
                values.len()
            )));
        }
        Ok(Self { axes, values })
    }

    pub fn from_fn(axes: &[AxisGrid], f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let counts: Vec<usize> = axes.iter().map(AxisGrid::count).collect();
        let total: usize = counts.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        let mut coord = vec![0.0f64; axes.len()];
        for _ in 0..total {
            for (k, ax) in axes.iter().enumerate() {
                coord[k] = ax.node(idx[k]);
            }
            values.push(f(&coord));
            // odometer increment, last axis fastest
            for k in (0..axes.len()).rev() {
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(axes.to_vec(), values)
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisGrid] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Row-major linear index of a multi-index.
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        let mut lin = 0;
        for (k, ax) in self.axes.iter().enumerate() {
            lin = lin * ax.count() + idx[k];
        }
        lin
    }

    /// Cubic interpolation at an arbitrary point. Any axis whose 4-sample
    /// stencil does not fit inside the grid yields 0; at grid nodes the node
    /// value is reproduced exactly.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.axes.len());
        let mut base = [0usize; 3];
        let mut wts = [[0.0f64; 4]; 3];
        for (k, ax) in self.axes.iter().enumerate() {
            let t = x[k] / ax.step + ax.half as f64;
            if !t.is_finite() {
                return 0.0;
            }
            let i = t.floor();
            let fi = i as isize;
            let n = ax.count() as isize;
            if fi < 1 || fi > n - 3 {
                return 0.0;
            }
            base[k] = fi as usize;
            wts[k] = catmull_rom_weights(t - i);
        }
        match self.axes.len() {
            1 => {
                let i = base[0];
                let w = &wts[0];
                (0..4).map(|a| w[a] * self.values[i - 1 + a]).sum()
            }
            2 => {
                let n1 = self.axes[1].count();
                let mut acc = 0.0;
                for a in 0..4 {
                    let row = (base[0] - 1 + a) * n1 + base[1] - 1;
                    let mut inner = 0.0;
                    for b in 0..4 {
                        inner += wts[1][b] * self.values[row + b];
                    }
                    acc += wts[0][a] * inner;
                }
                acc
            }
            _ => {
                let n1 = self.axes[1].count();
                let n2 = self.axes[2].count();
                let mut acc = 0.0;
                for a in 0..4 {
                    let mut mid = 0.0;
                    for b in 0..4 {
                        let row = ((base[0] - 1 + a) * n1 + base[1] - 1 + b) * n2 + base[2] - 1;
                        let mut inner = 0.0;
                        for c in 0..4 {
                            inner += wts[2][c] * self.values[row + c];
                        }
                        mid += wts[1][b] * inner;
                    }
                    acc += wts[0][a] * mid;
                }
                acc
            }
        }
    }
}

/// Complex samples as a pair of real tables on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSampledFunction {
    re: SampledFunction,
    im: SampledFunction,
}

impl ComplexSampledFunction {
    pub fn new(re: SampledFunction, im: SampledFunction) -> Result<Self> {
        if re.axes() != im.axes() {
            return Err(LabError::GridMismatch(
                "real and imaginary parts must share a grid".into(),
            ));
        }
        Ok(Self { re, im })
    }

    pub fn from_fn(axes: &[AxisGrid], f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let re = SampledFunction::from_fn(axes, |x| f(x).re)?;
        let im = SampledFunction::from_fn(axes, |x| f(x).im)?;
        Ok(Self { re, im })
    }

    pub fn dims(&self) -> usize {
        self.re.dims()
    }

    pub fn axes(&self) -> &[AxisGrid] {
        self.re.axes()
    }

    pub fn real_part(&self) -> &SampledFunction {
        &self.re
    }

    pub fn imag_part(&self) -> &SampledFunction {
        &self.im
    }

    pub fn value_at(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.value_at(x), self.im.value_at(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(half: usize, step: f64) -> AxisGrid {
        AxisGrid::new(half, step).unwrap()
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(matches!(AxisGrid::new(1, 0.5), Err(LabError::Parameter(_))));
        assert!(AxisGrid::new(4, 0.0).is_err());
        assert!(AxisGrid::new(4, f64::NAN).is_err());
    }

    #[test]
    fn node_layout_is_symmetric() {
        let ax = axis(3, 0.25);
        assert_eq!(ax.count(), 7);
        assert_eq!(ax.node(0), -0.75);
        assert_eq!(ax.node(3), 0.0);
        assert_eq!(ax.node(6), 0.75);
        assert_eq!(ax.extent(), 0.75);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let r = SampledFunction::new(vec![axis(2, 1.0)], vec![0.0; 4]);
        assert!(matches!(r, Err(LabError::ShapeMismatch(_))));
    }

    #[test]
    fn from_fn_row_major_order() {
        let f = SampledFunction::from_fn(&[axis(2, 1.0), axis(2, 0.5)], |x| x[0] * 10.0 + x[1])
            .unwrap();
        // first value: (-2, -1); last: (2, 1); stride of axis 0 is 5
        assert_eq!(f.values()[0], -21.0);
        assert_eq!(f.values()[24], 21.0);
        assert_eq!(f.values()[f.linear_index(&[4, 0])], 19.0);
    }

    #[test]
    fn interpolation_exact_at_nodes_and_cubic_between() {
        let ax = axis(8, 0.5);
        let f = SampledFunction::from_fn(&[ax], |x| x[0].powi(2)).unwrap();
        assert_eq!(f.value_at(&[1.5]), 2.25);
        // Catmull-Rom reproduces quadratics exactly in the interior
        assert!((f.value_at(&[1.37]) - 1.37f64.powi(2)).abs() < 1e-12);
        // outside the stencil range the function is 0
        assert_eq!(f.value_at(&[9.0]), 0.0);
        assert_eq!(f.value_at(&[-3.95]), 0.0);
    }

    #[test]
    fn trilinear_stencil_matches_separable_product() {
        let axs = [axis(4, 0.5), axis(4, 0.5), axis(4, 0.5)];
        let f = SampledFunction::from_fn(&axs, |x| {
            (1.0 + x[0]) * (2.0 - x[1]) * (0.5 + 0.25 * x[2])
        })
        .unwrap();
        let p = [0.3, -0.7, 0.9];
        let want = (1.0 + p[0]) * (2.0 - p[1]) * (0.5 + 0.25 * p[2]);
        // product of degree-1 factors is reproduced by cubic interpolation
        assert!((f.value_at(&p) - want).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_scans_all_values() {
        let f = SampledFunction::from_fn(&[axis(4, 1.0)], |x| -x[0]).unwrap();
        assert_eq!(f.sup_norm(), 4.0);
    }

    #[test]
    fn complex_pair_requires_shared_grid() {
        let a = SampledFunction::from_fn(&[axis(4, 1.0)], |x| x[0]).unwrap();
        let b = SampledFunction::from_fn(&[axis(4, 0.5)], |x| x[0]).unwrap();
        assert!(matches!(
            ComplexSampledFunction::new(a.clone(), b),
            Err(LabError::GridMismatch(_))
        ));
        let c = ComplexSampledFunction::new(a.clone(), a).unwrap();
        let v = c.value_at(&[1.3]);
        assert!((v.re - 1.3).abs() < 1e-12 && (v.im - 1.3).abs() < 1e-12);
    }
}
