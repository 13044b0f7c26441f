use crate::error::{LabError, Result};
use crate::plateau::{PlateauFunction, PlateauProfile};
use crate::sampled::{catmull_rom_weights, SampledFunction};
use rayon::prelude::*;
use serde::Serialize;

/// Quadrature mass of a mollifier must reproduce 1 within this tolerance.
pub const MOLLIFIER_MASS_TOL: f64 = 1e-8;
/// Axis moments 1..=declared order must vanish within this tolerance.
pub const MOLLIFIER_MOMENT_TOL: f64 = 1e-6;
/// Declared moment order is auto-detected up to this cap.
pub const MAX_MOMENT_ORDER: usize = 12;

/// Default axis grid for plateau-transform builds: extent 250.125, step 3/16.
/// The transform tail oscillates at scale exp(-c sqrt|x|), and the order-4
/// moment only drops under MOLLIFIER_MOMENT_TOL once the truncation radius
/// clears ~250 (narrower grids detect order 3 or less).
pub const DEFAULT_MOLLIFIER_HALF: usize = 1334;
pub const DEFAULT_MOLLIFIER_STEP: f64 = 0.1875;

const TABLE_STEP: f64 = 0.002;
const GL_PANELS: usize = 512;

// 8-point Gauss-Legendre nodes/weights on [-1,1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Inverse cosine transform of a compact plateau profile, evaluated by
/// composite Gauss-Legendre quadrature: rho(x) = (1/pi) int_0^b F(t)cos(xt)dt.
struct PlateauTransform {
    nodes: Vec<f64>,
    weighted: Vec<f64>, // w_i * F(t_i)
}

impl PlateauTransform {
    fn new(plateau: &PlateauFunction, b: f64) -> Self {
        let panel = b / GL_PANELS as f64;
        let mut nodes = Vec::with_capacity(8 * GL_PANELS);
        let mut weighted = Vec::with_capacity(8 * GL_PANELS);
        for p in 0..GL_PANELS {
            let mid = (p as f64 + 0.5) * panel;
            for k in 0..8 {
                let t = mid + 0.5 * panel * GL_NODES[k];
                nodes.push(t);
                weighted.push(0.5 * panel * GL_WEIGHTS[k] * plateau.eval(t));
            }
        }
        Self { nodes, weighted }
    }

    fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weighted) {
            acc += w * (x * t).cos();
        }
        acc / std::f64::consts::PI
    }
}

// Gaussian moment family: rho_c = (a0 + a2 x^2 + a4 x^4) exp(-x^2/2)/sqrt(2pi).
// Corrections c = 0,1,2 kill moments through order 1, 3, 5 in closed form.
const GAUSS_POLY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [1.5, -0.5, 0.0], [1.875, -1.25, 0.125]];

fn gauss_moment_value(corrections: u8, x: f64) -> f64 {
    let p = GAUSS_POLY[corrections as usize];
    let x2 = x * x;
    (p[0] + p[1] * x2 + p[2] * x2 * x2) * (-0.5 * x2).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Fourier transform (e^{-2 pi i s x} convention) of the gaussian moment
/// family: the degree-2c Taylor truncation of e^{u^2/2} times e^{-u^2/2},
/// u = 2 pi s. Lies in (0, 1] for all real s.
pub fn gauss_moment_transform(corrections: u8, s: f64) -> f64 {
    let u2 = (2.0 * std::f64::consts::PI * s).powi(2);
    let taylor = match corrections {
        0 => 1.0,
        1 => 1.0 + 0.5 * u2,
        _ => 1.0 + 0.5 * u2 + 0.125 * u2 * u2,
    };
    taylor * (-0.5 * u2).exp()
}

#[derive(Debug, Clone)]
enum AxisProfile {
    /// One-sided fine table of the transform at step TABLE_STEP, plus the
    /// plateau itself (its profile IS the mollifier's Fourier transform).
    PlateauTable { plateau: PlateauFunction, table: Vec<f64> },
    GaussMoment { corrections: u8 },
    DiscreteDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MollifierConstruction {
    PlateauTransform,
    UserSupplied,
}

#[derive(Debug, Clone, Serialize)]
pub struct MollifierDiagnostics {
    /// |quadrature mass - 1| on the base grid.
    pub mass_defect: f64,
    /// |axis moment k| for k = 1..=MAX_MOMENT_ORDER (tensor moments are
    /// products of axis moments, so the worst axis moment bounds them all).
    pub moment_defects: Vec<f64>,
    /// sup |rho| beyond half the grid extent.
    pub tail_sup: f64,
}

/// Tensor-product mollifier: identical axis samples on a uniform symmetric
/// grid, a per-axis scale s_i (eps^{k_i} after scale_mollifier), and the mass
/// prefactor 1/prod(s_i) kept in factored form. Quadratures over the scaled
/// grid relabel nodes as x*s_i with weights h*s_i, so the prefactor cancels
/// and mass is preserved exactly under scaling.
#[derive(Debug, Clone)]
pub struct Mollifier {
    dims: usize,
    axis_half: usize,
    axis_step: f64,
    axis_scale: Vec<f64>,
    base_axis_values: Vec<f64>,
    profile: AxisProfile,
    moment_order: usize,
    construction: MollifierConstruction,
    diagnostics: MollifierDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleReport {
    /// True when a scale factor exceeds 1 so the support grew past the base
    /// grid (cannot happen under eps <= 1; recorded for honesty).
    pub extended: bool,
    pub axis_extent: Vec<f64>,
    pub mass_defect: f64,
}

fn detect_moment_order(moment_defects: &[f64]) -> usize {
    let mut m = 0;
    for d in moment_defects {
        if *d <= MOLLIFIER_MOMENT_TOL {
            m += 1;
        } else {
            break;
        }
    }
    m.min(MAX_MOMENT_ORDER)
}

fn axis_diagnostics(values: &[f64], half: usize, step: f64) -> MollifierDiagnostics {
    let mut mass = 0.0;
    let mut moments = vec![0.0f64; MAX_MOMENT_ORDER];
    let mut tail_sup = 0.0f64;
    let cut = (half as f64) * step / 2.0;
    for (i, v) in values.iter().enumerate() {
        let x = (i as f64 - half as f64) * step;
        mass += v * step;
        let mut p = x;
        for m in moments.iter_mut() {
            *m += p * v * step;
            p *= x;
        }
        if x.abs() >= cut {
            tail_sup = tail_sup.max(v.abs());
        }
    }
    MollifierDiagnostics {
        mass_defect: (mass - 1.0).abs(),
        moment_defects: moments.iter().map(|m| m.abs()).collect(),
        tail_sup,
    }
}

fn validate_grid(dims: usize, axis_half: usize, axis_step: f64) -> Result<()> {
    if dims == 0 || dims > 3 {
        return Err(LabError::Parameter(format!(
            "mollifier dimension must be 1..=3, got {dims}"
        )));
    }
    if axis_half < 8 {
        return Err(LabError::Parameter(format!(
            "mollifier grid needs at least 17 nodes per axis, got half = {axis_half}"
        )));
    }
    if !(axis_step > 0.0) || !axis_step.is_finite() {
        return Err(LabError::Parameter(format!(
            "mollifier step must be positive, got {axis_step}"
        )));
    }
    Ok(())
}

fn finish_build(
    dims: usize,
    axis_half: usize,
    axis_step: f64,
    values: Vec<f64>,
    profile: AxisProfile,
    construction: MollifierConstruction,
) -> Result<Mollifier> {
    let diagnostics = axis_diagnostics(&values, axis_half, axis_step);
    if diagnostics.mass_defect > MOLLIFIER_MASS_TOL {
        return Err(LabError::Parameter(format!(
            "mollifier mass defect {:.3e} exceeds {MOLLIFIER_MASS_TOL:.0e}; widen the grid",
            diagnostics.mass_defect
        )));
    }
    let moment_order = detect_moment_order(&diagnostics.moment_defects);
    if moment_order == 0 {
        return Err(LabError::Parameter(format!(
            "first moment defect {:.3e} exceeds {MOLLIFIER_MOMENT_TOL:.0e}",
            diagnostics.moment_defects[0]
        )));
    }
    Ok(Mollifier {
        dims,
        axis_half,
        axis_step,
        axis_scale: vec![1.0; dims],
        base_axis_values: values,
        profile,
        moment_order,
        construction,
        diagnostics,
    })
}

/// Inverse-transform a compact plateau profile into a mollifier. The
/// transform is flat at frequency 0, so every moment vanishes analytically;
/// the declared order is what the truncated grid actually certifies.
pub fn build_mollifier(
    plateau: &PlateauFunction,
    dims: usize,
    axis_half: usize,
    axis_step: f64,
) -> Result<Mollifier> {
    validate_grid(dims, axis_half, axis_step)?;
    let b = match plateau.profile() {
        PlateauProfile::Compact { b, .. } => b,
        PlateauProfile::StrictTail { .. } => {
            return Err(LabError::Parameter(
                "mollifier construction needs a compactly supported plateau profile".into(),
            ))
        }
    };
    // step <= pi/(4b) keeps the sample lattice alias-free: the transform of
    // rho is supported in [-b,b] while trapezoid aliasing sits at 2 pi / step.
    let step_cap = std::f64::consts::PI / (4.0 * b);
    if axis_step > step_cap * (1.0 + 1e-12) {
        return Err(LabError::Parameter(format!(
            "step {axis_step} under-resolves the transform of a profile with support {b}; \
             need step <= {step_cap:.6}"
        )));
    }
    let transform = PlateauTransform::new(plateau, b);
    let values: Vec<f64> = (0..=2 * axis_half)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 - axis_half as f64) * axis_step;
            transform.eval(x)
        })
        .collect();
    let table_len = (axis_half as f64 * axis_step / TABLE_STEP).ceil() as usize + 8;
    let table: Vec<f64> = (0..table_len)
        .into_par_iter()
        .map(|i| transform.eval(i as f64 * TABLE_STEP))
        .collect();
    finish_build(
        dims,
        axis_half,
        axis_step,
        values,
        AxisProfile::PlateauTable {
            plateau: plateau.clone(),
            table,
        },
        MollifierConstruction::PlateauTransform,
    )
}

/// Closed-form gaussian moment mollifier with 0, 1, or 2 polynomial
/// corrections (vanishing moments through order 1, 3, 5).
pub fn gaussian_moment_mollifier(
    corrections: u8,
    dims: usize,
    axis_half: usize,
    axis_step: f64,
) -> Result<Mollifier> {
    validate_grid(dims, axis_half, axis_step)?;
    if corrections > 2 {
        return Err(LabError::Parameter(format!(
            "gaussian moment family has corrections 0..=2, got {corrections}"
        )));
    }
    let values: Vec<f64> = (0..=2 * axis_half)
        .map(|i| gauss_moment_value(corrections, (i as f64 - axis_half as f64) * axis_step))
        .collect();
    finish_build(
        dims,
        axis_half,
        axis_step,
        values,
        AxisProfile::GaussMoment { corrections },
        MollifierConstruction::UserSupplied,
    )
}

/// Degenerate single-node mollifier: exact discrete delta on grids of the
/// given step. Convolution with it is the identity.
pub fn discrete_delta_mollifier(dims: usize, step: f64) -> Result<Mollifier> {
    if dims == 0 || dims > 3 {
        return Err(LabError::Parameter(format!(
            "mollifier dimension must be 1..=3, got {dims}"
        )));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(LabError::Parameter(format!(
            "delta step must be positive, got {step}"
        )));
    }
    Ok(Mollifier {
        dims,
        axis_half: 0,
        axis_step: step,
        axis_scale: vec![1.0; dims],
        base_axis_values: vec![1.0 / step],
        profile: AxisProfile::DiscreteDelta,
        moment_order: MAX_MOMENT_ORDER,
        construction: MollifierConstruction::UserSupplied,
        diagnostics: MollifierDiagnostics {
            mass_defect: 0.0,
            moment_defects: vec![0.0; MAX_MOMENT_ORDER],
            tail_sup: 0.0,
        },
    })
}

impl Mollifier {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn axis_half(&self) -> usize {
        self.axis_half
    }

    pub fn axis_step(&self) -> f64 {
        self.axis_step
    }

    pub fn axis_scale(&self) -> &[f64] {
        &self.axis_scale
    }

    /// Unscaled axis samples at nodes k*axis_step, k = -half..=half.
    pub fn base_axis_values(&self) -> &[f64] {
        &self.base_axis_values
    }

    pub fn moment_order(&self) -> usize {
        self.moment_order
    }

    pub fn construction(&self) -> MollifierConstruction {
        self.construction
    }

    pub fn diagnostics(&self) -> &MollifierDiagnostics {
        &self.diagnostics
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.profile, AxisProfile::DiscreteDelta)
    }

    /// Support radius of axis i after scaling.
    pub fn scaled_extent(&self, axis: usize) -> f64 {
        self.axis_half as f64 * self.axis_step * self.axis_scale[axis]
    }

    /// Unscaled axis profile off the sample grid (0 beyond the grid extent).
    pub fn eval_axis_base(&self, x: f64) -> f64 {
        if x.abs() > self.axis_half as f64 * self.axis_step {
            return 0.0;
        }
        match &self.profile {
            AxisProfile::PlateauTable { table, .. } => {
                let t = x.abs() / TABLE_STEP;
                let i = t.floor() as usize;
                if i + 2 >= table.len() {
                    return 0.0;
                }
                let w = catmull_rom_weights(t - i as f64);
                // even reflection at 0: index -1 reads table[1]
                let left = if i == 0 { table[1] } else { table[i - 1] };
                w[0] * left + w[1] * table[i] + w[2] * table[i + 1] + w[3] * table[i + 2]
            }
            AxisProfile::GaussMoment { corrections } => gauss_moment_value(*corrections, x),
            AxisProfile::DiscreteDelta => 0.0,
        }
    }

    /// Scaled axis profile: rho(x/s_i)/s_i.
    pub fn eval_axis_scaled(&self, axis: usize, x: f64) -> f64 {
        let s = self.axis_scale[axis];
        self.eval_axis_base(x / s) / s
    }

    /// Same profile re-sampled at half the step with doubled node count, for
    /// quadrature-refinement error estimates. Scales carry over.
    pub fn refined(&self) -> Mollifier {
        if self.is_delta() {
            return self.clone();
        }
        let half = 2 * self.axis_half;
        let step = 0.5 * self.axis_step;
        let values: Vec<f64> = (0..=2 * half)
            .map(|i| self.eval_axis_base((i as f64 - half as f64) * step))
            .collect();
        let diagnostics = axis_diagnostics(&values, half, step);
        let moment_order = detect_moment_order(&diagnostics.moment_defects).max(1);
        Mollifier {
            dims: self.dims,
            axis_half: half,
            axis_step: step,
            axis_scale: self.axis_scale.clone(),
            base_axis_values: values,
            profile: self.profile.clone(),
            moment_order,
            construction: self.construction,
            diagnostics,
        }
    }

    /// Fourier transform (e^{-2 pi i s x} convention) of the scaled axis
    /// profile. For plateau builds this is the plateau itself evaluated at
    /// 2 pi s, exact by construction.
    pub fn transform_axis_scaled(&self, axis: usize, s: f64) -> f64 {
        let arg = s * self.axis_scale[axis];
        match &self.profile {
            AxisProfile::PlateauTable { plateau, .. } => {
                plateau.eval(2.0 * std::f64::consts::PI * arg)
            }
            AxisProfile::GaussMoment { corrections } => gauss_moment_transform(*corrections, arg),
            AxisProfile::DiscreteDelta => 1.0,
        }
    }
}

/// Rescale: samples become eps^{k_i}-narrower per axis with mass preserved
/// exactly (grid relabeling; no resampling).
pub fn scale_mollifier(m: &Mollifier, eps: f64, exponents: &[u32]) -> Result<(Mollifier, ScaleReport)> {
    if !(eps > 0.0 && eps <= 1.0) || !eps.is_finite() {
        return Err(LabError::Parameter(format!(
            "eps must lie in (0,1], got {eps}"
        )));
    }
    if exponents.len() != m.dims {
        return Err(LabError::ShapeMismatch(format!(
            "{} exponents for a {}-dimensional mollifier",
            exponents.len(),
            m.dims
        )));
    }
    if exponents.iter().any(|k| *k < 1) {
        return Err(LabError::Parameter(
            "scaling exponents must be >= 1 componentwise".into(),
        ));
    }
    let mut scaled = m.clone();
    let mut extended = false;
    for (i, k) in exponents.iter().enumerate() {
        scaled.axis_scale[i] *= eps.powi(*k as i32);
        if scaled.axis_scale[i] > 1.0 {
            extended = true;
        }
    }
    let report = ScaleReport {
        extended,
        axis_extent: (0..m.dims).map(|i| scaled.scaled_extent(i)).collect(),
        mass_defect: m.diagnostics.mass_defect,
    };
    Ok((scaled, report))
}

/// Discrete Euclidean convolution of a scaled mollifier against samples on
/// the samples' own grid: out(x) = sum_t rho_eps(x - t) f(t) h^d, with f
/// treated as 0 outside its grid. d = 3 goes through the group convolution
/// instead.
pub fn euclid_convolve(m: &Mollifier, f: &SampledFunction) -> Result<SampledFunction> {
    if m.dims != f.dims() {
        return Err(LabError::ShapeMismatch(format!(
            "{}-dimensional mollifier against {}-dimensional samples",
            m.dims,
            f.dims()
        )));
    }
    if m.dims > 2 {
        return Err(LabError::Parameter(
            "euclidean convolution handles d <= 2; d = 3 is the group convolution's domain".into(),
        ));
    }
    if m.is_delta() {
        return Ok(f.clone());
    }
    // per-axis kernels on the difference lattice of f's grid
    let mut kernels = Vec::with_capacity(m.dims);
    for (i, ax) in f.axes().iter().enumerate() {
        let support = 2.0 * m.scaled_extent(i);
        if support < 4.0 * ax.step() {
            return Err(LabError::ResolutionFloor(format!(
                "axis {i}: scaled mollifier support {support:.3e} spans under 4 grid cells of \
                 step {:.3e}; smallest usable axis scale is {:.3e}",
                ax.step(),
                2.0 * ax.step() / (m.axis_half as f64 * m.axis_step)
            )));
        }
        let j_max = (m.scaled_extent(i) / ax.step()).floor() as usize;
        let w: Vec<f64> = (0..=2 * j_max)
            .map(|j| m.eval_axis_scaled(i, (j as f64 - j_max as f64) * ax.step()) * ax.step())
            .collect();
        kernels.push(w);
    }
    let mut out = f.values().to_vec();
    match m.dims {
        1 => {
            out = convolve_axis_1d(&out, &kernels[0]);
        }
        _ => {
            let n0 = f.axes()[0].count();
            let n1 = f.axes()[1].count();
            // rows (last axis contiguous), then columns
            let mut tmp = vec![0.0f64; out.len()];
            for r in 0..n0 {
                let row = convolve_axis_1d(&out[r * n1..(r + 1) * n1], &kernels[1]);
                tmp[r * n1..(r + 1) * n1].copy_from_slice(&row);
            }
            let k0 = &kernels[0];
            let j0 = k0.len() / 2;
            for r in 0..n0 {
                for c in 0..n1 {
                    let mut acc = 0.0;
                    for (j, w) in k0.iter().enumerate() {
                        let src = r as isize - (j as isize - j0 as isize);
                        if src >= 0 && (src as usize) < n0 {
                            acc += w * tmp[src as usize * n1 + c];
                        }
                    }
                    out[r * n1 + c] = acc;
                }
            }
        }
    }
    SampledFunction::new(f.axes().to_vec(), out)
}

fn convolve_axis_1d(f: &[f64], kernel: &[f64]) -> Vec<f64> {
    let j0 = (kernel.len() / 2) as isize;
    let n = f.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                let src = i - (j as isize - j0);
                if src >= 0 && src < n {
                    acc += w * f[src as usize];
                }
            }
            acc
        })
        .collect()
}

/// Least-squares log-log decay rate restricted to points at least a decade
/// above the reported floor. Positive slope means decay as eps^slope.
pub fn fit_decay_above_floor(eps: &[f64], errs: &[f64], floor: f64) -> Result<(f64, usize)> {
    if eps.len() != errs.len() {
        return Err(LabError::ShapeMismatch(format!(
            "{} eps values against {} errors",
            eps.len(),
            errs.len()
        )));
    }
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(errs)
        .filter(|(_, e)| **e >= 10.0 * floor && **e > 0.0)
        .map(|(x, e)| (x.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(LabError::TooFewPoints {
            have: pts.len(),
            need: 3,
        });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(LabError::Parameter("degenerate eps grid for a fit".into()));
    }
    Ok(((n * sxy - sx * sy) / denom, pts.len()))
}
