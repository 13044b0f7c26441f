//! Windowed transform on the line and the Schwartz kernels of the integrated
//! representation built from it: the analysis/synthesis quadrature pair, the
//! three-slot symbol whose integrated action reproduces a target from the
//! window, kernels of sampled three-slot symbols, and the mollifier unit net.
//!
//! Phase conventions are a package. Analysis pairs the target against the
//! window translated by +x under the phase e^{+2 pi i xi t}; the symbol
//! carries e^{2 pi i tau} phi(tau) e^{pi i x xi} on top of the transform
//! values; kernels contract slot 2 with e^{-2 pi i b (y+v)/2} and slot 3 at
//! frequency 1 with e^{-2 pi i c}. Flipping any single convention in
//! isolation reconstructs a reflection of the target instead of the target;
//! the roundtrip tests pin the package as a whole.

use crate::error::{LabError, Result};
use crate::grid::EpsilonGrid;
use crate::mollifier::{fit_decay_above_floor, scale_mollifier, Mollifier, MollifierConstruction};
use crate::sampled::{catmull_rom_weights, AxisGrid, ComplexSampledFunction};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

pub const WINDOW_NORM_TOL: f64 = 1e-8;
pub const TAU_MASS_TOL: f64 = 1e-8;

/// Parabolic dilation exponents: translation slots scale as eps, the central
/// slot as eps^2.
const UNIT_SCALING: [u32; 3] = [1, 1, 2];

fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// Integer quotient of two grid steps, if the coarse step is an exact
/// multiple of the fine one.
fn exact_step_ratio(coarse: f64, fine: f64) -> Option<isize> {
    let r = coarse / fine;
    let k = r.round();
    if k >= 1.0 && (r - k).abs() <= 1e-9 * r {
        Some(k as isize)
    } else {
        None
    }
}

/// Window, tau-profile, and the (x, xi, tau) grids shared by the transform
/// ops. The translation step must be a multiple of the signal step so that
/// every translated window sample lands on a signal node and the analysis
/// sums need no interpolation.
#[derive(Debug, Clone)]
pub struct WindowedTransformConfig {
    t_axis: AxisGrid,
    x_axis: AxisGrid,
    xi_axis: AxisGrid,
    tau_axis: AxisGrid,
    window: Vec<f64>,
    tau_profile: Vec<f64>,
    window_norm_sq: f64,
    tau_mass: f64,
    steps_per_shift: isize,
}

impl WindowedTransformConfig {
    pub fn new(
        t_axis: AxisGrid,
        x_axis: AxisGrid,
        xi_axis: AxisGrid,
        tau_axis: AxisGrid,
        window: Vec<f64>,
        tau_profile: Vec<f64>,
    ) -> Result<Self> {
        if window.len() != t_axis.count() {
            return Err(LabError::ShapeMismatch(format!(
                "window has {} samples but the signal grid holds {} nodes",
                window.len(),
                t_axis.count()
            )));
        }
        if tau_profile.len() != tau_axis.count() {
            return Err(LabError::ShapeMismatch(format!(
                "tau profile has {} samples but its grid holds {} nodes",
                tau_profile.len(),
                tau_axis.count()
            )));
        }
        if window.iter().chain(&tau_profile).any(|v| !v.is_finite()) {
            return Err(LabError::Parameter(
                "window and tau profile samples must be finite".into(),
            ));
        }
        let steps_per_shift = exact_step_ratio(x_axis.step(), t_axis.step()).ok_or_else(|| {
            LabError::Parameter(format!(
                "translation step {} must be an integer multiple of the signal step {}",
                x_axis.step(),
                t_axis.step()
            ))
        })?;
        let ht = t_axis.step();
        let window_norm_sq: f64 = window.iter().map(|g| g * g * ht).sum();
        if (window_norm_sq.sqrt() - 1.0).abs() > WINDOW_NORM_TOL {
            return Err(LabError::Parameter(format!(
                "window must have unit quadrature norm, got {}",
                window_norm_sq.sqrt()
            )));
        }
        let tau_mass: f64 = tau_profile.iter().map(|p| p * tau_axis.step()).sum();
        if (tau_mass - 1.0).abs() > TAU_MASS_TOL {
            return Err(LabError::Parameter(format!(
                "tau profile must have unit quadrature mass, got {tau_mass}"
            )));
        }
        Ok(Self {
            t_axis,
            x_axis,
            xi_axis,
            tau_axis,
            window,
            tau_profile,
            window_norm_sq,
            tau_mass,
            steps_per_shift,
        })
    }

    /// Standard reference configuration: unit-norm gaussian window
    /// 2^{1/4} e^{-pi t^2} and a discretely normalized gaussian tau profile.
    pub fn gaussian(
        t_axis: AxisGrid,
        x_axis: AxisGrid,
        xi_axis: AxisGrid,
        tau_axis: AxisGrid,
    ) -> Result<Self> {
        let window: Vec<f64> = (0..t_axis.count())
            .map(|i| {
                let t = t_axis.node(i);
                2f64.powf(0.25) * (-PI * t * t).exp()
            })
            .collect();
        let raw: Vec<f64> = (0..tau_axis.count())
            .map(|i| {
                let tau = tau_axis.node(i);
                (-PI * tau * tau).exp()
            })
            .collect();
        let mass: f64 = raw.iter().map(|p| p * tau_axis.step()).sum();
        let tau_profile = raw.iter().map(|p| p / mass).collect();
        Self::new(t_axis, x_axis, xi_axis, tau_axis, window, tau_profile)
    }

    pub fn t_axis(&self) -> &AxisGrid {
        &self.t_axis
    }

    pub fn x_axis(&self) -> &AxisGrid {
        &self.x_axis
    }

    pub fn xi_axis(&self) -> &AxisGrid {
        &self.xi_axis
    }

    pub fn tau_axis(&self) -> &AxisGrid {
        &self.tau_axis
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn tau_profile(&self) -> &[f64] {
        &self.tau_profile
    }

    pub fn window_norm_sq(&self) -> f64 {
        self.window_norm_sq
    }

    /// Window array index holding g(t + x) for signal index it and
    /// translation index ix, or None when the shift leaves the table.
    fn shifted_window_index(&self, it: usize, ix: usize) -> Option<usize> {
        let shift = (ix as isize - self.x_axis.half() as isize) * self.steps_per_shift;
        let idx = it as isize + shift;
        if idx >= 0 && (idx as usize) < self.window.len() {
            Some(idx as usize)
        } else {
            None
        }
    }

    /// e^{2 pi i xi t} for every (xi, t) pair, xi-major.
    fn analysis_phases(&self) -> Vec<Complex64> {
        let nt = self.t_axis.count();
        let nxi = self.xi_axis.count();
        let mut table = Vec::with_capacity(nxi * nt);
        for ixi in 0..nxi {
            let xi = self.xi_axis.node(ixi);
            for it in 0..nt {
                table.push(cis(2.0 * PI * xi * self.t_axis.node(it)));
            }
        }
        table
    }
}

/// Analysis quadrature: V(x, xi) = sum_t f(t) g(t+x) e^{2 pi i xi t} h_t on
/// the configured (x, xi) grid. Rows are translations, columns modulations.
pub fn stft(cfg: &WindowedTransformConfig, f: &[f64]) -> Result<Array2<Complex64>> {
    let nt = cfg.t_axis.count();
    if f.len() != nt {
        return Err(LabError::ShapeMismatch(format!(
            "target has {} samples but the signal grid holds {nt} nodes",
            f.len()
        )));
    }
    let nx = cfg.x_axis.count();
    let nxi = cfg.xi_axis.count();
    let ht = cfg.t_axis.step();
    let phases = cfg.analysis_phases();
    let mut data = vec![Complex64::new(0.0, 0.0); nx * nxi];
    data.par_chunks_mut(nxi).enumerate().for_each(|(ix, row)| {
        let shift = (ix as isize - cfg.x_axis.half() as isize) * cfg.steps_per_shift;
        let lo = (-shift).max(0) as usize;
        let hi = (nt as isize - shift).clamp(0, nt as isize) as usize;
        if lo >= hi {
            return;
        }
        let prod: Vec<f64> = (lo..hi)
            .map(|it| f[it] * cfg.window[(it as isize + shift) as usize] * ht)
            .collect();
        for (ixi, out) in row.iter_mut().enumerate() {
            let ph = &phases[ixi * nt..(ixi + 1) * nt];
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, phase) in prod.iter().zip(&ph[lo..hi]) {
                acc += phase * *p;
            }
            *out = acc;
        }
    });
    Ok(Array2::from_shape_vec((nx, nxi), data).expect("row-major fill matches shape"))
}

/// Synthesis quadrature inverting `stft`:
/// f(t) = (1/<g,g>) sum_{x,xi} V(x,xi) g(t+x) e^{-2 pi i xi t} h_x h_xi.
pub fn stft_invert(cfg: &WindowedTransformConfig, v: &Array2<Complex64>) -> Result<Vec<Complex64>> {
    let nx = cfg.x_axis.count();
    let nxi = cfg.xi_axis.count();
    if v.dim() != (nx, nxi) {
        return Err(LabError::ShapeMismatch(format!(
            "transform shape {:?} does not match the ({nx}, {nxi}) grid",
            v.dim()
        )));
    }
    let nt = cfg.t_axis.count();
    // e^{-2 pi i xi t}, t-major so the inner xi sweep is contiguous
    let mut conj_phases = Vec::with_capacity(nt * nxi);
    for it in 0..nt {
        let t = cfg.t_axis.node(it);
        for ixi in 0..nxi {
            conj_phases.push(cis(-2.0 * PI * cfg.xi_axis.node(ixi) * t));
        }
    }
    let scale = cfg.x_axis.step() * cfg.xi_axis.step() / cfg.window_norm_sq;
    let out: Vec<Complex64> = (0..nt)
        .into_par_iter()
        .map(|it| {
            let ph = &conj_phases[it * nxi..(it + 1) * nxi];
            let mut acc = Complex64::new(0.0, 0.0);
            for ix in 0..nx {
                let Some(widx) = cfg.shifted_window_index(it, ix) else {
                    continue;
                };
                let w = cfg.window[widx];
                if w == 0.0 {
                    continue;
                }
                let row = v.row(ix);
                let mut inner = Complex64::new(0.0, 0.0);
                for (val, phase) in row.iter().zip(ph) {
                    inner += val * phase;
                }
                acc += inner * w;
            }
            acc * scale
        })
        .collect();
    Ok(out)
}

/// Three-slot symbol F(x, xi, tau) = e^{2 pi i tau} phi(tau) e^{pi i x xi}
/// V(x, xi), stored in factored form: the transform values plus the exactly
/// known tau and phase factors.
#[derive(Debug, Clone)]
pub struct SchrodingerSymbol {
    x_axis: AxisGrid,
    xi_axis: AxisGrid,
    tau_axis: AxisGrid,
    v: Array2<Complex64>,
    tau_profile: Vec<f64>,
    tau_mass: f64,
}

/// Builds the symbol whose integrated action maps the window to the target.
pub fn cheap_factorize(f: &[f64], cfg: &WindowedTransformConfig) -> Result<SchrodingerSymbol> {
    let v = stft(cfg, f)?;
    Ok(SchrodingerSymbol {
        x_axis: cfg.x_axis,
        xi_axis: cfg.xi_axis,
        tau_axis: cfg.tau_axis,
        v,
        tau_profile: cfg.tau_profile.clone(),
        tau_mass: cfg.tau_mass,
    })
}

impl SchrodingerSymbol {
    pub fn axes(&self) -> (&AxisGrid, &AxisGrid, &AxisGrid) {
        (&self.x_axis, &self.xi_axis, &self.tau_axis)
    }

    /// The transform values the symbol was factored through.
    pub fn transform_values(&self) -> &Array2<Complex64> {
        &self.v
    }

    /// Symbol value at a grid node.
    pub fn value(&self, ix: usize, ixi: usize, itau: usize) -> Complex64 {
        let x = self.x_axis.node(ix);
        let xi = self.xi_axis.node(ixi);
        let tau = self.tau_axis.node(itau);
        cis(2.0 * PI * tau) * self.tau_profile[itau] * cis(PI * x * xi) * self.v[[ix, ixi]]
    }

    /// Kernel of the integrated action on the (v, y) grid:
    /// ker(v, y) = int int F(y-v, b, c) e^{-2 pi i b (y+v)/2} e^{-2 pi i c} db dc.
    /// The tau factor integrates to the profile mass and the two x-phases
    /// merge, leaving ker(v,y) = mass * sum_xi V(y-v, xi) e^{-2 pi i xi v} h_xi.
    /// Requires both step sizes to be multiples of the translation step so
    /// y - v lands exactly on the translation lattice.
    pub fn kernel(&self, v_axis: &AxisGrid, y_axis: &AxisGrid) -> Result<Array2<Complex64>> {
        let hx = self.x_axis.step();
        let rv = exact_step_ratio(v_axis.step(), hx).ok_or_else(|| {
            LabError::Parameter(format!(
                "output step {} must be an integer multiple of the translation step {hx}",
                v_axis.step()
            ))
        })?;
        let ry = exact_step_ratio(y_axis.step(), hx).ok_or_else(|| {
            LabError::Parameter(format!(
                "input step {} must be an integer multiple of the translation step {hx}",
                y_axis.step()
            ))
        })?;
        if v_axis.extent() + y_axis.extent() > self.x_axis.extent() * (1.0 + 1e-12) {
            return Err(LabError::Parameter(format!(
                "kernel needs differences up to {} but the translation grid reaches {}",
                v_axis.extent() + y_axis.extent(),
                self.x_axis.extent()
            )));
        }
        let nv = v_axis.count();
        let ny = y_axis.count();
        let nxi = self.xi_axis.count();
        let scale = self.tau_mass * self.xi_axis.step();
        let xh = self.x_axis.half() as isize;
        let vh = v_axis.half() as isize;
        let yh = y_axis.half() as isize;
        let mut data = vec![Complex64::new(0.0, 0.0); nv * ny];
        data.par_chunks_mut(ny).enumerate().for_each(|(iv, row)| {
            let vpt = v_axis.node(iv);
            let mods: Vec<Complex64> = (0..nxi)
                .map(|ixi| cis(-2.0 * PI * self.xi_axis.node(ixi) * vpt) * scale)
                .collect();
            for (iy, out) in row.iter_mut().enumerate() {
                let ix = xh + (iy as isize - yh) * ry - (iv as isize - vh) * rv;
                let vrow = self.v.row(ix as usize);
                let mut acc = Complex64::new(0.0, 0.0);
                for (val, m) in vrow.iter().zip(&mods) {
                    acc += val * m;
                }
                *out = acc;
            }
        });
        Ok(Array2::from_shape_vec((nv, ny), data).expect("row-major fill matches shape"))
    }
}

/// Integrated action of a symbol on samples of g: u(v) = sum_y ker(v,y) g(y) h.
pub fn schrodinger_apply(
    sym: &SchrodingerSymbol,
    g: &[f64],
    g_axis: &AxisGrid,
    out_axis: &AxisGrid,
) -> Result<Vec<Complex64>> {
    if g.len() != g_axis.count() {
        return Err(LabError::ShapeMismatch(format!(
            "argument has {} samples but its grid holds {} nodes",
            g.len(),
            g_axis.count()
        )));
    }
    let ker = sym.kernel(out_axis, g_axis)?;
    let hy = g_axis.step();
    Ok(ker
        .outer_iter()
        .map(|row| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, gv) in row.iter().zip(g) {
                acc += k * *gv;
            }
            acc * hy
        })
        .collect())
}

/// Kernel of a sampled three-slot symbol: slots 2 and 3 are contracted by
/// quadrature over the symbol's own grid,
/// ker(v, y) = sum_{b,c} F(y-v, b, c) e^{-pi i b (y+v)} e^{-2 pi i c} h_b h_c.
/// The quadrature reads the table exactly over the full symmetric lattice;
/// only the slot-1 coordinate y-v is interpolated, a cubic stencil along the
/// first axis that reduces to a direct row read when y-v lands on a node.
pub fn schrodinger_kernel(
    f: &ComplexSampledFunction,
    v_axis: &AxisGrid,
    y_axis: &AxisGrid,
) -> Result<Array2<Complex64>> {
    if f.dims() != 3 {
        return Err(LabError::Parameter(format!(
            "kernel contraction needs a three-slot symbol, got {} slots",
            f.dims()
        )));
    }
    let a_axis = f.axes()[0];
    let b_axis = f.axes()[1];
    let c_axis = f.axes()[2];
    let na = a_axis.count();
    let nb = b_axis.count();
    let nc = c_axis.count();
    let re = f.real_part().values();
    let im = f.imag_part().values();
    let hb = b_axis.step();
    let hc = c_axis.step();
    // slot-3 phase at frequency 1 with its quadrature weight
    let cph: Vec<Complex64> = (0..nc)
        .map(|ic| cis(-2.0 * PI * c_axis.node(ic)) * hc)
        .collect();
    let nv = v_axis.count();
    let ny = y_axis.count();
    let plane = nb * nc;
    let mut data = vec![Complex64::new(0.0, 0.0); nv * ny];
    data.par_chunks_mut(ny).enumerate().for_each(|(iv, row)| {
        let vpt = v_axis.node(iv);
        let mut slab_re = vec![0.0; plane];
        let mut slab_im = vec![0.0; plane];
        for (iy, out) in row.iter_mut().enumerate() {
            let y = y_axis.node(iy);
            let t = (y - vpt) / a_axis.step() + a_axis.half() as f64;
            let i = t.floor();
            let u = t - i;
            if u == 0.0 {
                let i = i as isize;
                if i < 0 || i >= na as isize {
                    continue;
                }
                let base = i as usize * plane;
                slab_re.copy_from_slice(&re[base..base + plane]);
                slab_im.copy_from_slice(&im[base..base + plane]);
            } else {
                if i < 1.0 || i > (na - 3) as f64 {
                    continue;
                }
                let w = catmull_rom_weights(u);
                let base = (i as usize - 1) * plane;
                for (j, (sr, si)) in slab_re.iter_mut().zip(&mut slab_im).enumerate() {
                    *sr = w[0] * re[base + j]
                        + w[1] * re[base + plane + j]
                        + w[2] * re[base + 2 * plane + j]
                        + w[3] * re[base + 3 * plane + j];
                    *si = w[0] * im[base + j]
                        + w[1] * im[base + plane + j]
                        + w[2] * im[base + 2 * plane + j]
                        + w[3] * im[base + 3 * plane + j];
                }
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for ib in 0..nb {
                let mut inner = Complex64::new(0.0, 0.0);
                for (ic, phase) in cph.iter().enumerate() {
                    let j = ib * nc + ic;
                    inner += Complex64::new(slab_re[j], slab_im[j]) * phase;
                }
                acc += inner * cis(-PI * b_axis.node(ib) * (y + vpt)) * hb;
            }
            *out = acc;
        }
    });
    Ok(Array2::from_shape_vec((nv, ny), data).expect("row-major fill matches shape"))
}

/// Kernel of a scaled tensor mollifier, with slots 2 and 3 contracted in
/// closed form through the factored transform instead of by quadrature:
/// ker(v, y) = rho_1(y-v) * rho_hat_2((y+v)/2) * rho_hat_3(1).
pub fn schrodinger_mollifier_kernel(
    m: &Mollifier,
    v_axis: &AxisGrid,
    y_axis: &AxisGrid,
) -> Result<Array2<f64>> {
    if m.dims() != 3 {
        return Err(LabError::Parameter(format!(
            "kernel contraction needs a three-slot mollifier, got {} slots",
            m.dims()
        )));
    }
    let central = m.transform_axis_scaled(2, 1.0);
    let nv = v_axis.count();
    let ny = y_axis.count();
    let mut data = vec![0.0; nv * ny];
    data.par_chunks_mut(ny).enumerate().for_each(|(iv, row)| {
        let vpt = v_axis.node(iv);
        for (iy, out) in row.iter_mut().enumerate() {
            let y = y_axis.node(iy);
            *out = m.eval_axis_scaled(0, y - vpt)
                * m.transform_axis_scaled(1, 0.5 * (y + vpt))
                * central;
        }
    });
    Ok(Array2::from_shape_vec((nv, ny), data).expect("row-major fill matches shape"))
}

#[derive(Debug, Clone, Serialize)]
pub struct SchrodingerUnitReport {
    pub eps: Vec<f64>,
    /// Row per suite fixture, column per eps.
    pub sup_errors: Vec<Vec<f64>>,
    pub floors: Vec<f64>,
    pub fitted_slopes: Vec<f64>,
    pub fit_points: Vec<usize>,
    /// Largest deviation of kernel column mass from 1 on the flat window,
    /// at the smallest eps.
    pub column_mass_defect: f64,
    /// Power-iteration estimate at the largest eps.
    pub operator_norm: f64,
    /// Product over slots of the quadrature L1 mass of the profile; the
    /// integrated action is bounded by it at every eps.
    pub l1_bound: f64,
}

/// Operator norm of the discretized kernel under the grid inner product.
fn operator_norm_estimate(k: &Array2<f64>, h: f64) -> f64 {
    let n = k.nrows();
    let mut u = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma_sq = 0.0;
    for _ in 0..80 {
        let w: Vec<f64> = k
            .outer_iter()
            .map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() * h)
            .collect();
        let mut z = vec![0.0; n];
        for (iv, row) in k.outer_iter().enumerate() {
            let wv = w[iv] * h;
            for (iy, a) in row.iter().enumerate() {
                z[iy] += a * wv;
            }
        }
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nz == 0.0 {
            return 0.0;
        }
        sigma_sq = nz;
        for (ui, zi) in u.iter_mut().zip(&z) {
            *ui = zi / nz;
        }
    }
    sigma_sq.sqrt()
}

/// Net of kernels of the scaled mollifier together with its convergence
/// report on a smooth compactly supported suite. The mollifier must come
/// from the plateau construction so the vanishing-moment certificate is
/// attached; scaling is parabolic in the central slot.
pub fn schrodinger_unit(
    m: &Mollifier,
    grid: &EpsilonGrid,
    axis: &AxisGrid,
    suite: &[Vec<f64>],
) -> Result<(Vec<Array2<f64>>, SchrodingerUnitReport)> {
    if m.dims() != 3 {
        return Err(LabError::Parameter(format!(
            "unit net needs a three-slot mollifier, got {} slots",
            m.dims()
        )));
    }
    if !matches!(m.construction(), MollifierConstruction::PlateauTransform) {
        return Err(LabError::Parameter(
            "unit net needs a plateau-built mollifier; the moment certificate \
             comes from its flat transform"
                .into(),
        ));
    }
    if suite.is_empty() {
        return Err(LabError::Parameter("suite must not be empty".into()));
    }
    for f in suite {
        if f.len() != axis.count() {
            return Err(LabError::ShapeMismatch(format!(
                "suite fixture has {} samples but the grid holds {} nodes",
                f.len(),
                axis.count()
            )));
        }
    }
    let eps = grid.values();
    let base_extent = m.axis_half() as f64 * m.axis_step();
    let h = axis.step();
    let mut kernels = Vec::with_capacity(eps.len());
    let mut sup_errors = vec![vec![0.0; eps.len()]; suite.len()];
    for (j, &e) in eps.iter().enumerate() {
        // spatial slot must keep a few grid nodes under its scaled support
        if 2.0 * e * base_extent < 4.0 * h {
            return Err(LabError::ResolutionFloor(format!(
                "eps {e} squeezes the spatial slot below the grid step {h}; \
                 smallest usable eps is about {:.3e}",
                2.0 * h / base_extent
            )));
        }
        let (scaled, _) = scale_mollifier(m, e, &UNIT_SCALING)?;
        let k = schrodinger_mollifier_kernel(&scaled, axis, axis)?;
        for (fi, f) in suite.iter().enumerate() {
            let mut worst = 0.0f64;
            for (iv, row) in k.outer_iter().enumerate() {
                let acc: f64 = row.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() * h;
                worst = worst.max((acc - f[iv]).abs());
            }
            sup_errors[fi][j] = worst;
        }
        kernels.push(k);
    }

    let mut floors = Vec::with_capacity(suite.len());
    let mut fitted_slopes = Vec::with_capacity(suite.len());
    let mut fit_points = Vec::with_capacity(suite.len());
    for errs in &sup_errors {
        let floor = errs.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-12);
        let (slope, used) = fit_decay_above_floor(&eps, errs, floor)?;
        floors.push(floor);
        fitted_slopes.push(slope);
        fit_points.push(used);
    }

    // column masses at the smallest eps, restricted to the flat window
    let j_min = eps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j)
        .expect("grid is non-empty");
    let window = axis.extent().min(1.0);
    let k_min = &kernels[j_min];
    let mut column_mass_defect = 0.0f64;
    for iy in 0..axis.count() {
        if axis.node(iy).abs() > window {
            continue;
        }
        let mass: f64 = (0..axis.count()).map(|iv| k_min[[iv, iy]] * h).sum();
        column_mass_defect = column_mass_defect.max((mass - 1.0).abs());
    }

    let j_max = eps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j)
        .expect("grid is non-empty");
    let operator_norm = operator_norm_estimate(&kernels[j_max], h);
    let axis_l1: f64 = m
        .base_axis_values()
        .iter()
        .map(|v| v.abs() * m.axis_step())
        .sum();
    let l1_bound = axis_l1.powi(3);

    Ok((
        kernels,
        SchrodingerUnitReport {
            eps,
            sup_errors,
            floors,
            fitted_slopes,
            fit_points,
            column_mass_defect,
            operator_norm,
            l1_bound,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::{heis_convolve, heis_convolve_left};
    use crate::mollifier::{
        build_mollifier, gaussian_moment_mollifier, DEFAULT_MOLLIFIER_HALF, DEFAULT_MOLLIFIER_STEP,
    };
    use crate::plateau::PlateauFunction;
    use crate::sampled::SampledFunction;
    use std::sync::OnceLock;

    fn axis(half: usize, step: f64) -> AxisGrid {
        AxisGrid::new(half, step).unwrap()
    }

    fn gauss_window(t: f64) -> f64 {
        2f64.powf(0.25) * (-PI * t * t).exp()
    }

    fn bump_target(t: f64) -> f64 {
        static MASK: OnceLock<PlateauFunction> = OnceLock::new();
        let mask = MASK.get_or_init(|| PlateauFunction::compact(2.2, 3.0).unwrap());
        (-t * t / 1.28).exp() * mask.eval(t)
    }

    fn samples(ax: &AxisGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..ax.count()).map(|i| f(ax.node(i))).collect()
    }

    /// Reference configuration for the gaussian fixture with a translation
    /// lattice wide enough for kernels on the full signal grid.
    fn gauss_cfg_wide() -> WindowedTransformConfig {
        WindowedTransformConfig::gaussian(
            axis(256, 1.0 / 32.0),
            axis(512, 1.0 / 32.0),
            axis(64, 0.125),
            axis(12, 0.25),
        )
        .unwrap()
    }

    fn bump_cfg() -> WindowedTransformConfig {
        WindowedTransformConfig::gaussian(
            axis(512, 1.0 / 64.0),
            axis(1024, 1.0 / 64.0),
            axis(64, 0.25),
            axis(12, 0.25),
        )
        .unwrap()
    }

    fn default_plateau_mollifier() -> &'static Mollifier {
        static CELL: OnceLock<Mollifier> = OnceLock::new();
        CELL.get_or_init(|| {
            build_mollifier(
                &PlateauFunction::default_mollifier_profile(),
                3,
                DEFAULT_MOLLIFIER_HALF,
                DEFAULT_MOLLIFIER_STEP,
            )
            .unwrap()
        })
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let t = axis(64, 0.125);
        let x = axis(32, 0.25);
        let xi = axis(16, 0.25);
        let tau = axis(12, 0.25);
        // window missing its normalization
        let w = samples(&t, |v| (-PI * v * v).exp());
        let phi_raw = samples(&tau, |v| (-PI * v * v).exp());
        let mass: f64 = phi_raw.iter().map(|p| p * tau.step()).sum();
        let phi: Vec<f64> = phi_raw.iter().map(|p| p / mass).collect();
        assert!(matches!(
            WindowedTransformConfig::new(t, x, xi, tau, w, phi.clone()),
            Err(LabError::Parameter(_))
        ));
        // tau profile with the wrong mass
        let good_w = samples(&t, gauss_window);
        let phi_heavy: Vec<f64> = phi.iter().map(|p| 1.7 * p).collect();
        assert!(matches!(
            WindowedTransformConfig::new(t, x, xi, tau, good_w.clone(), phi_heavy),
            Err(LabError::Parameter(_))
        ));
        // translation step not a multiple of the signal step
        let x_bad = axis(32, 0.2);
        assert!(matches!(
            WindowedTransformConfig::new(t, x_bad, xi, tau, good_w.clone(), phi.clone()),
            Err(LabError::Parameter(_))
        ));
        // size mismatches
        assert!(matches!(
            WindowedTransformConfig::new(t, x, xi, tau, good_w[1..].to_vec(), phi.clone()),
            Err(LabError::ShapeMismatch(_))
        ));
        let cfg = WindowedTransformConfig::new(t, x, xi, tau, good_w, phi).unwrap();
        assert!((cfg.window_norm_sq() - 1.0).abs() < 1e-9);
        assert!(matches!(
            stft(&cfg, &vec![0.0; 3]),
            Err(LabError::ShapeMismatch(_))
        ));
        let wrong = Array2::zeros((4, 4));
        assert!(matches!(
            stft_invert(&cfg, &wrong),
            Err(LabError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn transform_matches_closed_form_for_shifted_gaussian() {
        let cfg = WindowedTransformConfig::gaussian(
            axis(256, 1.0 / 32.0),
            axis(128, 1.0 / 32.0),
            axis(64, 0.125),
            axis(12, 0.25),
        )
        .unwrap();
        let s = 0.75;
        let f = samples(cfg.t_axis(), |t| gauss_window(t - s));
        let v = stft(&cfg, &f).unwrap();
        // V(x, xi) = e^{-pi (x+s)^2 / 2} e^{-pi xi^2 / 2} e^{-pi i xi (x - s)}
        let mut worst = 0.0f64;
        for ix in 0..cfg.x_axis().count() {
            let x = cfg.x_axis().node(ix);
            for ixi in 0..cfg.xi_axis().count() {
                let xi = cfg.xi_axis().node(ixi);
                let closed = (-PI * (x + s) * (x + s) / 2.0 - PI * xi * xi / 2.0).exp()
                    * cis(-PI * xi * (x - s));
                worst = worst.max((v[[ix, ixi]] - closed).norm());
            }
        }
        assert!(worst < 1e-10, "closed-form deviation {worst:.3e}");
        // the peaking translation places the window copy on the shift:
        // the copy paired at translation x is centered at -x
        let ixi0 = cfg.xi_axis().half();
        let peak = (0..cfg.x_axis().count())
            .max_by(|&a, &b| v[[a, ixi0]].norm().total_cmp(&v[[b, ixi0]].norm()))
            .unwrap();
        assert!((cfg.x_axis().node(peak) + s).abs() < 1e-12);
        // magnitude is centered in frequency
        let ix_peak = peak;
        let peak_xi = (0..cfg.xi_axis().count())
            .max_by(|&a, &b| v[[ix_peak, a]].norm().total_cmp(&v[[ix_peak, b]].norm()))
            .unwrap();
        assert_eq!(peak_xi, cfg.xi_axis().half());
    }

    #[test]
    fn window_autocorrelation_is_one_at_the_origin() {
        let cfg = gauss_cfg_wide();
        let f = samples(cfg.t_axis(), gauss_window);
        let v = stft(&cfg, &f).unwrap();
        let origin = v[[cfg.x_axis().half(), cfg.xi_axis().half()]];
        assert!((origin - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        assert!((origin.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_target_zero_everything() {
        let cfg = WindowedTransformConfig::gaussian(
            axis(64, 0.125),
            axis(32, 0.125),
            axis(16, 0.25),
            axis(12, 0.25),
        )
        .unwrap();
        let f = vec![0.0; cfg.t_axis().count()];
        let v = stft(&cfg, &f).unwrap();
        assert!(v.iter().all(|c| c.norm() == 0.0));
        let back = stft_invert(&cfg, &v).unwrap();
        assert!(back.iter().all(|c| c.norm() == 0.0));
        let sym = cheap_factorize(&f, &cfg).unwrap();
        assert!(sym.transform_values().iter().all(|c| c.norm() == 0.0));
        // apply on a grid narrow enough for the translation lattice
        let small = axis(16, 0.125);
        let out =
            schrodinger_apply(&sym, &vec![0.0; small.count()], &small, &small).unwrap();
        assert!(out.iter().all(|c| c.norm() == 0.0));
        // zero sampled symbol gives the zero kernel
        let zf = ComplexSampledFunction::from_fn(
            &[axis(8, 0.25), axis(8, 0.25), axis(8, 0.25)],
            |_| Complex64::new(0.0, 0.0),
        )
        .unwrap();
        let ker = schrodinger_kernel(&zf, &axis(4, 0.25), &axis(4, 0.25)).unwrap();
        assert!(ker.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn gaussian_roundtrip_at_reference_resolution() {
        let cfg = WindowedTransformConfig::gaussian(
            axis(256, 1.0 / 32.0),
            axis(192, 1.0 / 32.0),
            axis(64, 0.125),
            axis(12, 0.25),
        )
        .unwrap();
        let f = samples(cfg.t_axis(), gauss_window);
        let v = stft(&cfg, &f).unwrap();
        let back = stft_invert(&cfg, &v).unwrap();
        let worst = back
            .iter()
            .zip(&f)
            .map(|(b, t)| (b - t).norm())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-12, "roundtrip error {worst:.3e}");
    }

    #[test]
    fn bump_roundtrip_at_reference_resolution() {
        let cfg = bump_cfg();
        let f = samples(cfg.t_axis(), bump_target);
        let v = stft(&cfg, &f).unwrap();
        let back = stft_invert(&cfg, &v).unwrap();
        let worst = back
            .iter()
            .zip(&f)
            .map(|(b, t)| (b - t).norm())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-6, "roundtrip error {worst:.3e}");
    }

    #[test]
    fn transform_energy_matches_signal_energy() {
        // quadrature Plancherel identity for the analysis map
        for (cfg, f) in [
            (gauss_cfg_wide(), gauss_window as fn(f64) -> f64),
            (bump_cfg(), bump_target as fn(f64) -> f64),
        ] {
            let fs = samples(cfg.t_axis(), f);
            let v = stft(&cfg, &fs).unwrap();
            let ht = cfg.t_axis().step();
            let f_energy: f64 = fs.iter().map(|a| a * a * ht).sum();
            let v_energy: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>()
                * cfg.x_axis().step()
                * cfg.xi_axis().step();
            let defect = (v_energy - f_energy * cfg.window_norm_sq()).abs();
            assert!(defect < 1e-5, "energy defect {defect:.3e}");
        }
    }

    #[test]
    fn factorization_reconstructs_gaussian_fixture() {
        let cfg = gauss_cfg_wide();
        let f = samples(cfg.t_axis(), gauss_window);
        let sym = cheap_factorize(&f, &cfg).unwrap();
        let out = schrodinger_apply(&sym, &f, cfg.t_axis(), cfg.t_axis()).unwrap();
        let worst = out
            .iter()
            .zip(&f)
            .map(|(o, t)| (o - t).norm())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-9, "reconstruction error {worst:.3e}");
    }

    #[test]
    fn factorization_reconstructs_bump_fixture() {
        let cfg = bump_cfg();
        let f = samples(cfg.t_axis(), bump_target);
        let g = samples(cfg.t_axis(), gauss_window);
        let sym = cheap_factorize(&f, &cfg).unwrap();
        let out = schrodinger_apply(&sym, &g, cfg.t_axis(), cfg.t_axis()).unwrap();
        let worst = out
            .iter()
            .zip(&f)
            .map(|(o, t)| (o - t).norm())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-6, "reconstruction error {worst:.3e}");
    }

    #[test]
    fn kernel_alignment_violations_are_rejected() {
        let cfg = gauss_cfg_wide();
        let f = samples(cfg.t_axis(), gauss_window);
        let sym = cheap_factorize(&f, &cfg).unwrap();
        // step finer than the translation lattice
        assert!(matches!(
            sym.kernel(&axis(4, 1.0 / 64.0), &axis(4, 1.0 / 32.0)),
            Err(LabError::Parameter(_))
        ));
        // extents exceeding reachable differences
        assert!(matches!(
            sym.kernel(&axis(300, 1.0 / 32.0), &axis(300, 1.0 / 32.0)),
            Err(LabError::Parameter(_))
        ));
        // sampled-symbol contraction needs three slots
        let two = ComplexSampledFunction::from_fn(&[axis(4, 0.5), axis(4, 0.5)], |_| {
            Complex64::new(1.0, 0.0)
        })
        .unwrap();
        assert!(matches!(
            schrodinger_kernel(&two, &axis(4, 0.5), &axis(4, 0.5)),
            Err(LabError::Parameter(_))
        ));
    }

    #[test]
    fn separable_gaussian_kernel_matches_direct_representation_quadrature() {
        // F(a, b, c) = e^{2 pi i c} phi(c) e^{-pi(a^2+b^2)/2}
        let phi = |c: f64| (-PI * c * c).exp();
        let fan = |a: f64, b: f64, c: f64| {
            cis(2.0 * PI * c) * phi(c) * (-PI * (a * a + b * b) / 2.0).exp()
        };
        let slots = [axis(32, 0.125), axis(32, 0.125), axis(24, 0.125)];
        let f =
            ComplexSampledFunction::from_fn(&slots, |p| fan(p[0], p[1], p[2])).unwrap();
        let vax = axis(12, 0.125);
        let ker = schrodinger_kernel(&f, &vax, &vax).unwrap();

        // closed form: both contractions are gaussian transforms and the
        // c-slot phases cancel, leaving sqrt(2) e^{-pi (y^2 + v^2)}
        let mut worst_closed = 0.0f64;
        for iv in 0..vax.count() {
            let v = vax.node(iv);
            for iy in 0..vax.count() {
                let y = vax.node(iy);
                let closed = 2f64.sqrt() * (-PI * (y * y + v * v)).exp();
                worst_closed = worst_closed.max((ker[[iv, iy]] - closed).norm());
            }
        }
        assert!(worst_closed < 1e-9, "closed-form deviation {worst_closed:.3e}");

        // direct route: integrate the symbol against the inverse-parametrized
        // representation action on point-mass columns, at half the slot-2/3
        // quadrature steps; the a-slot collapses exactly on a point mass
        let fine_b = axis(64, 0.0625);
        let fine_c = axis(48, 0.0625);
        let mut worst_direct = 0.0f64;
        for y0 in [-0.5, 0.0, 0.75] {
            for iv in 0..vax.count() {
                let v = vax.node(iv);
                let a = y0 - v;
                let mut acc = Complex64::new(0.0, 0.0);
                for ib in 0..fine_b.count() {
                    let b = fine_b.node(ib);
                    let mut inner = Complex64::new(0.0, 0.0);
                    for ic in 0..fine_c.count() {
                        let c = fine_c.node(ic);
                        inner += fan(a, b, c) * cis(-2.0 * PI * c);
                    }
                    acc += inner
                        * fine_c.step()
                        * cis(-2.0 * PI * b * v)
                        * cis(-PI * a * b)
                        * fine_b.step();
                }
                let iy = (y0 / vax.step() + vax.half() as f64).round() as usize;
                worst_direct = worst_direct.max((ker[[iv, iy]] - acc).norm());
            }
        }
        assert!(worst_direct < 1e-5, "direct-route deviation {worst_direct:.3e}");
    }

    #[test]
    fn kernel_hermitian_for_even_real_slots() {
        // real symbol, even in every slot: group inversion negates the
        // center too, so evenness of the central slot (or the canonical
        // character times an even profile) is part of the hypothesis
        let f = ComplexSampledFunction::from_fn(
            &[axis(24, 0.125), axis(24, 0.125), axis(32, 0.125)],
            |p| {
                Complex64::new(
                    (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp() * (-2.0 * p[2] * p[2]).exp(),
                    0.0,
                )
            },
        )
        .unwrap();
        let vax = axis(8, 0.125);
        let ker = schrodinger_kernel(&f, &vax, &vax).unwrap();
        let mut worst = 0.0f64;
        for iv in 0..vax.count() {
            for iy in 0..vax.count() {
                worst = worst.max((ker[[iv, iy]] - ker[[iy, iv]].conj()).norm());
            }
        }
        assert!(worst < 1e-6, "hermitian defect {worst:.3e}");
    }

    #[test]
    fn mollifier_kernel_matches_sampled_symbol_quadrature() {
        // dual route: closed-form slot transforms against plain quadrature
        // of the sampled scaled mollifier as a three-slot symbol
        let m = gaussian_moment_mollifier(2, 3, 9, 5.0 / 6.0).unwrap();
        let (scaled, _) = scale_mollifier(&m, 0.4, &[1, 1, 1]).unwrap();
        let vax = axis(8, 0.125);
        let closed = schrodinger_mollifier_kernel(&scaled, &vax, &vax).unwrap();
        let slots = [axis(24, 0.125), axis(24, 0.125), axis(24, 0.125)];
        let sampled = ComplexSampledFunction::from_fn(&slots, |p| {
            Complex64::new(
                scaled.eval_axis_scaled(0, p[0])
                    * scaled.eval_axis_scaled(1, p[1])
                    * scaled.eval_axis_scaled(2, p[2]),
                0.0,
            )
        })
        .unwrap();
        let quad = schrodinger_kernel(&sampled, &vax, &vax).unwrap();
        let mut worst = 0.0f64;
        for iv in 0..vax.count() {
            for iy in 0..vax.count() {
                worst = worst.max((quad[[iv, iy]] - closed[[iv, iy]]).norm());
            }
        }
        assert!(worst < 1e-8, "route disagreement {worst:.3e}");
    }

    #[test]
    fn unit_net_requires_plateau_built_three_slot_mollifier() {
        let grid = EpsilonGrid::new(0.5, 0.8, 8).unwrap();
        let ax = axis(32, 0.125);
        let suite = vec![samples(&ax, gauss_window)];
        // right slot count, wrong construction
        let gm = gaussian_moment_mollifier(2, 3, 24, 1.0 / 3.0).unwrap();
        assert!(matches!(
            schrodinger_unit(&gm, &grid, &ax, &suite),
            Err(LabError::Parameter(_))
        ));
        // wrong slot count
        let planar = gaussian_moment_mollifier(2, 2, 24, 1.0 / 3.0).unwrap();
        assert!(matches!(
            schrodinger_unit(&planar, &grid, &ax, &suite),
            Err(LabError::Parameter(_))
        ));
    }

    #[test]
    fn unit_net_reports_resolution_floor() {
        let m = default_plateau_mollifier();
        // eps small enough that the scaled spatial slot drops under the step
        let grid = EpsilonGrid::new(1e-4, 0.5, 8).unwrap();
        let ax = axis(16, 0.25);
        let suite = vec![samples(&ax, gauss_window)];
        assert!(matches!(
            schrodinger_unit(m, &grid, &ax, &suite),
            Err(LabError::ResolutionFloor(_))
        ));
    }

    #[test]
    fn unit_net_slopes_exceed_moment_order_minus_one() {
        let m = default_plateau_mollifier();
        let ax = axis(192, 1.0 / 32.0);
        let suite = vec![samples(&ax, gauss_window), samples(&ax, bump_target)];
        let ratio = (0.08f64 / 0.5).powf(1.0 / 9.0);
        let grid = EpsilonGrid::new(0.5, ratio, 10).unwrap();
        let (kernels, report) = schrodinger_unit(m, &grid, &ax, &suite).unwrap();
        assert_eq!(kernels.len(), 10);
        let target = m.moment_order() as f64 - 1.0;
        for (fi, errs) in report.sup_errors.iter().enumerate() {
            assert!(
                errs.first().unwrap() > errs.last().unwrap(),
                "fixture {fi} errors do not decrease"
            );
            assert!(
                report.fitted_slopes[fi] >= target,
                "fixture {fi} slope {} below {target}",
                report.fitted_slopes[fi]
            );
            assert!(report.fit_points[fi] >= 4);
        }
        assert!(
            report.column_mass_defect < 1e-6,
            "column mass defect {:.3e}",
            report.column_mass_defect
        );
        assert!(report.operator_norm <= report.l1_bound);
        assert!(report.operator_norm > 0.5);
    }

    /// Composing the unit kernel with an integrated symbol matches the
    /// kernel of the group-convolved symbol. The group convolution uses the
    /// order whose integrated action composes: the side with arguments
    /// q^{-1} p. The opposite side misses by two orders of magnitude.
    #[test]
    fn unit_composition_factors_through_group_convolution() {
        let eps = 0.3;
        let cfg = WindowedTransformConfig::gaussian(
            axis(192, 1.0 / 32.0),
            axis(80, 1.0 / 16.0),
            axis(56, 1.0 / 16.0),
            axis(96, 1.0 / 32.0),
        )
        .unwrap();
        let g = samples(cfg.t_axis(), gauss_window);
        let sym = cheap_factorize(&g, &cfg).unwrap();

        // the symbol on its own lattice, as a complex table
        let slots = [*cfg.x_axis(), *cfg.xi_axis(), *cfg.tau_axis()];
        let counts = [slots[0].count(), slots[1].count(), slots[2].count()];
        let mut re = Vec::with_capacity(counts.iter().product());
        let mut im = Vec::with_capacity(counts.iter().product());
        for ix in 0..counts[0] {
            for ixi in 0..counts[1] {
                for itau in 0..counts[2] {
                    let val = sym.value(ix, ixi, itau);
                    re.push(val.re);
                    im.push(val.im);
                }
            }
        }
        let f_re = SampledFunction::new(slots.to_vec(), re).unwrap();
        let f_im = SampledFunction::new(slots.to_vec(), im).unwrap();

        let m = gaussian_moment_mollifier(2, 3, 9, 5.0 / 6.0).unwrap();
        let (scaled, _) = scale_mollifier(&m, eps, &UNIT_SCALING).unwrap();

        let out_axes = [axis(40, 0.125), axis(14, 0.25), axis(12, 0.25)];
        let vax = axis(20, 0.125);
        let hy = vax.step();
        let gv = samples(&vax, gauss_window);

        // left route: convolve the symbol, then contract its kernel
        let g_re = heis_convolve_left(&scaled, &f_re, &out_axes).unwrap();
        let g_im = heis_convolve_left(&scaled, &f_im, &out_axes).unwrap();
        let conv = ComplexSampledFunction::new(g_re, g_im).unwrap();
        let ker_conv = schrodinger_kernel(&conv, &vax, &vax).unwrap();
        let rhs: Vec<Complex64> = ker_conv
            .outer_iter()
            .map(|row| {
                row.iter()
                    .zip(&gv)
                    .map(|(k, g)| k * *g)
                    .sum::<Complex64>()
                    * hy
            })
            .collect();

        // operator route: integrated symbol action, then the unit kernel
        let u = schrodinger_apply(&sym, &gv, &vax, &vax).unwrap();
        let u_worst = u
            .iter()
            .zip(&gv)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(u_worst < 1e-8, "integrated action defect {u_worst:.3e}");
        let k_unit = schrodinger_mollifier_kernel(&scaled, &vax, &vax).unwrap();
        let lhs: Vec<Complex64> = k_unit
            .outer_iter()
            .map(|row| {
                row.iter().zip(&u).map(|(k, uv)| uv * *k).sum::<Complex64>() * hy
            })
            .collect();

        let left_defect = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(left_defect < 1e-3, "left composition defect {left_defect:.3e}");

        // control: the opposite convolution side does not compose
        let w_re = heis_convolve(&scaled, &f_re, &out_axes).unwrap();
        let w_im = heis_convolve(&scaled, &f_im, &out_axes).unwrap();
        let wrong = ComplexSampledFunction::new(w_re, w_im).unwrap();
        let ker_wrong = schrodinger_kernel(&wrong, &vax, &vax).unwrap();
        let right_defect = lhs
            .iter()
            .enumerate()
            .map(|(iv, a)| {
                let b: Complex64 = ker_wrong
                    .row(iv)
                    .iter()
                    .zip(&gv)
                    .map(|(k, g)| k * *g)
                    .sum::<Complex64>()
                    * hy;
                (a - b).norm()
            })
            .fold(0.0f64, f64::max);
        assert!(
            right_defect > 3e-3 && right_defect > 10.0 * left_defect,
            "sides not separated: left {left_defect:.3e}, right {right_defect:.3e}"
        );
    }
}
