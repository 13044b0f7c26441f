use crate::error::{LabError, Result};
use crate::grid::EpsilonGrid;
use crate::mollifier::{fit_decay_above_floor, scale_mollifier, Mollifier};
use crate::sampled::{AxisGrid, SampledFunction};
use rayon::prelude::*;
use serde::Serialize;

/// Point of H_n in exponential coordinates (x, xi, t), group law
/// (x,xi,t)(y,eta,s) = (x+y, xi+eta, t+s+(x.eta - y.xi)/2).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeisenbergPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub t: f64,
}

impl HeisenbergPoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() != xi.len() || x.is_empty() {
            return Err(LabError::ShapeMismatch(format!(
                "position block has {} entries, momentum block {}",
                x.len(),
                xi.len()
            )));
        }
        Ok(Self { x, xi, t })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            xi: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Symplectic pairing omega(p_bar, q_bar) = x.eta - y.xi, accumulated
/// pairwise per index so omega(p_bar, p_bar) cancels exactly in floats.
pub fn symplectic_form(p: &HeisenbergPoint, q: &HeisenbergPoint) -> f64 {
    p.x.iter()
        .zip(&q.xi)
        .zip(p.xi.iter().zip(&q.x))
        .map(|((x, eta), (xi, y))| x * eta - y * xi)
        .sum()
}

pub fn heis_compose(p: &HeisenbergPoint, q: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    if p.n() != q.n() {
        return Err(LabError::ShapeMismatch(format!(
            "composing points of H_{} and H_{}",
            p.n(),
            q.n()
        )));
    }
    let x = p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect();
    let xi = p.xi.iter().zip(&q.xi).map(|(a, b)| a + b).collect();
    let t = p.t + q.t + 0.5 * symplectic_form(p, q);
    Ok(HeisenbergPoint { x, xi, t })
}

pub fn heis_inverse(p: &HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint {
        x: p.x.iter().map(|a| -a).collect(),
        xi: p.xi.iter().map(|a| -a).collect(),
        t: -p.t,
    }
}

/// Group-scaled difference per the defining expression p - (eps q^{-1}) o p,
/// where eps q^{-1} multiplies every coordinate of q^{-1}. Evaluates to
/// (eps y, eps eta, eps s - (eps/2) omega(p_bar, q_bar)).
pub fn heis_dist(p: &HeisenbergPoint, q: &HeisenbergPoint, eps: f64) -> Result<Vec<f64>> {
    if p.n() != q.n() {
        return Err(LabError::ShapeMismatch(format!(
            "distance between points of H_{} and H_{}",
            p.n(),
            q.n()
        )));
    }
    let scaled_inv = HeisenbergPoint {
        x: q.x.iter().map(|a| -eps * a).collect(),
        xi: q.xi.iter().map(|a| -eps * a).collect(),
        t: -eps * q.t,
    };
    let moved = heis_compose(&scaled_inv, p)?;
    let mut out = Vec::with_capacity(2 * p.n() + 1);
    for (a, b) in p.x.iter().zip(&moved.x) {
        out.push(a - b);
    }
    for (a, b) in p.xi.iter().zip(&moved.xi) {
        out.push(a - b);
    }
    out.push(p.t - moved.t);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeisDistReport {
    /// p - (eps q^{-1}) o p, the authoritative value.
    pub defining: Vec<f64>,
    /// The simplified display "-eps q + (eps/2) omega(p_bar,q_bar)" read
    /// verbatim: (-eps y, -eps eta, -eps s + (eps/2) omega).
    pub simplified: Vec<f64>,
    /// max_i |defining_i - simplified_i|. The two disagree by an overall
    /// sign: simplified is the negation of defining up to the roundoff of
    /// their different evaluation orders.
    pub max_deviation: f64,
}

pub fn heis_dist_report(p: &HeisenbergPoint, q: &HeisenbergPoint, eps: f64) -> Result<HeisDistReport> {
    let defining = heis_dist(p, q, eps)?;
    let omega = symplectic_form(p, q);
    let mut simplified = Vec::with_capacity(defining.len());
    for a in &q.x {
        simplified.push(-eps * a);
    }
    for a in &q.xi {
        simplified.push(-eps * a);
    }
    simplified.push(-eps * q.t + 0.5 * eps * omega);
    let max_deviation = defining
        .iter()
        .zip(&simplified)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(HeisDistReport {
        defining,
        simplified,
        max_deviation,
    })
}

/// Which argument order the group convolution integrates.
/// `Right` is the displayed integral int rho(q) f(p q^{-1}) dq; `Left` is
/// int rho(q) f(q^{-1} p) dq, the order under which pi_hat(rho * F) equals
/// pi_hat(rho) pi_hat(F) for the integrated representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GroupSide {
    Right,
    Left,
}

fn heis_convolve_side(
    m: &Mollifier,
    f: &SampledFunction,
    out_axes: &[AxisGrid],
    side: GroupSide,
) -> Result<SampledFunction> {
    if m.dims() != 3 || f.dims() != 3 {
        return Err(LabError::ShapeMismatch(format!(
            "group convolution lives on R^3; got mollifier d={}, samples d={}",
            m.dims(),
            f.dims()
        )));
    }
    if out_axes.len() != 3 {
        return Err(LabError::ShapeMismatch(format!(
            "output grid needs 3 axes, got {}",
            out_axes.len()
        )));
    }
    for (i, (oa, fa)) in out_axes.iter().zip(f.axes()).enumerate() {
        if oa.extent() > fa.extent() + 1e-12 {
            return Err(LabError::Parameter(format!(
                "support overflow: output axis {i} reaches {:.3} past the sampled support {:.3}",
                oa.extent(),
                fa.extent()
            )));
        }
    }
    for i in 0..3 {
        let support = 2.0 * m.scaled_extent(i);
        if support < 4.0 * f.axes()[i].step() {
            return Err(LabError::ResolutionFloor(format!(
                "axis {i}: scaled support {support:.3e} spans under 4 grid cells of step {:.3e}; \
                 smallest usable axis scale is {:.3e}",
                f.axes()[i].step(),
                2.0 * f.axes()[i].step() / (m.axis_half() as f64 * m.axis_step())
            )));
        }
    }
    // quadrature over the mollifier's own grid: q = (s1 w1, s2 w2, s3 w3),
    // weights rho(w1)rho(w2)rho(w3) h^3 (the 1/prod(s_i) prefactor cancels
    // against the Haar substitution exactly)
    let base = m.base_axis_values();
    let h = m.axis_step();
    let half = m.axis_half() as f64;
    let s = m.axis_scale();
    let nodes: Vec<f64> = (0..base.len()).map(|i| (i as f64 - half) * h).collect();
    let w3 = h * h * h;
    let counts: [usize; 3] = [out_axes[0].count(), out_axes[1].count(), out_axes[2].count()];
    let total = counts[0] * counts[1] * counts[2];
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|lin| {
            let i0 = lin / (counts[1] * counts[2]);
            let i1 = (lin / counts[2]) % counts[1];
            let i2 = lin % counts[2];
            let px = out_axes[0].node(i0);
            let pxi = out_axes[1].node(i1);
            let pt = out_axes[2].node(i2);
            let mut acc = 0.0;
            for (ia, &wa) in nodes.iter().enumerate() {
                let ra = base[ia];
                if ra == 0.0 {
                    continue;
                }
                let a = s[0] * wa;
                for (ib, &wb) in nodes.iter().enumerate() {
                    let rab = ra * base[ib];
                    if rab == 0.0 {
                        continue;
                    }
                    let b = s[1] * wb;
                    // t-twist of p q^{-1} is +(a xi - x b)/2; of q^{-1} p the sign flips
                    let twist = match side {
                        GroupSide::Right => 0.5 * (a * pxi - px * b),
                        GroupSide::Left => 0.5 * (px * b - a * pxi),
                    };
                    let fx = px - a;
                    let fxi = pxi - b;
                    for (ic, &wc) in nodes.iter().enumerate() {
                        let weight = rab * base[ic];
                        if weight == 0.0 {
                            continue;
                        }
                        let c = s[2] * wc;
                        let v = f.value_at(&[fx, fxi, pt - c + twist]);
                        acc += weight * v;
                    }
                }
            }
            acc * w3
        })
        .collect();
    SampledFunction::new(out_axes.to_vec(), values)
}

/// Group convolution quadrature of the displayed integral
/// int rho_eps(q) f(p q^{-1}) dq on the requested output grid.
pub fn heis_convolve(m: &Mollifier, f: &SampledFunction, out_axes: &[AxisGrid]) -> Result<SampledFunction> {
    heis_convolve_side(m, f, out_axes, GroupSide::Right)
}

/// Opposite-order convolution int rho_eps(q) f(q^{-1} p) dq. This is the
/// order the integrated representation composes under, so the operator
/// identity tests use it.
pub fn heis_convolve_left(m: &Mollifier, f: &SampledFunction, out_axes: &[AxisGrid]) -> Result<SampledFunction> {
    heis_convolve_side(m, f, out_axes, GroupSide::Left)
}

/// Smallest eps whose scaled support still spans 4 grid cells on every axis.
pub fn heis_smallest_usable_eps(m: &Mollifier, f: &SampledFunction, exponents: &[u32; 3]) -> f64 {
    let extent = m.axis_half() as f64 * m.axis_step();
    (0..3)
        .map(|i| {
            let s_min = 2.0 * f.axes()[i].step() / extent;
            s_min.powf(1.0 / exponents[i] as f64)
        })
        .fold(0.0f64, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeisConvergenceReport {
    pub eps: Vec<f64>,
    pub sup_error: Vec<f64>,
    /// w-grid Richardson estimates |conv_h - conv_{h/2}| at the first and
    /// last eps. These see the group-quadrature error only, not the sample
    /// interpolation floor, so the reported floor also folds in the observed
    /// error plateau.
    pub richardson: Vec<f64>,
    pub floor: f64,
    pub fitted_slope: f64,
    pub fit_points: usize,
    pub smallest_usable_eps: f64,
}

/// Sup-error net of the group convolution against a smooth sampled f over a
/// geometric eps grid. Probes must sit on f's nodes so the reference values
/// carry no interpolation error.
pub fn heis_convergence_net(
    m: &Mollifier,
    f: &SampledFunction,
    probes: &[AxisGrid],
    grid: &EpsilonGrid,
    exponents: &[u32; 3],
) -> Result<HeisConvergenceReport> {
    let eps = grid.values();
    let smallest = heis_smallest_usable_eps(m, f, exponents);
    let reference = SampledFunction::from_fn(probes, |p| f.value_at(p))?;
    let sup_err = |conv: &SampledFunction| {
        conv.values()
            .iter()
            .zip(reference.values())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    };
    let mut sup_error = Vec::with_capacity(eps.len());
    for &e in &eps {
        let (me, _) = scale_mollifier(m, e, exponents)?;
        let conv = heis_convolve(&me, f, probes)?;
        sup_error.push(sup_err(&conv));
    }
    let refined = m.refined();
    let mut richardson = Vec::new();
    for &e in &[eps[0], eps[eps.len() - 1]] {
        let (me, _) = scale_mollifier(m, e, exponents)?;
        let (mr, _) = scale_mollifier(&refined, e, exponents)?;
        let coarse = heis_convolve(&me, f, probes)?;
        let fine = heis_convolve(&mr, f, probes)?;
        let dev = coarse
            .values()
            .iter()
            .zip(fine.values())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        richardson.push(dev);
    }
    let plateau = sup_error.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = richardson
        .iter()
        .cloned()
        .fold(plateau, f64::max)
        .max(1e-300);
    let (fitted_slope, fit_points) = fit_decay_above_floor(&eps, &sup_error, floor)?;
    Ok(HeisConvergenceReport {
        eps,
        sup_error,
        richardson,
        floor,
        fitted_slope,
        fit_points,
        smallest_usable_eps: smallest,
    })
}
