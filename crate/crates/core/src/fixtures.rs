//! Fixed coefficient families with known regularity, used as inputs across
//! the test layers, plus seeded random operators for family sweeps.
//!
//! Circle laws are stated in the orthonormal basis e^{inx}/sqrt(2 pi), torus
//! laws in e^{i m.x}/(2 pi). Random-phase fixtures draw from the lab RNG in
//! suite order, so a suite is reproducible from its seed.

use crate::error::{LabError, Result};
use crate::spectral::{
    Manifold, SmoothingOp, SpectralDistribution, SpectralFunction, SpectralModel,
};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Seed of the canonical suite wherever one fixed choice is needed.
pub const SUITE_SEED: u64 = 1729;

pub fn lab_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Standard complex gaussian (E|z|^2 = 1) via polar Box-Muller.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    Complex64::from_polar((-u1.ln()).sqrt(), 2.0 * PI * u2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixtureClass {
    Smooth,
    NonSmooth,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub class: FixtureClass,
    /// Critical Sobolev index of the untruncated law: the function lies in
    /// H^s exactly for s below this value. None when every order is reached.
    pub sobolev_order: Option<f64>,
    pub dist: SpectralDistribution,
}

fn circle_law(
    model: SpectralModel,
    f: impl Fn(i64) -> Complex64,
) -> Result<SpectralDistribution> {
    let coeffs = Array1::from_iter((0..model.dim()).map(|i| f(model.circle_freq(i))));
    SpectralDistribution::new(model, coeffs)
}

fn require_manifold(model: &SpectralModel, want: Manifold, what: &str) -> Result<()> {
    if model.manifold() != want {
        return Err(LabError::Parameter(format!("{what} needs a {want:?} model")));
    }
    Ok(())
}

/// The twelve-member circle suite: five smooth laws and seven with a finite
/// critical Sobolev index spread over [-1.5, 1.5].
pub fn circle_suite(model: SpectralModel, seed: u64) -> Result<Vec<Fixture>> {
    require_manifold(&model, Manifold::Circle, "fixture suite")?;
    if model.truncation() < 8 {
        return Err(LabError::Parameter(format!(
            "fixture suite needs truncation >= 8, got {}",
            model.truncation()
        )));
    }
    let mut rng = lab_rng(seed);
    let root = 1.0 / (2.0 * PI).sqrt();
    let dim = model.dim();

    // Phase draws happen here, in fixed suite order.
    let phases_a: Vec<f64> = (0..dim).map(|_| 2.0 * PI * rng.gen::<f64>()).collect();
    let phases_h: Vec<f64> = (0..dim).map(|_| 2.0 * PI * rng.gen::<f64>()).collect();

    let mut out = Vec::with_capacity(12);
    let mut push = |name, class, order: Option<f64>, dist: SpectralDistribution| {
        out.push(Fixture {
            name,
            class,
            sobolev_order: order,
            dist,
        });
    };

    push(
        "const",
        FixtureClass::Smooth,
        None,
        circle_law(model, |n| {
            if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })?,
    );
    push(
        "bandlim8",
        FixtureClass::Smooth,
        None,
        circle_law(model, |n| {
            if n.abs() <= 8 {
                Complex64::new(1.0 / (1.0 + n.abs() as f64), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })?,
    );
    push(
        "analytic08",
        FixtureClass::Smooth,
        None,
        circle_law(model, |n| {
            Complex64::new((-0.8 * n.abs() as f64).exp(), 0.0)
        })?,
    );
    push(
        "analytic08rp",
        FixtureClass::Smooth,
        None,
        circle_law(model, |n| {
            let idx = model.circle_index(n).unwrap();
            Complex64::from_polar((-0.8 * n.abs() as f64).exp(), phases_a[idx])
        })?,
    );
    push(
        "gauss50",
        FixtureClass::Smooth,
        None,
        circle_law(model, |n| {
            Complex64::new((-((n * n) as f64) / 50.0).exp(), 0.0)
        })?,
    );
    push(
        "delta",
        FixtureClass::NonSmooth,
        Some(-0.5),
        circle_law(model, |_| Complex64::new(root, 0.0))?,
    );
    push(
        "dprime",
        FixtureClass::NonSmooth,
        Some(-1.5),
        circle_law(model, |n| Complex64::new(0.0, n as f64 * root))?,
    );
    push(
        "jump",
        FixtureClass::NonSmooth,
        Some(0.5),
        circle_law(model, |n| {
            if n == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                // 1 / (i n)
                Complex64::new(0.0, -1.0 / n as f64)
            }
        })?,
    );
    push(
        "h15",
        FixtureClass::NonSmooth,
        Some(1.5),
        circle_law(model, |n| {
            Complex64::new(1.0 / (1.0 + (n * n) as f64), 0.0)
        })?,
    );
    push(
        "h05rp",
        FixtureClass::NonSmooth,
        Some(0.5),
        circle_law(model, |n| {
            let idx = model.circle_index(n).unwrap();
            Complex64::from_polar(1.0 / (1.0 + (n * n) as f64).sqrt(), phases_h[idx])
        })?,
    );
    push(
        "delta_pi",
        FixtureClass::NonSmooth,
        Some(-0.5),
        circle_law(model, |n| {
            let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * root, 0.0)
        })?,
    );
    push(
        "growing",
        FixtureClass::NonSmooth,
        Some(-1.0),
        circle_law(model, |n| {
            Complex64::new((1.0 + (n * n) as f64).powf(0.25), 0.0)
        })?,
    );
    Ok(out)
}

pub fn by_name<'a>(suite: &'a [Fixture], name: &str) -> Option<&'a Fixture> {
    suite.iter().find(|f| f.name == name)
}

/// The smooth half of a suite, viewed as functions.
pub fn smooth_functions(suite: &[Fixture]) -> Vec<(String, SpectralFunction)> {
    suite
        .iter()
        .filter(|f| f.class == FixtureClass::Smooth)
        .map(|f| {
            let func = SpectralFunction::new(f.dist.model, f.dist.coeffs.clone())
                .expect("suite coefficients were validated at construction");
            (f.name.to_string(), func)
        })
        .collect()
}

pub fn nonsmooth_distributions(suite: &[Fixture]) -> Vec<(String, SpectralDistribution)> {
    suite
        .iter()
        .filter(|f| f.class == FixtureClass::NonSmooth)
        .map(|f| (f.name.to_string(), f.dist.clone()))
        .collect()
}

/// Point mass at the origin of the torus: every coefficient 1/(2 pi).
pub fn torus_delta(model: SpectralModel) -> Result<SpectralDistribution> {
    require_manifold(&model, Manifold::Torus2, "torus delta")?;
    let v = 1.0 / (2.0 * PI);
    let coeffs = Array1::from_elem(model.dim(), Complex64::new(v, 0.0));
    SpectralDistribution::new(model, coeffs)
}

/// Sawtooth in x, constant in y: the periodic extension of (pi - x)/2.
/// Coefficients sit on the m2 = 0 axis, c_{(m,0)} = -i pi / m.
pub fn torus_sawtooth_x(model: SpectralModel) -> Result<SpectralDistribution> {
    require_manifold(&model, Manifold::Torus2, "sawtooth")?;
    let mut coeffs = model.zeros();
    let k = model.truncation() as i64;
    for m in -k..=k {
        if m != 0 {
            coeffs[model.torus_index(m, 0).unwrap()] = Complex64::new(0.0, -PI / m as f64);
        }
    }
    SpectralDistribution::new(model, coeffs)
}

/// Product of two unit jump profiles, singular on both coordinate axes:
/// c_{(m1,m2)} = -1/(m1 m2) with both frequencies nonzero.
pub fn torus_tensor_jump(model: SpectralModel) -> Result<SpectralDistribution> {
    require_manifold(&model, Manifold::Torus2, "tensor jump")?;
    let mut coeffs = model.zeros();
    let k = model.truncation() as i64;
    for m1 in -k..=k {
        if m1 == 0 {
            continue;
        }
        for m2 in -k..=k {
            if m2 == 0 {
                continue;
            }
            coeffs[model.torus_index(m1, m2).unwrap()] =
                Complex64::new(-1.0 / (m1 * m2) as f64, 0.0);
        }
    }
    SpectralDistribution::new(model, coeffs)
}

/// Smooth torus reference: c_m = exp(-|m|^2 / 50).
pub fn torus_gaussian(model: SpectralModel) -> Result<SpectralDistribution> {
    require_manifold(&model, Manifold::Torus2, "torus gaussian")?;
    let coeffs = Array1::from_iter(
        (0..model.dim()).map(|i| Complex64::new((-model.lambda(i) / 50.0).exp(), 0.0)),
    );
    SpectralDistribution::new(model, coeffs)
}

/// Dense operator with independent complex gaussian entries damped row-wise
/// by (1 + lambda_l)^{-2}, so draws stay bounded in the low graded norms.
pub fn random_row_decay_op<R: Rng + ?Sized>(
    model: SpectralModel,
    rng: &mut R,
) -> Result<SmoothingOp> {
    let dim = model.dim();
    let mut m = Array2::zeros((dim, dim));
    for l in 0..dim {
        let w = (1.0 + model.lambda(l)).powi(-2);
        for c in 0..dim {
            m[(l, c)] = complex_gaussian(rng) * w;
        }
    }
    SmoothingOp::dense(model, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn suite_has_twelve_reproducible_entries() {
        let model = SpectralModel::circle(32).unwrap();
        let a = circle_suite(model, SUITE_SEED).unwrap();
        let b = circle_suite(model, SUITE_SEED).unwrap();
        assert_eq!(a.len(), 12);
        let smooth = a.iter().filter(|f| f.class == FixtureClass::Smooth).count();
        assert_eq!(smooth, 5);
        let mut names: Vec<_> = a.iter().map(|f| f.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 12);
        for (fa, fb) in a.iter().zip(&b) {
            assert_eq!(fa.dist.coeffs, fb.dist.coeffs, "{} not reproducible", fa.name);
        }
        // A different seed moves the random-phase members and nothing else.
        let c = circle_suite(model, SUITE_SEED + 1).unwrap();
        for (fa, fc) in a.iter().zip(&c) {
            let same = fa.dist.coeffs == fc.dist.coeffs;
            match fa.name {
                "analytic08rp" | "h05rp" => assert!(!same, "{} ignored the seed", fa.name),
                _ => assert!(same, "{} depends on the seed", fa.name),
            }
        }
        assert_eq!(smooth_functions(&a).len(), 5);
        assert_eq!(nonsmooth_distributions(&a).len(), 7);
        assert!(by_name(&a, "delta").is_some());
        assert!(by_name(&a, "nope").is_none());
    }

    #[test]
    fn jump_synthesis_matches_sawtooth_profile() {
        // The jump law 1/(in) synthesizes to (pi - x)/sqrt(2 pi) on (0, 2 pi);
        // at x = pi/2 the truncated series is within the Dirichlet tail bound.
        let model = SpectralModel::circle(4096).unwrap();
        let suite = circle_suite(model, SUITE_SEED).unwrap();
        let jump = by_name(&suite, "jump").unwrap();
        let x = PI / 2.0;
        let mut val = Complex64::new(0.0, 0.0);
        for idx in 0..model.dim() {
            let n = model.circle_freq(idx);
            val += jump.dist.coeffs[idx] * Complex64::from_polar(1.0, n as f64 * x)
                / (2.0 * PI).sqrt();
        }
        let expected = (PI - x) / (2.0 * PI).sqrt();
        assert_abs_diff_eq!(val.re, expected, epsilon = 1e-3);
        assert_abs_diff_eq!(val.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn law_spot_values() {
        let model = SpectralModel::circle(16).unwrap();
        let suite = circle_suite(model, SUITE_SEED).unwrap();
        let root = 1.0 / (2.0 * PI).sqrt();
        let at = |name: &str, n: i64| by_name(&suite, name).unwrap().dist.coeffs
            [model.circle_index(n).unwrap()];
        assert_eq!(at("delta", 7), Complex64::new(root, 0.0));
        assert_eq!(at("dprime", 3), Complex64::new(0.0, 3.0 * root));
        assert_eq!(at("delta_pi", 3), Complex64::new(-root, 0.0));
        assert_eq!(at("delta_pi", -4), Complex64::new(root, 0.0));
        assert_eq!(at("jump", 0), Complex64::new(0.0, 0.0));
        assert_eq!(at("const", 0), Complex64::new(1.0, 0.0));
        assert_eq!(at("const", 1), Complex64::new(0.0, 0.0));
        assert_eq!(at("bandlim8", 9), Complex64::new(0.0, 0.0));
        assert_eq!(at("bandlim8", -8), Complex64::new(1.0 / 9.0, 0.0));
        assert_abs_diff_eq!(at("growing", 2).re, 5.0f64.powf(0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(at("h05rp", 4).norm(), 17.0f64.sqrt().recip(), epsilon = 1e-15);
    }

    #[test]
    fn sawtooth_coefficients_carry_the_full_l2_mass() {
        // Parseval at truncation K: the l2 mass is pi^4/3 minus the tail
        // 2 pi^2 sum_{m>K} 1/m^2, and that tail sits in (1/(K+1), 1/K).
        let model = SpectralModel::torus2(64).unwrap();
        let s = torus_sawtooth_x(model).unwrap();
        let mass: f64 = s.coeffs.iter().map(|c| c.norm_sqr()).sum();
        let k = 64.0;
        let missing = PI.powi(4) / 3.0 - mass;
        assert!(missing > 2.0 * PI * PI / (k + 1.0));
        assert!(missing < 2.0 * PI * PI / k);
    }

    #[test]
    fn torus_law_spot_values() {
        let model = SpectralModel::torus2(8).unwrap();
        let d = torus_delta(model).unwrap();
        assert_eq!(
            d.coeffs[model.torus_index(3, -5).unwrap()],
            Complex64::new(1.0 / (2.0 * PI), 0.0)
        );
        let tj = torus_tensor_jump(model).unwrap();
        assert_eq!(
            tj.coeffs[model.torus_index(2, -3).unwrap()],
            Complex64::new(1.0 / 6.0, 0.0)
        );
        assert_eq!(
            tj.coeffs[model.torus_index(0, 5).unwrap()],
            Complex64::new(0.0, 0.0)
        );
        let st = torus_sawtooth_x(model).unwrap();
        assert_eq!(
            st.coeffs[model.torus_index(-4, 0).unwrap()],
            Complex64::new(0.0, PI / 4.0)
        );
        assert_eq!(
            st.coeffs[model.torus_index(1, 2).unwrap()],
            Complex64::new(0.0, 0.0)
        );
        let g = torus_gaussian(model).unwrap();
        assert_abs_diff_eq!(
            g.coeffs[model.torus_index(1, 2).unwrap()].re,
            (-5.0f64 / 50.0).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn random_ops_are_seeded_and_row_damped() {
        let model = SpectralModel::circle(16).unwrap();
        let mut r1 = lab_rng(9);
        let mut r2 = lab_rng(9);
        let a = random_row_decay_op(model, &mut r1).unwrap();
        let b = random_row_decay_op(model, &mut r2).unwrap();
        assert_eq!(a.to_dense_matrix().unwrap(), b.to_dense_matrix().unwrap());

        let m = a.to_dense_matrix().unwrap();
        let row_l2 = |l: usize| -> f64 {
            (0..model.dim()).map(|c| m[(l, c)].norm_sqr()).sum::<f64>().sqrt()
        };
        // Rows at the band edge are damped by (1+K^2)^2 relative to the
        // center; gaussian mass concentrates, so a factor-2 bracket holds.
        let center = row_l2(model.circle_index(0).unwrap());
        let edge = row_l2(model.circle_index(16).unwrap());
        let damp = (1.0 + 256.0_f64).powi(2);
        assert!(center / edge > damp / 2.0);
        assert!(center / edge < damp * 2.0);

        // Box-Muller sanity: mean square of many draws is near 1.
        let mut rng = lab_rng(11);
        let n = 4000;
        let ms: f64 = (0..n).map(|_| complex_gaussian(&mut rng).norm_sqr()).sum::<f64>()
            / n as f64;
        assert!((ms - 1.0).abs() < 0.08, "mean square {ms}");
    }
}
