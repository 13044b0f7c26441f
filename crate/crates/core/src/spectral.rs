//! Finite Fourier models of smooth functions, distributions and smoothing
//! operators on the circle and the flat 2-torus, with Sobolev gradings and
//! weighted Hilbert-Schmidt operator norms.
//!
//! Index conventions. Circle: frequencies n = -K..K stored at n+K, basis
//! phi_n = e^{inx}/sqrt(2 pi), eigenvalue n^2. Torus: (m1,m2) in [-K,K]^2
//! stored lexicographically at (m1+K)(2K+1)+(m2+K), basis e^{i m.x}/(2 pi),
//! eigenvalue m1^2+m2^2.

use crate::error::{LabError, Result};
use crate::net::FunctionNet;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manifold {
    Circle,
    Torus2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralModel {
    manifold: Manifold,
    truncation: usize,
}

/// Dense matrices beyond this coefficient dimension are refused; the torus
/// at laboratory truncation must stay diagonal or operate through vectors.
pub const MAX_DENSE_DIM: usize = 5000;

impl SpectralModel {
    pub fn circle(truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(LabError::Parameter("truncation must be positive".into()));
        }
        Ok(Self {
            manifold: Manifold::Circle,
            truncation,
        })
    }

    pub fn torus2(truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(LabError::Parameter("truncation must be positive".into()));
        }
        Ok(Self {
            manifold: Manifold::Torus2,
            truncation,
        })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn side(&self) -> usize {
        2 * self.truncation + 1
    }

    pub fn dim(&self) -> usize {
        match self.manifold {
            Manifold::Circle => self.side(),
            Manifold::Torus2 => self.side() * self.side(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self.manifold {
            Manifold::Circle => 2.0 * PI,
            Manifold::Torus2 => 4.0 * PI * PI,
        }
    }

    pub fn lambda(&self, idx: usize) -> f64 {
        match self.manifold {
            Manifold::Circle => {
                let n = idx as i64 - self.truncation as i64;
                (n * n) as f64
            }
            Manifold::Torus2 => {
                let (m1, m2) = self.torus_freq(idx);
                (m1 * m1 + m2 * m2) as f64
            }
        }
    }

    pub fn circle_index(&self, n: i64) -> Option<usize> {
        let k = self.truncation as i64;
        if n.abs() <= k {
            Some((n + k) as usize)
        } else {
            None
        }
    }

    pub fn circle_freq(&self, idx: usize) -> i64 {
        idx as i64 - self.truncation as i64
    }

    pub fn torus_index(&self, m1: i64, m2: i64) -> Option<usize> {
        let k = self.truncation as i64;
        if m1.abs() <= k && m2.abs() <= k {
            Some(((m1 + k) * (2 * k + 1) + (m2 + k)) as usize)
        } else {
            None
        }
    }

    pub fn torus_freq(&self, idx: usize) -> (i64, i64) {
        let side = self.side() as i64;
        let k = self.truncation as i64;
        let m1 = idx as i64 / side - k;
        let m2 = idx as i64 % side - k;
        (m1, m2)
    }

    pub fn zeros(&self) -> Array1<Complex64> {
        Array1::zeros(self.dim())
    }
}

/// Range of Sobolev indices used by the graded estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradingConfig {
    pub n_max: i32,
}

impl GradingConfig {
    pub fn new(n_max: i32) -> Result<Self> {
        if n_max < 4 {
            return Err(LabError::Parameter(format!(
                "grading needs n_max >= 4, got {n_max}"
            )));
        }
        Ok(Self { n_max })
    }

    pub fn default_lab() -> Self {
        Self { n_max: 4 }
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> {
        0..=self.n_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    pub model: SpectralModel,
    pub coeffs: Array1<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDistribution {
    pub model: SpectralModel,
    pub coeffs: Array1<Complex64>,
    /// Optional growth declaration s: |c_m| <= C (1+lambda_m)^{s/2}.
    pub declared_growth: Option<f64>,
}

fn check_len(model: &SpectralModel, coeffs: &Array1<Complex64>) -> Result<()> {
    if coeffs.len() != model.dim() {
        return Err(LabError::ShapeMismatch(format!(
            "coefficient vector of length {} for model dimension {}",
            coeffs.len(),
            model.dim()
        )));
    }
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(LabError::Parameter("non-finite coefficient".into()));
    }
    Ok(())
}

impl SpectralFunction {
    pub fn new(model: SpectralModel, coeffs: Array1<Complex64>) -> Result<Self> {
        check_len(&model, &coeffs)?;
        Ok(Self { model, coeffs })
    }

    pub fn sobolev_norm(&self, n: i32) -> f64 {
        sobolev_norm_s(&self.model, &self.coeffs, n as f64)
    }

    pub fn as_distribution(&self) -> SpectralDistribution {
        SpectralDistribution {
            model: self.model,
            coeffs: self.coeffs.clone(),
            declared_growth: None,
        }
    }
}

impl SpectralDistribution {
    pub fn new(model: SpectralModel, coeffs: Array1<Complex64>) -> Result<Self> {
        check_len(&model, &coeffs)?;
        Ok(Self {
            model,
            coeffs,
            declared_growth: None,
        })
    }

    pub fn with_growth(mut self, s: f64) -> Result<Self> {
        // The declaration must actually hold at truncation (C = 1 reading is
        // too strict; we certify with the smallest C and require it finite).
        let mut c = 0.0f64;
        for (idx, coef) in self.coeffs.iter().enumerate() {
            let w = (1.0 + self.model.lambda(idx)).powf(s / 2.0);
            c = c.max(coef.norm() / w);
        }
        if !c.is_finite() {
            return Err(LabError::Parameter(
                "declared growth bound cannot be certified".into(),
            ));
        }
        self.declared_growth = Some(s);
        Ok(self)
    }

    pub fn sobolev_norm(&self, n: i32) -> f64 {
        sobolev_norm_s(&self.model, &self.coeffs, n as f64)
    }
}

/// Graded norm with a real exponent; integer n is the public grading, real
/// exponents serve the half-integer tameness searches.
pub fn sobolev_norm_s(model: &SpectralModel, coeffs: &Array1<Complex64>, s: f64) -> f64 {
    let mut acc = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let w = (1.0 + model.lambda(idx)).powf(s);
        acc += w * c.norm_sqr();
    }
    acc.sqrt()
}

pub fn sobolev_norm(model: &SpectralModel, coeffs: &Array1<Complex64>, n: i32) -> f64 {
    sobolev_norm_s(model, coeffs, n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    Dense(Array2<Complex64>),
    Diagonal(Array1<Complex64>),
}

/// A smoothing operator in the Fourier eigenbasis. Entry (l,m) maps input
/// coefficient m to output coefficient l.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingOp {
    pub model: SpectralModel,
    kind: OpKind,
}

impl SmoothingOp {
    pub fn dense(model: SpectralModel, matrix: Array2<Complex64>) -> Result<Self> {
        if model.dim() > MAX_DENSE_DIM {
            return Err(LabError::Parameter(format!(
                "dense operator refused at dimension {} (cap {MAX_DENSE_DIM})",
                model.dim()
            )));
        }
        if matrix.nrows() != model.dim() || matrix.ncols() != model.dim() {
            return Err(LabError::ShapeMismatch(format!(
                "operator is {}x{} for model dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                model.dim()
            )));
        }
        Ok(Self {
            model,
            kind: OpKind::Dense(matrix),
        })
    }

    pub fn diagonal(model: SpectralModel, diag: Array1<Complex64>) -> Result<Self> {
        if diag.len() != model.dim() {
            return Err(LabError::ShapeMismatch(format!(
                "diagonal of length {} for model dimension {}",
                diag.len(),
                model.dim()
            )));
        }
        Ok(Self {
            model,
            kind: OpKind::Diagonal(diag),
        })
    }

    pub fn zero(model: SpectralModel) -> Self {
        Self {
            model,
            kind: OpKind::Diagonal(Array1::zeros(model.dim())),
        }
    }

    /// Rank-one operator w (x) v: u maps to <v, u> w (v conjugated).
    pub fn rank_one(
        model: SpectralModel,
        w: &Array1<Complex64>,
        v: &Array1<Complex64>,
    ) -> Result<Self> {
        check_len(&model, w)?;
        check_len(&model, v)?;
        let dim = model.dim();
        if dim > MAX_DENSE_DIM {
            return Err(LabError::Parameter(format!(
                "rank-one dense operator refused at dimension {dim}"
            )));
        }
        let mut m = Array2::zeros((dim, dim));
        for l in 0..dim {
            for c in 0..dim {
                m[(l, c)] = w[l] * v[c].conj();
            }
        }
        Self::dense(model, m)
    }

    pub fn kind(&self) -> &OpKind {
        &self.kind
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.kind, OpKind::Diagonal(_))
    }

    pub fn apply(&self, v: &Array1<Complex64>) -> Result<Array1<Complex64>> {
        if v.len() != self.model.dim() {
            return Err(LabError::ShapeMismatch(format!(
                "vector of length {} for model dimension {}",
                v.len(),
                self.model.dim()
            )));
        }
        Ok(match &self.kind {
            OpKind::Dense(m) => m.dot(v),
            OpKind::Diagonal(d) => d * v,
        })
    }

    pub fn adjoint(&self) -> Self {
        match &self.kind {
            OpKind::Dense(m) => Self {
                model: self.model,
                kind: OpKind::Dense(m.t().mapv(|c| c.conj())),
            },
            OpKind::Diagonal(d) => Self {
                model: self.model,
                kind: OpKind::Diagonal(d.mapv(|c| c.conj())),
            },
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        match &self.kind {
            OpKind::Dense(m) => Self {
                model: self.model,
                kind: OpKind::Dense(m.mapv(|c| c * s)),
            },
            OpKind::Diagonal(d) => Self {
                model: self.model,
                kind: OpKind::Diagonal(d.mapv(|c| c * s)),
            },
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(LabError::ModelMismatch("operator sum".into()));
        }
        Ok(match (&self.kind, &other.kind) {
            (OpKind::Diagonal(a), OpKind::Diagonal(b)) => Self {
                model: self.model,
                kind: OpKind::Diagonal(a + b),
            },
            _ => {
                let a = self.to_dense_matrix()?;
                let b = other.to_dense_matrix()?;
                Self {
                    model: self.model,
                    kind: OpKind::Dense(a + b),
                }
            }
        })
    }

    pub fn to_dense_matrix(&self) -> Result<Array2<Complex64>> {
        let dim = self.model.dim();
        if dim > MAX_DENSE_DIM {
            return Err(LabError::Parameter(format!(
                "refusing to densify a dimension-{dim} operator"
            )));
        }
        Ok(match &self.kind {
            OpKind::Dense(m) => m.clone(),
            OpKind::Diagonal(d) => Array2::from_diag(d),
        })
    }
}

pub fn apply_op(t: &SmoothingOp, u: &SpectralDistribution) -> Result<SpectralFunction> {
    if t.model != u.model {
        return Err(LabError::ModelMismatch(
            "operator and distribution live on different models".into(),
        ));
    }
    Ok(SpectralFunction {
        model: u.model,
        coeffs: t.apply(&u.coeffs)?,
    })
}

fn check_restriction(big: &SpectralModel, small: &SpectralModel) -> Result<()> {
    if big.manifold() != small.manifold() {
        return Err(LabError::ModelMismatch(
            "restriction across manifolds".into(),
        ));
    }
    if small.truncation() > big.truncation() {
        return Err(LabError::Parameter(format!(
            "restriction target truncation {} exceeds source {}",
            small.truncation(),
            big.truncation()
        )));
    }
    Ok(())
}

/// Position of the small-model frequency `idx` inside the big model.
fn embed_index(big: &SpectralModel, small: &SpectralModel, idx: usize) -> usize {
    match small.manifold() {
        Manifold::Circle => big.circle_index(small.circle_freq(idx)).unwrap(),
        Manifold::Torus2 => {
            let (m1, m2) = small.torus_freq(idx);
            big.torus_index(m1, m2).unwrap()
        }
    }
}

/// Drop every coefficient with frequency beyond the target truncation.
pub fn restrict_coeffs(
    big: &SpectralModel,
    small: &SpectralModel,
    coeffs: &Array1<Complex64>,
) -> Result<Array1<Complex64>> {
    check_restriction(big, small)?;
    if coeffs.len() != big.dim() {
        return Err(LabError::ShapeMismatch(format!(
            "coefficient vector of length {} for model dimension {}",
            coeffs.len(),
            big.dim()
        )));
    }
    let mut out = small.zeros();
    for idx in 0..small.dim() {
        out[idx] = coeffs[embed_index(big, small, idx)];
    }
    Ok(out)
}

pub fn restrict_distribution(
    u: &SpectralDistribution,
    small: SpectralModel,
) -> Result<SpectralDistribution> {
    let coeffs = restrict_coeffs(&u.model, &small, &u.coeffs)?;
    Ok(SpectralDistribution {
        model: small,
        coeffs,
        declared_growth: u.declared_growth,
    })
}

/// Compress an operator onto the lower truncation: keep the rows and columns
/// indexed by the surviving frequencies.
pub fn restrict_op(t: &SmoothingOp, small: SpectralModel) -> Result<SmoothingOp> {
    check_restriction(&t.model, &small)?;
    match t.kind() {
        OpKind::Diagonal(d) => {
            let mut out = small.zeros();
            for idx in 0..small.dim() {
                out[idx] = d[embed_index(&t.model, &small, idx)];
            }
            SmoothingOp::diagonal(small, out)
        }
        OpKind::Dense(m) => {
            let dim = small.dim();
            let mut out = Array2::zeros((dim, dim));
            for l in 0..dim {
                let lb = embed_index(&t.model, &small, l);
                for c in 0..dim {
                    out[(l, c)] = m[(lb, embed_index(&t.model, &small, c))];
                }
            }
            SmoothingOp::dense(small, out)
        }
    }
}

/// ||(1+Laplacian)^{p/2} T (1+Laplacian)^{q/2}||_HS.
pub fn weighted_hs_norm(t: &SmoothingOp, p: i32, q: i32) -> f64 {
    let model = &t.model;
    match t.kind() {
        OpKind::Dense(m) => {
            let dim = model.dim();
            let left: Vec<f64> = (0..dim).map(|l| (1.0 + model.lambda(l)).powi(p)).collect();
            let right: Vec<f64> = (0..dim).map(|c| (1.0 + model.lambda(c)).powi(q)).collect();
            let mut acc = 0.0;
            for l in 0..dim {
                let wl = left[l];
                for c in 0..dim {
                    acc += wl * right[c] * m[(l, c)].norm_sqr();
                }
            }
            acc.sqrt()
        }
        OpKind::Diagonal(d) => {
            let mut acc = 0.0;
            for (idx, v) in d.iter().enumerate() {
                let w = (1.0 + model.lambda(idx)).powi(p + q);
                acc += w * v.norm_sqr();
            }
            acc.sqrt()
        }
    }
}

/// Real-exponent variant of the weighted HS norm, for bounds that pair an
/// operator against a non-integer Sobolev index.
pub fn weighted_hs_norm_s(t: &SmoothingOp, p: f64, q: f64) -> f64 {
    let model = &t.model;
    match t.kind() {
        OpKind::Dense(m) => {
            let dim = model.dim();
            let left: Vec<f64> = (0..dim).map(|l| (1.0 + model.lambda(l)).powf(p)).collect();
            let right: Vec<f64> = (0..dim).map(|c| (1.0 + model.lambda(c)).powf(q)).collect();
            let mut acc = 0.0;
            for l in 0..dim {
                let wl = left[l];
                for c in 0..dim {
                    acc += wl * right[c] * m[(l, c)].norm_sqr();
                }
            }
            acc.sqrt()
        }
        OpKind::Diagonal(d) => {
            let mut acc = 0.0;
            for (idx, v) in d.iter().enumerate() {
                acc += (1.0 + model.lambda(idx)).powf(p + q) * v.norm_sqr();
            }
            acc.sqrt()
        }
    }
}

/// The graded operator norm: sum of the weighted HS norms over the 3n+1
/// integer pairs p+q = n with p,q >= -n.
pub fn op_graded_norm(t: &SmoothingOp, n: i32) -> Result<f64> {
    if n < 0 {
        return Err(LabError::Parameter(format!(
            "graded operator norms are indexed by n >= 0, got {n}"
        )));
    }
    let mut acc = 0.0;
    for p in -n..=2 * n {
        let q = n - p;
        acc += weighted_hs_norm(t, p, q);
    }
    Ok(acc)
}

pub fn op_trace(t: &SmoothingOp) -> Complex64 {
    match t.kind() {
        OpKind::Dense(m) => (0..t.model.dim()).map(|i| m[(i, i)]).sum(),
        OpKind::Diagonal(d) => d.iter().sum(),
    }
}

/// Largest polynomial degree accepted by the trace action.
pub const MAX_TRACE_POLY_DEGREE: usize = 16;

/// Pointwise action of a polynomially bounded map through the trace:
/// each slot phi(T_eps) is multiplied by poly(Tr T_eps).
pub fn trace_action(
    poly: &[f64],
    phi_eval: &FunctionNet,
    unit_trace_net: &crate::net::ScalarNet,
) -> Result<FunctionNet> {
    if poly.is_empty() || poly.len() > MAX_TRACE_POLY_DEGREE + 1 {
        return Err(LabError::Parameter(format!(
            "trace polynomial must have degree 0..={MAX_TRACE_POLY_DEGREE}"
        )));
    }
    if phi_eval.grid() != unit_trace_net.grid() {
        return Err(LabError::GridMismatch(
            "evaluation net and trace net use different grids".into(),
        ));
    }
    let traces = unit_trace_net.values();
    let slots = phi_eval
        .slots()
        .iter()
        .zip(traces)
        .map(|(slot, &tr)| {
            let mut val = 0.0;
            for &c in poly.iter().rev() {
                val = val * tr + c;
            }
            slot.mapv(|x| x * val)
        })
        .collect();
    FunctionNet::new(phi_eval.grid().clone(), slots)
}

/// Diagonal operator from a frequency symbol, with a certified growth bound
/// |symbol| <= c_bound (1+lambda)^{order/2} at truncation.
pub fn multiplier_psido(
    model: SpectralModel,
    symbol: impl Fn(usize) -> Complex64,
    order: i32,
    c_bound: f64,
) -> Result<SmoothingOp> {
    let dim = model.dim();
    let mut diag = Array1::zeros(dim);
    for idx in 0..dim {
        let s = symbol(idx);
        let w = (1.0 + model.lambda(idx)).powf(order as f64 / 2.0);
        if s.norm() > c_bound * w * (1.0 + 1e-12) {
            return Err(LabError::Parameter(format!(
                "symbol violates order-{order} growth bound at index {idx}: |s|={} > {}",
                s.norm(),
                c_bound * w
            )));
        }
        diag[idx] = s;
    }
    SmoothingOp::diagonal(model, diag)
}

/// The multiplier (1+Laplacian)^{m/2} as a diagonal operator.
pub fn laplacian_power(model: SpectralModel, m: i32) -> SmoothingOp {
    let dim = model.dim();
    let diag = Array1::from_iter(
        (0..dim).map(|idx| Complex64::new((1.0 + model.lambda(idx)).powf(m as f64 / 2.0), 0.0)),
    );
    SmoothingOp::diagonal(model, diag).expect("diagonal length matches")
}

/// Truncated product of two coefficient vectors (frequency convolution with
/// the basis-normalization factor 1/sqrt(volume)). Kept direct; the torus is
/// guarded by the dense cap since the full product is only used on small
/// models.
pub fn multiply_truncated(
    model: &SpectralModel,
    a: &Array1<Complex64>,
    b: &Array1<Complex64>,
) -> Result<Array1<Complex64>> {
    check_len(model, a)?;
    check_len(model, b)?;
    let scale = 1.0 / model.volume().sqrt();
    match model.manifold() {
        Manifold::Circle => {
            let k = model.truncation() as i64;
            let side = model.side();
            let mut out = Array1::<Complex64>::zeros(side);
            for l in -k..=k {
                let mut acc = Complex64::new(0.0, 0.0);
                // a_m * b_{l-m} over admissible m
                let m_lo = (-k).max(l - k);
                let m_hi = k.min(l + k);
                for m in m_lo..=m_hi {
                    let am = a[(m + k) as usize];
                    if am.norm_sqr() == 0.0 {
                        continue;
                    }
                    acc += am * b[(l - m + k) as usize];
                }
                out[(l + k) as usize] = acc * scale;
            }
            Ok(out)
        }
        Manifold::Torus2 => {
            if model.dim() > MAX_DENSE_DIM {
                return Err(LabError::Parameter(
                    "full torus products are restricted to small truncations; \
                     use sparse window multiplication instead"
                        .into(),
                ));
            }
            let k = model.truncation() as i64;
            let mut out = model.zeros();
            for idx_a in 0..model.dim() {
                let am = a[idx_a];
                if am.norm_sqr() == 0.0 {
                    continue;
                }
                let (a1, a2) = model.torus_freq(idx_a);
                for idx_b in 0..model.dim() {
                    let bm = b[idx_b];
                    if bm.norm_sqr() == 0.0 {
                        continue;
                    }
                    let (b1, b2) = model.torus_freq(idx_b);
                    let (l1, l2) = (a1 + b1, a2 + b2);
                    if l1.abs() <= k && l2.abs() <= k {
                        let idx = model.torus_index(l1, l2).expect("in range");
                        out[idx] += am * bm * scale;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Multiply a torus coefficient vector by a sparse function given as
/// (m1, m2, coefficient) triples. This is the window path used at the
/// laboratory truncation where dense anything is out of the question.
pub fn multiply_sparse_torus(
    model: &SpectralModel,
    sparse: &[(i64, i64, Complex64)],
    u: &Array1<Complex64>,
) -> Result<Array1<Complex64>> {
    if model.manifold() != Manifold::Torus2 {
        return Err(LabError::ModelMismatch(
            "sparse torus multiply needs a torus model".into(),
        ));
    }
    check_len(model, u)?;
    let k = model.truncation() as i64;
    let scale = 1.0 / model.volume().sqrt();
    let mut out = model.zeros();
    for idx_u in 0..model.dim() {
        let um = u[idx_u];
        if um.norm_sqr() == 0.0 {
            continue;
        }
        let (u1, u2) = model.torus_freq(idx_u);
        for &(f1, f2, fc) in sparse {
            let (l1, l2) = (u1 + f1, u2 + f2);
            if l1.abs() <= k && l2.abs() <= k {
                let idx = ((l1 + k) * (2 * k + 1) + (l2 + k)) as usize;
                out[idx] += fc * um * scale;
            }
        }
    }
    Ok(out)
}

/// Multiplication operator M_f as a matrix (Toeplitz in the circle case).
pub fn mult_operator(f: &SpectralFunction) -> Result<SmoothingOp> {
    let model = f.model;
    let dim = model.dim();
    if dim > MAX_DENSE_DIM {
        return Err(LabError::Parameter(
            "multiplication operators are materialized dense; use \
             multiply_truncated / multiply_sparse_torus at this dimension"
                .into(),
        ));
    }
    let scale = Complex64::new(1.0 / model.volume().sqrt(), 0.0);
    let mut m = Array2::zeros((dim, dim));
    match model.manifold() {
        Manifold::Circle => {
            let k = model.truncation() as i64;
            for l in -k..=k {
                for c in -k..=k {
                    let d = l - c;
                    if d.abs() <= k {
                        m[((l + k) as usize, (c + k) as usize)] = f.coeffs[(d + k) as usize] * scale;
                    }
                }
            }
        }
        Manifold::Torus2 => {
            let k = model.truncation() as i64;
            for li in 0..dim {
                let (l1, l2) = model.torus_freq(li);
                for ci in 0..dim {
                    let (c1, c2) = model.torus_freq(ci);
                    let (d1, d2) = (l1 - c1, l2 - c2);
                    if d1.abs() <= k && d2.abs() <= k {
                        let di = model.torus_index(d1, d2).expect("in range");
                        m[(li, ci)] = f.coeffs[di] * scale;
                    }
                }
            }
        }
    }
    SmoothingOp::dense(model, m)
}

/// phi(T) := T P realized at the matrix level: the composition that lets
/// pseudodifferential operators act on evaluators from the right.
pub fn compose_with_psido(t: &SmoothingOp, p: &SmoothingOp) -> Result<SmoothingOp> {
    if t.model != p.model {
        return Err(LabError::ModelMismatch("composition".into()));
    }
    let model = t.model;
    Ok(match (t.kind(), p.kind()) {
        (OpKind::Diagonal(a), OpKind::Diagonal(b)) => SmoothingOp {
            model,
            kind: OpKind::Diagonal(a * b),
        },
        (OpKind::Dense(a), OpKind::Diagonal(b)) => {
            let mut m = a.clone();
            for ((_, c), v) in m.indexed_iter_mut() {
                *v *= b[c];
            }
            SmoothingOp {
                model,
                kind: OpKind::Dense(m),
            }
        }
        (OpKind::Diagonal(a), OpKind::Dense(b)) => {
            let mut m = b.clone();
            for ((r, _), v) in m.indexed_iter_mut() {
                *v *= a[r];
            }
            SmoothingOp {
                model,
                kind: OpKind::Dense(m),
            }
        }
        (OpKind::Dense(a), OpKind::Dense(b)) => SmoothingOp {
            model,
            kind: OpKind::Dense(a.dot(b)),
        },
    })
}

/// Tensor-algebra evaluation: the pointwise product of the regularized
/// factors T(u_0)...T(u_r), truncated back to the model.
pub fn tensor_evaluator(
    us: &[SpectralDistribution],
    t: &SmoothingOp,
) -> Result<SpectralFunction> {
    let first = us
        .first()
        .ok_or_else(|| LabError::Parameter("tensor evaluation needs at least one factor".into()))?;
    let mut acc = apply_op(t, first)?.coeffs;
    for u in &us[1..] {
        if u.model != t.model {
            return Err(LabError::ModelMismatch("tensor factor".into()));
        }
        let next = apply_op(t, u)?.coeffs;
        acc = multiply_truncated(&t.model, &acc, &next)?;
    }
    SpectralFunction::new(t.model, acc)
}
