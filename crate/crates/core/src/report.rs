//! Dataset exchange and report emission: long-format CSV for seminorm nets,
//! JSON views in the published field layouts, and the binary container for
//! sampled functions and kernels.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::evaluator::TamenessFit;
use crate::grid::EpsilonGrid;
use crate::net::{assess_net, classify_single, Classification, ClassifyThresholds, ScalarNet};
use crate::sampled::{AxisGrid, SampledFunction};
use crate::spectral::{Manifold, OpKind, SmoothingOp, SpectralDistribution, SpectralModel};
use crate::units::{UnitNet, UnitProvenance};

pub const SAMPLED_MAGIC: [u8; 4] = *b"RGLB";
pub const SAMPLED_VERSION: u32 = 1;

/// Hard cap on container payloads so a corrupt header cannot demand an
/// absurd allocation before the truncation check fires.
const MAX_CONTAINER_VALUES: usize = 1 << 27;

#[derive(Debug, Serialize, Deserialize)]
struct NetRow {
    epsilon: f64,
    seminorm_id: String,
    value: f64,
}

/// Long-format net export, one row per (epsilon, seminorm) pair. Seminorms
/// are emitted in key order, epsilons in grid order, so identical input
/// yields identical bytes.
pub fn write_net_csv<W: Write>(sink: W, nets: &BTreeMap<String, ScalarNet>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for (id, net) in nets {
        for (eps, value) in net.grid().values().iter().zip(net.values()) {
            w.serialize(NetRow {
                epsilon: *eps,
                seminorm_id: id.clone(),
                value: *value,
            })?;
        }
    }
    w.flush().map_err(io::Error::from)?;
    Ok(())
}

/// Fit an epsilon column back onto a geometric grid. The first two rows fix
/// the start and ratio; every later row must agree to a relative 1e-9.
fn geometric_grid(eps: &[f64]) -> Result<EpsilonGrid> {
    if eps.len() < 2 {
        return Err(LabError::Format(
            "net needs at least two epsilon rows per seminorm".into(),
        ));
    }
    let grid = EpsilonGrid::new(eps[0], eps[1] / eps[0], eps.len())?;
    for (j, (&have, want)) in eps.iter().zip(grid.values()).enumerate() {
        if ((have - want) / want).abs() > 1e-9 {
            return Err(LabError::Format(format!(
                "epsilon column is not geometric: row {j} holds {have}, expected {want}"
            )));
        }
    }
    Ok(grid)
}

/// Parse a long-format net CSV. Every seminorm must ride the same geometric
/// epsilon column.
pub fn read_net_csv<R: Read>(source: R) -> Result<BTreeMap<String, ScalarNet>> {
    let mut reader = csv::Reader::from_reader(source);
    let mut eps_by_id: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut values_by_id: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in reader.deserialize::<NetRow>() {
        let row = row?;
        eps_by_id
            .entry(row.seminorm_id.clone())
            .or_default()
            .push(row.epsilon);
        values_by_id.entry(row.seminorm_id).or_default().push(row.value);
    }
    let Some(reference) = eps_by_id.values().next() else {
        return Err(LabError::Format("net file holds no rows".into()));
    };
    let grid = geometric_grid(reference)?;
    for (id, eps) in &eps_by_id {
        if eps.len() != reference.len()
            || eps
                .iter()
                .zip(reference)
                .any(|(a, b)| ((a - b) / b).abs() > 1e-12)
        {
            return Err(LabError::Format(format!(
                "seminorm {id} rides a different epsilon column"
            )));
        }
    }
    values_by_id
        .into_iter()
        .map(|(id, values)| Ok((id, ScalarNet::new(grid.clone(), values)?)))
        .collect()
}

/// Log-log fit summary in the published field layout. An identically zero
/// net carries no fit; its non-finite placeholders serialize to JSON null.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub classification: Classification,
}

pub fn classification_report(
    net: &ScalarNet,
    thresholds: &ClassifyThresholds,
) -> Result<ClassificationReport> {
    let assessment = assess_net(net, thresholds)?;
    let classification = classify_single(net, thresholds)?;
    let (slope, intercept, r_squared) = match assessment.estimate {
        Some(est) => (est.slope, est.intercept, est.r_squared),
        None => (f64::INFINITY, f64::NEG_INFINITY, f64::NAN),
    };
    Ok(ClassificationReport {
        slope,
        intercept,
        r_squared,
        classification,
    })
}

/// Tameness estimate in the published field layout.
#[derive(Debug, Clone, Serialize)]
struct TamenessJson {
    degree: f64,
    k: u32,
    b: i32,
    #[serde(rename = "C_table")]
    c_table: Vec<(i32, f64)>,
    residuals: Vec<f64>,
}

/// JSON view of a tameness fit; an undetermined fit is null.
pub fn tameness_json(fit: &TamenessFit) -> serde_json::Value {
    match fit {
        TamenessFit::Fitted(est) => serde_json::to_value(TamenessJson {
            degree: est.degree,
            k: est.power,
            b: est.base,
            c_table: est.constants.clone(),
            residuals: est.residuals.clone(),
        })
        .expect("tameness view serializes"),
        TamenessFit::Undetermined => serde_json::Value::Null,
    }
}

fn model_from(manifold: Manifold, truncation: usize) -> Result<SpectralModel> {
    match manifold {
        Manifold::Circle => SpectralModel::circle(truncation),
        Manifold::Torus2 => SpectralModel::torus2(truncation),
    }
}

/// Band coefficients in the documented enumeration: circle n = -K..K,
/// torus lexicographic (m1, m2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralJson {
    pub manifold: Manifold,
    #[serde(rename = "K")]
    pub truncation: usize,
    pub coeffs: Vec<(f64, f64)>,
}

pub fn distribution_to_json(u: &SpectralDistribution) -> SpectralJson {
    SpectralJson {
        manifold: u.model.manifold(),
        truncation: u.model.truncation(),
        coeffs: u.coeffs.iter().map(|z| (z.re, z.im)).collect(),
    }
}

pub fn distribution_from_json(j: &SpectralJson) -> Result<SpectralDistribution> {
    let model = model_from(j.manifold, j.truncation)?;
    if j.coeffs.len() != model.dim() {
        return Err(LabError::ShapeMismatch(format!(
            "{} coefficients for model dimension {}",
            j.coeffs.len(),
            model.dim()
        )));
    }
    let coeffs = Array1::from_iter(j.coeffs.iter().map(|&(re, im)| Complex64::new(re, im)));
    SpectralDistribution::new(model, coeffs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorEntries {
    /// Row-major (re, im) pairs over the model enumeration, length dim^2.
    Dense(Vec<(f64, f64)>),
    /// Multiplier values over the model enumeration, length dim.
    Diagonal(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    pub manifold: Manifold,
    #[serde(rename = "K")]
    pub truncation: usize,
    pub entries: OperatorEntries,
}

pub fn op_to_json(t: &SmoothingOp) -> OperatorJson {
    let entries = match t.kind() {
        OpKind::Diagonal(d) => OperatorEntries::Diagonal(d.iter().map(|z| (z.re, z.im)).collect()),
        OpKind::Dense(mat) => {
            let mut flat = Vec::with_capacity(mat.nrows() * mat.ncols());
            for row in mat.rows() {
                flat.extend(row.iter().map(|z| (z.re, z.im)));
            }
            OperatorEntries::Dense(flat)
        }
    };
    OperatorJson {
        manifold: t.model.manifold(),
        truncation: t.model.truncation(),
        entries,
    }
}

pub fn op_from_json(j: &OperatorJson) -> Result<SmoothingOp> {
    let model = model_from(j.manifold, j.truncation)?;
    let dim = model.dim();
    match &j.entries {
        OperatorEntries::Diagonal(v) => {
            let diag = Array1::from_iter(v.iter().map(|&(re, im)| Complex64::new(re, im)));
            SmoothingOp::diagonal(model, diag)
        }
        OperatorEntries::Dense(v) => {
            if v.len() != dim * dim {
                return Err(LabError::ShapeMismatch(format!(
                    "{} dense entries for model dimension {dim}",
                    v.len()
                )));
            }
            let flat: Vec<Complex64> = v.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
            let mat = Array2::from_shape_vec((dim, dim), flat).expect("length checked");
            SmoothingOp::dense(model, mat)
        }
    }
}

/// Unit net as a JSON document: header plus one operator blob per epsilon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitJson {
    pub provenance: UnitProvenance,
    pub grid: EpsilonGrid,
    pub ops: Vec<OperatorJson>,
}

pub fn unit_to_json(unit: &UnitNet) -> UnitJson {
    UnitJson {
        provenance: unit.provenance().clone(),
        grid: unit.grid().clone(),
        ops: unit.ops().iter().map(op_to_json).collect(),
    }
}

pub fn unit_from_json(j: &UnitJson) -> Result<UnitNet> {
    // deserialization bypasses the grid constructor, so revalidate
    let grid = EpsilonGrid::new(j.grid.eps0(), j.grid.ratio(), j.grid.count())?;
    let ops = j.ops.iter().map(op_from_json).collect::<Result<Vec<_>>>()?;
    UnitNet::new(grid, ops, j.provenance.clone())
}

/// Write the binary sampled-function container: magic, version, dims, then
/// per-axis half-width and step, then the row-major values, all
/// little-endian. Kernels ship as two-axis functions on (output, input).
pub fn write_sampled<W: Write>(mut sink: W, f: &SampledFunction) -> Result<()> {
    sink.write_all(&SAMPLED_MAGIC)?;
    sink.write_all(&SAMPLED_VERSION.to_le_bytes())?;
    sink.write_all(&(f.dims() as u32).to_le_bytes())?;
    for ax in f.axes() {
        sink.write_all(&(ax.half() as u64).to_le_bytes())?;
        sink.write_all(&ax.step().to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * f.values().len());
    for v in f.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&buf)?;
    Ok(())
}

fn read_chunk<R: Read, const N: usize>(source: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    source.read_exact(&mut buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            LabError::Format("container ends before its declared payload".into())
        } else {
            LabError::Io(e)
        }
    })?;
    Ok(buf)
}

pub fn read_sampled<R: Read>(mut source: R) -> Result<SampledFunction> {
    let magic: [u8; 4] = read_chunk(&mut source)?;
    if magic != SAMPLED_MAGIC {
        return Err(LabError::Format(
            "not a sampled-function container (bad magic)".into(),
        ));
    }
    let version = u32::from_le_bytes(read_chunk(&mut source)?);
    if version != SAMPLED_VERSION {
        return Err(LabError::Format(format!(
            "container version {version} is not supported (expected {SAMPLED_VERSION})"
        )));
    }
    let dims = u32::from_le_bytes(read_chunk(&mut source)?) as usize;
    if !(1..=3).contains(&dims) {
        return Err(LabError::Format(format!(
            "container declares {dims} axes; 1 to 3 are supported"
        )));
    }
    let mut axes = Vec::with_capacity(dims);
    let mut count = 1usize;
    for _ in 0..dims {
        let half = u64::from_le_bytes(read_chunk(&mut source)?);
        let step = f64::from_le_bytes(read_chunk(&mut source)?);
        let half = usize::try_from(half)
            .map_err(|_| LabError::Format("axis half-width overflows".into()))?;
        let ax = AxisGrid::new(half, step)?;
        count = count
            .checked_mul(ax.count())
            .filter(|&c| c <= MAX_CONTAINER_VALUES)
            .ok_or_else(|| {
                LabError::Format("container header declares an oversized payload".into())
            })?;
        axes.push(ax);
    }
    let mut payload = vec![0u8; 8 * count];
    source.read_exact(&mut payload).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            LabError::Format("container ends before its declared payload".into())
        } else {
            LabError::Io(e)
        }
    })?;
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk is 8 bytes")))
        .collect();
    SampledFunction::new(axes, values)
}
