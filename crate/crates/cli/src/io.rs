use std::fs;
use std::path::Path;

use serde::Deserialize;
use specbound_core::fluctuation::{Activation, Layer, VectorMap};
use specbound_core::numerics::Grid1D;
use specbound_core::transport::EmpiricalSample;
use specbound_core::Matrix;

use crate::CliError;

/// Raw bytes of every file read, in reading order, for the inputs digest.
#[derive(Default)]
pub struct Inputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        self.files.push((path.display().to_string(), bytes.clone()));
        Ok(bytes)
    }

    pub fn matrix(&mut self, path: &Path) -> Result<Matrix, CliError> {
        let rows = self.csv_rows(path)?;
        let width = rows[0].len();
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(malformed(path, format!("row {} has {} columns, expected {width}", i + 1, rows[i].len())));
        }
        Matrix::from_rows(&rows).map_err(|e| malformed(path, e.to_string()))
    }

    /// Points one per row; with `weighted` the last column holds the weight.
    /// Weights that do not sum to one are renormalized with a warning.
    pub fn sample(&mut self, path: &Path, weighted: bool, warnings: &mut Vec<String>) -> Result<EmpiricalSample, CliError> {
        let mut rows = self.csv_rows(path)?;
        let width = rows[0].len();
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(malformed(path, format!("row {} has {} columns, expected {width}", i + 1, rows[i].len())));
        }
        if !weighted {
            let points = Matrix::from_rows(&rows).map_err(|e| malformed(path, e.to_string()))?;
            return Ok(EmpiricalSample::uniform(points));
        }
        if width < 2 {
            return Err(malformed(path, "weighted samples need a point column and a weight column".into()));
        }
        let mut w: Vec<f64> = rows.iter_mut().map(|r| r.pop().expect("width checked")).collect();
        if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(malformed(path, "weights must be finite and nonnegative".into()));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(malformed(path, "weights sum to zero".into()));
        }
        if (total - 1.0).abs() > 1e-12 {
            warnings.push(format!("{}: weights summed to {total}; renormalized", path.display()));
            w.iter_mut().for_each(|x| *x /= total);
        }
        let points = Matrix::from_rows(&rows).map_err(|e| malformed(path, e.to_string()))?;
        Ok(EmpiricalSample::weighted(points, w)?)
    }

    /// Two columns `r, theta(r)` with increasing `r`.
    pub fn grid(&mut self, path: &Path) -> Result<Grid1D, CliError> {
        let rows = self.csv_rows(path)?;
        if rows.iter().any(|r| r.len() != 2) {
            return Err(malformed(path, "expected two columns".into()));
        }
        let (xs, ys) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
        Grid1D::new(xs, ys).map_err(|e| malformed(path, e.to_string()))
    }

    pub fn vector_map(&mut self, path: &Path) -> Result<VectorMap, CliError> {
        let bytes = self.read(path)?;
        let dto: MapDto = serde_json::from_slice(&bytes).map_err(|e| malformed(path, e.to_string()))?;
        let mut layers = Vec::with_capacity(dto.layers.len());
        for (i, l) in dto.layers.into_iter().enumerate() {
            let weights = Matrix::from_rows(&l.weights).map_err(|e| malformed(path, format!("layer {i}: {e}")))?;
            let bias = l.bias.unwrap_or_else(|| vec![0.0; weights.rows()]);
            let activation: Activation = match l.activation {
                Some(s) => s.parse().map_err(|e: specbound_core::Error| malformed(path, format!("layer {i}: {e}")))?,
                None => Activation::Identity,
            };
            layers.push(Layer::new(weights, bias, activation).map_err(|e| malformed(path, format!("layer {i}: {e}")))?);
        }
        VectorMap::new(layers).map_err(|e| malformed(path, e.to_string()))
    }

    fn csv_rows(&mut self, path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
        let bytes = self.read(path)?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(bytes.as_slice());
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| malformed(path, e.to_string()))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let row = record
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| malformed(path, format!("line {}: bad number {f:?}", i + 1))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(malformed(path, "no rows".into()));
        }
        Ok(rows)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDto {
    layers: Vec<LayerDto>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDto {
    weights: Vec<Vec<f64>>,
    bias: Option<Vec<f64>>,
    activation: Option<String>,
}

fn malformed(path: &Path, msg: String) -> CliError {
    CliError::Usage(format!("{}: {msg}", path.display()))
}

pub fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--{flag}: bad number {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(CliError::Usage(format!("--{flag}: empty list")));
    }
    Ok(v)
}

/// `name=lo:hi:n` with `n ≥ 1` evenly spaced points.
pub struct Sweep {
    pub name: String,
    pub values: Vec<f64>,
}

pub fn parse_sweep(s: &str) -> Result<Sweep, CliError> {
    let bad = || CliError::Usage(format!("--sweep expects name=lo:hi:n, got {s:?}"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    let values = if n == 1 {
        vec![lo]
    } else {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    };
    Ok(Sweep { name: name.trim().to_string(), values })
}
