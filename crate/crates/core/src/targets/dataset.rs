use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance of a generated dataset, stored next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DatasetMeta {
    pub kind: String,
    pub seed: Option<u64>,
    pub n: usize,
    pub d: usize,
    /// Coefficients used to simulate the responses, when there are any.
    pub true_coefficients: Option<Vec<f64>>,
    /// Other generator parameters by name.
    pub params: BTreeMap<String, f64>,
}

/// Design matrix (one row per observation) and responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

/// `data.csv` -> `data.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Writes `x_1..x_D,y` columns to `path` and the metadata to the sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.d()).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut row: Vec<String> = (0..self.d()).map(|j| format!("{:.17e}", self.x[(i, j)])).collect();
            row.push(format!("{:.17e}", self.y[i]));
            w.write_record(&row)?;
        }
        w.flush()?;
        serde_json::to_writer_pretty(File::create(sidecar_path(path))?, &self.meta)?;
        Ok(())
    }

    /// Reads a dataset written by [`Dataset::save`]. The sidecar is optional.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::config(format!("dataset {} does not exist", path.display())));
        }
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let d = header.len().checked_sub(1).ok_or_else(|| Error::config("dataset has no columns"))?;
        if header.get(d) != Some("y") {
            return Err(Error::config("last dataset column must be y"));
        }
        let mut xs = Vec::new();
        let mut y = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            for j in 0..d {
                xs.push(parse(&rec[j])?);
            }
            y.push(parse(&rec[d])?);
        }
        let n = y.len();
        let meta_path = sidecar_path(path);
        let meta = if meta_path.exists() {
            serde_json::from_reader(File::open(meta_path)?)?
        } else {
            DatasetMeta { kind: "unknown".into(), n, d, ..Default::default() }
        };
        Ok(Dataset { x: DMatrix::from_row_slice(n, d, &xs), y, meta })
    }
}

fn parse(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::config(format!("cannot parse {s:?} as a number")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = Dataset {
            x: DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2.5, 1e-300]),
            y: vec![1.0, 0.0],
            meta: DatasetMeta { kind: "test".into(), seed: Some(4), n: 2, d: 2, ..Default::default() },
        };
        ds.save(&path).unwrap();
        assert_eq!(Dataset::load(&path).unwrap(), ds);
    }

    #[test]
    fn missing_file_is_a_config_error() {
        assert!(matches!(Dataset::load(Path::new("/nonexistent/x.csv")), Err(Error::Config(_))));
    }
}
