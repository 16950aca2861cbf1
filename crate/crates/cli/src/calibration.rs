//! Per-qubit and per-edge device calibration data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ghz_core::simulator::QubitNoise;
use ghz_core::{NoiseModel, QubitLabel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub timestamp: String,
    pub qubit: Vec<QubitCalibration>,
    #[serde(default)]
    pub edge: Vec<EdgeCalibration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitCalibration {
    pub label: QubitLabel,
    pub t1_us: f64,
    pub t2_us: f64,
    #[serde(default)]
    pub readout_error: f64,
}

impl QubitCalibration {
    pub fn noise(&self) -> QubitNoise {
        QubitNoise {
            t1_us: self.t1_us,
            t2_us: self.t2_us,
            readout_error: self.readout_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeCalibration {
    pub control: QubitLabel,
    pub target: QubitLabel,
    pub cnot_error: f64,
}

impl CalibrationFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text)
            .map_err(|e| CliError::config("calibration", e.message().to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config { path: p, message } => {
                CliError::config(format!("{}: {p}", path.display()), message)
            }
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (i, q) in self.qubit.iter().enumerate() {
            let path = format!("qubit[{i}]");
            if !seen.insert(q.label) {
                return Err(CliError::config(
                    path,
                    format!("duplicate label {}", q.label),
                ));
            }
            q.noise()
                .validate()
                .map_err(|e| CliError::config(path, e.to_string()))?;
        }
        for (i, e) in self.edge.iter().enumerate() {
            if !(0.0..=1.0).contains(&e.cnot_error) {
                return Err(CliError::config(
                    format!("edge[{i}].cnot_error"),
                    format!("{} is not a probability", e.cnot_error),
                ));
            }
        }
        Ok(())
    }

    pub fn t2_map(&self) -> BTreeMap<QubitLabel, f64> {
        self.qubit.iter().map(|q| (q.label, q.t2_us)).collect()
    }

    /// Pure dephasing with each qubit's T2 and nothing else.
    pub fn dephasing_model(&self) -> Result<NoiseModel> {
        let mut model = NoiseModel::noiseless();
        for q in &self.qubit {
            model = model
                .with_qubit(q.label, QubitNoise::dephasing(q.t2_us))
                .map_err(|e| CliError::config("calibration", e.to_string()))?;
        }
        Ok(model)
    }

    /// Mean CNOT error over the listed edges; the simulator applies a single
    /// two-qubit depolarizing probability.
    pub fn mean_cnot_error(&self) -> Option<f64> {
        (!self.edge.is_empty())
            .then(|| self.edge.iter().map(|e| e.cnot_error).sum::<f64>() / self.edge.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = r#"
        timestamp = "2018-03-01T12:00:00Z"
        [[qubit]]
        label = 1
        t1_us = 50.0
        t2_us = 40.0
        readout_error = 0.05
        [[qubit]]
        label = 2
        t1_us = 60.0
        t2_us = 60.0
        [[edge]]
        control = 1
        target = 2
        cnot_error = 0.03
    "#;

    #[test]
    fn parses_and_validates() {
        let f = CalibrationFile::from_toml_str(FILE).unwrap();
        assert_eq!(f.qubit.len(), 2);
        assert_eq!(f.t2_map()[&2], 60.0);
        assert_eq!(f.mean_cnot_error(), Some(0.03));
        let model = f.dephasing_model().unwrap();
        assert_eq!(model.qubit(1).t2_us, 40.0);
        assert!(model.qubit(1).t1_us.is_infinite());
    }

    #[test]
    fn rejects_unphysical_entries() {
        let bad = FILE.replace("t2_us = 40.0", "t2_us = 140.0");
        let e = CalibrationFile::from_toml_str(&bad).unwrap_err();
        assert!(e.to_string().starts_with("qubit[0]:"), "{e}");
        let bad = FILE.replace("cnot_error = 0.03", "cnot_error = 1.5");
        assert!(CalibrationFile::from_toml_str(&bad).is_err());
        let bad = FILE.replace("label = 2", "label = 1");
        assert!(CalibrationFile::from_toml_str(&bad).is_err());
    }
}
