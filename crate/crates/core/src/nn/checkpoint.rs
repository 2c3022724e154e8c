//! Versioned parameter checkpoints.
//!
//! A checkpoint is a flat JSON document listing each parameter array with
//! its name, shape, and row-major values. Values round-trip bit-exactly
//! (serde_json prints the shortest representation that re-parses to the
//! same f64).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Parameterized;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub arrays: Vec<ParamArray>,
}

impl Checkpoint {
    pub fn capture(net: &impl Parameterized) -> Result<Self> {
        let specs = net.param_specs();
        let slices = net.param_slices();
        let mut arrays = Vec::with_capacity(specs.len());
        for (spec, slice) in specs.iter().zip(slices) {
            if slice.iter().any(|v| !v.is_finite()) {
                return Err(Error::Checkpoint(format!(
                    "parameter array '{}' contains a non-finite value",
                    spec.name
                )));
            }
            arrays.push(ParamArray {
                name: spec.name.clone(),
                shape: spec.shape.clone(),
                data: slice.to_vec(),
            });
        }
        Ok(Self {
            version: CHECKPOINT_VERSION,
            arrays,
        })
    }

    /// Restores parameters into a network of the same architecture.
    /// Names and shapes must match exactly, in order.
    pub fn restore(&self, net: &mut impl Parameterized) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        let specs = net.param_specs();
        if specs.len() != self.arrays.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} arrays, network expects {}",
                self.arrays.len(),
                specs.len()
            )));
        }
        for (spec, array) in specs.iter().zip(&self.arrays) {
            if spec.name != array.name || spec.shape != array.shape {
                return Err(Error::Checkpoint(format!(
                    "array mismatch: checkpoint has '{}' {:?}, network expects '{}' {:?}",
                    array.name, array.shape, spec.name, spec.shape
                )));
            }
            if array.data.len() != spec.len() {
                return Err(Error::Checkpoint(format!(
                    "array '{}' has {} values for shape {:?}",
                    array.name,
                    array.data.len(),
                    array.shape
                )));
            }
        }
        for (slice, array) in net.param_slices_mut().into_iter().zip(&self.arrays) {
            slice.copy_from_slice(&array.data);
        }
        Ok(())
    }
}

pub fn save_checkpoint(net: &impl Parameterized, path: impl AsRef<Path>) -> Result<()> {
    let ckpt = Checkpoint::capture(net)?;
    let json = serde_json::to_string(&ckpt)
        .map_err(|e| Error::Checkpoint(format!("serialize: {e}")))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(net: &mut impl Parameterized, path: impl AsRef<Path>) -> Result<()> {
    let json = fs::read_to_string(path)?;
    let ckpt: Checkpoint =
        serde_json::from_str(&json).map_err(|e| Error::Checkpoint(format!("parse: {e}")))?;
    ckpt.restore(net)
}
