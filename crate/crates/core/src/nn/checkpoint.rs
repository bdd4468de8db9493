//! Versioned binary checkpoints: model tensors, optimizer state and the
//! training seed in one file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic            8 bytes  "MPATCKPT"
//! version          u32
//! seed             u64
//! adam step        u64
//! adam hyper       4 x f64  (learning rate, beta1, beta2, epsilon)
//! config length    u32
//! config           UTF-8 JSON bytes
//! tensor count     u32
//! per tensor:
//!   name length    u32
//!   name           UTF-8 bytes
//!   rank           u32
//!   extents        rank x u64
//!   data           product(extents) x f64
//! ```
//!
//! Optimizer moments are stored as ordinary tensor records named
//! `adam.m.<param>` and `adam.v.<param>` after the model tensors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::adam::{AdamHyper, AdamState};
use super::params::ParamSet;
use super::tensor::Tensor;
use super::NnError;

const MAGIC: &[u8; 8] = b"MPATCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

const MAX_NAME_BYTES: u32 = 1 << 16;
const MAX_CONFIG_BYTES: u32 = 1 << 24;
const MAX_TENSOR_SCALARS: u64 = 1 << 30;

/// In-memory image of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub adam_step: u64,
    pub hyper: AdamHyper,
    /// Model configuration, serialized as JSON by the caller.
    pub config_json: String,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    /// Snapshot a model (and optionally its optimizer state).
    pub fn capture<M: ParamSet>(
        model: &M,
        seed: u64,
        config_json: String,
        adam: Option<&AdamState>,
    ) -> Self {
        let mut tensors: Vec<(String, Tensor)> = model
            .params()
            .into_iter()
            .map(|(n, t)| (n, t.clone()))
            .collect();
        let (adam_step, hyper) = match adam {
            Some(state) => {
                for (name, m, v) in &state.moments {
                    tensors.push((format!("adam.m.{name}"), m.clone()));
                    tensors.push((format!("adam.v.{name}"), v.clone()));
                }
                (state.step, state.hyper)
            }
            None => (0, AdamHyper::default()),
        };
        Checkpoint {
            seed,
            adam_step,
            hyper,
            config_json,
            tensors,
        }
    }

    /// Find a tensor by exact name.
    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Copy stored tensors into `model`'s parameters, matching by name.
    /// Every model parameter must be present with the right shape.
    pub fn apply_to<M: ParamSet>(&self, model: &mut M) -> Result<(), NnError> {
        for (name, param) in model.params_mut() {
            let stored = self.tensor(&name).ok_or_else(|| NnError::ParamMismatch {
                context: "Checkpoint::apply_to",
                detail: format!("missing tensor {name:?}"),
            })?;
            if stored.shape() != param.shape() {
                return Err(NnError::ShapeMismatch {
                    context: "Checkpoint::apply_to",
                    expected: param.shape().to_vec(),
                    got: stored.shape().to_vec(),
                });
            }
            param.data_mut().copy_from_slice(stored.data());
        }
        Ok(())
    }

    /// Rebuild optimizer state for `model` from the stored moment tensors.
    /// Returns a fresh zero state when the checkpoint carries no moments.
    pub fn adam_state<M: ParamSet>(&self, model: &M) -> Result<AdamState, NnError> {
        let mut state = AdamState::new(model, self.hyper);
        let has_moments = self
            .tensors
            .iter()
            .any(|(n, _)| n.starts_with("adam.m."));
        if !has_moments {
            return Ok(state);
        }
        state.step = self.adam_step;
        for (name, m, v) in &mut state.moments {
            let sm = self
                .tensor(&format!("adam.m.{name}"))
                .ok_or_else(|| NnError::ParamMismatch {
                    context: "Checkpoint::adam_state",
                    detail: format!("missing first moment for {name:?}"),
                })?;
            let sv = self
                .tensor(&format!("adam.v.{name}"))
                .ok_or_else(|| NnError::ParamMismatch {
                    context: "Checkpoint::adam_state",
                    detail: format!("missing second moment for {name:?}"),
                })?;
            if sm.shape() != m.shape() || sv.shape() != v.shape() {
                return Err(NnError::ShapeMismatch {
                    context: "Checkpoint::adam_state",
                    expected: m.shape().to_vec(),
                    got: sm.shape().to_vec(),
                });
            }
            *m = sm.clone();
            *v = sv.clone();
        }
        Ok(state)
    }
}

/// Serialize a checkpoint to `path`, replacing any existing file.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), NnError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
    w.write_u64::<LittleEndian>(ckpt.seed)?;
    w.write_u64::<LittleEndian>(ckpt.adam_step)?;
    w.write_f64::<LittleEndian>(ckpt.hyper.learning_rate)?;
    w.write_f64::<LittleEndian>(ckpt.hyper.beta1)?;
    w.write_f64::<LittleEndian>(ckpt.hyper.beta2)?;
    w.write_f64::<LittleEndian>(ckpt.hyper.epsilon)?;
    let config = ckpt.config_json.as_bytes();
    w.write_u32::<LittleEndian>(config.len() as u32)?;
    w.write_all(config)?;
    w.write_u32::<LittleEndian>(ckpt.tensors.len() as u32)?;
    for (name, tensor) in &ckpt.tensors {
        let name_bytes = name.as_bytes();
        w.write_u32::<LittleEndian>(name_bytes.len() as u32)?;
        w.write_all(name_bytes)?;
        w.write_u32::<LittleEndian>(tensor.shape().len() as u32)?;
        for &d in tensor.shape() {
            w.write_u64::<LittleEndian>(d as u64)?;
        }
        for &v in tensor.data() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Deserialize a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::BadCheckpoint("bad magic bytes".to_string()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != CHECKPOINT_VERSION {
        return Err(NnError::BadCheckpoint(format!(
            "unsupported version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let seed = r.read_u64::<LittleEndian>()?;
    let adam_step = r.read_u64::<LittleEndian>()?;
    let hyper = AdamHyper {
        learning_rate: r.read_f64::<LittleEndian>()?,
        beta1: r.read_f64::<LittleEndian>()?,
        beta2: r.read_f64::<LittleEndian>()?,
        epsilon: r.read_f64::<LittleEndian>()?,
    };
    let config_len = r.read_u32::<LittleEndian>()?;
    if config_len > MAX_CONFIG_BYTES {
        return Err(NnError::BadCheckpoint(format!(
            "config blob of {config_len} bytes exceeds limit"
        )));
    }
    let mut config = vec![0u8; config_len as usize];
    r.read_exact(&mut config)?;
    let config_json = String::from_utf8(config)
        .map_err(|e| NnError::BadCheckpoint(format!("config is not UTF-8: {e}")))?;
    let count = r.read_u32::<LittleEndian>()?;
    let mut tensors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = r.read_u32::<LittleEndian>()?;
        if name_len > MAX_NAME_BYTES {
            return Err(NnError::BadCheckpoint(format!(
                "tensor name of {name_len} bytes exceeds limit"
            )));
        }
        let mut name = vec![0u8; name_len as usize];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|e| NnError::BadCheckpoint(format!("tensor name is not UTF-8: {e}")))?;
        let rank = r.read_u32::<LittleEndian>()?;
        if rank > 8 {
            return Err(NnError::BadCheckpoint(format!(
                "tensor {name:?} has implausible rank {rank}"
            )));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        let mut scalars: u64 = 1;
        for _ in 0..rank {
            let d = r.read_u64::<LittleEndian>()?;
            scalars = scalars.saturating_mul(d);
            shape.push(d as usize);
        }
        if scalars > MAX_TENSOR_SCALARS {
            return Err(NnError::BadCheckpoint(format!(
                "tensor {name:?} with {scalars} scalars exceeds limit"
            )));
        }
        let mut data = vec![0.0f64; scalars as usize];
        r.read_f64_into::<LittleEndian>(&mut data)?;
        let tensor = Tensor::from_vec(&shape, data)
            .map_err(|e| NnError::BadCheckpoint(format!("tensor {name:?}: {e}")))?;
        tensors.push((name, tensor));
    }
    let mut trailing = [0u8; 1];
    match r.read(&mut trailing)? {
        0 => {}
        _ => {
            return Err(NnError::BadCheckpoint(
                "trailing bytes after final tensor".to_string(),
            ))
        }
    }
    Ok(Checkpoint {
        seed,
        adam_step,
        hyper,
        config_json,
        tensors,
    })
}
