use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Adam, EpochRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::models::{Model, ModelConfig};
use crate::numcore::Tensor;

pub const MAGIC: &[u8; 4] = b"MVNC";
pub const VERSION: u32 = 1;

const ADAM_M: &str = "adam.m:";
const ADAM_V: &str = "adam.v:";

/// Where the epoch shuffler stands, so a resumed run draws the same orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub word_pos: u128,
}

/// A complete training snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    /// Parameters in registration order.
    pub params: Vec<(String, Tensor)>,
    pub optimizer: Adam,
    pub rng: RngState,
    /// Completed epochs.
    pub epoch: usize,
    pub best_val_sdr: Option<f64>,
    pub epochs_since_best: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    model_config: ModelConfig,
    train_config: TrainConfig,
    optimizer_step: u64,
    rng: RngState,
    epoch: usize,
    best_val_sdr: Option<f64>,
    epochs_since_best: usize,
    history: Vec<EpochRecord>,
}

impl Checkpoint {
    /// Rebuilds the model, checking every parameter against the config.
    pub fn model(&self) -> Result<Model> {
        Model::from_params(self.model_config.clone(), self.params.iter().cloned())
    }

    /// Serializes to bytes.
    ///
    /// Layout, all little-endian: `MVNC`, u32 version, then the payload, then
    /// the CRC32 of the payload. The payload is a u32-length-prefixed JSON
    /// header followed by a u32 array count and the arrays. Each array is a
    /// u32-length-prefixed UTF-8 name, u32 rank, u64 extents and row-major
    /// f64 values. Parameters come first under their own names, then the
    /// Adam moments under `adam.m:` and `adam.v:` prefixes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            model_config: self.model_config.clone(),
            train_config: self.train_config.clone(),
            optimizer_step: self.optimizer.step,
            rng: self.rng,
            epoch: self.epoch,
            best_val_sdr: self.best_val_sdr,
            epochs_since_best: self.epochs_since_best,
            history: self.history.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut payload = Vec::new();
        put_u32(&mut payload, json.len())?;
        payload.extend_from_slice(&json);
        if self.optimizer.m.len() != self.params.len() || self.optimizer.v.len() != self.params.len() {
            return Err(Error::Input("optimizer state does not match the parameter list".into()));
        }
        put_u32(&mut payload, 3 * self.params.len())?;
        for (name, t) in &self.params {
            put_array(&mut payload, name, t.shape(), t.data())?;
        }
        for (prefix, moments) in [(ADAM_M, &self.optimizer.m), (ADAM_V, &self.optimizer.v)] {
            for ((name, t), values) in self.params.iter().zip(moments) {
                put_array(&mut payload, &format!("{prefix}{name}"), t.shape(), values)?;
            }
        }
        let mut out = Vec::with_capacity(payload.len() + 12);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Format(format!("checkpoint truncated: {} bytes", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format(format!("bad magic {:?}, expected \"MVNC\"", &bytes[..4])));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {version} is not supported (expected {VERSION})"
            )));
        }
        let (payload, crc) = bytes[8..].split_at(bytes.len() - 12);
        let stored = u32::from_le_bytes(crc.try_into().unwrap());
        let actual = crc32fast::hash(payload);
        if stored != actual {
            return Err(Error::Format(format!(
                "checkpoint CRC mismatch: stored {stored:08x}, computed {actual:08x} (truncated or corrupted)"
            )));
        }

        let mut r = Reader { buf: payload, pos: 0 };
        let json_len = r.u32("header length")? as usize;
        let header: Header = serde_json::from_slice(r.take(json_len, "header")?)
            .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
        let count = r.u32("array count")? as usize;
        let mut arrays = Vec::with_capacity(count);
        for _ in 0..count {
            arrays.push(r.array()?);
        }
        if r.pos != payload.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} trailing bytes",
                payload.len() - r.pos
            )));
        }

        let mut params = Vec::new();
        let mut m = Vec::new();
        let mut v = Vec::new();
        for (name, t) in arrays {
            if let Some(p) = name.strip_prefix(ADAM_M) {
                m.push((p.to_string(), t));
            } else if let Some(p) = name.strip_prefix(ADAM_V) {
                v.push((p.to_string(), t));
            } else {
                params.push((name, t));
            }
        }
        let align = |label: &str, moments: Vec<(String, Tensor)>| -> Result<Vec<Vec<f64>>> {
            if moments.len() != params.len() {
                return Err(Error::Format(format!(
                    "checkpoint has {} {label} arrays for {} parameters",
                    moments.len(),
                    params.len()
                )));
            }
            moments
                .into_iter()
                .zip(&params)
                .map(|((name, t), (pname, p))| {
                    if &name != pname || t.shape() != p.shape() {
                        Err(Error::Format(format!(
                            "{label} entry `{name}` does not match parameter `{pname}`"
                        )))
                    } else {
                        Ok(t.into_data())
                    }
                })
                .collect()
        };
        let m = align("adam.m", m)?;
        let v = align("adam.v", v)?;

        let ckpt = Checkpoint {
            model_config: header.model_config,
            train_config: header.train_config,
            params,
            optimizer: Adam {
                step: header.optimizer_step,
                m,
                v,
            },
            rng: header.rng,
            epoch: header.epoch,
            best_val_sdr: header.best_val_sdr,
            epochs_since_best: header.epochs_since_best,
            history: header.history,
        };
        // Name and shape audit against the recorded model config.
        ckpt.model()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        // Write beside the target and rename so a crash never leaves half a file.
        let tmp = path.with_extension("ckpt.tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::Path {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Input(format!("{v} does not fit the u32 field")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_array(out: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f64]) -> Result<()> {
    put_u32(out, name.len())?;
    out.extend_from_slice(name.as_bytes());
    put_u32(out, shape.len())?;
    for &d in shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("checkpoint truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn array(&mut self) -> Result<(String, Tensor)> {
        let len = self.u32("array name length")? as usize;
        let name = String::from_utf8(self.take(len, "array name")?.to_vec())
            .map_err(|_| Error::Format("array name is not UTF-8".into()))?;
        let rank = self.u32("rank")? as usize;
        if rank == 0 || rank > 8 {
            return Err(Error::Format(format!("array `{name}` has unsupported rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut count: usize = 1;
        for _ in 0..rank {
            let d = self.u64("extent")? as usize;
            count = count
                .checked_mul(d)
                .filter(|&c| c <= self.buf.len() / 8)
                .ok_or_else(|| Error::Format(format!("array `{name}` extents exceed the file size")))?;
            shape.push(d);
        }
        let raw = self.take(count * 8, &format!("values of `{name}`"))?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Tensor::new(shape, data).map_err(|e| Error::Format(format!("array `{name}`: {e}")))?;
        Ok((name, t))
    }
}
