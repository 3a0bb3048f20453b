//! Self-describing binary snapshot of a trained model.
//!
//! Layout, all integers little-endian u32:
//!
//! ```text
//! "PRGC" version
//! config_len config_text(utf8)
//! classes param_count
//! { name_len name rows cols rows·cols × f64 } × param_count
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diffmath::{Matrix, Parameterized};
use crate::error::{Error, Result};
use crate::model::ReidModel;
use crate::training::TrainConfig;

const MAGIC: &[u8; 4] = b"PRGC";
const VERSION: u32 = 1;

pub fn encode(config: &TrainConfig, model: &ReidModel) -> Vec<u8> {
    let mut buf = Vec::new();
    let put = |buf: &mut Vec<u8>, v: usize| buf.extend_from_slice(&(v as u32).to_le_bytes());
    buf.extend_from_slice(MAGIC);
    put(&mut buf, VERSION as usize);
    let text = config.to_text();
    put(&mut buf, text.len());
    buf.extend_from_slice(text.as_bytes());
    put(&mut buf, model.config().num_classes);
    let params = model.params();
    put(&mut buf, params.len());
    for (name, p) in params {
        put(&mut buf, name.len());
        buf.extend_from_slice(name.as_bytes());
        let (r, c) = p.shape();
        put(&mut buf, r);
        put(&mut buf, c);
        for v in p.value().data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn save(path: &Path, config: &TrainConfig, model: &ReidModel) -> Result<()> {
    fs::write(path, encode(config, model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(TrainConfig, ReidModel)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()?;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::Checkpoint("string is not utf-8".into()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(TrainConfig, ReidModel)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let config = TrainConfig::parse(&r.string()?)?;
    let classes = r.u32()?;
    let count = r.u32()?;
    let mut stored: HashMap<String, Matrix> = HashMap::with_capacity(count);
    for _ in 0..count {
        let name = r.string()?;
        let (rows, cols) = (r.u32()?, r.u32()?);
        let len = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Checkpoint(format!("{name}: shape {rows}x{cols} is too large")))?;
        let raw = r.take(len)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let m = Matrix::from_vec(rows, cols, data).map_err(|e| Error::Checkpoint(format!("{name}: {e}")))?;
        stored.insert(name, m);
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }

    // Values are overwritten below; the seed only has to produce the right shapes.
    let mut model = ReidModel::new(config.model_config(classes), &mut ChaCha8Rng::seed_from_u64(0))?;
    for (name, p) in model.params_mut() {
        let m = stored
            .remove(&name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter `{name}`")))?;
        if m.shape() != p.shape() {
            return Err(Error::Checkpoint(format!(
                "parameter `{name}` has shape {}x{}, model expects {}x{}",
                m.rows(),
                m.cols(),
                p.shape().0,
                p.shape().1
            )));
        }
        p.set_value(m)?;
    }
    if let Some(extra) = stored.keys().min() {
        return Err(Error::Checkpoint(format!("unexpected parameter `{extra}`")));
    }
    Ok((config, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appearance::AggregatorKind;
    use crate::cells::CellKind;

    fn model(cell: CellKind, aggregator: AggregatorKind) -> (TrainConfig, ReidModel) {
        let cfg = TrainConfig {
            n: 3,
            d: 4,
            cell,
            aggregator,
            seed: 5,
            ..TrainConfig::default()
        };
        let m = ReidModel::new(cfg.model_config(3), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        (cfg, m)
    }

    #[test]
    fn round_trip_restores_every_value() {
        for cell in CellKind::ALL {
            let (cfg, m) = model(cell, AggregatorKind::Ra);
            let (cfg2, m2) = decode(&encode(&cfg, &m)).unwrap();
            assert_eq!(cfg, cfg2);
            let a = m.params();
            let b = m2.params();
            assert_eq!(a.len(), b.len());
            for ((na, pa), (nb, pb)) in a.iter().zip(&b) {
                assert_eq!(na, nb);
                assert_eq!(pa.value(), pb.value());
            }
        }
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let (cfg, m) = model(CellKind::Rgcn, AggregatorKind::Ap);
        let bytes = encode(&cfg, &m);
        assert!(matches!(decode(&bytes[..bytes.len() - 3]), Err(Error::Checkpoint(_))));
        assert!(matches!(decode(b"nope"), Err(Error::Checkpoint(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
    }

    #[test]
    fn model_shape_mismatch_is_named() {
        let (cfg, m) = model(CellKind::Rgcn, AggregatorKind::Aa);
        // pretend the stored config asks for a different appearance size
        let other = TrainConfig { d: 5, ..cfg };
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        let text = other.to_text();
        bytes.extend_from_slice(&(text.len() as u32).to_le_bytes());
        bytes.extend_from_slice(text.as_bytes());
        let body = encode(&TrainConfig { d: 4, ..other.clone() }, &m);
        let skip = 4 + 4 + 4 + TrainConfig { d: 4, ..other }.to_text().len();
        bytes.extend_from_slice(&body[skip..]);
        let err = decode(&bytes).unwrap_err().to_string();
        assert!(err.contains("appearance/aa/score"), "{err}");
    }
}
