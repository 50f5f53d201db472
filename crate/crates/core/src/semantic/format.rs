//! The `.sfrw` weight file.
//!
//! ```text
//! "SFRW" | version: u32 | layer count: u32
//! per layer: kind: u8 (0 conv, 1 tconv) | in_ch, out_ch, kh, kw, stride: u32
//!            weights: f32 x (out*in*kh*kw), (out, in, kh, kw) order
//!            bias: f32 x out
//! trailer:   clip_min, clip_max, sigma_s: f32
//! ```
//!
//! All integers and reals are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use super::{Layer, LayerKind, SemanticModel};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SFRW";
pub const VERSION: u32 = 1;

const MAX_LAYERS: u32 = 64;
const MAX_DIM: u32 = 4096;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::CorruptModel(format!("truncated at byte {} (needed {n} more)", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::CorruptModel("size overflow".into()))?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }
}

/// Parses a model from bytes.
pub fn read_model(bytes: &[u8]) -> Result<SemanticModel> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::CorruptModel("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::CorruptModel(format!("unsupported version {version}")));
    }
    let count = cur.u32()?;
    if count > MAX_LAYERS {
        return Err(Error::CorruptModel(format!("implausible layer count {count}")));
    }
    let mut layers = Vec::with_capacity(count as usize);
    for i in 0..count {
        let kind = cur.u8()?;
        let kind = LayerKind::from_code(kind)
            .ok_or_else(|| Error::CorruptModel(format!("layer {i} has unknown kind {kind}")))?;
        let mut dims = [0u32; 5];
        for d in &mut dims {
            *d = cur.u32()?;
            if *d > MAX_DIM {
                return Err(Error::CorruptModel(format!("layer {i} has implausible dimension {d}")));
            }
        }
        let [in_ch, out_ch, kh, kw, stride] = dims.map(|d| d as usize);
        let weights = cur.f32s(out_ch * in_ch * kh * kw)?;
        let bias = cur.f32s(out_ch)?;
        layers.push(Layer { kind, in_ch, out_ch, kh, kw, stride, weights, bias });
    }
    let clip_min = cur.f32()?;
    let clip_max = cur.f32()?;
    let sigma_s = cur.f32()?;
    if cur.pos != bytes.len() {
        return Err(Error::CorruptModel(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    SemanticModel::new(layers, clip_min, clip_max, sigma_s)
}

/// Serializes a model.
pub fn write_model(model: &SemanticModel, out: &mut impl Write) -> std::io::Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&model.version().to_le_bytes());
    let layers: Vec<&Layer> = model.layers().collect();
    buf.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for l in layers {
        buf.push(l.kind.code());
        for d in [l.in_ch, l.out_ch, l.kh, l.kw, l.stride] {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in l.weights.iter().chain(&l.bias) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let (lo, hi) = model.clip_range();
    for v in [lo, hi, model.sigma_s()] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SemanticModel> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}

/// Writes to a temporary sibling first, then renames over `path`.
pub fn save_model(model: &SemanticModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("sfrw.tmp");
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        write_model(model, &mut f)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}
