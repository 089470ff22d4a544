//! Versioned binary checkpoint container.
//!
//! ```text
//! magic    8 bytes  "GRADMETA"
//! version  u32 LE
//! count    u32 LE   number of chunks
//! chunk*   kind u8 | name (u16 LE length + UTF-8) | payload (u64 LE length + bytes)
//! ```
//!
//! Model payload: input side, filter count, class count (u32 LE each), a
//! layer table (u32 count, then per layer: name, u64 weight count, u64 bias
//! count) and every parameter as little-endian f64 in layer order.
//! Dataset payload: concept name, u64 sample count, u8 labeled flag, labels,
//! then 784 little-endian f32 pixels per image.
//! Tensor payload: u32 rank, u64 per dimension, little-endian f64 values.

use std::path::Path;

use crate::data::{ConceptTag, Image28, LabeledSet, PIXELS};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::nn::{Architecture, ModelParams};

pub const MAGIC: &[u8; 8] = b"GRADMETA";
pub const VERSION: u32 = 1;

const KIND_MODEL: u8 = 1;
const KIND_DATASET: u8 = 2;
const KIND_TENSOR: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn vector(values: Vec<f64>) -> Self {
        Self {
            shape: vec![values.len()],
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Chunk {
    Model(ModelParams),
    Dataset(LabeledSet),
    Tensor(Tensor),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    pub chunks: Vec<(String, Chunk)>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, chunk: Chunk) -> &mut Self {
        self.chunks.push((name.into(), chunk));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Chunk> {
        self.chunks.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn model(&self, name: &str) -> Result<&ModelParams> {
        match self.get(name) {
            Some(Chunk::Model(m)) => Ok(m),
            _ => Err(Error::Format(format!("no model chunk `{name}`"))),
        }
    }

    pub fn dataset(&self, name: &str) -> Result<&LabeledSet> {
        match self.get(name) {
            Some(Chunk::Dataset(d)) => Ok(d),
            _ => Err(Error::Format(format!("no dataset chunk `{name}`"))),
        }
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        match self.get(name) {
            Some(Chunk::Tensor(t)) => Ok(t),
            _ => Err(Error::Format(format!("no tensor chunk `{name}`"))),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.chunks.len() as u32).to_le_bytes());
        for (name, chunk) in &self.chunks {
            let (kind, payload) = match chunk {
                Chunk::Model(m) => (KIND_MODEL, encode_model(m)),
                Chunk::Dataset(d) => (KIND_DATASET, encode_dataset(d)),
                Chunk::Tensor(t) => (KIND_TENSOR, encode_tensor(t)),
            };
            out.push(kind);
            put_str(&mut out, name);
            out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
            out.extend_from_slice(&payload);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let count = r.u32()? as usize;
        let mut chunks = Vec::with_capacity(count);
        for _ in 0..count {
            let kind = r.u8()?;
            let name = r.string()?;
            let len = r.u64()? as usize;
            let payload = r.take(len)?;
            let chunk = match kind {
                KIND_MODEL => Chunk::Model(decode_model(payload)?),
                KIND_DATASET => Chunk::Dataset(decode_dataset(payload)?),
                KIND_TENSOR => Chunk::Tensor(decode_tensor(payload)?),
                k => return Err(Error::Format(format!("unknown chunk kind {k}"))),
            };
            chunks.push((name, chunk));
        }
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after last chunk".into()));
        }
        Ok(Self { chunks })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

pub fn save_model(path: &Path, model: &ModelParams) -> Result<()> {
    let mut c = Container::new();
    c.push("model", Chunk::Model(model.clone()));
    c.write(path)
}

pub fn load_model(path: &Path) -> Result<ModelParams> {
    Container::read(path)?.model("model").cloned()
}

pub fn save_dataset(path: &Path, set: &LabeledSet) -> Result<()> {
    let mut c = Container::new();
    c.push(set.concept.as_str(), Chunk::Dataset(set.clone()));
    c.write(path)
}

pub fn load_dataset(path: &Path) -> Result<LabeledSet> {
    let c = Container::read(path)?;
    match c.chunks.into_iter().next() {
        Some((_, Chunk::Dataset(d))) => Ok(d),
        _ => Err(Error::Format(format!("{} holds no dataset chunk", path.display()))),
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn encode_model(m: &ModelParams) -> Vec<u8> {
    let arch = m.arch();
    let mut out = Vec::with_capacity(64 + m.len() * 8);
    for v in [arch.input_side, arch.filters, arch.classes] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    let slots = &m.layout().slots;
    out.extend_from_slice(&(slots.len() as u32).to_le_bytes());
    for s in slots {
        put_str(&mut out, s.name);
        out.extend_from_slice(&(s.weights.len() as u64).to_le_bytes());
        out.extend_from_slice(&(s.biases.len() as u64).to_le_bytes());
    }
    for v in m.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_model(payload: &[u8]) -> Result<ModelParams> {
    let mut r = Reader::new(payload);
    let arch = Architecture {
        input_side: r.u32()? as usize,
        filters: r.u32()? as usize,
        classes: r.u32()? as usize,
    };
    let expected = arch.layout();
    let n_layers = r.u32()? as usize;
    if n_layers != expected.slots.len() {
        return Err(Error::Format(format!("layer table has {n_layers} entries")));
    }
    for slot in &expected.slots {
        let name = r.string()?;
        let nw = r.u64()? as usize;
        let nb = r.u64()? as usize;
        if name != slot.name || nw != slot.weights.len() || nb != slot.biases.len() {
            return Err(Error::Format(format!(
                "layer table entry `{name}` ({nw}+{nb}) does not match architecture"
            )));
        }
    }
    let values = (0..expected.len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    if !r.is_empty() {
        return Err(Error::Format("trailing bytes in model chunk".into()));
    }
    ModelParams::from_values(arch, values)
}

fn encode_dataset(d: &LabeledSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + d.len() * (PIXELS * 4 + 1));
    put_str(&mut out, d.concept.as_str());
    out.extend_from_slice(&(d.len() as u64).to_le_bytes());
    out.push(u8::from(d.is_labeled()));
    out.extend_from_slice(&d.labels);
    for img in &d.images {
        for p in img.pixels() {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    out
}

fn decode_dataset(payload: &[u8]) -> Result<LabeledSet> {
    let mut r = Reader::new(payload);
    let concept: ConceptTag = r.string()?.parse()?;
    let n = r.u64()? as usize;
    let labeled = r.u8()? != 0;
    let labels = if labeled { r.take(n)?.to_vec() } else { Vec::new() };
    let mut images = Vec::with_capacity(n);
    for _ in 0..n {
        let raw = r.take(PIXELS * 4)?;
        let px = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        images.push(Image28::new(px)?);
    }
    if !r.is_empty() {
        return Err(Error::Format("trailing bytes in dataset chunk".into()));
    }
    LabeledSet::new(concept, images, labels)
}

fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + t.shape.len() * 8 + t.values.len() * 8);
    out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
    for &d in &t.shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in &t.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_tensor(payload: &[u8]) -> Result<Tensor> {
    let mut r = Reader::new(payload);
    let rank = r.u32()? as usize;
    let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let n: usize = shape.iter().product();
    let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    if !r.is_empty() {
        return Err(Error::Format("trailing bytes in tensor chunk".into()));
    }
    Ok(Tensor { shape, values })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("invalid UTF-8 name".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_noise, NoiseKind};

    #[test]
    fn model_round_trip_is_bit_exact() {
        let m = ModelParams::init(Architecture::standard(), 17).unwrap();
        let mut c = Container::new();
        c.push("model", Chunk::Model(m.clone()));
        let back = Container::decode(&c.encode()).unwrap();
        assert_eq!(back.model("model").unwrap(), &m);
    }

    #[test]
    fn dataset_and_tensor_round_trip() {
        let noise = gen_noise(NoiseKind::Normal, 3, 5).unwrap();
        let labeled = LabeledSet::new(ConceptTag::EmnistDigits, noise.images.clone(), vec![1, 2, 3]).unwrap();
        let mut c = Container::new();
        c.push("a", Chunk::Dataset(noise.clone()))
            .push("b", Chunk::Dataset(labeled.clone()))
            .push(
                "t",
                Chunk::Tensor(Tensor {
                    shape: vec![2, 2],
                    values: vec![1.0, -2.5, f64::MIN_POSITIVE, 3.0],
                }),
            );
        let back = Container::decode(&c.encode()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn corrupt_input_rejected() {
        let m = ModelParams::init(Architecture::standard(), 1).unwrap();
        let mut c = Container::new();
        c.push("model", Chunk::Model(m));
        let bytes = c.encode();
        assert!(Container::decode(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Container::decode(&bad).is_err());
        let mut bad = bytes;
        bad[8] = 9;
        assert!(Container::decode(&bad).is_err());
    }
}
