//! Named tensor container and the `ADSW` binary weight format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "ADSW" | version: u32 = 1 | count: u32
//! count x { name_len: u16 | name: utf-8 | ndim: u8 | dims: u32 x ndim | values: f32 x prod(dims) }
//! crc32: u32 over every byte after the magic
//! ```

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::manifest::{Manifest, Section};

pub const MAGIC: &[u8; 4] = b"ADSW";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

impl WeightTensor {
    pub fn new(shape: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::invalid(format!(
                "shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }
}

/// Insertion-ordered so that serialization is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightStore {
    entries: IndexMap<String, WeightTensor>,
}

impl WeightStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: WeightTensor) -> Result<()> {
        let name = name.into();
        if name.len() > u16::MAX as usize {
            return Err(Error::format(format!("tensor name too long ({} bytes)", name.len())));
        }
        if tensor.shape.len() > u8::MAX as usize {
            return Err(Error::format(format!("tensor `{name}` has too many dimensions")));
        }
        if tensor.shape.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::format(format!("tensor `{name}` dimension exceeds u32")));
        }
        if self.entries.contains_key(&name) {
            return Err(Error::format(format!("duplicate tensor name `{name}`")));
        }
        self.entries.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&WeightTensor> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &WeightTensor)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path.as_ref())?;
        load_weights(&bytes)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), save_weights(self))?;
        Ok(())
    }
}

pub fn save_weights(store: &WeightStore) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for (name, t) in store.iter() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.shape.len() as u8);
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &t.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[MAGIC.len()..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &dyn Fn() -> String) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(format!("truncated payload in {}", what())));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &dyn Fn() -> String) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &dyn Fn() -> String) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &dyn Fn() -> String) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn load_weights(bytes: &[u8]) -> Result<WeightStore> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::format("bad magic: not an ADSW weight file"));
    }
    // magic + version + count + crc
    if bytes.len() < 16 {
        return Err(Error::format("truncated header"));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let actual = crc32fast::hash(&body[MAGIC.len()..]);
    if stored != actual {
        return Err(Error::format(format!(
            "CRC mismatch: file says {stored:#010x}, contents hash to {actual:#010x}"
        )));
    }

    let mut r = Reader { buf: body, pos: MAGIC.len() };
    let header = || "header".to_string();
    let version = r.u32(&header)?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported format version {version}")));
    }
    let count = r.u32(&header)?;

    let mut store = WeightStore::new();
    for index in 0..count {
        let at_index = || format!("entry #{index}");
        let name_len = r.u16(&at_index)? as usize;
        let name = std::str::from_utf8(r.take(name_len, &at_index)?)
            .map_err(|_| Error::format(format!("entry #{index}: name is not valid UTF-8")))?
            .to_string();
        let named = || format!("entry `{name}`");
        let ndim = r.u8(&named)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32(&named)? as usize);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4).map(|_| n))
            .ok_or_else(|| Error::format(format!("entry `{name}`: shape {shape:?} overflows")))?;
        let raw = r.take(numel * 4, &named)?;
        let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        if store.get(&name).is_some() {
            return Err(Error::format(format!("duplicate tensor name `{name}`")));
        }
        store.insert(name, WeightTensor { shape, values })?;
    }
    if r.pos != body.len() {
        return Err(Error::format(format!("{} unexpected bytes after the last entry", body.len() - r.pos)));
    }
    Ok(store)
}

/// Random weights for one manifest section, uniform with He-style variance
/// `2 / fan_in` and zero bias. Deterministic in `seed`.
pub fn synthetic_store(manifest: &Manifest, section: Section, seed: u64) -> WeightStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = WeightStore::new();
    for (name, shape) in manifest.tensor_shapes(section) {
        let numel: usize = shape.iter().product();
        let values = if shape.len() == 4 {
            let fan_in = (shape[1] * 9) as f32;
            let bound = (6.0 / fan_in).sqrt();
            (0..numel).map(|_| rng.random_range(-bound..bound)).collect()
        } else {
            (0..numel).map(|_| rng.random_range(-0.01..0.01)).collect()
        };
        store.insert(name, WeightTensor { shape, values }).expect("manifest names are unique");
    }
    store
}
