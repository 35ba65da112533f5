//! Binary vector store and its companion files.
//!
//! Store layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"SGVSTORE"
//! 8       4     version (u32) = 1
//! 12      4     dim (u32)
//! 16      1     dtype (u8), 1 = f32 little-endian
//! 17      3     reserved, zero
//! 20      8     count (u64)
//! 28      ...   count records of: 32-byte content hash, dim × f32
//! ```
//!
//! Each content hash occurs once. The manifest is a JSON-lines file of
//! `{"request_id", "hash"}` records mapping requests to store entries, and the
//! request file is a JSON-lines file of `{"request_id", "text", "start", "end"}`.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ContentHash, EmbeddingRequest};

pub const MAGIC: &[u8; 8] = b"SGVSTORE";
pub const VERSION: u32 = 1;
pub const DTYPE_F32_LE: u8 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a vector store (bad magic)")]
    BadMagic,
    #[error("unsupported store version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype {0}")]
    UnsupportedDtype(u8),
    #[error("store truncated: expected {expected} records, read {read}")]
    Truncated { expected: u64, read: u64 },
    #[error("vector has dim {got}, store has dim {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("duplicate hash {0} in store")]
    DuplicateHash(ContentHash),
    #[error("{path}: line {line}: {reason}")]
    Line { path: String, line: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorStore {
    dim: usize,
    records: Vec<(ContentHash, Vec<f32>)>,
    index: HashMap<ContentHash, usize>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        VectorStore {
            dim,
            records: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, hash: &ContentHash) -> bool {
        self.index.contains_key(hash)
    }

    pub fn get(&self, hash: &ContentHash) -> Option<&[f32]> {
        self.index.get(hash).map(|&i| self.records[i].1.as_slice())
    }

    /// Records in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&ContentHash, &[f32])> {
        self.records.iter().map(|(h, v)| (h, v.as_slice()))
    }

    /// Adds a vector; returns `false` (and keeps the old value) if the hash exists.
    pub fn insert(&mut self, hash: ContentHash, values: Vec<f32>) -> Result<bool, StoreError> {
        if values.len() != self.dim {
            return Err(StoreError::DimMismatch {
                expected: self.dim,
                got: values.len(),
            });
        }
        if self.index.contains_key(&hash) {
            return Ok(false);
        }
        self.index.insert(hash, self.records.len());
        self.records.push((hash, values));
        Ok(true)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), StoreError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&[DTYPE_F32_LE, 0, 0, 0])?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for (h, v) in &self.records {
            w.write_all(&h.0)?;
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, StoreError> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => StoreError::BadMagic,
            _ => StoreError::Io(e),
        })?;
        if &header[0..8] != MAGIC {
            return Err(StoreError::BadMagic);
        }
        let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
        let version = u32_at(8);
        if version != VERSION {
            return Err(StoreError::UnsupportedVersion(version));
        }
        let dim = u32_at(12) as usize;
        if header[16] != DTYPE_F32_LE {
            return Err(StoreError::UnsupportedDtype(header[16]));
        }
        let count = u64::from_le_bytes(header[20..28].try_into().expect("8 bytes"));
        let mut store = VectorStore::new(dim);
        let mut buf = vec![0u8; 32 + 4 * dim];
        for read in 0..count {
            r.read_exact(&mut buf).map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => StoreError::Truncated { expected: count, read },
                _ => StoreError::Io(e),
            })?;
            let hash = ContentHash(buf[..32].try_into().expect("32 bytes"));
            let values = buf[32..]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            if !store.insert(hash, values)? {
                return Err(StoreError::DuplicateHash(hash));
            }
        }
        Ok(store)
    }

    pub fn read(path: &Path) -> Result<Self, StoreError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Writes atomically: a temporary file next to `path` is renamed over it.
    pub fn write(&self, path: &Path) -> Result<(), StoreError> {
        write_atomic(path, |w| self.write_to(w))
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

fn write_atomic<F>(path: &Path, body: F) -> Result<(), StoreError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), StoreError>,
{
    let tmp = tmp_path(path);
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub request_id: String,
    pub hash: String,
}

impl ManifestEntry {
    pub fn for_request(r: &EmbeddingRequest) -> Self {
        ManifestEntry {
            request_id: r.request_id.clone(),
            hash: r.content_hash().to_hex(),
        }
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, StoreError> {
    let f = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| StoreError::Line {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StoreError> {
    write_atomic(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, item).map_err(io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, StoreError> {
    read_jsonl(path)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), StoreError> {
    write_jsonl(path, entries)
}

pub fn read_requests(path: &Path) -> Result<Vec<EmbeddingRequest>, StoreError> {
    read_jsonl(path)
}

pub fn write_requests(path: &Path, requests: &[EmbeddingRequest]) -> Result<(), StoreError> {
    write_jsonl(path, requests)
}
