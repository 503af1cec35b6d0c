//! Little-endian binary layouts for dense vectors.
//!
//! `vectors.bin`:
//!
//! ```text
//! magic     8 bytes  "QSGVEC01"
//! dtype     u32      4 (f32)
//! matrices  u32      2 (input, output)
//! rows      u64
//! cols      u64
//! data      matrices × rows × cols × f32, row-major
//! ```
//!
//! `centroids.bin`:
//!
//! ```text
//! magic     8 bytes  "QSGCEN01"
//! mode      u32      0 = mean, 1 = sum
//! dim       u64
//! count     u64
//! entries   count × { key_len u32, key UTF-8, covered u32, dim × f64 }
//! ```

use crate::embeddings::{CentroidIndex, CentroidMode, QueryCentroid};

pub const VECTORS_MAGIC: &[u8; 8] = b"QSGVEC01";
pub const CENTROIDS_MAGIC: &[u8; 8] = b"QSGCEN01";

pub fn encode_matrices(rows: usize, cols: usize, matrices: &[&[f32]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + matrices.len() * rows * cols * 4);
    out.extend_from_slice(VECTORS_MAGIC);
    out.extend_from_slice(&4u32.to_le_bytes());
    out.extend_from_slice(&(matrices.len() as u32).to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for m in matrices {
        debug_assert_eq!(m.len(), rows * cols);
        for v in *m {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn finish(&self) -> Result<(), String> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(format!("{} trailing bytes", self.buf.len() - self.pos))
        }
    }
}

/// Returns `(rows, cols, matrices)`.
pub fn decode_matrices(bytes: &[u8]) -> Result<(usize, usize, Vec<Vec<f32>>), String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != VECTORS_MAGIC {
        return Err("bad magic".into());
    }
    let dtype = r.u32()?;
    if dtype != 4 {
        return Err(format!("unsupported element width {dtype}"));
    }
    let count = r.u32()? as usize;
    let rows = r.u64()? as usize;
    let cols = r.u64()? as usize;
    let len = rows.checked_mul(cols).ok_or("matrix too large")?;
    let mut matrices = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = r.take(len.checked_mul(4).ok_or("matrix too large")?)?;
        matrices.push(
            raw.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect(),
        );
    }
    r.finish()?;
    Ok((rows, cols, matrices))
}

pub fn encode_centroids(index: &CentroidIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CENTROIDS_MAGIC);
    let mode: u32 = match index.mode() {
        CentroidMode::Mean => 0,
        CentroidMode::Sum => 1,
    };
    out.extend_from_slice(&mode.to_le_bytes());
    out.extend_from_slice(&(index.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for e in index.entries() {
        out.extend_from_slice(&(e.query_key.len() as u32).to_le_bytes());
        out.extend_from_slice(e.query_key.as_bytes());
        out.extend_from_slice(&(e.covered_tokens as u32).to_le_bytes());
        for v in &e.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_centroids(bytes: &[u8]) -> Result<CentroidIndex, String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != CENTROIDS_MAGIC {
        return Err("bad magic".into());
    }
    let mode = match r.u32()? {
        0 => CentroidMode::Mean,
        1 => CentroidMode::Sum,
        other => return Err(format!("unknown centroid mode {other}")),
    };
    let dim = r.u64()? as usize;
    let count = r.u64()? as usize;
    let mut entries = Vec::new();
    for _ in 0..count {
        let key_len = r.u32()? as usize;
        let query_key = std::str::from_utf8(r.take(key_len)?)
            .map_err(|e| e.to_string())?
            .to_string();
        let covered_tokens = r.u32()? as usize;
        let vector = (0..dim).map(|_| r.f64()).collect::<Result<_, _>>()?;
        entries.push(QueryCentroid {
            query_key,
            vector,
            covered_tokens,
        });
    }
    r.finish()?;
    CentroidIndex::from_entries(mode, dim, entries).map_err(|e| e.to_string())
}
