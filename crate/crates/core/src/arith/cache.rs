//! Binary sieve cache.
//!
//! Layout (all integers little-endian):
//!   magic "RLAB" | version u16 | N u64
//!   | d: len u64, len*u64 | r2: len u64, len*u64 | omega: len u64, len*u64
//!   | squarefree: len u64, len bytes
//!   | k-count u64 | per k: k u64, len u64, len*u64
//!
//! Arrays hold entries for n = 1..=N in order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::ArithTables;

pub const CACHE_MAGIC: [u8; 4] = *b"RLAB";
pub const CACHE_VERSION: u16 = 1;

fn write_u64_array<W: Write>(w: &mut W, values: impl ExactSizeIterator<Item = u64>) -> Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u64_array<R: Read>(r: &mut R, expected_len: u64) -> Result<Vec<u64>> {
    let len = read_u64(r)?;
    if len != expected_len {
        return Err(Error::Cache(format!(
            "array length {len} does not match table limit {expected_len}"
        )));
    }
    let mut out = Vec::with_capacity(len as usize);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        out.push(u64::from_le_bytes(buf));
    }
    Ok(out)
}

pub fn write_cache(path: &Path, tables: &ArithTables) -> Result<()> {
    let (limit, d, r2, dk, omega, squarefree) = tables.parts();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&limit.to_le_bytes())?;
    write_u64_array(&mut w, d.iter().map(|&v| v as u64))?;
    write_u64_array(&mut w, r2.iter().map(|&v| v as u64))?;
    write_u64_array(&mut w, omega.iter().map(|&v| v as u64))?;
    w.write_all(&(squarefree.len() as u64).to_le_bytes())?;
    let packed: Vec<u8> = squarefree.iter().map(|&b| b as u8).collect();
    w.write_all(&packed)?;
    w.write_all(&(dk.len() as u64).to_le_bytes())?;
    for (&k, table) in dk {
        w.write_all(&(k as u64).to_le_bytes())?;
        write_u64_array(&mut w, table.iter().map(|&v| v as u64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<ArithTables> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != CACHE_MAGIC {
        return Err(Error::Cache(format!(
            "bad magic {magic:?}; not a sieve cache"
        )));
    }
    let mut ver = [0u8; 2];
    r.read_exact(&mut ver)?;
    let version = u16::from_le_bytes(ver);
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!(
            "cache version {version} unsupported (want {CACHE_VERSION})"
        )));
    }
    let limit = read_u64(&mut r)?;
    let narrow = |vals: Vec<u64>, what: &str| -> Result<Vec<u32>> {
        vals.into_iter()
            .map(|v| {
                u32::try_from(v).map_err(|_| Error::Cache(format!("{what} value {v} overflows")))
            })
            .collect()
    };
    let d = narrow(read_u64_array(&mut r, limit)?, "d")?;
    let r2 = narrow(read_u64_array(&mut r, limit)?, "r2")?;
    let omega: Vec<u8> = read_u64_array(&mut r, limit)?
        .into_iter()
        .map(|v| v as u8)
        .collect();
    let sq_len = read_u64(&mut r)?;
    if sq_len != limit {
        return Err(Error::Cache(format!(
            "squarefree length {sq_len} != limit {limit}"
        )));
    }
    let mut packed = vec![0u8; sq_len as usize];
    r.read_exact(&mut packed)?;
    let squarefree: Vec<bool> = packed.into_iter().map(|b| b != 0).collect();
    let k_count = read_u64(&mut r)?;
    let mut dk = BTreeMap::new();
    for _ in 0..k_count {
        let k = read_u64(&mut r)? as u32;
        let table = narrow(read_u64_array(&mut r, limit)?, "dk")?;
        dk.insert(k, table);
    }
    Ok(ArithTables::from_parts(limit, d, r2, dk, omega, squarefree))
}

/// Canonical cache file name for a (limit, k_list) build.
pub fn cache_file_name(limit: u64, k_list: &[u32]) -> String {
    let mut ks: Vec<u32> = k_list.iter().copied().filter(|&k| k > 2).collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        format!("tables_{limit}.rlab")
    } else {
        let tags: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
        format!("tables_{limit}_k{}.rlab", tags.join("-"))
    }
}
