//! On-disk cache for eigen-data. Files hold a magic line, the SHA-256 of the
//! payload and a little-endian binary payload; a checksum mismatch is treated
//! as a miss and the entry is rebuilt.

use crate::error::{Error, Result};
use crate::geometry::{Eigenfunctions, SpectralData};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Overrides the default cache directory when `--cache-dir` is absent.
pub const CACHE_ENV: &str = "LORENTZIAN_LAB_CACHE";

const MAGIC: &[u8; 8] = b"LLSPEC1\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CacheOutcome {
    Hit,
    Miss,
    /// Entry existed but failed its checksum or decode.
    Corrupt,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

/// Hex SHA-256 of any serializable key description.
pub fn content_hash<T: serde::Serialize>(key: &T) -> String {
    let bytes = serde_json::to_vec(key).expect("cache key serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl Cache {
    /// Opens (creating if needed) a cache directory and checks it is writable.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let not_writable = |e: std::io::Error| Error::from(e).context(format!("cache directory {} not writable", dir.display()));
        std::fs::create_dir_all(&dir).map_err(not_writable)?;
        let probe = dir.join(format!(".probe-{}", std::process::id()));
        std::fs::write(&probe, b"ok").map_err(not_writable)?;
        let _ = std::fs::remove_file(&probe);
        Ok(Cache { dir })
    }

    /// Directory from an explicit flag, else the environment, else `fallback`.
    pub fn resolve_dir(flag: Option<&Path>, fallback: &Path) -> PathBuf {
        match flag {
            Some(p) => p.to_path_buf(),
            None => std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| fallback.to_path_buf()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.spec"))
    }

    /// Returns the cached spectrum for `key` or runs `producer` and stores it.
    pub fn spectrum<F>(&self, key: &str, producer: F) -> Result<(SpectralData, CacheOutcome)>
    where
        F: FnOnce() -> Result<SpectralData>,
    {
        let path = self.path_for(key);
        let mut outcome = CacheOutcome::Miss;
        if path.exists() {
            match std::fs::read(&path).map_err(Error::from).and_then(|b| decode(&b)) {
                Ok(sp) => return Ok((sp, CacheOutcome::Hit)),
                Err(e) => {
                    log::warn!("cache entry {} rejected ({e}); recomputing", path.display());
                    outcome = CacheOutcome::Corrupt;
                }
            }
        }
        let sp = producer()?;
        let bytes = encode(&sp)?;
        // write-then-rename keeps concurrent readers from seeing partial files
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, &bytes).map_err(|e| Error::from(e).context(format!("writing {}", tmp.display())))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))?;
        Ok((sp, outcome))
    }
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    out.extend((v.len() as u64).to_le_bytes());
    for x in v {
        out.extend(x.to_le_bytes());
    }
}

pub fn encode(sp: &SpectralData) -> Result<Vec<u8>> {
    let Eigenfunctions::Grid { vectors, weight } = &sp.eigenfunctions else {
        return Err(Error::Unsupported("only grid eigen-data is cached".into()));
    };
    let mut payload = Vec::new();
    put_f64s(&mut payload, &sp.eigenvalues);
    put_f64s(&mut payload, weight);
    payload.extend((vectors.len() as u64).to_le_bytes());
    for v in vectors {
        put_f64s(&mut payload, v);
    }
    let mut out = MAGIC.to_vec();
    out.extend(Sha256::digest(&payload));
    out.extend(payload);
    Ok(out)
}

struct Reader<'a> {
    b: &'a [u8],
}

impl Reader<'_> {
    fn u64(&mut self) -> Result<u64> {
        if self.b.len() < 8 {
            return Err(Error::Cache("cache payload truncated".into()));
        }
        let (h, t) = self.b.split_at(8);
        self.b = t;
        Ok(u64::from_le_bytes(h.try_into().unwrap()))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if self.b.len() < 8 * n {
            return Err(Error::Cache("cache payload truncated".into()));
        }
        let (h, t) = self.b.split_at(8 * n);
        self.b = t;
        Ok(h.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<SpectralData> {
    if bytes.len() < MAGIC.len() + 32 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Cache("not a spectrum cache file".into()));
    }
    let (sum, payload) = bytes[MAGIC.len()..].split_at(32);
    if Sha256::digest(payload).as_slice() != sum {
        return Err(Error::Cache("cache checksum mismatch".into()));
    }
    let mut r = Reader { b: payload };
    let eigenvalues = r.f64s()?;
    let weight = r.f64s()?;
    let nv = r.u64()? as usize;
    let mut vectors = Vec::with_capacity(nv);
    for _ in 0..nv {
        vectors.push(r.f64s()?);
    }
    if !r.b.is_empty() || vectors.len() != eigenvalues.len() {
        return Err(Error::Cache("cache payload malformed".into()));
    }
    Ok(SpectralData { eigenvalues, eigenfunctions: Eigenfunctions::Grid { vectors, weight } })
}
