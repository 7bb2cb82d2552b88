//! Append-only record file of computed results keyed by a 128-bit digest.
//!
//! Each record is one line `<key> <check> <json>` where `key` is 32 hex
//! digits, `check` is 8 hex digits of the SHA-256 of the JSON text. Lines
//! that fail to decode are skipped with a warning and their results are
//! recomputed. Readers take a shared lock, the writer an exclusive one held
//! only while appending a line.

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Overrides the cache directory.
pub const CACHE_ENV: &str = "WIDOMLAB_CACHE_DIR";
pub const RECORD_FILE: &str = "records.log";
pub const DEFAULT_LOCK_TIMEOUT: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey([u8; 16]);

impl CacheKey {
    /// Digest of the parts, each length-prefixed so that boundaries matter.
    pub fn of(parts: &[&str]) -> Self {
        let mut h = Sha256::new();
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p.as_bytes());
        }
        let full = h.finalize();
        let mut k = [0u8; 16];
        k.copy_from_slice(&full[..16]);
        CacheKey(k)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 32 {
            return None;
        }
        let mut k = [0u8; 16];
        for (i, byte) in k.iter_mut().enumerate() {
            *byte = u8::from_str_radix(s.get(2 * i..2 * i + 2)?, 16).ok()?;
        }
        Some(CacheKey(k))
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|b| write!(f, "{b:02x}"))
    }
}

fn check_digest(json: &str) -> String {
    let d = Sha256::digest(json.as_bytes());
    d[..4].iter().map(|b| format!("{b:02x}")).collect()
}

/// Encodes one record line, newline included.
pub fn encode_record(key: CacheKey, json: &str) -> String {
    format!("{key} {} {json}\n", check_digest(json))
}

/// Outcome of decoding a record file.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Decoded {
    /// Records in file order; later entries for a key supersede earlier ones.
    pub records: Vec<(CacheKey, serde_json::Value)>,
    /// One-based line numbers that failed to decode.
    pub corrupt: Vec<usize>,
}

/// Decodes record lines. Never fails: bad lines are reported in `corrupt`.
/// A final line without its newline is an interrupted write and counts as
/// corrupt.
pub fn decode_records(bytes: &[u8]) -> Decoded {
    let mut out = Decoded::default();
    let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    let unterminated = lines.pop().filter(|l| !l.is_empty());
    for (i, line) in lines.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        match decode_line(line) {
            Some(rec) => out.records.push(rec),
            None => out.corrupt.push(i + 1),
        }
    }
    if unterminated.is_some() {
        out.corrupt.push(lines.len() + 1);
    }
    out
}

fn decode_line(line: &[u8]) -> Option<(CacheKey, serde_json::Value)> {
    let text = std::str::from_utf8(line).ok()?;
    let (key, rest) = text.split_once(' ')?;
    let (check, json) = rest.split_once(' ')?;
    let key = CacheKey::from_hex(key)?;
    if check != check_digest(json) {
        return None;
    }
    Some((key, serde_json::from_str(json).ok()?))
}

/// A record store rooted at a directory.
#[derive(Debug)]
pub struct Cache {
    path: PathBuf,
    entries: Mutex<HashMap<CacheKey, serde_json::Value>>,
    lock_timeout: Duration,
}

/// Acquires a lock by polling until `timeout`; `Ok(false)` on timeout.
fn lock_with_timeout(file: &File, exclusive: bool, timeout: Duration) -> io::Result<bool> {
    let start = Instant::now();
    loop {
        let attempt = if exclusive {
            file.try_lock()
        } else {
            file.try_lock_shared()
        };
        match attempt {
            Ok(()) => return Ok(true),
            Err(TryLockError::WouldBlock) => {
                if start.elapsed() >= timeout {
                    return Ok(false);
                }
                thread::sleep(Duration::from_millis(10));
            }
            Err(TryLockError::Error(e)) => return Err(e),
        }
    }
}

/// True when an interrupted write left the file without a final newline.
fn ends_mid_line(file: &mut File) -> io::Result<bool> {
    let len = file.metadata()?.len();
    if len == 0 {
        return Ok(false);
    }
    file.seek(SeekFrom::Start(len - 1))?;
    let mut last = [0u8; 1];
    file.read_exact(&mut last)?;
    Ok(last[0] != b'\n')
}

impl Cache {
    /// Directory from [`CACHE_ENV`] if set, otherwise `fallback`.
    pub fn resolve_dir(fallback: &Path) -> PathBuf {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => fallback.to_path_buf(),
        }
    }

    /// Opens (creating if needed) the store in `dir` and loads its records.
    pub fn open(dir: &Path) -> io::Result<Self> {
        Self::open_with_timeout(dir, DEFAULT_LOCK_TIMEOUT)
    }

    pub fn open_with_timeout(dir: &Path, lock_timeout: Duration) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(RECORD_FILE);
        let mut entries = HashMap::new();
        if path.exists() {
            let mut file = File::open(&path)?;
            let locked = lock_with_timeout(&file, false, lock_timeout)?;
            if !locked {
                log::warn!(
                    "cache {}: timed out waiting for a read lock, reading unlocked",
                    path.display()
                );
            }
            let mut bytes = Vec::new();
            file.read_to_end(&mut bytes)?;
            if locked {
                file.unlock()?;
            }
            let decoded = decode_records(&bytes);
            if !decoded.corrupt.is_empty() {
                log::warn!(
                    "cache {}: ignoring {} corrupt record(s) at line(s) {:?}; they will be recomputed",
                    path.display(),
                    decoded.corrupt.len(),
                    decoded.corrupt
                );
            }
            entries.extend(decoded.records);
        }
        Ok(Cache {
            path,
            entries: Mutex::new(entries),
            lock_timeout,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The stored value for `key`, if present and of the expected shape.
    pub fn get<T: DeserializeOwned>(&self, key: CacheKey) -> Option<T> {
        let v = self
            .entries
            .lock()
            .expect("cache map poisoned")
            .get(&key)
            .cloned()?;
        match serde_json::from_value(v) {
            Ok(t) => Some(t),
            Err(e) => {
                log::warn!("cache record {key} has an unexpected shape ({e}); recomputing");
                None
            }
        }
    }

    /// Appends a record. Returns `Ok(false)` when the write lock could not
    /// be taken in time; the value is then kept in memory only.
    pub fn put<T: Serialize>(&self, key: CacheKey, value: &T) -> io::Result<bool> {
        let json = serde_json::to_string(value).map_err(io::Error::other)?;
        let parsed: serde_json::Value = serde_json::from_str(&json).map_err(io::Error::other)?;
        self.entries
            .lock()
            .expect("cache map poisoned")
            .insert(key, parsed);
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&self.path)?;
        if !lock_with_timeout(&file, true, self.lock_timeout)? {
            log::warn!(
                "cache {}: write lock not acquired within {:?}; result not cached",
                self.path.display(),
                self.lock_timeout
            );
            return Ok(false);
        }
        let mut line = encode_record(key, &json);
        if ends_mid_line(&mut file)? {
            line.insert(0, '\n');
        }
        let written = file.write_all(line.as_bytes()).and_then(|_| file.flush());
        file.unlock()?;
        written.map(|_| true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_hex_round_trip_and_boundaries() {
        let k = CacheKey::of(&["ab", "c"]);
        assert_eq!(CacheKey::from_hex(&k.to_string()), Some(k));
        assert_ne!(k, CacheKey::of(&["a", "bc"]));
        assert_eq!(k.to_string().len(), 32);
        assert_eq!(CacheKey::from_hex("zz"), None);
    }

    #[test]
    fn decode_flags_damaged_lines() {
        let k = CacheKey::of(&["x"]);
        let good = encode_record(k, "{\"a\":1}");
        let flipped = good.replace("\"a\":1", "\"a\":2");
        let text = format!("{good}garbage\n{flipped}{}", &good[..good.len() - 3]);
        let d = decode_records(text.as_bytes());
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.corrupt, vec![2, 3, 4]);
    }

    #[test]
    fn exact_floats_survive() {
        let dir = tempfile::tempdir().unwrap();
        let k = CacheKey::of(&["pi"]);
        let x = [std::f64::consts::PI, 0.1 + 0.2, 1e-300, -2.5e17];
        {
            let c = Cache::open(dir.path()).unwrap();
            assert!(c.put(k, &x).unwrap());
        }
        let c = Cache::open(dir.path()).unwrap();
        let y: [f64; 4] = c.get(k).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
