//! Append-only checkpoint file.
//!
//! Each record is `<len> <json>\n` where `len` is the byte length of the
//! JSON text. A record that fails the framing check ends the valid prefix;
//! opening the store truncates the file there.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use crate::format::ReportRecord;

pub struct Store {
    path: PathBuf,
    file: File,
    records: BTreeMap<String, ReportRecord>,
    /// Bytes dropped from a damaged tail when the store was opened.
    pub truncated: u64,
}

impl Store {
    /// Opens (or creates) the store and loads every intact record.
    pub fn open(path: &Path) -> io::Result<Self> {
        let mut bytes = Vec::new();
        if path.exists() {
            File::open(path)?.read_to_end(&mut bytes)?;
        }
        let (records, valid) = parse_records(&bytes);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let truncated = (bytes.len() - valid) as u64;
        if truncated > 0 {
            file.set_len(valid as u64)?;
        }
        Ok(Self {
            path: path.to_owned(),
            file,
            records,
            truncated,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn contains(&self, key: &str) -> bool {
        self.records.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes and flushes one record. Returns false, writing nothing, when
    /// the key is already stored.
    pub fn append(&mut self, rec: &ReportRecord) -> io::Result<bool> {
        if self.records.contains_key(&rec.canonical_hash) {
            return Ok(false);
        }
        let json = serde_json::to_string(rec).map_err(io::Error::other)?;
        self.file.write_all(format!("{} {json}\n", json.len()).as_bytes())?;
        self.file.flush()?;
        self.records.insert(rec.canonical_hash.clone(), rec.clone());
        Ok(true)
    }

    /// Records in key order.
    pub fn records(&self) -> impl Iterator<Item = &ReportRecord> {
        self.records.values()
    }
}

/// Returns the records of the valid prefix and its length in bytes. A
/// repeated key keeps its first record.
pub fn parse_records(bytes: &[u8]) -> (BTreeMap<String, ReportRecord>, usize) {
    let mut out = BTreeMap::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let Some(next) = frame(&bytes[pos..]) else {
            break;
        };
        let (rec, used) = next;
        out.entry(rec.canonical_hash.clone()).or_insert(rec);
        pos += used;
    }
    (out, pos)
}

fn frame(buf: &[u8]) -> Option<(ReportRecord, usize)> {
    let space = buf.iter().take(20).position(|&b| b == b' ')?;
    let len: usize = std::str::from_utf8(&buf[..space]).ok()?.parse().ok()?;
    let start = space + 1;
    let end = start.checked_add(len)?;
    if buf.len() <= end || buf[end] != b'\n' {
        return None;
    }
    let rec = serde_json::from_slice(&buf[start..end]).ok()?;
    Some((rec, end + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(h: u64) -> ReportRecord {
        ReportRecord {
            canonical_hash: crate::format::hash_str(h),
            k: 2,
            cross_links: 1,
            outer: "1/2".into(),
            rgc: "1/2".into(),
            ia: "1/2".into(),
            src: "1/2".into(),
            best: "1/2".into(),
            tight: true,
            gain_rgc: "1/1".into(),
            gain_ia: "1/1".into(),
            outer_exhaustive: true,
            src_exhaustive: true,
            certificates: None,
        }
    }

    #[test]
    fn duplicate_keys_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.log");
        let mut s = Store::open(&path).unwrap();
        assert!(s.append(&record(1)).unwrap());
        let size = std::fs::metadata(&path).unwrap().len();
        assert!(!s.append(&record(1)).unwrap());
        assert_eq!(std::fs::metadata(&path).unwrap().len(), size);
        assert_eq!(Store::open(&path).unwrap().len(), 1);
    }

    #[test]
    fn damaged_tail_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.log");
        let mut s = Store::open(&path).unwrap();
        s.append(&record(1)).unwrap();
        s.append(&record(2)).unwrap();
        drop(s);
        let good = std::fs::read(&path).unwrap();
        // Every cut inside the second record leaves exactly the first.
        let first = good.iter().position(|&b| b == b'\n').unwrap() + 1;
        for cut in first..good.len() {
            std::fs::write(&path, &good[..cut]).unwrap();
            let s = Store::open(&path).unwrap();
            assert_eq!(s.len(), 1, "cut at {cut}");
            assert_eq!(s.truncated, (cut - first) as u64);
            drop(s);
            assert_eq!(std::fs::read(&path).unwrap(), &good[..first]);
        }
        // A flipped length byte is caught by the trailing newline check.
        let mut bad = good.clone();
        bad[first] = b'9';
        std::fs::write(&path, &bad).unwrap();
        assert_eq!(Store::open(&path).unwrap().len(), 1);
    }

    #[test]
    fn reopened_store_appends_after_valid_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.log");
        let mut s = Store::open(&path).unwrap();
        s.append(&record(1)).unwrap();
        drop(s);
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(b"57 {\"canon");
        std::fs::write(&path, &bytes).unwrap();
        let mut s = Store::open(&path).unwrap();
        s.append(&record(2)).unwrap();
        drop(s);
        let s = Store::open(&path).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.truncated, 0);
    }
}
