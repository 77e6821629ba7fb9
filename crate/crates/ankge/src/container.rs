//! Artifact container: a text manifest followed by a binary payload.
//!
//! ```text
//! ankge-artifact 1
//! kind = base-model
//! family = TransE
//! ...
//! payload_bytes = 4096
//! payload_sha256 = 3f1c...
//! ---
//! <payload_bytes bytes, little-endian>
//! ```
//!
//! Manifest lines are `key = value`, one per line, in insertion order.
//! Writes go to a temporary sibling file that is renamed into place, so a
//! failed run never leaves a partial artifact behind.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::digest::sha256_hex;
use crate::error::{Error, Result};

pub const MAGIC: &str = "ankge-artifact";
pub const VERSION: u32 = 1;
const SEPARATOR: &str = "---";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(kind: &str) -> Self {
        let mut m = Manifest::default();
        m.set("kind", kind);
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        assert!(!key.contains('=') && !value.contains('\n'), "bad manifest entry {key}");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn require(&self, path: &Path, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::format(path, format!("manifest is missing `{key}`")))
    }

    pub fn parse<T: FromStr>(&self, path: &Path, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let raw = self.require(path, key)?;
        raw.parse()
            .map_err(|e| Error::format(path, format!("manifest `{key}` = {raw:?}: {e}")))
    }

    pub fn expect_kind(&self, path: &Path, kind: &str) -> Result<()> {
        let found = self.require(path, "kind")?;
        if found != kind {
            return Err(Error::format(path, format!("expected a {kind} artifact, found {found}")));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {VERSION}\n");
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Writes `manifest` and `payload` to `path` atomically. Returns the
/// sha256 of the complete file.
pub fn write(path: &Path, manifest: &Manifest, payload: &[u8]) -> Result<String> {
    let mut manifest = manifest.clone();
    manifest.set("payload_bytes", payload.len());
    manifest.set("payload_sha256", sha256_hex(payload));
    let mut bytes = manifest.to_text().into_bytes();
    bytes.extend_from_slice(SEPARATOR.as_bytes());
    bytes.push(b'\n');
    bytes.extend_from_slice(payload);
    write_atomic(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub manifest: Manifest,
    pub payload: Vec<u8>,
    /// sha256 of the whole file.
    pub digest: String,
}

pub fn read(path: &Path) -> Result<Artifact> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = sha256_hex(&bytes);
    let mut manifest = Manifest::default();
    let mut offset = 0;
    let mut first = true;
    loop {
        let end = bytes[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format(path, "truncated manifest"))?;
        let line = std::str::from_utf8(&bytes[offset..offset + end])
            .map_err(|_| Error::format(path, "manifest is not valid UTF-8"))?;
        offset += end + 1;
        if first {
            let version = line
                .strip_prefix(MAGIC)
                .map(str::trim)
                .ok_or_else(|| Error::format(path, "not an ankge artifact"))?;
            if version != VERSION.to_string() {
                return Err(Error::format(
                    path,
                    format!("unsupported format version {version} (expected {VERSION})"),
                ));
            }
            first = false;
            continue;
        }
        if line == SEPARATOR {
            break;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::format(path, format!("bad manifest line {line:?}")))?;
        manifest.entries.push((k.to_string(), v.to_string()));
    }
    let payload = bytes[offset..].to_vec();
    let expected: usize = manifest.parse(path, "payload_bytes")?;
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!("payload has {} bytes, manifest declares {expected}", payload.len()),
        ));
    }
    if manifest.require(path, "payload_sha256")? != sha256_hex(&payload) {
        return Err(Error::format(path, "payload checksum mismatch"));
    }
    Ok(Artifact { manifest, payload, digest })
}

/// Reads only the manifest of an artifact, without checking the payload.
pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let sep = format!("\n{SEPARATOR}\n");
    let end = text
        .windows(sep.len())
        .position(|w| w == sep.as_bytes())
        .ok_or_else(|| Error::format(path, "truncated manifest"))?;
    let head = std::str::from_utf8(&text[..end])
        .map_err(|_| Error::format(path, "manifest is not valid UTF-8"))?;
    let mut lines = head.lines();
    if !lines.next().is_some_and(|l| l.starts_with(MAGIC)) {
        return Err(Error::format(path, "not an ankge artifact"));
    }
    let mut m = Manifest::default();
    for line in lines {
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::format(path, format!("bad manifest line {line:?}")))?;
        m.entries.push((k.to_string(), v.to_string()));
    }
    Ok(m)
}

#[derive(Debug, Default)]
pub struct PayloadWriter {
    buf: Vec<u8>,
}

impl PayloadWriter {
    pub fn f64s(&mut self, values: &[f64]) {
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub struct PayloadReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    pub fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        PayloadReader { path, bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(self.path, "payload is truncated"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    /// Fails unless every byte has been consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(
                self.path,
                format!("{} unexpected trailing payload bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}
