//! Line-oriented artifact files.
//!
//! Every artifact file starts with a header line
//! `{"format_version":1,"kind":"<kind>","count":N}` followed by exactly `N`
//! JSON records, one per line. A missing or short record section, a kind
//! mismatch, or a different version are all format errors.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// A record type that can be stored in an artifact file.
pub trait Artifact: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
    count: usize,
}

/// Serializes `records` into the artifact text format.
pub fn persist<T: Artifact>(records: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_artifact_to(&mut buf, records)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// Inverse of [`persist`].
pub fn restore<T: Artifact>(text: &str) -> Result<Vec<T>> {
    read_artifact_from(text.as_bytes())
}

pub fn write_artifact_to<W: Write, T: Artifact>(mut w: W, records: &[T]) -> Result<()> {
    let header = Header {
        format_version: FORMAT_VERSION,
        kind: T::KIND.to_string(),
        count: records.len(),
    };
    let io = |e: std::io::Error| Error::Format(format!("write failed: {e}"));
    let json = |e: serde_json::Error| Error::Format(format!("cannot encode {}: {e}", T::KIND));
    serde_json::to_writer(&mut w, &header).map_err(json)?;
    w.write_all(b"\n").map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(json)?;
        w.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

pub fn read_artifact_from<R: std::io::Read, T: Artifact>(r: R) -> Result<Vec<T>> {
    let mut lines = BufReader::new(r).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Format(format!("empty {} artifact", T::KIND)))?
        .map_err(|e| Error::Format(e.to_string()))?;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "format_version {} is not supported (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    if header.kind != T::KIND {
        return Err(Error::Format(format!(
            "expected a `{}` artifact, found `{}`",
            T::KIND,
            header.kind
        )));
    }
    let mut out = Vec::with_capacity(header.count);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        if out.len() == header.count {
            return Err(Error::Format(format!(
                "{} artifact has more than {} records",
                T::KIND,
                header.count
            )));
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("record {} of {}: {e}", i + 1, T::KIND)))?;
        out.push(rec);
    }
    if out.len() != header.count {
        return Err(Error::Format(format!(
            "{} artifact is truncated: {} of {} records",
            T::KIND,
            out.len(),
            header.count
        )));
    }
    Ok(out)
}

/// Writes `records` to `path` (creating parent directories) and returns the
/// hex SHA-256 digest of the written bytes.
pub fn write_artifact<T: Artifact>(path: impl AsRef<Path>, records: &[T]) -> Result<String> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut buf = Vec::new();
    write_artifact_to(&mut buf, records)?;
    fs::write(path, &buf).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&buf)))
}

pub fn read_artifact<T: Artifact>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_artifact_from(file).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn digest_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
