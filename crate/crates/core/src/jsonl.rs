//! Line-delimited JSON helpers shared by the pipeline's intermediate files.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::Error;

pub fn write_jsonl<'a, T, I>(path: &Path, items: I) -> Result<(), Error>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let io = |source| Error::io(path, source);
    let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
    for item in items {
        let line = serde_json::to_string(item).expect("record serializes");
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Error> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| {
            Error::io(
                path,
                io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)),
            )
        })?;
        out.push(item);
    }
    Ok(out)
}
