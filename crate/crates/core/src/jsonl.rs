//! Line-delimited JSON helpers.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Write(serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses one value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, items: &[T]) -> Result<(), JsonlError> {
    for item in items {
        serde_json::to_writer(&mut writer, item).map_err(JsonlError::Write)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_line_numbers() {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[vec![1, 2], vec![3]]).unwrap();
        let back: Vec<Vec<i32>> = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, vec![vec![1, 2], vec![3]]);
        let err = read_jsonl::<Vec<i32>, _>("[1]\n\n[x]\n".as_bytes()).unwrap_err();
        assert!(matches!(err, JsonlError::Parse { line: 3, .. }));
    }
}
