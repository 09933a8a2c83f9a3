//! Embedding-space serialization.
//!
//! The format is jsonl: a header line `{"dim": d, "count": n}` followed by
//! one line per token, `{"token": "...", "vector": [d floats]}`, tokens in
//! lexicographic order. Round-trips are lossless at double precision.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpace;
use crate::error::{RecError, Result};

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Row {
    token: String,
    vector: Vec<f64>,
}

pub fn write_space(space: &EmbeddingSpace, mut writer: impl Write) -> Result<()> {
    let fail = |e: serde_json::Error| RecError::Embedding(format!("serialize: {e}"));
    let io_fail = |e: std::io::Error| RecError::Embedding(format!("write: {e}"));
    let header = Header {
        dim: space.dim(),
        count: space.len(),
    };
    writer
        .write_all(serde_json::to_string(&header).map_err(fail)?.as_bytes())
        .map_err(io_fail)?;
    writer.write_all(b"\n").map_err(io_fail)?;
    for token in space.tokens() {
        let row = Row {
            token: token.to_string(),
            vector: space.vector(token).unwrap().to_vec(),
        };
        writer
            .write_all(serde_json::to_string(&row).map_err(fail)?.as_bytes())
            .map_err(io_fail)?;
        writer.write_all(b"\n").map_err(io_fail)?;
    }
    Ok(())
}

pub fn save_space(space: &EmbeddingSpace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| RecError::io(path, e))?;
    write_space(space, BufWriter::new(file))
}

/// Reads a space written by [`write_space`]. Counts are not part of the wire
/// format, so every token loads with count zero.
pub fn read_space(reader: impl Read) -> Result<EmbeddingSpace> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let parse_fail = |line: usize, e: String| RecError::Embedding(format!("line {line}: {e}"));

    let header: Header = match lines.next() {
        None => return Err(RecError::Embedding("empty embedding file".into())),
        Some((_, line)) => {
            let line = line.map_err(|e| RecError::Embedding(format!("read: {e}")))?;
            serde_json::from_str(&line).map_err(|e| parse_fail(1, e.to_string()))?
        }
    };

    let mut tokens = Vec::with_capacity(header.count);
    let mut vectors = Vec::with_capacity(header.count * header.dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| RecError::Embedding(format!("read: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| parse_fail(line_no, e.to_string()))?;
        if row.vector.len() != header.dim {
            return Err(parse_fail(
                line_no,
                format!("vector length {} != dim {}", row.vector.len(), header.dim),
            ));
        }
        if let Some(prev) = tokens.last() {
            if *prev >= row.token {
                return Err(parse_fail(line_no, "tokens out of order".into()));
            }
        }
        tokens.push(row.token);
        vectors.extend(row.vector);
    }
    if tokens.len() != header.count {
        return Err(RecError::Embedding(format!(
            "header promised {} tokens, found {}",
            header.count,
            tokens.len()
        )));
    }
    let counts = vec![0; tokens.len()];
    EmbeddingSpace::from_parts(header.dim, tokens, vectors, counts)
}

pub fn load_space(path: &Path) -> Result<EmbeddingSpace> {
    let file = File::open(path).map_err(|e| RecError::io(path, e))?;
    read_space(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{train_skipgram, EmbeddingConfig};

    fn small_space() -> EmbeddingSpace {
        let corpus: Vec<Vec<String>> = vec![
            vec!["a".into(), "b".into(), "c".into()],
            vec!["c".into(), "a".into(), "b".into()],
        ];
        train_skipgram(
            &corpus,
            &EmbeddingConfig {
                dim: 6,
                epochs: 2,
                ..EmbeddingConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_is_lossless() {
        let space = small_space();
        let mut buf = Vec::new();
        write_space(&space, &mut buf).unwrap();
        let back = read_space(buf.as_slice()).unwrap();
        assert_eq!(back.dim(), space.dim());
        assert_eq!(back.len(), space.len());
        for token in space.tokens() {
            assert_eq!(back.vector(token).unwrap(), space.vector(token).unwrap());
        }
    }

    #[test]
    fn serialization_is_byte_stable() {
        let space = small_space();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_space(&space, &mut a).unwrap();
        write_space(&read_space(a.as_slice()).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn count_mismatch_is_error() {
        let mut buf = Vec::new();
        write_space(&small_space(), &mut buf).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("{\"token\":\"zz\",\"vector\":[0,0,0,0,0,0]}\n");
        assert!(read_space(text.as_bytes()).is_err());
    }
}
