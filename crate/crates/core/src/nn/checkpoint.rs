//! Versioned binary model container.
//!
//! Layout: a UTF-8 text header terminated by an `end` line, followed by the
//! tensor payloads as little-endian f64 in manifest order.
//!
//! ```text
//! HYBRIDROM-CKPT 1
//! kv <key> <value>
//! tensor <name> <group> <rows> <cols>
//! ...
//! end
//! <rows*cols little-endian f64 per tensor>
//! ```
//!
//! `group` is one of `network|blend|frequency` for trainable tensors or
//! `static` for frozen payloads (POD bases, standardization vectors).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub const CKPT_MAGIC: &str = "HYBRIDROM-CKPT";
pub const CKPT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct CheckpointTensor {
    pub name: String,
    pub group: String,
    pub matrix: DenseMatrix,
}

/// In-memory form of a model container: ordered key/value metadata plus an
/// ordered tensor manifest.
#[derive(Debug, Clone, Default)]
pub struct Checkpoint {
    pub kv: Vec<(String, String)>,
    pub tensors: Vec<CheckpointTensor>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint::default()
    }

    pub fn set_kv(&mut self, key: impl Into<String>, value: impl ToString) {
        self.kv.push((key.into(), value.to_string()));
    }

    pub fn get_kv(&self, key: &str) -> Option<&str> {
        self.kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require_kv(&self, key: &str) -> Result<&str> {
        self.get_kv(key)
            .ok_or_else(|| Error::format(format!("checkpoint missing `{key}` header field")))
    }

    pub fn push_tensor(&mut self, name: impl Into<String>, group: &str, matrix: DenseMatrix) {
        self.tensors.push(CheckpointTensor { name: name.into(), group: group.to_string(), matrix });
    }

    pub fn tensor(&self, name: &str) -> Option<&CheckpointTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn require_tensor(&self, name: &str) -> Result<&CheckpointTensor> {
        self.tensor(name)
            .ok_or_else(|| Error::format(format!("checkpoint missing tensor `{name}`")))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{CKPT_MAGIC} {CKPT_VERSION}")?;
        for (k, v) in &self.kv {
            debug_assert!(!k.contains(' ') && !k.contains('\n'));
            debug_assert!(!v.contains('\n'));
            writeln!(w, "kv {k} {v}")?;
        }
        for t in &self.tensors {
            writeln!(w, "tensor {} {} {} {}", t.name, t.group, t.matrix.rows(), t.matrix.cols())?;
        }
        writeln!(w, "end")?;
        for t in &self.tensors {
            for v in t.matrix.as_slice() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Checkpoint> {
        let mut header = Vec::new();
        // read header bytes up to and including the `end\n` line
        let mut line = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            let n = r.read(&mut byte)?;
            if n == 0 {
                return Err(Error::format("unexpected EOF in checkpoint header"));
            }
            if byte[0] == b'\n' {
                let text = String::from_utf8(line.clone())
                    .map_err(|_| Error::format("non-UTF-8 checkpoint header"))?;
                header.push(text.clone());
                line.clear();
                if text == "end" {
                    break;
                }
            } else {
                line.push(byte[0]);
            }
        }
        let first = header
            .first()
            .ok_or_else(|| Error::format("empty checkpoint header"))?;
        let mut it = first.split(' ');
        if it.next() != Some(CKPT_MAGIC) {
            return Err(Error::format("bad checkpoint magic"));
        }
        let version: u32 = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format("bad checkpoint version"))?;
        if version != CKPT_VERSION {
            return Err(Error::format(format!("unsupported checkpoint version {version}")));
        }

        let mut ckpt = Checkpoint::new();
        let mut manifest: Vec<(String, String, usize, usize)> = Vec::new();
        for row in &header[1..header.len() - 1] {
            let mut parts = row.splitn(2, ' ');
            match parts.next() {
                Some("kv") => {
                    let rest = parts.next().unwrap_or("");
                    let mut kvit = rest.splitn(2, ' ');
                    let k = kvit.next().unwrap_or("").to_string();
                    let v = kvit.next().unwrap_or("").to_string();
                    ckpt.kv.push((k, v));
                }
                Some("tensor") => {
                    let rest = parts.next().unwrap_or("");
                    let fields: Vec<&str> = rest.split(' ').collect();
                    if fields.len() != 4 {
                        return Err(Error::format(format!("bad tensor line `{row}`")));
                    }
                    let rows: usize = fields[2]
                        .parse()
                        .map_err(|_| Error::format("bad tensor rows"))?;
                    let cols: usize = fields[3]
                        .parse()
                        .map_err(|_| Error::format("bad tensor cols"))?;
                    manifest.push((fields[0].to_string(), fields[1].to_string(), rows, cols));
                }
                other => {
                    return Err(Error::format(format!("unknown header line `{other:?}`")));
                }
            }
        }
        for (name, group, rows, cols) in manifest {
            let mut buf = vec![0u8; rows * cols * 8];
            r.read_exact(&mut buf)
                .map_err(|_| Error::format(format!("truncated payload for tensor `{name}`")))?;
            let data: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            ckpt.push_tensor(name, &group, DenseMatrix::from_vec(rows, cols, data));
        }
        Ok(ckpt)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let mut r = BufReader::new(File::open(path)?);
        Checkpoint::read_from(&mut r)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }
}
