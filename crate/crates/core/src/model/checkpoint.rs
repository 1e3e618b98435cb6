//! Binary checkpoint format.
//!
//! ```text
//! magic     4 bytes  "SCKP"
//! version   u32
//! config    u32 byte length, then the model config as UTF-8 JSON
//! count     u32 number of tensors
//! per tensor:
//!   name      u16 byte length, UTF-8 name
//!   trainable u8 (0 or 1)
//!   rank      u32, then rank x u32 extents
//!   payload   numel x f64
//! ```
//!
//! All integers and floats are little-endian. Values round-trip bit-exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;

use super::config::ModelConfig;
use super::params::{Param, Parameters};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"SCKP";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(params: &Parameters, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let config = serde_json::to_vec(params.config()).expect("config serializes");
    w.write_all(&(config.len() as u32).to_le_bytes())?;
    w.write_all(&config)?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, p) in params.iter() {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[u8::from(p.trainable)])?;
        w.write_all(&(p.value.rank() as u32).to_le_bytes())?;
        for &e in p.value.shape() {
            w.write_all(&(e as u32).to_le_bytes())?;
        }
        for v in p.value.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save(params: &Parameters, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(params, &mut buf).expect("writing to a Vec cannot fail");
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    source: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::parse(
                self.source,
                format!("truncated at offset {} (wanted {n} more bytes)", self.pos),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn err(&self, detail: impl Into<String>) -> Error {
        Error::parse(self.source, format!("offset {}: {}", self.pos, detail.into()))
    }
}

pub fn read_checkpoint<R: Read>(mut r: R, source: &str) -> Result<Parameters> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(source, e))?;
    let mut rd = Reader {
        bytes: &bytes,
        pos: 0,
        source,
    };
    if rd.take(4)? != MAGIC {
        return Err(rd.err("bad magic, not a checkpoint"));
    }
    let version = rd.u32()?;
    if version != VERSION {
        return Err(rd.err(format!("unsupported checkpoint version {version}")));
    }
    let len = rd.u32()? as usize;
    let config: ModelConfig =
        serde_json::from_slice(rd.take(len)?).map_err(|e| rd.err(format!("config block: {e}")))?;
    let count = rd.u32()?;
    let mut tensors = IndexMap::new();
    for _ in 0..count {
        let n = rd.u16()? as usize;
        let name = std::str::from_utf8(rd.take(n)?)
            .map_err(|_| rd.err("parameter name is not UTF-8"))?
            .to_string();
        let trainable = match rd.u8()? {
            0 => false,
            1 => true,
            other => return Err(rd.err(format!("bad trainable flag {other}"))),
        };
        let rank = rd.u32()? as usize;
        let shape = (0..rank)
            .map(|_| rd.u32().map(|e| e as usize))
            .collect::<Result<Vec<_>>>()?;
        let numel: usize = shape.iter().product();
        let data = (0..numel).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
        let value = Tensor::new(shape, data).map_err(|e| rd.err(e.to_string()))?;
        tensors.insert(name, Param { value, trainable });
    }
    if rd.pos != bytes.len() {
        return Err(rd.err("trailing bytes after last tensor"));
    }
    Parameters::from_tensors(&config, tensors)
}

pub fn load(path: &Path) -> Result<Parameters> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(f, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::Variant;

    #[test]
    fn round_trip_is_bit_exact() {
        for variant in Variant::ALL {
            let p = Parameters::init(&ModelConfig::tiny(variant), 11).unwrap();
            let mut buf = Vec::new();
            write_checkpoint(&p, &mut buf).unwrap();
            let q = read_checkpoint(buf.as_slice(), "mem").unwrap();
            assert_eq!(p, q);
            for ((_, a), (_, b)) in p.iter().zip(q.iter()) {
                for (x, y) in a.value.data().iter().zip(b.value.data()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn rejects_corruption() {
        let p = Parameters::init(&ModelConfig::tiny(Variant::Full), 11).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad.as_slice(), "mem"),
            Err(Error::Parse { .. })
        ));

        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(read_checkpoint(bad.as_slice(), "mem").is_err());

        let truncated = &buf[..buf.len() - 3];
        assert!(read_checkpoint(truncated, "mem").is_err());

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(read_checkpoint(trailing.as_slice(), "mem").is_err());
    }
}
