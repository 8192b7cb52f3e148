//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"DEEPCFCK"  u32 version  u32 len  <len bytes of ArchSpec::to_text>
//! u32 tensor_count
//! repeat: u16 name_len  <name>  u32 rows  u32 cols  <rows*cols f64>
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{ArchSpec, ModelParams};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DEEPCFCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(params: &ModelParams, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let arch = params.arch.to_text();
    w.write_all(&(arch.len() as u32).to_le_bytes())?;
    w.write_all(arch.as_bytes())?;
    let specs = ModelParams::tensor_specs(&params.arch);
    let tensors = params.tensors();
    w.write_all(&(specs.len() as u32).to_le_bytes())?;
    for ((name, (rows, cols)), data) in specs.iter().zip(tensors) {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(*rows as u32).to_le_bytes())?;
        w.write_all(&(*cols as u32).to_le_bytes())?;
        for v in data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Checkpoint("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_string<R: Read>(r: &mut R, len: usize) -> Result<String> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Checkpoint("truncated file".into()))?;
    String::from_utf8(buf).map_err(|_| Error::Checkpoint("non-UTF-8 text".into()))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ModelParams> {
    if &read_array::<8, _>(&mut r)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let len = read_u32(&mut r)? as usize;
    let arch = ArchSpec::from_text(&read_string(&mut r, len)?)?;
    let specs = ModelParams::tensor_specs(&arch);
    let count = read_u32(&mut r)? as usize;
    if count != specs.len() {
        return Err(Error::ArchMismatch(format!(
            "header describes {} tensors, file holds {count}",
            specs.len()
        )));
    }
    let mut tensors = Vec::with_capacity(count);
    for (name, expected) in specs {
        let name_len = u16::from_le_bytes(read_array(&mut r)?) as usize;
        let found_name = read_string(&mut r, name_len)?;
        if found_name != name {
            return Err(Error::Checkpoint(format!("expected tensor {name}, found {found_name}")));
        }
        let found = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
        if found != expected {
            return Err(Error::ShapeMismatch {
                name,
                expected,
                found,
            });
        }
        let mut data = Vec::with_capacity(found.0 * found.1);
        for _ in 0..found.0 * found.1 {
            data.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        tensors.push(data);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after last tensor".into()));
    }
    ModelParams::from_tensors(arch, tensors)
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    write_checkpoint(params, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
