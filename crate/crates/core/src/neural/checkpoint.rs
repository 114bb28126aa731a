//! Binary checkpoint format:
//!
//! ```text
//! "GON1"                      4 bytes magic
//! layer count                 u64 LE
//! layer sizes                 u64 LE each
//! activation tag              1 byte: 0 = tanh, 1 = leaky ReLU
//! leaky ReLU slope            f64 LE, present only for tag 1
//! per layer: weights, biases  f64 LE, weights row-major (out × in)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Activation, Discriminator, Matrix};
use crate::error::{GonError, Result};

const MAGIC: &[u8; 4] = b"GON1";
const TAG_TANH: u8 = 0;
const TAG_LEAKY_RELU: u8 = 1;
// Guards allocation when reading a corrupt header.
const MAX_LAYER_WIDTH: u64 = 1 << 24;

fn io_err(e: std::io::Error) -> GonError {
    GonError::Checkpoint(e.to_string())
}

pub fn write_checkpoint<W: Write>(d: &Discriminator, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(d.layer_sizes().len() as u64).to_le_bytes())?;
    for &n in d.layer_sizes() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    match d.activation() {
        Activation::Tanh => w.write_all(&[TAG_TANH])?,
        Activation::LeakyRelu(slope) => {
            w.write_all(&[TAG_LEAKY_RELU])?;
            w.write_all(&slope.to_le_bytes())?;
        }
    }
    for buf in d.param_buffers() {
        for v in buf {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Discriminator> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(GonError::Checkpoint(format!("bad magic {magic:?}")));
    }
    let count = read_u64(&mut r)?;
    if !(2..=1024).contains(&count) {
        return Err(GonError::Checkpoint(format!("implausible layer count {count}")));
    }
    let mut sizes = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let n = read_u64(&mut r)?;
        if n == 0 || n > MAX_LAYER_WIDTH {
            return Err(GonError::Checkpoint(format!("implausible layer width {n}")));
        }
        sizes.push(n as usize);
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag).map_err(io_err)?;
    let activation = match tag[0] {
        TAG_TANH => Activation::Tanh,
        TAG_LEAKY_RELU => Activation::LeakyRelu(read_f64(&mut r)?),
        other => return Err(GonError::Checkpoint(format!("unknown activation tag {other}"))),
    };
    let mut weights = Vec::with_capacity(sizes.len() - 1);
    let mut biases = Vec::with_capacity(sizes.len() - 1);
    for pair in sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let w = (0..fan_in * fan_out)
            .map(|_| read_f64(&mut r))
            .collect::<Result<Vec<_>>>()?;
        weights.push(Matrix::from_vec(fan_out, fan_in, w)?);
        biases.push((0..fan_out).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io_err)? != 0 {
        return Err(GonError::Checkpoint("trailing bytes after parameters".into()));
    }
    Discriminator::from_parts(sizes, weights, biases, activation)
}

pub fn save_checkpoint(d: &Discriminator, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| GonError::io(path, e))?;
    write_checkpoint(d, BufWriter::new(file)).map_err(|e| GonError::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Discriminator> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| GonError::io(path, e))?;
    read_checkpoint(BufReader::new(file))
}
