//! Epoch file formats.
//!
//! Binary layout (little-endian): magic `IEEG1`, `u32` channel count,
//! `u32` samples per channel, `f64` sampling rate, then row-major `f32`
//! samples. CSV holds one channel per line; the sampling rate comes from
//! the manifest.

use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Epoch, Label};
use crate::{Error, Result};

pub const EPOCH_MAGIC: &[u8; 5] = b"IEEG1";
const HEADER_LEN: usize = 5 + 4 + 4 + 8;

pub fn write_epoch_binary(path: &Path, epoch: &Epoch) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(EPOCH_MAGIC)?;
    put(&(epoch.n_channels() as u32).to_le_bytes())?;
    put(&(epoch.n_samples() as u32).to_le_bytes())?;
    put(&epoch.fs().to_le_bytes())?;
    for v in epoch.samples() {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_epoch_binary(path: &Path, label: Label) -> Result<Epoch> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN || &bytes[..5] != EPOCH_MAGIC {
        return Err(Error::data(path, "not an IEEG1 epoch file"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let n_channels = u32_at(5);
    let n_samples = u32_at(9);
    let fs = f64::from_le_bytes(bytes[13..21].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    if body.len() != n_channels * n_samples * 4 {
        return Err(Error::data(
            path,
            format!(
                "truncated body: header declares {n_channels}×{n_samples} samples, file holds {} bytes",
                body.len()
            ),
        ));
    }
    let samples = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Epoch::from_flat(n_channels, n_samples, fs, samples, label)
        .map_err(|e| Error::data(path, e.to_string()))
}

pub fn write_epoch_csv(path: &Path, epoch: &Epoch) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for c in 0..epoch.n_channels() {
        let line = epoch
            .channel(c)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_epoch_csv(path: &Path, fs: f64, label: Label) -> Result<Epoch> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|tok| {
                    tok.trim().parse::<f32>().map_err(|_| {
                        Error::data(
                            path,
                            format!("line {}: cannot parse `{}`", i + 1, tok.trim()),
                        )
                    })
                })
                .collect::<Result<Vec<f32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Epoch::new(rows, fs, label).map_err(|e| Error::data(path, e.to_string()))
}
