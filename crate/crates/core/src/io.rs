//! Raster and mesh file formats: grayscale PFM, PGM masks and OBJ height fields.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::domain::{Domain, DomainMask};
use crate::error::{Error, Result};
use crate::raster::Raster;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Reads one whitespace-delimited header token, skipping `#` comments.
fn header_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0];
        if c == b'#' && tok.is_empty() {
            let mut skip = Vec::new();
            r.read_until(b'\n', &mut skip)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c);
    }
    if tok.is_empty() {
        return Err(format_err("truncated header"));
    }
    String::from_utf8(tok).map_err(|_| format_err("non-ASCII header"))
}

fn parse<T: std::str::FromStr>(tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| format_err(format!("bad {what} `{tok}`")))
}

/// Grayscale PFM (`Pf`). Rows are stored bottom to top; a negative scale
/// means little-endian samples.
pub fn read_pfm<R: Read>(reader: R) -> Result<Raster<f32>> {
    let mut r = BufReader::new(reader);
    let magic = header_token(&mut r)?;
    if magic != "Pf" {
        return Err(format_err(format!("expected grayscale PFM magic `Pf`, found `{magic}`")));
    }
    let w: usize = parse(&header_token(&mut r)?, "width")?;
    let h: usize = parse(&header_token(&mut r)?, "height")?;
    let scale: f32 = parse(&header_token(&mut r)?, "scale")?;
    if w == 0 || h == 0 {
        return Err(format_err("zero-sized PFM"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(format_err("PFM scale must be non-zero"));
    }
    let little = scale < 0.0;
    let mut bytes = vec![0u8; 4 * w * h];
    r.read_exact(&mut bytes)
        .map_err(|_| format_err(format!("PFM data shorter than {w}x{h} samples")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(format_err("trailing data after PFM samples"));
    }
    let mut out = Raster::filled(h, w, 0.0f32);
    for (k, chunk) in bytes.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let x = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (row, col) = (k / w, k % w);
        out.set(h - 1 - row, col, x);
    }
    Ok(out)
}

/// Writes little-endian PFM (scale −1).
pub fn write_pfm<W: Write>(writer: W, raster: &Raster<f32>) -> Result<()> {
    let (h, w) = raster.shape();
    let mut out = BufWriter::new(writer);
    write!(out, "Pf\n{w} {h}\n-1.0\n")?;
    for u in (0..h).rev() {
        for v in 0..w {
            out.write_all(&raster.at(u, v).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_pfm(path: &Path) -> Result<Raster<f32>> {
    read_pfm(File::open(path)?)
}

pub fn save_pfm(path: &Path, raster: &Raster<f32>) -> Result<()> {
    write_pfm(File::create(path)?, raster)
}

pub fn load_pfm_f64(path: &Path) -> Result<Raster<f64>> {
    Ok(load_pfm(path)?.map(|&x| x as f64))
}

pub fn save_pfm_f64(path: &Path, raster: &Raster<f64>) -> Result<()> {
    save_pfm(path, &raster.map(|&x| x as f32))
}

/// Binary (`P5`) or ASCII (`P2`) PGM with `maxval ≤ 65535`.
pub fn read_pgm<R: Read>(reader: R) -> Result<Raster<u16>> {
    let mut r = BufReader::new(reader);
    let magic = header_token(&mut r)?;
    if magic != "P5" && magic != "P2" {
        return Err(format_err(format!("expected PGM magic `P5` or `P2`, found `{magic}`")));
    }
    let w: usize = parse(&header_token(&mut r)?, "width")?;
    let h: usize = parse(&header_token(&mut r)?, "height")?;
    let maxval: u32 = parse(&header_token(&mut r)?, "maxval")?;
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(format_err("invalid PGM dimensions or maxval"));
    }
    let mut data = Vec::with_capacity(w * h);
    if magic == "P2" {
        for _ in 0..w * h {
            let x: u32 = parse(&header_token(&mut r)?, "sample")?;
            data.push(x.min(maxval) as u16);
        }
    } else {
        let bytes_per = if maxval < 256 { 1 } else { 2 };
        let mut bytes = vec![0u8; bytes_per * w * h];
        r.read_exact(&mut bytes)
            .map_err(|_| format_err(format!("PGM data shorter than {w}x{h} samples")))?;
        if bytes_per == 1 {
            data.extend(bytes.iter().map(|&b| b as u16));
        } else {
            data.extend(bytes.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])));
        }
    }
    Raster::from_vec(h, w, data)
}

pub fn write_pgm<W: Write>(writer: W, raster: &Raster<u8>) -> Result<()> {
    let (h, w) = raster.shape();
    let mut out = BufWriter::new(writer);
    write!(out, "P5\n{w} {h}\n255\n")?;
    out.write_all(raster.as_slice())?;
    out.flush()?;
    Ok(())
}

/// Mask from a PGM: samples above half of the 8-bit range are inside.
pub fn load_mask(path: &Path) -> Result<DomainMask> {
    let raster = read_pgm(File::open(path)?)?;
    DomainMask::new(raster.map(|&x| x > 127))
}

pub fn save_mask(path: &Path, mask: &DomainMask) -> Result<()> {
    write_pgm(File::create(path)?, &mask.raster().map(|&b| if b { 255 } else { 0 }))
}

/// Grayscale rendering of values in `[0, 1]` (clamped), e.g. edge maps.
pub fn save_unit_pgm(path: &Path, raster: &Raster<f64>) -> Result<()> {
    write_pgm(File::create(path)?, &raster.map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8))
}

/// Height-field mesh over `Ω`: vertex `(v, −u, z)` per inside pixel and two
/// triangles per fully inside 2×2 block.
pub fn write_obj<W: Write>(writer: W, domain: &Domain, z: &[f64]) -> Result<()> {
    if z.len() != domain.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} depth values on a domain of {} pixels",
            z.len(),
            domain.len()
        )));
    }
    let mut out = BufWriter::new(writer);
    let index = domain.index();
    for (i, &(u, v)) in index.pixels().iter().enumerate() {
        writeln!(out, "v {} {} {}", v, -(u as f64), z[i])?;
    }
    let (h, w) = domain.shape();
    for u in 0..h.saturating_sub(1) {
        for v in 0..w.saturating_sub(1) {
            let corners = [(u, v), (u + 1, v), (u + 1, v + 1), (u, v + 1)].map(|(a, b)| index.index_of(a, b));
            if let [Some(a), Some(b), Some(c), Some(d)] = corners {
                writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1)?;
                writeln!(out, "f {} {} {}", a + 1, c + 1, d + 1)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
