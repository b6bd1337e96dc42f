//! On-disk arrays: CSV text, the binary `ORKA` container, and PGM import.
//!
//! Binary layout: `b"ORKA"`, version byte `1`, `u64` LE rank, one `u64` LE
//! per dimension, then `f64` LE values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{ArrayD, IxDyn};
use tempfile::NamedTempFile;

use crate::error::CliError;

const MAGIC: &[u8; 4] = b"ORKA";
const VERSION: u8 = 1;
const MAX_RANK: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Bin,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "bin" => Ok(Format::Bin),
            other => Err(CliError::usage(format!(
                "unknown format {other:?}, expected csv or bin"
            ))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Bin => "bin",
        }
    }
}

/// Writes `path` through a temporary file in the same directory, renamed
/// into place once complete.
pub fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::io(path, e);
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w).map_err(io)?;
        w.flush().map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

pub fn write_array(path: &Path, a: &ArrayD<f64>, format: Format) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let text = csv_text(a)?;
            write_text(path, &text)
        }
        Format::Bin => write_atomic(path, |w| write_binary(w, a)),
    }
}

/// Rows of a rank-1 or rank-2 array, 17 significant digits per value.
pub fn csv_text(a: &ArrayD<f64>) -> Result<String, CliError> {
    let (rows, cols) = match a.shape() {
        [n] => (*n, 1),
        [m, n] => (*m, *n),
        s => {
            return Err(CliError::usage(format!(
                "CSV holds at most two dimensions, got shape {s:?}; use --format bin"
            )))
        }
    };
    let flat: Vec<f64> = a.iter().copied().collect();
    let mut out = String::with_capacity(rows * cols * 24);
    for r in 0..rows {
        let line: Vec<String> = flat[r * cols..(r + 1) * cols]
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_binary(w: &mut dyn Write, a: &ArrayD<f64>) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(a.ndim() as u64).to_le_bytes())?;
    for &d in a.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in a.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a binary array, checking the header against the byte count before
/// allocating the values.
pub fn read_binary(r: &mut impl Read, available: u64) -> Result<ArrayD<f64>, CliError> {
    let bad = |msg: String| CliError::format(msg);
    let mut head = [0u8; 13];
    r.read_exact(&mut head)
        .map_err(|_| bad("truncated header".into()))?;
    if &head[..4] != MAGIC {
        return Err(bad("missing ORKA magic".into()));
    }
    if head[4] != VERSION {
        return Err(bad(format!("unsupported version {}", head[4])));
    }
    let rank = u64::from_le_bytes(head[5..13].try_into().expect("8 bytes"));
    if rank == 0 || rank > MAX_RANK {
        return Err(bad(format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    let mut dims = Vec::with_capacity(rank as usize);
    let mut count: u64 = 1;
    for _ in 0..rank {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)
            .map_err(|_| bad("truncated dimensions".into()))?;
        let d = u64::from_le_bytes(b);
        count = count
            .checked_mul(d)
            .ok_or_else(|| bad("dimensions overflow".into()))?;
        dims.push(usize::try_from(d).map_err(|_| bad(format!("dimension {d} too large")))?);
    }
    let header = 13 + 8 * rank;
    let expected = count.checked_mul(8).and_then(|b| b.checked_add(header));
    if expected != Some(available) {
        return Err(bad(format!(
            "header announces {count} values but the file holds {available} bytes"
        )));
    }
    let mut bytes = vec![0u8; (count * 8) as usize];
    r.read_exact(&mut bytes)
        .map_err(|_| bad("truncated values".into()))?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ArrayD::from_shape_vec(IxDyn(&dims), values).map_err(|e| bad(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<ArrayD<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::format(format!("line {}: {e}", i + 1)))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::format(format!("line {}: not a number: {field:?}", i + 1))
            })?;
            values.push(v);
        }
        rows += 1;
        cols.get_or_insert(record.len());
    }
    let cols = cols.ok_or_else(|| CliError::format("empty CSV".into()))?;
    ArrayD::from_shape_vec(IxDyn(&[rows, cols]), values)
        .map_err(|e| CliError::format(e.to_string()))
}

/// Binary PGM (P5, maxval 255) as a `height x width` array scaled to `[0, 1]`.
pub fn parse_pgm(bytes: &[u8]) -> Result<ArrayD<f64>, CliError> {
    let bad = |msg: &str| CliError::format(format!("PGM: {msg}"));
    let mut pos = 0;
    let mut token = || -> Result<String, CliError> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("only binary P5 files are supported"));
    }
    let mut number =
        |what: &str| -> Result<usize, CliError> { token()?.parse().map_err(|_| bad(what)) };
    let width = number("bad width")?;
    let height = number("bad height")?;
    let maxval = number("bad maxval")?;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    // a single whitespace byte separates the header from the pixels
    let start = pos + 1;
    let pixels = bytes
        .get(start..)
        .ok_or_else(|| bad("missing pixel data"))?;
    if pixels.len() != width * height {
        return Err(bad("pixel count does not match the header"));
    }
    let values = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    ArrayD::from_shape_vec(IxDyn(&[height, width]), values)
        .map_err(|e| CliError::format(e.to_string()))
}

/// Reads a binary, PGM or CSV array, chosen by content.
pub fn read_array(path: &Path) -> Result<ArrayD<f64>, CliError> {
    let io = |e: std::io::Error| CliError::io(path, e);
    let file = File::open(path).map_err(io)?;
    let len = file.metadata().map_err(io)?.len();
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    let n = r.read(&mut magic).map_err(io)?;
    if n == 4 && &magic == MAGIC {
        let mut chained = (&magic[..]).chain(r);
        return read_binary(&mut chained, len);
    }
    let mut bytes = magic[..n].to_vec();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.starts_with(b"P5") {
        return parse_pgm(&bytes);
    }
    let text = String::from_utf8(bytes).map_err(|_| {
        CliError::format(format!(
            "{} is neither ORKA binary, PGM nor CSV",
            path.display()
        ))
    })?;
    parse_csv(&text)
}

/// A video as `rows x cols x frames`: a rank-3 binary file, or a directory of
/// frame files (binary, PGM or CSV) taken in file-name order.
pub fn read_video(path: &Path) -> Result<ArrayD<f64>, CliError> {
    if !path.is_dir() {
        let a = read_array(path)?;
        if a.ndim() != 3 {
            return Err(CliError::usage(format!(
                "{} has rank {}, a video needs rank 3",
                path.display(),
                a.ndim()
            )));
        }
        return Ok(a);
    }
    let mut entries: Vec<_> = std::fs::read_dir(path)
        .map_err(|e| CliError::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(CliError::usage(format!(
            "{} contains no frames",
            path.display()
        )));
    }
    let frames = entries
        .iter()
        .map(|p| read_array(p))
        .collect::<Result<Vec<_>, _>>()?;
    let shape = frames[0].shape().to_vec();
    if shape.len() != 2 || frames.iter().any(|f| f.shape() != shape.as_slice()) {
        return Err(CliError::format(
            "video frames must be equally sized 2D arrays".into(),
        ));
    }
    let (rows, cols) = (shape[0], shape[1]);
    Ok(ArrayD::from_shape_fn(
        IxDyn(&[rows, cols, frames.len()]),
        |ix| frames[ix[2]][[ix[0], ix[1]]],
    ))
}
