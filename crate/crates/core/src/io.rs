//! File formats.
//!
//! Grids and masks share one layout: a single JSON header line terminated by
//! `\n`, followed by the payload. Grid payloads are little-endian `f64` in
//! row-major order, or CSV rows `k0,..,k{d-1},value` for small grids. Mask
//! payloads pack one bit per cell, least significant bit first.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lattice, CubicalMask, ObservationGrid, PersistenceDiagram};

const GRID_FORMAT: &str = "jumpgeo-grid";
const MASK_FORMAT: &str = "jumpgeo-mask";
const VERSION: u32 = 1;

/// Largest side length accepted for CSV grids.
pub const CSV_MAX_SIDE: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridEncoding {
    F64Le,
    Csv,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    format: String,
    version: u32,
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    sigma: Option<f64>,
    seed: Option<u64>,
    encoding: GridEncoding,
}

#[derive(Debug, Serialize, Deserialize)]
struct MaskHeader {
    format: String,
    version: u32,
    d: usize,
    m: usize,
    count: usize,
}

fn read_header<T: for<'de> Deserialize<'de>>(reader: &mut impl BufRead) -> Result<T> {
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("missing header line".into()));
    }
    Ok(serde_json::from_slice(&line)?)
}

fn check_format(found: &str, expected: &str, version: u32) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!("expected a {expected} file, found '{found}'")));
    }
    if version != VERSION {
        return Err(Error::Format(format!("unsupported {expected} version {version}")));
    }
    Ok(())
}

pub fn write_grid(grid: &ObservationGrid, encoding: GridEncoding, out: impl Write) -> Result<()> {
    if encoding == GridEncoding::Csv && grid.side() > CSV_MAX_SIDE {
        return Err(Error::Format(format!("CSV grids are limited to N <= {CSV_MAX_SIDE}, got {}", grid.side())));
    }
    let mut out = BufWriter::new(out);
    let header = GridHeader {
        format: GRID_FORMAT.into(),
        version: VERSION,
        d: grid.dim(),
        n: grid.side(),
        sigma: grid.noise_sigma(),
        seed: grid.seed(),
        encoding,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    match encoding {
        GridEncoding::F64Le => {
            for v in grid.values() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        GridEncoding::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut names: Vec<String> = (0..grid.dim()).map(|a| format!("k{a}")).collect();
            names.push("value".into());
            w.write_record(&names)?;
            for (i, k) in lattice::indices(grid.side(), grid.dim()).enumerate() {
                let mut row: Vec<String> = k.iter().map(|k| k.to_string()).collect();
                row.push(format!("{:?}", grid.values()[i]));
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_grid(input: impl Read) -> Result<ObservationGrid> {
    let mut reader = BufReader::new(input);
    let header: GridHeader = read_header(&mut reader)?;
    check_format(&header.format, GRID_FORMAT, header.version)?;
    let len = lattice::volume(header.n, header.d).ok_or_else(|| Error::Format("grid size overflows".into()))?;
    let values = match header.encoding {
        GridEncoding::F64Le => {
            let mut bytes = Vec::new();
            reader.read_to_end(&mut bytes)?;
            if bytes.len() != 8 * len {
                return Err(Error::Format(format!("expected {} payload bytes, found {}", 8 * len, bytes.len())));
            }
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect()
        }
        GridEncoding::Csv => {
            let mut values = vec![f64::NAN; len];
            let mut seen = vec![false; len];
            let mut r = csv::Reader::from_reader(reader);
            for record in r.records() {
                let record = record?;
                if record.len() != header.d + 1 {
                    return Err(Error::Format(format!(
                        "CSV row has {} fields, expected {}",
                        record.len(),
                        header.d + 1
                    )));
                }
                let parse_err = |e: &dyn std::fmt::Display| Error::Format(format!("bad CSV field: {e}"));
                let k: Vec<usize> = (0..header.d)
                    .map(|a| record[a].parse::<usize>().map_err(|e| parse_err(&e)))
                    .collect::<Result<_>>()?;
                if k.iter().any(|&k| k >= header.n) {
                    return Err(Error::Format(format!("lattice index {k:?} out of range")));
                }
                let i = lattice::ravel(&k, header.n);
                values[i] = record[header.d].parse::<f64>().map_err(|e| parse_err(&e))?;
                seen[i] = true;
            }
            if let Some(i) = seen.iter().position(|s| !s) {
                return Err(Error::Format(format!("CSV grid is missing lattice point {i}")));
            }
            values
        }
    };
    Ok(ObservationGrid::new(header.d, header.n, values, header.sigma)?.with_seed(header.seed))
}

pub fn write_mask(mask: &CubicalMask, out: impl Write) -> Result<()> {
    let mut out = BufWriter::new(out);
    let header = MaskHeader {
        format: MASK_FORMAT.into(),
        version: VERSION,
        d: mask.dim(),
        m: mask.resolution(),
        count: mask.count(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut bytes = vec![0u8; mask.len().div_ceil(8)];
    for i in mask.set_cells() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

pub fn read_mask(input: impl Read) -> Result<CubicalMask> {
    let mut reader = BufReader::new(input);
    let header: MaskHeader = read_header(&mut reader)?;
    check_format(&header.format, MASK_FORMAT, header.version)?;
    let len = lattice::volume(header.m, header.d).ok_or_else(|| Error::Format("mask size overflows".into()))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", len.div_ceil(8), bytes.len())));
    }
    let bits: Vec<bool> = (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
    let mask = CubicalMask::from_bits(header.d, header.m, bits)?;
    if mask.count() != header.count {
        return Err(Error::Format(format!("header says {} set cells, payload has {}", header.count, mask.count())));
    }
    Ok(mask)
}

pub fn save_grid(path: &Path, grid: &ObservationGrid, encoding: GridEncoding) -> Result<()> {
    write_grid(grid, encoding, File::create(path)?)
}

pub fn load_grid(path: &Path) -> Result<ObservationGrid> {
    read_grid(File::open(path)?)
}

pub fn save_mask(path: &Path, mask: &CubicalMask) -> Result<()> {
    write_mask(mask, File::create(path)?)
}

pub fn load_mask(path: &Path) -> Result<CubicalMask> {
    read_mask(File::open(path)?)
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Diagram points as `degree,birth,death` rows; essential deaths are `inf`.
pub fn write_diagrams_csv(diagrams: &[PersistenceDiagram], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["degree", "birth", "death"])?;
    for dgm in diagrams {
        for p in &dgm.points {
            let death = if p.is_essential() { "inf".to_string() } else { format!("{:?}", p.death) };
            w.write_record([dgm.degree.to_string(), format!("{:?}", p.birth), death])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid(side: usize) -> ObservationGrid {
        let values = (0..side * side).map(|i| (i as f64).sin() * 1e3 + 0.1).collect();
        ObservationGrid::new(2, side, values, Some(0.25)).unwrap().with_seed(Some(17))
    }

    #[test]
    fn grid_round_trip_binary_and_csv() {
        for enc in [GridEncoding::F64Le, GridEncoding::Csv] {
            let grid = sample_grid(12);
            let mut buf = Vec::new();
            write_grid(&grid, enc, &mut buf).unwrap();
            assert_eq!(read_grid(buf.as_slice()).unwrap(), grid);
        }
    }

    #[test]
    fn csv_refuses_large_grids() {
        let grid = sample_grid(65);
        assert!(write_grid(&grid, GridEncoding::Csv, Vec::new()).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let mask = CubicalMask::from_fn(3, 5, |c| (c[0] * 3 + c[1] + c[2] * 7) % 4 == 1).unwrap();
        let mut buf = Vec::new();
        write_mask(&mask, &mut buf).unwrap();
        let header_len = buf.iter().position(|&b| b == b'\n').unwrap() + 1;
        assert_eq!(buf.len() - header_len, 125usize.div_ceil(8));
        assert_eq!(read_mask(buf.as_slice()).unwrap(), mask);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut buf = Vec::new();
        write_grid(&sample_grid(4), GridEncoding::F64Le, &mut buf).unwrap();
        buf.pop();
        assert!(matches!(read_grid(buf.as_slice()), Err(Error::Format(_))));
        assert!(matches!(
            read_mask(&b"{\"format\":\"jumpgeo-grid\"}\n"[..]),
            Err(Error::Json(_)) | Err(Error::Format(_))
        ));
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let grid = sample_grid(6);
        let mask = CubicalMask::from_fn(2, 6, |c| c[0] == c[1]).unwrap();
        save_grid(&dir.path().join("g.bin"), &grid, GridEncoding::F64Le).unwrap();
        save_mask(&dir.path().join("m.bin"), &mask).unwrap();
        save_json(&dir.path().join("x.json"), &vec![1, 2, 3]).unwrap();
        assert_eq!(load_grid(&dir.path().join("g.bin")).unwrap(), grid);
        assert_eq!(load_mask(&dir.path().join("m.bin")).unwrap(), mask);
        assert_eq!(load_json::<Vec<u32>>(&dir.path().join("x.json")).unwrap(), vec![1, 2, 3]);
        assert!(matches!(load_mask(&dir.path().join("missing")), Err(Error::Io(_))));
    }
}
