//! CSV and little-endian binary serialization of paths.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use crate::error::{Error, Result};

use super::{Grid, PathLabel, SamplePath};

/// Header of the binary path block: `n_steps: u64, T: f64, H: f64, seed: u64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryHeader {
    pub n_steps: u64,
    pub t_end: f64,
    pub hurst: f64,
    pub seed: u64,
}

pub fn write_path_csv<W: Write>(path: &SamplePath, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "t,value")?;
    for (t, v) in path.grid().times().iter().zip(path.values()) {
        writeln!(w, "{t},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_csv<R: Read>(input: R, label: PathLabel) -> Result<SamplePath> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("line {}: expected `t,value`", lineno + 1)))
        };
        times.push(parse(parts.next())?);
        values.push(parse(parts.next())?);
    }
    if times.len() < 2 {
        return Err(Error::Format("a path needs at least two points".into()));
    }
    let grid = Grid::new(*times.last().unwrap(), times.len() - 1)?;
    for (k, t) in times.iter().enumerate() {
        if (t - grid.time(k)).abs() > 1e-9 * grid.t_end() {
            return Err(Error::Format(format!("time column is not uniform at row {}", k + 2)));
        }
    }
    SamplePath::new(grid, values, label)
}

pub fn write_path_binary<W: Write>(path: &SamplePath, hurst: f64, seed: u64, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    w.write_all(&(path.grid().n_steps() as u64).to_le_bytes())?;
    w.write_all(&path.grid().t_end().to_le_bytes())?;
    w.write_all(&hurst.to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    for v in path.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_binary<R: Read>(mut input: R, label: PathLabel) -> Result<(BinaryHeader, SamplePath)> {
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut word)?;
        Ok(word)
    };
    let header = BinaryHeader {
        n_steps: u64::from_le_bytes(next(&mut input)?),
        t_end: f64::from_le_bytes(next(&mut input)?),
        hurst: f64::from_le_bytes(next(&mut input)?),
        seed: u64::from_le_bytes(next(&mut input)?),
    };
    let grid = Grid::new(header.t_end, header.n_steps as usize)?;
    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    for _ in 0..=grid.n_steps() {
        values.push(f64::from_le_bytes(next(&mut input)?));
    }
    Ok((header, SamplePath::new(grid, values, label)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> SamplePath {
        let g = Grid::new(0.5, 4).unwrap();
        SamplePath::new(g, vec![0.0, 0.1, -0.25, 1.0 / 3.0, 2.5], PathLabel::Fbm).unwrap()
    }

    #[test]
    fn csv_roundtrip() {
        let mut buf = Vec::new();
        write_path_csv(&path(), &mut buf).unwrap();
        let back = read_path_csv(buf.as_slice(), PathLabel::Fbm).unwrap();
        assert_eq!(back.values(), path().values());
    }

    #[test]
    fn binary_roundtrip() {
        let mut buf = Vec::new();
        write_path_binary(&path(), 0.3, 42, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (4 + 5));
        let (h, back) = read_path_binary(buf.as_slice(), PathLabel::Fbm).unwrap();
        assert_eq!(h, BinaryHeader { n_steps: 4, t_end: 0.5, hurst: 0.3, seed: 42 });
        assert_eq!(back, path());
    }

    #[test]
    fn truncated_binary_fails() {
        let mut buf = Vec::new();
        write_path_binary(&path(), 0.3, 42, &mut buf).unwrap();
        buf.truncate(50);
        assert!(read_path_binary(buf.as_slice(), PathLabel::Fbm).is_err());
    }
}
