//! Line-oriented text format for measures and measurements.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! k  Omega  sigma  n
//! y_1 .. y_k  re(a)  im(a)        (n lines)
//! w_1 .. w_k  re(Y)  im(Y)  mask  (measurement files only, until EOF)
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every value bit for bit. The mask column is
//! `1` or `0`; a measurement whose mask is all ones reads back unmasked.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DiscreteMeasure, Measurement};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFile {
    pub measure: DiscreteMeasure,
    pub cutoff: f64,
    pub noise_level: f64,
}

/// A measurement together with the measure that generated it (possibly
/// empty when the source is unknown).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFile {
    pub measure: DiscreteMeasure,
    pub measurement: Measurement,
}

fn write_header<W: Write>(
    out: &mut W,
    dim: usize,
    cutoff: f64,
    sigma: f64,
    n: usize,
) -> Result<()> {
    writeln!(out, "{dim} {cutoff} {sigma} {n}")?;
    Ok(())
}

fn write_points<W: Write>(out: &mut W, measure: &DiscreteMeasure) -> Result<()> {
    for j in 0..measure.len() {
        for c in measure.point(j) {
            write!(out, "{c} ")?;
        }
        let a = measure.amplitudes()[j];
        writeln!(out, "{} {}", a.re, a.im)?;
    }
    Ok(())
}

pub fn write_measure<W: Write>(out: &mut W, file: &MeasureFile) -> Result<()> {
    let m = &file.measure;
    write_header(out, m.dim(), file.cutoff, file.noise_level, m.len())?;
    write_points(out, m)
}

pub fn write_measurement<W: Write>(out: &mut W, file: &MeasurementFile) -> Result<()> {
    let y = &file.measurement;
    if file.measure.dim() != y.dim() {
        return Err(Error::InvalidMeasurement(
            "measure and measurement dimensions differ".into(),
        ));
    }
    write_header(
        out,
        y.dim(),
        y.cutoff(),
        y.noise_level(),
        file.measure.len(),
    )?;
    write_points(out, &file.measure)?;
    for i in 0..y.len() {
        for c in y.frequency(i) {
            write!(out, "{c} ")?;
        }
        let v = y.values()[i];
        writeln!(out, "{} {} {}", v.re, v.im, u8::from(y.is_observed(i)))?;
    }
    Ok(())
}

struct Lines<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> Lines<R> {
    fn new(inner: R) -> Self {
        Self {
            inner,
            line: 0,
            buf: String::new(),
        }
    }

    /// Next non-blank, non-comment line split into fields.
    fn next_fields(&mut self) -> Result<Option<Vec<String>>> {
        loop {
            self.buf.clear();
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let t = self.buf.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(Some(t.split_whitespace().map(str::to_owned).collect()));
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn float(&self, s: &str) -> Result<f64> {
        s.parse().map_err(|_| self.err(format!("bad number {s:?}")))
    }
}

struct Header {
    dim: usize,
    cutoff: f64,
    sigma: f64,
}

fn read_head<R: BufRead>(lines: &mut Lines<R>) -> Result<(Header, DiscreteMeasure)> {
    let f = lines
        .next_fields()?
        .ok_or_else(|| lines.err("missing header"))?;
    if f.len() != 4 {
        return Err(lines.err("header must be `k Omega sigma n`"));
    }
    let dim: usize = f[0].parse().map_err(|_| lines.err("bad dimension"))?;
    let n: usize = f[3].parse().map_err(|_| lines.err("bad point count"))?;
    let header = Header {
        dim,
        cutoff: lines.float(&f[1])?,
        sigma: lines.float(&f[2])?,
    };
    if dim == 0 {
        return Err(lines.err("dimension must be positive"));
    }
    let mut points = Vec::with_capacity(n * dim);
    let mut amplitudes = Vec::with_capacity(n);
    for _ in 0..n {
        let f = lines
            .next_fields()?
            .ok_or_else(|| lines.err("truncated point list"))?;
        if f.len() != dim + 2 {
            return Err(lines.err(format!("point line needs {} fields", dim + 2)));
        }
        for s in &f[..dim] {
            points.push(lines.float(s)?);
        }
        amplitudes.push(Complex64::new(
            lines.float(&f[dim])?,
            lines.float(&f[dim + 1])?,
        ));
    }
    let measure = DiscreteMeasure::new(dim, points, amplitudes)?;
    Ok((header, measure))
}

pub fn read_measure<R: BufRead>(input: R) -> Result<MeasureFile> {
    let mut lines = Lines::new(input);
    let (h, measure) = read_head(&mut lines)?;
    if lines.next_fields()?.is_some() {
        return Err(lines.err("trailing data after point list"));
    }
    Ok(MeasureFile {
        measure,
        cutoff: h.cutoff,
        noise_level: h.sigma,
    })
}

pub fn read_measurement<R: BufRead>(input: R) -> Result<MeasurementFile> {
    let mut lines = Lines::new(input);
    let (h, measure) = read_head(&mut lines)?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    while let Some(f) = lines.next_fields()? {
        if f.len() != h.dim + 3 {
            return Err(lines.err(format!("sample line needs {} fields", h.dim + 3)));
        }
        for s in &f[..h.dim] {
            grid.push(lines.float(s)?);
        }
        values.push(Complex64::new(
            lines.float(&f[h.dim])?,
            lines.float(&f[h.dim + 1])?,
        ));
        mask.push(match f[h.dim + 2].as_str() {
            "1" => true,
            "0" => false,
            other => return Err(lines.err(format!("mask must be 0 or 1, got {other:?}"))),
        });
    }
    let mask = if mask.iter().all(|&b| b) {
        None
    } else {
        Some(mask)
    };
    let measurement = Measurement::new(h.dim, grid, values, h.cutoff, h.sigma, mask)?;
    Ok(MeasurementFile {
        measure,
        measurement,
    })
}
