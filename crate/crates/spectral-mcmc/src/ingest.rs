//! Loading, cleaning and centering of multivariate series.
//!
//! The spectral machinery downstream expects a gap-free, zero-mean T x r
//! matrix; everything here exists to produce one. Missing cells are kept
//! as NaN between `load_csv` and `interpolate_missing`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A T x r block of real observations with metadata.
///
/// Values are stored row-major: `values[t * r + j]` is series j at time t.
/// Missing cells are NaN until interpolated.
#[derive(Debug, Clone)]
pub struct MultiSeries {
    values: Vec<f64>,
    t_len: usize,
    r: usize,
    labels: Vec<String>,
    dt: f64,
    demeaned: bool,
    /// Column minima recorded by `log_shift_transform`, if applied.
    log_shift_mins: Option<Vec<f64>>,
}

impl MultiSeries {
    /// Builds a series from row-major values. `dt` defaults to 1.0 via
    /// [`MultiSeries::from_values`].
    pub fn new(values: Vec<f64>, t_len: usize, r: usize, labels: Vec<String>, dt: f64) -> Result<Self> {
        if r == 0 || t_len == 0 {
            return Err(Error::Data("series must have at least one row and one column".into()));
        }
        if values.len() != t_len * r {
            return Err(Error::Shape(format!(
                "expected {} values for a {}x{} series, got {}",
                t_len * r,
                t_len,
                r,
                values.len()
            )));
        }
        if labels.len() != r {
            return Err(Error::Shape(format!("expected {} labels, got {}", r, labels.len())));
        }
        if !(dt > 0.0) {
            return Err(Error::Data("sampling interval dt must be positive".into()));
        }
        Ok(MultiSeries {
            values,
            t_len,
            r,
            labels,
            dt,
            demeaned: false,
            log_shift_mins: None,
        })
    }

    /// Convenience constructor with default labels and dt = 1.
    pub fn from_values(values: Vec<f64>, t_len: usize, r: usize) -> Result<Self> {
        let labels = (0..r).map(|j| format!("x{}", j + 1)).collect();
        Self::new(values, t_len, r, labels, 1.0)
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn is_demeaned(&self) -> bool {
        self.demeaned
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column minima subtracted by `log_shift_transform`, when applied.
    pub fn log_shift_mins(&self) -> Option<&[f64]> {
        self.log_shift_mins.as_deref()
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.r + j]
    }

    /// Column j as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.t_len).map(|t| self.get(t, j)).collect()
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    fn require_complete(&self) -> Result<()> {
        if self.has_missing() { Err(Error::MissingValues) } else { Ok(()) }
    }

    /// Loads a CSV file: one row per time point, one column per series,
    /// optional header row of labels. Empty cells and "NA" (any case) are
    /// recorded as missing for later interpolation.
    pub fn load_csv<P: AsRef<Path>>(path: P, has_header: bool) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        let reader = BufReader::new(file);
        let mut labels: Vec<String> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut r = 0usize;
        let mut t_len = 0usize;

        for (line_idx, line) in reader.lines().enumerate() {
            let line = line?;
            let row_no = line_idx + 1;
            if line_idx == 0 && line.starts_with('\u{feff}') {
                // strip a BOM if present
            }
            let line = line.trim_start_matches('\u{feff}');
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if has_header && labels.is_empty() && t_len == 0 {
                labels = cells.iter().map(|s| s.to_string()).collect();
                r = labels.len();
                continue;
            }
            if r == 0 {
                r = cells.len();
            }
            if cells.len() != r {
                return Err(Error::Format {
                    row: row_no,
                    message: format!("expected {} columns, found {}", r, cells.len()),
                });
            }
            for (col_idx, cell) in cells.iter().enumerate() {
                if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                    values.push(f64::NAN);
                } else {
                    match cell.parse::<f64>() {
                        Ok(v) => values.push(v),
                        Err(_) => {
                            return Err(Error::Parse {
                                row: row_no,
                                col: col_idx + 1,
                                message: format!("cannot parse {:?} as a number", cell),
                            });
                        }
                    }
                }
            }
            t_len += 1;
        }

        if t_len == 0 || r == 0 {
            return Err(Error::Data("file contains no data rows".into()));
        }
        if labels.is_empty() {
            labels = (0..r).map(|j| format!("x{}", j + 1)).collect();
        }
        MultiSeries::new(values, t_len, r, labels, 1.0)
    }

    /// Writes the series back out with the same layout `load_csv` reads.
    /// Values round-trip exactly (shortest-representation formatting);
    /// missing cells are written as "NA".
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        writeln!(w, "{}", self.labels.join(","))?;
        for t in 0..self.t_len {
            let row: Vec<String> = (0..self.r)
                .map(|j| {
                    let v = self.get(t, j);
                    if v.is_nan() { "NA".to_string() } else { format!("{}", v) }
                })
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Fills every missing cell by linear interpolation between the nearest
    /// observed neighbours in the same column. Idempotent on gap-free input.
    pub fn interpolate_missing(&self) -> Result<Self> {
        let mut out = self.clone();
        for j in 0..self.r {
            if self.get(0, j).is_nan() || self.get(self.t_len - 1, j).is_nan() {
                return Err(Error::MissingEndpoint { col: j + 1 });
            }
            let mut t = 0;
            while t < self.t_len {
                if !out.values[t * self.r + j].is_nan() {
                    t += 1;
                    continue;
                }
                let start = t - 1; // observed: endpoint check guarantees t > 0
                let mut end = t;
                while out.values[end * self.r + j].is_nan() {
                    end += 1;
                }
                let a = out.values[start * self.r + j];
                let b = out.values[end * self.r + j];
                let gap = (end - start) as f64;
                for k in (start + 1)..end {
                    let frac = (k - start) as f64 / gap;
                    out.values[k * self.r + j] = a + frac * (b - a);
                }
                t = end + 1;
            }
        }
        Ok(out)
    }

    /// Subtracts each column's sample mean and sets the demeaned flag.
    pub fn demean(&self) -> Result<Self> {
        self.require_complete()?;
        let mut out = self.clone();
        for j in 0..self.r {
            let mean = (0..self.t_len).map(|t| self.get(t, j)).sum::<f64>() / self.t_len as f64;
            for t in 0..self.t_len {
                out.values[t * self.r + j] -= mean;
            }
        }
        out.demeaned = true;
        Ok(out)
    }

    /// Maps each column x -> log(x - min(x) + 1) and records the minima.
    /// The argument of the log is >= 1 by construction, so outputs are
    /// finite for any input.
    pub fn log_shift_transform(&self) -> Result<Self> {
        self.require_complete()?;
        let mut out = self.clone();
        let mut mins = Vec::with_capacity(self.r);
        for j in 0..self.r {
            let min = (0..self.t_len).map(|t| self.get(t, j)).fold(f64::INFINITY, f64::min);
            mins.push(min);
            for t in 0..self.t_len {
                let v = out.values[t * self.r + j];
                out.values[t * self.r + j] = (v - min + 1.0).ln();
            }
        }
        out.log_shift_mins = Some(mins);
        out.demeaned = false;
        Ok(out)
    }
}
