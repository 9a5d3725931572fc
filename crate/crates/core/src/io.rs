//! CSV serialization for sampled fields and tabular results.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which
//! round-trips `f64` exactly, so rerunning a command reproduces its output
//! files byte for byte.

use crate::grid::{Axis, Grid4, SampledField, AXIS_NAMES};
use crate::spacetime::{Frame, SpaceTimePoint};
use crate::{Error, Result};
use std::io::{BufRead, Write};
use std::path::Path;

/// A plain table of named float columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        CsvTable {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.to_vec());
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidSpec(format!("missing column `{name}`")))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<CsvTable> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty file".into(),
        })?;
        let header = header?;
        let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 1,
                        message: format!("bad float `{}`: {e}", s.trim()),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != columns.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} fields, got {}", columns.len(), row.len()),
                });
            }
            rows.push(row);
        }
        Ok(CsvTable { columns, rows })
    }

    pub fn read_file<P: AsRef<Path>>(path: P) -> Result<CsvTable> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(f)
    }
}

/// Export a sampled field as `t,x,y,z,<channels...>` rows in node order.
pub fn table_from_sampled(field: &SampledField, channel_names: &[&str]) -> CsvTable {
    assert_eq!(channel_names.len(), field.channels);
    let mut columns: Vec<String> = AXIS_NAMES.iter().map(|s| s.to_string()).collect();
    columns.extend(channel_names.iter().map(|s| s.to_string()));
    let mut table = CsvTable {
        columns,
        rows: Vec::with_capacity(field.grid.node_count()),
    };
    let axes = field.grid.axes();
    let mut row = vec![0.0; 4 + field.channels];
    for flat in 0..field.grid.node_count() {
        let idx = field.grid.unflat(flat);
        for a in 0..4 {
            row[a] = axes[a].node(idx[a]);
        }
        for ch in 0..field.channels {
            row[4 + ch] = field.values[flat * field.channels + ch];
        }
        table.rows.push(row.clone());
    }
    table
}

/// Rebuild a sampled field from a table written by [`table_from_sampled`]:
/// recover each axis from its sorted unique coordinates and demand exactly
/// one row per node.
pub fn sampled_from_table(table: &CsvTable, channel_names: &[&str]) -> Result<SampledField> {
    let coord_cols: Vec<usize> = AXIS_NAMES
        .iter()
        .map(|n| table.column(n))
        .collect::<Result<_>>()?;
    let channel_cols: Vec<usize> = channel_names
        .iter()
        .map(|n| table.column(n))
        .collect::<Result<_>>()?;

    let mut axes = [Axis::new(0.0, 0.0, 1); 4];
    let mut ticks: [Vec<f64>; 4] = Default::default();
    for a in 0..4 {
        let mut vals: Vec<f64> = table.rows.iter().map(|r| r[coord_cols[a]]).collect();
        vals.sort_by(|p, q| p.partial_cmp(q).unwrap());
        vals.dedup_by(|p, q| (*p - *q).abs() <= 1e-12 * (1.0 + q.abs()));
        if vals.is_empty() {
            return Err(Error::InvalidSpec("table has no rows".into()));
        }
        axes[a] = Axis::new(vals[0], *vals.last().unwrap(), vals.len());
        // verify uniform spacing
        let h = axes[a].step();
        for (i, v) in vals.iter().enumerate() {
            if (v - axes[a].node(i)).abs() > 1e-9 * (1.0 + v.abs()) {
                return Err(Error::InvalidSpec(format!(
                    "axis `{}` is not uniformly spaced near {v}",
                    AXIS_NAMES[a]
                )));
            }
        }
        let _ = h;
        ticks[a] = vals;
    }
    let grid = Grid4::new(axes[0], axes[1], axes[2], axes[3]);
    if table.rows.len() != grid.node_count() {
        return Err(Error::InvalidSpec(format!(
            "table has {} rows but the axes imply {} nodes",
            table.rows.len(),
            grid.node_count()
        )));
    }

    let channels = channel_names.len();
    let mut values = vec![f64::NAN; grid.node_count() * channels];
    for row in &table.rows {
        let mut idx = [0usize; 4];
        for a in 0..4 {
            let v = row[coord_cols[a]];
            idx[a] = ticks[a]
                .iter()
                .position(|t| (t - v).abs() <= 1e-9 * (1.0 + v.abs()))
                .ok_or_else(|| Error::InvalidSpec(format!("stray coordinate {v}")))?;
        }
        let flat = grid.flat(idx);
        for (ch, &col) in channel_cols.iter().enumerate() {
            values[flat * channels + ch] = row[col];
        }
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidSpec("table does not cover every node".into()));
    }
    Ok(SampledField {
        grid,
        channels,
        values,
    })
}

impl SampledField {
    /// Multilinear interpolation at an event inside the grid hull.
    pub fn interpolate(&self, p: &SpaceTimePoint, frame: Frame, out: &mut [f64]) -> Result<()> {
        assert_eq!(out.len(), self.channels);
        let coords = [p.t(frame), p.r.x, p.r.y, p.r.z];
        let axes = self.grid.axes();
        let mut cell = [0usize; 4];
        let mut frac = [0.0f64; 4];
        for a in 0..4 {
            let ax = axes[a];
            let v = coords[a];
            if ax.n == 1 {
                continue;
            }
            let slack = 1e-9 * (1.0 + ax.step().abs());
            if v < ax.min - slack || v > ax.max + slack {
                return Err(Error::OutOfDomain {
                    axis: AXIS_NAMES[a].to_string(),
                    value: v,
                    min: ax.min,
                    max: ax.max,
                });
            }
            let s = ((v - ax.min) / ax.step()).clamp(0.0, (ax.n - 1) as f64);
            let i = (s.floor() as usize).min(ax.n - 2);
            cell[a] = i;
            frac[a] = s - i as f64;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for corner in 0..16usize {
            let mut w = 1.0;
            let mut idx = cell;
            for a in 0..4 {
                if axes[a].n == 1 {
                    continue;
                }
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let base = self.grid.flat(idx) * self.channels;
            for ch in 0..self.channels {
                out[ch] += w * self.values[base + ch];
            }
        }
        Ok(())
    }
}
