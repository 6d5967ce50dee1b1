//! Dataset CSV I/O.
//!
//! Layout: header `path_id,inst_0,inst_1,...`; one row per path; cells are
//! averaged delays with 4 decimal places. `#`-prefixed lines before the
//! header carry units and the design digest so a written file reloads
//! losslessly. The injected truth, when present, goes to a `.truth.json`
//! sidecar next to the CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{DelayDataset, GroundTruth, Units};

fn truth_sidecar(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().unwrap_or_default().to_string_lossy();
    csv_path.with_file_name(format!("{stem}.truth.json"))
}

pub fn write_dataset(ds: &DelayDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let units = match ds.units {
        Units::Ps => "ps",
        Units::Fps => "fps",
    };
    writeln!(out, "# units={units}").unwrap();
    if !ds.design_ref.is_empty() {
        writeln!(out, "# design={}", ds.design_ref).unwrap();
    }
    out.push_str("path_id");
    for i in 0..ds.nc() {
        write!(out, ",inst_{i}").unwrap();
    }
    out.push('\n');
    for j in 0..ds.np() {
        write!(out, "{j}").unwrap();
        for i in 0..ds.nc() {
            write!(out, ",{:.4}", ds.pd.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))?;
    if let Some(truth) = &ds.truth {
        let sidecar = truth_sidecar(path);
        let json = serde_json::to_string_pretty(truth).expect("serializable");
        fs::write(&sidecar, json).map_err(|e| Error::io(sidecar.display().to_string(), e))?;
    }
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<DelayDataset> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut units = Units::Fps;
    let mut design_ref = String::new();
    let mut header_cols: Option<usize> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(u) = comment.strip_prefix("units=") {
                units = match u {
                    "ps" => Units::Ps,
                    "fps" => Units::Fps,
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("unknown units `{other}`"),
                        })
                    }
                };
            } else if let Some(d) = comment.strip_prefix("design=") {
                design_ref = d.to_string();
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if header_cols.is_none() {
            if fields.first() != Some(&"path_id") {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected header starting with `path_id`".into(),
                });
            }
            if fields.len() < 2 {
                return Err(Error::DimensionMismatch(
                    "header names no instance columns".into(),
                ));
            }
            header_cols = Some(fields.len());
            continue;
        }
        let cols = header_cols.unwrap();
        if fields.len() != cols {
            return Err(Error::DimensionMismatch(format!(
                "line {lineno}: expected {cols} fields, found {}",
                fields.len()
            )));
        }
        let path_id: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad path id `{}`", fields[0]),
        })?;
        let mut values = Vec::with_capacity(cols - 1);
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad delay value `{f}`"),
            })?;
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("delay must be finite and > 0, found `{f}`"),
                });
            }
            values.push(v);
        }
        rows.push((path_id, values));
    }
    let Some(cols) = header_cols else {
        return Err(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        });
    };
    if rows.is_empty() {
        return Err(Error::DimensionMismatch("no data rows".into()));
    }
    rows.sort_by_key(|(id, _)| *id);
    for (expect, (id, _)) in rows.iter().enumerate() {
        if *id != expect {
            return Err(Error::Parse {
                line: 0,
                msg: format!("path ids must be dense: expected {expect}, found {id}"),
            });
        }
    }
    let nc = cols - 1;
    let np = rows.len();
    let mut pd = Matrix::zeros(nc, np);
    for (j, (_, values)) in rows.iter().enumerate() {
        for (i, &v) in values.iter().enumerate() {
            pd.set(i, j, v);
        }
    }
    let sidecar = truth_sidecar(path);
    let truth: Option<GroundTruth> = match fs::read_to_string(&sidecar) {
        Ok(json) => Some(serde_json::from_str(&json).map_err(|e| Error::Parse {
            line: 0,
            msg: format!("truth sidecar: {e}"),
        })?),
        Err(_) => None,
    };
    Ok(DelayDataset {
        pd,
        units,
        truth,
        design_ref,
    })
}
