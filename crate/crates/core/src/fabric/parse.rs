//! Design file I/O (`.paths.jsonl`): one JSON object per line, UTF-8, LF.
//!
//! ```text
//! {"id":0,"pol":"R","launch":"R/LFF0","capture":"R/CFF3","segs":[{"nodes":["a","b"],"lut":"L1"},{"nodes":["c"],"lut":null}]}
//! ```
//!
//! The final segment carries `"lut":null` and is the node run into the
//! capture FF. LUT and node counts are recomputed from the segments while
//! parsing; the file never stores them.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::{FabricDesign, Polarity};

#[derive(Serialize, Deserialize)]
struct SegLine {
    nodes: Vec<String>,
    lut: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct PathLine {
    id: u64,
    pol: String,
    launch: String,
    capture: String,
    segs: Vec<SegLine>,
}

/// Serializes a design to its canonical line format.
pub fn write_design(design: &FabricDesign) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for p in design.paths() {
        let segs = design
            .segments(p)
            .into_iter()
            .map(|(nodes, lut)| SegLine {
                nodes: nodes.iter().map(|&n| design.component(n).name.clone()).collect(),
                lut: lut.map(|l| design.component(l).name.clone()),
            })
            .collect();
        let line = PathLine {
            id: p.path_id as u64,
            pol: p.polarity.tag().to_string(),
            launch: design.component(p.launch_ff).name.clone(),
            capture: design.component(p.capture_ff).name.clone(),
            segs,
        };
        serde_json::to_writer(&mut out, &line).expect("serialization cannot fail");
        out.push(b'\n');
    }
    Ok(out)
}

pub fn write_design_file(design: &FabricDesign, path: impl AsRef<Path>) -> Result<()> {
    let bytes = write_design(design)?;
    let p = path.as_ref();
    let mut f = fs::File::create(p).map_err(|e| Error::io(p.display().to_string(), e))?;
    f.write_all(&bytes).map_err(|e| Error::io(p.display().to_string(), e))?;
    Ok(())
}

/// SHA-256 hex digest of the canonical serialization. Used to tie datasets
/// to the design they were measured against.
pub fn design_digest(design: &FabricDesign) -> String {
    let bytes = write_design(design).expect("in-memory serialization");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    format!("{:x}", hasher.finalize())
}

/// Parses the line format. Paths may appear in any id order, but ids must be
/// dense 0..NP−1 and unique.
pub fn parse_design_str(text: &str) -> Result<FabricDesign> {
    let mut parsed: Vec<(usize, PathLine)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PathLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        parsed.push((lineno, rec));
    }
    parsed.sort_by_key(|(_, r)| r.id);
    for w in parsed.windows(2) {
        if w[0].1.id == w[1].1.id {
            return Err(Error::DuplicatePathId(w[0].1.id));
        }
    }
    let mut design = FabricDesign::new();
    for (expected, (lineno, rec)) in parsed.into_iter().enumerate() {
        if rec.id != expected as u64 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("path ids must be dense: expected {expected}, found {}", rec.id),
            });
        }
        let pol = Polarity::from_tag(&rec.pol).ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("unknown polarity tag `{}`", rec.pol),
        })?;
        if rec.segs.is_empty() {
            return Err(Error::EmptyPath(rec.id));
        }
        let segments: Vec<(Vec<String>, Option<String>)> =
            rec.segs.into_iter().map(|s| (s.nodes, s.lut)).collect();
        design
            .push_path(pol, &rec.launch, &rec.capture, &segments)
            .map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse { line: lineno, msg },
                other => other,
            })?;
    }
    design.validate()?;
    Ok(design)
}

pub fn parse_design(bytes: &[u8]) -> Result<FabricDesign> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("invalid UTF-8: {e}"),
    })?;
    parse_design_str(text)
}

pub fn read_design(path: impl AsRef<Path>) -> Result<FabricDesign> {
    let p = path.as_ref();
    let bytes = fs::read(p).map_err(|e| Error::io(p.display().to_string(), e))?;
    parse_design(&bytes)
}
