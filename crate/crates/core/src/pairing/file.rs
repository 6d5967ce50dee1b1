//! Pairing census CSV and packed pair-list binaries.
//!
//! `pair_census.csv`: `L,N,members,included,reason`, one row per subgroup,
//! ordered by (L, N). Counter totals ride along as `#` comments so an index
//! reloads with its bookkeeping intact.
//!
//! `pairs_<L>_<N>.bin`: the subgroup's members as consecutive `(j, k)`
//! little-endian u32 pairs, for streaming consumers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{PairKey, PairingIndex, SubgroupStatus};

pub fn write_census(index: &PairingIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    writeln!(out, "# scanned={}", index.scanned_pairs).unwrap();
    writeln!(out, "# admissible={}", index.admissible_pairs).unwrap();
    writeln!(out, "# retained={}", index.retained_pairs).unwrap();
    writeln!(out, "# one_extra_lut={}", index.one_extra_lut_pairs).unwrap();
    writeln!(out, "# inadmissible={}", index.inadmissible_pairs).unwrap();
    writeln!(out, "# multiset_nodes={}", index.multiset_nodes).unwrap();
    out.push_str("L,N,members,included,reason\n");
    for (&(l, n), &members) in &index.census {
        let status = index.screening.get(&(l, n));
        writeln!(
            out,
            "{l},{n},{members},{},{}",
            status.map_or(false, |s| s.included),
            status.map_or("", |s| s.reason.as_str())
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reloads a census written by [`write_census`]. Subgroup member lists are
/// not part of the census; load them per subgroup with [`read_pairs_bin`].
pub fn read_census(path: impl AsRef<Path>) -> Result<PairingIndex> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut index = PairingIndex::default();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some((key, value)) = comment.split_once('=') {
                let parse_u64 = || {
                    value.parse::<u64>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad counter `{value}`"),
                    })
                };
                match key {
                    "scanned" => index.scanned_pairs = parse_u64()?,
                    "admissible" => index.admissible_pairs = parse_u64()?,
                    "retained" => index.retained_pairs = parse_u64()?,
                    "one_extra_lut" => index.one_extra_lut_pairs = parse_u64()?,
                    "inadmissible" => index.inadmissible_pairs = parse_u64()?,
                    "multiset_nodes" => index.multiset_nodes = value == "true",
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if line != "L,N,members,included,reason" {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected census header".into(),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad number `{s}`"),
            })
        };
        let l = parse(fields[0])? as u32;
        let n = parse(fields[1])? as u32;
        let members = parse(fields[2])?;
        index.census.insert((l, n), members);
        index.screening.insert(
            (l, n),
            SubgroupStatus {
                included: fields[3] == "true",
                reason: fields[4].to_string(),
            },
        );
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 0,
            msg: "missing census header".into(),
        });
    }
    Ok(index)
}

pub fn pairs_bin_name(l: u32, n: u32) -> String {
    format!("pairs_{l}_{n}.bin")
}

pub fn write_pairs_bin(pairs: &[PairKey], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(pairs.len() * 8);
    for p in pairs {
        bytes.extend_from_slice(&p.j.to_le_bytes());
        bytes.extend_from_slice(&p.k.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_pairs_bin(path: impl AsRef<Path>) -> Result<Vec<PairKey>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| PairKey {
            j: u32::from_le_bytes(c[0..4].try_into().unwrap()),
            k: u32::from_le_bytes(c[4..8].try_into().unwrap()),
        })
        .collect())
}

/// Writes the census plus one `.bin` per subgroup into a directory.
pub fn write_index_dir(index: &PairingIndex, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    write_census(index, dir.join("pair_census.csv"))?;
    for (&(l, n), pairs) in &index.subgroups {
        write_pairs_bin(pairs, dir.join(pairs_bin_name(l, n)))?;
    }
    Ok(())
}

/// Loads a census directory back into a full index.
pub fn read_index_dir(dir: impl AsRef<Path>) -> Result<PairingIndex> {
    let dir = dir.as_ref();
    let mut index = read_census(dir.join("pair_census.csv"))?;
    let keys: Vec<(u32, u32)> = index.census.keys().copied().collect();
    for (l, n) in keys {
        let pairs = read_pairs_bin(dir.join(pairs_bin_name(l, n)))?;
        if pairs.len() as u64 != index.census[&(l, n)] {
            return Err(Error::DimensionMismatch(format!(
                "subgroup ({l},{n}): census says {} members, bin holds {}",
                index.census[&(l, n)],
                pairs.len()
            )));
        }
        index.subgroups.insert((l, n), pairs);
    }
    Ok(index)
}
