//! Same-polarity path pairing, distinct-component classification, and
//! subgroup screening.
//!
//! Two paths of equal LUT length ending at the same capture FF are an
//! admissible pair: subtracting their delays cancels every shared component,
//! leaving only the variation of the distinct ones. Pairs are classed by
//! `L` = distinct LUT count (launch FFs count as LUTs) and subgrouped by
//! `N` = distinct node count, both via symmetric set difference on component
//! names. Only even `L` occurs for equal-length pairs; pairs whose lengths
//! differ by exactly one LUT (the minimal common-mode-rejection shape) are
//! tallied separately but never estimated from.

mod file;

pub use file::{
    pairs_bin_name, read_census, read_index_dir, read_pairs_bin, write_census, write_index_dir,
    write_pairs_bin,
};

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::compensation::CompensatedDataset;
use crate::decomposition;
use crate::error::{Error, Result};
use crate::fabric::{ComponentKind, FabricDesign, PathRecord, Polarity};

/// An unordered pair of path ids, stored with `j < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PairKey {
    pub j: u32,
    pub k: u32,
}

impl PairKey {
    pub fn new(a: u32, b: u32) -> Self {
        if a <= b {
            Self { j: a, k: b }
        } else {
            Self { j: b, k: a }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConfigTag {
    /// Lengths differ by one LUT and every other LUT is shared.
    OneExtraLut,
    /// Admissible with exactly two distinct LUTs.
    Bubble,
    /// Admissible with four or more distinct LUTs.
    LLutMismatch,
    Inadmissible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairClassification {
    pub key: PairKey,
    /// Distinct LUT count (launch FFs included in the LUT sets).
    pub l: u32,
    /// Distinct node count.
    pub n: u32,
    pub admissible: bool,
    pub tag: ConfigTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgroupStatus {
    pub included: bool,
    pub reason: String,
}

/// Pairing census and membership, keyed by `(L, N)`.
#[derive(Debug, Clone, Default)]
pub struct PairingIndex {
    pub subgroups: BTreeMap<(u32, u32), Vec<PairKey>>,
    pub census: BTreeMap<(u32, u32), u64>,
    pub screening: BTreeMap<(u32, u32), SubgroupStatus>,
    /// All same-polarity pairs scanned.
    pub scanned_pairs: u64,
    /// Admissible pairs, whether or not their L class was retained.
    pub admissible_pairs: u64,
    /// Admissible pairs retained in `subgroups`.
    pub retained_pairs: u64,
    pub one_extra_lut_pairs: u64,
    pub inadmissible_pairs: u64,
    pub multiset_nodes: bool,
}

impl PairingIndex {
    pub fn total_members(&self) -> u64 {
        self.census.values().sum()
    }

    pub fn included_subgroups(&self) -> impl Iterator<Item = (&(u32, u32), &Vec<PairKey>)> {
        self.subgroups.iter().filter(|(key, _)| {
            self.screening.get(key).map(|s| s.included).unwrap_or(false)
        })
    }
}

/// Number of same-polarity pairings: C(NPR,2) + C(NPF,2). Exact up to 2⁶³.
pub fn count_pairings(npr: u64, npf: u64) -> u64 {
    let c2 = |n: u128| n * n.saturating_sub(1) / 2;
    let total = c2(npr as u128) + c2(npf as u128);
    assert!(total < (1u128 << 63), "pairing count exceeds 2^63");
    total as u64
}

/// Sorted component-ref views of a path, precomputed once per design.
struct PathSets {
    /// LUT refs plus the launch FF ref, sorted.
    luts: Vec<u32>,
    /// Node refs, sorted; deduplicated unless multiset semantics requested.
    nodes: Vec<u32>,
    lut_count: u32,
    capture: u32,
}

fn path_sets(design: &FabricDesign, path: &PathRecord, multiset_nodes: bool) -> PathSets {
    let mut luts: Vec<u32> = path
        .components
        .iter()
        .filter(|&&c| design.kind(c) == ComponentKind::Lut)
        .map(|c| c.0)
        .collect();
    luts.push(path.launch_ff.0);
    luts.sort_unstable();
    let mut nodes: Vec<u32> = path
        .components
        .iter()
        .filter(|&&c| design.kind(c) == ComponentKind::Node)
        .map(|c| c.0)
        .collect();
    nodes.sort_unstable();
    if !multiset_nodes {
        nodes.dedup();
    }
    PathSets {
        luts,
        nodes,
        lut_count: path.lut_count,
        capture: path.capture_ff.0,
    }
}

/// Symmetric-difference cardinality of two sorted slices (multiset-aware:
/// duplicates cancel pairwise).
fn symdiff_count(a: &[u32], b: &[u32]) -> u32 {
    let (mut ia, mut ib, mut count) = (0usize, 0usize, 0u32);
    while ia < a.len() && ib < b.len() {
        match a[ia].cmp(&b[ib]) {
            std::cmp::Ordering::Less => {
                ia += 1;
                count += 1;
            }
            std::cmp::Ordering::Greater => {
                ib += 1;
                count += 1;
            }
            std::cmp::Ordering::Equal => {
                ia += 1;
                ib += 1;
            }
        }
    }
    count + (a.len() - ia) as u32 + (b.len() - ib) as u32
}

fn classify_sets(key: PairKey, a: &PathSets, b: &PathSets) -> PairClassification {
    let l = symdiff_count(&a.luts, &b.luts);
    let n = symdiff_count(&a.nodes, &b.nodes);
    let admissible = a.lut_count == b.lut_count && a.capture == b.capture && l >= 2;
    let tag = if admissible {
        if l == 2 {
            ConfigTag::Bubble
        } else {
            ConfigTag::LLutMismatch
        }
    } else if a.capture == b.capture && a.lut_count.abs_diff(b.lut_count) == 1 && l == 1 {
        ConfigTag::OneExtraLut
    } else {
        ConfigTag::Inadmissible
    };
    PairClassification {
        key,
        l,
        n,
        admissible,
        tag,
    }
}

/// Classifies one pair of paths from the same design.
pub fn classify_pair(
    design: &FabricDesign,
    a: &PathRecord,
    b: &PathRecord,
) -> Result<PairClassification> {
    classify_pair_with(design, a, b, false)
}

pub fn classify_pair_with(
    design: &FabricDesign,
    a: &PathRecord,
    b: &PathRecord,
    multiset_nodes: bool,
) -> Result<PairClassification> {
    if a.polarity != b.polarity {
        return Err(Error::PolarityMismatch {
            a: a.path_id,
            b: b.path_id,
        });
    }
    let sa = path_sets(design, a, multiset_nodes);
    let sb = path_sets(design, b, multiset_nodes);
    Ok(classify_sets(PairKey::new(a.path_id, b.path_id), &sa, &sb))
}

#[derive(Debug, Clone)]
pub struct IndexFilter {
    /// Retain only these L classes; `None` retains all admissible pairs.
    pub l_classes: Option<BTreeSet<u32>>,
    /// Initial membership screening threshold.
    pub min_members: u64,
    /// Hard cap on retained pairs.
    pub capacity: u64,
    /// Count repeated node names per path separately instead of as a set.
    pub multiset_nodes: bool,
}

impl Default for IndexFilter {
    fn default() -> Self {
        Self {
            l_classes: None,
            min_members: 200,
            capacity: 50_000_000,
            multiset_nodes: false,
        }
    }
}

#[derive(Default)]
struct ChunkResult {
    subgroups: BTreeMap<(u32, u32), Vec<PairKey>>,
    admissible: u64,
    retained: u64,
    one_extra: u64,
    inadmissible: u64,
}

/// Streams every same-polarity pair, classifying each and retaining the
/// admissible ones whose L class passes the filter. Memory scales with
/// retained pairs only.
pub fn build_index(design: &FabricDesign, filter: &IndexFilter) -> Result<PairingIndex> {
    let sets: Vec<PathSets> = design
        .paths()
        .iter()
        .map(|p| path_sets(design, p, filter.multiset_nodes))
        .collect();
    let mut groups: Vec<Vec<u32>> = vec![Vec::new(), Vec::new()];
    for p in design.paths() {
        let g = match p.polarity {
            Polarity::Rising => 0,
            Polarity::Falling => 1,
        };
        groups[g].push(p.path_id);
    }

    let mut index = PairingIndex {
        multiset_nodes: filter.multiset_nodes,
        ..PairingIndex::default()
    };
    for group in &groups {
        if group.len() < 2 {
            continue;
        }
        let chunk = 64.max(group.len() / (8 * rayon::current_num_threads().max(1)));
        let outer_chunks: Vec<(usize, usize)> = (0..group.len() - 1)
            .step_by(chunk)
            .map(|start| (start, (start + chunk).min(group.len() - 1)))
            .collect();
        let results: Vec<ChunkResult> = outer_chunks
            .par_iter()
            .map(|&(start, end)| {
                let mut res = ChunkResult::default();
                for ai in start..end {
                    let j = group[ai];
                    let sa = &sets[j as usize];
                    for &k in &group[ai + 1..] {
                        let sb = &sets[k as usize];
                        if sa.capture == sb.capture && sa.lut_count == sb.lut_count {
                            let l = symdiff_count(&sa.luts, &sb.luts);
                            if l >= 2 {
                                res.admissible += 1;
                                let keep = filter
                                    .l_classes
                                    .as_ref()
                                    .map_or(true, |set| set.contains(&l));
                                if keep {
                                    let n = symdiff_count(&sa.nodes, &sb.nodes);
                                    res.subgroups
                                        .entry((l, n))
                                        .or_default()
                                        .push(PairKey::new(j, k));
                                    res.retained += 1;
                                }
                            } else {
                                res.inadmissible += 1;
                            }
                        } else {
                            res.inadmissible += 1;
                            if sa.capture == sb.capture
                                && sa.lut_count.abs_diff(sb.lut_count) == 1
                                && symdiff_count(&sa.luts, &sb.luts) == 1
                            {
                                res.one_extra += 1;
                            }
                        }
                    }
                }
                res
            })
            .collect();
        for res in results {
            index.admissible_pairs += res.admissible;
            index.retained_pairs += res.retained;
            index.one_extra_lut_pairs += res.one_extra;
            index.inadmissible_pairs += res.inadmissible;
            if index.retained_pairs > filter.capacity {
                return Err(Error::CapacityExceeded {
                    count: index.retained_pairs,
                    cap: filter.capacity,
                });
            }
            for (key, mut pairs) in res.subgroups {
                index.subgroups.entry(key).or_default().append(&mut pairs);
            }
        }
    }
    index.scanned_pairs = count_pairings(design.npr(), design.npf());
    debug_assert_eq!(
        index.scanned_pairs,
        index.admissible_pairs + index.inadmissible_pairs
    );
    for (key, members) in &index.subgroups {
        index.census.insert(*key, members.len() as u64);
        let included = members.len() as u64 >= filter.min_members;
        index.screening.insert(
            *key,
            SubgroupStatus {
                included,
                reason: if included { "ok" } else { "membership" }.into(),
            },
        );
    }
    Ok(index)
}

/// Re-screens subgroups using pair variances: drops subclasses below the
/// membership threshold and subclasses containing any member whose variance
/// exceeds the leave-one-out mean + `outlier_k`·σ of the other members.
pub fn screen_subclasses(
    index: PairingIndex,
    cds: &CompensatedDataset,
    min_members: u64,
    outlier_k: f64,
) -> PairingIndex {
    let stats = decomposition::grouped_pair_statistics(cds, &index);
    screen_subclasses_with_stats(index, &stats, min_members, outlier_k)
}

/// Screening with precomputed pair statistics (avoids recomputing them when
/// the caller also needs the variances downstream).
pub fn screen_subclasses_with_stats(
    mut index: PairingIndex,
    stats: &decomposition::GroupedStats,
    min_members: u64,
    outlier_k: f64,
) -> PairingIndex {
    for (key, members) in &index.subgroups {
        let n = members.len() as u64;
        let status = if n < min_members {
            SubgroupStatus {
                included: false,
                reason: "membership".into(),
            }
        } else {
            let vars: Vec<f64> = stats
                .get(key)
                .map(|group| group.iter().map(|s| s.var_pdcd).collect())
                .unwrap_or_default();
            if has_loo_outlier(&vars, outlier_k) {
                SubgroupStatus {
                    included: false,
                    reason: "outlier".into(),
                }
            } else {
                SubgroupStatus {
                    included: true,
                    reason: "ok".into(),
                }
            }
        };
        index.screening.insert(*key, status);
    }
    index
}

/// Leave-one-out outlier test: is any value above the mean + k·σ of the
/// remaining values?
fn has_loo_outlier(values: &[f64], k: f64) -> bool {
    let n = values.len();
    if n < 3 {
        return false;
    }
    let sum: f64 = values.iter().sum();
    let sumsq: f64 = values.iter().map(|v| v * v).sum();
    for &x in values {
        let mean_o = (sum - x) / (n - 1) as f64;
        let var_o = ((sumsq - x * x) - (n - 1) as f64 * mean_o * mean_o) / (n - 2) as f64;
        let sd_o = var_o.max(0.0).sqrt();
        if x > mean_o + k * sd_o {
            return true;
        }
    }
    false
}
