//! Per-path cross-instance statistics and their aggregation by path length.
//!
//! Each path's compensated delays across instances give a mean, standard
//! deviation, variance, and ThreeSigma (3σ, the entropy range). Paths are
//! then grouped by their component count (LUTs + nodes); per-group average
//! variances and the spread of member variances feed the later uncertainty
//! bound.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::compensation::CompensatedDataset;
use crate::decomposition::VarianceEstimates;
use crate::fabric::{lut_node_class, FabricDesign};
use crate::stats::mean_var;

#[derive(Debug, Clone, Serialize)]
pub struct PathVarianceRecord {
    pub path_id: u32,
    pub u_pdc_j: f64,
    pub sigma_pdc_j: f64,
    pub var_pdc_j: f64,
    pub three_sigma_j: f64,
    /// LUTs + nodes of the path.
    pub class_m: u32,
    pub lut_count: u32,
    pub node_count: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassAggregate {
    /// Component count shared by the member paths.
    pub m: u32,
    pub n_paths: u64,
    /// Mean of member variances, ps².
    pub mean_var: f64,
    /// Variance of member variances, ps⁴ (0 for singleton classes).
    pub var_of_var: f64,
    /// Largest member variance, ps².
    pub max_var: f64,
    /// Average composition of the member paths.
    pub mean_luts: f64,
    pub mean_nodes: f64,
    pub included: bool,
}

pub const DEFAULT_CLASS_MIN: u64 = 300;

/// Per-path mean/σ/σ²/3σ across instances. Requires at least 3 instances.
pub fn path_statistics(
    cds: &CompensatedDataset,
    design: &FabricDesign,
) -> Vec<PathVarianceRecord> {
    assert!(cds.nc() >= 3, "need at least three instances");
    assert_eq!(cds.np(), design.np(), "dataset and design path counts differ");
    let by_path = cds.pdc.transposed();
    (0..cds.np())
        .into_par_iter()
        .map(|j| {
            let (u, var) = mean_var(by_path.row(j));
            let sigma = var.sqrt();
            let p = design.path(j as u32);
            PathVarianceRecord {
                path_id: j as u32,
                u_pdc_j: u,
                sigma_pdc_j: sigma,
                var_pdc_j: var,
                three_sigma_j: 3.0 * sigma,
                class_m: lut_node_class(p),
                lut_count: p.lut_count,
                node_count: p.node_count,
            }
        })
        .collect()
}

/// Per-path delay variations around the path mean (for histogram export).
pub fn variation_samples(cds: &CompensatedDataset, path_id: u32) -> Vec<f64> {
    let col = cds.pdc.column(path_id as usize);
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    col.into_iter().map(|v| v - mean).collect()
}

/// Fixed-width histogram of `variation_samples`, as (bin lower edge, count).
pub fn variation_histogram(samples: &[f64], bin_width: f64) -> Vec<(f64, u64)> {
    assert!(bin_width > 0.0);
    let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
    for &v in samples {
        let idx = (v / bin_width).floor() as i64;
        *bins.entry(idx).or_insert(0) += 1;
    }
    bins.into_iter()
        .map(|(idx, count)| (idx as f64 * bin_width, count))
        .collect()
}

/// Groups per-path variances by component count. Classes with fewer than
/// `class_min` paths are kept in the output but marked excluded.
pub fn class_aggregates(records: &[PathVarianceRecord], class_min: u64) -> Vec<ClassAggregate> {
    assert!(!records.is_empty());
    let mut groups: BTreeMap<u32, Vec<&PathVarianceRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.class_m).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(m, members)| {
            let n = members.len() as u64;
            let vars: Vec<f64> = members.iter().map(|r| r.var_pdc_j).collect();
            let mean_var_v = vars.iter().sum::<f64>() / n as f64;
            let var_of_var = if n > 1 {
                vars.iter().map(|v| (v - mean_var_v) * (v - mean_var_v)).sum::<f64>()
                    / (n - 1) as f64
            } else {
                0.0
            };
            let max_var = vars.iter().cloned().fold(f64::MIN, f64::max);
            let mean_luts =
                members.iter().map(|r| r.lut_count as f64).sum::<f64>() / n as f64;
            let mean_nodes =
                members.iter().map(|r| r.node_count as f64).sum::<f64>() / n as f64;
            ClassAggregate {
                m,
                n_paths: n,
                mean_var: mean_var_v,
                var_of_var,
                max_var,
                mean_luts,
                mean_nodes,
                included: n >= class_min,
            }
        })
        .collect()
}

/// Slope of the zero-intercept line predicting per-path variance from the
/// component count, given a LUT share of the components.
pub fn predicted_variance_line(est: &VarianceEstimates, lut_fraction: f64) -> f64 {
    assert!((0.0..=1.0).contains(&lut_fraction));
    lut_fraction * est.sigma2_lut + (1.0 - lut_fraction) * est.sigma2_node
}
