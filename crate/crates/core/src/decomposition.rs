//! Pair-difference statistics and the per-component variance estimators.
//!
//! Subtracting the compensated delays of an admissible pair leaves, per
//! instance, the variation of the distinct components only. The variance of
//! that difference across instances is modeled as `L·σ²_LUT + N·σ²_node`.
//! Averaging member variances within each `(L, N)` subgroup and differencing
//! consecutive `N` subgroups inside an L class isolates one node's variance;
//! backing the node term out of each subgroup mean isolates the LUT term.
//! Final estimates are means of per-class means.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compensation::CompensatedDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pairing::{PairKey, PairingIndex};
use crate::pathstats::ClassAggregate;
use crate::stats::mean;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairDiffStats {
    pub key: PairKey,
    /// Mean of the per-instance pair difference, ps (or FPS).
    pub u_pdcd: f64,
    pub sigma_pdcd: f64,
    pub var_pdcd: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubclassMean {
    pub l: u32,
    pub n: u32,
    pub n_pairs: u64,
    /// Mean of member pair variances, ps².
    pub u_var: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard errors; absent when only two points were fit.
    pub slope_se: Option<f64>,
    pub intercept_se: Option<f64>,
}

/// Full estimator output.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceEstimates {
    pub sigma2_node: f64,
    pub sigma2_lut: f64,
    pub per_class_node: BTreeMap<u32, f64>,
    pub per_class_lut: BTreeMap<u32, f64>,
    pub regression: RegressionFit,
    pub three_sigma_lut: f64,
    pub three_sigma_node: f64,
    /// Worst-class extreme member variance over its predicted variance.
    pub uncertainty_bound: Option<f64>,
    pub warnings: Vec<String>,
}

/// Per-instance pair difference statistics, one result per key, streamed
/// with O(1) state per pair.
pub fn pair_statistics<'a>(
    cds: &'a CompensatedDataset,
    pairs: impl IntoIterator<Item = PairKey> + 'a,
) -> impl Iterator<Item = PairDiffStats> + 'a {
    let by_path = cds.pdc.transposed();
    pairs
        .into_iter()
        .map(move |key| pair_stats_one(&by_path, key, cds.nc()))
}

fn pair_stats_one(by_path: &Matrix, key: PairKey, nc: usize) -> PairDiffStats {
    debug_assert!(nc >= 2);
    let row_j = by_path.row(key.j as usize);
    let row_k = by_path.row(key.k as usize);
    let mut sum = 0.0f64;
    for i in 0..nc {
        sum += row_j[i] - row_k[i];
    }
    let u = sum / nc as f64;
    let mut ss = 0.0f64;
    for i in 0..nc {
        let d = row_j[i] - row_k[i] - u;
        ss += d * d;
    }
    let var = ss / (nc - 1) as f64;
    PairDiffStats {
        key,
        u_pdcd: u,
        sigma_pdcd: var.sqrt(),
        var_pdcd: var,
    }
}

pub type GroupedStats = BTreeMap<(u32, u32), Vec<PairDiffStats>>;

/// Pair statistics for every retained subgroup, parallel over subgroups with
/// a deterministic result layout.
pub fn grouped_pair_statistics(cds: &CompensatedDataset, index: &PairingIndex) -> GroupedStats {
    let by_path = cds.pdc.transposed();
    let nc = cds.nc();
    let entries: Vec<(&(u32, u32), &Vec<PairKey>)> = index.subgroups.iter().collect();
    let computed: Vec<((u32, u32), Vec<PairDiffStats>)> = entries
        .par_iter()
        .map(|(key, pairs)| {
            let stats = pairs
                .iter()
                .map(|&p| pair_stats_one(&by_path, p, nc))
                .collect();
            (**key, stats)
        })
        .collect();
    computed.into_iter().collect()
}

/// Mean member variance per included subgroup.
pub fn subclass_means(index: &PairingIndex, stats: &GroupedStats) -> Vec<SubclassMean> {
    index
        .subgroups
        .keys()
        .filter(|key| index.screening.get(key).map_or(false, |s| s.included))
        .filter_map(|key| {
            let group = stats.get(key)?;
            if group.is_empty() {
                return None;
            }
            let u_var = group.iter().map(|s| s.var_pdcd).sum::<f64>() / group.len() as f64;
            Some(SubclassMean {
                l: key.0,
                n: key.1,
                n_pairs: group.len() as u64,
                u_var,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeVarianceEstimate {
    pub per_class_node: BTreeMap<u32, f64>,
    pub sigma2_node: f64,
    /// Differences feeding each class mean, for diagnostics.
    pub diff_count: u64,
    pub negative: bool,
}

/// Differences consecutive (N, N+1) subgroup means within each L class and
/// averages: per-class mean of differences, then mean of class means.
/// Gaps in N are skipped, never rescaled.
pub fn estimate_node_variance(means: &[SubclassMean]) -> Result<NodeVarianceEstimate> {
    let mut by_class: BTreeMap<u32, BTreeMap<u32, f64>> = BTreeMap::new();
    for m in means {
        by_class.entry(m.l).or_default().insert(m.n, m.u_var);
    }
    let mut per_class_node = BTreeMap::new();
    let mut diff_count = 0u64;
    for (&l, subs) in &by_class {
        let mut diffs = Vec::new();
        for (&n, &var) in subs {
            if let Some(&next) = subs.get(&(n + 1)) {
                diffs.push(next - var);
            }
        }
        if !diffs.is_empty() {
            diff_count += diffs.len() as u64;
            per_class_node.insert(l, mean(&diffs));
        }
    }
    if per_class_node.is_empty() {
        return Err(Error::NoConsecutiveSubclasses);
    }
    let class_means: Vec<f64> = per_class_node.values().copied().collect();
    let sigma2_node = mean(&class_means);
    Ok(NodeVarianceEstimate {
        per_class_node,
        sigma2_node,
        diff_count,
        negative: sigma2_node < 0.0,
    })
}

/// Membership-weighted variant: every consecutive difference across all
/// classes pooled, weighted by the member count behind it.
pub fn estimate_node_variance_pooled(means: &[SubclassMean]) -> Result<f64> {
    let mut by_class: BTreeMap<u32, BTreeMap<u32, (f64, u64)>> = BTreeMap::new();
    for m in means {
        by_class
            .entry(m.l)
            .or_default()
            .insert(m.n, (m.u_var, m.n_pairs));
    }
    let mut wsum = 0.0f64;
    let mut wtotal = 0.0f64;
    for subs in by_class.values() {
        for (&n, &(var, pairs)) in subs {
            if let Some(&(next, next_pairs)) = subs.get(&(n + 1)) {
                let w = (pairs + next_pairs) as f64;
                wsum += w * (next - var);
                wtotal += w;
            }
        }
    }
    if wtotal == 0.0 {
        return Err(Error::NoConsecutiveSubclasses);
    }
    Ok(wsum / wtotal)
}

#[derive(Debug, Clone, Serialize)]
pub struct LutVarianceEstimate {
    pub per_class_lut: BTreeMap<u32, f64>,
    pub sigma2_lut: f64,
    pub negative: bool,
}

/// Backs the node term out of every subgroup mean: `(u_var − N·σ²_node)/L`,
/// averaged within each class, then across classes.
pub fn estimate_lut_variance(means: &[SubclassMean], sigma2_node: f64) -> LutVarianceEstimate {
    assert!(sigma2_node.is_finite());
    let mut by_class: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for m in means {
        let est = (m.u_var - m.n as f64 * sigma2_node) / m.l as f64;
        by_class.entry(m.l).or_default().push(est);
    }
    let per_class_lut: BTreeMap<u32, f64> = by_class
        .into_iter()
        .map(|(l, ests)| (l, mean(&ests)))
        .collect();
    let class_means: Vec<f64> = per_class_lut.values().copied().collect();
    let sigma2_lut = mean(&class_means);
    LutVarianceEstimate {
        per_class_lut,
        sigma2_lut,
        negative: sigma2_lut < 0.0,
    }
}

/// Ordinary least squares of subgroup mean variance against total distinct
/// component count (L + N). Diagnostic only: a healthy decomposition has an
/// intercept near zero.
pub fn fit_regression(means: &[SubclassMean]) -> Result<RegressionFit> {
    assert!(means.len() >= 2, "need at least two points");
    let xs: Vec<f64> = means.iter().map(|m| (m.l + m.n) as f64).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.u_var).collect();
    let n = xs.len() as f64;
    let xbar = mean(&xs);
    let ybar = mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx == 0.0 {
        return Err(Error::SingularFit);
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let (slope_se, intercept_se) = if xs.len() > 2 {
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        let s2 = ss_res / (n - 2.0);
        let slope_se = (s2 / sxx).sqrt();
        let intercept_se = (s2 * (1.0 / n + xbar * xbar / sxx)).sqrt();
        (Some(slope_se), Some(intercept_se))
    } else {
        (None, None)
    };
    Ok(RegressionFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
    })
}

/// ThreeSigma prediction for a composite of `lut_count_sum` LUTs and
/// `node_count_sum` nodes: `3·sqrt(L·σ²_LUT + N·σ²_node)`.
pub fn predict_threesigma(lut_count_sum: f64, node_count_sum: f64, sigma2_lut: f64, sigma2_node: f64) -> f64 {
    3.0 * (lut_count_sum * sigma2_lut + node_count_sum * sigma2_node).sqrt()
}

impl VarianceEstimates {
    pub fn predict_threesigma(&self, lut_count_sum: f64, node_count_sum: f64) -> f64 {
        predict_threesigma(lut_count_sum, node_count_sum, self.sigma2_lut, self.sigma2_node)
    }
}

/// Locates the class with the largest spread of member variances and
/// returns its extreme member variance over the variance predicted from its
/// average composition (launch FF included as one LUT).
pub fn uncertainty_ratio(
    class_aggs: &[ClassAggregate],
    sigma2_lut: f64,
    sigma2_node: f64,
) -> Option<f64> {
    let candidates: Vec<&ClassAggregate> = {
        let included: Vec<&ClassAggregate> =
            class_aggs.iter().filter(|a| a.included).collect();
        if included.is_empty() {
            class_aggs.iter().collect()
        } else {
            included
        }
    };
    let worst = candidates
        .into_iter()
        .max_by(|a, b| a.var_of_var.total_cmp(&b.var_of_var))?;
    let predicted =
        (worst.mean_luts + 1.0) * sigma2_lut + worst.mean_nodes * sigma2_node;
    if predicted <= 0.0 {
        return None;
    }
    Some(worst.max_var / predicted)
}

#[derive(Debug, Clone, Default)]
pub struct EstimateOptions {
    /// Use the pooled membership-weighted node estimator instead of the
    /// mean of per-class means.
    pub weighted: bool,
}

/// Runs the full estimator over screened subgroup means.
pub fn estimate(
    means: &[SubclassMean],
    class_aggs: Option<&[ClassAggregate]>,
    opts: &EstimateOptions,
) -> Result<VarianceEstimates> {
    let node = estimate_node_variance(means)?;
    let sigma2_node = if opts.weighted {
        estimate_node_variance_pooled(means)?
    } else {
        node.sigma2_node
    };
    let lut = estimate_lut_variance(means, sigma2_node);
    let regression = fit_regression(means)?;
    let mut warnings = Vec::new();
    if sigma2_node < 0.0 {
        warnings.push(format!(
            "NEGATIVE_ESTIMATE: node variance {sigma2_node:.4} ps² is negative; \
             the additive variance model does not hold on this data"
        ));
    }
    if lut.sigma2_lut < 0.0 {
        warnings.push(format!(
            "NEGATIVE_ESTIMATE: LUT variance {:.4} ps² is negative; \
             the additive variance model does not hold on this data",
            lut.sigma2_lut
        ));
    }
    let uncertainty_bound =
        class_aggs.and_then(|aggs| uncertainty_ratio(aggs, lut.sigma2_lut, sigma2_node));
    Ok(VarianceEstimates {
        sigma2_node,
        sigma2_lut: lut.sigma2_lut,
        per_class_node: node.per_class_node,
        per_class_lut: lut.per_class_lut,
        regression,
        three_sigma_lut: 3.0 * lut.sigma2_lut.max(0.0).sqrt(),
        three_sigma_node: 3.0 * sigma2_node.max(0.0).sqrt(),
        uncertainty_bound,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compensation::{CompensatedDataset, InstanceStats, ReferenceStats};
    use crate::simulator::Units;

    fn cds_from(rows: Vec<Vec<f64>>) -> CompensatedDataset {
        let nc = rows.len();
        CompensatedDataset {
            pdc: Matrix::from_rows(rows),
            instance_stats: vec![InstanceStats { u_i: 0.0, sigma_i: 1.0 }; nc],
            reference: ReferenceStats { u_ref: 0.0, sigma_ref: 1.0 },
            z: None,
            units: Units::Ps,
            design_ref: String::new(),
        }
    }

    fn sm(l: u32, n: u32, pairs: u64, var: f64) -> SubclassMean {
        SubclassMean {
            l,
            n,
            n_pairs: pairs,
            u_var: var,
        }
    }

    #[test]
    fn identical_columns_have_zero_variance() {
        let cds = cds_from(vec![vec![5.0, 5.0], vec![7.0, 7.0], vec![9.0, 9.0]]);
        let stats: Vec<PairDiffStats> =
            pair_statistics(&cds, vec![PairKey { j: 0, k: 1 }]).collect();
        assert_eq!(stats[0].var_pdcd, 0.0);
        assert_eq!(stats[0].u_pdcd, 0.0);
    }

    #[test]
    fn antisymmetry_negates_mean_keeps_variance() {
        let cds = cds_from(vec![vec![5.0, 1.0], vec![8.0, 3.0], vec![6.0, 7.0]]);
        let jk = pair_statistics(&cds, vec![PairKey { j: 0, k: 1 }])
            .next()
            .unwrap();
        // Reversed orientation computed directly.
        let by_path = cds.pdc.transposed();
        let diffs: Vec<f64> = (0..3)
            .map(|i| by_path.row(1)[i] - by_path.row(0)[i])
            .collect();
        let (m, v) = crate::stats::mean_var(&diffs);
        assert!((jk.u_pdcd + m).abs() < 1e-12);
        assert!((jk.var_pdcd - v).abs() < 1e-12);
    }

    #[test]
    fn subclass_mean_hand_example() {
        let means = [sm(2, 12, 2, 0.11)];
        assert_eq!(means[0].u_var, 0.11);
        // {0.10, 0.12} averages to 0.11:
        assert_eq!((0.10 + 0.12) / 2.0, 0.11);
    }

    #[test]
    fn node_estimate_from_constructed_means() {
        let means = vec![sm(6, 10, 300, 200.0), sm(6, 11, 300, 216.83)];
        let est = estimate_node_variance(&means).unwrap();
        assert!((est.sigma2_node - 16.83).abs() < 1e-12);
        assert_eq!(est.diff_count, 1);
        assert!(!est.negative);
    }

    #[test]
    fn node_estimate_skips_gaps() {
        // N = 10 and N = 12 are not consecutive; only the 12→13 step counts.
        let means = vec![
            sm(8, 10, 300, 100.0),
            sm(8, 12, 300, 150.0),
            sm(8, 13, 300, 162.0),
        ];
        let est = estimate_node_variance(&means).unwrap();
        assert!((est.sigma2_node - 12.0).abs() < 1e-12);
        assert_eq!(est.diff_count, 1);
    }

    #[test]
    fn no_consecutive_subclasses_is_an_error() {
        let means = vec![sm(6, 10, 300, 200.0), sm(6, 12, 300, 230.0)];
        assert_eq!(
            estimate_node_variance(&means).unwrap_err().code(),
            "NO_CONSECUTIVE_SUBCLASSES"
        );
    }

    #[test]
    fn lut_estimate_inverts_the_model() {
        // u_var = 2·25.38 + 12·16.83 at (L=2, N=12) recovers 25.38.
        let means = vec![sm(2, 12, 278, 2.0 * 25.38 + 12.0 * 16.83)];
        let est = estimate_lut_variance(&means, 16.83);
        assert!((est.sigma2_lut - 25.38).abs() < 1e-12);
    }

    #[test]
    fn regression_exact_on_two_points() {
        let means = vec![sm(2, 8, 10, 30.0), sm(2, 18, 10, 50.0)];
        let fit = fit_regression(&means).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 10.0).abs() < 1e-12);
        assert!(fit.slope_se.is_none());
    }

    #[test]
    fn collinear_x_is_singular() {
        let means = vec![sm(4, 10, 10, 30.0), sm(4, 10, 10, 50.0)];
        assert_eq!(fit_regression(&means).unwrap_err().code(), "SINGULAR_FIT");
    }

    #[test]
    fn threesigma_paper_predictions() {
        let s2l = 25.38;
        let s2n = 16.83;
        assert!((predict_threesigma(34.0, 189.0, s2l, s2n) - 190.0).abs() <= 1.0);
        assert!((predict_threesigma(36.0, 205.0, s2l, s2n) - 198.0).abs() <= 1.0);
        assert!((predict_threesigma(32.0, 180.0, s2l, s2n) - 186.0).abs() <= 1.0);
        assert!((predict_threesigma(16.5, 86.9, s2l, s2n) - 130.1).abs() <= 1.0);
    }

    #[test]
    fn threesigma_monotone_in_both_arguments() {
        let base = predict_threesigma(10.0, 50.0, 25.38, 16.83);
        assert!(predict_threesigma(11.0, 50.0, 25.38, 16.83) > base);
        assert!(predict_threesigma(10.0, 51.0, 25.38, 16.83) > base);
        // And it is exactly 3·sqrt of the composite.
        let composite: f64 = 10.0 * 25.38 + 50.0 * 16.83;
        assert_eq!(base, 3.0 * composite.sqrt());
    }

    #[test]
    fn uncertainty_ratio_paper_arithmetic() {
        // A class averaging 24.3 LUTs (plus the launch FF) and 129.7 nodes
        // predicts 2800 ps²; an extreme member at 6354 gives ratio 2.27.
        let agg = ClassAggregate {
            m: 154,
            n_paths: 400,
            mean_var: 2800.0,
            var_of_var: 1.0,
            max_var: 6354.0,
            mean_luts: 23.3,
            mean_nodes: 129.7,
            included: true,
        };
        let ratio = uncertainty_ratio(&[agg], 25.38, 16.83).unwrap();
        assert!((ratio - 2.27).abs() < 0.005, "ratio {ratio}");
    }

    #[test]
    fn uncertainty_ratio_is_one_when_members_match_prediction() {
        let predicted = (3.0 + 1.0) * 25.38 + 20.0 * 16.83;
        let agg = ClassAggregate {
            m: 23,
            n_paths: 10,
            mean_var: predicted,
            var_of_var: 0.0,
            max_var: predicted,
            mean_luts: 3.0,
            mean_nodes: 20.0,
            included: true,
        };
        let ratio = uncertainty_ratio(&[agg], 25.38, 16.83).unwrap();
        assert!((ratio - 1.0).abs() < 1e-12);
    }
}
