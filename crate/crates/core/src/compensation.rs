//! Chip-to-chip compensation.
//!
//! Each instance's delay distribution is standardized by its own mean and
//! standard deviation, then rescaled to the population reference (the mean
//! of the instance means and the mean of the instance standard deviations).
//! Affine chip-wide effects — a shared gain and offset — cancel exactly,
//! leaving within-die structure as the only cross-instance signal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::simulator::{DelayDataset, Units};
use crate::stats::mean_std;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InstanceStats {
    /// Per-instance mean of the measured path delays.
    pub u_i: f64,
    /// Per-instance standard deviation (n−1 denominator).
    pub sigma_i: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub u_ref: f64,
    pub sigma_ref: f64,
}

/// The compensated matrix plus the statistics that produced it.
#[derive(Debug, Clone)]
pub struct CompensatedDataset {
    pub pdc: Matrix,
    pub instance_stats: Vec<InstanceStats>,
    pub reference: ReferenceStats,
    /// Standard-normal form of each cell; populated on request since it is
    /// exactly `(pdc - u_ref) / sigma_ref`.
    pub z: Option<Matrix>,
    pub units: Units,
    pub design_ref: String,
}

impl CompensatedDataset {
    pub fn nc(&self) -> usize {
        self.pdc.nc()
    }

    pub fn np(&self) -> usize {
        self.pdc.np()
    }

    /// Reinterprets the compensated matrix in the other unit system.
    /// Compensation commutes with a global rescale, so this is a plain
    /// elementwise conversion.
    pub fn to_fps(&self, delta_t: f64) -> CompensatedDataset {
        match self.units {
            Units::Fps => self.clone(),
            Units::Ps => CompensatedDataset {
                pdc: self.pdc.map(|v| v / delta_t),
                instance_stats: self
                    .instance_stats
                    .iter()
                    .map(|s| InstanceStats {
                        u_i: s.u_i / delta_t,
                        sigma_i: s.sigma_i / delta_t,
                    })
                    .collect(),
                reference: ReferenceStats {
                    u_ref: self.reference.u_ref / delta_t,
                    sigma_ref: self.reference.sigma_ref / delta_t,
                },
                z: self.z.clone(),
                units: Units::Fps,
                design_ref: self.design_ref.clone(),
            },
        }
    }
}

/// Per-instance mean and standard deviation over paths.
pub fn instance_stats(ds: &DelayDataset) -> Result<Vec<InstanceStats>> {
    assert!(ds.np() >= 2, "need at least two paths");
    let mut stats = Vec::with_capacity(ds.nc());
    for (i, row) in ds.pd.rows().enumerate() {
        let (u_i, sigma_i) = mean_std(row);
        if sigma_i == 0.0 {
            return Err(Error::DegenerateInstance { instance: i });
        }
        stats.push(InstanceStats { u_i, sigma_i });
    }
    Ok(stats)
}

/// Reference statistics: mean of instance means and mean of instance
/// standard deviations.
pub fn reference_stats(stats: &[InstanceStats]) -> ReferenceStats {
    let nc = stats.len() as f64;
    ReferenceStats {
        u_ref: stats.iter().map(|s| s.u_i).sum::<f64>() / nc,
        sigma_ref: stats.iter().map(|s| s.sigma_i).sum::<f64>() / nc,
    }
}

#[derive(Debug, Clone, Default)]
pub struct CompensateOptions {
    /// Frozen reference statistics (the provisioning use case). When absent
    /// the reference is computed from the dataset itself.
    pub reference: Option<ReferenceStats>,
    /// Keep the standardized Z matrix alongside the compensated one.
    pub keep_z: bool,
}

pub fn compensate(ds: &DelayDataset) -> Result<CompensatedDataset> {
    compensate_with(ds, &CompensateOptions::default())
}

pub fn compensate_with(ds: &DelayDataset, opts: &CompensateOptions) -> Result<CompensatedDataset> {
    assert!(ds.nc() >= 2, "need at least two instances");
    let stats = instance_stats(ds)?;
    let reference = opts.reference.unwrap_or_else(|| reference_stats(&stats));

    let rows: Vec<Vec<f64>> = (0..ds.nc())
        .into_par_iter()
        .map(|i| {
            let s = stats[i];
            ds.pd
                .row(i)
                .iter()
                .map(|&pd| (pd - s.u_i) / s.sigma_i * reference.sigma_ref + reference.u_ref)
                .collect()
        })
        .collect();
    let pdc = Matrix::from_rows(rows);
    let z = opts.keep_z.then(|| {
        let mut z = Matrix::zeros(ds.nc(), ds.np());
        for i in 0..ds.nc() {
            let s = stats[i];
            for j in 0..ds.np() {
                z.set(i, j, (ds.pd.get(i, j) - s.u_i) / s.sigma_i);
            }
        }
        z
    });
    Ok(CompensatedDataset {
        pdc,
        instance_stats: stats,
        reference,
        z,
        units: ds.units,
        design_ref: ds.design_ref.clone(),
    })
}

/// Treats a compensated matrix as a dataset again (for idempotence checks
/// and for pipelines that re-standardize provisioned data).
pub fn as_dataset(cds: &CompensatedDataset) -> DelayDataset {
    DelayDataset {
        pd: cds.pdc.clone(),
        units: cds.units,
        truth: None,
        design_ref: cds.design_ref.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds_from_rows(rows: Vec<Vec<f64>>) -> DelayDataset {
        DelayDataset {
            pd: Matrix::from_rows(rows),
            units: Units::Ps,
            truth: None,
            design_ref: String::new(),
        }
    }

    #[test]
    fn hand_computed_stats() {
        let ds = ds_from_rows(vec![vec![2.0, 4.0, 6.0], vec![1.0, 2.0, 3.0]]);
        let stats = instance_stats(&ds).unwrap();
        assert_eq!(stats[0].u_i, 4.0);
        assert_eq!(stats[0].sigma_i, 2.0);
        assert_eq!(stats[1].u_i, 2.0);
        assert_eq!(stats[1].sigma_i, 1.0);
    }

    #[test]
    fn all_equal_instance_is_degenerate() {
        let ds = ds_from_rows(vec![vec![5.0, 5.0, 5.0], vec![1.0, 2.0, 3.0]]);
        assert_eq!(instance_stats(&ds).unwrap_err().code(), "DEGENERATE_INSTANCE");
    }

    #[test]
    fn identical_instances_pass_through() {
        let ds = ds_from_rows(vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]);
        let cds = compensate(&ds).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!((cds.pdc.get(i, j) - ds.pd.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_gain_rows_collapse() {
        let base = vec![100.0, 210.0, 305.0, 415.0];
        let scaled: Vec<f64> = base.iter().map(|v| v * 1.10).collect();
        let ds = ds_from_rows(vec![base, scaled]);
        let cds = compensate(&ds).unwrap();
        for j in 0..4 {
            let a = cds.pdc.get(0, j);
            let b = cds.pdc.get(1, j);
            assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn mean_and_std_pinned_to_reference() {
        let ds = ds_from_rows(vec![
            vec![10.0, 20.0, 35.0, 41.0, 60.0],
            vec![12.0, 25.0, 30.0, 49.0, 55.0],
            vec![9.0, 18.0, 40.0, 45.0, 70.0],
        ]);
        let cds = compensate(&ds).unwrap();
        for i in 0..3 {
            let (m, s) = mean_std(cds.pdc.row(i));
            assert!((m - cds.reference.u_ref).abs() <= 1e-9 * cds.reference.u_ref.abs());
            assert!((s - cds.reference.sigma_ref).abs() <= 1e-9 * cds.reference.sigma_ref.abs());
        }
    }

    #[test]
    fn idempotent() {
        let ds = ds_from_rows(vec![
            vec![10.0, 20.0, 35.0, 41.0, 60.0],
            vec![12.0, 25.0, 30.0, 49.0, 55.0],
        ]);
        let once = compensate(&ds).unwrap();
        let twice = compensate(&as_dataset(&once)).unwrap();
        assert!((twice.reference.u_ref - once.reference.u_ref).abs() < 1e-9);
        assert!((twice.reference.sigma_ref - once.reference.sigma_ref).abs() < 1e-9);
        for i in 0..2 {
            for j in 0..5 {
                let a = once.pdc.get(i, j);
                let b = twice.pdc.get(i, j);
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn frozen_reference_is_respected() {
        let ds = ds_from_rows(vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 9.0]]);
        let reference = ReferenceStats {
            u_ref: 100.0,
            sigma_ref: 10.0,
        };
        let cds = compensate_with(
            &ds,
            &CompensateOptions {
                reference: Some(reference),
                keep_z: true,
            },
        )
        .unwrap();
        let (m, s) = mean_std(cds.pdc.row(0));
        assert!((m - 100.0).abs() < 1e-9);
        assert!((s - 10.0).abs() < 1e-9);
        let z = cds.z.as_ref().unwrap();
        assert!((z.get(0, 0) + 1.0).abs() < 1e-12);
    }
}
