//! Synthetic delay measurement with injected, known ground truth.
//!
//! Each PUF instance gets an independent realization of every component's
//! delay (nominal + Gaussian within-die deviation), an affine chip-to-chip
//! transform (gain, offset), and per-sample measurement noise. Path delays
//! are digitized the way a strobed capture clock would see them: the count
//! of phase-shift increments at which capture first succeeds, i.e.
//! `ceil(delay / delta_t)`. The averaged counts are stored in FPS units;
//! multiplying by `delta_t` converts to picoseconds.

mod file;

pub use file::{read_dataset, write_dataset};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::{design_digest, ComponentKind, FabricDesign};
use crate::matrix::Matrix;
use crate::rng;

/// Injected truth for a simulation run. All delays in picoseconds, variances
/// in ps².
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GroundTruth {
    pub nominal_lut_delay: f64,
    pub nominal_node_delay: f64,
    pub nominal_ff_clk_to_q: f64,
    pub sigma2_lut: f64,
    pub sigma2_node: f64,
    /// Log-σ of a mean-one lognormal factor applied per component to its
    /// variance. Zero gives every LUT (and every node) the same variance.
    pub heterogeneity: f64,
    pub chip_gain_sigma: f64,
    pub chip_offset_sigma: f64,
    /// Per-sample measurement noise, ps.
    pub noise_sigma: f64,
    pub samples_per_measurement: u32,
    /// Fine phase shift increment, ps.
    pub delta_t: f64,
}

impl Default for GroundTruth {
    fn default() -> Self {
        Self {
            nominal_lut_delay: 130.0,
            nominal_node_delay: 24.0,
            nominal_ff_clk_to_q: 130.0,
            sigma2_lut: 25.38,
            sigma2_node: 16.83,
            heterogeneity: 0.0,
            chip_gain_sigma: 0.03,
            chip_offset_sigma: 50.0,
            noise_sigma: 9.0,
            samples_per_measurement: 16,
            delta_t: 18.0,
        }
    }
}

impl GroundTruth {
    /// Noise-free truth, handy for additivity checks.
    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self.chip_gain_sigma = 0.0;
        self.chip_offset_sigma = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            self.sigma2_lut,
            self.sigma2_node,
            self.heterogeneity,
            self.chip_gain_sigma,
            self.chip_offset_sigma,
            self.noise_sigma,
        ];
        if nonneg.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::UnsatisfiableParams(
                "sigmas and heterogeneity must be finite and ≥ 0".into(),
            ));
        }
        if self.delta_t <= 0.0 || self.samples_per_measurement < 1 {
            return Err(Error::UnsatisfiableParams(
                "delta_t must be > 0 and samples_per_measurement ≥ 1".into(),
            ));
        }
        Ok(())
    }

    fn nominal_for(&self, kind: ComponentKind) -> f64 {
        match kind {
            ComponentKind::Lut => self.nominal_lut_delay,
            ComponentKind::Node => self.nominal_node_delay,
            ComponentKind::LaunchFf | ComponentKind::CaptureFf => self.nominal_ff_clk_to_q,
        }
    }

    /// Within-die variance injected for a component kind. FFs get LUT-class
    /// variance: the pairing analysis counts launch FFs as LUTs, so the
    /// injected truth must agree for recovery tests to be meaningful.
    fn sigma2_for(&self, kind: ComponentKind) -> f64 {
        match kind {
            ComponentKind::Lut | ComponentKind::LaunchFf | ComponentKind::CaptureFf => {
                self.sigma2_lut
            }
            ComponentKind::Node => self.sigma2_node,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    Ps,
    Fps,
}

/// Measured (or loaded) matrix of averaged path delays.
#[derive(Debug, Clone)]
pub struct DelayDataset {
    pub pd: Matrix,
    pub units: Units,
    pub truth: Option<GroundTruth>,
    /// Digest of the design the columns refer to; empty when unknown.
    pub design_ref: String,
}

impl DelayDataset {
    pub fn nc(&self) -> usize {
        self.pd.nc()
    }

    pub fn np(&self) -> usize {
        self.pd.np()
    }

    /// Converts FPS → ps by multiplying by `delta_t`. No-op when already ps.
    pub fn to_ps(&self, delta_t: f64) -> DelayDataset {
        match self.units {
            Units::Ps => self.clone(),
            Units::Fps => DelayDataset {
                pd: self.pd.map(|v| v * delta_t),
                units: Units::Ps,
                truth: self.truth.clone(),
                design_ref: self.design_ref.clone(),
            },
        }
    }

    /// Converts ps → FPS by dividing by `delta_t`. No-op when already FPS.
    pub fn to_fps(&self, delta_t: f64) -> DelayDataset {
        match self.units {
            Units::Fps => self.clone(),
            Units::Ps => DelayDataset {
                pd: self.pd.map(|v| v / delta_t),
                units: Units::Fps,
                truth: self.truth.clone(),
                design_ref: self.design_ref.clone(),
            },
        }
    }
}

/// Hidden per-instance state: realized component delays plus the affine
/// chip transform. Delay lookup is by catalog index.
#[derive(Debug, Clone)]
pub struct InstanceRealization {
    pub instance_id: usize,
    delays: Vec<f64>,
    pub gain: f64,
    pub offset: f64,
}

impl InstanceRealization {
    pub fn delay(&self, component: crate::fabric::CompRef) -> f64 {
        self.delays[component.0 as usize]
    }

    /// Noise-free measured delay of a path on this instance: launch FF
    /// clk-to-q plus every node and LUT, through the chip transform.
    pub fn path_delay(&self, design: &FabricDesign, path_id: u32) -> f64 {
        let p = design.path(path_id);
        let mut sum = self.delay(p.launch_ff);
        for &c in &p.components {
            sum += self.delay(c);
        }
        self.gain * sum + self.offset
    }
}

const RESAMPLE_LIMIT: usize = 8;

/// Per-component variance scale factors (the heterogeneity lottery). Keyed
/// by component name only, so a component keeps its factor across instances
/// and runs.
pub fn variance_factors(design: &FabricDesign, truth: &GroundTruth, seed: u64) -> Vec<f64> {
    design
        .catalog()
        .iter()
        .map(|c| {
            if truth.heterogeneity == 0.0 {
                1.0
            } else {
                let h = truth.heterogeneity;
                let z: f64 = rng::named_stream(seed, "het", 0, &c.name).sample(StandardNormal);
                (h * z - h * h / 2.0).exp()
            }
        })
        .collect()
}

/// Draws per-instance component delays and chip transforms. Deterministic
/// per (seed, instance id, component name): adding instances or renaming
/// unrelated components never disturbs existing draws.
pub fn realize_instances(
    design: &FabricDesign,
    truth: &GroundTruth,
    nc: usize,
    seed: u64,
) -> Result<Vec<InstanceRealization>> {
    truth.validate()?;
    assert!(nc >= 2, "need at least two instances");
    let factors = variance_factors(design, truth, seed);
    let results: Vec<Result<InstanceRealization>> = (0..nc)
        .into_par_iter()
        .map(|instance| {
            let mut chip = rng::stream(seed, "chip", instance as u64, 0);
            let gz: f64 = chip.sample(StandardNormal);
            let oz: f64 = chip.sample(StandardNormal);
            let gain = 1.0 + truth.chip_gain_sigma * gz;
            let offset = truth.chip_offset_sigma * oz;
            let mut delays = Vec::with_capacity(design.catalog().len());
            for (ci, comp) in design.catalog().iter().enumerate() {
                let nominal = truth.nominal_for(comp.kind);
                let sigma = (truth.sigma2_for(comp.kind) * factors[ci]).sqrt();
                let mut stream = rng::named_stream(seed, "comp", instance as u64, &comp.name);
                let mut delay = f64::NEG_INFINITY;
                let mut ok = false;
                for _ in 0..RESAMPLE_LIMIT {
                    let z: f64 = stream.sample(StandardNormal);
                    delay = nominal + sigma * z;
                    if delay > 0.0 {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Err(Error::NonPositiveDelay {
                        component: comp.name.clone(),
                        instance,
                    });
                }
                delays.push(delay);
            }
            Ok(InstanceRealization {
                instance_id: instance,
                delays,
                gain,
                offset,
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Measures every path on every instance: per-sample noise, strobe
/// digitization, then the sample average. Output units are FPS.
pub fn measure_dataset(
    design: &FabricDesign,
    realizations: &[InstanceRealization],
    truth: &GroundTruth,
    seed: u64,
) -> Result<DelayDataset> {
    truth.validate()?;
    assert!(!realizations.is_empty(), "no instances to measure");
    let np = design.np();
    let rows: Vec<Vec<f64>> = realizations
        .par_iter()
        .map(|real| {
            let mut row = Vec::with_capacity(np);
            for j in 0..np {
                let true_delay = real.path_delay(design, j as u32);
                row.push(measure_one(true_delay, truth, seed, real.instance_id, j as u64));
            }
            row
        })
        .collect();
    Ok(DelayDataset {
        pd: Matrix::from_rows(rows),
        units: Units::Fps,
        truth: Some(truth.clone()),
        design_ref: design_digest(design),
    })
}

/// Digitizes one averaged measurement: mean over samples of
/// `ceil((delay + noise) / delta_t)`.
pub fn measure_one(true_delay: f64, truth: &GroundTruth, seed: u64, instance: usize, path: u64) -> f64 {
    let mut meas = rng::stream(seed, "meas", instance as u64, path);
    let mut total = 0.0f64;
    for _ in 0..truth.samples_per_measurement {
        let noise = if truth.noise_sigma > 0.0 {
            let z: f64 = meas.sample(StandardNormal);
            truth.noise_sigma * z
        } else {
            0.0
        };
        total += digitize(true_delay + noise, truth.delta_t);
    }
    total / truth.samples_per_measurement as f64
}

/// Strobe count at which capture first succeeds.
pub fn digitize(delay_ps: f64, delta_t: f64) -> f64 {
    (delay_ps / delta_t).ceil().max(0.0)
}
