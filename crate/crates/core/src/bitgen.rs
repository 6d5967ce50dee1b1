//! Bitstring generation from compensated pair differences.
//!
//! Provisioning stores each pair's mean difference as a public offset.
//! Subtracting it centers every pair's distribution at zero; shifting by
//! half the modulus and reducing modulo the modulus then centers it at
//! modulus/2, and the bit is the half the value lands in. All arithmetic is
//! in FPS units (delays divided by the phase-shift step).

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compensation::CompensatedDataset;
use crate::error::{Error, Result};
use crate::pairing::{PairingIndex, PairKey};
use crate::rng;
use crate::simulator::Units;

pub const DEFAULT_MODULUS: f64 = 20.0;
pub const DEFAULT_BITSTRING_PAIRS: usize = 2048;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HelperData {
    pub pairs: Vec<(u32, u32)>,
    /// Per-pair mean difference over the provisioning population, FPS.
    pub offsets: Vec<f64>,
    /// FPS.
    pub modulus: f64,
}

impl HelperData {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstring {
    pub instance_id: usize,
    pub bits: Vec<bool>,
}

impl Bitstring {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_ascii(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    /// Mean pairwise Hamming distance across instances, percent.
    pub mean_interchip_hd_pct: f64,
    /// Mean of per-bit '1' frequencies.
    pub bit_frequency_mean: f64,
    /// Per-bit '1' frequency across instances.
    pub per_bit_aliasing: Vec<f64>,
}

/// Deterministic sample of admissible pairs for bitstring generation, drawn
/// across retained subgroups in (L, N) order.
pub fn sample_pairs(index: &PairingIndex, count: usize, seed: u64) -> Vec<PairKey> {
    let mut all: Vec<PairKey> = index
        .subgroups
        .values()
        .flat_map(|pairs| pairs.iter().copied())
        .collect();
    let mut rng = rng::stream(seed, "bitpairs", 0, 0);
    all.shuffle(&mut rng);
    all.truncate(count);
    all
}

/// Computes per-pair offsets (the provisioning step). The dataset must be in
/// FPS units.
pub fn provision(cds: &CompensatedDataset, pairs: &[PairKey], modulus: f64) -> HelperData {
    assert!(!pairs.is_empty(), "no pairs to provision");
    assert!(modulus > 0.0);
    assert_eq!(cds.units, Units::Fps, "provisioning operates on FPS data");
    let by_path = cds.pdc.transposed();
    let nc = cds.nc();
    let offsets: Vec<f64> = pairs
        .iter()
        .map(|p| {
            let row_j = by_path.row(p.j as usize);
            let row_k = by_path.row(p.k as usize);
            let sum: f64 = (0..nc).map(|i| row_j[i] - row_k[i]).sum();
            sum / nc as f64
        })
        .collect();
    HelperData {
        pairs: pairs.iter().map(|p| (p.j, p.k)).collect(),
        offsets,
        modulus,
    }
}

/// Maps one offset-corrected difference to its modulus cell, centered at
/// modulus/2.
pub fn modulus_map(pdcdo: f64, modulus: f64) -> f64 {
    (pdcdo + modulus / 2.0).rem_euclid(modulus)
}

/// Bit decision: '0' for the lower half `[0, modulus/2)`, '1' for the upper
/// half (the boundary lands in the upper half).
pub fn bit_of(pdcdo: f64, modulus: f64) -> bool {
    modulus_map(pdcdo, modulus) >= modulus / 2.0
}

/// Generates one instance's bitstring against provisioned helper data.
pub fn generate_bits(
    cds: &CompensatedDataset,
    helper: &HelperData,
    instance_id: usize,
) -> Bitstring {
    assert!(instance_id < cds.nc(), "instance out of range");
    assert_eq!(cds.units, Units::Fps, "bit generation operates on FPS data");
    let row = cds.pdc.row(instance_id);
    let bits = helper
        .pairs
        .iter()
        .zip(&helper.offsets)
        .map(|(&(j, k), &offset)| {
            let pdcd = row[j as usize] - row[k as usize];
            bit_of(pdcd - offset, helper.modulus)
        })
        .collect();
    Bitstring { instance_id, bits }
}

/// Bitstrings for every instance in the dataset.
pub fn generate_all_bits(cds: &CompensatedDataset, helper: &HelperData) -> Vec<Bitstring> {
    (0..cds.nc())
        .into_par_iter()
        .map(|i| generate_bits(cds, helper, i))
        .collect()
}

/// Uniqueness and randomness metrics over a set of equal-length bitstrings.
pub fn quality_report(bitstrings: &[Bitstring]) -> Result<QualityReport> {
    assert!(bitstrings.len() >= 2, "need at least two bitstrings");
    let len = bitstrings[0].len();
    for b in bitstrings {
        if b.len() != len {
            return Err(Error::LengthMismatch {
                a: len,
                b: b.len(),
            });
        }
    }
    let mut hd_sum = 0.0f64;
    let mut pairs = 0u64;
    for (ai, a) in bitstrings.iter().enumerate() {
        for b in &bitstrings[ai + 1..] {
            let hd = a
                .bits
                .iter()
                .zip(&b.bits)
                .filter(|(x, y)| x != y)
                .count();
            hd_sum += hd as f64 / len as f64;
            pairs += 1;
        }
    }
    let per_bit_aliasing: Vec<f64> = (0..len)
        .map(|bit| {
            let ones = bitstrings.iter().filter(|b| b.bits[bit]).count();
            ones as f64 / bitstrings.len() as f64
        })
        .collect();
    let bit_frequency_mean = per_bit_aliasing.iter().sum::<f64>() / len as f64;
    Ok(QualityReport {
        mean_interchip_hd_pct: 100.0 * hd_sum / pairs as f64,
        bit_frequency_mean,
        per_bit_aliasing,
    })
}
