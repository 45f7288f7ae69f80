//! Built-in datasets, generated on demand so nothing has to be downloaded.
//!
//! `synthetic` is the three-blob 50:500:100 set. The `*_like` presets reuse
//! the blob generator with the class counts of well-known imbalanced
//! benchmarks, which gives the same imbalance profiles (including classes
//! with only two members) without the original features.

use crate::dataset::{generate_synthetic, Dataset, DEFAULT_NOISE_SCALE, DEFAULT_SYNTHETIC_COUNTS};
use crate::error::{Error, Result};
use crate::rng::{mix_seed, DEFAULT_SEED};

pub struct Preset {
    pub name: &'static str,
    pub counts: &'static [usize],
}

pub const PRESETS: [Preset; 6] = [
    Preset {
        name: "synthetic",
        counts: &DEFAULT_SYNTHETIC_COUNTS,
    },
    Preset {
        name: "autos_like",
        counts: &[48, 46, 29, 20, 13, 3],
    },
    Preset {
        name: "ecoli_like",
        counts: &[139, 77, 52, 35, 20, 5, 4, 2, 2],
    },
    Preset {
        name: "lymphography_like",
        counts: &[81, 61, 4, 2],
    },
    Preset {
        name: "pageblocks_like",
        counts: &[492, 33, 12, 8, 3],
    },
    Preset {
        name: "shuttle_like",
        counts: &[1706, 338, 123, 6, 2],
    },
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.name)
}

/// Seed a preset is generated with: the default seed for `synthetic`, a
/// name-derived one for the others.
pub fn preset_seed(name: &str) -> u64 {
    if name == "synthetic" {
        DEFAULT_SEED
    } else {
        mix_seed(DEFAULT_SEED, &[name])
    }
}

pub fn load(name: &str) -> Result<Dataset> {
    let preset = PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "unknown bundled dataset {name:?}; available: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    generate_synthetic(preset_seed(name), preset.counts, DEFAULT_NOISE_SCALE)
}

pub fn load_all() -> Vec<(String, Dataset)> {
    names()
        .map(|n| (n.to_string(), load(n).expect("presets are valid")))
        .collect()
}
