//! Resamplers behind one interface.
//!
//! Baselines that cannot run on a dataset (too few neighbors, a class
//! edited away) return a [`ResampleFailure`] instead of an error so an
//! experiment grid can record the cell and move on.

mod editing;
mod random;
mod smote;

use std::fmt;
use std::time::Instant;

pub use editing::{enn, near_miss, tomek_links};
pub use random::{random_oversample, random_undersample};
pub use smote::smote;

use crate::dataset::Dataset;
use crate::geometry::DistanceMetric;
use crate::nde::{nde, NdeConfig};
use crate::rng::DetRng;
use crate::error::{Error, Result};

pub const DEFAULT_SMOTE_K: usize = 5;
pub const DEFAULT_ENN_K: usize = 3;
pub const DEFAULT_NEAR_MISS_K: usize = 3;

/// Method names accepted by [`ResamplerSpec::from_name`].
pub const METHOD_NAMES: [&str; 10] = [
    "ndeso",
    "nde_only",
    "random_over",
    "random_under",
    "smote",
    "enn",
    "tomek_links",
    "near_miss",
    "smote_tomek",
    "smote_enn",
];

pub(crate) fn neighbor_count_failure(n_neighbors: usize, n_samples_fit: usize) -> String {
    format!(
        "Expected n_neighbors <= n_samples_fit, but n_neighbors = {n_neighbors}, \
         n_samples_fit = {n_samples_fit}, n_samples = {n_samples_fit}"
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResamplerSpec {
    /// Displacement followed by random oversampling.
    Ndeso(NdeConfig),
    /// Displacement only; no rows added or removed.
    NdeOnly(NdeConfig),
    RandomOver,
    RandomUnder,
    Smote { k: usize },
    Enn { k: usize },
    TomekLinks,
    NearMiss { k: usize },
    /// `first`, then `second` on its output.
    Compose {
        name: String,
        first: Box<ResamplerSpec>,
        second: Box<ResamplerSpec>,
    },
}

impl ResamplerSpec {
    /// Build a spec from a method name. `k` overrides the method's default
    /// neighbor count (for the SMOTE compositions it applies to the SMOTE
    /// stage); `metric` only affects the displacement methods.
    pub fn from_name(name: &str, k: Option<usize>, metric: DistanceMetric) -> Result<Self> {
        if k == Some(0) {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let nde_config = NdeConfig::new(k.unwrap_or(crate::nde::DEFAULT_K), metric);
        let smote_k = k.unwrap_or(DEFAULT_SMOTE_K);
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "ndeso" => ResamplerSpec::Ndeso(nde_config),
            "nde_only" | "nde" => ResamplerSpec::NdeOnly(nde_config),
            "random_over" | "ros" => ResamplerSpec::RandomOver,
            "random_under" | "rus" => ResamplerSpec::RandomUnder,
            "smote" => ResamplerSpec::Smote { k: smote_k },
            "enn" => ResamplerSpec::Enn {
                k: k.unwrap_or(DEFAULT_ENN_K),
            },
            "tomek_links" | "tomek" => ResamplerSpec::TomekLinks,
            "near_miss" | "nearmiss" => ResamplerSpec::NearMiss {
                k: k.unwrap_or(DEFAULT_NEAR_MISS_K),
            },
            "smote_tomek" => compose(
                "smote_tomek",
                ResamplerSpec::Smote { k: smote_k },
                ResamplerSpec::TomekLinks,
            ),
            "smote_enn" => compose(
                "smote_enn",
                ResamplerSpec::Smote { k: smote_k },
                ResamplerSpec::Enn { k: DEFAULT_ENN_K },
            ),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown resampling method {other:?}; expected one of {}",
                    METHOD_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &str {
        match self {
            ResamplerSpec::Ndeso(_) => "ndeso",
            ResamplerSpec::NdeOnly(_) => "nde_only",
            ResamplerSpec::RandomOver => "random_over",
            ResamplerSpec::RandomUnder => "random_under",
            ResamplerSpec::Smote { .. } => "smote",
            ResamplerSpec::Enn { .. } => "enn",
            ResamplerSpec::TomekLinks => "tomek_links",
            ResamplerSpec::NearMiss { .. } => "near_miss",
            ResamplerSpec::Compose { name, .. } => name,
        }
    }

    /// Whether the method draws from the random generator.
    pub fn uses_rng(&self) -> bool {
        match self {
            ResamplerSpec::Ndeso(_)
            | ResamplerSpec::RandomOver
            | ResamplerSpec::RandomUnder
            | ResamplerSpec::Smote { .. } => true,
            ResamplerSpec::NdeOnly(_)
            | ResamplerSpec::Enn { .. }
            | ResamplerSpec::TomekLinks
            | ResamplerSpec::NearMiss { .. } => false,
            ResamplerSpec::Compose { first, second, .. } => first.uses_rng() || second.uses_rng(),
        }
    }

    /// Largest neighbor count among the method's stages, if it has one.
    pub fn k(&self) -> Option<usize> {
        match self {
            ResamplerSpec::Ndeso(c) | ResamplerSpec::NdeOnly(c) => Some(c.k),
            ResamplerSpec::Smote { k } | ResamplerSpec::Enn { k } | ResamplerSpec::NearMiss { k } => Some(*k),
            ResamplerSpec::RandomOver | ResamplerSpec::RandomUnder | ResamplerSpec::TomekLinks => None,
            ResamplerSpec::Compose { first, second, .. } => match (first.k(), second.k()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }

    /// Copy with every stage's neighbor count capped at `k`.
    pub fn with_k_at_most(&self, k: usize) -> Self {
        let cap = |v: usize| v.min(k).max(1);
        match self {
            ResamplerSpec::Ndeso(c) => ResamplerSpec::Ndeso(NdeConfig { k: cap(c.k), ..*c }),
            ResamplerSpec::NdeOnly(c) => ResamplerSpec::NdeOnly(NdeConfig { k: cap(c.k), ..*c }),
            ResamplerSpec::Smote { k: v } => ResamplerSpec::Smote { k: cap(*v) },
            ResamplerSpec::Enn { k: v } => ResamplerSpec::Enn { k: cap(*v) },
            ResamplerSpec::NearMiss { k: v } => ResamplerSpec::NearMiss { k: cap(*v) },
            ResamplerSpec::Compose { name, first, second } => ResamplerSpec::Compose {
                name: name.clone(),
                first: Box::new(first.with_k_at_most(k)),
                second: Box::new(second.with_k_at_most(k)),
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for ResamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Chain two resamplers under a display name.
pub fn compose(name: &str, first: ResamplerSpec, second: ResamplerSpec) -> ResamplerSpec {
    ResamplerSpec::Compose {
        name: name.to_string(),
        first: Box::new(first),
        second: Box::new(second),
    }
}

/// A resampler that could not run, with the stage that failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResampleFailure {
    pub stage: String,
    pub message: String,
}

impl fmt::Display for ResampleFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for ResampleFailure {}

/// Displacement, then random oversampling to the majority count.
///
/// Total for every `k >= 1`: `k` is clamped to `n - 1`, and datasets with
/// a single row or a single class pass through the displacement unchanged.
pub fn ndeso(dataset: &Dataset, config: &NdeConfig, rng: &mut DetRng) -> Result<Dataset> {
    let displaced = nde(dataset, config)?;
    Ok(random_oversample(&displaced, rng))
}

/// Run one resampler.
pub fn resample(dataset: &Dataset, spec: &ResamplerSpec, rng: &mut DetRng) -> std::result::Result<Dataset, ResampleFailure> {
    let fail = |message: String| ResampleFailure {
        stage: spec.name().to_string(),
        message,
    };
    match spec {
        ResamplerSpec::Ndeso(cfg) => ndeso(dataset, cfg, rng).map_err(|e| fail(e.to_string())),
        ResamplerSpec::NdeOnly(cfg) => nde(dataset, cfg).map_err(|e| fail(e.to_string())),
        ResamplerSpec::RandomOver => Ok(random_oversample(dataset, rng)),
        ResamplerSpec::RandomUnder => Ok(random_undersample(dataset, rng)),
        ResamplerSpec::Smote { k } => smote(dataset, *k, rng).map_err(fail),
        ResamplerSpec::Enn { k } => enn(dataset, *k).map_err(fail),
        ResamplerSpec::TomekLinks => tomek_links(dataset).map_err(fail),
        ResamplerSpec::NearMiss { k } => near_miss(dataset, *k).map_err(fail),
        ResamplerSpec::Compose { first, second, .. } => {
            let mid = resample(dataset, first, rng)?;
            resample(&mid, second, rng)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResampleStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct ResampleOutcome {
    pub result: std::result::Result<Dataset, ResampleFailure>,
    /// Wall-clock seconds spent resampling, retries included.
    pub seconds: f64,
    /// Neighbor count of the attempt that produced `result`.
    pub k_used: Option<usize>,
    pub attempts: usize,
}

impl ResampleOutcome {
    pub fn status(&self) -> ResampleStatus {
        match &self.result {
            Ok(_) => ResampleStatus::Ok,
            Err(f) => ResampleStatus::Failed(f.to_string()),
        }
    }

    pub fn dataset(&self) -> Option<&Dataset> {
        self.result.as_ref().ok()
    }
}

/// Run a resampler with timing, output validation and the optional
/// neighbor-count retry ladder.
///
/// With `auto_retry_k`, a failed attempt is repeated with `k - 1`, `k - 2`,
/// ... down to 1; every attempt starts from the same generator state. The
/// generator is left where the successful (or last) attempt left it.
pub fn run_resampler(dataset: &Dataset, spec: &ResamplerSpec, rng: &mut DetRng, auto_retry_k: bool) -> ResampleOutcome {
    let start = Instant::now();
    let initial_rng = rng.clone();
    let mut current = spec.clone();
    let mut attempts = 0;
    loop {
        attempts += 1;
        *rng = initial_rng.clone();
        let result = resample(dataset, &current, rng).and_then(|out| validate_output(dataset, &current, out));
        let k_used = current.k();
        let retry = match (&result, k_used) {
            (Err(_), Some(k)) if auto_retry_k && k > 1 => Some(k - 1),
            _ => None,
        };
        match retry {
            Some(next_k) => {
                log::debug!("{} failed with k = {:?}; retrying with k = {next_k}", spec.name(), k_used);
                current = current.with_k_at_most(next_k);
            }
            None => {
                return ResampleOutcome {
                    result,
                    seconds: start.elapsed().as_secs_f64(),
                    k_used,
                    attempts,
                }
            }
        }
    }
}

fn validate_output(input: &Dataset, spec: &ResamplerSpec, out: Dataset) -> std::result::Result<Dataset, ResampleFailure> {
    let before = input.class_counts();
    let after = out.class_counts();
    if let Some(c) = (0..before.len()).find(|&c| before[c] > 0 && after[c] == 0) {
        return Err(ResampleFailure {
            stage: spec.name().to_string(),
            message: format!(
                "class eliminated by resampling: class {:?} has no samples left",
                input.class_names()[c]
            ),
        });
    }
    Ok(out)
}
