//! Small trainable trajectory regressors with a fixed-graph reverse-mode
//! pass, and the training loop around them.
//!
//! Both architectures map a `w_in × 6` window of normalized features to
//! `w_out × 2` normalized positions. Parameters live in one flat `f64`
//! vector whose layout is fixed by the [`Arch`] descriptor.

mod gru;
mod mlp;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::GeoPoint;
use crate::pipeline::{NormStats, WindowPair, N_FEATURES};

pub use train::{
    evaluate, loss_and_grad, train, Adam, EarlyStopping, EpochRecord, LossBreakdown, PlateauScheduler, TrainConfig,
    TrainHistory,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Arch {
    /// ReLU hidden layers of the given widths.
    Mlp { hidden: Vec<usize> },
    /// One recurrent layer.
    Gru { hidden: usize },
}

impl Arch {
    /// One hidden layer of 64 units.
    pub fn basic_mlp() -> Self {
        Arch::Mlp { hidden: vec![64] }
    }

    /// Hidden layers of 64 and 32 units.
    pub fn complex_mlp() -> Self {
        Arch::Mlp { hidden: vec![64, 32] }
    }

    pub fn gru() -> Self {
        Arch::Gru { hidden: 64 }
    }

    fn check(&self) -> Result<()> {
        let ok = match self {
            Arch::Mlp { hidden } => hidden.iter().all(|&h| h >= 1),
            Arch::Gru { hidden } => *hidden >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("hidden sizes must be >= 1".into()))
        }
    }

    pub fn param_count(&self, w_in: usize, w_out: usize) -> usize {
        match self {
            Arch::Mlp { hidden } => mlp::param_count(&mlp::dims(hidden, w_in * N_FEATURES, w_out * 2)),
            Arch::Gru { hidden } => gru::Layout {
                n_x: N_FEATURES,
                h: *hidden,
                n_out: w_out * 2,
            }
            .param_count(),
        }
    }
}

/// Architecture, window sizes and the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub arch: Arch,
    pub w_in: usize,
    pub w_out: usize,
    /// Seed the parameters were initialized from.
    pub seed: u64,
    pub theta: Vec<f64>,
}

impl ModelParams {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.check()?;
        let n = self.arch.param_count(self.w_in, self.w_out);
        if self.theta.len() != n {
            return Err(Error::InvalidArgument(format!(
                "architecture needs {n} parameters, got {}",
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases. Deterministic per seed.
pub fn init_params(arch: &Arch, w_in: usize, w_out: usize, seed: u64) -> Result<ModelParams> {
    arch.check()?;
    if w_in == 0 || w_out == 0 {
        return Err(Error::InvalidArgument("window lengths must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = Vec::with_capacity(arch.param_count(w_in, w_out));
    match arch {
        Arch::Mlp { hidden } => mlp::init(&mlp::dims(hidden, w_in * N_FEATURES, w_out * 2), &mut rng, &mut theta),
        Arch::Gru { hidden } => gru::init(&layout(*hidden, w_out), &mut rng, &mut theta),
    }
    Ok(ModelParams {
        arch: arch.clone(),
        w_in,
        w_out,
        seed,
        theta,
    })
}

fn layout(hidden: usize, w_out: usize) -> gru::Layout {
    gru::Layout {
        n_x: N_FEATURES,
        h: hidden,
        n_out: w_out * 2,
    }
}

pub(in crate::model) enum Cache {
    Mlp(mlp::Cache),
    Gru(gru::Cache),
}

impl Cache {
    pub(in crate::model) fn output(&self) -> &[f64] {
        match self {
            Cache::Mlp(c) => c.output(),
            Cache::Gru(c) => c.output(),
        }
    }
}

impl ModelParams {
    fn check_input(&self, x: &[[f64; N_FEATURES]]) -> Result<()> {
        if x.len() != self.w_in {
            return Err(Error::InvalidArgument(format!(
                "model expects {} input steps, got {}",
                self.w_in,
                x.len()
            )));
        }
        Ok(())
    }

    pub(in crate::model) fn forward_cached(&self, x: &[[f64; N_FEATURES]]) -> Result<Cache> {
        self.check_input(x)?;
        Ok(match &self.arch {
            Arch::Mlp { hidden } => {
                let dims = mlp::dims(hidden, self.w_in * N_FEATURES, self.w_out * 2);
                Cache::Mlp(mlp::forward(&self.theta, &dims, x.iter().flatten().copied().collect()))
            }
            Arch::Gru { hidden } => Cache::Gru(gru::forward(&self.theta, &layout(*hidden, self.w_out), x)),
        })
    }

    /// Accumulates the parameter gradient for `∂L/∂output = dout`.
    pub(in crate::model) fn backward(&self, cache: &Cache, dout: &[f64], grad: &mut [f64]) {
        match (&self.arch, cache) {
            (Arch::Mlp { hidden }, Cache::Mlp(c)) => {
                let dims = mlp::dims(hidden, self.w_in * N_FEATURES, self.w_out * 2);
                mlp::backward(&self.theta, &dims, c, dout, grad)
            }
            (Arch::Gru { hidden }, Cache::Gru(c)) => {
                gru::backward(&self.theta, &layout(*hidden, self.w_out), c, dout, grad)
            }
            _ => unreachable!("cache built by a different architecture"),
        }
    }
}

/// `w_out × 2` normalized positions for one normalized input window.
pub fn forward(params: &ModelParams, x: &[[f64; N_FEATURES]]) -> Result<Vec<[f64; 2]>> {
    let cache = params.forward_cached(x)?;
    Ok(cache.output().chunks_exact(2).map(|c| [c[0], c[1]]).collect())
}

/// Prediction in degrees. The points are not range-checked: an untrained
/// model may well predict latitudes beyond ±90.
pub fn predict_denorm(params: &ModelParams, window: &WindowPair, stats: &NormStats) -> Result<Vec<GeoPoint<f64>>> {
    Ok(forward(params, &window.x)?
        .into_iter()
        .map(|p| {
            let [lat, lon] = stats.denormalize_pos(p);
            GeoPoint { lat, lon }
        })
        .collect())
}

/// Everything needed to reproduce a trained model's predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub params: ModelParams,
    pub stats: NormStats,
    pub physics: crate::losses::PhysicsConfig<f64>,
    pub train: TrainConfig,
}

impl ModelFile {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        file.params.validate()?;
        Ok(file)
    }
}
