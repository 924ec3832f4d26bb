use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{init_params, Arch, ModelParams};
use crate::error::{Error, Result};
use crate::kinematics::{Approx, Rollout};
use crate::losses::{self, DataUnits, PhysicsConfig, PhysicsOrder};
use crate::pipeline::{Dataset, NormStats, WindowPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub arch: Arch,
    pub order: PhysicsOrder,
    pub approx: Approx,
    pub lambda: f64,
    #[serde(default)]
    pub rollout: Rollout,
    #[serde(default)]
    pub data_units: DataUnits,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub min_lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: Arch::basic_mlp(),
            order: PhysicsOrder::None,
            approx: Approx::SmallAngle,
            lambda: 0.0,
            rollout: Rollout::Literal,
            data_units: DataUnits::Normalized,
            lr: 1e-3,
            epochs: 50,
            batch_size: 32,
            early_stop_patience: 5,
            plateau_patience: 3,
            plateau_factor: 0.5,
            min_lr: 1e-5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.lr, self.plateau_factor, self.min_lr];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "learning rates and plateau factor must be positive".into(),
            ));
        }
        if self.plateau_factor >= 1.0 {
            return Err(Error::InvalidArgument("plateau factor must be below 1".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.batch_size == 0 || self.early_stop_patience == 0 || self.plateau_patience == 0 {
            return Err(Error::InvalidArgument("batch size and patiences must be >= 1".into()));
        }
        Ok(())
    }

    /// Physics settings for a dataset: residual ranges come from the
    /// training-split normalization, the step from the sample spacing.
    pub fn physics(&self, stats: &NormStats, interval_s: f64) -> PhysicsConfig<f64> {
        let [lat_range, lon_range] = stats.position_ranges();
        let mut p = PhysicsConfig::new(self.order, self.approx, self.lambda, interval_s, lat_range, lon_range);
        p.rollout = self.rollout;
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub data: f64,
    pub physics: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn is_finite(&self) -> bool {
        self.data.is_finite() && self.physics.is_finite() && self.total.is_finite()
    }
}

/// Sums over a set of windows, with optional gradient accumulation.
/// `n` and `count` are the batch divisors `N` and `N·H`.
fn accumulate<'a>(
    params: &ModelParams,
    windows: impl Iterator<Item = &'a WindowPair>,
    n: usize,
    stats: &NormStats,
    physics: &PhysicsConfig<f64>,
    units: DataUnits,
    mut grad: Option<&mut [f64]>,
) -> Result<LossBreakdown> {
    let h = params.w_out;
    let count = n * h;
    let ranges = stats.position_ranges();
    let scale = match units {
        DataUnits::Normalized => [1.0, 1.0],
        DataUnits::Degrees => ranges,
    };
    let lambda = physics.lambda;
    let mut data_sum = 0.0;
    let mut phys_sum = 0.0;
    for w in windows {
        if w.y.len() != h {
            return Err(Error::InvalidArgument(format!(
                "window horizon {} != model horizon {h}",
                w.y.len()
            )));
        }
        let cache = params.forward_cached(&w.x)?;
        let out = cache.output();
        let mut dout = vec![0.0; 2 * h];
        for (j, y) in w.y.iter().enumerate() {
            for k in 0..2 {
                let e = (out[2 * j + k] - y[k]) * scale[k];
                data_sum += e * e;
                dout[2 * j + k] = 2.0 * e * scale[k] / n as f64;
            }
        }
        if physics.is_active() {
            let pred: Vec<[f64; 2]> = out
                .chunks_exact(2)
                .map(|c| stats.denormalize_pos([c[0], c[1]]))
                .collect();
            let expected = losses::expected_displacements(&w.state, h, physics)?;
            let res = losses::window_residuals(w.anchor, &pred, &expected, physics);
            phys_sum += res.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum::<f64>();
            if lambda > 0.0 && grad.is_some() {
                let g = losses::physics_loss_grad_window(&res, physics, count);
                for (j, gj) in g.iter().enumerate() {
                    for k in 0..2 {
                        dout[2 * j + k] += lambda * gj[k] * ranges[k];
                    }
                }
            }
        }
        if let Some(g) = grad.as_deref_mut() {
            params.backward(&cache, &dout, g);
        }
    }
    let data = data_sum / n as f64;
    let physics_loss = phys_sum / count as f64;
    let out = LossBreakdown {
        data,
        physics: physics_loss,
        total: losses::total_loss(data, physics_loss, lambda)?,
    };
    if !out.is_finite() {
        return Err(Error::InvalidValue(format!("non-finite loss {out:?}")));
    }
    Ok(out)
}

/// Total loss over a mini-batch and its gradient with respect to every
/// parameter. The data term is measured in `units`; the physics term on
/// denormalized degrees, so its gradient passes through the
/// inverse min-max map. Expected displacements depend only on observed
/// inputs and carry no gradient.
pub fn loss_and_grad(
    params: &ModelParams,
    batch: &[&WindowPair],
    stats: &NormStats,
    physics: &PhysicsConfig<f64>,
    units: DataUnits,
) -> Result<(LossBreakdown, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut grad = vec![0.0; params.len()];
    let l = accumulate(
        params,
        batch.iter().copied(),
        batch.len(),
        stats,
        physics,
        units,
        Some(&mut grad),
    )?;
    Ok((l, grad))
}

/// Losses over a whole split, as if it were one batch.
pub fn evaluate(
    params: &ModelParams,
    windows: &[WindowPair],
    stats: &NormStats,
    physics: &PhysicsConfig<f64>,
    units: DataUnits,
) -> Result<LossBreakdown> {
    if windows.is_empty() {
        return Err(Error::InvalidArgument("no windows to evaluate".into()));
    }
    accumulate(params, windows.iter(), windows.len(), stats, physics, units, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in theta.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Multiplies the learning rate by `factor` once the monitored loss has
/// failed to improve for `patience` consecutive epochs, never going below
/// `min_lr`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    best: f64,
    bad: usize,
}

impl PlateauScheduler {
    pub fn new(factor: f64, patience: usize, min_lr: f64, initial: f64) -> Self {
        PlateauScheduler {
            factor,
            patience,
            min_lr,
            best: initial,
            bad: 0,
        }
    }

    pub fn observe(&mut self, metric: f64, lr: f64) -> f64 {
        if metric < self.best {
            self.best = metric;
            self.bad = 0;
            return lr;
        }
        self.bad += 1;
        if self.bad >= self.patience {
            self.bad = 0;
            return (lr * self.factor).max(self.min_lr);
        }
        lr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    best: f64,
    bad: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, initial: f64) -> Self {
        EarlyStopping {
            patience,
            best: initial,
            bad: 0,
        }
    }

    /// Returns `(improved, stop)`.
    pub fn observe(&mut self, metric: f64) -> (bool, bool) {
        if metric < self.best {
            self.best = metric;
            self.bad = 0;
            (true, false)
        } else {
            self.bad += 1;
            (false, self.bad >= self.patience)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub val: LossBreakdown,
    /// Learning rate used during the epoch.
    pub lr: f64,
    /// Wall-clock seconds spent on the epoch's parameter updates.
    pub wall_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Losses of the initial parameters (epoch 0).
    pub initial: EpochRecord,
    /// One record per completed epoch, starting at epoch 1.
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned; 0 means the initial ones.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn best(&self) -> &EpochRecord {
        if self.best_epoch == 0 {
            &self.initial
        } else {
            &self.epochs[self.best_epoch - 1]
        }
    }

    /// CSV with the initial evaluation as epoch 0.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "epoch",
            "train_data",
            "train_physics",
            "train_total",
            "val_data",
            "val_physics",
            "val_total",
            "lr",
            "wall_s",
        ])?;
        for r in std::iter::once(&self.initial).chain(&self.epochs) {
            out.write_record([
                r.epoch.to_string(),
                r.train.data.to_string(),
                r.train.physics.to_string(),
                r.train.total.to_string(),
                r.val.data.to_string(),
                r.val.physics.to_string(),
                r.val.total.to_string(),
                r.lr.to_string(),
                r.wall_s.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<history csv>", e))?;
        Ok(())
    }
}

fn diverged(epoch: usize, e: Error, history: &TrainHistory) -> Error {
    match e {
        Error::InvalidValue(detail) => Error::Diverged {
            epoch,
            detail,
            history: Box::new(history.clone()),
        },
        other => other,
    }
}

/// Mini-batch Adam with plateau learning-rate decay and early stopping on
/// the validation total loss. Returns the parameters with the lowest
/// validation total loss seen, counting the initial ones.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainHistory)> {
    cfg.validate()?;
    if ds.train.is_empty() || ds.val.is_empty() {
        return Err(Error::InvalidArgument(
            "training needs non-empty train and val splits".into(),
        ));
    }
    let (w_in, w_out) = (ds.train[0].w_in(), ds.train[0].w_out());
    let physics = cfg.physics(&ds.stats, ds.meta.config.interval_s);
    physics.validate()?;
    let mut params = init_params(&cfg.arch, w_in, w_out, cfg.seed)?;

    let mut history = TrainHistory::default();
    let eval = |p: &ModelParams, history: &TrainHistory, epoch: usize, windows: &[WindowPair]| {
        evaluate(p, windows, &ds.stats, &physics, cfg.data_units).map_err(|e| diverged(epoch, e, history))
    };
    history.initial = EpochRecord {
        epoch: 0,
        train: eval(&params, &history, 0, &ds.train)?,
        val: eval(&params, &history, 0, &ds.val)?,
        lr: cfg.lr,
        wall_s: 0.0,
    };

    let mut best = params.clone();
    let mut stopper = EarlyStopping::new(cfg.early_stop_patience, history.initial.val.total);
    let mut scheduler = PlateauScheduler::new(
        cfg.plateau_factor,
        cfg.plateau_patience,
        cfg.min_lr,
        history.initial.val.total,
    );
    let mut adam = Adam::new(params.len(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..ds.train.len()).collect();

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut sum = LossBreakdown::default();
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&WindowPair> = chunk.iter().map(|&i| &ds.train[i]).collect();
            let (l, g) = loss_and_grad(&params, &batch, &ds.stats, &physics, cfg.data_units)
                .map_err(|e| diverged(epoch, e, &history))?;
            adam.step(&mut params.theta, &g);
            let k = chunk.len() as f64;
            sum.data += l.data * k;
            sum.physics += l.physics * k;
            sum.total += l.total * k;
        }
        let wall_s = start.elapsed().as_secs_f64();
        let n = ds.train.len() as f64;
        let record = EpochRecord {
            epoch,
            train: LossBreakdown {
                data: sum.data / n,
                physics: sum.physics / n,
                total: sum.total / n,
            },
            val: eval(&params, &history, epoch, &ds.val)?,
            lr: adam.lr,
            wall_s,
        };
        let val_total = record.val.total;
        history.epochs.push(record);

        let (improved, stop) = stopper.observe(val_total);
        if improved {
            best.theta.clone_from(&params.theta);
            history.best_epoch = epoch;
        }
        adam.lr = scheduler.observe(val_total, adam.lr);
        if stop {
            history.stopped_early = true;
            break;
        }
    }
    Ok((best, history))
}
