use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraphInput, GraphNet};
use crate::design::{validate, DesignGraph};
use crate::error::{Error, Result};

/// Standard deviations below this are treated as 1 when standardizing targets.
const STD_FLOOR: f64 = 1e-9;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.05, epochs: 50, l2: 1e-5, clip_norm: 5.0, batch_size: 32, seed: 0 }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.epochs > 0
            && self.l2 >= 0.0
            && self.clip_norm > 0.0
            && self.batch_size > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training config {self:?}")))
        }
    }
}

/// Regression samples with their graphs prepared once.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub inputs: Vec<GraphInput>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn from_designs<'a, I>(samples: I) -> Result<Dataset>
    where
        I: IntoIterator<Item = (&'a DesignGraph, f64)>,
    {
        let mut data = Dataset::default();
        for (d, t) in samples {
            data.push(d, t)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, design: &DesignGraph, target: f64) -> Result<()> {
        validate(design).into_result()?;
        if !target.is_finite() {
            return Err(Error::OutOfRange(format!("non-finite target {target}")));
        }
        self.inputs.push(GraphInput::from_design(design));
        self.targets.push(target);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn standardization(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let mean = self.targets.iter().sum::<f64>() / n;
        let var = self.targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        (mean, if std < STD_FLOOR { 1.0 } else { std })
    }
}

/// MSE over the dataset plus `l2 * |W|^2`, in standardized target units.
pub fn objective(net: &GraphNet, data: &Dataset, l2: f64) -> f64 {
    let mse = data
        .inputs
        .iter()
        .zip(&data.targets)
        .map(|(g, &t)| {
            let r = net.forward_input(g) - (t - net.target_mean) / net.target_std;
            r * r
        })
        .sum::<f64>()
        / data.len() as f64;
    mse + l2 * net.weight_sq_norm()
}

/// Fits the net to the dataset by clipped gradient descent, re-deriving the
/// target standardization from `data`. Returns the full objective after each epoch.
pub fn train(net: &mut GraphNet, data: &Dataset, cfg: &TrainConfig) -> Result<Vec<f64>> {
    fit(net, data, cfg, true)
}

/// Same updates as [`train`], evaluating the objective only once at the end.
pub fn train_final(net: &mut GraphNet, data: &Dataset, cfg: &TrainConfig) -> Result<f64> {
    let trace = fit(net, data, cfg, false)?;
    Ok(*trace.last().expect("fit records the final objective"))
}

fn fit(net: &mut GraphNet, data: &Dataset, cfg: &TrainConfig, every_epoch: bool) -> Result<Vec<f64>> {
    cfg.check()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mean, std) = data.standardization();
    net.target_mean = mean;
    net.target_std = std;
    let targets: Vec<f64> = data.targets.iter().map(|t| (t - mean) / std).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; net.param_count()];
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if cfg.batch_size < data.len() {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                net.loss_and_grad(&data.inputs[i], targets[i], &mut grad);
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            net.add_weight_decay_grad(cfg.l2, &mut grad);
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, detail: format!("gradient norm {norm}") });
            }
            let scale = if norm > cfg.clip_norm { cfg.clip_norm / norm } else { 1.0 };
            for (p, g) in net.params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * scale * g;
            }
        }
        if !every_epoch && epoch + 1 < cfg.epochs {
            continue;
        }
        let loss = objective(net, data, cfg.l2);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, detail: format!("objective {loss}") });
        }
        log::trace!("epoch {epoch}: objective {loss:.6e}");
        trace.push(loss);
    }
    Ok(trace)
}

/// Largest relative disagreement between the analytic gradient of
/// `(V(G) - target)^2` (standardized units) and central differences.
pub fn grad_check(net: &GraphNet, design: &DesignGraph, target: f64) -> Result<f64> {
    validate(design).into_result()?;
    let g = GraphInput::from_design(design);
    let mut analytic = vec![0.0; net.param_count()];
    net.loss_and_grad(&g, target, &mut analytic);
    let mut probe = net.clone();
    let loss = |n: &GraphNet| (n.forward_input(&g) - target).powi(2);
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.params[i];
        probe.params[i] = orig + FD_STEP;
        let up = loss(&probe);
        probe.params[i] = orig - FD_STEP;
        let down = loss(&probe);
        probe.params[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
