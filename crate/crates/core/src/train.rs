//! Regression training, staged multi-resolution training, the synthetic
//! preconditioning experiment and a brute-force conditional-mean oracle.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{init_uniform, optimizer_step, Graph, NodeId, OptimizerConfig, OptimizerState, Tensor};
use crate::error::{invalid, shape_err, Result};
use crate::spaces::{Basis, Domain, MultiResFunction};
use crate::unet::{batch_to_tensor, Owner, UNetState};

/// Input/target pairs at one resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Vec<MultiResFunction>,
    targets: Vec<MultiResFunction>,
}

impl Dataset {
    pub fn new(inputs: Vec<MultiResFunction>, targets: Vec<MultiResFunction>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(shape_err("dataset", format!("{} inputs, {} targets", inputs.len(), targets.len())));
        }
        let inputs = inputs.iter().map(|f| f.to_basis(Basis::Pixel)).collect::<Result<Vec<_>>>()?;
        let targets = targets.iter().map(|f| f.to_basis(Basis::Pixel)).collect::<Result<Vec<_>>>()?;
        if let (Some(v), Some(w)) = (inputs.first(), targets.first()) {
            let same = |a: &MultiResFunction, b: &MultiResFunction| {
                (a.domain(), a.resolution(), a.channels()) == (b.domain(), b.resolution(), b.channels())
            };
            if !inputs.iter().all(|f| same(f, v)) || !targets.iter().all(|f| same(f, w)) {
                return Err(shape_err("dataset", "all inputs and all targets must share one space"));
            }
            if v.domain() != w.domain() || v.resolution() != w.resolution() {
                return Err(shape_err("dataset", "inputs and targets must live at the same resolution"));
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[MultiResFunction] {
        &self.inputs
    }

    pub fn targets(&self) -> &[MultiResFunction] {
        &self.targets
    }

    pub fn resolution(&self) -> Option<u32> {
        self.inputs.first().map(MultiResFunction::resolution)
    }

    /// `{(P_i v, Q_i w)}`, both by average pooling.
    pub fn project(&self, i: u32) -> Result<Self> {
        Ok(Self {
            inputs: self.inputs.iter().map(|f| f.project(i)).collect::<Result<_>>()?,
            targets: self.targets.iter().map(|f| f.project(i)).collect::<Result<_>>()?,
        })
    }
}

fn default_batch() -> Option<usize> {
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub freeze: bool,
    /// Resolutions trained in order by [`staged_train`]; empty means
    /// `1..=J`.
    #[serde(default)]
    pub stages: Vec<u32>,
    /// Minibatch size; full batch when absent.
    #[serde(default = "default_batch")]
    pub batch_size: Option<usize>,
}

impl TrainConfig {
    pub fn new(optimizer: OptimizerConfig, steps: usize, seed: u64) -> Self {
        Self {
            optimizer,
            steps,
            seed,
            freeze: false,
            stages: Vec::new(),
            batch_size: None,
        }
    }

    fn stages_for(&self, depth: u32) -> Result<Vec<u32>> {
        if self.stages.is_empty() {
            return Ok((1..=depth).collect());
        }
        if self.stages.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("train_config", "stages must be strictly increasing"));
        }
        if self.stages.iter().any(|&s| s == 0 || s > depth) {
            return Err(invalid("train_config", format!("stages must lie in 1..={depth}")));
        }
        Ok(self.stages.clone())
    }
}

/// `𝓛 = sqrt(mean_k ‖w_k - U(v_k)‖²)` from the mean squared entry error.
fn loss_from_mse(mse: f64, domain: Domain, channels: usize) -> f64 {
    let area = domain.cell_measure(0) * domain.cells(0) as f64;
    (mse * area * channels as f64).sqrt()
}

/// Owners evaluated when `top` is the output resolution.
fn used_at(owner: Owner, top: u32) -> bool {
    match owner {
        Owner::Head(i) | Owner::Tail(i) => i == top,
        Owner::Encoder(i) | Owner::Decoder(i) => i <= top,
        Owner::Bottleneck => true,
    }
}

struct Trainer<'a> {
    data: &'a Dataset,
    top: u32,
    x: Tensor,
    y: Tensor,
}

impl<'a> Trainer<'a> {
    fn new(u: &UNetState, data: &'a Dataset, top: u32) -> Result<Self> {
        let layout = u.spec().layout();
        Ok(Self {
            data,
            top,
            x: batch_to_tensor(data.inputs(), layout)?,
            y: batch_to_tensor(data.targets(), layout)?,
        })
    }

    fn rows(t: &Tensor, idx: &[usize]) -> Result<Tensor> {
        let per = t.len() / t.shape()[0];
        let mut data = Vec::with_capacity(per * idx.len());
        for &k in idx {
            data.extend_from_slice(&t.data()[k * per..(k + 1) * per]);
        }
        let mut shape = t.shape().to_vec();
        shape[0] = idx.len();
        Tensor::new(shape, data)
    }

    /// Full-batch mean squared error of the current state.
    fn evaluate(&self, u: &UNetState) -> Result<f64> {
        let mut g = Graph::new();
        let b = u.bind(&mut g, |_| false);
        let x = g.input(self.x.clone());
        let out = u.forward_graph(&mut g, &b, x, self.top)?;
        let t = g.input(self.y.clone());
        let loss = g.mse_loss(out, t)?;
        Ok(g.value(loss).item())
    }

    fn run(&self, u: &mut UNetState, cfg: &TrainConfig) -> Result<Vec<f64>> {
        let spec = u.spec().clone();
        let scale = |mse: f64| loss_from_mse(mse, spec.domain, spec.channels);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut state = OptimizerState::new();
        let n = self.data.len();
        let batch = cfg.batch_size.unwrap_or(n).clamp(1, n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut cursor = n;
        let top = self.top;
        let mut trace = Vec::with_capacity(cfg.steps + 1);
        for _ in 0..cfg.steps {
            let (x, y) = if batch == n {
                (self.x.clone(), self.y.clone())
            } else {
                if cursor + batch > n {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let idx = &order[cursor..cursor + batch];
                cursor += batch;
                (Self::rows(&self.x, idx)?, Self::rows(&self.y, idx)?)
            };
            let mut g = Graph::new();
            let b = u.bind(&mut g, |o| used_at(o, top));
            let xi = g.input(x);
            let out = u.forward_graph(&mut g, &b, xi, top)?;
            let t = g.input(y);
            let loss = g.mse_loss(out, t)?;
            let value = g.value(loss).item();
            if !value.is_finite() {
                return Err(crate::Error::NonFinite("training loss"));
            }
            trace.push(scale(value));
            let grads = g.backward(loss)?;
            let live: Vec<usize> = (0..u.params().len())
                .filter(|&k| g.node(b.nodes()[k]).requires_grad)
                .collect();
            let gs: Vec<Option<&Tensor>> = live.iter().map(|&k| grads.get(b.nodes()[k])).collect();
            let mut params: Vec<&mut Tensor> = u
                .params_mut()
                .iter_mut()
                .enumerate()
                .filter(|(k, _)| live.binary_search(k).is_ok())
                .map(|(_, p)| &mut p.tensor)
                .collect();
            optimizer_step(&mut params, &gs, &cfg.optimizer, &mut state)?;
        }
        trace.push(scale(self.evaluate(u)?));
        Ok(trace)
    }
}

fn check_data(u: &UNetState, data: &Dataset, top: u32) -> Result<Dataset> {
    let res = data.resolution().ok_or_else(|| invalid("train", "empty dataset"))?;
    if res < top {
        return Err(invalid("train", format!("data at resolution {res} is coarser than the net's {top}")));
    }
    let v = &data.inputs()[0];
    if v.domain() != u.spec().domain || v.channels() != u.spec().channels || data.targets()[0].channels() != u.spec().channels {
        return Err(shape_err("train", "data does not match the net's domain or channel count"));
    }
    if res == top {
        Ok(data.clone())
    } else {
        data.project(top)
    }
}

/// Trains every unfrozen parameter of the resolution-`J` net on `data`
/// (projected to `J`). The trace holds `𝓛_J` before each step and after the
/// last one.
pub fn train(u: &UNetState, data: &Dataset, cfg: &TrainConfig) -> Result<(UNetState, Vec<f64>)> {
    let top = u.spec().resolutions;
    let data = check_data(u, data, top)?;
    let mut u = u.clone();
    let trace = Trainer::new(&u, &data, top)?.run(&mut u, cfg)?;
    Ok((u, trace))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub resolution: u32,
    pub losses: Vec<f64>,
}

/// Trains the resolution-`i` nets one after another, each preconditioned on
/// the previous stage. With `cfg.freeze`, every resolution below `i` is
/// frozen during stage `i`; the freeze flags are restored afterwards.
/// `datasets[k]` serves stage `k + 1` and is projected down when finer.
pub fn staged_train(u: &UNetState, datasets: &[Dataset], cfg: &TrainConfig) -> Result<(UNetState, Vec<StageTrace>)> {
    let depth = u.spec().resolutions;
    let stages = cfg.stages_for(depth)?;
    let mut net = u.clone();
    let original = net.frozen().to_vec();
    let mut traces = Vec::with_capacity(stages.len());
    for (s, &i) in stages.iter().enumerate() {
        let data = datasets
            .get(i as usize - 1)
            .ok_or_else(|| invalid("staged_train", format!("no dataset for stage {i}")))?;
        let data = check_data(&net, data, i)?;
        if cfg.freeze {
            for k in 0..i {
                net.set_frozen(k, true)?;
            }
        }
        let stage_cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(s as u64),
            ..cfg.clone()
        };
        let losses = Trainer::new(&net, &data, i)?.run(&mut net, &stage_cfg)?;
        traces.push(StageTrace { resolution: i, losses });
    }
    for (k, f) in original.into_iter().enumerate() {
        net.set_frozen(k as u32, f)?;
    }
    Ok((net, traces))
}

/// Tasks for the toy regression datasets.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyTask {
    /// `w = v`.
    Identity,
    /// `w` is the finest detail component of `v`, `v - include(P_{I-1} v)`.
    FineDetail,
}

/// Standard normal pixel inputs at `resolution`.
pub fn toy_dataset(task: ToyTask, domain: Domain, resolution: u32, channels: usize, samples: usize, seed: u64) -> Result<Dataset> {
    if resolution == 0 && task == ToyTask::FineDetail {
        return Err(invalid("toy_dataset", "resolution 0 has no detail component"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = domain.cells(resolution) * channels;
    let mut inputs = Vec::with_capacity(samples);
    let mut targets = Vec::with_capacity(samples);
    for _ in 0..samples {
        let values = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v = MultiResFunction::new(domain, resolution, channels, Basis::Pixel, values)?;
        let w = match task {
            ToyTask::Identity => v.clone(),
            ToyTask::FineDetail => v.sub(&v.project(resolution - 1)?.include()?)?,
        };
        inputs.push(v);
        targets.push(w);
    }
    Dataset::new(inputs, targets)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticTarget {
    /// `w(v) = v²`
    Square,
    /// `w(v) = v³`
    Cube,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticPre {
    /// `R^pre(v) = v`
    Identity,
    /// `R^pre(v) = |v|`
    Abs,
}

fn d_grid() -> usize {
    50
}
fn d_hidden() -> usize {
    20
}
fn d_apps() -> usize {
    100
}
fn d_steps() -> usize {
    2000
}
fn d_opt() -> OptimizerConfig {
    OptimizerConfig::adam(1e-3)
}

/// The scalar regression `R(v) = R^pre(v) + R^res(v)` on a grid over
/// `[-1, 1]`, where `R^res(v) = h_D - v`, `h_0 = v` and
/// `h_{k+1} = h_k + g(h_k)` for one two-layer ReLU network `g` shared by all
/// `D` steps. Each layer's weights and bias, taken together, are kept below
/// unit Frobenius norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub target: SyntheticTarget,
    pub pre: SyntheticPre,
    #[serde(default = "d_grid")]
    pub grid: usize,
    #[serde(default = "d_hidden")]
    pub hidden: usize,
    #[serde(default = "d_apps")]
    pub applications: usize,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default = "d_opt")]
    pub optimizer: OptimizerConfig,
    /// `false` drops `R^res`, leaving the preconditioner alone.
    #[serde(default = "yes")]
    pub residual: bool,
}

fn yes() -> bool {
    true
}

impl SyntheticConfig {
    pub fn new(target: SyntheticTarget, pre: SyntheticPre) -> Self {
        Self {
            target,
            pre,
            grid: d_grid(),
            hidden: d_hidden(),
            applications: d_apps(),
            steps: d_steps(),
            optimizer: d_opt(),
            residual: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 || self.hidden == 0 || self.applications == 0 {
            return Err(invalid("synthetic_experiment", "grid ≥ 2, hidden ≥ 1 and applications ≥ 1 are required"));
        }
        Ok(())
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let n = self.grid;
        (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect()
    }

    pub fn label(&self, v: f64) -> f64 {
        match self.target {
            SyntheticTarget::Square => v * v,
            SyntheticTarget::Cube => v * v * v,
        }
    }

    pub fn precondition(&self, v: f64) -> f64 {
        match self.pre {
            SyntheticPre::Identity => v,
            SyntheticPre::Abs => v.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticReport {
    pub config: SyntheticConfig,
    pub seed: u64,
    pub initial_mse: f64,
    pub final_mse: f64,
    /// Largest layer norm seen after any optimizer step.
    pub max_layer_norm: f64,
    /// `(v, R(v))` on the training grid after training.
    pub fit: Vec<(f64, f64)>,
}

/// Rescales each `[W | b]` pair to norm below one when it is not already.
fn project_layers(params: &mut [Tensor]) -> f64 {
    let mut worst = 0.0f64;
    for pair in params.chunks_mut(2) {
        let norm = pair.iter().map(|t| t.frobenius_norm().powi(2)).sum::<f64>().sqrt();
        let norm = if norm >= 1.0 {
            let s = 1.0 / (norm * (1.0 + 1e-6));
            for t in pair.iter_mut() {
                t.data_mut().iter_mut().for_each(|x| *x *= s);
            }
            norm * s
        } else {
            norm
        };
        worst = worst.max(norm);
    }
    worst
}

fn synthetic_graph(cfg: &SyntheticConfig, g: &mut Graph, ids: &[NodeId], v: &Tensor, pre: &Tensor) -> Result<NodeId> {
    let p = g.input(pre.clone());
    if !cfg.residual {
        return Ok(p);
    }
    let x = g.input(v.clone());
    let mut h = x;
    for _ in 0..cfg.applications {
        let a = g.linear(h, ids[0], ids[1])?;
        let a = g.relu(a);
        let o = g.linear(a, ids[2], ids[3])?;
        h = g.add(h, o)?;
    }
    let minus = g.scale(x, -1.0);
    let r = g.add(h, minus)?;
    g.add(p, r)
}

/// Trains the synthetic ResNet and reports its final mean squared error.
///
/// The output layer starts at zero, so training begins from `R = R^pre`.
pub fn synthetic_experiment(cfg: &SyntheticConfig, seed: u64) -> Result<SyntheticReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hdim = cfg.hidden;
    let mut params = vec![
        init_uniform(&[hdim, 1], 1, &mut rng),
        init_uniform(&[hdim], 1, &mut rng),
        Tensor::zeros(&[1, hdim]),
        Tensor::zeros(&[1]),
    ];
    let mut max_norm = project_layers(&mut params);
    let grid = cfg.grid_points();
    let n = grid.len();
    let v = Tensor::new(vec![n, 1], grid.clone())?;
    let pre = Tensor::new(vec![n, 1], grid.iter().map(|&x| cfg.precondition(x)).collect())?;
    let w = Tensor::new(vec![n, 1], grid.iter().map(|&x| cfg.label(x)).collect())?;
    let mut state = OptimizerState::new();

    let evaluate = |params: &[Tensor]| -> Result<(f64, Vec<f64>)> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = params.iter().map(|t| g.input(t.clone())).collect();
        let out = synthetic_graph(cfg, &mut g, &ids, &v, &pre)?;
        let t = g.input(w.clone());
        let loss = g.mse_loss(out, t)?;
        Ok((g.value(loss).item(), g.value(out).data().to_vec()))
    };
    let (initial_mse, _) = evaluate(&params)?;
    if cfg.residual {
        for _ in 0..cfg.steps {
            let mut g = Graph::new();
            let ids: Vec<NodeId> = params.iter().map(|t| g.param(t.clone())).collect();
            let out = synthetic_graph(cfg, &mut g, &ids, &v, &pre)?;
            let t = g.input(w.clone());
            let loss = g.mse_loss(out, t)?;
            if !g.value(loss).item().is_finite() {
                return Err(crate::Error::NonFinite("synthetic experiment loss"));
            }
            let grads = g.backward(loss)?;
            let gs: Vec<Option<&Tensor>> = ids.iter().map(|&id| grads.get(id)).collect();
            let mut refs: Vec<&mut Tensor> = params.iter_mut().collect();
            optimizer_step(&mut refs, &gs, &cfg.optimizer, &mut state)?;
            max_norm = max_norm.max(project_layers(&mut params));
        }
    }
    let (final_mse, out) = evaluate(&params)?;
    Ok(SyntheticReport {
        config: cfg.clone(),
        seed,
        initial_mse,
        final_mse,
        max_layer_norm: max_norm,
        fit: grid.into_iter().zip(out).collect(),
    })
}

fn key_of(f: &MultiResFunction) -> Vec<u64> {
    f.coeffs().iter().map(|x| x.to_bits()).collect()
}

/// Empirical conditional mean of `Q_i w` given `P_j v`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRegressor {
    pub target_resolution: u32,
    pub input_resolution: u32,
    /// Bin of each sample, indexing `means`.
    pub assignment: Vec<usize>,
    /// Per-bin mean target (pixel values at the target resolution).
    pub means: Vec<MultiResFunction>,
    pub counts: Vec<usize>,
    /// `𝓛_{i|j}` of the regressor on the dataset.
    pub loss: f64,
}

impl OracleRegressor {
    pub fn prediction(&self, sample: usize) -> &MultiResFunction {
        &self.means[self.assignment[sample]]
    }

    /// Loss of the regressor after adding `delta` to every value of bin
    /// `bin`.
    pub fn perturbed_loss(&self, data: &Dataset, bin: usize, delta: f64) -> Result<f64> {
        let targets = targets_at(data, self.target_resolution)?;
        let mut shifted = self.means[bin].clone();
        shifted.coeffs_mut().iter_mut().for_each(|x| *x += delta);
        let preds: Vec<MultiResFunction> = self
            .assignment
            .iter()
            .map(|&b| if b == bin { shifted.clone() } else { self.means[b].clone() })
            .collect();
        crate::spaces::l2_loss(&preds, &targets)
    }
}

fn targets_at(data: &Dataset, i: u32) -> Result<Vec<MultiResFunction>> {
    data.targets().iter().map(|w| w.project(i)).collect()
}

/// Groups samples by exact equality of `P_j v` and averages `Q_i w` per
/// group, which minimizes the empirical L² loss over all functions of the
/// coarse input.
pub fn regression_oracle(data: &Dataset, i: u32, j: u32) -> Result<OracleRegressor> {
    let res = data.resolution().ok_or_else(|| invalid("regression_oracle", "empty dataset"))?;
    if i > res || j > res {
        return Err(invalid("regression_oracle", format!("resolutions ({i}, {j}) exceed the data resolution {res}")));
    }
    let targets = targets_at(data, i)?;
    let mut bins: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut assignment = Vec::with_capacity(data.len());
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut counts = Vec::new();
    for (v, w) in data.inputs().iter().zip(&targets) {
        let key = key_of(&v.project(j)?);
        let next = bins.len();
        let b = *bins.entry(key).or_insert(next);
        if b == sums.len() {
            sums.push(vec![0.0; w.coeffs().len()]);
            counts.push(0);
        }
        for (s, x) in sums[b].iter_mut().zip(w.coeffs()) {
            *s += x;
        }
        counts[b] += 1;
        assignment.push(b);
    }
    let w0 = &targets[0];
    let means = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let m = s.into_iter().map(|x| x / c as f64).collect();
            MultiResFunction::new(w0.domain(), i, w0.channels(), Basis::Pixel, m)
        })
        .collect::<Result<Vec<_>>>()?;
    let preds: Vec<MultiResFunction> = assignment.iter().map(|&b| means[b].clone()).collect();
    let loss = crate::spaces::l2_loss(&preds, &targets)?;
    Ok(OracleRegressor {
        target_resolution: i,
        input_resolution: j,
        assignment,
        means,
        counts,
        loss,
    })
}

/// Deterministic maps `U*` for the oracle suite.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleTarget {
    /// `U*(v) = v`.
    Identity,
    /// Squares every Haar coefficient of `v`; `Q_i U*` depends on `P_i v`
    /// only.
    HaarSquare,
    /// Squares every pixel of `v`; the coarse part of the output depends on
    /// fine details of the input.
    PixelSquare,
}

impl OracleTarget {
    pub fn apply(self, v: &MultiResFunction) -> Result<MultiResFunction> {
        match self {
            OracleTarget::Identity => Ok(v.clone()),
            OracleTarget::HaarSquare => {
                let mut h = v.to_basis(Basis::Haar)?;
                h.coeffs_mut().iter_mut().for_each(|c| *c *= *c);
                h.to_basis(Basis::Pixel)
            }
            OracleTarget::PixelSquare => {
                let mut p = v.to_basis(Basis::Pixel)?;
                p.coeffs_mut().iter_mut().for_each(|c| *c *= *c);
                Ok(p)
            }
        }
    }
}

fn d_levels() -> Vec<f64> {
    vec![0.0, 1.0]
}

/// Inputs on the interval with pixel values drawn from a short list of
/// dyadic numbers, so every projection is exact and coarse inputs collide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Config {
    pub resolution: u32,
    pub samples: usize,
    pub seed: u64,
    pub target: OracleTarget,
    #[serde(default = "d_levels")]
    pub levels: Vec<f64>,
}

pub fn theorem1_dataset(cfg: &Theorem1Config) -> Result<Dataset> {
    if cfg.levels.is_empty() || cfg.samples == 0 {
        return Err(invalid("theorem1_dataset", "need at least one level and one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = Domain::Interval.cells(cfg.resolution);
    let mut inputs = Vec::with_capacity(cfg.samples);
    let mut targets = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let values = (0..n).map(|_| *cfg.levels.choose(&mut rng).expect("non-empty")).collect();
        let v = MultiResFunction::pixels(Domain::Interval, cfg.resolution, values)?;
        targets.push(cfg.target.apply(&v)?);
        inputs.push(v);
    }
    Dataset::new(inputs, targets)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    /// Target resolution.
    pub i: u32,
    /// Conditioning resolution.
    pub j: u32,
    pub bins: usize,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Table {
    pub rows: Vec<OracleRow>,
    /// For every `i`, `𝓛_{i|j}` never increases as `j` grows.
    pub non_increasing_in_j: bool,
    /// For every `j`, `𝓛_{i|j}` never decreases as `i` grows and never exceeds
    /// the full-resolution loss.
    pub non_decreasing_in_i: bool,
    /// Largest coefficient gap between the `(i, i)` oracle and `Q_i U*`.
    pub max_measurable_gap: f64,
}

const TIE: f64 = 1e-12;

/// Oracle losses for every pair of `resolutions`, with the monotonicity
/// checks evaluated on the table.
pub fn theorem1_suite(data: &Dataset, resolutions: &[u32]) -> Result<Theorem1Table> {
    let res = data.resolution().ok_or_else(|| invalid("theorem1_suite", "empty dataset"))?;
    let mut rs = resolutions.to_vec();
    rs.sort_unstable();
    rs.dedup();
    if rs.is_empty() || rs.iter().any(|&r| r > res) {
        return Err(invalid("theorem1_suite", format!("resolutions must be non-empty and at most {res}")));
    }
    let mut rows = Vec::new();
    let mut gap = 0.0f64;
    for &i in &rs {
        for &j in &rs {
            let o = regression_oracle(data, i, j)?;
            if i == j {
                let targets = targets_at(data, i)?;
                for (k, t) in targets.iter().enumerate() {
                    gap = gap.max(o.prediction(k).max_abs_diff(t));
                }
            }
            rows.push(OracleRow { i, j, bins: o.means.len(), loss: o.loss });
        }
    }
    let at = |i: u32, j: u32| rows.iter().find(|r| r.i == i && r.j == j).expect("full grid").loss;
    let non_increasing_in_j = rs
        .iter()
        .all(|&i| rs.windows(2).all(|w| at(i, w[1]) <= at(i, w[0]) + TIE));
    let full = *rs.last().expect("non-empty");
    let non_decreasing_in_i = rs.iter().all(|&j| {
        rs.windows(2).all(|w| at(w[0], j) <= at(w[1], j) + TIE) && rs.iter().all(|&i| at(i, j) <= at(full, j) + TIE)
    });
    Ok(Theorem1Table {
        rows,
        non_increasing_in_j,
        non_decreasing_in_i,
        max_measurable_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> MultiResFunction {
        MultiResFunction::pixels(Domain::Interval, v.len().trailing_zeros(), v.to_vec()).unwrap()
    }

    #[test]
    fn oracle_constant_targets() {
        let vs = vec![line(&[0., 1.]), line(&[1., 1.]), line(&[0., 0.])];
        let ws = vec![line(&[2.5, 2.5]); 3];
        let o = regression_oracle(&Dataset::new(vs, ws).unwrap(), 1, 0).unwrap();
        assert_eq!(o.loss, 0.0);
        assert!(o.means.iter().all(|m| m.coeffs() == [2.5, 2.5]));
    }

    #[test]
    fn oracle_opposite_targets() {
        let vs = vec![line(&[1., 3.]), line(&[1., 3.])];
        let ws = vec![line(&[1., 1.]), line(&[-1., -1.])];
        let o = regression_oracle(&Dataset::new(vs, ws).unwrap(), 1, 1).unwrap();
        assert_eq!(o.means.len(), 1);
        assert_eq!(o.means[0].coeffs(), &[0.0, 0.0]);
        assert_eq!(o.loss, 1.0);
    }

    #[test]
    fn oracle_identity_fine_inputs() {
        let vs: Vec<_> = (0..8).map(|k| line(&[k as f64, 0.5 * k as f64, -1.0, 2.0])).collect();
        let data = Dataset::new(vs.clone(), vs).unwrap();
        for i in 0..=2 {
            assert_eq!(regression_oracle(&data, i, 2).unwrap().loss, 0.0);
        }
    }

    #[test]
    fn dataset_shape_checks() {
        assert!(Dataset::new(vec![line(&[1., 2.])], vec![]).is_err());
        assert!(Dataset::new(vec![line(&[1., 2.])], vec![line(&[1., 2., 3., 4.])]).is_err());
    }

    #[test]
    fn synthetic_without_residual_is_closed_form() {
        let mut cfg = SyntheticConfig::new(SyntheticTarget::Square, SyntheticPre::Identity);
        cfg.residual = false;
        let r = synthetic_experiment(&cfg, 0).unwrap();
        let grid = cfg.grid_points();
        let want = grid.iter().map(|v| (v - v * v).powi(2)).sum::<f64>() / grid.len() as f64;
        assert!((r.final_mse - want).abs() < 1e-15);
    }

    #[test]
    fn layer_projection() {
        let mut ps = vec![Tensor::full(&[2, 1], 3.0), Tensor::full(&[2], 4.0)];
        let n = project_layers(&mut ps);
        assert!(n < 1.0);
        let again: f64 = ps.iter().map(|t| t.frobenius_norm().powi(2)).sum::<f64>().sqrt();
        assert!(again < 1.0 && again > 0.999);
    }
}
