//! Generalized U-Nets over nested piecewise-constant subspaces.
//!
//! A net of depth `J` owns an encoder `E_i` and decoder `D_i` for every
//! resolution `i = 1..=J` and a bottleneck `U_0` at resolution 0. Evaluating
//! at resolution `i` runs the recursion
//!
//! ```text
//! U_i(v) = D_i( U_{i-1}(P_{i-1}(E_i v)) | E_i v )
//! ```
//!
//! where every decoder is a ResNet preconditioned on the included
//! lower-resolution output: `D_i(w | v) = w + R_i(w, v)`. Encoders are either
//! residual (`E_i v = v + R(v)`) or the identity, the latter giving a
//! Multi-ResNet.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{init_uniform, Graph, Layout, NodeId, Tensor};
use crate::error::{invalid, shape_err, Result};
use crate::spaces::{Basis, Domain, MultiResFunction, ProjectionKind};
use crate::triangle::TriFunction;

/// Deepest hierarchy [`build_unet`] accepts.
pub const MAX_DEPTH: u32 = 10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Resnet,
    Identity,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BottleneckKind {
    Identity,
    Resnet,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipMode {
    Normal,
    /// The decoder sees a zero function in place of the encoded input.
    Zeroed,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UNetSpec {
    /// `J`, the number of encoder/decoder pairs.
    pub resolutions: u32,
    pub domain: Domain,
    /// Channels of the input and output functions at every resolution.
    pub channels: usize,
    /// Hidden width of the residual bodies at resolution `J`; it doubles at
    /// every coarser resolution.
    pub width: usize,
    /// `encoders[i - 1]` is the kind of `E_i`.
    pub encoders: Vec<EncoderKind>,
    pub projection: ProjectionKind,
    pub bottleneck: BottleneckKind,
    pub skip: SkipMode,
    /// `false` builds the single-subspace ResNet: every projection and
    /// inclusion becomes the identity and the skips carry zeros.
    #[serde(default = "yes")]
    pub multi_subspace: bool,
    /// Residual 1×1 head and tail convolutions per resolution, active only
    /// when that resolution is the top of the evaluation.
    #[serde(default)]
    pub adapters: bool,
}

impl UNetSpec {
    pub fn multi_resnet(domain: Domain, resolutions: u32, channels: usize, width: usize) -> Self {
        Self {
            resolutions,
            domain,
            channels,
            width,
            encoders: vec![EncoderKind::Identity; resolutions as usize],
            projection: ProjectionKind::OrthogonalHaar,
            bottleneck: BottleneckKind::Resnet,
            skip: SkipMode::Normal,
            multi_subspace: true,
            adapters: false,
        }
    }

    pub fn residual_unet(domain: Domain, resolutions: u32, channels: usize, width: usize) -> Self {
        Self {
            encoders: vec![EncoderKind::Resnet; resolutions as usize],
            projection: ProjectionKind::AvgPool,
            ..Self::multi_resnet(domain, resolutions, channels, width)
        }
    }

    pub fn is_multi_resnet(&self) -> bool {
        self.encoders.iter().all(|&e| e == EncoderKind::Identity)
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.resolutions;
        if j == 0 || j > MAX_DEPTH {
            return Err(invalid("unet_spec", format!("depth {j} outside 1..={MAX_DEPTH}")));
        }
        if self.channels == 0 || self.width == 0 {
            return Err(invalid("unet_spec", "channels and width must be positive"));
        }
        if self.encoders.len() != j as usize {
            return Err(shape_err(
                "unet_spec",
                format!("resolution {}: {} encoder kinds for depth {j}", self.encoders.len().min(j as usize) + 1, self.encoders.len()),
            ));
        }
        if self.domain == Domain::Triangle && j > crate::triangle::MAX_DEPTH {
            return Err(shape_err("unet_spec", format!("resolution {j}: triangle grids stop at depth {}", crate::triangle::MAX_DEPTH)));
        }
        if self.width.checked_shl(j).is_none_or(|w| w > 1 << 16) {
            return Err(shape_err("unet_spec", "resolution 0: hidden width overflows"));
        }
        Ok(())
    }

    pub fn hidden_width(&self, i: u32) -> usize {
        self.width << (self.resolutions - i.min(self.resolutions))
    }

    pub fn layout(&self) -> Layout {
        match self.domain {
            Domain::Interval => Layout::Line,
            _ => Layout::Grid,
        }
    }
}

/// Which component a parameter tensor belongs to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Encoder(u32),
    Decoder(u32),
    Bottleneck,
    Head(u32),
    Tail(u32),
}

impl Owner {
    /// Resolution the owner is trained at; the bottleneck counts as 0.
    pub fn resolution(self) -> u32 {
        match self {
            Owner::Bottleneck => 0,
            Owner::Encoder(i) | Owner::Decoder(i) | Owner::Head(i) | Owner::Tail(i) => i,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub owner: Owner,
    pub tensor: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UNetState {
    spec: UNetSpec,
    params: Vec<Param>,
    frozen: Vec<bool>,
}

fn conv_pair(cin: usize, cout: usize, k: usize, rng: &mut ChaCha8Rng) -> [Tensor; 2] {
    let fan_in = cin * k * k;
    [init_uniform(&[cout, cin, k, k], fan_in, rng), init_uniform(&[cout], fan_in, rng)]
}

/// Allocates and initializes every parameter of `spec` from `seed`.
pub fn build_unet(spec: &UNetSpec, seed: u64) -> Result<UNetState> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = spec.channels;
    let mut params = Vec::new();
    let mut push_body = |owner: Owner, cin: usize, hidden: usize, rng: &mut ChaCha8Rng| {
        for t in conv_pair(cin, hidden, 3, rng).into_iter().chain(conv_pair(hidden, m, 3, rng)) {
            params.push(Param { owner, tensor: t });
        }
    };
    for i in (1..=spec.resolutions).rev() {
        if spec.encoders[i as usize - 1] == EncoderKind::Resnet {
            push_body(Owner::Encoder(i), m, spec.hidden_width(i), &mut rng);
        }
        push_body(Owner::Decoder(i), 2 * m, spec.hidden_width(i), &mut rng);
    }
    if spec.bottleneck == BottleneckKind::Resnet {
        push_body(Owner::Bottleneck, m, spec.hidden_width(0), &mut rng);
    }
    if spec.adapters {
        for i in 0..=spec.resolutions {
            for owner in [Owner::Head(i), Owner::Tail(i)] {
                params.push(Param { owner, tensor: Tensor::zeros(&[m, m, 1, 1]) });
                params.push(Param { owner, tensor: Tensor::zeros(&[m]) });
            }
        }
    }
    Ok(UNetState {
        spec: spec.clone(),
        params,
        frozen: vec![false; spec.resolutions as usize + 1],
    })
}

/// Parameter nodes of one evaluation, in the order of [`UNetState::params`].
pub struct Bound {
    nodes: Vec<NodeId>,
}

impl Bound {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }
}

impl UNetState {
    /// Reassembles a state from its parts, checking them against the spec.
    pub fn from_parts(spec: UNetSpec, params: Vec<Param>, frozen: Vec<bool>) -> Result<Self> {
        let template = build_unet(&spec, 0)?;
        if template.params.len() != params.len()
            || template.params.iter().zip(&params).any(|(a, b)| a.owner != b.owner || a.tensor.shape() != b.tensor.shape())
        {
            return Err(shape_err("unet_state", "parameters do not match the spec"));
        }
        if frozen.len() != template.frozen.len() {
            return Err(shape_err("unet_state", "one frozen flag per resolution is required"));
        }
        Ok(Self { spec, params, frozen })
    }

    pub fn spec(&self) -> &UNetSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn set_frozen(&mut self, resolution: u32, frozen: bool) -> Result<()> {
        let slot = self
            .frozen
            .get_mut(resolution as usize)
            .ok_or_else(|| invalid("freeze", format!("no resolution {resolution}")))?;
        *slot = frozen;
        Ok(())
    }

    pub fn is_frozen(&self, owner: Owner) -> bool {
        self.frozen[owner.resolution() as usize]
    }

    pub fn parameter_count(&self, filter: impl Fn(Owner) -> bool) -> usize {
        self.params.iter().filter(|p| filter(p.owner)).map(|p| p.tensor.len()).sum()
    }

    pub fn encoder_parameter_count(&self) -> usize {
        self.parameter_count(|o| matches!(o, Owner::Encoder(_)))
    }

    /// Zeroes the output layer of every residual body selected by `filter`,
    /// so those residuals vanish identically.
    pub fn zero_residuals(&mut self, filter: impl Fn(Owner) -> bool) {
        let mut k = 0;
        while k < self.params.len() {
            let owner = self.params[k].owner;
            let len = self.params[k..].iter().take_while(|p| p.owner == owner).count();
            if filter(owner) {
                let start = if matches!(owner, Owner::Head(_) | Owner::Tail(_)) { k } else { k + 2 };
                for p in &mut self.params[start..k + len] {
                    p.tensor.data_mut().iter_mut().for_each(|v| *v = 0.0);
                }
            }
            k += len;
        }
    }

    fn find(&self, owner: Owner) -> Option<usize> {
        self.params.iter().position(|p| p.owner == owner)
    }

    /// Adds every parameter to `g`. Parameters of frozen resolutions, and
    /// those rejected by `trainable`, enter as constants.
    pub fn bind(&self, g: &mut Graph, trainable: impl Fn(Owner) -> bool) -> Bound {
        let nodes = self
            .params
            .iter()
            .map(|p| {
                if trainable(p.owner) && !self.is_frozen(p.owner) {
                    g.param(p.tensor.clone())
                } else {
                    g.input(p.tensor.clone())
                }
            })
            .collect();
        Bound { nodes }
    }

    fn body(&self, g: &mut Graph, b: &Bound, owner: Owner, x: NodeId) -> Result<Option<NodeId>> {
        let Some(k) = self.find(owner) else { return Ok(None) };
        let n = &b.nodes[k..k + 4];
        let h = g.conv2d(x, n[0], n[1])?;
        let h = g.relu(h);
        Ok(Some(g.conv2d(h, n[2], n[3])?))
    }

    fn adapter(&self, g: &mut Graph, b: &Bound, owner: Owner, x: NodeId) -> Result<NodeId> {
        match self.find(owner) {
            Some(k) => {
                let r = g.conv2d(x, b.nodes[k], b.nodes[k + 1])?;
                g.add(x, r)
            }
            None => Ok(x),
        }
    }

    fn encode(&self, g: &mut Graph, b: &Bound, x: NodeId, i: u32) -> Result<NodeId> {
        match self.body(g, b, Owner::Encoder(i), x)? {
            Some(r) => g.add(x, r),
            None => Ok(x),
        }
    }

    fn bottleneck(&self, g: &mut Graph, b: &Bound, x: NodeId) -> Result<NodeId> {
        match self.body(g, b, Owner::Bottleneck, x)? {
            Some(r) => g.add(x, r),
            None => Ok(x),
        }
    }

    /// `include(U_{i-1}(P_{i-1}(ṽ)))` for an already encoded `ṽ`.
    fn lower(&self, g: &mut Graph, b: &Bound, encoded: NodeId, i: u32) -> Result<NodeId> {
        let layout = self.spec.layout();
        let p = if self.spec.multi_subspace { g.avg_pool_2x2(encoded, layout)? } else { encoded };
        let w = self.core(g, b, p, i - 1)?;
        if self.spec.multi_subspace {
            g.upsample_2x(w, layout)
        } else {
            Ok(w)
        }
    }

    fn core(&self, g: &mut Graph, b: &Bound, x: NodeId, i: u32) -> Result<NodeId> {
        if i == 0 {
            return self.bottleneck(g, b, x);
        }
        let enc = self.encode(g, b, x, i)?;
        let inc = self.lower(g, b, enc, i)?;
        let skip = match self.spec.skip {
            SkipMode::Normal if self.spec.multi_subspace => enc,
            _ => {
                let shape = g.value(enc).shape().to_vec();
                g.input(Tensor::zeros(&shape))
            }
        };
        let fused = g.concat_channels(inc, skip)?;
        let r = self
            .body(g, b, Owner::Decoder(i), fused)?
            .ok_or_else(|| invalid("unet_forward", format!("resolution {i} has no decoder")))?;
        g.add(inc, r)
    }

    /// The full evaluation at resolution `i` on a `[N, C, H, W]` node.
    pub fn forward_graph(&self, g: &mut Graph, b: &Bound, x: NodeId, i: u32) -> Result<NodeId> {
        self.check_resolution(i)?;
        let x = self.adapter(g, b, Owner::Head(i), x)?;
        let y = self.core(g, b, x, i)?;
        self.adapter(g, b, Owner::Tail(i), y)
    }

    fn check_resolution(&self, i: u32) -> Result<()> {
        if i > self.spec.resolutions {
            return Err(invalid("unet_forward", format!("resolution {i} exceeds the depth {}", self.spec.resolutions)));
        }
        Ok(())
    }

    fn check_input(&self, v: &MultiResFunction, i: u32) -> Result<()> {
        self.check_resolution(i)?;
        if v.resolution() != i || v.domain() != self.spec.domain || v.channels() != self.spec.channels {
            return Err(shape_err(
                "unet_forward",
                format!(
                    "net expects {:?} with {} channel(s) at resolution {i}, got {:?} with {} at {}",
                    self.spec.domain,
                    self.spec.channels,
                    v.domain(),
                    v.channels(),
                    v.resolution()
                ),
            ));
        }
        Ok(())
    }

    /// Evaluates a batch of functions, all at resolution `i`.
    pub fn forward_batch(&self, vs: &[MultiResFunction], i: u32) -> Result<Vec<MultiResFunction>> {
        for v in vs {
            self.check_input(v, i)?;
        }
        let mut g = Graph::new();
        let b = self.bind(&mut g, |_| false);
        let x = g.input(batch_to_tensor(vs, self.spec.layout())?);
        let y = self.forward_graph(&mut g, &b, x, i)?;
        tensor_to_batch(g.value(y), self.spec.domain, i)
    }
}

/// Runs the recursion at resolution `i`.
pub fn unet_forward(u: &UNetState, v: &MultiResFunction, i: u32) -> Result<MultiResFunction> {
    let mut out = u.forward_batch(std::slice::from_ref(v), i)?;
    Ok(out.remove(0))
}

/// Splits `U_i(v)` into the lower-resolution preconditioner
/// `include(U_{i-1}(P_{i-1}(E_i v)))` and the decoder residual.
///
/// The preconditioner is evaluated on its own graph, not read off the full
/// forward pass. With adapters enabled the top-level head feeds both paths
/// and the affine tail is applied to the preconditioner.
pub fn precondition_split(u: &UNetState, v: &MultiResFunction, i: u32) -> Result<(MultiResFunction, MultiResFunction)> {
    if i == 0 {
        return Err(invalid("precondition_split", "resolution 0 has no lower resolution"));
    }
    u.check_input(v, i)?;
    let full = unet_forward(u, v, i)?;
    let mut g = Graph::new();
    let b = u.bind(&mut g, |_| false);
    let x = g.input(batch_to_tensor(std::slice::from_ref(v), u.spec.layout())?);
    let x = u.adapter(&mut g, &b, Owner::Head(i), x)?;
    let enc = u.encode(&mut g, &b, x, i)?;
    let inc = u.lower(&mut g, &b, enc, i)?;
    let pre = u.adapter(&mut g, &b, Owner::Tail(i), inc)?;
    let pre = tensor_to_batch(g.value(pre), u.spec.domain, i)?.remove(0);
    let residual = full.sub(&pre)?;
    Ok((pre, residual))
}

/// Skip functions of a Multi-ResNet: `v` averaged down to every resolution,
/// finest first.
pub fn multiresnet_skips(v: &MultiResFunction) -> Result<Vec<MultiResFunction>> {
    let v = v.to_basis(Basis::Pixel)?;
    (0..=v.resolution()).rev().map(|k| v.project(k)).collect()
}

/// The map `x ↦ pre(x)` a [`ResNetOp`] is preconditioned on.
pub enum Preconditioner<'a> {
    Identity,
    /// `include(U_{i-1}(P_{i-1}(x)))` for `x` at resolution `i`.
    LowerResolution(&'a UNetState),
    Custom(Box<dyn Fn(&MultiResFunction) -> Result<MultiResFunction> + 'a>),
}

pub enum Residual<'a> {
    Zero,
    Network(Box<dyn Fn(&MultiResFunction) -> Result<MultiResFunction> + 'a>),
}

/// `R(x) = R^pre(x) + R^res(x)`.
pub struct ResNetOp<'a> {
    pub pre: Preconditioner<'a>,
    pub residual: Residual<'a>,
}

pub fn resnet_apply(r: &ResNetOp<'_>, x: &MultiResFunction) -> Result<MultiResFunction> {
    let x = x.to_basis(Basis::Pixel)?;
    let pre = match &r.pre {
        Preconditioner::Identity => x.clone(),
        Preconditioner::LowerResolution(net) => {
            let i = x.resolution();
            if i == 0 {
                return Err(invalid("resnet_apply", "resolution 0 has no lower resolution"));
            }
            unet_forward(net, &x.project(i - 1)?, i - 1)?.include()?
        }
        Preconditioner::Custom(f) => f(&x)?.to_basis(Basis::Pixel)?,
    };
    match &r.residual {
        Residual::Zero => Ok(pre),
        Residual::Network(f) => {
            let res = f(&x)?.to_basis(Basis::Pixel)?;
            if (res.domain(), res.resolution(), res.channels()) != (pre.domain(), pre.resolution(), pre.channels()) {
                return Err(shape_err("resnet_apply", "preconditioner and residual outputs differ in shape"));
            }
            pre.add(&res)
        }
    }
}

fn grid_values(f: &MultiResFunction) -> Result<Vec<f64>> {
    let f = f.to_basis(Basis::Pixel)?;
    Ok(match f.domain() {
        Domain::Triangle => TriFunction::from_function(&f)?.encode(),
        _ => f.into_coeffs(),
    })
}

/// Packs same-shaped functions into a `[N, C, H, W]` tensor. Triangle data
/// is laid out on its coding grid.
pub fn batch_to_tensor(fs: &[MultiResFunction], layout: Layout) -> Result<Tensor> {
    let first = fs.first().ok_or_else(|| invalid("batch_to_tensor", "empty batch"))?;
    let (d, i, c) = (first.domain(), first.resolution(), first.channels());
    let (rows, cols) = d.grid(i);
    if (layout == Layout::Line) != (d == Domain::Interval) {
        return Err(invalid("batch_to_tensor", format!("{layout:?} layout does not fit {d:?}")));
    }
    let mut data = Vec::with_capacity(fs.len() * c * rows * cols);
    for f in fs {
        if (f.domain(), f.resolution(), f.channels()) != (d, i, c) {
            return Err(shape_err("batch_to_tensor", "batch members live in different spaces"));
        }
        data.extend(grid_values(f)?);
    }
    Tensor::new(vec![fs.len(), c, rows, cols], data)
}

pub fn tensor_to_batch(t: &Tensor, domain: Domain, resolution: u32) -> Result<Vec<MultiResFunction>> {
    let [n, c, h, w] = t.dims4("tensor_to_batch")?;
    if (h, w) != domain.grid(resolution) {
        return Err(shape_err("tensor_to_batch", format!("{h}x{w} grid does not match {domain:?} at {resolution}")));
    }
    t.data()
        .chunks_exact(c * h * w)
        .take(n)
        .map(|chunk| match domain {
            Domain::Triangle => Ok(TriFunction::decode(chunk, resolution, c)?.into_function()),
            _ => MultiResFunction::new(domain, resolution, c, Basis::Pixel, chunk.to_vec()),
        })
        .collect()
}
