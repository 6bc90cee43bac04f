use serde::{Deserialize, Serialize};

use mrn::diffusion::{cross_resolution_consistency, spectrum_variance, spectrum_variance_2d, DiffusionSchedule};
use mrn::spaces::{galerkin_solve_elliptic, h01_function_eval_channel, Basis, Domain, MultiResFunction};
use mrn::train::{
    staged_train, synthetic_experiment, theorem1_dataset, theorem1_suite, toy_dataset, SyntheticConfig, SyntheticPre,
    SyntheticTarget, Theorem1Config, ToyTask, TrainConfig,
};
use mrn::triangle::{tri_avg_pool, tri_sample, TriFunction};
use mrn::unet::{build_unet, unet_forward, UNetSpec};
use mrn::wavelet::{dwt_1d, dwt_2d, FilterBank};

use crate::output::{check_output, invalid, read_bytes, read_json, read_mrf, sibling, CliResult, Outputs};
use crate::{
    ConsistencyArgs, DwtArgs, PdeArgs, Pre, Schedule, SpectrumArgs, Target, Thm1Args, TrainStagedArgs, TrainSynthArgs,
    TriArgs, TriCommand, TriKind, TriSynthArgs, UnetEvalArgs,
};

fn schedule(s: Schedule) -> DiffusionSchedule {
    match s {
        Schedule::Linear => DiffusionSchedule::Linear,
        Schedule::Exponential => DiffusionSchedule::Exponential,
    }
}

fn single_channel(f: &MultiResFunction, op: &'static str) -> CliResult {
    if f.channels() != 1 {
        return Err(invalid(op, format!("expects one channel, got {}", f.channels())));
    }
    Ok(())
}

#[derive(Serialize)]
struct BandRow<'a> {
    level: u32,
    band: &'a str,
    index: usize,
    value: f64,
}

pub fn dwt(a: &DwtArgs) -> CliResult {
    check_output(&a.out)?;
    let bank = FilterBank::by_name(&a.bank)?;
    let f = read_mrf(&a.input)?;
    single_channel(&f, "dwt")?;
    let px = f.to_basis(Basis::Pixel)?;
    let p = match f.domain() {
        Domain::Interval => dwt_1d(px.coeffs(), a.levels, &bank)?,
        Domain::Square => dwt_2d(px.coeffs(), 1 << f.resolution(), a.levels, &bank)?,
        d => return Err(invalid("dwt", format!("no filter-bank transform on the {d:?} domain"))),
    };
    let names: &[&str] = if p.dims == 1 { &["d"] } else { &["lh", "hl", "hh"] };
    let mut rows = Vec::new();
    for (l, bands) in p.details.iter().enumerate() {
        for (b, band) in bands.iter().enumerate() {
            rows.extend(band.iter().enumerate().map(|(index, &value)| BandRow { level: l as u32 + 1, band: names[b], index, value }));
        }
    }
    rows.extend(p.coarse.iter().enumerate().map(|(index, &value)| BandRow { level: p.levels, band: "a", index, value }));
    let mut out = Outputs::default();
    out.json(&a.out, &p);
    out.csv(&sibling(&a.out, "csv"), rows)?;
    out.commit("dwt", a, None)
}

#[derive(Serialize)]
struct NodeRow {
    channel: usize,
    x: f64,
    u: f64,
}

pub fn pde(a: &PdeArgs) -> CliResult {
    check_output(&a.out)?;
    if let Some(c) = &a.csv {
        check_output(c)?;
    }
    let f = read_mrf(&a.rhs)?;
    let u = galerkin_solve_elliptic(&f, a.resolution)?;
    let mut out = Outputs::default();
    out.mrf(&a.out, &u);
    if let Some(path) = &a.csv {
        let n = 1usize << a.resolution;
        let mut rows = Vec::with_capacity(u.channels() * (n + 1));
        for channel in 0..u.channels() {
            for k in 0..=n {
                let x = k as f64 / n as f64;
                rows.push(NodeRow { channel, x, u: h01_function_eval_channel(&u, channel, x)? });
            }
        }
        out.csv(path, rows)?;
    }
    out.commit("pde", a, None)
}

fn tri_input(a: &TriArgs, domain: Domain) -> CliResult<MultiResFunction> {
    check_output(&a.out)?;
    let f = read_mrf(&a.input)?;
    if f.domain() != domain {
        return Err(invalid("tri", format!("expected a function on the {domain:?} domain, got {:?}", f.domain())));
    }
    Ok(f)
}

fn expect_depth(f: &MultiResFunction, depth: u32) -> CliResult {
    if f.resolution() != depth {
        return Err(invalid("tri", format!("--depth {depth} does not match the input depth {}", f.resolution())));
    }
    Ok(())
}

pub fn tri(cmd: &TriCommand) -> CliResult {
    let (name, result, args): (&str, MultiResFunction, &dyn erased::Args) = match cmd {
        TriCommand::Encode(a) => {
            let f = tri_input(a, Domain::Triangle)?;
            expect_depth(&f, a.depth)?;
            let t = TriFunction::from_function(&f)?;
            let g = MultiResFunction::new(Domain::Square, a.depth, t.channels(), Basis::Pixel, t.encode())?;
            ("tri encode", g, a)
        }
        TriCommand::Decode(a) => {
            let f = tri_input(a, Domain::Square)?;
            expect_depth(&f, a.depth)?;
            let f = f.to_basis(Basis::Pixel)?;
            let t = TriFunction::decode(f.coeffs(), a.depth, f.channels())?;
            ("tri decode", t.into_function(), a)
        }
        TriCommand::Pool(a) => {
            let f = tri_input(a, Domain::Triangle)?;
            let t = tri_avg_pool(&TriFunction::from_function(&f)?, a.depth)?;
            ("tri pool", t.into_function(), a)
        }
        TriCommand::Haar(a) => {
            let f = tri_input(a, Domain::Triangle)?;
            expect_depth(&f, a.depth)?;
            if a.depth == 0 {
                return Err(invalid("tri haar", "depth 0 has no detail coefficients"));
            }
            ("tri haar", f.to_basis(Basis::Haar)?, a)
        }
        TriCommand::Synth(a) => {
            check_output(&a.out)?;
            let t = tri_sample(synth_kind(a), a.depth)?;
            ("tri synth", t.into_function(), a)
        }
    };
    let mut out = Outputs::default();
    out.mrf(args.out(), &result);
    out.commit(name, &args.json(), None)
}

fn synth_kind(a: &TriSynthArgs) -> fn(f64, f64) -> f64 {
    match a.kind {
        TriKind::Constant => |_, _| 1.0,
        TriKind::Plane => |x, y| 1.0 + 2.0 * x - y,
        TriKind::Bump => |x, y| (-((x - 1.0 / 3.0).powi(2) + (y - 1.0 / 3.0).powi(2)) / 0.02).exp(),
    }
}

/// The tri subcommands share one output path but have two argument types.
mod erased {
    pub trait Args {
        fn out(&self) -> &str;
        fn json(&self) -> serde_json::Value;
    }

    impl Args for crate::TriArgs {
        fn out(&self) -> &str {
            &self.out
        }
        fn json(&self) -> serde_json::Value {
            serde_json::to_value(self).expect("args serialize")
        }
    }

    impl Args for crate::TriSynthArgs {
        fn out(&self) -> &str {
            &self.out
        }
        fn json(&self) -> serde_json::Value {
            serde_json::to_value(self).expect("args serialize")
        }
    }
}

pub fn unet_eval(a: &UnetEvalArgs) -> CliResult {
    check_output(&a.out)?;
    let net = mrn::io::decode_uns(&read_bytes(&a.net)?)?;
    let v = read_mrf(&a.input)?;
    if v.resolution() != a.resolution {
        return Err(invalid("unet-eval", format!("--resolution {} does not match the input resolution {}", a.resolution, v.resolution())));
    }
    let w = unet_forward(&net, &v, a.resolution)?;
    let mut out = Outputs::default();
    out.mrf(&a.out, &w);
    out.commit("unet-eval", a, None)
}

#[derive(Serialize)]
struct FitRow {
    v: f64,
    fit: f64,
    target: f64,
}

pub fn train_synth(a: &TrainSynthArgs) -> CliResult {
    check_output(&a.report)?;
    let target = match a.target {
        Target::Square => SyntheticTarget::Square,
        Target::Cube => SyntheticTarget::Cube,
    };
    let pre = match a.pre {
        Pre::Identity => SyntheticPre::Identity,
        Pre::Abs => SyntheticPre::Abs,
    };
    let mut cfg = SyntheticConfig::new(target, pre);
    cfg.steps = a.steps;
    cfg.validate()?;
    let report = synthetic_experiment(&cfg, a.seed)?;
    let rows: Vec<_> = report.fit.iter().map(|&(v, fit)| FitRow { v, fit, target: cfg.label(v) }).collect();
    let mut out = Outputs::default();
    out.json(&a.report, &report);
    out.csv(&sibling(&a.report, "csv"), rows)?;
    out.commit("train-synth", a, Some(a.seed))
}

/// Config file for `train-staged`. The stage datasets are projections of
/// one toy dataset drawn at the finest resolution.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StagedConfig {
    spec: UNetSpec,
    task: ToyTask,
    samples: usize,
    data_seed: u64,
    train: TrainConfig,
}

#[derive(Serialize)]
struct TraceRow {
    stage: usize,
    resolution: u32,
    step: usize,
    loss: f64,
}

pub fn train_staged(a: &TrainStagedArgs) -> CliResult {
    check_output(&a.out)?;
    check_output(&a.trace)?;
    let mut cfg: StagedConfig = read_json(&a.config)?;
    cfg.train.freeze |= a.freeze;
    cfg.spec.validate()?;
    let j = cfg.spec.resolutions;
    let data = toy_dataset(cfg.task, cfg.spec.domain, j, cfg.spec.channels, cfg.samples, cfg.data_seed)?;
    let datasets = (1..=j).map(|i| data.project(i)).collect::<Result<Vec<_>, _>>()?;
    let net = build_unet(&cfg.spec, cfg.train.seed)?;
    let (net, traces) = staged_train(&net, &datasets, &cfg.train)?;
    let rows = traces.iter().enumerate().flat_map(|(stage, t)| {
        t.losses.iter().enumerate().map(move |(step, &loss)| TraceRow { stage, resolution: t.resolution, step, loss })
    });
    let mut out = Outputs::default();
    out.bytes(&a.out, mrn::io::encode_uns(&net));
    out.csv(&a.trace, rows)?;
    out.commit("train-staged", &serde_json::json!({ "args": a, "config": cfg }), Some(cfg.train.seed))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Thm1Config {
    #[serde(flatten)]
    data: Theorem1Config,
    /// Resolutions tabulated; `0..=resolution` when absent.
    #[serde(default)]
    resolutions: Vec<u32>,
}

pub fn thm1(a: &Thm1Args) -> CliResult {
    check_output(&a.out)?;
    let cfg: Thm1Config = read_json(&a.config)?;
    let resolutions = if cfg.resolutions.is_empty() { (0..=cfg.data.resolution).collect() } else { cfg.resolutions.clone() };
    let data = theorem1_dataset(&cfg.data)?;
    let table = theorem1_suite(&data, &resolutions)?;
    let mut out = Outputs::default();
    out.csv(&a.out, &table.rows)?;
    out.json(&sibling(&a.out, "json"), &table);
    out.commit("thm1", &serde_json::json!({ "args": a, "config": cfg }), Some(cfg.data.seed))
}

pub fn spectrum(a: &SpectrumArgs) -> CliResult {
    check_output(&a.out)?;
    let x0 = match &a.input {
        Some(p) => {
            let f = read_mrf(p)?;
            if f.resolution() != a.resolution {
                return Err(invalid("spectrum", format!("--resolution {} does not match the input resolution {}", a.resolution, f.resolution())));
            }
            f
        }
        None => MultiResFunction::constant(Domain::Interval, a.resolution, 1, 0.0)?,
    };
    let sched = schedule(a.schedule);
    let report = match x0.domain() {
        Domain::Square => spectrum_variance_2d(&x0, a.t, sched, a.samples, a.seed)?,
        _ => spectrum_variance(&x0, a.t, sched, a.samples, a.seed)?,
    };
    let mut out = Outputs::default();
    out.json(&a.out, &report);
    out.csv(&sibling(&a.out, "csv"), &report.bands)?;
    out.commit("spectrum", a, Some(a.seed))
}

#[derive(Serialize)]
struct CellRow {
    cell: usize,
    pooled_mean: f64,
    direct_mean: f64,
    pooled_variance: f64,
    direct_variance: f64,
}

pub fn consistency(a: &ConsistencyArgs) -> CliResult {
    check_output(&a.out)?;
    let x0 = match &a.input {
        Some(p) => {
            let f = read_mrf(p)?;
            if f.resolution() != a.fine {
                return Err(invalid("consistency", format!("--fine {} does not match the input resolution {}", a.fine, f.resolution())));
            }
            f
        }
        None => MultiResFunction::sample(Domain::Interval, a.fine, |x, _| (2.0 * std::f64::consts::PI * x).sin())?,
    };
    let r = cross_resolution_consistency(&x0, a.coarse, a.t, schedule(a.schedule), a.samples, a.seed)?;
    let rows: Vec<_> = (0..r.pooled_mean.len())
        .map(|cell| CellRow {
            cell,
            pooled_mean: r.pooled_mean[cell],
            direct_mean: r.direct_mean[cell],
            pooled_variance: r.pooled_variance[cell],
            direct_variance: r.direct_variance[cell],
        })
        .collect();
    let mut out = Outputs::default();
    out.json(&a.out, &r);
    out.csv(&sibling(&a.out, "csv"), rows)?;
    out.commit("consistency", a, Some(a.seed))
}
