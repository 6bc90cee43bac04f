//! The forward noising process `X(t) = √(1-α_t) X_0 + √α_t ε` and Monte
//! Carlo checks of how its noise distributes over Haar bands and across
//! resolutions.
//!
//! Every sample index draws from its own ChaCha stream, and partial
//! statistics are merged block by block in index order, so results do not
//! depend on how many worker threads run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spaces::{Basis, Domain, MultiResFunction};
use crate::wavelet::{band_of, band_range, haar_to_pixel, lambda_entry, pixel_to_haar, soft_threshold};

/// Smallest sample count the Monte Carlo estimators accept.
pub const MIN_SAMPLES: usize = 100;

const BLOCK: usize = 512;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionSchedule {
    /// `α_t = t`
    Linear,
    /// `α_t = 1 - exp(-5t)`
    Exponential,
}

impl DiffusionSchedule {
    pub fn alpha(self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid("diffusion_schedule", format!("t = {t} lies outside [0, 1]")));
        }
        Ok(match self {
            DiffusionSchedule::Linear => t,
            DiffusionSchedule::Exponential => -(-5.0 * t).exp_m1(),
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "exponential" | "exp" => Ok(Self::Exponential),
            other => Err(invalid("diffusion_schedule", format!("unknown schedule '{other}' (linear, exponential)"))),
        }
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn noised(x0: &[f64], alpha: f64, noise_scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (a, b) = ((1.0 - alpha).sqrt(), alpha.sqrt() * noise_scale);
    x0.iter()
        .map(|&x| {
            let e: f64 = StandardNormal.sample(rng);
            a * x + b * e
        })
        .collect()
}

/// One draw of the forward process; `ε` is i.i.d. standard normal per cell.
pub fn forward_sample(x0: &MultiResFunction, t: f64, schedule: DiffusionSchedule, seed: u64) -> Result<MultiResFunction> {
    let alpha = schedule.alpha(t)?;
    let x0 = x0.to_basis(Basis::Pixel)?;
    let values = noised(x0.coeffs(), alpha, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
    MultiResFunction::new(x0.domain(), x0.resolution(), x0.channels(), Basis::Pixel, values)
}

/// Per-coordinate running mean and sum of squared deviations.
#[derive(Clone, Debug)]
struct Moments {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self { n: 0.0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / self.n;
            *s += d * (v - *m);
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        for k in 0..self.mean.len() {
            let d = other.mean[k] - self.mean[k];
            self.m2[k] += other.m2[k] + d * d * self.n * other.n / n;
            self.mean[k] += d * other.n / n;
        }
        self.n = n;
        self
    }

    fn variance(&self) -> Vec<f64> {
        self.m2.iter().map(|s| s / (self.n - 1.0)).collect()
    }
}

/// Runs `draw(index)` for every sample and accumulates the moments of the
/// returned vectors in a thread-count independent order.
fn monte_carlo<F>(samples: usize, dim: usize, draw: F) -> Result<Moments>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let blocks: Vec<Result<Moments>> = (0..samples.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::new(dim);
            for k in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                m.push(&draw(k as u64)?);
            }
            Ok(m)
        })
        .collect();
    blocks.into_iter().try_fold(Moments::new(dim), |acc, b| Ok(acc.merge(&b?)))
}

fn check_samples(op: &'static str, n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(invalid(op, format!("{n} samples is below the minimum of {MIN_SAMPLES}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandStat {
    /// Band index (row band for 2D reports).
    pub band: u32,
    /// Column band for 2D reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_col: Option<u32>,
    pub coefficients: usize,
    /// Empirical variance averaged over the band's coefficients.
    pub variance: f64,
    /// 95% normal-theory half-width of `variance`.
    pub ci: f64,
    /// `variance / variance of the father band`.
    pub ratio: f64,
    pub ratio_ci: f64,
    /// `α_t` times the analytic white-noise variance of the band.
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub resolution: u32,
    pub t: f64,
    pub alpha: f64,
    pub schedule: DiffusionSchedule,
    pub samples: usize,
    pub seed: u64,
    pub bands: Vec<BandStat>,
}

impl SpectrumReport {
    pub fn band(&self, j: u32) -> Option<&BandStat> {
        self.bands.iter().find(|b| b.band == j && b.band_col.is_none())
    }
}

const Z95: f64 = 1.959_963_984_540_054;

/// Relative half-width of a variance averaged over `m` independent
/// coefficients, each estimated from `n` normal samples.
fn rel_half_width(n: usize, m: usize) -> f64 {
    Z95 * (2.0 / ((n as f64 - 1.0) * m as f64)).sqrt()
}

fn band_stats(groups: Vec<(u32, Option<u32>, Vec<f64>, f64)>, n: usize) -> Vec<BandStat> {
    let father = groups[0].2.iter().sum::<f64>() / groups[0].2.len() as f64;
    let father_rel = rel_half_width(n, groups[0].2.len());
    groups
        .into_iter()
        .map(|(band, band_col, vars, expected)| {
            let m = vars.len();
            let variance = vars.iter().sum::<f64>() / m as f64;
            let rel = rel_half_width(n, m);
            let ratio = if father > 0.0 { variance / father } else { 0.0 };
            BandStat {
                band,
                band_col,
                coefficients: m,
                variance,
                ci: variance * rel,
                ratio,
                ratio_ci: ratio * (rel * rel + father_rel * father_rel).sqrt(),
                expected,
            }
        })
        .collect()
}

/// Band variances of `T_i X(t)` for a one-dimensional `x0` at resolution `i`.
pub fn spectrum_variance(
    x0: &MultiResFunction,
    t: f64,
    schedule: DiffusionSchedule,
    samples: usize,
    seed: u64,
) -> Result<SpectrumReport> {
    check_samples("spectrum_variance", samples)?;
    if x0.domain() != Domain::Interval || x0.channels() != 1 {
        return Err(invalid("spectrum_variance", "expects a single-channel function on the interval; use spectrum_variance_2d for squares"));
    }
    let alpha = schedule.alpha(t)?;
    let x0 = x0.to_basis(Basis::Pixel)?;
    let i = x0.resolution();
    let moments = monte_carlo(samples, x0.cells(), |k| {
        pixel_to_haar(&noised(x0.coeffs(), alpha, 1.0, &mut stream(seed, k)), i)
    })?;
    let var = moments.variance();
    let groups = (0..=i)
        .map(|j| (j, None, var[band_range(j)].to_vec(), alpha * lambda_entry(i, j)))
        .collect();
    Ok(SpectrumReport {
        resolution: i,
        t,
        alpha,
        schedule,
        samples,
        seed,
        bands: band_stats(groups, samples),
    })
}

/// Separable variant on the square: bands are indexed by the pair of row
/// and column levels, with expected variance `α_t Λ_{jr} Λ_{jc}`.
pub fn spectrum_variance_2d(
    x0: &MultiResFunction,
    t: f64,
    schedule: DiffusionSchedule,
    samples: usize,
    seed: u64,
) -> Result<SpectrumReport> {
    check_samples("spectrum_variance", samples)?;
    if x0.domain() != Domain::Square || x0.channels() != 1 {
        return Err(invalid("spectrum_variance", "expects a single-channel function on the square"));
    }
    let alpha = schedule.alpha(t)?;
    let x0 = x0.to_basis(Basis::Pixel)?;
    let i = x0.resolution();
    let side = 1usize << i;
    let moments = monte_carlo(samples, x0.cells(), |k| {
        crate::wavelet::pixel_to_haar_2d(&noised(x0.coeffs(), alpha, 1.0, &mut stream(seed, k)), i)
    })?;
    let var = moments.variance();
    let mut groups = Vec::new();
    for jr in 0..=i {
        for jc in 0..=i {
            let vals: Vec<f64> = band_range(jr)
                .flat_map(|r| band_range(jc).map(move |c| (r, c)))
                .map(|(r, c)| var[r * side + c])
                .collect();
            groups.push((jr, Some(jc), vals, alpha * lambda_entry(i, jr) * lambda_entry(i, jc)));
        }
    }
    Ok(SpectrumReport {
        resolution: i,
        t,
        alpha,
        schedule,
        samples,
        seed,
        bands: band_stats(groups, samples),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub fine: u32,
    pub coarse: u32,
    pub t: f64,
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
    /// Factor applied to the fine noise, `sqrt(cells_fine / cells_coarse)`.
    pub noise_scale: f64,
    /// `Σ pooled variances / Σ direct variances` over coarse cells.
    pub variance_ratio: f64,
    /// Largest per-cell deviation of the variance ratio from 1.
    pub max_cell_variance_deviation: f64,
    pub max_mean_discrepancy: f64,
    /// Largest mean discrepancy in units of its Monte Carlo standard error.
    pub max_mean_z: f64,
    pub pooled_mean: Vec<f64>,
    pub direct_mean: Vec<f64>,
    pub pooled_variance: Vec<f64>,
    pub direct_variance: Vec<f64>,
}

/// Compares the fine process pooled down to resolution `coarse` with the
/// coarse process started from the pooled initial data. The fine noise is
/// scaled up so that pooling preserves its per-cell variance.
pub fn cross_resolution_consistency(
    x0_fine: &MultiResFunction,
    coarse: u32,
    t: f64,
    schedule: DiffusionSchedule,
    samples: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    check_samples("cross_resolution_consistency", samples)?;
    let x0 = x0_fine.to_basis(Basis::Pixel)?;
    let fine = x0.resolution();
    if coarse > fine {
        return Err(invalid("cross_resolution_consistency", format!("coarse resolution {coarse} exceeds fine resolution {fine}")));
    }
    let alpha = schedule.alpha(t)?;
    let x0c = x0.project(coarse)?;
    let scale = (x0.cells() as f64 / x0c.cells() as f64).sqrt();
    let nc = x0c.coeffs().len();
    let pooled = monte_carlo(samples, nc, |k| {
        let v = noised(x0.coeffs(), alpha, scale, &mut stream(seed, 2 * k));
        let f = MultiResFunction::new(x0.domain(), fine, x0.channels(), Basis::Pixel, v)?;
        Ok(f.project(coarse)?.into_coeffs())
    })?;
    let direct = monte_carlo(samples, nc, |k| Ok(noised(x0c.coeffs(), alpha, 1.0, &mut stream(seed, 2 * k + 1))))?;
    let (pv, dv) = (pooled.variance(), direct.variance());
    let (sp, sd): (f64, f64) = (pv.iter().sum(), dv.iter().sum());
    let variance_ratio = if sd == 0.0 && sp == 0.0 { 1.0 } else { sp / sd };
    let mut max_dev = 0.0f64;
    let mut max_disc = 0.0f64;
    let mut max_z = 0.0f64;
    let n = samples as f64;
    for c in 0..nc {
        let ratio = if dv[c] == 0.0 && pv[c] == 0.0 { 1.0 } else { pv[c] / dv[c] };
        max_dev = max_dev.max((ratio - 1.0).abs());
        let disc = (pooled.mean[c] - direct.mean[c]).abs();
        max_disc = max_disc.max(disc);
        let se = ((pv[c] + dv[c]) / n).sqrt();
        if se > 0.0 {
            max_z = max_z.max(disc / se);
        } else if disc > 0.0 {
            max_z = f64::INFINITY;
        }
    }
    Ok(ConsistencyReport {
        fine,
        coarse,
        t,
        alpha,
        samples,
        seed,
        noise_scale: scale,
        variance_ratio,
        max_cell_variance_deviation: max_dev,
        max_mean_discrepancy: max_disc,
        max_mean_z: max_z,
        pooled_mean: pooled.mean,
        direct_mean: direct.mean,
        pooled_variance: pv,
        direct_variance: dv,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `λ_j = c √α_t √(Λ_jj log 2^i)`, the universal threshold scaled to the
    /// band's noise level.
    Universal { c: f64 },
    /// The same `λ` for every detail band.
    Constant { lambda: f64 },
}

/// Soft-thresholds the detail coefficients of a noised interval signal. The
/// father coefficient is kept.
pub fn denoise_soft_threshold(x_t: &MultiResFunction, t: f64, schedule: DiffusionSchedule, rule: ThresholdRule) -> Result<MultiResFunction> {
    if x_t.domain() != Domain::Interval {
        return Err(invalid("denoise_soft_threshold", "expects a function on the interval"));
    }
    let alpha = schedule.alpha(t)?;
    let x = x_t.to_basis(Basis::Pixel)?;
    let i = x.resolution();
    let mut out = Vec::with_capacity(x.coeffs().len());
    for c in 0..x.channels() {
        let mut h = pixel_to_haar(x.channel(c), i)?;
        for j in 1..=i {
            let lambda = match rule {
                ThresholdRule::Universal { c } => {
                    c * alpha.sqrt() * (lambda_entry(i, j) * (i as f64) * std::f64::consts::LN_2).sqrt()
                }
                ThresholdRule::Constant { lambda } => lambda,
            };
            let r = band_range(j);
            let shrunk = soft_threshold(&h[r.clone()], lambda)?;
            h[r].copy_from_slice(&shrunk);
        }
        out.extend(haar_to_pixel(&h, i)?);
    }
    MultiResFunction::new(Domain::Interval, i, x.channels(), Basis::Pixel, out)
}

/// Mean squared Haar coefficient of `x0` per band, divided by the noise
/// variance `α_t Λ_jj` the band receives at time `t`.
pub fn band_snr(x0: &MultiResFunction, t: f64, schedule: DiffusionSchedule) -> Result<Vec<f64>> {
    if x0.domain() != Domain::Interval || x0.channels() != 1 {
        return Err(invalid("band_snr", "expects a single-channel function on the interval"));
    }
    let alpha = schedule.alpha(t)?;
    let x0 = x0.to_basis(Basis::Pixel)?;
    let i = x0.resolution();
    let h = pixel_to_haar(x0.coeffs(), i)?;
    let mut energy = vec![0.0; i as usize + 1];
    for (k, c) in h.iter().enumerate() {
        energy[band_of(k) as usize] += c * c;
    }
    Ok((0..=i)
        .map(|j| energy[j as usize] / band_range(j).len() as f64 / (alpha * lambda_entry(i, j)))
        .collect())
}
