use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result};
use crate::triangle;
use crate::wavelet;

/// Geometry a [`MultiResFunction`] lives on.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `[0, 1]`, `2^i` cells.
    Interval,
    /// `[0, 1]²`, `2^i × 2^i` cells in row-major order.
    Square,
    /// `[0, 2] × [0, 1]`, `2^i` rows by `2^(i+1)` columns.
    Rectangle,
    /// Right triangle with vertices (0,0), (1,0), (0,1); `4^i` cells in
    /// codespace-address order.
    Triangle,
}

impl Domain {
    pub fn tag(self) -> u32 {
        match self {
            Domain::Interval => 0,
            Domain::Square => 1,
            Domain::Rectangle => 2,
            Domain::Triangle => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Some(match tag {
            0 => Domain::Interval,
            1 => Domain::Square,
            2 => Domain::Rectangle,
            3 => Domain::Triangle,
            _ => return None,
        })
    }

    pub fn cells(self, i: u32) -> usize {
        match self {
            Domain::Interval => 1 << i,
            Domain::Square | Domain::Triangle => 1 << (2 * i),
            Domain::Rectangle => 2 << (2 * i),
        }
    }

    /// `(rows, cols)` of the pixel grid. Triangles use the codespace layout.
    pub fn grid(self, i: u32) -> (usize, usize) {
        match self {
            Domain::Interval => (1, 1 << i),
            Domain::Square | Domain::Triangle => (1 << i, 1 << i),
            Domain::Rectangle => (1 << i, 2 << i),
        }
    }

    /// Lebesgue measure of one cell.
    pub fn cell_measure(self, i: u32) -> f64 {
        let area = match self {
            Domain::Interval | Domain::Square => 1.0,
            Domain::Rectangle => 2.0,
            Domain::Triangle => 0.5,
        };
        area / self.cells(i) as f64
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Pixel,
    Haar,
    /// Hierarchical hats spanning piecewise-linear functions in H¹₀; only on
    /// the interval. Slot 0 is unused and always zero.
    H01,
}

impl Basis {
    pub fn tag(self) -> u32 {
        match self {
            Basis::Pixel => 0,
            Basis::Haar => 1,
            Basis::H01 => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Some(match tag {
            0 => Basis::Pixel,
            1 => Basis::Haar,
            2 => Basis::H01,
            _ => return None,
        })
    }
}

/// Coefficients of a function in one of the resolution-`i` subspaces.
///
/// Channels are stored one after another, each holding `cells(domain, i)`
/// values.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiResFunction {
    domain: Domain,
    resolution: u32,
    channels: usize,
    basis: Basis,
    coeffs: Vec<f64>,
}

impl MultiResFunction {
    pub fn new(domain: Domain, resolution: u32, channels: usize, basis: Basis, coeffs: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(invalid("function", "at least one channel is required"));
        }
        if resolution > wavelet::MAX_RESOLUTION {
            return Err(crate::Error::ResolutionTooLarge {
                requested: resolution,
                limit: wavelet::MAX_RESOLUTION,
            });
        }
        if basis == Basis::H01 && domain != Domain::Interval {
            return Err(invalid("function", "the H01 basis is only defined on the interval"));
        }
        let want = domain.cells(resolution) * channels;
        if coeffs.len() != want {
            return Err(shape_err(
                "function",
                format!("{domain:?} at resolution {resolution} with {channels} channel(s) needs {want} values, got {}", coeffs.len()),
            ));
        }
        Ok(Self {
            domain,
            resolution,
            channels,
            basis,
            coeffs,
        })
    }

    pub fn pixels(domain: Domain, resolution: u32, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(domain, resolution, 1, Basis::Pixel, coeffs)
    }

    pub fn constant(domain: Domain, resolution: u32, channels: usize, value: f64) -> Result<Self> {
        Self::new(domain, resolution, channels, Basis::Pixel, vec![value; domain.cells(resolution) * channels])
    }

    /// Samples `g` at cell centers (centroids on the triangle).
    pub fn sample(domain: Domain, resolution: u32, g: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = match domain {
            Domain::Triangle => return Ok(triangle::tri_sample(g, resolution)?.into_function()),
            _ => {
                let (rows, cols) = domain.grid(resolution);
                let h = 1.0 / rows as f64;
                let w = match domain {
                    Domain::Interval => 1.0 / cols as f64,
                    _ => h,
                };
                let mut out = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        let x = (c as f64 + 0.5) * w;
                        let y = if domain == Domain::Interval { 0.0 } else { (r as f64 + 0.5) * h };
                        out.push(g(x, y));
                    }
                }
                out
            }
        };
        Self::pixels(domain, resolution, values)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn cells(&self) -> usize {
        self.domain.cells(self.resolution)
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.cells();
        &self.coeffs[c * n..(c + 1) * n]
    }

    fn map_channels(&self, resolution: u32, basis: Basis, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Self> {
        let mut out = Vec::with_capacity(self.domain.cells(resolution) * self.channels);
        for c in 0..self.channels {
            out.extend(f(self.channel(c))?);
        }
        Self::new(self.domain, resolution, self.channels, basis, out)
    }

    fn require_not_h01(&self, op: &'static str) -> Result<()> {
        if self.basis == Basis::H01 {
            return Err(invalid(op, "not defined for H01 coefficients"));
        }
        Ok(())
    }

    /// Re-expresses the function in `basis`. Pixel and Haar interconvert
    /// exactly; H01 coefficients are not piecewise constant and cannot.
    pub fn to_basis(&self, basis: Basis) -> Result<Self> {
        if basis == self.basis {
            return Ok(self.clone());
        }
        if basis == Basis::H01 || self.basis == Basis::H01 {
            return Err(invalid("to_basis", "pixel/Haar and H01 coefficients do not describe the same space"));
        }
        let (i, d) = (self.resolution, self.domain);
        let forward = basis == Basis::Haar;
        self.map_channels(i, basis, |v| match (d, forward) {
            (Domain::Interval, true) => wavelet::pixel_to_haar(v, i),
            (Domain::Interval, false) => wavelet::haar_to_pixel(v, i),
            (Domain::Square, true) => wavelet::pixel_to_haar_2d(v, i),
            (Domain::Square, false) => wavelet::haar_to_pixel_2d(v, i),
            (Domain::Rectangle, true) => rect_transform(v, i, wavelet::pixel_to_haar),
            (Domain::Rectangle, false) => rect_transform(v, i, wavelet::haar_to_pixel),
            (Domain::Triangle, true) => triangle::tri_haar_values(v, i),
            (Domain::Triangle, false) => triangle::tri_haar_inverse_values(v, i),
        })
    }

    /// Projection onto a coarser subspace: average pooling on pixel values,
    /// truncation on Haar coefficients.
    pub fn project(&self, to: u32) -> Result<Self> {
        self.require_not_h01("project")?;
        if to > self.resolution {
            return Err(invalid(
                "project",
                format!("cannot project from resolution {} up to {to}; use include", self.resolution),
            ));
        }
        let (from, d) = (self.resolution, self.domain);
        match self.basis {
            Basis::Pixel => self.map_channels(to, Basis::Pixel, |v| pool(d, v, from, to)),
            _ => self.map_channels(to, Basis::Haar, |v| Ok(truncate(d, v, from, to))),
        }
    }

    /// Natural inclusion into resolution `resolution + 1`.
    pub fn include(&self) -> Result<Self> {
        self.include_to(self.resolution + 1)
    }

    pub fn include_to(&self, to: u32) -> Result<Self> {
        self.require_not_h01("include")?;
        if to < self.resolution {
            return Err(invalid("include", format!("target {to} is below resolution {}", self.resolution)));
        }
        let (from, d) = (self.resolution, self.domain);
        match self.basis {
            Basis::Pixel => self.map_channels(to, Basis::Pixel, |v| Ok(duplicate(d, v, from, to))),
            _ => self.map_channels(to, Basis::Haar, |v| Ok(zero_pad(d, v, from, to))),
        }
    }

    /// Measure-weighted L² inner product, summed over channels.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if (self.domain, self.resolution, self.channels) != (other.domain, other.resolution, other.channels) {
            return Err(shape_err("inner", "functions live in different spaces"));
        }
        let a = self.to_basis(Basis::Pixel)?;
        let b = other.to_basis(Basis::Pixel)?;
        let dot: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum();
        Ok(dot * self.domain.cell_measure(self.resolution))
    }

    pub fn l2_norm(&self) -> Result<f64> {
        Ok(self.inner(self)?.sqrt())
    }

    /// Pointwise `self - other` in pixel values.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if (self.domain, self.resolution, self.channels, self.basis)
            != (other.domain, other.resolution, other.channels, other.basis)
        {
            return Err(shape_err("function arithmetic", "operands live in different spaces"));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.domain, self.resolution, self.channels, self.basis, coeffs)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn rect_transform(v: &[f64], i: u32, f: fn(&[f64], u32) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let (rows, cols) = (1usize << i, 2usize << i);
    let mut tmp = Vec::with_capacity(v.len());
    for r in v.chunks_exact(cols) {
        tmp.extend(f(r, i + 1)?);
    }
    let mut out = tmp.clone();
    let mut col = vec![0.0; rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = tmp[r * cols + c];
        }
        for (r, x) in f(&col, i)?.into_iter().enumerate() {
            out[r * cols + c] = x;
        }
    }
    Ok(out)
}

fn pool(d: Domain, v: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    match d {
        Domain::Interval => wavelet::avg_pool_downsample(v, from, to),
        Domain::Square => wavelet::avg_pool_downsample_2d(v, from, to),
        Domain::Triangle => triangle::pool_values(v, from, to),
        Domain::Rectangle => {
            let (cols, block) = (2usize << from, 1usize << (from - to));
            let (ocols, orows) = (cols / block, (1usize << from) / block);
            let mut out = vec![0.0; orows * ocols];
            for (k, x) in v.iter().enumerate() {
                out[(k / cols / block) * ocols + (k % cols) / block] += x;
            }
            let inv = 1.0 / (block * block) as f64;
            Ok(out.into_iter().map(|x| x * inv).collect())
        }
    }
}

fn duplicate(d: Domain, v: &[f64], from: u32, to: u32) -> Vec<f64> {
    match d {
        Domain::Interval => {
            let block = 1usize << (to - from);
            v.iter().flat_map(|&x| std::iter::repeat_n(x, block)).collect()
        }
        Domain::Triangle => {
            let block = 1usize << (2 * (to - from));
            v.iter().flat_map(|&x| std::iter::repeat_n(x, block)).collect()
        }
        Domain::Square | Domain::Rectangle => {
            let (_, icols) = d.grid(from);
            let (rows, cols) = d.grid(to);
            let block = 1usize << (to - from);
            let mut out = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    out.push(v[(r / block) * icols + c / block]);
                }
            }
            out
        }
    }
}

fn truncate(d: Domain, v: &[f64], from: u32, to: u32) -> Vec<f64> {
    match d {
        Domain::Interval | Domain::Triangle => v[..d.cells(to)].to_vec(),
        Domain::Square | Domain::Rectangle => {
            let (_, icols) = d.grid(from);
            let (rows, cols) = d.grid(to);
            let mut out = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                out.extend_from_slice(&v[r * icols..r * icols + cols]);
            }
            out
        }
    }
}

fn zero_pad(d: Domain, v: &[f64], from: u32, to: u32) -> Vec<f64> {
    match d {
        Domain::Interval | Domain::Triangle => {
            let mut out = v.to_vec();
            out.resize(d.cells(to), 0.0);
            out
        }
        Domain::Square | Domain::Rectangle => {
            let (irows, icols) = d.grid(from);
            let (rows, cols) = d.grid(to);
            let mut out = vec![0.0; rows * cols];
            for r in 0..irows {
                out[r * cols..r * cols + icols].copy_from_slice(&v[r * icols..(r + 1) * icols]);
            }
            out
        }
    }
}

/// Kind of projection between resolutions.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    AvgPool,
    OrthogonalHaar,
}

/// `P_i` / `Q_i` as an explicit operator between two resolutions.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ProjectionOp {
    pub kind: ProjectionKind,
    pub from: u32,
    pub to: u32,
}

impl ProjectionOp {
    pub fn new(kind: ProjectionKind, from: u32, to: u32) -> Result<Self> {
        if to > from {
            return Err(invalid("projection", format!("cannot project from {from} up to {to}")));
        }
        Ok(Self { kind, from, to })
    }

    /// Projects and includes back, so the result lives at `from` again.
    /// The two kinds compute the same function along different routes.
    pub fn apply(&self, f: &MultiResFunction) -> Result<MultiResFunction> {
        if f.resolution() != self.from {
            return Err(shape_err(
                "projection",
                format!("operator acts on resolution {}, function has {}", self.from, f.resolution()),
            ));
        }
        match self.kind {
            ProjectionKind::AvgPool => f.to_basis(Basis::Pixel)?.project(self.to)?.include_to(self.from),
            ProjectionKind::OrthogonalHaar => f
                .to_basis(Basis::Haar)?
                .project(self.to)?
                .include_to(self.from)?
                .to_basis(Basis::Pixel),
        }
    }

    /// The complementary projector `Id - Q`.
    pub fn complement(&self, f: &MultiResFunction) -> Result<MultiResFunction> {
        f.to_basis(Basis::Pixel)?.sub(&self.apply(f)?)
    }
}

/// `sqrt(mean_k ‖w_k - u_k‖²)` with the measure-weighted function norm.
pub fn l2_loss(predictions: &[MultiResFunction], targets: &[MultiResFunction]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(invalid("l2_loss", "empty dataset"));
    }
    if predictions.len() != targets.len() {
        return Err(shape_err("l2_loss", format!("{} predictions, {} targets", predictions.len(), targets.len())));
    }
    let mut total = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        if p.resolution() != t.resolution() {
            return Err(shape_err("l2_loss", "prediction and target resolutions differ"));
        }
        let diff = t.to_basis(Basis::Pixel)?.sub(&p.to_basis(Basis::Pixel)?)?;
        total += diff.inner(&diff)?;
    }
    Ok((total / predictions.len() as f64).sqrt())
}
