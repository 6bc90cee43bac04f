//! Self-similar right triangle: midpoint subdivision, codespace addresses,
//! the coding map onto a square array, pooling, and a per-parent Haar
//! transform.
//!
//! A cell at depth `d` is named by `d` digits from `{1, 2, 3, 4}`. Child 1
//! sits at the right-angle corner, child 2 at the corner along the x axis,
//! child 3 at the corner along the y axis and child 4 is the inverted centre
//! piece. Values are stored in lexicographic address order, so the four
//! children of a parent are always contiguous.

use std::fmt;

use crate::error::{invalid, shape_err, Result};
use crate::spaces::{Domain, MultiResFunction};

/// Deepest subdivision the coding map supports.
pub const MAX_DEPTH: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodespaceAddress(Vec<u8>);

impl CodespaceAddress {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.bytes()
            .map(|b| match b {
                b'1'..=b'4' => Ok(b - b'0'),
                _ => Err(invalid("codespace_address", format!("'{s}' contains digits outside 1-4"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    /// Address of the `index`-th cell at `depth` in lexicographic order.
    pub fn from_index(index: usize, depth: u32) -> Self {
        let digits = (0..depth)
            .rev()
            .map(|p| ((index >> (2 * p)) & 3) as u8 + 1)
            .collect();
        Self(digits)
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &d| acc * 4 + (d - 1) as usize)
    }

    pub fn depth(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn parent(&self) -> Option<Self> {
        (!self.0.is_empty()).then(|| Self(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn child(&self, digit: u8) -> Result<Self> {
        if !(1..=4).contains(&digit) {
            return Err(invalid("codespace_address", format!("child digit {digit} outside 1-4")));
        }
        let mut d = self.0.clone();
        d.push(digit);
        Ok(Self(d))
    }

    /// `(row, col)` in the `2^d × 2^d` coding-map grid.
    pub fn grid_position(&self) -> (usize, usize) {
        self.0.iter().fold((0, 0), |(r, c), &d| {
            let q = (d - 1) as usize;
            (2 * r + q / 2, 2 * c + q % 2)
        })
    }

    /// Vertices of the cell, right-angle-type vertex first.
    pub fn vertices(&self) -> [[f64; 2]; 3] {
        let mut tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for &d in &self.0 {
            tri = child_triangle(tri, d);
        }
        tri
    }

    pub fn centroid(&self) -> [f64; 2] {
        let v = self.vertices();
        [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0]
    }
}

impl fmt::Display for CodespaceAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn child_triangle([p0, p1, p2]: [[f64; 2]; 3], digit: u8) -> [[f64; 2]; 3] {
    let (m01, m02, m12) = (mid(p0, p1), mid(p0, p2), mid(p1, p2));
    match digit {
        1 => [p0, m01, m02],
        2 => [m01, p1, m12],
        3 => [m02, m12, p2],
        _ => [m12, m02, m01],
    }
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(invalid("triangle", format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    Ok(())
}

/// The coding map at `depth`: `grid[row][col]` is the address stored there.
pub fn codespace_layout(depth: u32) -> Result<Vec<Vec<CodespaceAddress>>> {
    check_depth(depth)?;
    let side = 1usize << depth;
    let mut grid = vec![vec![CodespaceAddress::root(); side]; side];
    for k in 0..side * side {
        let a = CodespaceAddress::from_index(k, depth);
        let (r, c) = a.grid_position();
        grid[r][c] = a;
    }
    Ok(grid)
}

/// Values on the triangle at one depth, lexicographically ordered per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct TriFunction {
    depth: u32,
    channels: usize,
    values: Vec<f64>,
}

impl TriFunction {
    pub fn new(depth: u32, channels: usize, values: Vec<f64>) -> Result<Self> {
        check_depth(depth)?;
        let want = (1usize << (2 * depth)) * channels;
        if channels == 0 || values.len() != want {
            return Err(shape_err("tri_function", format!("depth {depth} x {channels} channel(s) needs {want} values, got {}", values.len())));
        }
        Ok(Self { depth, channels, values })
    }

    pub fn from_function(f: &MultiResFunction) -> Result<Self> {
        if f.domain() != Domain::Triangle {
            return Err(invalid("tri_function", "function is not on the triangle"));
        }
        let f = f.to_basis(crate::spaces::Basis::Pixel)?;
        Self::new(f.resolution(), f.channels(), f.coeffs().to_vec())
    }

    pub fn into_function(self) -> MultiResFunction {
        MultiResFunction::new(Domain::Triangle, self.depth, self.channels, crate::spaces::Basis::Pixel, self.values)
            .expect("triangle sizes are validated on construction")
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn cells(&self) -> usize {
        1 << (2 * self.depth)
    }

    /// Rearranges each channel onto the coding-map grid (row-major).
    pub fn encode(&self) -> Vec<f64> {
        let n = self.cells();
        let side = 1usize << self.depth;
        let mut out = vec![0.0; self.values.len()];
        for c in 0..self.channels {
            for k in 0..n {
                let (r, col) = CodespaceAddress::from_index(k, self.depth).grid_position();
                out[c * n + r * side + col] = self.values[c * n + k];
            }
        }
        out
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(grid: &[f64], depth: u32, channels: usize) -> Result<Self> {
        check_depth(depth)?;
        let n = 1usize << (2 * depth);
        if channels == 0 || grid.len() != n * channels {
            return Err(shape_err("tri_decode", format!("expected {} values, got {}", n * channels, grid.len())));
        }
        let side = 1usize << depth;
        let mut values = vec![0.0; grid.len()];
        for c in 0..channels {
            for k in 0..n {
                let (r, col) = CodespaceAddress::from_index(k, depth).grid_position();
                values[c * n + k] = grid[c * n + r * side + col];
            }
        }
        Self::new(depth, channels, values)
    }
}

/// One sample of `g` per cell, taken at the centroid.
pub fn tri_sample(g: impl Fn(f64, f64) -> f64, depth: u32) -> Result<TriFunction> {
    check_depth(depth)?;
    let n = 1usize << (2 * depth);
    let values = (0..n)
        .map(|k| {
            let [x, y] = CodespaceAddress::from_index(k, depth).centroid();
            g(x, y)
        })
        .collect();
    TriFunction::new(depth, 1, values)
}

pub(crate) fn pool_values(v: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if to > from {
        return Err(invalid("tri_avg_pool", format!("target depth {to} exceeds depth {from}")));
    }
    let block = 1usize << (2 * (from - to));
    let inv = 1.0 / block as f64;
    Ok(v.chunks_exact(block).map(|c| c.iter().sum::<f64>() * inv).collect())
}

/// Parent value = mean of its four (equal-area) children, applied down to
/// `to_depth`.
pub fn tri_avg_pool(f: &TriFunction, to_depth: u32) -> Result<TriFunction> {
    let n = f.cells();
    let mut out = Vec::new();
    for c in 0..f.channels {
        out.extend(pool_values(&f.values[c * n..(c + 1) * n], f.depth, to_depth)?);
    }
    TriFunction::new(to_depth, f.channels, out)
}

/// Rows of the four-point transform; row 0 is the father.
pub const WALSH_ROWS: [[f64; 4]; 4] = [
    [1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
];

/// Forward transform of one channel. Layout: the root mean, then for each
/// level `l = 1..=depth` the three detail coefficients of every depth-`l-1`
/// parent at offset `4^(l-1) + 3p`.
pub(crate) fn tri_haar_values(v: &[f64], depth: u32) -> Result<Vec<f64>> {
    let n = 1usize << (2 * depth);
    if v.len() != n {
        return Err(shape_err("tri_haar", format!("expected {n} values, got {}", v.len())));
    }
    let mut out = vec![0.0; n];
    let mut means = v.to_vec();
    for level in (1..=depth).rev() {
        let parents = 1usize << (2 * (level - 1));
        let mut next = Vec::with_capacity(parents);
        for p in 0..parents {
            let ch = &means[4 * p..4 * p + 4];
            let mut coef = [0.0; 4];
            for (r, row) in WALSH_ROWS.iter().enumerate() {
                coef[r] = 0.25 * row.iter().zip(ch).map(|(w, x)| w * x).sum::<f64>();
            }
            next.push(coef[0]);
            out[parents + 3 * p..parents + 3 * p + 3].copy_from_slice(&coef[1..]);
        }
        means = next;
    }
    out[0] = means[0];
    Ok(out)
}

pub(crate) fn tri_haar_inverse_values(c: &[f64], depth: u32) -> Result<Vec<f64>> {
    let n = 1usize << (2 * depth);
    if c.len() != n {
        return Err(shape_err("tri_haar_inverse", format!("expected {n} values, got {}", c.len())));
    }
    let mut means = vec![c[0]];
    for level in 1..=depth {
        let parents = 1usize << (2 * (level - 1));
        let mut next = Vec::with_capacity(4 * parents);
        for (p, &m) in means.iter().enumerate() {
            let coef = [m, c[parents + 3 * p], c[parents + 3 * p + 1], c[parents + 3 * p + 2]];
            for k in 0..4 {
                next.push((0..4).map(|r| WALSH_ROWS[r][k] * coef[r]).sum());
            }
        }
        means = next;
    }
    Ok(means)
}

/// Recursive four-point Haar transform of every channel.
pub fn tri_haar(f: &TriFunction) -> Result<Vec<f64>> {
    if f.depth == 0 {
        return Err(invalid("tri_haar", "depth 0 has no detail coefficients"));
    }
    let n = f.cells();
    let mut out = Vec::with_capacity(f.values.len());
    for c in 0..f.channels {
        out.extend(tri_haar_values(&f.values[c * n..(c + 1) * n], f.depth)?);
    }
    Ok(out)
}

pub fn tri_haar_inverse(coeffs: &[f64], depth: u32, channels: usize) -> Result<TriFunction> {
    if depth == 0 {
        return Err(invalid("tri_haar_inverse", "depth 0 has no detail coefficients"));
    }
    check_depth(depth)?;
    let n = 1usize << (2 * depth);
    if channels == 0 || coeffs.len() != n * channels {
        return Err(shape_err("tri_haar_inverse", format!("expected {} values, got {}", n * channels, coeffs.len())));
    }
    let mut values = Vec::with_capacity(coeffs.len());
    for c in 0..channels {
        values.extend(tri_haar_inverse_values(&coeffs[c * n..(c + 1) * n], depth)?);
    }
    TriFunction::new(depth, channels, values)
}

/// Level of coefficient `k` in the [`tri_haar`] layout (0 for the root mean).
pub fn tri_level_of(k: usize) -> u32 {
    if k == 0 {
        0
    } else {
        // offsets 4^(l-1) .. 4^l
        (usize::BITS - k.leading_zeros()).div_ceil(2)
    }
}

/// Variance of a level-`l` coefficient when every cell carries independent
/// unit-variance noise: `4^-depth` for the root, `4^-(depth - l + 1)` for
/// details. Each step finer multiplies the variance by four.
pub fn tri_white_noise_variance(depth: u32, level: u32) -> f64 {
    if level == 0 {
        (-2.0 * depth as f64).exp2()
    } else {
        (-2.0 * (depth - level + 1) as f64).exp2()
    }
}
