//! The averaging Haar transform `T_i = Λ_i H_i` on dyadic grids.
//!
//! Coefficients are ordered father first, then band `j = 1..=i` occupying
//! the (zero-based) index range `2^(j-1) .. 2^j`. With this scaling the
//! father coefficient is the mean of the input and average pooling is
//! conjugate to truncation of the coefficient vector.

use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, shape_err, Error, Result};

/// Largest resolution accepted by the dense matrix builders.
pub const MAX_RESOLUTION: u32 = 16;

/// Dense `H_i` and the diagonal of `Λ_i` for one resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarTransform {
    resolution: u32,
    /// Row-major `2^i × 2^i` matrix with entries in {-1, 0, 1}.
    h: Vec<i8>,
    lambda: Vec<f64>,
}

impl HaarTransform {
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn size(&self) -> usize {
        1 << self.resolution
    }

    pub fn h(&self, row: usize, col: usize) -> i8 {
        self.h[row * self.size() + col]
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Entry `(row, col)` of `T_i = Λ_i H_i`.
    pub fn t(&self, row: usize, col: usize) -> f64 {
        self.lambda[row] * f64::from(self.h(row, col))
    }

    /// Dense `T_i` in row-major order.
    pub fn t_matrix(&self) -> Vec<f64> {
        let n = self.size();
        (0..n * n).map(|k| self.t(k / n, k % n)).collect()
    }

    /// Number of nonzero entries in row `row` of `H_i`.
    pub fn row_support(&self, row: usize) -> usize {
        let n = self.size();
        self.h[row * n..(row + 1) * n].iter().filter(|&&v| v != 0).count()
    }

    /// Dense `T_i · v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.size();
        check_len("haar_transform", v.len(), n)?;
        Ok((0..n)
            .map(|r| {
                let row = &self.h[r * n..(r + 1) * n];
                self.lambda[r] * row.iter().zip(v).map(|(&h, x)| f64::from(h) * x).sum::<f64>()
            })
            .collect())
    }
}

/// Band index of coefficient `k` (0 for the father).
pub fn band_of(k: usize) -> u32 {
    if k == 0 {
        0
    } else {
        usize::BITS - k.leading_zeros()
    }
}

/// Index range of band `j` inside a coefficient vector.
pub fn band_range(j: u32) -> std::ops::Range<usize> {
    if j == 0 {
        0..1
    } else {
        (1 << (j - 1))..(1 << j)
    }
}

/// Diagonal entry of `Λ_i` for band `j`: `2^-i` for the father and
/// `2^(-i + j - 1)` for `j ≥ 1`.
pub fn lambda_entry(i: u32, j: u32) -> f64 {
    if j == 0 {
        (-(i as f64)).exp2()
    } else {
        (j as f64 - i as f64 - 1.0).exp2()
    }
}

/// Builds `H_i` by the Haar recursion
/// `H_i = [H_{i-1} ⊗ (1, 1); I_{2^(i-1)} ⊗ (1, -1)]`, `H_0 = [1]`.
pub fn haar_matrix(i: u32) -> Result<HaarTransform> {
    if i > MAX_RESOLUTION {
        return Err(Error::ResolutionTooLarge {
            requested: i,
            limit: MAX_RESOLUTION,
        });
    }
    let mut h: Vec<i8> = vec![1];
    for level in 1..=i {
        let prev = 1usize << (level - 1);
        let n = prev * 2;
        let mut next = vec![0i8; n * n];
        for r in 0..prev {
            for c in 0..prev {
                let v = h[r * prev + c];
                next[r * n + 2 * c] = v;
                next[r * n + 2 * c + 1] = v;
            }
        }
        for r in 0..prev {
            next[(prev + r) * n + 2 * r] = 1;
            next[(prev + r) * n + 2 * r + 1] = -1;
        }
        h = next;
    }
    let n = 1usize << i;
    let lambda = (0..n).map(|k| lambda_entry(i, band_of(k))).collect();
    Ok(HaarTransform {
        resolution: i,
        h,
        lambda,
    })
}

/// Shared, lazily built transforms for small resolutions.
pub fn cached_haar_matrix(i: u32) -> Result<Arc<HaarTransform>> {
    // Dense matrices above this size are rarely worth keeping around.
    const CACHE_LIMIT: u32 = 10;
    static CACHE: OnceLock<Mutex<Vec<Option<Arc<HaarTransform>>>>> = OnceLock::new();
    if i > CACHE_LIMIT {
        return haar_matrix(i).map(Arc::new);
    }
    let cache = CACHE.get_or_init(|| Mutex::new(vec![None; CACHE_LIMIT as usize + 1]));
    let mut slots = cache.lock().expect("haar cache poisoned");
    if let Some(t) = &slots[i as usize] {
        return Ok(Arc::clone(t));
    }
    let t = Arc::new(haar_matrix(i)?);
    slots[i as usize] = Some(Arc::clone(&t));
    Ok(t)
}

fn check_len(op: &'static str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(shape_err(op, format!("expected {want} values, got {got}")));
    }
    Ok(())
}

fn resolution_of(op: &'static str, len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(shape_err(op, format!("length {len} is not a power of two")));
    }
    let i = len.trailing_zeros();
    if i > 2 * MAX_RESOLUTION {
        return Err(Error::ResolutionTooLarge {
            requested: i,
            limit: 2 * MAX_RESOLUTION,
        });
    }
    Ok(i)
}

/// `Λ_i H_i v` computed with the O(n) pyramid instead of the dense matrix.
pub fn pixel_to_haar(v: &[f64], i: u32) -> Result<Vec<f64>> {
    check_len("pixel_to_haar", v.len(), 1usize << i.min(63))?;
    if i > 2 * MAX_RESOLUTION {
        return Err(Error::ResolutionTooLarge {
            requested: i,
            limit: 2 * MAX_RESOLUTION,
        });
    }
    let n = v.len();
    let mut out = vec![0.0; n];
    // means[k] holds the average over the k-th cell of the current level
    let mut means = v.to_vec();
    let mut len = n;
    while len > 1 {
        let half = len / 2;
        let mut next = Vec::with_capacity(half);
        for k in 0..half {
            let (a, b) = (means[2 * k], means[2 * k + 1]);
            next.push(0.5 * (a + b));
            // H row sums the difference over 2^(i-j+1) pixels; Λ rescales
            // it to half the difference of the two child means.
            out[half + k] = 0.5 * (a - b);
        }
        means = next;
        len = half;
    }
    out[0] = means[0];
    Ok(out)
}

/// Inverse of [`pixel_to_haar`].
pub fn haar_to_pixel(c: &[f64], i: u32) -> Result<Vec<f64>> {
    check_len("haar_to_pixel", c.len(), 1usize << i.min(63))?;
    let n = c.len();
    let mut means = vec![c[0]];
    let mut len = 1;
    while len < n {
        let mut next = Vec::with_capacity(2 * len);
        for k in 0..len {
            let d = c[len + k];
            next.push(means[k] + d);
            next.push(means[k] - d);
        }
        means = next;
        len *= 2;
    }
    Ok(means)
}

/// Averages each block of `2^(from - to)` consecutive cells.
pub fn avg_pool_downsample(v: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if to > from {
        return Err(invalid(
            "avg_pool_downsample",
            format!("target resolution {to} exceeds source {from}"),
        ));
    }
    check_len("avg_pool_downsample", v.len(), 1usize << from.min(63))?;
    let block = 1usize << (from - to);
    let inv = 1.0 / block as f64;
    Ok(v.chunks_exact(block).map(|c| c.iter().sum::<f64>() * inv).collect())
}

/// Two-dimensional average pooling on a row-major `2^from × 2^from` grid.
pub fn avg_pool_downsample_2d(v: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if to > from {
        return Err(invalid(
            "avg_pool_downsample",
            format!("target resolution {to} exceeds source {from}"),
        ));
    }
    let side = 1usize << from;
    check_len("avg_pool_downsample", v.len(), side * side)?;
    let block = 1usize << (from - to);
    let out_side = side / block;
    let inv = 1.0 / (block * block) as f64;
    let mut out = vec![0.0; out_side * out_side];
    for r in 0..side {
        for c in 0..side {
            out[(r / block) * out_side + c / block] += v[r * side + c];
        }
    }
    out.iter_mut().for_each(|x| *x *= inv);
    Ok(out)
}

/// Separable 2D transform: `T_i` applied to every row, then every column.
pub fn pixel_to_haar_2d(v: &[f64], i: u32) -> Result<Vec<f64>> {
    separable(v, i, "pixel_to_haar_2d", pixel_to_haar)
}

pub fn haar_to_pixel_2d(c: &[f64], i: u32) -> Result<Vec<f64>> {
    separable(c, i, "haar_to_pixel_2d", haar_to_pixel)
}

fn separable(
    v: &[f64],
    i: u32,
    op: &'static str,
    f: fn(&[f64], u32) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let side = 1usize << i.min(31);
    check_len(op, v.len(), side * side)?;
    let mut rows = Vec::with_capacity(v.len());
    for r in v.chunks_exact(side) {
        rows.extend(f(r, i)?);
    }
    let mut out = rows.clone();
    let mut col = vec![0.0; side];
    for c in 0..side {
        for r in 0..side {
            col[r] = rows[r * side + c];
        }
        for (r, x) in f(&col, i)?.into_iter().enumerate() {
            out[r * side + c] = x;
        }
    }
    Ok(out)
}

/// Elementwise `sign(c) · max(|c| - λ, 0)`.
pub fn soft_threshold(c: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(invalid("soft_threshold", format!("threshold must be ≥ 0, got {lambda}")));
    }
    Ok(c.iter().map(|&x| x.signum() * (x.abs() - lambda).max(0.0)).collect())
}

/// Resolution implied by a dyadic length, for callers that only hold data.
pub fn dyadic_resolution(len: usize) -> Result<u32> {
    resolution_of("dyadic_resolution", len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_by_four_display() {
        let t = haar_matrix(2).unwrap();
        let h = [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 0, 0], [0, 0, 1, -1]];
        for (r, row) in h.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert_eq!(t.h(r, c), v);
            }
        }
        assert_eq!(t.lambda(), &[0.25, 0.25, 0.5, 0.5]);
    }

    #[test]
    fn low_resolutions() {
        let t0 = haar_matrix(0).unwrap();
        assert_eq!(t0.t_matrix(), vec![1.0]);
        let t1 = haar_matrix(1).unwrap();
        assert_eq!(t1.t_matrix(), vec![0.5, 0.5, 0.5, -0.5]);
    }

    #[test]
    fn too_large_is_rejected() {
        assert!(matches!(haar_matrix(17), Err(Error::ResolutionTooLarge { .. })));
    }

    #[test]
    fn worked_examples() {
        assert_eq!(pixel_to_haar(&[1., 1., 1., 1.], 2).unwrap(), vec![1., 0., 0., 0.]);
        assert_eq!(pixel_to_haar(&[2., 0., 0., 0.], 2).unwrap(), vec![0.5, 0.5, 1.0, 0.0]);
        assert_eq!(pixel_to_haar(&[1., 1., -1., -1.], 2).unwrap(), vec![0., 1., 0., 0.]);
        assert_eq!(haar_to_pixel(&[1., 0., 0., 0.], 2).unwrap(), vec![1., 1., 1., 1.]);
        assert_eq!(haar_to_pixel(&[0., 1., 0., 0.], 2).unwrap(), vec![1., 1., -1., -1.]);
    }

    #[test]
    fn fast_path_matches_dense_matrix() {
        for i in 0..=6 {
            let t = haar_matrix(i).unwrap();
            let v: Vec<f64> = (0..1usize << i).map(|k| ((k * 7 + 3) as f64).sin()).collect();
            let dense = t.apply(&v).unwrap();
            let fast = pixel_to_haar(&v, i).unwrap();
            for (a, b) in dense.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-13, "i={i}");
            }
        }
    }

    #[test]
    fn row_support_counts() {
        let i = 5;
        let t = haar_matrix(i).unwrap();
        assert_eq!(t.row_support(0), 1 << i);
        for k in 1..t.size() {
            let j = band_of(k);
            assert_eq!(t.row_support(k), 1 << (i - j + 1));
        }
    }

    #[test]
    fn pooling_examples() {
        assert_eq!(avg_pool_downsample(&[1., 3., 5., 7.], 2, 1).unwrap(), vec![2., 6.]);
        let v = [0.1, -4.0, 2.5, 9.0];
        assert_eq!(avg_pool_downsample(&v, 2, 2).unwrap(), v.to_vec());
        assert!(avg_pool_downsample(&v, 1, 2).is_err());
        let coarse = pixel_to_haar(&[2., 6.], 1).unwrap();
        let fine = pixel_to_haar(&[1., 3., 5., 7.], 2).unwrap();
        assert_eq!(coarse, vec![4., -2.]);
        assert_eq!(&fine[..2], &coarse[..]);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(soft_threshold(&[3.0], 1.0).unwrap(), vec![2.0]);
        assert_eq!(soft_threshold(&[-0.5], 1.0).unwrap(), vec![0.0]);
        let c = [1.5, -2.0, 0.0];
        assert_eq!(soft_threshold(&c, 0.0).unwrap(), c.to_vec());
        assert!(soft_threshold(&c, -0.1).is_err());
    }

    #[test]
    fn length_mismatch() {
        assert!(pixel_to_haar(&[1., 2., 3.], 2).is_err());
        assert!(haar_to_pixel(&[1., 2.], 2).is_err());
    }

    #[test]
    fn two_d_round_trip() {
        let v: Vec<f64> = (0..64).map(|k| (k as f64 * 0.37).cos()).collect();
        let c = pixel_to_haar_2d(&v, 3).unwrap();
        assert!((c[0] - v.iter().sum::<f64>() / 64.0).abs() < 1e-14);
        let back = haar_to_pixel_2d(&c, 3).unwrap();
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
