//! Haar multi-resolution transforms, average pooling, soft thresholding and
//! orthonormal filter-bank DWTs.

mod filter;
mod haar;

pub use filter::{dwt_1d, dwt_2d, haar_coarse_scale, reconstruct, FilterBank, WaveletPyramid};
pub use haar::{
    avg_pool_downsample, avg_pool_downsample_2d, band_of, band_range, cached_haar_matrix,
    dyadic_resolution, haar_matrix, haar_to_pixel, haar_to_pixel_2d, lambda_entry, pixel_to_haar,
    pixel_to_haar_2d, soft_threshold, HaarTransform, MAX_RESOLUTION,
};

/// Analytic variance of coefficient band `j` of `T_i ε` for white noise `ε`:
/// `2^-i` for the father and `2^(-i + j - 1)` otherwise.
pub fn white_noise_band_variance(i: u32, j: u32) -> f64 {
    lambda_entry(i, j)
}
