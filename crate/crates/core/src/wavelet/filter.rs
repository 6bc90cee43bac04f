//! Orthonormal two-channel filter banks and the periodic multilevel DWT.
//!
//! These use the orthonormal convention (Haar taps are `1/√2`), unlike the
//! averaging convention of [`super::haar`]. For the Haar bank the coarse band
//! after `L` levels equals the `L`-fold average pool scaled by `2^(L/2)` in
//! one dimension and by `2^L` in two dimensions; see [`haar_coarse_scale`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    pub name: String,
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
}

impl FilterBank {
    /// Builds a bank from its lowpass taps; the highpass is the
    /// alternating-sign reversal `g_k = (-1)^k h_{L-1-k}`.
    pub fn from_lowpass(name: impl Into<String>, lowpass: Vec<f64>) -> Self {
        let n = lowpass.len();
        let highpass = (0..n)
            .map(|k| if k % 2 == 0 { lowpass[n - 1 - k] } else { -lowpass[n - 1 - k] })
            .collect();
        Self {
            name: name.into(),
            lowpass,
            highpass,
        }
    }

    pub fn haar() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_lowpass("haar", vec![s, s])
    }

    /// Four-tap Daubechies filter from its closed form
    /// `h = (1+√3, 3+√3, 3-√3, 1-√3) / (4√2)`.
    pub fn db2() -> Self {
        let r3 = 3f64.sqrt();
        let d = 4.0 * std::f64::consts::SQRT_2;
        Self::from_lowpass("db2", vec![(1.0 + r3) / d, (3.0 + r3) / d, (3.0 - r3) / d, (1.0 - r3) / d])
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "haar" => Ok(Self::haar()),
            "db2" => Ok(Self::db2()),
            other => Err(invalid("filter_bank", format!("unknown bank '{other}' (haar, db2)"))),
        }
    }

    pub fn registered() -> Vec<Self> {
        vec![Self::haar(), Self::db2()]
    }

    /// Largest violation of the orthogonality conditions
    /// `Σ h_k h_{k+2m} = δ_m` and the same for the highpass, plus the
    /// cross condition `Σ h_k g_{k+2m} = 0`.
    pub fn orthogonality_defect(&self) -> f64 {
        let corr = |a: &[f64], b: &[f64], shift: isize| -> f64 {
            a.iter()
                .enumerate()
                .filter_map(|(k, &x)| {
                    let j = k as isize + shift;
                    (j >= 0 && (j as usize) < b.len()).then(|| x * b[j as usize])
                })
                .sum()
        };
        let n = self.lowpass.len() as isize;
        let mut worst = 0.0f64;
        let mut m = -n;
        while m <= n {
            let delta = if m == 0 { 1.0 } else { 0.0 };
            worst = worst.max((corr(&self.lowpass, &self.lowpass, m) - delta).abs());
            worst = worst.max((corr(&self.highpass, &self.highpass, m) - delta).abs());
            worst = worst.max(corr(&self.lowpass, &self.highpass, m).abs());
            m += 2;
        }
        worst
    }
}

/// Approximation and detail bands from a multilevel decomposition.
///
/// One-dimensional pyramids keep one detail band per level; two-dimensional
/// pyramids keep three (`[LH, HL, HH]`, each row-major). `details[0]` is the
/// finest level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletPyramid {
    pub bank: String,
    pub dims: u8,
    /// Side length of the input.
    pub size: usize,
    pub levels: u32,
    pub coarse: Vec<f64>,
    pub details: Vec<Vec<Vec<f64>>>,
}

fn analysis(x: &[f64], bank: &FilterBank) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for i in 0..half {
        for (k, (&h, &g)) in bank.lowpass.iter().zip(&bank.highpass).enumerate() {
            let v = x[(2 * i + k) % n];
            a[i] += h * v;
            d[i] += g * v;
        }
    }
    (a, d)
}

fn synthesis(a: &[f64], d: &[f64], bank: &FilterBank) -> Vec<f64> {
    let half = a.len();
    let n = 2 * half;
    let mut x = vec![0.0; n];
    for i in 0..half {
        for (k, (&h, &g)) in bank.lowpass.iter().zip(&bank.highpass).enumerate() {
            x[(2 * i + k) % n] += h * a[i] + g * d[i];
        }
    }
    x
}

fn check_dyadic(len: usize, levels: u32) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(shape_err("multilevel_dwt", format!("side length {len} is not dyadic")));
    }
    if levels == 0 || len < (1usize << levels) {
        return Err(invalid(
            "multilevel_dwt",
            format!("{levels} levels need a side of at least 2^{levels}, got {len}"),
        ));
    }
    Ok(())
}

pub fn dwt_1d(signal: &[f64], levels: u32, bank: &FilterBank) -> Result<WaveletPyramid> {
    check_dyadic(signal.len(), levels)?;
    let mut coarse = signal.to_vec();
    let mut details = Vec::with_capacity(levels as usize);
    for _ in 0..levels {
        let (a, d) = analysis(&coarse, bank);
        details.push(vec![d]);
        coarse = a;
    }
    Ok(WaveletPyramid {
        bank: bank.name.clone(),
        dims: 1,
        size: signal.len(),
        levels,
        coarse,
        details,
    })
}

/// Separable decomposition of a row-major `side × side` image.
pub fn dwt_2d(image: &[f64], side: usize, levels: u32, bank: &FilterBank) -> Result<WaveletPyramid> {
    if image.len() != side * side {
        return Err(shape_err("multilevel_dwt", format!("{} values for a {side}x{side} image", image.len())));
    }
    check_dyadic(side, levels)?;
    let mut ll = image.to_vec();
    let mut s = side;
    let mut details = Vec::with_capacity(levels as usize);
    for _ in 0..levels {
        let h = s / 2;
        // rows
        let mut lo = vec![0.0; s * h];
        let mut hi = vec![0.0; s * h];
        for r in 0..s {
            let (a, d) = analysis(&ll[r * s..(r + 1) * s], bank);
            lo[r * h..(r + 1) * h].copy_from_slice(&a);
            hi[r * h..(r + 1) * h].copy_from_slice(&d);
        }
        // columns
        let split_cols = |m: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut a_out = vec![0.0; h * h];
            let mut d_out = vec![0.0; h * h];
            let mut col = vec![0.0; s];
            for c in 0..h {
                for r in 0..s {
                    col[r] = m[r * h + c];
                }
                let (a, d) = analysis(&col, bank);
                for r in 0..h {
                    a_out[r * h + c] = a[r];
                    d_out[r * h + c] = d[r];
                }
            }
            (a_out, d_out)
        };
        let (lla, lh) = split_cols(&lo);
        let (hl, hh) = split_cols(&hi);
        details.push(vec![lh, hl, hh]);
        ll = lla;
        s = h;
    }
    Ok(WaveletPyramid {
        bank: bank.name.clone(),
        dims: 2,
        size: side,
        levels,
        coarse: ll,
        details,
    })
}

/// Inverts [`dwt_1d`] or [`dwt_2d`].
pub fn reconstruct(p: &WaveletPyramid, bank: &FilterBank) -> Result<Vec<f64>> {
    if p.details.len() != p.levels as usize {
        return Err(shape_err("reconstruct", "detail band count differs from level count"));
    }
    match p.dims {
        1 => {
            let mut x = p.coarse.clone();
            for level in p.details.iter().rev() {
                let d = level.first().ok_or_else(|| shape_err("reconstruct", "empty level"))?;
                if d.len() != x.len() {
                    return Err(shape_err("reconstruct", "band sizes are inconsistent"));
                }
                x = synthesis(&x, d, bank);
            }
            Ok(x)
        }
        2 => {
            let mut ll = p.coarse.clone();
            let mut h = p.size >> p.levels;
            for level in p.details.iter().rev() {
                let [lh, hl, hh] = &level[..] else {
                    return Err(shape_err("reconstruct", "2D levels need three bands"));
                };
                if ll.len() != h * h || [lh, hl, hh].iter().any(|b| b.len() != h * h) {
                    return Err(shape_err("reconstruct", "band sizes are inconsistent"));
                }
                let s = 2 * h;
                let merge_cols = |a: &[f64], d: &[f64]| -> Vec<f64> {
                    let mut out = vec![0.0; s * h];
                    let (mut ca, mut cd) = (vec![0.0; h], vec![0.0; h]);
                    for c in 0..h {
                        for r in 0..h {
                            ca[r] = a[r * h + c];
                            cd[r] = d[r * h + c];
                        }
                        for (r, v) in synthesis(&ca, &cd, bank).into_iter().enumerate() {
                            out[r * h + c] = v;
                        }
                    }
                    out
                };
                let lo = merge_cols(&ll, lh);
                let hi = merge_cols(hl, hh);
                let mut img = vec![0.0; s * s];
                for r in 0..s {
                    let row = synthesis(&lo[r * h..(r + 1) * h], &hi[r * h..(r + 1) * h], bank);
                    img[r * s..(r + 1) * s].copy_from_slice(&row);
                }
                ll = img;
                h = s;
            }
            Ok(ll)
        }
        d => Err(invalid("reconstruct", format!("unsupported dimension {d}"))),
    }
}

/// Factor relating the orthonormal Haar coarse band to average pooling:
/// `coarse = scale · avg_pool`.
pub fn haar_coarse_scale(dims: u8, levels: u32) -> f64 {
    (f64::from(dims) * f64::from(levels) / 2.0).exp2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registered_banks_are_orthogonal() {
        for bank in FilterBank::registered() {
            assert!(bank.orthogonality_defect() < 1e-12, "{}", bank.name);
            let energy: f64 = bank.lowpass.iter().map(|h| h * h).sum();
            assert!((energy - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_two_tap_arithmetic() {
        let p = dwt_1d(&[1., 3., 5., 7.], 1, &FilterBank::haar()).unwrap();
        let s = std::f64::consts::SQRT_2;
        assert!((p.coarse[0] - 2.0 * s).abs() < 1e-14);
        assert!((p.coarse[1] - 6.0 * s).abs() < 1e-14);
        for d in &p.details[0][0] {
            assert!((d + s).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_has_no_detail() {
        for bank in FilterBank::registered() {
            let p = dwt_2d(&vec![3.25; 64], 8, 3, &bank).unwrap();
            for level in &p.details {
                for band in level {
                    assert!(band.iter().all(|v| v.abs() < 1e-12), "{}", bank.name);
                }
            }
        }
        // Haar is exact on constants
        let p = dwt_1d(&[2.0; 16], 4, &FilterBank::haar()).unwrap();
        assert!(p.details.iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_non_dyadic() {
        assert!(dwt_1d(&[1.0; 6], 1, &FilterBank::haar()).is_err());
        assert!(dwt_1d(&[1.0; 4], 3, &FilterBank::haar()).is_err());
        assert!(FilterBank::by_name("coif1").is_err());
    }
}
