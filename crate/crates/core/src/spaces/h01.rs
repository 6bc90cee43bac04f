//! Hierarchical hat basis of H¹₀([0, 1]) and the diagonal Galerkin solver
//! for `u'' = f`, `u(0) = u(1) = 0`.
//!
//! `φ_{k,j}` is the hat of height one supported on `[j 2^-k, (j+1) 2^-k]`,
//! i.e. the integral of the Haar mother wavelet on that interval rescaled
//! to unit peak. Resolution `i` spans levels `k = 0..i`, which is exactly the
//! space of continuous piecewise-linear functions on the `2^-i` grid that
//! vanish at both ends. Coefficients share the Haar slot order: slot
//! `2^k + j` holds `φ_{k,j}`, slot 0 is unused.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spaces::{Basis, Domain, MultiResFunction};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct H01Index {
    pub level: u32,
    pub shift: u32,
}

impl H01Index {
    pub fn new(level: u32, shift: u32) -> Result<Self> {
        if level > 30 || u64::from(shift) >= 1u64 << level {
            return Err(invalid("h01_index", format!("no basis function φ_({level},{shift})")));
        }
        Ok(Self { level, shift })
    }

    pub fn slot(self) -> usize {
        (1usize << self.level) + self.shift as usize
    }

    pub fn from_slot(slot: usize) -> Result<Self> {
        if slot == 0 {
            return Err(invalid("h01_index", "slot 0 carries no basis function"));
        }
        let level = usize::BITS - 1 - slot.leading_zeros();
        Self::new(level, (slot - (1usize << level)) as u32)
    }

    fn width(self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Support `[left, right]` and peak location.
    pub fn support(self) -> (f64, f64, f64) {
        let w = self.width();
        let left = self.shift as f64 * w;
        (left, left + w, left + 0.5 * w)
    }

    /// Constant slope on each half of the support: `±2^(k+1)`.
    fn slope(self) -> f64 {
        ((self.level + 1) as f64).exp2()
    }

    fn derivative_at(self, x: f64) -> f64 {
        let (l, r, m) = self.support();
        if x <= l || x >= r {
            0.0
        } else if x < m {
            self.slope()
        } else {
            -self.slope()
        }
    }
}

/// Mother hat `2x on [0, 1/2)`, `2 - 2x on [1/2, 1]`, zero elsewhere.
pub fn mother_hat(x: f64) -> f64 {
    if (0.0..0.5).contains(&x) {
        2.0 * x
    } else if (0.5..=1.0).contains(&x) {
        2.0 - 2.0 * x
    } else {
        0.0
    }
}

pub fn h01_eval(level: u32, shift: u32, x: f64) -> Result<f64> {
    let idx = H01Index::new(level, shift)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid("h01_eval", format!("x = {x} lies outside [0, 1]")));
    }
    Ok(eval_index(idx, x))
}

fn eval_index(idx: H01Index, x: f64) -> f64 {
    mother_hat(x * (idx.level as f64).exp2() - idx.shift as f64)
}

/// `∫₀¹ φ_a' φ_b' dx`, exact: both derivatives are piecewise constant on
/// dyadic breakpoints, so a midpoint evaluation per piece is exact.
pub fn h01_inner(a: H01Index, b: H01Index) -> f64 {
    let (al, ar, am) = a.support();
    let (bl, br, bm) = b.support();
    let mut pts = vec![al, am, ar, bl, bm, br];
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[1] - w[0]) * a.derivative_at(mid) * b.derivative_at(mid)
        })
        .sum()
}

/// Indices spanning resolution `i`, in slot order.
pub fn basis_indices(i: u32) -> Vec<H01Index> {
    (0..i)
        .flat_map(|k| (0..1u32 << k).map(move |j| H01Index { level: k, shift: j }))
        .collect()
}

/// `∫ φ f` for piecewise-constant `f` given by `cells` equal cells on [0, 1].
///
/// The cell grid must resolve the hat's peak, so callers refine `f` to at
/// least `level + 1` first; each cell then meets only one linear piece and
/// the trapezoid rule on it is exact.
fn load_integral(idx: H01Index, values: &[f64]) -> f64 {
    let n = values.len();
    let h = 1.0 / n as f64;
    let (l, r, _) = idx.support();
    let first = (l * n as f64) as usize;
    let last = ((r * n as f64) as usize).min(n);
    (first..last)
        .map(|c| {
            let x0 = c as f64 * h;
            let x1 = x0 + h;
            values[c] * h * 0.5 * (eval_index(idx, x0) + eval_index(idx, x1))
        })
        .sum()
}

fn solve_with_loads(i: u32, channels: usize, load: impl Fn(usize, H01Index) -> f64) -> Result<MultiResFunction> {
    if i == 0 {
        return Err(invalid("galerkin_solve", "resolution 0 has an empty H01 basis"));
    }
    let n = 1usize << i;
    let mut coeffs = vec![0.0; n * channels];
    for c in 0..channels {
        for idx in basis_indices(i) {
            let stiffness = h01_inner(idx, idx);
            coeffs[c * n + idx.slot()] = -load(c, idx) / stiffness;
        }
    }
    MultiResFunction::new(Domain::Interval, i, channels, Basis::H01, coeffs)
}

/// Galerkin solution of `u'' = f` with zero boundary values in the
/// resolution-`i` hat basis. Because the basis is energy-orthogonal the
/// system is diagonal: `c_a = -(∫ φ_a f) / ⟨φ_a, φ_a⟩`.
pub fn galerkin_solve_elliptic(f: &MultiResFunction, i: u32) -> Result<MultiResFunction> {
    if f.domain() != Domain::Interval {
        return Err(invalid("galerkin_solve", "the elliptic solver works on the interval"));
    }
    let f = f.to_basis(Basis::Pixel)?;
    let f = if f.resolution() < i { f.include_to(i)? } else { f };
    solve_with_loads(i, f.channels(), |c, idx| load_integral(idx, f.channel(c)))
}

/// Same solver for a pointwise right-hand side. Loads use three-point
/// Gauss–Legendre on each linear piece of the hat, exact for polynomial `f`
/// up to degree four.
pub fn galerkin_solve_pointwise(f: impl Fn(f64) -> f64, i: u32) -> Result<MultiResFunction> {
    const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    solve_with_loads(i, 1, |_, idx| {
        let (l, r, m) = idx.support();
        [(l, m), (m, r)]
            .iter()
            .map(|&(a, b)| {
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                NODES
                    .iter()
                    .zip(WEIGHTS)
                    .map(|(&t, w)| {
                        let x = mid + half * t;
                        w * half * eval_index(idx, x) * f(x)
                    })
                    .sum::<f64>()
            })
            .sum()
    })
}

/// Evaluates an H01-basis function at `x ∈ [0, 1]` (channel 0).
pub fn h01_function_eval(u: &MultiResFunction, x: f64) -> Result<f64> {
    h01_function_eval_channel(u, 0, x)
}

pub fn h01_function_eval_channel(u: &MultiResFunction, channel: usize, x: f64) -> Result<f64> {
    if u.basis() != Basis::H01 {
        return Err(invalid("h01_eval", "function is not in the H01 basis"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid("h01_eval", format!("x = {x} lies outside [0, 1]")));
    }
    let c = u.channel(channel);
    let mut acc = 0.0;
    // Only one hat per level is nonzero at x.
    for k in 0..u.resolution() {
        let scale = (k as f64).exp2();
        let j = ((x * scale) as u32).min((1u32 << k) - 1);
        let idx = H01Index { level: k, shift: j };
        acc += c[idx.slot()] * eval_index(idx, x);
    }
    Ok(acc)
}
