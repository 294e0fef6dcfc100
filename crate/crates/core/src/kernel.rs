//! Fejér amplification kernels.
//!
//! For a target angle `theta0` the kernel `K` is the polynomial in `T_d`
//! whose spherical transform is `F_{2M}(r' theta) - 1`, where `F_{2M}` is the
//! Fejér kernel and `r'` is an even multiple of a Dirichlet denominator of
//! `theta0 / 2 pi`. Expanded in cosines,
//!
//! ```text
//! h(theta) = sum_{j=1}^{2M-1} ((2M - j) / M) cos(j r' theta),
//! ```
//!
//! so `K = sum_j ((2M-j)/M) P_{j r'}(T_d/2)`. The order-`2M` Fejér kernel has
//! no frequency `2M` term; the sum stops at `2M - 1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::RegularGraph;
use crate::operators::{corollary1_constant, corollary1_uniform_constant, ChebyshevMatrixSweep, ChebyshevSweep};
use crate::tree::{Parametrization, RadialKernel, SpectralPoint};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("epsilon = {0} must lie in (0, 1)")]
    BadEpsilon(f64),
    #[error("theta0 = {0} must lie in [0, pi]")]
    BadAngle(f64),
    #[error("radius parameter N must be positive")]
    ZeroRadius,
    #[error("no even multiple of r = {r} fits [R eps / 16, 2R] for R = {big_r}, eps = {epsilon}")]
    DegenerateRange { r: usize, big_r: usize, epsilon: f64 },
}

/// Distance from `x` to the nearest integer multiple of `2 pi`, in `[0, pi]`.
pub fn wrap_distance(x: f64) -> f64 {
    let r = x.rem_euclid(TWO_PI);
    r.min(TWO_PI - r)
}

/// Representative of `x` modulo `2 pi` in `[-pi, pi]`.
pub fn wrap_signed(x: f64) -> f64 {
    let r = x.rem_euclid(TWO_PI);
    if r > PI {
        r - TWO_PI
    } else {
        r
    }
}

/// Above this `R` the Dirichlet search switches to continued fractions.
pub const EXHAUSTIVE_DIRICHLET_LIMIT: usize = 1_000_000;

/// Smallest `r` in `[1, R]` with `|r theta0 mod 2 pi| < 2 pi / R`.
///
/// Pigeonhole guarantees one exists. The search is exhaustive up to
/// [`EXHAUSTIVE_DIRICHLET_LIMIT`].
pub fn dirichlet_approx(theta0: f64, big_r: usize) -> usize {
    let big_r = big_r.max(1);
    if big_r > EXHAUSTIVE_DIRICHLET_LIMIT {
        if let Some(r) = dirichlet_approx_cf(theta0, big_r) {
            return r;
        }
    }
    dirichlet_scan(theta0, big_r)
}

fn dirichlet_scan(theta0: f64, big_r: usize) -> usize {
    let bound = TWO_PI / big_r as f64;
    let mut best = (1, f64::INFINITY);
    for r in 1..=big_r {
        let dist = wrap_distance(r as f64 * theta0);
        if dist < bound {
            return r;
        }
        if dist < best.1 {
            best = (r, dist);
        }
    }
    // only reachable through rounding at the boundary
    best.0
}

/// Continued-fraction search: the smallest admissible `r` improves on every
/// smaller denominator, so it is a convergent denominator of `theta0 / 2 pi`.
pub fn dirichlet_approx_cf(theta0: f64, big_r: usize) -> Option<usize> {
    let bound = TWO_PI / big_r as f64;
    let x = theta0 / TWO_PI;
    let mut frac = x - x.floor();
    let (mut q_prev, mut q) = (0u128, 1u128);
    for _ in 0..64 {
        if q > big_r as u128 {
            return None;
        }
        if wrap_distance(q as f64 * theta0) < bound {
            return Some(q as usize);
        }
        if frac < 1e-15 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let next = a as u128 * q + q_prev;
        q_prev = q;
        q = next;
    }
    None
}

/// Which bracketing rule produced `r'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultipleBranch {
    /// `r >= R eps / 32`: `l = 1`.
    Direct,
    /// `r < R eps / 32`: `l r` is the smallest multiple of `r` that is at
    /// least `R eps / 32`, and `r' = 2 l r`.
    Doubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvenMultiple {
    pub l: usize,
    pub r_prime: usize,
    pub branch: MultipleBranch,
}

/// Picks the even multiple `r' = 2 l r` in `[R eps / 16, 2R]`.
pub fn select_even_multiple(r: usize, big_r: usize, epsilon: f64) -> Result<EvenMultiple, KernelError> {
    let degenerate = KernelError::DegenerateRange {
        r,
        big_r,
        epsilon,
    };
    if r == 0 || r > big_r || !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(degenerate);
    }
    let low = big_r as f64 * epsilon / 32.0;
    let (l, branch) = if r as f64 >= low {
        (1, MultipleBranch::Direct)
    } else {
        ((low / r as f64).ceil() as usize, MultipleBranch::Doubled)
    };
    let r_prime = 2 * l * r;
    let rp = r_prime as f64;
    if rp < 2.0 * low || r_prime > 2 * big_r {
        return Err(degenerate);
    }
    Ok(EvenMultiple { l, r_prime, branch })
}

/// Conditions under which a recipe was built, recorded rather than enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeFlag {
    /// `R < 32 M`: the angle bound `|r' theta0| <= pi / 8M` is not implied
    /// by the construction (N too small relative to `1/eps^2`).
    OutsideLemmaRegime,
    /// Measured `|r' theta0 mod 2 pi| > pi / (8M)`.
    AngleBoundExceeded,
    /// `M < 4`: the margin `F_{2M}(r' theta0) > M + 2` is not guaranteed.
    SmallOrder,
    /// Measured `h(theta0) <= 1/eps`.
    WeakAmplification,
    /// Kernel support `(2M - 1) r'` exceeds the radius `N`.
    SupportExceedsN,
}

/// Parameters of one amplification kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRecipe {
    pub theta0: f64,
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n_radius: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "R")]
    pub big_r: usize,
    pub r: usize,
    pub l: usize,
    pub r_prime: usize,
    pub support_radius: usize,
    pub flags: Vec<RecipeFlag>,
}

impl KernelRecipe {
    /// `M = floor(1/eps)`, `R = ceil(N eps / 8)`, Dirichlet `r <= R`, and the
    /// even multiple `r'`.
    pub fn new(theta0: f64, epsilon: f64, n_radius: usize) -> Result<Self, KernelError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(KernelError::BadEpsilon(epsilon));
        }
        if !(0.0..=PI).contains(&theta0) {
            return Err(KernelError::BadAngle(theta0));
        }
        if n_radius == 0 {
            return Err(KernelError::ZeroRadius);
        }
        let m = (1.0 / epsilon).floor() as usize;
        let big_r = ((n_radius as f64 * epsilon / 8.0).ceil() as usize).max(1);
        let r = dirichlet_approx(theta0, big_r);
        let mult = select_even_multiple(r, big_r, epsilon)?;
        let mut recipe = KernelRecipe {
            theta0,
            epsilon,
            n_radius,
            m,
            big_r,
            r,
            l: mult.l,
            r_prime: mult.r_prime,
            support_radius: (2 * m - 1) * mult.r_prime,
            flags: Vec::new(),
        };
        if big_r < 32 * m {
            recipe.flags.push(RecipeFlag::OutsideLemmaRegime);
        }
        if recipe.target_offset() > PI / (8.0 * m as f64) {
            recipe.flags.push(RecipeFlag::AngleBoundExceeded);
        }
        if m < 4 {
            recipe.flags.push(RecipeFlag::SmallOrder);
        }
        if recipe.fejer_transform(theta0) <= 1.0 / epsilon {
            recipe.flags.push(RecipeFlag::WeakAmplification);
        }
        if recipe.support_radius > n_radius {
            recipe.flags.push(RecipeFlag::SupportExceedsN);
        }
        Ok(recipe)
    }

    /// The recipe used for untempered eigenvalues (`theta0 = 0`).
    pub fn untempered(epsilon: f64, n_radius: usize) -> Result<Self, KernelError> {
        Self::new(0.0, epsilon, n_radius)
    }

    /// `|r' theta0 mod 2 pi|`.
    pub fn target_offset(&self) -> f64 {
        wrap_distance(self.r_prime as f64 * self.theta0)
    }

    pub fn has_flag(&self, flag: RecipeFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// `h(theta0) > 1/eps` was verified when the recipe was built.
    pub fn amplifies(&self) -> bool {
        !self.has_flag(RecipeFlag::WeakAmplification)
    }

    /// `(frequency j r', coefficient (2M - j)/M)` for `j = 1..2M-1`.
    pub fn cosine_terms(&self) -> Vec<(usize, f64)> {
        let two_m = 2 * self.m;
        (1..two_m)
            .map(|j| (j * self.r_prime, (two_m - j) as f64 / self.m as f64))
            .collect()
    }

    /// `h(theta) = sum_j ((2M-j)/M) cos(j r' theta)`, evaluated at the reduced
    /// angle `r' theta mod 2 pi`.
    pub fn fejer_transform(&self, theta: f64) -> f64 {
        let phi = wrap_signed(self.r_prime as f64 * theta);
        let two_m = 2 * self.m;
        (1..two_m)
            .map(|j| (two_m - j) as f64 / self.m as f64 * (j as f64 * phi).cos())
            .sum()
    }

    /// `F_{2M}(r' theta) - 1` from the product formula
    /// `F_{2M} = (1/2M) sin^2(2M y) / sin^2(y)` with `y = r' theta / 2`.
    pub fn fejer_closed_form(&self, theta: f64) -> f64 {
        let y = 0.5 * wrap_signed(self.r_prime as f64 * theta);
        let two_m = (2 * self.m) as f64;
        let s = y.sin();
        if s == 0.0 {
            return two_m - 1.0;
        }
        let num = (two_m * y).sin();
        num * num / (two_m * s * s) - 1.0
    }

    /// The transform at any spectral point; untempered points go through the
    /// hyperbolic Chebyshev continuation.
    pub fn transform_at(&self, p: &SpectralPoint) -> f64 {
        match p.theta() {
            Some(theta) => self.fejer_transform(theta),
            None => self
                .cosine_terms()
                .iter()
                .map(|&(freq, c)| c * p.cos_multiple(freq))
                .sum(),
        }
    }

    /// `ln h` at an untempered point, where `h` is positive and may exceed
    /// the range of `f64`. `None` at tempered points.
    pub fn log_transform_untempered(&self, p: &SpectralPoint) -> Option<f64> {
        let r = match p.param {
            Parametrization::Tempered { .. } => return None,
            Parametrization::UntemperedPositive { r } | Parametrization::UntemperedNegative { r } => r,
        };
        // every frequency is even, so the sign of lambda drops out
        let logs: Vec<f64> = self
            .cosine_terms()
            .iter()
            .map(|&(freq, c)| {
                let x = freq as f64 * r;
                c.ln() + x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
            })
            .collect();
        Some(log_sum_exp(&logs))
    }

    /// The constant of [`Self::norm_constant`] with every order sharing the
    /// n-independent sphere constant `d / (1 - d^{-2 alpha})`.
    pub fn norm_constant_uniform(&self, d: usize, alpha: f64) -> f64 {
        let c = corollary1_uniform_constant(d, alpha);
        (1..2 * self.m)
            .map(|j| (2 * self.m - j) as f64 / self.m as f64 * c * decay(d, alpha, (j - 1) * self.r_prime))
            .sum()
    }

    /// Explicit constant `c` with `||K||_{p->q} <= c C d^{-alpha r'}` given
    /// `||S_n||_{p->q} <= C d^{-alpha n}` up to the support radius.
    pub fn norm_constant(&self, d: usize, alpha: f64) -> f64 {
        let df = d as f64;
        self.cosine_terms()
            .iter()
            .enumerate()
            .map(|(i, &(freq, c))| {
                c * corollary1_constant(d, alpha, freq) * df.powf(-alpha * (i * self.r_prime) as f64)
            })
            .sum()
    }
}

/// `ln sum_i exp(x_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// `d` raised to `-alpha n`.
fn decay(d: usize, alpha: f64, n: usize) -> f64 {
    (d as f64).powf(-alpha * n as f64)
}

/// The convolution operator `K = sum_j c_j P_{f_j}(T_d/2)` of a recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelOperator {
    pub terms: Vec<(usize, f64)>,
    pub degree: usize,
    /// Set when the support radius exceeds the graph's admissible `N`.
    pub support_exceeds_n: bool,
}

/// Builds the operator of `recipe`; `admissible_n` is the graph's certified
/// radius (a larger support is flagged, not refused).
pub fn build_kernel_operator(recipe: &KernelRecipe, admissible_n: Option<usize>) -> KernelOperator {
    let terms = recipe.cosine_terms();
    let degree = terms.last().map_or(0, |t| t.0);
    KernelOperator {
        terms,
        degree,
        support_exceeds_n: admissible_n.is_some_and(|n| degree > n),
    }
}

impl KernelOperator {
    /// `K v` by one Chebyshev sweep, harvesting every needed order.
    pub fn apply(&self, g: &RegularGraph, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        let mut sweep = ChebyshevSweep::new(g, v);
        for &(freq, c) in &self.terms {
            while sweep.order() < freq {
                sweep.advance();
            }
            for (o, w) in out.iter_mut().zip(sweep.current()) {
                *o += c * w;
            }
        }
        out
    }

    /// Dense matrix of `K`.
    pub fn matrix(&self, g: &RegularGraph) -> DMatrix<f64> {
        kernel_matrices(g, &[self]).pop().unwrap()
    }

    /// The radial kernel on the tree with the same cosine series.
    pub fn radial_kernel(&self, d: usize) -> RadialKernel {
        let mut coeffs = vec![0.0; self.degree + 1];
        for &(freq, c) in &self.terms {
            coeffs[freq] += c;
        }
        RadialKernel::from_cosine_series(d, coeffs)
    }
}

/// Dense matrices of several kernels from a single Chebyshev sweep.
pub fn kernel_matrices(g: &RegularGraph, ops: &[&KernelOperator]) -> Vec<DMatrix<f64>> {
    kernel_matrices_deflated(g, ops, None)
}

/// As [`kernel_matrices`], restricted to the orthogonal complement of the
/// orthonormal columns of `deflate`, which must span a `T_d`-invariant
/// subspace. The iterates are re-projected after every step so rounding
/// cannot leak into the removed directions.
pub fn kernel_matrices_deflated(
    g: &RegularGraph,
    ops: &[&KernelOperator],
    deflate: Option<&DMatrix<f64>>,
) -> Vec<DMatrix<f64>> {
    let n = g.vertex_count();
    let mut out = vec![DMatrix::zeros(n, n); ops.len()];
    let project = |m: &mut DMatrix<f64>| {
        if let Some(u) = deflate {
            let coords = u.tr_mul(m);
            *m -= u * coords;
            let coords = &*m * u;
            *m -= coords * u.transpose();
        }
    };
    let mut start = DMatrix::identity(n, n);
    project(&mut start);
    let mut wanted: Vec<(usize, usize, f64)> = ops
        .iter()
        .enumerate()
        .flat_map(|(k, op)| op.terms.iter().map(move |&(f, c)| (f, k, c)))
        .collect();
    wanted.sort_by_key(|w| (w.0, w.1));
    let mut sweep = ChebyshevMatrixSweep::from_start(g, start);
    for (freq, k, c) in wanted {
        while sweep.order() < freq {
            sweep.advance();
            if deflate.is_some() {
                sweep.map_state(project);
            }
        }
        out[k] += sweep.current() * c;
    }
    out
}
