//! Radial harmonic analysis on the (d+1)-regular tree.
//!
//! The spectrum of the normalized adjacency operator `T_d` on the tree is
//! `[-(d+1)/sqrt(d), (d+1)/sqrt(d)]`. Eigenvalues with `|lambda| <= 2` are
//! *tempered* and parametrized as `lambda = 2 cos(theta)`; the rest are
//! *untempered* and written `lambda = ±2 cosh(r)`. Everything here is
//! evaluated through Chebyshev recurrences in `x = lambda / 2`, which covers
//! both regimes without complex arithmetic.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("degree parameter d = {0} is unsupported (need d >= 2)")]
    UnsupportedDegree(usize),
    #[error("lambda = {lambda} lies outside the tree spectrum [-{bound}, {bound}]")]
    OutOfSpectrum { lambda: f64, bound: f64 },
    #[error("closed-form kernel needs an even order n >= 2, got {0}")]
    NOdd(usize),
    #[error("truncation depth {depth} must exceed the polynomial order {n}")]
    DepthTooSmall { depth: usize, n: usize },
}

/// Slack allowed when clamping `|lambda / 2|` to 1 before `acos`.
pub const CLAMP_SLACK: f64 = 1e-12;

/// Chebyshev polynomial of the first kind, `P_n(cos t) = cos(n t)`, by the
/// three-term recurrence. For `|x| > 1` this is the hyperbolic continuation.
pub fn chebyshev_first(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Chebyshev polynomial of the second kind, `Q_n(cos t) = sin((n+1)t)/sin t`.
/// At `x = ±1` the recurrence lands exactly on the limit `(n+1)(±1)^n`.
pub fn chebyshev_second(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `(d+1)/sqrt(d)`, the top of the spectrum (the constant function).
pub fn spectral_edge(d: usize) -> f64 {
    (d as f64 + 1.0) / (d as f64).sqrt()
}

/// Where a spectral value sits and its angle/rate parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parametrization {
    /// `lambda = 2 cos(theta)`, `theta` in `[0, pi]`.
    Tempered { theta: f64 },
    /// `lambda = 2 cosh(r)`.
    UntemperedPositive { r: f64 },
    /// `lambda = -2 cosh(r)`.
    UntemperedNegative { r: f64 },
}

/// A point of the tree spectrum together with its parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub param: Parametrization,
}

impl SpectralPoint {
    /// Classifies `lambda` for degree parameter `d`. Values within `1e-9` of
    /// the spectral edge are accepted (eigensolver rounding).
    pub fn from_lambda(d: usize, lambda: f64) -> Result<Self, TreeError> {
        if d < 2 {
            return Err(TreeError::UnsupportedDegree(d));
        }
        let bound = spectral_edge(d);
        if !lambda.is_finite() || lambda.abs() > bound + 1e-9 {
            return Err(TreeError::OutOfSpectrum { lambda, bound });
        }
        let half = lambda / 2.0;
        let param = if half.abs() <= 1.0 {
            Parametrization::Tempered { theta: half.acos() }
        } else if half.abs() <= 1.0 + CLAMP_SLACK {
            Parametrization::Tempered {
                theta: half.clamp(-1.0, 1.0).acos(),
            }
        } else if half > 0.0 {
            Parametrization::UntemperedPositive { r: half.acosh() }
        } else {
            Parametrization::UntemperedNegative { r: (-half).acosh() }
        };
        Ok(SpectralPoint { lambda, param })
    }

    /// The tempered point `2 cos(theta)`.
    pub fn from_theta(theta: f64) -> Self {
        SpectralPoint {
            lambda: 2.0 * theta.cos(),
            param: Parametrization::Tempered { theta },
        }
    }

    pub fn is_tempered(&self) -> bool {
        matches!(self.param, Parametrization::Tempered { .. })
    }

    pub fn theta(&self) -> Option<f64> {
        match self.param {
            Parametrization::Tempered { theta } => Some(theta),
            _ => None,
        }
    }

    /// `lambda / 2`, the argument of every Chebyshev evaluation.
    pub fn half_lambda(&self) -> f64 {
        self.lambda / 2.0
    }

    /// `cos(n theta)` continued to the whole spectrum.
    pub fn cos_multiple(&self, n: usize) -> f64 {
        match self.param {
            Parametrization::Tempered { theta } => (n as f64 * theta).cos(),
            _ => chebyshev_first(n, self.half_lambda()),
        }
    }
}

/// The spherical function `phi_lambda` at tree distance `dist`:
/// `d^{-dist/2} ((2/(d+1)) P_dist(lambda/2) + ((d-1)/(d+1)) Q_dist(lambda/2))`.
pub fn spherical_function(d: usize, p: &SpectralPoint, dist: usize) -> f64 {
    let df = d as f64;
    let x = p.half_lambda();
    let poly = 2.0 / (df + 1.0) * chebyshev_first(dist, x)
        + (df - 1.0) / (df + 1.0) * chebyshev_second(dist, x);
    df.powf(-(dist as f64) / 2.0) * poly
}

/// `int_0^pi cos(2 n theta) dm(theta)`: 1 for `n = 0`, else `(1-d)/(2 d^n)`.
pub fn plancherel_moment(d: usize, n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        (1.0 - d as f64) / (2.0 * (d as f64).powi(n as i32))
    }
}

/// Density of the Plancherel measure with respect to `dtheta` on `[0, pi]`.
///
/// The Fourier series `(1/pi)[1 + sum_{n>=1} ((1-d)/d^n) cos(2 n theta)]` is
/// summed in closed form: with `z = 1/d` and `c = cos(2 theta)`,
/// `sum_{n>=1} z^n cos(2 n theta) = (z c - z^2) / (1 - 2 z c + z^2)`.
pub fn plancherel_density(d: usize, theta: f64) -> f64 {
    let z = 1.0 / d as f64;
    let c = (2.0 * theta).cos();
    let tail = (z * c - z * z) / (1.0 - 2.0 * z * c + z * z);
    let w = (1.0 + (1.0 - d as f64) * tail) / PI;
    w.max(0.0)
}

/// A compactly supported radial function on the tree, optionally paired
/// with the cosine series of its spherical transform,
/// `h_k(2 cos theta) = sum_j c_j cos(j theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialKernel {
    pub d: usize,
    pub radial_values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chebyshev_coefficients: Option<Vec<f64>>,
}

impl RadialKernel {
    pub fn new(d: usize, radial_values: Vec<f64>) -> Self {
        RadialKernel {
            d,
            radial_values,
            chebyshev_coefficients: None,
        }
    }

    /// The kernel whose spherical transform is `sum_j c_j cos(j theta)`, i.e.
    /// `sum_j c_j P_j(T_d/2) delta_0`, computed by the Chebyshev recurrence
    /// acting on radial profiles.
    pub fn from_cosine_series(d: usize, coefficients: Vec<f64>) -> Self {
        let degree = coefficients.len().saturating_sub(1);
        let mut radial = vec![0.0; degree + 1];
        let mut prev = vec![0.0; degree + 2];
        prev[0] = 1.0;
        let mut cur = radial_t_apply(d, &prev);
        cur.iter_mut().for_each(|v| *v *= 0.5);
        for (j, &c) in coefficients.iter().enumerate() {
            let term = match j {
                0 => &prev,
                _ => &cur,
            };
            if c != 0.0 {
                for (r, t) in radial.iter_mut().zip(term.iter()) {
                    *r += c * t;
                }
            }
            if j >= 1 {
                let mut next = radial_t_apply(d, &cur);
                for (nx, p) in next.iter_mut().zip(&prev) {
                    *nx -= p;
                }
                prev = std::mem::replace(&mut cur, next);
            }
        }
        RadialKernel {
            d,
            radial_values: radial,
            chebyshev_coefficients: Some(coefficients),
        }
    }

    pub fn support_radius(&self) -> usize {
        self.radial_values
            .iter()
            .rposition(|&v| v != 0.0)
            .unwrap_or(0)
    }

    /// `h_k(lambda) = k(0) + (d+1) sum_{n>=1} d^{n-1} k(n) phi_lambda(n)`.
    pub fn spherical_transform(&self, p: &SpectralPoint) -> f64 {
        let df = self.d as f64;
        self.radial_values
            .iter()
            .enumerate()
            .map(|(n, &k)| match n {
                0 => k,
                _ if k == 0.0 => 0.0,
                _ => (df + 1.0) * df.powi(n as i32 - 1) * k * spherical_function(self.d, p, n),
            })
            .sum()
    }

    /// The cosine-series evaluation, when coefficients are attached.
    pub fn cosine_series(&self, p: &SpectralPoint) -> Option<f64> {
        self.chebyshev_coefficients.as_ref().map(|c| {
            c.iter()
                .enumerate()
                .map(|(j, &cj)| cj * p.cos_multiple(j))
                .sum()
        })
    }

    /// Largest disagreement between the two transform evaluations over `points`.
    pub fn representation_gap(&self, points: &[SpectralPoint]) -> Option<f64> {
        self.chebyshev_coefficients.as_ref()?;
        Some(
            points
                .iter()
                .map(|p| (self.spherical_transform(p) - self.cosine_series(p).unwrap()).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// `T_d` acting on a radial profile `f(0), f(1), ...`; the output is one
/// entry longer than needed and the last slot is dropped by the caller.
fn radial_t_apply(d: usize, f: &[f64]) -> Vec<f64> {
    let df = d as f64;
    let s = 1.0 / df.sqrt();
    let len = f.len();
    let at = |i: usize| f.get(i).copied().unwrap_or(0.0);
    (0..len)
        .map(|n| match n {
            0 => s * (df + 1.0) * at(1),
            _ => s * (at(n - 1) + df * at(n + 1)),
        })
        .collect()
}

/// `P_n(T_d/2) delta_0` at tree distance `dist`, for even `n >= 2`.
pub fn lemma1_kernel_value(d: usize, n: usize, dist: usize) -> Result<f64, TreeError> {
    if n == 0 || n % 2 == 1 {
        return Err(TreeError::NOdd(n));
    }
    if d < 2 {
        return Err(TreeError::UnsupportedDegree(d));
    }
    let scale = (d as f64).powi((n / 2) as i32);
    Ok(if dist % 2 == 1 || dist > n {
        0.0
    } else if dist < n {
        (1.0 - d as f64) / (2.0 * scale)
    } else {
        1.0 / (2.0 * scale)
    })
}

/// The radial kernel of `P_n(T_d/2)` from the closed form.
pub fn lemma1_kernel(d: usize, n: usize) -> Result<RadialKernel, TreeError> {
    let radial = (0..=n)
        .map(|r| lemma1_kernel_value(d, n, r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    Ok(RadialKernel {
        d,
        radial_values: radial,
        chebyshev_coefficients: Some(coeffs),
    })
}

/// Trees above this many vertices are handled on radial profiles instead
/// of an explicit adjacency structure.
pub const EXPLICIT_TREE_BUDGET: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleRoute {
    /// Explicit truncated tree with a sparse `T_d`.
    ExplicitTree,
    /// The invariant subspace of radial functions (tree too large).
    RadialQuotient,
}

/// Output of [`lemma1_oracle`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Oracle {
    pub d: usize,
    pub n: usize,
    pub depth: usize,
    pub route: OracleRoute,
    pub vertex_count: usize,
    /// Observed value at each distance from the root.
    pub values: BTreeMap<usize, f64>,
    /// Largest spread `max - min` of the values within one distance class.
    pub radial_spread: f64,
}

/// Evaluates `P_n(T_d/2) delta_root` on the rooted tree truncated at `depth`
/// by the matrix Chebyshev recurrence, and collects the value per distance.
pub fn lemma1_oracle(d: usize, n: usize, depth: usize) -> Result<Lemma1Oracle, TreeError> {
    if d < 2 {
        return Err(TreeError::UnsupportedDegree(d));
    }
    if depth <= n {
        return Err(TreeError::DepthTooSmall { depth, n });
    }
    let size = crate::graph::tree_ball_size(d, depth);
    if size <= EXPLICIT_TREE_BUDGET {
        Ok(explicit_tree_oracle(d, n, depth))
    } else {
        Ok(radial_oracle(d, n, depth, size))
    }
}

struct TruncatedTree {
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
    level: Vec<u32>,
}

impl TruncatedTree {
    fn build(d: usize, depth: usize) -> Self {
        let size = crate::graph::tree_ball_size(d, depth);
        let mut parent = vec![u32::MAX; size];
        let mut level = vec![0u32; size];
        let mut children_start = vec![0u32; size];
        let mut next = 1usize;
        for v in 0..size {
            children_start[v] = next as u32;
            if level[v] as usize == depth {
                continue;
            }
            let kids = if v == 0 { d + 1 } else { d };
            for c in next..next + kids {
                parent[c] = v as u32;
                level[c] = level[v] + 1;
            }
            next += kids;
        }
        let mut offsets = Vec::with_capacity(size + 1);
        let mut neighbors = Vec::with_capacity(2 * (size - 1));
        offsets.push(0);
        for v in 0..size {
            if v != 0 {
                neighbors.push(parent[v]);
            }
            if (level[v] as usize) < depth {
                let kids = if v == 0 { d + 1 } else { d };
                let start = children_start[v];
                neighbors.extend(start..start + kids as u32);
            }
            offsets.push(neighbors.len() as u32);
        }
        TruncatedTree {
            offsets,
            neighbors,
            level,
        }
    }

    /// Adjacency action (no normalization).
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (v, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.offsets[v] as usize, self.offsets[v + 1] as usize);
            *o = self.neighbors[a..b].iter().map(|&w| x[w as usize]).sum::<f64>();
        }
    }
}

/// `(2 sqrt(d))^n`, the scale between the integer walk recurrence and
/// `P_n(T_d/2)`.
fn chebyshev_walk_scale(d: usize, n: usize) -> f64 {
    let two_pow = 2f64.powi(n as i32);
    if n % 2 == 0 {
        two_pow * (d as f64).powi((n / 2) as i32)
    } else {
        two_pow * (d as f64).sqrt().powi(n as i32)
    }
}

// Both oracle routes run `u_{m+1} = 2 A u_m - 4 d u_{m-1}`, `u_0 = delta`,
// `u_1 = A delta`, on the unnormalized adjacency. Then
// `P_n(T_d/2) delta = u_n / (2 sqrt(d))^n`, and every `u_m` is an integer
// (exact in f64 at these sizes), so the only rounding is the final division.

fn explicit_tree_oracle(d: usize, n: usize, depth: usize) -> Lemma1Oracle {
    let tree = TruncatedTree::build(d, depth);
    let size = tree.level.len();
    let four_d = 4.0 * d as f64;
    let mut prev = vec![0.0; size];
    prev[0] = 1.0;
    let mut cur = vec![0.0; size];
    tree.apply(&prev, &mut cur);
    let mut next = vec![0.0; size];
    let mut result = if n == 0 {
        prev
    } else {
        for _ in 1..n {
            tree.apply(&cur, &mut next);
            for (nx, p) in next.iter_mut().zip(&prev) {
                *nx = 2.0 * *nx - four_d * p;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    };
    let scale = chebyshev_walk_scale(d, n);
    result.iter_mut().for_each(|v| *v /= scale);
    let mut lo = vec![f64::INFINITY; depth + 1];
    let mut hi = vec![f64::NEG_INFINITY; depth + 1];
    for (v, &val) in result.iter().enumerate() {
        let l = tree.level[v] as usize;
        lo[l] = lo[l].min(val);
        hi[l] = hi[l].max(val);
    }
    let radial_spread = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    Lemma1Oracle {
        d,
        n,
        depth,
        route: OracleRoute::ExplicitTree,
        vertex_count: size,
        values: (0..=depth).map(|l| (l, lo[l])).collect(),
        radial_spread,
    }
}

fn radial_oracle(d: usize, n: usize, depth: usize, size: usize) -> Lemma1Oracle {
    // adjacency restricted to radial functions on the truncated tree; the
    // boundary sphere has no outward neighbours
    let df = d as f64;
    let apply = |f: &[f64]| -> Vec<f64> {
        (0..=depth)
            .map(|l| match l {
                0 => (df + 1.0) * f[1],
                _ if l == depth => f[l - 1],
                _ => f[l - 1] + df * f[l + 1],
            })
            .collect()
    };
    let mut prev = vec![0.0; depth + 1];
    prev[0] = 1.0;
    let mut cur = apply(&prev);
    let result = if n == 0 {
        prev
    } else {
        for _ in 1..n {
            let mut next = apply(&cur);
            for (nx, p) in next.iter_mut().zip(&prev) {
                *nx = 2.0 * *nx - 4.0 * df * p;
            }
            prev = std::mem::replace(&mut cur, next);
        }
        cur
    };
    let scale = chebyshev_walk_scale(d, n);
    Lemma1Oracle {
        d,
        n,
        depth,
        route: OracleRoute::RadialQuotient,
        vertex_count: size,
        values: result.into_iter().map(|v| v / scale).enumerate().collect(),
        radial_spread: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    #[test]
    fn first_kind_values() {
        assert_eq!(chebyshev_first(3, 1.0), 1.0);
        assert_eq!(chebyshev_first(2, 0.0), -1.0);
        assert_eq!(chebyshev_first(0, 0.7), 1.0);
        let x: f64 = 0.3;
        assert!((chebyshev_first(5, x) - (5.0 * x.acos()).cos()).abs() < 1e-14);
        // hyperbolic regime
        let y: f64 = 1.7;
        assert!((chebyshev_first(6, y) - (6.0 * y.acosh()).cosh()).abs() < 1e-9);
        assert!((chebyshev_first(3, -y) + (3.0 * y.acosh()).cosh()).abs() < 1e-10);
    }

    #[test]
    fn second_kind_values() {
        assert_eq!(chebyshev_second(0, 12.5), 1.0);
        assert_eq!(chebyshev_second(2, 1.0), 3.0);
        assert_eq!(chebyshev_second(5, -1.0), -6.0);
        let t = 0.3f64.acos();
        assert!((chebyshev_second(4, 0.3) - (5.0 * t).sin() / t.sin()).abs() < 1e-14);
    }

    #[test]
    fn spectral_point_classification() {
        let p = SpectralPoint::from_lambda(2, 1.0 / 2f64.sqrt()).unwrap();
        assert!(p.is_tempered());
        let top = SpectralPoint::from_lambda(2, spectral_edge(2)).unwrap();
        match top.param {
            Parametrization::UntemperedPositive { r } => {
                assert!((r - 2f64.sqrt().ln()).abs() < 1e-12);
                assert!((2.0 * r.cosh() - top.lambda).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let neg = SpectralPoint::from_lambda(3, -2.1).unwrap();
        match neg.param {
            Parametrization::UntemperedNegative { r } => assert!((-2.0 * r.cosh() + 2.1).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        // rounding just past +-2 is absorbed
        let edge = SpectralPoint::from_lambda(2, 2.0 + 1e-13).unwrap();
        assert_eq!(edge.theta(), Some(0.0));
        assert!(SpectralPoint::from_lambda(2, 2.2).is_err());
        assert!(SpectralPoint::from_lambda(1, 0.0).is_err());
    }

    #[test]
    fn spherical_function_values() {
        for d in 2..5 {
            for lam in [-1.5, 0.0, 0.7, 2.0, spectral_edge(d)] {
                let p = SpectralPoint::from_lambda(d, lam).unwrap();
                assert_eq!(spherical_function(d, &p, 0), 1.0);
            }
            let top = SpectralPoint::from_lambda(d, spectral_edge(d)).unwrap();
            for n in 0..15 {
                assert!((spherical_function(d, &top, n) - 1.0).abs() < 1e-11, "d={d} n={n}");
            }
        }
        let p = SpectralPoint::from_lambda(2, 2.0).unwrap();
        assert!((spherical_function(2, &p, 2) - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn spherical_eigenrelation() {
        for d in 2..5 {
            let df = d as f64;
            for lam in [-2.0, -0.4, 1.3, 1.99, 2.05, spectral_edge(d) - 1e-3] {
                let p = SpectralPoint::from_lambda(d, lam).unwrap();
                let phi = |n| spherical_function(d, &p, n);
                // root: (d+1)/sqrt(d) phi(1) = lambda
                assert!(((df + 1.0) / df.sqrt() * phi(1) - lam).abs() < 1e-12);
                for n in 1..20 {
                    let lhs = (phi(n - 1) + df * phi(n + 1)) / df.sqrt();
                    assert!((lhs - lam * phi(n)).abs() < 1e-10, "d={d} lam={lam} n={n}");
                }
            }
        }
    }

    #[test]
    fn plancherel_moments() {
        assert_eq!(plancherel_moment(2, 0), 1.0);
        assert_eq!(plancherel_moment(2, 1), -0.25);
        assert!((plancherel_moment(3, 2) + 1.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn plancherel_density_matches_moments() {
        let rule = GaussLegendre::new(512);
        for d in 2..5 {
            let total = rule.integrate(0.0, PI, |t| plancherel_density(d, t));
            assert!((total - 1.0).abs() < 1e-10);
            let m1 = rule.integrate(0.0, PI, |t| (2.0 * t).cos() * plancherel_density(d, t));
            assert!((m1 - (1.0 - d as f64) / (2.0 * d as f64)).abs() < 1e-10);
            for k in 0..400 {
                assert!(plancherel_density(d, PI * k as f64 / 399.0) >= 0.0);
            }
        }
    }

    #[test]
    fn plancherel_inversion_d2() {
        let rule = GaussLegendre::new(512);
        for x in 0..=6 {
            let v = rule.integrate(0.0, PI, |t| {
                spherical_function(2, &SpectralPoint::from_theta(t), x) * plancherel_density(2, t)
            });
            let expect = if x == 0 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-8, "x={x}: {v}");
        }
    }

    #[test]
    fn delta_kernel_transform_is_one() {
        let k = RadialKernel::new(3, vec![1.0]);
        for lam in [-2.3, -1.0, 0.0, 1.5, 2.3] {
            let p = SpectralPoint::from_lambda(3, lam).unwrap();
            assert_eq!(k.spherical_transform(&p), 1.0);
        }
    }

    #[test]
    fn unit_sphere_kernel_transform() {
        // k = indicator of distance 1: h = (d+1) phi(1) = sqrt(d) lambda
        let k = RadialKernel::new(2, vec![0.0, 1.0]);
        for lam in [-2.0, -0.3, 1.1, 2.1] {
            let p = SpectralPoint::from_lambda(2, lam).unwrap();
            let direct = 3.0 * spherical_function(2, &p, 1);
            assert!((k.spherical_transform(&p) - direct).abs() < 1e-15);
            assert!((k.spherical_transform(&p) - 2f64.sqrt() * lam).abs() < 1e-14);
        }
    }

    #[test]
    fn lemma1_closed_form_values() {
        assert_eq!(lemma1_kernel_value(2, 2, 0).unwrap(), -0.25);
        assert_eq!(lemma1_kernel_value(2, 2, 1).unwrap(), 0.0);
        assert_eq!(lemma1_kernel_value(2, 2, 2).unwrap(), 0.25);
        assert_eq!(lemma1_kernel_value(3, 4, 1).unwrap(), 0.0);
        assert_eq!(lemma1_kernel_value(3, 4, 6).unwrap(), 0.0);
        assert_eq!(lemma1_kernel_value(2, 3, 0), Err(TreeError::NOdd(3)));
        assert_eq!(lemma1_kernel_value(2, 0, 0), Err(TreeError::NOdd(0)));
    }

    #[test]
    fn lemma1_transform_is_cosine() {
        let k = lemma1_kernel(2, 2).unwrap();
        for i in 0..1000 {
            let t = PI * i as f64 / 999.0;
            let p = SpectralPoint::from_theta(t);
            assert!((k.spherical_transform(&p) - (2.0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_series_kernel_matches_closed_form() {
        for d in 2..5 {
            for n in (2..=12).step_by(2) {
                let mut c = vec![0.0; n + 1];
                c[n] = 1.0;
                let k = RadialKernel::from_cosine_series(d, c);
                for r in 0..=n {
                    let exact = lemma1_kernel_value(d, n, r).unwrap();
                    assert!((k.radial_values[r] - exact).abs() < 1e-14, "d={d} n={n} r={r}");
                }
            }
        }
        // odd orders have no closed form but the two representations agree
        let k = RadialKernel::from_cosine_series(3, vec![0.5, -1.0, 0.0, 2.0]);
        let pts: Vec<_> = [-2.2, -1.0, 0.3, 1.9, 2.2]
            .iter()
            .map(|&l| SpectralPoint::from_lambda(3, l).unwrap())
            .collect();
        assert!(k.representation_gap(&pts).unwrap() < 1e-12);
    }

    #[test]
    fn oracle_small_cases() {
        let o = lemma1_oracle(2, 2, 4).unwrap();
        assert_eq!(o.route, OracleRoute::ExplicitTree);
        assert_eq!(o.values[&0], -0.25);
        assert_eq!(o.values[&1], 0.0);
        assert_eq!(o.values[&2], 0.25);
        let o = lemma1_oracle(2, 4, 6).unwrap();
        assert_eq!(o.radial_spread, 0.0);
        let o = lemma1_oracle(3, 6, 8).unwrap();
        for r in 0..=6 {
            assert!((o.values[&r] - lemma1_kernel_value(3, 6, r).unwrap()).abs() < 1e-12);
        }
        assert_eq!(
            lemma1_oracle(2, 4, 4).unwrap_err(),
            TreeError::DepthTooSmall { depth: 4, n: 4 }
        );
    }

    #[test]
    fn oracle_routes_agree() {
        let explicit = explicit_tree_oracle(3, 6, 8);
        let radial = radial_oracle(3, 6, 8, 0);
        for r in 0..=8 {
            assert!((explicit.values[&r] - radial.values[&r]).abs() < 1e-13);
        }
    }

    #[test]
    fn kernel_json_shape() {
        let k = RadialKernel::new(2, vec![1.0, 0.5]);
        let v = serde_json::to_value(&k).unwrap();
        assert_eq!(v["d"], 2);
        assert!(v.get("chebyshev_coefficients").is_none());
        let back: RadialKernel = serde_json::from_value(v).unwrap();
        assert_eq!(back, k);
    }
}
