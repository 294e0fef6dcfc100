//! Operators on a finite regular graph: the normalized adjacency `T_d`, the
//! sphere operators `S_n`, Chebyshev polynomials of `T_d`, and the
//! `L^p -> L^q` norm conditions on the sphere family.
//!
//! `S_n` is realized through non-backtracking walk counts,
//! `A_0 = I`, `A_1 = A`, `A_2 = A^2 - (d+1) I`, `A_{m+1} = A A_m - d A_{m-1}`,
//! and `S_n = d^{-n/2} A_n`. On the tree this is exactly the normalized
//! sphere average; on a graph it is its push-forward.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, RegularGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("exponent p = {0} outside [1, 2]")]
    UnsupportedExponent(f64),
    #[error("order n = {0} must be even and positive")]
    NOdd(usize),
    #[error("sphere family only reaches n = {available}, asked for {requested}")]
    FamilyTooShort { requested: usize, available: usize },
    #[error("C = {c} and alpha = {alpha} must be positive and finite")]
    BadParameters { c: f64, alpha: f64 },
}

/// Relative slack when comparing measured norms against `C d^{-alpha n}`.
pub const NORM_COMPARE_RTOL: f64 = 1e-12;

/// `T_d = d^{-1/2} A` as a dense matrix.
pub fn build_t_operator(g: &RegularGraph) -> DMatrix<f64> {
    let n = g.vertex_count();
    let s = 1.0 / (g.d() as f64).sqrt();
    let mut t = DMatrix::zeros(n, n);
    for x in 0..n {
        for &y in g.neighbors(x) {
            t[(x, y)] += s;
        }
    }
    t
}

/// `A M` for a matrix commuting with the adjacency, computed column-wise as
/// `(M A)[:, x] = sum_{y ~ x} M[:, y]` (exact for symmetric polynomials in `A`).
fn adjacency_times(g: &RegularGraph, m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut out = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut col = out.column_mut(x);
        for &y in g.neighbors(x) {
            col += m.column(y);
        }
    }
    out
}

/// `T_d v` without forming the matrix.
pub fn apply_t(g: &RegularGraph, v: &[f64]) -> Vec<f64> {
    let s = 1.0 / (g.d() as f64).sqrt();
    (0..g.vertex_count())
        .map(|x| s * g.neighbors(x).iter().map(|&y| v[y]).sum::<f64>())
        .collect()
}

/// Iterates `P_0(T_d/2) v, P_1(T_d/2) v, ...` by
/// `w_{m+1} = T_d w_m - w_{m-1}`, `w_0 = v`, `w_1 = (T_d/2) v`.
pub struct ChebyshevSweep<'g> {
    g: &'g RegularGraph,
    prev: Option<Vec<f64>>,
    cur: Vec<f64>,
    order: usize,
}

impl<'g> ChebyshevSweep<'g> {
    pub fn new(g: &'g RegularGraph, v: &[f64]) -> Self {
        assert_eq!(v.len(), g.vertex_count());
        ChebyshevSweep {
            g,
            prev: None,
            cur: v.to_vec(),
            order: 0,
        }
    }

    /// Order of [`Self::current`].
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn current(&self) -> &[f64] {
        &self.cur
    }

    pub fn advance(&mut self) {
        let mut next = apply_t(self.g, &self.cur);
        match self.prev.take() {
            None => next.iter_mut().for_each(|x| *x *= 0.5),
            Some(prev) => next.iter_mut().zip(&prev).for_each(|(x, p)| *x -= p),
        }
        self.prev = Some(std::mem::replace(&mut self.cur, next));
        self.order += 1;
    }
}

/// `P_n(T_d/2) v`.
pub fn apply_chebyshev_of_t(g: &RegularGraph, n: usize, v: &[f64]) -> Vec<f64> {
    let mut sweep = ChebyshevSweep::new(g, v);
    while sweep.order() < n {
        sweep.advance();
    }
    sweep.cur
}

/// Dense matrix recurrence for `P_m(T_d/2)`, `m = 0, 1, ...`.
pub struct ChebyshevMatrixSweep<'g> {
    g: &'g RegularGraph,
    scale: f64,
    prev: Option<DMatrix<f64>>,
    cur: DMatrix<f64>,
    order: usize,
}

impl<'g> ChebyshevMatrixSweep<'g> {
    pub fn new(g: &'g RegularGraph) -> Self {
        let n = g.vertex_count();
        ChebyshevMatrixSweep {
            g,
            scale: 1.0 / (g.d() as f64).sqrt(),
            prev: None,
            cur: DMatrix::identity(n, n),
            order: 0,
        }
    }

    /// Sweep applied to the columns of `start`: `P_m(T_d/2) start`.
    pub fn from_start(g: &'g RegularGraph, start: DMatrix<f64>) -> Self {
        assert_eq!(start.nrows(), g.vertex_count());
        ChebyshevMatrixSweep {
            g,
            scale: 1.0 / (g.d() as f64).sqrt(),
            prev: None,
            cur: start,
            order: 0,
        }
    }

    /// Applies `f` to the stored iterates, e.g. to project out a subspace
    /// that `T_d` leaves invariant.
    pub fn map_state(&mut self, f: impl Fn(&mut DMatrix<f64>)) {
        f(&mut self.cur);
        if let Some(prev) = self.prev.as_mut() {
            f(prev);
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn current(&self) -> &DMatrix<f64> {
        &self.cur
    }

    pub fn advance(&mut self) {
        let mut next = adjacency_times(self.g, &self.cur);
        match self.prev.take() {
            None => next *= 0.5 * self.scale,
            Some(prev) => {
                next *= self.scale;
                next -= prev;
            }
        }
        self.prev = Some(std::mem::replace(&mut self.cur, next));
        self.order += 1;
    }
}

/// Dense `P_n(T_d/2)`.
pub fn chebyshev_matrix(g: &RegularGraph, n: usize) -> DMatrix<f64> {
    let mut sweep = ChebyshevMatrixSweep::new(g);
    while sweep.order() < n {
        sweep.advance();
    }
    sweep.cur
}

/// The sphere operators `S_0..S_max_n` of a graph.
#[derive(Debug, Clone)]
pub struct SphereOperatorFamily {
    d: usize,
    /// Non-backtracking walk counts `A_m` (integers, exact in f64).
    counts: Vec<DMatrix<f64>>,
}

impl SphereOperatorFamily {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_n(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.counts[0].nrows()
    }

    /// Number of non-backtracking walks of length `n` between each pair.
    pub fn walk_counts(&self, n: usize) -> &DMatrix<f64> {
        &self.counts[n]
    }

    /// `S_n = d^{-n/2} A_n`.
    pub fn sphere(&self, n: usize) -> DMatrix<f64> {
        &self.counts[n] * sphere_scale(self.d, n)
    }

    fn check_order(&self, n: usize) -> Result<(), OperatorError> {
        if n > self.max_n() {
            Err(OperatorError::FamilyTooShort {
                requested: n,
                available: self.max_n(),
            })
        } else {
            Ok(())
        }
    }
}

fn sphere_scale(d: usize, n: usize) -> f64 {
    (d as f64).powf(-(n as f64) / 2.0)
}

pub fn build_sphere_family(
    g: &RegularGraph,
    max_n: usize,
) -> Result<SphereOperatorFamily, OperatorError> {
    g.require_simple()?;
    let n = g.vertex_count();
    let d = g.d() as f64;
    let mut counts = Vec::with_capacity(max_n + 1);
    counts.push(DMatrix::identity(n, n));
    if max_n >= 1 {
        let mut a = DMatrix::zeros(n, n);
        for x in 0..n {
            for &y in g.neighbors(x) {
                a[(x, y)] += 1.0;
            }
        }
        counts.push(a);
    }
    for m in 1..max_n {
        let mut next = adjacency_times(g, &counts[m]);
        // the first step may return along the edge it came from (d+1 ways),
        // later steps only along the one edge just used
        let back = if m == 1 { d + 1.0 } else { d };
        next -= &counts[m - 1] * back;
        counts.push(next);
    }
    Ok(SphereOperatorFamily { d: g.d(), counts })
}

/// Right-hand side of the sphere decomposition of `P_n(T_d/2)`:
/// `sum_{j < n/2} ((1-d)/(2 d^{n/2})) d^j S_{2j} + S_n / 2`.
pub fn corollary1_rhs(fam: &SphereOperatorFamily, n: usize) -> Result<DMatrix<f64>, OperatorError> {
    if n == 0 || n % 2 == 1 {
        return Err(OperatorError::NOdd(n));
    }
    fam.check_order(n)?;
    let d = fam.d() as f64;
    let coeff = (1.0 - d) / (2.0 * d.powi((n / 2) as i32));
    let mut rhs = fam.sphere(n) * 0.5;
    for j in 0..n / 2 {
        rhs += fam.sphere(2 * j) * (coeff * d.powi(j as i32));
    }
    Ok(rhs)
}

/// Max absolute entry difference between `P_n(T_d/2)` and its sphere
/// decomposition.
pub fn corollary1_decomposition_check(
    g: &RegularGraph,
    fam: &SphereOperatorFamily,
    n: usize,
) -> Result<f64, OperatorError> {
    let rhs = corollary1_rhs(fam, n)?;
    let lhs = chebyshev_matrix(g, n);
    Ok((lhs - rhs).amax())
}

/// `||M||_{1 -> inf}`, the largest absolute entry.
pub fn max_entry_norm(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

/// `||M||_{2 -> 2}` of a symmetric matrix.
pub fn spectral_norm_symmetric(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().amax()
}

/// A norm value, or an upper bound when the exponent is interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub value: f64,
    /// `false` when `value` is only a Riesz–Thorin upper bound.
    pub exact: bool,
}

/// `||M||_{p -> q}` for a symmetric matrix and conjugate `q`.
///
/// `p = 1` is exact (largest entry), `p = 2` is exact (spectral norm) and
/// `1 < p < 2` returns the interpolation bound
/// `||M||_{1->inf}^{2/p - 1} ||M||_{2->2}^{2 - 2/p}`.
pub fn matrix_norm(m: &DMatrix<f64>, p: f64) -> Result<OperatorNorm, OperatorError> {
    if !(1.0..=2.0).contains(&p) {
        return Err(OperatorError::UnsupportedExponent(p));
    }
    if p == 1.0 {
        return Ok(OperatorNorm {
            value: max_entry_norm(m),
            exact: true,
        });
    }
    let two = spectral_norm_symmetric(m);
    if p == 2.0 {
        return Ok(OperatorNorm { value: two, exact: true });
    }
    let one = max_entry_norm(m);
    Ok(OperatorNorm {
        value: one.powf(2.0 / p - 1.0) * two.powf(2.0 - 2.0 / p),
        exact: false,
    })
}

/// `||S_n||_{p -> q}` (see [`matrix_norm`]).
pub fn sphere_norm(
    fam: &SphereOperatorFamily,
    n: usize,
    p: f64,
) -> Result<OperatorNorm, OperatorError> {
    fam.check_order(n)?;
    if p == 1.0 {
        // exact: the largest walk count, scaled
        return Ok(OperatorNorm {
            value: fam.walk_counts(n).amax() * sphere_scale(fam.d(), n),
            exact: true,
        });
    }
    matrix_norm(&fam.sphere(n), p)
}

/// Parameters `(C, alpha, N)` with `||S_n||_{p->q} <= C d^{-alpha n}` for
/// `1 <= n <= N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionFit {
    pub p: f64,
    /// Conjugate exponent; `None` stands for infinity.
    pub q: Option<f64>,
    pub d: usize,
    /// Measured `||S_n||`, `n = 0..=max_n`.
    pub per_n_norms: Vec<f64>,
    /// `false` when the norms are interpolation bounds.
    pub norms_exact: bool,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub n_admissible: usize,
    /// Set when the norms never decrease; `N` is then 0.
    pub no_decay: bool,
}

impl ConditionFit {
    /// `C d^{-alpha n}`.
    pub fn envelope(&self, n: usize) -> f64 {
        self.c * (self.d as f64).powf(-self.alpha * n as f64)
    }
}

fn conjugate(p: f64) -> Option<f64> {
    (p > 1.0).then(|| p / (p - 1.0))
}

/// Largest `N` such that `norms[m] <= C d^{-alpha m}` for all `1 <= m <= N`.
pub fn admissible_n(norms: &[f64], d: usize, c: f64, alpha: f64) -> usize {
    let df = d as f64;
    norms
        .iter()
        .enumerate()
        .skip(1)
        .take_while(|&(m, &v)| v <= c * df.powf(-alpha * m as f64) * (1.0 + NORM_COMPARE_RTOL))
        .count()
}

/// Measures `||S_n||_{p->q}` for every order in the family and fits or
/// checks the decay condition.
///
/// With both `c` and `alpha` given, only `N` is computed. Missing parameters
/// are fitted on the initial stretch where the norms strictly decrease:
/// `alpha` by least squares on `log ||S_n||` (capped at 1/2, the tree rate),
/// `C` as the smallest multiplier covering that stretch.
pub fn fit_condition(
    fam: &SphereOperatorFamily,
    p: f64,
    c: Option<f64>,
    alpha: Option<f64>,
) -> Result<ConditionFit, OperatorError> {
    if !(1.0..2.0).contains(&p) && p != 2.0 {
        return Err(OperatorError::UnsupportedExponent(p));
    }
    let mut norms = Vec::with_capacity(fam.max_n() + 1);
    let mut exact = true;
    for n in 0..=fam.max_n() {
        let v = sphere_norm(fam, n, p)?;
        exact &= v.exact;
        norms.push(v.value);
    }
    let positive = |v: Option<f64>| v.is_none_or(|v| v > 0.0 && v.is_finite());
    if !positive(c) || !positive(alpha) {
        return Err(OperatorError::BadParameters {
            c: c.unwrap_or(f64::NAN),
            alpha: alpha.unwrap_or(f64::NAN),
        });
    }
    let d = fam.d();
    let ln_d = (d as f64).ln();
    let decaying = 1 + norms.windows(2).take_while(|w| w[1] < w[0]).count();
    let base = |c: f64, alpha: f64, no_decay: bool| ConditionFit {
        p,
        q: conjugate(p),
        d,
        per_n_norms: norms.clone(),
        norms_exact: exact,
        c,
        alpha,
        n_admissible: if no_decay { 0 } else { admissible_n(&norms, d, c, alpha) },
        no_decay,
    };
    if let (Some(c), Some(alpha)) = (c, alpha) {
        return Ok(base(c, alpha, false));
    }
    if decaying < 2 {
        return Ok(base(c.unwrap_or(norms[0]), alpha.unwrap_or(0.0), true));
    }
    let stretch = &norms[..decaying];
    let alpha = match (alpha, c) {
        (Some(a), _) => a,
        (None, Some(c)) => stretch
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, &v)| (c.ln() - v.ln()) / (m as f64 * ln_d))
            .fold(f64::INFINITY, f64::min)
            .min(0.5),
        (None, None) => {
            let k = stretch.len() as f64;
            let mean_x = (k - 1.0) / 2.0;
            let ys: Vec<f64> = stretch.iter().map(|v| v.ln()).collect();
            let mean_y = ys.iter().sum::<f64>() / k;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (m, y) in ys.iter().enumerate() {
                let dx = m as f64 - mean_x;
                sxy += dx * (y - mean_y);
                sxx += dx * dx;
            }
            let a = -(sxy / sxx) / ln_d;
            // an exact tree-rate stretch fits 1/2 up to rounding
            if (a - 0.5).abs() < 1e-12 {
                0.5
            } else {
                a.min(0.5)
            }
        }
    };
    if alpha <= 0.0 {
        return Ok(base(c.unwrap_or(norms[0]), 0.0, true));
    }
    let c = c.unwrap_or_else(|| {
        stretch
            .iter()
            .enumerate()
            .map(|(m, &v)| v * (d as f64).powf(alpha * m as f64))
            .fold(0.0, f64::max)
    });
    Ok(base(c, alpha, false))
}

/// Explicit constant in `||P_n(T_d/2)||_{p->q} <= c C d^{-alpha n}` obtained
/// by the triangle inequality over the sphere decomposition:
/// `c = ((d-1)/2) sum_{i=1}^{n/2} d^{-i(1-2 alpha)} + 1/2`.
pub fn corollary1_constant(d: usize, alpha: f64, n: usize) -> f64 {
    let df = d as f64;
    let ratio = df.powf(-(1.0 - 2.0 * alpha));
    let mut sum = 0.0;
    let mut term = 1.0;
    for _ in 1..=n / 2 {
        term *= ratio;
        sum += term;
    }
    (df - 1.0) / 2.0 * sum + 0.5
}

/// `d sum_{j>=0} d^{-2 alpha j} = d / (1 - d^{-2 alpha})`, a cruder
/// n-independent constant for `alpha > 0`.
pub fn corollary1_uniform_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    df / (1.0 - df.powf(-2.0 * alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::{generate_random_regular, girth_report};
    use crate::tree::lemma1_kernel_value;

    fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn t_operator_spectra() {
        let s2 = 2f64.sqrt();
        let ev = sorted_eigenvalues(&build_t_operator(&complete_k4()));
        assert!((ev[3] - 3.0 / s2).abs() < 1e-12);
        let ev = sorted_eigenvalues(&build_t_operator(&petersen()));
        let expect = [-2.0, -2.0, -2.0, -2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b / s2).abs() < 1e-12);
        }
        let g = generate_random_regular(40, 3, 2).unwrap();
        let t = build_t_operator(&g);
        assert!(spectral_norm_symmetric(&t) <= 4.0 / 3f64.sqrt() + 1e-12);
    }

    #[test]
    fn family_basics() {
        let g = petersen();
        let fam = build_sphere_family(&g, 6).unwrap();
        let t = build_t_operator(&g);
        assert_eq!(fam.sphere(0), DMatrix::identity(10, 10));
        assert!((fam.sphere(1) - &t).amax() < 1e-15);
        let s2 = &t * &t - DMatrix::identity(10, 10) * 1.5;
        assert!((fam.sphere(2) - s2).amax() < 1e-14);
        for n in 0..=6 {
            let a = fam.walk_counts(n);
            assert_eq!(a, &a.transpose());
        }
        // girth 5: length-2 non-backtracking walks end at 6 distinct vertices
        let s2 = fam.sphere(2);
        for x in 0..10 {
            let nz: Vec<f64> = s2.column(x).iter().copied().filter(|&v| v != 0.0).collect();
            assert_eq!(nz, vec![0.5; 6]);
        }
    }

    #[test]
    fn walk_count_row_sums() {
        // row sums of A_m are (d+1) d^{m-1} on any regular graph
        let g = generate_random_regular(60, 2, 9).unwrap();
        let fam = build_sphere_family(&g, 8).unwrap();
        for m in 1..=8 {
            let expect = 3.0 * 2f64.powi(m as i32 - 1);
            for x in 0..60 {
                assert_eq!(fam.walk_counts(m).row(x).sum(), expect);
            }
        }
    }

    #[test]
    fn chebyshev_application() {
        let g = petersen();
        let v: Vec<f64> = (0..10).map(|i| i as f64 - 3.5).collect();
        assert_eq!(apply_chebyshev_of_t(&g, 0, &v), v);
        // delta at a vertex, n = 2 <= injectivity radius: closed-form tree values by distance
        let mut delta = vec![0.0; 10];
        delta[3] = 1.0;
        let out = apply_chebyshev_of_t(&g, 2, &delta);
        let dist = g.distances_from(3);
        for y in 0..10 {
            let exact = lemma1_kernel_value(2, 2, dist[y]).unwrap();
            assert!((out[y] - exact).abs() < 1e-14);
        }
        // matrix and vector recurrences agree
        let m = chebyshev_matrix(&g, 7);
        let w = apply_chebyshev_of_t(&g, 7, &v);
        let mv = &m * nalgebra::DVector::from_vec(v.clone());
        for i in 0..10 {
            assert!((mv[i] - w[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_identity() {
        let g = petersen();
        let fam = build_sphere_family(&g, 12).unwrap();
        assert!(corollary1_decomposition_check(&g, &fam, 2).unwrap() <= 1e-12);
        let k4 = complete_k4();
        let fam4 = build_sphere_family(&k4, 4).unwrap();
        assert!(corollary1_decomposition_check(&k4, &fam4, 4).unwrap() <= 1e-12);
        assert_eq!(corollary1_rhs(&fam, 3).unwrap_err(), OperatorError::NOdd(3));
        assert!(matches!(
            corollary1_rhs(&fam4, 6).unwrap_err(),
            OperatorError::FamilyTooShort { .. }
        ));
    }

    #[test]
    fn norms() {
        let g = petersen();
        let fam = build_sphere_family(&g, 4).unwrap();
        assert_eq!(sphere_norm(&fam, 0, 1.0).unwrap().value, 1.0);
        assert_eq!(sphere_norm(&fam, 1, 1.0).unwrap().value, 2f64.powf(-0.5));
        assert_eq!(sphere_norm(&fam, 2, 1.0).unwrap().value, 0.5);
        assert!(sphere_norm(&fam, 4, 1.0).unwrap().value > 0.25);
        let two = sphere_norm(&fam, 1, 2.0).unwrap();
        assert!(two.exact && (two.value - 3.0 / 2f64.sqrt()).abs() < 1e-12);
        let mid = sphere_norm(&fam, 2, 1.5).unwrap();
        assert!(!mid.exact);
        let (a, b) = (0.5f64, sphere_norm(&fam, 2, 2.0).unwrap().value);
        assert!((mid.value - a.powf(1.0 / 3.0) * b.powf(2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(
            sphere_norm(&fam, 2, 2.5).unwrap_err(),
            OperatorError::UnsupportedExponent(2.5)
        );
    }

    #[test]
    fn tree_regime_fit() {
        for g in [petersen(), generate_random_regular(300, 2, 4).unwrap()] {
            let inj = girth_report(&g, 14).unwrap().injectivity_radius;
            let fam = build_sphere_family(&g, inj + 3).unwrap();
            let fit = fit_condition(&fam, 1.0, Some(1.0), Some(0.5)).unwrap();
            assert_eq!(fit.n_admissible, inj);
        }
        let k4 = complete_k4();
        let fam = build_sphere_family(&k4, 4).unwrap();
        let fit = fit_condition(&fam, 1.0, Some(1.0), Some(0.5)).unwrap();
        assert!(fit.n_admissible <= 1);
    }

    #[test]
    fn auto_fit_respects_tree_rate() {
        let g = generate_random_regular(200, 2, 11).unwrap();
        let fam = build_sphere_family(&g, 14).unwrap();
        let fit = fit_condition(&fam, 1.0, None, None).unwrap();
        assert!(fit.alpha > 0.0 && fit.alpha <= 0.5);
        assert!(fit.c >= 1.0);
        for n in 1..=fit.n_admissible {
            assert!(fit.per_n_norms[n] <= fit.envelope(n) * (1.0 + 1e-12));
        }
        let json = serde_json::to_value(&fit).unwrap();
        for key in ["p", "per_n_norms", "C", "alpha", "N"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn constants() {
        // alpha = 1/2: (d-1)/2 * n/2 + 1/2
        assert!((corollary1_constant(2, 0.5, 8) - 2.5).abs() < 1e-12);
        assert!((corollary1_uniform_constant(2, 0.5) - 4.0).abs() < 1e-12);
    }
}
