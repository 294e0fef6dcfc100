//! Mass lower bounds for eigenfunction support sets.
//!
//! For an eigenfunction `phi` of `T_d` and a vertex set `E` carrying mass at
//! least `eps`, the amplification kernel `K` tuned to `phi`'s eigenvalue gives
//!
//! ```text
//! eps^2 <= <K(phi 1_E), phi 1_E> <= ||K||_{1->inf} |E|,
//! ```
//!
//! so `|E| >= eps^2 / ||K||_{1->inf}`. This module computes every quantity in
//! that chain on a concrete graph.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::RegularGraph;
use crate::kernel::{
    build_kernel_operator, kernel_matrices_deflated, log_sum_exp, KernelError, KernelOperator, KernelRecipe,
};
use crate::operators::{
    build_sphere_family, build_t_operator, fit_condition, max_entry_norm, ConditionFit, OperatorError,
};
use crate::tree::{spectral_edge, SpectralPoint, TreeError};

pub const DEFAULT_DENSE_BUDGET: usize = 3000;
/// Eigenvalues closer than this share an eigenspace.
pub const EIGENSPACE_TOL: f64 = 1e-9;
/// Tolerance of the eigensystem validation.
pub const LINALG_TOL: f64 = 1e-8;
/// Slack allowed when comparing a set's mass against `eps`.
pub const MASS_TOL: f64 = 1e-12;
/// Slack for the inequality checks in a chain record.
pub const CHAIN_TOL: f64 = 1e-8;
/// Largest vertex count accepted by [`exhaustive_min_support`].
pub const EXHAUSTIVE_SUPPORT_LIMIT: usize = 24;

#[derive(Debug, Error)]
pub enum DelocError {
    #[error("{vertices} vertices exceed the dense solver budget of {budget}")]
    SizeBudgetExceeded { vertices: usize, budget: usize },
    #[error("eigensystem validation failed: {what} = {value:e}")]
    Validation { what: &'static str, value: f64 },
    #[error("set mass {mass} is below epsilon = {epsilon}")]
    MassBelowEpsilon { mass: f64, epsilon: f64 },
    #[error("recipe built for theta0 = {recipe_theta} but the eigenvalue needs theta0 = {expected}")]
    RecipeMismatch { recipe_theta: f64, expected: f64 },
    #[error("exponent p = {0} outside [1, 2)")]
    BadExponent(f64),
    #[error("epsilon = {0} outside (0, 1]")]
    BadEpsilon(f64),
    #[error("alpha = {0} must be positive")]
    BadAlpha(f64),
    #[error("vertex {vertex} out of range for {vertices} vertices")]
    BadVertex { vertex: usize, vertices: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Orthonormal eigenbasis of `T_d`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub d: usize,
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
    pub points: Vec<SpectralPoint>,
    pub orthonormality_error: f64,
    pub max_residual: f64,
}

pub fn eigensystem(g: &RegularGraph) -> Result<EigenSystem, DelocError> {
    eigensystem_with_budget(g, DEFAULT_DENSE_BUDGET)
}

/// Dense symmetric eigendecomposition, ordered by eigenvalue and then
/// lexicographically on the sign-normalised vectors.
pub fn eigensystem_with_budget(g: &RegularGraph, budget: usize) -> Result<EigenSystem, DelocError> {
    let n = g.vertex_count();
    if n > budget {
        return Err(DelocError::SizeBudgetExceeded {
            vertices: n,
            budget,
        });
    }
    let t = build_t_operator(g);
    let eig = t.clone().symmetric_eigen();
    let mut cols: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            if let Some(&lead) = v.iter().find(|x| x.abs() > 1e-12) {
                if lead < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (eig.eigenvalues[j], v)
        })
        .collect();
    cols.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.iter().zip(&b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
    });
    let eigenvalues: Vec<f64> = cols.iter().map(|c| c.0).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| cols[j].1[i]);

    let gram = eigenvectors.transpose() * &eigenvectors;
    let orthonormality_error = (gram - DMatrix::identity(n, n)).amax();
    let tv = &t * &eigenvectors;
    let max_residual = (0..n)
        .map(|j| (tv.column(j) - eigenvectors.column(j) * eigenvalues[j]).norm())
        .fold(0.0, f64::max);
    if orthonormality_error > LINALG_TOL {
        return Err(DelocError::Validation {
            what: "orthonormality error",
            value: orthonormality_error,
        });
    }
    if max_residual > LINALG_TOL {
        return Err(DelocError::Validation {
            what: "eigen residual",
            value: max_residual,
        });
    }
    let d = g.d();
    let edge = spectral_edge(d);
    let points = eigenvalues
        .iter()
        .map(|&l| SpectralPoint::from_lambda(d, l.clamp(-edge, edge)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EigenSystem {
        d,
        eigenvalues,
        eigenvectors,
        points,
        orthonormality_error,
        max_residual,
    })
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j).iter().copied().collect()
    }

    /// Index ranges of eigenvalues that agree within [`EIGENSPACE_TOL`].
    pub fn eigenspaces(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for j in 1..=self.len() {
            if j == self.len() || self.eigenvalues[j] - self.eigenvalues[j - 1] > EIGENSPACE_TOL {
                out.push(start..j);
                start = j;
            }
        }
        out
    }

    /// A unit vector with standard normal coordinates in the basis of `space`.
    pub fn random_unit_vector(&self, space: Range<usize>, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.eigenvectors.nrows();
        loop {
            let mut v = DVector::zeros(n);
            for j in space.clone() {
                let c: f64 = StandardNormal.sample(rng);
                v += self.eigenvectors.column(j) * c;
            }
            let norm = v.norm();
            if norm > 1e-8 {
                return (v / norm).iter().copied().collect();
            }
        }
    }
}

/// A minimal set carrying mass `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    pub size: usize,
    pub vertices: Vec<usize>,
    pub mass: f64,
    /// Mass of the set without its lightest vertex.
    pub mass_without_last: f64,
}

/// Heaviest vertices first until the mass reaches `eps` (up to
/// [`MASS_TOL`]). A set of the returned size is the smallest possible.
pub fn min_support_size(phi: &[f64], epsilon: f64) -> SupportSet {
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| (phi[b] * phi[b]).total_cmp(&(phi[a] * phi[a])).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut before = 0.0;
    let mut size = 0;
    for &x in &order {
        if size > 0 && mass >= epsilon - MASS_TOL {
            break;
        }
        before = mass;
        mass += phi[x] * phi[x];
        size += 1;
    }
    let mut vertices = order[..size].to_vec();
    vertices.sort_unstable();
    SupportSet {
        size,
        vertices,
        mass,
        mass_without_last: before,
    }
}

/// Smallest support size by enumerating every subset; for small graphs only.
pub fn exhaustive_min_support(phi: &[f64], epsilon: f64) -> usize {
    let n = phi.len();
    assert!(n <= EXHAUSTIVE_SUPPORT_LIMIT, "{n} vertices is too many to enumerate");
    let sq: Vec<f64> = phi.iter().map(|x| x * x).collect();
    let mut best = n;
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let mass: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| sq[i]).sum();
        if mass >= epsilon - MASS_TOL {
            best = size;
        }
    }
    best
}

fn set_mass(phi: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&x| phi[x] * phi[x]).sum()
}

fn check_set(set: &[usize], n: usize) -> Result<(), DelocError> {
    match set.iter().find(|&&x| x >= n) {
        Some(&vertex) => Err(DelocError::BadVertex { vertex, vertices: n }),
        None => Ok(()),
    }
}

fn restrict(phi: &[f64], set: &[usize]) -> DVector<f64> {
    let mut f = DVector::zeros(phi.len());
    for &x in set {
        f[x] = phi[x];
    }
    f
}

/// `phi 1_E` split along `phi`, the tempered and the untempered spectrum.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    /// `<phi 1_E, phi>`, which equals the mass of `E`.
    pub coefficient: f64,
    pub g_temp: DVector<f64>,
    pub g_untemp: DVector<f64>,
    pub reconstruction_error: f64,
    /// Largest absolute inner product between two of the three parts.
    pub max_overlap: f64,
}

pub fn spectral_split(es: &EigenSystem, phi: &[f64], set: &[usize]) -> Result<SpectralSplit, DelocError> {
    check_set(set, phi.len())?;
    let f = restrict(phi, set);
    let phi_v = DVector::from_column_slice(phi);
    let coefficient = f.dot(&phi_v);
    let rest = &f - &phi_v * coefficient;
    let coords = es.eigenvectors.tr_mul(&rest);
    let n = phi.len();
    let mut g_temp = DVector::zeros(n);
    let mut g_untemp = DVector::zeros(n);
    for (j, p) in es.points.iter().enumerate() {
        let part = es.eigenvectors.column(j) * coords[j];
        if p.is_tempered() {
            g_temp += part;
        } else {
            g_untemp += part;
        }
    }
    let head = &phi_v * coefficient;
    let reconstruction_error = (&head + &g_temp + &g_untemp - &f).norm();
    let max_overlap = [head.dot(&g_temp), head.dot(&g_untemp), g_temp.dot(&g_untemp)]
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()));
    Ok(SpectralSplit {
        coefficient,
        g_temp,
        g_untemp,
        reconstruction_error,
        max_overlap,
    })
}

/// Untempered eigenvectors of an eigensystem, the directions in which
/// kernel transforms grow exponentially with the degree.
#[derive(Debug, Clone)]
pub struct UntemperedBasis {
    pub indices: Vec<usize>,
    /// Orthonormal columns, one per index.
    pub vectors: DMatrix<f64>,
}

impl UntemperedBasis {
    pub fn new(es: &EigenSystem) -> Self {
        let indices: Vec<usize> = (0..es.len()).filter(|&j| !es.points[j].is_tempered()).collect();
        let n = es.eigenvectors.nrows();
        let vectors = DMatrix::from_fn(n, indices.len(), |i, k| es.eigenvectors[(i, indices[k])]);
        UntemperedBasis { indices, vectors }
    }

    /// Coordinates of `v`, with entries below [`COORD_FLOOR`] set to zero.
    fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        self.vectors.tr_mul(v).map(|c| if c.abs() < COORD_FLOOR { 0.0 } else { c })
    }
}

/// Untempered coordinates smaller than this count as rounding noise.
pub const COORD_FLOOR: f64 = 1e-10;

/// A kernel on a graph, split along the spectrum: the tempered part is a
/// dense matrix from a deflated Chebyshev sweep, the untempered part is
/// `sum_u h_u psi_u psi_u^T` with `ln h_u` stored.
#[derive(Debug, Clone)]
pub struct MeasuredKernel {
    pub recipe: KernelRecipe,
    pub operator: KernelOperator,
    pub tempered: DMatrix<f64>,
    /// `ln h` at each untempered eigenvalue, aligned with
    /// [`UntemperedBasis::indices`].
    pub log_h: Vec<f64>,
    /// `ln ||K||_{1->inf}`.
    pub log_norm: f64,
}

impl MeasuredKernel {
    pub fn max_entry(&self) -> f64 {
        self.log_norm.exp()
    }

    /// The dense matrix of `K`; entries overflow once `h_u` does.
    pub fn matrix(&self, basis: &UntemperedBasis) -> DMatrix<f64> {
        let mut k = self.tempered.clone();
        for (col, lh) in basis.vectors.column_iter().zip(&self.log_h) {
            k += col * col.transpose() * lh.exp();
        }
        k
    }
}

/// Live dense matrices per Chebyshev sweep.
pub const KERNEL_BATCH: usize = 16;

/// Measures every recipe on `g`, batching recipes into shared sweeps.
pub fn measure_kernels(
    g: &RegularGraph,
    es: &EigenSystem,
    basis: &UntemperedBasis,
    recipes: &[KernelRecipe],
    admissible_n: Option<usize>,
) -> Vec<MeasuredKernel> {
    let ops: Vec<KernelOperator> = recipes
        .iter()
        .map(|r| build_kernel_operator(r, admissible_n))
        .collect();
    let mut order: Vec<usize> = (0..ops.len()).collect();
    order.sort_by_key(|&i| (ops[i].degree, i));
    let batches: Vec<&[usize]> = order.chunks(KERNEL_BATCH).collect();
    let mut mats: Vec<(usize, DMatrix<f64>)> = batches
        .par_iter()
        .flat_map_iter(|batch| {
            let refs: Vec<&KernelOperator> = batch.iter().map(|&i| &ops[i]).collect();
            batch
                .iter()
                .copied()
                .zip(kernel_matrices_deflated(g, &refs, Some(&basis.vectors)))
        })
        .collect();
    mats.sort_by_key(|m| m.0);
    mats.into_iter()
        .zip(recipes.iter().zip(ops))
        .map(|((_, tempered), (recipe, operator))| {
            let log_h: Vec<f64> = basis
                .indices
                .iter()
                .map(|&j| recipe.log_transform_untempered(&es.points[j]).unwrap())
                .collect();
            // max entry of e^{-L} K, then shift back by L
            let shift = log_h.iter().copied().fold(0.0, f64::max);
            let mut scaled = &tempered * (-shift).exp();
            for (col, lh) in basis.vectors.column_iter().zip(&log_h) {
                scaled += col * col.transpose() * (lh - shift).exp();
            }
            MeasuredKernel {
                recipe: recipe.clone(),
                operator,
                tempered,
                log_h,
                log_norm: shift + max_entry_norm(&scaled).ln(),
            }
        })
        .collect()
}

/// `finite + exp(log_extra)`: a quantity whose untempered part may lie
/// beyond the range of `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Wide {
    finite: f64,
    log_extra: f64,
}

impl Wide {
    fn new(finite: f64, logs: &[f64]) -> Self {
        Wide {
            finite,
            log_extra: log_sum_exp(logs),
        }
    }

    fn value(self) -> f64 {
        self.finite + self.log_extra.exp()
    }

    fn at_least(self, x: f64) -> bool {
        let gap = x - self.finite;
        gap <= 0.0 || self.log_extra >= gap.ln()
    }

    /// `ln |value|`.
    fn ln_abs(self) -> f64 {
        let extra = self.log_extra;
        if self.finite >= 0.0 {
            log_sum_exp(&[self.finite.ln(), extra])
        } else if extra > self.finite.abs().ln() {
            extra + (-(self.finite.abs().ln() - extra).exp()).ln_1p()
        } else {
            (self.finite.abs() - extra.exp()).ln()
        }
    }
}

/// `theta0` of the kernel assigned to an eigenvalue: its angle when
/// tempered, `0` otherwise.
pub fn target_angle(p: &SpectralPoint) -> f64 {
    p.theta().unwrap_or(0.0)
}

/// All quantities of the inequality chain for one eigenfunction and set.
///
/// Values that can overflow also appear as base-10 logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub epsilon: f64,
    pub set_size: usize,
    pub mass: f64,
    /// `<K(phi 1_E), phi 1_E>`.
    pub lhs: f64,
    pub log10_lhs: f64,
    /// Measured `<K phi, phi>`.
    pub k_phi_phi: f64,
    /// Spherical transform of the kernel at the eigenvalue.
    pub transform: f64,
    /// `mass (mass <K phi, phi> - (1 - eps))`.
    pub lower7: f64,
    /// `lhs - lower7`, evaluated without forming either side.
    pub margin7: f64,
    pub eq7_holds: bool,
    /// Whether `<K phi, phi> > 1/eps`, which makes the `eps^2` bound apply.
    pub amplified: bool,
    pub eq8_holds: bool,
    pub kernel_norm: f64,
    pub log10_kernel_norm: f64,
    /// `||K||_{1->inf} |E|`.
    pub rhs5: f64,
    pub log10_rhs5: f64,
    pub eq5_holds: bool,
    /// `eps^2 / ||K||_{1->inf}`.
    pub implied_lower: f64,
    pub implied_holds: bool,
    pub pass: bool,
}

/// Chain for an arbitrary eigenfunction `phi` at `point`.
pub fn chain_for_vector(
    basis: &UntemperedBasis,
    phi: &[f64],
    point: &SpectralPoint,
    set: &[usize],
    recipe: &KernelRecipe,
    kernel: &MeasuredKernel,
) -> Result<ChainRecord, DelocError> {
    let expected = target_angle(point);
    if (recipe.theta0 - expected).abs() > 1e-12 || recipe.r_prime != kernel.recipe.r_prime || recipe.m != kernel.recipe.m {
        return Err(DelocError::RecipeMismatch {
            recipe_theta: recipe.theta0,
            expected,
        });
    }
    check_set(set, phi.len())?;
    let epsilon = recipe.epsilon;
    let mass = set_mass(phi, set);
    if mass < epsilon - MASS_TOL {
        return Err(DelocError::MassBelowEpsilon { mass, epsilon });
    }
    let f = restrict(phi, set);
    let phi_v = DVector::from_column_slice(phi);
    let quad = |v: &DVector<f64>| {
        let coords = basis.coords(v);
        let logs: Vec<f64> = coords
            .iter()
            .zip(&kernel.log_h)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, lh)| lh + 2.0 * c.abs().ln())
            .collect();
        Wide::new((&kernel.tempered * v).dot(v), &logs)
    };
    let lhs = quad(&f);
    let kphi = quad(&phi_v);
    let transform = recipe.transform_at(point);

    // lhs - mass^2 <K phi, phi> = <K r, r> with r = phi 1_E - mass phi
    let rest = &f - &phi_v * mass;
    let rest_q = quad(&rest);
    let temp_gap = (&kernel.tempered * &f).dot(&f) - mass * mass * (&kernel.tempered * &phi_v).dot(&phi_v);
    let margin = Wide::new(temp_gap + mass * (1.0 - epsilon), &[rest_q.log_extra]);
    let eq7_holds = margin.at_least(-CHAIN_TOL);
    let lower7 = mass * (mass * kphi.value() - (1.0 - epsilon));

    let amplified = kphi.at_least(1.0 / epsilon) && kphi.value() > 1.0 / epsilon;
    let eps2 = epsilon * epsilon;
    let eq8_holds = lhs.at_least(eps2 - CHAIN_TOL);
    let ln_rhs5 = kernel.log_norm + (set.len() as f64).ln();
    let eq5_holds = lhs.ln_abs() <= log_sum_exp(&[ln_rhs5, CHAIN_TOL.ln()]);
    let implied_lower = (2.0 * epsilon.ln() - kernel.log_norm).exp();
    let implied_holds = set.len() as f64 >= implied_lower * (1.0 - 1e-12) - CHAIN_TOL;
    let pass = eq7_holds && eq5_holds && (!amplified || (eq8_holds && implied_holds));
    let ln10 = std::f64::consts::LN_10;
    Ok(ChainRecord {
        epsilon,
        set_size: set.len(),
        mass,
        lhs: lhs.value(),
        log10_lhs: lhs.ln_abs() / ln10,
        k_phi_phi: kphi.value(),
        transform,
        lower7,
        margin7: margin.value(),
        eq7_holds,
        amplified,
        eq8_holds,
        kernel_norm: kernel.max_entry(),
        log10_kernel_norm: kernel.log_norm / ln10,
        rhs5: ln_rhs5.exp(),
        log10_rhs5: ln_rhs5 / ln10,
        eq5_holds,
        implied_lower,
        implied_holds,
        pass,
    })
}

/// Chain for eigenvector `j` of `es` with a kernel built from `recipe`.
pub fn verify_inequality_chain(
    g: &RegularGraph,
    es: &EigenSystem,
    j: usize,
    set: &[usize],
    recipe: &KernelRecipe,
) -> Result<ChainRecord, DelocError> {
    let basis = UntemperedBasis::new(es);
    let kernel = measure_kernels(g, es, &basis, std::slice::from_ref(recipe), None)
        .pop()
        .unwrap();
    chain_for_vector(&basis, &es.vector(j), &es.points[j], set, recipe, &kernel)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    pub delta: f64,
    pub bound: f64,
    /// `bound < 2`: the bound says no more than `|E| >= 1`.
    pub vacuous: bool,
}

/// `delta = alpha p eps^2 / (128 (2 - p))` and `bound = d^{delta N}`.
pub fn theorem_bound(epsilon: f64, alpha: f64, p: f64, n_radius: usize, d: usize) -> Result<TheoremBound, DelocError> {
    if !(1.0..2.0).contains(&p) {
        return Err(DelocError::BadExponent(p));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(DelocError::BadEpsilon(epsilon));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(DelocError::BadAlpha(alpha));
    }
    let delta = alpha * p * epsilon * epsilon / (128.0 * (2.0 - p));
    let bound = (d as f64).powf(delta * n_radius as f64);
    Ok(TheoremBound {
        delta,
        bound,
        vacuous: bound < 2.0,
    })
}

/// Parameters of a survey run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyOptions {
    pub epsilon: f64,
    pub p: f64,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    /// Replaces the fitted radius `N`.
    pub n_override: Option<usize>,
    /// Largest sphere order used for the condition fit.
    pub sphere_orders: usize,
    /// Random unit vectors tested per degenerate eigenspace.
    pub random_vectors: usize,
    pub seed: u64,
    pub dense_budget: usize,
}

impl SurveyOptions {
    pub fn new(epsilon: f64, p: f64) -> Self {
        SurveyOptions {
            epsilon,
            p,
            c: None,
            alpha: None,
            n_override: None,
            sphere_orders: 12,
            random_vectors: 10,
            seed: 0,
            dense_budget: DEFAULT_DENSE_BUDGET,
        }
    }
}

/// Radius used to build survey kernels: the certified `N`, raised to
/// `ceil(256 / eps^2)` so that `R >= 32 M`.
pub fn recipe_radius(epsilon: f64, certified: usize) -> usize {
    certified.max((256.0 / (epsilon * epsilon)).ceil() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub vertices: usize,
    pub d: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub id: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub r_prime: usize,
    pub degree: usize,
    pub log10_max_entry: f64,
    pub support_exceeds_n: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub j: usize,
    pub lambda: f64,
    pub tempered: bool,
    pub mass_target: f64,
    pub e_min: usize,
    pub mass_at_e_min: f64,
    pub mass_below_e_min: f64,
    pub delta: Option<f64>,
    pub bound: Option<f64>,
    pub kernel_id: usize,
    pub recipe: KernelRecipe,
    pub chain: ChainRecord,
    pub pass: bool,
}

/// Random unit vectors drawn from one degenerate eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenspaceCheck {
    pub first: usize,
    pub multiplicity: usize,
    pub lambda: f64,
    pub vectors_tested: usize,
    pub min_e: usize,
    pub min_lhs: f64,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyAggregate {
    pub pass: bool,
    pub rows: usize,
    pub rows_passed: usize,
    pub rows_amplified: usize,
    pub empirical_min_support: usize,
    /// Largest `eps^2 / ||K||` over the rows.
    pub max_implied_lower: f64,
    pub eigenspace_checks_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelocalizationReport {
    pub schema: u32,
    pub graph: GraphSummary,
    pub epsilon: f64,
    pub p: f64,
    pub condition: ConditionFit,
    pub n_certified: usize,
    pub n_recipe: usize,
    pub theorem: Option<TheoremBound>,
    pub kernels: Vec<KernelSummary>,
    pub rows: Vec<SurveyRow>,
    pub eigenspaces: Vec<EigenspaceCheck>,
    pub aggregate: SurveyAggregate,
    pub annotations: Vec<String>,
}

pub const REPORT_SCHEMA: u32 = 1;

/// Fits the decay condition, builds one kernel per distinct eigenvalue
/// angle and runs the chain on the minimal set of every eigenfunction and
/// of random vectors in degenerate eigenspaces.
pub fn full_survey(g: &RegularGraph, opts: &SurveyOptions) -> Result<DelocalizationReport, DelocError> {
    let epsilon = opts.epsilon;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(DelocError::BadEpsilon(epsilon));
    }
    if !(1.0..2.0).contains(&opts.p) {
        return Err(DelocError::BadExponent(opts.p));
    }
    let es = eigensystem_with_budget(g, opts.dense_budget)?;
    let fam = build_sphere_family(g, opts.sphere_orders)?;
    let condition = fit_condition(&fam, opts.p, opts.c, opts.alpha)?;
    drop(fam);
    let n_certified = opts.n_override.unwrap_or(condition.n_admissible);
    let mut annotations = Vec::new();
    let theorem = if condition.alpha > 0.0 {
        Some(theorem_bound(epsilon, condition.alpha, opts.p, n_certified, g.d())?)
    } else {
        annotations.push("no decay: alpha = 0, theorem bound undefined".to_string());
        None
    };
    if theorem.is_none_or(|t| t.vacuous) {
        annotations.push(format!(
            "bound vacuous: d^(delta N) = {} with N = {n_certified} gives no information beyond |E| >= 1; \
             the constant-free bound |E| >= eps^2/||K|| is checked instead",
            theorem.map_or(1.0, |t| t.bound)
        ));
    }
    let n_recipe = recipe_radius(epsilon, n_certified);

    let recipes: Vec<KernelRecipe> = es
        .points
        .iter()
        .map(|p| KernelRecipe::new(target_angle(p), epsilon, n_recipe))
        .collect::<Result<_, _>>()?;
    let mut by_shape: BTreeMap<usize, usize> = BTreeMap::new();
    let mut row_kernel = Vec::with_capacity(recipes.len());
    let mut unique: Vec<usize> = Vec::new();
    for (j, r) in recipes.iter().enumerate() {
        let id = *by_shape.entry(r.r_prime).or_insert_with(|| {
            unique.push(j);
            unique.len() - 1
        });
        row_kernel.push(id);
    }
    let unique_recipes: Vec<KernelRecipe> = unique.iter().map(|&j| recipes[j].clone()).collect();
    let basis = UntemperedBasis::new(&es);
    let kernels = measure_kernels(g, &es, &basis, &unique_recipes, Some(n_certified));
    // recipes with equal r' have equal cosine terms and share one kernel
    let run_chain = |phi: &[f64], point: &SpectralPoint, set: &[usize], j: usize| {
        chain_for_vector(&basis, phi, point, set, &recipes[j], &kernels[row_kernel[j]])
    };

    let rows: Vec<SurveyRow> = (0..es.len())
        .into_par_iter()
        .map(|j| {
            let phi = es.vector(j);
            let support = min_support_size(&phi, epsilon);
            let chain = run_chain(&phi, &es.points[j], &support.vertices, j)?;
            Ok(SurveyRow {
                j,
                lambda: es.eigenvalues[j],
                tempered: es.points[j].is_tempered(),
                mass_target: epsilon,
                e_min: support.size,
                mass_at_e_min: support.mass,
                mass_below_e_min: support.mass_without_last,
                delta: theorem.map(|t| t.delta),
                bound: theorem.map(|t| t.bound),
                kernel_id: row_kernel[j],
                recipe: recipes[j].clone(),
                pass: chain.pass,
                chain,
            })
        })
        .collect::<Result<_, DelocError>>()?;

    let spaces: Vec<Range<usize>> = es.eigenspaces().into_iter().filter(|s| s.len() > 1).collect();
    let eigenspaces: Vec<EigenspaceCheck> = spaces
        .par_iter()
        .map(|space| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (space.start as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let j = space.start;
            let mut min_e = usize::MAX;
            let mut min_lhs = f64::INFINITY;
            let mut all_pass = true;
            for _ in 0..opts.random_vectors {
                let v = es.random_unit_vector(space.clone(), &mut rng);
                let support = min_support_size(&v, epsilon);
                let rec = run_chain(&v, &es.points[j], &support.vertices, j)?;
                min_e = min_e.min(support.size);
                min_lhs = min_lhs.min(rec.lhs);
                all_pass &= rec.pass;
            }
            Ok(EigenspaceCheck {
                first: j,
                multiplicity: space.len(),
                lambda: es.eigenvalues[j],
                vectors_tested: opts.random_vectors,
                min_e,
                min_lhs,
                all_pass,
            })
        })
        .collect::<Result<_, DelocError>>()?;

    let rows_passed = rows.iter().filter(|r| r.pass).count();
    let eigenspace_checks_passed = eigenspaces.iter().all(|c| c.all_pass);
    let aggregate = SurveyAggregate {
        pass: rows_passed == rows.len() && eigenspace_checks_passed,
        rows: rows.len(),
        rows_passed,
        rows_amplified: rows.iter().filter(|r| r.chain.amplified).count(),
        empirical_min_support: rows.iter().map(|r| r.e_min).min().unwrap_or(0),
        max_implied_lower: rows.iter().map(|r| r.chain.implied_lower).fold(0.0, f64::max),
        eigenspace_checks_passed,
    };
    if aggregate.rows_amplified < aggregate.rows {
        annotations.push(format!(
            "{} of {} rows have <K phi, phi> <= 1/eps; the eps^2 bound is not claimed for them",
            aggregate.rows - aggregate.rows_amplified,
            aggregate.rows
        ));
    }
    let kernel_summaries = kernels
        .iter()
        .enumerate()
        .map(|(id, k)| KernelSummary {
            id,
            m: k.recipe.m,
            r_prime: k.recipe.r_prime,
            degree: k.operator.degree,
            log10_max_entry: k.log_norm / std::f64::consts::LN_10,
            support_exceeds_n: k.operator.support_exceeds_n,
        })
        .collect();
    Ok(DelocalizationReport {
        schema: REPORT_SCHEMA,
        graph: GraphSummary {
            vertices: g.vertex_count(),
            d: g.d(),
            edges: g.edge_count(),
        },
        epsilon,
        p: opts.p,
        condition,
        n_certified,
        n_recipe,
        theorem,
        kernels: kernel_summaries,
        rows,
        eigenspaces,
        aggregate,
        annotations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn sqrt2() -> f64 {
        2f64.sqrt()
    }

    #[test]
    fn small_spectra() {
        let es = eigensystem(&complete_k4()).unwrap();
        let want = [-1.0, -1.0, -1.0, 3.0].map(|v| v / sqrt2());
        for (a, b) in es.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(es.eigenspaces(), vec![0..3, 3..4]);

        let es = eigensystem(&petersen()).unwrap();
        assert!(es.orthonormality_error < 1e-12 && es.max_residual < 1e-12);
        let tempered: Vec<bool> = es.points.iter().map(|p| p.is_tempered()).collect();
        assert_eq!(tempered.iter().filter(|&&t| t).count(), 9);
        assert!(!tempered[9]);
        assert!((es.eigenvalues[0] + sqrt2()).abs() < 1e-12);
        assert!((es.eigenvalues[9] - 3.0 / sqrt2()).abs() < 1e-12);
        assert_eq!(es.eigenspaces(), vec![0..4, 4..9, 9..10]);
        // top eigenvector is constant
        let top = es.vector(9);
        assert!(top.iter().all(|&x| (x - 10f64.sqrt().recip()).abs() < 1e-12));
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            eigensystem_with_budget(&petersen(), 9),
            Err(DelocError::SizeBudgetExceeded { vertices: 10, budget: 9 })
        ));
    }

    #[test]
    fn deterministic_basis() {
        let a = eigensystem(&petersen()).unwrap();
        let b = eigensystem(&petersen()).unwrap();
        assert_eq!(a.eigenvectors, b.eigenvectors);
    }

    #[test]
    fn support_examples() {
        let uniform = vec![10f64.sqrt().recip(); 10];
        for (eps, want) in [(0.3, 3), (0.25, 3), (0.5, 5), (1.0, 10)] {
            let s = min_support_size(&uniform, eps);
            assert_eq!(s.size, want, "eps = {eps}");
            assert!(s.mass >= eps - MASS_TOL);
            assert!(s.mass_without_last < eps);
        }
        let mut spike = vec![0.0; 7];
        spike[4] = 1.0;
        let s = min_support_size(&spike, 0.9);
        assert_eq!((s.size, s.vertices), (1, vec![4]));
        assert_eq!(exhaustive_min_support(&spike, 0.9), 1);

        let es = eigensystem(&petersen()).unwrap();
        for j in 4..9 {
            let phi = es.vector(j);
            let s = min_support_size(&phi, 0.5);
            // a single vertex carries at most the projector diagonal, 1/2
            assert!((1..=5).contains(&s.size));
            assert_eq!(s.size, exhaustive_min_support(&phi, 0.5));
        }
    }

    #[test]
    fn split_reconstructs() {
        let es = eigensystem(&petersen()).unwrap();
        for j in 0..10 {
            let phi = es.vector(j);
            let s = min_support_size(&phi, 0.4);
            let split = spectral_split(&es, &phi, &s.vertices).unwrap();
            assert!(split.reconstruction_error < 1e-12);
            assert!(split.max_overlap < 1e-12);
            assert!((split.coefficient - s.mass).abs() < 1e-12);
            let m = s.mass;
            assert!(split.g_temp.norm_squared() <= m * (1.0 - 0.4) + 1e-10);
        }
    }

    #[test]
    fn chain_full_set_and_untempered() {
        let g = petersen();
        let es = eigensystem(&g).unwrap();
        let all: Vec<usize> = (0..10).collect();
        for j in [0, 5, 9] {
            let rec = KernelRecipe::new(target_angle(&es.points[j]), 0.3, recipe_radius(0.3, 2)).unwrap();
            let c = verify_inequality_chain(&g, &es, j, &all, &rec).unwrap();
            assert!((c.lhs - c.k_phi_phi).abs() < 1e-9);
            assert!((c.k_phi_phi - c.transform).abs() < 1e-9 * c.transform.abs().max(1.0));
            assert!(c.amplified && c.pass);
        }
        let rec = KernelRecipe::untempered(0.4, 1600).unwrap();
        assert_eq!(rec.m, 2);
        let set = [0, 2, 4, 6, 8];
        let c = verify_inequality_chain(&g, &es, 9, &set, &rec).unwrap();
        assert!((c.mass - 0.5).abs() < 1e-12);
        assert!(c.k_phi_phi >= 3.0 - 1e-8);
        assert!(c.eq5_holds && c.eq7_holds && c.eq8_holds && c.implied_holds && c.pass);
    }

    #[test]
    fn chain_guards() {
        let g = petersen();
        let es = eigensystem(&g).unwrap();
        let rec = KernelRecipe::untempered(0.4, 1600).unwrap();
        assert!(matches!(
            verify_inequality_chain(&g, &es, 9, &[0, 1], &rec),
            Err(DelocError::MassBelowEpsilon { .. })
        ));
        assert!(matches!(
            verify_inequality_chain(&g, &es, 5, &(0..10).collect::<Vec<_>>(), &rec),
            Err(DelocError::RecipeMismatch { .. })
        ));
    }

    #[test]
    fn theorem_bound_values() {
        let t = theorem_bound(0.5, 0.5, 1.0, 0, 2).unwrap();
        assert_eq!(t.delta, 1.0 / 1024.0);
        assert_eq!(t.bound, 1.0);
        assert!(t.vacuous);
        assert_eq!(theorem_bound(1.0, 0.5, 1.0, 10, 2).unwrap().delta, 1.0 / 256.0);
        let t = theorem_bound(1.0, 0.5, 1.0, 2560, 2).unwrap();
        assert!((t.bound - 1024.0).abs() < 1e-9);
        assert!(!t.vacuous);
        assert!(matches!(theorem_bound(0.5, 0.5, 2.0, 5, 2), Err(DelocError::BadExponent(_))));
        assert!(matches!(theorem_bound(0.5, 0.5, 0.5, 5, 2), Err(DelocError::BadExponent(_))));
        assert!(theorem_bound(0.5, 0.5, 1.999, 5, 2).unwrap().delta > 0.9);
    }

    #[test]
    fn petersen_survey() {
        let rep = full_survey(&petersen(), &SurveyOptions::new(0.3, 1.0)).unwrap();
        assert_eq!(rep.schema, 1);
        assert_eq!(rep.rows.len(), 10);
        assert!(rep.aggregate.pass);
        assert_eq!(rep.n_recipe, recipe_radius(0.3, rep.n_certified));
        assert_eq!(rep.eigenspaces.len(), 2);
        assert!(rep.theorem.unwrap().vacuous);
        assert!(rep.annotations.iter().any(|a| a.starts_with("bound vacuous")));
        for row in &rep.rows {
            assert!(row.e_min >= 1);
            assert!(row.mass_at_e_min >= 0.3 - MASS_TOL && row.mass_below_e_min < 0.3);
        }
    }

    #[test]
    fn no_decay_graph_is_vacuous() {
        // K4: every sphere beyond radius 1 is empty of new vertices
        let mut opts = SurveyOptions::new(0.5, 1.0);
        opts.n_override = Some(0);
        let rep = full_survey(&complete_k4(), &opts).unwrap();
        assert_eq!(rep.n_certified, 0);
        assert!(rep.annotations.iter().any(|a| a.starts_with("bound vacuous")));
    }
}
