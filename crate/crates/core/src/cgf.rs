//! Cumulant-generating functions on finite probability spaces.
//!
//! A model is `k` atoms `x_i ∈ R^d` with weights `μ_i`. A coefficient vector
//! `a ∈ R^d` maps to the random variable `T(a)_i = ⟨a, x_i⟩`; these span the
//! feature space `K(μ) ⊂ R^k`. On it
//!
//! ```text
//! V(T) = ln Σ μ_i exp(T_i),     p(T) = Σ μ_i max(-T_i, 0),
//! W*(y) = sup_a ⟨y, T(a)⟩ - V(T(a)).
//! ```
//!
//! All exponential moments go through a max-shifted log-sum-exp.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::asymnorm::WindowRule;
use crate::error::{check_dim, check_finite, Error, Result};
use crate::par;
use crate::rng;
use crate::smoothness::{right_gateaux_estimate, DerivativeEstimate, Schedule};
use crate::vecops::{add_scaled, dot, euclid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgfModel {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl CgfModel {
    /// Checks shape, finiteness and that the weights are a probability
    /// vector. Mean zero is checked by [`validate_model`].
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let m = CgfModel { atoms, weights };
        m.check_shape()?;
        Ok(m)
    }

    fn check_shape(&self) -> Result<()> {
        let k = self.atoms.len();
        if k < 2 {
            return Err(Error::InvalidModel("need at least two atoms".into()));
        }
        check_dim(k, self.weights.len())?;
        let d = self.atoms[0].len();
        if d == 0 {
            return Err(Error::InvalidModel(
                "atoms must have positive dimension".into(),
            ));
        }
        for a in &self.atoms {
            check_dim(d, a.len())?;
            check_finite(a, "atom")?;
        }
        check_finite(&self.weights, "weights")?;
        if let Some(w) = self.weights.iter().find(|w| **w <= 0.0) {
            return Err(Error::InvalidModel(format!("nonpositive weight {w}")));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("weights sum to {s}, not 1")));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: CgfModel = serde_json::from_str(s)?;
        m.check_shape()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    /// Two atoms `±1` with equal weight.
    pub fn two_atom() -> Self {
        CgfModel::new(vec![vec![1.0], vec![-1.0]], vec![0.5, 0.5]).expect("valid")
    }

    /// Seeded model with `k` Gaussian atoms in `R^d` and random weights,
    /// recentred to mean zero.
    pub fn random(k: usize, d: usize, seed: u64) -> Result<Self> {
        let mut r = rng::seeded(seed);
        let raw = rng::uniform_vec(&mut r, k, 0.2, 1.0);
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        // Absorb the rounding so the weights sum to 1 to the last bit.
        let drift = 1.0 - weights.iter().sum::<f64>();
        weights[0] += drift;
        let mut atoms: Vec<Vec<f64>> = (0..k).map(|_| rng::gaussian_vec(&mut r, d)).collect();
        for _ in 0..2 {
            let mean = weighted_mean(&atoms, &weights);
            for a in &mut atoms {
                for (v, m) in a.iter_mut().zip(&mean) {
                    *v -= m;
                }
            }
        }
        CgfModel::new(atoms, weights)
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    /// `T(a)`, the random variable with coefficients `a`.
    pub fn features(&self, a: &[f64]) -> Vec<f64> {
        self.atoms.iter().map(|x| dot(x, a)).collect()
    }

    /// `Σ y_i x_i`, the adjoint of [`features`](Self::features).
    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (x, &w) in self.atoms.iter().zip(y) {
            for (o, v) in out.iter_mut().zip(x) {
                *o += w * v;
            }
        }
        out
    }
}

fn weighted_mean(atoms: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; atoms[0].len()];
    for (a, &wi) in atoms.iter().zip(w) {
        for (mv, v) in m.iter_mut().zip(a) {
            *mv += wi * v;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelCertificate {
    /// Euclidean norm of `Σ μ_i x_i`.
    pub mean_residual: f64,
    /// `min_a ‖T(a) - 1‖` in `L²(μ)`; positive when constants are not
    /// features.
    pub constant_residual: f64,
    /// Pairs of identical atoms; allowed, only reported.
    pub duplicate_atoms: Vec<(usize, usize)>,
}

pub const MEAN_TOL: f64 = 1e-12;
pub const CONSTANT_TOL: f64 = 1e-8;

/// Mean zero and constant exclusion, with residuals.
pub fn validate_model(model: &CgfModel) -> Result<ModelCertificate> {
    model.check_shape()?;
    let mean_residual = euclid(&weighted_mean(&model.atoms, &model.weights));
    if mean_residual > MEAN_TOL {
        return Err(Error::InvalidModel(format!(
            "mean is not zero: residual {mean_residual:e}"
        )));
    }
    let sw: Vec<f64> = model.weights.iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(model.k(), model.dim(), |i, j| sw[i] * model.atoms[i][j]);
    let b = DVector::from_column_slice(&sw);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let constant_residual = (&a * coef - &b).norm();
    if constant_residual < CONSTANT_TOL {
        return Err(Error::InvalidModel(
            "constants lie in the feature span".into(),
        ));
    }
    let mut duplicate_atoms = Vec::new();
    for i in 0..model.k() {
        for j in i + 1..model.k() {
            if model.atoms[i] == model.atoms[j] {
                duplicate_atoms.push((i, j));
            }
        }
    }
    Ok(ModelCertificate {
        mean_residual,
        constant_residual,
        duplicate_atoms,
    })
}

/// `ln Σ μ_i exp(t_i)` with the max shifted out.
pub fn log_mean_exp(weights: &[f64], t: &[f64]) -> f64 {
    let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = weights.iter().zip(t).map(|(w, v)| w * (v - m).exp()).sum();
    m + s.ln()
}

/// Gibbs weights `μ_i exp(t_i) / Σ μ_j exp(t_j)`.
pub fn gibbs_weights(weights: &[f64], t: &[f64]) -> Vec<f64> {
    let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = weights
        .iter()
        .zip(t)
        .map(|(w, v)| w * (v - m).exp())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// `V(T(a))`.
pub fn cgf_value(model: &CgfModel, a: &[f64]) -> Result<f64> {
    check_dim(model.dim(), a.len())?;
    check_finite(a, "coefficients")?;
    Ok(log_mean_exp(&model.weights, &model.features(a)))
}

/// Gibbs mean of the atoms.
pub fn cgf_gradient(model: &CgfModel, a: &[f64]) -> Result<Vec<f64>> {
    check_dim(model.dim(), a.len())?;
    check_finite(a, "coefficients")?;
    Ok(gradient_unchecked(model, a))
}

fn gradient_unchecked(model: &CgfModel, a: &[f64]) -> Vec<f64> {
    let g = gibbs_weights(&model.weights, &model.features(a));
    weighted_mean(&model.atoms, &g)
}

/// Gibbs covariance of the atoms, row-major `d × d`.
pub fn cgf_hessian(model: &CgfModel, a: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_dim(model.dim(), a.len())?;
    check_finite(a, "coefficients")?;
    let h = hessian_matrix(model, a);
    Ok((0..h.nrows())
        .map(|i| h.row(i).iter().copied().collect())
        .collect())
}

fn hessian_matrix(model: &CgfModel, a: &[f64]) -> DMatrix<f64> {
    let d = model.dim();
    let g = gibbs_weights(&model.weights, &model.features(a));
    let mean = weighted_mean(&model.atoms, &g);
    let mut h = DMatrix::zeros(d, d);
    for (x, &w) in model.atoms.iter().zip(&g) {
        let c = DVector::from_iterator(d, x.iter().zip(&mean).map(|(v, m)| v - m));
        h += w * &c * c.transpose();
    }
    h
}

/// Smallest eigenvalue of the Hessian.
pub fn hessian_min_eigenvalue(model: &CgfModel, a: &[f64]) -> Result<f64> {
    check_dim(model.dim(), a.len())?;
    let e = SymmetricEigen::new(hessian_matrix(model, a));
    Ok(e.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// `Σ μ_i max(-T_i, 0)`.
pub fn p_measure(model: &CgfModel, t: &[f64]) -> Result<f64> {
    check_dim(model.k(), t.len())?;
    Ok(model
        .weights
        .iter()
        .zip(t)
        .map(|(w, v)| w * (-v).max(0.0))
        .sum())
}

/// `Σ μ_i |T_i|`.
pub fn l1_measure(model: &CgfModel, t: &[f64]) -> Result<f64> {
    check_dim(model.k(), t.len())?;
    Ok(model.weights.iter().zip(t).map(|(w, v)| w * v.abs()).sum())
}

fn check_dual(model: &CgfModel, y: &[f64]) -> Result<()> {
    check_dim(model.k(), y.len())?;
    check_finite(y, "y")?;
    if let Some(i) = y.iter().position(|v| *v < 0.0) {
        let mut ray = vec![0.0; y.len()];
        ray[i] = 1.0;
        return Err(Error::NotInDualCone { ray });
    }
    Ok(())
}

/// Unit directions in coefficient space used for the recession test.
pub fn ray_directions(d: usize, seed: u64) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..720)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / 720.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let n = 4000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut r = rng::seeded(seed);
            let mut out: Vec<Vec<f64>> = (0..d)
                .flat_map(|i| {
                    [1.0, -1.0].map(|s| {
                        let mut e = vec![0.0; d];
                        e[i] = s;
                        e
                    })
                })
                .collect();
            while out.len() < 8192 {
                let z = rng::gaussian_vec(&mut r, d);
                let n = euclid(&z);
                if n > 0.0 {
                    out.push(z.iter().map(|v| v / n).collect());
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonVerdict {
    pub epsilon: f64,
    pub coercive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityVerdict {
    /// `min_u (max_i T_i(u) - ⟨y, T(u)⟩) / ‖T(u)‖_1` over the sampled
    /// rays: every `ε` below it passes the ray test.
    pub margin: f64,
    /// The ray attaining the margin.
    pub worst_direction: Vec<f64>,
    pub per_epsilon: Vec<EpsilonVerdict>,
    /// Largest passing `ε` from the requested list.
    pub largest_passing: Option<f64>,
    pub coercive: bool,
}

/// Ray threshold below which the recession slope is treated as zero.
pub const RAY_TOL: f64 = 1e-9;

/// Recession test for `sup_a ε‖T(a)‖_1 - V(T(a)) + ⟨y, T(a)⟩ < ∞`.
///
/// Along a ray `a = r u` the bracket grows like
/// `r (ε‖T(u)‖_1 + ⟨y, T(u)⟩ - max_i T_i(u))`, so it stays bounded iff the
/// slope is negative on every ray with `T(u) ≠ 0`.
pub fn coercivity_check(
    model: &CgfModel,
    y: &[f64],
    epsilons: &[f64],
) -> Result<CoercivityVerdict> {
    check_dual(model, y)?;
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "epsilon must be positive, got {e}"
        )));
    }
    let dirs = ray_directions(model.dim(), 0);
    let ratios = par::map_slice(&dirs, |u| {
        let t = model.features(u);
        let l1: f64 = model.weights.iter().zip(&t).map(|(w, v)| w * v.abs()).sum();
        if l1 < 1e-12 {
            return f64::INFINITY;
        }
        let max_t = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (max_t - dot(y, &t)) / l1
    });
    let (mut wi, mut margin) = (0usize, f64::INFINITY);
    for (i, &r) in ratios.iter().enumerate() {
        if r < margin {
            wi = i;
            margin = r;
        }
    }
    let per_epsilon: Vec<EpsilonVerdict> = epsilons
        .iter()
        .map(|&epsilon| EpsilonVerdict {
            epsilon,
            coercive: epsilon < margin - RAY_TOL,
        })
        .collect();
    let largest_passing = per_epsilon
        .iter()
        .filter(|v| v.coercive)
        .map(|v| v.epsilon)
        .fold(None, |acc: Option<f64>, e| {
            Some(acc.map_or(e, |a| a.max(e)))
        });
    Ok(CoercivityVerdict {
        margin,
        worst_direction: dirs[wi].clone(),
        per_epsilon,
        largest_passing,
        coercive: margin > RAY_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugateOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Certified gradient norm at the optimum.
    pub grad_tol: f64,
    /// Multi-start agreement of the maximisers in feature space.
    pub agree_tol: f64,
}

impl Default for ConjugateOptions {
    fn default() -> Self {
        ConjugateOptions {
            starts: 4,
            seed: 0,
            max_iter: 200,
            grad_tol: 1e-10,
            agree_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CgfConjugateReport {
    pub y: Vec<f64>,
    pub value: f64,
    /// Coefficients of the maximiser.
    pub coefficients: Vec<f64>,
    /// The maximiser `T` as a vector over the atoms.
    pub t: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Largest feature-space distance between multi-start maximisers.
    pub start_spread: f64,
    pub coercivity: CoercivityVerdict,
}

#[derive(Debug, Clone, PartialEq)]
struct Ascent {
    a: Vec<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
}

/// Damped Newton ascent on the concave `a ↦ ⟨y, T(a)⟩ - V(T(a))`.
fn newton_ascent(model: &CgfModel, ty: &[f64], start: Vec<f64>, opts: &ConjugateOptions) -> Ascent {
    let obj = |a: &[f64]| dot(ty, a) - log_mean_exp(&model.weights, &model.features(a));
    let grad = |a: &[f64]| -> Vec<f64> {
        let m = gradient_unchecked(model, a);
        ty.iter().zip(&m).map(|(u, v)| u - v).collect()
    };
    let mut a = start;
    let mut fa = obj(&a);
    let mut g = grad(&a);
    let mut it = 0;
    while it < opts.max_iter && euclid(&g) > opts.grad_tol * 1e-2 {
        it += 1;
        let h = hessian_matrix(model, &a);
        let svd = h.svd(true, true);
        let dir: Vec<f64> = match svd.solve(&DVector::from_column_slice(&g), 1e-14) {
            Ok(s) if s.iter().all(|v| v.is_finite()) => s.iter().copied().collect(),
            _ => g.clone(),
        };
        let dir = if dot(&dir, &g) > 0.0 { dir } else { g.clone() };
        let n = euclid(&dir);
        let mut step = if n > 5.0 { 5.0 / n } else { 1.0 };
        let mut improved = false;
        let gn = euclid(&g);
        while step > 1e-16 {
            let cand = add_scaled(&a, step, &dir);
            let fc = obj(&cand);
            // Near the optimum the value gain drops below rounding, so a
            // step that is flat in value but shrinks the gradient is taken.
            let flat = fc >= fa - 1e-14 * (1.0 + fa.abs());
            let gc = grad(&cand);
            if fc > fa || (flat && euclid(&gc) < gn) {
                improved = true;
                a = cand;
                fa = fc;
                g = gc;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ascent {
        grad_norm: euclid(&g),
        a,
        value: fa,
        iterations: it,
    }
}

/// Feature-space distance after removing the `μ`-mean of the difference.
fn constant_mode_distance(model: &CgfModel, s: &[f64], t: &[f64]) -> f64 {
    let diff: Vec<f64> = s.iter().zip(t).map(|(a, b)| a - b).collect();
    let c: f64 = model.weights.iter().zip(&diff).map(|(w, v)| w * v).sum();
    diff.iter().map(|v| (v - c).abs()).fold(0.0, f64::max)
}

fn solve(model: &CgfModel, y: &[f64], opts: &ConjugateOptions) -> Result<(Ascent, Vec<Ascent>)> {
    let ty = model.adjoint(y);
    let mut r = rng::seeded(opts.seed);
    let mut starts = vec![vec![0.0; model.dim()]];
    while starts.len() < opts.starts.max(1) {
        starts.push(rng::gaussian_vec(&mut r, model.dim()));
    }
    let runs = par::map_slice(&starts, |s| newton_ascent(model, &ty, s.clone(), opts));
    let best = runs
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start")
        .clone();
    if !best.value.is_finite() || euclid(&best.a) > 1e8 {
        return Err(Error::NonCoercive(format!(
            "ascent diverged with |a| = {:e}",
            euclid(&best.a)
        )));
    }
    if best.grad_norm > opts.grad_tol {
        return Err(Error::Optimizer(format!(
            "gradient norm {:e} above {:e}",
            best.grad_norm, opts.grad_tol
        )));
    }
    Ok((best, runs))
}

/// `W*(y)` with its maximiser. Fails with [`Error::NonCoercive`] when the
/// ray test finds a direction of non-negative slope.
pub fn cgf_conjugate(
    model: &CgfModel,
    y: &[f64],
    opts: &ConjugateOptions,
) -> Result<CgfConjugateReport> {
    validate_model(model)?;
    let coercivity = coercivity_check(model, y, &[])?;
    if !coercivity.coercive {
        return Err(Error::NonCoercive(format!(
            "ray slope margin {:e} along {:?}",
            coercivity.margin, coercivity.worst_direction
        )));
    }
    let (best, runs) = solve(model, y, opts)?;
    let t = model.features(&best.a);
    let start_spread = runs
        .iter()
        .map(|r| constant_mode_distance(model, &model.features(&r.a), &t))
        .fold(0.0, f64::max);
    if start_spread > opts.agree_tol {
        return Err(Error::Optimizer(format!(
            "multi-start maximisers disagree by {start_spread:e}"
        )));
    }
    Ok(CgfConjugateReport {
        y: y.to_vec(),
        value: best.value,
        coefficients: best.a,
        t,
        gradient_norm: best.grad_norm,
        iterations: best.iterations,
        start_spread,
        coercivity,
    })
}

/// `W*(y)` without the coercivity pre-check: `+∞` outside the cone or when
/// the ascent fails. Used for difference quotients.
pub fn cgf_conjugate_value(model: &CgfModel, y: &[f64]) -> f64 {
    if check_dual(model, y).is_err() {
        return f64::INFINITY;
    }
    let opts = ConjugateOptions {
        starts: 1,
        ..Default::default()
    };
    solve(model, y, &opts)
        .map(|(b, _)| b.value)
        .unwrap_or(f64::INFINITY)
}

/// The constant-mode interval `I`, with `T = S + sup I`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstantInterval {
    /// Constants are not features, so `I = {0}`; the certificate residual
    /// is recorded.
    Degenerate { constant_residual: f64 },
}

impl ConstantInterval {
    pub fn sup(&self) -> f64 {
        match self {
            ConstantInterval::Degenerate { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedMinimiser {
    /// Base minimiser `S` of `V - y` over the features.
    pub s: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub interval: ConstantInterval,
    /// `T = S + sup I`.
    pub t: Vec<f64>,
    /// Largest deviation of any start from `S` after removing constants.
    pub max_deviation: f64,
    pub starts: usize,
    pub value: f64,
}

/// Multi-start minimisation of `V - y` over the feature space.
pub fn tilted_minimise(
    model: &CgfModel,
    y: &[f64],
    starts: usize,
    seed: u64,
) -> Result<TiltedMinimiser> {
    let cert = validate_model(model)?;
    let opts = ConjugateOptions {
        starts: starts.max(1),
        seed,
        agree_tol: f64::INFINITY,
        ..Default::default()
    };
    let rep = cgf_conjugate(model, y, &opts)?;
    let (_, runs) = solve(model, y, &opts)?;
    let s = rep.t.clone();
    let max_deviation = runs
        .iter()
        .map(|r| constant_mode_distance(model, &model.features(&r.a), &s))
        .fold(0.0, f64::max);
    if max_deviation > 1e-6 {
        return Err(Error::Optimizer(format!(
            "minimisers differ by more than a constant: {max_deviation:e}"
        )));
    }
    let interval = if cert.constant_residual >= CONSTANT_TOL {
        ConstantInterval::Degenerate {
            constant_residual: cert.constant_residual,
        }
    } else {
        return Err(Error::InvalidModel(
            "constants lie in the feature span".into(),
        ));
    };
    let shift = interval.sup();
    let t = s.iter().map(|v| v + shift).collect();
    Ok(TiltedMinimiser {
        s,
        coefficients: rep.coefficients,
        interval,
        t,
        max_deviation,
        starts: opts.starts,
        value: -rep.value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateVerdict {
    pub index: usize,
    pub limsup: f64,
    pub converges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PbarWeakVerdict {
    pub coordinates: Vec<CoordinateVerdict>,
    pub converges: bool,
}

/// Weak convergence for the reversed norm: the dual cone is the
/// nonnegative orthant, so it reduces to `limsup (T_n,i - T_i) ≤ tol` for
/// every atom with positive weight, over the trailing window.
pub fn pbar_weak_check(
    model: &CgfModel,
    trace: &[Vec<f64>],
    limit: &[f64],
    tol: f64,
) -> Result<PbarWeakVerdict> {
    check_dim(model.k(), limit.len())?;
    if trace.len() < 3 {
        return Err(Error::InvalidSequence("need at least 3 terms".into()));
    }
    for t in trace {
        check_dim(model.k(), t.len())?;
    }
    let window = WindowRule::default();
    let coordinates: Vec<CoordinateVerdict> = (0..model.k())
        .filter(|&i| model.weights[i] > 0.0)
        .map(|i| {
            let d: Vec<f64> = trace.iter().map(|t| t[i] - limit[i]).collect();
            let limsup = window.tail_max(&d);
            CoordinateVerdict {
                index: i,
                limsup,
                converges: limsup <= tol,
            }
        })
        .collect();
    let converges = coordinates.iter().all(|c| c.converges);
    Ok(PbarWeakVerdict {
        coordinates,
        converges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CgfStrategy {
    Descent,
    RandomPerturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CgfTrace {
    pub strategy: CgfStrategy,
    pub seed: u64,
    /// `T_n` over the atoms.
    pub points: Vec<Vec<f64>>,
    /// `V(T_n) - ⟨y, T_n⟩`.
    pub values: Vec<f64>,
    pub minimising: bool,
}

/// Minimising traces of `V - y` toward the tilted minimiser: gradient
/// descent from seeded starts (Barzilai-Borwein trial steps, Armijo
/// backtracking), or the minimiser plus noise shrinking like `1/n²`.
pub fn gen_cgf_traces(
    model: &CgfModel,
    y: &[f64],
    target: &TiltedMinimiser,
    strategy: CgfStrategy,
    count: usize,
    len: usize,
    seed: u64,
) -> Result<Vec<CgfTrace>> {
    check_dual(model, y)?;
    if len < 3 {
        return Err(Error::InvalidSequence(
            "traces need at least 3 terms".into(),
        ));
    }
    let ty = model.adjoint(y);
    let h = |a: &[f64]| log_mean_exp(&model.weights, &model.features(a)) - dot(&ty, a);
    Ok(par::map_range(count, |k| {
        let trace_seed =
            seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((k as u64) << 8 | strategy as u64);
        let mut r = rng::seeded(trace_seed);
        let coeffs: Vec<Vec<f64>> = match strategy {
            CgfStrategy::Descent => {
                let mut a = rng::gaussian_vec(&mut r, model.dim());
                let mut out = Vec::with_capacity(len);
                let grad = |a: &[f64]| -> Vec<f64> {
                    gradient_unchecked(model, a)
                        .iter()
                        .zip(&ty)
                        .map(|(m, u)| m - u)
                        .collect()
                };
                let mut g = grad(&a);
                let mut step = 1.0;
                for _ in 0..len {
                    out.push(a.clone());
                    let gg = dot(&g, &g);
                    if gg == 0.0 {
                        continue;
                    }
                    let fa = h(&a);
                    let mut t = step;
                    let next = loop {
                        let cand = add_scaled(&a, -t, &g);
                        if h(&cand) <= fa - 0.5 * t * gg || t < 1e-16 {
                            break cand;
                        }
                        t *= 0.5;
                    };
                    // Barzilai-Borwein trial step for the next iteration.
                    let gn = grad(&next);
                    let s: Vec<f64> = next.iter().zip(&a).map(|(x, y)| x - y).collect();
                    let dg: Vec<f64> = gn.iter().zip(&g).map(|(x, y)| x - y).collect();
                    let sy = dot(&s, &dg);
                    step = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * t };
                    a = next;
                    g = gn;
                }
                out
            }
            CgfStrategy::RandomPerturbed => (1..=len)
                .map(|n| {
                    let z = rng::gaussian_vec(&mut r, model.dim());
                    add_scaled(&target.coefficients, 0.5 / (n * n) as f64, &z)
                })
                .collect(),
        };
        let values: Vec<f64> = coeffs.iter().map(|a| h(a)).collect();
        let minimising = (values[len - 1] - target.value).abs() <= 1e-6;
        CgfTrace {
            strategy,
            seed: trace_seed,
            points: coeffs.iter().map(|a| model.features(a)).collect(),
            values,
            minimising,
        }
    }))
}

/// Right derivative of `W*` at `y` along `ψ` by extrapolated quotients.
pub fn conjugate_derivative(
    model: &CgfModel,
    y: &[f64],
    psi: &[f64],
    tol: f64,
) -> Result<DerivativeEstimate> {
    check_dual(model, y)?;
    check_dim(model.k(), psi.len())?;
    right_gateaux_estimate(
        |z| cgf_conjugate_value(model, z),
        y,
        psi,
        &Schedule::default(),
        tol,
    )
}

/// Coercive `y`: the Gibbs weights at a seeded coefficient vector, whose
/// tilted minimiser is that vector's feature.
pub fn gibbs_dual_point(model: &CgfModel, seed: u64, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng::seeded(seed);
    let a: Vec<f64> = rng::gaussian_vec(&mut r, model.dim())
        .iter()
        .map(|v| scale * v)
        .collect();
    (gibbs_weights(&model.weights, &model.features(&a)), a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub samples: usize,
    /// `max |V(T) - ln Σ μ_i e^{T_i}|` between the two evaluation paths.
    pub value_identity: f64,
    /// `min Σ μ_i T_i`, expected `≥ -1e-10`.
    pub min_mean: f64,
    /// `min V(T) - max(ln ‖T‖_1, 0)`, expected `≥ -1e-9`.
    pub min_growth_slack: f64,
    /// `min V(T)`, expected `≥ 0`.
    pub min_value: f64,
}

/// Seeded checks of the listed properties of `V` on the feature space.
pub fn property_checks(model: &CgfModel, samples: usize, seed: u64) -> PropertyReport {
    let vals = par::map_range(samples, |j| {
        let mut r = rng::substream(seed, j as u64);
        let scale = 10f64.powf(rng::uniform_vec(&mut r, 1, -2.0, 1.5)[0]);
        let a: Vec<f64> = rng::gaussian_vec(&mut r, model.dim())
            .iter()
            .map(|v| scale * v)
            .collect();
        let t = model.features(&a);
        let v = log_mean_exp(&model.weights, &t);
        let direct = model
            .weights
            .iter()
            .zip(&t)
            .map(|(w, x)| w * x.exp())
            .sum::<f64>()
            .ln();
        let ident = if direct.is_finite() {
            (v - direct).abs()
        } else {
            0.0
        };
        let mean: f64 = model.weights.iter().zip(&t).map(|(w, x)| w * x).sum();
        let l1: f64 = model.weights.iter().zip(&t).map(|(w, x)| w * x.abs()).sum();
        let bound = if l1 > 0.0 { l1.ln().max(0.0) } else { 0.0 };
        (ident, mean, v - bound, v)
    });
    PropertyReport {
        samples,
        value_identity: vals.iter().map(|v| v.0).fold(0.0, f64::max),
        min_mean: vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min),
        min_growth_slack: vals.iter().map(|v| v.2).fold(f64::INFINITY, f64::min),
        min_value: vals.iter().map(|v| v.3).fold(f64::INFINITY, f64::min),
    }
}
