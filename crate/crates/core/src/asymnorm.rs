//! Asymmetric norms on `R^n`.
//!
//! An asymmetric norm `p` is nonnegative, positively homogeneous and
//! subadditive, with `p(x) = p(-x) = 0` only at the origin. Its reversal
//! `p̄(x) = p(-x)` is again an asymmetric norm and `max(p, p̄)` is an ordinary
//! norm.
//!
//! Linear functionals are split into two cones: those bounded above on the
//! `p`-unit ball ([`Side::Primal`]) and those bounded above on the `p̄`-unit
//! ball ([`Side::Conjugate`]). The second cone is the negation of the first.
//!
//! For the closed-form families the cones are orthant-like and decided
//! exactly. The conjugate-side cone of the half-Euclidean norm is the closed
//! nonpositive orthant: zero coordinates, and the zero functional, satisfy
//! the boundedness criterion.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::rng;
use crate::vecops::{dot, euclid};

/// Which of the two dual cones a functional is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Functionals bounded above on `{x : p(x) ≤ 1}`.
    Primal,
    /// Functionals bounded above on `{x : p̄(x) ≤ 1}`.
    Conjugate,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Primal => Side::Conjugate,
            Side::Conjugate => Side::Primal,
        }
    }
}

/// Sign constraint on one coordinate of an orthant-shaped cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisSign {
    Any,
    NonNeg,
    NonPos,
    Zero,
}

impl AxisSign {
    fn admits(self, v: f64, tol: f64) -> bool {
        match self {
            AxisSign::Any => true,
            AxisSign::NonNeg => v >= -tol,
            AxisSign::NonPos => v <= tol,
            AxisSign::Zero => v.abs() <= tol,
        }
    }

    fn negate(self) -> AxisSign {
        match self {
            AxisSign::NonNeg => AxisSign::NonPos,
            AxisSign::NonPos => AxisSign::NonNeg,
            s => s,
        }
    }

    fn from_allowed(pos: bool, neg: bool) -> AxisSign {
        match (pos, neg) {
            (true, true) => AxisSign::Any,
            (true, false) => AxisSign::NonNeg,
            (false, true) => AxisSign::NonPos,
            (false, false) => AxisSign::Zero,
        }
    }
}

/// A product of per-coordinate sign constraints (a closed orthant face).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignPattern(pub Vec<AxisSign>);

impl SignPattern {
    pub fn uniform(dim: usize, sign: AxisSign) -> Self {
        SignPattern(vec![sign; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.0.len() == v.len() && self.0.iter().zip(v).all(|(s, &x)| s.admits(x, tol))
    }

    pub fn negate(&self) -> SignPattern {
        SignPattern(self.0.iter().map(|s| s.negate()).collect())
    }

    /// Maps an arbitrary vector into the cone by flipping or zeroing
    /// coordinates.
    pub fn fold(&self, v: &[f64]) -> Vec<f64> {
        self.0
            .iter()
            .zip(v)
            .map(|(s, &x)| match s {
                AxisSign::Any => x,
                AxisSign::NonNeg => x.abs(),
                AxisSign::NonPos => -x.abs(),
                AxisSign::Zero => 0.0,
            })
            .collect()
    }
}

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A user-supplied asymmetric norm given only through its evaluator.
#[derive(Clone)]
pub struct CustomNorm {
    name: String,
    eval: Arc<EvalFn>,
}

impl CustomNorm {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNorm")
            .field("name", &self.name)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum NormFamily {
    /// `p(x) = sqrt(Σ max(0, x_i)²)`.
    HalfEuclidean,
    /// `p(x) = Σ a_i max(x_i, 0) + b_i max(-x_i, 0)`.
    WeightedAsym {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    Custom(CustomNorm),
}

/// An asymmetric norm on `R^dim`.
#[derive(Debug, Clone)]
pub struct AsymNorm {
    family: NormFamily,
    dim: usize,
}

/// Outcome of a dual-cone membership test.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Membership {
    /// `φ(x) ≤ bound · p(x)` for all `x`. `exact` is false when the bound is
    /// a sampled estimate.
    Member { bound: f64, exact: bool },
    /// `φ` grows without bound along `ray` while the norm of `ray` is zero.
    Outside { ray: Vec<f64> },
    /// Sampling could neither certify a bound nor find an unbounded ray.
    Unknown { best_ratio: f64 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }
}

/// Tuning for sampled membership and dual-norm estimates of custom norms.
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub samples: usize,
    pub seed: u64,
    pub null_tol: f64,
    /// Ratios above this are treated as evidence of unboundedness.
    pub ratio_cap: f64,
    /// Relative agreement required between the half-sample and full-sample
    /// estimates.
    pub stability: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            samples: 4096,
            seed: 0x5eed,
            null_tol: 1e-12,
            ratio_cap: 1e8,
            stability: 1e-6,
        }
    }
}

/// Value of a dual norm; `resolution` is set for sampled estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualNorm {
    pub value: f64,
    pub resolution: Option<f64>,
}

impl AsymNorm {
    pub fn half_euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNorm("dimension must be positive".into()));
        }
        Ok(AsymNorm {
            family: NormFamily::HalfEuclidean,
            dim,
        })
    }

    pub fn weighted(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidNorm("dimension must be positive".into()));
        }
        check_dim(a.len(), b.len())?;
        check_finite(&a, "norm weights")?;
        check_finite(&b, "norm weights")?;
        for (i, (&ai, &bi)) in a.iter().zip(&b).enumerate() {
            if ai < 0.0 || bi < 0.0 {
                return Err(Error::InvalidNorm(format!(
                    "weights must be nonnegative (coordinate {i})"
                )));
            }
            if ai + bi <= 0.0 {
                return Err(Error::InvalidNorm(format!(
                    "a_i + b_i must be positive (coordinate {i})"
                )));
            }
        }
        let dim = a.len();
        Ok(AsymNorm {
            family: NormFamily::WeightedAsym { a, b },
            dim,
        })
    }

    /// Wraps an evaluator. The axioms are not checked here; see
    /// [`AsymNorm::check_axioms`].
    pub fn custom<F>(dim: usize, name: impl Into<String>, eval: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidNorm("dimension must be positive".into()));
        }
        Ok(AsymNorm {
            family: NormFamily::Custom(CustomNorm {
                name: name.into(),
                eval: Arc::new(eval),
            }),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &NormFamily {
        &self.family
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.family, NormFamily::Custom(_))
    }

    /// `p(x)` without input validation.
    pub(crate) fn p(&self, x: &[f64]) -> f64 {
        match &self.family {
            NormFamily::HalfEuclidean => x
                .iter()
                .map(|&v| {
                    let pos = v.max(0.0);
                    pos * pos
                })
                .sum::<f64>()
                .sqrt(),
            NormFamily::WeightedAsym { a, b } => x
                .iter()
                .zip(a.iter().zip(b))
                .map(|(&v, (&ai, &bi))| ai * v.max(0.0) + bi * (-v).max(0.0))
                .sum(),
            NormFamily::Custom(c) => (c.eval)(x),
        }
    }

    /// `p̄(x) = p(-x)` without input validation.
    pub(crate) fn p_bar(&self, x: &[f64]) -> f64 {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        self.p(&neg)
    }

    /// Norm on the given side: `p` for [`Side::Primal`], `p̄` otherwise.
    pub(crate) fn side_norm(&self, side: Side, x: &[f64]) -> f64 {
        match side {
            Side::Primal => self.p(x),
            Side::Conjugate => self.p_bar(x),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        check_finite(x, "point")
    }

    /// `p(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.p(x))
    }

    /// `p̄(x) = p(-x)`.
    pub fn eval_conjugate(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.p_bar(x))
    }

    /// `max(p(x), p(-x))`, an ordinary norm.
    pub fn eval_symmetrized(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.p(x).max(self.p_bar(x)))
    }

    /// Norm of `x` on the chosen side.
    pub fn eval_side(&self, side: Side, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.side_norm(side, x))
    }

    /// The reversed norm `p̄` as a norm in its own right.
    pub fn reversed(&self) -> AsymNorm {
        let family = match &self.family {
            NormFamily::HalfEuclidean => {
                let inner = self.clone();
                NormFamily::Custom(CustomNorm {
                    name: "reversed half_euclidean".into(),
                    eval: Arc::new(move |x: &[f64]| inner.p_bar(x)),
                })
            }
            NormFamily::WeightedAsym { a, b } => NormFamily::WeightedAsym {
                a: b.clone(),
                b: a.clone(),
            },
            NormFamily::Custom(c) => {
                let inner = c.eval.clone();
                NormFamily::Custom(CustomNorm {
                    name: format!("reversed {}", c.name),
                    eval: Arc::new(move |x: &[f64]| {
                        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                        inner(&neg)
                    }),
                })
            }
        };
        AsymNorm {
            family,
            dim: self.dim,
        }
    }

    /// Closed-form description of the dual cone on `side` as a sign
    /// pattern. `None` for custom norms.
    pub fn dual_cone_pattern(&self, side: Side) -> Option<SignPattern> {
        let primal = match &self.family {
            NormFamily::HalfEuclidean => SignPattern::uniform(self.dim, AxisSign::NonNeg),
            NormFamily::WeightedAsym { a, b } => SignPattern(
                a.iter()
                    .zip(b)
                    .map(|(&ai, &bi)| AxisSign::from_allowed(ai > 0.0, bi > 0.0))
                    .collect(),
            ),
            NormFamily::Custom(_) => return None,
        };
        Some(match side {
            Side::Primal => primal,
            Side::Conjugate => primal.negate(),
        })
    }

    /// Coordinate directions `d` with zero norm on `side`.
    pub fn null_directions(&self, side: Side) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; self.dim];
                d[i] = sign;
                if self.side_norm(side, &d) <= 1e-12 {
                    out.push(d);
                }
            }
        }
        out
    }

    /// Decides whether `phi` is bounded above on the unit ball of `side`.
    pub fn dual_cone_membership(&self, phi: &Functional, side: Side) -> Result<Membership> {
        self.dual_cone_membership_with(phi, side, &SampleOptions::default())
    }

    pub fn dual_cone_membership_with(
        &self,
        phi: &Functional,
        side: Side,
        opts: &SampleOptions,
    ) -> Result<Membership> {
        check_dim(self.dim, phi.dim())?;
        check_finite(phi.coeffs(), "functional")?;
        let c = phi.coeffs();
        if c.iter().all(|&v| v == 0.0) {
            return Ok(Membership::Member {
                bound: 0.0,
                exact: true,
            });
        }
        match &self.family {
            NormFamily::HalfEuclidean => {
                // Primal side: the cone is the nonnegative orthant, dual norm
                // the Euclidean norm. The conjugate side is its negation.
                let sgn = match side {
                    Side::Primal => 1.0,
                    Side::Conjugate => -1.0,
                };
                if let Some(i) = c.iter().position(|&v| sgn * v < 0.0) {
                    let mut ray = vec![0.0; self.dim];
                    ray[i] = -sgn;
                    return Ok(Membership::Outside { ray });
                }
                Ok(Membership::Member {
                    bound: euclid(c),
                    exact: true,
                })
            }
            NormFamily::WeightedAsym { a, b } => {
                let (up, down) = match side {
                    Side::Primal => (a, b),
                    Side::Conjugate => (b, a),
                };
                // The unit ball is a cross-polytope with vertices e_i / up_i
                // and -e_i / down_i; the supremum sits at a vertex.
                let mut bound: f64 = 0.0;
                for i in 0..self.dim {
                    let v = c[i];
                    if v > 0.0 {
                        if up[i] == 0.0 {
                            let mut ray = vec![0.0; self.dim];
                            ray[i] = 1.0;
                            return Ok(Membership::Outside { ray });
                        }
                        bound = bound.max(v / up[i]);
                    } else if v < 0.0 {
                        if down[i] == 0.0 {
                            let mut ray = vec![0.0; self.dim];
                            ray[i] = -1.0;
                            return Ok(Membership::Outside { ray });
                        }
                        bound = bound.max(-v / down[i]);
                    }
                }
                Ok(Membership::Member { bound, exact: true })
            }
            NormFamily::Custom(_) => Ok(self.sampled_membership(c, side, opts)),
        }
    }

    fn sampled_membership(&self, c: &[f64], side: Side, opts: &SampleOptions) -> Membership {
        let mut rng = rng::seeded(opts.seed);
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(opts.samples + 2 * self.dim);
        for i in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; self.dim];
                d[i] = sign;
                dirs.push(d);
            }
        }
        for _ in 0..opts.samples {
            let mut g = rng::gaussian_vec(&mut rng, self.dim);
            let n = euclid(&g);
            g.iter_mut().for_each(|v| *v /= n);
            dirs.push(g);
        }

        let ratio = |d: &[f64]| -> std::result::Result<f64, Vec<f64>> {
            let nd = self.side_norm(side, d);
            let val = dot(c, d);
            if nd <= opts.null_tol * euclid(d) {
                if val > opts.null_tol {
                    return Err(d.to_vec());
                }
                return Ok(f64::NEG_INFINITY);
            }
            Ok(val / nd)
        };

        let estimate = |dirs: &[Vec<f64>]| -> std::result::Result<f64, Vec<f64>> {
            let mut best = f64::NEG_INFINITY;
            let mut best_dir = dirs[0].clone();
            for d in dirs {
                let r = ratio(d)?;
                if r > best {
                    best = r;
                    best_dir = d.clone();
                }
            }
            // Local pattern search around the best direction.
            let mut step = 0.25;
            while step > 1e-9 {
                let mut improved = false;
                for i in 0..self.dim {
                    for sign in [1.0, -1.0] {
                        let mut d = best_dir.clone();
                        d[i] += sign * step;
                        let n = euclid(&d);
                        if n == 0.0 {
                            continue;
                        }
                        d.iter_mut().for_each(|v| *v /= n);
                        let r = ratio(&d)?;
                        if r > best {
                            best = r;
                            best_dir = d;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            Ok(best.max(0.0))
        };

        let half = 2 * self.dim + opts.samples / 2;
        let coarse = match estimate(&dirs[..half]) {
            Ok(v) => v,
            Err(ray) => return Membership::Outside { ray },
        };
        let fine = match estimate(&dirs) {
            Ok(v) => v,
            Err(ray) => return Membership::Outside { ray },
        };
        if fine > opts.ratio_cap || (fine - coarse).abs() > opts.stability * fine.max(1.0) {
            return Membership::Unknown { best_ratio: fine };
        }
        Membership::Member {
            bound: fine,
            exact: false,
        }
    }

    /// `sup { φ(x) : side-norm(x) ≤ 1 }`.
    pub fn dual_norm(&self, phi: &Functional, side: Side) -> Result<DualNorm> {
        self.dual_norm_with(phi, side, &SampleOptions::default())
    }

    pub fn dual_norm_with(
        &self,
        phi: &Functional,
        side: Side,
        opts: &SampleOptions,
    ) -> Result<DualNorm> {
        match self.dual_cone_membership_with(phi, side, opts)? {
            Membership::Member { bound, exact: true } => Ok(DualNorm {
                value: bound,
                resolution: None,
            }),
            Membership::Member { bound, .. } => {
                // Resolution: disagreement with a run on a fresh sample set.
                let other = SampleOptions {
                    seed: opts.seed.wrapping_add(1),
                    ..*opts
                };
                let again = match self.dual_cone_membership_with(phi, side, &other)? {
                    Membership::Member { bound, .. } => bound,
                    _ => bound,
                };
                Ok(DualNorm {
                    value: bound.max(again),
                    resolution: Some((bound - again).abs()),
                })
            }
            Membership::Outside { ray } => Err(Error::NotInDualCone { ray }),
            Membership::Unknown { best_ratio } => Err(Error::MembershipUnknown(format!(
                "best sampled ratio {best_ratio:e}"
            ))),
        }
    }

    /// The dual norm of the cone on `side`, as a function of the functional's
    /// coefficients: `+∞` outside the cone. Used to draw spheres of
    /// functionals.
    pub fn dual_cone_norm(&self, side: Side) -> AsymNorm {
        let inner = self.clone();
        let eval = move |psi: &[f64]| match inner.dual_norm(&Functional::new(psi.to_vec()), side) {
            Ok(dn) => dn.value,
            Err(_) => f64::INFINITY,
        };
        AsymNorm {
            family: NormFamily::Custom(CustomNorm {
                name: format!("dual cone norm ({side:?})"),
                eval: Arc::new(eval),
            }),
            dim: self.dim,
        }
    }

    /// Sampled check of nonnegativity, positive homogeneity and
    /// subadditivity. Returns the first violated axiom.
    pub fn check_axioms(&self, samples: usize, seed: u64, tol: f64) -> Result<()> {
        let mut rng = rng::seeded(seed);
        for _ in 0..samples {
            let x = rng::gaussian_vec(&mut rng, self.dim);
            let y = rng::gaussian_vec(&mut rng, self.dim);
            let r = rng::uniform_vec(&mut rng, 1, 0.0, 10.0)[0];
            let px = self.p(&x);
            let py = self.p(&y);
            if !(px >= 0.0) {
                return Err(Error::InvalidNorm(format!("negative value at {x:?}")));
            }
            let rx: Vec<f64> = x.iter().map(|v| r * v).collect();
            if (self.p(&rx) - r * px).abs() > tol * (1.0 + r * px) {
                return Err(Error::InvalidNorm(format!(
                    "positive homogeneity fails at {x:?}"
                )));
            }
            let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            if self.p(&s) > px + py + tol * (1.0 + px + py) {
                return Err(Error::InvalidNorm(format!(
                    "subadditivity fails at {x:?}, {y:?}"
                )));
            }
        }
        Ok(())
    }
}

/// A linear functional `x ↦ ⟨coeffs, x⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Functional(Vec<f64>);

impl Functional {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Functional(coeffs)
    }

    pub fn zero(dim: usize) -> Self {
        Functional(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(dot(&self.0, x))
    }

    pub fn scaled(&self, s: f64) -> Functional {
        Functional(self.0.iter().map(|v| s * v).collect())
    }
}

impl From<Vec<f64>> for Functional {
    fn from(v: Vec<f64>) -> Self {
        Functional(v)
    }
}

/// Trailing-window rule used as a finite proxy for `limsup`.
#[derive(Debug, Clone, Copy)]
pub struct WindowRule {
    pub fraction: f64,
    pub min_len: usize,
}

impl Default for WindowRule {
    fn default() -> Self {
        WindowRule {
            fraction: 0.25,
            min_len: 5,
        }
    }
}

impl WindowRule {
    /// Start index of the trailing window for a sequence of length `len`.
    pub fn start(&self, len: usize) -> usize {
        let w = ((len as f64) * self.fraction).ceil() as usize;
        len - w.max(self.min_len).min(len)
    }

    /// Maximum over the trailing window.
    pub fn tail_max(&self, values: &[f64]) -> f64 {
        values[self.start(values.len())..]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakVerdict {
    pub limsup: f64,
    pub converges: bool,
}

/// One-sided weak convergence test: for each `φ` estimates
/// `limsup φ(x_n - x)` by the trailing-window maximum and compares it to
/// `tol`.
pub fn weak_limsup_test(
    norm: &AsymNorm,
    side: Side,
    sequence: &[Vec<f64>],
    limit: &[f64],
    duals: &[Functional],
    window: WindowRule,
    tol: f64,
) -> Result<Vec<WeakVerdict>> {
    if sequence.is_empty() {
        return Err(Error::InvalidSequence("empty sequence".into()));
    }
    if sequence.len() < 3 {
        return Err(Error::InvalidSequence(format!(
            "need at least 3 terms, got {}",
            sequence.len()
        )));
    }
    check_dim(norm.dim(), limit.len())?;
    for x in sequence {
        check_dim(norm.dim(), x.len())?;
    }
    for phi in duals {
        match norm.dual_cone_membership(phi, side)? {
            Membership::Member { .. } => {}
            Membership::Outside { ray } => return Err(Error::NotInDualCone { ray }),
            Membership::Unknown { best_ratio } => {
                return Err(Error::MembershipUnknown(format!(
                    "best sampled ratio {best_ratio:e}"
                )))
            }
        }
    }
    Ok(duals
        .iter()
        .map(|phi| {
            let vals: Vec<f64> = sequence
                .iter()
                .map(|x| {
                    phi.coeffs()
                        .iter()
                        .zip(x.iter().zip(limit))
                        .map(|(c, (a, b))| c * (a - b))
                        .sum()
                })
                .collect();
            let limsup = window.tail_max(&vals);
            WeakVerdict {
                limsup,
                converges: limsup <= tol,
            }
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum NormJson {
    HalfEuclidean { dim: usize },
    WeightedAsym { a: Vec<f64>, b: Vec<f64> },
}

impl Serialize for AsymNorm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let json = match &self.family {
            NormFamily::HalfEuclidean => NormJson::HalfEuclidean { dim: self.dim },
            NormFamily::WeightedAsym { a, b } => NormJson::WeightedAsym {
                a: a.clone(),
                b: b.clone(),
            },
            NormFamily::Custom(c) => {
                return Err(serde::ser::Error::custom(format!(
                    "custom norm '{}' cannot be serialized",
                    c.name
                )))
            }
        };
        json.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AsymNorm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NormJson::deserialize(d)? {
            NormJson::HalfEuclidean { dim } => {
                AsymNorm::half_euclidean(dim).map_err(serde::de::Error::custom)
            }
            NormJson::WeightedAsym { a, b } => {
                AsymNorm::weighted(a, b).map_err(serde::de::Error::custom)
            }
        }
    }
}
