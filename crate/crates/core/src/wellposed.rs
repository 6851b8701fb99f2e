//! Tikhonov well-posedness diagnostics.
//!
//! A [`Problem`] bundles a proper function `f`, a functional `φ` from the
//! conjugate-side dual cone and the asymmetric norm; the objective is
//! `g = f - φ`. The checks mirror the chain
//!
//! * (i) `f*` is right differentiable at `φ` with derivative `x` (Fréchet
//!   or Gâteaux flavour),
//! * (ii) `x` minimises `g` and every minimising sequence converges to `x`
//!   in the reversed norm (or weakly),
//! * (iii) `f(x)` is finite and `f**(x) = f(x)`,
//!
//! with (i) ⟹ (ii) ⟹ (iii), and (i) ⟺ (ii) for convex `f`. Everything is
//! evaluated on finite grids and finite samples, so a failed implication is
//! reported as a discretization diagnostic, not as a counterexample.
//!
//! Statement (i) also asks for a minimising sequence converging in the
//! primal norm; once (ii) holds the constant sequence at `x` is one.

use std::fmt::Write as _;

use serde::Serialize;

use crate::asymnorm::{
    weak_limsup_test, AsymNorm, Functional, Membership, Side, SignPattern, WindowRule,
};
use crate::conjugate::{self, GaugeFn, GridFn, GridSpec};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::par;
use crate::rng;
use crate::smoothness::{
    right_frechet_check, right_gateaux_estimate, sphere_directions, DerivativeEstimate,
    FrechetCheck, FrechetVerdict, Schedule, SphereSampling,
};
use crate::vecops::{add_scaled, dot, euclid, sub};

/// The function `f` of a problem.
#[derive(Debug, Clone)]
pub enum Objective {
    /// Sampled on a grid. Off-grid points take the value of the nearest
    /// grid point.
    Grid(GridFn),
    /// `f(x) = p̄(x)² = Σ max(0, -x_i)²` in closed form, where `p` is the
    /// half-Euclidean norm. The grid is used for scans and biconjugation.
    HalfEuclideanSquare { grid: GridSpec },
}

impl Objective {
    pub fn grid(&self) -> &GridSpec {
        match self {
            Objective::Grid(f) => f.grid(),
            Objective::HalfEuclideanSquare { grid } => grid,
        }
    }

    fn closed_form(x: &[f64]) -> f64 {
        x.iter().map(|&v| (-v).max(0.0).powi(2)).sum()
    }
}

/// Minimisation problem `g = f - φ` on an asymmetrically normed space.
#[derive(Debug, Clone)]
pub struct Problem {
    objective: Objective,
    sampled: GridFn,
    phi: Functional,
    norm: AsymNorm,
    dual_grid: GridSpec,
    cone: Option<SignPattern>,
    phi_bound: f64,
}

impl Problem {
    /// Validates dimensions and that `φ` lies in the conjugate-side dual
    /// cone. `dual_grid` is the grid on which `f*` is tabulated.
    pub fn new(
        objective: Objective,
        phi: Functional,
        norm: AsymNorm,
        dual_grid: GridSpec,
    ) -> Result<Self> {
        let dim = objective.grid().dim();
        check_dim(dim, norm.dim())?;
        check_dim(dim, phi.dim())?;
        check_dim(dim, dual_grid.dim())?;
        check_finite(phi.coeffs(), "functional")?;
        let phi_bound = match norm.dual_cone_membership(&phi, Side::Conjugate)? {
            Membership::Member { bound, .. } => bound,
            Membership::Outside { ray } => return Err(Error::NotInDualCone { ray }),
            Membership::Unknown { best_ratio } => {
                return Err(Error::MembershipUnknown(format!(
                    "best sampled ratio {best_ratio:e}"
                )))
            }
        };
        let sampled = match &objective {
            Objective::Grid(f) => f.clone(),
            Objective::HalfEuclideanSquare { grid } => {
                GridFn::from_fn(grid.clone(), Objective::closed_form)?
            }
        };
        let cone = norm.dual_cone_pattern(Side::Conjugate);
        Ok(Problem {
            objective,
            sampled,
            phi,
            norm,
            dual_grid,
            cone,
            phi_bound,
        })
    }

    /// `f = p̄²` for the half-Euclidean norm on `[-2, 2]^dim` with spacing
    /// `h`; the dual grid is the same box.
    pub fn half_euclidean_square(phi: Vec<f64>, h: f64, cap: usize) -> Result<Self> {
        let dim = phi.len();
        let axis = conjugate::Axis::with_spacing(-2.0, 2.0, h)?;
        let grid = GridSpec::new(vec![axis; dim])?;
        grid.check_cap(cap)?;
        Problem::new(
            Objective::HalfEuclideanSquare { grid: grid.clone() },
            Functional::new(phi),
            AsymNorm::half_euclidean(dim)?,
            grid,
        )
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn phi(&self) -> &Functional {
        &self.phi
    }

    pub fn norm(&self) -> &AsymNorm {
        &self.norm
    }

    pub fn dual_grid(&self) -> &GridSpec {
        &self.dual_grid
    }

    /// Sign pattern of the conjugate-side dual cone, if closed-form.
    pub fn cone(&self) -> Option<&SignPattern> {
        self.cone.as_ref()
    }

    /// Dual norm of `φ` on the conjugate side.
    pub fn phi_bound(&self) -> f64 {
        self.phi_bound
    }

    /// `f` tabulated on the primal grid.
    pub fn sampled(&self) -> &GridFn {
        &self.sampled
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        match &self.objective {
            Objective::Grid(f) => f.eval_nearest(x).unwrap_or(f64::INFINITY),
            Objective::HalfEuclideanSquare { .. } => Objective::closed_form(x),
        }
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        self.f(x) - dot(self.phi.coeffs(), x)
    }

    /// `f*(y)`: closed form for the half-Euclidean square, the discrete
    /// conjugate over the primal grid otherwise.
    pub fn f_conj(&self, y: &[f64]) -> f64 {
        match &self.objective {
            Objective::HalfEuclideanSquare { .. } => {
                if y.iter().any(|&v| v > 0.0) {
                    f64::INFINITY
                } else {
                    y.iter().map(|v| v * v).sum::<f64>() / 4.0
                }
            }
            Objective::Grid(f) => conjugate::conjugate_at(f, y).unwrap_or(f64::INFINITY),
        }
    }

    fn grad_g(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.objective {
            Objective::HalfEuclideanSquare { .. } => Some(
                x.iter()
                    .zip(self.phi.coeffs())
                    .map(|(&v, &c)| -2.0 * (-v).max(0.0) - c)
                    .collect(),
            ),
            Objective::Grid(_) => None,
        }
    }

    /// Closed forms are convex by construction; grids are tested with the
    /// discrete midpoint inequality.
    pub fn is_convex(&self) -> bool {
        match &self.objective {
            Objective::HalfEuclideanSquare { .. } => true,
            Objective::Grid(f) => f.midpoint_violation() <= 1e-9,
        }
    }
}

/// Threshold set shared by the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// A trace is minimising when its last value is within this of the
    /// infimum.
    pub value: f64,
    /// Trailing-window distance (or weak limsup) counted as convergence.
    pub converge: f64,
    /// Agreement of grid-based quantities with their targets.
    pub grid: f64,
    /// Fréchet remainder at the smallest radius.
    pub frechet: f64,
    /// Right Gâteaux estimate against the candidate derivative.
    pub gateaux: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            value: 1e-6,
            converge: 1e-3,
            grid: 0.05,
            frechet: 1e-2,
            gateaux: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GridScan,
    Descent,
}

/// The grid minimiser sits on the boundary with `g` still decreasing
/// outward: the minimum is an artefact of truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryWitness {
    pub point: Vec<f64>,
    pub axis: usize,
    /// `-1` at the lower end of the axis, `+1` at the upper end.
    pub side: i8,
    /// `g(inward neighbour) - g(boundary point)`, positive.
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimisationReport {
    /// Selected minimiser (refined for closed forms).
    pub argmin: Vec<f64>,
    /// Lowest-index grid minimiser.
    pub grid_argmin: Vec<f64>,
    pub grid_index: usize,
    /// Number of grid points attaining the grid minimum.
    pub ties: usize,
    pub inf_value: f64,
    pub method: Method,
    /// `g(grid_argmin) - inf_value`; zero for a pure grid scan.
    pub gap_bound: f64,
    pub gradient_norm: Option<f64>,
    pub divergence: Option<BoundaryWitness>,
}

impl MinimisationReport {
    pub fn diverges(&self) -> bool {
        self.divergence.is_some()
    }
}

/// Exact grid scan of `g` (ties go to the lowest grid index), refined by
/// gradient descent for closed forms.
pub fn minimise(prob: &Problem) -> Result<MinimisationReport> {
    let grid = prob.objective.grid();
    let gv = par::map_range(grid.len(), |j| {
        let x = grid.point(j);
        prob.sampled.value_at(j) - dot(prob.phi.coeffs(), &x)
    });
    let (mut best, mut best_v) = (0usize, f64::INFINITY);
    for (j, &v) in gv.iter().enumerate() {
        if v < best_v {
            best = j;
            best_v = v;
        }
    }
    if !best_v.is_finite() {
        return Err(Error::Improper("g is identically +inf".into()));
    }
    let ties = gv.iter().filter(|&&v| v == best_v).count();
    let grid_argmin = grid.point(best);

    let mut divergence = None;
    if grid.on_boundary(best) {
        let idx = grid.multi_index(best);
        for (k, axis) in grid.axes().iter().enumerate() {
            let side = if idx[k] == 0 {
                -1i8
            } else if idx[k] + 1 == axis.count {
                1
            } else {
                continue;
            };
            let mut inward = idx.clone();
            inward[k] = if side < 0 { 1 } else { axis.count - 2 };
            let dec = gv[grid.flat_index(&inward)] - best_v;
            if dec > 0.0 {
                divergence = Some(BoundaryWitness {
                    point: grid_argmin.clone(),
                    axis: k,
                    side,
                    decrease: dec,
                });
                break;
            }
        }
    }

    let (argmin, inf_value, method, gradient_norm) = match prob.grad_g(&grid_argmin) {
        Some(_) if divergence.is_none() => {
            let (x, gn) = descend(prob, grid_argmin.clone(), 1e-8, 10_000);
            let v = prob.g(&x);
            (x, v, Method::Descent, Some(gn))
        }
        _ => (grid_argmin.clone(), best_v, Method::GridScan, None),
    };
    Ok(MinimisationReport {
        argmin,
        grid_argmin,
        grid_index: best,
        ties,
        inf_value,
        method,
        gap_bound: (best_v - inf_value).max(0.0),
        gradient_norm,
        divergence,
    })
}

/// Gradient descent with step `1/2` on a closed form with `2`-Lipschitz
/// gradient.
fn descend(prob: &Problem, mut x: Vec<f64>, gtol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    for _ in 0..max_iter {
        let g = prob.grad_g(&x).expect("closed form");
        let gn = euclid(&g);
        if gn <= gtol {
            return (x, gn);
        }
        x = add_scaled(&x, -0.5, &g);
    }
    let gn = euclid(&prob.grad_g(&x).expect("closed form"));
    (x, gn)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Descent iterates from a seeded start.
    Descent,
    /// The minimiser plus noise shrinking like `1/n²`.
    RandomPerturbed,
    /// Offsets along zero-norm directions of the reversed norm; offsets that
    /// leave `g` unchanged are kept for the whole trace.
    AdversarialNullcone,
    /// `y_n = x` for all `n`.
    Constant,
}

impl Strategy {
    pub const GENERATED: [Strategy; 3] = [
        Strategy::Descent,
        Strategy::RandomPerturbed,
        Strategy::AdversarialNullcone,
    ];

    fn stream(self) -> u64 {
        match self {
            Strategy::Descent => 1,
            Strategy::RandomPerturbed => 2,
            Strategy::AdversarialNullcone => 3,
            Strategy::Constant => 4,
        }
    }
}

/// A candidate minimising sequence with its distances to the minimiser.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceTrace {
    pub strategy: Strategy,
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// `‖x - y_n‖ = p(x - y_n) = p̄(y_n - x)`: convergence in the reversed
    /// norm.
    pub dist_reversed: Vec<f64>,
    /// `‖y_n - x‖ = p(y_n - x)`: convergence in the norm itself.
    pub dist_primal: Vec<f64>,
    /// The last value is within tolerance of the infimum.
    pub minimising: bool,
    /// The strategy hit its iteration cap before reaching the infimum.
    pub partial: bool,
}

impl SequenceTrace {
    fn build(
        prob: &Problem,
        report: &MinimisationReport,
        strategy: Strategy,
        seed: u64,
        points: Vec<Vec<f64>>,
        value_tol: f64,
    ) -> Self {
        let x = &report.argmin;
        let values: Vec<f64> = points.iter().map(|y| prob.g(y)).collect();
        let dist_reversed = points.iter().map(|y| prob.norm.p(&sub(x, y))).collect();
        let dist_primal = points.iter().map(|y| prob.norm.p(&sub(y, x))).collect();
        let last = *values.last().unwrap();
        let minimising = (last - report.inf_value).abs() <= value_tol;
        SequenceTrace {
            strategy,
            seed,
            points,
            values,
            dist_reversed,
            dist_primal,
            minimising,
            partial: !minimising,
        }
    }

    /// The constant sequence at the minimiser.
    pub fn constant(prob: &Problem, report: &MinimisationReport, len: usize) -> Self {
        let points = vec![report.argmin.clone(); len.max(3)];
        SequenceTrace::build(prob, report, Strategy::Constant, 0, points, f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceOptions {
    pub len: usize,
    pub value_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            len: 200,
            value_tol: 1e-6,
        }
    }
}

/// Generates `count` traces with the given strategy. Trace `k` uses its own
/// random stream derived from `seed`, so results do not depend on
/// scheduling.
pub fn gen_minimising_sequences(
    prob: &Problem,
    report: &MinimisationReport,
    strategy: Strategy,
    count: usize,
    seed: u64,
    opts: &TraceOptions,
) -> Result<Vec<SequenceTrace>> {
    if report.diverges() || !report.inf_value.is_finite() {
        return Err(Error::InvalidProblem(
            "infimum is not finite on the grid".into(),
        ));
    }
    if opts.len < 3 {
        return Err(Error::InvalidSequence(
            "traces need at least 3 terms".into(),
        ));
    }
    Ok(par::map_range(count, |k| {
        let trace_seed = seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(strategy.stream() << 32 | k as u64);
        let mut r = rng::seeded(trace_seed);
        let points = match strategy {
            Strategy::Constant => vec![report.argmin.clone(); opts.len],
            Strategy::Descent => descent_trace(prob, &mut r, opts.len),
            Strategy::RandomPerturbed => perturbed_trace(prob, report, &mut r, opts.len),
            Strategy::AdversarialNullcone => nullcone_trace(prob, report, &mut r, opts.len),
        };
        SequenceTrace::build(prob, report, strategy, trace_seed, points, opts.value_tol)
    }))
}

fn random_start(prob: &Problem, r: &mut rng::SeededRng) -> Vec<f64> {
    prob.objective
        .grid()
        .axes()
        .iter()
        .map(|a| rng::uniform_vec(r, 1, a.lo, a.hi)[0])
        .collect()
}

fn descent_trace(prob: &Problem, r: &mut rng::SeededRng, len: usize) -> Vec<Vec<f64>> {
    let start = random_start(prob, r);
    match &prob.objective {
        Objective::HalfEuclideanSquare { .. } => {
            // Half-steps toward the minimiser on the active quadratic.
            let mut x = start;
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                out.push(x.clone());
                let g = prob.grad_g(&x).expect("closed form");
                x = add_scaled(&x, -0.25, &g);
            }
            out
        }
        Objective::Grid(f) => {
            // Steepest descent over the 3^d grid neighbourhood; the final
            // point repeats once no neighbour improves.
            let grid = f.grid();
            let d = grid.dim();
            let shape = grid.shape();
            let gval = |j: usize| f.value_at(j) - dot(prob.phi.coeffs(), &grid.point(j));
            let (mut j, _) = grid.nearest(&start).expect("dimension checked");
            let mut out = Vec::with_capacity(len);
            while out.len() < len {
                out.push(grid.point(j));
                let idx = grid.multi_index(j);
                let mut best = (j, gval(j));
                for code in 0..3usize.pow(d as u32) {
                    let mut c = code;
                    let mut nb = Vec::with_capacity(d);
                    let mut ok = true;
                    for k in 0..d {
                        let off = (c % 3) as isize - 1;
                        c /= 3;
                        let v = idx[k] as isize + off;
                        if v < 0 || v >= shape[k] as isize {
                            ok = false;
                            break;
                        }
                        nb.push(v as usize);
                    }
                    if !ok {
                        continue;
                    }
                    let jn = grid.flat_index(&nb);
                    let v = gval(jn);
                    if v < best.1 {
                        best = (jn, v);
                    }
                }
                j = best.0;
            }
            out
        }
    }
}

fn perturbed_trace(
    prob: &Problem,
    report: &MinimisationReport,
    r: &mut rng::SeededRng,
    len: usize,
) -> Vec<Vec<f64>> {
    (1..=len)
        .map(|n| {
            let z = rng::gaussian_vec(r, prob.dim());
            add_scaled(&report.argmin, 0.5 / (n * n) as f64, &z)
        })
        .collect()
}

fn nullcone_trace(
    prob: &Problem,
    report: &MinimisationReport,
    r: &mut rng::SeededRng,
    len: usize,
) -> Vec<Vec<f64>> {
    let x = &report.argmin;
    let gx = prob.g(x);
    let grid = prob.objective.grid();
    let dirs = prob.norm.null_directions(Side::Conjugate);
    // A null direction is flat when a finite step along it stays inside the
    // grid box and leaves g unchanged.
    let flat: Vec<bool> = dirs
        .iter()
        .map(|d| {
            let y = add_scaled(x, 0.5, d);
            let inside = y
                .iter()
                .zip(grid.axes())
                .all(|(&v, a)| v >= a.lo && v <= a.hi);
            inside && (prob.g(&y) - gx).abs() <= 1e-12 * (1.0 + gx.abs())
        })
        .collect();
    let persistent: Vec<f64> = flat
        .iter()
        .map(|&fl| {
            if fl {
                rng::uniform_vec(r, 1, 0.25, 0.5)[0]
            } else {
                0.0
            }
        })
        .collect();
    (1..=len)
        .map(|n| {
            let mut y = x.clone();
            for (k, d) in dirs.iter().enumerate() {
                let amp = if flat[k] {
                    persistent[k]
                } else {
                    0.5 * rng::uniform_vec(r, 1, 0.0, 1.0)[0] / (n * n) as f64
                };
                y = add_scaled(&y, amp, d);
            }
            y
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Convergence in the reversed norm; Fréchet evidence for (i).
    Frechet,
    /// Weak convergence against the conjugate-side dual cone; Gâteaux
    /// evidence for (i).
    Gateaux,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceVerdict {
    pub strategy: Strategy,
    pub seed: u64,
    pub minimising: bool,
    /// Trailing-window maximum of the reversed-norm distance (Fréchet mode)
    /// or of the weak limsups over the sampled functionals (Gâteaux mode).
    pub tail: f64,
    pub converges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementIi {
    pub holds: bool,
    pub mode: Mode,
    pub traces: Vec<TraceVerdict>,
    /// Functionals used for the weak test (Gâteaux mode only).
    pub functionals: Vec<Functional>,
}

/// Seeded sample of the conjugate-side dual cone: the coordinate generators
/// of the cone plus folded Gaussian draws, each certified by the membership
/// test.
pub fn sample_dual_cone(prob: &Problem, count: usize, seed: u64) -> Vec<Functional> {
    let dim = prob.dim();
    let mut r = rng::seeded(seed);
    let mut out = Vec::new();
    let push = |out: &mut Vec<Functional>, v: Vec<f64>| {
        if euclid(&v) == 0.0 {
            return;
        }
        let phi = Functional::new(v);
        if matches!(
            prob.norm.dual_cone_membership(&phi, Side::Conjugate),
            Ok(Membership::Member { .. })
        ) && !out.contains(&phi)
        {
            out.push(phi);
        }
    };
    if let Some(c) = &prob.cone {
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; dim];
                e[i] = s;
                push(&mut out, c.fold(&e));
            }
        }
    }
    let mut tries = 0;
    while tries < 100 * count.max(1) {
        tries += 1;
        let z = rng::gaussian_vec(&mut r, dim);
        let v = match &prob.cone {
            Some(c) => c.fold(&z),
            None => z,
        };
        let before = out.len();
        push(&mut out, v);
        if out.len() > before && out.len() >= count + 2 * dim {
            break;
        }
    }
    out
}

/// Statement (ii): every minimising trace converges to the minimiser in the
/// reversed norm (Fréchet mode) or weakly (Gâteaux mode).
pub fn check_statement_ii(
    prob: &Problem,
    report: &MinimisationReport,
    traces: &[SequenceTrace],
    mode: Mode,
    tol: &Tolerances,
    seed: u64,
) -> Result<StatementIi> {
    if traces.is_empty() {
        return Err(Error::InvalidSequence("no traces supplied".into()));
    }
    if !traces.iter().any(|t| t.minimising) {
        return Err(Error::InvalidSequence(
            "no minimising traces supplied".into(),
        ));
    }
    let window = WindowRule::default();
    let functionals = match mode {
        Mode::Frechet => Vec::new(),
        Mode::Gateaux => sample_dual_cone(prob, 16, seed),
    };
    let verdicts = traces
        .iter()
        .map(|t| -> Result<TraceVerdict> {
            let tail = match mode {
                Mode::Frechet => window.tail_max(&t.dist_reversed),
                Mode::Gateaux => weak_limsup_test(
                    &prob.norm,
                    Side::Conjugate,
                    &t.points,
                    &report.argmin,
                    &functionals,
                    window,
                    tol.converge,
                )?
                .iter()
                .map(|v| v.limsup)
                .fold(f64::NEG_INFINITY, f64::max),
            };
            Ok(TraceVerdict {
                strategy: t.strategy,
                seed: t.seed,
                minimising: t.minimising,
                tail,
                converges: tail <= tol.converge,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let holds = verdicts
        .iter()
        .filter(|v| v.minimising)
        .all(|v| v.converges);
    Ok(StatementIi {
        holds,
        mode,
        traces: verdicts,
        functionals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementIii {
    pub holds: bool,
    pub point: Vec<f64>,
    /// The grid point actually used.
    pub grid_point: Vec<f64>,
    /// The requested point was not a grid point.
    pub snapped: bool,
    pub f_value: f64,
    pub biconjugate_value: f64,
    pub tol: f64,
}

/// Statement (iii) at the reported minimiser.
pub fn check_statement_iii(
    prob: &Problem,
    report: &MinimisationReport,
    tol: &Tolerances,
) -> Result<StatementIii> {
    check_statement_iii_at(prob, &report.argmin, tol)
}

/// `f(x)` finite and `f**(x) = f(x)` within the grid tolerance, with the
/// second conjugation restricted to the conjugate-side cone. Off-grid
/// points are not interpolated; the nearest grid point is used and
/// recorded.
pub fn check_statement_iii_at(prob: &Problem, x: &[f64], tol: &Tolerances) -> Result<StatementIii> {
    check_dim(prob.dim(), x.len())?;
    let grid = prob.objective.grid();
    let (j, on_grid) = grid.nearest(x)?;
    let gp = grid.point(j);
    let fx = prob.sampled.value_at(j);
    let fbb = conjugate::biconjugate_at(&prob.sampled, &prob.dual_grid, prob.cone.as_ref(), &gp)?;
    Ok(StatementIii {
        holds: fx.is_finite() && (fbb - fx).abs() <= tol.grid,
        point: x.to_vec(),
        grid_point: gp,
        snapped: !on_grid,
        f_value: fx,
        biconjugate_value: fbb,
        tol: tol.grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateauxRecord {
    pub direction: Vec<f64>,
    pub expected: f64,
    pub estimate: DerivativeEstimate,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Frechet(FrechetCheck),
    Gateaux { records: Vec<GateauxRecord> },
}

impl Evidence {
    pub fn passes(&self) -> bool {
        match self {
            Evidence::Frechet(c) => c.verdict == FrechetVerdict::Consistent,
            Evidence::Gateaux { records } => records.iter().all(|r| r.ok),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessOptions {
    pub seed: u64,
    pub traces_per_strategy: usize,
    pub trace: TraceOptions,
    pub tol: Tolerances,
    pub sphere_samples: usize,
    pub gateaux_directions: usize,
    pub radii: Vec<f64>,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            seed: 0,
            traces_per_strategy: 8,
            trace: TraceOptions::default(),
            tol: Tolerances::default(),
            sphere_samples: 256,
            gateaux_directions: 10,
            radii: crate::smoothness::default_radii(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremVerdict {
    pub mode: Mode,
    pub minimisation: MinimisationReport,
    pub convex: bool,
    pub statement_ii: StatementIi,
    pub statement_iii: StatementIii,
    /// Constant trace at the minimiser: a minimising sequence converging in
    /// the primal norm, available once (ii) holds.
    pub primal_minimising_sequence: bool,
    /// Differentiability evidence for (i); gathered when `f` is convex and
    /// (ii) holds.
    pub statement_i_evidence: Option<Evidence>,
    pub diagnostics: Vec<String>,
}

impl TheoremVerdict {
    pub fn statement_i(&self) -> Option<bool> {
        self.statement_i_evidence.as_ref().map(Evidence::passes)
    }
}

/// Gâteaux evidence: right derivatives of `f*` at `φ` along sampled cone
/// directions against `⟨ψ, x⟩`.
pub fn gateaux_evidence(
    prob: &Problem,
    x: &[f64],
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<GateauxRecord>> {
    let dirs: Vec<Functional> = sample_dual_cone(prob, count, seed)
        .into_iter()
        .rev()
        .take(count)
        .collect();
    let schedule = Schedule::default();
    let phi = prob.phi.coeffs().to_vec();
    let records = par::map_slice(&dirs, |psi| -> Result<GateauxRecord> {
        let est = right_gateaux_estimate(|y| prob.f_conj(y), &phi, psi.coeffs(), &schedule, tol)?;
        let expected = dot(psi.coeffs(), x);
        Ok(GateauxRecord {
            direction: psi.coeffs().to_vec(),
            expected,
            ok: (est.limit - expected).abs() <= tol,
            estimate: est,
        })
    });
    records.into_iter().collect()
}

/// Fréchet evidence: sampled remainder of `f*` at `φ` with candidate
/// derivative `x`, on spheres of the conjugate-side dual norm inside the
/// cone.
pub fn frechet_evidence(prob: &Problem, x: &[f64], opts: &HarnessOptions) -> Result<FrechetCheck> {
    let sampling = SphereSampling {
        samples: opts.sphere_samples,
        seed: opts.seed,
        cone: prob.cone.clone(),
    };
    let dual_norm = prob.norm.dual_cone_norm(Side::Conjugate);
    right_frechet_check(
        |y| prob.f_conj(y),
        prob.phi.coeffs(),
        x,
        &opts.radii,
        &sampling,
        &dual_norm,
        Side::Primal,
        opts.tol.frechet,
    )
}

/// Runs minimisation, all trace strategies, (ii), (iii) and, for convex `f`
/// with (ii), the differentiability evidence for (i).
pub fn theorem_harness(
    prob: &Problem,
    mode: Mode,
    opts: &HarnessOptions,
) -> Result<TheoremVerdict> {
    let report = minimise(prob)?;
    if let Some(w) = &report.divergence {
        return Err(Error::InvalidProblem(format!(
            "g decreases through the grid boundary at {:?}",
            w.point
        )));
    }
    let mut traces = Vec::new();
    for s in Strategy::GENERATED {
        traces.extend(gen_minimising_sequences(
            prob,
            &report,
            s,
            opts.traces_per_strategy,
            opts.seed,
            &opts.trace,
        )?);
    }
    traces.push(SequenceTrace::constant(prob, &report, opts.trace.len));
    let ii = check_statement_ii(prob, &report, &traces, mode, &opts.tol, opts.seed)?;
    let iii = check_statement_iii(prob, &report, &opts.tol)?;
    let convex = prob.is_convex();

    let mut diagnostics = Vec::new();
    if ii.holds && !iii.holds {
        diagnostics.push(format!(
            "(ii) held but (iii) missed: |f**(x) - f(x)| = {:e} above {:e}; discretization diagnostic",
            (iii.biconjugate_value - iii.f_value).abs(),
            iii.tol
        ));
    }
    let evidence = if convex && ii.holds {
        let ev = match mode {
            Mode::Frechet => Evidence::Frechet(frechet_evidence(prob, &report.argmin, opts)?),
            Mode::Gateaux => Evidence::Gateaux {
                records: gateaux_evidence(
                    prob,
                    &report.argmin,
                    opts.gateaux_directions,
                    opts.seed,
                    opts.tol.gateaux,
                )?,
            },
        };
        if !ev.passes() {
            diagnostics.push(
                "convex f with (ii), but the sampled derivative evidence for (i) missed its tolerance; discretization diagnostic"
                    .into(),
            );
        }
        Some(ev)
    } else {
        None
    };
    Ok(TheoremVerdict {
        mode,
        minimisation: report,
        convex,
        primal_minimising_sequence: ii.holds,
        statement_ii: ii,
        statement_iii: iii,
        statement_i_evidence: evidence,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusOptions {
    pub starts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ModulusOptions {
    fn default() -> Self {
        ModulusOptions {
            starts: 32,
            iterations: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Modulus {
    pub alpha: GaugeFn,
    /// `α(t) > 0` at every sampled `t > 0`.
    pub positive: bool,
}

impl Modulus {
    /// `t,alpha,alpha_sharp` rows, `α#` taken at the same abscissae.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,alpha,alpha_sharp\n");
        for (t, a) in self.alpha.abscissae().iter().zip(self.alpha.values()) {
            let _ = writeln!(s, "{t:?},{a:?},{:?}", self.alpha.conjugate_value(*t));
        }
        s
    }
}

/// Well-posedness modulus `α(t) = inf { h(y) : p̄(y) = t }` with
/// `h(y) = g(x + y) - inf g`, by projected multi-start descent on each
/// sphere. The sphere is parametrised radially: `y = t d / p̄(d)`.
pub fn wellposedness_modulus(
    prob: &Problem,
    report: &MinimisationReport,
    t_samples: &[f64],
    opts: &ModulusOptions,
) -> Result<Modulus> {
    let x = &report.argmin;
    let inf = report.inf_value;
    let mut ts: Vec<f64> = t_samples.to_vec();
    if ts.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidGauge("radii must be nonnegative".into()));
    }
    ts.push(0.0);
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup();

    let starts = sphere_directions(
        &prob.norm,
        Side::Conjugate,
        &SphereSampling {
            samples: opts.starts,
            seed: opts.seed,
            cone: None,
        },
    )?;
    let h = |y: &[f64]| prob.g(&add_scaled(x, 1.0, y)) - inf;
    let values = par::map_range(ts.len(), |k| {
        let t = ts[k];
        if t == 0.0 {
            return 0.0;
        }
        let on_sphere = |d: &[f64]| -> Option<Vec<f64>> {
            let n = prob.norm.p_bar(d);
            if n > 1e-12 {
                Some(d.iter().map(|v| t * v / n).collect())
            } else {
                None
            }
        };
        let obj = |d: &[f64]| on_sphere(d).map(|y| h(&y)).unwrap_or(f64::INFINITY);
        let mut best = f64::INFINITY;
        for s in &starts {
            let mut d = s.clone();
            let mut fd = obj(&d);
            let mut step = 0.5;
            for _ in 0..opts.iterations {
                let eps = 1e-7;
                let grad: Vec<f64> = (0..d.len())
                    .map(|i| {
                        let mut a = d.clone();
                        let mut b = d.clone();
                        a[i] += eps;
                        b[i] -= eps;
                        let (fa, fb) = (obj(&a), obj(&b));
                        if fa.is_finite() && fb.is_finite() {
                            (fa - fb) / (2.0 * eps)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let gn = euclid(&grad);
                if gn < 1e-12 {
                    break;
                }
                let mut moved = false;
                while step > 1e-12 {
                    let cand = add_scaled(&d, -step / gn, &grad);
                    if let Some(y) = on_sphere(&cand) {
                        let fc = h(&y);
                        if fc < fd {
                            // Re-project onto the unit sphere of p̄.
                            let n = prob.norm.p_bar(&cand);
                            d = cand.iter().map(|v| v / n).collect();
                            fd = fc;
                            moved = true;
                            step *= 2.0;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            best = best.min(fd);
        }
        best.max(0.0)
    });
    let positive = ts.iter().zip(&values).all(|(&t, &v)| t == 0.0 || v > 0.0);
    Ok(Modulus {
        alpha: GaugeFn::new(ts, values)?,
        positive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityBound {
    /// `min over grid points of g(y) - α#(p̄(y - x)) - inf g`.
    pub worst_slack: f64,
    pub worst_point: Vec<f64>,
    pub holds: bool,
    pub tol: f64,
}

/// `g(y) ≥ α#(p̄(y - x)) + inf g - tol` at every primal grid point.
pub fn coercivity_bound_check(
    prob: &Problem,
    report: &MinimisationReport,
    alpha: &GaugeFn,
    tol: f64,
) -> CoercivityBound {
    let grid = prob.objective.grid();
    let x = &report.argmin;
    let slack = par::map_range(grid.len(), |j| {
        let y = grid.point(j);
        let gy = prob.sampled.value_at(j) - dot(prob.phi.coeffs(), &y);
        gy - alpha.conjugate_value(prob.norm.p_bar(&sub(&y, x))) - report.inf_value
    });
    let (mut wj, mut w) = (0usize, f64::INFINITY);
    for (j, &s) in slack.iter().enumerate() {
        if s < w {
            wj = j;
            w = s;
        }
    }
    CoercivityBound {
        worst_slack: w,
        worst_point: grid.point(wj),
        holds: w >= -tol,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::Axis;
    use approx::assert_abs_diff_eq;

    fn example(phi: Vec<f64>) -> Problem {
        Problem::half_euclidean_square(phi, 0.02, conjugate::DEFAULT_GRID_CAP).unwrap()
    }

    fn line_problem(f: impl Fn(f64) -> f64, norm: AsymNorm) -> Problem {
        let grid = GridSpec::new(vec![Axis::new(-2.0, 2.0, 201).unwrap()]).unwrap();
        let gf = GridFn::from_fn(grid.clone(), |x| f(x[0])).unwrap();
        let dual = GridSpec::new(vec![Axis::new(-4.0, 4.0, 401).unwrap()]).unwrap();
        Problem::new(Objective::Grid(gf), Functional::zero(1), norm, dual).unwrap()
    }

    #[test]
    fn phi_must_be_in_conjugate_cone() {
        let err = Problem::half_euclidean_square(vec![1.0, -1.0], 0.1, 1 << 20).unwrap_err();
        assert!(matches!(err, Error::NotInDualCone { .. }));
        assert!(Problem::half_euclidean_square(vec![0.0, -1.0], 0.1, 1 << 20).is_ok());
        assert!(matches!(
            Problem::half_euclidean_square(vec![-1.0, -1.0], 0.001, 1000),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn minimise_example() {
        let prob = example(vec![-1.0, -1.0]);
        let r = minimise(&prob).unwrap();
        assert_eq!(r.method, Method::Descent);
        assert_abs_diff_eq!(r.argmin[0], -0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(r.argmin[1], -0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(r.inf_value, -0.5, epsilon = 1e-12);
        assert!(r.gradient_norm.unwrap() <= 1e-8);
        assert!(!r.diverges());
        // -0.5 is a grid point of the 0.02 grid.
        assert_abs_diff_eq!(r.grid_argmin[0], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn minimise_quadratic_and_linear() {
        let norm = AsymNorm::half_euclidean(1).unwrap();
        let r = minimise(&line_problem(|x| x * x, norm.clone())).unwrap();
        assert_eq!(r.method, Method::GridScan);
        assert_abs_diff_eq!(r.argmin[0], 0.0, epsilon = 1e-12);
        assert_eq!(r.inf_value, 0.0);
        assert!(!r.diverges());

        let r = minimise(&line_problem(|x| x, norm)).unwrap();
        assert_eq!(r.argmin, vec![-2.0]);
        let w = r.divergence.expect("boundary witness");
        assert_eq!((w.axis, w.side), (0, -1));
        assert!(w.decrease > 0.0);
    }

    #[test]
    fn traces_on_example() {
        let prob = example(vec![-1.0, -1.0]);
        let r = minimise(&prob).unwrap();
        let opts = TraceOptions::default();
        for s in Strategy::GENERATED {
            let ts = gen_minimising_sequences(&prob, &r, s, 4, 7, &opts).unwrap();
            for t in &ts {
                assert!(t.minimising, "{s:?}");
                assert!(*t.dist_reversed.last().unwrap() < 1e-3, "{s:?}");
            }
        }
        let c = SequenceTrace::constant(&prob, &r, 10);
        assert!(c.minimising && c.dist_reversed.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn nullcone_trace_is_asymmetric_when_g_is_flat() {
        let prob = example(vec![-1.0, 0.0]);
        let r = minimise(&prob).unwrap();
        assert_abs_diff_eq!(r.argmin[0], -0.5, epsilon = 1e-8);
        assert!(r.ties > 1);
        let ts = gen_minimising_sequences(
            &prob,
            &r,
            Strategy::AdversarialNullcone,
            4,
            3,
            &TraceOptions::default(),
        )
        .unwrap();
        for t in ts {
            assert!(t.minimising);
            assert!(t.dist_reversed.iter().all(|&d| d < 1e-12));
            assert!(t.dist_primal.iter().all(|&d| d >= 0.25));
        }
    }

    #[test]
    fn statement_ii_examples() {
        let prob = example(vec![-1.0, -1.0]);
        let r = minimise(&prob).unwrap();
        let mut traces = Vec::new();
        for s in Strategy::GENERATED {
            traces.extend(
                gen_minimising_sequences(&prob, &r, s, 4, 1, &TraceOptions::default()).unwrap(),
            );
        }
        let tol = Tolerances::default();
        for mode in [Mode::Frechet, Mode::Gateaux] {
            assert!(
                check_statement_ii(&prob, &r, &traces, mode, &tol, 0)
                    .unwrap()
                    .holds
            );
        }
        let c = [SequenceTrace::constant(&prob, &r, 5)];
        assert!(
            check_statement_ii(&prob, &r, &c, Mode::Frechet, &tol, 0)
                .unwrap()
                .holds
        );
        assert!(check_statement_ii(&prob, &r, &[], Mode::Frechet, &tol, 0).is_err());
    }

    #[test]
    fn flat_valley_breaks_statement_ii() {
        let sym = AsymNorm::weighted(vec![1.0], vec![1.0]).unwrap();
        let prob = line_problem(|x| (x.abs() - 1.0).max(0.0), sym);
        let r = minimise(&prob).unwrap();
        assert_abs_diff_eq!(r.argmin[0], -1.0, epsilon = 1e-12);
        let other =
            SequenceTrace::build(&prob, &r, Strategy::Descent, 0, vec![vec![1.0]; 10], 1e-6);
        assert!(other.minimising);
        let tol = Tolerances::default();
        let ii = check_statement_ii(&prob, &r, &[other], Mode::Frechet, &tol, 0).unwrap();
        assert!(!ii.holds);
        // Descent from seeded starts lands on both ends of the valley.
        let ts = gen_minimising_sequences(
            &prob,
            &r,
            Strategy::Descent,
            16,
            5,
            &TraceOptions::default(),
        )
        .unwrap();
        assert!(
            !check_statement_ii(&prob, &r, &ts, Mode::Frechet, &tol, 0)
                .unwrap()
                .holds
        );
        // (iii) is untouched: the valley is convex.
        assert!(check_statement_iii(&prob, &r, &tol).unwrap().holds);
    }

    #[test]
    fn flat_valley_is_harmless_under_the_half_euclidean_norm() {
        // Every other minimiser lies above x = -1, and p̄ vanishes on
        // positive differences, so all minimising traces converge in p̄.
        let prob = line_problem(
            |x| (x.abs() - 1.0).max(0.0),
            AsymNorm::half_euclidean(1).unwrap(),
        );
        let r = minimise(&prob).unwrap();
        let ts = gen_minimising_sequences(
            &prob,
            &r,
            Strategy::Descent,
            16,
            5,
            &TraceOptions::default(),
        )
        .unwrap();
        let ii =
            check_statement_ii(&prob, &r, &ts, Mode::Frechet, &Tolerances::default(), 0).unwrap();
        assert!(ii.holds);
    }

    #[test]
    fn statement_iii_examples() {
        let tol = Tolerances::default();
        let prob = example(vec![-1.0, -1.0]);
        let r = minimise(&prob).unwrap();
        let iii = check_statement_iii(&prob, &r, &tol).unwrap();
        assert!(iii.holds);
        assert_abs_diff_eq!(iii.f_value, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(iii.biconjugate_value, 0.5, epsilon = 1e-9);

        let dw = line_problem(
            |x| ((x - 1.0).powi(2)).min((x + 1.0).powi(2)),
            AsymNorm::weighted(vec![1.0], vec![1.0]).unwrap(),
        );
        let at0 = check_statement_iii_at(&dw, &[0.0], &tol).unwrap();
        assert!(!at0.holds);
        assert_abs_diff_eq!(at0.f_value, 1.0, epsilon = 1e-12);
        let snapped = check_statement_iii_at(&dw, &[0.013], &tol).unwrap();
        assert!(snapped.snapped);
        assert_abs_diff_eq!(snapped.grid_point[0], 0.02, epsilon = 1e-12);

        let convex = line_problem(
            |x| x.abs(),
            AsymNorm::weighted(vec![1.0], vec![2.0]).unwrap(),
        );
        for x in [-1.5, -0.3, 0.0, 0.7] {
            assert!(check_statement_iii_at(&convex, &[x], &tol).unwrap().holds);
        }
    }

    #[test]
    fn harness_on_example() {
        let prob = example(vec![-1.0, -1.0]);
        let opts = HarnessOptions {
            traces_per_strategy: 3,
            sphere_samples: 64,
            ..Default::default()
        };
        let v = theorem_harness(&prob, Mode::Frechet, &opts).unwrap();
        assert!(v.convex && v.statement_ii.holds && v.statement_iii.holds);
        assert_eq!(v.statement_i(), Some(true));
        match v.statement_i_evidence.unwrap() {
            Evidence::Frechet(c) => {
                assert!(c.curve.is_decreasing());
                for (t, r) in c.curve.radii.iter().zip(&c.curve.remainders) {
                    assert!((r - t / 4.0).abs() < 1e-9);
                }
            }
            other => panic!("{other:?}"),
        }
        let v = theorem_harness(&prob, Mode::Gateaux, &opts).unwrap();
        match v.statement_i_evidence.unwrap() {
            Evidence::Gateaux { records } => {
                assert_eq!(records.len(), 10);
                for r in records {
                    assert!(r.ok, "{r:?}");
                }
            }
            other => panic!("{other:?}"),
        }
        assert!(v.diagnostics.is_empty());
    }

    #[test]
    fn harness_on_flat_valley() {
        let prob = line_problem(
            |x| (x.abs() - 1.0).max(0.0),
            AsymNorm::weighted(vec![1.0], vec![1.0]).unwrap(),
        );
        for mode in [Mode::Frechet, Mode::Gateaux] {
            let v = theorem_harness(&prob, mode, &HarnessOptions::default()).unwrap();
            assert!(!v.statement_ii.holds);
            assert!(v.statement_iii.holds);
            assert!(v.statement_i_evidence.is_none());
        }
    }

    #[test]
    fn modulus_of_example() {
        let prob = example(vec![-1.0, -1.0]);
        let r = minimise(&prob).unwrap();
        let ts: Vec<f64> = (1..=20).map(|k| k as f64 * 0.125).collect();
        let m = wellposedness_modulus(&prob, &r, &ts, &ModulusOptions::default()).unwrap();
        assert!(m.positive);
        assert_eq!(m.alpha.at(0.0), Some(0.0));
        assert_abs_diff_eq!(m.alpha.at(0.5).unwrap(), 0.25, epsilon = 1e-6);
        assert!(m.alpha.at(0.25).unwrap() / 0.25 <= m.alpha.at(0.5).unwrap() / 0.5);
        assert!(m.alpha.slope_monotone(1e-9));
        let csv = m.to_csv();
        assert!(csv.starts_with("t,alpha,alpha_sharp\n0.0,0.0,0.0\n"));

        let cb = coercivity_bound_check(&prob, &r, &m.alpha, 0.05);
        assert!(cb.holds, "{cb:?}");
    }
}
