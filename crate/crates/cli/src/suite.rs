//! The invariant suite behind `verify`.
//!
//! Each check is an independent function of the run context; checks run
//! concurrently and the report is assembled in name order afterwards.

use std::fmt::Write as _;

use asymconj::asymnorm::{AsymNorm, Functional, Membership, Side};
use asymconj::cgf::{
    self, cgf_conjugate, cgf_gradient, cgf_value, coercivity_check, conjugate_derivative,
    gen_cgf_traces, gibbs_dual_point, hessian_min_eigenvalue, pbar_weak_check, property_checks,
    tilted_minimise, CgfModel, CgfStrategy, ConjugateOptions,
};
use asymconj::conjugate::{
    biconjugate, conjugate_at, conjugate_brute, conjugate_fast, gauge_conjugate, Axis, GaugeFn,
    GridFn, GridSpec,
};
use asymconj::smoothness::{right_gateaux_estimate, Schedule};
use asymconj::wellposed::{
    coercivity_bound_check, gen_minimising_sequences, minimise, theorem_harness,
    wellposedness_modulus, Evidence, HarnessOptions, Mode, ModulusOptions, Objective, Problem,
    Strategy, TraceOptions,
};
use asymconj::{par, rng, Error};
use serde_json::json;

use crate::config::{RunConfig, TolSet};
use crate::report::{Outcome, Record};

/// Independent oracle values for the two-atom model at `y = (3/4, 1/4)`:
/// the relative entropy `3/4 ln 3/2 + 1/4 ln 1/2` and `artanh(1/2)`.
pub const TWO_ATOM_W: f64 = 0.130_812_035_941_136_97;
pub const TWO_ATOM_T: f64 = 0.549_306_144_334_054_8;

/// Fast and brute-force conjugates must agree to this.
pub const ORACLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Ctx {
    pub seed: u64,
    pub tol: TolSet,
    pub grid_cap: usize,
    pub mode: Option<Mode>,
}

impl Ctx {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Ctx {
            seed: cfg.seed,
            tol: cfg.tol,
            grid_cap: cfg.grid_cap,
            mode: cfg.mode,
        }
    }

    fn wants(&self, m: Mode) -> bool {
        self.mode.is_none_or(|x| x == m)
    }

    fn sub(&self, stream: u64) -> u64 {
        self.seed
            .wrapping_mul(0x2545_f491_4f6c_dd1d)
            .wrapping_add(stream)
    }
}

type Check = fn(&Ctx) -> Result<Outcome, Error>;

/// Every check, keyed by the record-name prefix used when it errors out.
pub fn checks() -> Vec<(&'static str, &'static str, Check)> {
    vec![
        ("asymnorm/axioms", "asymmetric-norm-axioms", norm_axioms),
        ("asymnorm/attainment", "norm-attainment", norm_attainment),
        ("asymnorm/dual-cone", "dual-cone", dual_cone),
        (
            "conjugate/biconjugate-below",
            "biconjugate-below",
            biconjugate_below,
        ),
        (
            "conjugate/fast-vs-brute",
            "discrete-conjugate",
            fast_vs_brute,
        ),
        ("conjugate/gauge", "gauge-conjugate", gauge),
        (
            "smoothness/gateaux-quadratic",
            "right-gateaux",
            gateaux_quadratic,
        ),
        (
            "example1/closed-form",
            "example1-conjugate",
            example1_tables,
        ),
        ("example1/frechet", "frechet-duality/i", example1_frechet),
        ("example1/gateaux", "gateaux-duality/i", example1_gateaux),
        (
            "example1/asymmetry",
            "asymmetric-convergence",
            asymmetry_witness,
        ),
        ("example1/modulus", "wellposedness-modulus", modulus),
        ("control/flat-valley", "frechet-duality/ii", flat_valley),
        ("cgf/two-atom", "cgf-conjugate", cgf_two_atom),
        ("cgf/random-models", "cgf-wellposedness", cgf_random),
        ("cgf/calculus", "cgf-gibbs-moments", cgf_calculus),
    ]
}

/// Runs every check; a check that errors out becomes one failing record.
pub fn run_all(ctx: &Ctx) -> Vec<Outcome> {
    let list = checks();
    par::map_slice(&list, |(name, anchor, f)| match f(ctx) {
        Ok(o) => o,
        Err(e) => Outcome {
            records: vec![Record::error(name, anchor, e)],
            files: Vec::new(),
        },
    })
}

fn norm_axioms(ctx: &Ctx) -> Result<Outcome, Error> {
    let norms = [
        AsymNorm::half_euclidean(2)?,
        AsymNorm::half_euclidean(3)?,
        AsymNorm::weighted(vec![1.0, 2.0, 0.5], vec![0.5, 0.0, 3.0])?,
    ];
    let mut failures = Vec::new();
    for (i, n) in norms.iter().enumerate() {
        if let Err(e) = n.check_axioms(2000, ctx.sub(i as u64), ctx.tol.exact) {
            failures.push(format!("{i}: {e}"));
        }
    }
    let mut o = Outcome::default();
    o.push(Record::check(
        "asymnorm/axioms",
        "asymmetric-norm-axioms",
        failures.is_empty(),
        json!({ "norms": norms.len(), "samples": 2000, "failures": failures }),
        Some(ctx.tol.exact),
    ));
    Ok(o)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_attainment(ctx: &Ctx) -> Result<Outcome, Error> {
    let mut r = rng::seeded(ctx.sub(10));
    let mut worst_gap: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut points = 0;
    for dim in [2usize, 3] {
        let norm = AsymNorm::half_euclidean(dim)?;
        let cone = norm.dual_cone_pattern(Side::Primal).expect("builtin cone");
        let duals: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let v = cone.fold(&rng::gaussian_vec(&mut r, dim));
                let n = norm2(&v);
                v.iter().map(|x| x / n).collect()
            })
            .collect();
        for _ in 0..200 {
            let x = rng::gaussian_vec(&mut r, dim);
            let px = norm.eval(&x)?;
            let mut sup = duals.iter().map(|d| dot(d, &x)).fold(0.0, f64::max);
            worst_excess = worst_excess.max(sup - px);
            if px > 0.0 {
                let best: Vec<f64> = x.iter().map(|v| v.max(0.0) / px).collect();
                sup = sup.max(dot(&best, &x));
            }
            worst_gap = worst_gap.max((sup - px).abs());
            points += 1;
        }
    }
    let mut o = Outcome::default();
    o.push(Record::check(
        "asymnorm/attainment",
        "norm-attainment",
        worst_gap <= ctx.tol.sampled && worst_excess <= ctx.tol.exact,
        json!({ "points": points, "max_gap": worst_gap, "max_excess": worst_excess }),
        Some(ctx.tol.sampled),
    ));
    Ok(o)
}

fn dual_cone(ctx: &Ctx) -> Result<Outcome, Error> {
    let n = AsymNorm::half_euclidean(2)?;
    let cases: [(&[f64], Side, bool); 6] = [
        (&[1.0, 2.0], Side::Primal, true),
        (&[-1.0, 0.5], Side::Primal, false),
        (&[-1.0, -1.0], Side::Conjugate, true),
        (&[0.0, 0.0], Side::Conjugate, true),
        (&[0.0, -1.0], Side::Conjugate, true),
        (&[1.0, -1.0], Side::Conjugate, false),
    ];
    let mut wrong = Vec::new();
    let mut bound_err: f64 = 0.0;
    for (phi, side, member) in cases {
        let m = n.dual_cone_membership(&Functional::new(phi.to_vec()), side)?;
        if m.is_member() != member {
            wrong.push(format!("{phi:?} {side:?}"));
        }
        if let Membership::Member { bound, .. } = m {
            bound_err = bound_err.max((bound - norm2(phi)).abs());
        }
    }
    let mut o = Outcome::default();
    o.push(Record::check(
        "asymnorm/dual-cone",
        "dual-cone",
        wrong.is_empty() && bound_err <= ctx.tol.exact,
        json!({ "cases": cases.len(), "misclassified": wrong, "max_dual_norm_error": bound_err }),
        Some(ctx.tol.exact),
    ));
    Ok(o)
}

fn random_instance(seed: u64, dim: usize) -> Result<(GridFn, GridSpec), Error> {
    let (count, dcount) = if dim == 1 { (257, 257) } else { (65, 65) };
    let grid = GridSpec::cube(-1.0, 1.0, count, dim)?;
    let dual = GridSpec::cube(-4.0, 4.0, dcount, dim)?;
    Ok((GridFn::random(grid, seed, 0.1)?, dual))
}

fn biconjugate_below(ctx: &Ctx) -> Result<Outcome, Error> {
    let results = par::map_range(100, |k| -> Result<f64, Error> {
        let dim = if k < 50 { 1 } else { 2 };
        let (f, dual) = random_instance(ctx.sub(1000 + k as u64), dim)?;
        let fbb = biconjugate(&f, &dual, None)?;
        Ok(f.values()
            .iter()
            .zip(fbb.values())
            .filter(|(v, _)| v.is_finite())
            .map(|(v, b)| b - v)
            .fold(f64::NEG_INFINITY, f64::max))
    });
    let worst = results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut o = Outcome::default();
    o.push(Record::check(
        "conjugate/biconjugate-below",
        "biconjugate-below",
        worst <= ctx.tol.exact,
        json!({ "instances": 100, "max_excess": worst }),
        Some(ctx.tol.exact),
    ));
    Ok(o)
}

fn fast_vs_brute(ctx: &Ctx) -> Result<Outcome, Error> {
    let cone = AsymNorm::half_euclidean(2)?.dual_cone_pattern(Side::Conjugate);
    let results = par::map_range(100, |k| -> Result<(f64, bool), Error> {
        let mut r = rng::seeded(ctx.sub(2000 + k as u64));
        let (f, dual) = if k < 60 {
            let n = 101 + (rng::uniform_vec(&mut r, 1, 0.0, 156.0)[0] as usize);
            let grid = GridSpec::cube(-1.5, 0.5, n, 1)?;
            (
                GridFn::random(grid, ctx.sub(3000 + k as u64), 0.2)?,
                GridSpec::new(vec![Axis::new(-3.0, 2.0, 173)?])?,
            )
        } else {
            let grid = GridSpec::cube(-1.0, 1.0, 33, 2)?;
            (
                GridFn::random(grid, ctx.sub(3000 + k as u64), 0.2)?,
                GridSpec::new(vec![Axis::new(-3.0, 1.0, 29)?, Axis::new(-2.0, 2.0, 31)?])?,
            )
        };
        let c = if k >= 80 { cone.as_ref() } else { None };
        let a = conjugate_fast(&f, &dual, c)?;
        let b = conjugate_brute(&f, &dual, c)?;
        let mut worst: f64 = 0.0;
        let mut inf_match = true;
        for (x, y) in a.values().iter().zip(b.values()) {
            if x.is_finite() && y.is_finite() {
                worst = worst.max((x - y).abs());
            } else if x != y {
                inf_match = false;
            }
        }
        Ok((worst, inf_match))
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let inf_match = results.iter().all(|r| r.1);
    let mut o = Outcome::default();
    o.push(Record::check(
        "conjugate/fast-vs-brute",
        "discrete-conjugate",
        worst <= ORACLE_TOL && inf_match,
        json!({ "instances": 100, "max_abs_diff": worst, "infinities_match": inf_match }),
        Some(ORACLE_TOL),
    ));
    Ok(o)
}

fn gauge(ctx: &Ctx) -> Result<Outcome, Error> {
    // α(t) = t² on [0, 2] has α#(s) = s²/4 for s ≤ 4.
    let t: Vec<f64> = (0..=400).map(|k| k as f64 * 0.005).collect();
    let alpha = GaugeFn::new(t.clone(), t.iter().map(|v| v * v).collect())?;
    let s: Vec<f64> = (0..=80).map(|k| k as f64 * 0.05).collect();
    let sharp = gauge_conjugate(&alpha, &s)?;
    let mut worst: f64 = 0.0;
    let mut young_ok = true;
    for (si, vi) in s.iter().zip(sharp.values()) {
        worst = worst.max((vi - si * si / 4.0).abs());
        for (ti, ai) in t.iter().zip(alpha.values()) {
            if ai + vi < ti * si - ctx.tol.exact {
                young_ok = false;
            }
        }
    }
    let mut o = Outcome::default();
    o.push(Record::check(
        "conjugate/gauge",
        "gauge-conjugate",
        worst <= ctx.tol.grid && young_ok && alpha.slope_monotone(ctx.tol.exact),
        json!({ "max_abs_diff": worst, "young_inequality": young_ok }),
        Some(ctx.tol.grid),
    ));
    Ok(o)
}

fn gateaux_quadratic(ctx: &Ctx) -> Result<Outcome, Error> {
    let mut r = rng::seeded(ctx.sub(20));
    let d = 3;
    let b = rng::gaussian_vec(&mut r, d);
    let m: Vec<Vec<f64>> = (0..d).map(|_| rng::gaussian_vec(&mut r, d)).collect();
    // A = MᵀM + I.
    let a: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| m[k][i] * m[k][j]).sum::<f64>() + f64::from(i == j))
                .collect()
        })
        .collect();
    let f = |x: &[f64]| {
        let ax: Vec<f64> = a.iter().map(|row| dot(row, x)).collect();
        0.5 * dot(x, &ax) + dot(&b, x)
    };
    let schedule = Schedule::default();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = rng::gaussian_vec(&mut r, d);
        let u = rng::gaussian_vec(&mut r, d);
        let grad: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(row, bi)| dot(row, &x) + bi)
            .collect();
        let e = right_gateaux_estimate(f, &x, &u, &schedule, ctx.tol.sampled)?;
        worst = worst.max((e.limit - dot(&grad, &u)).abs());
    }
    let mut o = Outcome::default();
    o.push(Record::check(
        "smoothness/gateaux-quadratic",
        "right-gateaux",
        worst <= ctx.tol.sampled,
        json!({ "pairs": 20, "max_abs_diff": worst }),
        Some(ctx.tol.sampled),
    ));
    Ok(o)
}

fn example_problem(ctx: &Ctx, phi: Vec<f64>) -> Result<Problem, Error> {
    Problem::half_euclidean_square(phi, 0.02, ctx.grid_cap)
}

fn fstar_closed(y: &[f64]) -> f64 {
    if y.iter().any(|&v| v > 0.0) {
        f64::INFINITY
    } else {
        y.iter().map(|v| v * v).sum::<f64>() / 4.0
    }
}

fn example1_tables(ctx: &Ctx) -> Result<Outcome, Error> {
    let base = example_problem(ctx, vec![-1.0, -1.0])?;
    let mut r = rng::seeded(ctx.sub(30));
    let ys: Vec<Vec<f64>> = (0..25)
        .map(|_| rng::uniform_vec(&mut r, 2, -1.0, 0.0))
        .collect();
    let rows = par::map_slice(&ys, |y| -> Result<[f64; 6], Error> {
        let grid_val = conjugate_at(base.sampled(), y)?;
        let closed = fstar_closed(y);
        let prob = example_problem(ctx, y.clone())?;
        let rep = minimise(&prob)?;
        let cell = rep
            .grid_argmin
            .iter()
            .zip(y)
            .map(|(a, yi)| (a - yi / 2.0).abs())
            .fold(0.0, f64::max);
        let half: Vec<f64> = y.iter().map(|v| v / 2.0).collect();
        let iii = asymconj::wellposed::check_statement_iii_at(&prob, &half, &ctx.tol.harness())?;
        Ok([
            grid_val,
            closed,
            (grid_val - closed).abs(),
            cell,
            (iii.biconjugate_value - iii.f_value).abs(),
            f64::from(u8::from(iii.f_value.is_finite())),
        ])
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("y1,y2,grid,closed_form,abs_diff\n");
    for (y, row) in ys.iter().zip(&rows) {
        let _ = writeln!(
            csv,
            "{:?},{:?},{:?},{:?},{:?}",
            y[0], y[1], row[0], row[1], row[2]
        );
    }
    let max_col = |i: usize| rows.iter().map(|r| r[i]).fold(0.0, f64::max);
    let h = 0.02;
    let mut o = Outcome::default();
    o.push(Record::check(
        "example1/closed-form",
        "example1-conjugate",
        max_col(2) <= ctx.tol.grid,
        json!({ "samples": ys.len(), "max_abs_diff": max_col(2) }),
        Some(ctx.tol.grid),
    ));
    o.push(Record::check(
        "example1/argmin",
        "example1-minimiser",
        max_col(3) <= h + 1e-12,
        json!({ "samples": ys.len(), "max_coordinate_offset": max_col(3), "cell": h }),
        Some(h),
    ));
    o.push(Record::check(
        "example1/biconjugate",
        "frechet-duality/iii",
        max_col(4) <= ctx.tol.grid && rows.iter().all(|r| r[5] == 1.0),
        json!({ "samples": ys.len(), "max_abs_diff": max_col(4) }),
        Some(ctx.tol.grid),
    ));
    o.file("example1_table.csv", csv);
    Ok(o)
}

fn harness_opts(ctx: &Ctx, stream: u64) -> HarnessOptions {
    HarnessOptions {
        seed: ctx.sub(stream),
        tol: ctx.tol.harness(),
        ..Default::default()
    }
}

fn strategy_summary(v: &asymconj::wellposed::StatementIi) -> serde_json::Value {
    let mut out = serde_json::Map::new();
    for s in Strategy::GENERATED {
        let ts: Vec<_> = v.traces.iter().filter(|t| t.strategy == s).collect();
        out.insert(
            serde_json::to_value(s)
                .unwrap()
                .as_str()
                .unwrap()
                .to_string(),
            json!({
                "traces": ts.len(),
                "minimising": ts.iter().filter(|t| t.minimising).count(),
                "max_tail": ts.iter().map(|t| t.tail).fold(0.0, f64::max),
            }),
        );
    }
    out.into()
}

fn all_generated_minimising(v: &asymconj::wellposed::StatementIi) -> bool {
    Strategy::GENERATED.iter().all(|s| {
        let ts: Vec<_> = v.traces.iter().filter(|t| t.strategy == *s).collect();
        !ts.is_empty() && ts.iter().all(|t| t.minimising)
    })
}

fn example1_frechet(ctx: &Ctx) -> Result<Outcome, Error> {
    let mut o = Outcome::default();
    if !ctx.wants(Mode::Frechet) {
        return Ok(o);
    }
    let prob = example_problem(ctx, vec![-1.0, -1.0])?;
    let v = theorem_harness(&prob, Mode::Frechet, &harness_opts(ctx, 40))?;
    let ii = &v.statement_ii;
    o.push(Record::check(
        "example1/statement-ii/frechet",
        "frechet-duality/ii",
        ii.holds && all_generated_minimising(ii),
        json!({ "strategies": strategy_summary(ii) }),
        Some(ctx.tol.converge),
    ));
    o.push(Record::check(
        "example1/statement-iii",
        "frechet-duality/iii",
        v.statement_iii.holds,
        json!({
            "point": v.statement_iii.grid_point,
            "f": v.statement_iii.f_value,
            "biconjugate": v.statement_iii.biconjugate_value,
        }),
        Some(ctx.tol.grid),
    ));
    match &v.statement_i_evidence {
        Some(Evidence::Frechet(c)) => {
            let bound_ok = c
                .curve
                .radii
                .iter()
                .zip(&c.curve.remainders)
                .all(|(t, r)| *r <= 0.3 * t + 1e-6);
            o.push(Record::check(
                "example1/frechet-remainder",
                "frechet-duality/i",
                c.verdict == asymconj::smoothness::FrechetVerdict::Consistent && bound_ok,
                json!({
                    "verdict": c.verdict,
                    "decreasing": c.curve.is_decreasing(),
                    "below_0.3t": bound_ok,
                    "last_remainder": c.curve.remainders.last(),
                }),
                Some(ctx.tol.frechet),
            ));
            o.file("frechet_remainder.csv", c.curve.to_csv());
        }
        other => o.push(Record::check(
            "example1/frechet-remainder",
            "frechet-duality/i",
            false,
            json!({ "evidence": format!("{other:?}") }),
            Some(ctx.tol.frechet),
        )),
    }
    o.push(Record::check(
        "example1/primal-sequence",
        "frechet-duality/i",
        v.primal_minimising_sequence,
        json!({ "constant_trace": v.primal_minimising_sequence }),
        None,
    ));
    Ok(o)
}

fn example1_gateaux(ctx: &Ctx) -> Result<Outcome, Error> {
    let mut o = Outcome::default();
    if !ctx.wants(Mode::Gateaux) {
        return Ok(o);
    }
    let prob = example_problem(ctx, vec![-1.0, -1.0])?;
    let v = theorem_harness(&prob, Mode::Gateaux, &harness_opts(ctx, 50))?;
    let ii = &v.statement_ii;
    o.push(Record::check(
        "example1/statement-ii/weak",
        "gateaux-duality/ii",
        ii.holds && all_generated_minimising(ii),
        json!({ "strategies": strategy_summary(ii), "functionals": ii.functionals.len() }),
        Some(ctx.tol.converge),
    ));
    match &v.statement_i_evidence {
        Some(Evidence::Gateaux { records }) => {
            let worst = records
                .iter()
                .map(|r| (r.estimate.limit - r.expected).abs())
                .fold(0.0, f64::max);
            let mut csv = String::from("psi1,psi2,estimate,expected,abs_diff\n");
            for r in records {
                let _ = writeln!(
                    csv,
                    "{:?},{:?},{:?},{:?},{:?}",
                    r.direction[0],
                    r.direction[1],
                    r.estimate.limit,
                    r.expected,
                    (r.estimate.limit - r.expected).abs()
                );
            }
            o.file("example1_gateaux.csv", csv);
            o.push(Record::check(
                "example1/gateaux-derivative",
                "gateaux-duality/i",
                records.len() == 10 && worst <= ctx.tol.gateaux,
                json!({ "directions": records.len(), "max_abs_diff": worst }),
                Some(ctx.tol.gateaux),
            ));
        }
        other => o.push(Record::check(
            "example1/gateaux-derivative",
            "gateaux-duality/i",
            false,
            json!({ "evidence": format!("{other:?}") }),
            Some(ctx.tol.gateaux),
        )),
    }
    Ok(o)
}

fn asymmetry_witness(ctx: &Ctx) -> Result<Outcome, Error> {
    // At φ = (-1, 0) the objective is flat along +e₂, a direction on which
    // the reversed norm vanishes.
    let prob = example_problem(ctx, vec![-1.0, 0.0])?;
    let rep = minimise(&prob)?;
    let traces = gen_minimising_sequences(
        &prob,
        &rep,
        Strategy::AdversarialNullcone,
        4,
        ctx.sub(60),
        &TraceOptions {
            value_tol: ctx.tol.sampled,
            ..Default::default()
        },
    )?;
    let minimising = traces.iter().all(|t| t.minimising);
    let reversed_tail = traces
        .iter()
        .map(|t| *t.dist_reversed.last().unwrap())
        .fold(0.0, f64::max);
    let primal_min = traces
        .iter()
        .flat_map(|t| t.dist_primal.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let mut csv = String::from("trace,n,dist_reversed,dist_primal\n");
    for (k, t) in traces.iter().enumerate() {
        for (n, (a, b)) in t.dist_reversed.iter().zip(&t.dist_primal).enumerate() {
            let _ = writeln!(csv, "{k},{n},{a:?},{b:?}");
        }
    }
    let mut o = Outcome::default();
    o.file("asymmetry_traces.csv", csv);
    o.push(Record::check(
        "example1/asymmetry-witness",
        "asymmetric-convergence",
        minimising && reversed_tail <= ctx.tol.converge && primal_min >= 0.1,
        json!({
            "phi": [-1.0, 0.0],
            "minimiser": rep.argmin,
            "minimising": minimising,
            "reversed_distance_last": reversed_tail,
            "primal_distance_min": primal_min,
        }),
        Some(ctx.tol.converge),
    ));
    Ok(o)
}

fn modulus(ctx: &Ctx) -> Result<Outcome, Error> {
    let prob = example_problem(ctx, vec![-1.0, -1.0])?;
    let rep = minimise(&prob)?;
    let ts: Vec<f64> = (1..=40).map(|k| k as f64 * 0.05).collect();
    let m = wellposedness_modulus(
        &prob,
        &rep,
        &ts,
        &ModulusOptions {
            seed: ctx.sub(70),
            ..Default::default()
        },
    )?;
    let a_half = m.alpha.at(0.5).unwrap_or(f64::NAN);
    let monotone = m.alpha.slope_monotone(ctx.tol.exact);
    let cb = coercivity_bound_check(&prob, &rep, &m.alpha, ctx.tol.grid);
    let mut o = Outcome::default();
    o.push(Record::check(
        "example1/modulus",
        "wellposedness-modulus",
        (a_half - 0.25).abs() <= 0.02 && monotone && m.positive,
        json!({ "alpha_at_0.5": a_half, "slope_monotone": monotone, "positive": m.positive }),
        Some(0.02),
    ));
    o.push(Record::check(
        "example1/coercivity-bound",
        "modulus-coercivity-bound",
        cb.holds,
        json!({ "worst_slack": cb.worst_slack, "worst_point": cb.worst_point }),
        Some(ctx.tol.grid),
    ));
    o.file("modulus.csv", m.to_csv());
    Ok(o)
}

fn flat_valley(ctx: &Ctx) -> Result<Outcome, Error> {
    // f(x) = max(|x| - 1, 0) under a symmetric norm: every point of
    // [-1, 1] minimises, so (ii) must fail while (iii) still holds.
    let grid = GridSpec::new(vec![Axis::new(-2.0, 2.0, 201)?])?;
    let f = GridFn::from_fn(grid, |x| (x[0].abs() - 1.0).max(0.0))?;
    let dual = GridSpec::new(vec![Axis::new(-4.0, 4.0, 401)?])?;
    let prob = Problem::new(
        Objective::Grid(f),
        Functional::zero(1),
        AsymNorm::weighted(vec![1.0], vec![1.0])?,
        dual,
    )?;
    let v = theorem_harness(&prob, Mode::Frechet, &harness_opts(ctx, 80))?;
    let mut o = Outcome::default();
    o.push(Record::check(
        "control/flat-valley",
        "frechet-duality/ii",
        !v.statement_ii.holds && v.statement_iii.holds && v.statement_i_evidence.is_none(),
        json!({
            "statement_ii": v.statement_ii.holds,
            "statement_iii": v.statement_iii.holds,
            "ties": v.minimisation.ties,
        }),
        Some(ctx.tol.converge),
    ));
    Ok(o)
}

fn cgf_two_atom(ctx: &Ctx) -> Result<Outcome, Error> {
    let m = CgfModel::two_atom();
    let mut o = Outcome::default();
    let rep = cgf_conjugate(&m, &[0.75, 0.25], &ConjugateOptions::default())?;
    let t_err = (rep.t[0] - TWO_ATOM_T)
        .abs()
        .max((rep.t[1] + TWO_ATOM_T).abs());
    let w_err = (rep.value - TWO_ATOM_W).abs();
    o.push(Record::check(
        "cgf/two-atom/conjugate",
        "cgf-conjugate",
        w_err <= ctx.tol.sampled && t_err <= ctx.tol.sampled,
        json!({ "value": rep.value, "t": rep.t, "value_error": w_err, "t_error": t_err }),
        Some(ctx.tol.sampled),
    ));
    let nc = coercivity_check(&m, &[1.0, 0.0], &[1e-3, 0.1, 0.5])?;
    let refused = matches!(
        cgf_conjugate(&m, &[1.0, 0.0], &ConjugateOptions::default()),
        Err(Error::NonCoercive(_))
    );
    o.push(Record::check(
        "cgf/two-atom/non-coercive",
        "cgf-coercivity",
        !nc.coercive && refused,
        json!({ "margin": nc.margin, "refused": refused }),
        None,
    ));
    let at_mu = cgf_conjugate(&m, &[0.5, 0.5], &ConjugateOptions::default())?;
    let t_max = at_mu.t.iter().map(|v| v.abs()).fold(0.0, f64::max);
    o.push(Record::check(
        "cgf/two-atom/reference-measure",
        "cgf-conjugate",
        at_mu.value.abs() <= ctx.tol.exact && t_max <= ctx.tol.sampled,
        json!({ "value": at_mu.value, "max_abs_t": t_max }),
        Some(ctx.tol.sampled),
    ));
    Ok(o)
}

fn random_models(ctx: &Ctx) -> Result<Vec<CgfModel>, Error> {
    [(8, 3), (6, 2), (4, 1)]
        .iter()
        .enumerate()
        .map(|(i, &(k, d))| CgfModel::random(k, d, ctx.sub(100 + i as u64)))
        .collect()
}

struct PointResult {
    derivative: f64,
    weak_ok: bool,
    minimising: usize,
    traces: usize,
    deviation: f64,
    oracle: f64,
    rows: String,
}

fn cgf_point(ctx: &Ctx, mi: usize, model: &CgfModel, j: usize) -> Result<PointResult, Error> {
    let seed = ctx.sub(10_000 + 100 * mi as u64 + j as u64);
    let (y, a) = gibbs_dual_point(model, seed, 0.5);
    let tm = tilted_minimise(model, &y, 8, seed)?;
    let oracle =
        tm.t.iter()
            .zip(model.features(&a))
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
    let mut r = rng::seeded(seed ^ 0xd1);
    let mut derivative: f64 = 0.0;
    let mut rows = String::new();
    for p in 0..10 {
        let psi = rng::uniform_vec(&mut r, model.k(), 0.0, 1.0);
        let e = conjugate_derivative(model, &y, &psi, ctx.tol.gateaux)?;
        let expected = dot(&psi, &tm.t);
        let diff = (e.limit - expected).abs();
        derivative = derivative.max(diff);
        let _ = writeln!(rows, "{mi},{j},{p},{:?},{expected:?},{diff:?}", e.limit);
    }
    let mut weak_ok = true;
    let mut minimising = 0;
    let mut traces = 0;
    for s in [CgfStrategy::Descent, CgfStrategy::RandomPerturbed] {
        for tr in gen_cgf_traces(model, &y, &tm, s, 8, 200, seed)? {
            traces += 1;
            if tr.minimising {
                minimising += 1;
                weak_ok &= pbar_weak_check(model, &tr.points, &tm.t, ctx.tol.converge)?.converges;
            }
        }
    }
    Ok(PointResult {
        derivative,
        weak_ok,
        minimising,
        traces,
        deviation: tm.max_deviation,
        oracle,
        rows,
    })
}

fn cgf_random(ctx: &Ctx) -> Result<Outcome, Error> {
    let models = random_models(ctx)?;
    let mut certs = Vec::new();
    for m in &models {
        certs.push(cgf::validate_model(m)?);
    }
    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|mi| (0..20).map(move |j| (mi, j)))
        .collect();
    let results = par::map_slice(&jobs, |&(mi, j)| cgf_point(ctx, mi, &models[mi], j));
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max = |f: &dyn Fn(&PointResult) -> f64| results.iter().map(f).fold(0.0, f64::max);
    let derivative = max(&|r| r.derivative);
    let deviation = max(&|r| r.deviation);
    let oracle = max(&|r| r.oracle);
    let weak_ok = results.iter().all(|r| r.weak_ok);
    let minimising: usize = results.iter().map(|r| r.minimising).sum();
    let traces: usize = results.iter().map(|r| r.traces).sum();
    let mut csv = String::from("model,y,psi,estimate,expected,abs_diff\n");
    for r in &results {
        csv.push_str(&r.rows);
    }
    let mut o = Outcome::default();
    o.file("cgf_derivatives.csv", csv);
    o.push(Record::check(
        "cgf/models/validate",
        "cgf-model",
        true,
        json!({
            "models": models.len(),
            "mean_residuals": certs.iter().map(|c| c.mean_residual).collect::<Vec<_>>(),
            "constant_residuals": certs.iter().map(|c| c.constant_residual).collect::<Vec<_>>(),
        }),
        Some(cgf::MEAN_TOL),
    ));
    o.push(Record::check(
        "cgf/models/derivative",
        "cgf-differentiability",
        derivative <= ctx.tol.gateaux,
        json!({ "points": results.len(), "directions": 10, "max_abs_diff": derivative }),
        Some(ctx.tol.gateaux),
    ));
    o.push(Record::check(
        "cgf/models/weak-convergence",
        "cgf-wellposedness",
        weak_ok && minimising > 0,
        json!({ "traces": traces, "minimising": minimising, "all_converge": weak_ok }),
        Some(ctx.tol.converge),
    ));
    o.push(Record::check(
        "cgf/models/multi-start",
        "cgf-minimiser-set",
        deviation <= ctx.tol.sampled && oracle <= ctx.tol.sampled,
        json!({ "max_deviation": deviation, "max_oracle_error": oracle }),
        Some(ctx.tol.sampled),
    ));
    Ok(o)
}

fn cgf_calculus(ctx: &Ctx) -> Result<Outcome, Error> {
    let models = random_models(ctx)?;
    let mut r = rng::seeded(ctx.sub(200));
    let mut fd: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for p in 0..100 {
        let m = &models[p % models.len()];
        let a = rng::gaussian_vec(&mut r, m.dim());
        let g = cgf_gradient(m, &a)?;
        let h = 1e-5;
        for i in 0..m.dim() {
            let mut up = a.clone();
            let mut dn = a.clone();
            up[i] += h;
            dn[i] -= h;
            let est = (cgf_value(m, &up)? - cgf_value(m, &dn)?) / (2.0 * h);
            fd = fd.max((est - g[i]).abs());
        }
        min_eig = min_eig.min(hessian_min_eigenvalue(m, &a)?);
    }
    let props: Vec<_> = models
        .iter()
        .enumerate()
        .map(|(i, m)| property_checks(m, 1000, ctx.sub(300 + i as u64)))
        .collect();
    let growth = props
        .iter()
        .map(|p| p.min_growth_slack)
        .fold(f64::INFINITY, f64::min);
    let mean = props
        .iter()
        .map(|p| p.min_mean)
        .fold(f64::INFINITY, f64::min);
    let ident = props.iter().map(|p| p.value_identity).fold(0.0, f64::max);
    let mut o = Outcome::default();
    o.push(Record::check(
        "cgf/calculus/gradient",
        "cgf-gibbs-moments",
        fd <= ctx.tol.sampled,
        json!({ "pairs": 100, "max_abs_diff": fd }),
        Some(ctx.tol.sampled),
    ));
    o.push(Record::check(
        "cgf/calculus/hessian-psd",
        "cgf-gibbs-moments",
        min_eig >= -1e-10,
        json!({ "min_eigenvalue": min_eig }),
        Some(1e-10),
    ));
    o.push(Record::check(
        "cgf/properties",
        "cgf-properties",
        growth >= -ctx.tol.exact && mean >= -1e-10 && ident <= ctx.tol.exact,
        json!({
            "samples_per_model": 1000,
            "min_growth_slack": growth,
            "min_mean": mean,
            "max_value_identity_gap": ident,
        }),
        Some(ctx.tol.exact),
    ));
    Ok(o)
}
