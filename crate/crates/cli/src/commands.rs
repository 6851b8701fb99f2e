//! `example1`, `cgf` and `conjugate`: single-instance pipelines.

use std::fmt::Write as _;

use asymconj::cgf::{
    self, coercivity_check, conjugate_derivative, gen_cgf_traces, pbar_weak_check, tilted_minimise,
    CgfModel, CgfStrategy, ConjugateOptions,
};
use asymconj::conjugate::{biconjugate, conjugate_at, conjugate_fast, GridFn, GridSpec};
use asymconj::wellposed::{
    check_statement_iii_at, coercivity_bound_check, minimise, theorem_harness,
    wellposedness_modulus, Evidence, HarnessOptions, Mode, ModulusOptions, Problem,
};
use asymconj::{rng, Error};
use serde_json::json;

use crate::config::{RunConfig, UsageError};
use crate::report::{Outcome, Record};

fn read(path: &std::path::Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))
}

fn fstar_closed(y: &[f64]) -> f64 {
    if y.iter().any(|&v| v > 0.0) {
        f64::INFINITY
    } else {
        y.iter().map(|v| v * v).sum::<f64>() / 4.0
    }
}

/// Squared reversed half-Euclidean norm on `[-2, 2]^n` at `φ = y`.
pub fn example1(cfg: &RunConfig) -> Result<Outcome, UsageError> {
    let dim = cfg.dim.unwrap_or(2);
    if !(2..=4).contains(&dim) {
        return Err(UsageError(format!(
            "dim must be between 2 and 4, got {dim}"
        )));
    }
    let y = cfg.y.clone().unwrap_or_else(|| vec![-1.0; dim]);
    if y.len() != dim {
        return Err(UsageError(format!(
            "y has {} entries, dim is {dim}",
            y.len()
        )));
    }
    let h = cfg.h.unwrap_or(0.02);
    let prob = Problem::half_euclidean_square(y.clone(), h, cfg.grid_cap)
        .map_err(|e| UsageError(e.to_string()))?;
    let tol = cfg.tol;
    let mut o = Outcome::default();

    let mut r = rng::seeded(cfg.seed);
    let mut table = String::from("y,grid,closed_form,abs_diff\n");
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let ys = rng::uniform_vec(&mut r, dim, -1.0, 0.0);
        let g = conjugate_at(prob.sampled(), &ys).map_err(|e| UsageError(e.to_string()))?;
        let c = fstar_closed(&ys);
        worst = worst.max((g - c).abs());
        let joined: Vec<String> = ys.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(
            table,
            "{},{g:?},{c:?},{:?}",
            joined.join(";"),
            (g - c).abs()
        );
    }
    o.file("example1_table.csv", table);
    o.push(Record::check(
        "example1/closed-form",
        "example1-conjugate",
        worst <= tol.grid,
        json!({ "samples": 25, "max_abs_diff": worst }),
        Some(tol.grid),
    ));

    let mut checks = || -> Result<(), Error> {
        let rep = minimise(&prob)?;
        let offset = rep
            .grid_argmin
            .iter()
            .zip(&y)
            .map(|(a, yi)| (a - yi / 2.0).abs())
            .fold(0.0, f64::max);
        o.push(Record::check(
            "example1/argmin",
            "example1-minimiser",
            offset <= h + 1e-12,
            json!({ "grid_argmin": rep.grid_argmin, "argmin": rep.argmin, "inf": rep.inf_value }),
            Some(h),
        ));
        let half: Vec<f64> = y.iter().map(|v| v / 2.0).collect();
        let iii = check_statement_iii_at(&prob, &half, &tol.harness())?;
        o.push(Record::check(
            "example1/statement-iii",
            "frechet-duality/iii",
            iii.holds,
            json!({ "f": iii.f_value, "biconjugate": iii.biconjugate_value, "snapped": iii.snapped }),
            Some(tol.grid),
        ));
        let ts: Vec<f64> = (1..=40).map(|k| k as f64 * 0.05).collect();
        let m = wellposedness_modulus(
            &prob,
            &rep,
            &ts,
            &ModulusOptions {
                seed: cfg.seed,
                ..Default::default()
            },
        )?;
        let cb = coercivity_bound_check(&prob, &rep, &m.alpha, tol.grid);
        o.push(Record::check(
            "example1/coercivity-bound",
            "modulus-coercivity-bound",
            cb.holds && m.positive,
            json!({ "worst_slack": cb.worst_slack, "alpha_positive": m.positive }),
            Some(tol.grid),
        ));
        o.file("modulus.csv", m.to_csv());
        let opts = HarnessOptions {
            seed: cfg.seed,
            tol: tol.harness(),
            ..Default::default()
        };
        for mode in [Mode::Frechet, Mode::Gateaux] {
            if cfg.mode.is_some_and(|m| m != mode) {
                continue;
            }
            let v = theorem_harness(&prob, mode, &opts)?;
            let tag = match mode {
                Mode::Frechet => "frechet",
                Mode::Gateaux => "gateaux",
            };
            o.push(Record::check(
                &format!("example1/{tag}/statement-ii"),
                &format!("{tag}-duality/ii"),
                v.statement_ii.holds,
                json!({ "traces": v.statement_ii.traces.len() }),
                Some(tol.converge),
            ));
            let ok = v.statement_i().unwrap_or(false);
            let measured = match &v.statement_i_evidence {
                Some(Evidence::Frechet(c)) => {
                    o.file("frechet_remainder.csv", c.curve.to_csv());
                    json!({ "verdict": c.verdict, "last_remainder": c.curve.remainders.last() })
                }
                Some(Evidence::Gateaux { records }) => json!({
                    "directions": records.len(),
                    "max_abs_diff": records
                        .iter()
                        .map(|r| (r.estimate.limit - r.expected).abs())
                        .fold(0.0, f64::max),
                }),
                None => json!({ "evidence": null }),
            };
            let t = match mode {
                Mode::Frechet => tol.frechet,
                Mode::Gateaux => tol.gateaux,
            };
            o.push(Record::check(
                &format!("example1/{tag}/statement-i"),
                &format!("{tag}-duality/i"),
                ok,
                measured,
                Some(t),
            ));
            for d in &v.diagnostics {
                o.push(Record::info(
                    &format!("example1/{tag}/diagnostic"),
                    "plumbing",
                    json!(d),
                ));
            }
        }
        Ok(())
    };
    if let Err(e) = checks() {
        o.push(Record::error("example1/pipeline", "plumbing", e));
    }
    Ok(o)
}

fn model_error(e: Error) -> UsageError {
    match e {
        Error::InvalidModel(_) => UsageError(e.to_string()),
        other => UsageError(format!("invalid model: {other}")),
    }
}

/// Validation, coercivity, conjugate, tilted minimiser and weak
/// convergence for one model and one `y`.
pub fn cgf(cfg: &RunConfig) -> Result<Outcome, UsageError> {
    let (model, builtin) = match &cfg.model {
        Some(p) => (CgfModel::from_json(&read(p)?).map_err(model_error)?, false),
        None => (CgfModel::two_atom(), true),
    };
    let cert = cgf::validate_model(&model).map_err(model_error)?;
    let y = match &cfg.y {
        Some(y) => y.clone(),
        None if builtin => vec![0.75, 0.25],
        None => model.weights().to_vec(),
    };
    if y.len() != model.k() || y.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(UsageError(format!(
            "y must be {} nonnegative numbers",
            model.k()
        )));
    }
    let tol = cfg.tol;
    let mut o = Outcome::default();
    o.push(Record::info("cgf/model", "cgf-model", json!(cert)));

    let mut steps = || -> Result<(), Error> {
        let cv = coercivity_check(&model, &y, &[1e-3, 1e-2, 0.1, 0.25, 0.5])?;
        if !cv.coercive {
            o.push(Record::info(
                "cgf/coercivity",
                "cgf-coercivity",
                json!({
                    "verdict": "non-coercive",
                    "margin": cv.margin,
                    "direction": cv.worst_direction,
                }),
            ));
            return Ok(());
        }
        o.push(Record::check(
            "cgf/coercivity",
            "cgf-coercivity",
            true,
            json!({ "margin": cv.margin, "largest_passing": cv.largest_passing }),
            None,
        ));
        let rep = cgf::cgf_conjugate(
            &model,
            &y,
            &ConjugateOptions {
                seed: cfg.seed,
                ..Default::default()
            },
        )?;
        let tm = tilted_minimise(&model, &y, 16, cfg.seed)?;
        let mut summary = String::from("quantity,value\n");
        let _ = writeln!(summary, "conjugate,{:?}", rep.value);
        for (i, t) in tm.t.iter().enumerate() {
            let _ = writeln!(summary, "t{i},{t:?}");
        }
        o.file("cgf_summary.csv", summary);
        o.push(Record::check(
            "cgf/conjugate",
            "cgf-conjugate",
            rep.gradient_norm <= 1e-10,
            json!({ "value": rep.value, "t": rep.t, "gradient_norm": rep.gradient_norm }),
            Some(1e-10),
        ));
        o.push(Record::check(
            "cgf/tilted-minimiser",
            "cgf-minimiser-set",
            tm.max_deviation <= tol.sampled,
            json!({ "t": tm.t, "interval": tm.interval, "max_deviation": tm.max_deviation }),
            Some(tol.sampled),
        ));

        let mut r = rng::seeded(cfg.seed);
        let mut table = String::from("psi,estimate,expected,abs_diff\n");
        let mut worst: f64 = 0.0;
        for p in 0..10 {
            let psi = if p < model.k() {
                let mut e = vec![0.0; model.k()];
                e[p] = 1.0;
                e
            } else {
                rng::uniform_vec(&mut r, model.k(), 0.0, 1.0)
            };
            let e = conjugate_derivative(&model, &y, &psi, tol.gateaux)?;
            let expected: f64 = psi.iter().zip(&tm.t).map(|(a, b)| a * b).sum();
            let diff = (e.limit - expected).abs();
            worst = worst.max(diff);
            let joined: Vec<String> = psi.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(
                table,
                "{},{:?},{expected:?},{diff:?}",
                joined.join(";"),
                e.limit
            );
        }
        o.file("cgf_derivatives.csv", table);
        o.push(Record::check(
            "cgf/derivative",
            "cgf-differentiability",
            worst <= tol.gateaux,
            json!({ "directions": 10, "max_abs_diff": worst }),
            Some(tol.gateaux),
        ));

        let mut ok = true;
        let mut minimising = 0;
        for s in [CgfStrategy::Descent, CgfStrategy::RandomPerturbed] {
            for tr in gen_cgf_traces(&model, &y, &tm, s, 8, 200, cfg.seed)? {
                if tr.minimising {
                    minimising += 1;
                    ok &= pbar_weak_check(&model, &tr.points, &tm.t, tol.converge)?.converges;
                }
            }
        }
        o.push(Record::check(
            "cgf/weak-convergence",
            "cgf-wellposedness",
            ok && minimising > 0,
            json!({ "traces": 16, "minimising": minimising }),
            Some(tol.converge),
        ));
        Ok(())
    };
    if let Err(e) = steps() {
        o.push(Record::error("cgf/pipeline", "plumbing", e));
    }
    Ok(o)
}

/// Ad-hoc conjugation of a grid function read from JSON.
pub fn conjugate(cfg: &RunConfig) -> Result<Outcome, UsageError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| UsageError("`conjugate` requires --input".into()))?;
    let f: GridFn = serde_json::from_str(&read(input)?)
        .map_err(|e| UsageError(format!("invalid grid function: {e}")))?;
    let dual: GridSpec = match &cfg.dual {
        Some(p) => serde_json::from_str(&read(p)?)
            .map_err(|e| UsageError(format!("invalid dual grid: {e}")))?,
        None => f.grid().clone(),
    };
    if dual.dim() != f.grid().dim() {
        return Err(UsageError("dual grid dimension differs from input".into()));
    }
    for g in [f.grid(), &dual] {
        g.check_cap(cfg.grid_cap)
            .map_err(|e| UsageError(e.to_string()))?;
    }
    let mut o = Outcome::default();
    match conjugate_fast(&f, &dual, None).and_then(|fs| Ok((biconjugate(&f, &dual, None)?, fs))) {
        Ok((fbb, fs)) => {
            let excess = f
                .values()
                .iter()
                .zip(fbb.values())
                .filter(|(v, _)| v.is_finite())
                .map(|(v, b)| b - v)
                .fold(f64::NEG_INFINITY, f64::max);
            o.push(Record::check(
                "conjugate/biconjugate-below",
                "biconjugate-below",
                excess <= cfg.tol.exact,
                json!({ "max_excess": excess }),
                Some(cfg.tol.exact),
            ));
            o.push(Record::info(
                "conjugate/result",
                "plumbing",
                json!({ "points": fs.values().len() }),
            ));
            o.file(
                "conjugate.json",
                serde_json::to_string(&fs).expect("grid function serializes") + "\n",
            );
        }
        Err(e) => o.push(Record::error("conjugate/result", "plumbing", e)),
    }
    Ok(o)
}
