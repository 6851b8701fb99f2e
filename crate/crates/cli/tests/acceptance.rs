//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Thresholds are pinned here, not read from the CLI
//! defaults.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use asymconj::asymnorm::{AsymNorm, Side};
use asymconj::cgf::{
    cgf_conjugate, cgf_gradient, cgf_value, coercivity_check, conjugate_derivative, gen_cgf_traces,
    gibbs_dual_point, hessian_min_eigenvalue, pbar_weak_check, property_checks, tilted_minimise,
    CgfModel, CgfStrategy, ConjugateOptions,
};
use asymconj::conjugate::{
    biconjugate, conjugate_at, conjugate_brute, conjugate_fast, Axis, GridFn, GridSpec,
};
use asymconj::smoothness::{right_gateaux_estimate, Schedule};
use asymconj::wellposed::{
    check_statement_iii_at, coercivity_bound_check, gen_minimising_sequences, minimise,
    theorem_harness, wellposedness_modulus, Evidence, HarnessOptions, Mode, ModulusOptions,
    Problem, Strategy, TraceOptions,
};
use asymconj::{rng, Error};

const SEED: u64 = 20_261_019;

const BICONJ_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-12;
const RUNTIME_LIMIT: Duration = Duration::from_secs(10);
const GRID_TOL: f64 = 0.05;
const H: f64 = 0.02;
const TAIL_TOL: f64 = 1e-3;
const WITNESS_PRIMAL: f64 = 0.1;
const ALPHA_HALF: f64 = 0.25;
const ALPHA_TOL: f64 = 0.02;
const GATEAUX_TOL: f64 = 1e-4;
const CGF_TOL: f64 = 1e-6;
const W_TWO_ATOM: f64 = 0.130812;
const T_TWO_ATOM: f64 = 0.549306;
const HESSIAN_FLOOR: f64 = -1e-10;
const GROWTH_TOL: f64 = 1e-9;
const VERIFY_LIMIT: Duration = Duration::from_secs(60);

type Verdict = Result<(bool, String), Error>;
type Criterion = (&'static str, fn() -> Verdict);

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pbar(y: &[f64]) -> f64 {
    y.iter().map(|v| (-v).max(0.0).powi(2)).sum::<f64>().sqrt()
}

fn criterion1() -> Verdict {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100u64 {
        let (count, dim) = if k < 50 { (257, 1) } else { (65, 2) };
        let grid = GridSpec::cube(-1.0, 1.0, count, dim)?;
        let dual = GridSpec::cube(-3.0, 3.0, count, dim)?;
        let f = GridFn::random(grid, SEED + k, 0.15)?;
        let fbb = biconjugate(&f, &dual, None)?;
        for (v, b) in f.values().iter().zip(fbb.values()) {
            if v.is_finite() {
                worst = worst.max(b - v);
            }
        }
    }
    let elapsed = start.elapsed();
    Ok((
        worst <= BICONJ_TOL && elapsed < RUNTIME_LIMIT,
        format!("max(f** - f) = {worst:.3e}, {elapsed:.2?}"),
    ))
}

fn criterion2() -> Verdict {
    let start = Instant::now();
    let cone = AsymNorm::half_euclidean(2)?.dual_cone_pattern(Side::Conjugate);
    let mut worst: f64 = 0.0;
    let mut inf_mismatch = 0;
    for k in 0..100u64 {
        let (f, dual, c) = if k < 50 {
            let grid = GridSpec::new(vec![Axis::new(-2.0, 1.0, 150 + k as usize)?])?;
            let dual = GridSpec::new(vec![Axis::new(-2.5, 2.5, 211)?])?;
            (GridFn::random(grid, SEED ^ k, 0.1)?, dual, None)
        } else {
            let grid = GridSpec::new(vec![Axis::new(-1.0, 1.0, 31)?, Axis::new(-1.5, 0.5, 27)?])?;
            let dual = GridSpec::cube(-2.0, 2.0, 25, 2)?;
            let c = if k % 2 == 0 { cone.as_ref() } else { None };
            (GridFn::random(grid, SEED ^ k, 0.1)?, dual, c)
        };
        let a = conjugate_fast(&f, &dual, c)?;
        let b = conjugate_brute(&f, &dual, c)?;
        for (x, y) in a.values().iter().zip(b.values()) {
            if x.is_finite() && y.is_finite() {
                worst = worst.max((x - y).abs());
            } else if x != y {
                inf_mismatch += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Ok((
        worst <= ORACLE_TOL && inf_mismatch == 0 && elapsed < RUNTIME_LIMIT,
        format!(
            "max |fast - brute| = {worst:.3e}, infinity mismatches {inf_mismatch}, {elapsed:.2?}"
        ),
    ))
}

fn criterion3() -> Verdict {
    let base = Problem::half_euclidean_square(vec![-1.0, -1.0], H, 1 << 22)?;
    let mut r = rng::seeded(SEED + 3);
    let (mut conj, mut cell, mut bic) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..25 {
        let y = rng::uniform_vec(&mut r, 2, -1.0, 0.0);
        conj = conj.max((conjugate_at(base.sampled(), &y)? - pbar(&y).powi(2) / 4.0).abs());
        let prob = Problem::half_euclidean_square(y.clone(), H, 1 << 22)?;
        let rep = minimise(&prob)?;
        for (a, yi) in rep.grid_argmin.iter().zip(&y) {
            cell = cell.max((a - yi / 2.0).abs());
        }
        let half: Vec<f64> = y.iter().map(|v| v / 2.0).collect();
        let iii = check_statement_iii_at(&prob, &half, &Default::default())?;
        bic = bic.max((iii.biconjugate_value - iii.f_value).abs());
    }
    Ok((
        conj <= GRID_TOL && cell <= H + 1e-12 && bic <= GRID_TOL,
        format!("conjugate err {conj:.3e}, argmin offset {cell:.3e}, f** gap {bic:.3e}"),
    ))
}

fn criterion4() -> Verdict {
    let prob = Problem::half_euclidean_square(vec![-1.0, -1.0], H, 1 << 22)?;
    let opts = HarnessOptions {
        seed: SEED + 4,
        ..Default::default()
    };
    let v = theorem_harness(&prob, Mode::Frechet, &opts)?;
    let mut strategies_ok = true;
    let mut tail: f64 = 0.0;
    for s in Strategy::GENERATED {
        let ts: Vec<_> = v
            .statement_ii
            .traces
            .iter()
            .filter(|t| t.strategy == s)
            .collect();
        strategies_ok &= !ts.is_empty() && ts.iter().all(|t| t.minimising && t.tail <= TAIL_TOL);
        tail = ts.iter().map(|t| t.tail).fold(tail, f64::max);
    }
    let (remainder_ok, last_r) = match &v.statement_i_evidence {
        Some(Evidence::Frechet(c)) => (
            c.curve.is_decreasing()
                && c.curve
                    .radii
                    .iter()
                    .zip(&c.curve.remainders)
                    .all(|(t, r)| *r <= 0.3 * t + 1e-6),
            c.curve.remainders.last().copied().unwrap_or(f64::NAN),
        ),
        _ => (false, f64::NAN),
    };
    let iii = v.statement_iii.holds;

    let flat = Problem::half_euclidean_square(vec![-1.0, 0.0], H, 1 << 22)?;
    let rep = minimise(&flat)?;
    let traces = gen_minimising_sequences(
        &flat,
        &rep,
        Strategy::AdversarialNullcone,
        4,
        SEED + 44,
        &TraceOptions::default(),
    )?;
    let rev_last = traces
        .iter()
        .map(|t| *t.dist_reversed.last().unwrap())
        .fold(0.0, f64::max);
    let primal_min = traces
        .iter()
        .flat_map(|t| t.dist_primal.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let witness =
        traces.iter().all(|t| t.minimising) && rev_last <= TAIL_TOL && primal_min >= WITNESS_PRIMAL;
    Ok((
        strategies_ok && v.statement_ii.holds && remainder_ok && iii && witness,
        format!(
            "tail {tail:.3e}, r(t_min) {last_r:.3e}, (iii) {iii}, witness p >= {primal_min:.3}, pbar -> {rev_last:.3e}"
        ),
    ))
}

fn criterion5() -> Verdict {
    let prob = Problem::half_euclidean_square(vec![-1.0, -1.0], H, 1 << 22)?;
    let rep = minimise(&prob)?;
    let ts: Vec<f64> = (1..=30).map(|k| k as f64 * 0.05).collect();
    let m = wellposedness_modulus(
        &prob,
        &rep,
        &ts,
        &ModulusOptions {
            seed: SEED + 5,
            ..Default::default()
        },
    )?;
    let a = m.alpha.at(0.5).unwrap_or(f64::NAN);
    // α(s)/s ≤ α(t)/t for every sampled s < t, checked pairwise here.
    let pts: Vec<(f64, f64)> = m
        .alpha
        .abscissae()
        .iter()
        .zip(m.alpha.values())
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, v)| (*t, *v))
        .collect();
    let monotone = pts
        .iter()
        .enumerate()
        .all(|(i, (s, as_))| pts[i + 1..].iter().all(|(t, at)| as_ / s <= at / t + 1e-12));
    let cb = coercivity_bound_check(&prob, &rep, &m.alpha, GRID_TOL);
    Ok((
        (a - ALPHA_HALF).abs() <= ALPHA_TOL && monotone && cb.holds,
        format!(
            "alpha(0.5) = {a:.4}, slope monotone {monotone}, worst slack {:.3e}",
            cb.worst_slack
        ),
    ))
}

fn criterion6() -> Verdict {
    let prob = Problem::half_euclidean_square(vec![-1.0, -1.0], H, 1 << 22)?;
    let phi = [-1.0, -1.0];
    let x = [-0.5, -0.5];
    let mut r = rng::seeded(SEED + 6);
    let schedule = Schedule::default();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let psi = rng::uniform_vec(&mut r, 2, -1.0, 0.0);
        let e = right_gateaux_estimate(|y| prob.f_conj(y), &phi, &psi, &schedule, GATEAUX_TOL)?;
        worst = worst.max((e.limit - dot(&psi, &x)).abs());
    }
    Ok((
        worst <= GATEAUX_TOL,
        format!("max |estimate - <psi, y/2>| = {worst:.3e}"),
    ))
}

fn criterion7() -> Verdict {
    let m = CgfModel::two_atom();
    let rep = cgf_conjugate(&m, &[0.75, 0.25], &ConjugateOptions::default())?;
    let w_ok = (rep.value - W_TWO_ATOM).abs() <= CGF_TOL;
    let t_ok = (rep.t[0] - T_TWO_ATOM).abs() <= CGF_TOL && (rep.t[1] + T_TWO_ATOM).abs() <= CGF_TOL;
    let nc = !coercivity_check(&m, &[1.0, 0.0], &[1e-3])?.coercive
        && matches!(
            cgf_conjugate(&m, &[1.0, 0.0], &ConjugateOptions::default()),
            Err(Error::NonCoercive(_))
        );

    let models = [(8, 3), (5, 2), (3, 1)]
        .iter()
        .enumerate()
        .map(|(i, &(k, d))| CgfModel::random(k, d, SEED + 70 + i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut deriv, mut dev, mut fd): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut coercive = true;
    let mut weak = true;
    let mut minimising = 0;
    let mut min_eig = f64::INFINITY;
    let mut growth = f64::INFINITY;
    for (mi, model) in models.iter().enumerate() {
        for j in 0..20u64 {
            let seed = SEED + 1000 * mi as u64 + j;
            let (y, a) = gibbs_dual_point(model, seed, 0.5);
            coercive &= coercivity_check(model, &y, &[1e-3])?.coercive;
            let tm = tilted_minimise(model, &y, 8, seed)?;
            dev = dev.max(tm.max_deviation);
            let mut r = rng::seeded(seed ^ 0x5eed);
            for _ in 0..10 {
                let psi = rng::uniform_vec(&mut r, model.k(), 0.0, 1.0);
                let e = conjugate_derivative(model, &y, &psi, GATEAUX_TOL)?;
                deriv = deriv.max((e.limit - dot(&psi, &tm.t)).abs());
            }
            for s in [CgfStrategy::Descent, CgfStrategy::RandomPerturbed] {
                for tr in gen_cgf_traces(model, &y, &tm, s, 4, 200, seed)? {
                    if tr.minimising {
                        minimising += 1;
                        weak &= pbar_weak_check(model, &tr.points, &tm.t, TAIL_TOL)?.converges;
                    }
                }
            }
            let h = 1e-5;
            for i in 0..model.dim() {
                let mut up = a.clone();
                let mut dn = a.clone();
                up[i] += h;
                dn[i] -= h;
                let est = (cgf_value(model, &up)? - cgf_value(model, &dn)?) / (2.0 * h);
                fd = fd.max((est - cgf_gradient(model, &a)?[i]).abs());
            }
            min_eig = min_eig.min(hessian_min_eigenvalue(model, &a)?);
        }
        growth = growth.min(property_checks(model, 1000, SEED + 77 + mi as u64).min_growth_slack);
    }
    let ok = w_ok
        && t_ok
        && nc
        && coercive
        && deriv <= GATEAUX_TOL
        && weak
        && minimising > 0
        && dev <= CGF_TOL
        && fd <= CGF_TOL
        && min_eig >= HESSIAN_FLOOR
        && growth >= -GROWTH_TOL;
    Ok((
        ok,
        format!(
            "W* {:.9}, T ({:.9}, {:.9}), (1,0) refused {nc}, derivative {deriv:.3e}, \
             weak {weak} over {minimising} traces, multi-start {dev:.3e}, fd {fd:.3e}, \
             min eig {min_eig:.3e}, growth slack {growth:.3e}",
            rep.value, rep.t[0], rep.t[1]
        ),
    ))
}

fn strip_clock(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_clock_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn snapshot(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let p = e.expect("dir entry").path();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let body = std::fs::read_to_string(&p).expect("output file");
            let body = if name == "report.json" {
                strip_clock(&body)
            } else {
                body
            };
            (name, body)
        })
        .collect();
    files.sort();
    files
}

fn criterion8() -> Verdict {
    let exe = env!("CARGO_BIN_EXE_asymconj");
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut runs = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut codes = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let start = Instant::now();
        let status = Command::new(exe)
            .args(["verify", "--seed", "7", "--out"])
            .arg(&out)
            .output()
            .expect("spawn verify");
        slowest = slowest.max(start.elapsed());
        codes.push(status.status.code());
        runs.push(snapshot(&out));
    }
    let identical = runs[0] == runs[1];
    let ok = codes.iter().all(|c| *c == Some(0)) && identical && slowest < VERIFY_LIMIT;
    Ok((
        ok,
        format!(
            "exit {codes:?}, {} files identical {identical}, slowest {slowest:.2?}",
            runs[0].len()
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("biconjugate below f", criterion1),
        ("fast conjugate equals brute force", criterion2),
        ("example 1 closed form", criterion3),
        ("frechet harness on example 1", criterion4),
        ("gauge machinery", criterion5),
        ("gateaux harness", criterion6),
        ("cgf example", criterion7),
        ("verify runtime and determinism", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {} {}: {name} ({detail})",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
