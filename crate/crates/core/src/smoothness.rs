//! One-sided (right) derivative estimation.
//!
//! Only `t ↘ 0` limits are used: the objects of interest live on cones
//! where `x - t y` may leave the domain, so central differences are not
//! available. Quotients are sharpened with first-order Richardson
//! extrapolation.
//!
//! A sampled sphere only bounds the Fréchet remainder from below, so
//! [`right_frechet_check`] reports consistency, never a proof.

use std::fmt::Write as _;

use serde::Serialize;

use crate::asymnorm::{AsymNorm, Side, SignPattern};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::par;
use crate::rng;
use crate::vecops::{add_scaled, dot, euclid};

/// Strictly decreasing positive step sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Schedule(Vec<f64>);

impl Schedule {
    /// Steps must be positive, strictly decreasing and end below `1e-4`.
    pub fn new(t: Vec<f64>) -> Result<Self> {
        validate_decreasing(&t)?;
        if *t.last().unwrap() >= 1e-4 {
            return Err(Error::InvalidSchedule(
                "the last step must be below 1e-4".into(),
            ));
        }
        Ok(Schedule(t))
    }

    /// `t_k = t0 · ratio^{-k}`, `k = 0..=steps`.
    pub fn geometric(t0: f64, ratio: f64, steps: usize) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(Error::InvalidSchedule("ratio must exceed 1".into()));
        }
        Schedule::new((0..=steps).map(|k| t0 * ratio.powi(-(k as i32))).collect())
    }

    pub fn steps(&self) -> &[f64] {
        &self.0
    }
}

impl Default for Schedule {
    /// `0.1 · 2^{-k}` for `k = 0..=12`.
    fn default() -> Self {
        Schedule::geometric(0.1, 2.0, 12).expect("valid default schedule")
    }
}

fn validate_decreasing(t: &[f64]) -> Result<()> {
    if t.len() < 3 {
        return Err(Error::InvalidSchedule("need at least 3 steps".into()));
    }
    if t.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidSchedule("steps must be positive".into()));
    }
    if t.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidSchedule(
            "steps must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// One-sided difference quotients of `f` at a point along a direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeEstimate {
    pub direction: Vec<f64>,
    pub steps: Vec<f64>,
    /// `(f(x + t y) - f(x)) / t`; `+∞` where `f(x + t y)` is.
    pub quotients: Vec<f64>,
    /// Richardson-extrapolated values from consecutive quotient pairs.
    pub extrapolated: Vec<f64>,
    pub limit: f64,
    /// The last three extrapolated values agree within `tol`.
    pub converged: bool,
    pub tol: f64,
}

/// Estimates `lim_{t ↘ 0} (f(x + t y) - f(x)) / t`.
pub fn right_gateaux_estimate<F>(
    f: F,
    point: &[f64],
    direction: &[f64],
    schedule: &Schedule,
    tol: f64,
) -> Result<DerivativeEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    check_dim(point.len(), direction.len())?;
    check_finite(point, "point")?;
    check_finite(direction, "direction")?;
    let fx = f(point);
    if !fx.is_finite() {
        return Err(Error::InfiniteAtPoint);
    }
    let steps = schedule.steps().to_vec();
    let quotients: Vec<f64> = steps
        .iter()
        .map(|&t| {
            let v = f(&add_scaled(point, t, direction));
            if v.is_finite() {
                (v - fx) / t
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let extrapolated: Vec<f64> = (0..steps.len() - 1)
        .map(|k| {
            let r = steps[k] / steps[k + 1];
            (r * quotients[k + 1] - quotients[k]) / (r - 1.0)
        })
        .collect();
    let finite_tail: Vec<f64> = extrapolated
        .iter()
        .rev()
        .take_while(|v| v.is_finite())
        .copied()
        .collect();
    let limit = finite_tail.first().copied().unwrap_or(f64::NAN);
    let converged = finite_tail.len() >= 3 && {
        let last3 = &finite_tail[..3];
        let hi = last3.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = last3.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo <= tol
    };
    Ok(DerivativeEstimate {
        direction: direction.to_vec(),
        steps,
        quotients,
        extrapolated,
        limit,
        converged,
        tol,
    })
}

/// How sphere points are drawn for the Fréchet remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSampling {
    pub samples: usize,
    pub seed: u64,
    /// Restrict directions to this cone (the domain of a conjugate).
    pub cone: Option<SignPattern>,
}

impl Default for SphereSampling {
    fn default() -> Self {
        SphereSampling {
            samples: 256,
            seed: 0,
            cone: None,
        }
    }
}

/// Sampled unit-sphere directions of the norm on `side`, optionally inside a
/// cone. Zero-norm draws are redrawn: the asymmetric sphere has no points
/// along the null cone.
pub fn sphere_directions(
    norm: &AsymNorm,
    side: Side,
    sampling: &SphereSampling,
) -> Result<Vec<Vec<f64>>> {
    let dim = norm.dim();
    if let Some(c) = &sampling.cone {
        check_dim(dim, c.dim())?;
    }
    let fold = |v: Vec<f64>| match &sampling.cone {
        Some(c) => c.fold(&v),
        None => v,
    };
    let normalise = |d: Vec<f64>| -> Option<Vec<f64>> {
        let n = norm.side_norm(side, &d);
        if n > 1e-12 * euclid(&d).max(1e-300) {
            Some(d.iter().map(|v| v / n).collect())
        } else {
            None
        }
    };
    let mut out = Vec::with_capacity(sampling.samples + 2 * dim);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[i] = sign;
            let d = fold(d);
            if let Some(u) = normalise(d) {
                if !out.contains(&u) {
                    out.push(u);
                }
            }
        }
    }
    let mut rng = rng::seeded(sampling.seed);
    for _ in 0..sampling.samples {
        let mut drawn = None;
        for _ in 0..1000 {
            if let Some(u) = normalise(fold(rng::gaussian_vec(&mut rng, dim))) {
                drawn = Some(u);
                break;
            }
        }
        match drawn {
            Some(u) => out.push(u),
            None => {
                return Err(Error::InvalidProblem(
                    "sphere is empty: every draw had zero norm".into(),
                ))
            }
        }
    }
    Ok(out)
}

/// Sampled Fréchet remainders `r(t)` at decreasing radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderCurve {
    pub radii: Vec<f64>,
    pub remainders: Vec<f64>,
    /// Sphere samples with a finite function value, per radius.
    pub finite_samples: Vec<usize>,
    pub seed: u64,
}

impl RemainderCurve {
    /// `t,r` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,r\n");
        for (t, r) in self.radii.iter().zip(&self.remainders) {
            let _ = writeln!(s, "{t:?},{r:?}");
        }
        s
    }

    /// Nonincreasing up to a relative slack of `1e-12`.
    pub fn is_decreasing(&self) -> bool {
        self.remainders
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrechetVerdict {
    Consistent,
    Inconsistent,
    /// Some sphere had no sample inside the effective domain.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrechetCheck {
    pub curve: RemainderCurve,
    pub verdict: FrechetVerdict,
    pub tol: f64,
}

/// Decreasing radii `0.1 · 2^{-k}`, `k = 0..=12`.
pub fn default_radii() -> Vec<f64> {
    Schedule::default().0
}

/// Samples `sup_{‖y‖ = t} |f(x + y) - f(x) - ⟨candidate, y⟩| / t` on each
/// radius (differences within floating-point rounding of the terms count as
/// zero) and reports consistency with a right Fréchet derivative: the
/// curve must be nonincreasing and end at or below `tol`.
#[allow(clippy::too_many_arguments)]
pub fn right_frechet_check<F>(
    f: F,
    point: &[f64],
    candidate: &[f64],
    radii: &[f64],
    sampling: &SphereSampling,
    norm: &AsymNorm,
    side: Side,
    tol: f64,
) -> Result<FrechetCheck>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_dim(norm.dim(), point.len())?;
    check_dim(norm.dim(), candidate.len())?;
    check_finite(point, "point")?;
    check_finite(candidate, "candidate derivative")?;
    validate_decreasing(radii)?;
    let fx = f(point);
    if !fx.is_finite() {
        return Err(Error::InfiniteAtPoint);
    }
    let dirs = sphere_directions(norm, side, sampling)?;
    let per_radius = par::map_range(radii.len(), |k| {
        let t = radii[k];
        let mut worst: f64 = 0.0;
        let mut finite = 0;
        for u in &dirs {
            let y: Vec<f64> = u.iter().map(|v| t * v).collect();
            let v = f(&add_scaled(point, 1.0, &y));
            if v.is_finite() {
                finite += 1;
                let lin = dot(candidate, &y);
                // Differences below the rounding floor of the three terms
                // are not resolvable and count as zero.
                let floor = 8.0 * f64::EPSILON * (v.abs() + fx.abs() + lin.abs());
                let rem = ((v - fx - lin).abs() - floor).max(0.0) / t;
                worst = worst.max(rem);
            }
        }
        (worst, finite)
    });
    let (remainders, finite_samples): (Vec<f64>, Vec<usize>) = per_radius.into_iter().unzip();
    let curve = RemainderCurve {
        radii: radii.to_vec(),
        remainders,
        finite_samples,
        seed: sampling.seed,
    };
    let verdict = if curve.finite_samples.contains(&0) {
        FrechetVerdict::Inconclusive
    } else if curve.is_decreasing() && *curve.remainders.last().unwrap() <= tol {
        FrechetVerdict::Consistent
    } else {
        FrechetVerdict::Inconsistent
    };
    Ok(FrechetCheck {
        curve,
        verdict,
        tol,
    })
}
