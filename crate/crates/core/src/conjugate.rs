//! Discrete Legendre–Fenchel conjugation on rectangular grids.
//!
//! Functions are sampled on uniform grids and may take the value `+∞`
//! (encoded as `f64::INFINITY`), which removes the point from every
//! supremum. `-∞` and NaN are rejected.
//!
//! Conjugates computed on a truncated primal grid are lower bounds of the
//! continuous conjugate: the supremum only ranges over grid points.

use serde::{Deserialize, Serialize};

use crate::asymnorm::SignPattern;
use crate::error::{check_dim, Error, Result};
use crate::par;
use crate::rng;
use crate::vecops::dot;

/// Default cap on the number of points of a single grid.
pub const DEFAULT_GRID_CAP: usize = 1 << 22;

/// Highest supported grid dimension.
pub const MAX_DIM: usize = 4;

/// One uniform axis `lo, lo + h, …, hi` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let axis = Axis { lo, hi, count };
        axis.validate()?;
        Ok(axis)
    }

    /// Axis with spacing as close as possible to `h` (the end point is kept).
    pub fn with_spacing(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {h}"
            )));
        }
        let count = ((hi - lo) / h).round() as usize + 1;
        Axis::new(lo, hi, count)
    }

    fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidGrid("axis bounds must be finite".into()));
        }
        if self.lo >= self.hi {
            return Err(Error::InvalidGrid(format!(
                "axis needs lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.count < 2 {
            return Err(Error::InvalidGrid(format!(
                "axis needs at least 2 points, got {}",
                self.count
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.coord(i)).collect()
    }

    /// Index of the nearest axis point (clamped to the axis).
    pub fn nearest(&self, v: f64) -> usize {
        let k = ((v - self.lo) / self.spacing()).round();
        k.clamp(0.0, (self.count - 1) as f64) as usize
    }
}

/// A rectangular grid, row-major with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "grid dimension must be in 1..={MAX_DIM}, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            a.validate()?;
        }
        let g = GridSpec { axes };
        g.len_checked()?;
        Ok(g)
    }

    /// The same axis repeated `dim` times.
    pub fn cube(lo: f64, hi: f64, count: usize, dim: usize) -> Result<Self> {
        GridSpec::new(vec![Axis::new(lo, hi, count)?; dim])
    }

    fn len_checked(&self) -> Result<usize> {
        self.axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.count))
            .ok_or_else(|| Error::InvalidGrid("grid size overflows".into()))
    }

    pub fn check_cap(&self, cap: usize) -> Result<()> {
        let points = self.len();
        if points > cap {
            return Err(Error::GridTooLarge { points, cap });
        }
        Ok(())
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % a.count;
            flat /= a.count;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.count + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.coord(i))
            .collect()
    }

    /// All grid points as a flat `len × dim` array.
    pub fn points_flat(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.len() * d);
        for j in 0..self.len() {
            out.extend(self.point(j));
        }
        out
    }

    /// Nearest grid point to `x` (clamped), and whether `x` already was a
    /// grid point up to `1e-9` of the spacing.
    pub fn nearest(&self, x: &[f64]) -> Result<(usize, bool)> {
        check_dim(self.dim(), x.len())?;
        let idx: Vec<usize> = self
            .axes
            .iter()
            .zip(x)
            .map(|(a, &v)| a.nearest(v))
            .collect();
        let on_grid = idx
            .iter()
            .zip(&self.axes)
            .zip(x)
            .all(|((&i, a), &v)| (a.coord(i) - v).abs() <= 1e-9 * a.spacing());
        Ok((self.flat_index(&idx), on_grid))
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.spacing()).collect()
    }

    /// Whether `flat` lies on the boundary of the grid box.
    pub fn on_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .any(|(&i, a)| i == 0 || i + 1 == a.count)
    }

    /// Grid indices whose points satisfy the sign pattern.
    pub fn mask(&self, pattern: Option<&SignPattern>) -> Result<Vec<bool>> {
        match pattern {
            None => Ok(vec![true; self.len()]),
            Some(p) => {
                check_dim(self.dim(), p.dim())?;
                let tol = 1e-12 * self.spacing().iter().cloned().fold(0.0, f64::max);
                Ok((0..self.len())
                    .map(|j| p.contains(&self.point(j), tol))
                    .collect())
            }
        }
    }
}

/// An extended-real function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    grid: GridSpec,
    values: Vec<f64>,
}

impl GridFn {
    /// Validates propriety: no NaN, no `-∞`, at least one finite value.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_dim(grid.len(), values.len())?;
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Improper("NaN value".into()));
        }
        if values.contains(&f64::NEG_INFINITY) {
            return Err(Error::Improper("value -inf".into()));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::Improper("identically +inf".into()));
        }
        Ok(GridFn { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|j| f(&grid.point(j))).collect();
        GridFn::new(grid, values)
    }

    /// Seeded test instance: values uniform in `[-1, 1]`, each replaced by
    /// `+∞` with probability `inf_fraction`. The first point stays finite.
    pub fn random(grid: GridSpec, seed: u64, inf_fraction: f64) -> Result<Self> {
        let mut r = rng::seeded(seed);
        let u = rng::uniform_vec(&mut r, 2 * grid.len(), 0.0, 1.0);
        let values = (0..grid.len())
            .map(|j| {
                if j > 0 && u[2 * j] < inf_fraction {
                    f64::INFINITY
                } else {
                    2.0 * u[2 * j + 1] - 1.0
                }
            })
            .collect();
        GridFn::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// Value at the nearest grid point.
    pub fn eval_nearest(&self, x: &[f64]) -> Result<f64> {
        let (j, _) = self.grid.nearest(x)?;
        Ok(self.values[j])
    }

    /// Lowest-index minimiser and the minimum.
    pub fn argmin(&self) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, &v) in self.values.iter().enumerate() {
            if v < best.1 {
                best = (j, v);
            }
        }
        best
    }

    /// Largest violation of `f(mid) ≤ (f(a) + f(b)) / 2` over collinear grid
    /// triples along the axes and the two-axis diagonals. Nonpositive for
    /// discretely convex functions.
    pub fn midpoint_violation(&self) -> f64 {
        let d = self.grid.dim();
        let mut steps: Vec<Vec<isize>> = Vec::new();
        for k in 0..d {
            let mut s = vec![0isize; d];
            s[k] = 1;
            steps.push(s);
            for l in k + 1..d {
                for sign in [1isize, -1] {
                    let mut s = vec![0isize; d];
                    s[k] = 1;
                    s[l] = sign;
                    steps.push(s);
                }
            }
        }
        let shape = self.grid.shape();
        let worst = par::map_range(self.grid.len(), |j| {
            let idx = self.grid.multi_index(j);
            let mut worst = f64::NEG_INFINITY;
            for s in &steps {
                let shift = |sign: isize| -> Option<usize> {
                    let mut out = Vec::with_capacity(d);
                    for k in 0..d {
                        let v = idx[k] as isize + sign * s[k];
                        if v < 0 || v >= shape[k] as isize {
                            return None;
                        }
                        out.push(v as usize);
                    }
                    Some(self.grid.flat_index(&out))
                };
                if let (Some(a), Some(b)) = (shift(-1), shift(1)) {
                    let (fa, fm, fb) = (self.values[a], self.values[j], self.values[b]);
                    if fa.is_finite() && fb.is_finite() {
                        let v = fm - 0.5 * (fa + fb);
                        if v > worst {
                            worst = v;
                        }
                    }
                }
            }
            worst
        });
        worst.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtValue {
    Num(f64),
    Tag(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFnJson {
    grid: Vec<Axis>,
    values: Vec<ExtValue>,
}

impl Serialize for GridFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridFnJson {
            grid: self.grid.axes.clone(),
            values: self
                .values
                .iter()
                .map(|&v| {
                    if v == f64::INFINITY {
                        ExtValue::Tag("inf".into())
                    } else {
                        ExtValue::Num(v)
                    }
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GridFnJson::deserialize(d)?;
        let grid = GridSpec::new(raw.grid).map_err(D::Error::custom)?;
        let values = raw
            .values
            .into_iter()
            .map(|v| match v {
                ExtValue::Num(x) => Ok(x),
                ExtValue::Tag(t) if t == "inf" => Ok(f64::INFINITY),
                ExtValue::Tag(t) => Err(D::Error::custom(format!("unexpected value '{t}'"))),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        GridFn::new(grid, values).map_err(D::Error::custom)
    }
}

fn finite_support(f: &GridFn) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let d = f.grid.dim();
    let mut pts = Vec::new();
    let mut vals = Vec::new();
    let mut idx = Vec::new();
    for (j, &v) in f.values.iter().enumerate() {
        if v.is_finite() {
            pts.extend(f.grid.point(j));
            vals.push(v);
            idx.push(j);
        }
    }
    debug_assert_eq!(pts.len(), vals.len() * d);
    (pts, vals, idx)
}

/// Brute-force conjugate with the maximising primal index per dual point.
///
/// Dual points outside `cone` get `+∞` and no argmax. Ties resolve to the
/// lowest primal grid index.
pub fn conjugate_brute_with_argmax(
    f: &GridFn,
    dual: &GridSpec,
    cone: Option<&SignPattern>,
) -> Result<(GridFn, Vec<Option<usize>>)> {
    check_dim(f.grid.dim(), dual.dim())?;
    let d = dual.dim();
    let mask = dual.mask(cone)?;
    let (pts, vals, idx) = finite_support(f);
    let out = par::map_range(dual.len(), |j| {
        if !mask[j] {
            return (f64::INFINITY, None);
        }
        let y = dual.point(j);
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, &v) in vals.iter().enumerate() {
            let s = dot(&y, &pts[i * d..(i + 1) * d]) - v;
            if s > best {
                best = s;
                arg = i;
            }
        }
        (best, Some(idx[arg]))
    });
    let (values, argmax): (Vec<f64>, Vec<Option<usize>>) = out.into_iter().unzip();
    Ok((GridFn::new(dual.clone(), values)?, argmax))
}

/// `f*(y) = max_x [⟨y, x⟩ - f(x)]` over all primal grid points, for every
/// dual grid point in `cone`. Cost `O(N_x · N_y)`.
pub fn conjugate_brute(f: &GridFn, dual: &GridSpec, cone: Option<&SignPattern>) -> Result<GridFn> {
    conjugate_brute_with_argmax(f, dual, cone).map(|(g, _)| g)
}

/// Discrete conjugate at a single dual point.
pub fn conjugate_at(f: &GridFn, y: &[f64]) -> Result<f64> {
    check_dim(f.grid.dim(), y.len())?;
    let mut best = f64::NEG_INFINITY;
    for (j, &v) in f.values.iter().enumerate() {
        if v.is_finite() {
            let s = dot(y, &f.grid.point(j)) - v;
            if s > best {
                best = s;
            }
        }
    }
    Ok(best)
}

/// One-dimensional discrete Legendre transform in linear time.
///
/// `xs` strictly increasing, `slopes` nondecreasing; entries of `h` equal to
/// `+∞` are skipped. Writes `max_i [s_j x_i - h_i]` (or `-∞` when every `h_i`
/// is infinite) to `out`.
pub fn legendre_1d(xs: &[f64], h: &[f64], slopes: &[f64], out: &mut [f64]) {
    debug_assert_eq!(xs.len(), h.len());
    debug_assert_eq!(slopes.len(), out.len());
    // Lower convex hull of the finite points (monotone chain).
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        if !h[i].is_finite() {
            continue;
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (xs[b] - xs[a]) * (h[i] - h[a]) - (h[b] - h[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    if hull.is_empty() {
        out.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        return;
    }
    let mut k = 0;
    for (j, &s) in slopes.iter().enumerate() {
        let val = |i: usize| s * xs[hull[i]] - h[hull[i]];
        while k + 1 < hull.len() && val(k + 1) >= val(k) {
            k += 1;
        }
        // Slopes are sorted, but guard against rounding pushing the optimum
        // back by one vertex.
        let mut best = val(k);
        if k > 0 {
            best = best.max(val(k - 1));
        }
        out[j] = best;
    }
}

/// Same values as [`conjugate_brute`], computed as a cascade of
/// one-dimensional linear-time transforms, one axis at a time.
pub fn conjugate_fast(f: &GridFn, dual: &GridSpec, cone: Option<&SignPattern>) -> Result<GridFn> {
    check_dim(f.grid.dim(), dual.dim())?;
    let d = f.grid.dim();
    let mask = dual.mask(cone)?;

    // The sup over the last axis is taken first:
    //   f*(y) = max_{x_0} [y_0 x_0 + max_{x_1} [y_1 x_1 + … - f(x)]].
    // Each stage transforms one axis from primal to dual size; the input of
    // the next stage is the negated output of the previous one.
    let mut shape = f.grid.shape();
    let mut cur: Vec<f64> = f.values.clone();
    for k in (0..d).rev() {
        let xs = f.grid.axes[k].coords();
        let slopes = dual.axes[k].coords();
        let n = shape[k];
        let m = slopes.len();
        let outer: usize = shape[..k].iter().product();
        let inner: usize = shape[k + 1..].iter().product();
        let lines = par::map_range(outer * inner, |line| {
            let o = line / inner;
            let r = line % inner;
            let base = o * n * inner + r;
            let h: Vec<f64> = (0..n).map(|i| cur[base + i * inner]).collect();
            let mut out = vec![0.0; m];
            legendre_1d(&xs, &h, &slopes, &mut out);
            out
        });
        let mut next = vec![0.0; outer * m * inner];
        for (line, vals) in lines.into_iter().enumerate() {
            let o = line / inner;
            let r = line % inner;
            let base = o * m * inner + r;
            for (j, v) in vals.into_iter().enumerate() {
                next[base + j * inner] = v;
            }
        }
        shape[k] = m;
        if k > 0 {
            next.iter_mut().for_each(|v| *v = -*v);
        }
        cur = next;
    }
    for (v, &keep) in cur.iter_mut().zip(&mask) {
        if !keep {
            *v = f64::INFINITY;
        }
    }
    GridFn::new(dual.clone(), cur)
}

/// `f**` on the primal grid. The second conjugation ranges only over the
/// dual points in `cone`.
pub fn biconjugate(f: &GridFn, dual: &GridSpec, cone: Option<&SignPattern>) -> Result<GridFn> {
    let fs = conjugate_fast(f, dual, cone)?;
    conjugate_fast(&fs, &f.grid, None)
}

/// `f**(x)` at a single point, given the dual grid and cone.
pub fn biconjugate_at(
    f: &GridFn,
    dual: &GridSpec,
    cone: Option<&SignPattern>,
    x: &[f64],
) -> Result<f64> {
    let fs = conjugate_fast(f, dual, cone)?;
    conjugate_at(&fs, x)
}

/// A nonnegative gauge `α : [0, ∞) → [0, ∞]` sampled at `0 = t_0 < t_1 < …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeFn {
    t: Vec<f64>,
    values: Vec<f64>,
}

impl GaugeFn {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::InvalidGauge("no samples".into()));
        }
        check_dim(t.len(), values.len())?;
        if t[0] != 0.0 {
            return Err(Error::InvalidGauge("first abscissa must be 0".into()));
        }
        if t.iter().any(|v| !v.is_finite()) || t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGauge(
                "abscissae must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidGauge("values must be nonnegative".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidGauge("value at 0 must be 0".into()));
        }
        Ok(GaugeFn { t, values })
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at sample abscissa `t`, if `t` is a sample.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.t.iter().position(|&s| s == t).map(|i| self.values[i])
    }

    /// `α#(s) = sup_t [t s - α(t)]` over the samples, at any `s ≥ 0`.
    pub fn conjugate_value(&self, s: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.values)
            .filter(|(_, a)| a.is_finite())
            .map(|(t, a)| t * s - a)
            .fold(0.0, f64::max)
    }

    /// Whether `α(s)/s ≤ α(t)/t` for all positive sample pairs `s < t`,
    /// up to `tol`.
    pub fn slope_monotone(&self, tol: f64) -> bool {
        let slopes: Vec<f64> = self
            .t
            .iter()
            .zip(&self.values)
            .skip(1)
            .map(|(t, a)| a / t)
            .collect();
        slopes.windows(2).all(|w| w[0] <= w[1] + tol)
    }
}

fn normalise_abscissae(s: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = s.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidGauge(format!(
            "abscissa {bad} is negative or not finite"
        )));
    }
    let mut out: Vec<f64> = s.to_vec();
    out.push(0.0);
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    Ok(out)
}

/// `α#` on the requested abscissae (`0` is always included).
pub fn gauge_conjugate(alpha: &GaugeFn, s: &[f64]) -> Result<GaugeFn> {
    let s = normalise_abscissae(s)?;
    let values = s.iter().map(|&v| alpha.conjugate_value(v)).collect();
    GaugeFn::new(s, values)
}

/// Samples `ε ↦ δ(ε)` of a positive function, `+∞` allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSamples {
    eps: Vec<f64>,
    delta: Vec<f64>,
}

impl DeltaSamples {
    pub fn new(eps: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::InvalidGauge("empty sample set".into()));
        }
        check_dim(eps.len(), delta.len())?;
        if eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidGauge("ε samples must be positive".into()));
        }
        if delta.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidGauge("δ must be positive".into()));
        }
        Ok(DeltaSamples { eps, delta })
    }
}

/// `α(t) = t · inf { ε : δ(ε) ≥ t }` over the samples, `+∞` when the set is
/// empty, evaluated on `t` (`0` is always included).
pub fn gauge_from_delta(delta: &DeltaSamples, t: &[f64]) -> Result<GaugeFn> {
    let t = normalise_abscissae(t)?;
    let values = t
        .iter()
        .map(|&tv| {
            let inf = delta
                .eps
                .iter()
                .zip(&delta.delta)
                .filter(|(_, &d)| d >= tv)
                .map(|(&e, _)| e)
                .fold(f64::INFINITY, f64::min);
            if tv == 0.0 {
                0.0
            } else {
                tv * inf
            }
        })
        .collect();
    GaugeFn::new(t, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymnorm::{AsymNorm, AxisSign};
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn line(lo: f64, hi: f64, n: usize) -> GridSpec {
        GridSpec::cube(lo, hi, n, 1).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Axis::new(1.0, 1.0, 3).is_err());
        assert!(Axis::new(0.0, 1.0, 1).is_err());
        assert!(GridSpec::new(vec![]).is_err());
        assert!(GridSpec::cube(0.0, 1.0, 2, 5).is_err());
        let g = GridSpec::cube(-1.0, 1.0, 5, 2).unwrap();
        assert_eq!(g.len(), 25);
        assert!(matches!(g.check_cap(10), Err(Error::GridTooLarge { .. })));
        assert_eq!(g.point(7), vec![-0.5, 0.0]);
        assert_eq!(g.flat_index(&g.multi_index(17)), 17);
        assert_eq!(Axis::with_spacing(-2.0, 2.0, 0.02).unwrap().count, 201);
    }

    #[test]
    fn propriety_is_enforced() {
        let g = line(0.0, 1.0, 3);
        assert!(matches!(
            GridFn::new(g.clone(), vec![f64::INFINITY; 3]),
            Err(Error::Improper(_))
        ));
        assert!(GridFn::new(g.clone(), vec![0.0, f64::NEG_INFINITY, 0.0]).is_err());
        assert!(GridFn::new(g.clone(), vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(GridFn::new(g, vec![0.0, f64::INFINITY, 0.0]).is_ok());
    }

    #[test]
    fn quadratic_conjugate() {
        let f = GridFn::from_fn(line(-2.0, 2.0, 401), |x| x[0] * x[0]).unwrap();
        let v = conjugate_at(&f, &[1.0]).unwrap();
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-3);
        let dual = line(1.0, 2.0, 2);
        let fs = conjugate_brute(&f, &dual, None).unwrap();
        assert_abs_diff_eq!(fs.value_at(0), 0.25, epsilon = 1e-3);
    }

    #[test]
    fn indicator_of_origin() {
        let g = line(-1.0, 1.0, 21);
        let (j0, _) = g.nearest(&[0.0]).unwrap();
        let vals = (0..21)
            .map(|j| if j == j0 { 0.0 } else { f64::INFINITY })
            .collect();
        let f = GridFn::new(g, vals).unwrap();
        let dual = line(-3.0, 3.0, 13);
        for fs in [
            conjugate_brute(&f, &dual, None).unwrap(),
            conjugate_fast(&f, &dual, None).unwrap(),
        ] {
            assert!(fs.values().iter().all(|&v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn half_euclidean_square_conjugate() {
        let p = AsymNorm::half_euclidean(2).unwrap();
        let grid = GridSpec::cube(-2.0, 2.0, 201, 2).unwrap();
        let f = GridFn::from_fn(grid, |x| p.eval_conjugate(x).unwrap().powi(2)).unwrap();
        assert_abs_diff_eq!(
            conjugate_at(&f, &[-1.0, -1.0]).unwrap(),
            0.5,
            epsilon = 1e-9
        );
    }

    #[test]
    fn abs_conjugate() {
        let f = GridFn::from_fn(line(-2.0, 2.0, 401), |x| x[0].abs()).unwrap();
        let dual = GridSpec::new(vec![Axis::new(0.5, 2.0, 4).unwrap()]).unwrap();
        let fs = conjugate_fast(&f, &dual, None).unwrap();
        assert_abs_diff_eq!(fs.value_at(0), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fs.value_at(3), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn fast_matches_brute_small_exhaustive() {
        let mut rng = rng::seeded(11);
        for trial in 0..40 {
            let d = 1 + trial % 3;
            let n = 3 + trial % 5;
            let grid = GridSpec::cube(-1.0, 1.5, n, d).unwrap();
            let dual = GridSpec::cube(-2.0, 2.0, n + 2, d).unwrap();
            let mut vals = rng::gaussian_vec(&mut rng, grid.len());
            for (i, v) in vals.iter_mut().enumerate() {
                if i % 3 == 1 {
                    *v = f64::INFINITY;
                }
            }
            let f = GridFn::new(grid, vals).unwrap();
            let cone = SignPattern::uniform(d, AxisSign::NonPos);
            for c in [None, Some(&cone)] {
                let a = conjugate_brute(&f, &dual, c).unwrap();
                let b = conjugate_fast(&f, &dual, c).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    if x.is_infinite() {
                        assert_eq!(x, y);
                    } else {
                        assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn biconjugate_examples() {
        let g = line(-2.0, 2.0, 401);
        let h = g.axes()[0].spacing();
        let f = GridFn::from_fn(g.clone(), |x| x[0].abs()).unwrap();
        let dual = line(-1.5, 1.5, 301);
        let fb = biconjugate(&f, &dual, None).unwrap();
        for (a, b) in fb.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 2.0 * h);
        }
        let dw = GridFn::from_fn(g, |x| ((x[0] - 1.0).powi(2)).min((x[0] + 1.0).powi(2))).unwrap();
        let dual = line(-6.0, 6.0, 1201);
        let fb = biconjugate(&dw, &dual, None).unwrap();
        let (j0, _) = dw.grid().nearest(&[0.0]).unwrap();
        assert_abs_diff_eq!(dw.value_at(j0), 1.0, epsilon = 1e-12);
        assert!(fb.value_at(j0).abs() < 1e-9);
        for (a, b) in fb.values().iter().zip(dw.values()) {
            assert!(*a <= b + 1e-9);
        }
    }

    #[test]
    fn masked_points_are_infinite() {
        let f = GridFn::from_fn(line(-1.0, 1.0, 11), |x| x[0] * x[0]).unwrap();
        let cone = SignPattern::uniform(1, AxisSign::NonPos);
        let fs = conjugate_brute(&f, &line(-1.0, 1.0, 5), Some(&cone)).unwrap();
        assert!(fs.values()[..3].iter().all(|v| v.is_finite()));
        assert!(fs.values()[3..].iter().all(|v| v.is_infinite()));
        let (_, arg) = conjugate_brute_with_argmax(&f, &line(-1.0, 1.0, 5), Some(&cone)).unwrap();
        assert_eq!(arg[4], None);
        // y = -1: maximiser of -x - x² on the grid is x = -0.5 (index 2).
        assert_eq!(arg[0], Some(2));
    }

    #[test]
    fn argmax_ties_pick_lowest_index() {
        let f = GridFn::new(line(0.0, 1.0, 3), vec![0.0, 0.0, 0.0]).unwrap();
        let (_, arg) = conjugate_brute_with_argmax(&f, &line(0.0, 1.0, 2), None).unwrap();
        assert_eq!(arg[0], Some(0));
    }

    #[test]
    fn gauge_conjugate_examples() {
        let t: Vec<f64> = (0..=4000).map(|k| k as f64 * 1e-3).collect();
        let sq = GaugeFn::new(t.clone(), t.iter().map(|v| v * v).collect()).unwrap();
        let c = gauge_conjugate(&sq, &[1.0]).unwrap();
        assert_abs_diff_eq!(c.at(1.0).unwrap(), 0.25, epsilon = 1e-6);
        assert_eq!(c.at(0.0), Some(0.0));

        let lin = GaugeFn::new(t.clone(), t.iter().map(|v| 0.5 * v).collect()).unwrap();
        assert_eq!(gauge_conjugate(&lin, &[0.3]).unwrap().at(0.3), Some(0.0));

        let s: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let c = gauge_conjugate(&sq, &s).unwrap();
        assert!(c.values().windows(2).all(|w| w[0] <= w[1]));
        assert!(c.values().iter().all(|v| *v >= 0.0));
        assert!(gauge_conjugate(&sq, &[-1.0]).is_err());
    }

    #[test]
    fn gauge_validation() {
        assert!(GaugeFn::new(vec![0.0, 1.0], vec![0.1, 1.0]).is_err());
        assert!(GaugeFn::new(vec![0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(GaugeFn::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0]).is_err());
        assert!(GaugeFn::new(vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
        assert!(GaugeFn::new(vec![0.0, 1.0], vec![0.0, f64::INFINITY]).is_ok());
    }

    #[test]
    fn gauge_from_delta_examples() {
        let eps: Vec<f64> = (1..=10).map(|k| k as f64 * 0.1).collect();
        let d = DeltaSamples::new(eps.clone(), eps.clone()).unwrap();
        let a = gauge_from_delta(&d, &eps).unwrap();
        for &e in &eps {
            assert_abs_diff_eq!(a.at(e).unwrap(), e * e, epsilon = 1e-12);
        }
        // A sample point beyond the largest δ has an empty set.
        let a = gauge_from_delta(&d, &[2.0]).unwrap();
        assert_eq!(a.at(2.0), Some(f64::INFINITY));

        let d = DeltaSamples::new(vec![0.3], vec![f64::INFINITY]).unwrap();
        let a = gauge_from_delta(&d, &[0.5, 7.0]).unwrap();
        assert_abs_diff_eq!(a.at(0.5).unwrap(), 0.15);
        assert_abs_diff_eq!(a.at(7.0).unwrap(), 2.1);

        let d = DeltaSamples::new(eps.clone(), eps.iter().map(|e| e * e).collect()).unwrap();
        let a = gauge_from_delta(&d, &[0.25]).unwrap();
        assert_abs_diff_eq!(a.at(0.25).unwrap(), 0.125, epsilon = 1e-12);

        // α(t) ≤ ε t whenever δ(ε) ≥ t.
        let ts: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
        let a = gauge_from_delta(&d, &ts).unwrap();
        for (&t, &v) in a.abscissae().iter().zip(a.values()) {
            for (&e, &de) in eps
                .iter()
                .zip(eps.iter().map(|e| e * e).collect::<Vec<_>>().iter())
            {
                if de >= t {
                    assert!(v <= e * t + 1e-15);
                }
            }
        }
        assert!(DeltaSamples::new(vec![], vec![]).is_err());
        assert!(DeltaSamples::new(vec![0.1], vec![0.0]).is_err());
    }

    #[test]
    fn json_encodes_infinity_as_string() {
        let f = GridFn::new(line(0.0, 1.0, 3), vec![1.0, f64::INFINITY, 0.5]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"grid":[{"lo":0.0,"hi":1.0,"count":3}],"values":[1.0,"inf",0.5]}"#
        );
        let back: GridFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<GridFn>(
            r#"{"grid":[{"lo":0.0,"hi":1.0,"count":2}],"values":["inf","inf"]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<GridFn>(
            r#"{"grid":[{"lo":0.0,"hi":1.0,"count":2}],"values":[0,"-inf"]}"#
        )
        .is_err());
    }

    #[test]
    fn midpoint_violation_detects_nonconvexity() {
        let g = GridSpec::cube(-2.0, 2.0, 41, 2).unwrap();
        let convex = GridFn::from_fn(g.clone(), |x| x[0] * x[0] + (x[1] - x[0]).abs()).unwrap();
        assert!(convex.midpoint_violation() <= 1e-12);
        let dw = GridFn::from_fn(g, |x| ((x[0] - 1.0).powi(2)).min((x[0] + 1.0).powi(2))).unwrap();
        assert!(dw.midpoint_violation() > 0.0);
    }
}
