//! Base functions `g`, truncated partial sums of `f(x) = sum a_n g(b_n x + theta_n)`,
//! oscillation `V_A = sup_A f - inf_A f`, and empirical Hölder exponents.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreal::LogReal;
use crate::scalar::{frac, least_squares, Real};
use crate::seqcore::{log_d_series, tail_bound, SequenceSpec};

/// Hard ceiling on grid points per oscillation request.
pub const MAX_SAMPLES: u64 = 100_000_000;

/// Window starts used for `sup_t V_[t, t+r]`.
pub const HOLDER_WINDOW_STARTS: usize = 256;

const CERT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum BaseKind<T> {
    /// `dist(x, Z)`.
    Sawtooth,
    /// `sin(2 pi x)`.
    Sine,
    /// Periodic piecewise-linear interpolation of knots `(x, y)` with
    /// `x_0 = 0`, `x_last = 1`; `lipschitz` is an optional claimed constant.
    Table {
        knots: Vec<(T, T)>,
        lipschitz: Option<T>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseTag {
    Sawtooth,
    Sine,
}

impl FromStr for BaseTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sawtooth" | "lambda" => Ok(BaseTag::Sawtooth),
            "sine" | "sin" => Ok(BaseTag::Sine),
            other => Err(Error::InvalidBaseFunction(format!("unknown tag {other:?}"))),
        }
    }
}

impl fmt::Display for BaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseTag::Sawtooth => "sawtooth",
            BaseTag::Sine => "sine",
        })
    }
}

impl<T> From<BaseTag> for BaseKind<T> {
    fn from(tag: BaseTag) -> Self {
        match tag {
            BaseTag::Sawtooth => BaseKind::Sawtooth,
            BaseTag::Sine => BaseKind::Sine,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape<T> {
    Sawtooth,
    Sine,
    Piecewise { xs: Vec<T>, ys: Vec<T> },
}

/// A period-1 Lipschitz function that increases on `monotone_interval`
/// with `|g(x) - g(y)| > slope_floor * |x - y|` there.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFunction<T> {
    shape: Shape<T>,
    pub lipschitz: T,
    pub sup_abs: T,
    pub monotone_interval: (T, T),
    pub slope_floor: T,
}

impl<T: Real> BaseFunction<T> {
    /// `g(x)` for any real `x`.
    pub fn eval(&self, x: T) -> T {
        self.eval_reduced(frac(x))
    }

    /// `g(p)` for `p` in `[0, 1)`.
    pub fn eval_reduced(&self, p: T) -> T {
        match &self.shape {
            Shape::Sawtooth => p.min(T::one() - p),
            Shape::Sine => (T::TAU() * p).sin(),
            Shape::Piecewise { xs, ys } => {
                let i = xs.partition_point(|&x| x <= p).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = (p - x0) / (x1 - x0);
                ys[i - 1] + w * (ys[i] - ys[i - 1])
            }
        }
    }

    pub fn interval_length(&self) -> T {
        self.monotone_interval.1 - self.monotone_interval.0
    }

    /// Sampled periodicity, Lipschitz and slope-floor certificates.
    pub fn certify(&self) -> Result<()> {
        let n = CERT_SAMPLES;
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0) * (T::one() + self.sup_abs));
        for i in 0..n {
            let x = T::lit(-3.7) + T::lit(7.3) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            if (self.eval(x + T::one()) - self.eval(x)).abs() > tol {
                return Err(Error::InvalidBaseFunction(format!(
                    "periodicity check fails at x = {x}"
                )));
            }
        }
        let lip = self.lipschitz * (T::one() + T::lit(1e-9)) + tol;
        let h = T::one() / T::from_usize_lossy(4 * n);
        for i in 0..n {
            let x = T::from_usize_lossy(i) / T::from_usize_lossy(n);
            for step in [h, T::lit(1e-3), T::lit(0.0371)] {
                let dy = (self.eval(x + step) - self.eval(x)).abs();
                if dy > lip * step + tol {
                    return Err(Error::InvalidBaseFunction(format!(
                        "Lipschitz constant {} violated near x = {x}",
                        self.lipschitz
                    )));
                }
            }
        }
        let (u, v) = self.monotone_interval;
        if !(T::zero() <= u && u < v && v <= T::one()) || self.slope_floor <= T::zero() {
            return Err(Error::InvalidBaseFunction(
                "monotone interval must be a non-trivial subinterval of [0, 1]".into(),
            ));
        }
        let m = 64;
        for i in 0..m {
            for k in i + 1..=m {
                let x = u + (v - u) * T::from_usize_lossy(i) / T::from_usize_lossy(m);
                let y = u + (v - u) * T::from_usize_lossy(k) / T::from_usize_lossy(m);
                if self.eval(y) - self.eval(x) + tol <= self.slope_floor * (y - x) {
                    return Err(Error::InvalidBaseFunction(format!(
                        "slope floor {} fails on [{x}, {y}]",
                        self.slope_floor
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds and certifies a base function.
///
/// Sawtooth: `L = 1`, `sup = 1/2`, `I = [0, 1/2]`, `delta = 1 - 1e-9`.
/// Sine: `L = 2 pi`, `sup = 1`, `I = [0.05, 0.20]`, `delta = 2 pi cos(0.4 pi) (1 - 1e-9)`.
pub fn make_base<T: Real>(kind: BaseKind<T>) -> Result<BaseFunction<T>> {
    let shrink = T::one() - T::lit(1e-9).max(T::epsilon() * T::lit(4.0));
    let g = match kind {
        BaseKind::Sawtooth => BaseFunction {
            shape: Shape::Sawtooth,
            lipschitz: T::one(),
            sup_abs: T::lit(0.5),
            monotone_interval: (T::zero(), T::lit(0.5)),
            slope_floor: shrink,
        },
        BaseKind::Sine => BaseFunction {
            shape: Shape::Sine,
            lipschitz: T::TAU(),
            sup_abs: T::one(),
            monotone_interval: (T::lit(0.05), T::lit(0.20)),
            slope_floor: T::TAU() * (T::lit(0.4) * T::PI()).cos() * shrink,
        },
        BaseKind::Table { knots, lipschitz } => piecewise(knots, lipschitz, shrink)?,
    };
    g.certify()?;
    Ok(g)
}

fn piecewise<T: Real>(
    knots: Vec<(T, T)>,
    claimed: Option<T>,
    shrink: T,
) -> Result<BaseFunction<T>> {
    let bad = |m: &str| Err(Error::InvalidBaseFunction(m.into()));
    if knots.len() < 3 {
        return bad("table needs at least three knots");
    }
    if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return bad("table knots must be finite");
    }
    let (xs, ys): (Vec<T>, Vec<T>) = knots.into_iter().unzip();
    if xs[0] != T::zero() || *xs.last().unwrap() != T::one() {
        return bad("table must span [0, 1]");
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return bad("table abscissae must increase strictly");
    }
    if (ys[0] - *ys.last().unwrap()).abs() > T::lit(1e-12) {
        return Err(Error::InvalidBaseFunction(
            "periodicity check fails: g(0) != g(1)".into(),
        ));
    }
    let slopes: Vec<T> = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    let lip = slopes.iter().fold(T::zero(), |m, s| m.max(s.abs()));
    if lip == T::zero() {
        return bad("table is constant");
    }
    // longest run of increasing segments
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < slopes.len() {
        if slopes[i] > T::zero() {
            let start = i;
            while i < slopes.len() && slopes[i] > T::zero() {
                i += 1;
            }
            let len = xs[i] - xs[start];
            if best.is_none_or(|(s, e)| len > xs[e] - xs[s]) {
                best = Some((start, i));
            }
        } else {
            i += 1;
        }
    }
    let Some((s, e)) = best else {
        return bad("table has no increasing segment");
    };
    let delta = slopes[s..e].iter().fold(T::infinity(), |m, &v| m.min(v));
    let lipschitz = match claimed {
        Some(c) => c,
        None => lip,
    };
    Ok(BaseFunction {
        sup_abs: ys.iter().fold(T::zero(), |m, y| m.max(y.abs())),
        monotone_interval: (xs[s], xs[e]),
        slope_floor: delta * shrink,
        lipschitz,
        shape: Shape::Piecewise { xs, ys },
    })
}

/// One native term `a g(b x + theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NativeTerm<T> {
    pub a: T,
    pub b: T,
    pub theta: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation<T> {
    Depth(usize),
    Accuracy(T),
}

/// A finite partial sum of the series with a rigorous bound on the dropped tail.
#[derive(Debug, Clone)]
pub struct TruncatedSeries<T> {
    pub spec: SequenceSpec<T>,
    pub g: BaseFunction<T>,
    pub depth: usize,
    pub terms: Vec<NativeTerm<T>>,
    pub tail_bound_value: T,
    pub eta: T,
    /// `d_1 ..= d_N`.
    pub log_d: Vec<LogReal<T>>,
}

fn check_cap<T: Real>(spec: &SequenceSpec<T>, n: usize) -> Result<()> {
    let log_b = spec.log_b(n)?;
    let log_cap = T::native_frequency_cap().ln();
    if log_b > log_cap + T::lit(1e-9) {
        return Err(Error::DepthCap {
            module: "weierfn",
            depth: n,
            log_b: log_b.as_f64(),
            log_cap: log_cap.as_f64(),
        });
    }
    Ok(())
}

/// Truncates to a fixed depth or to the least depth meeting an accuracy.
pub fn truncate<T: Real>(
    spec: &SequenceSpec<T>,
    g: &BaseFunction<T>,
    target: Truncation<T>,
    eta: T,
) -> Result<TruncatedSeries<T>> {
    let depth = match target {
        Truncation::Depth(n) => {
            for i in 1..=n {
                check_cap(spec, i)?;
            }
            n
        }
        Truncation::Accuracy(eps) => {
            if !(eps > T::zero()) {
                return Err(Error::domain("weierfn", "accuracy target must be positive"));
            }
            let mut n = 0;
            let mut best = T::infinity();
            loop {
                let tb = tail_bound(spec, g, n, eta)?;
                best = best.min(tb);
                if tb <= eps {
                    break n;
                }
                if !spec.has_term(n + 1) || check_cap(spec, n + 1).is_err() {
                    return Err(Error::InfeasibleAccuracy {
                        target: eps.as_f64(),
                        max_depth: n,
                        best: best.as_f64(),
                    });
                }
                n += 1;
            }
        }
    };
    let terms = (1..=depth)
        .map(|n| {
            Ok(NativeTerm {
                a: spec.native_a(n)?,
                b: spec.native_b(n)?,
                theta: spec.theta(n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail_bound_value = tail_bound(spec, g, depth, eta)?;
    Ok(TruncatedSeries {
        spec: spec.clone(),
        g: g.clone(),
        depth,
        terms,
        tail_bound_value,
        eta,
        log_d: log_d_series(spec, depth)?,
    })
}

/// `frac(b x + theta)` using the FMA residual of `b * x`.
#[inline]
pub fn reduce_phase<T: Real>(b: T, x: T, theta: T) -> T {
    let p = b * x;
    let err = b.mul_add(x, -p);
    let head = p - p.floor();
    frac(head + (err + frac(theta)))
}

impl<T: Real> TruncatedSeries<T> {
    /// Explicit series from native terms with zero tail (used for oracles and tests).
    pub fn from_terms(g: &BaseFunction<T>, terms: Vec<NativeTerm<T>>) -> Self {
        use crate::seqcore::{SequenceKind, TableRow};
        let rows: Vec<TableRow<T>> = terms
            .iter()
            .map(|t| TableRow {
                log_a: t.a.ln(),
                log_b: t.b.ln(),
                theta: t.theta,
            })
            .collect();
        let log_d = {
            let mut acc = LogReal::zero();
            terms
                .iter()
                .map(|t| {
                    acc = acc + LogReal::from_value(t.a * t.b).expect("nonnegative");
                    acc
                })
                .collect()
        };
        let spec = if rows.is_empty() {
            SequenceSpec::new(SequenceKind::ExplicitTable {
                rows: vec![TableRow {
                    log_a: T::neg_infinity(),
                    log_b: T::zero(),
                    theta: T::zero(),
                }],
            })
            .tail(1)
        } else {
            SequenceSpec::new(SequenceKind::ExplicitTable { rows })
        };
        TruncatedSeries {
            spec,
            g: g.clone(),
            depth: terms.len(),
            terms,
            tail_bound_value: T::zero(),
            eta: T::lit(crate::seqcore::DEFAULT_ETA),
            log_d,
        }
    }

    /// `(sum_{n<=N} a_n g(b_n x + theta_n), tail bound)`.
    pub fn eval(&self, x: T) -> (T, T) {
        (self.value(x), self.tail_bound_value)
    }

    #[inline]
    pub fn value(&self, x: T) -> T {
        self.terms
            .iter()
            .map(|t| t.a * self.g.eval_reduced(reduce_phase(t.b, x, t.theta)))
            .sum()
    }

    /// Value of the partial sum over the first `n` terms.
    pub fn partial_value(&self, n: usize, x: T) -> T {
        self.terms[..n]
            .iter()
            .map(|t| t.a * self.g.eval_reduced(reduce_phase(t.b, x, t.theta)))
            .sum()
    }

    /// `d_N` as a native value (0 for the empty series).
    pub fn d_native(&self) -> T {
        self.log_d.last().map_or(T::zero(), |d| d.value())
    }

    /// Lipschitz constant of the partial sum, `L d_N`.
    pub fn lipschitz(&self) -> T {
        self.g.lipschitz * self.d_native()
    }

    /// Largest native frequency, 1 for the empty series.
    pub fn finest_frequency(&self) -> T {
        self.terms.iter().fold(T::one(), |m, t| m.max(t.b))
    }

    /// `[1/b_N, 1/b_1]`; the lower end drops to 0 when the tail is empty.
    pub fn validity_window(&self) -> (T, T) {
        match (self.terms.first(), self.terms.last()) {
            (Some(first), Some(last)) => {
                let lo = if self.tail_bound_value == T::zero() {
                    T::zero()
                } else {
                    last.b.recip()
                };
                (lo, first.b.recip())
            }
            _ => (T::zero(), T::infinity()),
        }
    }

    /// Grid points resolving the finest term over a width-`r` window.
    pub fn sample_count(&self, r: T, density: Density) -> Result<u64> {
        let need = (self.finest_frequency() * r)
            .ceil()
            .to_u64()
            .unwrap_or(u64::MAX);
        let n = need.saturating_mul(density.factor).max(density.min);
        if n > MAX_SAMPLES {
            return Err(Error::TooManySamples {
                module: "weierfn",
                what: "samples",
                requested: n,
                limit: MAX_SAMPLES,
            });
        }
        Ok(n)
    }

    /// Sampled `(min, max)` of the partial sum over `[t, t + r]`, endpoints included.
    ///
    /// The grid extrema are refined by two rounds of local resampling around
    /// the best grid points; results stay inside the true range.
    pub fn range(&self, t: T, r: T, samples: u64) -> (T, T) {
        let s = samples.max(2);
        let step = r / T::from_u64(s - 1).expect("count");
        let at = |i: u64| {
            if i == s - 1 {
                t + r
            } else {
                t + step * T::from_u64(i).expect("index")
            }
        };
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        let (mut xlo, mut xhi) = (t, t);
        for i in 0..s {
            let x = at(i);
            let y = self.value(x);
            if y < lo {
                lo = y;
                xlo = x;
            }
            if y > hi {
                hi = y;
                xhi = x;
            }
        }
        let refine = |mut x: T, mut best: T, better: &dyn Fn(T, T) -> bool| {
            let mut h = step;
            for _ in 0..2 {
                let (a, b) = ((x - h).max(t), (x + h).min(t + r));
                let w = (b - a) / T::lit(32.0);
                let mut bx = x;
                for k in 0..=32 {
                    let z = a + w * T::from_u64(k).expect("index");
                    let y = self.value(z);
                    if better(y, best) {
                        best = y;
                        bx = z;
                    }
                }
                x = bx;
                h = w;
            }
            best
        };
        let lo = refine(xlo, lo, &|y, b| y < b);
        let hi = refine(xhi, hi, &|y, b| y > b);
        (lo, hi)
    }
}

/// Sampling rule for oscillation grids: `max(min, factor * ceil(b_N r))` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Density {
    pub factor: u64,
    pub min: u64,
}

impl Default for Density {
    fn default() -> Self {
        Density { factor: 8, min: 64 }
    }
}

/// Sampled oscillation over `[t, t + r]`.
///
/// The sampled `v` underestimates the oscillation of the untruncated `f` by at
/// most `bias_bound = L d_N step + 2 tail`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OscillationSample<T> {
    pub t: T,
    pub r: T,
    pub v: T,
    pub samples_used: u64,
    pub bias_bound: T,
}

pub fn oscillation<T: Real>(
    series: &TruncatedSeries<T>,
    t: T,
    r: T,
    density: Density,
) -> Result<OscillationSample<T>> {
    if !(r > T::zero()) {
        return Err(Error::domain("weierfn", "oscillation needs r > 0"));
    }
    let samples = series.sample_count(r, density)?;
    let (lo, hi) = series.range(t, r, samples);
    let step = r / T::from_u64(samples - 1).expect("count");
    Ok(OscillationSample {
        t,
        r,
        v: hi - lo,
        samples_used: samples,
        bias_bound: series.lipschitz() * step + T::lit(2.0) * series.tail_bound_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HolderEstimate<T> {
    pub alpha_hat: T,
    pub fit_residual: T,
    /// `(r, sup_t V_[t, t+r])`.
    pub rows: Vec<(T, T)>,
    /// Scales below `1/b_N` are smooth for a truncation; claims hold only inside this window.
    pub validity_window: (T, T),
}

fn in_window<T: Real>(r: T, (lo, hi): (T, T)) -> bool {
    let tol = T::lit(1e-9);
    r >= lo * (T::one() - tol) && r <= hi * (T::one() + tol)
}

/// `sup_t V_[t, t+r]` over [`HOLDER_WINDOW_STARTS`] stratified starts in `[0, 1)`.
pub fn sup_oscillation<T: Real>(series: &TruncatedSeries<T>, r: T, density: Density) -> Result<T> {
    let samples = series.sample_count(r, density)?;
    let n = HOLDER_WINDOW_STARTS;
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = (T::from_usize_lossy(i) + T::lit(0.5)) / T::from_usize_lossy(n);
            let (lo, hi) = series.range(t, r, samples);
            hi - lo
        })
        .reduce(T::zero, |a, b| a.max(b));
    Ok(best)
}

/// Slope of `log sup_t V_[t, t+r]` against `log r`.
pub fn holder_estimate<T: Real>(
    series: &TruncatedSeries<T>,
    scales: &[T],
) -> Result<HolderEstimate<T>> {
    let window = series.validity_window();
    for &r in scales {
        if !in_window(r, window) {
            return Err(Error::ValidityWindow {
                module: "weierfn",
                r: r.as_f64(),
                min: window.0.as_f64(),
                max: window.1.as_f64(),
            });
        }
    }
    if scales.len() < 2 {
        return Err(Error::domain(
            "weierfn",
            "Hölder fit needs at least two scales",
        ));
    }
    let rows = scales
        .iter()
        .map(|&r| Ok((r, sup_oscillation(series, r, Density::default())?)))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<T> = rows.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<T> = rows.iter().map(|(_, v)| v.ln()).collect();
    let (alpha_hat, _, fit_residual) = least_squares(&xs, &ys)
        .ok_or_else(|| Error::domain("weierfn", "degenerate Hölder fit (repeated scales)"))?;
    Ok(HolderEstimate {
        alpha_hat,
        fit_residual,
        rows,
        validity_window: window,
    })
}
