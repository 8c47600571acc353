//! Dimension formulas on finite windows, closed forms, synthesis of sequences
//! with prescribed dimensions, and the scale decomposition `k(r), m(r), l(r)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreal::LogReal;
use crate::scalar::Real;
use crate::seqcore::{log_d_series, SequenceKind, SequenceSpec};

/// Relative tolerance for deciding integrality of log-domain quantities.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// Above this log value `floor(x)` is replaced by `x` (error <= 1/x).
const LOG_FLOOR_LIMIT: f64 = 700.0;

/// Largest value treated as an exact integer count (2^53).
const EXACT_INTEGER_LOG: f64 = 36.736_800_569_677_1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DimensionRow<T> {
    pub n: usize,
    pub log_d: T,
    /// `log+ d_n / log(b_{n+1} d_n / d_{n+1})`, `None` when the denominator is not positive.
    pub ratio_h: Option<T>,
    /// `log+ d_n / log b_n`, `None` when `b_n <= 1`.
    pub ratio_b: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DimensionReport<T> {
    pub window: (usize, usize),
    pub rows: Vec<DimensionRow<T>>,
    /// Infimum of the Hausdorff ratio over the window.
    pub window_inf: T,
    /// Supremum of the upper-box ratio over the window.
    pub window_sup: T,
    pub final_ratio_h: T,
    pub final_ratio_b: T,
    pub hausdorff_dim_estimate: T,
    /// Equal to the Hausdorff estimate for this class.
    pub lowerbox_dim_estimate: T,
    pub upperbox_dim_estimate: T,
    pub closed_form: Option<(T, T)>,
    /// Proxy for `limsup log+ d_n / log b_n`: max over the second half of the window.
    pub gamma_bar: T,
    /// Indices where a ratio denominator was not positive.
    pub degenerate: Vec<usize>,
}

impl<T: Real> DimensionReport<T> {
    pub fn hausdorff_ratio_series(&self) -> Vec<(usize, T)> {
        self.rows
            .iter()
            .filter_map(|r| r.ratio_h.map(|v| (r.n, v)))
            .collect()
    }

    pub fn upperbox_ratio_series(&self) -> Vec<(usize, T)> {
        self.rows
            .iter()
            .filter_map(|r| r.ratio_b.map(|v| (r.n, v)))
            .collect()
    }

    pub fn ordered(&self) -> bool {
        self.hausdorff_dim_estimate <= self.upperbox_dim_estimate
    }
}

fn clamp_dim<T: Real>(x: T) -> T {
    x.max(T::one()).min(T::lit(2.0))
}

/// Evaluates both dimension ratios on `window = (n0, n1)` (inclusive).
pub fn dimension_report<T: Real>(
    spec: &SequenceSpec<T>,
    window: (usize, usize),
) -> Result<DimensionReport<T>> {
    let (n0, n1) = window;
    if n0 == 0 || n1 < n0 + 2 {
        return Err(Error::domain(
            "theory",
            "window must be 1-based with at least 3 indices",
        ));
    }
    let ld = log_d_series(spec, n1 + 1)?;
    let mut rows = Vec::with_capacity(n1 - n0 + 1);
    let mut degenerate = Vec::new();
    for n in n0..=n1 {
        let log_d = ld[n - 1].ln();
        let num = ld[n - 1].ln_plus();
        let den_h = spec.log_b(n + 1)? + log_d - ld[n].ln();
        let den_b = spec.log_b(n)?;
        let ratio_h = (den_h > T::zero()).then(|| num / den_h);
        let ratio_b = (den_b > T::zero()).then(|| num / den_b);
        if ratio_h.is_none() || ratio_b.is_none() {
            degenerate.push(n);
        }
        rows.push(DimensionRow {
            n,
            log_d,
            ratio_h,
            ratio_b,
        });
    }
    let last = rows.last().expect("nonempty window");
    let (final_ratio_h, final_ratio_b) = match (last.ratio_h, last.ratio_b) {
        (Some(h), Some(b)) => (h, b),
        _ => {
            return Err(Error::domain(
                "theory",
                format!("ratio denominator not positive at the window end n = {n1}"),
            ))
        }
    };
    let window_inf = rows
        .iter()
        .filter_map(|r| r.ratio_h)
        .fold(T::infinity(), |m, v| m.min(v));
    let window_sup = rows
        .iter()
        .filter_map(|r| r.ratio_b)
        .fold(T::neg_infinity(), |m, v| m.max(v));
    let half = n0 + (n1 - n0) / 2;
    let gamma_bar = rows
        .iter()
        .filter(|r| r.n >= half)
        .filter_map(|r| r.ratio_b)
        .fold(T::neg_infinity(), |m, v| m.max(v));
    let h = clamp_dim(T::one() + final_ratio_h);
    Ok(DimensionReport {
        window,
        window_inf,
        window_sup,
        final_ratio_h,
        final_ratio_b,
        hausdorff_dim_estimate: h,
        lowerbox_dim_estimate: h,
        upperbox_dim_estimate: clamp_dim(T::one() + final_ratio_b),
        closed_form: closed_form(spec),
        gamma_bar,
        degenerate,
        rows,
    })
}

/// `(dim_H, dim_B)` for families where it is known in closed form.
pub fn closed_form<T: Real>(spec: &SequenceSpec<T>) -> Option<(T, T)> {
    let zero = T::zero();
    match &spec.kind {
        SequenceKind::GeometricExponent { beta, alpha, .. } => alpha_beta_dims(*alpha, *beta).ok(),
        SequenceKind::PowerTower { linear, sqrt } => {
            if *sqrt == zero && *linear > zero && *linear <= T::one() {
                // log b_{n+1} / log b_n -> 1
                alpha_beta_dims(*linear, T::one()).ok()
            } else if *linear == zero && *sqrt > zero {
                Some((T::lit(2.0), T::lit(2.0)))
            } else {
                None
            }
        }
        SequenceKind::SuperTower {
            tower,
            tower_over_sqrt,
            tower_over_n,
            ..
        } => match (*tower > zero, *tower_over_sqrt > zero, *tower_over_n > zero) {
            (true, false, false) if *tower <= T::one() => {
                alpha_beta_dims(*tower, T::infinity()).ok()
            }
            (false, true, false) => Some((T::one(), T::lit(2.0))),
            (false, false, true) => {
                let ce = *tower_over_n * T::E();
                Some(((T::lit(2.0) + ce) / (T::one() + ce), T::lit(2.0)))
            }
            _ => None,
        },
        SequenceKind::ExplicitTable { .. } => None,
    }
}

/// `(1 + (1-alpha)/(1-alpha+alpha beta), 2 - alpha)` for `a_n = b_n^-alpha`
/// with `limsup log b_{n+1}/log b_n = beta`; `beta = inf` gives Hausdorff 1.
pub fn alpha_beta_dims<T: Real>(alpha: T, beta: T) -> Result<(T, T)> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::domain("theory", "alpha must lie in (0, 1]"));
    }
    if !(beta >= T::one()) {
        return Err(Error::domain("theory", "beta must be >= 1 or infinite"));
    }
    let one = T::one();
    let h = if beta.is_infinite() {
        one
    } else {
        one + (one - alpha) / (one - alpha + alpha * beta)
    };
    Ok((h, T::lit(2.0) - alpha))
}

fn same<T: Real>(x: T, y: T) -> bool {
    (x - y).abs() <= T::lit(1e-12)
}

/// An explicit sequence family whose graph has `dim_H = H` and `dim_B = B`.
pub fn synthesize<T: Real>(h: T, b: T) -> Result<SequenceSpec<T>> {
    let (one, two) = (T::one(), T::lit(2.0));
    let inside = |x: T| x >= one && x <= two;
    if !inside(h) || !inside(b) {
        return Err(Error::domain("theory", "H and B must lie in [1, 2]"));
    }
    if h > b && !same(h, b) {
        return Err(Error::domain("theory", "H must not exceed B"));
    }
    let zero = T::zero();
    let kind = if same(h, b) {
        if same(b, two) {
            SequenceKind::PowerTower {
                linear: zero,
                sqrt: one,
            }
        } else {
            SequenceKind::PowerTower {
                linear: two - b,
                sqrt: zero,
            }
        }
    } else if same(h, one) {
        if same(b, two) {
            SequenceKind::SuperTower {
                base: two,
                tower: zero,
                tower_over_sqrt: one,
                tower_over_n: zero,
            }
        } else {
            SequenceKind::SuperTower {
                base: two,
                tower: two - b,
                tower_over_sqrt: zero,
                tower_over_n: zero,
            }
        }
    } else if same(b, two) {
        SequenceKind::SuperTower {
            base: two,
            tower: zero,
            tower_over_sqrt: zero,
            tower_over_n: (two - h) / (T::E() * (h - one)),
        }
    } else {
        SequenceKind::GeometricExponent {
            base: two,
            beta: (two - h) * (b - one) / ((h - one) * (two - b)),
            alpha: two - b,
        }
    };
    Ok(SequenceSpec::new(kind))
}

/// `beta = (1-alpha)(2-H) / (alpha (H-1))` so that `b_n = b_1^(beta^(n-1))`,
/// `a_n = b_n^-alpha` has Hausdorff dimension `H`.
pub fn besicovitch_ursell_beta<T: Real>(alpha: T, h: T) -> Result<T> {
    let one = T::one();
    if !(alpha > T::zero() && alpha < one) {
        return Err(Error::domain("theory", "alpha must lie in (0, 1)"));
    }
    if !(h > one && h < T::lit(2.0) - alpha) {
        return Err(Error::domain("theory", "H must lie in (1, 2 - alpha)"));
    }
    let beta = (one - alpha) * (T::lit(2.0) - h) / (alpha * (h - one));
    if !(beta > one) {
        return Err(Error::domain(
            "theory",
            "beta must exceed 1 for rapid growth",
        ));
    }
    Ok(beta)
}

/// Integer part of `exp(log_x)` as `(log of floor, exact value if small)`,
/// snapping to the nearest integer within [`INTEGRALITY_TOL`].
fn log_floor<T: Real>(log_x: T) -> (T, Option<u64>) {
    if log_x.as_f64() > LOG_FLOOR_LIMIT {
        return (log_x, None);
    }
    if log_x.as_f64() > EXACT_INTEGER_LOG {
        return (log_x, None);
    }
    let x = log_x.exp();
    let y = x.round();
    let f = if (x - y).abs() <= T::lit(INTEGRALITY_TOL) * x.max(T::one()) {
        y
    } else {
        x.floor()
    };
    (f.ln(), f.to_u64())
}

/// Ratios at scale index `k` with `d_k`, `d_{k+1}`, `b_{k+1}` in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScaleRatios<T> {
    pub log_d_k: T,
    pub log_d_k1: T,
    pub log_b_k1: T,
}

impl<T: Real> ScaleRatios<T> {
    pub fn new(spec: &SequenceSpec<T>, k: usize) -> Result<Self> {
        let ld = log_d_series(spec, k + 1)?;
        Ok(ScaleRatios {
            log_d_k: ld[k - 1].ln(),
            log_d_k1: ld[k].ln(),
            log_b_k1: spec.log_b(k + 1)?,
        })
    }

    /// `X_k(m) = log d_k / log(b_{k+1}/m)`.
    pub fn x(&self, log_m: T) -> T {
        self.log_d_k / (self.log_b_k1 - log_m)
    }

    /// `Y_k(m) = log(d_{k+1}/m) / log(b_{k+1}/m)`.
    pub fn y(&self, log_m: T) -> T {
        (self.log_d_k1 - log_m) / (self.log_b_k1 - log_m)
    }

    pub fn max_xy(&self, log_m: T) -> T {
        self.x(log_m).max(self.y(log_m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScaleDecomposition<T> {
    pub r: T,
    pub log_r: T,
    /// `1/b_{k+1} <= r < 1/b_k`.
    pub k: usize,
    /// `m/b_{k+1} <= r < (m+1)/b_{k+1}`; `None` above 2^53.
    pub m: Option<u64>,
    pub log_m: T,
    /// Cap on `m`: `b_{k+1}/b_k - 1` for integral ratios, else the floor.
    pub m_k: Option<u64>,
    pub log_m_k: T,
    /// `a_{l+1} <= r < a_l` when the coefficients bracket `r`.
    pub l: Option<usize>,
    pub x_at_m: T,
    pub y_at_m: T,
    /// `min_{1 <= m <= m_k} max(X_k(m), Y_k(m))`.
    pub mk_value: T,
    pub argmin_m: Option<u64>,
    pub log_argmin_m: T,
}

/// Cap `m_k` as `(log value, exact value)`.
pub fn m_cap<T: Real>(spec: &SequenceSpec<T>, k: usize) -> Result<(T, Option<u64>)> {
    let delta = spec.log_b(k + 1)? - spec.log_b(k)?;
    if delta.as_f64() > EXACT_INTEGER_LOG {
        return Ok((delta, None));
    }
    let ratio = delta.exp();
    let y = ratio.round();
    let cap = if (ratio - y).abs() <= T::lit(INTEGRALITY_TOL) * ratio {
        y - T::one()
    } else {
        ratio.floor()
    };
    Ok((cap.ln(), cap.to_u64()))
}

/// Closed-form `M_k` and its minimizer from the crossover `m = d_{k+1}/d_k`.
pub fn mk_closed_form<T: Real>(ratios: &ScaleRatios<T>, log_m_k: T) -> (T, T) {
    let log_dd = ratios.log_d_k1 - ratios.log_d_k;
    let (log_f, f) = log_floor(log_dd);
    if log_f >= log_m_k {
        // every admissible m sits left of the crossover, where max = Y is decreasing
        return (ratios.y(log_m_k), log_m_k);
    }
    let log_f1 = match f {
        Some(v) => T::from_u64(v + 1).expect("count").ln(),
        None => log_f,
    };
    let (y, x) = (ratios.y(log_f), ratios.x(log_f1));
    if y <= x {
        (y, log_f)
    } else {
        (x, log_f1)
    }
}

pub fn scale_decomposition<T: Real>(spec: &SequenceSpec<T>, r: T) -> Result<ScaleDecomposition<T>> {
    if !(r > T::zero()) {
        return Err(Error::ScaleRange { r: r.as_f64() });
    }
    scale_decomposition_log(spec, r.ln()).map(|mut s| {
        s.r = r;
        s
    })
}

/// As [`scale_decomposition`] with `r` given by its natural log.
pub fn scale_decomposition_log<T: Real>(
    spec: &SequenceSpec<T>,
    log_r: T,
) -> Result<ScaleDecomposition<T>> {
    let out_of_range = || Error::ScaleRange {
        r: log_r.exp().as_f64(),
    };
    let target = -log_r;
    let tol = T::lit(1e-12) * target.abs().max(T::one());
    if !spec.has_term(2) || !(spec.log_b(1)? < target - tol) {
        return Err(out_of_range());
    }
    let mut k = 1;
    loop {
        if !spec.has_term(k + 2) {
            // need b_{k+1} and, for d_{k+1}, the (k+1)-th term
            if !spec.has_term(k + 1) {
                return Err(out_of_range());
            }
        }
        let next = spec.log_b(k + 1).map_err(|_| out_of_range())?;
        if next < target - tol {
            k += 1;
            continue;
        }
        break;
    }
    let ratios = ScaleRatios::new(spec, k)?;
    let (log_m, m) = log_floor(log_r + ratios.log_b_k1);
    let (log_m_k, m_k) = m_cap(spec, k)?;
    let (log_m, m) = if log_m > log_m_k {
        (log_m_k, m_k)
    } else {
        (log_m, m)
    };
    let mut l = None;
    let mut i = 1;
    while spec.has_term(i) {
        match spec.log_a(i) {
            Ok(la) if la > log_r => {
                l = Some(i);
                i += 1;
            }
            _ => break,
        }
    }
    if l.is_some_and(|v| !spec.has_term(v + 1)) {
        l = None;
    }
    let (mk_value, log_argmin_m) = mk_closed_form(&ratios, log_m_k);
    let argmin_m = exact_count(log_argmin_m);
    Ok(ScaleDecomposition {
        r: log_r.exp(),
        log_r,
        k,
        m,
        log_m,
        m_k,
        log_m_k,
        l,
        x_at_m: ratios.x(log_m),
        y_at_m: ratios.y(log_m),
        mk_value,
        argmin_m,
        log_argmin_m,
    })
}

fn exact_count<T: Real>(log_v: T) -> Option<u64> {
    if log_v.as_f64() > EXACT_INTEGER_LOG {
        None
    } else {
        log_v.exp().round().to_u64()
    }
}

fn ln_u64<T: Real>(m: u64) -> T {
    T::from_u64(m).expect("count").ln()
}

/// Minimizes `max(X_k(m), Y_k(m))` over `m in 1..=m_k` without using the crossover.
///
/// Enumerates when `m_k <= m_cap`, otherwise ternary-searches the unimodal
/// objective and scans the final bracket exhaustively. Ties go to the smaller `m`.
pub fn mk_bruteforce<T: Real>(
    spec: &SequenceSpec<T>,
    k: usize,
    m_cap_limit: u64,
) -> Result<(T, u64)> {
    let ratios = ScaleRatios::new(spec, k)?;
    let (_, m_k) = m_cap(spec, k)?;
    let m_k = m_k.ok_or(Error::NotRepresentable {
        index: k,
        what: "m_k",
    })?;
    if m_k == 0 {
        return Err(Error::domain("theory", "m_k = 0: b_{k+1} <= b_k"));
    }
    let h = |m: u64| ratios.max_xy(ln_u64(m));
    let best = |lo: u64, hi: u64| {
        (lo..=hi).into_par_iter().map(|m| (h(m), m)).reduce(
            || (T::infinity(), u64::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
    };
    if m_k <= m_cap_limit {
        let (v, m) = best(1, m_k);
        return Ok((v, m));
    }
    let (mut lo, mut hi) = (1u64, m_k);
    while hi - lo > 64 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if h(m1) <= h(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let (v, m) = best(lo.saturating_sub(64).max(1), (hi + 64).min(m_k));
    Ok((v, m))
}

/// `log d_n` helper for callers needing the whole series.
pub fn log_d_values<T: Real>(spec: &SequenceSpec<T>, n: usize) -> Result<Vec<T>> {
    Ok(log_d_series(spec, n)?.iter().map(LogReal::ln).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::{presets, TableRow};
    use proptest::prelude::*;

    #[test]
    fn alpha_beta_examples() {
        let (h, b) = alpha_beta_dims(0.5f64, 3.0).unwrap();
        assert!((h - 1.25).abs() < 1e-15 && (b - 1.5).abs() < 1e-15);
        assert_eq!(alpha_beta_dims(1.0f64, 7.0).unwrap(), (1.0, 1.0));
        assert_eq!(alpha_beta_dims(0.5f64, f64::INFINITY).unwrap(), (1.0, 1.5));
        assert!(alpha_beta_dims(0.0f64, 2.0).is_err());
        assert!(alpha_beta_dims(0.5f64, 0.5).is_err());
    }

    #[test]
    fn report_alpha_half_beta_two() {
        let rep = dimension_report(&presets::alpha_beta(0.5f64, 2.0), (1, 30)).unwrap();
        assert!((rep.hausdorff_dim_estimate - 4.0 / 3.0).abs() < 1e-6);
        assert!((rep.upperbox_dim_estimate - 1.5).abs() < 1e-6);
        assert_eq!(rep.closed_form, Some((1.0 + 1.0 / 3.0, 1.5)));
        assert!(rep.ordered());
    }

    #[test]
    fn report_lipschitz_family() {
        let rep = dimension_report(&presets::lipschitz::<f64>(40), (3, 30)).unwrap();
        assert_eq!(rep.hausdorff_dim_estimate, 1.0);
        assert_eq!(rep.upperbox_dim_estimate, 1.0);
    }

    #[test]
    fn report_power_tower_tends_to_two_minus_alpha() {
        let s = SequenceSpec::new(SequenceKind::PowerTower {
            linear: 0.5f64,
            sqrt: 0.0,
        });
        let rep = dimension_report(&s, (2, 200)).unwrap();
        assert!((rep.hausdorff_dim_estimate - 1.5).abs() < 0.02);
        assert!((rep.upperbox_dim_estimate - 1.5).abs() < 0.01);
        assert_eq!(rep.closed_form, Some((1.5, 1.5)));
        // b_1 = 1 makes the upper-box ratio degenerate at n = 1
        let rep1 = dimension_report(&s, (1, 5)).unwrap();
        assert_eq!(rep1.degenerate, vec![1]);
    }

    #[test]
    fn report_window_too_short() {
        assert!(dimension_report(&presets::alpha_beta(0.5f64, 2.0), (1, 2)).is_err());
    }

    #[test]
    fn synth_examples() {
        let s = synthesize(1.5f64, 1.75).unwrap();
        match s.kind {
            SequenceKind::GeometricExponent { base, beta, alpha } => {
                assert_eq!(base, 2.0);
                assert!((beta - 3.0).abs() < 1e-12);
                assert!((alpha - 0.25).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            synthesize(1.5f64, 1.5).unwrap().kind,
            SequenceKind::PowerTower {
                linear: 0.5,
                sqrt: 0.0
            }
        );
        assert_eq!(
            synthesize(2.0f64, 2.0).unwrap().kind,
            SequenceKind::PowerTower {
                linear: 0.0,
                sqrt: 1.0
            }
        );
        assert!(synthesize(1.7f64, 1.3).is_err());
        assert!(synthesize(0.9f64, 1.3).is_err());
        for (h, b) in [
            (1.5f64, 1.5f64),
            (1.3, 1.7),
            (1.0, 1.5),
            (2.0, 2.0),
            (1.5, 2.0),
            (1.0, 2.0),
        ] {
            let (ch, cb) = closed_form(&synthesize(h, b).unwrap()).unwrap();
            assert!((ch - h).abs() < 1e-12 && (cb - b).abs() < 1e-12, "{h} {b}");
        }
    }

    #[test]
    fn besicovitch_ursell_examples() {
        let beta = besicovitch_ursell_beta(0.5f64, 1.25).unwrap();
        assert!((beta - 3.0).abs() < 1e-12);
        assert!((alpha_beta_dims(0.5, beta).unwrap().0 - 1.25).abs() < 1e-12);
        assert!(besicovitch_ursell_beta(0.5f64, 1.5).is_err());
        let near = besicovitch_ursell_beta(0.5f64, 1.5 - 1e-9).unwrap();
        assert!((near - 1.0).abs() < 1e-6);
    }

    fn table(rows: &[(f64, f64)]) -> SequenceSpec<f64> {
        SequenceSpec::new(SequenceKind::ExplicitTable {
            rows: rows
                .iter()
                .map(|&(la, lb)| TableRow {
                    log_a: la,
                    log_b: lb,
                    theta: 0.0,
                })
                .collect(),
        })
    }

    #[test]
    fn lower_endpoint_gives_m_one() {
        let s = presets::wingren::<f64>(10);
        let b3 = s.native_b(3).unwrap();
        let d = scale_decomposition(&s, 1.0 / b3).unwrap();
        assert_eq!(d.k, 2);
        assert_eq!(d.m, Some(1));
        assert!(d.m_k.unwrap() >= 1);
    }

    #[test]
    fn integral_ratio_cap() {
        // b_1 = 4, b_2 = 16: ratio 4 is integral so m_k = 3
        let s = table(&[(-1.0, 4f64.ln()), (-3.0, 16f64.ln()), (-6.0, 1024f64.ln())]);
        assert_eq!(m_cap(&s, 1).unwrap().1, Some(3));
        let s2 = table(&[
            (-1.0, 4f64.ln()),
            (-3.0, 18.5f64.ln()),
            (-6.0, 1024f64.ln()),
        ]);
        assert_eq!(m_cap(&s2, 1).unwrap().1, Some(4));
    }

    #[test]
    fn crossover_five_and_a_half() {
        // d_1 = 2, d_2 = 11, b_2 = 1000
        let s = table(&[
            (0.0, 2f64.ln()),
            ((9.0f64 / 1000.0).ln(), 1000f64.ln()),
            (-30.0, 1e9f64.ln()),
        ]);
        let (_, m) = mk_bruteforce(&s, 1, 1 << 20).unwrap();
        assert!(m == 5 || m == 6, "{m}");
    }

    #[test]
    fn single_candidate() {
        // b_2/b_1 = 2 is integral so m_k = 1
        let s = table(&[(-1.0, 8f64.ln()), (-4.0, 16f64.ln()), (-9.0, 1e6f64.ln())]);
        let ratios = ScaleRatios::new(&s, 1).unwrap();
        let (v, m) = mk_bruteforce(&s, 1, 100).unwrap();
        assert_eq!(m, 1);
        assert_eq!(v, ratios.y(0.0));
        assert!(ratios.x(0.0) < ratios.y(0.0));
    }

    #[test]
    fn small_growth_of_d() {
        // a_n b_n = 1 so d_k = k and d_{k+1} < 2 d_k: M_k = min(Y(1), X(2))
        let rows: Vec<(f64, f64)> = (1..=6)
            .map(|n| (-(n as f64) * 1000f64.ln(), n as f64 * 1000f64.ln()))
            .collect();
        let s = table(&rows);
        let ratios = ScaleRatios::new(&s, 3).unwrap();
        assert!(ratios.log_d_k1 - ratios.log_d_k < 2f64.ln());
        let (lm, _) = m_cap(&s, 3).unwrap();
        let (v, _) = mk_closed_form(&ratios, lm);
        assert_eq!(v, ratios.y(0.0).min(ratios.x(2f64.ln())));
    }

    #[test]
    fn ternary_path_matches_enumeration() {
        let s = table(&[(-2.0, 10.0), (-8.0, 25.0), (-30.0, 60.0)]);
        let a = mk_bruteforce(&s, 1, u64::MAX).unwrap();
        let b = mk_bruteforce(&s, 1, 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tower_scale_is_log_only() {
        let s = synthesize(1.0f64, 1.5).unwrap();
        // log b_4 = 256 ln 2 ~ 177 < 200 < log b_5
        let d = scale_decomposition_log(&s, -200.0).unwrap();
        assert_eq!(d.k, 4);
        assert!(d.m_k.is_none());
    }

    #[test]
    fn out_of_range_scale() {
        let s = presets::wingren::<f64>(5);
        assert!(matches!(
            scale_decomposition(&s, 0.9),
            Err(Error::ScaleRange { .. })
        ));
        assert!(matches!(
            scale_decomposition(&s, 1e-300),
            Err(Error::ScaleRange { .. })
        ));
    }

    fn random_table() -> impl Strategy<Value = SequenceSpec<f64>> {
        // log b increments in [ln 3, ln 1e5]; a_n b_n increasing and d_{k+1} < b_{k+1}
        prop::collection::vec((3f64.ln()..1e5f64.ln(), 0.05f64..0.9), 6).prop_map(|steps| {
            let mut lb = 0.0;
            let mut rows = Vec::new();
            for (i, (db, frac)) in steps.into_iter().enumerate() {
                lb += db;
                let lab = 0.3 + frac * lb * (i as f64 + 1.0) / 6.0;
                rows.push(TableRow {
                    log_a: lab - lb,
                    log_b: lb,
                    theta: 0.0,
                });
            }
            SequenceSpec::new(SequenceKind::ExplicitTable { rows })
        })
    }

    proptest! {
        #[test]
        fn mk_closed_form_matches_bruteforce(s in random_table(), k in 1usize..4, u in 0.0f64..1.0) {
            let lb0 = s.log_b(k).unwrap();
            let lb1 = s.log_b(k + 1).unwrap();
            let log_r = -(lb1 - u * (lb1 - lb0) * (1.0 - 1e-9));
            let d = scale_decomposition_log(&s, log_r).unwrap();
            prop_assert_eq!(d.k, k);
            let (v, m) = mk_bruteforce(&s, d.k, 1 << 22).unwrap();
            prop_assert!((v - d.mk_value).abs() <= 1e-12 * v.abs());
            prop_assert_eq!(Some(m), d.argmin_m);
        }

        #[test]
        fn x_and_y_are_monotone(s in random_table(), k in 1usize..4) {
            let r = ScaleRatios::new(&s, k).unwrap();
            let (lm, _) = m_cap(&s, k).unwrap();
            prop_assume!(r.log_d_k >= 0.0 && r.log_d_k1 < r.log_b_k1);
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..=32 {
                let log_m = lm * i as f64 / 32.0;
                let (x, y) = (r.x(log_m), r.y(log_m));
                if let Some((px, py)) = prev {
                    prop_assert!(x >= px - 1e-15 && y <= py + 1e-15);
                }
                prev = Some((x, y));
            }
        }

        #[test]
        fn report_is_ordered(alpha in 0.1f64..1.0, beta in 1.2f64..3.0) {
            let rep = dimension_report(&presets::alpha_beta(alpha, beta), (1, 30)).unwrap();
            prop_assert!(rep.ordered());
            prop_assert!(rep.hausdorff_dim_estimate >= 1.0 && rep.upperbox_dim_estimate <= 2.0);
            for row in &rep.rows {
                prop_assert!(row.ratio_h.unwrap() >= 0.0 && row.ratio_b.unwrap().is_finite());
            }
        }
    }
}
