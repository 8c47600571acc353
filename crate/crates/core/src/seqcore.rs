//! Coefficient/frequency sequences `(a_n, b_n, theta_n)` in log domain, the
//! partial sums `d_n = a_1 b_1 + ... + a_n b_n`, and finite-window diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreal::LogReal;
use crate::scalar::Real;
use crate::weierfn::BaseFunction;

/// Default eta for the ratio conditions `a_{n+1}/a_n < eta`, `b_n/b_{n+1} < eta`.
pub const DEFAULT_ETA: f64 = 0.1;

/// How many tail ratios `tail_bound` inspects past the truncation depth.
pub const TAIL_CHECK_TERMS: usize = 64;

/// One row of an explicit table: natural logs of `a_n`, `b_n`, and the phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TableRow<T> {
    pub log_a: T,
    pub log_b: T,
    #[serde(default)]
    pub theta: T,
}

/// The symbolic generator families.
///
/// * `GeometricExponent`: `b_n = base^(beta^n)`, `a_n = b_n^(-alpha)`.
/// * `PowerTower`: `b_n = n^n`, `a_n = n^-(linear*n + sqrt*sqrt(n))`.
/// * `SuperTower`: `b_n = base^(n^n)`,
///   `a_n = base^-(tower*n^n + tower_over_sqrt*n^n/sqrt(n) + tower_over_n*n^(n-1))`.
/// * `ExplicitTable`: rows indexed from `n = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
#[serde(bound = "T: Real")]
pub enum SequenceKind<T> {
    GeometricExponent {
        base: T,
        beta: T,
        alpha: T,
    },
    PowerTower {
        linear: T,
        #[serde(default)]
        sqrt: T,
    },
    SuperTower {
        base: T,
        #[serde(default)]
        tower: T,
        #[serde(default)]
        tower_over_sqrt: T,
        #[serde(default)]
        tower_over_n: T,
    },
    ExplicitTable {
        rows: Vec<TableRow<T>>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
#[serde(bound = "T: Real")]
pub enum PhaseRule<T> {
    #[default]
    Zero,
    Constant {
        theta: T,
    },
    ExplicitList {
        thetas: Vec<T>,
    },
}

/// A sequence family plus phase rule.
///
/// `skip` drops that many leading terms: term `n` of the spec is term
/// `n + skip` of the underlying family. Dropping finitely many terms removes a
/// Lipschitz summand and leaves every dimension unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SequenceSpec<T> {
    #[serde(flatten)]
    pub kind: SequenceKind<T>,
    #[serde(default)]
    pub phase: PhaseRule<T>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub skip: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// `(log a_n, log b_n)` of one term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTerm<T> {
    pub log_a: T,
    pub log_b: T,
}

impl<T: Real> SequenceSpec<T> {
    pub fn new(kind: SequenceKind<T>) -> Self {
        SequenceSpec {
            kind,
            phase: PhaseRule::Zero,
            skip: 0,
        }
    }

    pub fn with_phase(mut self, phase: PhaseRule<T>) -> Self {
        self.phase = phase;
        self
    }

    /// Same family with `extra` more leading terms dropped.
    pub fn tail(&self, extra: usize) -> Self {
        let mut s = self.clone();
        s.skip += extra;
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Checks parameter ranges; does not check asymptotic monotonicity.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::domain("seqcore", m));
        let finite = |x: T| x.is_finite();
        match &self.kind {
            SequenceKind::GeometricExponent { base, beta, alpha } => {
                if !(finite(*base) && *base > T::one()) {
                    return bad("geometric_exponent requires base > 1");
                }
                if !(finite(*beta) && *beta > T::one()) {
                    return bad("geometric_exponent requires beta > 1");
                }
                if !(finite(*alpha) && *alpha > T::zero()) {
                    return bad("geometric_exponent requires alpha > 0");
                }
            }
            SequenceKind::PowerTower { linear, sqrt } => {
                if !(finite(*linear) && finite(*sqrt)) || *linear < T::zero() || *sqrt < T::zero() {
                    return bad("power_tower coefficients must be finite and nonnegative");
                }
                if *linear == T::zero() && *sqrt == T::zero() {
                    return bad("power_tower needs a decaying coefficient sequence");
                }
            }
            SequenceKind::SuperTower {
                base,
                tower,
                tower_over_sqrt,
                tower_over_n,
            } => {
                if !(finite(*base) && *base > T::one()) {
                    return bad("super_tower requires base > 1");
                }
                let cs = [*tower, *tower_over_sqrt, *tower_over_n];
                if cs.iter().any(|c| !finite(*c) || *c < T::zero()) {
                    return bad("super_tower coefficients must be finite and nonnegative");
                }
                if cs.iter().all(|c| *c == T::zero()) {
                    return bad("super_tower needs a decaying coefficient sequence");
                }
            }
            SequenceKind::ExplicitTable { rows } => {
                if rows.len() <= self.skip {
                    return bad("explicit_table must have at least one row after skip");
                }
                if rows
                    .iter()
                    .any(|r| r.log_a.is_nan() || !finite(r.log_b) || !finite(r.theta))
                {
                    return bad("explicit_table rows must be finite (log_a may be -inf)");
                }
            }
        }
        if let PhaseRule::ExplicitList { thetas } = &self.phase {
            if thetas.is_empty() || thetas.iter().any(|t| !t.is_finite()) {
                return bad("explicit phase list must be non-empty and finite");
            }
        }
        Ok(())
    }

    /// Number of available terms, `None` for the unbounded generators.
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            SequenceKind::ExplicitTable { rows } => Some(rows.len().saturating_sub(self.skip)),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Whether term `n` (1-based) can be produced.
    pub fn has_term(&self, n: usize) -> bool {
        n >= 1 && self.len().is_none_or(|len| n <= len)
    }

    fn raw_index(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return Err(Error::domain("seqcore", "terms are indexed from n = 1"));
        }
        if let Some(len) = self.len() {
            if n > len {
                return Err(Error::IndexOutOfRange { index: n, len });
            }
        }
        Ok(n + self.skip)
    }

    /// `(log a_n, log b_n)` for `n >= 1`.
    pub fn term(&self, n: usize) -> Result<LogTerm<T>> {
        let k = self.raw_index(n)?;
        let kf = T::from_usize_lossy(k);
        let t = match &self.kind {
            SequenceKind::GeometricExponent { base, beta, alpha } => {
                let log_b = base.ln() * beta.powi(k as i32);
                LogTerm {
                    log_a: -*alpha * log_b,
                    log_b,
                }
            }
            SequenceKind::PowerTower { linear, sqrt } => {
                let ln_k = kf.ln();
                LogTerm {
                    log_a: -(*linear * kf + *sqrt * kf.sqrt()) * ln_k,
                    log_b: kf * ln_k,
                }
            }
            SequenceKind::SuperTower {
                base,
                tower,
                tower_over_sqrt,
                tower_over_n,
            } => {
                let nn = kf.powi(k as i32);
                let log_base = base.ln();
                let expo =
                    *tower * nn + *tower_over_sqrt * nn / kf.sqrt() + *tower_over_n * nn / kf;
                LogTerm {
                    log_a: -log_base * expo,
                    log_b: log_base * nn,
                }
            }
            SequenceKind::ExplicitTable { rows } => {
                let r = rows[k - 1];
                LogTerm {
                    log_a: r.log_a,
                    log_b: r.log_b,
                }
            }
        };
        if !t.log_b.is_finite() || t.log_a.is_nan() || t.log_a == T::infinity() {
            return Err(Error::NotRepresentable {
                index: n,
                what: "log-domain term overflows the scalar type",
            });
        }
        Ok(t)
    }

    pub fn log_a(&self, n: usize) -> Result<T> {
        Ok(self.term(n)?.log_a)
    }

    pub fn log_b(&self, n: usize) -> Result<T> {
        Ok(self.term(n)?.log_b)
    }

    /// Phase `theta_n`; explicit tables carry their own phase column.
    pub fn theta(&self, n: usize) -> Result<T> {
        let k = self.raw_index(n)?;
        if let SequenceKind::ExplicitTable { rows } = &self.kind {
            if matches!(self.phase, PhaseRule::Zero) {
                return Ok(rows[k - 1].theta);
            }
        }
        match &self.phase {
            PhaseRule::Zero => Ok(T::zero()),
            PhaseRule::Constant { theta } => Ok(*theta),
            PhaseRule::ExplicitList { thetas } => {
                thetas.get(k - 1).copied().ok_or(Error::IndexOutOfRange {
                    index: k,
                    len: thetas.len(),
                })
            }
        }
    }

    /// Native `b_n`, computed exactly where the family allows it.
    pub fn native_b(&self, n: usize) -> Result<T> {
        let k = self.raw_index(n)?;
        let kf = T::from_usize_lossy(k);
        let b = match &self.kind {
            SequenceKind::GeometricExponent { base, beta, .. } => base.powf(beta.powi(k as i32)),
            SequenceKind::PowerTower { .. } => kf.powi(k as i32),
            SequenceKind::SuperTower { base, .. } => base.powf(kf.powi(k as i32)),
            SequenceKind::ExplicitTable { .. } => snap_integer(self.log_b(n)?.exp()),
        };
        if !b.is_finite() {
            return Err(Error::NotRepresentable {
                index: n,
                what: "native frequency overflows",
            });
        }
        Ok(b)
    }

    /// Native `a_n`.
    pub fn native_a(&self, n: usize) -> Result<T> {
        let k = self.raw_index(n)?;
        let kf = T::from_usize_lossy(k);
        Ok(match &self.kind {
            SequenceKind::PowerTower { linear, sqrt } => {
                kf.powf(-(*linear * kf + *sqrt * kf.sqrt()))
            }
            _ => self.log_a(n)?.exp(),
        })
    }
}

fn snap_integer<T: Real>(x: T) -> T {
    let r = x.round();
    if r >= T::one() && (x - r).abs() <= T::lit(1e-12) * x {
        r
    } else {
        x
    }
}

/// `d_1 ..= d_n` as a running log-domain sum; entry `i` is `d_{i+1}`.
pub fn log_d_series<T: Real>(spec: &SequenceSpec<T>, n: usize) -> Result<Vec<LogReal<T>>> {
    let mut out = Vec::with_capacity(n);
    let mut acc = LogReal::zero();
    for i in 1..=n {
        let t = spec.term(i)?;
        acc = acc + LogReal::from_log(t.log_a + t.log_b);
        out.push(acc);
    }
    Ok(out)
}

/// `d_n = a_1 b_1 + ... + a_n b_n` in log domain.
pub fn log_d<T: Real>(spec: &SequenceSpec<T>, n: usize) -> Result<LogReal<T>> {
    if n == 0 {
        return Err(Error::domain("seqcore", "d_n is defined for n >= 1"));
    }
    Ok(*log_d_series(spec, n)?.last().expect("n >= 1"))
}

/// Finite-window view of the ratio conditions.
///
/// Ratios at index `n` compare terms `n` and `n + 1`, both inside the window,
/// so every list has `n1 - n0` entries. Ratios are natural logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SequenceDiagnostics<T> {
    pub window: (usize, usize),
    pub eta: T,
    /// `log(a_{n+1}/a_n)`.
    pub coeff_ratios: Vec<T>,
    /// `log(b_{n+1}/b_n)`.
    pub freq_ratios: Vec<T>,
    /// `log b_{n+1} / log b_n`.
    pub log_ratio_freq: Vec<T>,
    /// `n / log b_n` for every index in the window.
    pub n_over_logb: Vec<T>,
    /// `log inf_{n <= i < n1} a_i/a_{i+1}`.
    pub a_floor: Vec<T>,
    /// `log inf_{n <= i < n1} b_{i+1}/b_i`.
    pub b_floor: Vec<T>,
    pub eta_ok: bool,
    /// First index from which both inequalities hold up to the window end.
    pub first_eta_index: Option<usize>,
}

pub fn diagnostics<T: Real>(
    spec: &SequenceSpec<T>,
    n0: usize,
    n1: usize,
    eta: T,
) -> Result<SequenceDiagnostics<T>> {
    if n0 < 1 || n0 >= n1 {
        return Err(Error::domain(
            "seqcore",
            "diagnostics window needs 1 <= n0 < n1",
        ));
    }
    if !(eta > T::zero() && eta < T::one()) {
        return Err(Error::domain("seqcore", "eta must lie in (0, 1)"));
    }
    let terms = (n0..=n1)
        .map(|n| spec.term(n))
        .collect::<Result<Vec<_>>>()?;
    let log_eta = eta.ln();
    let mut coeff_ratios = Vec::new();
    let mut freq_ratios = Vec::new();
    let mut log_ratio_freq = Vec::new();
    let mut holds = Vec::new();
    for w in terms.windows(2) {
        let ca = w[1].log_a - w[0].log_a;
        let cb = w[1].log_b - w[0].log_b;
        coeff_ratios.push(ca);
        freq_ratios.push(cb);
        log_ratio_freq.push(w[1].log_b / w[0].log_b);
        holds.push(ca < log_eta && -cb < log_eta);
    }
    let n_over_logb = terms
        .iter()
        .zip(n0..)
        .map(|(t, n)| T::from_usize_lossy(n) / t.log_b)
        .collect();
    let mut a_floor = vec![T::zero(); coeff_ratios.len()];
    let mut b_floor = vec![T::zero(); freq_ratios.len()];
    let mut amin = T::infinity();
    let mut bmin = T::infinity();
    for i in (0..coeff_ratios.len()).rev() {
        amin = amin.min(-coeff_ratios[i]);
        bmin = bmin.min(freq_ratios[i]);
        a_floor[i] = amin;
        b_floor[i] = bmin;
    }
    let eta_ok = holds.iter().all(|&h| h);
    let first_eta_index = holds
        .iter()
        .rposition(|&h| !h)
        .map_or(Some(n0), |i| (i + 1 < holds.len()).then_some(n0 + i + 1));
    Ok(SequenceDiagnostics {
        window: (n0, n1),
        eta,
        coeff_ratios,
        freq_ratios,
        log_ratio_freq,
        n_over_logb,
        a_floor,
        b_floor,
        eta_ok,
        first_eta_index,
    })
}

/// One row of the `d_{n+1}/b_{n+1} < 2 eta d_n/b_n` check (logs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RatioBoundRow<T> {
    pub n: usize,
    pub log_lhs: T,
    pub log_rhs: T,
    pub holds: bool,
}

/// Evaluates `d_{n+1}/b_{n+1} < 2 eta d_n/b_n` for consecutive pairs in `[n0, n1]`.
pub fn ratio_bound_check<T: Real>(
    spec: &SequenceSpec<T>,
    n0: usize,
    n1: usize,
    eta: T,
) -> Result<Vec<RatioBoundRow<T>>> {
    let ds = log_d_series(spec, n1)?;
    let two_eta = (T::lit(2.0) * eta).ln();
    (n0..n1)
        .map(|n| {
            let lhs = ds[n].ln() - spec.log_b(n + 1)?;
            let rhs = two_eta + ds[n - 1].ln() - spec.log_b(n)?;
            Ok(RatioBoundRow {
                n,
                log_lhs: lhs,
                log_rhs: rhs,
                holds: lhs < rhs,
            })
        })
        .collect()
}

/// Upper bound `sup|g| * a_{N+1} / (1 - eta)` on `sup |f - sum_{i<=N} f_i|`.
///
/// Requires `a_{i+1}/a_i <= eta` for `i > N`; the condition is checked on the
/// next [`TAIL_CHECK_TERMS`] representable terms.
pub fn tail_bound<T: Real>(
    spec: &SequenceSpec<T>,
    g: &BaseFunction<T>,
    depth: usize,
    eta: T,
) -> Result<T> {
    if !(eta > T::zero() && eta < T::one()) {
        return Err(Error::domain("seqcore", "tail bound needs eta in (0, 1)"));
    }
    if !spec.has_term(depth + 1) {
        return Ok(T::zero());
    }
    let log_eta = eta.ln() + T::lit(1e-12);
    let mut prev = spec.log_a(depth + 1)?;
    let mut first_bad: Option<(usize, T)> = None;
    let mut worst = T::neg_infinity();
    for i in depth + 2..depth + 2 + TAIL_CHECK_TERMS {
        if !spec.has_term(i) {
            break;
        }
        let la = match spec.log_a(i) {
            Ok(la) => la,
            Err(Error::NotRepresentable { .. }) => break,
            Err(e) => return Err(e),
        };
        let step = la - prev;
        worst = worst.max(step);
        if step > log_eta && first_bad.is_none() {
            first_bad = Some((i - 1, step));
        }
        prev = la;
    }
    if let Some((index, step)) = first_bad {
        return Err(Error::EtaViolation {
            index,
            detail: format!(
                "a_{{n+1}}/a_n = {:.6} exceeds eta = {}; the checked tail needs eta > {:.6}",
                step.exp(),
                eta,
                worst.exp()
            ),
        });
    }
    let a_next = spec.log_a(depth + 1)?.exp();
    Ok(g.sup_abs * a_next / (T::one() - eta))
}

/// Named families used throughout the tests and the CLI.
pub mod presets {
    use super::*;

    fn table<T: Real>(rows: usize, f: impl Fn(f64) -> (f64, f64)) -> SequenceSpec<T> {
        let ln2 = std::f64::consts::LN_2;
        let rows = (1..=rows)
            .map(|n| {
                let (la, lb) = f(n as f64);
                TableRow {
                    log_a: T::lit(la * ln2),
                    log_b: T::lit(lb * ln2),
                    theta: T::zero(),
                }
            })
            .collect();
        SequenceSpec::new(SequenceKind::ExplicitTable { rows })
    }

    /// `a_n = 2^-n`, `b_n = 2^(2^n)`.
    pub fn wingren<T: Real>(rows: usize) -> SequenceSpec<T> {
        table(rows, |n| (-n, 2f64.powf(n)))
    }

    /// `a_n = 2^-(n(n-1)+1)`, `b_n = 2^(n(n+1)+1)`.
    pub fn liu<T: Real>(rows: usize) -> SequenceSpec<T> {
        table(rows, |n| (-(n * (n - 1.0) + 1.0), n * (n + 1.0) + 1.0))
    }

    /// `a_n = 2^-(n^2)`, `b_n = 2^(n^2 - 2n)`: `d_n` stays below `1/3`.
    pub fn lipschitz<T: Real>(rows: usize) -> SequenceSpec<T> {
        table(rows, |n| (-n * n, n * n - 2.0 * n))
    }

    /// `b_n = b_1^(beta^(n-1))`, `a_n = b_n^-alpha`.
    pub fn besicovitch_ursell<T: Real>(b1: T, alpha: T, beta: T) -> SequenceSpec<T> {
        SequenceSpec::new(SequenceKind::GeometricExponent {
            base: b1.powf(beta.recip()),
            beta,
            alpha,
        })
    }

    /// `b_n = 2^(beta^n)`, `a_n = b_n^-alpha`.
    pub fn alpha_beta<T: Real>(alpha: T, beta: T) -> SequenceSpec<T> {
        SequenceSpec::new(SequenceKind::GeometricExponent {
            base: T::lit(2.0),
            beta,
            alpha,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weierfn::{make_base, BaseKind};
    use proptest::prelude::*;

    fn table(rows: &[(f64, f64)]) -> SequenceSpec<f64> {
        SequenceSpec::new(SequenceKind::ExplicitTable {
            rows: rows
                .iter()
                .map(|&(a, b)| TableRow {
                    log_a: a.ln(),
                    log_b: b.ln(),
                    theta: 0.0,
                })
                .collect(),
        })
    }

    fn sawtooth() -> BaseFunction<f64> {
        make_base(BaseKind::Sawtooth).unwrap()
    }

    #[test]
    fn unit_first_term() {
        let s = table(&[(0.25, 4.0), (1.0 / 64.0, 64.0)]);
        let d = log_d(&s, 1).unwrap();
        assert!(d.ln().abs() < 1e-15);
        assert!((log_d(&s, 2).unwrap().value() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn d1_for_square_tower() {
        // a_n = b_n^(-1/2), b_n = 2^(n^2): d_1 = 2^(1/2)
        let rows: Vec<(f64, f64)> = (1..=3)
            .map(|n| {
                let b = 2f64.powi(n * n);
                (b.powf(-0.5), b)
            })
            .collect();
        let d = log_d(&table(&rows), 1).unwrap();
        assert!((d.value() - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn alpha_family_sandwich() {
        // b_n^(1-alpha) < d_n < 2 b_n^(1-alpha) once b_{n+1}/b_n is large
        let s = presets::alpha_beta(0.4f64, 2.0);
        for n in 3..20 {
            let ld = log_d(&s, n).unwrap().ln();
            let lo = 0.6 * s.log_b(n).unwrap();
            assert!(ld >= lo && ld < lo + 2f64.ln(), "n = {n}");
        }
    }

    #[test]
    fn table_index_out_of_range() {
        let s = table(&[(0.5, 2.0)]);
        assert_eq!(
            log_d(&s, 2).unwrap_err(),
            Error::IndexOutOfRange { index: 2, len: 1 }
        );
    }

    #[test]
    fn wingren_diagnostics() {
        let s = presets::wingren::<f64>(12);
        let d = diagnostics(&s, 1, 10, 0.6).unwrap();
        assert!(d.eta_ok);
        assert_eq!(d.first_eta_index, Some(1));
        for (i, &c) in d.coeff_ratios.iter().enumerate() {
            assert!((c - 0.5f64.ln()).abs() < 1e-12);
            let n = (i + 1) as f64;
            // b_{n+1}/b_n = 2^(2^n)
            assert!((d.freq_ratios[i] - 2f64.powf(n) * 2f64.ln()).abs() < 1e-9);
        }
        assert!(!diagnostics(&s, 1, 10, 0.5).unwrap().eta_ok);
    }

    #[test]
    fn geometric_frequencies_fail_eta() {
        let rows: Vec<(f64, f64)> = (1..=10).map(|n| (3f64.powi(-n), 2f64.powi(n))).collect();
        let d = diagnostics(&table(&rows), 1, 10, 0.45).unwrap();
        assert!(d.freq_ratios.iter().all(|r| (r - 2f64.ln()).abs() < 1e-12));
        assert!(!d.eta_ok);
        assert_eq!(d.first_eta_index, None);
    }

    #[test]
    fn square_tower_coeff_ratios() {
        let rows: Vec<(f64, f64)> = (1..=8)
            .map(|n| {
                let b = 2f64.powi(n * n);
                (b.powf(-0.5), b)
            })
            .collect();
        let d = diagnostics(&table(&rows), 1, 8, 0.5).unwrap();
        for (i, &c) in d.coeff_ratios.iter().enumerate() {
            let n = (i + 1) as f64;
            assert!((c - (-(2.0 * n + 1.0) / 2.0) * 2f64.ln()).abs() < 1e-12);
            if i > 0 {
                assert!(c < d.coeff_ratios[i - 1]);
            }
        }
    }

    #[test]
    fn first_eta_index_reports_late_start() {
        // ratios 0.9, 0.9, then 0.01 onwards
        let mut rows = vec![(1.0, 2.0), (0.9, 4.0), (0.81, 8.0)];
        let mut a = 0.81;
        let mut b = 8.0;
        for _ in 0..5 {
            a *= 0.01;
            b *= 1000.0;
            rows.push((a, b));
        }
        let d = diagnostics(&table(&rows), 1, 8, 0.1).unwrap();
        assert!(!d.eta_ok);
        assert_eq!(d.first_eta_index, Some(3));
    }

    #[test]
    fn tail_bound_geometric() {
        let rows: Vec<(f64, f64)> = (1..=60).map(|n| (2f64.powi(-n), 2.0 + n as f64)).collect();
        let tb = tail_bound(&table(&rows), &sawtooth(), 20, 0.5).unwrap();
        assert!((tb - 2f64.powi(-21)).abs() < 1e-20);
    }

    #[test]
    fn tail_bound_exhausted_table() {
        let s = table(&[(0.5, 2.0), (0.25, 8.0)]);
        assert_eq!(tail_bound(&s, &sawtooth(), 2, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn tail_bound_n_to_minus_n() {
        // a_n = n^-n
        let rows: Vec<(f64, f64)> = (1..=80)
            .map(|n| ((n as f64).powf(-(n as f64)), 2f64.powi(n)))
            .collect();
        let s = table(&rows);
        let tb = tail_bound(&s, &sawtooth(), 5, 0.5).unwrap();
        assert!((tb - 6f64.powi(-6)).abs() < 1e-18);
        let direct: f64 = (6..=55).map(|n| 0.5 * (n as f64).powf(-(n as f64))).sum();
        assert!(tb >= direct);
    }

    #[test]
    fn tail_bound_rejects_bad_eta() {
        let s = presets::wingren::<f64>(20);
        assert!(tail_bound(&s, &sawtooth(), 3, 1.0).is_err());
        assert!(matches!(
            tail_bound(&s, &sawtooth(), 3, 0.3),
            Err(Error::EtaViolation { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let s = SequenceSpec::new(SequenceKind::GeometricExponent {
            base: 2.0f64,
            beta: 3.0,
            alpha: 0.25,
        })
        .with_phase(PhaseRule::Constant { theta: 0.125 });
        let back = SequenceSpec::<f64>::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let text = r#"{"kind":"power_tower","params":{"linear":0.5}}"#;
        let p = SequenceSpec::<f64>::from_json(text).unwrap();
        assert_eq!(
            p.kind,
            SequenceKind::PowerTower {
                linear: 0.5,
                sqrt: 0.0
            }
        );
        assert_eq!(p.phase, PhaseRule::Zero);
    }

    #[test]
    fn json_rejects_malformed() {
        assert!(SequenceSpec::<f64>::from_json("{\"kind\":\"nope\"}").is_err());
        assert!(SequenceSpec::<f64>::from_json(
            r#"{"kind":"geometric_exponent","params":{"base":0.5,"beta":2,"alpha":0.5}}"#
        )
        .is_err());
        assert!(SequenceSpec::<f64>::from_json(
            r#"{"kind":"explicit_table","params":{"rows":[]}}"#
        )
        .is_err());
    }

    #[test]
    fn native_frequencies_are_exact() {
        let p = SequenceSpec::new(SequenceKind::PowerTower {
            linear: 0.5f64,
            sqrt: 0.0,
        });
        assert_eq!(p.native_b(3).unwrap(), 27.0);
        assert_eq!(p.native_b(5).unwrap(), 3125.0);
        let w = presets::wingren::<f64>(6);
        assert_eq!(w.native_b(4).unwrap(), 65536.0);
        let s = presets::alpha_beta(0.5f64, 3.0);
        assert_eq!(s.native_b(2).unwrap(), 512.0);
        assert_eq!(p.tail(1).native_b(1).unwrap(), 4.0);
    }

    #[test]
    fn super_tower_overflow_is_reported() {
        let s = SequenceSpec::new(SequenceKind::SuperTower {
            base: 2.0f32,
            tower: 0.5,
            tower_over_sqrt: 0.0,
            tower_over_n: 0.0,
        });
        assert!(s.term(10).is_ok());
        assert!(matches!(s.term(40), Err(Error::NotRepresentable { .. })));
    }

    proptest! {
        #[test]
        fn d_is_monotone(alpha in 0.05f64..1.0, beta in 1.2f64..3.5, n in 1usize..25) {
            let s = presets::alpha_beta(alpha, beta);
            prop_assert!(log_d(&s, n + 1).unwrap().ln() >= log_d(&s, n).unwrap().ln());
        }

        #[test]
        fn lse_matches_direct_sum(logs in proptest::collection::vec((-20f64..0.0, 0f64..27.0), 1..30)) {
            // every a_i b_i <= 2^40
            let s = SequenceSpec::new(SequenceKind::ExplicitTable {
                rows: logs.iter().map(|&(la, lb)| TableRow { log_a: la, log_b: lb, theta: 0.0 }).collect(),
            });
            let direct: f64 = logs.iter().map(|(la, lb)| (la + lb).exp()).sum();
            let d = log_d(&s, logs.len()).unwrap().value();
            prop_assert!(((d - direct) / direct).abs() <= 1e-12);
        }

        #[test]
        fn floors_nondecreasing(alpha in 0.1f64..1.0, beta in 1.5f64..3.0) {
            let d = diagnostics(&presets::alpha_beta(alpha, beta), 1, 15, 0.1).unwrap();
            prop_assert!(d.a_floor.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(d.b_floor.windows(2).all(|w| w[0] <= w[1]));
            if d.eta_ok {
                prop_assert!(d.coeff_ratios.iter().all(|&c| c < 0.1f64.ln()));
            }
        }

        #[test]
        fn ratio_bound_under_eta(alpha in 0.1f64..0.9, beta in 1.5f64..3.0, eta in 0.05f64..0.49) {
            let s = presets::alpha_beta(alpha, beta);
            let d = diagnostics(&s, 1, 14, eta).unwrap();
            if let Some(start) = d.first_eta_index {
                for row in ratio_bound_check(&s, start, 14, eta).unwrap() {
                    prop_assert!(row.holds, "n = {}", row.n);
                }
            }
        }

        #[test]
        fn tail_bound_dominates(
            rho in 0.01f64..0.45,
            decay in 0.0f64..0.3,
            depth in 1usize..30,
        ) {
            // a_{n+1}/a_n = rho * exp(-decay n) <= eta
            let eta = rho;
            let mut la = 0.0;
            let rows: Vec<TableRow<f64>> = (1..=200)
                .map(|n| {
                    let r = TableRow { log_a: la, log_b: n as f64, theta: 0.0 };
                    la += rho.ln() - decay * n as f64;
                    r
                })
                .collect();
            let s = SequenceSpec::new(SequenceKind::ExplicitTable { rows });
            let g = sawtooth();
            let tb = tail_bound(&s, &g, depth, eta).unwrap();
            let direct: f64 = (depth + 1..=depth + 100).map(|n| g.sup_abs * s.native_a(n).unwrap()).sum();
            prop_assert!(tb >= direct * (1.0 - 1e-12));
        }
    }
}
