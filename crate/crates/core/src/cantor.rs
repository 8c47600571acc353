//! Generation intervals `I_{n,j} = (I - theta_n + j)/b_n`, the equal-split
//! measure, hit counts of squares `Q_r(t)`, local exponents, and fitted
//! constants for the oscillation lemmas.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{frac, Real};
use crate::seqcore::SequenceSpec;
use crate::theory::{dimension_report, scale_decomposition, ScaleDecomposition};
use crate::weierfn::{BaseFunction, TruncatedSeries, MAX_SAMPLES};

/// Levels are built only while `b_n <= 2^40`.
pub const LEVEL_FREQUENCY_LOG2: f64 = 40.0;

/// Ceiling on the number of intervals in one level.
pub const MAX_LEVEL_INTERVALS: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GenInterval<T> {
    pub j: i64,
    pub left: T,
    pub right: T,
    /// Index of the parent in the previous level (0 at level 0).
    pub parent: usize,
    /// `mu(I_{n,j}) = 1 / weight_den`.
    pub weight_den: u64,
    /// Children in the next level, as a half-open index range.
    pub children: (usize, usize),
}

impl<T> GenInterval<T> {
    pub fn weight(&self) -> Ratio<u64> {
        Ratio::new_raw(1, self.weight_den)
    }

    pub fn branching(&self) -> usize {
        self.children.1 - self.children.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CantorLevel<T> {
    pub generation: usize,
    /// `b_n` (1 at level 0).
    pub b: T,
    pub theta: T,
    /// Sorted by `j`.
    pub intervals: Vec<GenInterval<T>>,
}

impl<T: Real> CantorLevel<T> {
    pub fn find(&self, j: i64) -> Option<&GenInterval<T>> {
        self.intervals
            .binary_search_by_key(&j, |iv| iv.j)
            .ok()
            .map(|i| &self.intervals[i])
    }

    /// Exact sum of the weights.
    pub fn mass(&self) -> BigRational {
        let mut dens: Vec<u64> = self.intervals.iter().map(|iv| iv.weight_den).collect();
        dens.sort_unstable();
        let mut total = BigRational::from_integer(BigInt::from(0));
        for chunk in dens.chunk_by(|a, b| a == b) {
            total += BigRational::new(BigInt::from(chunk.len()), BigInt::from(chunk[0]));
        }
        total
    }

    /// Intervals meeting `[lo, hi]`.
    pub fn overlapping(&self, lo: T, hi: T) -> &[GenInterval<T>] {
        let start = self.intervals.partition_point(|iv| iv.right < lo);
        let end = self.intervals.partition_point(|iv| iv.left <= hi);
        &self.intervals[start..end.max(start)]
    }
}

/// Containment slack in units of `j`: covers the rounding of `L b` and `R b`.
fn j_slack<T: Real>(b: T, lo: T, hi: T, theta: T) -> T {
    T::lit(1e-9)
        + T::lit(16.0) * T::epsilon() * (b * (lo.abs() + hi.abs()) + theta.abs() + T::lit(2.0))
}

/// Levels `0..=depth`; level 0 is `I` itself.
pub fn build_levels<T: Real>(
    spec: &SequenceSpec<T>,
    g: &BaseFunction<T>,
    depth: usize,
) -> Result<Vec<CantorLevel<T>>> {
    let (u, v) = g.monotone_interval;
    let mut levels = vec![CantorLevel {
        generation: 0,
        b: T::one(),
        theta: T::zero(),
        intervals: vec![GenInterval {
            j: 0,
            left: u,
            right: v,
            parent: 0,
            weight_den: 1,
            children: (0, 0),
        }],
    }];
    let cap = T::lit(LEVEL_FREQUENCY_LOG2) * T::LN_2();
    for n in 1..=depth {
        let log_b = spec.log_b(n)?;
        if log_b > cap + T::lit(1e-9) {
            return Err(Error::DepthCap {
                module: "cantor",
                depth: n,
                log_b: log_b.as_f64(),
                log_cap: cap.as_f64(),
            });
        }
    }
    for n in 1..=depth {
        let b = spec.native_b(n)?;
        let theta = spec.theta(n)?;
        let prev = levels.last_mut().expect("level 0");
        let ranges: Vec<(T, u64)> = prev
            .intervals
            .iter()
            .map(|parent| {
                let s = j_slack(b, parent.left, parent.right, theta);
                let jmin = (parent.left * b - u + theta - s).ceil();
                let jmax = (parent.right * b - v + theta + s).floor();
                let count = if jmax >= jmin {
                    (jmax - jmin).to_u64().expect("child count") + 1
                } else {
                    0
                };
                (jmin, count)
            })
            .collect();
        let total: u64 = ranges.iter().map(|r| r.1).sum();
        if total > MAX_LEVEL_INTERVALS {
            return Err(Error::TooManySamples {
                module: "cantor",
                what: "intervals",
                requested: total,
                limit: MAX_LEVEL_INTERVALS,
            });
        }
        let mut next = Vec::with_capacity(total as usize);
        for (pi, (parent, &(jmin, count))) in prev.intervals.iter_mut().zip(&ranges).enumerate() {
            let start = next.len();
            if count < 2 {
                return Err(Error::Branching {
                    generation: n,
                    parent: pi,
                    children: count as usize,
                });
            }
            let weight_den =
                parent
                    .weight_den
                    .checked_mul(count)
                    .ok_or(Error::NotRepresentable {
                        index: n,
                        what: "weight denominator",
                    })?;
            let j0 = jmin.to_i64().expect("child index");
            for k in 0..count as i64 {
                let j = j0 + k;
                let jj = T::from_i64(j).expect("index");
                next.push(GenInterval {
                    j,
                    left: (u - theta + jj) / b,
                    right: (v - theta + jj) / b,
                    parent: pi,
                    weight_den,
                    children: (0, 0),
                });
            }
            parent.children = (start, next.len());
        }
        levels.push(CantorLevel {
            generation: n,
            b,
            theta,
            intervals: next,
        });
    }
    Ok(levels)
}

/// `mu(I_{n,j})` as an exact rational.
pub fn measure_of_interval<T: Real>(
    levels: &[CantorLevel<T>],
    n: usize,
    j: i64,
) -> Result<Ratio<u64>> {
    levels
        .get(n)
        .and_then(|l| l.find(j))
        .map(GenInterval::weight)
        .ok_or(Error::UnknownInterval { generation: n, j })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BranchingReport<T> {
    /// `min N_{n,j} b_n / b_{n+1}` shrunk by `1 - 1e-9`.
    pub q_hat: T,
    pub cards: Vec<usize>,
    /// `(generation, parent)` where `N_{n,j} <= |I| b_{n+1}/b_n - 2`.
    pub floor_violations: Vec<(usize, usize)>,
    /// `card J_n > q^n b_n` for `n >= 1`.
    pub card_ok: bool,
    /// `mu(I_{n,j}) < 1/(q^n b_n)` everywhere.
    pub measure_ok: bool,
    /// Exact weight sums equal 1 at every level.
    pub mass_ok: bool,
    /// `card J_n |I| / b_n`.
    pub total_lengths: Vec<T>,
    pub lengths_decreasing: bool,
}

impl<T> BranchingReport<T> {
    pub fn passed(&self) -> bool {
        self.floor_violations.is_empty() && self.card_ok && self.measure_ok && self.mass_ok
    }
}

pub fn branching_check<T: Real>(
    levels: &[CantorLevel<T>],
    g: &BaseFunction<T>,
) -> BranchingReport<T> {
    let len_i = g.interval_length();
    let one = BigRational::from_integer(BigInt::from(1));
    let mut q = T::infinity();
    let mut floor_violations = Vec::new();
    for w in levels.windows(2) {
        let (cur, next) = (&w[0], &w[1]);
        let ratio = next.b / cur.b;
        for (pi, p) in cur.intervals.iter().enumerate() {
            let nb = T::from_usize_lossy(p.branching());
            if !(nb > len_i * ratio - T::lit(2.0)) {
                floor_violations.push((cur.generation, pi));
            }
            q = q.min(nb / ratio);
        }
    }
    let q_hat = if q.is_finite() {
        q * (T::one() - T::lit(1e-9))
    } else {
        T::one()
    };
    let cards: Vec<usize> = levels.iter().map(|l| l.intervals.len()).collect();
    let mut card_ok = true;
    let mut measure_ok = true;
    for l in levels.iter().skip(1) {
        let bound = q_hat.powi(l.generation as i32) * l.b;
        card_ok &= T::from_usize_lossy(l.intervals.len()) > bound;
        measure_ok &= l
            .intervals
            .iter()
            .all(|iv| T::from_u64(iv.weight_den).expect("den") > bound);
    }
    let total_lengths: Vec<T> = levels
        .iter()
        .map(|l| T::from_usize_lossy(l.intervals.len()) * len_i / l.b)
        .collect();
    BranchingReport {
        q_hat,
        floor_violations,
        card_ok,
        measure_ok,
        mass_ok: levels.iter().all(|l| l.mass() == one),
        lengths_decreasing: total_lengths.windows(2).all(|w| w[1] < w[0]),
        total_lengths,
        cards,
    }
}

/// Fraction of sampled points `x` of level-`n` intervals with `b_n x + theta_n mod 1` in `I`.
pub fn phase_check<T: Real>(
    levels: &[CantorLevel<T>],
    g: &BaseFunction<T>,
    samples: usize,
    seed: u64,
) -> Vec<(usize, T, T)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, v) = g.monotone_interval;
    let mut bad = Vec::new();
    for l in levels.iter().skip(1) {
        for _ in 0..samples {
            let iv = &l.intervals[rng.gen_range(0..l.intervals.len())];
            let w: f64 = rng.gen();
            let x = iv.left + (iv.right - iv.left) * T::lit(w);
            let p = frac(l.b * x + l.theta);
            let s = T::lit(1e-9);
            let inside = (p >= u - s && p <= v + s) || (v >= T::one() - s && p <= s);
            if !inside {
                bad.push((l.generation, x, p));
            }
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HitCounts<T> {
    pub t: T,
    pub r: T,
    /// `card M_n` for `n = 0..=depth`.
    pub per_generation: Vec<usize>,
    /// `mu`-mass of the hit intervals at each generation.
    pub hit_mass: Vec<T>,
    /// `k, m, l` when `r < 1/b_1`.
    pub scales: Option<ScaleDecomposition<T>>,
}

impl<T: Real> HitCounts<T> {
    /// `(card M_k <= 2, card M_{k+1} <= m + 2)` when both generations were built.
    pub fn ceilings(&self) -> Option<(bool, bool)> {
        let s = self.scales.as_ref()?;
        let mk = *self.per_generation.get(s.k)?;
        let mk1 = *self.per_generation.get(s.k + 1)?;
        let m = s.m? as usize;
        Some((mk <= 2, mk1 <= m + 2))
    }

    /// Smallest `c3` with `card M_{n+1}/card M_n <= c3 d_{n+1}/d_n` for `1 <= n < l`.
    pub fn growth_constant(&self, series: &TruncatedSeries<T>) -> Option<T> {
        let l = self.scales.as_ref()?.l?;
        let top = l.min(self.per_generation.len() - 1).min(series.depth);
        (1..top)
            .map(|n| {
                let ratio = T::from_usize_lossy(self.per_generation[n + 1])
                    / T::from_usize_lossy(self.per_generation[n]);
                let dd = (series.log_d[n].ln() - series.log_d[n - 1].ln()).exp();
                ratio / dd
            })
            .reduce(|a, b| a.max(b))
    }
}

fn check_hit_scale<T: Real>(series: &TruncatedSeries<T>, r: T) -> Result<()> {
    let (lo, _) = series.validity_window();
    if !(r > T::zero()) || r < lo * (T::one() - T::lit(1e-9)) {
        return Err(Error::ValidityWindow {
            module: "cantor",
            r: r.as_f64(),
            min: lo.as_f64(),
            max: f64::INFINITY,
        });
    }
    Ok(())
}

/// Counts, per generation, intervals whose graph piece meets `Q_r(t)`.
///
/// Each piece's vertical range is sampled and widened by the sampling bias
/// plus the tail bound, so counts can only err upward.
pub fn hit_counts<T: Real>(
    series: &TruncatedSeries<T>,
    levels: &[CantorLevel<T>],
    t: T,
    r: T,
) -> Result<HitCounts<T>> {
    check_hit_scale(series, r)?;
    let half = r / T::lit(2.0);
    let (xl, xr) = (t - half, t + half);
    let tail = series.tail_bound_value;
    let ft = series.value(t);
    let (yl, yr) = (ft - half - tail, ft + half + tail);
    let lip = series.lipschitz();
    let finest = series.finest_frequency();
    let mut per_generation = Vec::with_capacity(levels.len());
    let mut hit_mass = Vec::with_capacity(levels.len());
    for level in levels {
        let cands = level.overlapping(xl, xr);
        let hits: Vec<(bool, u64)> = cands
            .par_iter()
            .map(|iv| {
                let a = iv.left.max(xl);
                let b = iv.right.min(xr);
                let w = (b - a).max(T::zero());
                let s = (T::lit(8.0) * (finest * w).ceil())
                    .max(T::lit(16.0) * lip * w / r)
                    .max(T::lit(16.0))
                    .min(T::lit(MAX_SAMPLES as f64));
                let s = s.to_u64().expect("samples");
                let (lo, hi) = series.range(a, w, s);
                let bias = lip * w / T::from_u64(s - 1).expect("samples") + tail;
                let hit = lo - bias <= yr && hi + bias >= yl;
                Ok((hit, iv.weight_den))
            })
            .collect::<Result<_>>()?;
        per_generation.push(hits.iter().filter(|h| h.0).count());
        hit_mass.push(
            hits.iter()
                .filter(|h| h.0)
                .map(|h| T::from_u64(h.1).expect("den").recip())
                .sum(),
        );
    }
    Ok(HitCounts {
        t,
        r,
        per_generation,
        hit_mass,
        scales: scale_decomposition(&series.spec, r).ok(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExponentRow<T> {
    pub r: T,
    /// Upper bound on `nu(Q_r(t))`.
    pub nu_mass_upper: T,
    /// `log nu / log r`, a lower bound on the true ratio.
    pub exponent: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LocalExponentTrace<T> {
    pub t: T,
    pub rows: Vec<ExponentRow<T>>,
    /// `1 + liminf log d_n / log(b_{n+1} d_n / d_{n+1})` from the window report.
    pub target: Option<T>,
}

impl<T: Real> LocalExponentTrace<T> {
    pub fn min_exponent(&self) -> T {
        self.rows
            .iter()
            .fold(T::infinity(), |m, r| m.min(r.exponent))
    }
}

/// Left endpoint of the first interval of the deepest level.
pub fn default_point<T: Real>(levels: &[CantorLevel<T>]) -> T {
    levels.last().expect("levels").intervals[0].left
}

fn window_target<T: Real>(spec: &SequenceSpec<T>) -> Option<T> {
    let top = spec.len().map_or(30, |l| l.saturating_sub(1).min(30));
    (3..=top)
        .rev()
        .find_map(|n1| dimension_report(spec, (1, n1)).ok())
        .map(|rep| rep.hausdorff_dim_estimate)
}

/// `nu(Q_r(t)) <= mu(hit intervals of the deepest level)` for each `r`.
pub fn local_exponent<T: Real>(
    series: &TruncatedSeries<T>,
    levels: &[CantorLevel<T>],
    t: T,
    ladder: &[T],
) -> Result<LocalExponentTrace<T>> {
    let mut rows = Vec::with_capacity(ladder.len());
    for &r in ladder {
        if !(r < T::one()) {
            return Err(Error::domain("cantor", "local exponent needs r < 1"));
        }
        let hits = hit_counts(series, levels, t, r)?;
        let nu = *hits.hit_mass.last().expect("levels");
        if !(nu > T::zero()) {
            return Err(Error::AssumptionViolation {
                module: "cantor",
                detail: format!(
                    "no interval hit at t = {t}, r = {r}; t must lie in a deepest interval"
                ),
            });
        }
        rows.push(ExponentRow {
            r,
            nu_mass_upper: nu.min(T::one()),
            exponent: nu.min(T::one()).ln() / r.ln(),
        });
    }
    Ok(LocalExponentTrace {
        t,
        rows,
        target: window_target(&series.spec),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PairSample<T> {
    pub n: usize,
    pub x: T,
    pub y: T,
    /// `|f(x) - f(y)|`.
    pub df: T,
    /// `d_n |x - y|`.
    pub scaled_gap: T,
    /// `a_{n+1}`, 0 past the end of a table.
    pub a_next: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LemmaReport<T> {
    pub trials: usize,
    pub seed: u64,
    /// Smallest `c0` with `|f(x)-f(y)| <= c0 (d_n|x-y| + a_{n+1})` on the samples.
    pub c0_hat: T,
    /// `4 max(L, 2 sup|g| / (1 - eta))`.
    pub c0_cap: T,
    /// Largest `c1` with the lower bound holding at `c2 = c2_predicted`.
    pub c1_hat: T,
    /// Smallest `c2` with the lower bound holding at `c1 = delta`.
    pub c2_hat: T,
    pub c1_predicted: T,
    pub c2_predicted: T,
    /// Sample forcing `c2_hat` when no finite `c2` works.
    pub lower_violation: Option<PairSample<T>>,
    pub branching: BranchingReport<T>,
}

impl<T: Real> LemmaReport<T> {
    pub fn upper_ok(&self) -> bool {
        self.c0_hat <= self.c0_cap
    }

    pub fn lower_ok(&self) -> bool {
        let four = T::lit(4.0);
        self.lower_violation.is_none()
            && self.c1_hat > T::zero()
            && self.c1_hat >= self.c1_predicted / four
            && self.c1_hat <= self.c1_predicted * four
            && self.c2_hat <= self.c2_predicted * four
    }

    pub fn passed(&self) -> bool {
        self.upper_ok() && self.lower_ok() && self.branching.passed()
    }
}

fn a_next<T: Real>(series: &TruncatedSeries<T>, n: usize) -> T {
    series.spec.native_a(n + 1).unwrap_or(T::zero())
}

fn pair<T: Real>(series: &TruncatedSeries<T>, n: usize, x: T, y: T) -> PairSample<T> {
    PairSample {
        n,
        x,
        y,
        df: (series.value(x) - series.value(y)).abs(),
        scaled_gap: series.log_d[n - 1].value() * (x - y).abs(),
        a_next: a_next(series, n),
    }
}

/// Pairs violating `|f(x)-f(y)| >= c1 d_n|x-y| - c2 a_{n+1}`.
pub fn lower_bound_violations<T: Real>(
    series: &TruncatedSeries<T>,
    pairs: &[(usize, T, T)],
    c1: T,
    c2: T,
) -> Vec<PairSample<T>> {
    pairs
        .iter()
        .map(|&(n, x, y)| pair(series, n, x, y))
        .filter(|p| p.df < c1 * p.scaled_gap - c2 * p.a_next)
        .collect()
}

/// Fits the constants of the upper and lower oscillation bounds on seeded random pairs.
pub fn lemma_checks<T: Real>(
    series: &TruncatedSeries<T>,
    levels: &[CantorLevel<T>],
    trials: usize,
    seed: u64,
) -> Result<LemmaReport<T>> {
    if trials < 100 {
        return Err(Error::domain(
            "cantor",
            "lemma checks need at least 100 trials",
        ));
    }
    let depth = series.depth;
    let lower_depth = depth.min(levels.len().saturating_sub(1));
    if depth == 0 || lower_depth == 0 {
        return Err(Error::domain(
            "cantor",
            "lemma checks need depth >= 1 and built levels",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_lo = (series.finest_frequency() * T::lit(10.0))
        .recip()
        .ln()
        .as_f64();
    let upper: Vec<(usize, T, T)> = (0..trials)
        .map(|_| {
            let n = rng.gen_range(1..=depth);
            let gap = rng.gen_range(log_lo..0.0).exp();
            let x = rng.gen_range(0.0..1.0 - gap);
            (n, T::lit(x), T::lit(x + gap))
        })
        .collect();
    let lower: Vec<(usize, T, T)> = (0..trials)
        .map(|_| {
            let n = rng.gen_range(1..=lower_depth);
            let ivs = &levels[n].intervals;
            let iv = &ivs[rng.gen_range(0..ivs.len())];
            let w = iv.right - iv.left;
            let (p, q): (f64, f64) = (rng.gen(), rng.gen());
            (n, iv.left + w * T::lit(p), iv.left + w * T::lit(q))
        })
        .collect();

    let g = &series.g;
    let c2_predicted = T::lit(2.0) * g.sup_abs / (T::one() - series.eta);
    let c0_cap = T::lit(4.0) * g.lipschitz.max(c2_predicted);
    let c0_hat = upper
        .par_iter()
        .map(|&(n, x, y)| {
            let p = pair(series, n, x, y);
            p.df / (p.scaled_gap + p.a_next)
        })
        .reduce(T::zero, |a, b| a.max(b));

    let delta = g.slope_floor;
    let samples: Vec<PairSample<T>> = lower
        .par_iter()
        .filter(|(_, x, y)| x != y)
        .map(|&(n, x, y)| pair(series, n, x, y))
        .collect();
    let mut c2_hat = T::zero();
    let mut lower_violation = None;
    for p in &samples {
        let excess = delta * p.scaled_gap - p.df;
        if excess > T::zero() {
            if p.a_next > T::zero() {
                c2_hat = c2_hat.max(excess / p.a_next);
            } else {
                c2_hat = T::infinity();
                lower_violation.get_or_insert(*p);
            }
        }
    }
    let c1_hat = samples
        .iter()
        .map(|p| (p.df + c2_predicted * p.a_next) / p.scaled_gap)
        .fold(T::infinity(), |a, b| a.min(b));
    if !(c1_hat > T::zero()) && lower_violation.is_none() {
        lower_violation = samples
            .iter()
            .find(|p| p.df + c2_predicted * p.a_next <= T::zero())
            .copied();
    }
    Ok(LemmaReport {
        trials,
        seed,
        c0_hat,
        c0_cap,
        c1_hat,
        c2_hat,
        c1_predicted: delta,
        c2_predicted,
        lower_violation,
        branching: branching_check(levels, g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::{presets, SequenceKind, TableRow};
    use crate::weierfn::{make_base, truncate, BaseKind, NativeTerm, Truncation};

    fn saw() -> BaseFunction<f64> {
        make_base(BaseKind::Sawtooth).unwrap()
    }

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

    #[test]
    fn first_level_b_eight() {
        let s = table(&[(1.0 / 8.0, 8.0), (1.0 / 64.0, 64.0)]);
        let levels = build_levels(&s, &saw(), 1).unwrap();
        assert_eq!(levels[0].intervals.len(), 1);
        assert_eq!(levels[0].intervals[0].weight_den, 1);
        let l1 = &levels[1];
        assert_eq!(
            l1.intervals.iter().map(|iv| iv.j).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
        for iv in &l1.intervals {
            assert_eq!(iv.left, iv.j as f64 / 8.0);
            assert_eq!(iv.right, iv.j as f64 / 8.0 + 1.0 / 16.0);
            assert_eq!(iv.weight(), Ratio::new(1, 4));
        }
        assert_eq!(
            measure_of_interval(&levels, 1, 2).unwrap(),
            Ratio::new(1, 4)
        );
        assert!(matches!(
            measure_of_interval(&levels, 1, 9),
            Err(Error::UnknownInterval { .. })
        ));
    }

    #[test]
    fn nesting_and_gaps() {
        let s = presets::wingren::<f64>(10);
        let g = saw();
        let levels = build_levels(&s, &g, 3).unwrap();
        for w in levels.windows(2) {
            for c in &w[1].intervals {
                let p = &w[0].intervals[c.parent];
                assert!(c.left >= p.left - 1e-12 && c.right <= p.right + 1e-12);
                assert!(((c.right - c.left) - 0.5 / w[1].b).abs() < 1e-15);
            }
            for pair in w[1].intervals.windows(2) {
                assert!(pair[1].left - pair[0].right >= 0.5 / w[1].b - 1e-15);
            }
        }
        let rep = branching_check(&levels, &g);
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.lengths_decreasing);
        assert!(phase_check(&levels, &g, 1000, 7).is_empty());
    }

    #[test]
    fn branching_failure_is_reported() {
        // b_1 = 2: only j = 0 fits inside [0, 1/2]
        let s = table(&[(1.0 / 2.0, 2.0), (1.0 / 9.0, 9.0)]);
        assert!(matches!(
            build_levels(&s, &saw(), 1),
            Err(Error::Branching {
                generation: 1,
                children: 1,
                ..
            })
        ));
    }

    #[test]
    fn level_depth_cap() {
        let s = presets::wingren::<f64>(10);
        assert!(matches!(
            build_levels(&s, &saw(), 6),
            Err(Error::DepthCap { depth: 6, .. })
        ));
    }

    #[test]
    fn single_term_lower_bound_is_exact() {
        let g = saw();
        let spec = table(&[(0.25, 8.0)]);
        let series = truncate(&spec, &g, Truncation::Depth(1), 0.1).unwrap();
        let levels = build_levels(&spec, &g, 1).unwrap();
        let rep = lemma_checks(&series, &levels, 200, 42).unwrap();
        assert_eq!(rep.c2_hat, 0.0);
        assert!((rep.c1_hat - 1.0).abs() < 1e-9, "{}", rep.c1_hat);
        assert!(rep.lower_ok());
    }

    #[test]
    fn wingren_lemmas() {
        let g = saw();
        let spec = presets::wingren::<f64>(30);
        let series = truncate(&spec, &g, Truncation::Depth(4), 0.6).unwrap();
        let levels = build_levels(&spec, &g, 4).unwrap();
        let rep = lemma_checks(&series, &levels, 500, 42).unwrap();
        assert!(rep.c0_hat <= 4.0, "{}", rep.c0_hat);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn pairs_outside_generation_intervals_violate() {
        let g = saw();
        let spec = presets::wingren::<f64>(30);
        let series = truncate(&spec, &g, Truncation::Depth(4), 0.6).unwrap();
        // symmetric about 1/2, where every term has a peak
        let bad = lower_bound_violations(&series, &[(3, 0.45, 0.55)], 1.0, 2.5);
        assert_eq!(bad.len(), 1);
        assert!(bad[0].df < 1e-9);
    }

    #[test]
    fn hits_at_huge_scale() {
        let g = saw();
        let spec = presets::wingren::<f64>(30);
        let series = truncate(&spec, &g, Truncation::Depth(3), 0.6).unwrap();
        let levels = build_levels(&spec, &g, 3).unwrap();
        let t = default_point(&levels);
        let h = hit_counts(&series, &levels, t, 10.0).unwrap();
        assert_eq!(h.per_generation[0], 1);
        assert!(h.scales.is_none());
    }

    #[test]
    fn hit_ceilings_wingren() {
        let g = saw();
        let spec = presets::wingren::<f64>(30);
        let series = truncate(&spec, &g, Truncation::Depth(4), 0.6).unwrap();
        let levels = build_levels(&spec, &g, 4).unwrap();
        let t = levels[4].intervals[37].left;
        for r in [0.1, 0.03, 0.01, 1e-3] {
            let h = hit_counts(&series, &levels, t, r).unwrap();
            assert!(h.per_generation.iter().all(|&c| c >= 1));
            let (a, b) = h.ceilings().unwrap();
            assert!(a && b, "{h:?}");
        }
    }

    #[test]
    fn exact_mass_with_uneven_branching() {
        let g = saw();
        let spec = table(&[(0.1, 10.0), (0.001, 137.0), (1e-6, 5000.0)]);
        let levels = build_levels(&spec, &g, 3).unwrap();
        let rep = branching_check(&levels, &g);
        assert!(rep.mass_ok && rep.card_ok && rep.measure_ok);
        let dens: std::collections::HashSet<u64> =
            levels[2].intervals.iter().map(|i| i.weight_den).collect();
        assert!(dens.len() > 1);
    }

    #[test]
    fn explicit_series_lower_bound() {
        let g = saw();
        let s = TruncatedSeries::from_terms(
            &g,
            vec![NativeTerm {
                a: 1.0,
                b: 1.0,
                theta: 0.0,
            }],
        );
        let v = lower_bound_violations(&s, &[(1, 0.1, 0.3)], 1.0, 0.0);
        assert!(v.is_empty());
    }
}
