//! Box counting `N(r)` of truncated graphs, a cell-enumeration oracle, and
//! log-log slope fits.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{least_squares, Real};
use crate::weierfn::{TruncatedSeries, MAX_SAMPLES};

/// Slack for `floor(V / r)` when `V` is an exact multiple of `r` up to rounding.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    /// Sum over columns of `floor(V_column / r) + 1`.
    ColumnOscillation,
    /// Distinct grid cells hit by a dense sample of the graph.
    CellEnumeration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BoxRow<T> {
    pub r: T,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BoxCountTable<T> {
    /// Sorted by decreasing `r`.
    pub rows: Vec<BoxRow<T>>,
    pub domain: (T, T),
    pub method: CountMethod,
    pub validity_window: (T, T),
    /// Some scale did not divide the domain length; the last column overhangs.
    pub padded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SlopeFit<T> {
    pub slope: T,
    pub intercept: T,
    pub residual: T,
    pub window: (T, T),
    /// Slope between consecutive rows, coarse to fine.
    pub per_octave_slopes: Vec<T>,
    /// All counts equal; slope reported as 0.
    pub degenerate: bool,
}

/// `[1/b_N, x_1 - x_0]`, with the lower end 0 when the tail is empty.
pub fn validity_window<T: Real>(series: &TruncatedSeries<T>, domain: (T, T)) -> (T, T) {
    let len = domain.1 - domain.0;
    let lo = if series.terms.is_empty() || series.tail_bound_value == T::zero() {
        T::zero()
    } else {
        series.finest_frequency().recip()
    };
    (lo, len)
}

fn check_domain<T: Real>(domain: (T, T)) -> Result<()> {
    if !(domain.1 > domain.0) || !domain.0.is_finite() || !domain.1.is_finite() {
        return Err(Error::domain(
            "grid",
            "domain must be a finite interval x0 < x1",
        ));
    }
    Ok(())
}

fn check_scale<T: Real>(series: &TruncatedSeries<T>, r: T, domain: (T, T)) -> Result<()> {
    let (lo, hi) = validity_window(series, domain);
    let tol = T::lit(1e-9);
    if !(r > T::zero()) || r < lo * (T::one() - tol) || r > hi * (T::one() + tol) {
        return Err(Error::ValidityWindow {
            module: "grid",
            r: r.as_f64(),
            min: lo.as_f64(),
            max: hi.as_f64(),
        });
    }
    Ok(())
}

fn column_count<T: Real>(len: T, r: T) -> (u64, bool) {
    let q = len / r;
    let cols = (q - T::lit(FLOOR_SLACK) * q.max(T::one()))
        .ceil()
        .max(T::one());
    let padded = (cols * r - len).abs() > T::lit(FLOOR_SLACK) * len;
    (cols.to_u64().expect("column count"), padded)
}

/// Samples per column: `max(64, 8 ceil(b_N r), ceil(8 L d_N))`, so the sampled
/// oscillation is within `r/8` of the truncated one.
pub fn column_samples<T: Real>(series: &TruncatedSeries<T>, r: T) -> Result<u64> {
    let base = series.sample_count(r, Default::default())?;
    let lip = (T::lit(8.0) * series.lipschitz())
        .ceil()
        .to_u64()
        .unwrap_or(u64::MAX);
    let n = base.max(lip);
    if n > MAX_SAMPLES {
        return Err(Error::TooManySamples {
            module: "grid",
            what: "samples",
            requested: n,
            limit: MAX_SAMPLES,
        });
    }
    Ok(n)
}

/// Per-column box counts `floor(V / r) + 1` and the padding flag.
pub fn box_count_columns<T: Real>(
    series: &TruncatedSeries<T>,
    r: T,
    domain: (T, T),
) -> Result<(Vec<u64>, bool)> {
    check_domain(domain)?;
    check_scale(series, r, domain)?;
    let (cols, padded) = column_count(domain.1 - domain.0, r);
    let samples = column_samples(series, r)?;
    if cols.saturating_mul(samples) > 64 * MAX_SAMPLES {
        return Err(Error::TooManySamples {
            module: "grid",
            what: "samples",
            requested: cols.saturating_mul(samples),
            limit: 64 * MAX_SAMPLES,
        });
    }
    let slack = T::lit(FLOOR_SLACK);
    let counts = (0..cols)
        .into_par_iter()
        .map(|i| {
            let t = domain.0 + T::from_u64(i).expect("index") * r;
            let (lo, hi) = series.range(t, r, samples);
            ((hi - lo) / r + slack).floor().to_u64().expect("count") + 1
        })
        .collect();
    Ok((counts, padded))
}

/// `N(r)` over `domain` by the column-oscillation identity.
pub fn box_count<T: Real>(series: &TruncatedSeries<T>, r: T, domain: (T, T)) -> Result<u64> {
    Ok(box_count_columns(series, r, domain)?.0.iter().sum())
}

fn cell<T: Real>(v: T, r: T) -> i64 {
    (v / r).floor().to_i64().expect("cell index")
}

/// Number of distinct half-open cells `[ir, (i+1)r) x [jr, (j+1)r)` hit by `samples`.
pub fn box_count_bruteforce<T: Real>(samples: &[(T, T)], r: T) -> u64 {
    samples
        .iter()
        .map(|&(x, y)| (cell(x, r), cell(y, r)))
        .collect::<HashSet<_>>()
        .len() as u64
}

/// Cells hit per column, columns indexed from `x0`.
pub fn bruteforce_columns<T: Real>(samples: &[(T, T)], r: T, x0: T) -> BTreeMap<i64, u64> {
    let cells: HashSet<(i64, i64)> = samples
        .iter()
        .map(|&(x, y)| (cell(x - x0, r), cell(y, r)))
        .collect();
    let mut out = BTreeMap::new();
    for (c, _) in cells {
        *out.entry(c).or_insert(0) += 1;
    }
    out
}

/// Graph samples on `[x0, x1)` with spacing fine enough that consecutive
/// points differ vertically by at most `r/64`.
pub fn graph_samples<T: Real>(
    series: &TruncatedSeries<T>,
    domain: (T, T),
    r: T,
) -> Result<Vec<(T, T)>> {
    check_domain(domain)?;
    let len = domain.1 - domain.0;
    let by_freq = series.finest_frequency() * T::lit(16.0);
    let by_lip = series.lipschitz() * T::lit(64.0) / r;
    let per_unit = (T::lit(16.0) / r).max(by_freq).max(by_lip);
    let n = (len * per_unit).ceil();
    let n = n
        .to_u64()
        .filter(|&v| v <= MAX_SAMPLES)
        .ok_or(Error::TooManySamples {
            module: "grid",
            what: "samples",
            requested: n.to_u64().unwrap_or(u64::MAX),
            limit: MAX_SAMPLES,
        })?;
    let h = len / T::from_u64(n).expect("count");
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let x = domain.0 + T::from_u64(i).expect("index") * h;
            (x, series.value(x))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum Ladder<T> {
    /// `r = 1/b_n`.
    Generation,
    /// Geometric from the top of the window down by `factor`.
    Geometric {
        factor: T,
    },
    /// Generation scales plus factor-2 points between them.
    Auto,
    Explicit(Vec<T>),
}

/// Scales inside the validity window, sorted by decreasing `r`.
pub fn build_ladder<T: Real>(
    series: &TruncatedSeries<T>,
    domain: (T, T),
    ladder: &Ladder<T>,
) -> Result<Vec<T>> {
    check_domain(domain)?;
    let len = domain.1 - domain.0;
    let finest = series.finest_frequency().recip();
    let top = series.terms.first().map_or(len, |t| t.b.recip().min(len));
    let tol = T::one() + T::lit(1e-9);
    let inside = |r: T| r <= top * tol && r * tol >= finest;
    let mut out: Vec<T> = match ladder {
        Ladder::Generation => series
            .terms
            .iter()
            .map(|t| t.b.recip())
            .filter(|&r| inside(r))
            .collect(),
        Ladder::Geometric { factor } => {
            if !(*factor > T::one()) {
                return Err(Error::domain("grid", "ladder factor must exceed 1"));
            }
            let mut v = Vec::new();
            let mut r = top;
            while r * tol >= finest {
                v.push(r);
                r /= *factor;
            }
            v
        }
        Ladder::Auto => {
            let mut v = Vec::new();
            let mut coarser = top;
            for t in &series.terms {
                let g = t.b.recip();
                let mut r = g;
                while r < coarser / tol {
                    if inside(r) {
                        v.push(r);
                    }
                    r *= T::lit(2.0);
                }
                if inside(g) {
                    coarser = g;
                }
            }
            if inside(top) {
                v.push(top);
            }
            v
        }
        Ladder::Explicit(rs) => rs.clone(),
    };
    out.sort_by(|a, b| b.partial_cmp(a).expect("finite scales"));
    out.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-12) * b.abs());
    Ok(out)
}

/// Box counts at each scale.
pub fn box_count_table<T: Real>(
    series: &TruncatedSeries<T>,
    domain: (T, T),
    scales: &[T],
    method: CountMethod,
) -> Result<BoxCountTable<T>> {
    check_domain(domain)?;
    let mut sorted = scales.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite scales"));
    let mut padded = false;
    let mut rows = Vec::with_capacity(sorted.len());
    for r in sorted {
        check_scale(series, r, domain)?;
        let n = match method {
            CountMethod::ColumnOscillation => {
                let (c, p) = box_count_columns(series, r, domain)?;
                padded |= p;
                c.iter().sum()
            }
            CountMethod::CellEnumeration => {
                let s = graph_samples(series, domain, r)?;
                padded |= column_count(domain.1 - domain.0, r).1;
                let shifted: Vec<(T, T)> = s.iter().map(|&(x, y)| (x - domain.0, y)).collect();
                box_count_bruteforce(&shifted, r)
            }
        };
        rows.push(BoxRow { r, n });
    }
    Ok(BoxCountTable {
        rows,
        domain,
        method,
        validity_window: validity_window(series, domain),
        padded,
    })
}

impl<T: Real> BoxCountTable<T> {
    /// Slope between each row and the previous (coarser) one.
    pub fn octave_slopes(&self) -> Vec<Option<T>> {
        let mut out = vec![None];
        for w in self.rows.windows(2) {
            let dn =
                T::from_u64(w[1].n).expect("count").ln() - T::from_u64(w[0].n).expect("count").ln();
            out.push(Some(dn / (w[0].r.ln() - w[1].r.ln())));
        }
        out.truncate(self.rows.len());
        out
    }
}

/// Least-squares slope of `log N` against `-log r`.
pub fn fit_dimension<T: Real>(table: &BoxCountTable<T>) -> Result<SlopeFit<T>> {
    if table.rows.len() < 4 {
        return Err(Error::domain("grid", "slope fit needs at least 4 rows"));
    }
    let xs: Vec<T> = table.rows.iter().map(|r| -r.r.ln()).collect();
    let ys: Vec<T> = table
        .rows
        .iter()
        .map(|r| T::from_u64(r.n).expect("count").ln())
        .collect();
    let window = table
        .rows
        .iter()
        .fold((T::infinity(), T::zero()), |(lo, hi), r| {
            (lo.min(r.r), hi.max(r.r))
        });
    let per_octave_slopes = table.octave_slopes().into_iter().flatten().collect();
    if table.rows.iter().all(|r| r.n == table.rows[0].n) {
        return Ok(SlopeFit {
            slope: T::zero(),
            intercept: ys[0],
            residual: T::zero(),
            window,
            per_octave_slopes,
            degenerate: true,
        });
    }
    let (slope, intercept, residual) =
        least_squares(&xs, &ys).ok_or_else(|| Error::domain("grid", "repeated scales in table"))?;
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
        window,
        per_octave_slopes,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::presets;
    use crate::weierfn::{make_base, truncate, BaseKind, NativeTerm, Truncation};

    fn saw() -> crate::weierfn::BaseFunction<f64> {
        make_base(BaseKind::Sawtooth).unwrap()
    }

    #[test]
    fn constant_function_one_box_per_column() {
        let s = TruncatedSeries::from_terms(&saw(), vec![]);
        for k in [1u64, 3, 10, 64] {
            assert_eq!(box_count(&s, 1.0 / k as f64, (0.0, 1.0)).unwrap(), k);
        }
    }

    #[test]
    fn slope_one_sawtooth_two_boxes_per_column() {
        let s = TruncatedSeries::from_terms(
            &saw(),
            vec![NativeTerm {
                a: 1.0,
                b: 1.0,
                theta: 0.0,
            }],
        );
        for k in [2u64, 5, 16, 100] {
            let r = 1.0 / (2 * k) as f64;
            let (cols, padded) = box_count_columns(&s, r, (0.0, 0.5)).unwrap();
            assert!(!padded);
            assert_eq!(cols.len() as u64, k);
            assert!(cols.iter().all(|&c| c == 2), "{cols:?}");
        }
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(box_count_bruteforce(&[(0.3f64, 0.7)], 0.1), 1);
        assert_eq!(
            box_count_bruteforce(&[(0.31f64, 0.05), (0.31, 0.15)], 0.1),
            2
        );
    }

    #[test]
    fn wingren_oracle_per_column() {
        let s = truncate(
            &presets::wingren::<f64>(30),
            &saw(),
            Truncation::Depth(4),
            0.6,
        )
        .unwrap();
        let r = 2f64.powi(-6);
        let (cols, _) = box_count_columns(&s, r, (0.0, 1.0)).unwrap();
        let samples = graph_samples(&s, (0.0, 1.0), r).unwrap();
        let brute = bruteforce_columns(&samples, r, 0.0);
        for (i, &c) in cols.iter().enumerate() {
            let b = brute[&(i as i64)];
            assert!(c.abs_diff(b) <= 1, "column {i}: {c} vs {b}");
        }
    }

    #[test]
    fn scale_outside_window() {
        let s = truncate(
            &presets::wingren::<f64>(30),
            &saw(),
            Truncation::Depth(3),
            0.6,
        )
        .unwrap();
        assert!(matches!(
            box_count(&s, 1e-6, (0.0, 1.0)),
            Err(Error::ValidityWindow { .. })
        ));
        assert!(matches!(
            box_count(&s, 2.0, (0.0, 1.0)),
            Err(Error::ValidityWindow { .. })
        ));
    }

    #[test]
    fn padded_domain_is_flagged() {
        let s = TruncatedSeries::from_terms(&saw(), vec![]);
        let (c, padded) = box_count_columns(&s, 0.3, (0.0, 1.0)).unwrap();
        assert!(padded);
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn exact_power_law_slope() {
        let rows = (4..=12)
            .map(|k| {
                let r = 2f64.powi(-k);
                BoxRow {
                    r,
                    n: r.powf(-1.5).ceil() as u64,
                }
            })
            .collect();
        let t = BoxCountTable {
            rows,
            domain: (0.0, 1.0),
            method: CountMethod::ColumnOscillation,
            validity_window: (0.0, 1.0),
            padded: false,
        };
        let fit = fit_dimension(&t).unwrap();
        assert!((fit.slope - 1.5).abs() < 0.01, "{}", fit.slope);
        assert_eq!(fit.per_octave_slopes.len(), 8);
    }

    #[test]
    fn degenerate_fit() {
        let rows = (1..=4)
            .map(|k| BoxRow {
                r: 1.0 / k as f64,
                n: 7,
            })
            .collect();
        let t = BoxCountTable {
            rows,
            domain: (0.0, 1.0),
            method: CountMethod::ColumnOscillation,
            validity_window: (0.0, 1.0),
            padded: false,
        };
        let fit = fit_dimension(&t).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn ladders() {
        let s = truncate(
            &presets::wingren::<f64>(30),
            &saw(),
            Truncation::Depth(3),
            0.6,
        )
        .unwrap();
        // b = 4, 16, 256
        let gen = build_ladder(&s, (0.0, 1.0), &Ladder::Generation).unwrap();
        assert_eq!(gen, vec![0.25, 1.0 / 16.0, 1.0 / 256.0]);
        let geo = build_ladder(&s, (0.0, 1.0), &Ladder::Geometric { factor: 2.0 }).unwrap();
        assert_eq!(geo.len(), 7);
        let auto = build_ladder(&s, (0.0, 1.0), &Ladder::Auto).unwrap();
        assert_eq!(auto, geo);
    }

    #[test]
    fn refinement_bounds() {
        let s = truncate(
            &presets::wingren::<f64>(30),
            &saw(),
            Truncation::Depth(3),
            0.6,
        )
        .unwrap();
        let scales = build_ladder(&s, (0.0, 1.0), &Ladder::Geometric { factor: 2.0 }).unwrap();
        let t = box_count_table(&s, (0.0, 1.0), &scales, CountMethod::ColumnOscillation).unwrap();
        for w in t.rows.windows(2) {
            assert!(w[0].n <= w[1].n && w[1].n <= 4 * w[0].n + 4);
        }
        let fit = fit_dimension(&t).unwrap();
        assert!(fit.slope >= 1.0 - 0.1 && fit.slope <= 2.0);
    }

    #[test]
    fn counts_independent_of_thread_count() {
        let s = truncate(
            &presets::wingren::<f64>(30),
            &saw(),
            Truncation::Depth(4),
            0.6,
        )
        .unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let one = pool.install(|| box_count(&s, 1.0 / 512.0, (0.0, 1.0)).unwrap());
        assert_eq!(one, box_count(&s, 1.0 / 512.0, (0.0, 1.0)).unwrap());
    }
}
