//! Exact decay function by exhaustive enumeration, log-log fitting, and
//! bound-versus-oracle reports.
//!
//! The decay function is the minimum of `det(M M^H)` over all tuples of
//! nonzero codewords, one per user, where `M` stacks the codewords
//! vertically into a `Un x k` matrix. Every user is required to transmit a
//! nonzero codeword.
//!
//! No pruning is done: the Gram determinant of a partial stack says nothing
//! about the determinant after more rows are added, so every tuple is
//! evaluated.

use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cplx_linalg::{gram_det, ComplexMat};
use crate::error::{Error, Result};
use crate::lattice_codes::{enumerate_nonzero, CodeEnsemble, CoeffVector};
use crate::pigeonhole_bound::ExponentSpec;

/// Exact value of the decay function for one tuple of windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub windows: Vec<u64>,
    pub value: f64,
    /// One coefficient vector per user; the first minimizer in odometer order.
    pub argmin: Vec<Vec<i64>>,
    pub evaluations: u64,
}

/// Number of tuples [`brute_force_decay`] visits.
pub fn tuple_count(e: &CodeEnsemble) -> u128 {
    e.users().iter().map(|w| w.size().saturating_sub(1)).fold(1u128, |a, b| a.saturating_mul(b))
}

/// Minimum of `det(M M^H)` over all tuples of nonzero codewords.
///
/// Tuples are visited user-major (the first user's codeword changes
/// slowest), each user's window in odometer order. Work is split across
/// threads by the first user's codeword; the reduction keeps the smallest
/// value and, among equal values, the earliest tuple, so the result does
/// not depend on scheduling.
pub fn brute_force_decay(e: &CodeEnsemble, budget: u64) -> Result<DecaySample> {
    let required = tuple_count(e);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let lists: Vec<Vec<(CoeffVector, ComplexMat)>> =
        e.users().iter().map(|w| enumerate_nonzero(w, budget).map(Iterator::collect)).collect::<Result<_>>()?;
    let sizes: Vec<usize> = lists.iter().map(Vec::len).collect();
    let inner: u64 = sizes[1..].iter().map(|&s| s as u64).product();
    let (n, k) = (e.n(), e.k());
    let users = lists.len();

    let best = (0..sizes[0])
        .into_par_iter()
        .map(|first| -> Result<Option<(f64, u64)>> {
            let mut idx = vec![0usize; users];
            idx[0] = first;
            let mut m = ComplexMat::zeros(users * n, k);
            let mut local: Option<(f64, u64)> = None;
            for ordinal in 0..inner {
                for (u, &i) in idx.iter().enumerate() {
                    let c = &lists[u][i].1;
                    for r in 0..n {
                        for col in 0..k {
                            m[(u * n + r, col)] = c[(r, col)];
                        }
                    }
                }
                let value = gram_det(&m)?;
                if local.is_none_or(|(b, _)| value < b) {
                    local = Some((value, first as u64 * inner + ordinal));
                }
                for u in (1..users).rev() {
                    idx[u] += 1;
                    if idx[u] < sizes[u] {
                        break;
                    }
                    idx[u] = 0;
                }
            }
            Ok(local)
        })
        .try_reduce(
            || None,
            |a, b| {
                Ok(match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => Some(if y.0.total_cmp(&x.0).then(y.1.cmp(&x.1)).is_lt() { y } else { x }),
                })
            },
        )?;
    let (value, ordinal) = best.ok_or_else(|| Error::InvalidParameter("no tuples to evaluate".into()))?;

    let mut rem = ordinal;
    let mut idx = vec![0usize; users];
    for u in (0..users).rev() {
        let s = sizes[u] as u64;
        idx[u] = (rem % s) as usize;
        rem /= s;
    }
    Ok(DecaySample {
        windows: e.bounds(),
        value,
        argmin: idx.iter().enumerate().map(|(u, &i)| lists[u][i].0.coeffs().to_vec()).collect(),
        evaluations: required as u64,
    })
}

/// `(N, value)` with an optional per-user window label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<u64>>,
}

/// Least-squares line through `(ln N, ln value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    /// Intercept, the logarithm of the fitted constant.
    pub log_k: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub points: Vec<CurvePoint>,
    /// Points left out of the fit because their value was not positive.
    pub excluded_nonpositive: usize,
    pub fit: Option<LogLogFit>,
}

impl DecayCurve {
    /// A curve without a fit, e.g. when fewer than two points are usable.
    pub fn unfitted(points: Vec<CurvePoint>) -> Self {
        let excluded_nonpositive = points.iter().filter(|p| p.value <= 0.0 || p.value.is_nan()).count();
        Self { points, excluded_nonpositive, fit: None }
    }

    /// Fits when possible, otherwise returns the points unfitted.
    pub fn fitted_or_plain(points: Vec<CurvePoint>) -> Self {
        fit_curve(points.clone()).unwrap_or_else(|_| Self::unfitted(points))
    }

    pub fn grid(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.n).collect()
    }
}

/// Fits `ln value = slope * ln N + log_k` over pairs with positive value.
pub fn fit_log_slope(values: &[(u64, f64)]) -> Result<DecayCurve> {
    fit_curve(values.iter().map(|&(n, value)| CurvePoint { n, value, windows: None }).collect())
}

/// [`fit_log_slope`] on labelled points.
pub fn fit_curve(points: Vec<CurvePoint>) -> Result<DecayCurve> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.value > 0.0 && p.value.is_finite() && p.n > 0)
        .map(|p| ((p.n as f64).ln(), p.value.ln()))
        .collect();
    let distinct = {
        let mut ns: Vec<u64> = points.iter().filter(|p| p.value > 0.0).map(|p| p.n).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.len()
    };
    if usable.len() < 2 || distinct < 2 {
        return Err(Error::InsufficientFitData { usable: usable.len() });
    }
    let count = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let log_k = mean_y - slope * mean_x;
    let residual = (usable.iter().map(|p| (p.1 - slope * p.0 - log_k).powi(2)).sum::<f64>() / count).sqrt();
    let excluded_nonpositive = points.iter().filter(|p| p.value <= 0.0 || p.value.is_nan()).count();
    Ok(DecayCurve { points, excluded_nonpositive, fit: Some(LogLogFit { slope, log_k, residual, points_used: usable.len() }) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub oracle: f64,
    pub oracle_windows: Option<Vec<u64>>,
    pub witness: Option<f64>,
    pub witness_windows: Option<Vec<u64>>,
    /// `witness / oracle`; absent when the oracle is zero or there is no witness.
    pub ratio: Option<f64>,
    /// `oracle <= witness`.
    pub feasible: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "U")]
    pub users: usize,
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub rows: Vec<ReportRow>,
    pub oracle_fit: Option<LogLogFit>,
    pub witness_fit: Option<LogLogFit>,
    /// True when every compared row is feasible; absent without comparisons.
    pub all_feasible: Option<bool>,
    pub notes: Vec<String>,
}

/// Joins an oracle curve and a witness curve on their shared `N` grid and
/// checks `oracle <= witness` row by row. An empty witness curve gives an
/// oracle-only report.
pub fn bound_report(oracle: &DecayCurve, witness: &DecayCurve, spec: &ExponentSpec) -> Result<BoundReport> {
    let compare = !witness.points.is_empty();
    if compare && oracle.grid() != witness.grid() {
        return Err(Error::GridMismatch(format!("oracle grid {:?}, witness grid {:?}", oracle.grid(), witness.grid())));
    }
    let rows: Vec<ReportRow> = oracle
        .points
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let w = compare.then(|| &witness.points[i]);
            ReportRow {
                n: o.n,
                oracle: o.value,
                oracle_windows: o.windows.clone(),
                witness: w.map(|w| w.value),
                witness_windows: w.and_then(|w| w.windows.clone()),
                ratio: w.filter(|_| o.value > 0.0).map(|w| w.value / o.value),
                feasible: w.map(|w| o.value <= w.value),
            }
        })
        .collect();
    let mut notes = Vec::new();
    if oracle.excluded_nonpositive > 0 {
        notes.push(format!("{} oracle values are zero; they are excluded from the fit", oracle.excluded_nonpositive));
    }
    if oracle.fit.is_none() {
        notes.push("oracle slope undefined (fewer than two positive values)".into());
    }
    if !compare {
        notes.push("no witness curve; oracle only".into());
    }
    let all_feasible = compare.then(|| rows.iter().all(|r| r.feasible == Some(true)));
    Ok(BoundReport {
        users: spec.users,
        n: spec.n,
        k: spec.k,
        alpha: spec.alpha,
        rows,
        oracle_fit: oracle.fit.clone(),
        witness_fit: if compare { witness.fit.clone() } else { None },
        all_feasible,
        notes,
    })
}

impl BoundReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema { field: "<document>".into(), message: e.to_string() })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6e}"))
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "U={} n={} k={} alpha={}", self.users, self.n, self.k, self.alpha)?;
        writeln!(f, "{:>6}  {:>14}  {:>14}  {:>14}  {:>8}", "N", "oracle", "witness", "ratio", "feasible")?;
        for r in &self.rows {
            let feasible = match r.feasible {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "-",
            };
            writeln!(f, "{:>6}  {:>14.6e}  {:>14}  {:>14}  {:>8}", r.n, r.oracle, opt(r.witness), opt(r.ratio), feasible)?;
        }
        let slope = |fit: &Option<LogLogFit>| fit.as_ref().map_or("undefined".to_string(), |x| format!("{:.4} (rms {:.3})", x.slope, x.residual));
        writeln!(f, "oracle slope:  {}", slope(&self.oracle_fit))?;
        writeln!(f, "witness slope: {}", slope(&self.witness_fit))?;
        writeln!(f, "bound slope:   {}", -self.alpha)?;
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}

/// Writes samples as CSV: `N_1..N_U, value, evaluations, argmin_1..argmin_U`
/// with each argmin's coefficients joined by `;`.
pub fn write_decay_csv<W: Write>(samples: &[DecaySample], out: W) -> Result<()> {
    let users = samples.first().map_or(0, |s| s.windows.len());
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    let mut header: Vec<String> = (1..=users).map(|j| format!("N_{j}")).collect();
    header.push("value".into());
    header.push("evaluations".into());
    header.extend((1..=users).map(|j| format!("argmin_{j}")));
    w.write_record(&header).map_err(ser)?;
    for s in samples {
        if s.windows.len() != users || s.argmin.len() != users {
            return Err(Error::DimensionMismatch("samples disagree on the number of users".into()));
        }
        let mut rec: Vec<String> = s.windows.iter().map(u64::to_string).collect();
        rec.push(s.value.to_string());
        rec.push(s.evaluations.to_string());
        rec.extend(s.argmin.iter().map(|c| c.iter().map(i64::to_string).collect::<Vec<_>>().join(";")));
        w.write_record(&rec).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

/// Parses the CSV written by [`write_decay_csv`].
pub fn read_decay_csv<R: Read>(input: R) -> Result<Vec<DecaySample>> {
    let mut r = csv::Reader::from_reader(input);
    let schema = |field: String, message: String| Error::Schema { field, message };
    let header = r.headers().map_err(|e| schema("header".into(), e.to_string()))?.clone();
    if header.len() < 4 || (header.len() - 2) % 2 != 0 {
        return Err(schema("header".into(), format!("{} columns", header.len())));
    }
    let users = (header.len() - 2) / 2;
    for j in 0..users {
        if header[j] != format!("N_{}", j + 1) || header[users + 2 + j] != format!("argmin_{}", j + 1) {
            return Err(schema("header".into(), format!("unexpected column names {header:?}")));
        }
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| schema(format!("row {line}"), e.to_string()))?;
        let num = |i: usize| -> Result<u64> { rec[i].parse().map_err(|e| schema(format!("row {line}.{}", &header[i]), format!("{e}"))) };
        let windows = (0..users).map(num).collect::<Result<Vec<_>>>()?;
        let value: f64 = rec[users].parse().map_err(|e| schema(format!("row {line}.value"), format!("{e}")))?;
        let evaluations = num(users + 1)?;
        let argmin = (0..users)
            .map(|j| {
                rec[users + 2 + j]
                    .split(';')
                    .map(|t| t.parse::<i64>().map_err(|e| schema(format!("row {line}.argmin_{}", j + 1), format!("{e}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(DecaySample { windows, value, argmin, evaluations });
    }
    Ok(out)
}

/// Recomputes the determinant of a sample's argmin tuple.
pub fn argmin_value(e: &CodeEnsemble, s: &DecaySample) -> Result<f64> {
    let mats = e
        .users()
        .iter()
        .zip(&s.argmin)
        .map(|(w, c)| crate::lattice_codes::materialize(w.basis(), &CoeffVector::new(c.clone(), w.bound())?))
        .collect::<Result<Vec<_>>>()?;
    gram_det(&ComplexMat::stack(&mats)?)
}
