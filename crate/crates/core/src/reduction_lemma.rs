//! Gram-determinant-preserving tail reductions of row systems.
//!
//! Given rows `c_1, ..., c_k` in `C^n`, replace each `c_i` (`i < k`) by
//! `e_i = c_i - x_i` where `x_i` is any complex combination of the later
//! rows `c_{i+1}, ..., c_k`. The stacked matrices `A = (c_i)` and
//! `B = (e_1, ..., e_{k-1}, c_k)` then satisfy `det(A A^H) = det(B B^H)`
//! for every shape, whether `k` is below, equal to, or above `n`.
//!
//! Reductions are stored as explicit tail coefficients, so the membership
//! `c_i - e_i in span(c_{i+1}, ..., c_k)` holds by construction.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::cplx_linalg::{gram_det, ComplexMat};
use crate::error::{Error, Result};

/// `x_i = sum coeff * c_index` over indices strictly after `i`.
pub type TailCombination = Vec<(usize, Complex64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct RowSystem {
    rows: Vec<Vec<Complex64>>,
    reductions: Vec<TailCombination>,
}

impl RowSystem {
    /// `reductions[i]` describes `x_i` for `i < k - 1`; the last row is never
    /// reduced. Missing trailing reductions are treated as zero.
    pub fn new(rows: Vec<Vec<Complex64>>, mut reductions: Vec<TailCombination>) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if k == 0 || n == 0 {
            return Err(Error::InvalidReduction("row system needs at least one non-empty row".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidReduction(format!("row {i} has length {}, expected {n}", rows[i].len())));
        }
        if reductions.len() > k.saturating_sub(1) {
            return Err(Error::InvalidReduction(format!(
                "{} reductions for {k} rows; the last row cannot be reduced",
                reductions.len()
            )));
        }
        for (i, red) in reductions.iter().enumerate() {
            if let Some(&(j, _)) = red.iter().find(|&&(j, _)| j <= i || j >= k) {
                return Err(Error::InvalidReduction(format!(
                    "reduction of row {i} references row {j}, outside the tail {}..{k}",
                    i + 1
                )));
            }
        }
        reductions.resize(k - 1, Vec::new());
        Ok(Self { rows, reductions })
    }

    /// No reductions: `B = A`.
    pub fn unreduced(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(rows, Vec::new())
    }

    /// Dense form: `tails[i][t]` is the coefficient of row `i + 1 + t`.
    pub fn from_dense(rows: Vec<Vec<Complex64>>, tails: Vec<Vec<Complex64>>) -> Result<Self> {
        let reductions = tails
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.into_iter().enumerate().map(|(s, z)| (i + 1 + s, z)).collect())
            .collect();
        Self::new(rows, reductions)
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    pub fn reductions(&self) -> &[TailCombination] {
        &self.reductions
    }

    /// `A`, the unreduced rows stacked.
    pub fn original(&self) -> ComplexMat {
        ComplexMat::from_rows(&self.rows).expect("rows validated on construction")
    }

    fn coefficient(&self, i: usize, l: usize) -> Complex64 {
        self.reductions
            .get(i)
            .map(|red| red.iter().filter(|&&(j, _)| j == l).map(|&(_, z)| z).sum())
            .unwrap_or_default()
    }

    /// The single reduction equivalent to applying `self` and then reducing
    /// the resulting rows `e_1, ..., e_k` by `second`.
    pub fn compose(&self, second: &[TailCombination]) -> Result<RowSystem> {
        let k = self.rows.len();
        let second = RowSystem::new(self.rows.clone(), second.to_vec())?;
        let mut combined = Vec::with_capacity(k.saturating_sub(1));
        for i in 0..k.saturating_sub(1) {
            let mut tail = Vec::new();
            for l in i + 1..k {
                let mut z = self.coefficient(i, l) + second.coefficient(i, l);
                for j in i + 1..l {
                    z -= second.coefficient(i, j) * self.coefficient(j, l);
                }
                if z != Complex64::default() {
                    tail.push((l, z));
                }
            }
            combined.push(tail);
        }
        RowSystem::new(self.rows.clone(), combined)
    }
}

/// `B = (c_1 - x_1, ..., c_{k-1} - x_{k-1}, c_k)`.
pub fn reduce_rows(s: &RowSystem) -> ComplexMat {
    let mut out = s.rows.clone();
    for (i, red) in s.reductions.iter().enumerate() {
        for &(j, z) in red {
            for (o, c) in out[i].iter_mut().zip(&s.rows[j]) {
                *o -= z * c;
            }
        }
    }
    ComplexMat::from_rows(&out).expect("shape preserved")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub det_a: f64,
    pub det_b: f64,
    pub pass: bool,
}

/// Checks `|det(AA^H) - det(BB^H)| <= tol * max(1, |det(AA^H)|)`.
/// Numerical failures come back as `pass = false`.
pub fn verify_reduction_identity(s: &RowSystem, tol: f64) -> ReductionReport {
    let det_a = gram_det(&s.original()).unwrap_or(f64::NAN);
    let det_b = gram_det(&reduce_rows(s)).unwrap_or(f64::NAN);
    let pass = tol > 0.0 && (det_a - det_b).abs() <= tol * det_a.abs().max(1.0);
    ReductionReport { det_a, det_b, pass }
}

/// Shape regime of a row system: `k` rows in `C^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeCase {
    FewerRows,
    Square,
    MoreRows,
}

impl ShapeCase {
    pub fn of(k: usize, n: usize) -> Self {
        match k.cmp(&n) {
            std::cmp::Ordering::Less => ShapeCase::FewerRows,
            std::cmp::Ordering::Equal => ShapeCase::Square,
            std::cmp::Ordering::Greater => ShapeCase::MoreRows,
        }
    }
}

/// A random row system of the requested shape regime with dimensions at
/// most `max_dim`, row entries uniform in the unit square, and dense tail
/// coefficients of modulus up to `max_coeff`.
pub fn random_row_system(rng: &mut ChaCha8Rng, case: ShapeCase, max_dim: usize, max_coeff: f64) -> RowSystem {
    assert!(max_dim >= 2, "need room for every shape case");
    let (k, n) = match case {
        ShapeCase::FewerRows => {
            let n = rng.random_range(2..=max_dim);
            (rng.random_range(1..n), n)
        }
        ShapeCase::Square => {
            let n = rng.random_range(1..=max_dim);
            (n, n)
        }
        ShapeCase::MoreRows => {
            let n = rng.random_range(1..max_dim);
            (rng.random_range(n + 1..=max_dim), n)
        }
    };
    let mut unit = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let rows: Vec<Vec<Complex64>> = (0..k).map(|_| (0..n).map(|_| unit()).collect()).collect();
    let tails = (0..k.saturating_sub(1))
        .map(|i| {
            (i + 1..k)
                .map(|_| {
                    let modulus = rng.random_range(0.0..=max_coeff);
                    Complex64::from_polar(modulus, rng.random_range(0.0..std::f64::consts::TAU))
                })
                .collect()
        })
        .collect();
    RowSystem::from_dense(rows, tails).expect("generated system is valid")
}

/// Pass counts for one shape regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseTally {
    pub case: ShapeCase,
    pub trials: usize,
    pub passed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionSuiteSummary {
    pub trials: usize,
    pub passed: usize,
    pub tolerance: f64,
    pub worst_scaled_error: f64,
    pub cases: Vec<CaseTally>,
}

impl ReductionSuiteSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

/// Runs `trials` random systems cycling through the three shape regimes
/// (dimensions up to 6, coefficient modulus up to 10).
pub fn run_reduction_suite(trials: usize, seed: u64, tol: f64) -> ReductionSuiteSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = [ShapeCase::FewerRows, ShapeCase::Square, ShapeCase::MoreRows];
    let mut tallies: Vec<CaseTally> = cases.iter().map(|&case| CaseTally { case, trials: 0, passed: 0 }).collect();
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let slot = t % cases.len();
        let system = random_row_system(&mut rng, cases[slot], 6, 10.0);
        let report = verify_reduction_identity(&system, tol);
        let scaled = (report.det_a - report.det_b).abs() / report.det_a.abs().max(1.0);
        worst = if scaled.is_nan() { f64::INFINITY } else { worst.max(scaled) };
        tallies[slot].trials += 1;
        tallies[slot].passed += usize::from(report.pass);
    }
    ReductionSuiteSummary {
        trials,
        passed: tallies.iter().map(|c| c.passed).sum(),
        tolerance: tol,
        worst_scaled_error: worst,
        cases: tallies,
    }
}
