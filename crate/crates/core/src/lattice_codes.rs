//! Per-user matrix lattices and their finite codebook windows.
//!
//! User `j` owns a full-rank lattice in the space of `n x k` complex
//! matrices, given by `r = 2kn` basis matrices. The codebook window of
//! size `N` is every integer combination of the basis with coefficients in
//! `[-N, N]`.
//!
//! Windows are walked by an odometer: coefficient vectors appear in
//! lexicographic order starting from `(-N, ..., -N)`, with the last
//! coordinate changing fastest.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cplx_linalg::{real_det, real_embed, ComplexMat, RealVector};
use crate::error::{Error, Result};

/// Default cap on the number of points any single enumeration may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

/// Minimum |det| of the row-normalized real embedding matrix for a basis to
/// count as full rank.
pub const FULL_RANK_TOLERANCE: f64 = 1e-8;

/// One user's lattice: `2kn` linearly independent `n x k` basis matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeBasis {
    user_index: usize,
    n: usize,
    k: usize,
    basis: Vec<ComplexMat>,
    embeddings: Vec<RealVector>,
}

impl LatticeBasis {
    pub fn new(user_index: usize, n: usize, k: usize, basis: Vec<ComplexMat>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidLattice(format!("n={n} and k={k} must be positive")));
        }
        let rank = 2 * n * k;
        if basis.len() != rank {
            return Err(Error::InvalidLattice(format!(
                "user {user_index}: {} basis matrices supplied, full rank needs 2kn = {rank}",
                basis.len()
            )));
        }
        if let Some(i) = basis.iter().position(|b| b.shape() != (n, k)) {
            return Err(Error::InvalidLattice(format!(
                "user {user_index}: basis matrix {i} has shape {:?}, expected ({n}, {k})",
                basis[i].shape()
            )));
        }
        let embeddings: Vec<RealVector> = basis.iter().map(real_embed).collect();
        let det = normalized_det(&embeddings);
        if det.abs() <= FULL_RANK_TOLERANCE {
            return Err(Error::InvalidLattice(format!(
                "user {user_index}: basis is not full rank (normalized determinant {det:e})"
            )));
        }
        Ok(Self { user_index, n, k, basis, embeddings })
    }

    pub fn user_index(&self) -> usize {
        self.user_index
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of basis matrices, `2kn`.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn matrices(&self) -> &[ComplexMat] {
        &self.basis
    }

    /// Real embeddings of the basis matrices, a basis of `R^(2kn)`.
    pub fn embeddings(&self) -> &[RealVector] {
        &self.embeddings
    }

    /// The same lattice with every basis matrix multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.user_index, self.n, self.k, self.basis.iter().map(|b| b.scale(s)).collect())
    }

    pub(crate) fn with_user_index(mut self, user_index: usize) -> Self {
        self.user_index = user_index;
        self
    }
}

fn normalized_det(vectors: &[RealVector]) -> f64 {
    let rows: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let norm = v.norm();
            v.as_slice().iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }).collect()
        })
        .collect();
    real_det(&rows)
}

/// Integer coefficients `b_1..b_r` with `|b_i| <= bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoeffVector {
    coeffs: Vec<i64>,
    bound: u64,
}

impl CoeffVector {
    pub fn new(coeffs: Vec<i64>, bound: u64) -> Result<Self> {
        if let Some(i) = coeffs.iter().position(|c| c.unsigned_abs() > bound) {
            return Err(Error::InvalidCoefficients(format!(
                "coefficient {i} = {} exceeds bound {bound}",
                coeffs[i]
            )));
        }
        Ok(Self { coeffs, bound })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> u64 {
        self.coeffs.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }
}

/// The codebook `L_j(N)`: a lattice restricted to coefficients in `[-N, N]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodebookWindow {
    basis: LatticeBasis,
    bound: u64,
}

impl CodebookWindow {
    pub fn new(basis: LatticeBasis, bound: u64) -> Result<Self> {
        if bound == 0 {
            return Err(Error::InvalidParameter("window bound N must be at least 1".into()));
        }
        Ok(Self { basis, bound })
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    /// Number of points in the window, `(2N + 1)^r`, saturating.
    pub fn size(&self) -> u128 {
        window_size(self.rank(), self.bound)
    }

    pub fn with_bound(&self, bound: u64) -> Result<Self> {
        Self::new(self.basis.clone(), bound)
    }
}

/// `(2N + 1)^r`, saturating at `u128::MAX`.
pub fn window_size(rank: usize, bound: u64) -> u128 {
    let side = 2 * bound as u128 + 1;
    (0..rank).fold(1u128, |acc, _| acc.saturating_mul(side))
}

/// A `U`-user MIMO-MAC code sharing `n` and `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeEnsemble {
    n: usize,
    k: usize,
    users: Vec<CodebookWindow>,
}

impl CodeEnsemble {
    pub fn new(users: Vec<CodebookWindow>) -> Result<Self> {
        let first = users
            .first()
            .ok_or_else(|| Error::InvalidParameter("an ensemble needs at least one user".into()))?;
        let (n, k) = (first.basis.n, first.basis.k);
        if let Some(j) = users.iter().position(|w| w.basis.n != n || w.basis.k != k) {
            return Err(Error::InvalidLattice(format!(
                "user {j} has shape {}x{}, ensemble uses {n}x{k}",
                users[j].basis.n, users[j].basis.k
            )));
        }
        let required = users.len() * n;
        if k < required {
            return Err(Error::CodeTooShort { k, required });
        }
        Ok(Self { n, k, users })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of users `U`.
    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[CodebookWindow] {
        &self.users
    }

    pub fn bounds(&self) -> Vec<u64> {
        self.users.iter().map(|w| w.bound).collect()
    }

    /// Same lattices, every window set to `bound`.
    pub fn with_uniform_bound(&self, bound: u64) -> Result<Self> {
        self.with_bounds(&vec![bound; self.users.len()])
    }

    /// Same lattices with per-user window bounds.
    pub fn with_bounds(&self, bounds: &[u64]) -> Result<Self> {
        if bounds.len() != self.users.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} bounds for {} users",
                bounds.len(),
                self.users.len()
            )));
        }
        let users = self.users.iter().zip(bounds).map(|(w, &b)| w.with_bound(b)).collect::<Result<_>>()?;
        Self::new(users)
    }

    /// Every basis matrix of every user multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let users = self
            .users
            .iter()
            .map(|w| CodebookWindow::new(w.basis.scaled(s)?, w.bound))
            .collect::<Result<_>>()?;
        Self::new(users)
    }

    /// Users reordered so that new user `i` is old user `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.users.len()];
        if order.len() != self.users.len() || order.iter().any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidParameter(format!("{order:?} is not a permutation of the users")));
        }
        let users = order
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                let w = &self.users[old];
                CodebookWindow::new(w.basis.clone().with_user_index(new), w.bound)
            })
            .collect::<Result<_>>()?;
        Self::new(users)
    }
}

/// The lattice point `sum_i c_i B_i`.
pub fn materialize(basis: &LatticeBasis, c: &CoeffVector) -> Result<ComplexMat> {
    if c.len() != basis.rank() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a lattice of rank {}",
            c.len(),
            basis.rank()
        )));
    }
    let mut out = ComplexMat::zeros(basis.n, basis.k);
    for (&ci, b) in c.coeffs.iter().zip(&basis.basis) {
        if ci != 0 {
            out.axpy(ci as f64, b);
        }
    }
    Ok(out)
}

/// Lexicographic walk over `[-bound, bound]^rank`, last coordinate fastest.
#[derive(Clone, Debug)]
pub struct Odometer {
    current: Vec<i64>,
    bound: i64,
    done: bool,
}

impl Odometer {
    pub fn new(rank: usize, bound: u64) -> Self {
        let bound = bound as i64;
        Self { current: vec![-bound; rank], bound, done: false }
    }
}

impl Iterator for Odometer {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.done = true;
        for digit in self.current.iter_mut().rev() {
            if *digit < self.bound {
                *digit += 1;
                self.done = false;
                break;
            }
            *digit = -self.bound;
        }
        Some(out)
    }
}

fn check_budget(required: u128, budget: u64) -> Result<()> {
    if required > budget as u128 {
        Err(Error::BudgetExceeded { required, budget })
    } else {
        Ok(())
    }
}

/// Every nonzero point of the window, once each, in odometer order.
///
/// Refuses up front when the window holds more than `budget` points.
pub fn enumerate_nonzero(
    w: &CodebookWindow,
    budget: u64,
) -> Result<impl Iterator<Item = (CoeffVector, ComplexMat)> + '_> {
    enumerate_window(w, budget).map(|it| it.filter(|(c, _)| !c.is_zero()))
}

/// Every point of the window including zero, in odometer order.
pub fn enumerate_window(
    w: &CodebookWindow,
    budget: u64,
) -> Result<impl Iterator<Item = (CoeffVector, ComplexMat)> + '_> {
    check_budget(w.size(), budget)?;
    let bound = w.bound;
    Ok(Odometer::new(w.rank(), bound).map(move |coeffs| {
        let c = CoeffVector { coeffs, bound };
        let x = materialize(&w.basis, &c).expect("odometer length matches rank");
        (c, x)
    }))
}

/// `count` coefficient vectors drawn uniformly from the window.
/// Deterministic for a fixed seed; duplicates are possible.
pub fn sample_coeffs(w: &CodebookWindow, count: usize, seed: u64) -> Vec<CoeffVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = w.bound as i64;
    (0..count)
        .map(|_| CoeffVector { coeffs: (0..w.rank()).map(|_| rng.random_range(-b..=b)).collect(), bound: w.bound })
        .collect()
}

/// A seeded random ensemble with Gaussian complex basis entries and every
/// window set to `N = 1`.
///
/// Each user's basis is redrawn until it passes the full-rank check.
pub fn random_ensemble(users: usize, n: usize, k: usize, seed: u64) -> Result<CodeEnsemble> {
    if users == 0 || n == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!("U={users}, n={n}, k={k} must all be positive")));
    }
    if k < users * n {
        return Err(Error::CodeTooShort { k, required: users * n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let windows = (0..users)
        .map(|j| {
            let basis = loop {
                let mats = (0..2 * n * k).map(|_| gaussian_matrix(&mut rng, n, k)).collect();
                match LatticeBasis::new(j, n, k, mats) {
                    Ok(b) => break b,
                    Err(Error::InvalidLattice(_)) => continue,
                    Err(e) => return Err(e),
                }
            };
            CodebookWindow::new(basis, 1)
        })
        .collect::<Result<_>>()?;
    CodeEnsemble::new(windows)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ComplexMat {
    let data = (0..n * k)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    ComplexMat::new(n, k, data).expect("gaussian entries are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn toy_lattice() -> LatticeBasis {
        // 1x1 lattice spanned by 1 and i.
        let one = ComplexMat::new(1, 1, vec![Complex64::new(1.0, 0.0)]).unwrap();
        let i = ComplexMat::new(1, 1, vec![Complex64::new(0.0, 1.0)]).unwrap();
        LatticeBasis::new(0, 1, 1, vec![one, i]).unwrap()
    }

    #[test]
    fn rejects_wrong_rank_and_dependent_basis() {
        let one = ComplexMat::new(1, 1, vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!(LatticeBasis::new(0, 1, 1, vec![one.clone()]).is_err());
        assert!(LatticeBasis::new(0, 1, 1, vec![one.clone(), one.scale(2.0)]).is_err());
    }

    #[test]
    fn materialize_examples() {
        let e = random_ensemble(1, 1, 2, 5).unwrap();
        let basis = e.users()[0].basis();
        let zero = CoeffVector::new(vec![0; 4], 1).unwrap();
        assert!(materialize(basis, &zero).unwrap().is_zero());
        for i in 0..4 {
            let mut c = vec![0; 4];
            c[i] = 1;
            let x = materialize(basis, &CoeffVector::new(c, 1).unwrap()).unwrap();
            assert_eq!(&x, &basis.matrices()[i]);
        }
        let x = materialize(basis, &CoeffVector::new(vec![1, 1, 0, 0], 1).unwrap()).unwrap();
        for j in 0..2 {
            let expected = basis.matrices()[0][(0, j)] + basis.matrices()[1][(0, j)];
            assert!((x[(0, j)] - expected).norm() < 1e-15);
        }
        assert!(materialize(basis, &CoeffVector::new(vec![1], 1).unwrap()).is_err());
    }

    #[test]
    fn enumerate_counts() {
        let w = CodebookWindow::new(toy_lattice(), 1).unwrap();
        assert_eq!(enumerate_nonzero(&w, 1000).unwrap().count(), 8);

        let e = random_ensemble(1, 1, 2, 9).unwrap().with_uniform_bound(2).unwrap();
        let all: Vec<_> = enumerate_nonzero(&e.users()[0], 1000).unwrap().map(|(c, _)| c).collect();
        assert_eq!(all.len(), 624);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 624);
    }

    #[test]
    fn odometer_order_rank_one() {
        let got: Vec<_> = Odometer::new(1, 1).filter(|c| c[0] != 0).collect();
        assert_eq!(got, vec![vec![-1], vec![1]]);
        let first_three: Vec<_> = Odometer::new(2, 1).take(3).collect();
        assert_eq!(first_three, vec![vec![-1, -1], vec![-1, 0], vec![-1, 1]]);
    }

    #[test]
    fn enumerate_refuses_over_budget() {
        let w = CodebookWindow::new(toy_lattice(), 10).unwrap();
        let out = enumerate_nonzero(&w, 100).map(|_| ());
        match out {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(required, 441);
                assert_eq!(budget, 100);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn sampling_contract() {
        let e = random_ensemble(1, 1, 2, 1).unwrap().with_uniform_bound(10).unwrap();
        let w = &e.users()[0];
        assert!(sample_coeffs(w, 0, 4).is_empty());
        assert_eq!(sample_coeffs(w, 50, 4), sample_coeffs(w, 50, 4));

        let samples = sample_coeffs(w, 10_000, 17);
        // Uniform on {-10..10}: variance (21^2 - 1) / 12 = 36.67.
        let sigma_of_mean = (440.0f64 / 12.0 / 10_000.0).sqrt();
        for coord in 0..4 {
            let mut sum = 0.0;
            for s in &samples {
                assert!(s.coeffs()[coord].abs() <= 10);
                sum += s.coeffs()[coord] as f64;
            }
            assert!((sum / 10_000.0).abs() < 3.0 * sigma_of_mean);
        }
    }

    #[test]
    fn random_ensemble_shapes() {
        let e = random_ensemble(1, 1, 1, 7).unwrap();
        assert_eq!(e.user_count(), 1);
        assert_eq!(e.users()[0].rank(), 2);
        assert_eq!(e.users()[0].basis().matrices()[0].shape(), (1, 1));

        let e = random_ensemble(2, 1, 2, 1).unwrap();
        assert_eq!(e.user_count(), 2);
        for w in e.users() {
            assert_eq!(w.rank(), 4);
            assert!(w.basis().matrices().iter().all(|m| m.shape() == (1, 2)));
            assert!(normalized_det(w.basis().embeddings()).abs() > FULL_RANK_TOLERANCE);
        }

        assert!(matches!(random_ensemble(2, 1, 1, 0), Err(Error::CodeTooShort { .. })));
    }

    #[test]
    fn window_nesting() {
        let e = random_ensemble(1, 1, 1, 2).unwrap();
        let small: HashSet<_> = Odometer::new(2, 2).collect();
        let large: HashSet<_> = Odometer::new(2, 3).collect();
        assert!(small.is_subset(&large));
        assert_eq!(e.users()[0].with_bound(3).unwrap().size(), 49);
    }

    #[test]
    fn permutation_validation() {
        let e = random_ensemble(2, 1, 2, 1).unwrap();
        assert!(e.permuted(&[0, 0]).is_err());
        let p = e.permuted(&[1, 0]).unwrap();
        assert_eq!(p.users()[0].basis().matrices(), e.users()[1].basis().matrices());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn materialize_is_additive(
                a in proptest::collection::vec(-5i64..=5, 4),
                b in proptest::collection::vec(-5i64..=5, 4),
                seed in 0u64..50,
            ) {
                let e = random_ensemble(1, 1, 2, seed).unwrap();
                let basis = e.users()[0].basis();
                let sum: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                let xa = materialize(basis, &CoeffVector::new(a, 5).unwrap()).unwrap();
                let xb = materialize(basis, &CoeffVector::new(b, 5).unwrap()).unwrap();
                let xs = materialize(basis, &CoeffVector::new(sum, 10).unwrap()).unwrap();
                let direct = &xa + &xb;
                for (p, q) in xs.entries().iter().zip(direct.entries()) {
                    prop_assert!((p - q).norm() <= 1e-12);
                }
            }
        }
    }
}
