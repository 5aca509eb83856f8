//! Bounded-coefficient bases of projected lattices.
//!
//! Project a basis `c_1, ..., c_m` of `R^m` orthogonally onto a subspace of
//! dimension `d` and choose `d` of the projections as a basis of that
//! subspace, such that every projected box point `sum a_i c_i`, `|a_i| <= N`,
//! has coordinates of magnitude at most `m^2 N` in the chosen basis.
//!
//! The selection starts from the first independent projections in index
//! order, then examines each remaining projection once. Whenever one of its
//! coordinates in the current basis exceeds 1 in magnitude, the basis
//! element with the largest coordinate is exchanged for it.
//!
//! The bound is not taken on faith: [`growth_certificate`] computes the
//! exact worst case over the whole box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cplx_linalg::{dot, solve_real, RealVector, SubspaceBasis, RANK_TOLERANCE};
use crate::error::{Error, Result};

/// Reconstruction residual allowed in [`coordinates_in`], relative to `|v|`.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;

/// One exchange: `removed` left the basis and `entering` took its slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub removed: usize,
    pub entering: usize,
    pub max_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedBasis {
    subspace: SubspaceBasis,
    selected_indices: Vec<usize>,
    basis_vectors: Vec<RealVector>,
    swap_log: Vec<SwapRecord>,
    /// Coordinates of each basis vector in the orthonormal frame of `subspace`.
    local: Vec<Vec<f64>>,
}

impl ProjectedBasis {
    pub fn subspace(&self) -> &SubspaceBasis {
        &self.subspace
    }

    pub fn dim(&self) -> usize {
        self.selected_indices.len()
    }

    pub fn selected_indices(&self) -> &[usize] {
        &self.selected_indices
    }

    pub fn basis_vectors(&self) -> &[RealVector] {
        &self.basis_vectors
    }

    pub fn swap_log(&self) -> &[SwapRecord] {
        &self.swap_log
    }

    /// Coordinates of a vector already expressed in the orthonormal frame of
    /// the subspace.
    pub(crate) fn solve_local(&self, w: &[f64]) -> Option<Vec<f64>> {
        let d = self.dim();
        let rows: Vec<Vec<f64>> = (0..d).map(|r| self.local.iter().map(|q| q[r]).collect()).collect();
        solve_real(&rows, w)
    }
}

/// Selects the projected basis for a source basis of `R^m`.
pub fn select_projected_basis(source: &[RealVector], subspace: &SubspaceBasis) -> Result<ProjectedBasis> {
    let m = subspace.ambient_dim();
    if source.len() != m {
        return Err(Error::NotSpanning { rank: source.len().min(m), ambient: m });
    }
    let rank = SubspaceBasis::span(m, source)?.dim();
    if rank != m {
        return Err(Error::NotSpanning { rank, ambient: m });
    }
    select_from_projections(source, subspace)
}

/// The selection procedure on its own; only requires that the projections
/// of `source` span the subspace.
pub fn select_from_projections(source: &[RealVector], subspace: &SubspaceBasis) -> Result<ProjectedBasis> {
    let m = subspace.ambient_dim();
    let d = subspace.dim();
    if d > m {
        return Err(Error::DimensionMismatch(format!("subspace dimension {d} exceeds ambient {m}")));
    }
    if let Some(i) = source.iter().position(|c| c.dim() != m) {
        return Err(Error::DimensionMismatch(format!("source vector {i} has dimension {}, expected {m}", source[i].dim())));
    }
    let local: Vec<Vec<f64>> = source.iter().map(|c| subspace.coordinates(c)).collect();
    let scale = local.iter().map(|q| dot(q, q).sqrt()).fold(0.0, f64::max);

    // Initial basis: first independent projections in index order.
    let mut selected: Vec<usize> = Vec::with_capacity(d);
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d);
    for (i, q) in local.iter().enumerate() {
        if selected.len() == d {
            break;
        }
        let mut w = q.clone();
        for _ in 0..2 {
            for u in &frame {
                let c = dot(&w, u);
                w.iter_mut().zip(u).for_each(|(wi, ui)| *wi -= c * ui);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm > RANK_TOLERANCE * scale {
            frame.push(w.into_iter().map(|x| x / norm).collect());
            selected.push(i);
        }
    }
    if selected.len() < d {
        return Err(Error::NotSpanning { rank: selected.len(), ambient: d });
    }

    let initial = selected.clone();
    let mut swap_log = Vec::new();
    for i in (0..source.len()).filter(|i| !initial.contains(i)) {
        if d == 0 {
            break;
        }
        let rows: Vec<Vec<f64>> = (0..d).map(|r| selected.iter().map(|&j| local[j][r]).collect()).collect();
        let coeffs = solve_real(&rows, &local[i])
            .ok_or_else(|| Error::Singular(format!("current basis {selected:?} is singular")))?;
        let mut best: Option<(usize, f64)> = None;
        for (slot, c) in coeffs.iter().enumerate() {
            let a = c.abs();
            let better = match best {
                None => true,
                Some((b_slot, b)) => a > b || (a == b && selected[slot] < selected[b_slot]),
            };
            if better {
                best = Some((slot, a));
            }
        }
        if let Some((slot, max)) = best.filter(|&(_, max)| max > 1.0) {
            swap_log.push(SwapRecord { removed: selected[slot], entering: i, max_coefficient: max });
            selected[slot] = i;
        }
    }

    let basis_vectors = selected
        .iter()
        .map(|&j| {
            let mut v = vec![0.0; m];
            for (c, u) in local[j].iter().zip(subspace.vectors()) {
                v.iter_mut().zip(u.as_slice()).for_each(|(vi, ui)| *vi += c * ui);
            }
            RealVector::new(v)
        })
        .collect::<Result<_>>()?;
    let local = selected.iter().map(|&j| local[j].clone()).collect();
    Ok(ProjectedBasis { subspace: subspace.clone(), selected_indices: selected, basis_vectors, swap_log, local })
}

/// Unique coefficients of the projection of `v` in the selected basis.
pub fn coordinates_in(pb: &ProjectedBasis, v: &RealVector) -> Result<Vec<f64>> {
    let m = pb.subspace.ambient_dim();
    if v.dim() != m {
        return Err(Error::DimensionMismatch(format!("vector of dimension {}, ambient is {m}", v.dim())));
    }
    let w = pb.subspace.coordinates(v);
    let b = pb.solve_local(&w).ok_or_else(|| Error::Singular("projected basis system".into()))?;
    let residual: f64 = (0..pb.dim())
        .map(|r| {
            let recon: f64 = b.iter().zip(&pb.local).map(|(bt, q)| bt * q[r]).sum();
            (recon - w[r]).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    if residual > RECONSTRUCTION_TOLERANCE * v.norm().max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(Error::Singular(format!("reconstruction residual {residual:e} for |v| = {:e}", v.norm())));
    }
    Ok(b)
}

/// Exact worst case of the coefficient bound over a coefficient box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub ambient_dim: usize,
    /// `max_t sum_l |d_{l,t}|`: the largest `|b_t|` any `v = sum a_l c_l` with
    /// `|a_l| <= 1` can produce.
    pub growth: f64,
    /// Largest single `|d_{l,t}|`.
    pub max_entry: f64,
    /// The certified factor `m^2`.
    pub certified: f64,
    pub holds: bool,
}

/// Coordinates of every source vector in the selected basis, and the exact
/// worst-case growth factor they imply.
pub fn growth_certificate(pb: &ProjectedBasis, source: &[RealVector]) -> Result<GrowthCertificate> {
    let m = pb.subspace.ambient_dim();
    let coords = source.iter().map(|c| coordinates_in(pb, c)).collect::<Result<Vec<_>>>()?;
    let growth = (0..pb.dim()).map(|t| coords.iter().map(|d| d[t].abs()).sum::<f64>()).fold(0.0, f64::max);
    let max_entry = coords.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    let certified = (m * m) as f64;
    Ok(GrowthCertificate { ambient_dim: m, growth, max_entry, certified, holds: growth <= certified })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSuiteSummary {
    pub trials: usize,
    pub passed: usize,
    pub samples_checked: usize,
    /// Largest `|b_i| / (m^2 N)` seen, over sampled points and exact certificates.
    pub worst_ratio: f64,
    pub total_swaps: usize,
    pub failures: Vec<String>,
}

impl ProjectionSuiteSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

const BOUNDS: [u64; 3] = [1, 10, 100];
const SAMPLES_PER_TRIAL: usize = 16;

/// Randomized check of the `m^2 N` coefficient bound: Gaussian source bases
/// of `R^m` (`m <= max_dim`), random subspaces of every dimension, `N` cycling
/// through 1, 10, 100. Each trial checks the exact certificate and a handful
/// of sampled integer box points.
pub fn run_projection_suite(trials: usize, seed: u64, max_dim: usize) -> ProjectionSuiteSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = ProjectionSuiteSummary {
        trials,
        passed: 0,
        samples_checked: 0,
        worst_ratio: 0.0,
        total_swaps: 0,
        failures: Vec::new(),
    };
    for t in 0..trials {
        let bound = BOUNDS[t % BOUNDS.len()];
        match projection_trial(&mut rng, max_dim, bound) {
            Ok((ratio, swaps, samples)) => {
                summary.samples_checked += samples;
                summary.total_swaps += swaps;
                summary.worst_ratio = summary.worst_ratio.max(ratio);
                if ratio <= 1.0 {
                    summary.passed += 1;
                } else {
                    summary.failures.push(format!("trial {t}: ratio {ratio:.6}"));
                }
            }
            Err(e) => summary.failures.push(format!("trial {t}: {e}")),
        }
    }
    summary
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> RealVector {
    RealVector::new((0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect()).expect("finite")
}

fn projection_trial(rng: &mut ChaCha8Rng, max_dim: usize, bound: u64) -> Result<(f64, usize, usize)> {
    let m = rng.random_range(1..=max_dim);
    let source = loop {
        let s: Vec<RealVector> = (0..m).map(|_| gaussian_vector(rng, m)).collect();
        if SubspaceBasis::span(m, &s)?.dim() == m {
            break s;
        }
    };
    let d = rng.random_range(0..=m);
    let spanning: Vec<RealVector> = (0..d).map(|_| gaussian_vector(rng, m)).collect();
    let subspace = SubspaceBasis::span(m, &spanning)?;
    let pb = select_projected_basis(&source, &subspace)?;
    let cert = growth_certificate(&pb, &source)?;
    let limit = cert.certified * bound as f64;
    let mut worst = cert.growth / cert.certified;
    let b = bound as i64;
    for _ in 0..SAMPLES_PER_TRIAL {
        let a: Vec<i64> = (0..m).map(|_| rng.random_range(-b..=b)).collect();
        let mut v = vec![0.0; m];
        for (ai, c) in a.iter().zip(&source) {
            v.iter_mut().zip(c.as_slice()).for_each(|(vi, ci)| *vi += *ai as f64 * ci);
        }
        let coords = coordinates_in(&pb, &RealVector::new(v)?)?;
        for x in coords {
            worst = worst.max(x.abs() / limit);
        }
    }
    Ok((worst, pb.swap_log().len(), SAMPLES_PER_TRIAL))
}
