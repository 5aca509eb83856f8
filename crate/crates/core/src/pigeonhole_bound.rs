//! Constructive witnesses for the pigeonhole upper bound on the decay
//! function.
//!
//! The construction runs from the last user down to the first:
//!
//! 1. Fix a short codeword `C_U` of user `U` (minimal Frobenius norm over
//!    coefficient vectors in `{-1, 0, 1}^r`).
//! 2. At level `l = 0, ..., U-2`, let `W` be the real-embedded space of
//!    `n x k` matrices whose rows all lie in the complex row span of the
//!    codewords fixed so far, and `V` its orthogonal complement. Points of
//!    user `U-l-1`'s window are projected onto `V`, bucketed on a grid in
//!    the coordinates of a bounded projected basis, and the closest
//!    colliding pair gives `C_{U-l-1}` as their difference.
//! 3. Stack `A = (C_1; ...; C_U)`. Replacing each `C_j` (`j < U`) by its
//!    projection is a tail reduction of the rows of `A`, so `det(A A^H)`
//!    equals the determinant of the projected stack; both are recorded.
//!
//! Collision differences have coefficients up to `2N`, so a witness records
//! the effective window of every user next to the nominal one.

use std::collections::HashMap;

use num_rational::Ratio;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cplx_linalg::{gram_det, orthonormal_complement, project_onto, real_embed, real_unembed, ComplexMat, SubspaceBasis};
use crate::error::{Error, Result};
use crate::lattice_codes::{materialize, sample_coeffs, CodeEnsemble, CodebookWindow, CoeffVector, Odometer};
use crate::projected_basis::{coordinates_in, growth_certificate, select_projected_basis, GrowthCertificate};

/// Number of base-codeword candidates drawn when `3^r` exceeds the budget.
pub const BASE_SAMPLE_COUNT: usize = 1_000_000;

/// Each point is compared with at most this many later points of its bucket.
pub const MAX_BUCKET_PARTNERS: usize = 64;

/// Allowed relative gap between the determinant of a witness stack and the
/// determinant of its projected stack.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;

/// Decay exponents of the bound for a `(U, n, k)` configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSpec {
    pub users: usize,
    pub n: usize,
    pub k: usize,
    /// Sum of `per_level`.
    pub alpha: f64,
    /// Exponent attached to `N_l` for `l = 1, ..., U-1`.
    pub per_level: Vec<f64>,
    /// `per_level` as exact fractions `"p/q"`.
    pub per_level_exact: Vec<String>,
}

impl ExponentSpec {
    fn from_terms(users: usize, n: usize, k: usize, terms: Vec<Ratio<i64>>) -> Self {
        let alpha = terms.iter().fold(Ratio::from_integer(0), |acc, t| acc + t);
        Self {
            users,
            n,
            k,
            alpha: ratio_to_f64(alpha),
            per_level: terms.iter().map(|&t| ratio_to_f64(t)).collect(),
            per_level_exact: terms.iter().map(|t| format!("{}/{}", t.numer(), t.denom())).collect(),
        }
    }

    /// The bound's product form `prod_l N_l^(-per_level[l])` without its
    /// constant, for per-user windows `N_1, ..., N_U`.
    pub fn bound_shape(&self, bounds: &[u64]) -> f64 {
        self.per_level.iter().zip(bounds).map(|(e, &n)| (n as f64).powf(-e)).product()
    }
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn alpha_terms(users: usize, n: usize, k: usize) -> Result<Vec<Ratio<i64>>> {
    if users == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("U={users} and n={n} must be positive")));
    }
    if k < users * n {
        return Err(Error::CodeTooShort { k, required: users * n });
    }
    let (u, n, k) = (users as i64, n as i64, k as i64);
    Ok((1..u).map(|l| Ratio::new(2 * n * n * (u - l), k - n * (u - l))).collect())
}

/// `alpha = sum_{l=1}^{U-1} 2n^2 (U-l) / (k - n(U-l))`, requires `k >= Un`.
pub fn exponent_alpha(users: usize, n: usize, k: usize) -> Result<ExponentSpec> {
    Ok(ExponentSpec::from_terms(users, n, k, alpha_terms(users, n, k)?))
}

/// `beta = sum_{l=1}^{U-1} 2n (U-l) / l`, the exponent when `k = Un`.
pub fn exponent_beta(users: usize, n: usize) -> Result<ExponentSpec> {
    if users == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("U={users} and n={n} must be positive")));
    }
    let (u, ni) = (users as i64, n as i64);
    let terms = (1..u).map(|l| Ratio::new(2 * ni * (u - l), l)).collect();
    Ok(ExponentSpec::from_terms(users, n, users * n, terms))
}

/// Exact exponent terms, for identity checks.
pub fn exponent_terms_exact(users: usize, n: usize, k: usize) -> Result<Vec<Ratio<i64>>> {
    alpha_terms(users, n, k)
}

/// Exact beta terms.
pub fn beta_terms_exact(users: usize, n: usize) -> Vec<Ratio<i64>> {
    let (u, n) = (users as i64, n as i64);
    (1..u).map(|l| Ratio::new(2 * n * (u - l), l)).collect()
}

/// The nonzero point of minimal Frobenius norm with coefficients in
/// `{-1, 0, 1}`. Ties go to the earliest candidate in odometer order.
///
/// When `3^r` exceeds `budget`, [`BASE_SAMPLE_COUNT`] seeded sign vectors
/// are examined instead.
pub fn pick_small_base(w: &CodebookWindow, budget: u64, seed: u64) -> Result<(CoeffVector, ComplexMat)> {
    let r = w.rank();
    let basis = w.basis();
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut consider = |coeffs: Vec<i64>| {
        if coeffs.iter().all(|&c| c == 0) {
            return;
        }
        let c = CoeffVector::new(coeffs, 1).expect("sign vector");
        let norm = materialize(basis, &c).expect("rank matches").frobenius_norm();
        if best.as_ref().is_none_or(|(b, _)| norm < *b) {
            best = Some((norm, c.coeffs().to_vec()));
        }
    };
    if crate::lattice_codes::window_size(r, 1) <= budget as u128 {
        Odometer::new(r, 1).for_each(&mut consider);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signs = [-1i64, 0, 1];
        for _ in 0..BASE_SAMPLE_COUNT {
            consider((0..r).map(|_| *signs.choose(&mut rng).expect("non-empty")).collect());
        }
    }
    let (_, coeffs) = best.ok_or(Error::ZeroCodeword(0))?;
    let c = CoeffVector::new(coeffs, 1)?;
    let x = materialize(basis, &c)?;
    Ok((c, x))
}

/// One link of the subspace chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceChainStep {
    pub level: usize,
    pub w_basis: SubspaceBasis,
    pub v_basis: SubspaceBasis,
    /// `2n(k - nl - n)`, the dimension of `V` when the fixed codewords have
    /// full row rank. Negative values mean the formula does not apply.
    pub expected_dim: i64,
}

impl SubspaceChainStep {
    pub fn w_dim(&self) -> usize {
        self.w_basis.dim()
    }

    pub fn v_dim(&self) -> usize {
        self.v_basis.dim()
    }
}

/// `W`: every `n x k` matrix whose rows lie in the complex span of all rows
/// of `fixed`, realized over the reals by spanning with each row and `i`
/// times each row in every row slot. `V = W^perp`.
pub fn build_chain_step(fixed: &[ComplexMat], n: usize, k: usize) -> Result<SubspaceChainStep> {
    if fixed.is_empty() {
        return Err(Error::InvalidParameter("chain step needs at least one fixed codeword".into()));
    }
    if let Some(i) = fixed.iter().position(|m| m.shape() != (n, k)) {
        return Err(Error::DimensionMismatch(format!("fixed codeword {i} has shape {:?}, expected ({n}, {k})", fixed[i].shape())));
    }
    let i_unit = num_complex::Complex64::new(0.0, 1.0);
    let mut spanning = Vec::new();
    for m in fixed {
        for r in 0..n {
            let row = m.row(r);
            for slot in 0..n {
                for phase in [num_complex::Complex64::new(1.0, 0.0), i_unit] {
                    let mut x = ComplexMat::zeros(n, k);
                    for (j, z) in row.iter().enumerate() {
                        x[(slot, j)] = z * phase;
                    }
                    spanning.push(real_embed(&x));
                }
            }
        }
    }
    let w_basis = SubspaceBasis::span(2 * n * k, &spanning)?;
    let v_basis = orthonormal_complement(&w_basis);
    let level = fixed.len() - 1;
    let expected_dim = 2 * n as i64 * (k as i64 - (n * level) as i64 - n as i64);
    Ok(SubspaceChainStep { level, w_basis, v_basis, expected_dim })
}

/// Result of one pigeonhole search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub coeffs: CoeffVector,
    pub codeword: ComplexMat,
    /// Norm of the projection of `codeword` onto `V`.
    pub achieved_norm: f64,
    pub stats: SearchStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Distinct window points bucketed.
    pub points: usize,
    pub exhaustive: bool,
    pub subspace_dim: usize,
    pub buckets_per_axis: u64,
    pub occupied_buckets: usize,
    /// `points > buckets_per_axis^d`, so some bucket must hold two points.
    pub collision_guaranteed: bool,
    pub collision_found: bool,
    /// Per-axis half width certified by the projected basis, `m^2 N`.
    pub certified_half_width: f64,
    /// Largest coordinate magnitude actually observed.
    pub measured_half_width: f64,
    pub swaps: usize,
    pub growth: Option<GrowthCertificate>,
}

/// `floor(p^(1/d))` computed exactly.
pub fn integer_root(p: u64, d: u32) -> u64 {
    if d == 0 || p <= 1 {
        return p.min(1).max(u64::from(d == 0));
    }
    let pow = |b: u64| (0..d).try_fold(1u64, |acc, _| acc.checked_mul(b));
    let mut r = (p as f64).powf(1.0 / d as f64).floor() as u64;
    while pow(r).is_none_or(|v| v > p) {
        r -= 1;
    }
    while r.checked_add(1).and_then(pow).is_some_and(|v| v <= p) {
        r += 1;
    }
    r
}

fn level_seed(seed: u64, level: usize) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(level as u64 + 1))
}

/// Pigeonhole search for a codeword with a short projection onto `v`.
///
/// Takes `P = min(budget, (2N+1)^r)` window points: the whole window in
/// odometer order when it fits, otherwise `budget` seeded samples with
/// duplicates removed. Each point's projection is written in the bounded
/// projected basis of `v`; the measured coordinate box is cut into
/// `floor(P^(1/d))` slabs per axis, and among all pairs sharing a cell the
/// one whose difference has the shortest projection wins (ties by point
/// order). The difference is nonzero with coefficients bounded by `2N`.
pub fn short_projection_search(w: &CodebookWindow, v: &SubspaceBasis, budget: u64, seed: u64) -> Result<SearchOutcome> {
    let m = w.rank();
    if v.ambient_dim() != m {
        return Err(Error::DimensionMismatch(format!("subspace lives in dimension {}, lattice in {m}", v.ambient_dim())));
    }
    if budget < 2 {
        return Err(Error::InvalidParameter(format!("search budget {budget} is below 2")));
    }
    let d = v.dim();
    let bound = w.bound();
    let basis = w.basis();
    let exhaustive = w.size() <= budget as u128;

    if d == 0 {
        let first = Odometer::new(m, bound).find(|c| c.iter().any(|&x| x != 0)).expect("window has nonzero points");
        let coeffs = CoeffVector::new(first, bound)?;
        let codeword = materialize(basis, &coeffs)?;
        let stats = SearchStats {
            points: 1,
            exhaustive,
            subspace_dim: 0,
            buckets_per_axis: 1,
            occupied_buckets: 1,
            collision_guaranteed: false,
            collision_found: false,
            certified_half_width: 0.0,
            measured_half_width: 0.0,
            swaps: 0,
            growth: None,
        };
        return Ok(SearchOutcome { coeffs, codeword, achieved_norm: 0.0, stats });
    }

    let embeddings = basis.embeddings();
    let pb = select_projected_basis(embeddings, v)?;
    let growth = growth_certificate(&pb, embeddings)?;
    let basis_coords: Vec<Vec<f64>> = embeddings.iter().map(|e| coordinates_in(&pb, e)).collect::<Result<_>>()?;
    let ortho_coords: Vec<Vec<f64>> = embeddings.iter().map(|e| v.coordinates(e)).collect();

    let points: Vec<Vec<i64>> = if exhaustive {
        Odometer::new(m, bound).collect()
    } else {
        let mut seen = std::collections::HashSet::new();
        sample_coeffs(w, budget as usize, seed)
            .into_iter()
            .map(|c| c.coeffs().to_vec())
            .filter(|c| seen.insert(c.clone()))
            .collect()
    };
    let count = points.len();
    let combine = |coeffs: &[i64], table: &[Vec<f64>]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (&a, row) in coeffs.iter().zip(table) {
            if a != 0 {
                out.iter_mut().zip(row).for_each(|(o, x)| *o += a as f64 * x);
            }
        }
        out
    };
    let bcoords: Vec<Vec<f64>> = points.iter().map(|p| combine(p, &basis_coords)).collect();
    let ocoords: Vec<Vec<f64>> = points.iter().map(|p| combine(p, &ortho_coords)).collect();

    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for b in &bcoords {
        for t in 0..d {
            lo[t] = lo[t].min(b[t]);
            hi[t] = hi[t].max(b[t]);
        }
    }
    let measured_half_width = lo.iter().chain(&hi).map(|x| x.abs()).fold(0.0, f64::max);
    let per_axis = integer_root(count as u64, d as u32).max(1);
    let cell = |b: &[f64]| -> u64 {
        let mut key = 0u64;
        for t in 0..d {
            let span = hi[t] - lo[t];
            let idx = if span > 0.0 { (((b[t] - lo[t]) / span) * per_axis as f64).floor() as u64 } else { 0 };
            key = key * per_axis + idx.min(per_axis - 1);
        }
        key
    };
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, b) in bcoords.iter().enumerate() {
        buckets.entry(cell(b)).or_default().push(i);
    }

    let dist = |a: usize, b: usize| -> f64 {
        ocoords[a].iter().zip(&ocoords[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let mut best: Option<(f64, usize, usize)> = None;
    for members in buckets.values().filter(|m| m.len() > 1) {
        for (pos, &a) in members.iter().enumerate() {
            for &b in members.iter().skip(pos + 1).take(MAX_BUCKET_PARTNERS) {
                let dn = dist(a, b);
                let better = match best {
                    None => true,
                    Some((bn, ba, bb)) => dn < bn || (dn == bn && (a, b) < (ba, bb)),
                };
                if better {
                    best = Some((dn, a, b));
                }
            }
        }
    }
    let collision_found = best.is_some();
    let (coeffs, bound_used) = match best {
        Some((_, a, b)) => (points[b].iter().zip(&points[a]).map(|(x, y)| x - y).collect::<Vec<_>>(), 2 * bound),
        None => {
            let norm = |i: usize| ocoords[i].iter().map(|x| x * x).sum::<f64>();
            let i = (0..count)
                .filter(|&i| points[i].iter().any(|&x| x != 0))
                .min_by(|&a, &b| norm(a).total_cmp(&norm(b)).then(a.cmp(&b)))
                .ok_or(Error::ZeroCodeword(0))?;
            (points[i].clone(), bound)
        }
    };
    let coeffs = CoeffVector::new(coeffs, bound_used)?;
    let codeword = materialize(basis, &coeffs)?;
    let achieved_norm = project_onto(&real_embed(&codeword), v)?.norm();
    let collision_guaranteed = (0..d).try_fold(1u64, |acc, _| acc.checked_mul(per_axis)).is_some_and(|cells| count as u64 > cells);
    let stats = SearchStats {
        points: count,
        exhaustive,
        subspace_dim: d,
        buckets_per_axis: per_axis,
        occupied_buckets: buckets.len(),
        collision_guaranteed,
        collision_found,
        certified_half_width: growth.certified * bound as f64,
        measured_half_width,
        swaps: pb.swap_log().len(),
        growth: Some(growth),
    };
    Ok(SearchOutcome { coeffs, codeword, achieved_norm, stats })
}

/// Per-level record of a witness construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    /// 1-based index of the user whose codeword was chosen at this level.
    pub user: usize,
    pub w_dim: usize,
    pub v_dim: usize,
    pub expected_v_dim: i64,
    pub projection_norm: f64,
    pub search: SearchStats,
}

/// An explicit codeword tuple and its stacked Gram determinant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(rename = "U")]
    pub users: usize,
    pub n: usize,
    pub k: usize,
    /// The windows the construction was asked to use.
    pub nominal_windows: Vec<u64>,
    /// Bound the construction could produce per user: 1 for the base user,
    /// `2N` for users found by collision.
    pub search_bounds: Vec<u64>,
    /// Smallest window containing each codeword: `max(1, max |coefficient|)`.
    pub coeff_windows: Vec<u64>,
    pub coefficients: Vec<Vec<i64>>,
    pub codewords: Vec<Vec<Vec<[f64; 2]>>>,
    pub det_value: f64,
    /// Determinant of the stack with `C_1, ..., C_{U-1}` replaced by their
    /// projections.
    pub det_projected: f64,
    pub identity_residual: f64,
    pub identity_pass: bool,
    pub levels: Vec<LevelReport>,
    /// `sqrt(det_value)`, reported only when `k = Un`.
    pub unsquared: Option<f64>,
}

impl Witness {
    pub fn codeword_matrices(&self) -> Result<Vec<ComplexMat>> {
        self.codewords.iter().map(|c| ComplexMat::from_pairs(c)).collect()
    }

    /// Checks shapes, windows and the recorded determinant.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Err(Error::Schema { field: field.into(), message });
        if [self.nominal_windows.len(), self.search_bounds.len(), self.coeff_windows.len(), self.coefficients.len(), self.codewords.len()]
            .iter()
            .any(|&l| l != self.users)
        {
            return bad("U", format!("per-user arrays must have {} entries", self.users));
        }
        if self.levels.len() != self.users.saturating_sub(1) {
            return bad("levels", format!("{} levels for U={}", self.levels.len(), self.users));
        }
        let mats = self.codeword_matrices()?;
        for (j, (m, c)) in mats.iter().zip(&self.coefficients).enumerate() {
            if m.shape() != (self.n, self.k) {
                return bad(&format!("codewords[{j}]"), format!("shape {:?}", m.shape()));
            }
            if c.len() != 2 * self.n * self.k || c.iter().all(|&x| x == 0) {
                return bad(&format!("coefficients[{j}]"), "must be a nonzero vector of length 2kn".into());
            }
            if c.iter().any(|x| x.unsigned_abs() > self.coeff_windows[j]) {
                return bad(&format!("coeff_windows[{j}]"), "does not contain the codeword".into());
            }
        }
        let det = gram_det(&ComplexMat::stack(&mats)?)?;
        if (det - self.det_value).abs() > 1e-9 * det.abs().max(self.det_value.abs()) {
            return bad("det_value", format!("recorded {:e}, recomputed {det:e}", self.det_value));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: Witness = serde_json::from_str(text).map_err(|e| Error::Schema { field: "<document>".into(), message: e.to_string() })?;
        w.validate()?;
        Ok(w)
    }
}

/// Runs the full construction on an ensemble. `budget` caps the window
/// points examined per level.
pub fn construct_witness(e: &CodeEnsemble, budget: u64, seed: u64) -> Result<Witness> {
    let users = e.user_count();
    let (n, k) = (e.n(), e.k());
    let last = users - 1;

    let (base_coeffs, base) = pick_small_base(&e.users()[last], budget, seed)?;
    let mut codewords: Vec<Option<ComplexMat>> = vec![None; users];
    let mut coeffs: Vec<Option<CoeffVector>> = vec![None; users];
    let mut projected: Vec<Option<ComplexMat>> = vec![None; users];
    let mut search_bounds = vec![0u64; users];
    codewords[last] = Some(base.clone());
    coeffs[last] = Some(base_coeffs);
    search_bounds[last] = 1;

    let mut fixed = vec![base];
    let mut levels = Vec::with_capacity(last);
    for level in 0..last {
        let step = build_chain_step(&fixed, n, k)?;
        let j = last - 1 - level;
        let window = &e.users()[j];
        let found = short_projection_search(window, &step.v_basis, budget, level_seed(seed, level))?;
        if found.coeffs.is_zero() {
            return Err(Error::ZeroCodeword(level));
        }
        let proj = project_onto(&real_embed(&found.codeword), &step.v_basis)?;
        projected[j] = Some(real_unembed(&proj, n, k)?);
        levels.push(LevelReport {
            level,
            user: j + 1,
            w_dim: step.w_dim(),
            v_dim: step.v_dim(),
            expected_v_dim: step.expected_dim,
            projection_norm: found.achieved_norm,
            search: found.stats.clone(),
        });
        search_bounds[j] = found.coeffs.bound();
        fixed.push(found.codeword.clone());
        codewords[j] = Some(found.codeword);
        coeffs[j] = Some(found.coeffs);
    }

    let codewords: Vec<ComplexMat> = codewords.into_iter().map(|c| c.expect("every user assigned")).collect();
    let coeffs: Vec<CoeffVector> = coeffs.into_iter().map(|c| c.expect("every user assigned")).collect();
    let det_value = gram_det(&ComplexMat::stack(&codewords)?)?;
    let b_rows: Vec<ComplexMat> = (0..users)
        .map(|j| if j == last { codewords[j].clone() } else { projected[j].clone().expect("projected") })
        .collect();
    let det_projected = gram_det(&ComplexMat::stack(&b_rows)?)?;
    let scale = det_value.abs().max(det_projected.abs());
    let identity_residual = if scale > 0.0 { (det_value - det_projected).abs() / scale } else { 0.0 };

    Ok(Witness {
        users,
        n,
        k,
        nominal_windows: e.bounds(),
        search_bounds,
        coeff_windows: coeffs.iter().map(|c| c.max_abs().max(1)).collect(),
        coefficients: coeffs.iter().map(|c| c.coeffs().to_vec()).collect(),
        codewords: codewords.iter().map(ComplexMat::to_pairs).collect(),
        det_value,
        det_projected,
        identity_residual,
        identity_pass: identity_residual <= IDENTITY_TOLERANCE,
        levels,
        unsquared: (k == users * n).then(|| det_value.sqrt()),
    })
}

/// Norm of the orthogonal projection of a codeword onto `v`.
pub fn projection_norm(x: &ComplexMat, v: &SubspaceBasis) -> Result<f64> {
    Ok(project_onto(&real_embed(x), v)?.norm())
}
