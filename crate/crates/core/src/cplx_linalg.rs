//! Dense complex linear algebra kernel.
//!
//! Everything here works on small dense matrices: the codewords of a
//! MIMO-MAC code are `n x k` complex matrices and the real spaces involved
//! have dimension `2nk`, so a few dozen at most.
//!
//! # Real embedding
//!
//! An `n x k` complex matrix `X` is identified with a real vector of length
//! `2nk` by walking the entries in row-major order and writing the real part
//! followed by the imaginary part:
//!
//! ```text
//! v[2 * (i * k + j)]     = Re X[i][j]
//! v[2 * (i * k + j) + 1] = Im X[i][j]
//! ```
//!
//! The map is a linear isometry from the Frobenius norm to the Euclidean
//! norm, and `Re tr(X Y^H)` equals the real dot product of the embeddings.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual norms below this fraction of the input norm are treated as zero
/// during orthonormalization.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Negative Gram determinants of magnitude at most this (relative to the
/// Hadamard bound of the Gram matrix) are round-off and clamp to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

/// A dense complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMat {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("({}, {})", pos / cols.max(1), pos % cols.max(1))));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from explicit rows, which must all have the same length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has length {}, expected {cols}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Vertical concatenation. All blocks must share the column count.
    pub fn stack(blocks: &[ComplexMat]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for (i, b) in blocks.iter().enumerate() {
            if b.cols != cols {
                return Err(Error::DimensionMismatch(format!(
                    "block {i} has {} columns, expected {cols}",
                    b.cols
                )));
            }
            rows += b.rows;
            data.extend_from_slice(&b.data);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Adds `coeff * other` in place.
    pub fn axpy(&mut self, coeff: f64, other: &ComplexMat) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * coeff;
        }
    }

    /// Rows as `[re, im]` pairs, the layout used by the JSON file formats.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.rows).map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect()).collect()
    }

    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            .collect();
        Self::from_rows(&rows)
    }
}

impl Index<(usize, usize)> for ComplexMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMat {
    type Output = ComplexMat;
    fn add(self, rhs: &ComplexMat) -> ComplexMat {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in addition");
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMat {
    type Output = ComplexMat;
    fn sub(self, rhs: &ComplexMat) -> ComplexMat {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in subtraction");
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// `det(M M^H)` for an arbitrary `rows x cols` complex matrix.
///
/// The Gram matrix `M M^H` is factored as `L L^H` by reducing `M` to lower
/// trapezoidal form with Householder reflections applied from the right,
/// so `M M^H` is never formed explicitly and the determinant is the product
/// of `|L_ii|^2`. Each factor is the squared distance of a row from the span
/// of the rows above it. When `rows > cols` the rows are dependent and the
/// result is exactly zero.
pub fn gram_det(m: &ComplexMat) -> Result<f64> {
    if m.rows == 0 || m.cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("gram_det input".into()));
    }
    if m.rows > m.cols {
        return Ok(0.0);
    }
    let (rows, cols) = m.shape();
    let mut a = m.data.clone();
    let mut det = 1.0;
    let mut v = vec![Complex64::new(0.0, 0.0); cols];
    for i in 0..rows {
        let x = &a[i * cols + i..(i + 1) * cols];
        let norm_sq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq == 0.0 {
            return Ok(0.0);
        }
        det *= norm_sq;
        if i + 1 == rows {
            break;
        }
        let norm = norm_sq.sqrt();
        let head = x[0];
        let phase = if head.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { head / head.norm() };
        let len = cols - i;
        v[..len].copy_from_slice(x);
        v[0] += phase * norm;
        let v_norm_sq: f64 = v[..len].iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sq == 0.0 {
            continue;
        }
        for r in i + 1..rows {
            let y = &mut a[r * cols + i..(r + 1) * cols];
            let dot: Complex64 = y.iter().zip(&v[..len]).map(|(yj, vj)| yj * vj.conj()).sum();
            let factor = dot * (2.0 / v_norm_sq);
            for (yj, vj) in y.iter_mut().zip(&v[..len]) {
                *yj -= factor * vj;
            }
        }
    }
    clamp_gram(det, hadamard_bound(m))
}

/// Product of the Gram matrix diagonal, an upper bound for `det(M M^H)`.
fn hadamard_bound(m: &ComplexMat) -> f64 {
    (0..m.rows).map(|i| m.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>()).product()
}

fn clamp_gram(det: f64, scale: f64) -> Result<f64> {
    if det >= 0.0 {
        Ok(det)
    } else if -det <= NEGATIVE_CLAMP * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::NegativeGramDeterminant { value: det, scale })
    }
}

/// A real vector with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(pos) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("index {pos}")));
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &RealVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| x * s).collect())
    }
}

impl Index<usize> for RealVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &RealVector {
    type Output = RealVector;
    fn add(self, rhs: &RealVector) -> RealVector {
        RealVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &RealVector {
    type Output = RealVector;
    fn sub(self, rhs: &RealVector) -> RealVector {
        RealVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Debug for RealVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Embeds a complex matrix into `R^(2 * rows * cols)` (see module docs for the order).
pub fn real_embed(x: &ComplexMat) -> RealVector {
    RealVector(x.data.iter().flat_map(|z| [z.re, z.im]).collect())
}

/// Exact inverse of [`real_embed`].
pub fn real_unembed(v: &RealVector, rows: usize, cols: usize) -> Result<ComplexMat> {
    if v.dim() != 2 * rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "vector of dimension {} cannot hold a {rows}x{cols} complex matrix",
            v.dim()
        )));
    }
    let data = v.0.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    ComplexMat::new(rows, cols, data)
}

/// An orthonormal basis of a subspace of `R^ambient_dim`.
///
/// Orthonormality is the stored normal form; every constructor
/// orthonormalizes its input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    vectors: Vec<RealVector>,
}

impl SubspaceBasis {
    /// The zero subspace.
    pub fn zero(ambient_dim: usize) -> Self {
        Self { ambient_dim, vectors: Vec::new() }
    }

    /// The whole ambient space, with the standard basis.
    pub fn full(ambient_dim: usize) -> Self {
        Self { ambient_dim, vectors: (0..ambient_dim).map(|i| RealVector::unit(ambient_dim, i)).collect() }
    }

    /// Span of arbitrary vectors. Dependent vectors are dropped.
    pub fn span(ambient_dim: usize, spanning: &[RealVector]) -> Result<Self> {
        let mut basis = Self::zero(ambient_dim);
        for (i, v) in spanning.iter().enumerate() {
            if v.dim() != ambient_dim {
                return Err(Error::DimensionMismatch(format!(
                    "vector {i} has dimension {}, ambient is {ambient_dim}",
                    v.dim()
                )));
            }
            basis.try_extend(v);
        }
        Ok(basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[RealVector] {
        &self.vectors
    }

    /// Coordinates of `v` in this orthonormal basis: `<v, u_i>`.
    pub fn coordinates(&self, v: &RealVector) -> Vec<f64> {
        self.vectors.iter().map(|u| u.dot(v)).collect()
    }

    /// Component of `v` orthogonal to the subspace, after two sweeps of
    /// modified Gram-Schmidt.
    fn residual(&self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for u in &self.vectors {
                let c = dot(&w, &u.0);
                for (wi, ui) in w.iter_mut().zip(&u.0) {
                    *wi -= c * ui;
                }
            }
        }
        w
    }

    /// Appends the normalized residual of `v` if it is independent of the
    /// current basis. Returns whether the subspace grew.
    fn try_extend(&mut self, v: &RealVector) -> bool {
        let input_norm = v.norm();
        if input_norm == 0.0 {
            return false;
        }
        let w = self.residual(&v.0);
        let norm = dot(&w, &w).sqrt();
        if norm < RANK_TOLERANCE * input_norm {
            return false;
        }
        self.vectors.push(RealVector(w.into_iter().map(|x| x / norm).collect()));
        true
    }
}

/// Orthonormal basis of the orthogonal complement of `s`.
///
/// Standard basis vectors are added greedily, always taking the one with the
/// largest residual against the current span (lowest index on ties), so the
/// complement is built from well-conditioned candidates.
pub fn orthonormal_complement(s: &SubspaceBasis) -> SubspaceBasis {
    let m = s.ambient_dim;
    let mut joint = s.clone();
    let mut complement = SubspaceBasis::zero(m);
    let mut used = vec![false; m];
    while joint.dim() < m {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..m).filter(|&i| !used[i]) {
            let r = joint.residual(RealVector::unit(m, i).as_slice());
            let norm = dot(&r, &r).sqrt();
            if best.is_none_or(|(_, b)| norm > b) {
                best = Some((i, norm));
            }
        }
        let Some((i, _)) = best else { break };
        used[i] = true;
        let e = RealVector::unit(m, i);
        let before = joint.dim();
        if joint.try_extend(&e) {
            complement.vectors.push(joint.vectors[before].clone());
        }
    }
    complement
}

/// Orthogonal projection of `v` onto the subspace: `sum_u <v, u> u`.
pub fn project_onto(v: &RealVector, s: &SubspaceBasis) -> Result<RealVector> {
    if v.dim() != s.ambient_dim {
        return Err(Error::DimensionMismatch(format!(
            "vector of dimension {} projected into ambient dimension {}",
            v.dim(),
            s.ambient_dim
        )));
    }
    let mut out = vec![0.0; v.dim()];
    for u in &s.vectors {
        let c = u.dot(v);
        for (o, ui) in out.iter_mut().zip(&u.0) {
            *o += c * ui;
        }
    }
    Ok(RealVector(out))
}

/// Determinant of a square real matrix given by rows.
pub fn real_det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_row_slice(n, n, &rows.concat()).determinant()
}

/// Solves the square system `A x = b` (rows of `A` given) by LU with partial
/// pivoting. `None` when `A` is numerically singular.
pub fn solve_real(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let a = DMatrix::from_row_slice(n, n, &rows.concat());
    let x = a.lu().solve(&DVector::from_column_slice(rhs))?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}
