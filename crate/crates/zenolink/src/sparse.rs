//! Sparse complex operators, state vectors and density matrices over a
//! [`HilbertSpace`].
//!
//! Operators are stored in CSR form with entries canonicalized (sorted by
//! (row, col), duplicates merged, magnitudes below [`DROP_TOL`] removed).
//! All combinators are pure; values are immutable and cheap to share across
//! threads.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;

pub type C64 = Complex<f64>;

/// Entries with magnitude at or below this are removed during
/// canonicalization. Small enough not to touch any physical coupling
/// (the smallest model coupling is ~0.03).
pub const DROP_TOL: f64 = 1e-14;

/// Entrywise tolerance for the cached hermiticity marker.
const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hermiticity {
    Yes,
    No,
    Unknown,
}

/// Complex sparse matrix over a Hilbert space.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    space: Arc<HilbertSpace>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermiticity: Hermiticity,
}

impl SparseOperator {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        space: Arc<HilbertSpace>,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let dim = space.dim();
        let mut entries: Vec<(usize, usize, C64)> = triplets
            .into_iter()
            .inspect(|&(r, c, _)| {
                debug_assert!(r < dim && c < dim, "entry ({r},{c}) outside dim {dim}")
            })
            .collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));

        // Merge duplicate coordinates.
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }

        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(merged.len());
        let mut vals = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = Self { space, row_ptr, cols, vals, hermiticity: Hermiticity::Unknown };
        op.drop_small();
        op.hermiticity = op.compute_hermiticity();
        op
    }

    /// Remove entries below the drop tolerance, recompacting.
    fn drop_small(&mut self) {
        let dim = self.dim();
        let mut new_row_ptr = vec![0usize; dim + 1];
        let mut new_cols = Vec::with_capacity(self.cols.len());
        let mut new_vals = Vec::with_capacity(self.vals.len());
        for r in 0..dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k].norm() > DROP_TOL {
                    new_cols.push(self.cols[k]);
                    new_vals.push(self.vals[k]);
                }
            }
            new_row_ptr[r + 1] = new_cols.len();
        }
        self.row_ptr = new_row_ptr;
        self.cols = new_cols;
        self.vals = new_vals;
    }

    fn compute_hermiticity(&self) -> Hermiticity {
        for r in 0..self.dim() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                let v = self.vals[k];
                let vt = self.get(c, r);
                if (v - vt.conj()).norm() > HERMITICITY_TOL {
                    return Hermiticity::No;
                }
            }
        }
        Hermiticity::Yes
    }

    pub fn zero(space: Arc<HilbertSpace>) -> Self {
        let dim = space.dim();
        Self {
            space,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermiticity: Hermiticity::Yes,
        }
    }

    pub fn identity(space: Arc<HilbertSpace>) -> Self {
        Self::constant_diagonal(space, C64::new(1.0, 0.0))
    }

    pub fn constant_diagonal(space: Arc<HilbertSpace>, value: C64) -> Self {
        let dim = space.dim();
        Self::from_triplets(space, (0..dim).map(|i| (i, i, value)))
    }

    /// Diagonal operator from per-basis-state values.
    pub fn from_diagonal(space: Arc<HilbertSpace>, diag: &[C64]) -> Self {
        assert_eq!(diag.len(), space.dim());
        Self::from_triplets(space, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn hermiticity(&self) -> Hermiticity {
        self.hermiticity
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity == Hermiticity::Yes
    }

    /// Value at (row, col); zero if absent.
    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    fn check_space(&self, other: &SparseOperator) -> Result<()> {
        if !self.space.same_space(&other.space) {
            return Err(Error::SpaceMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_space(other)?;
        let triplets: Vec<_> = self.entries().chain(other.entries()).collect();
        Ok(SparseOperator::from_triplets(self.space.clone(), triplets))
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> SparseOperator {
        let mut out = self.clone();
        for v in out.vals.iter_mut() {
            *v *= factor;
        }
        out.drop_small();
        out.hermiticity = if factor.im.abs() <= DROP_TOL && self.hermiticity == Hermiticity::Yes {
            Hermiticity::Yes
        } else {
            out.compute_hermiticity()
        };
        out
    }

    pub fn adjoint(&self) -> SparseOperator {
        let triplets: Vec<_> = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        SparseOperator::from_triplets(self.space.clone(), triplets)
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_space(other)?;
        let dim = self.dim();
        let mut scratch: Vec<C64> = vec![C64::new(0.0, 0.0); dim];
        let mut occupied = vec![false; dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
        for r in 0..dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let m = self.cols[k];
                let v = self.vals[k];
                for j in other.row_ptr[m]..other.row_ptr[m + 1] {
                    let c = other.cols[j];
                    if !occupied[c] {
                        occupied[c] = true;
                        touched.push(c);
                    }
                    scratch[c] += v * other.vals[j];
                }
            }
            for &c in &touched {
                triplets.push((r, c, scratch[c]));
                scratch[c] = C64::new(0.0, 0.0);
                occupied[c] = false;
            }
            touched.clear();
        }
        Ok(SparseOperator::from_triplets(self.space.clone(), triplets))
    }

    /// `AB - BA`, canonicalized.
    pub fn commutator(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// `AB + BA`.
    pub fn anticommutator(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.matmul(other)?.add(&other.matmul(self)?)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum (induced infinity norm).
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim())
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }

    /// Diagonal as a dense vector (off-diagonal entries ignored).
    pub fn diagonal(&self) -> Vec<C64> {
        let mut d = vec![C64::new(0.0, 0.0); self.dim()];
        for (r, c, v) in self.entries() {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(space: Arc<HilbertSpace>, m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), space.dim());
        assert_eq!(m.ncols(), space.dim());
        let triplets: Vec<_> = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c, m[(r, c)])))
            .filter(|(_, _, v)| v.norm() > DROP_TOL)
            .collect();
        Self::from_triplets(space, triplets)
    }

    /// `out += alpha * self * v`.
    pub fn apply_vec(&self, v: &DVector<C64>, out: &mut DVector<C64>, alpha: C64) {
        for r in 0..self.dim() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            out[r] += alpha * acc;
        }
    }

    pub fn mul_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim());
        self.apply_vec(v, &mut out, C64::new(1.0, 0.0));
        out
    }

    /// `out += alpha * self * m` (dense, column-major friendly).
    pub fn apply_left(&self, m: &DMatrix<C64>, out: &mut DMatrix<C64>, alpha: C64) {
        let dim = self.dim();
        for j in 0..m.ncols() {
            let col = m.column(j);
            for r in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * col[self.cols[k]];
                }
                out[(r, j)] += alpha * acc;
            }
        }
    }

    /// `out += alpha * m * self`.
    pub fn apply_right(&self, m: &DMatrix<C64>, out: &mut DMatrix<C64>, alpha: C64) {
        for (k, j, v) in self.entries() {
            let scaled = alpha * v;
            let src = m.column(k);
            let mut dst = out.column_mut(j);
            dst.axpy(scaled, &src, C64::new(1.0, 0.0));
        }
    }

    /// Expectation value on a pure state, `<psi|A|psi>`.
    pub fn expect_vec(&self, psi: &DVector<C64>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (r, c, v) in self.entries() {
            acc += psi[r].conj() * v * psi[c];
        }
        acc
    }

    /// `tr(A rho)` for a dense density matrix.
    pub fn expect_dense(&self, rho: &DMatrix<C64>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (r, c, v) in self.entries() {
            acc += v * rho[(c, r)];
        }
        acc
    }

    /// Golden-test text dump: one line `row col re im` per entry, sorted by
    /// (row, col), 17 significant digits.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for (r, c, v) in self.entries() {
            out.push_str(&format!("{} {} {:.16e} {:.16e}\n", r, c, v.re, v.im));
        }
        out
    }

    pub fn parse_text(space: Arc<HilbertSpace>, text: &str) -> Result<Self> {
        let mut triplets = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse_err = || Error::Config(format!("operator dump line {} malformed", n + 1));
            let r: usize = it.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
            let c: usize = it.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
            let re: f64 = it.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
            let im: f64 = it.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
            triplets.push((r, c, C64::new(re, im)));
        }
        Ok(Self::from_triplets(space, triplets))
    }
}

/// Pure state over a Hilbert space.
#[derive(Debug, Clone)]
pub struct StateVector {
    space: Arc<HilbertSpace>,
    pub amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(space: Arc<HilbertSpace>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { op: space.dim(), state: amplitudes.len() });
        }
        Ok(Self { space, amplitudes })
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(space: Arc<HilbertSpace>, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { space, amplitudes }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { space: self.space.clone(), amplitudes: self.amplitudes.clone() / C64::new(n, 0.0) }
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Outer product `|psi><psi|` as a density matrix.
    pub fn density(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { space: self.space.clone(), matrix: m }
    }
}

/// Dense density matrix. Kept dense: every model in this crate fits well
/// below dim 4096.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: Arc<HilbertSpace>,
    pub matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(space: Arc<HilbertSpace>, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { op: space.dim(), state: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diagonal().sum()
    }

    /// Max-abs deviation from `rho = rho^dagger`.
    pub fn hermiticity_violation(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                max = max.max(d);
            }
        }
        max
    }

    /// Smallest eigenvalue (diagnostic; positivity means >= -tol).
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.matrix.clone().symmetric_eigen();
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Common expectation-value interface for pure and mixed states.
pub trait QuantumState {
    fn state_space(&self) -> &Arc<HilbertSpace>;
    fn expect(&self, op: &SparseOperator) -> Result<C64>;
}

impl QuantumState for StateVector {
    fn state_space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    fn expect(&self, op: &SparseOperator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { op: op.dim(), state: self.dim() });
        }
        Ok(op.expect_vec(&self.amplitudes))
    }
}

impl QuantumState for DensityMatrix {
    fn state_space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    fn expect(&self, op: &SparseOperator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { op: op.dim(), state: self.dim() });
        }
        Ok(op.expect_dense(&self.matrix))
    }
}
