//! Sparse operators on the composite space of `L` two-level emitters and one
//! truncated bosonic mode.
//!
//! Basis ordering is `spin_1 ⊗ spin_2 ⊗ … ⊗ spin_L ⊗ cavity` with spin 1 the
//! slowest-varying index. A single spin uses `{|↑⟩, |↓⟩}` as indices `{0, 1}`,
//! so `Z = diag(+1, −1)`. The cavity keeps Fock states `|0⟩ … |n_max − 1⟩`.

use std::fmt;

use faer::Mat;
use num_complex::Complex64;

use crate::{Error, Result};

/// Entries with modulus at or below this value are never stored.
pub const DROP_TOLERANCE: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Shape of the composite Hilbert space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceDescriptor {
    num_spins: usize,
    fock_dim: usize,
}

impl SpaceDescriptor {
    pub fn new(num_spins: usize, fock_dim: usize) -> Result<Self> {
        if num_spins == 0 {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: "at least one emitter is required".into(),
            });
        }
        if fock_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "n_max",
                reason: "at least one Fock state is required".into(),
            });
        }
        if num_spins > 24 {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: format!("{num_spins} emitters exceed the supported maximum of 24"),
            });
        }
        Ok(Self { num_spins, fock_dim })
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    /// `2^L`.
    pub fn spin_dim(&self) -> usize {
        1 << self.num_spins
    }

    /// `2^L · n_max`.
    pub fn dim(&self) -> usize {
        self.spin_dim() * self.fock_dim
    }

    pub fn index(&self, spin: usize, photons: usize) -> usize {
        spin * self.fock_dim + photons
    }

    /// Inverse of [`SpaceDescriptor::index`]: `(spin configuration, photon number)`.
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.fock_dim, index % self.fock_dim)
    }

    /// Bit mask of `site` (1-based) inside a spin configuration. A set bit means ↓.
    pub fn site_mask(&self, site: usize) -> usize {
        1 << (self.num_spins - site)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.num_spins {
            Err(Error::SiteOutOfRange { site, num_spins: self.num_spins })
        } else {
            Ok(())
        }
    }
}

/// Number of ↑ spins in a configuration.
pub fn count_up(spin: usize, num_spins: usize) -> usize {
    num_spins - spin.count_ones() as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinKind {
    X,
    Y,
    Z,
    /// `σ† = (X + iY)/2`, maps ↓ to ↑.
    Raise,
    /// `σ = (X − iY)/2`, maps ↑ to ↓.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BosonKind {
    Annihilate,
    Create,
    Number,
}

/// Complex sparse matrix in compressed-row layout.
#[derive(Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl fmt::Debug for SparseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseOperator")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("nnz", &self.nnz())
            .finish()
    }
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// near-zero results dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut triplets: Vec<_> = triplets.into_iter().collect();
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.norm() > DROP_TOLERANCE {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { rows, cols, row_ptr, col_idx, values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_ptr: vec![0; rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![ONE; dim])
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length of a square operator.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_triplets(self.rows, self.cols, self.iter().map(|(r, c, v)| (r, c, v * factor)))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    pub fn conj(&self) -> Self {
        Self::from_triplets(self.rows, self.cols, self.iter().map(|(r, c, v)| (r, c, v.conj())))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(Self::from_triplets(self.rows, self.cols, self.iter().chain(other.iter())))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(Self::from_triplets(
            self.rows,
            self.cols,
            self.iter().chain(other.iter().map(|(r, c, v)| (r, c, -v))),
        ))
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut triplets = Vec::new();
        let mut acc = vec![ZERO; other.cols];
        let mut touched = Vec::new();
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if acc[c] == ZERO {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = ZERO;
            }
            touched.clear();
        }
        Ok(Self::from_triplets(self.rows, other.cols, triplets))
    }

    /// Kronecker product `self ⊗ other`; `self` carries the slower index.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.iter() {
            for (r2, c2, v2) in other.iter() {
                triplets.push((r1 * other.rows + r2, c1 * other.cols + c2, v1 * v2));
            }
        }
        Self::from_triplets(rows, cols, triplets)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// `out = self · x`.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.rows];
        self.apply(x, &mut out);
        out
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut m = Mat::<Complex64>::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(m: &Mat<Complex64>) -> Self {
        let mut triplets = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                triplets.push((r, c, m[(r, c)]));
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), triplets)
    }

    /// Largest entry of `A − A†`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.iter().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            Err(Error::DimensionMismatch {
                op,
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            })
        } else {
            Ok(())
        }
    }
}

/// Sparse arithmetic selector used by [`compose`].
#[derive(Clone, Copy, Debug)]
pub enum Compose {
    Add,
    Multiply,
    Scale(Complex64),
    Adjoint,
    Kron,
}

/// Binary/unary sparse arithmetic in one entry point. Unary variants ignore `b`.
pub fn compose(a: &SparseOperator, b: &SparseOperator, op: Compose) -> Result<SparseOperator> {
    match op {
        Compose::Add => a.add(b),
        Compose::Multiply => a.matmul(b),
        Compose::Scale(s) => Ok(a.scale(s)),
        Compose::Adjoint => Ok(a.adjoint()),
        Compose::Kron => Ok(a.kron(b)),
    }
}

fn single_spin(kind: SpinKind) -> SparseOperator {
    let i = Complex64::i();
    let t: Vec<(usize, usize, Complex64)> = match kind {
        SpinKind::X => vec![(0, 1, ONE), (1, 0, ONE)],
        SpinKind::Y => vec![(0, 1, -i), (1, 0, i)],
        SpinKind::Z => vec![(0, 0, ONE), (1, 1, -ONE)],
        SpinKind::Raise => vec![(0, 1, ONE)],
        SpinKind::Lower => vec![(1, 0, ONE)],
    };
    SparseOperator::from_triplets(2, 2, t)
}

/// Truncated single-mode operator on `n_max` Fock states.
pub fn mode_operator(fock_dim: usize, kind: BosonKind) -> SparseOperator {
    let sqrt = |n: usize| Complex64::new((n as f64).sqrt(), 0.0);
    let t: Vec<_> = match kind {
        BosonKind::Annihilate => (1..fock_dim).map(|n| (n - 1, n, sqrt(n))).collect(),
        BosonKind::Create => (1..fock_dim).map(|n| (n, n - 1, sqrt(n))).collect(),
        BosonKind::Number => (0..fock_dim).map(|n| (n, n, Complex64::new(n as f64, 0.0))).collect(),
    };
    SparseOperator::from_triplets(fock_dim, fock_dim, t)
}

/// Single-site Pauli or ladder operator embedded as `I ⊗ … ⊗ P_site ⊗ … ⊗ I ⊗ I_cavity`.
pub fn spin_operator(desc: &SpaceDescriptor, site: usize, kind: SpinKind) -> Result<SparseOperator> {
    desc.check_site(site)?;
    let left = SparseOperator::identity(1 << (site - 1));
    let right = SparseOperator::identity((1 << (desc.num_spins - site)) * desc.fock_dim);
    Ok(left.kron(&single_spin(kind)).kron(&right))
}

/// Cavity operator embedded as `I_spins ⊗ op`.
pub fn boson_operator(desc: &SpaceDescriptor, kind: BosonKind) -> SparseOperator {
    SparseOperator::identity(desc.spin_dim()).kron(&mode_operator(desc.fock_dim, kind))
}

/// Operator acting on the spins only, without the cavity factor.
pub fn spin_only_operator(num_spins: usize, site: usize, kind: SpinKind) -> Result<SparseOperator> {
    if site == 0 || site > num_spins {
        return Err(Error::SiteOutOfRange { site, num_spins });
    }
    let left = SparseOperator::identity(1 << (site - 1));
    let right = SparseOperator::identity(1 << (num_spins - site));
    Ok(left.kron(&single_spin(kind)).kron(&right))
}
