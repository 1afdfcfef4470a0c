//! Sparse complex operators (CSR) on a Fock basis.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::Basis;

#[derive(Debug, Clone)]
pub struct Operator {
    basis: Arc<Basis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Operator {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(basis: Arc<Basis>, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        let dim = basis.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.max(c) + 1,
            });
        }
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = Operator {
            basis,
            row_ptr,
            cols,
            vals,
        };
        op.prune();
        Ok(op)
    }

    fn prune(&mut self) {
        if self.vals.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return;
        }
        let dim = self.dim();
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != C64::new(0.0, 0.0) {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn zero(basis: Arc<Basis>) -> Self {
        let dim = basis.dim();
        Operator {
            basis,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(basis: Arc<Basis>) -> Self {
        let dim = basis.dim();
        let triplets = (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Self::from_triplets(basis, triplets).expect("diagonal fits")
    }

    /// Annihilation operator of `mode`: `<.., n-1, ..| a |.., n, ..> = sqrt(n)`.
    /// Matrix elements leading outside the truncated basis are dropped.
    pub fn annihilation(basis: Arc<Basis>, mode: usize) -> Result<Self> {
        basis.check_mode(mode)?;
        let mut triplets = Vec::new();
        let mut occ = vec![0u16; basis.n_modes()];
        for col in 0..basis.dim() {
            occ.copy_from_slice(basis.state(col));
            let n = occ[mode];
            if n == 0 {
                continue;
            }
            occ[mode] -= 1;
            if let Some(row) = basis.index_of(&occ) {
                triplets.push((row, col, C64::new((n as f64).sqrt(), 0.0)));
            }
        }
        Self::from_triplets(basis, triplets)
    }

    pub fn creation(basis: Arc<Basis>, mode: usize) -> Result<Self> {
        Ok(Self::annihilation(basis, mode)?.adjoint())
    }

    /// `a^dag a` of `mode`, built diagonally.
    pub fn number(basis: Arc<Basis>, mode: usize) -> Result<Self> {
        basis.check_mode(mode)?;
        let triplets = (0..basis.dim())
            .map(|i| (i, i, C64::new(basis.state(i)[mode] as f64, 0.0)))
            .collect();
        Self::from_triplets(basis, triplets)
    }

    /// Total excitation number `sum_i a_i^dag a_i`.
    pub fn total_number(basis: Arc<Basis>) -> Self {
        let triplets = (0..basis.dim())
            .map(|i| (i, i, C64::new(basis.excitations(i) as f64, 0.0)))
            .collect();
        Self::from_triplets(basis, triplets).expect("diagonal fits")
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub(crate) fn row(&self, r: usize) -> (&[usize], &[C64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let (cols, vals) = self.row(row);
        match cols.binary_search(&col) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.basis.clone(), triplets).expect("same shape")
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.prune();
        out
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_basis(other)?;
        let triplets = self.iter().chain(other.iter()).collect();
        Self::from_triplets(self.basis.clone(), triplets)
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Sparse product `self * other`.
    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_basis(other)?;
        let mut triplets = Vec::new();
        let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
        for r in 0..self.dim() {
            acc.clear();
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&c, &b) in ocols.iter().zip(ovals) {
                    *acc.entry(c).or_insert(C64::new(0.0, 0.0)) += a * b;
                }
            }
            triplets.extend(acc.iter().map(|(&c, &v)| (r, c, v)));
        }
        Self::from_triplets(self.basis.clone(), triplets)
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &a)| a * v[c]).sum()
            }),
        ))
    }

    /// Sparse-times-dense product `self * m`.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if m.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: m.nrows(),
            });
        }
        let mut out = DMatrix::zeros(self.dim(), m.ncols());
        for c in 0..m.ncols() {
            let src = m.column(c);
            let mut dst = out.column_mut(c);
            for r in 0..self.dim() {
                let (cols, vals) = self.row(r);
                let mut acc = C64::new(0.0, 0.0);
                for (&k, &a) in cols.iter().zip(vals) {
                    acc += a * src[k];
                }
                dst[r] = acc;
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    /// `max |A - A^dag|` over the stored entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest absolute stored entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, Float::max)
    }

    fn check_basis(&self, other: &Operator) -> Result<()> {
        if self.basis != other.basis {
            Err(Error::BasisMismatch)
        } else {
            Ok(())
        }
    }
}
