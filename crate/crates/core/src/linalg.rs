//! Exact linear algebra over GF(p): sparse vectors, incremental echelon
//! forms, kernels and solvers.
//!
//! Matrices enter as triplet lists and are reduced column by column. Below
//! [`DENSE_COLUMN_THRESHOLD`] coordinates the working vector is densified
//! during reduction; above it reduction stays purely sparse. Pivoting is by
//! smallest coordinate index, so callers control pivot preference through
//! the order in which they lay out their basis.

use crate::coeffs::{FieldScalar, PrimeP};

pub const DENSE_COLUMN_THRESHOLD: usize = 512;

/// Sorted sparse vector over GF(p); indices strictly increasing, no zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseVec {
    pub entries: Vec<(usize, FieldScalar)>,
}

impl SparseVec {
    pub fn zero() -> Self {
        SparseVec { entries: Vec::new() }
    }

    pub fn unit(i: usize) -> Self {
        SparseVec { entries: vec![(i, FieldScalar::ONE)] }
    }

    /// Build from (index, value) pairs. Indices must be distinct; merging
    /// coincident indices would need the modulus, which callers that
    /// accumulate coordinates track themselves.
    pub fn from_entries(mut entries: Vec<(usize, FieldScalar)>) -> Self {
        entries.retain(|(_, s)| !s.is_zero());
        entries.sort_by_key(|&(i, _)| i);
        debug_assert!(
            entries.windows(2).all(|w| w[0].0 != w[1].0),
            "duplicate coordinate index in sparse vector"
        );
        SparseVec { entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn leading(&self) -> Option<usize> {
        self.entries.first().map(|&(i, _)| i)
    }

    pub fn get(&self, i: usize) -> FieldScalar {
        match self.entries.binary_search_by_key(&i, |&(j, _)| j) {
            Ok(k) => self.entries[k].1,
            Err(_) => FieldScalar::ZERO,
        }
    }

    pub fn scale(&self, c: FieldScalar, p: PrimeP) -> SparseVec {
        if c.is_zero() {
            return SparseVec::zero();
        }
        SparseVec {
            entries: self.entries.iter().map(|&(i, s)| (i, p.mul(s, c))).collect(),
        }
    }

    /// `self + c * other`, merging sorted entry lists.
    pub fn add_scaled(&self, other: &SparseVec, c: FieldScalar, p: PrimeP) -> SparseVec {
        if c.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (0usize, 0usize);
        while a < self.entries.len() || b < other.entries.len() {
            let ia = self.entries.get(a).map(|&(i, _)| i);
            let ib = other.entries.get(b).map(|&(i, _)| i);
            match (ia, ib) {
                (Some(i), Some(j)) if i == j => {
                    let s = p.add(self.entries[a].1, p.mul(other.entries[b].1, c));
                    if !s.is_zero() {
                        out.push((i, s));
                    }
                    a += 1;
                    b += 1;
                }
                (Some(i), Some(j)) if i < j => {
                    out.push(self.entries[a]);
                    a += 1;
                }
                (Some(_), Some(j)) => {
                    let s = p.mul(other.entries[b].1, c);
                    out.push((j, s));
                    b += 1;
                }
                (Some(_), None) => {
                    out.push(self.entries[a]);
                    a += 1;
                }
                (None, Some(j)) => {
                    out.push((j, p.mul(other.entries[b].1, c)));
                    b += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        SparseVec { entries: out }
    }
}

/// Incrementally maintained reduced echelon basis of a subspace.
///
/// Rows are monic at their pivot, pivots strictly increasing, and every row
/// is fully reduced against every other, so membership tests and reduced
/// representatives are canonical.
#[derive(Debug, Clone)]
pub struct Echelon {
    p: PrimeP,
    dim: usize,
    rows: Vec<SparseVec>,
}

impl Echelon {
    pub fn new(p: PrimeP, dim: usize) -> Self {
        Echelon { p, dim, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.leading().unwrap()).collect()
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Fully reduce `v` against the current rows.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        if self.dim <= DENSE_COLUMN_THRESHOLD {
            self.reduce_dense(v)
        } else {
            self.reduce_sparse(v)
        }
    }

    fn reduce_dense(&self, v: &SparseVec) -> SparseVec {
        let mut work = vec![FieldScalar::ZERO; self.dim];
        for &(i, s) in &v.entries {
            work[i] = s;
        }
        for row in &self.rows {
            let piv = row.leading().unwrap();
            let c = work[piv];
            if c.is_zero() {
                continue;
            }
            for &(i, s) in &row.entries {
                work[i] = self.p.sub(work[i], self.p.mul(s, c));
            }
        }
        SparseVec {
            entries: work
                .into_iter()
                .enumerate()
                .filter(|(_, s)| !s.is_zero())
                .collect(),
        }
    }

    fn reduce_sparse(&self, v: &SparseVec) -> SparseVec {
        let mut acc = v.clone();
        for row in &self.rows {
            let piv = row.leading().unwrap();
            let c = acc.get(piv);
            if !c.is_zero() {
                acc = acc.add_scaled(row, self.p.neg(c), self.p);
            }
        }
        acc
    }

    /// Reduce and, if independent, insert. Returns the new pivot.
    pub fn insert(&mut self, v: &SparseVec) -> Option<usize> {
        let red = self.reduce(v);
        if red.is_zero() {
            return None;
        }
        let lead = red.leading().unwrap();
        let inv = self.p.inv(red.get(lead)).expect("pivot is nonzero");
        let monic = red.scale(inv, self.p);
        // keep full reduction: clear the new pivot from existing rows
        for row in &mut self.rows {
            let c = row.get(lead);
            if !c.is_zero() {
                *row = row.add_scaled(&monic, self.p.neg(c), self.p);
            }
        }
        let pos = self
            .rows
            .binary_search_by_key(&lead, |r| r.leading().unwrap())
            .unwrap_err();
        self.rows.insert(pos, monic);
        Some(lead)
    }
}

/// Sparse matrix assembled from triplets; columns are the images of the
/// domain basis vectors.
#[derive(Debug, Clone)]
pub struct GfMatrix {
    pub p: PrimeP,
    pub nrows: usize,
    pub ncols: usize,
    cols: Vec<SparseVec>,
}

impl GfMatrix {
    pub fn from_triplets(p: PrimeP, nrows: usize, ncols: usize, trip: &[(usize, usize, FieldScalar)]) -> Self {
        let mut cols: Vec<Vec<(usize, FieldScalar)>> = vec![Vec::new(); ncols];
        for &(r, c, s) in trip {
            debug_assert!(r < nrows && c < ncols);
            if !s.is_zero() {
                cols[c].push((r, s));
            }
        }
        GfMatrix {
            p,
            nrows,
            ncols,
            cols: cols.into_iter().map(SparseVec::from_entries).collect(),
        }
    }

    pub fn column(&self, c: usize) -> &SparseVec {
        &self.cols[c]
    }

    pub fn rank(&self) -> usize {
        let mut ech = Echelon::new(self.p, self.nrows);
        for col in &self.cols {
            ech.insert(col);
        }
        ech.rank()
    }

    pub fn image_echelon(&self) -> Echelon {
        let mut ech = Echelon::new(self.p, self.nrows);
        for col in &self.cols {
            ech.insert(col);
        }
        ech
    }

    /// Kernel basis in domain coordinates. Columns are processed in order;
    /// each dependent column yields one kernel vector whose last nonzero
    /// domain coordinate is that column, so the output is deterministic and
    /// triangular.
    pub fn kernel_basis(&self) -> Vec<SparseVec> {
        let mut tracked = TrackedReducer::new(self.p);
        let mut kernel = Vec::new();
        for (j, col) in self.cols.iter().enumerate() {
            if let Some(combo) = tracked.insert(j, col) {
                kernel.push(combo);
            }
        }
        kernel
    }

    /// One solution of `A x = b` (free coordinates zero), if consistent.
    pub fn solve(&self, b: &SparseVec) -> Option<SparseVec> {
        let mut tracked = TrackedReducer::new(self.p);
        for (j, col) in self.cols.iter().enumerate() {
            tracked.insert(j, col);
        }
        tracked.express(b)
    }
}

/// Echelon of image vectors with the domain combination that produced each
/// row, enabling kernel extraction and preimage solves.
pub struct TrackedReducer {
    p: PrimeP,
    rows: Vec<(SparseVec, SparseVec)>, // (image row, domain combo), image monic at pivot
}

impl TrackedReducer {
    pub fn new(p: PrimeP) -> Self {
        TrackedReducer { p, rows: Vec::new() }
    }

    fn reduce_with_combo(&self, v: &SparseVec, combo: SparseVec) -> (SparseVec, SparseVec) {
        let mut img = v.clone();
        let mut cmb = combo;
        for (row, rc) in &self.rows {
            let piv = row.leading().unwrap();
            let c = img.get(piv);
            if !c.is_zero() {
                let nc = self.p.neg(c);
                img = img.add_scaled(row, nc, self.p);
                cmb = cmb.add_scaled(rc, nc, self.p);
            }
        }
        (img, cmb)
    }

    /// Feed the image of domain vector `j`. Returns a kernel combination if
    /// the image is dependent on what came before.
    pub fn insert(&mut self, j: usize, image: &SparseVec) -> Option<SparseVec> {
        let (img, cmb) = self.reduce_with_combo(image, SparseVec::unit(j));
        if img.is_zero() {
            return Some(cmb);
        }
        let lead = img.leading().unwrap();
        let inv = self.p.inv(img.get(lead)).expect("pivot is nonzero");
        let img = img.scale(inv, self.p);
        let cmb = cmb.scale(inv, self.p);
        let pos = self
            .rows
            .binary_search_by_key(&lead, |(r, _)| r.leading().unwrap())
            .unwrap_err();
        self.rows.insert(pos, (img, cmb));
        None
    }

    /// Express `b` as a combination of the inserted images, if possible.
    pub fn express(&self, b: &SparseVec) -> Option<SparseVec> {
        let (img, cmb) = self.reduce_with_combo(b, SparseVec::zero());
        if img.is_zero() {
            // cmb was built from subtractions, flip sign to solve A x = b
            Some(cmb.scale(self.p.neg(FieldScalar::ONE), self.p))
        } else {
            None
        }
    }
}
