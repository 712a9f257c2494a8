//! Dense matrices over an exact [`Field`] and Gaussian elimination.

use std::fmt;

use thiserror::Error;

use crate::field::Field;
use crate::subspace::Subspace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
}

/// Row-major dense matrix that carries its field.
#[derive(Clone)]
pub struct Matrix<F: Field> {
    field: F,
    rows: usize,
    cols: usize,
    data: Vec<F::Elem>,
}

impl<F: Field> PartialEq for Matrix<F> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}
impl<F: Field> Eq for Matrix<F> {}

impl<F: Field> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(r).iter().map(|x| self.field.format_elem(x)).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Result of row reduction.
#[derive(Debug, Clone)]
pub struct Rref<F: Field> {
    pub matrix: Matrix<F>,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(field: &F, rows: usize, cols: usize) -> Self {
        Matrix { field: field.clone(), rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: &F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = field.one();
        }
        m
    }

    pub fn from_vec(field: &F, rows: usize, cols: usize, data: Vec<F::Elem>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::Shape(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Matrix { field: field.clone(), rows, cols, data })
    }

    pub fn from_rows(field: &F, rows: &[Vec<F::Elem>]) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(MatrixError::Shape("ragged rows".into()));
        }
        Ok(Matrix { field: field.clone(), rows: r, cols: c, data: rows.concat() })
    }

    /// Builds from small integers, reduced into the field.
    pub fn from_ints(field: &F, rows: &[&[i64]]) -> Self {
        let data: Vec<Vec<F::Elem>> = rows.iter().map(|r| r.iter().map(|&x| field.from_i64(x)).collect()).collect();
        Self::from_rows(field, &data).expect("rectangular integer matrix")
    }

    /// The matrix unit `e_{i,j}` (0-based indices).
    pub fn unit(field: &F, n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        m.data[i * n + j] = field.one();
        m
    }

    pub fn diagonal(field: &F, diag: &[F::Elem]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(field, n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = d.clone();
        }
        m
    }

    pub fn field(&self) -> &F {
        &self.field
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn data(&self) -> &[F::Elem] {
        &self.data
    }
    pub fn into_data(self) -> Vec<F::Elem> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &F::Elem {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: F::Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[F::Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<F::Elem> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<F::Elem>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| self.field.is_zero(x))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c).clone();
            }
        }
        t
    }

    pub fn map_entries<G: Field>(&self, target: &G, f: impl Fn(&F::Elem) -> G::Elem) -> Matrix<G> {
        Matrix { field: target.clone(), rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&F::Elem, &F::Elem) -> F::Elem) -> Result<Self, MatrixError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Ok(Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, MatrixError> {
        self.zip_with(other, |a, b| self.field.add(a, b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, MatrixError> {
        self.zip_with(other, |a, b| self.field.sub(a, b))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if f.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = f.mul_add(&out.data[idx], a, other.get(k, j));
                }
            }
        }
        Ok(out)
    }

    /// Panicking product for shapes known to agree.
    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("matrix shapes agree")
    }
    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("matrix shapes agree")
    }
    pub fn sub(&self, other: &Self) -> Self {
        self.try_sub(other).expect("matrix shapes agree")
    }

    pub fn scale(&self, s: &F::Elem) -> Self {
        let data = self.data.iter().map(|x| self.field.mul(x, s)).collect();
        Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> Self {
        let data = self.data.iter().map(|x| self.field.neg(x)).collect();
        Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn mul_vec(&self, v: &[F::Elem]) -> Vec<F::Elem> {
        assert_eq!(v.len(), self.cols);
        let f = &self.field;
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(f.zero(), |acc, (a, b)| f.mul_add(&acc, a, b))
            })
            .collect()
    }

    pub fn pow(&self, mut e: u64) -> Self {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Self::identity(&self.field, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let f = &self.field;
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Self::zeros(f, r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, f.mul(self.get(i, j), other.get(k, l)));
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut out = Self::zeros(&self.field, self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out.set(self.rows + i, self.cols + j, other.get(i, j).clone());
            }
        }
        out
    }

    /// Reduced row echelon form. Pivots are the first nonzero entry scanning
    /// columns left to right, rows processed top-down.
    pub fn rref(&self) -> Rref<F> {
        let f = &self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut prow = 0;
        for col in 0..m.cols {
            if prow == m.rows {
                break;
            }
            let Some(sel) = (prow..m.rows).find(|&r| !f.is_zero(m.get(r, col))) else {
                continue;
            };
            m.swap_rows(prow, sel);
            let inv = f.inv(m.get(prow, col)).expect("pivot is nonzero");
            for c in col..m.cols {
                let v = f.mul(m.get(prow, c), &inv);
                m.set(prow, c, v);
            }
            for r in 0..m.rows {
                if r == prow {
                    continue;
                }
                let factor = m.get(r, col).clone();
                if f.is_zero(&factor) {
                    continue;
                }
                for c in col..m.cols {
                    let v = f.sub(m.get(r, c), &f.mul(&factor, m.get(prow, c)));
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            prow += 1;
        }
        Rref { matrix: m, rank: prow, pivots }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// `{x : Mx = 0}` in canonical form.
    pub fn kernel(&self) -> Subspace<F> {
        let f = &self.field;
        let Rref { matrix: r, rank, pivots } = self.rref();
        let mut basis = Vec::with_capacity(self.cols - rank);
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![f.zero(); self.cols];
            v[free] = f.one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(r.get(row, free));
            }
            basis.push(v);
        }
        Subspace::from_spanning(f, self.cols, basis)
    }

    pub fn row_space(&self) -> Subspace<F> {
        Subspace::from_spanning(&self.field, self.cols, self.row_vecs())
    }

    pub fn inverse(&self) -> Result<Self, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let f = &self.field;
        let mut aug = Self::zeros(f, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, f.one());
        }
        let r = aug.rref();
        if n > 0 && (r.rank < n || r.pivots[n - 1] != n - 1) {
            return Err(MatrixError::Singular);
        }
        let mut inv = Self::zeros(f, n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.matrix.get(i, n + j).clone());
            }
        }
        Ok(inv)
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn determinant(&self) -> Result<F::Elem, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let f = &self.field;
        let n = self.rows;
        let mut m = self.clone();
        let mut det = f.one();
        for col in 0..n {
            let Some(sel) = (col..n).find(|&r| !f.is_zero(m.get(r, col))) else {
                return Ok(f.zero());
            };
            if sel != col {
                m.swap_rows(sel, col);
                det = f.neg(&det);
            }
            let piv = m.get(col, col).clone();
            det = f.mul(&det, &piv);
            let inv = f.inv(&piv).expect("nonzero");
            for r in col + 1..n {
                let factor = f.mul(m.get(r, col), &inv);
                if f.is_zero(&factor) {
                    continue;
                }
                for c in col..n {
                    let v = f.sub(m.get(r, c), &f.mul(&factor, m.get(col, c)));
                    m.set(r, c, v);
                }
            }
        }
        Ok(det)
    }

    pub fn trace(&self) -> F::Elem {
        let f = &self.field;
        (0..self.rows.min(self.cols)).fold(f.zero(), |acc, i| f.add(&acc, self.get(i, i)))
    }

    /// Characteristic polynomial `det(xI - M)`, coefficients low degree first.
    /// Division-free (Berkowitz recurrence on leading principal minors).
    pub fn charpoly(&self) -> Result<Vec<F::Elem>, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let f = &self.field;
        let n = self.rows;
        // Berkowitz: p_{k} from p_{k-1} via Toeplitz vector of the k-th minor.
        let mut poly: Vec<F::Elem> = vec![f.one()]; // high degree first
        for k in 0..n {
            // A_k = leading (k+1)x(k+1); split off last row/col.
            let a = self.get(k, k).clone();
            let r: Vec<F::Elem> = (0..k).map(|j| self.get(k, j).clone()).collect();
            let c: Vec<F::Elem> = (0..k).map(|i| self.get(i, k).clone()).collect();
            // t = [1, -a, -r c, -r M c, -r M^2 c, ...] length k+2
            let mut t = vec![f.one(), f.neg(&a)];
            let mut v = c.clone();
            for _ in 0..k {
                let rv = r.iter().zip(&v).fold(f.zero(), |acc, (x, y)| f.mul_add(&acc, x, y));
                t.push(f.neg(&rv));
                let mut nv = vec![f.zero(); k];
                for (i, slot) in nv.iter_mut().enumerate() {
                    for (j, vj) in v.iter().enumerate() {
                        *slot = f.mul_add(slot, self.get(i, j), vj);
                    }
                }
                v = nv;
            }
            let mut next = vec![f.zero(); poly.len() + 1];
            for (i, ti) in t.iter().enumerate() {
                for (j, pj) in poly.iter().enumerate() {
                    if i + j < next.len() {
                        next[i + j] = f.mul_add(&next[i + j], ti, pj);
                    }
                }
            }
            poly = next;
        }
        poly.reverse();
        Ok(poly)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }
}

/// Symmetry class of a square matrix with respect to transposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryKind {
    SymmetricNonalternating,
    Alternating,
    Neither,
}

/// Alternating means `pᵗ = -p` with zero diagonal; anything else with
/// `pᵗ = p` is symmetric-nonalternating.
pub fn symmetry_kind<F: Field>(p: &Matrix<F>) -> Result<SymmetryKind, MatrixError> {
    if !p.is_square() {
        return Err(MatrixError::NotSquare { rows: p.rows(), cols: p.cols() });
    }
    let f = p.field();
    let t = p.transpose();
    let zero_diag = (0..p.rows()).all(|i| f.is_zero(p.get(i, i)));
    if t == p.neg() && zero_diag {
        Ok(SymmetryKind::Alternating)
    } else if t == *p {
        Ok(SymmetryKind::SymmetricNonalternating)
    } else {
        Ok(SymmetryKind::Neither)
    }
}


/// Incremental echelon basis over sparse rows; rows are keyed by their
/// leading column. Used for large homogeneous systems with few nonzeros per
/// equation.
pub struct SparseEchelon<F: Field> {
    field: F,
    nvars: usize,
    rows: std::collections::BTreeMap<usize, Vec<(usize, F::Elem)>>,
}

impl<F: Field> SparseEchelon<F> {
    pub fn new(field: &F, nvars: usize) -> Self {
        SparseEchelon { field: field.clone(), nvars, rows: Default::default() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds an equation `Σ coeff·x_var = 0`; duplicate variables are summed.
    /// Returns true if it was independent of those already present.
    pub fn push(&mut self, terms: &[(usize, F::Elem)]) -> bool {
        let f = &self.field;
        let mut acc: std::collections::BTreeMap<usize, F::Elem> = Default::default();
        for (v, c) in terms {
            assert!(*v < self.nvars);
            let e = acc.entry(*v).or_insert_with(|| f.zero());
            *e = f.add(e, c);
        }
        let mut row: Vec<(usize, F::Elem)> = acc.into_iter().filter(|(_, c)| !f.is_zero(c)).collect();
        loop {
            let Some((lead, lc)) = row.first().cloned() else {
                return false;
            };
            match self.rows.get(&lead) {
                None => {
                    let inv = f.inv(&lc).expect("nonzero lead");
                    for (_, c) in row.iter_mut() {
                        *c = f.mul(c, &inv);
                    }
                    self.rows.insert(lead, row);
                    return true;
                }
                Some(pivot_row) => {
                    row = sparse_axpy(f, &row, &f.neg(&lc), pivot_row);
                }
            }
        }
    }

    /// Basis of the solution space, in canonical form.
    pub fn solution_space(&self) -> Subspace<F> {
        let f = &self.field;
        // back-substitute into reduced form, highest pivot first
        let mut reduced: std::collections::BTreeMap<usize, Vec<(usize, F::Elem)>> = Default::default();
        for (&lead, row) in self.rows.iter().rev() {
            let mut r = row.clone();
            loop {
                let hit = r.iter().skip(1).find(|(c, _)| reduced.contains_key(c)).cloned();
                match hit {
                    None => break,
                    Some((c, coeff)) => r = sparse_axpy(f, &r, &f.neg(&coeff), &reduced[&c]),
                }
            }
            reduced.insert(lead, r);
        }
        let mut basis = Vec::new();
        for free in (0..self.nvars).filter(|c| !reduced.contains_key(c)) {
            let mut v = vec![f.zero(); self.nvars];
            v[free] = f.one();
            for (&lead, row) in &reduced {
                if let Some((_, c)) = row.iter().find(|(col, _)| *col == free) {
                    v[lead] = f.neg(c);
                }
            }
            basis.push(v);
        }
        Subspace::from_spanning(f, self.nvars, basis)
    }
}

/// `a + s·b` on sorted sparse rows, dropping zeros.
fn sparse_axpy<F: Field>(f: &F, a: &[(usize, F::Elem)], s: &F::Elem, b: &[(usize, F::Elem)]) -> Vec<(usize, F::Elem)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i == a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i].clone());
            i += 1;
        } else if take_b {
            let v = f.mul(s, &b[j].1);
            if !f.is_zero(&v) {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = f.mul_add(&a[i].1, s, &b[j].1);
            if !f.is_zero(&v) {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}
