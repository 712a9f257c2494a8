//! Finite-dimensional unital algebras with involution given by structure
//! constants, and the subalgebra closure they support.
//!
//! A subalgebra always contains the unit and is stable under the involution.
//! Plain associative algebras are encoded with the identity involution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{Field, FieldError, FieldSpec, Fq};
use crate::matrix::{Matrix, SparseEchelon};
use crate::subspace::Subspace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("structure constant index ({i}, {j}, {k}) out of range for dimension {dim}")]
    IndexOutOfRange { i: usize, j: usize, k: usize, dim: usize },
    #[error("product is not associative on basis triple ({0}, {1}, {2})")]
    NonAssociative(usize, usize, usize),
    #[error("involution does not reverse the product on basis pair ({0}, {1})")]
    NotAntiAutomorphism(usize, usize),
    #[error("involution does not square to the identity")]
    InvolutionOrder,
    #[error("involution does not fix the unit")]
    InvolutionMovesUnit,
    #[error("unit fails on basis element {0}")]
    BadUnit(usize),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("cannot base-change from characteristic {from} to {to}")]
    IncompatibleCharacteristic { from: u64, to: u64 },
}

/// Coordinates of an algebra element in the fixed basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlgElement<E>(pub Vec<E>);

impl<E> AlgElement<E> {
    pub fn coords(&self) -> &[E] {
        &self.0
    }
}

/// Unital algebra with involution over `F`.
#[derive(Clone, Debug)]
pub struct InvAlgebra<F: Field> {
    field: F,
    dim: usize,
    /// `table[i*dim + j]` lists `(k, c)` with `e_i e_j = Σ c e_k`.
    table: Vec<Vec<(usize, F::Elem)>>,
    /// `left[i]` lists `(j, terms)` for the nonzero products `e_i e_j`.
    left: Vec<Vec<(usize, Vec<(usize, F::Elem)>)>>,
    /// Column `j` holds the coordinates of `σ(e_j)`.
    involution: Matrix<F>,
    /// Sparse columns of the involution, for the hot path.
    inv_cols: Vec<Vec<(usize, F::Elem)>>,
    unit: Vec<F::Elem>,
}

impl<F: Field> InvAlgebra<F> {
    /// Validates unit, involution and associativity on basis elements.
    pub fn new(
        field: &F,
        dim: usize,
        products: impl IntoIterator<Item = (usize, usize, usize, F::Elem)>,
        involution: Matrix<F>,
        unit: Vec<F::Elem>,
    ) -> Result<Self, AlgebraError> {
        let alg = Self::new_unchecked(field, dim, products, involution, unit)?;
        alg.validate()?;
        Ok(alg)
    }

    /// Builds without the O(N³) axiom checks; shapes are still checked.
    pub fn new_unchecked(
        field: &F,
        dim: usize,
        products: impl IntoIterator<Item = (usize, usize, usize, F::Elem)>,
        involution: Matrix<F>,
        unit: Vec<F::Elem>,
    ) -> Result<Self, AlgebraError> {
        if involution.rows() != dim || involution.cols() != dim {
            return Err(AlgebraError::Shape(format!("involution must be {dim}x{dim}")));
        }
        if unit.len() != dim {
            return Err(AlgebraError::Shape(format!("unit must have length {dim}")));
        }
        let mut acc: Vec<BTreeMap<usize, F::Elem>> = vec![BTreeMap::new(); dim * dim];
        for (i, j, k, c) in products {
            if i >= dim || j >= dim || k >= dim {
                return Err(AlgebraError::IndexOutOfRange { i, j, k, dim });
            }
            let e = acc[i * dim + j].entry(k).or_insert_with(|| field.zero());
            *e = field.add(e, &c);
        }
        let table: Vec<Vec<(usize, F::Elem)>> = acc
            .into_iter()
            .map(|m| m.into_iter().filter(|(_, c)| !field.is_zero(c)).collect())
            .collect();
        let left = (0..dim)
            .map(|i| {
                (0..dim)
                    .filter(|&j| !table[i * dim + j].is_empty())
                    .map(|j| (j, table[i * dim + j].clone()))
                    .collect()
            })
            .collect();
        let inv_cols = (0..dim)
            .map(|j| {
                (0..dim)
                    .filter(|&k| !field.is_zero(involution.get(k, j)))
                    .map(|k| (k, involution.get(k, j).clone()))
                    .collect()
            })
            .collect();
        Ok(InvAlgebra { field: field.clone(), dim, table, left, involution, inv_cols, unit })
    }

    pub fn validate(&self) -> Result<(), AlgebraError> {
        let n = self.dim;
        let one = self.unit_element();
        for i in 0..n {
            let e = self.basis_element(i);
            if self.mul(&one, &e) != e || self.mul(&e, &one) != e {
                return Err(AlgebraError::BadUnit(i));
            }
        }
        let f = &self.field;
        let sq = self.involution.mul(&self.involution);
        if sq != Matrix::identity(f, n) {
            return Err(AlgebraError::InvolutionOrder);
        }
        if self.apply_involution(&one) != one {
            return Err(AlgebraError::InvolutionMovesUnit);
        }
        let basis: Vec<_> = (0..n).map(|i| self.basis_element(i)).collect();
        let sig: Vec<_> = basis.iter().map(|e| self.apply_involution(e)).collect();
        for i in 0..n {
            for j in 0..n {
                let lhs = self.apply_involution(&self.mul(&basis[i], &basis[j]));
                let rhs = self.mul(&sig[j], &sig[i]);
                if lhs != rhs {
                    return Err(AlgebraError::NotAntiAutomorphism(i, j));
                }
            }
        }
        let prods: Vec<Vec<_>> = (0..n).map(|i| (0..n).map(|j| self.mul(&basis[i], &basis[j])).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.mul(&prods[i][j], &basis[k]) != self.mul(&basis[i], &prods[j][k]) {
                        return Err(AlgebraError::NonAssociative(i, j, k));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn field(&self) -> &F {
        &self.field
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn involution(&self) -> &Matrix<F> {
        &self.involution
    }
    pub fn unit(&self) -> &[F::Elem] {
        &self.unit
    }

    /// Nonzero structure constants as `(i, j, k, c)`.
    pub fn structure_constants(&self) -> impl Iterator<Item = (usize, usize, usize, &F::Elem)> + '_ {
        self.table.iter().enumerate().flat_map(move |(ij, terms)| {
            let (i, j) = (ij / self.dim, ij % self.dim);
            terms.iter().map(move |(k, c)| (i, j, *k, c))
        })
    }

    pub fn unit_element(&self) -> AlgElement<F::Elem> {
        AlgElement(self.unit.clone())
    }

    pub fn zero_element(&self) -> AlgElement<F::Elem> {
        AlgElement(vec![self.field.zero(); self.dim])
    }

    pub fn basis_element(&self, i: usize) -> AlgElement<F::Elem> {
        let mut v = vec![self.field.zero(); self.dim];
        v[i] = self.field.one();
        AlgElement(v)
    }

    pub fn element(&self, coords: Vec<F::Elem>) -> Result<AlgElement<F::Elem>, AlgebraError> {
        if coords.len() != self.dim {
            return Err(AlgebraError::Shape(format!("element of length {} in dimension {}", coords.len(), self.dim)));
        }
        Ok(AlgElement(coords))
    }

    pub fn mul(&self, x: &AlgElement<F::Elem>, y: &AlgElement<F::Elem>) -> AlgElement<F::Elem> {
        let mut out = vec![self.field.zero(); self.dim];
        self.mul_into(&x.0, &y.0, &mut out);
        AlgElement(out)
    }

    pub fn add(&self, x: &AlgElement<F::Elem>, y: &AlgElement<F::Elem>) -> AlgElement<F::Elem> {
        AlgElement(x.0.iter().zip(&y.0).map(|(a, b)| self.field.add(a, b)).collect())
    }

    pub fn scale(&self, s: &F::Elem, x: &AlgElement<F::Elem>) -> AlgElement<F::Elem> {
        AlgElement(x.0.iter().map(|a| self.field.mul(s, a)).collect())
    }

    pub fn pow(&self, x: &AlgElement<F::Elem>, e: u32) -> AlgElement<F::Elem> {
        (0..e).fold(self.unit_element(), |acc, _| self.mul(&acc, x))
    }

    pub fn apply_involution(&self, x: &AlgElement<F::Elem>) -> AlgElement<F::Elem> {
        let mut out = vec![self.field.zero(); self.dim];
        self.involution_into(&x.0, &mut out);
        AlgElement(out)
    }

    #[inline]
    fn mul_into(&self, x: &[F::Elem], y: &[F::Elem], out: &mut [F::Elem]) {
        let f = &self.field;
        for o in out.iter_mut() {
            *o = f.zero();
        }
        for (i, xi) in x.iter().enumerate() {
            if f.is_zero(xi) {
                continue;
            }
            for (j, terms) in &self.left[i] {
                let yj = &y[*j];
                if f.is_zero(yj) {
                    continue;
                }
                let xy = f.mul(xi, yj);
                for (k, c) in terms {
                    out[*k] = f.mul_add(&out[*k], &xy, c);
                }
            }
        }
    }

    #[inline]
    fn involution_into(&self, x: &[F::Elem], out: &mut [F::Elem]) {
        let f = &self.field;
        for o in out.iter_mut() {
            *o = f.zero();
        }
        for (xj, col) in x.iter().zip(&self.inv_cols) {
            if f.is_zero(xj) {
                continue;
            }
            for (k, c) in col {
                out[*k] = f.mul_add(&out[*k], xj, c);
            }
        }
    }

    /// The smallest unital, involution-stable subalgebra containing `gens`.
    pub fn closure(&self, gens: &[AlgElement<F::Elem>]) -> SubalgebraSpan<F> {
        let mut ws = ClosureWorkspace::new(self);
        let refs: Vec<&[F::Elem]> = gens.iter().map(|g| g.0.as_slice()).collect();
        ws.run(self, &refs, None);
        SubalgebraSpan { space: Subspace::from_spanning(&self.field, self.dim, ws.rows.clone()) }
    }

    pub fn closure_dim(&self, gens: &[AlgElement<F::Elem>]) -> usize {
        let mut ws = ClosureWorkspace::new(self);
        let refs: Vec<&[F::Elem]> = gens.iter().map(|g| g.0.as_slice()).collect();
        ws.run(self, &refs, None)
    }

    pub fn generates(&self, gens: &[AlgElement<F::Elem>]) -> bool {
        let mut ws = ClosureWorkspace::new(self);
        let refs: Vec<&[F::Elem]> = gens.iter().map(|g| g.0.as_slice()).collect();
        ws.run(self, &refs, None) == self.dim
    }

    /// True iff `space` contains the unit and is closed under products and
    /// the involution.
    pub fn is_subalgebra(&self, space: &Subspace<F>) -> bool {
        if !space.contains(&self.unit) {
            return false;
        }
        let basis: Vec<_> = space.basis().iter().map(|v| AlgElement(v.clone())).collect();
        basis.iter().all(|b| space.contains(&self.apply_involution(b).0))
            && basis.iter().all(|a| basis.iter().all(|b| space.contains(&self.mul(a, b).0)))
    }

    /// Derivations commuting with the involution, as `N×N` matrices whose
    /// column `j` is the image of `e_j`.
    pub fn derivation_algebra(&self) -> (usize, Vec<Matrix<F>>) {
        let f = &self.field;
        let n = self.dim;
        let var = |l: usize, k: usize| l * n + k;
        let mut sys = SparseEchelon::new(f, n * n);
        // D(e_i e_j) = D(e_i) e_j + e_i D(e_j), coefficient of e_l
        for i in 0..n {
            for j in 0..n {
                let mut eqs: Vec<Vec<(usize, F::Elem)>> = vec![Vec::new(); n];
                for (k, c) in &self.table[i * n + j] {
                    for (l, eq) in eqs.iter_mut().enumerate() {
                        eq.push((var(l, *k), c.clone()));
                    }
                }
                for m in 0..n {
                    for (l, c) in &self.table[m * n + j] {
                        eqs[*l].push((var(m, i), f.neg(c)));
                    }
                    for (l, c) in &self.table[i * n + m] {
                        eqs[*l].push((var(m, j), f.neg(c)));
                    }
                }
                for eq in eqs {
                    sys.push(&eq);
                }
            }
        }
        // Dσ = σD
        for l in 0..n {
            for j in 0..n {
                let mut eq = Vec::new();
                for (m, s) in &self.inv_cols[j] {
                    eq.push((var(l, *m), s.clone()));
                }
                for m in 0..n {
                    let s = self.involution.get(l, m);
                    if !f.is_zero(s) {
                        eq.push((var(m, j), f.neg(s)));
                    }
                }
                sys.push(&eq);
            }
        }
        // D(1) = 0
        for l in 0..n {
            let eq: Vec<_> = self.unit.iter().enumerate().map(|(j, u)| (var(l, j), u.clone())).collect();
            sys.push(&eq);
        }
        let sol = sys.solution_space();
        let mats = sol
            .basis()
            .iter()
            .map(|v| Matrix::from_vec(f, n, n, v.clone()).expect("n*n entries"))
            .collect();
        (sol.dim(), mats)
    }

    /// Same structure constants read in a larger field through `map`.
    pub fn base_change<G: Field>(&self, target: &G, map: impl Fn(&F::Elem) -> G::Elem) -> InvAlgebra<G> {
        let products: Vec<_> = self.structure_constants().map(|(i, j, k, c)| (i, j, k, map(c))).collect();
        let involution = self.involution.map_entries(target, &map);
        let unit = self.unit.iter().map(&map).collect();
        InvAlgebra::new_unchecked(target, self.dim, products, involution, unit).expect("shapes preserved")
    }

    /// Canonical description, the ingestion format.
    pub fn describe(&self) -> AlgebraDescription {
        let f = &self.field;
        AlgebraDescription {
            dim: self.dim,
            field: f.spec().to_string(),
            product: self
                .structure_constants()
                .map(|(i, j, k, c)| (i, j, k, Coeff::Text(f.format_elem(c))))
                .collect(),
            involution: MatrixRows::Nested(
                (0..self.dim)
                    .map(|r| (0..self.dim).map(|c| Coeff::Text(f.format_elem(self.involution.get(r, c)))).collect())
                    .collect(),
            ),
            unit: self.unit.iter().map(|x| Coeff::Text(f.format_elem(x))).collect(),
        }
    }

    /// SHA-256 over the canonical JSON description.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(&self.describe()).expect("serializable");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl InvAlgebra<Fq> {
    /// Base change along the canonical embedding of finite fields.
    pub fn base_change_fq(&self, target: &Fq) -> Result<InvAlgebra<Fq>, AlgebraError> {
        if self.field.characteristic() != target.characteristic() {
            return Err(AlgebraError::IncompatibleCharacteristic {
                from: self.field.characteristic(),
                to: target.characteristic(),
            });
        }
        let emb = self.field.embedding_into(target)?;
        Ok(self.base_change(target, |x| emb.map(x)))
    }
}

/// A subalgebra as a canonical subspace of the algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubalgebraSpan<F: Field> {
    pub space: Subspace<F>,
}

impl<F: Field> SubalgebraSpan<F> {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn basis_elements(&self) -> Vec<AlgElement<F::Elem>> {
        self.space.basis().iter().map(|v| AlgElement(v.clone())).collect()
    }

    pub fn contains(&self, x: &AlgElement<F::Elem>) -> bool {
        self.space.contains(&x.0)
    }
}

/// Pending vector in a closure run: a generator or a product or involution
/// image of rows already kept.
#[derive(Clone, Copy, Debug)]
enum Task {
    Seed(usize),
    Sigma(usize),
    Mul(usize, usize),
}

/// Reusable buffers for repeated closure computations on one algebra.
///
/// The span is grown vector by vector. Each vector that survives reduction
/// schedules its involution image and its products on both sides with every
/// vector kept so far; these are only computed when taken from the queue, so
/// a run that reaches the target dimension early skips the rest. The final
/// span is closed under products of kept vectors and under the involution.
pub struct ClosureWorkspace<F: Field> {
    rows: Vec<Vec<F::Elem>>,
    pivots: Vec<usize>,
    tasks: std::collections::VecDeque<Task>,
    scratch: Vec<F::Elem>,
    spare: Vec<Vec<F::Elem>>,
}

impl<F: Field> ClosureWorkspace<F> {
    pub fn new(alg: &InvAlgebra<F>) -> Self {
        ClosureWorkspace {
            rows: Vec::with_capacity(alg.dim),
            pivots: Vec::with_capacity(alg.dim),
            tasks: std::collections::VecDeque::new(),
            scratch: vec![alg.field.zero(); alg.dim],
            spare: Vec::new(),
        }
    }

    /// Rows of the last computed span (semi-echelon, not canonical).
    pub fn rows(&self) -> &[Vec<F::Elem>] {
        &self.rows
    }

    /// Computes the closure of `gens`; stops early once the dimension
    /// reaches `stop_at` (default: the full algebra). Returns the dimension.
    pub fn run(&mut self, alg: &InvAlgebra<F>, gens: &[&[F::Elem]], stop_at: Option<usize>) -> usize {
        let f = &alg.field;
        let n = alg.dim;
        let stop = stop_at.unwrap_or(n).min(n);
        while let Some(r) = self.rows.pop() {
            self.spare.push(r);
        }
        self.pivots.clear();
        self.tasks.clear();
        self.tasks.push_back(Task::Seed(0));
        for i in 0..gens.len() {
            self.tasks.push_back(Task::Seed(i + 1));
        }
        let mut v = std::mem::take(&mut self.scratch);
        v.resize(n, f.zero());

        while let Some(task) = self.tasks.pop_front() {
            match task {
                Task::Seed(0) => v.clone_from_slice(&alg.unit),
                Task::Seed(i) => v.clone_from_slice(gens[i - 1]),
                Task::Sigma(a) => alg.involution_into(&self.rows[a], &mut v),
                Task::Mul(a, b) => alg.mul_into(&self.rows[a], &self.rows[b], &mut v),
            }
            // reduce in insertion order
            for (row, &pc) in self.rows.iter().zip(&self.pivots) {
                let c = v[pc].clone();
                if f.is_zero(&c) {
                    continue;
                }
                let nc = f.neg(&c);
                for (vi, ri) in v[pc..].iter_mut().zip(&row[pc..]) {
                    if !f.is_zero(ri) {
                        *vi = f.mul_add(vi, &nc, ri);
                    }
                }
            }
            let Some(pc) = v.iter().position(|x| !f.is_zero(x)) else {
                continue;
            };
            let inv = f.inv(&v[pc]).expect("nonzero pivot");
            if !f.is_one(&inv) {
                for x in v[pc..].iter_mut() {
                    *x = f.mul(x, &inv);
                }
            }
            let mut kept = self.spare.pop().unwrap_or_default();
            kept.clone_from(&v);
            self.rows.push(kept);
            self.pivots.push(pc);
            if self.rows.len() >= stop {
                break;
            }
            let new = self.rows.len() - 1;
            self.tasks.push_back(Task::Sigma(new));
            for b in 0..=new {
                self.tasks.push_back(Task::Mul(new, b));
                if b != new {
                    self.tasks.push_back(Task::Mul(b, new));
                }
            }
        }
        self.scratch = v;
        self.rows.len()
    }

    /// Canonical span of the last run.
    pub fn span(&self, alg: &InvAlgebra<F>) -> Subspace<F> {
        Subspace::from_spanning(&alg.field, alg.dim, self.rows.clone())
    }
}

// ---------------------------------------------------------------------------
// Ingestion format

/// A coefficient written as a JSON number or string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Int(i64),
    Text(String),
}

impl Coeff {
    /// Numbers and strings are read alike, so `5` and `"5"` agree in every
    /// field (an element index in extension fields).
    pub fn parse<F: Field>(&self, f: &F) -> Result<F::Elem, FieldError> {
        match self {
            Coeff::Int(v) => f.parse_elem(&v.to_string()),
            Coeff::Text(s) => f.parse_elem(s),
        }
    }
}

/// Matrix given either as nested rows or as a flat row-major list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRows {
    Nested(Vec<Vec<Coeff>>),
    Flat(Vec<Coeff>),
}

/// On-disk algebra description. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDescription {
    pub dim: usize,
    pub field: String,
    pub product: Vec<(usize, usize, usize, Coeff)>,
    pub involution: MatrixRows,
    pub unit: Vec<Coeff>,
}

impl AlgebraDescription {
    pub fn field_spec(&self) -> Result<FieldSpec, FieldError> {
        self.field.parse()
    }

    pub fn build<F: Field>(&self, field: &F) -> Result<InvAlgebra<F>, AlgebraError> {
        let n = self.dim;
        let products = self
            .product
            .iter()
            .map(|(i, j, k, c)| Ok((*i, *j, *k, c.parse(field)?)))
            .collect::<Result<Vec<_>, FieldError>>()?;
        let flat: Vec<Coeff> = match &self.involution {
            MatrixRows::Nested(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(AlgebraError::Shape(format!("involution must be {n}x{n}")));
                }
                rows.concat()
            }
            MatrixRows::Flat(v) => v.clone(),
        };
        if flat.len() != n * n {
            return Err(AlgebraError::Shape(format!("involution must have {} entries", n * n)));
        }
        let data = flat.iter().map(|c| c.parse(field)).collect::<Result<Vec<_>, _>>()?;
        let inv = Matrix::from_vec(field, n, n, data).map_err(|e| AlgebraError::Shape(e.to_string()))?;
        let unit = self.unit.iter().map(|c| c.parse(field)).collect::<Result<Vec<_>, _>>()?;
        InvAlgebra::new(field, n, products, inv, unit)
    }
}

// ---------------------------------------------------------------------------
// Standard constructions

/// `K × K` with the swap involution.
pub fn split_quadratic<F: Field>(field: &F) -> InvAlgebra<F> {
    let one = field.one();
    let products = vec![(0, 0, 0, one.clone()), (1, 1, 1, one.clone())];
    let inv = Matrix::from_rows(field, &[vec![field.zero(), one.clone()], vec![one.clone(), field.zero()]]).unwrap();
    InvAlgebra::new(field, 2, products, inv, vec![one.clone(), one]).expect("valid")
}

/// `M_n(K)` with `τ(a) = g⁻¹ aᵗ g`; `g` must satisfy `gᵗ = ±g`.
/// Coordinates: `e_{i,j}` sits at index `i*n + j`.
pub fn matrix_algebra<F: Field>(field: &F, n: usize, g: &Matrix<F>) -> Result<InvAlgebra<F>, AlgebraError> {
    let ginv = g.inverse().map_err(|e| AlgebraError::Shape(e.to_string()))?;
    let one = field.one();
    let mut products = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                products.push((i * n + j, j * n + k, i * n + k, one.clone()));
            }
        }
    }
    let nn = n * n;
    let mut inv = Matrix::zeros(field, nn, nn);
    for i in 0..n {
        for j in 0..n {
            let img = ginv.mul(&Matrix::unit(field, n, i, j).transpose()).mul(g);
            for (idx, v) in img.data().iter().enumerate() {
                inv.set(idx, i * n + j, v.clone());
            }
        }
    }
    let unit = Matrix::identity(field, n).into_data();
    InvAlgebra::new(field, nn, products, inv, unit)
}

/// Reads an `n×n` matrix as an element of [`matrix_algebra`].
pub fn matrix_element<F: Field>(a: &Matrix<F>) -> AlgElement<F::Elem> {
    AlgElement(a.data().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Fq, Rationals};
    use proptest::prelude::*;

    /// Round-based closure: seed with {1} ∪ T ∪ σ(T), then repeatedly adjoin
    /// all pairwise products and involution images until the dimension is
    /// stable.
    pub(crate) fn closure_by_rounds<F: Field>(alg: &InvAlgebra<F>, gens: &[AlgElement<F::Elem>]) -> Subspace<F> {
        let mut seed = vec![alg.unit.clone()];
        for g in gens {
            seed.push(g.0.clone());
            seed.push(alg.apply_involution(g).0);
        }
        let mut span = Subspace::from_spanning(alg.field(), alg.dim(), seed);
        loop {
            let basis: Vec<_> = span.basis().iter().map(|v| AlgElement(v.clone())).collect();
            let mut vs: Vec<Vec<F::Elem>> = span.basis().to_vec();
            for a in &basis {
                vs.push(alg.apply_involution(a).0);
                for b in &basis {
                    vs.push(alg.mul(a, b).0);
                }
            }
            let next = Subspace::from_spanning(alg.field(), alg.dim(), vs);
            if next.dim() == span.dim() {
                return next;
            }
            span = next;
        }
    }

    fn transpose_m2(p: u64) -> InvAlgebra<Fq> {
        let f = Fq::prime(p).unwrap();
        matrix_algebra(&f, 2, &Matrix::identity(&f, 2)).unwrap()
    }

    #[test]
    fn split_quadratic_is_valid() {
        let alg = split_quadratic(&Fq::prime(3).unwrap());
        assert_eq!(alg.dim(), 2);
        assert!(alg.generates(&[AlgElement(vec![1, 0])]));
        assert!(!alg.generates(&[AlgElement(vec![2, 2])]));
    }

    #[test]
    fn transpose_algebra_is_valid() {
        let alg = transpose_m2(5);
        assert_eq!(alg.dim(), 4);
        alg.validate().unwrap();
    }

    #[test]
    fn empty_closure_is_scalars() {
        let alg = transpose_m2(5);
        let c = alg.closure(&[]);
        assert_eq!(c.dim(), 1);
        assert!(c.contains(&alg.unit_element()));
    }

    #[test]
    fn rejects_non_associative() {
        let q = Rationals;
        // commutative: e1*e1 = e2, e2*e2 = e1, e1*e2 = 0
        let one = q.one();
        let mut products = vec![];
        for i in 0..3 {
            products.push((0, i, i, one.clone()));
            if i != 0 {
                products.push((i, 0, i, one.clone()));
            }
        }
        products.push((1, 1, 2, one.clone()));
        products.push((2, 2, 1, one.clone()));
        let err = InvAlgebra::new(&q, 3, products, Matrix::identity(&q, 3), vec![one, q.zero(), q.zero()]).unwrap_err();
        assert!(matches!(err, AlgebraError::NonAssociative(..)));
    }

    #[test]
    fn rejects_bad_unit_and_involution() {
        let q = Rationals;
        let one = q.one();
        let products = vec![(0, 0, 0, one.clone()), (1, 1, 1, one.clone())];
        let swap = Matrix::from_ints(&q, &[&[0, 1], &[1, 0]]);
        let err = InvAlgebra::new(&q, 2, products.clone(), swap.clone(), vec![one.clone(), q.zero()]).unwrap_err();
        assert!(matches!(err, AlgebraError::BadUnit(_)));
        let not_inv = Matrix::from_ints(&q, &[&[1, 1], &[0, 1]]);
        let err = InvAlgebra::new(&q, 2, products.clone(), not_inv, vec![one.clone(), one.clone()]).unwrap_err();
        assert_eq!(err, AlgebraError::InvolutionOrder);
        // M2 with the identity "involution" is not an anti-automorphism
        let f = Fq::prime(5).unwrap();
        let m2 = matrix_algebra(&f, 2, &Matrix::identity(&f, 2)).unwrap();
        let prods: Vec<_> = m2.structure_constants().map(|(i, j, k, c)| (i, j, k, *c)).collect();
        let err = InvAlgebra::new(&f, 4, prods, Matrix::identity(&f, 4), m2.unit().to_vec()).unwrap_err();
        assert!(matches!(err, AlgebraError::NotAntiAutomorphism(..)));
    }

    #[test]
    fn description_round_trip_and_fingerprint() {
        let alg = transpose_m2(5);
        let desc = alg.describe();
        let json = serde_json::to_string(&desc).unwrap();
        let back: AlgebraDescription = serde_json::from_str(&json).unwrap();
        let rebuilt = back.build(&Fq::prime(5).unwrap()).unwrap();
        assert_eq!(rebuilt.fingerprint(), alg.fingerprint());
        assert_eq!(alg.fingerprint().len(), 64);
    }

    #[test]
    fn flat_involution_and_numeric_coefficients() {
        let text = r#"{"dim":2,"field":"F3","product":[[0,0,0,1],[1,1,1,1]],"involution":[0,1,1,0],"unit":[1,1]}"#;
        let desc: AlgebraDescription = serde_json::from_str(text).unwrap();
        let alg = desc.build(&Fq::prime(3).unwrap()).unwrap();
        assert_eq!(alg.fingerprint(), split_quadratic(&Fq::prime(3).unwrap()).fingerprint());
    }

    #[test]
    fn base_change_identity_is_noop() {
        let alg = transpose_m2(3);
        let same = alg.base_change_fq(&Fq::prime(3).unwrap()).unwrap();
        assert_eq!(same.fingerprint(), alg.fingerprint());
        assert!(matches!(
            alg.base_change_fq(&Fq::prime(5).unwrap()),
            Err(AlgebraError::IncompatibleCharacteristic { .. })
        ));
    }

    #[test]
    fn transpose_m2_over_f9_generated_by_u() {
        let alg = transpose_m2(3);
        let u = AlgElement(vec![0, 1, 0, 0]);
        assert!(alg.generates(std::slice::from_ref(&u)));
        let big = alg.base_change_fq(&Fq::new(3, 2).unwrap()).unwrap();
        assert!(big.generates(&[u]));
    }

    #[test]
    fn derivations_of_small_algebras() {
        let q = Rationals;
        let (d, _) = split_quadratic(&q).derivation_algebra();
        assert_eq!(d, 0);
        // M2 with transpose: derivations commuting with t are ad(skew), dim 1
        let m2 = matrix_algebra(&q, 2, &Matrix::identity(&q, 2)).unwrap();
        let (d, mats) = m2.derivation_algebra();
        assert_eq!(d, 1);
        // each returned map is a derivation
        for dm in &mats {
            for i in 0..4 {
                for j in 0..4 {
                    let (ei, ej) = (m2.basis_element(i), m2.basis_element(j));
                    let lhs = AlgElement(dm.mul_vec(&m2.mul(&ei, &ej).0));
                    let rhs = m2.add(&m2.mul(&AlgElement(dm.mul_vec(&ei.0)), &ej), &m2.mul(&ei, &AlgElement(dm.mul_vec(&ej.0))));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    fn arb_elems(p: u64, dim: usize, max: usize) -> impl Strategy<Value = Vec<AlgElement<u64>>> {
        proptest::collection::vec(proptest::collection::vec(0..p, dim).prop_map(AlgElement), 0..=max)
    }

    proptest! {
        #[test]
        fn incremental_closure_matches_rounds(gens in arb_elems(3, 4, 2)) {
            let alg = transpose_m2(3);
            prop_assert_eq!(alg.closure(&gens).space, closure_by_rounds(&alg, &gens));
        }

        #[test]
        fn closure_is_idempotent_and_monotone(gens in arb_elems(5, 4, 2), extra in arb_elems(5, 4, 1)) {
            let alg = transpose_m2(5);
            let c = alg.closure(&gens);
            prop_assert!(alg.is_subalgebra(&c.space));
            prop_assert_eq!(alg.closure(&c.basis_elements()), c.clone());
            let mut bigger = gens.clone();
            bigger.extend(extra);
            prop_assert!(c.space.is_subspace_of(&alg.closure(&bigger).space).unwrap());
        }

        #[test]
        fn closure_invariant_under_permutation_and_involution(gens in arb_elems(2, 4, 3)) {
            let alg = transpose_m2(2);
            let d = alg.closure_dim(&gens);
            let mut rev = gens.clone();
            rev.reverse();
            prop_assert_eq!(alg.closure_dim(&rev), d);
            let sig: Vec<_> = gens.iter().map(|g| alg.apply_involution(g)).collect();
            prop_assert_eq!(alg.closure_dim(&sig), d);
        }
    }
}
