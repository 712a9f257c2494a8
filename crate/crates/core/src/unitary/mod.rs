//! The split unitary algebra `Aₙ = Mₙ(K) × Mₙ(K)` with `(a, b)* = (bᵗ, aᵗ)`.
//!
//! An element `(a, b)` has coordinates `a` (row-major) followed by `b`, so
//! `(e_{ij}, 0)` sits at index `i*n + j` and `(0, e_{ij})` at `n² + i*n + j`
//! (0-based). The distinguished matrices `e(i, j)` and `d(i, j)` take 1-based
//! indices, as in the identity lemma.

mod classify;
mod dims;

pub use classify::{
    classify, conjugator_space, invariant_subspaces, ClassSet, Classification, ClassifyError, ClassifyOptions,
    Witness,
};
pub use dims::{dims, general_dim_zr, orbit_data, DimsRecord, OrbitDatum};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{extension, Field, FieldError, FiniteField, Fq};
use crate::matrix::{symmetry_kind, Matrix, MatrixError, SymmetryKind};
use crate::mualg::{matrix_algebra, AlgElement, AlgebraError, Coeff, InvAlgebra, MatrixRows, SubalgebraSpan};
use crate::subspace::Subspace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnitaryError {
    #[error("n must be at least {min}, got {n}")]
    BadDegree { n: usize, min: usize },
    #[error("{0} requires even n")]
    NeedsEvenDegree(&'static str),
    #[error("subspace must be proper and nonzero (dim {dim} in K^{n})")]
    TrivialSubspace { dim: usize, n: usize },
    #[error("conjugating matrix must be invertible and symmetric or alternating")]
    BadConjugator,
    #[error("alpha must avoid 0, 1 and -1")]
    BadAlpha,
    #[error("k must satisfy 1 <= k <= n-1 (k = {k}, n = {n})")]
    BadSplit { k: usize, n: usize },
    #[error("no generating tuple found within {0} candidates")]
    SearchExhausted(u128),
    #[error("search space of {projected} tuples exceeds budget {budget}")]
    BudgetExceeded { projected: u128, budget: u128 },
    #[error("{0} requires a prime field")]
    NeedsPrimeField(&'static str),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `Σ e_{i,i+1}`.
pub fn shift<F: Field>(field: &F, n: usize) -> Matrix<F> {
    let mut u = Matrix::zeros(field, n, n);
    for i in 0..n.saturating_sub(1) {
        u.set(i, i + 1, field.one());
    }
    u
}

/// Matrix unit `e_{i,j}`, 1-based.
pub fn e_unit<F: Field>(field: &F, n: usize, i: usize, j: usize) -> Matrix<F> {
    Matrix::unit(field, n, i - 1, j - 1)
}

/// `d_{i,j} = e_{i,i}` if `i = j`, else `e_{i,j} + e_{j,i}`; 1-based.
pub fn d_matrix<F: Field>(field: &F, n: usize, i: usize, j: usize) -> Matrix<F> {
    if i == j {
        e_unit(field, n, i, i)
    } else {
        e_unit(field, n, i, j).add(&e_unit(field, n, j, i))
    }
}

/// `I_{n/2} ⊗ [[0,-1],[1,0]]`.
pub fn omega<F: Field>(field: &F, n: usize) -> Result<Matrix<F>, UnitaryError> {
    if n % 2 != 0 {
        return Err(UnitaryError::NeedsEvenDegree("Omega"));
    }
    let j = Matrix::from_ints(field, &[&[0, -1], &[1, 0]]);
    Ok(Matrix::identity(field, n / 2).kron(&j))
}

/// `(Aₙ, *)` over `F` together with its distinguished matrices.
#[derive(Clone, Debug)]
pub struct UnitaryModel<F: Field> {
    n: usize,
    field: F,
    alg: InvAlgebra<F>,
}

impl<F: Field> UnitaryModel<F> {
    pub fn new(field: &F, n: usize) -> Result<Self, UnitaryError> {
        if n == 0 {
            return Err(UnitaryError::BadDegree { n, min: 1 });
        }
        let nn = n * n;
        let one = field.one();
        let mut products = Vec::with_capacity(2 * n * n * n);
        for half in [0, nn] {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        products.push((half + i * n + j, half + j * n + k, half + i * n + k, one.clone()));
                    }
                }
            }
        }
        let mut inv = Matrix::zeros(field, 2 * nn, 2 * nn);
        for i in 0..n {
            for j in 0..n {
                inv.set(nn + j * n + i, i * n + j, one.clone());
                inv.set(j * n + i, nn + i * n + j, one.clone());
            }
        }
        let id = Matrix::identity(field, n).into_data();
        let unit = [id.clone(), id].concat();
        // the axioms are checked in the tests for every n used there; the
        // O(N³) check would dominate start-up at n ≥ 5 over Q
        let alg = InvAlgebra::new_unchecked(field, 2 * nn, products, inv, unit)?;
        Ok(UnitaryModel { n, field: field.clone(), alg })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn field(&self) -> &F {
        &self.field
    }
    pub fn algebra(&self) -> &InvAlgebra<F> {
        &self.alg
    }
    pub fn dim(&self) -> usize {
        2 * self.n * self.n
    }

    pub fn elem(&self, a: &Matrix<F>, b: &Matrix<F>) -> AlgElement<F::Elem> {
        assert!(a.rows() == self.n && a.cols() == self.n && b.rows() == self.n && b.cols() == self.n);
        AlgElement([a.data(), b.data()].concat())
    }

    pub fn components(&self, x: &AlgElement<F::Elem>) -> (Matrix<F>, Matrix<F>) {
        let nn = self.n * self.n;
        let a = Matrix::from_vec(&self.field, self.n, self.n, x.0[..nn].to_vec()).expect("n*n");
        let b = Matrix::from_vec(&self.field, self.n, self.n, x.0[nn..].to_vec()).expect("n*n");
        (a, b)
    }

    pub fn u(&self) -> Matrix<F> {
        shift(&self.field, self.n)
    }
    pub fn e(&self, i: usize, j: usize) -> Matrix<F> {
        e_unit(&self.field, self.n, i, j)
    }
    pub fn d(&self, i: usize, j: usize) -> Matrix<F> {
        d_matrix(&self.field, self.n, i, j)
    }
    pub fn identity(&self) -> Matrix<F> {
        Matrix::identity(&self.field, self.n)
    }
    pub fn omega(&self) -> Result<Matrix<F>, UnitaryError> {
        omega(&self.field, self.n)
    }

    /// `S_V = {a : aV ⊆ V}` inside `K^{n²}`: the conditions `wᵗ a v = 0` for
    /// `w` in a basis of `V^⊥` and `v` in a basis of `V`.
    pub fn stabilizer_space(&self, v: &Subspace<F>) -> Subspace<F> {
        let f = &self.field;
        let n = self.n;
        let vp = v.perp();
        let mut rows = Vec::new();
        for w in vp.basis() {
            for x in v.basis() {
                let mut row = vec![f.zero(); n * n];
                for k in 0..n {
                    for l in 0..n {
                        row[k * n + l] = f.mul(&w[k], &x[l]);
                    }
                }
                rows.push(row);
            }
        }
        if rows.is_empty() {
            return Subspace::full(f, n * n);
        }
        Matrix::from_rows(f, &rows).expect("rectangular").kernel()
    }

    /// `A_V = S_V × S_{V^⊥}`.
    pub fn subalg_av(&self, v: &Subspace<F>) -> Result<SubalgebraSpan<F>, UnitaryError> {
        if v.ambient() != self.n || v.is_trivial() {
            return Err(UnitaryError::TrivialSubspace { dim: v.dim(), n: self.n });
        }
        let nn = self.n * self.n;
        let zero = vec![self.field.zero(); nn];
        let mut vecs: Vec<Vec<F::Elem>> =
            self.stabilizer_space(v).basis().iter().map(|s| [s.as_slice(), &zero].concat()).collect();
        vecs.extend(self.stabilizer_space(&v.perp()).basis().iter().map(|s| [zero.as_slice(), s].concat()));
        Ok(SubalgebraSpan { space: Subspace::from_spanning(&self.field, 2 * nn, vecs) })
    }

    /// `B_[p] = {(a, p a p⁻¹)}`.
    pub fn subalg_bp(&self, p: &Matrix<F>) -> Result<SubalgebraSpan<F>, UnitaryError> {
        let kind = symmetry_kind(p)?;
        if kind == SymmetryKind::Neither || !p.is_invertible() {
            return Err(UnitaryError::BadConjugator);
        }
        let pinv = p.inverse()?;
        let n = self.n;
        let vecs = (1..=n)
            .flat_map(|i| (1..=n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let a = self.e(i, j);
                self.elem(&a, &p.mul(&a).mul(&pinv)).0
            })
            .collect();
        Ok(SubalgebraSpan { space: Subspace::from_spanning(&self.field, self.dim(), vecs) })
    }

    /// `(a, p a p⁻¹)`.
    pub fn graph_element(&self, p: &Matrix<F>, a: &Matrix<F>) -> Result<AlgElement<F::Elem>, UnitaryError> {
        let pinv = p.inverse()?;
        Ok(self.elem(a, &p.mul(a).mul(&pinv)))
    }

    /// `[c](a, b) = (c a c⁻¹, c⁻ᵗ b cᵗ)`.
    pub fn act(&self, c: &Matrix<F>, x: &AlgElement<F::Elem>) -> Result<AlgElement<F::Elem>, UnitaryError> {
        let ci = c.inverse()?;
        let (a, b) = self.components(x);
        Ok(self.elem(&c.mul(&a).mul(&ci), &ci.transpose().mul(&b).mul(&c.transpose())))
    }

    /// `σ(a, b) = (b, a)`.
    pub fn act_swap(&self, x: &AlgElement<F::Elem>) -> AlgElement<F::Elem> {
        let (a, b) = self.components(x);
        self.elem(&b, &a)
    }

    /// Image of a span under `[c]`.
    pub fn act_span(&self, c: &Matrix<F>, s: &SubalgebraSpan<F>) -> Result<SubalgebraSpan<F>, UnitaryError> {
        let vecs = s.basis_elements().iter().map(|x| self.act(c, x).map(|y| y.0)).collect::<Result<Vec<_>, _>>()?;
        Ok(SubalgebraSpan { space: Subspace::from_spanning(&self.field, self.dim(), vecs) })
    }

    /// Projections of a span to its first and second matrix components.
    pub fn projections(&self, s: &Subspace<F>) -> (Subspace<F>, Subspace<F>) {
        let nn = self.n * self.n;
        let first = s.basis().iter().map(|v| v[..nn].to_vec()).collect();
        let second = s.basis().iter().map(|v| v[nn..].to_vec()).collect();
        (Subspace::from_spanning(&self.field, nn, first), Subspace::from_spanning(&self.field, nn, second))
    }

    pub fn as_matrix(&self, v: &[F::Elem]) -> Matrix<F> {
        Matrix::from_vec(&self.field, self.n, self.n, v.to_vec()).expect("n*n entries")
    }

    /// `(u, d_{1,n})`.
    pub fn full_generator(&self) -> AlgElement<F::Elem> {
        self.elem(&self.u(), &self.d(1, self.n))
    }

    /// `(u, d_{1,k} + α d_{k+1,n})`, generating `A_{V(k)}`.
    pub fn av_generator(&self, k: usize, alpha: &F::Elem) -> Result<AlgElement<F::Elem>, UnitaryError> {
        let f = &self.field;
        if k == 0 || k >= self.n {
            return Err(UnitaryError::BadSplit { k, n: self.n });
        }
        if f.is_zero(alpha) || f.is_one(alpha) || f.is_one(&f.neg(alpha)) {
            return Err(UnitaryError::BadAlpha);
        }
        let second = self.d(1, k).add(&self.d(k + 1, self.n).scale(alpha));
        Ok(self.elem(&self.u(), &second))
    }

    /// `(u, u)`, generating `B_[I]`.
    pub fn bi_generator(&self) -> AlgElement<F::Elem> {
        self.elem(&self.u(), &self.u())
    }

    /// `(u, Ω u Ω⁻¹)`, generating `B_[Ω]` for even `n > 2`.
    pub fn bomega_generator(&self) -> Result<AlgElement<F::Elem>, UnitaryError> {
        if self.n == 2 {
            return Err(UnitaryError::BadDegree { n: 2, min: 4 });
        }
        self.graph_element(&self.omega()?, &self.u())
    }

    /// First pair of graph elements `(a, ΩaΩ⁻¹)`, `a` with entries in
    /// `{0, 1}` in counting order, that generates `B_[Ω]`.
    pub fn bomega_pair(&self) -> Result<Vec<AlgElement<F::Elem>>, UnitaryError> {
        let om = self.omega()?;
        let target = self.subalg_bp(&om)?.dim();
        let nn = self.n * self.n;
        let limit: u128 = 1 << nn.min(16);
        let mat = |bits: u128| {
            let data = (0..nn).map(|t| self.field.from_i64(((bits >> t) & 1) as i64)).collect();
            Matrix::from_vec(&self.field, self.n, self.n, data).expect("n*n")
        };
        for x in 0..limit {
            for y in x + 1..limit {
                let pair = vec![self.graph_element(&om, &mat(x))?, self.graph_element(&om, &mat(y))?];
                if self.alg.closure_dim(&pair) == target {
                    return Ok(pair);
                }
            }
        }
        Err(UnitaryError::SearchExhausted(limit * limit))
    }

    /// Identity-lemma checks for all admissible indices and `k, ℓ ≤ 2n`.
    pub fn identity_suite(&self) -> Vec<IdentityCheck> {
        let n = self.n;
        let u = self.u();
        let upow: Vec<_> = (0..=2 * n as u64).map(|k| u.pow(k)).collect();
        let zero = Matrix::zeros(&self.field, n, n);
        let mut out = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                for k in 0..=2 * n {
                    for l in 0..=2 * n {
                        let lhs = upow[k].mul(&self.e(i, j)).mul(&upow[l]);
                        let rhs = if k < i && l <= n - j { self.e(i - k, j + l) } else { zero.clone() };
                        out.push(IdentityCheck { family: 1, i, j, k, l, pass: lhs == rhs });
                    }
                }
            }
        }
        for i in 1..=n {
            for j in i..=n {
                let d = self.d(i, j);
                for l in (1..=2 * n).step_by(2) {
                    out.push(IdentityCheck { family: 2, i, j, k: 0, l, pass: d.pow(l as u64) == d });
                }
            }
        }
        for i in 1..=n {
            for j in i + 1..=n {
                let d = self.d(i, j);
                let up = &upow[j - i];
                let lhs = d.mul(up).mul(&d).mul(up).mul(&d);
                out.push(IdentityCheck { family: 3, i, j, k: j - i, l: j - i, pass: lhs == self.e(j, i) });
            }
        }
        out
    }

    /// Searches `target` (a subalgebra) for a generating tuple of size at most
    /// `r`, trying sizes `0, 1, …` in order over every tuple of elements of
    /// `target`.
    pub fn gen_count_bruteforce(&self, target: &SubalgebraSpan<F>, r: usize, budget: u128) -> Result<GenSearch<F::Elem>, UnitaryError>
    where
        F: FiniteField,
    {
        let q = self.field.size() as u128;
        let m = target.dim();
        let per = q.checked_pow(m as u32).unwrap_or(u128::MAX);
        let basis = target.basis_elements();
        let f = &self.field;
        let element = |idx: u128| {
            let mut x = vec![f.zero(); self.dim()];
            let mut rest = idx;
            for b in &basis {
                let c = f.elem_at((rest % q) as u64);
                rest /= q;
                if !f.is_zero(&c) {
                    for (xi, bi) in x.iter_mut().zip(&b.0) {
                        *xi = f.mul_add(xi, &c, bi);
                    }
                }
            }
            AlgElement(x)
        };
        let mut report = GenSearch { target_dim: m, min_r: None, witness: None, max_dim_by_r: Vec::new(), tuples_checked: 0 };
        let mut ws = crate::mualg::ClosureWorkspace::new(&self.alg);
        for size in 0..=r {
            let count = per.checked_pow(size as u32).unwrap_or(u128::MAX);
            if count > budget {
                return Err(UnitaryError::BudgetExceeded { projected: count, budget });
            }
            let mut best = 0;
            for t in 0..count {
                let mut rest = t;
                let tuple: Vec<_> = (0..size)
                    .map(|_| {
                        let e = element(rest % per);
                        rest /= per;
                        e
                    })
                    .collect();
                let refs: Vec<&[F::Elem]> = tuple.iter().map(|x| x.0.as_slice()).collect();
                let d = ws.run(&self.alg, &refs, None);
                report.tuples_checked += 1;
                best = best.max(d);
                if d == m && report.witness.is_none() {
                    report.witness = Some(tuple);
                }
            }
            report.max_dim_by_r.push(best);
            if report.witness.is_some() {
                report.min_r = Some(size);
                break;
            }
        }
        Ok(report)
    }

    /// A uniformly random element.
    pub fn random_element<R: Rng>(&self, rng: &mut R) -> AlgElement<F::Elem>
    where
        F: FiniteField,
    {
        let q = self.field.size();
        AlgElement((0..self.dim()).map(|_| self.field.elem_at(rng.gen_range(0..q))).collect())
    }
}

/// One evaluated instance of the identity lemma.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub family: u8,
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub pass: bool,
}

/// Outcome of [`UnitaryModel::gen_count_bruteforce`].
#[derive(Debug, Clone)]
pub struct GenSearch<E> {
    pub target_dim: usize,
    /// Least tuple size that generates the target, if one was found.
    pub min_r: Option<usize>,
    pub witness: Option<Vec<AlgElement<E>>>,
    /// Largest closure dimension seen for each tuple size tried.
    pub max_dim_by_r: Vec<usize>,
    pub tuples_checked: u128,
}

impl UnitaryModel<Fq> {
    /// `AV(k, α)` with the least admissible `α` of the field; over `F₂` and
    /// `F₃` none exists and the model is moved to `F_{q²}`.
    pub fn av_generator_auto(&self, k: usize) -> Result<EscalatedGenerator, UnitaryError> {
        let f = &self.field;
        let pick = |g: &Fq| (0..g.size()).find(|&a| a != 0 && !g.is_one(&a) && !g.is_one(&g.neg(&a)));
        if let Some(a) = pick(f) {
            let gen = self.av_generator(k, &a)?;
            return Ok(EscalatedGenerator { model: self.clone(), tuple: vec![gen], alpha: a, escalated: false });
        }
        let ext = extension(f, 2)?;
        let model = UnitaryModel::new(&ext.field, self.n)?;
        let a = pick(&ext.field).expect("a field with at least four elements");
        let gen = model.av_generator(k, &a)?;
        Ok(EscalatedGenerator { model, tuple: vec![gen], alpha: a, escalated: true })
    }
}

/// A generator together with the model it lives in.
#[derive(Debug, Clone)]
pub struct EscalatedGenerator {
    pub model: UnitaryModel<Fq>,
    pub tuple: Vec<AlgElement<u64>>,
    pub alpha: u64,
    pub escalated: bool,
}

/// `(Mₙ(K), a ↦ d⁻¹ aᵗ d)` for invertible diagonal `d`.
pub fn orthogonal_matrix_algebra<F: Field>(field: &F, n: usize, diag: &[F::Elem]) -> Result<InvAlgebra<F>, UnitaryError> {
    Ok(matrix_algebra(field, n, &Matrix::diagonal(field, diag))?)
}

/// `(Mₙ(K), a ↦ Ω aᵗ Ω⁻¹)` for even `n`.
pub fn symplectic_matrix_algebra<F: Field>(field: &F, n: usize) -> Result<InvAlgebra<F>, UnitaryError> {
    let om = omega(field, n)?;
    Ok(matrix_algebra(field, n, &om.inverse()?)?)
}

/// `(Mₙ(F_{q²}), conjugate transpose)` as an algebra of dimension `2n²` over
/// the prime field `F_q`, together with `θI + u` where `θ` generates
/// `F_{q²}` over `F_q`.
///
/// The basis element `θ^s e_{ij}` (`s ∈ {0, 1}`) sits at index
/// `2(i*n + j) + s`.
pub fn unitary_finite(n: usize, q: u64) -> Result<(InvAlgebra<Fq>, AlgElement<u64>), UnitaryError> {
    let base = Fq::prime(q).map_err(|_| UnitaryError::NeedsPrimeField("the non-split unitary model"))?;
    let big = extension(&base, 2)?.field.clone();
    // θ = x, θ² = -(c0 + c1 θ)
    let m = big.modulus();
    let sq = [base.neg(&m[0]), base.neg(&m[1])];
    let conj = big.digits(big.frobenius(q));
    let one = base.one();
    let idx = |i: usize, j: usize, s: usize| 2 * (i * n + j) + s;
    let mut products = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                products.push((idx(i, j, 0), idx(j, k, 0), idx(i, k, 0), one));
                products.push((idx(i, j, 0), idx(j, k, 1), idx(i, k, 1), one));
                products.push((idx(i, j, 1), idx(j, k, 0), idx(i, k, 1), one));
                products.push((idx(i, j, 1), idx(j, k, 1), idx(i, k, 0), sq[0]));
                products.push((idx(i, j, 1), idx(j, k, 1), idx(i, k, 1), sq[1]));
            }
        }
    }
    let dim = 2 * n * n;
    let mut inv = Matrix::zeros(&base, dim, dim);
    for i in 0..n {
        for j in 0..n {
            inv.set(idx(j, i, 0), idx(i, j, 0), one);
            for (s, c) in conj.iter().enumerate().take(2) {
                inv.set(idx(j, i, s), idx(i, j, 1), *c);
            }
        }
    }
    let mut unit = vec![0; dim];
    for i in 0..n {
        unit[idx(i, i, 0)] = one;
    }
    let alg = InvAlgebra::new(&base, dim, products, inv, unit.clone())?;
    let mut g = vec![0; dim];
    for i in 0..n {
        g[idx(i, i, 1)] = one;
        if i + 1 < n {
            g[idx(i, i + 1, 0)] = one;
        }
    }
    Ok((alg, AlgElement(g)))
}

/// The matrices `a_α = [[α,1],[0,1]] ⊕ I`, `b_α = diag(1,α) ⊕ I` and
/// `p_α = [[0,α-1],[α-1,1]] ⊕ I`.
pub fn nonclosed_triple<F: Field>(field: &F, n: usize, alpha: &F::Elem) -> (Matrix<F>, Matrix<F>, Matrix<F>) {
    let f = field;
    let (z, o) = (f.zero(), f.one());
    let am1 = f.sub(alpha, &o);
    let rest = Matrix::identity(f, n - 2);
    let a = Matrix::from_rows(f, &[vec![alpha.clone(), o.clone()], vec![z.clone(), o.clone()]]).unwrap();
    let b = Matrix::from_rows(f, &[vec![o.clone(), z.clone()], vec![z.clone(), alpha.clone()]]).unwrap();
    let p = Matrix::from_rows(f, &[vec![z, am1.clone()], vec![am1, o]]).unwrap();
    (a.direct_sum(&rest), b.direct_sum(&rest), p.direct_sum(&rest))
}

/// Tuple file: `n`, field, and pairs of `n×n` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleFile {
    pub n: usize,
    pub field: String,
    pub pairs: Vec<(MatrixRows, MatrixRows)>,
}

impl TupleFile {
    pub fn from_tuple<F: Field>(model: &UnitaryModel<F>, tuple: &[AlgElement<F::Elem>]) -> Self {
        let f = model.field();
        let n = model.n();
        let rows = |m: &Matrix<F>| {
            MatrixRows::Nested((0..n).map(|r| m.row(r).iter().map(|x| Coeff::Text(f.format_elem(x))).collect()).collect())
        };
        let pairs = tuple
            .iter()
            .map(|x| {
                let (a, b) = model.components(x);
                (rows(&a), rows(&b))
            })
            .collect();
        TupleFile { n, field: f.spec().to_string(), pairs }
    }

    pub fn to_tuple<F: Field>(&self, model: &UnitaryModel<F>) -> Result<Vec<AlgElement<F::Elem>>, UnitaryError> {
        let f = model.field();
        let n = self.n;
        if n != model.n() {
            return Err(UnitaryError::Algebra(AlgebraError::Shape(format!("tuple has n = {n}, model has n = {}", model.n()))));
        }
        let read = |m: &MatrixRows| -> Result<Matrix<F>, UnitaryError> {
            let flat: Vec<Coeff> = match m {
                MatrixRows::Nested(rows) => {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(UnitaryError::Algebra(AlgebraError::Shape(format!("matrices must be {n}x{n}"))));
                    }
                    rows.concat()
                }
                MatrixRows::Flat(v) => v.clone(),
            };
            if flat.len() != n * n {
                return Err(UnitaryError::Algebra(AlgebraError::Shape(format!("matrices must have {} entries", n * n))));
            }
            let data = flat.iter().map(|c| c.parse(f)).collect::<Result<Vec<_>, _>>()?;
            Ok(Matrix::from_vec(f, n, n, data)?)
        };
        self.pairs.iter().map(|(a, b)| Ok(model.elem(&read(a)?, &read(b)?))).collect()
    }
}
