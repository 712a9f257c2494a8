//! Certificates of non-generation for tuples in `(Aₙ, *)` over finite fields.
//!
//! A tuple fails to generate exactly when its closure lies in some `A_V` or
//! `B_[p]`, possibly after extending scalars. The classifier finds such `V`
//! (an invariant subspace of the first projection) or `p` (a conjugator
//! between the two projections).

use thiserror::Error;

use crate::field::{extension, Field, FieldError, FiniteField, Fq};
use crate::matrix::{symmetry_kind, Matrix, SymmetryKind};
use crate::mualg::AlgElement;
use crate::subspace::{enumerate_subspaces, gaussian_binomial, Subspace, SubspaceError};

use super::{TupleFile, UnitaryModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Generates,
    /// `V` over `F_{q^degree}` with `a V ⊆ V` and `b V^⊥ ⊆ V^⊥` for every
    /// `(a, b)` in the closure.
    InvariantSubspace { subspace: Subspace<Fq>, degree: u32 },
    /// Invertible `p` over `F_{q^degree}` with `p a p⁻¹ = b` on the closure.
    Conjugator { p: Matrix<Fq>, kind: SymmetryKind, degree: u32 },
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("theory violation: {detail}; tuple: {}", serde_json::to_string(tuple).unwrap_or_default())]
    TheoryViolation { detail: String, tuple: TupleFile },
    #[error("invariant failed: {detail}; tuple: {}", serde_json::to_string(tuple).unwrap_or_default())]
    InvariantFailure { detail: String, tuple: TupleFile },
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Run every search on non-generating tuples and keep all witnesses.
    pub all_witnesses: bool,
    /// Largest extension degree searched for invariant subspaces (default `n`).
    pub max_ext: Option<u32>,
    /// Cap on subspaces or coefficient vectors enumerated per search.
    pub budget: u128,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { all_witnesses: false, max_ext: None, budget: 1_000_000 }
    }
}

/// Component classes a tuple was found to lie in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ClassSet {
    /// `dim V` for rational invariant subspaces.
    pub x_rational: Vec<usize>,
    /// `dim V` for which only irrational invariant subspaces were found.
    pub x_geometric: Vec<usize>,
    pub y: bool,
    pub y_prime: bool,
}

impl ClassSet {
    pub fn count(&self) -> usize {
        self.x_rational.len() + self.x_geometric.len() + self.y as usize + self.y_prime as usize
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub closure_dim: usize,
    pub p1_dim: usize,
    pub witnesses: Vec<Witness>,
}

impl Classification {
    pub fn generates(&self) -> bool {
        self.witnesses.first() == Some(&Witness::Generates)
    }

    pub fn classes(&self) -> ClassSet {
        let mut c = ClassSet::default();
        for w in &self.witnesses {
            match w {
                Witness::Generates => {}
                Witness::InvariantSubspace { subspace, degree } => {
                    let list = if *degree == 1 { &mut c.x_rational } else { &mut c.x_geometric };
                    if !list.contains(&subspace.dim()) {
                        list.push(subspace.dim());
                    }
                }
                Witness::Conjugator { kind, .. } => match kind {
                    SymmetryKind::SymmetricNonalternating => c.y = true,
                    SymmetryKind::Alternating => c.y_prime = true,
                    SymmetryKind::Neither => {}
                },
            }
        }
        c
    }
}

/// Classifies `tuple`. Non-generating tuples with no witness raise
/// [`ClassifyError::TheoryViolation`].
pub fn classify(
    model: &UnitaryModel<Fq>,
    tuple: &[AlgElement<u64>],
    opts: &ClassifyOptions,
) -> Result<Classification, ClassifyError> {
    let n = model.n();
    let span = model.algebra().closure(tuple);
    if span.dim() == model.dim() {
        return Ok(Classification { closure_dim: span.dim(), p1_dim: n * n, witnesses: vec![Witness::Generates] });
    }
    let record = || TupleFile::from_tuple(model, tuple);
    let pairs: Vec<(Matrix<Fq>, Matrix<Fq>)> = span.basis_elements().iter().map(|x| model.components(x)).collect();
    let (p1, _) = model.projections(&span.space);
    let first: Vec<Matrix<Fq>> = pairs.iter().map(|(a, _)| a.clone()).collect();
    let second: Vec<Matrix<Fq>> = pairs.iter().map(|(_, b)| b.clone()).collect();
    let proper = p1.dim() < n * n;
    let mut witnesses = Vec::new();

    if proper || opts.all_witnesses {
        let max_ext = opts.max_ext.unwrap_or(n as u32).max(1);
        let dims: Vec<usize> = (1..n).collect();
        let found = invariant_subspaces(model.field(), n, &first, &dims, !opts.all_witnesses, max_ext, opts.budget)?;
        for (v, k) in found {
            let ext = extension(model.field(), k)?;
            let vp = v.perp();
            let ok = second.iter().all(|b| vp.is_invariant_under(&b.map_entries(&ext.field, |x| ext.embedding.map(x))));
            if !ok {
                return Err(ClassifyError::InvariantFailure {
                    detail: format!("second components do not preserve the perp of {v:?}"),
                    tuple: record(),
                });
            }
            witnesses.push(Witness::InvariantSubspace { subspace: v, degree: k });
        }
    }

    if !proper {
        let l = conjugator_space(model.field(), n, &pairs);
        if l.dim() != 1 {
            return Err(ClassifyError::InvariantFailure {
                detail: format!("conjugator space has dimension {} (expected 1)", l.dim()),
                tuple: record(),
            });
        }
        let p = model.as_matrix(&l.basis()[0]);
        let kind = symmetry_kind(&p).expect("square");
        if !p.is_invertible() || kind == SymmetryKind::Neither {
            return Err(ClassifyError::InvariantFailure {
                detail: format!("conjugator {p:?} is singular or of neither symmetry kind"),
                tuple: record(),
            });
        }
        witnesses.push(Witness::Conjugator { p, kind, degree: 1 });
    } else if opts.all_witnesses {
        let l = conjugator_space(model.field(), n, &pairs);
        let sym = restrict_symmetry(&l, n, false);
        let alt = restrict_symmetry(&l, n, true);
        for (space, want) in [(sym, SymmetryKind::SymmetricNonalternating), (alt, SymmetryKind::Alternating)] {
            if let Some((p, degree)) = find_conjugator(model.field(), n, &space, want, opts.budget)? {
                witnesses.push(Witness::Conjugator { p, kind: want, degree });
            }
        }
    }

    for w in &witnesses {
        if let Witness::Conjugator { p, degree, .. } = w {
            let ext = extension(model.field(), *degree)?;
            let pinv = p.inverse().expect("checked invertible");
            let emb = |m: &Matrix<Fq>| m.map_entries(&ext.field, |x| ext.embedding.map(x));
            if !pairs.iter().all(|(a, b)| p.mul(&emb(a)).mul(&pinv) == emb(b)) {
                return Err(ClassifyError::InvariantFailure {
                    detail: format!("{p:?} does not conjugate the closure"),
                    tuple: record(),
                });
            }
        }
    }

    if witnesses.is_empty() {
        return Err(ClassifyError::TheoryViolation {
            detail: format!("closure of dimension {} has no witness", span.dim()),
            tuple: record(),
        });
    }
    Ok(Classification { closure_dim: span.dim(), p1_dim: p1.dim(), witnesses })
}

/// `{p : p x = y p}` for every pair `(x, y)`, as a subspace of `K^{n²}`.
pub fn conjugator_space<F: Field>(field: &F, n: usize, pairs: &[(Matrix<F>, Matrix<F>)]) -> Subspace<F> {
    let mut rows = Vec::new();
    for (x, y) in pairs {
        for i in 0..n {
            for j in 0..n {
                let mut row = vec![field.zero(); n * n];
                for k in 0..n {
                    row[i * n + k] = field.add(&row[i * n + k], x.get(k, j));
                    row[k * n + j] = field.sub(&row[k * n + j], y.get(i, k));
                }
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return Subspace::full(field, n * n);
    }
    Matrix::from_rows(field, &rows).expect("rectangular").kernel()
}

/// Intersects with symmetric (`alternating = false`) or alternating matrices.
fn restrict_symmetry<F: Field>(space: &Subspace<F>, n: usize, alternating: bool) -> Subspace<F> {
    let f = space.field();
    let mut rows: Vec<Vec<F::Elem>> = space.perp().basis().to_vec();
    for i in 0..n {
        for j in i..n {
            let mut row = vec![f.zero(); n * n];
            if i == j {
                if alternating {
                    row[i * n + i] = f.one();
                    rows.push(row);
                }
                continue;
            }
            row[i * n + j] = f.one();
            row[j * n + i] = if alternating { f.one() } else { f.neg(&f.one()) };
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return space.clone();
    }
    Matrix::from_rows(f, &rows).expect("rectangular").kernel()
}

/// Looks for an invertible `p` of kind `want` in `space`.
///
/// `det(p)·p_jj` has degree at most `n+1` in each coordinate, so if such a
/// `p` exists over the algebraic closure, one exists on any grid `S^m` with
/// `|S| ≥ n+2`. The rational search comes first; when `F_q` is too small for
/// the grid argument the grid is taken in the least extension that is large
/// enough.
fn find_conjugator(
    base: &Fq,
    n: usize,
    space: &Subspace<Fq>,
    want: SymmetryKind,
    budget: u128,
) -> Result<Option<(Matrix<Fq>, u32)>, ClassifyError> {
    let m = space.dim();
    if m == 0 {
        return Ok(None);
    }
    let q = base.size() as u128;
    let grid = (n + 2) as u128;
    let rational_cost = q.checked_pow(m as u32).unwrap_or(u128::MAX);
    if rational_cost <= budget {
        if let Some(p) = grid_search(base, n, space, q as u64, want, 1)? {
            return Ok(Some(p));
        }
        if q >= grid {
            return Ok(None);
        }
    }
    let cost = grid.checked_pow(m as u32).unwrap_or(u128::MAX);
    if cost > budget {
        return Err(SubspaceError::BudgetExceeded { projected: cost, budget }.into());
    }
    let mut k = 1;
    while q.pow(k) < grid {
        k += 1;
    }
    grid_search(base, n, space, grid as u64, want, k)
}

fn grid_search(
    base: &Fq,
    n: usize,
    space: &Subspace<Fq>,
    width: u64,
    want: SymmetryKind,
    k: u32,
) -> Result<Option<(Matrix<Fq>, u32)>, ClassifyError> {
    let ext = extension(base, k)?;
    let f = &ext.field;
    let basis: Vec<Vec<u64>> = space.basis().iter().map(|v| v.iter().map(|x| ext.embedding.map(x)).collect()).collect();
    let m = basis.len();
    let mut counter = vec![0u64; m];
    loop {
        // advance first so the zero combination is skipped
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            counter[pos] += 1;
            if counter[pos] < width {
                break;
            }
            counter[pos] = 0;
        }
        let mut data = vec![0u64; n * n];
        for (c, b) in counter.iter().zip(&basis) {
            let c = f.elem_at(*c);
            if c != 0 {
                for (d, x) in data.iter_mut().zip(b) {
                    *d = f.mul_add(d, &c, x);
                }
            }
        }
        let p = Matrix::from_vec(f, n, n, data).expect("n*n");
        if symmetry_kind(&p).expect("square") == want && !f.is_zero(&p.determinant().expect("square")) {
            return Ok(Some((p, k)));
        }
    }
}

/// Common invariant subspaces of `mats` with dimensions in `dims`, searched
/// over `F_{q^k}` for `k = 1..=max_ext`.
///
/// With `first_only`, returns the first hit in order of increasing `k`, then
/// dimension, then subspace enumeration order. Otherwise returns, for each
/// dimension, the first hit of least degree.
pub fn invariant_subspaces(
    base: &Fq,
    n: usize,
    mats: &[Matrix<Fq>],
    dims: &[usize],
    first_only: bool,
    max_ext: u32,
    budget: u128,
) -> Result<Vec<(Subspace<Fq>, u32)>, ClassifyError> {
    let mut out = Vec::new();
    if first_only {
        for k in 1..=max_ext {
            for &d in dims {
                if let Some(v) = find_invariant(base, n, mats, d, k, budget)? {
                    out.push((v, k));
                    return Ok(out);
                }
            }
        }
    } else {
        for &d in dims {
            for k in 1..=max_ext {
                if let Some(v) = find_invariant(base, n, mats, d, k, budget)? {
                    out.push((v, k));
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn find_invariant(
    base: &Fq,
    n: usize,
    mats: &[Matrix<Fq>],
    d: usize,
    k: u32,
    budget: u128,
) -> Result<Option<Subspace<Fq>>, ClassifyError> {
    let ext = extension(base, k)?;
    let f = &ext.field;
    let mats: Vec<Matrix<Fq>> = mats.iter().map(|m| m.map_entries(f, |x| ext.embedding.map(x))).collect();
    if gaussian_binomial(n, d, f.size()) <= budget {
        let found = enumerate_subspaces(f, n, d, budget)?.find(|v| mats.iter().all(|m| v.is_invariant_under(m)));
        return Ok(found);
    }
    Ok(spin_search(f, n, &mats, d, budget))
}

/// Smallest subspace containing `v` and stable under `mats`.
pub fn spin<F: Field>(field: &F, n: usize, mats: &[Matrix<F>], v: &[F::Elem]) -> Subspace<F> {
    let mut span = Subspace::from_spanning(field, n, vec![v.to_vec()]);
    let mut queue = vec![v.to_vec()];
    while let Some(w) = queue.pop() {
        for m in mats {
            let img = m.mul_vec(&w);
            if !span.contains(&img) {
                span = span.sum(&Subspace::from_spanning(field, n, vec![img.clone()])).expect("same ambient");
                queue.push(img);
            }
        }
    }
    span
}

/// Spins eigenvectors of the generators and of their transposes (giving
/// perps). Used only when enumeration is over budget; may miss subspaces
/// that are neither cyclic nor co-cyclic.
fn spin_search(f: &Fq, n: usize, mats: &[Matrix<Fq>], d: usize, budget: u128) -> Option<Subspace<Fq>> {
    if (f.size() as u128) > budget {
        return None;
    }
    let transposed: Vec<_> = mats.iter().map(|m| m.transpose()).collect();
    for (set, target, dual) in [(mats, d, false), (&transposed[..], n - d, true)] {
        for m in set {
            for lambda in 0..f.size() {
                let shifted = m.sub(&Matrix::identity(f, n).scale(&lambda));
                for v in shifted.kernel().basis() {
                    let w = spin(f, n, set, v);
                    if w.dim() == target {
                        return Some(if dual { w.perp() } else { w });
                    }
                }
            }
        }
    }
    None
}
