//! Subspaces of `K^n` kept in canonical reduced row echelon form.

use std::fmt;

use thiserror::Error;

use crate::field::{Field, FiniteField};
use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubspaceError {
    #[error("ambient dimensions differ ({0} vs {1})")]
    AmbientMismatch(usize, usize),
    #[error("enumeration would yield {projected} subspaces, over the budget of {budget}")]
    BudgetExceeded { projected: u128, budget: u128 },
    #[error("subspace enumeration needs a finite field")]
    InfiniteField,
    #[error("dimension {d} exceeds ambient dimension {n}")]
    BadDimension { n: usize, d: usize },
}

/// A subspace of `K^n`. Basis rows are the nonzero rows of the RREF, so two
/// equal subspaces have identical representations.
#[derive(Clone)]
pub struct Subspace<F: Field> {
    field: F,
    ambient: usize,
    basis: Vec<Vec<F::Elem>>,
    pivots: Vec<usize>,
}

impl<F: Field> PartialEq for Subspace<F> {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.basis == other.basis
    }
}
impl<F: Field> Eq for Subspace<F> {}

impl<F: Field> std::hash::Hash for Subspace<F> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.ambient.hash(state);
        self.basis.hash(state);
    }
}

impl<F: Field> fmt::Debug for Subspace<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .basis
            .iter()
            .map(|r| format!("({})", r.iter().map(|x| self.field.format_elem(x)).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "span{{{}}} ⊆ K^{}", rows.join(", "), self.ambient)
    }
}

impl<F: Field> Subspace<F> {
    pub fn zero(field: &F, ambient: usize) -> Self {
        Subspace { field: field.clone(), ambient, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(field: &F, ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| (0..ambient).map(|j| if i == j { field.one() } else { field.zero() }).collect())
            .collect();
        Subspace { field: field.clone(), ambient, basis, pivots: (0..ambient).collect() }
    }

    /// `K e_1 + ... + K e_i` (first `i` standard basis vectors).
    pub fn standard(field: &F, ambient: usize, i: usize) -> Self {
        let basis = (0..i)
            .map(|r| (0..ambient).map(|j| if r == j { field.one() } else { field.zero() }).collect())
            .collect();
        Subspace { field: field.clone(), ambient, basis, pivots: (0..i).collect() }
    }

    pub fn from_spanning(field: &F, ambient: usize, vectors: Vec<Vec<F::Elem>>) -> Self {
        if vectors.is_empty() {
            return Self::zero(field, ambient);
        }
        let m = Matrix::from_rows(field, &vectors).expect("vectors share the ambient dimension");
        assert_eq!(m.cols(), ambient, "vector length differs from ambient dimension");
        let r = m.rref();
        let basis = (0..r.rank).map(|i| r.matrix.row(i).to_vec()).collect();
        Subspace { field: field.clone(), ambient, basis, pivots: r.pivots }
    }

    /// Trusts that `basis` is already in RREF with the given pivots.
    pub(crate) fn from_rref_unchecked(field: &F, ambient: usize, basis: Vec<Vec<F::Elem>>, pivots: Vec<usize>) -> Self {
        Subspace { field: field.clone(), ambient, basis, pivots }
    }

    pub fn field(&self) -> &F {
        &self.field
    }
    pub fn ambient(&self) -> usize {
        self.ambient
    }
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn basis(&self) -> &[Vec<F::Elem>] {
        &self.basis
    }
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }
    pub fn is_trivial(&self) -> bool {
        self.dim() == 0 || self.dim() == self.ambient
    }

    pub fn basis_matrix(&self) -> Matrix<F> {
        if self.basis.is_empty() {
            return Matrix::zeros(&self.field, 0, self.ambient);
        }
        Matrix::from_rows(&self.field, &self.basis).expect("rectangular basis")
    }

    /// Reduces `v` against the basis; zero iff `v` lies in the subspace.
    pub fn reduce(&self, v: &[F::Elem]) -> Vec<F::Elem> {
        let f = &self.field;
        let mut w = v.to_vec();
        for (row, &pc) in self.basis.iter().zip(&self.pivots) {
            let c = w[pc].clone();
            if f.is_zero(&c) {
                continue;
            }
            for (wi, ri) in w.iter_mut().zip(row) {
                *wi = f.sub(wi, &f.mul(&c, ri));
            }
        }
        w
    }

    pub fn contains(&self, v: &[F::Elem]) -> bool {
        self.reduce(v).iter().all(|x| self.field.is_zero(x))
    }

    fn check(&self, other: &Self) -> Result<(), SubspaceError> {
        if self.ambient != other.ambient {
            Err(SubspaceError::AmbientMismatch(self.ambient, other.ambient))
        } else {
            Ok(())
        }
    }

    pub fn is_subspace_of(&self, other: &Self) -> Result<bool, SubspaceError> {
        self.check(other)?;
        Ok(self.basis.iter().all(|v| other.contains(v)))
    }

    pub fn sum(&self, other: &Self) -> Result<Self, SubspaceError> {
        self.check(other)?;
        let vs = self.basis.iter().chain(&other.basis).cloned().collect();
        Ok(Self::from_spanning(&self.field, self.ambient, vs))
    }

    /// `V ∩ W = (V^⊥ + W^⊥)^⊥`, valid because the standard form is nondegenerate.
    pub fn intersection(&self, other: &Self) -> Result<Self, SubspaceError> {
        self.check(other)?;
        Ok(self.perp().sum(&other.perp())?.perp())
    }

    /// Orthogonal complement with respect to `<x, y> = xᵗ y`.
    pub fn perp(&self) -> Self {
        if self.basis.is_empty() {
            return Self::full(&self.field, self.ambient);
        }
        self.basis_matrix().kernel()
    }

    /// The image `cV`.
    pub fn image(&self, c: &Matrix<F>) -> Self {
        assert_eq!(c.cols(), self.ambient);
        let vs = self.basis.iter().map(|v| c.mul_vec(v)).collect();
        Self::from_spanning(&self.field, c.rows(), vs)
    }

    /// True iff `a V ⊆ V`.
    pub fn is_invariant_under(&self, a: &Matrix<F>) -> bool {
        self.basis.iter().all(|v| self.contains(&a.mul_vec(v)))
    }

    pub fn map_field<G: Field>(&self, target: &G, f: impl Fn(&F::Elem) -> G::Elem) -> Subspace<G> {
        let vs = self.basis.iter().map(|v| v.iter().map(&f).collect()).collect();
        Subspace::from_spanning(target, self.ambient, vs)
    }
}

/// Number of `d`-dimensional subspaces of `F_q^n`.
pub fn gaussian_binomial(n: usize, d: usize, q: u64) -> u128 {
    if d > n {
        return 0;
    }
    let q = q as u128;
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..d {
        num = num.saturating_mul(q.saturating_pow((n - i) as u32).saturating_sub(1));
        den = den.saturating_mul(q.saturating_pow((i + 1) as u32).saturating_sub(1));
    }
    if num == u128::MAX {
        return u128::MAX;
    }
    num / den
}

/// Every `d`-dimensional subspace of `F_q^n`, each exactly once, ordered by
/// pivot set (lexicographic) and then by the free entries as a mixed-radix
/// counter.
pub fn enumerate_subspaces<F: FiniteField>(
    field: &F,
    n: usize,
    d: usize,
    budget: u128,
) -> Result<SubspaceIter<F>, SubspaceError> {
    if d > n {
        return Err(SubspaceError::BadDimension { n, d });
    }
    let projected = gaussian_binomial(n, d, field.size());
    if projected > budget {
        return Err(SubspaceError::BudgetExceeded { projected, budget });
    }
    let mut it = SubspaceIter { field: field.clone(), n, d, pivots: (0..d).collect(), free: Vec::new(), counter: Vec::new(), done: false };
    it.reset_free();
    Ok(it)
}

pub struct SubspaceIter<F: FiniteField> {
    field: F,
    n: usize,
    d: usize,
    pivots: Vec<usize>,
    free: Vec<(usize, usize)>,
    counter: Vec<u64>,
    done: bool,
}

impl<F: FiniteField> SubspaceIter<F> {
    fn reset_free(&mut self) {
        self.free.clear();
        for (row, &pc) in self.pivots.iter().enumerate() {
            for c in pc + 1..self.n {
                if !self.pivots.contains(&c) {
                    self.free.push((row, c));
                }
            }
        }
        self.counter = vec![0; self.free.len()];
    }

    fn next_pivots(&mut self) -> bool {
        let (n, d) = (self.n, self.d);
        let mut i = d;
        while i > 0 {
            i -= 1;
            if self.pivots[i] < n - d + i {
                self.pivots[i] += 1;
                for j in i + 1..d {
                    self.pivots[j] = self.pivots[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }

    fn current(&self) -> Subspace<F> {
        let f = &self.field;
        let mut basis = vec![vec![f.zero(); self.n]; self.d];
        for (row, &pc) in self.pivots.iter().enumerate() {
            basis[row][pc] = f.one();
        }
        for (&(row, c), &idx) in self.free.iter().zip(&self.counter) {
            basis[row][c] = f.elem_at(idx);
        }
        Subspace::from_rref_unchecked(f, self.n, basis, self.pivots.clone())
    }
}

impl<F: FiniteField> Iterator for SubspaceIter<F> {
    type Item = Subspace<F>;

    fn next(&mut self) -> Option<Subspace<F>> {
        if self.done {
            return None;
        }
        let out = self.current();
        let q = self.field.size();
        let mut carried = true;
        for slot in self.counter.iter_mut().rev() {
            *slot += 1;
            if *slot < q {
                carried = false;
                break;
            }
            *slot = 0;
        }
        if carried {
            if self.d == 0 || !self.next_pivots() {
                self.done = true;
            } else {
                self.reset_free();
            }
        }
        Some(out)
    }
}

/// Nonzero vectors of `F^n` up to scaling: first nonzero coordinate is 1,
/// ordered like the one-dimensional subspaces of [`enumerate_subspaces`].
pub fn projective_points<F: FiniteField>(
    field: &F,
    n: usize,
    budget: u128,
) -> Result<impl Iterator<Item = Vec<F::Elem>>, SubspaceError> {
    Ok(enumerate_subspaces(field, n, 1, budget)?.map(|s| s.basis()[0].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Fq, Rationals};
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn perp_examples() {
        let q = Rationals;
        let v1 = Subspace::standard(&q, 3, 1);
        let expect = Subspace::from_spanning(&q, 3, vec![vec![q.zero(), q.one(), q.zero()], vec![q.zero(), q.zero(), q.one()]]);
        assert_eq!(v1.perp(), expect);
        assert_eq!(Subspace::full(&q, 3).perp(), Subspace::zero(&q, 3));
        let f2 = Fq::prime(2).unwrap();
        let diag = Subspace::from_spanning(&f2, 2, vec![vec![1, 1]]);
        assert_eq!(diag.perp(), diag);
    }

    #[test]
    fn sum_and_intersection() {
        let q = Rationals;
        let e1 = Subspace::standard(&q, 2, 1);
        let e2 = Subspace::from_spanning(&q, 2, vec![vec![q.zero(), q.one()]]);
        assert_eq!(e1.sum(&e2).unwrap(), Subspace::full(&q, 2));
        assert_eq!(e1.intersection(&e2).unwrap(), Subspace::zero(&q, 2));
        assert!(e1.sum(&Subspace::zero(&q, 3)).is_err());
    }

    #[test]
    fn enumeration_small_counts() {
        let f2 = Fq::prime(2).unwrap();
        assert_eq!(enumerate_subspaces(&f2, 2, 1, 1000).unwrap().count(), 3);
        let f3 = Fq::prime(3).unwrap();
        assert_eq!(enumerate_subspaces(&f3, 2, 1, 1000).unwrap().count(), 4);
    }

    #[test]
    fn enumeration_n4_d2_q5() {
        // (q^4-1)(q^4-q) / ((q^2-1)(q^2-q)) evaluated directly
        let q: u128 = 5;
        let expect = (q.pow(4) - 1) * (q.pow(4) - q) / ((q.pow(2) - 1) * (q.pow(2) - q));
        assert_eq!(expect, 806);
        let f5 = Fq::prime(5).unwrap();
        let all: Vec<_> = enumerate_subspaces(&f5, 4, 2, 10_000).unwrap().collect();
        assert_eq!(all.len() as u128, expect);
        let distinct: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), all.len());
        assert!(all.iter().all(|s| s.dim() == 2));
    }

    #[test]
    fn enumeration_budget() {
        let f5 = Fq::prime(5).unwrap();
        match enumerate_subspaces(&f5, 4, 2, 100) {
            Err(SubspaceError::BudgetExceeded { projected, .. }) => assert_eq!(projected, 806),
            _ => panic!("expected budget refusal"),
        }
    }

    #[test]
    fn enumeration_matches_gaussian_binomial() {
        for q in [2u64, 3, 5] {
            let f = Fq::prime(q).unwrap();
            for n in 0..=4 {
                for d in 0..=n {
                    let subs: Vec<_> = enumerate_subspaces(&f, n, d, u128::MAX).unwrap().collect();
                    assert_eq!(subs.len() as u128, gaussian_binomial(n, d, q), "n={n} d={d} q={q}");
                    let distinct: HashSet<_> = subs.iter().cloned().collect();
                    assert_eq!(distinct.len(), subs.len());
                    for s in &subs {
                        assert_eq!(Subspace::from_spanning(&f, n, s.basis().to_vec()), *s);
                    }
                }
            }
        }
    }

    #[test]
    fn extension_field_enumeration() {
        let f4 = Fq::new(2, 2).unwrap();
        assert_eq!(enumerate_subspaces(&f4, 2, 1, 100).unwrap().count(), 5);
    }

    fn arb_subspace(p: u64, n: usize) -> impl Strategy<Value = Subspace<Fq>> {
        proptest::collection::vec(proptest::collection::vec(0..p, n), 0..=n)
            .prop_map(move |vs| Subspace::from_spanning(&Fq::prime(p).unwrap(), n, vs))
    }

    proptest! {
        #[test]
        fn perp_is_inclusion_reversing_involution(v in arb_subspace(5, 4), w in arb_subspace(5, 4)) {
            prop_assert_eq!(v.perp().perp(), v.clone());
            prop_assert_eq!(v.dim() + v.perp().dim(), 4);
            prop_assert_eq!(v.is_subspace_of(&w).unwrap(), w.perp().is_subspace_of(&v.perp()).unwrap());
        }

        #[test]
        fn dimension_formula(v in arb_subspace(3, 4), w in arb_subspace(3, 4)) {
            let s = v.sum(&w).unwrap();
            let i = v.intersection(&w).unwrap();
            prop_assert_eq!(s.dim() + i.dim(), v.dim() + w.dim());
            prop_assert!(i.is_subspace_of(&v).unwrap() && i.is_subspace_of(&w).unwrap());
            prop_assert_eq!(v.intersection(&v).unwrap(), v.clone());
        }

        #[test]
        fn perp_char2(v in arb_subspace(2, 4)) {
            prop_assert_eq!(v.perp().perp(), v.clone());
        }
    }
}
