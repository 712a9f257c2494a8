use invalg::field::{extension, Field, FiniteField, Fq, Rationals};
use invalg::matrix::{symmetry_kind, Matrix, SymmetryKind};
use invalg::mualg::AlgElement;
use invalg::subspace::Subspace;
use invalg::unitary::{
    classify, conjugator_space, nonclosed_triple, ClassifyOptions, UnitaryModel, Witness,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fq(p: u64) -> Fq {
    Fq::prime(p).unwrap()
}

fn random_matrix(f: &Fq, n: usize, rng: &mut ChaCha8Rng) -> Matrix<Fq> {
    let data = (0..n * n).map(|_| f.elem_at(rng.gen_range(0..f.size()))).collect();
    Matrix::from_vec(f, n, n, data).unwrap()
}

fn random_invertible(f: &Fq, n: usize, rng: &mut ChaCha8Rng) -> Matrix<Fq> {
    loop {
        let m = random_matrix(f, n, rng);
        if m.is_invertible() {
            return m;
        }
    }
}

fn random_proper_subspace(f: &Fq, n: usize, rng: &mut ChaCha8Rng) -> Subspace<Fq> {
    loop {
        let k = rng.gen_range(1..n);
        let vs = (0..k).map(|_| (0..n).map(|_| rng.gen_range(0..f.size())).collect()).collect();
        let v = Subspace::from_spanning(f, n, vs);
        if !v.is_trivial() {
            return v;
        }
    }
}

/// Invertible symmetric or alternating matrix.
fn random_form(f: &Fq, n: usize, rng: &mut ChaCha8Rng) -> Matrix<Fq> {
    let alternating = n % 2 == 0 && rng.gen_bool(0.5);
    loop {
        let m = random_matrix(f, n, rng);
        let p = if alternating { m.sub(&m.transpose()) } else { m.add(&m.transpose()) };
        if p.is_invertible() && symmetry_kind(&p).unwrap() != SymmetryKind::Neither {
            return p;
        }
    }
}

fn random_tuple(m: &UnitaryModel<Fq>, r: usize, rng: &mut ChaCha8Rng) -> Vec<AlgElement<u64>> {
    (0..r).map(|_| m.random_element(rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn action_lemma(seed in any::<u64>(), n in 2usize..=4) {
        let f = fq(7);
        let m = UnitaryModel::new(&f, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_invertible(&f, n, &mut rng);
        let v = random_proper_subspace(&f, n, &mut rng);
        let lhs = m.act_span(&c, &m.subalg_av(&v).unwrap()).unwrap();
        prop_assert_eq!(lhs, m.subalg_av(&v.image(&c)).unwrap());
        let p = random_form(&f, n, &mut rng);
        let ci = c.inverse().unwrap();
        let lhs = m.act_span(&c, &m.subalg_bp(&p).unwrap()).unwrap();
        prop_assert_eq!(lhs, m.subalg_bp(&ci.transpose().mul(&p).mul(&ci)).unwrap());
    }

    #[test]
    fn act_is_an_automorphism(seed in any::<u64>(), n in 1usize..=3) {
        let f = fq(5);
        let m = UnitaryModel::new(&f, n).unwrap();
        let alg = m.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_invertible(&f, n, &mut rng);
        let (x, y) = (m.random_element(&mut rng), m.random_element(&mut rng));
        let act = |z: &AlgElement<u64>| m.act(&c, z).unwrap();
        let swap = |z: &AlgElement<u64>| m.act_swap(z);
        let maps: [&dyn Fn(&AlgElement<u64>) -> AlgElement<u64>; 2] = [&act, &swap];
        for g in maps {
            prop_assert_eq!(g(&alg.mul(&x, &y)), alg.mul(&g(&x), &g(&y)));
            prop_assert_eq!(g(&alg.apply_involution(&x)), alg.apply_involution(&g(&x)));
            prop_assert_eq!(g(&alg.unit_element()), alg.unit_element());
        }
    }

    #[test]
    fn closure_commutes_with_automorphisms(seed in any::<u64>(), n in 2usize..=3, r in 1usize..=2) {
        let f = fq(3);
        let m = UnitaryModel::new(&f, n).unwrap();
        let alg = m.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // mix generic tuples with ones inside a maximal subalgebra
        let mut t = random_tuple(&m, r, &mut rng);
        if rng.gen_bool(0.5) {
            let v = random_proper_subspace(&f, n, &mut rng);
            let s = m.subalg_av(&v).unwrap();
            t = t.iter().map(|x| AlgElement(s.space.reduce(&x.0).iter().zip(&x.0).map(|(a, b)| f.sub(b, a)).collect())).collect();
        }
        let c = random_invertible(&f, n, &mut rng);
        let moved: Vec<_> = t.iter().map(|x| m.act(&c, x).unwrap()).collect();
        prop_assert_eq!(alg.closure(&moved), m.act_span(&c, &alg.closure(&t)).unwrap());
        let swapped: Vec<_> = t.iter().map(|x| m.act_swap(x)).collect();
        let image: Vec<_> = alg.closure(&t).basis_elements().iter().map(|x| m.act_swap(x).0).collect();
        prop_assert_eq!(alg.closure(&swapped).space, Subspace::from_spanning(&f, m.dim(), image));
    }

    #[test]
    fn generation_is_stable_under_base_change(seed in any::<u64>(), r in 1usize..=2) {
        let f2 = fq(2);
        let m = UnitaryModel::new(&f2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tuple(&m, r, &mut rng);
        let d2 = m.algebra().closure_dim(&t);
        let mut prev = (m.algebra().clone(), f2.clone(), t);
        for k in [2, 4] {
            let big = Fq::new(2, k).unwrap();
            let emb = prev.1.embedding_into(&big).unwrap();
            let alg = prev.0.base_change_fq(&big).unwrap();
            let t: Vec<_> = prev.2.iter().map(|x| AlgElement(x.0.iter().map(|c| emb.map(c)).collect())).collect();
            prop_assert_eq!(alg.closure_dim(&t), d2);
            prev = (alg, big, t);
        }
    }

    #[test]
    fn containment_identity_n2(seed in any::<u64>()) {
        let f = fq(5);
        let m = UnitaryModel::new(&f, 2).unwrap();
        let om = m.omega().unwrap();
        let omi = om.inverse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&f, 2, &mut rng);
        let gamma = f.neg(&f.div(&a.trace(), &2).unwrap());
        let ug = a.add(&m.identity().scale(&gamma));
        prop_assume!(ug.is_invertible());
        let s = om.mul(&ug);
        prop_assert!(s.is_symmetric());
        prop_assert_eq!(s.mul(&a).mul(&s.inverse().unwrap()), om.mul(&a).mul(&omi));
        // the same element also lies in A_V for an eigenline V of a
        let ext = extension(&f, 2).unwrap();
        let big = &ext.field;
        let mb = UnitaryModel::new(big, 2).unwrap();
        let ab = a.map_entries(big, |x| ext.embedding.map(x));
        let x = mb.graph_element(&mb.omega().unwrap(), &ab).unwrap();
        let lambda = (0..big.size()).find(|l| !ab.sub(&mb.identity().scale(l)).is_invertible()).unwrap();
        let v = ab.sub(&mb.identity().scale(&lambda)).kernel();
        let (s0, t0) = (v.basis()[0][0], v.basis()[0][1]);
        let vp = Subspace::from_spanning(big, 2, vec![vec![big.neg(&t0), s0]]);
        prop_assert_eq!(&v.perp(), &vp);
        prop_assert!(mb.subalg_av(&v).unwrap().contains(&x));
    }

    #[test]
    fn containment_identity_n4(seed in any::<u64>()) {
        let f = fq(7);
        let m = UnitaryModel::new(&f, 4).unwrap();
        let om = m.omega().unwrap();
        let omi = om.inverse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // block-scalar elements I₂ ⊗ a₂ give a symmetric Ω(a + γI)
        let a2 = random_matrix(&f, 2, &mut rng);
        let a = Matrix::identity(&f, 2).kron(&a2);
        let gamma = f.neg(&f.div(&a2.trace(), &2).unwrap());
        let ug = a.add(&m.identity().scale(&gamma));
        if ug.is_invertible() {
            let s = om.mul(&ug);
            prop_assert!(s.is_symmetric());
            prop_assert_eq!(s.mul(&a).mul(&s.inverse().unwrap()), om.mul(&a).mul(&omi));
        }
        // for every a, Ω(a + γI) conjugates a like Ω does
        let b = random_matrix(&f, 4, &mut rng);
        let g = f.elem_at(rng.gen_range(0..7));
        let ub = b.add(&m.identity().scale(&g));
        prop_assume!(ub.is_invertible());
        let s = om.mul(&ub);
        prop_assert_eq!(s.mul(&b).mul(&s.inverse().unwrap()), om.mul(&b).mul(&omi));
    }
}

#[test]
fn nonclosedness_matrices() {
    let f = fq(5);
    for n in [2, 3] {
        for alpha in 0..5u64 {
            let (a, b, p) = nonclosed_triple(&f, n, &alpha);
            let l = conjugator_space(&f, n, &[(a.clone(), b.clone())]);
            if alpha != 1 {
                assert_eq!(p.mul(&a).mul(&p.inverse().unwrap()), b);
                assert!(l.contains(p.data()));
                continue;
            }
            // every element of the solution space is singular
            let m = l.dim() as u32;
            assert!(m > 0);
            for idx in 0..5u64.pow(m) {
                let mut rest = idx;
                let mut data = vec![0u64; n * n];
                for basis in l.basis() {
                    let c = rest % 5;
                    rest /= 5;
                    for (d, x) in data.iter_mut().zip(basis) {
                        *d = f.mul_add(d, &c, x);
                    }
                }
                assert!(!Matrix::from_vec(&f, n, n, data).unwrap().is_invertible());
            }
        }
    }
}

/// Every non-generating closure sits inside the subalgebra named by each of
/// its witnesses.
#[test]
fn closures_lie_in_witness_subalgebras() {
    let opts = ClassifyOptions { all_witnesses: true, ..Default::default() };
    for (n, p) in [(2usize, 3u64), (3, 2), (2, 2)] {
        let f = fq(p);
        let m = UnitaryModel::new(&f, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64 * 100 + p);
        let mut seen = 0;
        while seen < 500 {
            let t = random_tuple(&m, 1, &mut rng);
            let c = classify(&m, &t, &opts).unwrap();
            if c.generates() {
                continue;
            }
            seen += 1;
            let span = m.algebra().closure(&t);
            for w in &c.witnesses {
                let (k, sub) = match w {
                    Witness::InvariantSubspace { subspace, degree } => (*degree, Ok(subspace.clone())),
                    Witness::Conjugator { p, degree, .. } => (*degree, Err(p.clone())),
                    Witness::Generates => unreachable!(),
                };
                let ext = extension(&f, k).unwrap();
                let mb = UnitaryModel::new(&ext.field, n).unwrap();
                let target = match sub {
                    Ok(v) => mb.subalg_av(&v).unwrap(),
                    Err(p) => mb.subalg_bp(&p).unwrap(),
                };
                for x in span.basis_elements() {
                    let y = AlgElement(x.0.iter().map(|c| ext.embedding.map(c)).collect());
                    assert!(target.contains(&y), "{w:?}");
                }
            }
        }
    }
}

#[test]
fn schur_line_on_graph_subalgebras() {
    // B_[p] for random forms: the conjugator space of the whole subalgebra is Kp
    let f = fq(7);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=4 {
        let m = UnitaryModel::new(&f, n).unwrap();
        for _ in 0..10 {
            let p = random_form(&f, n, &mut rng);
            let pairs: Vec<_> = m.subalg_bp(&p).unwrap().basis_elements().iter().map(|x| m.components(x)).collect();
            let l = conjugator_space(&f, n, &pairs);
            assert_eq!(l, Subspace::from_spanning(&f, n * n, vec![p.data().to_vec()]));
        }
    }
}

/// Derivation dimension from a linear system built with plain matrix
/// products on `Mₙ × Mₙ`, independent of the structure constants.
fn derivation_dim_oracle<F: Field>(f: &F, n: usize) -> usize {
    let m = UnitaryModel::new(f, n).unwrap();
    let big_n = 2 * n * n;
    let basis: Vec<(Matrix<F>, Matrix<F>)> = (0..big_n).map(|i| m.components(&m.algebra().basis_element(i))).collect();
    let coords = |a: &Matrix<F>, b: &Matrix<F>| m.elem(a, b).0;
    let prod: Vec<Vec<Vec<F::Elem>>> = basis
        .iter()
        .map(|(a, b)| basis.iter().map(|(c, d)| coords(&a.mul(c), &b.mul(d))).collect())
        .collect();
    let sigma: Vec<Vec<F::Elem>> = basis.iter().map(|(a, b)| coords(&b.transpose(), &a.transpose())).collect();
    let var = |i: usize, j: usize| i * big_n + j;
    let mut rows: Vec<Vec<F::Elem>> = Vec::new();
    for a in 0..big_n {
        for b in 0..big_n {
            for t in 0..big_n {
                let mut row = vec![f.zero(); big_n * big_n];
                for k in 0..big_n {
                    row[var(t, k)] = f.add(&row[var(t, k)], &prod[a][b][k]);
                }
                for i in 0..big_n {
                    row[var(i, a)] = f.sub(&row[var(i, a)], &prod[i][b][t]);
                    row[var(i, b)] = f.sub(&row[var(i, b)], &prod[a][i][t]);
                }
                if row.iter().any(|x| !f.is_zero(x)) {
                    rows.push(row);
                }
            }
        }
    }
    // (Dσ)[i][j] = Σ_k D[i][k] σ[k][j], (σD)[i][j] = Σ_k σ[i][k] D[k][j]
    for i in 0..big_n {
        for j in 0..big_n {
            let mut row = vec![f.zero(); big_n * big_n];
            for k in 0..big_n {
                row[var(i, k)] = f.add(&row[var(i, k)], &sigma[j][k]);
                row[var(k, j)] = f.sub(&row[var(k, j)], &sigma[k][i]);
            }
            rows.push(row);
        }
    }
    let one = coords(&m.identity(), &m.identity());
    for i in 0..big_n {
        let mut row = vec![f.zero(); big_n * big_n];
        for j in 0..big_n {
            row[var(i, j)] = one[j].clone();
        }
        rows.push(row);
    }
    let count = rows.len();
    Matrix::from_vec(f, count, big_n * big_n, rows.concat()).unwrap().kernel().dim()
}

#[test]
fn derivations_match_linear_system_oracle() {
    for n in 1..=3 {
        let ours = UnitaryModel::new(&Rationals, n).unwrap().algebra().derivation_algebra().0;
        let oracle = derivation_dim_oracle(&Rationals, n);
        assert_eq!(ours, oracle, "n={n}");
        assert_eq!(oracle, n * n - 1);
    }
    let m = UnitaryModel::new(&Rationals, 2).unwrap();
    let (_, basis) = m.algebra().derivation_algebra();
    let inv = m.algebra().involution();
    for b in &basis {
        assert_eq!(b.mul(inv), inv.mul(b));
    }
}
