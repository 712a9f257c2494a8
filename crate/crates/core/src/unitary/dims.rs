//! Closed-form dimensions for `(Aₙ, *)`: the non-generating locus, its
//! components and the orbit data of the maximal subalgebras.

use serde::{Deserialize, Serialize};

/// Formula values for one `(n, r)`. Dimensions are signed so that
/// degenerate inputs never wrap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimsRecord {
    pub n: u64,
    pub r: u64,
    /// `r · dim A = 2rn²`.
    pub ambient: i64,
    pub dim_z: i64,
    /// `(2r-1)(n-1)`, or `r` when `n = 1`.
    pub c_a: i64,
    /// `(i, dim X_i)` for `1 ≤ i ≤ n-1`.
    pub dim_x: Vec<(u64, i64)>,
    /// Upper bound for `dim Ȳ`; exact iff the characteristic is not 2.
    pub dim_y_bar: i64,
    pub dim_y_bar_exact: bool,
    /// `dim Ȳ′`, only for even `n`.
    pub dim_y_prime_bar: Option<i64>,
    /// `(i, s(i, r))`.
    pub s: Vec<(u64, i64)>,
    /// `(i, dim Stab(A_{V(i)}))`.
    pub stab_av: Vec<(u64, i64)>,
    /// `dim PO_n = n(n-1)/2` outside characteristic 2; in characteristic 2
    /// only the lower bound is known, and this field holds that bound.
    pub stab_bi: i64,
    pub stab_bi_exact: bool,
    pub stab_bomega: Option<i64>,
    pub dim_g: i64,
}

/// Evaluates every closed form for `(n, r)`; `characteristic` only affects
/// the exactness flags.
pub fn dims(n: u64, r: u64, characteristic: u64) -> DimsRecord {
    let (ni, ri) = (n as i64, r as i64);
    let n2 = ni * ni;
    let dim_z = if n == 1 { ri } else { 2 * ri * n2 - (2 * ri - 1) * (ni - 1) };
    let c_a = 2 * ri * n2 - dim_z;
    let is = 1..n;
    DimsRecord {
        n,
        r,
        ambient: 2 * ri * n2,
        dim_z,
        c_a,
        dim_x: is.clone().map(|i| (i, 2 * ri * n2 - (2 * ri - 1) * (ni - i as i64) * i as i64)).collect(),
        dim_y_bar: (ri + 1) * n2 - ni * (ni - 1) / 2 - 1,
        dim_y_bar_exact: characteristic != 2,
        dim_y_prime_bar: (n % 2 == 0).then(|| (ri + 1) * n2 - ni * (ni + 1) / 2 - 1),
        s: is.clone().map(|i| (i, (2 * ri - 1) * (n2 - i as i64 * (ni - i as i64)) + 1)).collect(),
        stab_av: is.map(|i| (i, n2 - i as i64 * (ni - i as i64) - 1)).collect(),
        stab_bi: ni * (ni - 1) / 2,
        stab_bi_exact: characteristic != 2,
        stab_bomega: (n % 2 == 0).then(|| ni * (ni + 1) / 2),
        dim_g: n2 - 1,
    }
}

/// A `G`-orbit of maximal subalgebras: representative dimension, stabilizer
/// dimension, and whether `r` elements suffice to generate it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitDatum {
    pub label: String,
    pub dim_subalgebra: i64,
    pub dim_stabilizer: i64,
    pub generated_by_r: bool,
}

/// Orbit representatives `A_{V(i)}`, `B_[I]` and (n even) `B_[Ω]` with
/// their generator counts.
pub fn orbit_data(n: u64, r: u64) -> Vec<OrbitDatum> {
    let ni = n as i64;
    let n2 = ni * ni;
    if n == 1 {
        return vec![OrbitDatum { label: "B[I]".into(), dim_subalgebra: 1, dim_stabilizer: 0, generated_by_r: true }];
    }
    let mut out: Vec<_> = (1..n)
        .map(|i| {
            let s = n2 - i as i64 * (ni - i as i64);
            OrbitDatum { label: format!("A[V({i})]"), dim_subalgebra: 2 * s, dim_stabilizer: s - 1, generated_by_r: r >= 1 }
        })
        .collect();
    out.push(OrbitDatum { label: "B[I]".into(), dim_subalgebra: n2, dim_stabilizer: ni * (ni - 1) / 2, generated_by_r: r >= 1 });
    if n % 2 == 0 {
        let needed = if n == 2 { 2 } else { 1 };
        out.push(OrbitDatum {
            label: "B[Omega]".into(),
            dim_subalgebra: n2,
            dim_stabilizer: ni * (ni + 1) / 2,
            generated_by_r: r >= needed,
        });
    }
    out
}

/// `dim G + max_i (r·dim A_i − dim H_i)`, exact when some maximizing orbit is
/// generated by `r` elements. `None` for an empty list.
pub fn general_dim_zr(dim_g: i64, orbits: &[OrbitDatum], r: u64) -> Option<(i64, bool)> {
    let score = |o: &OrbitDatum| r as i64 * o.dim_subalgebra - o.dim_stabilizer;
    let best = orbits.iter().map(score).max()?;
    let exact = orbits.iter().any(|o| score(o) == best && o.generated_by_r);
    Some((dim_g + best, exact))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let d = dims(2, 1, 0);
        assert_eq!((d.dim_z, d.ambient, d.c_a), (7, 8, 1));
        assert_eq!(d.dim_x, vec![(1, 7)]);
        assert_eq!(d.dim_y_bar, 6);
        assert_eq!(d.dim_y_prime_bar, Some(4));
        assert_eq!(dims(3, 2, 0).dim_z, 30);
        let one = dims(1, 5, 0);
        assert_eq!((one.dim_z, one.c_a), (5, 5));
        assert!(!dims(2, 1, 2).dim_y_bar_exact);
    }

    #[test]
    fn orbit_bound_matches_closed_form() {
        for n in 1..8 {
            for r in 1..6 {
                let d = dims(n, r, 0);
                let (bound, exact) = general_dim_zr(d.dim_g, &orbit_data(n, r), r).unwrap();
                assert_eq!(bound, d.dim_z, "n={n} r={r}");
                assert!(exact);
                for &(i, s) in &d.s {
                    let x = d.dim_x.iter().find(|(j, _)| *j == i).unwrap().1;
                    assert_eq!(x, s + d.dim_g);
                }
            }
        }
    }

    #[test]
    fn degenerate_orbit_list() {
        let o = OrbitDatum { label: "x".into(), dim_subalgebra: 0, dim_stabilizer: 0, generated_by_r: true };
        assert_eq!(general_dim_zr(0, &[o], 4), Some((0, true)));
        assert_eq!(general_dim_zr(0, &[], 4), None);
        let (v, exact) = general_dim_zr(3, &orbit_data(2, 1), 1).unwrap();
        assert_eq!((v, exact), (7, true));
    }
}
