//! Generator-count bounds for Azumaya algebras with unitary involution of
//! degree `n` over rings of Krull dimension `d`. Integer arithmetic only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("n = 1 is not covered by the upper bound (there c_A(r) = r); use theorem32_check")]
    DegreeOne,
    #[error("n must be at least 1")]
    DegreeZero,
    #[error("empty codimension table")]
    EmptyTable,
}

/// `c_A(r) = (2r-1)(n-1)` for `n > 1`, and `r` for `n = 1`.
pub fn codim(n: u64, r: u64) -> u64 {
    if n == 1 {
        r
    } else {
        (2 * r - 1) * (n - 1)
    }
}

/// `⌊d/(2n-2) + 3/2⌋ = ⌊(2d + 6n - 6) / (4n - 4)⌋`.
pub fn upper_bound(n: u64, d: u64) -> Result<u64, BoundsError> {
    match n {
        0 => Err(BoundsError::DegreeZero),
        1 => Err(BoundsError::DegreeOne),
        _ => Ok((2 * d + 6 * n - 6) / (4 * n - 4)),
    }
}

/// Least `r ≥ 1` with `c(r) > d` among `r = 1..=table.len()`, where
/// `table[r-1] = c(r)`; `Ok(None)` when no entry exceeds `d`.
pub fn theorem32_check(table: &[u64], d: u64) -> Result<Option<u64>, BoundsError> {
    if table.is_empty() {
        return Err(BoundsError::EmptyTable);
    }
    Ok(table.iter().position(|&c| c > d).map(|i| i as u64 + 1))
}

/// [`theorem32_check`] on the closed form, searching `r ≤ d + 2`, which
/// always suffices since `c_A(r) ≥ r`.
pub fn theorem32_formula(n: u64, d: u64) -> Option<u64> {
    let table: Vec<u64> = (1..=d + 2).map(|r| codim(n, r)).collect();
    theorem32_check(&table, d).expect("nonempty")
}

/// `⌈x/2⌉`.
pub fn ceil_half(x: u64) -> u64 {
    x.div_ceil(2)
}

/// Lower-bound examples: `⌊d/4⌋ + 1` for `n = 2`, `⌊d/(4n-4) + 3/2⌋` for
/// `n > 2`. These are stated for base fields of characteristic 0.
pub fn lower_bound_examples(n: u64, d: u64) -> Result<u64, BoundsError> {
    match n {
        0 => Err(BoundsError::DegreeZero),
        1 => Err(BoundsError::DegreeOne),
        2 => Ok(d / 4 + 1),
        _ => Ok((2 * d + 12 * n - 12) / (8 * n - 8)),
    }
}

/// `d + 1`, valid unless the algebra is of degree 2 with symplectic
/// involution.
pub fn noetherian_bound(d: u64) -> u64 {
    d + 1
}

pub const NOETHERIAN_EXCLUSION: &str = "not valid for degree-2 algebras with a symplectic involution";
pub const LOWER_BOUND_HYPOTHESIS: &str = "base field of characteristic 0";

/// One row of the bounds table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub n: u64,
    pub d: u64,
    pub upper: u64,
    pub theorem32: u64,
    pub lower: u64,
    pub noetherian: u64,
}

pub fn bounds_row(n: u64, d: u64) -> Result<BoundsRow, BoundsError> {
    Ok(BoundsRow {
        n,
        d,
        upper: upper_bound(n, d)?,
        theorem32: theorem32_formula(n, d).expect("c_A(r) >= r"),
        lower: lower_bound_examples(n, d)?,
        noetherian: noetherian_bound(d),
    })
}

/// All rows for `2 ≤ n ≤ nmax`, `0 ≤ d ≤ dmax`.
pub fn bounds_table(nmax: u64, dmax: u64) -> Vec<BoundsRow> {
    (2..=nmax).flat_map(|n| (0..=dmax).map(move |d| bounds_row(n, d).expect("n >= 2"))).collect()
}

pub fn table_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("n,d,upper,theorem32,lower,noetherian\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{},{}\n", r.n, r.d, r.upper, r.theorem32, r.lower, r.noetherian));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(upper_bound(2, 0), Ok(1));
        assert_eq!(upper_bound(2, 4), Ok(3));
        assert_eq!(upper_bound(3, 4), Ok(2));
        assert_eq!(upper_bound(1, 4), Err(BoundsError::DegreeOne));
        assert_eq!(lower_bound_examples(2, 8), Ok(3));
        assert_eq!(lower_bound_examples(3, 8), Ok(2));
        assert_eq!(ceil_half(5), 3);
        assert_eq!(noetherian_bound(0), 1);
        assert_eq!(noetherian_bound(3), 4);
        assert_eq!(noetherian_bound(10), 11);
        assert_eq!(theorem32_formula(4, 11), Some(3));
        assert_eq!(upper_bound(4, 11), Ok(3));
        assert_eq!(theorem32_formula(2, 0), Some(1));
        assert_eq!(theorem32_check(&[0, 0, 0], 0), Ok(None));
        assert_eq!(theorem32_check(&[], 0), Err(BoundsError::EmptyTable));
    }

    #[test]
    fn csv_header_and_rows() {
        let csv = table_csv(&bounds_table(3, 2));
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
        assert!(csv.starts_with("n,d,upper,theorem32,lower,noetherian\n2,0,1,1,1,1\n"));
    }

    proptest! {
        #[test]
        fn upper_is_monotone(n in 2u64..60, d in 0u64..600) {
            let u = upper_bound(n, d).unwrap();
            prop_assert!(upper_bound(n + 1, d).unwrap() <= u);
            prop_assert!(upper_bound(n, d + 1).unwrap() >= u);
        }

        #[test]
        fn lower_at_most_upper(n in 2u64..60, d in 0u64..600) {
            prop_assert!(lower_bound_examples(n, d).unwrap() <= upper_bound(n, d).unwrap());
        }
    }
}
