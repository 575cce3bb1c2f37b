//! Exact verification that the logarithmic-derivative ratios of successive
//! members of the [`yablonskii`](super::yv::yablonskii) family solve the
//! second-order rational equation
//!
//! ```text
//! w''(z) = 2 w^3(z) + z w(z) + j.
//! ```
//!
//! The candidate w_j = (ln(Q_{j-1}/Q_j))' is a rational function; the check
//! clears denominators and returns the numerator of w'' - 2w^3 - zw - j,
//! which must be the zero polynomial.

use num_rational::BigRational;

use super::ratpoly::RationalPoly;
use crate::{Error, Result};

/// Numerator of the residual for index j, over the denominator
/// (Q_{j-1} Q_j)^3. `qs` must hold Q_0 .. Q_j at least.
pub fn painleve2_residual(j: usize, qs: &[RationalPoly]) -> Result<RationalPoly> {
    if qs.len() <= j {
        return Err(Error::Domain(format!(
            "need polynomials up through index {j}, got {}",
            qs.len()
        )));
    }
    let one = RationalPoly::one();
    let (q_prev, q) = if j == 0 {
        (&one, &qs[0])
    } else {
        (&qs[j - 1], &qs[j])
    };
    // w = n/d with n = Q'_{j-1} Q_j - Q_{j-1} Q'_j, d = Q_{j-1} Q_j
    let n = &(&q_prev.derivative() * q) - &(q_prev * &q.derivative());
    let d = q_prev * q;
    let (dn, dd) = (n.derivative(), d.derivative());
    let (d2n, d2d) = (dn.derivative(), dd.derivative());
    // w'' over d^3: (n'' d - n d'') d - 2 d' (n' d - n d')
    let wpp = &(&(&(&d2n * &d) - &(&n * &d2d)) * &d)
        - &(&dd.scale(&BigRational::from_integer(2.into())) * &(&(&dn * &d) - &(&n * &dd)));
    let cube = &(&n * &n) * &n;
    let z = RationalPoly::var();
    let alpha = RationalPoly::from_integers(&[j as i64]);
    let d2 = &d * &d;
    let d3 = &d2 * &d;
    let residual = &(&(&wpp - &cube.scale(&BigRational::from_integer(2.into())))
        - &(&(&z * &n) * &d2))
        - &(&alpha * &d3);
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrable::yv::yablonskii;

    #[test]
    fn zero_index_is_trivially_satisfied() {
        let qs = yablonskii(1).unwrap();
        assert!(painleve2_residual(0, &qs).unwrap().is_zero());
    }

    #[test]
    fn first_index_matches_hand_check() {
        // w_1 = -1/z: n = -1, d = z, and w'' = -2/z^3 = 2w^3 + zw + 1
        let qs = yablonskii(1).unwrap();
        assert!(painleve2_residual(1, &qs).unwrap().is_zero());
    }

    #[test]
    fn residual_vanishes_through_index_five() {
        let qs = yablonskii(5).unwrap();
        for j in 0..=5 {
            assert!(
                painleve2_residual(j, &qs).unwrap().is_zero(),
                "nonzero residual at index {j}"
            );
        }
    }

    #[test]
    fn perturbed_family_is_rejected() {
        // breaking one coefficient must surface as a nonzero residual
        let mut qs = yablonskii(2).unwrap();
        qs[2] = &qs[2] + &RationalPoly::one();
        assert!(!painleve2_residual(2, &qs).unwrap().is_zero());
    }

    #[test]
    fn missing_members_are_reported() {
        let qs = yablonskii(2).unwrap();
        assert!(painleve2_residual(7, &qs).is_err());
    }
}
