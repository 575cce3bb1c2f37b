//! Dense polynomials over arbitrary-precision rationals, and their
//! complex extension. Every operation is exact; nothing here ever rounds.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Polynomial with `coeffs[k]` multiplying the k-th power. The trailing
/// coefficient is nonzero (the zero polynomial stores no coefficients).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

fn trimmed(mut coeffs: Vec<BigRational>) -> Vec<BigRational> {
    while coeffs.last().map_or(false, |c| c.is_zero()) {
        coeffs.pop();
    }
    coeffs
}

impl RationalPoly {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        RationalPoly {
            coeffs: trimmed(coeffs),
        }
    }

    pub fn zero() -> Self {
        RationalPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        RationalPoly {
            coeffs: vec![BigRational::one()],
        }
    }

    /// The monomial z.
    pub fn var() -> Self {
        RationalPoly {
            coeffs: vec![BigRational::zero(), BigRational::one()],
        }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    pub fn from_integers(cs: &[i64]) -> Self {
        Self::new(
            cs.iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut c = self.coeff(k);
            if let Some(oc) = other.coeffs.get(k) {
                c += oc;
            }
            out.push(c);
        }
        Self::new(out)
    }

    pub fn neg(&self) -> Self {
        RationalPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RationalPoly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| c * BigRational::from_integer((k as i64 + 1).into()))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    /// Exact quotient. A nonzero remainder means the caller's algebra is
    /// broken, so it is reported as an error with the offending degrees.
    pub fn div_exact(&self, den: &Self) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("polynomial division by zero".into()));
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let nd = self.degree().unwrap();
        let dd = den.degree().unwrap();
        if nd < dd {
            return Err(Error::Numerical(format!(
                "inexact polynomial division: degree {nd} by degree {dd}"
            )));
        }
        let lead = den.leading().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigRational::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let c = &rem[k + dd] / lead;
            if c.is_zero() {
                continue;
            }
            for (i, dc) in den.coeffs.iter().enumerate() {
                let delta = &c * dc;
                rem[k + i] -= delta;
            }
            quot[k] = c;
        }
        if let Some(bad) = rem.iter().rposition(|c| !c.is_zero()) {
            return Err(Error::Numerical(format!(
                "inexact polynomial division: remainder of degree {bad} \
                 (dividend degree {nd}, divisor degree {dd})"
            )));
        }
        Ok(Self::new(quot))
    }

    pub fn integer_coefficients(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn max_coeff_abs_f64(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// Numerator/denominator decimal strings per coefficient, constant
    /// term first. The exact export format for serialization.
    pub fn coeff_strings(&self) -> Vec<(String, String)> {
        self.coeffs
            .iter()
            .map(|c| (c.numer().to_string(), c.denom().to_string()))
            .collect()
    }
}

impl std::ops::Add for &RationalPoly {
    type Output = RationalPoly;
    fn add(self, rhs: &RationalPoly) -> RationalPoly {
        RationalPoly::add(self, rhs)
    }
}

impl std::ops::Sub for &RationalPoly {
    type Output = RationalPoly;
    fn sub(self, rhs: &RationalPoly) -> RationalPoly {
        RationalPoly::sub(self, rhs)
    }
}

impl std::ops::Mul for &RationalPoly {
    type Output = RationalPoly;
    fn mul(self, rhs: &RationalPoly) -> RationalPoly {
        RationalPoly::mul(self, rhs)
    }
}

/// Polynomial with complex rational coefficients, stored as a real and an
/// imaginary polynomial part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexPoly {
    pub re: RationalPoly,
    pub im: RationalPoly,
}

impl ComplexPoly {
    pub fn from_real(p: RationalPoly) -> Self {
        ComplexPoly {
            re: p,
            im: RationalPoly::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::from_real(RationalPoly::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        ComplexPoly {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        ComplexPoly {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        ComplexPoly {
            re: &(&self.re * &o.re) - &(&self.im * &o.im),
            im: &(&self.re * &o.im) + &(&self.im * &o.re),
        }
    }

    pub fn derivative(&self) -> Self {
        ComplexPoly {
            re: self.re.derivative(),
            im: self.im.derivative(),
        }
    }

    /// Multiply by the constant re + i*im.
    pub fn scale_complex(&self, re: &BigRational, im: &BigRational) -> Self {
        ComplexPoly {
            re: &self.re.scale(re) - &self.im.scale(im),
            im: &self.re.scale(im) + &self.im.scale(re),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn construction_strips_zero_tail() {
        let p = RationalPoly::new(vec![rat(1, 2), rat(0, 1), rat(0, 1)]);
        assert_eq!(p.degree(), Some(0));
        assert!(RationalPoly::from_integers(&[0, 0]).is_zero());
        assert_eq!(RationalPoly::zero().degree(), None);
    }

    #[test]
    fn arithmetic_matches_hand_results() {
        let z = RationalPoly::var();
        let p = &(&z * &z) + &RationalPoly::from_integers(&[4]); // z^2 + 4
        let q = &z - &RationalPoly::one(); // z - 1
        let prod = &p * &q; // z^3 - z^2 + 4z - 4
        assert_eq!(prod, RationalPoly::from_integers(&[-4, 4, -1, 1]));
        assert_eq!(prod.derivative(), RationalPoly::from_integers(&[4, -2, 3]));
        assert_eq!(prod.eval(&rat(2, 1)), rat(8, 1));
        assert!((prod.eval_f64(2.0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn exact_division_and_remainder_detection() {
        let p = RationalPoly::from_integers(&[-4, 4, -1, 1]);
        let q = RationalPoly::from_integers(&[-1, 1]);
        let d = p.div_exact(&q).unwrap();
        assert_eq!(d, RationalPoly::from_integers(&[4, 0, 1]));
        let bad = RationalPoly::from_integers(&[1, 4, 0, 1]);
        assert!(bad.div_exact(&q).is_err());
        assert!(p.div_exact(&RationalPoly::zero()).is_err());
        assert!(RationalPoly::zero().div_exact(&q).unwrap().is_zero());
    }

    #[test]
    fn complex_square_of_one_plus_iz() {
        let one = ComplexPoly::from_real(RationalPoly::one());
        let iz = ComplexPoly {
            re: RationalPoly::zero(),
            im: RationalPoly::var(),
        };
        let s = one.add(&iz);
        let sq = s.mul(&s); // 1 - z^2 + 2iz
        assert_eq!(sq.re, RationalPoly::from_integers(&[1, 0, -1]));
        assert_eq!(sq.im, RationalPoly::from_integers(&[0, 2]));
        assert!(sq.sub(&sq).is_zero());
    }

    #[test]
    fn integer_coefficient_detection() {
        assert!(RationalPoly::from_integers(&[3, 0, -7]).integer_coefficients());
        let half = RationalPoly::constant(rat(1, 2));
        assert!(!half.integer_coefficients());
        assert_eq!(half.coeff_strings(), vec![("1".into(), "2".into())]);
    }

    fn small_poly() -> impl Strategy<Value = RationalPoly> {
        prop::collection::vec(-9i64..=9, 0..6).prop_map(|cs| RationalPoly::from_integers(&cs))
    }

    proptest! {
        #[test]
        fn product_division_round_trip(a in small_poly(), b in small_poly()) {
            prop_assume!(!b.is_zero());
            let q = (&a * &b).div_exact(&b).unwrap();
            prop_assert_eq!(q, a);
        }

        #[test]
        fn derivative_is_linear(a in small_poly(), b in small_poly()) {
            let lhs = (&a + &b).derivative();
            let rhs = &a.derivative() + &b.derivative();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
