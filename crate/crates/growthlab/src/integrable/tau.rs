//! Hankel-determinant chain solutions built from one seed function.
//!
//! The seed lives in the differential ring of terms P(s) e^{a s} with
//! rational a and polynomial P, which is closed under derivative and
//! product, so every determinant entry and every identity below is exact.
//! The j-th chain function is the j x j determinant of the seed's
//! derivative table, with the empty determinant equal to one. These
//! satisfy the bilinear identity
//!
//! ```text
//! tau_j'' tau_j - (tau_j')^2 = tau_{j+1} tau_{j-1}
//! ```
//!
//! identically, and the log-ratios mu_j = ln(tau_{j-1}/tau_j) solve the
//! exponential chain equations that the time integrator in
//! [`super::toda`] solves numerically.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::ratpoly::RationalPoly;
use crate::{Error, Result};

/// Finite sum of P_a(s) e^{a s} terms, keyed by the exponent a. Zero
/// polynomials are never stored, so structural equality is semantic
/// equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpPoly {
    terms: BTreeMap<BigRational, RationalPoly>,
}

impl ExpPoly {
    pub fn zero() -> Self {
        ExpPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::term(BigRational::zero(), RationalPoly::one())
    }

    /// The single term P(s) e^{a s}.
    pub fn term(a: BigRational, p: RationalPoly) -> Self {
        let mut terms = BTreeMap::new();
        if !p.is_zero() {
            terms.insert(a, p);
        }
        ExpPoly { terms }
    }

    /// Plain exponential c e^{a s}.
    pub fn exponential(a: BigRational, c: BigRational) -> Self {
        Self::term(a, RationalPoly::constant(c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BigRational, &RationalPoly)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.terms.clone();
        for (a, p) in &other.terms {
            let entry = out.entry(a.clone()).or_insert_with(RationalPoly::zero);
            *entry = entry.add(p);
            if entry.is_zero() {
                out.remove(a);
            }
        }
        ExpPoly { terms: out }
    }

    pub fn neg(&self) -> Self {
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|(a, p)| (a.clone(), p.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<BigRational, RationalPoly> = BTreeMap::new();
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                let key = a + b;
                let prod = p.mul(q);
                let entry = out.entry(key.clone()).or_insert_with(RationalPoly::zero);
                *entry = entry.add(&prod);
                if entry.is_zero() {
                    out.remove(&key);
                }
            }
        }
        ExpPoly { terms: out }
    }

    /// d/ds of P e^{a s} is (P' + a P) e^{a s}.
    pub fn derivative(&self) -> Self {
        let mut out = BTreeMap::new();
        for (a, p) in &self.terms {
            let d = p.derivative().add(&p.scale(a));
            if !d.is_zero() {
                out.insert(a.clone(), d);
            }
        }
        ExpPoly { terms: out }
    }

    pub fn eval_f64(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, p)| p.eval_f64(s) * (a.to_f64().unwrap_or(f64::NAN) * s).exp())
            .sum()
    }

    /// Exact value at s = 0: the sum of the constant coefficients.
    pub fn eval_at_zero(&self) -> BigRational {
        self.terms
            .values()
            .fold(BigRational::zero(), |acc, p| acc + p.coeff(0))
    }
}

/// Determinant by cofactor expansion along the first row. The sizes here
/// are small (the chain depth), so clarity beats asymptotics.
fn det(m: &[Vec<ExpPoly>]) -> ExpPoly {
    let n = m.len();
    if n == 0 {
        return ExpPoly::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = ExpPoly::zero();
    for (col, pivot) in m[0].iter().enumerate() {
        if pivot.is_zero() {
            continue;
        }
        let minor: Vec<Vec<ExpPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != col)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let cof = pivot.mul(&det(&minor));
        acc = if col % 2 == 0 {
            acc.add(&cof)
        } else {
            acc.sub(&cof)
        };
    }
    acc
}

/// Depth guard for the factorial cofactor expansion.
pub const MAX_CHAIN_DEPTH: usize = 8;

/// Chain functions tau_0 .. tau_{j_max} for the given seed, tau_0 = 1.
/// Entry (i, k) of the j-th determinant is the (i + k)-th derivative of
/// the seed.
pub fn tau_from_phi(phi: &ExpPoly, j_max: usize) -> Result<Vec<ExpPoly>> {
    if j_max > MAX_CHAIN_DEPTH {
        return Err(Error::Domain(format!(
            "chain depth {j_max} exceeds the determinant budget ({MAX_CHAIN_DEPTH})"
        )));
    }
    let mut derivs = vec![phi.clone()];
    for _ in 1..(2 * j_max).max(1) {
        derivs.push(derivs.last().unwrap().derivative());
    }
    let mut taus = vec![ExpPoly::one()];
    for j in 1..=j_max {
        let rows: Vec<Vec<ExpPoly>> = (0..j)
            .map(|i| (0..j).map(|k| derivs[i + k].clone()).collect())
            .collect();
        taus.push(det(&rows));
    }
    Ok(taus)
}

/// tau_j'' tau_j - (tau_j')^2 - tau_{j+1} tau_{j-1}, which is identically
/// zero for determinant chains. Requires 1 <= j < taus.len() - 1.
pub fn bilinear_residual(taus: &[ExpPoly], j: usize) -> Result<ExpPoly> {
    if j == 0 || j + 1 >= taus.len() {
        return Err(Error::Domain(format!(
            "bilinear row {j} needs neighbours on both sides (chain length {})",
            taus.len()
        )));
    }
    let t = &taus[j];
    let dt = t.derivative();
    Ok(t.derivative()
        .derivative()
        .mul(t)
        .sub(&dt.mul(&dt))
        .sub(&taus[j + 1].mul(&taus[j - 1])))
}

/// ln(tau_{j-1}/tau_j) at the point s, the j-th chain position.
pub fn chain_position(taus: &[ExpPoly], j: usize, s: f64) -> Result<f64> {
    if j == 0 || j >= taus.len() {
        return Err(Error::Domain(format!(
            "position index {j} outside chain of length {}",
            taus.len()
        )));
    }
    let num = taus[j - 1].eval_f64(s);
    let den = taus[j].eval_f64(s);
    if !(num / den).is_finite() || num / den <= 0.0 {
        return Err(Error::Numerical(format!(
            "chain position {j} undefined at s = {s}: ratio {num} / {den}"
        )));
    }
    Ok((num / den).ln())
}
