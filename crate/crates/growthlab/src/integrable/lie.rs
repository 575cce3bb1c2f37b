//! Exact matrix checks for the two nested algebras behind the soft growth
//! rule: the rank-one algebra acting on 2x2 blocks, and the rank-two
//! algebra generated by two overlapping copies of it in dimension three.
//! Everything is integer arithmetic; the single rational constant (the
//! quadratic invariant's 2/3 weight) is cleared by working with three
//! times the invariant.

use serde::Serialize;

use crate::{Error, Result};

type M2 = [[i64; 2]; 2];
type M3 = [[i64; 3]; 3];

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for (k, bk) in b.iter().enumerate() {
                c[i][j] += a[i][k] * bk[j];
            }
        }
    }
    c
}

fn mul3(a: &M3, b: &M3) -> M3 {
    let mut c = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, bk) in b.iter().enumerate() {
                c[i][j] += a[i][k] * bk[j];
            }
        }
    }
    c
}

fn comm2(a: &M2, b: &M2) -> M2 {
    let (ab, ba) = (mul2(a, b), mul2(b, a));
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = ab[i][j] - ba[i][j];
        }
    }
    c
}

fn comm3(a: &M3, b: &M3) -> M3 {
    let (ab, ba) = (mul3(a, b), mul3(b, a));
    let mut c = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = ab[i][j] - ba[i][j];
        }
    }
    c
}

fn scale3(a: &M3, s: i64) -> M3 {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    c
}

fn scale2(a: &M2, s: i64) -> M2 {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    c
}

fn add3(a: &M3, b: &M3) -> M3 {
    let mut c = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][j] + b[i][j];
        }
    }
    c
}

/// Raising, lowering and grading elements in the defining 2x2
/// representation.
pub fn rank_one_generators() -> (M2, M2, M2) {
    (
        [[0, 1], [0, 0]],
        [[0, 0], [1, 0]],
        [[1, 0], [0, -1]],
    )
}

/// The two overlapping 3x3 copies: (x1, x2, x3) act on the first two
/// coordinates, (y1, y2, y3) on the last two.
#[allow(clippy::type_complexity)]
pub fn rank_two_generators() -> ([M3; 3], [M3; 3]) {
    let x1 = [[0, 1, 0], [0, 0, 0], [0, 0, 0]];
    let x2 = [[0, 0, 0], [1, 0, 0], [0, 0, 0]];
    let x3 = [[1, 0, 0], [0, -1, 0], [0, 0, 0]];
    let y1 = [[0, 0, 0], [0, 0, 1], [0, 0, 0]];
    let y2 = [[0, 0, 0], [0, 0, 0], [0, 1, 0]];
    let y3 = [[0, 0, 0], [0, 1, 0], [0, 0, -1]];
    ([x1, x2, x3], [y1, y2, y3])
}

#[derive(Debug, Clone, Serialize)]
pub struct LieReport {
    pub relations_checked: usize,
    /// Numerator and denominator of the scalar c with
    /// quadratic invariant = c * identity.
    pub invariant_scalar: (i64, i64),
}

/// Runs every commutation relation of both algebras, the two ladder
/// identities that produce the corner elements, and the quadratic
/// invariant. Any failed identity is an error naming the relation.
pub fn lie_checks() -> Result<LieReport> {
    let mut checked = 0;
    let mut expect2 = |name: &str, got: M2, want: M2| -> Result<()> {
        if got != want {
            return Err(Error::Numerical(format!(
                "2x2 relation {name} failed: got {got:?}, wanted {want:?}"
            )));
        }
        checked += 1;
        Ok(())
    };
    let (a1, a2, a3) = rank_one_generators();
    expect2("[a1,a2] = a3", comm2(&a1, &a2), a3)?;
    expect2("[a1,a3] = -2 a1", comm2(&a1, &a3), scale2(&a1, -2))?;
    expect2("[a2,a3] = 2 a2", comm2(&a2, &a3), scale2(&a2, 2))?;

    let mut checked3 = 0;
    let mut expect3 = |name: &str, got: M3, want: M3| -> Result<()> {
        if got != want {
            return Err(Error::Numerical(format!(
                "3x3 relation {name} failed: got {got:?}, wanted {want:?}"
            )));
        }
        checked3 += 1;
        Ok(())
    };
    let ([x1, x2, x3], [y1, y2, y3]) = rank_two_generators();
    expect3("[x1,x2] = x3", comm3(&x1, &x2), x3)?;
    expect3("[x1,x3] = -2 x1", comm3(&x1, &x3), scale3(&x1, -2))?;
    expect3("[x2,x3] = 2 x2", comm3(&x2, &x3), scale3(&x2, 2))?;
    expect3("[y1,y2] = y3", comm3(&y1, &y2), y3)?;
    expect3("[y1,y3] = -2 y1", comm3(&y1, &y3), scale3(&y1, -2))?;
    expect3("[y2,y3] = 2 y2", comm3(&y2, &y3), scale3(&y2, 2))?;
    expect3("[x1,y3] = x1", comm3(&x1, &y3), x1)?;
    expect3("[x2,y3] = -x2", comm3(&x2, &y3), scale3(&x2, -1))?;
    expect3("[y1,x3] = y1", comm3(&y1, &x3), y1)?;
    expect3("[y2,x3] = -y2", comm3(&y2, &x3), scale3(&y2, -1))?;

    // the corner elements close the algebra: commutator and plain product
    // coincide because the reversed product vanishes
    let x4 = [[0, 0, 1], [0, 0, 0], [0, 0, 0]];
    let y4 = [[0, 0, 0], [0, 0, 0], [1, 0, 0]];
    expect3("[x1,y1] = x4", comm3(&x1, &y1), x4)?;
    expect3("x1 y1 = x4", mul3(&x1, &y1), x4)?;
    expect3("[y2,x2] = y4", comm3(&y2, &x2), y4)?;
    expect3("y2 x2 = y4", mul3(&y2, &x2), y4)?;

    // quadratic invariant, tripled to stay in the integers:
    // 3(x1 x2 + x2 x1 + y1 y2 + y2 y1 + x4 y4 + y4 x4)
    //   + 2(x3^2 + y3^2 + x3 y3) = 8 * identity
    let sym = |a: &M3, b: &M3| add3(&mul3(a, b), &mul3(b, a));
    let mut inv = scale3(
        &add3(&add3(&sym(&x1, &x2), &sym(&y1, &y2)), &sym(&x4, &y4)),
        3,
    );
    inv = add3(
        &inv,
        &scale3(
            &add3(&add3(&mul3(&x3, &x3), &mul3(&y3, &y3)), &mul3(&x3, &y3)),
            2,
        ),
    );
    let id8 = [[8, 0, 0], [0, 8, 0], [0, 0, 8]];
    if inv != id8 {
        return Err(Error::Numerical(format!(
            "quadratic invariant is not scalar: {inv:?}"
        )));
    }
    checked3 += 1;

    Ok(LieReport {
        relations_checked: checked + checked3,
        invariant_scalar: (8, 3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_relations_hold() {
        let report = lie_checks().unwrap();
        assert_eq!(report.relations_checked, 18);
        assert_eq!(report.invariant_scalar, (8, 3));
    }

    #[test]
    fn corner_elements_sit_in_the_corners() {
        let ([x1, _, _], [y1, _, _]) = rank_two_generators();
        let x4 = comm3(&x1, &y1);
        assert_eq!(x4, [[0, 0, 1], [0, 0, 0], [0, 0, 0]]);
    }

    #[test]
    fn grading_elements_are_traceless() {
        let ([_, _, x3], [_, _, y3]) = rank_two_generators();
        for m in [x3, y3] {
            assert_eq!(m[0][0] + m[1][1] + m[2][2], 0);
        }
    }
}
