//! Matrix pictures of the deposition process.
//!
//! The hard growth rule is the (max, +) product of tropical generator
//! matrices; softening max into a log-sum turns those generators into
//! SL(2,R) blocks strung along the diagonal of an SL(N,R) product. This
//! module holds both: exact tropical height extraction, and the stabilized
//! running product whose radial coordinates (log singular values) track the
//! heap's maximal height through the ratio gamma_N.

use crate::deposition::{BoundaryCondition, ColumnSequence, HeightProfile};
use crate::rng::RngStream;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// A real 2x2 matrix with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sl2Block {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sl2Block {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = (a * a + b * b + c * c + d * d).max(1.0);
        if (det - 1.0).abs() > 1e-12 * scale {
            return Err(Error::Domain(format!("determinant {det} is not 1")));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// rotation(theta) * diag(e^r, e^-r) * upper shear(x); det = 1 by
    /// construction.
    pub fn from_rotation_stretch_shear(theta: f64, r: f64, x: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        let (ep, em) = (r.exp(), (-r).exp());
        Self {
            a: cos * ep,
            b: cos * ep * x - sin * em,
            c: sin * ep,
            d: sin * ep * x + cos * em,
        }
    }
}

/// Random-block law: theta uniform on [0, 2pi), log-stretch uniform on
/// [-r_max, r_max], shear uniform on [-x_max, x_max].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockMeasure {
    pub r_max: f64,
    pub x_max: f64,
}

impl Default for BlockMeasure {
    fn default() -> Self {
        Self { r_max: 1.0, x_max: 1.0 }
    }
}

impl BlockMeasure {
    pub fn new(r_max: f64, x_max: f64) -> Result<Self> {
        if !(r_max >= 0.0 && x_max >= 0.0) || !r_max.is_finite() || !x_max.is_finite() {
            return Err(Error::Domain("measure parameters must be non-negative".into()));
        }
        Ok(Self { r_max, x_max })
    }

    /// The stretch calibrated so the coupled growth ratio h_max/mu_max lands
    /// near 0.8 for N >= 10. Used as the reference law for the gamma
    /// experiment; the plain `default()` keeps the unit parameters.
    pub fn reference() -> Self {
        Self { r_max: 4.1, x_max: 1.0 }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Sl2Block {
        let theta = rng.uniform(0.0, 2.0 * PI);
        let r = rng.uniform(-self.r_max, self.r_max);
        let x = rng.uniform(-self.x_max, self.x_max);
        Sl2Block::from_rotation_stretch_shear(theta, r, x)
    }
}

// ---------------------------------------------------------------------------
// Tropical realization
// ---------------------------------------------------------------------------

/// Additive identity of the (max, +) semiring.
const TROP_NEG: i64 = i64::MIN;

fn trop_mul(a: i64, b: i64) -> i64 {
    if a == TROP_NEG || b == TROP_NEG {
        TROP_NEG
    } else {
        a + b
    }
}

/// Square matrix over the (max, +) semiring with integer entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TropicalMatrix {
    n: usize,
    a: Vec<i64>,
}

impl TropicalMatrix {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![TROP_NEG; n * n];
        for i in 0..n {
            a[i * n + i] = 0;
        }
        Self { n, a }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.a[i * self.n + j]
    }

    /// One deposition event at `column`: the identity except row `column`,
    /// which takes max over the column and its neighbours, plus one.
    pub fn generator(n: usize, column: usize, bc: BoundaryCondition) -> Result<Self> {
        if column >= n {
            return Err(Error::Domain(format!("column {column} out of range 0..{n}")));
        }
        let mut g = Self::identity(n);
        for j in 0..n {
            g.a[column * n + j] = TROP_NEG;
        }
        let (l, r) = crate::deposition::neighbour_indices(column, n, bc);
        g.a[column * n + column] = 1;
        if let Some(l) = l {
            g.a[column * n + l] = 1;
        }
        if let Some(r) = r {
            g.a[column * n + r] = 1;
        }
        Ok(g)
    }

    /// (max, +) matrix product.
    pub fn mul(&self, rhs: &TropicalMatrix) -> Result<TropicalMatrix> {
        if self.n != rhs.n {
            return Err(Error::Domain("dimension mismatch".into()));
        }
        let n = self.n;
        let mut out = vec![TROP_NEG; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == TROP_NEG {
                    continue;
                }
                for j in 0..n {
                    let v = trop_mul(aik, rhs.a[k * n + j]);
                    if v > out[i * n + j] {
                        out[i * n + j] = v;
                    }
                }
            }
        }
        Ok(TropicalMatrix { n, a: out })
    }

    /// (max, +) matrix-vector action.
    pub fn apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.n {
            return Err(Error::Domain("dimension mismatch".into()));
        }
        let n = self.n;
        let mut out = vec![TROP_NEG; n];
        for i in 0..n {
            for j in 0..n {
                let w = trop_mul(self.a[i * n + j], v[j]);
                if w > out[i] {
                    out[i] = w;
                }
            }
        }
        Ok(out)
    }
}

/// Height profile of an event sequence computed entirely inside the
/// (max, +) semiring: fold each generator matrix into the zero vector.
pub fn tropical_heights(events: &ColumnSequence, bc: BoundaryCondition) -> Result<HeightProfile> {
    let n = events.n_columns;
    let mut v = vec![0i64; n];
    for &c in &events.events {
        let g = TropicalMatrix::generator(n, c as usize, bc)?;
        v = g.apply(&v)?;
    }
    HeightProfile::from_heights(v)
}

// ---------------------------------------------------------------------------
// Soft SL(2) block products
// ---------------------------------------------------------------------------

/// a*u + c*v with error-free transforms (compensated 2-term dot). The
/// two-term mixes are where log-volume cancels; plain f64 noise there
/// leaks into the small singular values, compensation pushes the floor
/// from eps down to eps^2 of the operand magnitudes.
#[inline]
fn mix2(a: f64, u: f64, c: f64, v: f64) -> f64 {
    let p1 = a * u;
    let e1 = a.mul_add(u, -p1);
    let p2 = c * v;
    let e2 = c.mul_add(v, -p2);
    let s = p1 + p2;
    let b = s - p1;
    let err = (p1 - (s - b)) + (p2 - b);
    s + (err + (e1 + e2))
}

/// Per-row record of how an event changed the two mixed columns. Feeds
/// the cheap screen deciding which row pairs need a real inner product
/// afterwards: an event can only move the dot of rows i and j by what it
/// did to their components in the two mixed coordinates.
struct RowMix {
    touched: bool,
    pre: [f64; 2],
    post: [f64; 2],
    inv_norm: f64,
}

/// Running product V_t = Q * diag(e^s) * W, maintained as a factored
/// singular value decomposition: Q orthogonal, s the log scales, W with
/// orthonormal rows (unit at working precision). Blocks multiply on the
/// right (the latest event is the rightmost factor), touching two
/// adjacent columns of W; the polluted row pairs are rotated apart again
/// immediately, with the rotations absorbed into Q. Keeping W orthonormal
/// after every event is what preserves the small singular values: each
/// one lives in its own row scale, so no volume information ever sits in
/// a near-cancellation between rows, and the per-event pollution depth is
/// bounded by the condition number of a single block.
#[derive(Debug, Clone)]
pub struct ProductState {
    n: usize,
    /// column-major: column i is q[i*n .. (i+1)*n]
    q: Vec<f64>,
    s: Vec<f64>,
    /// row-major: row i is w[i*n .. (i+1)*n]
    w: Vec<f64>,
    t: u64,
}

impl ProductState {
    pub fn identity(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("need dimension at least 2".into()));
        }
        let mut eye = vec![0.0; n * n];
        for i in 0..n {
            eye[i * n + i] = 1.0;
        }
        Ok(Self {
            n,
            q: eye.clone(),
            s: vec![0.0; n],
            w: eye,
            t: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn event_count(&self) -> u64 {
        self.t
    }

    /// Multiply the product on the right by `block` embedded at rows and
    /// columns {position, position+1}. The last valid position is n-2;
    /// beyond that the block does not fit.
    pub fn apply_block(&mut self, position: usize, block: &Sl2Block) -> Result<()> {
        if position + 1 >= self.n {
            return Err(Error::Domain(format!(
                "block at position {position} does not fit in dimension {}",
                self.n
            )));
        }
        let n = self.n;
        let (p, r) = (position, position + 1);
        let mut mix: Vec<RowMix> = Vec::with_capacity(n);
        for i in 0..n {
            let u = self.w[i * n + p];
            let v = self.w[i * n + r];
            if u == 0.0 && v == 0.0 {
                mix.push(RowMix {
                    touched: false,
                    pre: [0.0; 2],
                    post: [0.0; 2],
                    inv_norm: 1.0,
                });
                continue;
            }
            let nu = mix2(block.a, u, block.c, v);
            let nv = mix2(block.b, u, block.d, v);
            self.w[i * n + p] = nu;
            self.w[i * n + r] = nv;
            mix.push(RowMix {
                touched: true,
                pre: [u, v],
                post: [nu, nv],
                inv_norm: 1.0,
            });
        }
        for (i, rec) in mix.iter_mut().enumerate() {
            if rec.touched {
                let norm = Self::renormalize_row(&mut self.s, &mut self.w, n, i)?;
                rec.post[0] /= norm;
                rec.post[1] /= norm;
                rec.inv_norm = 1.0 / norm;
            }
        }
        self.t += 1;
        // a periodic full pass recertifies every pair, so pollution the
        // screen deemed negligible cannot pile up unobserved
        if self.t % 256 == 0 {
            self.orthonormalize(None)
        } else {
            self.orthonormalize(Some(&mix))
        }
    }

    /// Restore row orthonormality of W after an event, absorbing the
    /// rotations into Q. The mix records bound how far each pair's inner
    /// product can have moved, so most pairs are cleared without touching
    /// their rows; pairs that do rotate go on a worklist until a pass
    /// makes no further change.
    fn orthonormalize(&mut self, mix: Option<&[RowMix]>) -> Result<()> {
        let n = self.n;
        let mut dirty = vec![false; n];
        let mut rotated = false;
        match mix {
            Some(rows) => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        if !rows[i].touched && !rows[j].touched {
                            continue;
                        }
                        let amp = rows[i].inv_norm * rows[j].inv_norm;
                        let moved = rows[i].post[0] * rows[j].post[0]
                            + rows[i].post[1] * rows[j].post[1]
                            - amp
                                * (rows[i].pre[0] * rows[j].pre[0]
                                    + rows[i].pre[1] * rows[j].pre[1]);
                        // `amp` is how much a shrunken row magnifies the pair's
                        // old residual; near one it cannot surface anything new
                        if moved.abs() <= 2.5e-14 && amp < 1.25 {
                            continue;
                        }
                        if self.orthogonalize_pair(i, j)? {
                            dirty[i] = true;
                            dirty[j] = true;
                            rotated = true;
                        }
                    }
                }
            }
            None => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        if self.orthogonalize_pair(i, j)? {
                            dirty[i] = true;
                            dirty[j] = true;
                            rotated = true;
                        }
                    }
                }
            }
        }
        if !rotated {
            return Ok(());
        }
        for _ in 0..64 {
            let mut next = vec![false; n];
            let mut any = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    if !dirty[i] && !dirty[j] {
                        continue;
                    }
                    if self.orthogonalize_pair(i, j)? {
                        next[i] = true;
                        next[j] = true;
                        any = true;
                    }
                }
            }
            if !any {
                return Ok(());
            }
            dirty = next;
        }
        Err(Error::Numerical(
            "row orthonormalization did not converge: off-diagonal mass remains".into(),
        ))
    }

    /// Measure one row pair and, if it is not orthogonal at working
    /// precision, rotate the pair apart. Reports whether anything changed.
    /// Callers must pass i < j.
    fn orthogonalize_pair(&mut self, i: usize, j: usize) -> Result<bool> {
        let n = self.n;
        let tol = 1e-11;
        // rows are kept unit to 5e-13 by renormalization, so the cross dot
        // is the pair's cosine up to a relative 1e-12
        let beta = Self::row_dot(&self.w, n, i, j);
        if beta.abs() <= tol {
            return Ok(false);
        }
        // Across a wide scale gap the exact rotation collapses, to machine
        // precision, onto a plain Gram-Schmidt shear of the smaller row,
        // and the matching correction to Q sits below float resolution;
        // the neglected terms are O(e^{-2 gap}).
        let gap = self.s[i] - self.s[j];
        if gap.abs() > 40.0 {
            let (keep, shed) = if gap > 40.0 { (i, j) } else { (j, i) };
            let f = beta / Self::row_dot(&self.w, n, keep, keep);
            let (head, tail) = self.w.split_at_mut(j * n);
            let (src, dst): (&[f64], &mut [f64]) = if shed == j {
                (&head[i * n..i * n + n], &mut tail[..n])
            } else {
                (&tail[..n], &mut head[i * n..i * n + n])
            };
            if beta.abs() < 1e-3 {
                // a gentle shear cannot cancel catastrophically
                for k in 0..n {
                    dst[k] = f.mul_add(-src[k], dst[k]);
                }
            } else {
                for k in 0..n {
                    dst[k] = mix2(1.0, dst[k], -f, src[k]);
                }
            }
            Self::renormalize_row(&mut self.s, &mut self.w, n, shed)?;
            return Ok(true);
        }
        let alpha = Self::row_dot(&self.w, n, i, i);
        let gamma = Self::row_dot(&self.w, n, j, j);
        if alpha == 0.0 || gamma == 0.0 {
            return Err(Error::Numerical(
                "degenerate decomposition: zero row".into(),
            ));
        }
        // Jacobi angle for the scaled Gram 2x2; exponents are shifted so
        // nothing overflows.
        let shift = self.s[i].max(self.s[j]);
        let g_ii = alpha * (2.0 * (self.s[i] - shift)).exp();
        let g_jj = gamma * (2.0 * (self.s[j] - shift)).exp();
        let g_ij = beta * (self.s[i] + self.s[j] - 2.0 * shift).exp();
        let tau = (g_jj - g_ii) / (2.0 * g_ij);
        let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
        let cos = 1.0 / (1.0 + t * t).sqrt();
        let sin = t * cos;
        // output scales chosen so each row coefficient stays in [-1, 1];
        // IEEE ln(0) = -inf makes the degenerate angles fall through
        let lc = cos.abs().ln();
        let ls = sin.abs().ln();
        let scale_i = (self.s[i] + lc).max(self.s[j] + ls);
        let scale_j = (self.s[i] + ls).max(self.s[j] + lc);
        let fii = cos.signum() * (self.s[i] + lc - scale_i).exp();
        let fij = -sin.signum() * (self.s[j] + ls - scale_i).exp();
        let fji = sin.signum() * (self.s[i] + ls - scale_j).exp();
        let fjj = cos.signum() * (self.s[j] + lc - scale_j).exp();
        {
            let (head, tail) = self.w.split_at_mut(j * n);
            let wi = &mut head[i * n..i * n + n];
            let wj = &mut tail[..n];
            for k in 0..n {
                let u = wi[k];
                let v = wj[k];
                wi[k] = mix2(fii, u, fij, v);
                wj[k] = mix2(fji, u, fjj, v);
            }
        }
        self.s[i] = scale_i;
        self.s[j] = scale_j;
        {
            let (head, tail) = self.q.split_at_mut(j * n);
            let qi = &mut head[i * n..i * n + n];
            let qj = &mut tail[..n];
            for k in 0..n {
                let u = qi[k];
                let v = qj[k];
                qi[k] = cos * u - sin * v;
                qj[k] = sin * u + cos * v;
            }
        }
        Self::renormalize_row(&mut self.s, &mut self.w, n, i)?;
        Self::renormalize_row(&mut self.s, &mut self.w, n, j)?;
        Ok(true)
    }

    fn row_dot(w: &[f64], n: usize, i: usize, j: usize) -> f64 {
        let a = &w[i * n..i * n + n];
        let b = &w[j * n..j * n + n];
        let mut acc = 0.0;
        for k in 0..n {
            acc += a[k] * b[k];
        }
        acc
    }

    /// Pull the row's 2-norm into its log-scale, keeping stored rows unit.
    /// Rows already unit at working precision are left bit-identical, so
    /// events that change nothing really change nothing. Returns the norm
    /// that was divided out (one if the row was left alone).
    fn renormalize_row(s: &mut [f64], w: &mut [f64], n: usize, i: usize) -> Result<f64> {
        let row = &mut w[i * n..i * n + n];
        let mut mx = 0.0f64;
        for &x in row.iter() {
            mx = mx.max(x.abs());
        }
        if mx == 0.0 || !mx.is_finite() {
            return Err(Error::Numerical(format!(
                "degenerate decomposition: row {i} collapsed"
            )));
        }
        let mut nrm2 = 0.0f64;
        for &x in row.iter() {
            let r = x / mx;
            nrm2 += r * r;
        }
        let norm = mx * nrm2.sqrt();
        if (norm - 1.0).abs() <= 5.0e-13 {
            return Ok(1.0);
        }
        for x in row.iter_mut() {
            *x /= norm;
        }
        s[i] += norm.ln();
        Ok(norm)
    }

    /// Log singular values of the running product, sorted descending. The
    /// state maintains the factored form after every event, so this just
    /// reads the row scales (plus whatever residual norm the unit window
    /// left in the rows).
    pub fn radial_coords(&self) -> Result<RadialCoords> {
        let mut mu: Vec<f64> = (0..self.n)
            .map(|i| self.s[i] + 0.5 * Self::row_dot(&self.w, self.n, i, i).ln())
            .collect();
        if mu.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(
                "degenerate decomposition: zero row".into(),
            ));
        }
        mu.sort_by(|a, b| b.total_cmp(a));
        Ok(RadialCoords { mu })
    }

    /// Dense reconstruction Q * diag(e^s) * W. Only possible while the
    /// scales stay inside floating-point range.
    pub fn reconstruct(&self) -> Result<DMatrix<f64>> {
        if self.s.iter().any(|&x| x > 690.0) {
            return Err(Error::Numerical(
                "product too large to reconstruct densely".into(),
            ));
        }
        let n = self.n;
        let q = DMatrix::from_column_slice(n, n, &self.q);
        let mut a = DMatrix::from_row_slice(n, n, &self.w);
        for i in 0..n {
            let f = self.s[i].exp();
            for k in 0..n {
                a[(i, k)] *= f;
            }
        }
        Ok(q * a)
    }

    /// Logs of eigenvalue moduli, sorted descending: the alternative
    /// "radial" reading. Requires a dense reconstruction, so only small
    /// products qualify.
    pub fn eigen_moduli(&self) -> Result<Vec<f64>> {
        let dense = self.reconstruct()?;
        let eig = dense.complex_eigenvalues();
        let mut out: Vec<f64> = eig.iter().map(|z| z.norm().ln()).collect();
        out.sort_by(|a, b| b.total_cmp(a));
        Ok(out)
    }
}

/// Sorted log singular values; their sum vanishes because det = 1.
#[derive(Debug, Clone, Serialize)]
pub struct RadialCoords {
    pub mu: Vec<f64>,
}

impl RadialCoords {
    pub fn max(&self) -> f64 {
        self.mu[0]
    }

    pub fn sum(&self) -> f64 {
        self.mu.iter().sum()
    }
}

// ---------------------------------------------------------------------------
// gamma estimator: heap height vs top radial coordinate
// ---------------------------------------------------------------------------

/// Whether the heap and the matrix product consume one shared column
/// sequence or two independent ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CouplingMode {
    Coupled,
    Independent,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaPoint {
    pub t: u64,
    pub gamma: f64,
    pub std_error: f64,
    pub kept: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaSeries {
    pub n: usize,
    pub mode: CouplingMode,
    pub measure: BlockMeasure,
    pub points: Vec<GammaPoint>,
    /// Samples dropped because mu_max was not positive at a checkpoint.
    pub discarded: u64,
    /// Affine extrapolation of gamma against 1/T.
    pub gamma0: f64,
    pub slope: f64,
}

/// One trial's (h_max, mu_max) pairs at the given checkpoints, from an
/// explicit column sequence and block sequence. Columns index block
/// positions 0..n-2; the heap runs on n-1 columns with open edges, so
/// heap column = block position.
pub fn gamma_ratio_for_sequence(
    n: usize,
    columns: &[usize],
    blocks: &[Sl2Block],
    checkpoints: &[u64],
) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::Domain("need dimension at least 2".into()));
    }
    if columns.len() != blocks.len() {
        return Err(Error::Domain("columns and blocks must pair up".into()));
    }
    if checkpoints.is_empty()
        || checkpoints.windows(2).any(|w| w[0] >= w[1])
        || *checkpoints.last().unwrap() > columns.len() as u64
    {
        return Err(Error::Domain("bad checkpoint list".into()));
    }
    let heap_width = n - 1;
    let mut heap = HeightProfile::flat(heap_width);
    let mut state = ProductState::identity(n)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0usize;
    for (step, (&c, block)) in columns.iter().zip(blocks).enumerate() {
        heap.deposit_hard(c, BoundaryCondition::Free)?;
        state.apply_block(c, block)?;
        let done = (step + 1) as u64;
        while next < checkpoints.len() && checkpoints[next] == done {
            let mu = state.radial_coords()?;
            out.push((heap.max_height() as f64, mu.max()));
            next += 1;
        }
    }
    Ok(out)
}

/// Ensemble ratio h_max/mu_max at ten checkpoints up to `t_max`, with an
/// affine extrapolation against 1/T. In coupled mode a single column
/// sequence drives both the heap and the block positions; independent mode
/// draws two.
pub fn gamma_estimator(
    n: usize,
    t_max: u64,
    trials: u32,
    measure: &BlockMeasure,
    rng: &RngStream,
    mode: CouplingMode,
) -> Result<GammaSeries> {
    if n < 2 {
        return Err(Error::Domain("need dimension at least 2".into()));
    }
    if t_max < 10 || trials == 0 {
        return Err(Error::Domain("need t_max >= 10 and at least one trial".into()));
    }
    let checkpoints: Vec<u64> = (1..=10).map(|k| k * t_max / 10).collect();

    let per_trial: Vec<Vec<Option<f64>>> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<Option<f64>>> {
            let mut rng = rng.fork(trial as u64);
            let heap_width = n - 1;
            let mut heights = vec![0i64; heap_width];
            let mut state = ProductState::identity(n)?;
            let mut vals = Vec::with_capacity(checkpoints.len());
            let mut next = 0usize;
            for step in 1..=t_max {
                let c_heap = rng.column(heap_width);
                let c_block = match mode {
                    CouplingMode::Coupled => c_heap,
                    CouplingMode::Independent => rng.column(heap_width),
                };
                let mut m = heights[c_heap];
                if c_heap > 0 {
                    m = m.max(heights[c_heap - 1]);
                }
                if c_heap + 1 < heap_width {
                    m = m.max(heights[c_heap + 1]);
                }
                heights[c_heap] = m + 1;
                let block = measure.sample(&mut rng);
                state.apply_block(c_block, &block)?;
                if next < checkpoints.len() && checkpoints[next] == step {
                    let mu = state.radial_coords()?;
                    let h_max = *heights.iter().max().unwrap() as f64;
                    vals.push(if mu.max() > 0.0 {
                        Some(h_max / mu.max())
                    } else {
                        None
                    });
                    next += 1;
                }
            }
            Ok(vals)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(checkpoints.len());
    let mut discarded = 0u64;
    for (k, &t) in checkpoints.iter().enumerate() {
        let vals: Vec<f64> = per_trial.iter().filter_map(|tr| tr[k]).collect();
        discarded += (per_trial.len() - vals.len()) as u64;
        if vals.len() < 2 {
            return Err(Error::Numerical(format!(
                "checkpoint T={t}: fewer than two usable trials"
            )));
        }
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var =
            vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (vals.len() - 1) as f64;
        points.push(GammaPoint {
            t,
            gamma: m,
            std_error: (var / vals.len() as f64).sqrt(),
            kept: vals.len() as u32,
        });
    }

    // affine fit gamma = gamma0 + slope / T
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.t as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.gamma).collect();
    let mpts = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / mpts;
    let my = ys.iter().sum::<f64>() / mpts;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let gamma0 = my - slope * mx;

    Ok(GammaSeries {
        n,
        mode,
        measure: *measure,
        points,
        discarded,
        gamma0,
        slope,
    })
}

// ---------------------------------------------------------------------------
// Projective action and Lyapunov exponent
// ---------------------------------------------------------------------------

/// Projective (Mobius) action of a block on the slope rho = x/y.
/// `None` marks the pole (projective infinity).
pub fn ricatti_step(rho: f64, block: &Sl2Block) -> Option<f64> {
    let den = block.c * rho + block.d;
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let v = (block.a * rho + block.b) / den;
    if v.is_finite() {
        Some(v)
    } else {
        None
    }
}

/// Norm-growth rate of a unit vector driven through the given blocks,
/// renormalized every step.
pub fn lyapunov_from_blocks<I>(blocks: I) -> Result<f64>
where
    I: IntoIterator<Item = Sl2Block>,
{
    let mut x = 1.0f64;
    let mut y = 0.0f64;
    let mut acc = 0.0f64;
    let mut steps = 0u64;
    for b in blocks {
        let (nx, ny) = (b.a * x + b.b * y, b.c * x + b.d * y);
        let norm = nx.hypot(ny);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numerical("vector collapsed during iteration".into()));
        }
        acc += norm.ln();
        x = nx / norm;
        y = ny / norm;
        steps += 1;
    }
    if steps == 0 {
        return Err(Error::Domain("no blocks supplied".into()));
    }
    Ok(acc / steps as f64)
}

/// Top Lyapunov exponent of i.i.d. products from `measure`.
pub fn product_lyapunov(
    measure: &BlockMeasure,
    steps: u64,
    rng: &mut RngStream,
) -> Result<f64> {
    if steps < 1000 {
        return Err(Error::Domain("need at least 1000 steps".into()));
    }
    lyapunov_from_blocks((0..steps).map(|_| measure.sample(rng)))
}
