//! Random walk on the reflection group of an ideal hyperbolic triangle,
//! realized by three involutive 2x2 matrices. The walk never repeats a
//! letter (the group is a free product of three Z2 factors, so repeats
//! cancel), and its drift rate in the hyperbolic metric is the Lyapunov
//! exponent of the matrix product. Two estimators are provided: the plain
//! Monte Carlo drift, and a quadrature of the one-step increment kernel
//! against the empirically sampled stationary angle distribution.

use rayon::prelude::*;
use serde::Serialize;

use crate::rng::RngStream;
use crate::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

const S3: f64 = 1.732_050_807_568_877_2_f64;
const PI: f64 = std::f64::consts::PI;

/// Angle map relabeling: the letter that acts on theta is not the letter
/// that was drawn, because the tracked angle lives in the frame where the
/// first two generators trade places.
const THETA_RELABEL: [usize; 3] = [1, 0, 2];

/// The three involutive generators. Each squares to the identity exactly;
/// products of two distinct ones have infinite order.
pub fn gamma2_generators() -> [Mat2; 3] {
    [
        [[1.0, -2.0 / S3], [0.0, -1.0]],
        [[1.0, 2.0 / S3], [0.0, -1.0]],
        [[0.0, 1.0 / S3], [S3, 0.0]],
    ]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Displacement of the base point under an isometry: arccosh of half the
/// trace of V V^T. Errors if the trace falls below 2 beyond rounding slack
/// (no isometry can do that).
pub fn hyperbolic_distance(v: &Mat2) -> Result<f64> {
    let tr = v[0][0] * v[0][0]
        + v[0][1] * v[0][1]
        + v[1][0] * v[1][0]
        + v[1][1] * v[1][1];
    let x = tr / 2.0;
    if x < 1.0 - 1e-9 {
        return Err(Error::Numerical(format!(
            "not an isometry product: Tr(VV^T) = {tr} < 2"
        )));
    }
    let x = x.max(1.0);
    Ok((x + (x * x - 1.0).sqrt()).ln())
}

/// One trajectory point of the distance recursion: the accumulated
/// functional mu, the boundary angle theta (kept in [0, pi)), the last
/// letter used, and the step count. mu can dip below zero during the first
/// few steps; it is the large-n distance functional, not a metric value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WalkState {
    pub mu: f64,
    pub theta: f64,
    pub alpha: usize,
    pub n: u64,
}

impl WalkState {
    pub fn initial(alpha: usize, theta: f64) -> Result<Self> {
        if alpha > 2 {
            return Err(Error::Validation(format!(
                "letter index {alpha} out of range (three generators)"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::Validation("angle must be finite".into()));
        }
        Ok(WalkState {
            mu: 0.0,
            theta: theta.rem_euclid(PI),
            alpha,
            n: 0,
        })
    }

    pub fn origin() -> Self {
        WalkState {
            mu: 0.0,
            theta: 0.0,
            alpha: 0,
            n: 0,
        }
    }
}

/// Increment phase of letter alpha: (2 alpha - 1) pi / 3.
fn phase(alpha: usize) -> f64 {
    (2.0 * alpha as f64 - 1.0) * PI / 3.0
}

/// Draw the next letter (one of the two that differ from the last, equal
/// odds), accumulate the one-step distance increment
/// ln(5/3 + 4/3 cos(2 theta + phi)), and move the angle by the relabeled
/// generator's projective action.
pub fn walk_step(state: &WalkState, rng: &mut RngStream) -> WalkState {
    let a = (state.alpha + 1 + rng.flip() as usize) % 3;
    let inc = one_step_increment(state.theta, a);
    let m = gamma2_generators()[THETA_RELABEL[a]];
    let (x, y) = (state.theta.cos(), state.theta.sin());
    let theta =
        (m[0][0] * y + m[0][1] * x).atan2(m[1][0] * y + m[1][1] * x).rem_euclid(PI);
    WalkState {
        mu: state.mu + inc,
        theta,
        alpha: a,
        n: state.n + 1,
    }
}

/// ln(5/3 + 4/3 cos(2 theta + phi_alpha)), the exact displacement gained
/// by appending letter alpha at boundary angle theta.
pub fn one_step_increment(theta: f64, alpha: usize) -> f64 {
    (5.0 / 3.0 + (4.0 / 3.0) * (2.0 * theta + phase(alpha)).cos()).ln()
}

/// Empirical angle distribution over the fundamental sector [0, pi/3).
/// Merging is plain bin-wise addition, so trial histograms combine in any
/// order.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureHistogram {
    pub bins: Vec<u64>,
    pub total: u64,
    pub width: f64,
}

impl MeasureHistogram {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Validation("histogram needs at least one bin".into()));
        }
        Ok(MeasureHistogram {
            bins: vec![0; bins],
            total: 0,
            width: PI / 3.0 / bins as f64,
        })
    }

    pub fn record(&mut self, theta: f64) {
        let folded = theta.rem_euclid(PI / 3.0);
        let k = ((folded / self.width) as usize).min(self.bins.len() - 1);
        self.bins[k] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &MeasureHistogram) {
        debug_assert_eq!(self.bins.len(), other.bins.len());
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.total += other.total;
    }

    /// Probability density per bin center; integrates to one by construction.
    pub fn density(&self) -> Vec<(f64, f64)> {
        let norm = (self.total.max(1)) as f64 * self.width;
        self.bins
            .iter()
            .enumerate()
            .map(|(k, &c)| ((k as f64 + 0.5) * self.width, c as f64 / norm))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GammaMethod {
    MonteCarlo,
    MeasureIntegral,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub method: GammaMethod,
    pub gamma: f64,
    pub stderr: f64,
    pub steps_per_trial: u64,
    pub trials: u32,
    pub histogram: MeasureHistogram,
    pub warning: Option<String>,
}

/// Number of quadrature bins for the increment-kernel angle. The kernel
/// cos(2 psi) is even about pi/2, so the sample angle is folded there.
const KERNEL_BINS: usize = 1024;

fn fold_kernel_angle(theta: f64, alpha: usize) -> f64 {
    let psi = (theta + phase(alpha) / 2.0).rem_euclid(PI);
    if psi >= PI / 2.0 {
        PI - psi
    } else {
        psi
    }
}

struct TrialOutcome {
    slope: f64,
    integral: f64,
    hist: MeasureHistogram,
}

fn run_trial(steps: u64, rng: &mut RngStream) -> TrialOutcome {
    let burn = steps / 10;
    let mut st = WalkState::origin();
    let mut hist = MeasureHistogram::new(1024).expect("static bin count");
    let mut kernel = vec![0u64; KERNEL_BINS];
    let mut kernel_total = 0u64;
    let mut mu_at_burn = 0.0;
    while st.n < steps {
        let prev_theta = st.theta;
        st = walk_step(&st, rng);
        if st.n == burn {
            mu_at_burn = st.mu;
        }
        if st.n > burn {
            hist.record(st.theta);
            let psi = fold_kernel_angle(prev_theta, st.alpha);
            let k = ((psi / (PI / 2.0) * KERNEL_BINS as f64) as usize).min(KERNEL_BINS - 1);
            kernel[k] += 1;
            kernel_total += 1;
        }
    }
    let slope = (st.mu - mu_at_burn) / (steps - burn) as f64;
    let half_bin = PI / 2.0 / KERNEL_BINS as f64;
    let mut integral = 0.0;
    for (k, &c) in kernel.iter().enumerate() {
        if c > 0 {
            let center = (k as f64 + 0.5) * half_bin;
            integral += c as f64 * (5.0 / 3.0 + (4.0 / 3.0) * (2.0 * center).cos()).ln();
        }
    }
    integral /= kernel_total.max(1) as f64;
    TrialOutcome {
        slope,
        integral,
        hist,
    }
}

/// Drift rate of the walk, by either estimator. Trials run on independent
/// streams and are averaged; the standard error is the between-trial
/// spread. At least 1e4 steps per trial are required for the recursion to
/// leave its transient.
pub fn lyapunov_gamma(
    steps: u64,
    trials: u32,
    master_seed: u64,
    method: GammaMethod,
) -> Result<GammaReport> {
    if steps < 10_000 {
        return Err(Error::Validation(format!(
            "need at least 1e4 steps for a meaningful drift estimate, got {steps}"
        )));
    }
    if trials == 0 {
        return Err(Error::Validation("need at least one trial".into()));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(master_seed, t as u64);
            run_trial(steps, &mut rng)
        })
        .collect();
    let values: Vec<f64> = outcomes
        .iter()
        .map(|o| match method {
            GammaMethod::MonteCarlo => o.slope,
            GammaMethod::MeasureIntegral => o.integral,
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let stderr = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (values.len() - 1) as f64;
        (var / values.len() as f64).sqrt()
    } else {
        0.0
    };
    let mut histogram = MeasureHistogram::new(1024)?;
    for o in &outcomes {
        histogram.merge(&o.hist);
    }
    let warning = if trials < 2 {
        Some("single trial: no between-trial error estimate".into())
    } else if stderr > 0.01 {
        Some(format!(
            "between-trial spread {stderr:.3e} is large; consider more steps"
        ))
    } else {
        None
    };
    Ok(GammaReport {
        method,
        gamma: mean,
        stderr,
        steps_per_trial: steps,
        trials,
        histogram,
        warning,
    })
}
