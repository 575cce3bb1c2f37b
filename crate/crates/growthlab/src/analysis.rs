//! Ensemble statistics for growth runs: interface width, scaling collapse,
//! exponent fits, and height-distribution moments.
//!
//! All accumulation over runs happens in exact integer arithmetic (`i128`),
//! so merging partial results is associative and commutative and every
//! quantity here is bit-reproducible no matter how the run loop is split.

use crate::deposition::{BoundaryCondition, HeightProfile};
use crate::rng::RngStream;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Per-column running sums of h and h^2 over runs, kept at a fixed set of
/// checkpoint times. Everything is exact, so `merge` commutes.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    n_columns: usize,
    checkpoints: Vec<u64>,
    runs: u64,
    sum: Vec<Vec<i128>>,
    sum_sq: Vec<Vec<i128>>,
}

impl EnsembleAccumulator {
    pub fn new(n_columns: usize, checkpoints: &[u64]) -> Result<Self> {
        if n_columns == 0 {
            return Err(Error::Domain("need at least one column".into()));
        }
        if checkpoints.is_empty() {
            return Err(Error::Domain("need at least one checkpoint".into()));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("checkpoints must be strictly increasing".into()));
        }
        Ok(Self {
            n_columns,
            checkpoints: checkpoints.to_vec(),
            runs: 0,
            sum: vec![vec![0; n_columns]; checkpoints.len()],
            sum_sq: vec![vec![0; n_columns]; checkpoints.len()],
        })
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    /// Record one run, given its profile at every checkpoint in order.
    pub fn record_run(&mut self, profiles: &[HeightProfile]) -> Result<()> {
        if profiles.len() != self.checkpoints.len() {
            return Err(Error::Domain(format!(
                "expected {} checkpoint profiles, got {}",
                self.checkpoints.len(),
                profiles.len()
            )));
        }
        for (k, p) in profiles.iter().enumerate() {
            if p.n_columns() != self.n_columns {
                return Err(Error::Domain("column count mismatch".into()));
            }
            for (i, &h) in p.heights().iter().enumerate() {
                let h = h as i128;
                self.sum[k][i] += h;
                self.sum_sq[k][i] += h * h;
            }
        }
        self.runs += 1;
        Ok(())
    }

    /// Combine two partial accumulations. Exact integer sums make this
    /// order-independent.
    pub fn merge(mut self, other: Self) -> Result<Self> {
        if self.n_columns != other.n_columns || self.checkpoints != other.checkpoints {
            return Err(Error::Domain("accumulator shapes differ".into()));
        }
        for k in 0..self.checkpoints.len() {
            for i in 0..self.n_columns {
                self.sum[k][i] += other.sum[k][i];
                self.sum_sq[k][i] += other.sum_sq[k][i];
            }
        }
        self.runs += other.runs;
        Ok(self)
    }

    fn checkpoint_index(&self, t: u64) -> Result<usize> {
        self.checkpoints
            .iter()
            .position(|&c| c == t)
            .ok_or_else(|| Error::Domain(format!("no checkpoint at T = {t}")))
    }

    /// Interface width at checkpoint `t`: the per-column variance of h over
    /// runs, averaged over columns, square-rooted. Needs at least two runs.
    pub fn width(&self, t: u64) -> Result<f64> {
        let k = self.checkpoint_index(t)?;
        if self.runs < 2 {
            return Err(Error::Domain(
                "width undefined for fewer than two runs".into(),
            ));
        }
        let r = self.runs as i128;
        let mut acc = 0.0;
        for i in 0..self.n_columns {
            // population variance, exact numerator: (R*ssq - s^2) / R^2
            let numer = r * self.sum_sq[k][i] - self.sum[k][i] * self.sum[k][i];
            acc += numer as f64 / (r as f64 * r as f64);
        }
        Ok((acc / self.n_columns as f64).sqrt())
    }

    /// Mean height over runs and columns at checkpoint `t`.
    pub fn mean_height(&self, t: u64) -> Result<f64> {
        let k = self.checkpoint_index(t)?;
        if self.runs == 0 {
            return Err(Error::Domain("no runs recorded".into()));
        }
        let total: i128 = self.sum[k].iter().sum();
        Ok(total as f64 / (self.runs as f64 * self.n_columns as f64))
    }

    /// Widths at every checkpoint as a (tau, width) series, tau = T/N.
    pub fn width_series(&self) -> Result<WidthSeries> {
        let n = self.n_columns as f64;
        let points = self
            .checkpoints
            .iter()
            .map(|&t| Ok((t as f64 / n, self.width(t)?)))
            .collect::<Result<Vec<_>>>()?;
        WidthSeries::new(self.n_columns, points)
    }
}

/// Width against rescaled time tau = T/N for one substrate size.
#[derive(Debug, Clone, Serialize)]
pub struct WidthSeries {
    pub n_columns: usize,
    pub points: Vec<(f64, f64)>,
}

impl WidthSeries {
    pub fn new(n_columns: usize, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Domain("tau values must be strictly increasing".into()));
        }
        if points.iter().any(|&(_, w)| w < 0.0 || !w.is_finite()) {
            return Err(Error::Domain("widths must be finite and non-negative".into()));
        }
        Ok(Self { n_columns, points })
    }
}

/// Least-squares exponent estimate with its context.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub exponent: f64,
    pub std_error: f64,
    pub window: (f64, f64),
    pub residual_norm: f64,
    /// Set when the fit window is thin or reaches toward saturation.
    pub quality_warning: Option<String>,
}

/// Slope of log(width) vs log(tau) over `window = (tau_min, tau_max)`.
pub fn growth_exponent(series: &WidthSeries, window: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Domain("empty fit window".into()));
    }
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .copied()
        .filter(|&(tau, _)| tau >= lo && tau <= hi)
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain("fit window holds fewer than two points".into()));
    }
    if pts.iter().any(|&(_, w)| w <= 0.0) {
        return Err(Error::Domain("zero width inside fit window".into()));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(t, w)| (t.ln(), w.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("degenerate fit window".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = logs
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let std_error = if logs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };

    let mut warning = None;
    if pts.len() < 8 {
        warning = Some(format!("only {} points in fit window", pts.len()));
    }
    let n_sub = series.n_columns as f64;
    let u_max = pts.last().unwrap().0 / n_sub.powf(1.5);
    if u_max > 0.25 {
        warning = Some(format!(
            "window reaches u = {u_max:.3}, inside the saturation crossover"
        ));
    }
    Ok(FitResult {
        exponent: slope,
        std_error,
        window,
        residual_norm: sse.sqrt(),
        quality_warning: warning,
    })
}

/// One curve after rescaling to (u, y) = (tau/N^{3/2}, width/N^{1/2}).
#[derive(Debug, Clone, Serialize)]
pub struct ScaledCurve {
    pub n_columns: usize,
    pub points: Vec<(f64, f64)>,
}

/// A group of rescaled points, from at least two sizes, that share a u value.
#[derive(Debug, Clone, Serialize)]
pub struct CollapseBin {
    pub u: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub y_mean: f64,
    pub spread: f64,
    pub sizes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseReport {
    pub curves: Vec<ScaledCurve>,
    pub bins: Vec<CollapseBin>,
    /// Worst relative spread over the shared bins.
    pub mismatch: f64,
}

/// Two u values land in the same bin when they agree to this relative width.
const COLLAPSE_BIN_REL: f64 = 0.02;

/// Rescale several width series onto the single master curve
/// y(u) = width/N^{1/2} at u = tau/N^{3/2} and measure how far apart the
/// curves sit where they overlap: mismatch = max over shared u-bins of
/// (max - min)/mean.
pub fn collapse(series: &[WidthSeries]) -> Result<CollapseReport> {
    let mut sizes: Vec<usize> = series.iter().map(|s| s.n_columns).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::Domain(
            "collapse needs at least three distinct sizes".into(),
        ));
    }
    let curves: Vec<ScaledCurve> = series
        .iter()
        .map(|s| {
            let n = s.n_columns as f64;
            ScaledCurve {
                n_columns: s.n_columns,
                points: s
                    .points
                    .iter()
                    .map(|&(tau, w)| (tau / n.powf(1.5), w / n.sqrt()))
                    .collect(),
            }
        })
        .collect();

    // Pool every point, sort by u, then cluster neighbours within the
    // relative bin width. A bin only scores if several sizes land in it.
    let mut pool: Vec<(f64, f64, usize)> = Vec::new();
    for c in &curves {
        for &(u, y) in &c.points {
            pool.push((u, y, c.n_columns));
        }
    }
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut bins = Vec::new();
    let mut mismatch: f64 = 0.0;
    let mut start = 0;
    while start < pool.len() {
        let mut end = start + 1;
        while end < pool.len() && pool[end].0 - pool[start].0 <= COLLAPSE_BIN_REL * pool[start].0 {
            end += 1;
        }
        let group = &pool[start..end];
        let mut members: Vec<usize> = group.iter().map(|g| g.2).collect();
        members.sort_unstable();
        members.dedup();
        if members.len() >= 2 {
            let y_min = group.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
            let y_max = group.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
            let y_mean = group.iter().map(|g| g.1).sum::<f64>() / group.len() as f64;
            let spread = if y_mean > 0.0 { (y_max - y_min) / y_mean } else { 0.0 };
            mismatch = mismatch.max(spread);
            bins.push(CollapseBin {
                u: group.iter().map(|g| g.0).sum::<f64>() / group.len() as f64,
                y_min,
                y_max,
                y_mean,
                spread,
                sizes: members.len(),
            });
        }
        start = end;
    }
    if bins.is_empty() {
        return Err(Error::Domain(
            "curves share no u values; collapse is incomparable".into(),
        ));
    }
    Ok(CollapseReport { curves, bins, mismatch })
}

/// Saturated-width scaling fit: w^2(N) = a N^{2 alpha} + b, the offset
/// soaking up the size-independent intrinsic width. `raw_alpha` is the plain
/// log-log slope of w vs N for comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SaturationFit {
    pub alpha: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub sse: f64,
    pub raw_alpha: f64,
}

/// Fit saturated squared widths against substrate size on an exponent grid,
/// solving the linear (a, b) pair at each alpha and keeping the best.
pub fn roughness_exponent(sizes: &[usize], w2_sat: &[f64]) -> Result<SaturationFit> {
    if sizes.len() != w2_sat.len() || sizes.len() < 3 {
        return Err(Error::Domain(
            "need at least three (size, width^2) pairs".into(),
        ));
    }
    if w2_sat.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
        return Err(Error::Domain("squared widths must be positive".into()));
    }
    let ns: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let m = ns.len() as f64;

    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut alpha = 0.2f64;
    while alpha <= 0.9 + 1e-12 {
        let xs: Vec<f64> = ns.iter().map(|&n| n.powf(2.0 * alpha)).collect();
        let sx: f64 = xs.iter().sum();
        let sy: f64 = w2_sat.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(w2_sat).map(|(x, y)| x * y).sum();
        let det = m * sxx - sx * sx;
        if det.abs() > 1e-30 {
            let a = (m * sxy - sx * sy) / det;
            let b = (sy - a * sx) / m;
            let sse: f64 = xs
                .iter()
                .zip(w2_sat)
                .map(|(x, y)| {
                    let r = y - (a * x + b);
                    r * r
                })
                .sum();
            if best.map_or(true, |(_, _, _, s)| sse < s) {
                best = Some((alpha, a, b, sse));
            }
        }
        alpha += 0.0025;
    }
    let (alpha, amplitude, offset, sse) =
        best.ok_or_else(|| Error::Numerical("roughness fit failed".into()))?;

    let lx: Vec<f64> = ns.iter().map(|&n| n.ln()).collect();
    let ly: Vec<f64> = w2_sat.iter().map(|&w| 0.5 * w.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let raw_alpha = sxy / sxx;

    Ok(SaturationFit { alpha, amplitude, offset, sse, raw_alpha })
}

/// Exact running sums x, x^2, x^3, x^4 of integer samples.
#[derive(Debug, Clone, Default)]
pub struct MomentAccumulator {
    n: u64,
    s1: i128,
    s2: i128,
    s3: i128,
    s4: i128,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: i64) {
        let x = x as i128;
        self.n += 1;
        self.s1 += x;
        self.s2 += x * x;
        self.s3 += x * x * x;
        self.s4 += x * x * x * x;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.s3 += other.s3;
        self.s4 += other.s4;
        self
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::Domain("no samples".into()));
        }
        Ok(self.s1 as f64 / self.n as f64)
    }

    /// Population central moments (m2, m3, m4). The numerators
    /// n s2 - s1^2, n^2 s3 - 3 n s2 s1 + 2 s1^3, ... are formed in exact
    /// integer arithmetic, so no cancellation is lost to rounding.
    pub fn central_moments(&self) -> Result<(f64, f64, f64)> {
        if self.n == 0 {
            return Err(Error::Domain("no samples".into()));
        }
        let n = self.n as i128;
        let m2_num = n
            .checked_mul(self.s2)
            .and_then(|v| v.checked_sub(self.s1.checked_mul(self.s1)?))
            .ok_or_else(|| Error::Numerical("moment overflow".into()))?;
        let m3_num = (|| {
            let a = n.checked_mul(n)?.checked_mul(self.s3)?;
            let b = n.checked_mul(3)?.checked_mul(self.s2)?.checked_mul(self.s1)?;
            let c = self.s1.checked_mul(self.s1)?.checked_mul(self.s1)?.checked_mul(2)?;
            a.checked_sub(b)?.checked_add(c)
        })()
        .ok_or_else(|| Error::Numerical("moment overflow".into()))?;
        let m4_num = (|| {
            let n2 = n.checked_mul(n)?;
            let n3 = n2.checked_mul(n)?;
            let s1_2 = self.s1.checked_mul(self.s1)?;
            let s1_3 = s1_2.checked_mul(self.s1)?;
            let s1_4 = s1_3.checked_mul(self.s1)?;
            let a = n3.checked_mul(self.s4)?;
            let b = n2.checked_mul(4)?.checked_mul(self.s3)?.checked_mul(self.s1)?;
            let c = n.checked_mul(6)?.checked_mul(self.s2)?.checked_mul(s1_2)?;
            let d = s1_4.checked_mul(3)?;
            a.checked_sub(b)?.checked_add(c)?.checked_sub(d)
        })()
        .ok_or_else(|| Error::Numerical("moment overflow".into()))?;
        let nf = self.n as f64;
        Ok((
            m2_num as f64 / (nf * nf),
            m3_num as f64 / (nf * nf * nf),
            m4_num as f64 / (nf * nf * nf * nf),
        ))
    }

    pub fn report(&self) -> Result<MomentReport> {
        if self.n < 2 {
            return Err(Error::Domain("need at least two samples".into()));
        }
        let n = self.n as f64;
        let mean = self.mean()?;
        let (m2, m3, m4) = self.central_moments()?;
        let variance = m2 * n / (n - 1.0);
        let (skewness, skewness_adjusted) = if m2 > 0.0 {
            let g1 = m3 / m2.powf(1.5);
            let adj = if self.n >= 3 {
                Some((n * (n - 1.0)).sqrt() / (n - 2.0) * g1)
            } else {
                None
            };
            (Some(g1), adj)
        } else {
            (None, None)
        };
        let excess_kurtosis_adjusted = if m2 > 0.0 && self.n >= 4 {
            let g2 = m4 / (m2 * m2) - 3.0;
            Some((n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0))
        } else {
            None
        };
        Ok(MomentReport {
            count: self.n,
            mean,
            variance,
            skewness,
            skewness_adjusted,
            excess_kurtosis_adjusted,
        })
    }
}

/// Sample moments. `variance` is the unbiased estimator; the adjusted
/// skewness and excess kurtosis carry the usual small-sample corrections.
/// Skewness and kurtosis are `None` for degenerate (constant) samples.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub skewness_adjusted: Option<f64>,
    pub excess_kurtosis_adjusted: Option<f64>,
}

impl MomentReport {
    /// Moments of the affinely rescaled variable (x - shift)/scale.
    /// Skewness and kurtosis are scale-free and carry over unchanged.
    pub fn rescaled(&self, shift: f64, scale: f64) -> Result<MomentReport> {
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::Domain("scale must be positive".into()));
        }
        Ok(MomentReport {
            count: self.count,
            mean: (self.mean - shift) / scale,
            variance: self.variance / (scale * scale),
            skewness: self.skewness,
            skewness_adjusted: self.skewness_adjusted,
            excess_kurtosis_adjusted: self.excess_kurtosis_adjusted,
        })
    }
}

/// Moment report straight from integer samples.
pub fn height_moments(samples: &[i64]) -> Result<MomentReport> {
    let mut acc = MomentAccumulator::new();
    for &x in samples {
        acc.add(x);
    }
    acc.report()
}

/// Ensemble driver configuration: independent runs of random deposition on a
/// fixed substrate, one reproducible random stream per run.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleSpec {
    pub n_columns: usize,
    pub boundary: BoundaryCondition,
    pub runs: u32,
    pub master_seed: u64,
    /// Offsets the per-run stream indices so different experiments sharing a
    /// master seed stay decorrelated.
    pub stream_base: u64,
}

impl EnsembleSpec {
    fn run_stream(&self, run: u32) -> RngStream {
        RngStream::new(self.master_seed, self.stream_base + run as u64)
    }
}

fn simulate_checkpointed<A, F>(spec: &EnsembleSpec, checkpoints: &[u64], make: F) -> Result<A>
where
    A: Send,
    F: Fn() -> A + Sync,
    A: CheckpointSink,
{
    if spec.runs < 1 {
        return Err(Error::Domain("need at least one run".into()));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("checkpoints must be strictly increasing".into()));
    }
    let n = spec.n_columns;
    let acc = (0..spec.runs)
        .into_par_iter()
        .fold(
            || None::<A>,
            |acc, run| {
                let mut acc = acc.unwrap_or_else(&make);
                let mut rng = spec.run_stream(run);
                let mut heights = vec![0i64; n];
                let mut t = 0u64;
                for (k, &target) in checkpoints.iter().enumerate() {
                    while t < target {
                        let c = rng.column(n);
                        let mut m = heights[c];
                        match spec.boundary {
                            BoundaryCondition::Free => {
                                if c > 0 {
                                    m = m.max(heights[c - 1]);
                                }
                                if c + 1 < n {
                                    m = m.max(heights[c + 1]);
                                }
                            }
                            BoundaryCondition::Periodic => {
                                m = m.max(heights[(c + n - 1) % n]);
                                m = m.max(heights[(c + 1) % n]);
                            }
                        }
                        heights[c] = m + 1;
                        t += 1;
                    }
                    acc.record(k, &heights);
                }
                Some(acc)
            },
        )
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(a.combine(b)),
                (x, None) | (None, x) => x,
            },
        );
    acc.ok_or_else(|| Error::Domain("no runs executed".into()))
}

/// One checkpointed observable collected during an ensemble sweep.
trait CheckpointSink: Send {
    fn record(&mut self, checkpoint: usize, heights: &[i64]);
    fn combine(self, other: Self) -> Self;
}

struct WidthSink {
    runs: u64,
    sum: Vec<Vec<i128>>,
    sum_sq: Vec<Vec<i128>>,
    seen_last: bool,
}

impl CheckpointSink for WidthSink {
    fn record(&mut self, k: usize, heights: &[i64]) {
        for (i, &h) in heights.iter().enumerate() {
            let h = h as i128;
            self.sum[k][i] += h;
            self.sum_sq[k][i] += h * h;
        }
        if k + 1 == self.sum.len() {
            self.runs += 1;
            self.seen_last = true;
        }
    }
    fn combine(mut self, other: Self) -> Self {
        for k in 0..self.sum.len() {
            for i in 0..self.sum[k].len() {
                self.sum[k][i] += other.sum[k][i];
                self.sum_sq[k][i] += other.sum_sq[k][i];
            }
        }
        self.runs += other.runs;
        self
    }
}

/// Run the ensemble and collect per-column sums at each checkpoint.
pub fn accumulate_ensemble(spec: &EnsembleSpec, checkpoints: &[u64]) -> Result<EnsembleAccumulator> {
    let n = spec.n_columns;
    let ncp = checkpoints.len();
    let sink = simulate_checkpointed(spec, checkpoints, || WidthSink {
        runs: 0,
        sum: vec![vec![0; n]; ncp],
        sum_sq: vec![vec![0; n]; ncp],
        seen_last: false,
    })?;
    Ok(EnsembleAccumulator {
        n_columns: n,
        checkpoints: checkpoints.to_vec(),
        runs: sink.runs,
        sum: sink.sum,
        sum_sq: sink.sum_sq,
    })
}

struct SpatialSink {
    runs: u64,
    // per checkpoint: sum over runs of N*sum(h^2) - (sum h)^2, exact
    numer: Vec<i128>,
    last: usize,
}

impl CheckpointSink for SpatialSink {
    fn record(&mut self, k: usize, heights: &[i64]) {
        let n = heights.len() as i128;
        let mut s = 0i128;
        let mut ss = 0i128;
        for &h in heights {
            let h = h as i128;
            s += h;
            ss += h * h;
        }
        self.numer[k] += n * ss - s * s;
        if k + 1 == self.last {
            self.runs += 1;
        }
    }
    fn combine(mut self, other: Self) -> Self {
        for k in 0..self.numer.len() {
            self.numer[k] += other.numer[k];
        }
        self.runs += other.runs;
        self
    }
}

/// Mean over runs of the single-run spatial variance (mean-subtracted within
/// each profile) at each checkpoint. This is the width that saturates; the
/// ensemble width keeps growing through the common-mode height fluctuation.
pub fn mean_spatial_variance(spec: &EnsembleSpec, checkpoints: &[u64]) -> Result<Vec<f64>> {
    let sink = simulate_checkpointed(spec, checkpoints, || SpatialSink {
        runs: 0,
        numer: vec![0; checkpoints.len()],
        last: checkpoints.len(),
    })?;
    let n = spec.n_columns as f64;
    Ok(sink
        .numer
        .iter()
        .map(|&q| q as f64 / (sink.runs as f64 * n * n))
        .collect())
}

struct HeightSink {
    column: usize,
    fixed: Vec<MomentAccumulator>,
    max: Vec<MomentAccumulator>,
    mean_sum: Vec<i128>,
    runs: u64,
}

impl CheckpointSink for HeightSink {
    fn record(&mut self, k: usize, heights: &[i64]) {
        self.fixed[k].add(heights[self.column]);
        self.max[k].add(heights.iter().copied().max().unwrap());
        self.mean_sum[k] += heights.iter().map(|&h| h as i128).sum::<i128>();
        if k + 1 == self.fixed.len() {
            self.runs += 1;
        }
    }
    fn combine(mut self, other: Self) -> Self {
        for k in 0..self.fixed.len() {
            let f = std::mem::take(&mut self.fixed[k]);
            self.fixed[k] = f.merge(other.fixed[k].clone());
            let m = std::mem::take(&mut self.max[k]);
            self.max[k] = m.merge(other.max[k].clone());
            self.mean_sum[k] += other.mean_sum[k];
        }
        self.runs += other.runs;
        self
    }
}

/// Height-distribution samples at each checkpoint: exact moment sums for one
/// fixed column and for the running maximum, plus the ensemble mean height
/// (used to fit the growth velocity).
pub struct HeightStatistics {
    pub checkpoints: Vec<u64>,
    pub fixed_column: Vec<MomentAccumulator>,
    pub max_column: Vec<MomentAccumulator>,
    pub mean_heights: Vec<f64>,
}

pub fn sample_height_statistics(
    spec: &EnsembleSpec,
    column: usize,
    checkpoints: &[u64],
) -> Result<HeightStatistics> {
    if column >= spec.n_columns {
        return Err(Error::Domain("column out of range".into()));
    }
    let ncp = checkpoints.len();
    let sink = simulate_checkpointed(spec, checkpoints, || HeightSink {
        column,
        fixed: vec![MomentAccumulator::new(); ncp],
        max: vec![MomentAccumulator::new(); ncp],
        mean_sum: vec![0; ncp],
        runs: 0,
    })?;
    let denom = sink.runs as f64 * spec.n_columns as f64;
    Ok(HeightStatistics {
        checkpoints: checkpoints.to_vec(),
        fixed_column: sink.fixed,
        max_column: sink.max,
        mean_heights: sink.mean_sum.iter().map(|&s| s as f64 / denom).collect(),
    })
}

/// Growth velocity: least-squares slope of mean height against tau = T/N.
pub fn growth_velocity(n_columns: usize, checkpoints: &[u64], mean_heights: &[f64]) -> Result<f64> {
    if checkpoints.len() != mean_heights.len() || checkpoints.len() < 2 {
        return Err(Error::Domain("need two or more checkpoints".into()));
    }
    let n = n_columns as f64;
    let xs: Vec<f64> = checkpoints.iter().map(|&t| t as f64 / n).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = mean_heights.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(mean_heights)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    if sxx == 0.0 {
        return Err(Error::Domain("degenerate velocity fit".into()));
    }
    Ok(sxy / sxx)
}
