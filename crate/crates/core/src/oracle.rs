//! Finite-`N` oracle: the exact partition function by dynamic programming
//! over heights, and exact sampling from the polymer measure.
//!
//! The bond `(S_{x−1}, S_x)` carries the sign of its nonzero endpoint, so the
//! weight of a step depends only on the height it starts from.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{ExcursionMeasure, Triple};
use crate::sequence::PeriodicSequence;
use crate::transfer::PhasePoint;

/// Default bound on `N` for the O(N²) oracle.
pub const DEFAULT_MAX_N: usize = 30_000;

const UNDERFLOW: f64 = 1e-290;

fn check_n(n: usize, max_n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    if n > max_n {
        return Err(Error::TooLong { n, max: max_n });
    }
    Ok(())
}

/// `λ(ω_x + h)` for `x = 1..=n`, indexed by `x − 1`.
fn step_fields(seq: &PeriodicSequence, p: PhasePoint, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|x| p.lambda * (seq.charge(x) as f64 + p.h))
        .collect()
}

/// `(1/N) log Z_N` with the default bound on `N`.
pub fn log_partition_exact(seq: &PeriodicSequence, p: PhasePoint, n: usize) -> Result<f64> {
    log_partition_exact_bounded(seq, p, n, DEFAULT_MAX_N)
}

/// `(1/N) log E[exp(λ H_N(S))]` by a forward pass over heights.
///
/// Heights at time `x` are indexed by `i = (s + x)/2`; an up-step maps `i` to
/// `i + 1`, a down-step keeps `i`. The row is rescaled by its maximum after
/// every step.
pub fn log_partition_exact_bounded(
    seq: &PeriodicSequence,
    p: PhasePoint,
    n: usize,
    max_n: usize,
) -> Result<f64> {
    check_n(n, max_n)?;
    if p.lambda == 0.0 {
        return Ok(0.0);
    }
    let fields = step_fields(seq, p, n);
    let mut row = vec![0.0f64; n + 1];
    let mut next = vec![0.0f64; n + 1];
    row[0] = 1.0;
    let mut log_scale = 0.0;
    for (x, &a) in fields.iter().enumerate() {
        let (up, down) = (0.5 * a.exp(), 0.5 * (-a).exp());
        next[..=x + 1].fill(0.0);
        for i in 0..=x {
            let w = row[i];
            if w == 0.0 {
                continue;
            }
            let s = 2 * i as i64 - x as i64;
            let (wu, wd) = match s.signum() {
                1 => (up, up),
                -1 => (down, down),
                _ => (up, down),
            };
            next[i + 1] += w * wu;
            next[i] += w * wd;
        }
        let m = next[..=x + 1].iter().copied().fold(0.0, f64::max);
        log_scale += m.ln();
        for v in &mut next[..=x + 1] {
            *v /= m;
            if *v < UNDERFLOW {
                *v = 0.0;
            }
        }
        std::mem::swap(&mut row, &mut next);
    }
    let total: f64 = row.iter().sum();
    Ok((log_scale + total.ln()) / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeEnergyEstimate {
    /// extrapolated `f`
    pub f_est: f64,
    /// largest absolute fit residual
    pub err_est: f64,
    /// fitted coefficient of `log N / N`
    pub slope: f64,
    /// `(N, (1/N) log Z_N)`
    pub points: Vec<(usize, f64)>,
}

/// Fits `f_N = f + c·log N / N` by least squares over `n_list`.
pub fn free_energy_estimate(
    seq: &PeriodicSequence,
    p: PhasePoint,
    n_list: &[usize],
    max_n: usize,
) -> Result<FreeEnergyEstimate> {
    if n_list.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 values of N".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("N list must be increasing".into()));
    }
    let points = n_list
        .par_iter()
        .map(|&n| Ok((n, log_partition_exact_bounded(seq, p, n, max_n)?)))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln() / n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, f)| f).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let f_est = my - slope * mx;
    let err_est = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - f_est - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(FreeEnergyEstimate {
        f_est,
        err_est,
        slope,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathSample {
    /// `S_0, …, S_N`
    pub heights: Vec<i64>,
    pub seed: u64,
    /// position of this path in its batch; selects the RNG stream
    pub index: u64,
}

impl PathSample {
    /// Heights separated by single spaces.
    pub fn render(&self) -> String {
        self.heights
            .iter()
            .map(i64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Exact sampler for the polymer measure of length `N`.
///
/// Backward log-weights `W_x(s) = log E[exp(λ Σ_{y > x} …) | S_x = s]` are
/// kept only at every `block`-th time; the rows of a block are recomputed
/// from its right checkpoint while all paths cross that block together.
pub struct PathSampler {
    n: usize,
    block: usize,
    fields: Vec<f64>,
    /// `checkpoints[k]` is row `x = k·block` (the last one is row `N`)
    checkpoints: Vec<Vec<f64>>,
}

impl PathSampler {
    pub fn new(seq: &PeriodicSequence, p: PhasePoint, n: usize, max_n: usize) -> Result<Self> {
        check_n(n, max_n)?;
        let fields = step_fields(seq, p, n);
        let block = ((n as f64).sqrt().ceil() as usize).max(1);
        let mut sampler = Self {
            n,
            block,
            fields,
            checkpoints: Vec::new(),
        };
        let n_blocks = n.div_ceil(block);
        let mut checkpoints = vec![Vec::new(); n_blocks + 1];
        let mut row = vec![0.0; n + 1];
        checkpoints[n_blocks] = row.clone();
        for x in (0..n).rev() {
            row = sampler.backward_step(x, &row);
            if x % block == 0 {
                checkpoints[x / block] = row.clone();
            }
        }
        sampler.checkpoints = checkpoints;
        Ok(sampler)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row `x` from row `x + 1` (both indexed by `(s + x)/2`).
    fn backward_step(&self, x: usize, next: &[f64]) -> Vec<f64> {
        let a = self.fields[x];
        let half = -std::f64::consts::LN_2;
        (0..=x)
            .map(|i| {
                let s = 2 * i as i64 - x as i64;
                let (au, ad) = match s.signum() {
                    1 => (a, a),
                    -1 => (-a, -a),
                    _ => (a, -a),
                };
                half + log_add_exp(au + next[i + 1], ad + next[i])
            })
            .collect()
    }

    /// Rows `lo..=hi` rebuilt from the checkpoint at `hi`.
    fn block_rows(&self, k: usize) -> (usize, Vec<Vec<f64>>) {
        let lo = k * self.block;
        let hi = ((k + 1) * self.block).min(self.n);
        let mut rows = vec![Vec::new(); hi - lo + 1];
        rows[hi - lo] = self.checkpoints[k + 1].clone();
        for x in (lo..hi).rev() {
            rows[x - lo] = self.backward_step(x, &rows[x - lo + 1]);
        }
        (lo, rows)
    }

    /// `log Z_N`, read off the backward table.
    pub fn log_partition(&self) -> f64 {
        self.checkpoints[0][0]
    }

    /// Draws `count` independent paths; path `j` uses ChaCha8 stream `j` of `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<PathSample> {
        let mut rngs: Vec<ChaCha8Rng> = (0..count)
            .map(|j| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(j as u64);
                r
            })
            .collect();
        let mut paths: Vec<Vec<i64>> = (0..count)
            .map(|_| {
                let mut h = Vec::with_capacity(self.n + 1);
                h.push(0);
                h
            })
            .collect();
        for k in 0..self.n.div_ceil(self.block) {
            let (lo, rows) = self.block_rows(k);
            let hi = lo + rows.len() - 1;
            paths
                .par_iter_mut()
                .zip(rngs.par_iter_mut())
                .for_each(|(path, rng)| {
                    for x in lo..hi {
                        let s = *path.last().unwrap();
                        let a = self.fields[x];
                        let (au, ad) = match s.signum() {
                            1 => (a, a),
                            -1 => (-a, -a),
                            _ => (a, -a),
                        };
                        let i = ((s + x as i64) / 2) as usize;
                        let next = &rows[x + 1 - lo];
                        let lu = au + next[i + 1];
                        let ld = ad + next[i];
                        // P(up) = 1/(1 + e^{ld − lu})
                        let p_up = 1.0 / (1.0 + (ld - lu).exp());
                        let step = if rng.gen::<f64>() < p_up { 1 } else { -1 };
                        path.push(s + step);
                    }
                });
        }
        paths
            .into_iter()
            .enumerate()
            .map(|(j, heights)| PathSample {
                heights,
                seed,
                index: j as u64,
            })
            .collect()
    }

    /// Exact marginal `P(S_x = s)` for every `x`, from forward × backward weights.
    /// Row `x` is indexed by `(s + x)/2`.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.n + 1);
        let mut fwd = vec![0.0f64];
        for k in 0..self.n.div_ceil(self.block) {
            let (lo, rows) = self.block_rows(k);
            let hi = lo + rows.len() - 1;
            for x in lo..=hi {
                if x > lo || k == 0 {
                    let lw: Vec<f64> = fwd.iter().zip(&rows[x - lo]).map(|(f, b)| f + b).collect();
                    let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = lw.iter().map(|v| (v - m).exp()).sum();
                    out.push(lw.iter().map(|v| (v - m).exp() / z).collect());
                }
                if x < hi {
                    let a = self.fields[x];
                    let mut next = vec![f64::NEG_INFINITY; x + 2];
                    for (i, &f) in fwd.iter().enumerate() {
                        let s = 2 * i as i64 - x as i64;
                        let (au, ad) = match s.signum() {
                            1 => (a, a),
                            -1 => (-a, -a),
                            _ => (a, -a),
                        };
                        next[i + 1] = log_add_exp(next[i + 1], f + au - std::f64::consts::LN_2);
                        next[i] = log_add_exp(next[i], f + ad - std::f64::consts::LN_2);
                    }
                    fwd = next;
                }
            }
        }
        out
    }
}

/// Draws `count` exact samples of length `n`.
pub fn sample_paths(
    seq: &PeriodicSequence,
    p: PhasePoint,
    n: usize,
    count: usize,
    seed: u64,
    max_n: usize,
) -> Result<Vec<PathSample>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    Ok(PathSampler::new(seq, p, n, max_n)?.sample(count, seed))
}

/// Excursion statistics pooled over a batch of paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub paths: usize,
    /// completed returns to zero, summed over paths
    pub ell_n: usize,
    pub excursion_lengths: Vec<u64>,
    /// mean completed excursion length; `NaN` if none completed
    pub mean_excursion: f64,
    /// `L → fraction of (path, x ∈ 1..=N) with S_x > L`
    pub frac_above: BTreeMap<u64, f64>,
    /// counts of `(η_{k−1}/2 mod T, η_k/2 mod T, η_k − η_{k−1})`
    #[serde(skip)]
    pub counts: BTreeMap<Triple, u64>,
    pub modulus: usize,
}

impl EmpiricalStats {
    /// Normalized empirical excursion measure.
    pub fn empirical_measure(&self) -> ExcursionMeasure {
        let total: u64 = self.counts.values().sum();
        ExcursionMeasure::from_atoms(
            self.modulus,
            self.counts
                .iter()
                .map(|(k, &c)| (*k, c as f64 / total as f64))
                .collect::<Vec<_>>(),
        )
    }
}

/// Cuts every path at its zeros and pools the completed excursions.
pub fn excursion_stats(samples: &[PathSample], modulus: usize, levels: &[u64]) -> Result<EmpiricalStats> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if modulus == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    let t = modulus as u64;
    let mut lengths = Vec::new();
    let mut counts = BTreeMap::new();
    let mut above = vec![0u64; levels.len()];
    let mut sites = 0u64;
    for path in samples {
        let mut last = 0u64;
        for (x, &s) in path.heights.iter().enumerate().skip(1) {
            let x = x as u64;
            sites += 1;
            for (c, &l) in above.iter_mut().zip(levels) {
                if s > l as i64 {
                    *c += 1;
                }
            }
            if s == 0 {
                lengths.push(x - last);
                *counts
                    .entry((((last / 2) % t) as usize, ((x / 2) % t) as usize, x - last))
                    .or_insert(0) += 1;
                last = x;
            }
        }
    }
    let mean_excursion = if lengths.is_empty() {
        f64::NAN
    } else {
        lengths.iter().sum::<u64>() as f64 / lengths.len() as f64
    };
    Ok(EmpiricalStats {
        paths: samples.len(),
        ell_n: lengths.len(),
        excursion_lengths: lengths,
        mean_excursion,
        frac_above: levels
            .iter()
            .zip(&above)
            .map(|(&l, &c)| (l, c as f64 / sites as f64))
            .collect(),
        counts,
        modulus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    /// fitted decay rate of `P(|S_x| > L)` in `L`
    pub rate: f64,
    /// levels used in the fit
    pub levels: Vec<u64>,
    /// empirical `P(|S_x| > L)` at those levels
    pub survival: Vec<f64>,
}

/// Fits `P(|S_x| > L) ≈ C e^{−rL}` over the middle half of each path.
///
/// Levels are used while at least `min_count` observations exceed them, up
/// to `max_level`. The rate is clamped at zero.
pub fn tail_decay_check(samples: &[PathSample], max_level: u64, min_count: u64) -> Result<TailFit> {
    let n = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no samples".into()))?
        .heights
        .len()
        - 1;
    let (lo, hi) = (n / 4, 3 * n / 4);
    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    let mut total = 0u64;
    for path in samples {
        for &s in &path.heights[lo..=hi] {
            *hist.entry(s.unsigned_abs()).or_insert(0) += 1;
            total += 1;
        }
    }
    let mut levels = Vec::new();
    let mut survival = Vec::new();
    for l in 0..=max_level {
        let exceed: u64 = hist.range(l + 1..).map(|(_, c)| c).sum();
        if exceed < min_count {
            break;
        }
        levels.push(l);
        survival.push(exceed as f64 / total as f64);
    }
    if levels.len() < 2 {
        return Ok(TailFit {
            rate: 0.0,
            levels,
            survival,
        });
    }
    let xs: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
    let ys: Vec<f64> = survival.iter().map(|s| s.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(TailFit {
        rate: (-sxy / sxx).max(0.0),
        levels,
        survival,
    })
}
