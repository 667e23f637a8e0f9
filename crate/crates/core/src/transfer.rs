//! Energetic kernel, the transfer matrix `A(b, λ, h)`, its Perron–Frobenius
//! data, the tilted excursion measure `μ_b` and the functionals `I`, `Q`.
//!
//! Since `e^Φ = ½(1 + e^{-2λξ}·e^{-2λhx})`, every entry of `A` (and of the
//! first-moment matrix `Σ x·K·e^{Φ−bx}`) is a combination of two
//! class-filtered Laplace sums of `K`, so no truncation enters `Z`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{ExcursionMeasure, MEASURE_TOL};
use crate::model::Copolymer;
use crate::perron::{perron, EigenData};
use crate::return_law::{k_exact, ClassSums};

/// Default head cutoff for materialized excursion measures.
pub const DEFAULT_HEAD_CUTOFF: u64 = 10_000;

/// A point `(λ, h)` of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub lambda: f64,
    pub h: f64,
}

impl PhasePoint {
    pub fn new(lambda: f64, h: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("h must be >= 0, got {h}")));
        }
        Ok(Self { lambda, h })
    }
}

/// `log((1 + e^{-2t})/2)`, stable for either sign of `t`.
#[inline]
pub fn log_half_one_plus_exp_neg2(t: f64) -> f64 {
    if t >= 0.0 {
        (-2.0 * t).exp().ln_1p() - LN_2
    } else {
        -2.0 * t + (2.0 * t).exp().ln_1p() - LN_2
    }
}

/// `Φ(x) = log((1 + exp(−2(λξ + λhx)))/2)`.
#[inline]
pub fn phi(p: PhasePoint, xi: i64, x: u64) -> f64 {
    log_half_one_plus_exp_neg2(p.lambda * xi as f64 + p.lambda * p.h * x as f64)
}

/// The `log cosh` form `Φ̃ = ψ(λξ + λhx) − λhx = Φ + λξ`.
#[inline]
pub fn phi_tilde(p: PhasePoint, xi: i64, x: u64) -> f64 {
    let t = p.lambda * xi as f64 + p.lambda * p.h * x as f64;
    let a = t.abs();
    // log cosh a = a + log1p(e^{-2a}) − log 2
    a + (-2.0 * a).exp().ln_1p() - LN_2 - p.lambda * p.h * x as f64
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

impl Copolymer {
    fn sums_at(&self, b: f64, p: PhasePoint) -> (ClassSums, Option<ClassSums>) {
        let plain = self.law().class_sums(b);
        let shift = 2.0 * p.lambda * p.h;
        let shifted = (p.lambda > 0.0 && shift > 0.0).then(|| self.law().class_sums(b + shift));
        (plain, shifted)
    }

    fn assemble(&self, p: PhasePoint, plain: &[f64], shifted: Option<&[f64]>) -> DMatrix<f64> {
        let t = self.period();
        let shifted = shifted.unwrap_or(plain);
        DMatrix::from_fn(t, t, |a, b| {
            let g = self.class(a, b);
            let twist = -2.0 * p.lambda * self.xi().get(a, b) as f64;
            (log_add_exp(plain[g], twist + shifted[g]) - LN_2).exp()
        })
    }

    fn check_b(b: f64) -> Result<()> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("b must be >= 0, got {b}")));
        }
        Ok(())
    }

    /// `A_{αβ}(b, λ, h) = Σ_{x/2 ≡ β−α} K(x) exp(Φ_{αβ}(x) − bx)`.
    pub fn a_matrix(&self, b: f64, p: PhasePoint) -> Result<DMatrix<f64>> {
        Self::check_b(b)?;
        let (plain, shifted) = self.sums_at(b, p);
        Ok(self.assemble(p, &plain.ln_mass, shifted.as_ref().map(|s| s.ln_mass.as_slice())))
    }

    /// `Σ_{x/2 ≡ β−α} x K(x) exp(Φ_{αβ}(x) − bx)`; infinite at `b = 0`.
    pub fn moment_matrix(&self, b: f64, p: PhasePoint) -> Result<DMatrix<f64>> {
        Self::check_b(b)?;
        let (plain, shifted) = self.sums_at(b, p);
        Ok(self.assemble(p, &plain.ln_moment, shifted.as_ref().map(|s| s.ln_moment.as_slice())))
    }

    pub fn eigen(&self, b: f64, p: PhasePoint) -> Result<EigenData> {
        perron(&self.a_matrix(b, p)?)
    }

    /// Perron–Frobenius eigenvalue `Z(b, λ, h)`.
    pub fn z(&self, b: f64, p: PhasePoint) -> Result<f64> {
        Ok(self.eigen(b, p)?.z)
    }

    /// `μ_b`-weights `π_α v_β / (Z v_α)` of each pair, row-major.
    fn tilt(&self, e: &EigenData) -> Vec<f64> {
        let t = self.period();
        let mut out = vec![0.0; t * t];
        for a in 0..t {
            for b in 0..t {
                out[a * t + b] = e.pi[a] * e.v[b] / (e.z * e.v[a]);
            }
        }
        out
    }

    /// `f(b) = Σ x μ_b(x)`, computed from the moment matrix without
    /// materializing `μ_b`. Infinite at `b = 0`.
    pub fn mean_length(&self, b: f64, p: PhasePoint) -> Result<f64> {
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        let e = self.eigen(b, p)?;
        let mom = self.moment_matrix(b, p)?;
        let t = self.period();
        let tilt = self.tilt(&e);
        Ok((0..t * t).map(|i| tilt[i] * mom[(i / t, i % t)]).sum())
    }

    /// The tilted measure `μ_b(α,β,x) = π(α) K(x) e^{Φ−bx} v_β / (Z v_α)` with
    /// explicit atoms for `x <= cutoff` and per-pair tails.
    pub fn mu_b(&self, b: f64, p: PhasePoint, cutoff: u64) -> Result<ExcursionMeasure> {
        Self::check_b(b)?;
        let t = self.period();
        let a = self.a_matrix(b, p)?;
        let mom = self.moment_matrix(b, p)?;
        let e = perron(&a)?;
        let tilt = self.tilt(&e);
        let law = self.law();
        if cutoff / 2 > law.n_max() as u64 {
            return Err(Error::InvalidArgument(format!(
                "cutoff {cutoff} exceeds the cached return law (x <= {})",
                2 * law.n_max()
            )));
        }
        let mut head = BTreeMap::new();
        let mut tail_mass = vec![0.0; t * t];
        let mut tail_moment = vec![0.0; t * t];
        for alpha in 0..t {
            for beta in 0..t {
                let g = self.class(alpha, beta);
                let xi = self.xi().get(alpha, beta);
                let w = tilt[alpha * t + beta];
                let first = if g == 0 { t } else { g };
                let (mut hm, mut hx) = (0.0, 0.0);
                for n in (first..=(cutoff / 2) as usize).step_by(t) {
                    let x = 2 * n as u64;
                    let raw = law.k_half(n) * (phi(p, xi, x) - b * x as f64).exp();
                    hm += raw;
                    hx += x as f64 * raw;
                    head.insert((alpha, beta, x), w * raw);
                }
                let i = alpha * t + beta;
                tail_mass[i] = w * (a[(alpha, beta)] - hm).max(0.0);
                tail_moment[i] = w * (mom[(alpha, beta)] - hx).max(0.0);
            }
        }
        Ok(ExcursionMeasure::from_parts(t, cutoff, head, tail_mass, tail_moment))
    }

    /// The stationary excursion law `π_eq(α,β,x) = K(x)/T` on `x/2 ≡ β − α`.
    pub fn pi_eq(&self, cutoff: u64) -> ExcursionMeasure {
        let t = self.period();
        let law = self.law();
        let mut head = BTreeMap::new();
        let mut tail_mass = vec![0.0; t * t];
        for alpha in 0..t {
            for beta in 0..t {
                let g = self.class(alpha, beta);
                let first = if g == 0 { t } else { g };
                let mut hm = 0.0;
                for n in (first..=(cutoff / 2) as usize).step_by(t) {
                    let m = law.k_half(n) / t as f64;
                    hm += m;
                    head.insert((alpha, beta, 2 * n as u64), m);
                }
                tail_mass[alpha * t + beta] = (law.class_mass(g) / t as f64 - hm).max(0.0);
            }
        }
        ExcursionMeasure::from_parts(t, cutoff, head, tail_mass, vec![f64::INFINITY; t * t])
    }

    fn k_any(&self, x: u64) -> Result<f64> {
        match self.law().k(x) {
            Some(k) => Ok(k),
            None => k_exact(x),
        }
    }

    /// Relative-entropy cost `I(μ)` of a head-only measure; `+∞` outside the
    /// constraint set.
    pub fn rate_i(&self, mu: &ExcursionMeasure) -> Result<f64> {
        if mu.tail_mass() > 0.0 {
            return Err(Error::NotHeadOnly(mu.tail_mass()));
        }
        if mu.modulus() != self.period() || !mu.in_constraint_set(MEASURE_TOL) {
            return Ok(f64::INFINITY);
        }
        let first = mu.first_marginal();
        let mut total = 0.0;
        for (&(a, _, x), &m) in mu.atoms() {
            if m > 0.0 {
                total += m * (m / (first[a] * self.k_any(x)?)).ln();
            }
        }
        Ok(total)
    }

    /// `Q(μ) = Σ Φ μ − I(μ)`; `−∞` outside the constraint set.
    pub fn functional_q(&self, mu: &ExcursionMeasure, p: PhasePoint) -> Result<f64> {
        let i = self.rate_i(mu)?;
        if i.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        let energy: f64 = mu
            .atoms()
            .map(|(&(a, b, x), &m)| m * phi(p, self.xi().get(a, b), x))
            .sum();
        Ok(energy - i)
    }
}

/// `Σ x μ(x)` including the tail contribution.
pub fn mean_excursion(mu: &ExcursionMeasure) -> Result<f64> {
    let m = mu.mean_length();
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::InfiniteMean)
    }
}

/// `H̃(μ|ν) = Σ μ log(μ/ν) − Σ_α μ(α) log(μ(α)/ν(α))` over head atoms.
pub fn entropy_gap(mu: &ExcursionMeasure, nu: &ExcursionMeasure) -> f64 {
    let mu1 = mu.first_marginal();
    let nu1 = nu.first_marginal();
    let joint: f64 = mu
        .atoms()
        .filter(|(_, &m)| m > 0.0)
        .map(|(&(a, b, x), &m)| m * (m / nu.mass_of(a, b, x)).ln())
        .sum();
    let marg: f64 = mu1
        .iter()
        .zip(&nu1)
        .filter(|(&m, _)| m > 0.0)
        .map(|(&m, &n)| m * (m / n).ln())
        .sum();
    joint - marg
}
