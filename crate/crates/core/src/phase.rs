//! Critical curve, phase classification and the small/large coupling
//! constants `m_ω` and `M_ω`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_energy::solve_b_tilde;
use crate::model::Copolymer;
use crate::perron::perron;
use crate::return_law::{k_exact, C_K};
use crate::transfer::PhasePoint;

/// Half-width of the band `|Z(0) − 1|` labeled critical.
pub const CRITICAL_BAND: f64 = 1e-9;
/// Bracket width at which bisection on `h` may stop.
pub const H_TOL: f64 = 1e-10;
/// Guard on the `M` bracket.
pub const M_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Localized,
    Delocalized,
    Critical,
}

impl Phase {
    /// The closed region containing the point: `D` is closed, `L` open.
    pub fn region(self) -> &'static str {
        match self {
            Phase::Localized => "L",
            Phase::Delocalized | Phase::Critical => "D",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Localized => "Localized",
            Phase::Delocalized => "Delocalized",
            Phase::Critical => "Critical",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub lambda: f64,
    pub h_c: f64,
    /// `|Z(0, λ, h_c) − 1|`
    pub residual: f64,
}

/// `h_c(λ)`, the root of `Z(0, λ, h) = 1` in `h ∈ [0, 1]`.
pub fn critical_h(model: &Copolymer, lambda: f64) -> Result<CriticalPoint> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(CriticalPoint {
            lambda,
            h_c: 0.0,
            residual: 0.0,
        });
    }
    let z_at = |h: f64| model.z(0.0, PhasePoint { lambda, h });
    let z_lo0 = z_at(0.0)?;
    if z_lo0 <= 1.0 {
        return Ok(CriticalPoint {
            lambda,
            h_c: 0.0,
            residual: (z_lo0 - 1.0).abs(),
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut z_lo, mut z_hi) = (z_lo0, z_at(1.0)?);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let z = z_at(mid)?;
        if z > 1.0 {
            lo = mid;
            z_lo = z;
        } else {
            hi = mid;
            z_hi = z;
        }
        if hi - lo < H_TOL * hi.max(1e-300) && (z_lo - 1.0).abs().min((z_hi - 1.0).abs()) <= 1e-13 {
            break;
        }
    }
    let (h_c, z) = if (z_lo - 1.0).abs() <= (z_hi - 1.0).abs() {
        (lo, z_lo)
    } else {
        (hi, z_hi)
    };
    Ok(CriticalPoint {
        lambda,
        h_c,
        residual: (z - 1.0).abs(),
    })
}

/// `Σ_{αβ} p_{β−α} ξ_{αβ}²`.
fn weighted_xi_square(model: &Copolymer) -> f64 {
    let t = model.period();
    let mut s = 0.0;
    for a in 0..t {
        for b in 0..t {
            let xi = model.xi().get(a, b) as f64;
            s += model.law().class_mass(model.class(a, b)) * xi * xi;
        }
    }
    s
}

/// Small-coupling constant `m_ω = ((1/2T) Σ p ξ²)²`.
pub fn m_omega(model: &Copolymer) -> f64 {
    let s = weighted_xi_square(model) / (2.0 * model.period() as f64);
    s * s
}

/// `(1/T) Σ p ξ²/2 − C_K √(π m / 2)`, which vanishes at `m = m_ω`.
pub fn small_coupling_bracket(model: &Copolymer, m: f64) -> f64 {
    weighted_xi_square(model) / (2.0 * model.period() as f64)
        - C_K * (std::f64::consts::PI * m / 2.0).sqrt()
}

/// Exceptional lengths `x̂ = −ξ_{αβ}` that are positive and lie in class `β − α`.
fn exceptional_lengths(model: &Copolymer) -> Vec<(usize, usize, u64)> {
    let t = model.period();
    let mut out = Vec::new();
    for a in 0..t {
        for b in 0..t {
            let x = -model.xi().get(a, b);
            if x > 0 && x % 2 == 0 && ((x / 2) as usize) % t == model.class(a, b) {
                out.push((a, b, x as u64));
            }
        }
    }
    out
}

/// `Â(M)_{αβ} = ½p_{β−α} + ½K(x̂)e^{2Mx̂}·1[x̂ exceptional]`. Entries may be `+∞`.
pub fn a_hat(model: &Copolymer, m: f64) -> Result<DMatrix<f64>> {
    let t = model.period();
    let mut a = DMatrix::from_fn(t, t, |i, j| 0.5 * model.law().class_mass(model.class(i, j)));
    for (i, j, x) in exceptional_lengths(model) {
        a[(i, j)] += 0.5 * (k_exact(x)?.ln() + 2.0 * m * x as f64).exp();
    }
    Ok(a)
}

/// Perron–Frobenius eigenvalue `Ẑ(M)` of `Â(M)`; `+∞` on overflow.
pub fn z_hat(model: &Copolymer, m: f64) -> Result<f64> {
    let a = a_hat(model, m)?;
    if a.iter().any(|v| v.is_infinite()) {
        return Ok(f64::INFINITY);
    }
    Ok(perron(&a)?.z)
}

/// Large-coupling constant `M_ω = Ẑ⁻¹(1)`.
pub fn m_big_omega(model: &Copolymer) -> Result<f64> {
    if exceptional_lengths(model).is_empty() {
        return Err(Error::NoRoot("no exceptional excursion in Â".into()));
    }
    let mut lo = 0.0;
    if z_hat(model, lo)? >= 1.0 {
        return Err(Error::NoRoot("Ẑ(0) >= 1".into()));
    }
    let mut hi = 1.0;
    while z_hat(model, hi)? < 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > M_MAX {
            return Err(Error::NoRoot(format!("Ẑ(M) < 1 up to M = {M_MAX}")));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if z_hat(model, mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Phase of `(λ, h)` from the sign of `Z(0, λ, h) − 1`.
pub fn classify(model: &Copolymer, p: PhasePoint) -> Result<Phase> {
    if p.lambda == 0.0 || p.h >= 1.0 {
        return Ok(Phase::Delocalized);
    }
    Ok(phase_from_z0(model.z(0.0, p)?))
}

fn phase_from_z0(z0: f64) -> Phase {
    if z0 > 1.0 + CRITICAL_BAND {
        Phase::Localized
    } else if z0 < 1.0 - CRITICAL_BAND {
        Phase::Delocalized
    } else {
        Phase::Critical
    }
}

/// Everything known at one phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseEvaluation {
    pub lambda: f64,
    pub h: f64,
    pub z_at_zero: f64,
    pub b_tilde: f64,
    pub free_energy: f64,
    pub phase: Phase,
    /// `Σ x μ_{b̃}(x)`; absent when `b̃ = 0`
    pub mean_excursion: Option<f64>,
}

pub fn evaluate(model: &Copolymer, p: PhasePoint) -> Result<PhaseEvaluation> {
    let fe = solve_b_tilde(model, p)?;
    if !fe.converged {
        return Err(Error::NoConvergence(0));
    }
    let phase = if p.lambda == 0.0 || p.h >= 1.0 {
        Phase::Delocalized
    } else {
        phase_from_z0(fe.z_at_zero)
    };
    let mean_excursion = if fe.b_tilde > 0.0 {
        Some(model.mean_length(fe.b_tilde, p)?)
    } else {
        None
    };
    Ok(PhaseEvaluation {
        lambda: p.lambda,
        h: p.h,
        z_at_zero: fe.z_at_zero,
        b_tilde: fe.b_tilde,
        free_energy: fe.f,
        phase,
        mean_excursion,
    })
}

/// Incremental ratio of `h_c` between consecutive grid points with the bound
/// `(1 − h_c(λ))/λ` at the left end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeDiagnostic {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSweep {
    pub points: Vec<CriticalPoint>,
    pub slopes: Vec<SlopeDiagnostic>,
}

/// `h_c` over an ascending grid of couplings, in parallel.
pub fn sweep_curve(model: &Copolymer, lambda_grid: &[f64]) -> Result<CurveSweep> {
    if lambda_grid.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0]) {
        return Err(Error::InvalidArgument("lambda grid must be strictly ascending".into()));
    }
    let points = lambda_grid
        .par_iter()
        .map(|&l| critical_h(model, l))
        .collect::<Result<Vec<_>>>()?;
    let slopes = points
        .windows(2)
        .map(|w| SlopeDiagnostic {
            lambda_lo: w[0].lambda,
            lambda_hi: w[1].lambda,
            ratio: (w[1].h_c - w[0].h_c) / (w[1].lambda - w[0].lambda),
            bound: if w[0].lambda > 0.0 {
                (1.0 - w[0].h_c) / w[0].lambda
            } else {
                f64::INFINITY
            },
        })
        .collect();
    Ok(CurveSweep { points, slopes })
}
