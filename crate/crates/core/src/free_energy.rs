//! The excess free energy `b̃(λ, h)`: the root of `Z(b̃, λ, h) = 1`, or zero
//! when `Z(0, λ, h) <= 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Copolymer;
use crate::transfer::PhasePoint;

/// Bracket width at which bisection on `b` may stop.
pub const ROOT_TOL: f64 = 1e-10;
/// Residual `|Z(b̃) − 1|` aimed for after the bracket is tight.
pub const RESIDUAL_TARGET: f64 = 1e-12;
/// Largest admissible residual for a converged root.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergyResult {
    /// excess free energy `φ_ω = b̃`
    pub b_tilde: f64,
    /// full free energy `λh + b̃`
    pub f: f64,
    pub z_at_zero: f64,
    pub converged: bool,
    /// `|Z(b̃) − 1|`, or `0` when `b̃ = 0`
    pub residual: f64,
}

/// Solves `Z(b, λ, h) = 1` by bisection on `b`.
pub fn solve_b_tilde(model: &Copolymer, p: PhasePoint) -> Result<FreeEnergyResult> {
    let z0 = model.z(0.0, p)?;
    let delocalized = FreeEnergyResult {
        b_tilde: 0.0,
        f: p.lambda * p.h,
        z_at_zero: z0,
        converged: true,
        residual: 0.0,
    };
    // λ = 0 gives a bistochastic A; h >= 1 lies in D.
    if p.lambda == 0.0 || p.h >= 1.0 || z0 <= 1.0 {
        return Ok(delocalized);
    }
    let mut hi = 1.0;
    let mut z_hi = model.z(hi, p)?;
    while z_hi >= 1.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoRoot(format!("Z(b) >= 1 up to b = {hi}")));
        }
        z_hi = model.z(hi, p)?;
    }
    let (mut lo, mut z_lo) = (0.0, z0);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let z = model.z(mid, p)?;
        if z > 1.0 {
            lo = mid;
            z_lo = z;
        } else {
            hi = mid;
            z_hi = z;
        }
        if hi - lo < ROOT_TOL && (z_lo - 1.0).abs().min((z_hi - 1.0).abs()) <= RESIDUAL_TARGET {
            break;
        }
    }
    let (b, z) = if (z_lo - 1.0).abs() <= (z_hi - 1.0).abs() {
        (lo, z_lo)
    } else {
        (hi, z_hi)
    };
    let residual = (z - 1.0).abs();
    Ok(FreeEnergyResult {
        b_tilde: b,
        f: p.lambda * p.h + b,
        z_at_zero: z0,
        converged: residual <= RESIDUAL_TOL,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalCheck {
    /// `max_b q(b)` over the grid
    pub q_max: f64,
    pub argmax: f64,
    /// `(b, q(b))` for every grid point
    pub values: Vec<(f64, f64)>,
}

/// `q(b) = b + log Z(b)/f(b)` with `f(b) = Σ x μ_b(x)`.
pub fn variational_q(model: &Copolymer, p: PhasePoint, b: f64) -> Result<f64> {
    if b.is_nan() || b <= 0.0 {
        return Err(Error::InvalidArgument(format!("grid values must be positive, got {b}")));
    }
    Ok(b + model.z(b, p)?.ln() / model.mean_length(b, p)?)
}

/// Maximizes `q(b)` over a grid of positive `b`.
pub fn variational_check(model: &Copolymer, p: PhasePoint, b_grid: &[f64]) -> Result<VariationalCheck> {
    if b_grid.is_empty() {
        return Err(Error::InvalidArgument("empty b grid".into()));
    }
    let values = b_grid
        .iter()
        .map(|&b| Ok((b, variational_q(model, p, b)?)))
        .collect::<Result<Vec<_>>>()?;
    let (argmax, q_max) = values
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    Ok(VariationalCheck {
        q_max,
        argmax,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{diblock, parse_sequence};

    fn diblock4() -> Copolymer {
        Copolymer::new(parse_sequence("++--").unwrap())
    }

    fn pt(l: f64, h: f64) -> PhasePoint {
        PhasePoint::new(l, h).unwrap()
    }

    #[test]
    fn zero_coupling_is_delocalized() {
        let m = diblock4();
        for h in [0.0, 0.5, 2.0] {
            let r = solve_b_tilde(&m, pt(0.0, h)).unwrap();
            assert_eq!(r.b_tilde, 0.0);
            assert_eq!(r.f, 0.0);
            assert!((r.z_at_zero - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diblock_reference_values() {
        let m = diblock4();
        let r = solve_b_tilde(&m, pt(1.0, 0.0)).unwrap();
        assert!(r.converged);
        assert!((r.b_tilde - 0.35006114).abs() < 1e-7, "{}", r.b_tilde);
        assert!((m.z(r.b_tilde, pt(1.0, 0.0)).unwrap() - 1.0).abs() <= 1e-10);
        let r = solve_b_tilde(&m, pt(0.8, 0.2)).unwrap();
        assert!((r.b_tilde - 0.062974).abs() < 1e-5, "{}", r.b_tilde);
        assert!((r.f - 0.16 - r.b_tilde).abs() < 1e-15);
        let r = solve_b_tilde(&m, pt(0.5, 0.6)).unwrap();
        assert_eq!(r.b_tilde, 0.0);
        assert!(r.z_at_zero < 1.0);
    }

    #[test]
    fn large_asymmetry_is_delocalized() {
        let m = Copolymer::new(diblock(3).unwrap());
        for l in [0.1, 1.0, 5.0] {
            for h in [1.0, 1.5] {
                let r = solve_b_tilde(&m, pt(l, h)).unwrap();
                assert_eq!(r.b_tilde, 0.0);
                assert!(m.z(0.0, pt(l, h)).unwrap() < 1.0);
            }
        }
    }

    #[test]
    fn localized_iff_z0_above_one() {
        let m = Copolymer::new(parse_sequence("++-+--").unwrap());
        for l in [0.2, 0.6, 1.5] {
            for h in [0.0, 0.1, 0.3, 0.6, 0.9] {
                let r = solve_b_tilde(&m, pt(l, h)).unwrap();
                assert_eq!(r.b_tilde > 0.0, r.z_at_zero > 1.0, "({l},{h})");
                assert!(r.f >= l * h);
                if r.b_tilde > 0.0 {
                    assert!(r.residual <= RESIDUAL_TOL);
                }
            }
        }
    }

    #[test]
    fn variational_argmax_near_root() {
        let m = diblock4();
        let p = pt(1.0, 0.0);
        let b_t = solve_b_tilde(&m, p).unwrap().b_tilde;
        let grid: Vec<f64> = (1..=100).map(|i| 0.01 * i as f64).collect();
        let v = variational_check(&m, p, &grid).unwrap();
        assert!((v.argmax - b_t).abs() <= 0.01, "{} vs {b_t}", v.argmax);
        assert!(v.q_max <= b_t + 1e-12);
        assert!((variational_q(&m, p, b_t).unwrap() - b_t).abs() < 1e-10);
    }

    #[test]
    fn variational_negative_without_coupling() {
        let m = diblock4();
        let grid = [0.001, 0.01, 0.1, 1.0, 3.0];
        let v = variational_check(&m, pt(0.0, 0.0), &grid).unwrap();
        for (b, q) in v.values {
            let s = (-2.0f64 * b).exp();
            let z = 1.0 - (1.0 - s).sqrt();
            let f = s / (1.0 - s).sqrt() / z;
            assert!((q - (b + z.ln() / f)).abs() < 1e-10);
            assert!(q < 0.0);
        }
        assert!(variational_check(&m, pt(0.0, 0.0), &[]).is_err());
        assert!(variational_check(&m, pt(0.0, 0.0), &[0.0]).is_err());
    }
}
