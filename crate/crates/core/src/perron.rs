//! Perron–Frobenius data of small strictly positive matrices.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub const EIGEN_TOL: f64 = 1e-13;
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100_000;

/// Maximal eigenvalue with its normalized right/left eigenvectors.
#[derive(Debug, Clone, Serialize)]
pub struct EigenData {
    pub z: f64,
    /// right eigenvector, `Σ v = 1`
    pub v: Vec<f64>,
    /// left eigenvector, `Σ v_left = 1`
    pub v_left: Vec<f64>,
    /// stationary law of the `v`-tilted chain, `π_α ∝ v_left_α v_α`
    pub pi: Vec<f64>,
    pub iterations: usize,
}

fn normalize_l1(v: &mut DVector<f64>) -> f64 {
    let s = v.sum();
    *v /= s;
    s
}

/// Dominant direction of `A^{2^k}`: repeated squaring until the normalized
/// image of the uniform vector stops moving.
fn squaring_start(a: &DMatrix<f64>) -> (DVector<f64>, usize) {
    let n = a.nrows();
    let mut p = a.clone();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for k in 0..64 {
        let scale = p.max();
        p /= scale;
        let mut next = &p * DVector::from_element(n, 1.0);
        normalize_l1(&mut next);
        let moved = (&next - &v).abs().sum();
        v = next;
        if moved < 1e-15 && k > 0 {
            return (v, k);
        }
        p = &p * &p;
    }
    (v, 64)
}

/// One inverse-iteration step with shift just above `z`; `None` if the solve
/// breaks down or leaves the positive cone.
fn inverse_step(a: &DMatrix<f64>, v: &DVector<f64>, z: f64) -> Option<DVector<f64>> {
    let n = a.nrows();
    let shifted = a - DMatrix::identity(n, n) * (z * (1.0 + 1e-12));
    let mut y = shifted.lu().solve(v)?;
    let s = y.sum();
    if !s.is_finite() || s == 0.0 {
        return None;
    }
    y /= s;
    y.iter().all(|&x| x > 0.0 && x.is_finite()).then_some(y)
}

/// Squaring start, then shifted inverse iteration (plain power steps as a
/// fallback) until the eigenvalue and residual settle.
fn dominant_vector(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>, usize)> {
    let (mut v, mut iterations) = squaring_start(a);
    let mut z_prev = f64::NAN;
    loop {
        let mut av = a * &v;
        let z = normalize_l1(&mut av);
        let residual = (&av - &v).abs().sum() * z;
        iterations += 1;
        let rel_change = ((z - z_prev) / z).abs();
        if rel_change < EIGEN_TOL && residual < RESIDUAL_TOL * z {
            return Ok((z, v, iterations));
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NoConvergence(iterations));
        }
        z_prev = z;
        v = inverse_step(a, &v, z).unwrap_or(av);
    }
}

/// Perron–Frobenius eigenvalue and eigenvectors of a strictly positive matrix.
pub fn perron(a: &DMatrix<f64>) -> Result<EigenData> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidArgument("matrix must be square and nonempty".into()));
    }
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)];
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::NotPositive(i, j));
            }
        }
    }
    let (z, v, it_right) = dominant_vector(a)?;
    let (_, v_left, it_left) = dominant_vector(&a.transpose())?;
    let mut pi = v_left.component_mul(&v);
    normalize_l1(&mut pi);
    Ok(EigenData {
        z,
        v: v.iter().copied().collect(),
        v_left: v_left.iter().copied().collect(),
        pi: pi.iter().copied().collect(),
        iterations: it_right.max(it_left),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_circulant() {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.5, 0.5, 0.3]);
        let e = perron(&a).unwrap();
        assert!((e.z - 0.8).abs() < 1e-15);
        assert!(e.v.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn bistochastic_has_unit_eigenvalue() {
        let a = DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.3, 0.2, 0.5, 0.5, 0.3, 0.2]);
        let e = perron(&a).unwrap();
        assert!((e.z - 1.0).abs() < 1e-14);
        for x in e.v.iter().chain(&e.v_left).chain(&e.pi) {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eigen_equations_hold() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.1, 0.5, 0.3, 4.0, 2.0, 0.01, 0.7]);
        let e = perron(&a).unwrap();
        let v = DVector::from_vec(e.v.clone());
        let l = DVector::from_vec(e.v_left.clone());
        assert!(((&a * &v) - &v * e.z).abs().max() < 1e-12 * e.z);
        assert!(((a.transpose() * &l) - &l * e.z).abs().max() < 1e-12 * e.z);
        // agrees with a dense eigen-solver
        let dense = a.clone().complex_eigenvalues();
        let rho = dense.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!((rho - e.z).abs() < 1e-12 * rho);
    }

    #[test]
    fn nearly_periodic_matrix_converges() {
        // eigenvalues 1 ± 1e-9: plain power iteration would stall
        let eps = 5e-10;
        let a = DMatrix::from_row_slice(2, 2, &[eps, 1.0, 1.0, eps]);
        let e = perron(&a).unwrap();
        assert!((e.z - (1.0 + eps)).abs() < 1e-15);
        let b = DMatrix::from_row_slice(2, 2, &[eps, 1.0, 2.0, 3.0 * eps]);
        let e = perron(&b).unwrap();
        let tr = 4.0 * eps;
        let det = 3.0 * eps * eps - 2.0;
        let rho = tr / 2.0 + (tr * tr / 4.0 - det).sqrt();
        assert!((e.z - rho).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(perron(&a).unwrap_err(), Error::NotPositive(0, 1));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 1.0, 1.0]);
        assert!(perron(&a).is_err());
    }
}
