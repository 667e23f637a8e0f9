//! First-return law of the simple symmetric walk and its decomposition into
//! residue classes of `η/2 mod T`.
//!
//! `K(2n) = Cat(n-1)·2^{1-2n}` has an `x^{-3/2}` tail, so class masses and
//! class-filtered Laplace sums are taken from the generating function
//! `E[w^{η/2}] = 1 − √(1 − w)` through a roots-of-unity filter whenever a
//! truncated series would not reach double precision. Partial sums are used
//! when they converge geometrically fast.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `lim x^{3/2} K(x) = √(2/π)`.
pub const C_K: f64 = FRAC_2_SQRT_PI * FRAC_1_SQRT_2;

/// Default number of cached values `K(2), …, K(2·n_max)`.
pub const DEFAULT_N_MAX: usize = 200_000;

/// First cutoff tried by direct class summation; doubled while the tail bound is too loose.
pub const INITIAL_CUTOFF: usize = 4096;

/// Relative tail bound demanded from direct class summation.
const DIRECT_TAIL_REL: f64 = 1e-17;

/// Imaginary residue tolerated from the roots-of-unity filter.
const FILTER_IMAG_TOL: f64 = 1e-12;

fn check_even(x: u64) -> Result<u64> {
    if x % 2 == 1 {
        return Err(Error::InvalidArgument(format!("length {x} is odd")));
    }
    Ok(x / 2)
}

/// `K(x) = P(η = x)` for even `x ≥ 2`.
pub fn k_exact(x: u64) -> Result<f64> {
    let n = check_even(x)?;
    if n == 0 {
        return Err(Error::InvalidArgument("K(x) needs x >= 2".into()));
    }
    let mut k = 0.5;
    for m in 1..n {
        k *= (2 * m - 1) as f64 / (2 * (m + 1)) as f64;
    }
    Ok(k)
}

/// `P(η > x) = C(x, x/2)·2^{-x}` for even `x ≥ 0`.
pub fn survival(x: u64) -> Result<f64> {
    let n = check_even(x)?;
    let mut u = 1.0;
    for m in 0..n {
        u *= (2 * m + 1) as f64 / (2 * m + 2) as f64;
    }
    Ok(u)
}

fn roots_of_unity(t: usize) -> Vec<Complex64> {
    (0..t)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / t as f64))
        .collect()
}

/// Projects `f(w·ζ^j)`, `j = 0..T`, onto residue classes: `(1/T) Σ_j ζ^{-jγ} f_j`.
fn filter(values: &[Complex64], roots: &[Complex64]) -> Vec<f64> {
    let t = values.len();
    (0..t)
        .map(|gamma| {
            let sum: Complex64 = values
                .iter()
                .enumerate()
                .map(|(j, f)| roots[(j * (t - gamma)) % t] * f)
                .sum();
            let v = sum / t as f64;
            debug_assert!(v.im.abs() < FILTER_IMAG_TOL, "imaginary residue {}", v.im);
            v.re
        })
        .collect()
}

/// `Σ_{n ≡ γ} K(2n) w^n` for all classes, via `G(z) = z / (1 + √(1 − z))`.
fn filter_mass(t: usize, w: f64) -> Vec<f64> {
    let roots = roots_of_unity(t);
    let values: Vec<Complex64> = roots
        .iter()
        .map(|&r| {
            let z = r * w;
            z / (Complex64::new(1.0, 0.0) + (Complex64::new(1.0, 0.0) - z).sqrt())
        })
        .collect();
    filter(&values, &roots)
}

/// `Σ_{n ≡ γ} 2n K(2n) w^n` for all classes, via `2zG'(z) = z / √(1 − z)`.
fn filter_moment(t: usize, w: f64) -> Vec<f64> {
    if w >= 1.0 {
        return vec![f64::INFINITY; t];
    }
    let roots = roots_of_unity(t);
    let values: Vec<Complex64> = roots
        .iter()
        .map(|&r| {
            let z = r * w;
            z / (Complex64::new(1.0, 0.0) - z).sqrt()
        })
        .collect();
    filter(&values, &roots)
}

fn check_class(t: usize, gamma: usize) -> Result<()> {
    if t < 1 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    if gamma >= t {
        return Err(Error::InvalidArgument(format!("class {gamma} out of range for modulus {t}")));
    }
    Ok(())
}

/// `p_γ = P(η/2 ≡ γ mod T)`.
pub fn class_mass(t: usize, gamma: usize) -> Result<f64> {
    check_class(t, gamma)?;
    Ok(filter_mass(t, 1.0)[gamma])
}

/// `Σ_{x/2 ≡ γ} K(x) e^{-bx}` by the roots-of-unity filter alone.
pub fn laplace_class(t: usize, gamma: usize, b: f64) -> Result<f64> {
    check_class(t, gamma)?;
    if b.is_nan() || b < 0.0 {
        return Err(Error::InvalidArgument(format!("b must be >= 0, got {b}")));
    }
    Ok(filter_mass(t, (-2.0 * b).exp())[gamma])
}

/// Class-filtered Laplace sums at one value of the exponent, in log form.
#[derive(Debug, Clone)]
pub struct ClassSums {
    /// `ln Σ_{x/2≡γ} K(x) e^{-βx}`
    pub ln_mass: Vec<f64>,
    /// `ln Σ_{x/2≡γ} x K(x) e^{-βx}`; `+∞` at `β = 0`
    pub ln_moment: Vec<f64>,
}

/// The first-return law with a cache of `K` and its class masses mod `T`.
#[derive(Debug, Clone)]
pub struct ReturnLaw {
    modulus: usize,
    /// `k[n] = K(2n)`, `k[0] = 0`
    k: Vec<f64>,
    ln_k: Vec<f64>,
    class_mass: Vec<f64>,
}

impl ReturnLaw {
    pub fn new(modulus: usize) -> Self {
        Self::with_cache(modulus, DEFAULT_N_MAX)
    }

    pub fn with_cache(modulus: usize, n_max: usize) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        let n_max = n_max.max(2 * modulus).max(INITIAL_CUTOFF);
        let mut k = vec![0.0; n_max + 1];
        k[1] = 0.5;
        for n in 1..n_max {
            k[n + 1] = k[n] * (2 * n - 1) as f64 / (2 * (n + 1)) as f64;
        }
        let ln_k = k.iter().map(|v| v.ln()).collect();
        Self {
            modulus,
            class_mass: filter_mass(modulus, 1.0),
            k,
            ln_k,
        }
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    /// Largest `n` with `K(2n)` cached.
    pub fn n_max(&self) -> usize {
        self.k.len() - 1
    }

    /// Cached `K(x)`; `None` for odd `x`, `x = 0` or beyond the cache.
    #[inline]
    pub fn k(&self, x: u64) -> Option<f64> {
        if x == 0 || x % 2 == 1 {
            return None;
        }
        self.k.get((x / 2) as usize).copied()
    }

    /// `K(2n)` for `1 <= n <= n_max`.
    #[inline]
    pub fn k_half(&self, n: usize) -> f64 {
        self.k[n]
    }

    #[inline]
    pub fn class_of(&self, x: u64) -> usize {
        ((x / 2) % self.modulus as u64) as usize
    }

    pub fn class_mass(&self, gamma: usize) -> f64 {
        self.class_mass[gamma]
    }

    pub fn class_masses(&self) -> &[f64] {
        &self.class_mass
    }

    /// `K_{αβ}(x) = K(x)/p_γ` for `x/2 ≡ γ`.
    pub fn conditional_k(&self, gamma: usize, x: u64) -> Result<f64> {
        check_class(self.modulus, gamma)?;
        if x == 0 || x % 2 == 1 {
            return Err(Error::InvalidArgument(format!("length {x} must be even and positive")));
        }
        if self.class_of(x) != gamma {
            return Err(Error::ClassMismatch {
                x,
                class: gamma,
                modulus: self.modulus,
            });
        }
        let k = match self.k(x) {
            Some(k) => k,
            None => k_exact(x)?,
        };
        Ok(k / self.class_mass[gamma])
    }

    /// `Σ_{x/2≡γ} K(x) e^{-βx}` for one class.
    pub fn laplace_class(&self, gamma: usize, beta: f64) -> Result<f64> {
        check_class(self.modulus, gamma)?;
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::InvalidArgument(format!("b must be >= 0, got {beta}")));
        }
        Ok(self.class_sums(beta).ln_mass[gamma].exp())
    }

    /// Smallest `n >= 1` in class `γ`.
    fn first_in_class(&self, gamma: usize) -> usize {
        if gamma == 0 {
            self.modulus
        } else {
            gamma
        }
    }

    /// Cutoff (in units of `n = x/2`) at which the geometric tail bound of both
    /// the mass and the moment falls below `DIRECT_TAIL_REL` relative to the
    /// leading term of the sparsest class; `None` if the cache is too short.
    fn direct_cutoff(&self, beta: f64) -> Option<usize> {
        if beta <= 0.0 {
            return None;
        }
        let t = self.modulus;
        let one_minus_w = -(-2.0 * beta).exp_m1();
        let ln_first = self.ln_k[t] - 2.0 * beta * t as f64;
        let mut cut = INITIAL_CUTOFF / 2;
        while cut <= self.n_max() {
            let nc = cut as f64;
            let ln_tail = self.ln_k[cut] - 2.0 * beta * nc
                + (2.0 * (nc / one_minus_w + 1.0 / (one_minus_w * one_minus_w))).ln();
            if ln_tail - ln_first < DIRECT_TAIL_REL.ln() {
                return Some(cut);
            }
            cut *= 2;
        }
        None
    }

    /// Class-filtered Laplace sums of `K` and `x·K` at exponent `β >= 0`.
    pub fn class_sums(&self, beta: f64) -> ClassSums {
        let t = self.modulus;
        match self.direct_cutoff(beta) {
            Some(cut) => {
                let mut mass = vec![0.0; t];
                let mut moment = vec![0.0; t];
                let lead: Vec<f64> = (0..t)
                    .map(|g| {
                        let n0 = self.first_in_class(g);
                        self.ln_k[n0] - 2.0 * beta * n0 as f64
                    })
                    .collect();
                for n in 1..=cut {
                    let g = n % t;
                    let term = (self.ln_k[n] - 2.0 * beta * n as f64 - lead[g]).exp();
                    mass[g] += term;
                    moment[g] += 2.0 * n as f64 * term;
                }
                ClassSums {
                    ln_mass: mass.iter().zip(&lead).map(|(m, l)| m.ln() + l).collect(),
                    ln_moment: moment.iter().zip(&lead).map(|(m, l)| m.ln() + l).collect(),
                }
            }
            None => {
                let w = (-2.0 * beta).exp();
                ClassSums {
                    ln_mass: filter_mass(t, w).into_iter().map(f64::ln).collect(),
                    ln_moment: filter_moment(t, w).into_iter().map(f64::ln).collect(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Number of first-return paths of length `x`, by enumerating all `2^x` walks.
    fn enumerate_first_returns(x: u32) -> u64 {
        (0u64..1 << x)
            .filter(|bits| {
                let mut s = 0i32;
                for i in 0..x {
                    s += if bits >> i & 1 == 1 { 1 } else { -1 };
                    if s == 0 {
                        return i == x - 1;
                    }
                }
                false
            })
            .count() as u64
    }

    #[test]
    fn k_small_values() {
        assert_eq!(k_exact(2).unwrap(), 0.5);
        assert_eq!(k_exact(4).unwrap(), 0.125);
        assert_eq!(k_exact(8).unwrap(), 5.0 / 128.0);
        for x in [2u32, 4, 6, 8, 10, 12] {
            let paths = enumerate_first_returns(x) as f64;
            assert_eq!(k_exact(x as u64).unwrap(), paths / 2f64.powi(x as i32));
        }
        assert!(k_exact(3).is_err());
        assert!(k_exact(0).is_err());
        assert!(k_exact(1_000_000).unwrap() > 0.0);
    }

    #[test]
    fn survival_values() {
        assert_eq!(survival(0).unwrap(), 1.0);
        assert_eq!(survival(2).unwrap(), 0.5);
        assert!(survival(5).is_err());
        let law = ReturnLaw::new(2);
        let mut partial = 0.0;
        for n in 1..=5000 {
            partial += law.k_half(n);
        }
        assert!((survival(10_000).unwrap() - (1.0 - partial)).abs() < 1e-12);
    }

    #[test]
    fn cache_matches_pointwise() {
        let law = ReturnLaw::new(3);
        for x in [2u64, 10, 100, 1000, 20_000] {
            let a = law.k(x).unwrap();
            let b = k_exact(x).unwrap();
            assert!((a - b).abs() <= 1e-14 * b);
        }
        assert_eq!(law.k(3), None);
    }

    #[test]
    fn asymptotic_constant() {
        let law = ReturnLaw::new(2);
        let x = 20_000u64;
        let r = (x as f64).powf(1.5) * law.k(x).unwrap() / C_K;
        assert!((0.99..=1.01).contains(&r), "{r}");
        assert!((C_K - (2.0 / PI).sqrt()).abs() < 1e-16);
    }

    #[test]
    fn class_masses_t2() {
        let p1 = class_mass(2, 1).unwrap();
        assert!((p1 - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((class_mass(2, 0).unwrap() - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-15);
        assert!(class_mass(2, 2).is_err());
    }

    #[test]
    fn class_masses_normalized_and_positive() {
        for t in [2, 3, 5, 8, 17, 64] {
            let law = ReturnLaw::new(t);
            let total: f64 = law.class_masses().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(law.class_masses().iter().all(|&p| p > 0.0));
            assert!(law.class_mass(1) >= 0.5);
            // bistochastic: rows and columns of p_{β-α}
            for a in 0..t {
                let row: f64 = (0..t).map(|b| law.class_mass((b + t - a) % t)).sum();
                let col: f64 = (0..t).map(|b| law.class_mass((a + t - b) % t)).sum();
                assert!((row - 1.0).abs() < 1e-12 && (col - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn filter_against_partial_sums() {
        let cutoff = 10_000u64;
        let tail = survival(cutoff).unwrap();
        for t in [2usize, 3, 5] {
            let law = ReturnLaw::new(t);
            let mut partial = vec![0.0; t];
            for n in 1..=(cutoff / 2) as usize {
                partial[n % t] += law.k_half(n);
            }
            for g in 0..t {
                let diff = law.class_mass(g) - partial[g];
                assert!(diff >= -1e-14 && diff <= tail, "T={t} γ={g}: {diff} vs {tail}");
            }
        }
    }

    #[test]
    fn laplace_class_identities() {
        for g in 0..2 {
            assert_eq!(laplace_class(2, g, 0.0).unwrap(), class_mass(2, g).unwrap());
        }
        let total: f64 = (0..2).map(|g| laplace_class(2, g, 1.0).unwrap()).sum();
        let expected = 1.0 - (1.0 - (-2.0f64).exp()).sqrt();
        assert!((total - expected).abs() < 1e-15);
        assert!(laplace_class(2, 0, 50.0).unwrap().abs() < 1e-40);
        assert!(laplace_class(2, 0, -0.1).is_err());
    }

    #[test]
    fn conditional_k_values() {
        let law = ReturnLaw::new(2);
        let v = law.conditional_k(1, 2).unwrap();
        assert!((v - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(matches!(law.conditional_k(0, 2), Err(Error::ClassMismatch { .. })));
        // conditional normalization: head + tail bound
        let mut head = 0.0;
        for n in (2..=200_000).step_by(2) {
            head += law.conditional_k(0, 2 * n as u64).unwrap();
        }
        let tail = survival(400_000).unwrap() / law.class_mass(0);
        assert!(head <= 1.0 + 1e-12 && 1.0 - head <= tail);
    }

    #[test]
    fn hybrid_sums_agree_with_filter_and_series() {
        for t in [2usize, 3, 7] {
            let law = ReturnLaw::new(t);
            for beta in [0.0, 1e-6, 1e-4, 1e-3, 0.05, 0.5, 2.0] {
                let sums = law.class_sums(beta);
                let w = (-2.0 * beta).exp();
                let f = filter_mass(t, w);
                for g in 0..t {
                    let got = sums.ln_mass[g].exp();
                    assert!((got - f[g]).abs() <= 1e-13 * f[g].max(1e-3), "T={t} β={beta} γ={g}");
                }
                if beta > 0.0 {
                    // the filter cancels down to the total moment's scale
                    let m = filter_moment(t, w);
                    let scale: f64 = m.iter().sum();
                    for g in 0..t {
                        let got = sums.ln_moment[g].exp();
                        assert!((got - m[g]).abs() <= 1e-11 * scale, "T={t} β={beta} γ={g}: {got} {}", m[g]);
                    }
                } else {
                    assert!(sums.ln_moment.iter().all(|v| v.is_infinite()));
                }
            }
        }
    }

    #[test]
    fn large_exponent_keeps_relative_precision() {
        // class 0 mod 4 starts at K(8)·w^4; the filter alone would lose it in rounding
        let law = ReturnLaw::new(4);
        let beta = 20.0;
        let sums = law.class_sums(beta);
        let lead = (5.0f64 / 128.0).ln() - 8.0 * beta;
        assert!((sums.ln_mass[0] - lead).abs() < 1e-12);
        let lead1 = 0.5f64.ln() - 2.0 * beta;
        assert!((sums.ln_mass[1] - lead1).abs() < 1e-12);
    }
}
