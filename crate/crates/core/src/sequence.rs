//! Periodic charge sequences and the excursion-charge matrix.
//!
//! A sequence is stored as one minimal period `ω_1 .. ω_{2T}` (1-indexed in
//! the formulas below, 0-indexed in the vector). The charge an excursion
//! `2a -> 2b` picks up only depends on `a, b mod T`, which gives the
//! `T × T` matrix `ξ`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// A centered, nontrivial periodic `±1` sequence reduced to its minimal even period.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicSequence {
    charges: Vec<i8>,
    period: usize,
}

impl PeriodicSequence {
    /// Builds a sequence from one (or several) full periods of charges.
    pub fn from_charges(charges: &[i8]) -> Result<Self> {
        if charges.is_empty() {
            return Err(Error::Empty);
        }
        if charges.iter().any(|&c| c != 1 && c != -1) {
            return Err(Error::InvalidArgument("charges must be +1 or -1".into()));
        }
        if charges.len() % 2 == 1 {
            return Err(Error::OddLength(charges.len()));
        }
        let sum: i64 = charges.iter().map(|&c| c as i64).sum();
        if sum != 0 {
            return Err(Error::NotCentered(sum));
        }
        let len = charges.len();
        let minimal = (2..=len)
            .step_by(2)
            .filter(|d| len.is_multiple_of(*d))
            .find(|&d| (d..len).all(|i| charges[i] == charges[i - d]))
            .unwrap_or(len);
        let reduced = charges[..minimal].to_vec();
        if reduced.chunks(2).all(|pair| pair[0] * pair[1] == -1) {
            return Err(Error::Trivial);
        }
        Ok(Self {
            period: minimal / 2,
            charges: reduced,
        })
    }

    /// `T_ω`: half the length of the minimal period.
    pub fn period(&self) -> usize {
        self.period
    }

    /// One period of charges, `ω_1 .. ω_{2T}`.
    pub fn charges(&self) -> &[i8] {
        &self.charges
    }

    /// Charge of monomer `x` (1-indexed, any `x >= 1`).
    #[inline]
    pub fn charge(&self, x: usize) -> i8 {
        debug_assert!(x >= 1);
        self.charges[(x - 1) % self.charges.len()]
    }

    pub fn render(&self) -> String {
        self.charges
            .iter()
            .map(|&c| if c > 0 { '+' } else { '-' })
            .collect()
    }

    pub fn xi_matrix(&self) -> XiMatrix {
        XiMatrix::new(self)
    }
}

impl fmt::Display for PeriodicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for PeriodicSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_sequence(s)
    }
}

/// Parses a string of `+`/`-` characters (surrounding whitespace ignored).
pub fn parse_sequence(tokens: &str) -> Result<PeriodicSequence> {
    let trimmed = tokens.trim();
    if trimmed.is_empty() {
        return Err(Error::Empty);
    }
    let charges = trimmed
        .chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            other => Err(Error::InvalidChar(other)),
        })
        .collect::<Result<Vec<i8>>>()?;
    PeriodicSequence::from_charges(&charges)
}

/// `T` plus charges followed by `T` minus charges.
pub fn diblock(t: usize) -> Result<PeriodicSequence> {
    if t < 2 {
        return Err(Error::InvalidArgument(format!("diblock needs T >= 2, got {t}")));
    }
    let mut charges = vec![1i8; t];
    charges.extend(std::iter::repeat_n(-1, t));
    PeriodicSequence::from_charges(&charges)
}

/// The alternating pattern `+-+-...` over `2k` sites with its first `-+`
/// (sites 2, 3) switched to `+-`.
pub fn switched_alternating(k: usize) -> Result<PeriodicSequence> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "switched alternating sequence needs k >= 2, got {k}"
        )));
    }
    let mut charges: Vec<i8> = (0..2 * k).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    charges.swap(1, 2);
    PeriodicSequence::from_charges(&charges)
}

/// Excursion-charge matrix `ξ_{αβ} = c_β − c_α`, with `c_γ` the charge of the
/// first `2γ` monomers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XiMatrix {
    offsets: Vec<i64>,
    xi_star: i64,
}

impl XiMatrix {
    fn new(seq: &PeriodicSequence) -> Self {
        let t = seq.period();
        let mut offsets = Vec::with_capacity(t);
        let mut acc = 0i64;
        for g in 0..t {
            offsets.push(acc);
            acc += (seq.charges[2 * g] + seq.charges[2 * g + 1]) as i64;
        }
        let max = offsets.iter().copied().max().unwrap_or(0);
        let min = offsets.iter().copied().min().unwrap_or(0);
        Self {
            offsets,
            xi_star: max - min,
        }
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    #[inline]
    pub fn get(&self, alpha: usize, beta: usize) -> i64 {
        self.offsets[beta] - self.offsets[alpha]
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn xi_star(&self) -> i64 {
        self.xi_star
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.dim())
            .map(|a| (0..self.dim()).map(|b| self.get(a, b)).collect())
            .collect()
    }
}
