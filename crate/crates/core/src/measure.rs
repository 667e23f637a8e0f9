//! Probability measures on `(class, class, even length)` triples.

use std::collections::BTreeMap;

use serde::Serialize;

pub const MEASURE_TOL: f64 = 1e-10;

/// Key of one atom: `(α, β, x)`.
pub type Triple = (usize, usize, u64);

/// A measure on `S × S × 2N` with finite head support up to `cutoff` and,
/// per `(α, β)`, an unresolved tail carrying mass and first moment.
#[derive(Debug, Clone, Serialize)]
pub struct ExcursionMeasure {
    modulus: usize,
    cutoff: u64,
    head: BTreeMap<Triple, f64>,
    /// row-major `T × T`
    tail_mass: Vec<f64>,
    /// `Σ_{x > cutoff} x μ(α, β, x)`, row-major `T × T`
    tail_moment: Vec<f64>,
}

impl ExcursionMeasure {
    pub fn from_parts(
        modulus: usize,
        cutoff: u64,
        head: BTreeMap<Triple, f64>,
        tail_mass: Vec<f64>,
        tail_moment: Vec<f64>,
    ) -> Self {
        assert_eq!(tail_mass.len(), modulus * modulus);
        assert_eq!(tail_moment.len(), modulus * modulus);
        Self {
            modulus,
            cutoff,
            head,
            tail_mass,
            tail_moment,
        }
    }

    /// Head-only measure; the cutoff is the largest length present.
    pub fn from_atoms(modulus: usize, atoms: impl IntoIterator<Item = (Triple, f64)>) -> Self {
        let mut head = BTreeMap::new();
        for (k, m) in atoms {
            *head.entry(k).or_insert(0.0) += m;
        }
        let cutoff = head.keys().map(|k: &Triple| k.2).max().unwrap_or(0);
        Self::from_parts(
            modulus,
            cutoff,
            head,
            vec![0.0; modulus * modulus],
            vec![0.0; modulus * modulus],
        )
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Triple, &f64)> {
        self.head.iter()
    }

    pub fn mass_of(&self, alpha: usize, beta: usize, x: u64) -> f64 {
        self.head.get(&(alpha, beta, x)).copied().unwrap_or(0.0)
    }

    pub fn head_mass(&self) -> f64 {
        self.head.values().sum()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass.iter().sum()
    }

    pub fn tail_mass_of(&self, alpha: usize, beta: usize) -> f64 {
        self.tail_mass[alpha * self.modulus + beta]
    }

    pub fn total_mass(&self) -> f64 {
        self.head_mass() + self.tail_mass()
    }

    /// `Σ x μ(x)` including tails; `+∞` if a tail has infinite moment.
    pub fn mean_length(&self) -> f64 {
        let head: f64 = self.head.iter().map(|(k, m)| k.2 as f64 * m).sum();
        head + self.tail_moment.iter().sum::<f64>()
    }

    /// Mass of each `(α, β)` pair, head plus tail, row-major.
    pub fn pair_masses(&self) -> Vec<f64> {
        let t = self.modulus;
        let mut out = self.tail_mass.clone();
        for (&(a, b, _), m) in &self.head {
            out[a * t + b] += m;
        }
        out
    }

    /// First-class marginal `μ_1`.
    pub fn first_marginal(&self) -> Vec<f64> {
        let t = self.modulus;
        let pairs = self.pair_masses();
        (0..t).map(|a| (0..t).map(|b| pairs[a * t + b]).sum()).collect()
    }

    /// Second-class marginal `μ_2`.
    pub fn second_marginal(&self) -> Vec<f64> {
        let t = self.modulus;
        let pairs = self.pair_masses();
        (0..t).map(|b| (0..t).map(|a| pairs[a * t + b]).sum()).collect()
    }

    /// Every head atom sits on `x/2 ≡ β − α mod T` with `x` even and positive.
    pub fn support_ok(&self) -> bool {
        let t = self.modulus as u64;
        self.head.iter().all(|(&(a, b, x), &m)| {
            m == 0.0 || (x > 0 && x % 2 == 0 && (x / 2) % t == (b as u64 + t - a as u64) % t)
        })
    }

    /// Membership in the constraint set: support condition and `μ_1 = μ_2`.
    pub fn in_constraint_set(&self, tol: f64) -> bool {
        self.support_ok()
            && self
                .first_marginal()
                .iter()
                .zip(self.second_marginal())
                .all(|(a, b)| (a - b).abs() <= tol)
            && (self.total_mass() - 1.0).abs() <= tol
    }

    /// Drops the tails and renormalizes the head. Returns the measure and the
    /// mass that was removed.
    pub fn truncated(&self) -> (ExcursionMeasure, f64) {
        let head_mass = self.head_mass();
        let removed = self.tail_mass();
        let head = self.head.iter().map(|(k, m)| (*k, m / head_mass)).collect();
        let zeros = vec![0.0; self.modulus * self.modulus];
        (
            Self::from_parts(self.modulus, self.cutoff, head, zeros.clone(), zeros),
            removed,
        )
    }

    /// Head restricted to `x <= max_len`, renormalized.
    pub fn restricted(&self, max_len: u64) -> ExcursionMeasure {
        let kept: Vec<_> = self
            .head
            .iter()
            .filter(|(k, _)| k.2 <= max_len)
            .map(|(k, m)| (*k, *m))
            .collect();
        let total: f64 = kept.iter().map(|(_, m)| m).sum();
        Self::from_atoms(self.modulus, kept.into_iter().map(|(k, m)| (k, m / total)))
    }

    /// Total-variation distance between the heads of two measures.
    pub fn tv_distance(&self, other: &ExcursionMeasure) -> f64 {
        let mut keys: Vec<&Triple> = self.head.keys().chain(other.head.keys()).collect();
        keys.sort();
        keys.dedup();
        0.5 * keys
            .into_iter()
            .map(|k| (self.mass_of(k.0, k.1, k.2) - other.mass_of(k.0, k.1, k.2)).abs())
            .sum::<f64>()
    }

    /// Mixture `(1 − ε)·self + ε·other` of two head-only measures.
    pub fn mix(&self, other: &ExcursionMeasure, eps: f64) -> ExcursionMeasure {
        assert_eq!(self.modulus, other.modulus);
        let atoms = self
            .head
            .iter()
            .map(|(k, m)| (*k, (1.0 - eps) * m))
            .chain(other.head.iter().map(|(k, m)| (*k, eps * m)));
        Self::from_atoms(self.modulus, atoms.collect::<Vec<_>>())
    }
}
