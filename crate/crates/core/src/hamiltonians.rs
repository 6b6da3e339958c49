//! Diagonal cost Hamiltonians.
//!
//! All three variants are diagonal in the standard basis, so each is fully
//! described by its energy function `z ↦ ⟨z|H|z⟩` and the cost of a state only
//! depends on the diagonal of `ρ̃`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qmath::{Bitstring, DensityMatrix};

/// Minimum separation between consecutive low levels.
pub const LEVEL_GAP: f64 = 1e-9;

/// A Hamiltonian diagonal in the standard basis.
pub trait DiagonalHamiltonian {
    fn n_qubits(&self) -> usize;

    /// Energy of basis state `index` (MSB-first).
    fn energy_at(&self, index: usize) -> f64;

    fn energy(&self, z: Bitstring) -> Result<f64> {
        z.ensure_len(self.n_qubits())?;
        Ok(self.energy_at(z.index()))
    }

    /// All `2^n` energies in basis order.
    fn energies(&self) -> Vec<f64> {
        (0..1usize << self.n_qubits()).map(|i| self.energy_at(i)).collect()
    }
}

/// Fixed-local Hamiltonian `H_L = 1 - Σ_j r_j Z_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalWeights {
    r: Vec<f64>,
}

impl LocalWeights {
    /// Validates positivity, `Σ r ≤ 1` and non-degeneracy of the `m` lowest levels.
    pub fn new(r: Vec<f64>, m: usize) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidHamiltonian("no local weights".into()));
        }
        if let Some(bad) = r.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidHamiltonian(format!("weight {bad} is not positive")));
        }
        let total: f64 = r.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidHamiltonian(format!(
                "weights sum to {total}, energies would go negative"
            )));
        }
        let h = Self { r };
        lowest_levels(&h, m)?;
        Ok(h)
    }

    /// Arithmetic progression `r_j = r1 + (j-1)·delta`.
    pub fn arithmetic(n: usize, r1: f64, delta: f64, m: usize) -> Result<Self> {
        Self::new((0..n).map(|j| r1 + j as f64 * delta).collect(), m)
    }

    pub fn weights(&self) -> &[f64] {
        &self.r
    }
}

impl DiagonalHamiltonian for LocalWeights {
    fn n_qubits(&self) -> usize {
        self.r.len()
    }

    fn energy_at(&self, index: usize) -> f64 {
        let n = self.r.len();
        let field: f64 = self
            .r
            .iter()
            .enumerate()
            .map(|(j, &rj)| if (index >> (n - 1 - j)) & 1 == 0 { rj } else { -rj })
            .sum();
        1.0 - field
    }
}

/// Default local weights: `δ = r1/(2n)` and `r1` chosen so that `Σ r = 1/2`.
pub fn default_local_weights(n: usize, m: usize) -> Result<LocalWeights> {
    if n == 0 {
        return Err(Error::InvalidArgument("zero qubits".into()));
    }
    if m == 0 || m > 1usize << n {
        return Err(Error::InvalidArgument(format!("m = {m} out of range for {n} qubits")));
    }
    let nf = n as f64;
    // Σ_j (r1 + (j-1) r1/(2n)) = r1 (n + (n-1)/4)
    let r1 = 0.5 / (nf + (nf - 1.0) / 4.0);
    LocalWeights::arithmetic(n, r1, r1 / (2.0 * nf), m)
}

/// Fixed-global Hamiltonian `H_G = 1 - Σ_i q_i |z_i⟩⟨z_i|`.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalPart {
    n: usize,
    pairs: Vec<(Bitstring, f64)>,
}

impl GlobalPart {
    pub fn new(n: usize, pairs: Vec<(Bitstring, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidHamiltonian(
                "global part needs at least one projector".into(),
            ));
        }
        for (i, (z, q)) in pairs.iter().enumerate() {
            z.ensure_len(n)?;
            if !(*q > 0.0 && *q <= 1.0) {
                return Err(Error::InvalidHamiltonian(format!(
                    "weight q_{} = {q} outside (0, 1]",
                    i + 1
                )));
            }
            if i > 0 && *q >= pairs[i - 1].1 {
                return Err(Error::InvalidHamiltonian("weights q_i must strictly decrease".into()));
            }
            if pairs[..i].iter().any(|(other, _)| other == z) {
                return Err(Error::InvalidHamiltonian(format!("bitstring {z} repeated")));
            }
        }
        Ok(Self { n, pairs })
    }

    /// Projectors on the `m` lowest levels of `local`, `q_i = 1 - E^L_i`.
    pub fn from_local(local: &LocalWeights, m: usize) -> Result<Self> {
        let levels = lowest_levels(local, m)?;
        let n = local.n_qubits();
        Self::new(n, levels.into_iter().map(|(e, z)| (z, 1.0 - e)).collect())
    }

    /// Weights from the `m = bitstrings.len()` lowest levels of `local`,
    /// attached to measured bitstrings.
    pub fn with_bitstrings(local: &LocalWeights, bitstrings: &[Bitstring]) -> Result<Self> {
        let levels = lowest_levels(local, bitstrings.len())?;
        let n = local.n_qubits();
        Self::new(
            n,
            bitstrings.iter().zip(levels).map(|(&z, (e, _))| (z, 1.0 - e)).collect(),
        )
    }

    pub fn pairs(&self) -> &[(Bitstring, f64)] {
        &self.pairs
    }

    pub fn bitstrings(&self) -> Vec<Bitstring> {
        self.pairs.iter().map(|p| p.0).collect()
    }
}

impl DiagonalHamiltonian for GlobalPart {
    fn n_qubits(&self) -> usize {
        self.n
    }

    fn energy_at(&self, index: usize) -> f64 {
        self.pairs
            .iter()
            .find(|(z, _)| z.index() == index)
            .map_or(1.0, |(_, q)| 1.0 - q)
    }

    fn energies(&self) -> Vec<f64> {
        let mut e = vec![1.0; 1 << self.n];
        for (z, q) in &self.pairs {
            e[z.index()] = 1.0 - q;
        }
        e
    }
}

/// `H(t) = (1 - f) H_L + f H_G(t)` at schedule weight `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveHamiltonian {
    local: LocalWeights,
    global: GlobalPart,
    f: f64,
}

impl AdaptiveHamiltonian {
    pub fn new(local: LocalWeights, global: GlobalPart, f: f64) -> Result<Self> {
        if local.n_qubits() != global.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: local.n_qubits(),
                actual: global.n_qubits(),
            });
        }
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!("schedule weight {f} outside [0, 1]")));
        }
        Ok(Self { local, global, f })
    }

    pub fn local(&self) -> &LocalWeights {
        &self.local
    }

    pub fn global(&self) -> &GlobalPart {
        &self.global
    }

    pub fn weight(&self) -> f64 {
        self.f
    }
}

impl DiagonalHamiltonian for AdaptiveHamiltonian {
    fn n_qubits(&self) -> usize {
        self.local.n_qubits()
    }

    fn energy_at(&self, index: usize) -> f64 {
        if self.f == 0.0 {
            return self.local.energy_at(index);
        }
        if self.f == 1.0 {
            return self.global.energy_at(index);
        }
        (1.0 - self.f) * self.local.energy_at(index) + self.f * self.global.energy_at(index)
    }

    fn energies(&self) -> Vec<f64> {
        let (el, eg) = (self.local.energies(), self.global.energies());
        match self.f {
            0.0 => el,
            1.0 => eg,
            f => el.iter().zip(&eg).map(|(l, g)| (1.0 - f) * l + f * g).collect(),
        }
    }
}

/// Any of the three cost Hamiltonians.
#[derive(Clone, Debug, PartialEq)]
pub enum Hamiltonian {
    Local(LocalWeights),
    Global(GlobalPart),
    Adaptive(AdaptiveHamiltonian),
}

impl DiagonalHamiltonian for Hamiltonian {
    fn n_qubits(&self) -> usize {
        match self {
            Hamiltonian::Local(h) => h.n_qubits(),
            Hamiltonian::Global(h) => h.n_qubits(),
            Hamiltonian::Adaptive(h) => h.n_qubits(),
        }
    }

    fn energy_at(&self, index: usize) -> f64 {
        match self {
            Hamiltonian::Local(h) => h.energy_at(index),
            Hamiltonian::Global(h) => h.energy_at(index),
            Hamiltonian::Adaptive(h) => h.energy_at(index),
        }
    }

    fn energies(&self) -> Vec<f64> {
        match self {
            Hamiltonian::Local(h) => h.energies(),
            Hamiltonian::Global(h) => h.energies(),
            Hamiltonian::Adaptive(h) => h.energies(),
        }
    }
}

/// Energies in ascending order with their bitstrings; ties by basis index.
pub fn sorted_levels<H: DiagonalHamiltonian + ?Sized>(h: &H) -> Vec<(f64, Bitstring)> {
    let n = h.n_qubits();
    let mut levels: Vec<(f64, Bitstring)> = h
        .energies()
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, Bitstring::from_index_unchecked(n, i)))
        .collect();
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    levels
}

/// The `m` smallest energies, ascending, required to be pairwise distinct.
pub fn lowest_levels<H: DiagonalHamiltonian + ?Sized>(h: &H, m: usize) -> Result<Vec<(f64, Bitstring)>> {
    let dim = 1usize << h.n_qubits();
    if m == 0 || m > dim {
        return Err(Error::InvalidArgument(format!("m = {m} out of range 1..={dim}")));
    }
    let mut levels = sorted_levels(h);
    levels.truncate(m);
    if let Some(i) = (1..m).find(|&i| levels[i].0 - levels[i - 1].0 <= LEVEL_GAP) {
        return Err(Error::DegenerateLevels(i, i + 1));
    }
    Ok(levels)
}

/// `Σ_z E(z) ⟨z|ρ̃|z⟩`.
pub fn cost_from_diagonal(energies: &[f64], diagonal: &[f64]) -> f64 {
    energies.iter().zip(diagonal).map(|(e, p)| e * p).sum()
}

/// `Tr[H ρ̃]`, reading only the diagonal of `ρ̃`.
pub fn cost_exact<H: DiagonalHamiltonian + ?Sized>(h: &H, rho_tilde: &DensityMatrix) -> Result<f64> {
    check_dims(h, rho_tilde)?;
    Ok(cost_from_diagonal(&h.energies(), &rho_tilde.diagonal()))
}

/// Empirical cost from `shots` standard-basis samples of `ρ̃`.
pub fn cost_sampled<H, R>(h: &H, rho_tilde: &DensityMatrix, shots: usize, rng: &mut R) -> Result<f64>
where
    H: DiagonalHamiltonian + ?Sized,
    R: Rng + ?Sized,
{
    check_dims(h, rho_tilde)?;
    let counts = sample_counts(&rho_tilde.diagonal(), shots, rng)?;
    Ok(cost_from_counts(&h.energies(), &counts, shots))
}

pub(crate) fn cost_from_counts(energies: &[f64], counts: &[usize], shots: usize) -> f64 {
    energies.iter().zip(counts).map(|(e, &c)| e * c as f64).sum::<f64>() / shots as f64
}

/// Multinomial outcome counts over a probability vector (tiny negative
/// entries from round-off are clamped to zero).
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: usize, rng: &mut R) -> Result<Vec<usize>> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0)))
        .map_err(|e| Error::InvalidState(format!("outcome distribution: {e}")))?;
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..shots {
        counts[dist.sample(rng)] += 1;
    }
    Ok(counts)
}

fn check_dims<H: DiagonalHamiltonian + ?Sized>(h: &H, rho: &DensityMatrix) -> Result<()> {
    if h.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: h.n_qubits(),
            actual: rho.n_qubits(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn energy_examples() {
        let hl = LocalWeights::new(vec![0.1, 0.1], 1).unwrap();
        assert!((hl.energy(z("00")).unwrap() - 0.8).abs() < 1e-15);
        let hg = GlobalPart::new(2, vec![(z("00"), 0.9)]).unwrap();
        assert!((hg.energy(z("00")).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(hg.energy(z("11")).unwrap(), 1.0);
        let ha = AdaptiveHamiltonian::new(hl, hg, 0.5).unwrap();
        assert!((ha.energy(z("00")).unwrap() - 0.45).abs() < 1e-15);
        assert!(matches!(ha.energy(z("000")), Err(Error::BitstringLength { .. })));
    }

    #[test]
    fn default_weights_single_qubit() {
        let h = default_local_weights(1, 1).unwrap();
        assert_eq!(h.weights(), &[0.5]);
        assert_eq!(h.energies(), vec![0.5, 1.5]);
    }

    #[test]
    fn default_weights_sum_and_progression() {
        for n in 1..=8 {
            let h = default_local_weights(n, 1).unwrap();
            let r = h.weights();
            assert!((r.iter().sum::<f64>() - 0.5).abs() < 1e-14);
            let d = r[0] / (2.0 * n as f64);
            for j in 1..n {
                assert!((r[j] - r[j - 1] - d).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn default_weights_n4_m6_distinct() {
        let h = default_local_weights(4, 6).unwrap();
        let mut e = h.energies();
        e.sort_by(f64::total_cmp);
        for i in 1..6 {
            assert!(e[i] - e[i - 1] > LEVEL_GAP);
        }
        assert!(e.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn arithmetic_two_qubits() {
        let h = LocalWeights::arithmetic(2, 0.3, 0.05, 2).unwrap();
        let e = h.energies();
        let expected = [0.35, 1.05, 0.95, 1.65];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        let levels = lowest_levels(&h, 3).unwrap();
        assert_eq!(levels[0].1, z("00"));
        assert_eq!(levels[1].1, z("10"));
        assert_eq!(levels[2].1, z("01"));
        assert!((levels[1].0 - 0.95).abs() < 1e-14);
    }

    #[test]
    fn degenerate_local_weights_rejected() {
        // r1 = r2 makes 01 and 10 degenerate.
        assert!(matches!(
            LocalWeights::new(vec![0.2, 0.2], 3),
            Err(Error::DegenerateLevels(2, 3))
        ));
        assert!(LocalWeights::new(vec![0.2, 0.2], 1).is_ok());
        assert!(LocalWeights::new(vec![0.6, 0.6], 1).is_err());
        assert!(LocalWeights::new(vec![0.6, -0.1], 1).is_err());
    }

    #[test]
    fn global_levels_follow_local() {
        let hl = default_local_weights(4, 6).unwrap();
        let hg = GlobalPart::from_local(&hl, 6).unwrap();
        let gl = lowest_levels(&hg, 6).unwrap();
        let ll = lowest_levels(&hl, 6).unwrap();
        for (g, l) in gl.iter().zip(&ll) {
            assert!((g.0 - l.0).abs() < 1e-14);
            assert_eq!(g.1, l.1);
        }
        // m non-degenerate levels and one (2^n - m)-fold level at 1.
        let e = hg.energies();
        assert_eq!(e.iter().filter(|&&x| x == 1.0).count(), 16 - 6);
    }

    #[test]
    fn global_validation() {
        assert!(GlobalPart::new(2, vec![(z("00"), 0.5), (z("00"), 0.4)]).is_err());
        assert!(GlobalPart::new(2, vec![(z("00"), 0.5), (z("01"), 0.6)]).is_err());
        assert!(GlobalPart::new(2, vec![(z("00"), 0.0)]).is_err());
        assert!(GlobalPart::new(2, vec![(z("000"), 0.5)]).is_err());
    }

    #[test]
    fn global_lowest_levels() {
        let hg = GlobalPart::new(3, vec![(z("101"), 0.7), (z("010"), 0.3)]).unwrap();
        let levels = lowest_levels(&hg, 2).unwrap();
        assert_eq!(levels, vec![(1.0 - 0.7, z("101")), (1.0 - 0.3, z("010"))]);
    }

    #[test]
    fn adaptive_endpoints() {
        let hl = default_local_weights(3, 2).unwrap();
        let hg = GlobalPart::new(3, vec![(z("110"), 0.6), (z("001"), 0.2)]).unwrap();
        let h0 = AdaptiveHamiltonian::new(hl.clone(), hg.clone(), 0.0).unwrap();
        let h1 = AdaptiveHamiltonian::new(hl.clone(), hg.clone(), 1.0).unwrap();
        assert_eq!(h0.energies(), hl.energies());
        assert_eq!(h1.energies(), hg.energies());
        assert_eq!(lowest_levels(&h1, 2).unwrap(), lowest_levels(&hg, 2).unwrap());
        for i in 0..8 {
            assert_eq!(h0.energy_at(i), hl.energy_at(i));
            assert_eq!(h1.energy_at(i), hg.energy_at(i));
        }
    }

    #[test]
    fn exact_cost_examples() {
        let hl = default_local_weights(3, 1).unwrap();
        let rho = DensityMatrix::basis_state(3, 0);
        assert!((cost_exact(&hl, &rho).unwrap() - hl.energy_at(0)).abs() < 1e-15);

        let hg = GlobalPart::new(3, vec![(z("110"), 0.6), (z("001"), 0.2)]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((cost_exact(&hg, &mixed).unwrap() - (1.0 - 0.8 / 8.0)).abs() < 1e-15);
        assert!(cost_exact(&hg, &DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn sampled_cost_on_basis_state_is_exact() {
        let hl = default_local_weights(2, 1).unwrap();
        let rho = DensityMatrix::basis_state(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for shots in [1, 7, 1000] {
            assert_eq!(cost_sampled(&hl, &rho, shots, &mut rng).unwrap(), hl.energy_at(2));
        }
        assert!(matches!(cost_sampled(&hl, &rho, 0, &mut rng), Err(Error::InvalidShots)));
    }

    #[test]
    fn sampled_cost_is_reproducible() {
        let hl = default_local_weights(2, 1).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let a = cost_sampled(&hl, &rho, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = cost_sampled(&hl, &rho, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
