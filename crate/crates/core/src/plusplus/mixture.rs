//! Virtual mixture-arms.
//!
//! After iteration `j`, the empirical play frequencies `p_j` over the slots of
//! that iteration (the `K` real arms followed by virtual arms `1..j`) become a
//! new arm. Pulling it draws a slot from `p_j`; a virtual slot is chased into
//! the earlier mixture it names until a real arm comes out.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VirtualMixtureArm {
    iteration: usize,
    counts: Vec<u64>,
    frequencies: Vec<f64>,
    length: u64,
    #[serde(skip)]
    cumulative: Vec<u64>,
}

/// Turns the per-slot play counts of iteration `iteration` into its mixture-arm.
pub fn finalize_mixture_arm(counts: Vec<u64>, length: u64, iteration: usize) -> Result<VirtualMixtureArm> {
    if iteration == 0 {
        return Err(Error::invalid("iterations are numbered from 1"));
    }
    let total: u64 = counts.iter().sum();
    if total != length || length == 0 {
        return Err(Error::invalid(format!(
            "slot counts sum to {total}, expected iteration length {length}"
        )));
    }
    let frequencies = counts.iter().map(|&c| c as f64 / length as f64).collect();
    let cumulative = counts
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    Ok(VirtualMixtureArm {
        iteration,
        counts,
        frequencies,
        length,
        cumulative,
    })
}

impl VirtualMixtureArm {
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Denominator of the frequencies (steps executed in the iteration).
    pub fn length(&self) -> u64 {
        self.length
    }

    fn sample_slot<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random_range(0..self.length);
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// All mixture-arms finalized so far, in iteration order.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MixtureRegistry {
    real_arms: usize,
    arms: Vec<VirtualMixtureArm>,
}

impl MixtureRegistry {
    pub fn new(real_arms: usize) -> Self {
        Self {
            real_arms,
            arms: Vec::new(),
        }
    }

    pub fn real_arms(&self) -> usize {
        self.real_arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[VirtualMixtureArm] {
        &self.arms
    }

    /// Mixture-arm of (1-based) iteration `j`.
    pub fn get(&self, j: usize) -> Option<&VirtualMixtureArm> {
        j.checked_sub(1).and_then(|i| self.arms.get(i))
    }

    pub fn push(&mut self, arm: VirtualMixtureArm) -> Result<()> {
        let expected = self.arms.len() + 1;
        if arm.iteration != expected {
            return Err(Error::CorruptedRegistry(format!(
                "expected iteration {expected}, got {}",
                arm.iteration
            )));
        }
        let slots = self.real_arms + expected - 1;
        if arm.counts.len() != slots {
            return Err(Error::CorruptedRegistry(format!(
                "iteration {expected} has {} slots, expected {slots}",
                arm.counts.len()
            )));
        }
        self.arms.push(arm);
        Ok(())
    }

    pub fn resolve<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Result<usize> {
        let arm = self
            .get(j)
            .ok_or_else(|| Error::CorruptedRegistry(format!("no mixture for iteration {j}")))?;
        resolve_virtual_arm(arm, self, rng)
    }

    /// Distribution over real arms induced by the mixture of iteration `j`,
    /// obtained by substituting earlier mixtures for their slots.
    pub fn flatten(&self, j: usize) -> Result<Vec<f64>> {
        if j == 0 || j > self.arms.len() {
            return Err(Error::CorruptedRegistry(format!("no mixture for iteration {j}")));
        }
        let k = self.real_arms;
        let mut flat: Vec<Vec<f64>> = Vec::with_capacity(j);
        for arm in &self.arms[..j] {
            let mut dist = arm.frequencies[..k].to_vec();
            for (v, &w) in arm.frequencies[k..].iter().enumerate() {
                if w > 0.0 {
                    dist.iter_mut()
                        .zip(&flat[v])
                        .for_each(|(d, &f)| *d += w * f);
                }
            }
            flat.push(dist);
        }
        Ok(flat.pop().expect("j >= 1"))
    }

    /// Expected real-arm reward of mixture `j` under per-arm means `means`.
    pub fn mixture_mean(&self, j: usize, means: &[f64]) -> Result<f64> {
        Ok(self
            .flatten(j)?
            .iter()
            .zip(means)
            .map(|(p, m)| p * m)
            .sum())
    }
}

/// Draws a real arm index from `arm`, chasing virtual slots through `registry`.
///
/// Every chase step strictly lowers the iteration index, so at most
/// `registry.len()` hops are taken.
pub fn resolve_virtual_arm<R: Rng + ?Sized>(
    arm: &VirtualMixtureArm,
    registry: &MixtureRegistry,
    rng: &mut R,
) -> Result<usize> {
    let k = registry.real_arms;
    let mut current = arm;
    for _ in 0..=registry.len() {
        let slot = current.sample_slot(rng);
        if slot < k {
            return Ok(slot);
        }
        let next = slot - k + 1;
        if next >= current.iteration {
            return Err(Error::CorruptedRegistry(format!(
                "mixture {} points at virtual arm {next}",
                current.iteration
            )));
        }
        current = registry.get(next).ok_or_else(|| {
            Error::CorruptedRegistry(format!("virtual arm {next} is not registered"))
        })?;
    }
    Err(Error::CorruptedRegistry(
        "resolution exceeded the registry depth".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn finalize_examples() {
        let mut counts = vec![0u64; 4];
        counts[0] = 128;
        let point = finalize_mixture_arm(counts, 128, 1).unwrap();
        assert_eq!(point.frequencies(), &[1.0, 0.0, 0.0, 0.0]);

        let half = finalize_mixture_arm(vec![64, 64], 128, 1).unwrap();
        assert_eq!(half.frequencies(), &[0.5, 0.5]);

        assert!(finalize_mixture_arm(vec![64, 63], 128, 1).is_err());
        assert!(finalize_mixture_arm(vec![1], 1, 0).is_err());
    }

    #[test]
    fn point_mass_always_resolves_to_its_arm() {
        let mut reg = MixtureRegistry::new(8);
        let mut counts = vec![0; 8];
        counts[5] = 10;
        reg.push(finalize_mixture_arm(counts, 10, 1).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(reg.resolve(1, &mut rng).unwrap(), 5);
        }
    }

    #[test]
    fn two_level_chase() {
        let mut reg = MixtureRegistry::new(4);
        reg.push(finalize_mixture_arm(vec![0, 0, 0, 7], 7, 1).unwrap()).unwrap();
        reg.push(finalize_mixture_arm(vec![0, 0, 0, 0, 5], 5, 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(reg.resolve(2, &mut rng).unwrap(), 3);
        }
        assert_eq!(reg.flatten(2).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn half_real_half_virtual_frequency() {
        let mut reg = MixtureRegistry::new(2);
        reg.push(finalize_mixture_arm(vec![0, 3], 3, 1).unwrap()).unwrap();
        reg.push(finalize_mixture_arm(vec![4, 0, 4], 8, 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| reg.resolve(2, &mut rng).unwrap() == 0)
            .count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.01);
        assert_eq!(reg.flatten(2).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn self_reference_is_reported() {
        let mut reg = MixtureRegistry::new(1);
        reg.push(finalize_mixture_arm(vec![2], 2, 1).unwrap()).unwrap();
        // iteration 2 with an extra slot pointing at itself
        let bad = finalize_mixture_arm(vec![0, 0, 3], 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = resolve_virtual_arm(&bad, &reg, &mut rng).unwrap_err();
        assert!(matches!(err, Error::CorruptedRegistry(_)));
        assert!(reg.push(bad).is_err());
    }

    #[test]
    fn registry_rejects_gaps() {
        let mut reg = MixtureRegistry::new(2);
        assert!(reg
            .push(finalize_mixture_arm(vec![1, 1, 0], 2, 2).unwrap())
            .is_err());
    }

    #[test]
    fn flattened_distribution_matches_sampling() {
        let mut reg = MixtureRegistry::new(3);
        reg.push(finalize_mixture_arm(vec![5, 3, 2], 10, 1).unwrap()).unwrap();
        reg.push(finalize_mixture_arm(vec![1, 0, 4, 5], 10, 2).unwrap()).unwrap();
        reg.push(finalize_mixture_arm(vec![2, 2, 0, 3, 3], 10, 3).unwrap()).unwrap();
        // Back-substitution by hand:
        // nu1 = (.5, .3, .2)
        // nu2 = .1 e0 + .4 e2 + .5 nu1 = (.35, .15, .5)
        // nu3 = .2 e0 + .2 e1 + .3 nu1 + .3 nu2 = (.455, .335, .21)
        let flat = reg.flatten(3).unwrap();
        for (got, want) in flat.iter().zip([0.455, 0.335, 0.21]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 200_000;
        let mut hits = [0usize; 3];
        for _ in 0..n {
            hits[reg.resolve(3, &mut rng).unwrap()] += 1;
        }
        for (h, p) in hits.iter().zip(&flat) {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*h as f64 / n as f64 - p).abs() < 4.0 * se);
        }
    }
}
