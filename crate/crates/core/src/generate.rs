//! Seeded random instances with clique-structured associations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{AssociationMatrix, Command, FittsParams, InstanceError, TaskInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    /// Probability that two members of the same clique are associated.
    pub density: f64,
    /// Probability that a command prefers one of the first two tabs.
    pub preference_rate: f64,
}

impl GenConfig {
    pub fn new(n: usize, seed: u64, density: f64) -> Self {
        GenConfig { n, seed, density, preference_rate: 0.0 }
    }
}

/// Commands are split into cliques of two to four members. Pairs inside a
/// clique score between 20 and 100 with probability `density`; pairs across
/// cliques occasionally get a weak score. Frequencies are skewed and sum to
/// one, and the weights are calibrated for the default canvas.
pub fn random_instance(cfg: &GenConfig) -> Result<TaskInstance, InstanceError> {
    if cfg.n == 0 {
        return Err(InstanceError::invalid("$.commands", "at least one command is required"));
    }
    if !(0.0..=1.0).contains(&cfg.density) || !(0.0..=1.0).contains(&cfg.preference_rate) {
        return Err(InstanceError::invalid("$", "density and preference rate must lie in [0, 1]"));
    }
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>().powi(2)).collect();
    let total: f64 = raw.iter().sum();
    let mut commands: Vec<Command> = raw
        .iter()
        .enumerate()
        .map(|(id, f)| Command { id, name: format!("cmd{id}"), frequency: f / total, preferred_tab: None })
        .collect();

    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let mut a = AssociationMatrix::new(n);
    let mut rest = &ids[..];
    while !rest.is_empty() {
        let size = rng.gen_range(2..=4).min(rest.len());
        let (clique, tail) = rest.split_at(size);
        for (k, &i) in clique.iter().enumerate() {
            for &j in &clique[k + 1..] {
                if rng.gen_bool(cfg.density) {
                    a.set(i, j, rng.gen_range(20.0..=100.0_f64).round());
                }
            }
        }
        rest = tail;
    }
    for i in 0..n {
        for j in i + 1..n {
            if a.get(i, j) == 0.0 && rng.gen_bool(cfg.density * 0.05) {
                a.set(i, j, rng.gen_range(1.0..20.0_f64).round());
            }
        }
    }

    for c in &mut commands {
        if rng.gen_bool(cfg.preference_rate) {
            c.preferred_tab = Some(rng.gen_range(0..2));
        }
    }
    TaskInstance::new(commands, a, FittsParams::default())
}
