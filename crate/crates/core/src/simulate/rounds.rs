use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{batch_rng, batches};
use crate::error::Result;
use crate::finite_key::{ObservedStats, ProtocolConfig, ProtocolKind};
use crate::noise::{NoiseModel, NoiseScenario};

const LABEL_Z: u64 = 1;
const LABEL_X: u64 = 2;

/// Tallies from simulated parameter-estimation rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub parties: u32,
    /// Z-basis rounds used for `Q_AB` and `Q_Z`.
    pub z_rounds: u64,
    /// X-basis rounds used for `Q_X`.
    pub x_rounds: u64,
    /// Discordant Z outcomes between Alice and each Bob.
    pub ab_errors: Vec<u64>,
    /// Rounds where at least one Bob disagrees with Alice in Z.
    pub z_errors: u64,
    /// Rounds where the X outcomes multiply to -1.
    pub x_errors: u64,
}

impl SimulationReport {
    pub fn q_ab(&self) -> Vec<f64> {
        self.ab_errors.iter().map(|&e| ratio(e, self.z_rounds)).collect()
    }

    pub fn q_x(&self) -> f64 {
        ratio(self.x_errors, self.x_rounds)
    }

    pub fn q_z(&self) -> f64 {
        ratio(self.z_errors, self.z_rounds)
    }

    pub fn observed_stats(&self) -> ObservedStats {
        ObservedStats::per_bob(self.q_ab(), self.q_x(), self.q_z())
    }
}

fn ratio(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Pauli {
    I,
    X,
    Y,
    Z,
}

fn twirl<R: Rng>(rng: &mut R, nu: f64) -> Pauli {
    let u: f64 = rng.random();
    let q = nu / 4.0;
    if u < 1.0 - 3.0 * q {
        Pauli::I
    } else if u < 1.0 - 2.0 * q {
        Pauli::X
    } else if u < 1.0 - q {
        Pauli::Y
    } else {
        Pauli::Z
    }
}

fn random_bits<R: Rng>(rng: &mut R, count: u32) -> u64 {
    rng.random::<u64>() & ((1u64 << count) - 1)
}

/// Outcomes of one Z round as a bitmask of Bobs disagreeing with Alice.
fn z_round<R: Rng>(rng: &mut R, scenario: &NoiseScenario) -> u64 {
    let bobs = scenario.parties - 1;
    match scenario.model {
        NoiseModel::Global => {
            if rng.random::<f64>() < scenario.nu {
                // Uniform outcome string: every Bob independently matches Alice.
                let alice = rng.random::<bool>() as u64;
                let outcomes = random_bits(rng, bobs);
                let alice_mask = if alice == 1 { (1u64 << bobs) - 1 } else { 0 };
                outcomes ^ alice_mask
            } else {
                0
            }
        }
        NoiseModel::Local => (0..bobs).fold(0, |mask, i| {
            let flip = matches!(twirl(rng, scenario.nu), Pauli::X | Pauli::Y);
            mask | (u64::from(flip) << i)
        }),
    }
}

/// Whether the product of X outcomes in one round is -1.
fn x_round<R: Rng>(rng: &mut R, scenario: &NoiseScenario) -> bool {
    let n = scenario.parties;
    match scenario.model {
        NoiseModel::Global => {
            let uniform = rng.random::<f64>() < scenario.nu;
            let mut signs = random_bits(rng, n);
            if !uniform && signs.count_ones() % 2 == 1 {
                signs ^= 1;
            }
            signs.count_ones() % 2 == 1
        }
        NoiseModel::Local => {
            let mut signs = random_bits(rng, n);
            if signs.count_ones() % 2 == 1 {
                signs ^= 1;
            }
            for i in 1..n {
                if matches!(twirl(rng, scenario.nu), Pauli::Z | Pauli::Y) {
                    signs ^= 1 << i;
                }
            }
            signs.count_ones() % 2 == 1
        }
    }
}

/// Simulates `z_rounds` Z-basis and `x_rounds` X-basis rounds.
pub fn simulate_statistics(scenario: &NoiseScenario, z_rounds: u64, x_rounds: u64, seed: u64) -> SimulationReport {
    let bobs = (scenario.parties - 1) as usize;
    let z = batches(z_rounds)
        .into_par_iter()
        .map(|(b, size)| {
            let mut rng = batch_rng(seed, LABEL_Z, b);
            let mut ab = vec![0u64; bobs];
            let mut any = 0u64;
            for _ in 0..size {
                let mask = z_round(&mut rng, scenario);
                any += u64::from(mask != 0);
                for (i, slot) in ab.iter_mut().enumerate() {
                    *slot += (mask >> i) & 1;
                }
            }
            (ab, any)
        })
        .reduce(
            || (vec![0u64; bobs], 0),
            |(mut a, x), (b, y)| {
                a.iter_mut().zip(b).for_each(|(p, q)| *p += q);
                (a, x + y)
            },
        );
    let x_errors = batches(x_rounds)
        .into_par_iter()
        .map(|(b, size)| {
            let mut rng = batch_rng(seed, LABEL_X, b);
            (0..size).filter(|_| x_round(&mut rng, scenario)).count() as u64
        })
        .sum();
    SimulationReport {
        seed,
        parties: scenario.parties,
        z_rounds,
        x_rounds,
        ab_errors: z.0,
        z_errors: z.1,
        x_errors,
    }
}

/// Simulates the parameter-estimation rounds of `config`: `m` Z-basis rounds,
/// and `m` X rounds for N-BB84 or the `m'` accepted X rounds for six-state.
pub fn simulate_rounds(scenario: &NoiseScenario, config: &ProtocolConfig, seed: u64) -> Result<SimulationReport> {
    let counts = config.counts()?;
    let x_rounds = match config.kind {
        ProtocolKind::NBb84 => counts.m,
        ProtocolKind::NSixState => counts.m_prime,
    };
    Ok(simulate_statistics(scenario, counts.m, x_rounds, seed))
}
