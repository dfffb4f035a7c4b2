use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::noise::{MarginalProbabilities, NoiseModel, NoiseScenario};

/// Largest party count for the dense `2^N x 2^N` construction.
pub const MAX_EXACT_PARTIES: u32 = 5;

/// Qubit 0 is Alice and sits in the most significant bit of a basis index.
fn bit(index: usize, qubit: u32, parties: u32) -> usize {
    (index >> (parties - 1 - qubit)) & 1
}

fn ghz(parties: u32) -> DMatrix<f64> {
    let dim = 1usize << parties;
    let mut rho = DMatrix::zeros(dim, dim);
    for &r in &[0, dim - 1] {
        for &c in &[0, dim - 1] {
            rho[(r, c)] = 0.5;
        }
    }
    rho
}

/// `(1 - nu) rho + nu (id/2)_q ⊗ Tr_q(rho)`.
fn depolarize_qubit(rho: &DMatrix<f64>, qubit: u32, parties: u32, nu: f64) -> DMatrix<f64> {
    let dim = rho.nrows();
    let mask = 1usize << (parties - 1 - qubit);
    DMatrix::from_fn(dim, dim, |r, c| {
        let replaced = if (r & mask) == (c & mask) {
            0.5 * (rho[(r & !mask, c & !mask)] + rho[(r | mask, c | mask)])
        } else {
            0.0
        };
        (1.0 - nu) * rho[(r, c)] + nu * replaced
    })
}

fn hadamard_all(parties: u32) -> DMatrix<f64> {
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]) * std::f64::consts::FRAC_1_SQRT_2;
    (1..parties).fold(h.clone(), |acc, _| acc.kronecker(&h))
}

/// Error probabilities read off the exact noisy state.
///
/// Builds the density matrix, takes Z-basis probabilities from its diagonal
/// and X-basis probabilities from the diagonal of `H^{⊗N} rho H^{⊗N}`.
/// `p_ab` is the largest pairwise disagreement over the Bobs.
pub fn exact_marginals(scenario: &NoiseScenario) -> Result<MarginalProbabilities> {
    let parties = scenario.parties;
    if parties > MAX_EXACT_PARTIES {
        return Err(Error::TooLarge {
            parties,
            max: MAX_EXACT_PARTIES,
        });
    }
    let dim = 1usize << parties;
    let pure = ghz(parties);
    let rho = match scenario.model {
        NoiseModel::Global => {
            pure * (1.0 - scenario.nu) + DMatrix::identity(dim, dim) * (scenario.nu / dim as f64)
        }
        NoiseModel::Local => (1..parties).fold(pure, |acc, q| depolarize_qubit(&acc, q, parties, scenario.nu)),
    };

    let mut p_ab = 0.0f64;
    for bob in 1..parties {
        let p: f64 = (0..dim)
            .filter(|&i| bit(i, 0, parties) != bit(i, bob, parties))
            .map(|i| rho[(i, i)])
            .sum();
        p_ab = p_ab.max(p);
    }
    let p_z: f64 = (0..dim)
        .filter(|&i| (1..parties).any(|b| bit(i, b, parties) != bit(i, 0, parties)))
        .map(|i| rho[(i, i)])
        .sum();
    let h = hadamard_all(parties);
    let rho_x = &h * &rho * &h;
    let p_x: f64 = (0..dim)
        .filter(|&i| i.count_ones() % 2 == 1)
        .map(|i| rho_x[(i, i)])
        .sum();
    Ok(MarginalProbabilities { p_ab, p_x, p_z })
}
