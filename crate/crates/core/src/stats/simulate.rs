//! Synthetic observation sets with known coefficients, for checking that
//! the regression recovers what generated the data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::observations::ObservationRow;
use crate::features::Position;
use crate::spp::PerturbationType;

/// Coefficients in design order: intercept, the four continuous predictors,
/// then one dummy per non-reference position (After, Inside, Surrounding,
/// Overlap-Before, Overlap-After, Overlap-Both).
pub const REFERENCE_BETA: [f64; 11] = [1.0, 0.12, -0.18, -0.34, -0.02, -0.2, -0.69, -0.34, -0.57, -0.23, -0.57];

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub n: usize,
    pub beta: [f64; 11],
    /// Random-intercept SD of the perturbation-type factor (9 levels).
    pub sigma_ptype: f64,
    /// Random-intercept SD of the model factor.
    pub sigma_model: f64,
    pub models: usize,
}

impl Default for Simulation {
    fn default() -> Self {
        Simulation {
            n: 5000,
            beta: REFERENCE_BETA,
            sigma_ptype: 0.5,
            sigma_model: 0.5,
            models: 5,
        }
    }
}

impl Simulation {
    /// Standard-normal continuous predictors, uniform positions and groups,
    /// Bernoulli outcomes through the logistic link.
    pub fn rows(&self, seed: u64) -> Vec<ObservationRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std_normal = Normal::standard();
        let normal = |rng: &mut ChaCha8Rng| std_normal.inverse_cdf(rng.random_range(1e-12..1.0));
        let u_ptype: Vec<f64> = (0..9).map(|_| self.sigma_ptype * normal(&mut rng)).collect();
        let u_model: Vec<f64> = (0..self.models).map(|_| self.sigma_model * normal(&mut rng)).collect();
        let b = &self.beta;
        (0..self.n)
            .map(|i| {
                let c: [f64; 4] = std::array::from_fn(|_| normal(&mut rng));
                let pos = Position::ALL[rng.random_range(0..Position::ALL.len())];
                let (g, m) = (rng.random_range(0..9), rng.random_range(0..self.models));
                // Position::ALL starts with the reference level.
                let dummy = Position::ALL.iter().position(|&p| p == pos).expect("listed");
                let mut eta = b[0] + (0..4).map(|j| b[1 + j] * c[j]).sum::<f64>() + u_ptype[g] + u_model[m];
                if dummy > 0 {
                    eta += b[4 + dummy];
                }
                let p = 1.0 / (1.0 + (-eta).exp());
                ObservationRow {
                    instance_id: format!("sim-{i}"),
                    model: format!("m{}", m + 1),
                    ptype: PerturbationType::ALL[g],
                    exm: u8::from(rng.random::<f64>() < p),
                    pos,
                    distance: c[0],
                    tok_edit_in: c[1],
                    tok_edit_task: c[2],
                    input_length: c[3],
                }
            })
            .collect()
    }
}
