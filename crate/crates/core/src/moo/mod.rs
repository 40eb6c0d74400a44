//! NSGA-II search over segmentation parameters.

mod early_stop;
mod evolve;
mod hypervolume;
mod sort;
mod variation;

pub use early_stop::{EarlyStop, StopDecision};
pub use evolve::{
    evaluate, evolve, evolve_with_progress, EvaluatedIndividual, EvolutionOutcome, FitnessCache,
    GenerationRecord, RunRecord, Termination,
};
pub use hypervolume::{hypervolume3, hypervolume_unit};
pub use sort::{crowding_distance, dominates, non_dominated_sort};
pub use variation::{random_genome, vary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lime::LimeError;

#[derive(Debug, Error)]
pub enum MooError {
    #[error("point {0:?} lies outside the reference box")]
    OutsideReference([f64; 3]),
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lime(#[from] LimeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    /// Probability that a parent pair undergoes crossover.
    pub cxpb: f64,
    /// Probability that an offspring undergoes mutation.
    pub mutpb: f64,
    /// Per-gene swap probability inside uniform crossover.
    pub indpb_crossover: f64,
    /// Per-gene probability inside mutation.
    pub indpb_mutation: f64,
    /// Standard deviation of the additive Gaussian on `scale`.
    pub scale_mutation_sd: f64,
    /// Standard deviation of the additive Gaussian on `sigma`.
    pub sigma_mutation_sd: f64,
    /// Inclusive range for the uniform integer redraw of `min_size`.
    pub min_size_mutation_range: (u32, u32),
    /// Generations without a novel front before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 80,
            max_generations: 200,
            cxpb: 0.5,
            mutpb: 0.2,
            indpb_crossover: 0.2,
            indpb_mutation: 0.2,
            scale_mutation_sd: 10.0,
            sigma_mutation_sd: 0.05,
            min_size_mutation_range: (15, 500),
            patience: 70,
            seed: 42,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), MooError> {
        let bad = |m: String| Err(MooError::Config(m));
        for (name, p) in [
            ("cxpb", self.cxpb),
            ("mutpb", self.mutpb),
            ("indpb_crossover", self.indpb_crossover),
            ("indpb_mutation", self.indpb_mutation),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.population_size < 2 {
            return bad(format!("population_size {} < 2", self.population_size));
        }
        if self.patience < 1 {
            return bad("patience must be at least 1".into());
        }
        for (name, sd) in [
            ("scale_mutation_sd", self.scale_mutation_sd),
            ("sigma_mutation_sd", self.sigma_mutation_sd),
        ] {
            if !(sd >= 0.0 && sd.is_finite()) {
                return bad(format!("{name} = {sd} must be finite and >= 0"));
            }
        }
        let (lo, hi) = self.min_size_mutation_range;
        if lo > hi {
            return bad(format!("min_size_mutation_range ({lo}, {hi}) is empty"));
        }
        Ok(())
    }
}
