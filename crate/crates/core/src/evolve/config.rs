use serde::{Deserialize, Serialize};

use crate::behavior::DescriptorSpec;
use crate::fitness::FitnessMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ArchiveMode {
    #[default]
    Growing,
    /// Tessellation computed once per generation from random descriptor
    /// samples and never moved.
    FixedCvt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OpponentMode {
    /// Tasks of each generation are elites of the previous one.
    #[default]
    Coevolve,
    /// Every generation faces freshly sampled random opponents.
    FixedRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SearchMode {
    #[default]
    Variation,
    /// Every candidate is a random solution.
    RandomOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(rename = "N_gen")]
    pub n_gen: usize,
    #[serde(rename = "N_task")]
    pub n_task: usize,
    #[serde(rename = "N_cell")]
    pub n_cell: usize,
    #[serde(rename = "N_budget")]
    pub n_budget: usize,
    #[serde(rename = "N_init")]
    pub n_init: usize,
    pub fitness_mode: FitnessMode,
    pub archive_mode: ArchiveMode,
    pub bootstrap_enabled: bool,
    pub opponents: OpponentMode,
    pub search: SearchMode,
    /// Archive fitness forced to a constant.
    pub diversity_only: bool,
    /// Candidates generated from the same archive state and evaluated
    /// together. Part of the algorithm: changing it changes results.
    pub batch_size: usize,
    /// Random descriptor samples used to lay out a fixed tessellation.
    pub cvt_samples: usize,
    pub descriptor: DescriptorSpec,
    pub master_seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            n_gen: 6,
            n_task: 10,
            n_cell: 8,
            n_budget: 1500,
            n_init: 100,
            fitness_mode: FitnessMode::SingleObjective,
            archive_mode: ArchiveMode::Growing,
            bootstrap_enabled: true,
            opponents: OpponentMode::Coevolve,
            search: SearchMode::Variation,
            diversity_only: false,
            batch_size: 8,
            cvt_samples: 2000,
            descriptor: DescriptorSpec::default(),
            master_seed: 1,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_gen == 0 || self.n_task == 0 || self.n_cell == 0 || self.batch_size == 0 {
            return Err("N_gen, N_task, N_cell and batch_size must be positive".into());
        }
        if self.n_init > self.n_budget {
            return Err(format!("N_init ({}) exceeds N_budget ({})", self.n_init, self.n_budget));
        }
        if self.opponents == OpponentMode::FixedRandom && self.bootstrap_enabled {
            return Err("bootstrapping needs coevolved opponents".into());
        }
        if self.archive_mode == ArchiveMode::FixedCvt && self.cvt_samples < self.n_cell {
            return Err(format!("cvt_samples ({}) must be at least N_cell ({})", self.cvt_samples, self.n_cell));
        }
        match self.descriptor {
            DescriptorSpec::FrameEmbedding { pool, frames } if pool == 0 || frames == 0 => {
                Err("frame embedding needs positive pool and frame counts".into())
            }
            DescriptorSpec::Positions { timesteps: 0 } => Err("positions descriptor needs at least one timestep".into()),
            _ => Ok(()),
        }
    }

    /// Evaluations one generation performs: the inner budget plus the
    /// task tournament.
    pub fn evaluations_per_generation(&self) -> u64 {
        (self.n_budget + self.n_task * self.n_task) as u64
    }
}
