use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// How two fitness values are ordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FitnessMode {
    #[default]
    SingleObjective,
    /// Primary value first; on an exact tie the smaller solution wins.
    Lexicographic,
}

/// A primary objective (maximized) together with the size of the solution
/// that produced it. The size is only consulted in lexicographic mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub value: f64,
    pub size: u32,
}

impl Fitness {
    pub fn new(value: f64, size: u32) -> Self {
        Self { value, size }
    }
}

/// `Greater` means `a` is better than `b`.
pub fn compare_fitness(a: &Fitness, b: &Fitness, mode: FitnessMode) -> Ordering {
    let primary = a.value.total_cmp(&b.value);
    match mode {
        FitnessMode::SingleObjective => primary,
        FitnessMode::Lexicographic => primary.then_with(|| b.size.cmp(&a.size)),
    }
}
