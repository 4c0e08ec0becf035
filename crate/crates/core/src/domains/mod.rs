//! Adversarial evaluation domains.

pub mod bt;
pub mod pusher;
pub mod skirmish;

use std::fmt::Debug;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{DescriptorDomain, Frame};
use crate::io::checksum::Fnv1a64;

pub use pusher::{Pusher, PusherGenome, PusherParams};
pub use skirmish::{Skirmish, SkirmishParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Red,
    Blue,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Red => 0,
            Side::Blue => 1,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Red => Side::Blue,
            Side::Blue => Side::Red,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Red => "red",
            Side::Blue => "blue",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid solution: {0}")]
    Invalid(String),
    #[error("cannot parse solution: {0}")]
    Parse(String),
}

/// Coarse action category recorded in action traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Stand,
    Attack,
    Move,
    GoTo,
    SetTarget,
}

impl ActionKind {
    pub const ALL: [ActionKind; 5] =
        [ActionKind::Stand, ActionKind::Attack, ActionKind::Move, ActionKind::GoTo, ActionKind::SetTarget];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

/// The visual record of a duel. Frames are rendered on demand.
#[derive(Clone, Debug)]
pub enum Video {
    Frames(Vec<Frame>),
    Skirmish(Arc<skirmish::Replay>),
    Pusher(Arc<pusher::Replay>),
}

impl Video {
    pub fn len(&self) -> usize {
        match self {
            Video::Frames(f) => f.len(),
            Video::Skirmish(r) => r.len(),
            Video::Pusher(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame(&self, i: usize) -> Frame {
        match self {
            Video::Frames(f) => f[i].clone(),
            Video::Skirmish(r) => r.render(i),
            Video::Pusher(r) => r.render(i),
        }
    }

    pub fn frames(&self) -> Vec<Frame> {
        (0..self.len()).map(|i| self.frame(i)).collect()
    }

    /// Unit coordinates of one side at frame `i`, normalized to `[0, 1]`.
    pub fn positions(&self, side: Side, i: usize) -> Option<Vec<(f64, f64)>> {
        match self {
            Video::Frames(_) => None,
            Video::Skirmish(r) => Some(r.positions(side, i)),
            Video::Pusher(r) => Some(r.positions(side, i)),
        }
    }
}

/// Result of one evaluation between a Red and a Blue solution.
#[derive(Clone, Debug)]
pub struct DuelOutcome {
    /// Indexed by [`Side::index`].
    pub fitness: [f64; 2],
    pub video: Video,
    /// Per side, the action category of every living unit at every step.
    pub actions: [Vec<ActionKind>; 2],
    /// Remaining total health of each side as a fraction of its initial total.
    pub health_remaining: [f64; 2],
    pub completion_step: u32,
    pub max_steps: u32,
    pub winner: Option<Side>,
}

impl DuelOutcome {
    pub fn fitness_red(&self) -> f64 {
        self.fitness[0]
    }

    pub fn fitness_blue(&self) -> f64 {
        self.fitness[1]
    }

    pub fn fitness_of(&self, side: Side) -> f64 {
        self.fitness[side.index()]
    }
}

/// A variation result and whether the second parent contributed.
#[derive(Clone, Debug, PartialEq)]
pub struct Offspring<S> {
    pub solution: S,
    pub crossover: bool,
}

/// An adversarial problem in which both sides share one search space.
pub trait Domain: Sync {
    type Solution: Clone + Debug + PartialEq + Send + Sync;

    fn name(&self) -> &'static str;
    fn random_solution(&self, side: Side, rng: &mut ChaCha8Rng) -> Self::Solution;
    fn vary(&self, first: &Self::Solution, second: &Self::Solution, rng: &mut ChaCha8Rng) -> Offspring<Self::Solution>;
    fn evaluate(&self, red: &Self::Solution, blue: &Self::Solution) -> Result<DuelOutcome, DomainError>;
    /// Size used as the secondary objective in lexicographic mode.
    fn solution_size(&self, s: &Self::Solution) -> u32;
    /// Integer genome view used by the genome-statistics descriptor.
    fn genome_values(&self, s: &Self::Solution) -> Vec<f64>;
    fn descriptor_domain(&self) -> DescriptorDomain;
    fn encode(&self, s: &Self::Solution) -> String;
    fn decode(&self, text: &str) -> Result<Self::Solution, DomainError>;
    /// Seed shared by every duel; zero for deterministic domains.
    fn duel_seed(&self) -> u64;
}

/// Stable key identifying one evaluation from one side's perspective.
pub fn evaluation_key(side: Side, red_payload: &str, blue_payload: &str, duel_seed: u64) -> u64 {
    let mut h = Fnv1a64::new();
    h.write(&[side.index() as u8]);
    h.write(red_payload.as_bytes());
    h.write(&[0]);
    h.write(blue_payload.as_bytes());
    h.write(&[0]);
    h.write(&duel_seed.to_le_bytes());
    h.finish()
}
