#![allow(dead_code)]

pub mod alg3;

use std::sync::atomic::{AtomicU64, Ordering};

use game_core::behavior::{DescriptorDomain, Frame};
use game_core::domains::{Domain, DomainError, DuelOutcome, Offspring, Side, Video};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Counting stub: a solution is a pair of small integers; Red's fitness is
/// its first gene's share of both first genes.
#[derive(Default)]
pub struct Stub {
    pub calls: AtomicU64,
    /// Fitness 0 and one behavior for everything.
    pub constant: bool,
}

impl Stub {
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Domain for Stub {
    type Solution = [u32; 2];

    fn name(&self) -> &'static str {
        "stub"
    }

    fn random_solution(&self, _side: Side, rng: &mut ChaCha8Rng) -> [u32; 2] {
        [rng.gen_range(0..100), rng.gen_range(0..100)]
    }

    fn vary(&self, a: &[u32; 2], b: &[u32; 2], rng: &mut ChaCha8Rng) -> Offspring<[u32; 2]> {
        if rng.gen_bool(0.3) {
            Offspring { solution: [a[0], b[1]], crossover: true }
        } else {
            let i = rng.gen_range(0..2);
            let mut s = *a;
            s[i] = (s[i] as i64 + rng.gen_range(-5i64..=5)).clamp(0, 99) as u32;
            Offspring { solution: s, crossover: false }
        }
    }

    fn evaluate(&self, red: &[u32; 2], blue: &[u32; 2]) -> Result<DuelOutcome, DomainError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let f = if self.constant { 0.0 } else { (red[0] as f64 + 0.5) / (red[0] as f64 + blue[0] as f64 + 1.0) };
        let fitness = if self.constant { [0.0, 0.0] } else { [f, 1.0 - f] };
        Ok(DuelOutcome {
            fitness,
            video: Video::Frames(vec![Frame::uniform(2, 2, 0.5)]),
            actions: [vec![], vec![]],
            health_remaining: [1.0, 1.0],
            completion_step: 1,
            max_steps: 1,
            winner: None,
        })
    }

    fn solution_size(&self, s: &[u32; 2]) -> u32 {
        s[1]
    }

    fn genome_values(&self, s: &[u32; 2]) -> Vec<f64> {
        if self.constant {
            vec![1.0, 1.0]
        } else {
            vec![s[0] as f64, s[1] as f64]
        }
    }

    fn descriptor_domain(&self) -> DescriptorDomain {
        DescriptorDomain { units_per_side: 1, gene_range: (0.0, 99.0), external_dim: 0 }
    }

    fn encode(&self, s: &[u32; 2]) -> String {
        format!("{} {}", s[0], s[1])
    }

    fn decode(&self, text: &str) -> Result<[u32; 2], DomainError> {
        let v: Vec<u32> = text.split(' ').map(|t| t.parse().map_err(|_| DomainError::Parse(text.into()))).collect::<Result<_, _>>()?;
        match v[..] {
            [a, b] if a < 100 && b < 100 => Ok([a, b]),
            _ => Err(DomainError::Parse(text.into())),
        }
    }

    fn duel_seed(&self) -> u64 {
        0
    }
}
