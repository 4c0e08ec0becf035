//! One-dimensional pushing duel between two voxel robots.
//!
//! Each robot is a row of up to nine voxels on a line arena, starting at
//! opposite walls. Horizontal actuators push the body back and forth;
//! vertical actuators change how well it grips the floor, so a body whose
//! lift and thrust are out of step ratchets forward. A step is won by the
//! robot whose midpoint is strictly closer to the arena center.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Domain, DomainError, DuelOutcome, Offspring, Side, Video};
use crate::behavior::{DescriptorDomain, Frame};

pub const GENOME_LEN: usize = 9;
pub const EMPTY: u8 = 0;
pub const RIGID: u8 = 1;
pub const SOFT: u8 = 2;
/// Horizontal actuator, in phase.
pub const H_IN: u8 = 3;
/// Vertical actuator, in phase.
pub const V_IN: u8 = 4;
/// Horizontal actuator, anti-phase.
pub const H_ANTI: u8 = 5;
/// Vertical actuator, anti-phase.
pub const V_ANTI: u8 = 6;
pub const MAX_CELL: u8 = 6;
const REDRAWS: usize = 10;
const SUB_OPERATIONS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PusherGenome([u8; GENOME_LEN]);

impl PusherGenome {
    pub fn new(cells: [u8; GENOME_LEN]) -> Result<Self, DomainError> {
        check_cells(&cells).map_err(DomainError::Invalid)?;
        Ok(Self(cells))
    }

    pub fn cells(&self) -> &[u8; GENOME_LEN] {
        &self.0
    }

    /// The contiguous run of non-empty cells.
    pub fn body(&self) -> &[u8] {
        let start = self.0.iter().position(|&c| c != EMPTY).expect("valid genome");
        let end = self.0.iter().rposition(|&c| c != EMPTY).expect("valid genome");
        &self.0[start..=end]
    }

    pub fn hamming(&self, other: &PusherGenome) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

pub fn check_cells(cells: &[u8; GENOME_LEN]) -> Result<(), String> {
    if let Some(c) = cells.iter().find(|&&c| c > MAX_CELL) {
        return Err(format!("cell value {c} out of range"));
    }
    let filled: Vec<usize> = (0..GENOME_LEN).filter(|&i| cells[i] != EMPTY).collect();
    let (Some(&first), Some(&last)) = (filled.first(), filled.last()) else {
        return Err("genome has no voxels".into());
    };
    if last - first + 1 != filled.len() {
        return Err("voxels are not connected".into());
    }
    if !cells.iter().any(|&c| c >= H_IN) {
        return Err("genome has no actuated voxel".into());
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PusherParams {
    pub arena_width: f64,
    pub max_steps: u32,
    /// Actuation period in steps.
    pub period: u32,
    /// Thrust per horizontal actuator.
    pub amplitude: f64,
    /// Grip change per vertical actuator, scaled by body length.
    pub grip_gain: f64,
    pub pixels_per_unit: usize,
    pub frame_height: usize,
}

impl Default for PusherParams {
    fn default() -> Self {
        Self {
            arena_width: 30.0,
            max_steps: 200,
            period: 12,
            amplitude: 2.0,
            grip_gain: 1.5,
            pixels_per_unit: 2,
            frame_height: 16,
        }
    }
}

impl PusherParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let ok = self.arena_width.is_finite()
            && self.arena_width > 2.0 * GENOME_LEN as f64
            && self.max_steps > 0
            && self.period >= 2
            && self.period.is_multiple_of(2)
            && self.amplitude.is_finite()
            && self.amplitude >= 0.0
            && self.grip_gain.is_finite()
            && self.grip_gain >= 0.0
            && self.pixels_per_unit > 0
            && self.frame_height >= 4;
        if ok {
            Ok(())
        } else {
            Err(DomainError::Invalid("pusher parameters out of range".into()))
        }
    }

    /// `sin(2 pi k / period)` for one period, with the odd symmetry
    /// `s[period - k] = -s[k]` and the zeros at 0 and half a period exact.
    pub fn sine_table(&self) -> Vec<f64> {
        let p = self.period as usize;
        let mut s = vec![0.0; p];
        for k in 1..p / 2 {
            let v = (2.0 * std::f64::consts::PI * k as f64 / p as f64).sin();
            s[k] = v;
            s[p - k] = -v;
        }
        s
    }
}

/// Actuation summary of one body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drive {
    /// Signed count of horizontal actuators.
    pub thrust: f64,
    /// Signed count of vertical actuators.
    pub lift: f64,
    pub mass: f64,
    pub len: f64,
}

impl Drive {
    pub fn of(g: &PusherGenome) -> Self {
        let body = g.body();
        let mut d = Drive { thrust: 0.0, lift: 0.0, mass: 0.0, len: body.len() as f64 };
        for &c in body {
            match c {
                H_IN => d.thrust += 1.0,
                H_ANTI => d.thrust -= 1.0,
                V_IN => d.lift += 1.0,
                V_ANTI => d.lift -= 1.0,
                _ => {}
            }
            d.mass += if c == RIGID { 2.0 } else { 1.0 };
        }
        d
    }

    /// Forward velocity for an actuation phase value `s = sin(omega t)`.
    pub fn velocity(&self, s: f64, params: &PusherParams) -> f64 {
        let grip = (1.0 - params.grip_gain * self.lift * s / self.len).clamp(0.0, 2.0);
        params.amplitude * self.thrust * s * grip / self.mass
    }
}

/// Net forward displacement in free space over `steps` steps starting at `t0`.
pub fn free_displacement(g: &PusherGenome, params: &PusherParams, t0: u32, steps: u32) -> f64 {
    let table = params.sine_table();
    let d = Drive::of(g);
    (t0..t0 + steps).map(|t| d.velocity(table[(t % params.period) as usize], params)).sum()
}

/// Robot positions over time, rendered into frames on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub params: PusherParams,
    pub genomes: [PusherGenome; 2],
    /// Per state, each robot's distance from its own wall.
    pub offsets: Vec<[f64; 2]>,
}

impl Replay {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    fn world_span(&self, side: Side, offset: f64, j: usize) -> (f64, f64) {
        let w = self.params.arena_width;
        let a = offset + j as f64;
        match side {
            Side::Red => (a, a + 1.0),
            Side::Blue => (w - a - 1.0, w - a),
        }
    }

    fn shade(side: Side, cell: u8) -> f64 {
        let base = match cell {
            RIGID => 1.0,
            SOFT => 0.6,
            H_IN | H_ANTI => 0.8,
            _ => 0.7,
        };
        if side == Side::Red {
            base
        } else {
            base * 0.5
        }
    }

    /// Side view: voxels drawn as columns standing on the floor row;
    /// vertical actuators grow and shrink with their phase.
    pub fn render(&self, i: usize) -> Frame {
        let p = &self.params;
        let (w, h) = ((p.arena_width * p.pixels_per_unit as f64).ceil() as usize, p.frame_height);
        let mut f = Frame::blank(w, h);
        let table = p.sine_table();
        let s = table[i % p.period as usize];
        let base = h / 2;
        for side in [Side::Red, Side::Blue] {
            let off = self.offsets[i][side.index()];
            for (j, &cell) in self.genomes[side.index()].body().iter().enumerate() {
                let height = match cell {
                    V_IN => base as f64 + (h / 4) as f64 * s,
                    V_ANTI => base as f64 - (h / 4) as f64 * s,
                    _ => base as f64,
                }
                .round()
                .clamp(1.0, h as f64) as usize;
                let (x0, x1) = self.world_span(side, off, j);
                let px0 = (x0 * p.pixels_per_unit as f64).floor().max(0.0) as usize;
                let px1 = ((x1 * p.pixels_per_unit as f64).ceil() as usize).min(w);
                for x in px0..px1 {
                    for y in h - height..h {
                        f.set(x, y, Self::shade(side, cell));
                    }
                }
            }
        }
        f
    }

    /// Normalized midpoint of the robot on the arena axis.
    pub fn positions(&self, side: Side, i: usize) -> Vec<(f64, f64)> {
        let w = self.params.arena_width;
        let len = self.genomes[side.index()].body().len() as f64;
        let off = self.offsets[i][side.index()];
        let mid = match side {
            Side::Red => off + len / 2.0,
            Side::Blue => w - off - len / 2.0,
        };
        vec![(mid / w, 0.5)]
    }
}

/// Runs one duel. Each robot's state is its distance from its own wall,
/// so the update is the same expression for both sides and mirrored duels
/// stay bit-identical.
pub fn pusher_evaluate(red: &PusherGenome, blue: &PusherGenome, params: &PusherParams) -> DuelOutcome {
    let table = params.sine_table();
    let drives = [Drive::of(red), Drive::of(blue)];
    let w = params.arena_width;
    let center = w / 2.0;
    let mut off = [0.0f64; 2];
    let mut offsets = Vec::with_capacity(params.max_steps as usize + 1);
    offsets.push(off);
    let (mut wins, mut ties) = ([0u32; 2], 0u32);
    for t in 1..=params.max_steps {
        let s = table[(t % params.period) as usize];
        let v = [drives[0].velocity(s, params), drives[1].velocity(s, params)];
        for k in 0..2 {
            off[k] = (off[k] + v[k]).max(0.0);
        }
        let overlap = off[0] + drives[0].len + off[1] + drives[1].len - w;
        if overlap > 0.0 {
            let momentum = [(drives[0].mass * v[0]).abs(), (drives[1].mass * v[1]).abs()];
            if momentum[0] > momentum[1] {
                off[1] -= overlap;
            } else if momentum[1] > momentum[0] {
                off[0] -= overlap;
            } else {
                off[0] -= overlap / 2.0;
                off[1] -= overlap / 2.0;
            }
            // a robot pushed into its wall pushes back
            for k in 0..2 {
                if off[k] < 0.0 {
                    off[1 - k] += off[k];
                    off[k] = 0.0;
                }
            }
        }
        let dist = [(center - (off[0] + drives[0].len / 2.0)).abs(), (center - (off[1] + drives[1].len / 2.0)).abs()];
        if dist[0] < dist[1] {
            wins[0] += 1;
        } else if dist[1] < dist[0] {
            wins[1] += 1;
        } else {
            ties += 1;
        }
        offsets.push(off);
    }
    let red_fitness = (2 * wins[0] + ties) as f64 / (2 * params.max_steps) as f64;
    // 1 - x is exact for x >= 1/2 and rounds back to a sum of exactly 1 below that
    let fitness = [red_fitness, 1.0 - red_fitness];
    let winner = match wins[0].cmp(&wins[1]) {
        std::cmp::Ordering::Greater => Some(Side::Red),
        std::cmp::Ordering::Less => Some(Side::Blue),
        std::cmp::Ordering::Equal => None,
    };
    DuelOutcome {
        fitness,
        video: Video::Pusher(Arc::new(Replay { params: params.clone(), genomes: [*red, *blue], offsets })),
        actions: [Vec::new(), Vec::new()],
        health_remaining: [1.0, 1.0],
        completion_step: params.max_steps,
        max_steps: params.max_steps,
        winner,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubOpKind {
    Add,
    Delete,
    Mutate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubOp {
    pub kind: SubOpKind,
    pub cell: usize,
    /// New value for `Add` and `Mutate`.
    pub value: u8,
}

pub fn draw_sub_op<R: Rng>(rng: &mut R) -> SubOp {
    let kind = [SubOpKind::Add, SubOpKind::Delete, SubOpKind::Mutate][rng.gen_range(0..3)];
    SubOp { kind, cell: rng.gen_range(0..GENOME_LEN), value: rng.gen_range(1..=MAX_CELL) }
}

/// Applies one sub-operation, or returns `None` when it does not apply to
/// the chosen cell or would break a genome invariant.
pub fn apply_sub_op(g: &PusherGenome, op: SubOp) -> Option<PusherGenome> {
    let mut cells = g.0;
    let cur = *cells.get(op.cell)?;
    match op.kind {
        SubOpKind::Add if cur == EMPTY && op.value != EMPTY => cells[op.cell] = op.value,
        SubOpKind::Delete if cur != EMPTY => cells[op.cell] = EMPTY,
        SubOpKind::Mutate if cur != EMPTY && op.value != EMPTY && op.value != cur => cells[op.cell] = op.value,
        _ => return None,
    }
    check_cells(&cells).ok().map(|_| PusherGenome(cells))
}

/// Three add/delete/mutate sub-operations. An inapplicable draw is redrawn
/// up to ten times and then skipped.
pub fn pusher_variation<R: Rng>(g: &PusherGenome, rng: &mut R) -> PusherGenome {
    let mut cur = *g;
    for _ in 0..SUB_OPERATIONS {
        for _ in 0..REDRAWS {
            if let Some(next) = apply_sub_op(&cur, draw_sub_op(rng)) {
                cur = next;
                break;
            }
        }
    }
    cur
}

/// Uniform cell values, resampled until the genome is valid.
pub fn random_genome<R: Rng>(rng: &mut R) -> PusherGenome {
    loop {
        let mut cells = [0u8; GENOME_LEN];
        cells.iter_mut().for_each(|c| *c = rng.gen_range(0..=MAX_CELL));
        if check_cells(&cells).is_ok() {
            return PusherGenome(cells);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pusher {
    pub params: PusherParams,
}

impl Pusher {
    pub fn new(params: PusherParams) -> Result<Self, DomainError> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl Domain for Pusher {
    type Solution = PusherGenome;

    fn name(&self) -> &'static str {
        "pusher"
    }

    fn random_solution(&self, _side: Side, rng: &mut ChaCha8Rng) -> PusherGenome {
        random_genome(rng)
    }

    fn vary(&self, first: &PusherGenome, _second: &PusherGenome, rng: &mut ChaCha8Rng) -> Offspring<PusherGenome> {
        Offspring { solution: pusher_variation(first, rng), crossover: false }
    }

    fn evaluate(&self, red: &PusherGenome, blue: &PusherGenome) -> Result<DuelOutcome, DomainError> {
        Ok(pusher_evaluate(red, blue, &self.params))
    }

    fn solution_size(&self, s: &PusherGenome) -> u32 {
        s.body().len() as u32
    }

    fn genome_values(&self, s: &PusherGenome) -> Vec<f64> {
        s.0.iter().map(|&c| c as f64).collect()
    }

    fn descriptor_domain(&self) -> DescriptorDomain {
        DescriptorDomain { units_per_side: 1, gene_range: (0.0, MAX_CELL as f64), external_dim: 0 }
    }

    fn encode(&self, s: &PusherGenome) -> String {
        s.0.iter().map(|c| char::from(b'0' + c)).collect()
    }

    fn decode(&self, text: &str) -> Result<PusherGenome, DomainError> {
        let bytes = text.trim().as_bytes();
        if bytes.len() != GENOME_LEN || !bytes.iter().all(u8::is_ascii_digit) {
            return Err(DomainError::Parse(format!("expected {GENOME_LEN} digits, got {text:?}")));
        }
        let mut cells = [0u8; GENOME_LEN];
        for (c, b) in cells.iter_mut().zip(bytes) {
            *c = b - b'0';
        }
        PusherGenome::new(cells)
    }

    fn duel_seed(&self) -> u64 {
        0
    }
}
