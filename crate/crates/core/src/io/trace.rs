//! Duel traces: one JSON document per replayed duel with frames, action
//! traces and unit positions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_file, IoError};
use crate::domains::{ActionKind, Domain, DuelOutcome, Side};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFrame {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuelTrace {
    pub domain: String,
    pub red: String,
    pub blue: String,
    pub fitness: [f64; 2],
    pub winner: Option<Side>,
    pub completion_step: u32,
    pub max_steps: u32,
    pub health_remaining: [f64; 2],
    pub actions: [Vec<ActionKind>; 2],
    /// Per frame, per side, normalized unit coordinates; empty when the
    /// domain has no units.
    pub positions: Vec<[Vec<(f64, f64)>; 2]>,
    pub frames: Vec<TraceFrame>,
}

impl DuelTrace {
    pub fn new<D: Domain>(domain: &D, red: &D::Solution, blue: &D::Solution, o: &DuelOutcome) -> Self {
        let frames = o.video.frames();
        let positions = (0..o.video.len())
            .filter_map(|i| Some([o.video.positions(Side::Red, i)?, o.video.positions(Side::Blue, i)?]))
            .collect();
        Self {
            domain: domain.name().into(),
            red: domain.encode(red),
            blue: domain.encode(blue),
            fitness: o.fitness,
            winner: o.winner,
            completion_step: o.completion_step,
            max_steps: o.max_steps,
            health_remaining: o.health_remaining,
            actions: o.actions.clone(),
            positions,
            frames: frames.into_iter().map(|f| TraceFrame { width: f.width, height: f.height, pixels: f.pixels }).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("trace serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_file(path, self.to_json().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let bytes = read_file(path)?;
        serde_json::from_slice(&bytes).map_err(|e| IoError::Format { at: e.column(), what: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::pusher::{Pusher, PusherGenome, PusherParams};

    #[test]
    fn pusher_trace_round_trips() {
        let d = Pusher::new(PusherParams::default()).unwrap();
        let red = PusherGenome::new([1, 3, 1, 2, 4, 2, 1, 5, 1]).unwrap();
        let blue = PusherGenome::new([1, 1, 1, 1, 3, 1, 1, 1, 1]).unwrap();
        let o = d.evaluate(&red, &blue).unwrap();
        let t = DuelTrace::new(&d, &red, &blue, &o);
        assert_eq!(t.frames.len(), o.video.len());
        assert_eq!(t.positions.len(), o.video.len());
        let back: DuelTrace = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }
}
