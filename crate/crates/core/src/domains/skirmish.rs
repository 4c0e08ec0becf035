//! Grid skirmish between two squads driven by one behavior tree per side.

use std::collections::HashMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bt::{self, bt_tick, chebyshev, Action, BehaviorTree, BtOperator, Observation, UnitKind, UnitView};
use super::{ActionKind, Domain, DomainError, DuelOutcome, Offspring, Side, Video};
use crate::behavior::{DescriptorDomain, Frame};
use crate::rng::{derive_seed, mix64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitStats {
    pub health: i32,
    pub damage: i32,
    pub range: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkirmishParams {
    pub width: i32,
    pub height: i32,
    pub units_per_side: usize,
    pub max_steps: u32,
    pub sight: i32,
    pub melee: UnitStats,
    pub ranged: UnitStats,
    pub seed: u64,
    pub max_leaves: usize,
}

impl Default for SkirmishParams {
    fn default() -> Self {
        Self {
            width: 32,
            height: 32,
            units_per_side: 8,
            max_steps: 64,
            sight: 8,
            melee: UnitStats { health: 8, damage: 2, range: 1 },
            ranged: UnitStats { health: 4, damage: 1, range: 5 },
            seed: 1,
            max_leaves: bt::DEFAULT_MAX_LEAVES,
        }
    }
}

impl SkirmishParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: &str| Err(DomainError::Invalid(format!("skirmish parameters: {m}")));
        if self.width < 12 || self.height < 2 || self.width % 2 != 0 {
            return bad("arena must be at least 12 wide with an even width");
        }
        if self.units_per_side == 0 || self.units_per_side.div_ceil(2) > self.height as usize {
            return bad("units per side must be positive and fit in one column per type");
        }
        if self.max_steps == 0 || self.sight < 1 || self.max_leaves == 0 {
            return bad("max_steps, sight and max_leaves must be positive");
        }
        for s in [self.melee, self.ranged] {
            if s.health < 1 || s.damage < 0 || s.range < 0 {
                return bad("unit health must be positive, damage and range non-negative");
            }
        }
        Ok(())
    }

    pub fn stats(&self, kind: UnitKind) -> UnitStats {
        match kind {
            UnitKind::Melee => self.melee,
            UnitKind::Ranged => self.ranged,
        }
    }

    /// Starting cells of one side in slot order: melee units form the front
    /// column, ranged units a column three cells behind. Blue mirrors Red.
    pub fn layout(&self, side: Side) -> Vec<(UnitKind, i32, i32)> {
        let n = self.units_per_side;
        let melee = n.div_ceil(2);
        let front = self.width / 2 - 4;
        let column = |count: usize, x: i32, kind: UnitKind| {
            (0..count).map(move |i| (kind, x, ((2 * i + 1) * self.height as usize / (2 * count)) as i32))
        };
        column(melee, front, UnitKind::Melee)
            .chain(column(n - melee, front - 3, UnitKind::Ranged))
            .map(|(k, x, y)| if side == Side::Red { (k, x, y) } else { (k, self.width - 1 - x, y) })
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct Unit {
    side: Side,
    slot: usize,
    kind: UnitKind,
    x: i32,
    y: i32,
    health: i32,
    max_health: i32,
}

impl Unit {
    fn alive(&self) -> bool {
        self.health > 0
    }
}

/// Compact per-step unit states, rendered into frames on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub width: i32,
    pub height: i32,
    /// Side and type of every unit, Red units first.
    pub units: Vec<(Side, UnitKind)>,
    /// For every recorded state, `(x, y, health)` per unit.
    pub states: Vec<Vec<(i16, i16, i16)>>,
}

impl Replay {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn intensity(side: Side, kind: UnitKind) -> f64 {
        match (side, kind) {
            (Side::Red, UnitKind::Melee) => 0.33,
            (Side::Red, UnitKind::Ranged) => 0.5,
            (Side::Blue, UnitKind::Melee) => 0.66,
            (Side::Blue, UnitKind::Ranged) => 0.83,
        }
    }

    /// Occupancy image of state `i`; dead units are not drawn.
    pub fn render(&self, i: usize) -> Frame {
        let mut f = Frame::blank(self.width as usize, self.height as usize);
        for (&(side, kind), &(x, y, h)) in self.units.iter().zip(&self.states[i]) {
            if h > 0 {
                f.set(x as usize, y as usize, Self::intensity(side, kind));
            }
        }
        f
    }

    pub fn positions(&self, side: Side, i: usize) -> Vec<(f64, f64)> {
        let (sx, sy) = ((self.width - 1) as f64, (self.height - 1) as f64);
        self.units
            .iter()
            .zip(&self.states[i])
            .filter(|((s, _), _)| *s == side)
            .map(|(_, &(x, y, _))| (x as f64 / sx, y as f64 / sy))
            .collect()
    }
}

/// Runs one duel. Every unit picks its action from the state at the start
/// of the step; damage, moves and target markers are then applied together.
/// A move succeeds only into a cell that was free at the start of the step
/// and that no other unit tried to enter.
pub fn skirmish_evaluate(red: &BehaviorTree, blue: &BehaviorTree, params: &SkirmishParams) -> DuelOutcome {
    let trees = [red, blue];
    let mut units: Vec<Unit> = Vec::with_capacity(2 * params.units_per_side);
    for side in [Side::Red, Side::Blue] {
        for (slot, (kind, x, y)) in params.layout(side).into_iter().enumerate() {
            let h = params.stats(kind).health;
            units.push(Unit { side, slot, kind, x, y, health: h, max_health: h });
        }
    }
    let n = params.units_per_side;
    let total = |units: &[Unit], side: Side| -> i32 { units.iter().filter(|u| u.side == side).map(|u| u.health.max(0)).sum() };
    let initial = [total(&units, Side::Red), total(&units, Side::Blue)];
    let snapshot = |units: &[Unit]| units.iter().map(|u| (u.x as i16, u.y as i16, u.health as i16)).collect::<Vec<_>>();

    let mut replay = Replay {
        width: params.width,
        height: params.height,
        units: units.iter().map(|u| (u.side, u.kind)).collect(),
        states: vec![snapshot(&units)],
    };
    let mut markers: [Option<(i32, i32)>; 2] = [None, None];
    let mut actions: [Vec<ActionKind>; 2] = [Vec::new(), Vec::new()];
    let mut steps = 0;
    let mut views: Vec<UnitView> = Vec::with_capacity(units.len());

    for t in 0..params.max_steps {
        let alive_side = |s: Side| units.iter().any(|u| u.side == s && u.alive());
        if !alive_side(Side::Red) || !alive_side(Side::Blue) {
            break;
        }
        let mut decided: Vec<(usize, Action)> = Vec::with_capacity(units.len());
        for (i, u) in units.iter().enumerate() {
            if !u.alive() {
                continue;
            }
            views.clear();
            // allies then enemies, each in slot order, so both sides see mirrored lists
            for team_side in [u.side, u.side.opposite()] {
                for (j, o) in units.iter().enumerate() {
                    if j != i && o.side == team_side && o.alive() && chebyshev(u.x, u.y, o.x, o.y) <= params.sight {
                        views.push(view(o, o.side == u.side));
                    }
                }
            }
            let obs = Observation {
                me: view(u, true),
                others: &views,
                marker: markers[u.side.index()],
                reach: params.stats(u.kind).range,
                sight: params.sight,
                width: params.width,
                height: params.height,
                noise: mix64(derive_seed(params.seed, &[t as u64, u.slot as u64])),
            };
            let a = bt_tick(trees[u.side.index()], &obs);
            actions[u.side.index()].push(a.kind());
            decided.push((i, a));
        }

        let mut damage = vec![0; units.len()];
        let mut claims: HashMap<(i32, i32), u32> = HashMap::new();
        let occupied: std::collections::HashSet<(i32, i32)> =
            units.iter().filter(|u| u.alive()).map(|u| (u.x, u.y)).collect();
        for &(i, a) in &decided {
            let u = units[i];
            match a {
                Action::Attack { slot } => {
                    let target = if u.side == Side::Red { n + slot } else { slot };
                    damage[target] += params.stats(u.kind).damage;
                }
                Action::Move { dx, dy } | Action::GoTo { dx, dy } => {
                    *claims.entry((u.x + dx, u.y + dy)).or_default() += 1;
                }
                Action::SetTarget { x, y } => markers[u.side.index()] = Some((x, y)),
                Action::Stand => {}
            }
        }
        for (u, d) in units.iter_mut().zip(&damage) {
            u.health = (u.health - d).max(0);
        }
        for &(i, a) in &decided {
            if let Action::Move { dx, dy } | Action::GoTo { dx, dy } = a {
                let u = &mut units[i];
                let dest = (u.x + dx, u.y + dy);
                if u.alive() && !occupied.contains(&dest) && claims[&dest] == 1 {
                    (u.x, u.y) = dest;
                }
            }
        }
        steps = t + 1;
        replay.states.push(snapshot(&units));
    }

    let remaining = [total(&units, Side::Red), total(&units, Side::Blue)];
    let depleted = |s: usize| (initial[s] - remaining[s]) as f64 / initial[s] as f64;
    let fitness = [depleted(1), depleted(0)];
    let winner = match (remaining[0] > 0, remaining[1] > 0) {
        (true, false) => Some(Side::Red),
        (false, true) => Some(Side::Blue),
        _ if fitness[0] > fitness[1] => Some(Side::Red),
        _ if fitness[1] > fitness[0] => Some(Side::Blue),
        _ => None,
    };
    DuelOutcome {
        fitness,
        video: Video::Skirmish(Arc::new(replay)),
        actions,
        health_remaining: [remaining[0] as f64 / initial[0] as f64, remaining[1] as f64 / initial[1] as f64],
        completion_step: steps,
        max_steps: params.max_steps,
        winner,
    }
}

fn view(u: &Unit, ally: bool) -> UnitView {
    UnitView { slot: u.slot, ally, kind: u.kind, x: u.x, y: u.y, health: u.health, max_health: u.max_health }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Skirmish {
    pub params: SkirmishParams,
}

impl Skirmish {
    pub fn new(params: SkirmishParams) -> Result<Self, DomainError> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { params: SkirmishParams { seed, ..self.params.clone() } }
    }
}

impl Domain for Skirmish {
    type Solution = BehaviorTree;

    fn name(&self) -> &'static str {
        "skirmish"
    }

    fn random_solution(&self, _side: Side, rng: &mut ChaCha8Rng) -> BehaviorTree {
        bt::random_tree(rng)
    }

    fn vary(&self, first: &BehaviorTree, second: &BehaviorTree, rng: &mut ChaCha8Rng) -> Offspring<BehaviorTree> {
        let r = bt::bt_variation(first, second, self.params.max_leaves, rng);
        Offspring { solution: r.tree, crossover: r.applied == BtOperator::Crossover }
    }

    fn evaluate(&self, red: &BehaviorTree, blue: &BehaviorTree) -> Result<DuelOutcome, DomainError> {
        red.validate(self.params.max_leaves)?;
        blue.validate(self.params.max_leaves)?;
        Ok(skirmish_evaluate(red, blue, &self.params))
    }

    fn solution_size(&self, s: &BehaviorTree) -> u32 {
        s.node_count() as u32
    }

    fn genome_values(&self, s: &BehaviorTree) -> Vec<f64> {
        s.leaf_codes().into_iter().map(|c| c as f64).collect()
    }

    fn descriptor_domain(&self) -> DescriptorDomain {
        DescriptorDomain {
            units_per_side: self.params.units_per_side,
            gene_range: (0.0, (bt::catalog().len() - 1) as f64),
            external_dim: 0,
        }
    }

    fn encode(&self, s: &BehaviorTree) -> String {
        s.to_string()
    }

    fn decode(&self, text: &str) -> Result<BehaviorTree, DomainError> {
        bt::parse_tree(text, self.params.max_leaves)
    }

    fn duel_seed(&self) -> u64 {
        self.params.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tree(s: &str) -> BehaviorTree {
        bt::parse_tree(s, 32).unwrap()
    }

    #[test]
    fn default_layout_is_mirrored() {
        let p = SkirmishParams::default();
        let red = p.layout(Side::Red);
        let blue = p.layout(Side::Blue);
        assert_eq!(red.len(), 8);
        for (r, b) in red.iter().zip(&blue) {
            assert_eq!(r.0, b.0);
            assert_eq!(r.1, 31 - b.1);
            assert_eq!(r.2, b.2);
        }
        assert_eq!(red[0], (UnitKind::Melee, 12, 4));
        assert_eq!(red[4], (UnitKind::Ranged, 9, 4));
    }

    #[test]
    fn stand_vs_stand_times_out() {
        let p = SkirmishParams::default();
        let o = skirmish_evaluate(&BehaviorTree::stand(), &BehaviorTree::stand(), &p);
        assert_eq!(o.fitness, [0.0, 0.0]);
        assert_eq!(o.completion_step, 64);
        assert_eq!(o.video.len(), 65);
        assert_eq!(o.winner, None);
        assert_eq!(o.actions[0].len(), 64 * 8);
        assert!(o.actions[0].iter().all(|&a| a == ActionKind::Stand));
    }

    #[test]
    fn aggressor_wipes_out_passive_side() {
        let p = SkirmishParams::default();
        let red = tree("(failwith (attack closest any) (move toward enemy closest any))");
        let o = skirmish_evaluate(&red, &BehaviorTree::stand(), &p);
        assert_eq!(o.fitness_red(), 1.0);
        assert_eq!(o.fitness_blue(), 0.0);
        assert!(o.completion_step < 64);
        assert_eq!(o.winner, Some(Side::Red));
        assert_eq!(o.health_remaining, [1.0, 0.0]);
    }

    #[test]
    fn identical_trees_are_symmetric() {
        let p = SkirmishParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..20 {
            let p = SkirmishParams { seed, ..p.clone() };
            let t = bt::random_tree(&mut rng);
            let o = skirmish_evaluate(&t, &t, &p);
            assert_eq!(o.fitness_red(), o.fitness_blue(), "{t}");
            assert_eq!(o.health_remaining[0], o.health_remaining[1]);
        }
        let t = tree("(failwith (attack random any) (set-target enemy random any) (goto 1) (move toward enemy random any))");
        for seed in 0..20 {
            let o = skirmish_evaluate(&t, &t, &SkirmishParams { seed, ..p.clone() });
            assert_eq!(o.fitness_red(), o.fitness_blue());
        }
    }

    #[test]
    fn fitness_bounds_and_determinism() {
        let p = SkirmishParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = bt::random_tree(&mut rng);
            let b = bt::random_tree(&mut rng);
            let o = skirmish_evaluate(&a, &b, &p);
            for f in o.fitness {
                assert!((0.0..=1.0).contains(&f));
            }
            let again = skirmish_evaluate(&a, &b, &p);
            assert_eq!(o.fitness, again.fitness);
            assert_eq!(o.actions, again.actions);
        }
    }

    #[test]
    fn units_never_share_a_cell() {
        let p = SkirmishParams::default();
        let t = tree("(failwith (attack closest any) (move toward enemy closest any) (move toward enemy farthest melee))");
        let o = skirmish_evaluate(&t, &tree("(failwith (attack weakest any) (move toward enemy random any))"), &p);
        let Video::Skirmish(r) = &o.video else { panic!() };
        for state in &r.states {
            let mut seen = std::collections::HashSet::new();
            for &(x, y, h) in state {
                assert!((0..32).contains(&x) && (0..32).contains(&y));
                if h > 0 {
                    assert!(seen.insert((x, y)), "two living units on one cell");
                }
            }
        }
    }

    #[test]
    fn frames_show_units_with_shades() {
        let p = SkirmishParams::default();
        let o = skirmish_evaluate(&BehaviorTree::stand(), &BehaviorTree::stand(), &p);
        let f = o.video.frame(0);
        assert_eq!((f.width, f.height), (32, 32));
        assert_eq!(f.get(12, 4), 0.33);
        assert_eq!(f.get(9, 4), 0.5);
        assert_eq!(f.get(19, 4), 0.66);
        assert_eq!(f.get(22, 4), 0.83);
        assert_eq!(f.pixels.iter().filter(|&&v| v > 0.0).count(), 16);
    }

    #[test]
    fn positions_are_normalized() {
        let p = SkirmishParams::default();
        let o = skirmish_evaluate(&BehaviorTree::stand(), &BehaviorTree::stand(), &p);
        let pos = o.video.positions(Side::Blue, 3).unwrap();
        assert_eq!(pos.len(), 8);
        assert_eq!(pos[0], (19.0 / 31.0, 4.0 / 31.0));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Skirmish::new(SkirmishParams { width: 5, ..Default::default() }).is_err());
        assert!(Skirmish::new(SkirmishParams { units_per_side: 0, ..Default::default() }).is_err());
        assert!(Skirmish::new(SkirmishParams::default()).is_ok());
    }
}
