//! Behavior trees for skirmish units: catalog, interpreter, text codec and
//! variation operators.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ActionKind, DomainError};
use crate::rng::mix64;

pub const DEFAULT_MAX_LEAVES: usize = 32;
const REDRAWS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnitKind {
    Melee,
    Ranged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Team {
    Ally,
    Enemy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pick {
    Closest,
    Farthest,
    Weakest,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KindFilter {
    Any,
    Melee,
    Ranged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Who {
    Myself,
    Ally,
    Enemy,
}

impl KindFilter {
    fn accepts(self, k: UnitKind) -> bool {
        match self {
            KindFilter::Any => true,
            KindFilter::Melee => k == UnitKind::Melee,
            KindFilter::Ranged => k == UnitKind::Ranged,
        }
    }
}

/// Action atomics. `GoTo` thresholds are in quarters of the sight range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionLeaf {
    Stand,
    Attack { pick: Pick, filter: KindFilter },
    Move { toward: bool, team: Team, pick: Pick, filter: KindFilter },
    GoTo { threshold: u8 },
    SetTarget { team: Team, pick: Pick, filter: KindFilter },
}

/// Condition atomics. `IsDying` thresholds are in quarters of max health.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    InSight { team: Team, filter: KindFilter },
    InReach { team: Team, filter: KindFilter },
    IsDying { who: Who, threshold: u8 },
    IsType { kind: UnitKind },
    IsSetTarget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leaf {
    Action(ActionLeaf),
    Condition(Condition),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Control {
    Sequence,
    Failwith,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Control(Control, Vec<Node>),
    Leaf(Leaf),
}

impl Node {
    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Control(_, c) => c.iter().map(Node::leaf_count).sum(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Control(_, c) => 1 + c.iter().map(Node::node_count).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Control(_, c) => 1 + c.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            Node::Leaf(l) => out.push(l),
            Node::Control(_, c) => c.iter().for_each(|n| n.leaves(out)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BehaviorTree {
    root: Node,
}

impl BehaviorTree {
    pub fn new(root: Node, max_leaves: usize) -> Result<Self, DomainError> {
        validate(&root, max_leaves)?;
        Ok(Self { root })
    }

    pub fn leaf(leaf: Leaf) -> Self {
        Self { root: Node::Leaf(leaf) }
    }

    pub fn stand() -> Self {
        Self::leaf(Leaf::Action(ActionLeaf::Stand))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Catalog indices of the leaves in depth-first order.
    pub fn leaf_codes(&self) -> Vec<usize> {
        let mut leaves = Vec::new();
        self.root.leaves(&mut leaves);
        leaves.into_iter().map(leaf_code).collect()
    }

    pub fn validate(&self, max_leaves: usize) -> Result<(), DomainError> {
        validate(&self.root, max_leaves)
    }
}

pub fn validate(root: &Node, max_leaves: usize) -> Result<(), DomainError> {
    fn walk(n: &Node) -> Result<(), DomainError> {
        match n {
            Node::Control(_, c) if c.is_empty() => Err(DomainError::Invalid("control node without children".into())),
            Node::Control(_, c) => c.iter().try_for_each(walk),
            Node::Leaf(l) if catalog_index(l).is_none() => Err(DomainError::Invalid(format!("leaf {l:?} not in catalog"))),
            Node::Leaf(_) => Ok(()),
        }
    }
    walk(root)?;
    let leaves = root.leaf_count();
    if leaves > max_leaves {
        return Err(DomainError::Invalid(format!("{leaves} leaves exceed the budget of {max_leaves}")));
    }
    Ok(())
}

const PICKS: [Pick; 4] = [Pick::Closest, Pick::Farthest, Pick::Weakest, Pick::Random];
const FILTERS: [KindFilter; 3] = [KindFilter::Any, KindFilter::Melee, KindFilter::Ranged];
const TEAMS: [Team; 2] = [Team::Ally, Team::Enemy];
const WHOS: [Who; 3] = [Who::Myself, Who::Ally, Who::Enemy];
const KINDS: [UnitKind; 2] = [UnitKind::Melee, UnitKind::Ranged];
const GOTO_THRESHOLDS: std::ops::RangeInclusive<u8> = 0..=3;
const DYING_THRESHOLDS: std::ops::RangeInclusive<u8> = 1..=3;
const LEAF_KINDS: usize = 10;

/// Every leaf atomic, in a fixed order.
pub fn catalog() -> &'static [Leaf] {
    static CATALOG: OnceLock<Vec<Leaf>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let mut out = Vec::new();
        for k in 0..LEAF_KINDS {
            out.extend(leaves_of_kind(k));
        }
        out
    })
}

fn leaves_of_kind(kind: usize) -> Vec<Leaf> {
    use Leaf::{Action as A, Condition as C};
    let mut v = Vec::new();
    match kind {
        0 => v.push(A(ActionLeaf::Stand)),
        1 => {
            for pick in PICKS {
                for filter in FILTERS {
                    v.push(A(ActionLeaf::Attack { pick, filter }));
                }
            }
        }
        2 => {
            for toward in [true, false] {
                for team in TEAMS {
                    for pick in PICKS {
                        for filter in FILTERS {
                            v.push(A(ActionLeaf::Move { toward, team, pick, filter }));
                        }
                    }
                }
            }
        }
        3 => GOTO_THRESHOLDS.for_each(|threshold| v.push(A(ActionLeaf::GoTo { threshold }))),
        4 => {
            for team in TEAMS {
                for pick in PICKS {
                    for filter in FILTERS {
                        v.push(A(ActionLeaf::SetTarget { team, pick, filter }));
                    }
                }
            }
        }
        5 | 6 => {
            for team in TEAMS {
                for filter in FILTERS {
                    v.push(C(if kind == 5 { Condition::InSight { team, filter } } else { Condition::InReach { team, filter } }));
                }
            }
        }
        7 => {
            for who in WHOS {
                DYING_THRESHOLDS.for_each(|threshold| v.push(C(Condition::IsDying { who, threshold })));
            }
        }
        8 => KINDS.iter().for_each(|&kind| v.push(C(Condition::IsType { kind }))),
        9 => v.push(C(Condition::IsSetTarget)),
        _ => unreachable!("leaf kind {kind}"),
    }
    v
}

fn kind_of(leaf: &Leaf) -> usize {
    match leaf {
        Leaf::Action(ActionLeaf::Stand) => 0,
        Leaf::Action(ActionLeaf::Attack { .. }) => 1,
        Leaf::Action(ActionLeaf::Move { .. }) => 2,
        Leaf::Action(ActionLeaf::GoTo { .. }) => 3,
        Leaf::Action(ActionLeaf::SetTarget { .. }) => 4,
        Leaf::Condition(Condition::InSight { .. }) => 5,
        Leaf::Condition(Condition::InReach { .. }) => 6,
        Leaf::Condition(Condition::IsDying { .. }) => 7,
        Leaf::Condition(Condition::IsType { .. }) => 8,
        Leaf::Condition(Condition::IsSetTarget) => 9,
    }
}

fn catalog_index(leaf: &Leaf) -> Option<usize> {
    catalog().iter().position(|l| l == leaf)
}

/// Position of a leaf in [`catalog`].
pub fn leaf_code(leaf: &Leaf) -> usize {
    catalog_index(leaf).expect("validated leaf")
}

// ---------------------------------------------------------------------------
// interpreter

/// A unit as seen by the acting unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitView {
    /// Index of the unit within its own side.
    pub slot: usize,
    pub ally: bool,
    pub kind: UnitKind,
    pub x: i32,
    pub y: i32,
    pub health: i32,
    pub max_health: i32,
}

/// Local view of the acting unit.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub me: UnitView,
    /// Other living units within sight range.
    pub others: &'a [UnitView],
    pub marker: Option<(i32, i32)>,
    pub reach: i32,
    pub sight: i32,
    pub width: i32,
    pub height: i32,
    /// Per-unit, per-step value behind random target picks.
    pub noise: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Stand,
    /// Attack the enemy with this side-local slot.
    Attack { slot: usize },
    Move { dx: i32, dy: i32 },
    GoTo { dx: i32, dy: i32 },
    SetTarget { x: i32, y: i32 },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Stand => ActionKind::Stand,
            Action::Attack { .. } => ActionKind::Attack,
            Action::Move { .. } => ActionKind::Move,
            Action::GoTo { .. } => ActionKind::GoTo,
            Action::SetTarget { .. } => ActionKind::SetTarget,
        }
    }
}

pub fn chebyshev(ax: i32, ay: i32, bx: i32, by: i32) -> i32 {
    (ax - bx).abs().max((ay - by).abs())
}

enum Status {
    Invalid,
    Valid,
    Act(Action),
}

/// Leftmost depth-first traversal that stops at the first valid action.
pub fn bt_tick(tree: &BehaviorTree, obs: &Observation<'_>) -> Action {
    let mut leaf_index = 0u64;
    match tick_node(&tree.root, obs, &mut leaf_index) {
        Status::Act(a) => a,
        Status::Valid | Status::Invalid => Action::Stand,
    }
}

fn tick_node(node: &Node, obs: &Observation<'_>, leaf_index: &mut u64) -> Status {
    match node {
        Node::Leaf(l) => {
            *leaf_index += 1;
            tick_leaf(l, obs, *leaf_index)
        }
        Node::Control(Control::Sequence, children) => {
            for c in children {
                match tick_node(c, obs, leaf_index) {
                    Status::Valid => {}
                    other => return other,
                }
            }
            Status::Valid
        }
        Node::Control(Control::Failwith, children) => {
            for c in children {
                match tick_node(c, obs, leaf_index) {
                    Status::Invalid => {}
                    other => return other,
                }
            }
            Status::Invalid
        }
    }
}

fn tick_leaf(leaf: &Leaf, obs: &Observation<'_>, leaf_index: u64) -> Status {
    let me = &obs.me;
    let valid = |b: bool| if b { Status::Valid } else { Status::Invalid };
    let act = |a: Option<Action>| a.map_or(Status::Invalid, Status::Act);
    match *leaf {
        Leaf::Condition(c) => valid(match c {
            Condition::InSight { team, filter } => candidates(obs, team, filter, obs.sight).next().is_some(),
            Condition::InReach { team, filter } => candidates(obs, team, filter, obs.reach).next().is_some(),
            Condition::IsDying { who, threshold } => {
                let dying = |u: &UnitView| 4 * u.health < threshold as i32 * u.max_health;
                match who {
                    Who::Myself => dying(me),
                    Who::Ally => candidates(obs, Team::Ally, KindFilter::Any, obs.sight).any(dying),
                    Who::Enemy => candidates(obs, Team::Enemy, KindFilter::Any, obs.sight).any(dying),
                }
            }
            Condition::IsType { kind } => me.kind == kind,
            Condition::IsSetTarget => obs.marker.is_some(),
        }),
        Leaf::Action(a) => act(match a {
            ActionLeaf::Stand => Some(Action::Stand),
            ActionLeaf::Attack { pick, filter } => {
                choose(obs, Team::Enemy, filter, obs.reach, pick, leaf_index).map(|u| Action::Attack { slot: u.slot })
            }
            ActionLeaf::Move { toward, team, pick, filter } => {
                choose(obs, team, filter, obs.sight, pick, leaf_index).and_then(|u| {
                    let (sx, sy) = ((u.x - me.x).signum(), (u.y - me.y).signum());
                    let (dx, dy) = if toward { (sx, sy) } else { (-sx, -sy) };
                    clamp_step(obs, dx, dy).map(|(dx, dy)| Action::Move { dx, dy })
                })
            }
            ActionLeaf::GoTo { threshold } => obs.marker.and_then(|(mx, my)| {
                let d = chebyshev(me.x, me.y, mx, my);
                if d <= threshold as i32 * obs.sight / 4 {
                    return None;
                }
                clamp_step(obs, (mx - me.x).signum(), (my - me.y).signum()).map(|(dx, dy)| Action::GoTo { dx, dy })
            }),
            ActionLeaf::SetTarget { team, pick, filter } => {
                choose(obs, team, filter, obs.sight, pick, leaf_index).map(|u| Action::SetTarget { x: u.x, y: u.y })
            }
        }),
    }
}

/// Drops the components of a king move that would leave the arena.
fn clamp_step(obs: &Observation<'_>, dx: i32, dy: i32) -> Option<(i32, i32)> {
    let nx = obs.me.x + dx;
    let ny = obs.me.y + dy;
    let dx = if (0..obs.width).contains(&nx) { dx } else { 0 };
    let dy = if (0..obs.height).contains(&ny) { dy } else { 0 };
    (dx != 0 || dy != 0).then_some((dx, dy))
}

fn candidates<'a>(obs: &'a Observation<'a>, team: Team, filter: KindFilter, range: i32) -> impl Iterator<Item = &'a UnitView> + 'a {
    let me = obs.me;
    obs.others.iter().filter(move |u| {
        u.ally == (team == Team::Ally) && filter.accepts(u.kind) && chebyshev(me.x, me.y, u.x, u.y) <= range
    })
}

fn choose<'a>(obs: &'a Observation<'a>, team: Team, filter: KindFilter, range: i32, pick: Pick, leaf_index: u64) -> Option<&'a UnitView> {
    let me = obs.me;
    let dist = |u: &UnitView| chebyshev(me.x, me.y, u.x, u.y);
    let mut it = candidates(obs, team, filter, range);
    match pick {
        // min_by_key/max_by_key pick the first/last extreme; ties must go to the first
        Pick::Closest => it.fold(None, |best: Option<&UnitView>, u| match best {
            Some(b) if dist(b) <= dist(u) => Some(b),
            _ => Some(u),
        }),
        Pick::Farthest => it.fold(None, |best: Option<&UnitView>, u| match best {
            Some(b) if dist(b) >= dist(u) => Some(b),
            _ => Some(u),
        }),
        Pick::Weakest => it.fold(None, |best: Option<&UnitView>, u| match best {
            Some(b) if (b.health, dist(b)) <= (u.health, dist(u)) => Some(b),
            _ => Some(u),
        }),
        Pick::Random => {
            let all: Vec<&UnitView> = it.by_ref().collect();
            if all.is_empty() {
                None
            } else {
                let r = mix64(obs.noise ^ leaf_index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
                Some(all[(r % all.len() as u64) as usize])
            }
        }
    }
}

// ---------------------------------------------------------------------------
// text codec

impl fmt::Display for Pick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pick::Closest => "closest",
            Pick::Farthest => "farthest",
            Pick::Weakest => "weakest",
            Pick::Random => "random",
        })
    }
}

impl fmt::Display for KindFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KindFilter::Any => "any",
            KindFilter::Melee => "melee",
            KindFilter::Ranged => "ranged",
        })
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Team::Ally => "ally",
            Team::Enemy => "enemy",
        })
    }
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leaf::Action(a) => match a {
                ActionLeaf::Stand => write!(f, "(stand)"),
                ActionLeaf::Attack { pick, filter } => write!(f, "(attack {pick} {filter})"),
                ActionLeaf::Move { toward, team, pick, filter } => {
                    let dir = if *toward { "toward" } else { "away" };
                    write!(f, "(move {dir} {team} {pick} {filter})")
                }
                ActionLeaf::GoTo { threshold } => write!(f, "(goto {threshold})"),
                ActionLeaf::SetTarget { team, pick, filter } => write!(f, "(set-target {team} {pick} {filter})"),
            },
            Leaf::Condition(c) => match c {
                Condition::InSight { team, filter } => write!(f, "(in-sight {team} {filter})"),
                Condition::InReach { team, filter } => write!(f, "(in-reach {team} {filter})"),
                Condition::IsDying { who, threshold } => {
                    let who = match who {
                        Who::Myself => "self",
                        Who::Ally => "ally",
                        Who::Enemy => "enemy",
                    };
                    write!(f, "(dying {who} {threshold})")
                }
                Condition::IsType { kind } => {
                    write!(f, "(is-type {})", if *kind == UnitKind::Melee { "melee" } else { "ranged" })
                }
                Condition::IsSetTarget => write!(f, "(target-set)"),
            },
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Leaf(l) => write!(f, "{l}"),
            Node::Control(c, children) => {
                f.write_str(if *c == Control::Sequence { "(seq" } else { "(failwith" })?;
                for ch in children {
                    write!(f, " {ch}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for BehaviorTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(s: &str) -> Vec<String> {
    s.replace('(', " ( ").replace(')', " ) ").split_whitespace().map(str::to_owned).collect()
}

fn read_sexp(tokens: &[String], pos: &mut usize) -> Result<Sexp, DomainError> {
    let tok = tokens.get(*pos).ok_or_else(|| DomainError::Parse("unexpected end of input".into()))?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos).map(String::as_str) {
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(read_sexp(tokens, pos)?),
                    None => return Err(DomainError::Parse("unclosed parenthesis".into())),
                }
            }
        }
        ")" => Err(DomainError::Parse("unexpected ')'".into())),
        atom => Ok(Sexp::Atom(atom.to_owned())),
    }
}

fn parse_err<T>(msg: impl Into<String>) -> Result<T, DomainError> {
    Err(DomainError::Parse(msg.into()))
}

fn atom(s: &Sexp) -> Result<&str, DomainError> {
    match s {
        Sexp::Atom(a) => Ok(a),
        Sexp::List(_) => parse_err("expected an atom"),
    }
}

fn parse_pick(s: &Sexp) -> Result<Pick, DomainError> {
    match atom(s)? {
        "closest" => Ok(Pick::Closest),
        "farthest" => Ok(Pick::Farthest),
        "weakest" => Ok(Pick::Weakest),
        "random" => Ok(Pick::Random),
        other => parse_err(format!("unknown target qualifier {other}")),
    }
}

fn parse_filter(s: &Sexp) -> Result<KindFilter, DomainError> {
    match atom(s)? {
        "any" => Ok(KindFilter::Any),
        "melee" => Ok(KindFilter::Melee),
        "ranged" => Ok(KindFilter::Ranged),
        other => parse_err(format!("unknown unit filter {other}")),
    }
}

fn parse_team(s: &Sexp) -> Result<Team, DomainError> {
    match atom(s)? {
        "ally" => Ok(Team::Ally),
        "enemy" => Ok(Team::Enemy),
        other => parse_err(format!("unknown team {other}")),
    }
}

fn parse_u8(s: &Sexp) -> Result<u8, DomainError> {
    atom(s)?.parse().or_else(|_| parse_err("expected a small integer"))
}

fn to_node(s: &Sexp) -> Result<Node, DomainError> {
    let items = match s {
        Sexp::List(items) if !items.is_empty() => items,
        _ => return parse_err("expected a non-empty list"),
    };
    let head = atom(&items[0])?;
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            parse_err(format!("{head} takes {n} arguments, got {}", args.len()))
        }
    };
    use Leaf::{Action as A, Condition as C};
    let leaf = match head {
        "seq" | "failwith" => {
            let kind = if head == "seq" { Control::Sequence } else { Control::Failwith };
            return Ok(Node::Control(kind, args.iter().map(to_node).collect::<Result<_, _>>()?));
        }
        "stand" => arity(0).map(|_| A(ActionLeaf::Stand))?,
        "attack" => {
            arity(2)?;
            A(ActionLeaf::Attack { pick: parse_pick(&args[0])?, filter: parse_filter(&args[1])? })
        }
        "move" => {
            arity(4)?;
            let toward = match atom(&args[0])? {
                "toward" => true,
                "away" => false,
                other => return parse_err(format!("unknown direction {other}")),
            };
            A(ActionLeaf::Move {
                toward,
                team: parse_team(&args[1])?,
                pick: parse_pick(&args[2])?,
                filter: parse_filter(&args[3])?,
            })
        }
        "goto" => {
            arity(1)?;
            A(ActionLeaf::GoTo { threshold: parse_u8(&args[0])? })
        }
        "set-target" => {
            arity(3)?;
            A(ActionLeaf::SetTarget { team: parse_team(&args[0])?, pick: parse_pick(&args[1])?, filter: parse_filter(&args[2])? })
        }
        "in-sight" | "in-reach" => {
            arity(2)?;
            let (team, filter) = (parse_team(&args[0])?, parse_filter(&args[1])?);
            C(if head == "in-sight" { Condition::InSight { team, filter } } else { Condition::InReach { team, filter } })
        }
        "dying" => {
            arity(2)?;
            let who = match atom(&args[0])? {
                "self" => Who::Myself,
                "ally" => Who::Ally,
                "enemy" => Who::Enemy,
                other => return parse_err(format!("unknown subject {other}")),
            };
            C(Condition::IsDying { who, threshold: parse_u8(&args[1])? })
        }
        "is-type" => {
            arity(1)?;
            let kind = match atom(&args[0])? {
                "melee" => UnitKind::Melee,
                "ranged" => UnitKind::Ranged,
                other => return parse_err(format!("unknown unit type {other}")),
            };
            C(Condition::IsType { kind })
        }
        "target-set" => arity(0).map(|_| C(Condition::IsSetTarget))?,
        other => return parse_err(format!("unknown node {other}")),
    };
    Ok(Node::Leaf(leaf))
}

/// Parses the s-expression form produced by `Display`.
pub fn parse_tree(text: &str, max_leaves: usize) -> Result<BehaviorTree, DomainError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let sexp = read_sexp(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return parse_err("trailing input after tree");
    }
    BehaviorTree::new(to_node(&sexp)?, max_leaves)
}

// ---------------------------------------------------------------------------
// random trees

pub fn random_leaf<R: Rng>(rng: &mut R) -> Leaf {
    random_leaf_of_kind(rng.gen_range(0..LEAF_KINDS), rng)
}

fn random_leaf_of_kind<R: Rng>(kind: usize, rng: &mut R) -> Leaf {
    let options = leaves_of_kind(kind);
    options[rng.gen_range(0..options.len())]
}

fn random_control<R: Rng>(rng: &mut R) -> Control {
    if rng.gen_bool(0.5) {
        Control::Sequence
    } else {
        Control::Failwith
    }
}

fn random_subtree<R: Rng>(rng: &mut R, depth: usize, leaves: usize) -> Node {
    if leaves == 1 {
        return Node::Leaf(random_leaf(rng));
    }
    let control = random_control(rng);
    if depth <= 2 {
        return Node::Control(control, (0..leaves).map(|_| Node::Leaf(random_leaf(rng))).collect());
    }
    // split the leaves over 2..=4 children
    let parts = rng.gen_range(2..=leaves.min(4));
    let mut sizes = vec![1; parts];
    for _ in parts..leaves {
        sizes[rng.gen_range(0..parts)] += 1;
    }
    Node::Control(control, sizes.into_iter().map(|n| random_subtree(rng, depth - 1, n)).collect())
}

/// A random tree of depth at most 3 with 1 to 8 leaves.
pub fn random_tree<R: Rng>(rng: &mut R) -> BehaviorTree {
    let leaves = rng.gen_range(1..=8);
    BehaviorTree { root: random_subtree(rng, 3, leaves) }
}

// ---------------------------------------------------------------------------
// variation

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BtOperator {
    Delete,
    Add,
    MutateParams,
    Replace,
    Crossover,
}

impl BtOperator {
    pub const ALL: [BtOperator; 5] =
        [BtOperator::Delete, BtOperator::Add, BtOperator::MutateParams, BtOperator::Replace, BtOperator::Crossover];

    /// Selection probabilities, in percent.
    pub const WEIGHTS: [u32; 5] = [35, 21, 7, 7, 30];
}

pub fn draw_operator<R: Rng>(rng: &mut R) -> BtOperator {
    let mut u = rng.gen_range(0..100);
    for (op, w) in BtOperator::ALL.into_iter().zip(BtOperator::WEIGHTS) {
        if u < w {
            return op;
        }
        u -= w;
    }
    unreachable!("weights sum to 100")
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationReport {
    pub tree: BehaviorTree,
    /// Operator drawn first.
    pub drawn: BtOperator,
    /// Operator that produced `tree`.
    pub applied: BtOperator,
}

type Path = Vec<usize>;

fn paths(node: &Node) -> Vec<Path> {
    fn walk(n: &Node, cur: &mut Path, out: &mut Vec<Path>) {
        out.push(cur.clone());
        if let Node::Control(_, c) = n {
            for (i, ch) in c.iter().enumerate() {
                cur.push(i);
                walk(ch, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(node, &mut Vec::new(), &mut out);
    out
}

fn node_at<'a>(mut n: &'a Node, path: &[usize]) -> &'a Node {
    for &i in path {
        match n {
            Node::Control(_, c) => n = &c[i],
            Node::Leaf(_) => panic!("path walks through a leaf"),
        }
    }
    n
}

fn node_at_mut<'a>(mut n: &'a mut Node, path: &[usize]) -> &'a mut Node {
    for &i in path {
        match n {
            Node::Control(_, c) => n = &mut c[i],
            Node::Leaf(_) => panic!("path walks through a leaf"),
        }
    }
    n
}

fn pick_path<R: Rng>(candidates: &[Path], rng: &mut R) -> Option<Path> {
    (!candidates.is_empty()).then(|| candidates[rng.gen_range(0..candidates.len())].clone())
}

/// Inserts `new` next to a random node: as an extra child of a control
/// node, or by wrapping a leaf in a fresh control node.
fn insert_somewhere<R: Rng>(root: &mut Node, new: Node, rng: &mut R) {
    let all = paths(root);
    let path = pick_path(&all, rng).expect("tree has a root");
    let target = node_at_mut(root, &path);
    match target {
        Node::Control(_, children) => {
            let at = rng.gen_range(0..=children.len());
            children.insert(at, new);
        }
        Node::Leaf(_) => {
            let old = std::mem::replace(target, Node::Leaf(Leaf::Action(ActionLeaf::Stand)));
            let control = random_control(rng);
            let children = if rng.gen_bool(0.5) { vec![old, new] } else { vec![new, old] };
            *target = Node::Control(control, children);
        }
    }
}

/// Applies one operator. Returns the new root and the operator actually
/// used: deletion falls back to a parameter mutation when no subtree can
/// be removed.
pub fn apply_operator<R: Rng>(root: &Node, other: &Node, op: BtOperator, rng: &mut R) -> (Node, BtOperator) {
    let mut out = root.clone();
    match op {
        BtOperator::Delete => {
            let removable: Vec<Path> = paths(root)
                .into_iter()
                .filter(|p| {
                    !p.is_empty() && matches!(node_at(root, &p[..p.len() - 1]), Node::Control(_, c) if c.len() > 1)
                })
                .collect();
            match pick_path(&removable, rng) {
                Some(p) => {
                    let (last, parent) = p.split_last().expect("non-root");
                    if let Node::Control(_, c) = node_at_mut(&mut out, parent) {
                        c.remove(*last);
                    }
                }
                None => return apply_operator(root, other, BtOperator::MutateParams, rng),
            }
        }
        BtOperator::Add => insert_somewhere(&mut out, Node::Leaf(random_leaf(rng)), rng),
        BtOperator::MutateParams => {
            let all = paths(root);
            let p = pick_path(&all, rng).expect("tree has a root");
            match node_at_mut(&mut out, &p) {
                Node::Control(c, _) => {
                    *c = if *c == Control::Sequence { Control::Failwith } else { Control::Sequence };
                }
                Node::Leaf(l) => *l = random_leaf_of_kind(kind_of(l), rng),
            }
        }
        BtOperator::Replace => {
            let leaves: Vec<Path> = paths(root).into_iter().filter(|p| matches!(node_at(root, p), Node::Leaf(_))).collect();
            let p = pick_path(&leaves, rng).expect("tree has a leaf");
            *node_at_mut(&mut out, &p) = Node::Leaf(random_leaf(rng));
        }
        BtOperator::Crossover => {
            let donor_paths = paths(other);
            let p = pick_path(&donor_paths, rng).expect("tree has a root");
            insert_somewhere(&mut out, node_at(other, &p).clone(), rng);
        }
    }
    (out, op)
}

/// Draws one operator and applies it. A result over the leaf budget is
/// discarded and a fresh operator drawn, up to ten times; after that a
/// deletion is applied, which never grows the tree.
pub fn bt_variation<R: Rng>(first: &BehaviorTree, second: &BehaviorTree, max_leaves: usize, rng: &mut R) -> VariationReport {
    let drawn = draw_operator(rng);
    let mut op = drawn;
    for _ in 0..REDRAWS {
        let (root, applied) = apply_operator(&first.root, &second.root, op, rng);
        if root.leaf_count() <= max_leaves {
            return VariationReport { tree: BehaviorTree { root }, drawn, applied };
        }
        op = draw_operator(rng);
    }
    let (root, applied) = apply_operator(&first.root, &second.root, BtOperator::Delete, rng);
    VariationReport { tree: BehaviorTree { root }, drawn, applied }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn view(slot: usize, ally: bool, x: i32, y: i32) -> UnitView {
        UnitView { slot, ally, kind: UnitKind::Melee, x, y, health: 8, max_health: 8 }
    }

    fn obs<'a>(others: &'a [UnitView]) -> Observation<'a> {
        Observation {
            me: view(0, true, 5, 5),
            others,
            marker: None,
            reach: 1,
            sight: 8,
            width: 32,
            height: 32,
            noise: 7,
        }
    }

    fn tree(s: &str) -> BehaviorTree {
        parse_tree(s, DEFAULT_MAX_LEAVES).unwrap()
    }

    #[test]
    fn failwith_falls_through_to_move() {
        let others = [view(3, false, 9, 5)];
        let t = tree("(failwith (attack closest any) (move toward enemy closest any))");
        assert_eq!(bt_tick(&t, &obs(&others)), Action::Move { dx: 1, dy: 0 });
    }

    #[test]
    fn sequence_aborts_on_false_condition() {
        let t = tree("(seq (in-sight enemy any) (attack closest any))");
        assert_eq!(bt_tick(&t, &obs(&[])), Action::Stand);
    }

    #[test]
    fn single_stand() {
        assert_eq!(bt_tick(&BehaviorTree::stand(), &obs(&[])), Action::Stand);
    }

    #[test]
    fn sequence_stops_at_first_action() {
        let others = [view(1, false, 6, 6)];
        let t = tree("(seq (in-reach enemy any) (attack weakest any) (move away enemy closest any))");
        assert_eq!(bt_tick(&t, &obs(&others)), Action::Attack { slot: 1 });
    }

    #[test]
    fn failwith_stops_at_valid_condition() {
        let others = [view(1, false, 9, 9)];
        let t = tree("(failwith (in-sight enemy any) (move toward enemy closest any))");
        assert_eq!(bt_tick(&t, &obs(&others)), Action::Stand);
    }

    #[test]
    fn closest_ties_go_to_first_listed() {
        let others = [view(4, false, 7, 5), view(2, false, 3, 5)];
        let t = tree("(set-target enemy closest any)");
        assert_eq!(bt_tick(&t, &obs(&others)), Action::SetTarget { x: 7, y: 5 });
        let t = tree("(set-target enemy farthest any)");
        let others = [view(4, false, 7, 5), view(2, false, 3, 5), view(1, false, 5, 12)];
        assert_eq!(bt_tick(&t, &obs(&others)), Action::SetTarget { x: 5, y: 12 });
    }

    #[test]
    fn move_away_is_clamped_at_walls() {
        let others = [view(1, false, 1, 1)];
        let mut o = obs(&others);
        o.me.x = 0;
        o.me.y = 3;
        let t = tree("(move away enemy closest any)");
        assert_eq!(bt_tick(&t, &o), Action::Move { dx: 0, dy: 1 });
        o.me.y = 1;
        assert_eq!(bt_tick(&t, &o), Action::Stand);
    }

    #[test]
    fn goto_respects_threshold() {
        let mut o = obs(&[]);
        let t = tree("(goto 2)");
        assert_eq!(bt_tick(&t, &o), Action::Stand);
        o.marker = Some((9, 5));
        assert_eq!(bt_tick(&t, &o), Action::Stand);
        o.marker = Some((10, 2));
        assert_eq!(bt_tick(&t, &o), Action::GoTo { dx: 1, dy: -1 });
    }

    #[test]
    fn dying_thresholds() {
        let mut o = obs(&[]);
        o.me.health = 3;
        assert_eq!(bt_tick(&tree("(seq (dying self 2) (stand))"), &o), Action::Stand);
        assert_eq!(bt_tick(&tree("(seq (dying self 1) (goto 0))"), &o), Action::Stand);
        o.marker = Some((0, 0));
        assert_eq!(bt_tick(&tree("(seq (dying self 2) (goto 0))"), &o), Action::GoTo { dx: -1, dy: -1 });
        o.me.health = 4;
        assert_eq!(bt_tick(&tree("(failwith (dying self 2) (goto 0))"), &o), Action::GoTo { dx: -1, dy: -1 });
    }

    #[test]
    fn codec_round_trip() {
        let text = "(failwith (seq (in-reach enemy ranged) (attack random melee)) (dying ally 3) (is-type ranged) \
                    (target-set) (goto 1) (move away ally farthest any) (set-target ally weakest ranged) (stand))";
        let t = tree(text);
        assert_eq!(t.to_string(), text);
        assert_eq!(tree(&t.to_string()), t);
    }

    #[test]
    fn codec_rejects_garbage() {
        for bad in ["", "(", "(seq)", "(attack closest)", "(fly)", "(stand) (stand)", "(goto 9)", "(dying self 0)", ")"] {
            assert!(parse_tree(bad, DEFAULT_MAX_LEAVES).is_err(), "{bad}");
        }
        assert!(parse_tree("(seq (stand) (stand) (stand))", 2).is_err());
    }

    #[test]
    fn catalog_is_complete_and_unique() {
        let cat = catalog();
        assert_eq!(cat.len(), 1 + 12 + 48 + 4 + 24 + 6 + 6 + 9 + 2 + 1);
        let set: std::collections::HashSet<_> = cat.iter().collect();
        assert_eq!(set.len(), cat.len());
        for (i, l) in cat.iter().enumerate() {
            assert_eq!(leaf_code(l), i);
            let text = Node::Leaf(*l).to_string();
            assert_eq!(parse_tree(&text, 1).unwrap().root(), &Node::Leaf(*l));
        }
    }

    #[test]
    fn random_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let t = random_tree(&mut rng);
            assert!(t.validate(DEFAULT_MAX_LEAVES).is_ok());
            assert!((1..=8).contains(&t.leaf_count()));
            assert!(t.depth() <= 3);
        }
    }

    #[test]
    fn random_tree_is_deterministic() {
        let a = random_tree(&mut ChaCha8Rng::seed_from_u64(5));
        let b = random_tree(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn delete_on_single_leaf_mutates_instead() {
        let t = tree("(attack closest any)");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (root, applied) = apply_operator(t.root(), t.root(), BtOperator::Delete, &mut rng);
        assert_eq!(applied, BtOperator::MutateParams);
        assert_eq!(root.leaf_count(), 1);
        assert!(matches!(root, Node::Leaf(Leaf::Action(ActionLeaf::Attack { .. }))));
    }

    #[test]
    fn delete_keeps_controls_non_empty() {
        let t = tree("(seq (failwith (stand)) (stand))");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (root, applied) = apply_operator(t.root(), t.root(), BtOperator::Delete, &mut rng);
            assert_eq!(applied, BtOperator::Delete);
            assert!(validate(&root, 32).is_ok());
            assert_eq!(root.leaf_count(), 1);
        }
    }

    #[test]
    fn operator_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut counts = [0usize; 5];
        let n = 100_000;
        for _ in 0..n {
            let op = draw_operator(&mut rng);
            counts[BtOperator::ALL.iter().position(|&o| o == op).unwrap()] += 1;
        }
        for (c, w) in counts.iter().zip(BtOperator::WEIGHTS) {
            let p = *c as f64 / n as f64;
            assert!((p - w as f64 / 100.0).abs() <= 0.01, "{counts:?}");
        }
    }

    #[test]
    fn self_crossover_respects_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut t = random_tree(&mut rng);
        for _ in 0..2000 {
            let r = bt_variation(&t, &t.clone(), 16, &mut rng);
            assert!(r.tree.validate(16).is_ok());
            t = r.tree;
        }
    }

    #[test]
    fn every_operator_keeps_trees_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let a = random_tree(&mut rng);
            let b = random_tree(&mut rng);
            for op in BtOperator::ALL {
                let (root, _) = apply_operator(a.root(), b.root(), op, &mut rng);
                assert!(validate(&root, usize::MAX).is_ok(), "{op:?}");
            }
        }
    }

    #[test]
    fn tick_is_total_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20_000 {
            let t = random_tree(&mut rng);
            let n = rng.gen_range(0..6);
            let others: Vec<UnitView> = (0..n)
                .map(|i| UnitView {
                    slot: i,
                    ally: rng.gen(),
                    kind: if rng.gen() { UnitKind::Melee } else { UnitKind::Ranged },
                    x: rng.gen_range(0..32),
                    y: rng.gen_range(0..32),
                    health: rng.gen_range(1..=8),
                    max_health: 8,
                })
                .collect();
            let mut o = obs(&others);
            o.me.x = rng.gen_range(0..32);
            o.me.y = rng.gen_range(0..32);
            o.marker = rng.gen::<bool>().then(|| (rng.gen_range(0..32), rng.gen_range(0..32)));
            o.noise = rng.gen();
            match bt_tick(&t, &o) {
                Action::Move { dx, dy } | Action::GoTo { dx, dy } => {
                    assert!((dx, dy) != (0, 0));
                    assert!((0..32).contains(&(o.me.x + dx)) && (0..32).contains(&(o.me.y + dy)));
                }
                Action::Attack { slot } => {
                    let target = others.iter().find(|u| !u.ally && u.slot == slot).unwrap();
                    assert!(chebyshev(o.me.x, o.me.y, target.x, target.y) <= o.reach);
                }
                _ => {}
            }
        }
    }
}
