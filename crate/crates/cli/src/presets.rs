//! Shipped run manifests.

use game_core::behavior::DescriptorSpec;
use game_core::domains::{PusherParams, SkirmishParams};
use game_core::evolve::{ArchiveMode, GameConfig, OpponentMode, SearchMode};
use game_core::fitness::FitnessMode;
use game_core::io::manifest::{DomainParams, RunManifest};

pub const NAMES: [&str; 12] = [
    "skirmish_paper_shape",
    "skirmish_desk",
    "pusher_desk",
    "random",
    "cvt",
    "one_sided",
    "no_bootstrap",
    "diversity_only",
    "quality_only",
    "positions",
    "handcrafted",
    "lexicographic",
];

fn skirmish_desk() -> GameConfig {
    GameConfig { n_gen: 6, n_task: 12, n_cell: 6, n_budget: 2000, n_init: 100, ..GameConfig::default() }
}

fn pusher_desk() -> GameConfig {
    GameConfig { n_gen: 6, n_task: 10, n_cell: 8, n_budget: 1500, n_init: 100, ..GameConfig::default() }
}

/// The manifest of a shipped preset; its run id is the preset name.
pub fn preset(name: &str) -> Option<RunManifest> {
    let skirmish = || DomainParams::Skirmish(SkirmishParams::default());
    let pusher = || DomainParams::Pusher(PusherParams::default());
    let (evolve, domain) = match name {
        "skirmish_paper_shape" => (
            GameConfig { n_gen: 20, n_task: 100, n_cell: 25, n_budget: 100_000, n_init: 1000, ..GameConfig::default() },
            skirmish(),
        ),
        "skirmish_desk" => (skirmish_desk(), skirmish()),
        "pusher_desk" => (pusher_desk(), pusher()),
        "random" => (GameConfig { search: SearchMode::RandomOnly, ..pusher_desk() }, pusher()),
        "cvt" => (GameConfig { archive_mode: ArchiveMode::FixedCvt, ..pusher_desk() }, pusher()),
        "one_sided" => (
            GameConfig {
                n_gen: 2,
                n_budget: 4500,
                opponents: OpponentMode::FixedRandom,
                bootstrap_enabled: false,
                ..pusher_desk()
            },
            pusher(),
        ),
        "no_bootstrap" => (GameConfig { bootstrap_enabled: false, ..pusher_desk() }, pusher()),
        "diversity_only" => (GameConfig { diversity_only: true, ..pusher_desk() }, pusher()),
        "quality_only" => (GameConfig { n_cell: 1, ..pusher_desk() }, pusher()),
        "positions" => (GameConfig { descriptor: DescriptorSpec::Positions { timesteps: 5 }, ..skirmish_desk() }, skirmish()),
        "handcrafted" => (GameConfig { descriptor: DescriptorSpec::Handcrafted, ..skirmish_desk() }, skirmish()),
        "lexicographic" => (GameConfig { fitness_mode: FitnessMode::Lexicographic, ..skirmish_desk() }, skirmish()),
        _ => return None,
    };
    Some(RunManifest::new(name, evolve, domain))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for n in NAMES {
            let m = preset(n).unwrap();
            m.validate().unwrap();
            assert_eq!(m.run_id, n);
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn one_sided_spends_the_same_budget() {
        let game = preset("pusher_desk").unwrap().evolve;
        let one = preset("one_sided").unwrap().evolve;
        assert_eq!(game.n_gen * game.n_budget, one.n_gen * one.n_budget);
    }
}
