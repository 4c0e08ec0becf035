pub mod analysis;
pub mod archive;
pub mod behavior;
pub mod cluster;
pub mod domains;
pub mod evolve;
pub mod fitness;
pub mod io;
pub mod rng;
