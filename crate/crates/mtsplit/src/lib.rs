//! Splitting of monodromy groups of products of abelian varieties and the
//! Mumford-Tate conjecture, as an exact rule engine.

pub mod albert;
pub mod cli;
pub mod engine;
pub mod lie_model;
pub mod minuscule;
pub mod oracle;
pub mod root_systems;
