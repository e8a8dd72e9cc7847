pub mod cli;
pub mod duel;
pub mod error;
pub mod game_tree;
mod lp;
pub mod matrix_game;
pub mod protocol_pipeline;
pub mod risk;
pub mod timing_game;
pub mod tosg_decision;

pub use error::{Error, Result};
