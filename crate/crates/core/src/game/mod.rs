//! Monte-Carlo play of the tug-of-war game with noise.

mod sim;
mod strategy;

pub use sim::{
    estimate_value, play, simulate, step, summarize, write_outcomes_csv, GameConfig, GameOutcome,
    Player, Round, ValueEstimate, SUBSTREAM_SCHEME,
};
pub use strategy::{greedy_strategy, lattice_index, Choice, GreedyMode, Strategy};
