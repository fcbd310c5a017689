//! Consensus rules: fork choice, block validity, betting and labelling.

mod bet;
mod fcr;
mod label;
mod validity;

pub use bet::{admissible_refs, bet_target, make_bet, BetOutcome};
pub use fcr::{fcr, ranked_leaves, score, score_with, Score, ScoreMode};
pub use label::{canonical_order, label, Label, LabelMap};
pub use validity::{check_finality_rules, verify_block, verify_new, Electorate, Violation};
