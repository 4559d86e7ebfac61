//! Sample space of directed acyclic graphs over discrete nodes with
//! interventional data.

mod data;
mod graph;
mod model;
mod score;

pub use data::{DiscreteDataset, FamilyCounts};
pub use graph::{Dag, EditCounts, Move, MAX_NODES};
pub use model::{sna_mode, sna_step, DagModel, EditStats};
pub use score::{family_log_score, DagScorer, ScoreParams};
