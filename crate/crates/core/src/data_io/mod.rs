//! Simulation, file formats, predictive evaluation and cross-validation for
//! discrete network data.

mod crossval;
mod csv_io;
mod network;
mod predict;
mod simulate;

pub use crossval::{complement, crossval_split, SplitMode};
pub use csv_io::{load_dataset, save_dataset, sidecar_path};
pub use network::{
    format_matrix_tsv, format_network, load_network, parse_matrix_tsv, parse_network,
    save_network, NetworkFile,
};
pub use predict::{
    dr_log_probability, dr_row_log_probability, predictive_log_probability, score_vs_reference,
    threshold_network, EdgeCounts, PredictiveModel,
};
pub use simulate::{
    chain_network, example_network, signaling_network, GroundTruthBn, SIGNALING_NODES,
    SIGNALING_TARGETS,
};
