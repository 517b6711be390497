//! Counting coalescent tree topologies compatible with infinite-sites data.
//!
//! An incidence matrix is reduced to its perfect phylogeny, which constrains the
//! trees that could have generated it. Two sequential importance samplers draw
//! compatible ranked trees: one over ranked labeled trees ([`kingman`]), one over
//! ranked tree shapes ([`tajima`]). Their inverse proposal probabilities estimate
//! the number of compatible trees, and ranking multiplicities carry the estimates
//! over to unranked labeled trees and unranked shapes.
//!
//! ```
//! use coalcount::{count_matrix, CountConfig, IncidenceMatrix, Resolution};
//!
//! let m = IncidenceMatrix::from_strings(&["0100", "1010", "0001", "0001", "0001", "0001"]).unwrap();
//! let report = count_matrix(&m, &CountConfig { n_draws: 2000, seed: 1, ..CountConfig::default() }).unwrap();
//! let kingman = report.get(Resolution::Kingman).unwrap();
//! assert!(kingman.value() > 1.0);
//! ```

pub mod cli;
pub mod error;
pub mod estimator;
pub mod incidence;
pub mod kingman;
pub mod numeric;
pub mod oracle;
pub mod phylogeny;
pub mod pipeline;
pub mod rng;
pub mod simulator;
pub mod tajima;
pub mod topology;

pub use error::{Error, Result};
pub use estimator::{combine, Accumulator, CountEstimate, Resolution};
pub use incidence::{
    deduplicate, filter_to_ism, ism_conflicts, parse_matrix, HaplotypeData, IncidenceMatrix,
    MatrixFormat,
};
pub use kingman::{is_compatible, replay_kingman, sample_kingman, SampleDraw};
pub use numeric::Coefficient;
pub use oracle::{
    closed_form_unconstrained, enumerate_compatible, exact_q_kingman, exact_q_tajima, ExactCounts,
};
pub use phylogeny::{
    build_perfect_phylogeny, export_phylogeny, to_kingman, to_tajima, ExportFormat,
    KingmanPhylogeny, PerfectPhylogeny, PhylogenyExport, RootedTree, TajimaPhylogeny,
};
pub use pipeline::{count_matrix, count_topologies, prepare, CountConfig, CountReport, Prepared};
pub use simulator::{
    simulate_genealogy, simulate_matrix, SimulatedData, SimulationMeta, TimedGenealogy,
};
pub use tajima::{
    backtrack_chain, backtrack_q, replay_tajima, sample_tajima, Backtrack, TajimaDraw,
};
pub use topology::{
    labeled_coefficient, project_to_labeled, project_to_shape, shape_coefficient, Coalescence,
    Lineage, MergeSequence, Projection, TajimaChain,
};
