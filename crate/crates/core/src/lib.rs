//! Uncertainty-aware clustering for pseudo-label generation.
//!
//! The pieces, bottom-up:
//!
//! * [`embedding`] and [`distance`]: unit-norm feature matrices, Euclidean
//!   distances and Jaccard distances over k-reciprocal neighborhoods.
//! * [`dbscan`]: deterministic density clustering over a distance matrix.
//! * [`reliability`]: silhouette scores and one-level decomposition of
//!   unreliable clusters.
//! * [`ucis`]: temporal averaging and selection of instances whose cluster
//!   agrees between the main and averaged views.
//! * [`memory`]: class-prototype memory bank with a contrastive loss.
//! * [`pipeline`]: the per-epoch loop, plus [`metrics`], [`synth`] and [`io`].

pub mod dbscan;
pub mod distance;
pub mod embedding;
pub mod error;
pub mod io;
pub mod memory;
pub mod metrics;
pub mod pipeline;
pub mod reliability;
pub mod synth;
pub mod ucis;

pub use dbscan::{canonicalize, dbscan, Clustering, OUTLIER};
pub use distance::{
    build_distances, jaccard_distance, k_reciprocal_neighbors, pairwise_euclidean, DistanceKind,
    DistanceMatrix, NeighborSets,
};
pub use embedding::EmbeddingSet;
pub use error::{Result, UcfError};
pub use memory::{init_memory, MemoryBank};
pub use metrics::{nmi, purity};
pub use pipeline::{run_epoch, EpochConfig, EpochOutcome, EpochReport};
pub use reliability::{
    cluster_silhouette, hierarchical_cluster, hierarchical_cluster_detailed, HierarchicalOutcome,
    SilhouetteReport,
};
pub use synth::{generate_synthetic, SynthConfig, SynthData};
pub use ucis::{ema_update, instance_uncertainty, select_reliable, ParamVector, SelectionMask};
