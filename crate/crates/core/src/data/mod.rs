//! Rating ingestion, the binary interaction matrix, the leave-one-out split
//! and negative sampling.

mod canonical;
mod interactions;
mod kcore;
mod ratings;
mod sampling;
mod split;

pub use canonical::{read_canonical, write_canonical, CanonicalDataset, DatasetFiles, DatasetStats};
pub use interactions::InteractionMatrix;
pub use kcore::filter_k_core;
pub use ratings::{load_ratings, parse_ratings, Rating, RatingFormat, RatingLog};
pub use sampling::{
    sample_negatives_for, sample_test_negatives, sample_train_negatives, EpochBatchSet, TestCase,
    TrainInstance, TEST_NEGATIVES,
};
pub use split::{build_split, IdMaps, SplitDataset, TestPositive};
