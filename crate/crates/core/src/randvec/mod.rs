//! Catalog of coordinate laws, Doeblin witnesses, split representations,
//! sampling, and matched gaussian counterparts.

mod counterpart;
mod family;
mod law;
mod sample;
mod split;

pub use counterpart::{psd_sqrt, GaussianCounterpart};
pub use family::{LawOverride, SplitFamily, VectorFamily};
pub use law::ScalarLaw;
pub use sample::{
    block_count, sample, sample_block, sample_map, sample_split, sample_split_block, sample_split_map, SampleMatrix,
    SplitSample,
};
pub use split::{split, DoeblinWitness, SplitLaw, SPLIT_CLAMP_TOL};
