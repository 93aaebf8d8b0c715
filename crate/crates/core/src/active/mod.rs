//! Acquisition scores, next-sample selection, and sampling campaigns.

mod acquisition;
mod campaign;
mod candidates;
mod lhs;

pub use acquisition::{next_sample, score_candidate, AcquisitionScore};
pub use campaign::{
    evaluate_candidates, run_campaign, train_rom, CampaignRecord, CampaignSettings, CampaignSetup, CandidateEvaluation,
    FomSource, IterationRecord, IterationState, SamplingMode, TrainedRom,
};
pub use candidates::{flat_index, multi_index, Axis, AxisSpacing, CandidateSet};
pub use lhs::{lhs_baseline, occupies_distinct_strata};
