//! Belief-propagation decoding of CSS quantum LDPC codes with learned
//! sequential schedules.
//!
//! The crate covers the full pipeline: GF(2) linear algebra and code
//! construction, binary and depolarizing channel models, reference and
//! incremental sequential BP decoders, tabular Q-learning of update
//! schedules, guided decimation on top of either decoder family, and a
//! Monte Carlo harness with deterministic multi-threaded replay.

pub mod binary_decoder;
pub mod channel;
pub mod code_model;
pub mod decimation;
mod error;
pub mod fast_infer;
pub mod gf2;
pub mod graph;
pub mod harness;
pub(crate) mod llr;
pub mod quaternary_decoder;
pub mod scheduler_rl;

pub use binary_decoder::{BpConfig, DecodeResult, Schedule, DEFAULT_LLR_CLIP, DEFAULT_MAX_ITERS};
pub use channel::{trial_rng, NoiseParams, PauliFrame};
pub use code_model::{CssCode, DecodeOutcome, OutcomeKind};
pub use decimation::{
    decode_gd, decode_qgd, gd_stats, GdConfig, GdDecodeResult, GdTrace, InnerDecoder,
    QuatGdDecodeResult, QuatGdTrace, DEFAULT_FREEZE_MAGNITUDE,
};
pub use error::{Error, Result};
pub use fast_infer::{decode_fast, CheckCache, FastEngine, SchedulerHeap};
pub use gf2::{BitMatrix, BitVec};
pub use harness::{
    run_grid, run_point, wilson_interval, write_csv, DecoderKind, ExperimentSpec, PointSummary,
};
pub use graph::TannerAdjacency;
pub use quaternary_decoder::{
    decode_qbp, decode_qsvns, decode_qsvns_fast, train_quat, DepolPrior, Pauli, QuatDecodeResult,
    QuatProblem, QuatState,
};
pub use scheduler_rl::{QTable, QVariant, TrainConfig};
