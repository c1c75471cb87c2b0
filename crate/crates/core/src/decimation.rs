//! Guided decimation: interleave fixed-length runs of an inner decoder
//! with freezing of the most confident undecided variable.
//!
//! Each block starts the inner decoder from a fresh message state built
//! on the current (partially frozen) priors and runs it for a fixed
//! number of iterations. If the block fails to converge, the undecimated
//! variable with the strongest belief is permanently pinned by saturating
//! its channel prior toward its current decision, and the next block
//! starts over. The loop ends on convergence or once every variable has
//! been decimated, so a decode executes at most n + 1 blocks.

use crate::binary_decoder::{
    init_state, run_flooding, run_svns, BpConfig, Schedule, ScheduleSource, DEFAULT_LLR_CLIP,
    DEFAULT_MAX_ITERS,
};
use crate::channel::PauliFrame;
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::graph::TannerAdjacency;
use crate::quaternary_decoder::{
    init_quat_state, joint_state_count, run_qbp, run_qsvns, Pauli, QuatProblem,
};
use crate::scheduler_rl::QTable;

/// Default saturation magnitude for decimated priors. Far above the
/// message clip, so a frozen prior outweighs every incident message on
/// any code whose variable degrees stay in the ordinary LDPC range.
pub const DEFAULT_FREEZE_MAGNITUDE: f64 = 1000.0;

/// Inner decoder run within each decimation block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerDecoder {
    /// Parallel sweeps over all checks and variables.
    Flooding,
    /// Sequential node updates in greedy Q-table order.
    GreedyRlSvns,
}

#[derive(Clone, Copy, Debug)]
pub struct GdConfig {
    pub inner: InnerDecoder,
    /// Iteration budget of each block.
    pub inner_iters: usize,
    /// Magnitude written into a decimated prior. Must be at least the
    /// message clip for the pin to hold.
    pub freeze_magnitude: f64,
    pub llr_clip: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            inner: InnerDecoder::Flooding,
            inner_iters: DEFAULT_MAX_ITERS,
            freeze_magnitude: DEFAULT_FREEZE_MAGNITUDE,
            llr_clip: DEFAULT_LLR_CLIP,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_iters < 1 {
            return Err(Error::InvalidParam(
                "decimation blocks need at least one inner iteration".into(),
            ));
        }
        if !(self.freeze_magnitude >= self.llr_clip) {
            return Err(Error::InvalidParam(format!(
                "freeze magnitude {} is below the message clip {}",
                self.freeze_magnitude, self.llr_clip
            )));
        }
        Ok(())
    }
}

/// One executed block: the iterations it consumed, the residual weight it
/// ended on, and the variable frozen afterwards with its pinned decision.
/// The terminal block (converged or nothing left to freeze) records None.
#[derive(Clone, Debug, PartialEq)]
pub struct GdBlockRecord {
    pub iterations: usize,
    pub w_after: usize,
    pub frozen: Option<(u32, bool)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GdTrace {
    pub blocks: Vec<GdBlockRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GdDecodeResult {
    pub e_hat: BitVec,
    pub converged: bool,
    /// Total inner iterations summed over all blocks.
    pub iterations: usize,
    /// Blocks executed. 1 when the first block already converges.
    pub decimations: usize,
}

fn greedy_table<'a>(
    q: Option<&'a QTable>,
    n_vars: usize,
    state_count: u64,
) -> &'a QTable {
    let table = q.expect("greedy inner decoder needs a Q-table");
    assert_eq!(table.n(), n_vars, "Q-table sized for a different code");
    assert!(
        table.s_max() >= state_count,
        "Q-table state space smaller than the code's"
    );
    table
}

/// Guided decimation around a binary inner decoder.
///
/// `q` is consulted only when `cfg.inner` is greedy. The syndrome is
/// decoded against fresh messages each block; failed blocks pin the
/// undecimated variable with the largest |L| (lowest index on ties) by
/// overwriting its prior with ±freeze_magnitude toward its current hard
/// decision.
pub fn decode_gd(
    adj: &TannerAdjacency,
    q: Option<&QTable>,
    syndrome: &BitVec,
    priors: &[f64],
    cfg: &GdConfig,
    mut trace: Option<&mut GdTrace>,
) -> GdDecodeResult {
    assert!(cfg.inner_iters >= 1, "inner iteration budget must be positive");
    assert!(
        cfg.freeze_magnitude >= cfg.llr_clip,
        "freeze magnitude below the message clip cannot pin a decision"
    );
    let n = adj.n_vars();
    let table = match cfg.inner {
        InnerDecoder::Flooding => None,
        InnerDecoder::GreedyRlSvns => Some(greedy_table(q, n, adj.state_count())),
    };
    let bp = BpConfig {
        max_iters: cfg.inner_iters,
        llr_clip: cfg.llr_clip,
        schedule: match cfg.inner {
            InnerDecoder::Flooding => Schedule::Flooding,
            InnerDecoder::GreedyRlSvns => Schedule::GreedyRlSvns,
        },
    };
    let mut working = priors.to_vec();
    let mut frozen = vec![false; n];
    let mut left = n;
    let mut iterations = 0usize;
    let mut blocks = 0usize;
    loop {
        blocks += 1;
        let mut state = init_state(adj, syndrome, &working, cfg.llr_clip);
        let (converged, iters) = match cfg.inner {
            InnerDecoder::Flooding => run_flooding(&mut state, adj, syndrome, &working, &bp),
            InnerDecoder::GreedyRlSvns => {
                let mut src = ScheduleSource::Greedy(table.unwrap());
                run_svns(&mut state, adj, syndrome, &working, &bp, &mut src, None)
            }
        };
        iterations += iters;
        if converged || left == 0 {
            if let Some(t) = trace.as_deref_mut() {
                t.blocks.push(GdBlockRecord {
                    iterations: iters,
                    w_after: state.w,
                    frozen: None,
                });
            }
            return GdDecodeResult {
                e_hat: state.hard,
                converged,
                iterations,
                decimations: blocks,
            };
        }
        let mut best = usize::MAX;
        let mut best_mag = f64::NEG_INFINITY;
        for i in 0..n {
            if !frozen[i] && state.belief[i].abs() > best_mag {
                best_mag = state.belief[i].abs();
                best = i;
            }
        }
        let bit = state.hard.get(best);
        working[best] = if bit {
            -cfg.freeze_magnitude
        } else {
            cfg.freeze_magnitude
        };
        frozen[best] = true;
        left -= 1;
        if let Some(t) = trace.as_deref_mut() {
            t.blocks.push(GdBlockRecord {
                iterations: iters,
                w_after: state.w,
                frozen: Some((best as u32, bit)),
            });
        }
    }
}

/// Quaternary block record: the frozen entry carries the pinned Pauli.
#[derive(Clone, Debug, PartialEq)]
pub struct QuatGdBlockRecord {
    pub iterations: usize,
    pub w_after: usize,
    pub frozen: Option<(u32, Pauli)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuatGdTrace {
    pub blocks: Vec<QuatGdBlockRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuatGdDecodeResult {
    pub qhat: Vec<Pauli>,
    pub frame: PauliFrame,
    pub converged: bool,
    pub iterations: usize,
    pub decimations: usize,
}

/// Guided decimation around a quaternary inner decoder.
///
/// Failed blocks pin the undecimated variable with the largest single
/// belief entry max_q B(q) (lowest index on ties) to its current Pauli
/// decision, realized as saturated priors on both streams.
pub fn decode_qgd(
    prob: &QuatProblem<'_>,
    q: Option<&QTable>,
    cfg: &GdConfig,
    mut trace: Option<&mut QuatGdTrace>,
) -> QuatGdDecodeResult {
    assert!(cfg.inner_iters >= 1, "inner iteration budget must be positive");
    assert!(
        cfg.freeze_magnitude >= cfg.llr_clip,
        "freeze magnitude below the message clip cannot pin a decision"
    );
    let n = prob.adj_a.n_vars();
    let table = match cfg.inner {
        InnerDecoder::Flooding => None,
        InnerDecoder::GreedyRlSvns => Some(greedy_table(
            q,
            n,
            joint_state_count(prob.adj_a, prob.adj_b),
        )),
    };
    let bp = BpConfig {
        max_iters: cfg.inner_iters,
        llr_clip: cfg.llr_clip,
        schedule: match cfg.inner {
            InnerDecoder::Flooding => Schedule::Flooding,
            InnerDecoder::GreedyRlSvns => Schedule::GreedyRlSvns,
        },
    };
    let mut wa = prob.priors_a.to_vec();
    let mut wb = prob.priors_b.to_vec();
    let mut frozen = vec![false; n];
    let mut left = n;
    let mut iterations = 0usize;
    let mut blocks = 0usize;
    loop {
        blocks += 1;
        let block_prob = QuatProblem {
            priors_a: &wa,
            priors_b: &wb,
            ..*prob
        };
        let mut state = init_quat_state(&block_prob, cfg.llr_clip);
        let (converged, iters) = match cfg.inner {
            InnerDecoder::Flooding => run_qbp(&mut state, &block_prob, &bp),
            InnerDecoder::GreedyRlSvns => {
                let mut src = ScheduleSource::Greedy(table.unwrap());
                run_qsvns(&mut state, &block_prob, &bp, &mut src, None)
            }
        };
        iterations += iters;
        if converged || left == 0 {
            if let Some(t) = trace.as_deref_mut() {
                t.blocks.push(QuatGdBlockRecord {
                    iterations: iters,
                    w_after: state.w(),
                    frozen: None,
                });
            }
            return QuatGdDecodeResult {
                qhat: state.qhat,
                frame: PauliFrame {
                    e_a: state.a.hard,
                    e_b: state.b.hard,
                },
                converged,
                iterations,
                decimations: blocks,
            };
        }
        let mut best = usize::MAX;
        let mut best_conf = f64::NEG_INFINITY;
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            let conf = state.belief_dist[i]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            if conf > best_conf {
                best_conf = conf;
                best = i;
            }
        }
        let decided = state.qhat[best];
        wa[best] = if decided.comp_a() {
            -cfg.freeze_magnitude
        } else {
            cfg.freeze_magnitude
        };
        wb[best] = if decided.comp_b() {
            -cfg.freeze_magnitude
        } else {
            cfg.freeze_magnitude
        };
        frozen[best] = true;
        left -= 1;
        if let Some(t) = trace.as_deref_mut() {
            t.blocks.push(QuatGdBlockRecord {
                iterations: iters,
                w_after: state.w(),
                frozen: Some((best as u32, decided)),
            });
        }
    }
}

/// Mean number of blocks per decoding attempt.
pub fn gd_stats(decimations: &[usize]) -> Result<f64> {
    if decimations.is_empty() {
        return Err(Error::InvalidParam(
            "decimation statistics need at least one record".into(),
        ));
    }
    Ok(decimations.iter().sum::<usize>() as f64 / decimations.len() as f64)
}
