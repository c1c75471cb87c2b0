//! Binary belief-propagation decoding over a single error stream.
//!
//! Two scheduling families share one state container:
//!
//! * flooding: every check-to-variable message is recomputed from the
//!   previous round's variable messages, then every variable refreshes its
//!   belief, outgoing messages and hard decision; the residual is rebuilt
//!   once per round.
//! * sequential single-variable updates: one variable at a time refreshes
//!   its incoming check messages, belief, outgoing messages and hard
//!   decision. When the hard decision flips, only the adjacent residual
//!   bits, the residual weight and the neighborhood state words of nearby
//!   variables change, and those are maintained incrementally.
//!
//! Messages live on the LLR scale and every stored message is clipped to
//! ±`llr_clip`. Beliefs are left unclipped.

use crate::gf2::BitVec;
use crate::graph::TannerAdjacency;
use crate::llr::{check_message, clip, tanh_half};
use crate::scheduler_rl::QTable;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_LLR_CLIP: f64 = 30.0;
pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Schedule {
    Flooding,
    RandomSvns,
    GreedyRlSvns,
}

#[derive(Clone, Debug)]
pub struct BpConfig {
    /// Iteration cap T.
    pub max_iters: usize,
    /// Message clip magnitude.
    pub llr_clip: f64,
    pub schedule: Schedule,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            max_iters: DEFAULT_MAX_ITERS,
            llr_clip: DEFAULT_LLR_CLIP,
            schedule: Schedule::Flooding,
        }
    }
}

/// Mutable decoding state over one Tanner graph.
#[derive(Clone, Debug)]
pub struct DecoderState {
    /// Variable-to-check message per edge.
    pub msg_v2c: Vec<f64>,
    /// Check-to-variable message per edge (as of the owner's last update).
    pub msg_c2v: Vec<f64>,
    pub belief: Vec<f64>,
    /// Current hard decision per variable.
    pub hard: BitVec,
    /// Residual: syndrome XOR the syndrome of the current hard decision.
    pub delta: BitVec,
    /// Residual weight, kept equal to delta.weight().
    pub w: usize,
    /// Per-variable neighborhood state word: XOR of beta over incident
    /// edges whose check has a set residual bit.
    pub sigma: Vec<u64>,
}

/// Fresh state: messages seeded from the per-variable priors, hard
/// decisions from the prior signs, residual from the general formula
/// s XOR H e. With all-positive priors that reduces to delta = s.
pub fn init_state(
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    priors: &[f64],
    llr_clip: f64,
) -> DecoderState {
    assert_eq!(syndrome.len(), adj.n_checks(), "syndrome length mismatch");
    assert_eq!(priors.len(), adj.n_vars(), "prior length mismatch");
    let n_edges = adj.n_edges();
    let mut msg_v2c = vec![0.0; n_edges];
    for k in 0..n_edges {
        msg_v2c[k] = clip(priors[adj.var_of(k as u32)], llr_clip);
    }
    let mut hard = BitVec::zeros(adj.n_vars());
    for (i, &mu) in priors.iter().enumerate() {
        if mu < 0.0 {
            hard.set(i, true);
        }
    }
    let (delta, w) = recompute_residual(adj, syndrome, &hard);
    let sigma = recompute_sigma(adj, &delta);
    DecoderState {
        msg_v2c,
        msg_c2v: vec![0.0; n_edges],
        belief: priors.to_vec(),
        hard,
        delta,
        w,
        sigma,
    }
}

/// Residual and its weight from scratch: delta = syndrome XOR H·hard.
pub fn recompute_residual(
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    hard: &BitVec,
) -> (BitVec, usize) {
    let mut delta = syndrome.clone();
    for k in 0..adj.n_edges() as u32 {
        if hard.get(adj.var_of(k)) {
            delta.flip(adj.check_of(k));
        }
    }
    let w = delta.weight();
    (delta, w)
}

/// Neighborhood state words from scratch.
pub fn recompute_sigma(adj: &TannerAdjacency, delta: &BitVec) -> Vec<u64> {
    let mut sigma = vec![0u64; adj.n_vars()];
    for k in 0..adj.n_edges() as u32 {
        if delta.get(adj.check_of(k)) {
            sigma[adj.var_of(k)] ^= adj.beta(k);
        }
    }
    sigma
}

/// Message from the check on edge k into the variable on edge k, excluding
/// that variable's own contribution: the signed tanh product over the
/// check's other edges.
pub fn cn_message(
    state: &DecoderState,
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    k: u32,
    llr_clip: f64,
) -> f64 {
    let j = adj.check_of(k);
    let mut prod = 1.0;
    for &k2 in adj.check_edges(j) {
        if k2 != k {
            prod *= tanh_half(state.msg_v2c[k2 as usize]);
        }
    }
    if syndrome.get(j) {
        prod = -prod;
    }
    check_message(prod, llr_clip)
}

/// Flips the hard decision at variable i and propagates the change: each
/// adjacent residual bit toggles (moving w by ±1) and every variable
/// sharing one of those checks has the corresponding beta weight XOR-ed
/// into its state word.
pub fn apply_hard_flip(state: &mut DecoderState, adj: &TannerAdjacency, i: usize) {
    state.hard.flip(i);
    for &k in adj.var_edges(i) {
        let j = adj.check_of(k);
        let now_set = !state.delta.get(j);
        state.delta.set(j, now_set);
        if now_set {
            state.w += 1;
        } else {
            state.w -= 1;
        }
        for &k2 in adj.check_edges(j) {
            state.sigma[adj.var_of(k2)] ^= adj.beta(k2);
        }
    }
}

/// One sequential update at variable i: refresh incoming check messages,
/// belief, outgoing messages, then the hard decision. Returns whether the
/// hard decision flipped.
pub fn svns_update(
    state: &mut DecoderState,
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    priors: &[f64],
    llr_clip: f64,
    i: usize,
) -> bool {
    let edges = adj.var_edges(i);
    if edges.is_empty() {
        return false;
    }
    for &k in edges {
        state.msg_c2v[k as usize] = cn_message(state, adj, syndrome, k, llr_clip);
    }
    let mut l = priors[i];
    for &k in edges {
        l += state.msg_c2v[k as usize];
    }
    state.belief[i] = l;
    for &k in edges {
        state.msg_v2c[k as usize] = clip(l - state.msg_c2v[k as usize], llr_clip);
    }
    let decide = l < 0.0;
    if decide != state.hard.get(i) {
        apply_hard_flip(state, adj, i);
        true
    } else {
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub e_hat: BitVec,
    pub converged: bool,
    /// Iteration index at exit: 0 when the input syndrome was already
    /// explained before any update, T when the cap was reached.
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep {
    pub action: u32,
    pub flipped: bool,
    pub w_after: usize,
}

/// Step-by-step record of a sequential decode, for diagnostics and
/// equivalence testing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecodeTrace {
    pub steps: Vec<TraceStep>,
}

impl DecodeTrace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Where the per-step variable choices come from.
pub enum ScheduleSource<'a> {
    /// Fresh uniform permutation of the active variables each iteration.
    Random(&'a mut ChaCha8Rng),
    /// Greedy table lookup: the remaining variable with the largest Q value
    /// for its current state word, lowest index on ties.
    Greedy(&'a QTable),
}

pub fn decode_flooding(
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    priors: &[f64],
    cfg: &BpConfig,
) -> DecodeResult {
    let mut state = init_state(adj, syndrome, priors, cfg.llr_clip);
    let (converged, iterations) = run_flooding(&mut state, adj, syndrome, priors, cfg);
    DecodeResult {
        e_hat: state.hard.clone(),
        converged,
        iterations,
    }
}

/// Flooding rounds on an existing state. Returns (converged, iterations).
pub fn run_flooding(
    state: &mut DecoderState,
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    priors: &[f64],
    cfg: &BpConfig,
) -> (bool, usize) {
    if state.w == 0 {
        return (true, 0);
    }
    for it in 1..=cfg.max_iters {
        for j in 0..adj.n_checks() {
            for &k in adj.check_edges(j) {
                state.msg_c2v[k as usize] = cn_message(state, adj, syndrome, k, cfg.llr_clip);
            }
        }
        for i in 0..adj.n_vars() {
            let edges = adj.var_edges(i);
            if edges.is_empty() {
                continue;
            }
            let mut l = priors[i];
            for &k in edges {
                l += state.msg_c2v[k as usize];
            }
            state.belief[i] = l;
            for &k in edges {
                state.msg_v2c[k as usize] = clip(l - state.msg_c2v[k as usize], cfg.llr_clip);
            }
            state.hard.set(i, l < 0.0);
        }
        let (delta, w) = recompute_residual(adj, syndrome, &state.hard);
        state.sigma = recompute_sigma(adj, &delta);
        state.delta = delta;
        state.w = w;
        if w == 0 {
            return (true, it);
        }
    }
    (false, cfg.max_iters)
}

pub fn decode_svns(
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    priors: &[f64],
    cfg: &BpConfig,
    source: &mut ScheduleSource<'_>,
    trace: Option<&mut DecodeTrace>,
) -> DecodeResult {
    let mut state = init_state(adj, syndrome, priors, cfg.llr_clip);
    let (converged, iterations) = run_svns(&mut state, adj, syndrome, priors, cfg, source, trace);
    DecodeResult {
        e_hat: state.hard.clone(),
        converged,
        iterations,
    }
}

/// Sequential decoding on an existing state. The residual is checked before
/// every step, so convergence can cut an iteration short; an iteration in
/// which at least one update ran counts toward the exit index.
pub fn run_svns(
    state: &mut DecoderState,
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    priors: &[f64],
    cfg: &BpConfig,
    source: &mut ScheduleSource<'_>,
    mut trace: Option<&mut DecodeTrace>,
) -> (bool, usize) {
    if state.w == 0 {
        return (true, 0);
    }
    let active = adj.active_vars();
    let mut order: Vec<u32> = Vec::with_capacity(active.len());
    for it in 1..=cfg.max_iters {
        order.clear();
        order.extend_from_slice(&active);
        if let ScheduleSource::Random(rng) = source {
            order.shuffle(*rng);
        }
        let mut stepped = false;
        for step in 0..order.len() {
            if state.w == 0 {
                return (true, if stepped { it } else { it - 1 });
            }
            let a = match source {
                ScheduleSource::Random(_) => {
                    let a = order[step];
                    order[step] = u32::MAX; // consumed
                    a
                }
                ScheduleSource::Greedy(q) => {
                    let mut best: Option<(f64, u32, usize)> = None;
                    for (pos, &u) in order.iter().enumerate() {
                        if u == u32::MAX {
                            continue;
                        }
                        let key = q.get(state.sigma[u as usize], u);
                        let better = match best {
                            None => true,
                            Some((bk, bu, _)) => key > bk || (key == bk && u < bu),
                        };
                        if better {
                            best = Some((key, u, pos));
                        }
                    }
                    let (_, a, pos) = best.expect("non-empty remaining set");
                    order[pos] = u32::MAX;
                    a
                }
            };
            let flipped = svns_update(state, adj, syndrome, priors, cfg.llr_clip, a as usize);
            stepped = true;
            if let Some(t) = trace.as_deref_mut() {
                t.steps.push(TraceStep {
                    action: a,
                    flipped,
                    w_after: state.w,
                });
            }
        }
    }
    (state.w == 0, cfg.max_iters)
}
