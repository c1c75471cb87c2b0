//! Two-stream sequential decoding under depolarizing noise.
//!
//! Instead of 4-ary edge messages, two scalar LLR streams run on the two
//! Tanner graphs of a CSS pair, one per error component. Check updates are
//! the ordinary binary ones on each graph; the coupling happens at the
//! variables, where outgoing messages and hard decisions come from a
//! quaternary belief over {I, X, Y, Z} built from both streams plus a
//! prior correction that restores the correlation between the components
//! (a Y error shows up in both). Hard decisions are therefore quaternary,
//! and each stream's residual bookkeeping is the same incremental
//! machinery the binary decoder uses, applied per stream.
//!
//! Component conventions follow the channel model: the first stream's
//! component bit is set for X and Y errors, the second stream's for Z and
//! Y, and stream a's checks read stream a's component.
//!
//! Scheduling states pack the two per-variable neighborhood words into one
//! integer with a shared padding width, so one Q-table drives the joint
//! problem exactly as in the binary case.

use crate::binary_decoder::{
    apply_hard_flip, cn_message, init_state, recompute_residual, recompute_sigma, BpConfig,
    DecodeTrace, DecoderState, ScheduleSource, TraceStep,
};
use crate::channel::{prior_llr, sample_depolarizing, NoiseParams, PauliFrame};
use crate::error::{Error, Result};
use crate::fast_infer::SchedulerHeap;
use crate::gf2::BitVec;
use crate::graph::TannerAdjacency;
use crate::llr::{clip, log_sum_exp2};
use crate::scheduler_rl::{
    epsilon_at, reward, select_action, QTable, QVariant, TieBreak, TrainConfig, TrainProgress,
    PROGRESS_WINDOW,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Enumeration order used everywhere a Pauli indexes an array, and the
/// precedence order for argmax ties.
pub const PAULIS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

impl Pauli {
    /// Component seen by the first stream's checks: set for X and Y.
    pub fn comp_a(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Component seen by the second stream's checks: set for Z and Y.
    pub fn comp_b(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    pub fn from_components(a: bool, b: bool) -> Pauli {
        match (a, b) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Position in [`PAULIS`].
    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }
}

impl std::fmt::Display for Pauli {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Depolarizing prior pieces shared by every variable: the initialization
/// LLR, the marginal component priors, the joint Pauli prior, and the
/// correction factors that undo the double counting when the two marginal
/// streams are recombined into a joint belief.
#[derive(Clone, Debug)]
pub struct DepolPrior {
    pub p: f64,
    pub mu_dep: f64,
    /// Marginal prior of each component bit value, indexed by the bit.
    pub pi_a: [f64; 2],
    pub pi_b: [f64; 2],
    /// Joint Pauli prior in I, X, Y, Z order.
    pub pi: [f64; 4],
    /// kappa_q = pi_q / (pi_a[bit_a(q)] * pi_b[bit_b(q)]).
    pub kappa: [f64; 4],
    ln_kappa: [f64; 4],
}

impl DepolPrior {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.75) || !p.is_finite() {
            return Err(Error::InvalidParam(format!(
                "depolarizing prior needs p in (0, 0.75), got {p}"
            )));
        }
        let third = p / 3.0;
        let pi = [1.0 - p, third, third, third];
        let marg = 2.0 * third;
        let pi_a = [1.0 - marg, marg];
        let pi_b = pi_a;
        let mut kappa = [0.0; 4];
        let mut ln_kappa = [0.0; 4];
        for (slot, &q) in PAULIS.iter().enumerate() {
            let denom = pi_a[usize::from(q.comp_a())] * pi_b[usize::from(q.comp_b())];
            kappa[slot] = pi[slot] / denom;
            ln_kappa[slot] = kappa[slot].ln();
        }
        Ok(DepolPrior {
            p,
            mu_dep: prior_llr(&NoiseParams::Depolarizing { p }),
            pi_a,
            pi_b,
            pi,
            kappa,
            ln_kappa,
        })
    }

    /// Diagnostic prior with the component correlation removed: kappa
    /// forced to 1, so the quaternary update factors into two independent
    /// binary streams. Only used to cross-check against the binary decoder.
    pub fn unit_kappa(p: f64) -> Result<Self> {
        let mut prior = Self::new(p)?;
        prior.kappa = [1.0; 4];
        prior.ln_kappa = [0.0; 4];
        Ok(prior)
    }

    pub fn ln_kappa(&self, q: Pauli) -> f64 {
        self.ln_kappa[q.index()]
    }
}

/// Log-scale likelihood of Pauli q under an LLR pair: each component bit
/// contributes plus or minus half its stream's LLR.
pub fn log_likelihood(q: Pauli, l_a: f64, l_b: f64) -> f64 {
    let sa = if q.comp_a() { -0.5 } else { 0.5 };
    let sb = if q.comp_b() { -0.5 } else { 0.5 };
    sa * l_a + sb * l_b
}

/// Linear-scale form of [`log_likelihood`]. Internal computations stay in
/// the log domain; this form overflows for large LLRs and exists for
/// direct checks against the defining formula.
pub fn likelihood(q: Pauli, l_a: f64, l_b: f64) -> f64 {
    log_likelihood(q, l_a, l_b).exp()
}

/// Unnormalized log scores of the four Paulis under an LLR pair.
fn scores(prior: &DepolPrior, l_a: f64, l_b: f64) -> [f64; 4] {
    let mut g = [0.0; 4];
    for (slot, &q) in PAULIS.iter().enumerate() {
        g[slot] = prior.ln_kappa[slot] + log_likelihood(q, l_a, l_b);
    }
    g
}

/// Softmax of log scores with max subtraction.
pub fn belief_from_scores(g: &[f64; 4]) -> [f64; 4] {
    let m = g.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
    let mut b = [0.0; 4];
    let mut sum = 0.0;
    for k in 0..4 {
        b[k] = (g[k] - m).exp();
        sum += b[k];
    }
    for v in &mut b {
        *v /= sum;
    }
    b
}

/// First maximum in I, X, Y, Z order.
pub fn argmax_pauli(b: &[f64; 4]) -> Pauli {
    let mut best = 0;
    for k in 1..4 {
        if b[k] > b[best] {
            best = k;
        }
    }
    PAULIS[best]
}

/// Outgoing stream-a LLR from log scores: Paulis whose a-component is
/// clear against those whose a-component is set.
fn msg_a_from_scores(g: &[f64; 4], llr_clip: f64) -> f64 {
    clip(
        log_sum_exp2(g[0], g[3]) - log_sum_exp2(g[1], g[2]),
        llr_clip,
    )
}

/// Outgoing stream-b LLR from log scores.
fn msg_b_from_scores(g: &[f64; 4], llr_clip: f64) -> f64 {
    clip(
        log_sum_exp2(g[0], g[1]) - log_sum_exp2(g[2], g[3]),
        llr_clip,
    )
}

/// Borrowed inputs of one decoding problem: the two graphs, their
/// syndromes, per-variable per-stream priors, and the shared depolarizing
/// prior pieces.
#[derive(Clone, Copy)]
pub struct QuatProblem<'a> {
    pub adj_a: &'a TannerAdjacency,
    pub adj_b: &'a TannerAdjacency,
    pub s_a: &'a BitVec,
    pub s_b: &'a BitVec,
    pub priors_a: &'a [f64],
    pub priors_b: &'a [f64],
    pub prior: &'a DepolPrior,
}

/// Decoding state: one binary stream state per graph plus the quaternary
/// decisions, the per-variable belief distributions, and the packed joint
/// scheduling words.
#[derive(Clone, Debug)]
pub struct QuatState {
    pub a: DecoderState,
    pub b: DecoderState,
    pub qhat: Vec<Pauli>,
    /// Normalized quaternary belief at each variable's last visit.
    pub belief_dist: Vec<[f64; 4]>,
    /// Shared padding width of the packed joint words.
    pub shift: u32,
    /// joint[i] = a.sigma[i] + (b.sigma[i] << shift), kept incrementally.
    pub joint: Vec<u64>,
}

impl QuatState {
    /// Total residual weight over both streams.
    pub fn w(&self) -> usize {
        self.a.w + self.b.w
    }
}

/// Shared padding width for a graph pair.
pub fn joint_shift(adj_a: &TannerAdjacency, adj_b: &TannerAdjacency) -> u32 {
    let shift = adj_a.max_var_degree().max(adj_b.max_var_degree()) as u32;
    assert!(shift <= 31, "joint state words need two degree fields in 64 bits");
    shift
}

/// Size of the packed joint state space.
pub fn joint_state_count(adj_a: &TannerAdjacency, adj_b: &TannerAdjacency) -> u64 {
    1u64 << (2 * joint_shift(adj_a, adj_b))
}

/// Packs two per-stream state words into the joint scheduling word.
pub fn pack_joint(sigma_a: u64, sigma_b: u64, shift: u32) -> u64 {
    sigma_a + (sigma_b << shift)
}

/// Variables carrying at least one edge on either graph.
pub fn quat_active(adj_a: &TannerAdjacency, adj_b: &TannerAdjacency) -> Vec<u32> {
    (0..adj_a.n_vars() as u32)
        .filter(|&i| adj_a.var_degree(i as usize) + adj_b.var_degree(i as usize) > 0)
        .collect()
}

/// Fresh state: each stream initialized as in the binary decoder, hard
/// Paulis from the per-stream prior signs, beliefs at the bare priors.
pub fn init_quat_state(prob: &QuatProblem<'_>, llr_clip: f64) -> QuatState {
    assert_eq!(
        prob.adj_a.n_vars(),
        prob.adj_b.n_vars(),
        "graph pair must share the variable set"
    );
    let n = prob.adj_a.n_vars();
    let a = init_state(prob.adj_a, prob.s_a, prob.priors_a, llr_clip);
    let b = init_state(prob.adj_b, prob.s_b, prob.priors_b, llr_clip);
    let shift = joint_shift(prob.adj_a, prob.adj_b);
    let mut qhat = Vec::with_capacity(n);
    let mut belief_dist = Vec::with_capacity(n);
    let mut joint = Vec::with_capacity(n);
    for i in 0..n {
        qhat.push(Pauli::from_components(a.hard.get(i), b.hard.get(i)));
        let g = scores(prob.prior, prob.priors_a[i], prob.priors_b[i]);
        belief_dist.push(belief_from_scores(&g));
        joint.push(pack_joint(a.sigma[i], b.sigma[i], shift));
    }
    QuatState {
        a,
        b,
        qhat,
        belief_dist,
        shift,
        joint,
    }
}

fn refresh_joint(state: &mut QuatState, vars: &[u32]) {
    for &u in vars {
        let u = u as usize;
        state.joint[u] = pack_joint(state.a.sigma[u], state.b.sigma[u], state.shift);
    }
}

/// One sequential update at variable i: refresh both streams' incoming
/// check messages, form the belief pair, emit coupled outgoing messages,
/// then take the quaternary hard decision. Component flips propagate
/// through each stream's incremental residual machinery. Returns which
/// components flipped.
pub fn quat_svns_update(
    state: &mut QuatState,
    prob: &QuatProblem<'_>,
    llr_clip: f64,
    i: usize,
) -> (bool, bool) {
    let edges_a = prob.adj_a.var_edges(i);
    let edges_b = prob.adj_b.var_edges(i);
    if edges_a.is_empty() && edges_b.is_empty() {
        return (false, false);
    }
    for &k in edges_a {
        state.a.msg_c2v[k as usize] = cn_message(&state.a, prob.adj_a, prob.s_a, k, llr_clip);
    }
    for &k in edges_b {
        state.b.msg_c2v[k as usize] = cn_message(&state.b, prob.adj_b, prob.s_b, k, llr_clip);
    }
    let mut l_a = prob.priors_a[i];
    for &k in edges_a {
        l_a += state.a.msg_c2v[k as usize];
    }
    let mut l_b = prob.priors_b[i];
    for &k in edges_b {
        l_b += state.b.msg_c2v[k as usize];
    }
    state.a.belief[i] = l_a;
    state.b.belief[i] = l_b;
    for &k in edges_a {
        let g = scores(prob.prior, l_a - state.a.msg_c2v[k as usize], l_b);
        state.a.msg_v2c[k as usize] = msg_a_from_scores(&g, llr_clip);
    }
    for &k in edges_b {
        let g = scores(prob.prior, l_a, l_b - state.b.msg_c2v[k as usize]);
        state.b.msg_v2c[k as usize] = msg_b_from_scores(&g, llr_clip);
    }
    let g = scores(prob.prior, l_a, l_b);
    let bel = belief_from_scores(&g);
    state.belief_dist[i] = bel;
    let q_new = argmax_pauli(&bel);
    state.qhat[i] = q_new;
    let flip_a = q_new.comp_a() != state.a.hard.get(i);
    let flip_b = q_new.comp_b() != state.b.hard.get(i);
    if flip_a {
        apply_hard_flip(&mut state.a, prob.adj_a, i);
        refresh_joint(state, &prob.adj_a.second_order_neighborhood(i));
    }
    if flip_b {
        apply_hard_flip(&mut state.b, prob.adj_b, i);
        refresh_joint(state, &prob.adj_b.second_order_neighborhood(i));
    }
    (flip_a, flip_b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuatDecodeResult {
    pub qhat: Vec<Pauli>,
    pub frame: PauliFrame,
    pub converged: bool,
    /// Iteration index at exit, with the binary decoder's conventions.
    pub iterations: usize,
}

fn result_from_state(state: &QuatState, converged: bool, iterations: usize) -> QuatDecodeResult {
    QuatDecodeResult {
        qhat: state.qhat.clone(),
        frame: PauliFrame {
            e_a: state.a.hard.clone(),
            e_b: state.b.hard.clone(),
        },
        converged,
        iterations,
    }
}

/// Flooding rounds of the same step math applied to every node per round:
/// all check messages on both graphs, then every variable's beliefs,
/// outgoing messages and hard decision, then a global residual rebuild.
pub fn run_qbp(state: &mut QuatState, prob: &QuatProblem<'_>, cfg: &BpConfig) -> (bool, usize) {
    if state.w() == 0 {
        return (true, 0);
    }
    let n = prob.adj_a.n_vars();
    for it in 1..=cfg.max_iters {
        for (adj, st, s) in [
            (prob.adj_a, &mut state.a, prob.s_a),
            (prob.adj_b, &mut state.b, prob.s_b),
        ] {
            for j in 0..adj.n_checks() {
                for &k in adj.check_edges(j) {
                    st.msg_c2v[k as usize] = cn_message(st, adj, s, k, cfg.llr_clip);
                }
            }
        }
        for i in 0..n {
            let edges_a = prob.adj_a.var_edges(i);
            let edges_b = prob.adj_b.var_edges(i);
            if edges_a.is_empty() && edges_b.is_empty() {
                continue;
            }
            let mut l_a = prob.priors_a[i];
            for &k in edges_a {
                l_a += state.a.msg_c2v[k as usize];
            }
            let mut l_b = prob.priors_b[i];
            for &k in edges_b {
                l_b += state.b.msg_c2v[k as usize];
            }
            state.a.belief[i] = l_a;
            state.b.belief[i] = l_b;
            for &k in edges_a {
                let g = scores(prob.prior, l_a - state.a.msg_c2v[k as usize], l_b);
                state.a.msg_v2c[k as usize] = msg_a_from_scores(&g, cfg.llr_clip);
            }
            for &k in edges_b {
                let g = scores(prob.prior, l_a, l_b - state.b.msg_c2v[k as usize]);
                state.b.msg_v2c[k as usize] = msg_b_from_scores(&g, cfg.llr_clip);
            }
            let bel = belief_from_scores(&scores(prob.prior, l_a, l_b));
            state.belief_dist[i] = bel;
            let q_new = argmax_pauli(&bel);
            state.qhat[i] = q_new;
            state.a.hard.set(i, q_new.comp_a());
            state.b.hard.set(i, q_new.comp_b());
        }
        let (delta_a, w_a) = recompute_residual(prob.adj_a, prob.s_a, &state.a.hard);
        state.a.sigma = recompute_sigma(prob.adj_a, &delta_a);
        state.a.delta = delta_a;
        state.a.w = w_a;
        let (delta_b, w_b) = recompute_residual(prob.adj_b, prob.s_b, &state.b.hard);
        state.b.sigma = recompute_sigma(prob.adj_b, &delta_b);
        state.b.delta = delta_b;
        state.b.w = w_b;
        for u in 0..n {
            state.joint[u] = pack_joint(state.a.sigma[u], state.b.sigma[u], state.shift);
        }
        if state.w() == 0 {
            return (true, it);
        }
    }
    (state.w() == 0, cfg.max_iters)
}

pub fn decode_qbp(prob: &QuatProblem<'_>, cfg: &BpConfig) -> QuatDecodeResult {
    let mut state = init_quat_state(prob, cfg.llr_clip);
    let (converged, iterations) = run_qbp(&mut state, prob, cfg);
    result_from_state(&state, converged, iterations)
}

/// Sequential decoding on an existing state, with the binary decoder's
/// iteration accounting: the residual pair is checked before every step
/// and an iteration counts once any update in it ran.
pub fn run_qsvns(
    state: &mut QuatState,
    prob: &QuatProblem<'_>,
    cfg: &BpConfig,
    source: &mut ScheduleSource<'_>,
    mut trace: Option<&mut DecodeTrace>,
) -> (bool, usize) {
    if state.w() == 0 {
        return (true, 0);
    }
    let active = quat_active(prob.adj_a, prob.adj_b);
    let mut order: Vec<u32> = Vec::with_capacity(active.len());
    for it in 1..=cfg.max_iters {
        order.clear();
        order.extend_from_slice(&active);
        if let ScheduleSource::Random(rng) = source {
            order.shuffle(*rng);
        }
        let mut stepped = false;
        for step in 0..order.len() {
            if state.w() == 0 {
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
                        let key = q.get(state.joint[u as usize], u);
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
            let (fa, fb) = quat_svns_update(state, prob, cfg.llr_clip, a as usize);
            stepped = true;
            if let Some(t) = trace.as_deref_mut() {
                t.steps.push(TraceStep {
                    action: a,
                    flipped: fa || fb,
                    w_after: state.w(),
                });
            }
        }
    }
    (state.w() == 0, cfg.max_iters)
}

pub fn decode_qsvns(
    prob: &QuatProblem<'_>,
    cfg: &BpConfig,
    source: &mut ScheduleSource<'_>,
    trace: Option<&mut DecodeTrace>,
) -> QuatDecodeResult {
    let mut state = init_quat_state(prob, cfg.llr_clip);
    let (converged, iterations) = run_qsvns(&mut state, prob, cfg, source, trace);
    result_from_state(&state, converged, iterations)
}

/// Greedy two-stream decoder with heap-based action selection,
/// decision-equivalent to [`decode_qsvns`] with a greedy source. The
/// update itself is the shared [`quat_svns_update`], so messages and
/// decisions are identical to the reference by construction; only the
/// argmax is replaced, by an indexed heap over the packed joint words
/// whose keys are repaired locally when a component flip moves nearby
/// state words. Quaternary argmax ties between the X and Z scores occur
/// exactly on symmetric inputs, so approximate message arithmetic (such
/// as ratio-cached check products) would break tie directions; exact
/// selection demands the exact update.
pub struct QuatFastEngine<'a> {
    prob: QuatProblem<'a>,
    q: &'a QTable,
    llr_clip: f64,
    pub state: QuatState,
    pub heap: SchedulerHeap,
    active: Vec<u32>,
    aff_a: Vec<Vec<u32>>,
    aff_b: Vec<Vec<u32>>,
}

impl<'a> QuatFastEngine<'a> {
    pub fn new(prob: QuatProblem<'a>, q: &'a QTable, llr_clip: f64) -> Self {
        assert_eq!(q.n(), prob.adj_a.n_vars(), "table sized for a different graph pair");
        assert!(
            q.s_max() >= joint_state_count(prob.adj_a, prob.adj_b),
            "table state space smaller than the joint words"
        );
        let state = init_quat_state(&prob, llr_clip);
        let heap = SchedulerHeap::new(prob.adj_a.n_vars());
        let active = quat_active(prob.adj_a, prob.adj_b);
        let aff_a = (0..prob.adj_a.n_vars())
            .map(|i| prob.adj_a.second_order_neighborhood(i))
            .collect();
        let aff_b = (0..prob.adj_b.n_vars())
            .map(|i| prob.adj_b.second_order_neighborhood(i))
            .collect();
        QuatFastEngine {
            prob,
            q,
            llr_clip,
            state,
            heap,
            active,
            aff_a,
            aff_b,
        }
    }

    pub fn w(&self) -> usize {
        self.state.w()
    }

    pub fn begin_iteration(&mut self) {
        let q = self.q;
        let joint = &self.state.joint;
        self.heap.rebuild(&self.active, |u| q.get(joint[u as usize], u));
    }

    pub fn step(&mut self) -> Option<TraceStep> {
        let a = self.heap.extract_max()?;
        let prob = self.prob;
        let (fa, fb) = quat_svns_update(&mut self.state, &prob, self.llr_clip, a as usize);
        if fa {
            self.repair_keys(a as usize, true);
        }
        if fb {
            self.repair_keys(a as usize, false);
        }
        Some(TraceStep {
            action: a,
            flipped: fa || fb,
            w_after: self.state.w(),
        })
    }

    /// Re-keys the remaining variables whose joint words the flipped
    /// stream can have moved; the update already refreshed the words.
    fn repair_keys(&mut self, i: usize, stream_a: bool) {
        let aff = if stream_a { &self.aff_a[i] } else { &self.aff_b[i] };
        let state = &self.state;
        let heap = &mut self.heap;
        let q = self.q;
        for &u in aff {
            heap.change_key(u, q.get(state.joint[u as usize], u));
        }
    }

    pub fn run(&mut self, max_iters: usize, mut trace: Option<&mut DecodeTrace>) -> (bool, usize) {
        if self.state.w() == 0 {
            return (true, 0);
        }
        for it in 1..=max_iters {
            self.begin_iteration();
            let mut stepped = false;
            loop {
                if self.state.w() == 0 {
                    return (true, if stepped { it } else { it - 1 });
                }
                let Some(rec) = self.step() else { break };
                stepped = true;
                if let Some(t) = trace.as_deref_mut() {
                    t.steps.push(rec);
                }
            }
        }
        (self.state.w() == 0, max_iters)
    }
}

/// Greedy table-driven two-stream decode through the fast engine.
pub fn decode_qsvns_fast(
    prob: &QuatProblem<'_>,
    q: &QTable,
    cfg: &BpConfig,
    trace: Option<&mut DecodeTrace>,
) -> QuatDecodeResult {
    let mut engine = QuatFastEngine::new(*prob, q, cfg.llr_clip);
    let (converged, iterations) = engine.run(cfg.max_iters, trace);
    result_from_state(&engine.state, converged, iterations)
}

pub fn train_quat(
    adj_a: &TannerAdjacency,
    adj_b: &TannerAdjacency,
    cfg: &TrainConfig,
) -> Result<QTable> {
    train_quat_with(adj_a, adj_b, cfg, |_| {})
}

/// Q-learning over depolarizing frames on a graph pair. Mirrors the binary
/// trainer: same episode structure, schedule without replacement, one-step
/// lookahead, and a reward normalized by the action's combined degree.
pub fn train_quat_with(
    adj_a: &TannerAdjacency,
    adj_b: &TannerAdjacency,
    cfg: &TrainConfig,
    mut progress: impl FnMut(TrainProgress),
) -> Result<QTable> {
    cfg.validate()?;
    assert_eq!(adj_a.n_vars(), adj_b.n_vars(), "graph pair must share the variable set");
    let n = adj_a.n_vars();
    let mut grid_priors = Vec::with_capacity(cfg.p_grid.len());
    for &p in &cfg.p_grid {
        NoiseParams::Depolarizing { p }.validate()?;
        grid_priors.push(DepolPrior::new(p)?);
    }
    let mut q = QTable::new(QVariant::Quaternary, joint_state_count(adj_a, adj_b), n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let active = quat_active(adj_a, adj_b);
    let mut window_hits = 0usize;
    let mut remaining: Vec<u32> = Vec::with_capacity(active.len());

    for ep in 1..=cfg.episodes {
        let slot = rng.gen_range(0..cfg.p_grid.len());
        let p = cfg.p_grid[slot];
        let frame = sample_depolarizing(n, p, &mut rng);
        let s_a = adj_a.syndrome_of(&frame.e_a);
        let s_b = adj_b.syndrome_of(&frame.e_b);
        let mu = grid_priors[slot].mu_dep;
        let priors_a = vec![mu; n];
        let priors_b = vec![mu; n];
        let prob = QuatProblem {
            adj_a,
            adj_b,
            s_a: &s_a,
            s_b: &s_b,
            priors_a: &priors_a,
            priors_b: &priors_b,
            prior: &grid_priors[slot],
        };
        let mut st = init_quat_state(&prob, cfg.llr_clip);
        let eps = epsilon_at(cfg, ep);

        'episode: for _ in 1..=cfg.max_iters {
            if st.w() == 0 {
                break;
            }
            remaining.clear();
            remaining.extend_from_slice(&active);
            while !remaining.is_empty() {
                if st.w() == 0 {
                    break 'episode;
                }
                let a = select_action(&q, &st.joint, &remaining, eps, TieBreak::UniformRandom, &mut rng);
                let sigma_a = st.joint[a as usize];
                let w_before = st.w();
                quat_svns_update(&mut st, &prob, cfg.llr_clip, a as usize);
                let degree = adj_a.var_degree(a as usize) + adj_b.var_degree(a as usize);
                let r = reward(w_before, st.w(), degree);
                debug_assert!((-1.0..=2.0).contains(&r), "reward {r} out of range");
                let pos = remaining.iter().position(|&u| u == a).expect("a came from remaining");
                remaining.swap_remove(pos);
                let best_future = if remaining.is_empty() {
                    0.0
                } else {
                    remaining
                        .iter()
                        .map(|&u| q.get(st.joint[u as usize], u))
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                q.update(sigma_a, a, r + cfg.gamma * best_future, cfg.alpha);
            }
        }

        if st.w() == 0 {
            window_hits += 1;
        }
        if ep % PROGRESS_WINDOW == 0 {
            progress(TrainProgress {
                episodes_done: ep,
                window_converged: window_hits as f64 / PROGRESS_WINDOW as f64,
            });
            window_hits = 0;
        }
    }
    Ok(q)
}
