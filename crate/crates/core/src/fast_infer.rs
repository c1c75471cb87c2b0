//! Accelerated greedy sequential inference.
//!
//! The reference greedy decoder pays two recurring costs per step: check
//! messages rebuild their exclusion products from scratch, and action
//! selection scans every remaining variable. This engine removes both.
//! Each check caches the product of tanh-half values over its edges, so an
//! exclusion product is one division (with a direct-loop fallback when the
//! excluded factor is too small to divide by, and a periodic exact rebuild
//! that stops drift from accumulating). Action selection runs off an
//! indexed max-heap over the remaining variables that is rebuilt at each
//! iteration boundary and repaired point-wise when a hard-decision flip
//! changes nearby state words.
//!
//! The engine must track the reference decoder decision for decision:
//! same actions, same flips, same iteration counts. Caching changes only
//! the rounding of intermediate products, never the update rule, and the
//! equivalence is enforced by trace-comparison tests rather than assumed.

use crate::binary_decoder::{
    apply_hard_flip, init_state, BpConfig, DecodeResult, DecodeTrace, DecoderState, TraceStep,
};
use crate::gf2::BitVec;
use crate::graph::TannerAdjacency;
use crate::llr::{check_message, clip, tanh_half};
use crate::scheduler_rl::QTable;

/// Excluded factors at or below this magnitude take the direct-loop path
/// instead of a ratio. Messages clipped to ±30 keep |x| above 1e-2, so in
/// live decoding only an exact zero can trigger the fallback.
pub const RATIO_EPS: f64 = 1e-12;

/// A check's product is rebuilt exactly after this many consecutive ratio
/// updates, bounding multiplicative rounding drift.
pub const REBUILD_PERIOD: u32 = 4096;

/// Per-edge tanh-half values and one cached product per check.
pub struct CheckCache {
    x: Vec<f64>,
    prod: Vec<f64>,
    since_rebuild: Vec<u32>,
    pub ratio_updates: u64,
    pub rebuilds: u64,
    /// Edges walked by rebuilds and fallback exclusion loops.
    pub slow_edge_visits: u64,
}

impl CheckCache {
    /// Cache matching a state's current variable-to-check messages.
    pub fn new(adj: &TannerAdjacency, msg_v2c: &[f64]) -> Self {
        assert_eq!(msg_v2c.len(), adj.n_edges(), "message array length mismatch");
        let x: Vec<f64> = msg_v2c.iter().map(|&m| tanh_half(m)).collect();
        let mut cache = CheckCache {
            x,
            prod: vec![1.0; adj.n_checks()],
            since_rebuild: vec![0; adj.n_checks()],
            ratio_updates: 0,
            rebuilds: 0,
            slow_edge_visits: 0,
        };
        for j in 0..adj.n_checks() {
            cache.rebuild_check(adj, j);
        }
        cache.rebuilds = 0;
        cache.slow_edge_visits = 0;
        cache
    }

    pub fn x(&self, k: u32) -> f64 {
        self.x[k as usize]
    }

    pub fn prod(&self, j: usize) -> f64 {
        self.prod[j]
    }

    /// Exact product over the check's edges.
    pub fn rebuild_check(&mut self, adj: &TannerAdjacency, j: usize) {
        let mut p = 1.0;
        for &k in adj.check_edges(j) {
            p *= self.x[k as usize];
        }
        self.prod[j] = p;
        self.since_rebuild[j] = 0;
        self.rebuilds += 1;
        self.slow_edge_visits += adj.check_degree(j) as u64;
    }

    /// Product over check j's edges excluding edge k: the cached product
    /// divided by x_k, or a direct loop when x_k is too small to divide by.
    pub fn prod_excl(&mut self, adj: &TannerAdjacency, j: usize, k: u32) -> f64 {
        let xk = self.x[k as usize];
        if xk.abs() > RATIO_EPS {
            return self.prod[j] / xk;
        }
        let mut p = 1.0;
        for &k2 in adj.check_edges(j) {
            if k2 != k {
                p *= self.x[k2 as usize];
            }
        }
        self.slow_edge_visits += adj.check_degree(j) as u64;
        p
    }

    /// Replaces x_k and repairs the owning check's product, by ratio when
    /// the old factor is safely divisible and the drift budget allows it.
    pub fn set_x(&mut self, adj: &TannerAdjacency, k: u32, x_new: f64) {
        let j = adj.check_of(k);
        let x_old = self.x[k as usize];
        self.x[k as usize] = x_new;
        if x_old.abs() > RATIO_EPS && self.since_rebuild[j] < REBUILD_PERIOD {
            // Ratio first: an unchanged factor multiplies by exactly 1.
            self.prod[j] *= x_new / x_old;
            self.since_rebuild[j] += 1;
            self.ratio_updates += 1;
        } else {
            self.rebuild_check(adj, j);
        }
    }
}

const NOT_IN_HEAP: usize = usize::MAX;

/// Indexed binary max-heap over variable ids. Larger key wins; equal keys
/// go to the lower index, which matches the reference linear argmax
/// exactly. A position table gives O(log) membership updates.
pub struct SchedulerHeap {
    heap: Vec<u32>,
    pos: Vec<usize>,
    key: Vec<f64>,
    pub sift_moves: u64,
}

impl SchedulerHeap {
    pub fn new(n_vars: usize) -> Self {
        SchedulerHeap {
            heap: Vec::new(),
            pos: vec![NOT_IN_HEAP; n_vars],
            key: vec![0.0; n_vars],
            sift_moves: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, u: u32) -> bool {
        self.pos[u as usize] != NOT_IN_HEAP
    }

    /// Key as stored; meaningful only while u is a member.
    pub fn key_of(&self, u: u32) -> f64 {
        self.key[u as usize]
    }

    /// Current members in internal heap order.
    pub fn members(&self) -> &[u32] {
        &self.heap
    }

    fn beats(&self, a: u32, b: u32) -> bool {
        let (ka, kb) = (self.key[a as usize], self.key[b as usize]);
        ka > kb || (ka == kb && a < b)
    }

    /// Replaces the contents with `members`, keying each via `key_fn`.
    pub fn rebuild(&mut self, members: &[u32], mut key_fn: impl FnMut(u32) -> f64) {
        for &u in &self.heap {
            self.pos[u as usize] = NOT_IN_HEAP;
        }
        self.heap.clear();
        for &u in members {
            debug_assert!(self.pos[u as usize] == NOT_IN_HEAP, "duplicate member {u}");
            self.key[u as usize] = key_fn(u);
            self.pos[u as usize] = self.heap.len();
            self.heap.push(u);
        }
        for i in (0..self.heap.len() / 2).rev() {
            self.sift_down(i);
        }
    }

    pub fn peek(&self) -> Option<u32> {
        self.heap.first().copied()
    }

    pub fn extract_max(&mut self) -> Option<u32> {
        let top = *self.heap.first()?;
        self.pos[top as usize] = NOT_IN_HEAP;
        let last = self.heap.pop().expect("nonempty");
        if last != top {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0);
        }
        Some(top)
    }

    /// Updates a member's key in place; ignores non-members so callers can
    /// sweep a neighborhood without filtering first.
    pub fn change_key(&mut self, u: u32, new_key: f64) {
        let slot = self.pos[u as usize];
        if slot == NOT_IN_HEAP {
            return;
        }
        let old = self.key[u as usize];
        self.key[u as usize] = new_key;
        if new_key > old {
            self.sift_up(slot);
        } else if new_key < old {
            self.sift_down(slot);
        }
    }

    fn swap_slots(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a] as usize] = a;
        self.pos[self.heap[b] as usize] = b;
        self.sift_moves += 1;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.beats(self.heap[i], self.heap[parent]) {
                self.swap_slots(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let mut best = i;
            for child in [2 * i + 1, 2 * i + 2] {
                if child < self.heap.len() && self.beats(self.heap[child], self.heap[best]) {
                    best = child;
                }
            }
            if best == i {
                return;
            }
            self.swap_slots(i, best);
            i = best;
        }
    }
}

/// Greedy sequential decoder with cached products and heap selection.
///
/// `state` stays observationally identical to the reference decoder's:
/// the same messages (up to cached-product rounding), the same beliefs,
/// and exactly the same hard decisions, residual and state words.
pub struct FastEngine<'a> {
    adj: &'a TannerAdjacency,
    q: &'a QTable,
    syndrome: &'a BitVec,
    priors: &'a [f64],
    llr_clip: f64,
    pub state: DecoderState,
    pub cache: CheckCache,
    pub heap: SchedulerHeap,
    active: Vec<u32>,
    /// Variables whose state word a flip at i can touch, per variable.
    aff: Vec<Vec<u32>>,
    /// Edges walked by message updates and flip propagation.
    pub edge_visits: u64,
}

impl<'a> FastEngine<'a> {
    pub fn new(
        adj: &'a TannerAdjacency,
        q: &'a QTable,
        syndrome: &'a BitVec,
        priors: &'a [f64],
        llr_clip: f64,
    ) -> Self {
        let state = init_state(adj, syndrome, priors, llr_clip);
        Self::from_state(adj, q, syndrome, priors, llr_clip, state)
    }

    /// Wraps an existing decoder state, picking up its messages as the
    /// cache seed. The state must belong to this adjacency.
    pub fn from_state(
        adj: &'a TannerAdjacency,
        q: &'a QTable,
        syndrome: &'a BitVec,
        priors: &'a [f64],
        llr_clip: f64,
        state: DecoderState,
    ) -> Self {
        assert_eq!(q.n(), adj.n_vars(), "table sized for a different graph");
        assert!(
            q.s_max() >= adj.state_count(),
            "table state space smaller than the graph's"
        );
        let cache = CheckCache::new(adj, &state.msg_v2c);
        let heap = SchedulerHeap::new(adj.n_vars());
        let active = adj.active_vars();
        let aff = (0..adj.n_vars())
            .map(|i| adj.second_order_neighborhood(i))
            .collect();
        FastEngine {
            adj,
            q,
            syndrome,
            priors,
            llr_clip,
            state,
            cache,
            heap,
            active,
            aff,
            edge_visits: 0,
        }
    }

    pub fn w(&self) -> usize {
        self.state.w
    }

    /// Starts an iteration: the remaining set becomes every active
    /// variable, keyed by the table under current state words.
    pub fn begin_iteration(&mut self) {
        let q = self.q;
        let sigma = &self.state.sigma;
        self.heap.rebuild(&self.active, |u| q.get(sigma[u as usize], u));
    }

    /// Extracts the best remaining action and updates it. `None` once the
    /// iteration's remaining set is exhausted.
    pub fn step(&mut self) -> Option<TraceStep> {
        let a = self.heap.extract_max()?;
        let flipped = self.update_var(a as usize);
        Some(TraceStep {
            action: a,
            flipped,
            w_after: self.state.w,
        })
    }

    /// One sequential update, mathematically the reference `svns_update`
    /// with cached exclusion products. Returns whether the hard decision
    /// flipped.
    pub(crate) fn update_var(&mut self, i: usize) -> bool {
        let adj = self.adj;
        let edges = adj.var_edges(i);
        if edges.is_empty() {
            return false;
        }
        for &k in edges {
            let j = adj.check_of(k);
            let mut prod = self.cache.prod_excl(adj, j, k);
            if self.syndrome.get(j) {
                prod = -prod;
            }
            self.state.msg_c2v[k as usize] = check_message(prod, self.llr_clip);
        }
        let mut l = self.priors[i];
        for &k in edges {
            l += self.state.msg_c2v[k as usize];
        }
        self.state.belief[i] = l;
        for &k in edges {
            let v2c = clip(l - self.state.msg_c2v[k as usize], self.llr_clip);
            self.state.msg_v2c[k as usize] = v2c;
            self.cache.set_x(adj, k, tanh_half(v2c));
        }
        self.edge_visits += 3 * edges.len() as u64;
        let decide = l < 0.0;
        if decide != self.state.hard.get(i) {
            self.on_flip(i);
            true
        } else {
            false
        }
    }

    /// Flip propagation: residual bits, weight and state words through the
    /// shared incremental rule, then heap keys for the remaining variables
    /// whose state words just moved.
    fn on_flip(&mut self, i: usize) {
        let adj = self.adj;
        for &k in adj.var_edges(i) {
            self.edge_visits += adj.check_degree(adj.check_of(k)) as u64;
        }
        apply_hard_flip(&mut self.state, adj, i);
        let q = self.q;
        let sigma = &self.state.sigma;
        let heap = &mut self.heap;
        for &u in &self.aff[i] {
            heap.change_key(u, q.get(sigma[u as usize], u));
        }
    }

    /// Full decode loop; same exit semantics as the reference decoder.
    pub fn run(&mut self, max_iters: usize, mut trace: Option<&mut DecodeTrace>) -> (bool, usize) {
        if self.state.w == 0 {
            return (true, 0);
        }
        for it in 1..=max_iters {
            self.begin_iteration();
            let mut stepped = false;
            loop {
                if self.state.w == 0 {
                    return (true, if stepped { it } else { it - 1 });
                }
                let Some(rec) = self.step() else { break };
                stepped = true;
                if let Some(t) = trace.as_deref_mut() {
                    t.steps.push(rec);
                }
            }
        }
        (self.state.w == 0, max_iters)
    }
}

/// Greedy table-driven decode through the fast engine.
pub fn decode_fast(
    adj: &TannerAdjacency,
    q: &QTable,
    syndrome: &BitVec,
    priors: &[f64],
    cfg: &BpConfig,
    trace: Option<&mut DecodeTrace>,
) -> DecodeResult {
    let mut engine = FastEngine::new(adj, q, syndrome, priors, cfg.llr_clip);
    let (converged, iterations) = engine.run(cfg.max_iters, trace);
    DecodeResult {
        e_hat: engine.state.hard.clone(),
        converged,
        iterations,
    }
}
