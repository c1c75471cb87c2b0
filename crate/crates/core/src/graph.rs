//! Edge-indexed Tanner graph adjacency.
//!
//! Edges are numbered by a row-major scan of the parity-check matrix, so
//! edge k carries the pair (check, variable) at the k-th nonzero. Two CSR
//! style nests give constant-time access to a check's edges (`cn_ptr` /
//! `cn_edges`) and a variable's edges (`vn_ptr` / `vn_edges`); within a
//! variable the edges appear in ascending check index, and `beta[k] = 2^t`
//! records the edge's position t in that local order. XOR-ing `beta` into a
//! running word is what keeps each variable's neighborhood state current as
//! residual bits flip.

use crate::gf2::{BitMatrix, BitVec};

#[derive(Clone)]
pub struct TannerAdjacency {
    n_checks: usize,
    n_vars: usize,
    /// Per edge: the check it touches.
    edge_check: Vec<u32>,
    /// Per edge: the variable it touches.
    edge_var: Vec<u32>,
    cn_ptr: Vec<u32>,
    cn_edges: Vec<u32>,
    vn_ptr: Vec<u32>,
    vn_edges: Vec<u32>,
    /// Per edge: 2^t for position t in the owning variable's edge list.
    beta: Vec<u64>,
    max_var_degree: usize,
    max_check_degree: usize,
}

impl TannerAdjacency {
    pub fn from_matrix(h: &BitMatrix) -> Self {
        let n_checks = h.rows();
        let n_vars = h.cols();
        let mut edge_check = Vec::new();
        let mut edge_var = Vec::new();
        let mut cn_ptr = Vec::with_capacity(n_checks + 1);
        cn_ptr.push(0u32);
        let mut var_degree = vec![0u32; n_vars];
        for j in 0..n_checks {
            for i in h.ones_in_row(j) {
                edge_check.push(j as u32);
                edge_var.push(i as u32);
                var_degree[i] += 1;
            }
            cn_ptr.push(edge_check.len() as u32);
        }
        let n_edges = edge_check.len();
        assert!(n_edges < u32::MAX as usize, "edge count overflow");

        // Row-major order already groups edges by check.
        let cn_edges: Vec<u32> = (0..n_edges as u32).collect();

        let mut vn_ptr = vec![0u32; n_vars + 1];
        for i in 0..n_vars {
            vn_ptr[i + 1] = vn_ptr[i] + var_degree[i];
        }
        let max_var_degree = var_degree.iter().copied().max().unwrap_or(0) as usize;
        assert!(
            max_var_degree <= 63,
            "variable degree {max_var_degree} too large for a 64-bit state word"
        );

        let mut fill = vn_ptr.clone();
        let mut vn_edges = vec![0u32; n_edges];
        let mut beta = vec![0u64; n_edges];
        for k in 0..n_edges {
            let i = edge_var[k] as usize;
            let slot = fill[i];
            // Edges arrive in ascending check order, so position within the
            // variable's list is slot - vn_ptr[i].
            vn_edges[slot as usize] = k as u32;
            beta[k] = 1u64 << (slot - vn_ptr[i]);
            fill[i] += 1;
        }

        let max_check_degree = (0..n_checks)
            .map(|j| (cn_ptr[j + 1] - cn_ptr[j]) as usize)
            .max()
            .unwrap_or(0);

        TannerAdjacency {
            n_checks,
            n_vars,
            edge_check,
            edge_var,
            cn_ptr,
            cn_edges,
            vn_ptr,
            vn_edges,
            beta,
            max_var_degree,
            max_check_degree,
        }
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_edges(&self) -> usize {
        self.edge_check.len()
    }

    #[inline]
    pub fn check_of(&self, k: u32) -> usize {
        self.edge_check[k as usize] as usize
    }

    #[inline]
    pub fn var_of(&self, k: u32) -> usize {
        self.edge_var[k as usize] as usize
    }

    /// Edge ids incident to check j, ascending variable index.
    #[inline]
    pub fn check_edges(&self, j: usize) -> &[u32] {
        &self.cn_edges[self.cn_ptr[j] as usize..self.cn_ptr[j + 1] as usize]
    }

    /// Edge ids incident to variable i, ascending check index.
    #[inline]
    pub fn var_edges(&self, i: usize) -> &[u32] {
        &self.vn_edges[self.vn_ptr[i] as usize..self.vn_ptr[i + 1] as usize]
    }

    pub fn check_degree(&self, j: usize) -> usize {
        (self.cn_ptr[j + 1] - self.cn_ptr[j]) as usize
    }

    pub fn var_degree(&self, i: usize) -> usize {
        (self.vn_ptr[i + 1] - self.vn_ptr[i]) as usize
    }

    #[inline]
    pub fn beta(&self, k: u32) -> u64 {
        self.beta[k as usize]
    }

    /// Largest variable degree; the per-variable state word needs this many
    /// bits.
    pub fn max_var_degree(&self) -> usize {
        self.max_var_degree
    }

    pub fn max_check_degree(&self) -> usize {
        self.max_check_degree
    }

    /// Number of distinct neighborhood states a variable can see.
    pub fn state_count(&self) -> u64 {
        1u64 << self.max_var_degree
    }

    /// Variables with at least one incident check, ascending.
    pub fn active_vars(&self) -> Vec<u32> {
        (0..self.n_vars as u32)
            .filter(|&i| self.var_degree(i as usize) > 0)
            .collect()
    }

    /// Variables sharing a check with variable i (including i itself when it
    /// has any neighbor), sorted ascending without duplicates. These are
    /// exactly the variables whose neighborhood state a flip at i can touch.
    pub fn second_order_neighborhood(&self, i: usize) -> Vec<u32> {
        let mut out = Vec::new();
        for &k in self.var_edges(i) {
            let j = self.check_of(k);
            for &k2 in self.check_edges(j) {
                out.push(self.edge_var[k2 as usize]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Parity of each check against an error pattern, straight off the
    /// edge list.
    pub fn syndrome_of(&self, e: &BitVec) -> BitVec {
        assert_eq!(e.len(), self.n_vars, "error length mismatch");
        let mut s = BitVec::zeros(self.n_checks);
        for k in 0..self.n_edges() {
            if e.get(self.edge_var[k] as usize) {
                let j = self.edge_check[k] as usize;
                s.set(j, !s.get(j));
            }
        }
        s
    }

    /// Reassembles the parity-check matrix from the edge list.
    pub fn rebuild_matrix(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.n_checks, self.n_vars);
        for k in 0..self.n_edges() {
            m.set(self.edge_check[k] as usize, self.edge_var[k] as usize, true);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, density: f64, rng: &mut impl Rng) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.gen::<f64>() < density {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    #[test]
    fn edge_order_is_row_major() {
        let h = BitMatrix::from_rows(&[vec![1, 1, 0, 1], vec![0, 1, 1, 0], vec![1, 0, 0, 1]]);
        let adj = TannerAdjacency::from_matrix(&h);
        assert_eq!(adj.n_edges(), 7);
        let pairs: Vec<(usize, usize)> = (0..7u32).map(|k| (adj.check_of(k), adj.var_of(k))).collect();
        assert_eq!(
            pairs,
            vec![(0, 0), (0, 1), (0, 3), (1, 1), (1, 2), (2, 0), (2, 3)]
        );
        assert_eq!(adj.check_edges(1), &[3, 4]);
        // Variable 1 sits in checks 0 and 1, in that order.
        assert_eq!(adj.var_edges(1), &[1, 3]);
        assert_eq!(adj.beta(1), 1);
        assert_eq!(adj.beta(3), 2);
    }

    #[test]
    fn beta_sums_to_full_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let h = random_matrix(8, 12, 0.3, &mut rng);
            let adj = TannerAdjacency::from_matrix(&h);
            for i in 0..adj.n_vars() {
                let sum: u64 = adj.var_edges(i).iter().map(|&k| adj.beta(k)).sum();
                assert_eq!(sum, (1u64 << adj.var_degree(i)) - 1, "var {i}");
            }
        }
    }

    #[test]
    fn var_edges_ascend_by_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h = random_matrix(20, 30, 0.2, &mut rng);
        let adj = TannerAdjacency::from_matrix(&h);
        for i in 0..adj.n_vars() {
            let checks: Vec<usize> = adj.var_edges(i).iter().map(|&k| adj.check_of(k)).collect();
            assert!(checks.windows(2).all(|w| w[0] < w[1]), "var {i}: {checks:?}");
        }
    }

    #[test]
    fn rebuild_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let h = random_matrix(9, 14, 0.25, &mut rng);
            let adj = TannerAdjacency::from_matrix(&h);
            assert!(adj.rebuild_matrix() == h);
        }
    }

    #[test]
    fn syndrome_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..30 {
            let h = random_matrix(10, 16, 0.3, &mut rng);
            let adj = TannerAdjacency::from_matrix(&h);
            let mut e = BitVec::zeros(16);
            for i in 0..16 {
                if rng.gen::<bool>() {
                    e.set(i, true);
                }
            }
            assert_eq!(adj.syndrome_of(&e), h.mul_vec(&e));
        }
    }

    #[test]
    fn second_order_neighborhood_on_chain() {
        // Chain: check j couples variables j and j+1.
        let h = BitMatrix::from_rows(&[vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 1, 1]]);
        let adj = TannerAdjacency::from_matrix(&h);
        assert_eq!(adj.second_order_neighborhood(0), vec![0, 1]);
        assert_eq!(adj.second_order_neighborhood(1), vec![0, 1, 2]);
        assert_eq!(adj.second_order_neighborhood(2), vec![1, 2, 3]);
        assert_eq!(adj.second_order_neighborhood(3), vec![2, 3]);
    }

    #[test]
    fn isolated_variable_has_no_neighborhood() {
        let h = BitMatrix::from_rows(&[vec![1, 0, 1], vec![1, 0, 0]]);
        let adj = TannerAdjacency::from_matrix(&h);
        assert_eq!(adj.var_degree(1), 0);
        assert!(adj.second_order_neighborhood(1).is_empty());
        assert_eq!(adj.active_vars(), vec![0, 2]);
    }
}
