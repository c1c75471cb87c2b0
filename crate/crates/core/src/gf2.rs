//! Bit-packed linear algebra over GF(2).
//!
//! Vectors pack 64 bits per word, index 0 in the least significant bit of
//! word 0. Matrices are dense and row-major with each row padded to whole
//! words, so a row is a `&[u64]` slice and row combination is a word-wide
//! XOR. Everything a decoder does per frame (syndrome products, residual
//! membership tests) reduces to these primitives.

use std::fmt;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Packed binary vector. Padding bits past `len` are kept zero so that
/// weight, equality and hashing never see garbage.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds from the `len` low bits of `value`, bit i of the integer
    /// becoming element i.
    pub fn from_int(value: u64, len: usize) -> Self {
        assert!(len <= WORD_BITS, "from_int limited to one word");
        let mut v = BitVec::zeros(len);
        if len > 0 {
            let mask = if len == WORD_BITS {
                u64::MAX
            } else {
                (1u64 << len) - 1
            };
            v.words[0] = value & mask;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit, if any.
    pub fn first_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * WORD_BITS + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rem = w;
            std::iter::from_fn(move || {
                if rem == 0 {
                    return None;
                }
                let b = rem.trailing_zeros() as usize;
                rem &= rem - 1;
                Some(wi * WORD_BITS + b)
            })
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec[{}]({})", self.len, self)
    }
}

/// Dense GF(2) matrix, rows padded to whole words.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    row_words: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let row_words = words_for(cols);
        BitMatrix {
            rows,
            cols,
            row_words,
            words: vec![0; rows * row_words],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = BitMatrix::zeros(r, c);
        for (j, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (i, &bit) in row.iter().enumerate() {
                if bit != 0 {
                    m.set(j, i, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) out of range");
        (self.words[r * self.row_words + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) out of range");
        let mask = 1u64 << (c % WORD_BITS);
        let w = &mut self.words[r * self.row_words + c / WORD_BITS];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.row_words..(r + 1) * self.row_words]
    }

    pub fn row_vec(&self, r: usize) -> BitVec {
        BitVec {
            len: self.cols,
            words: self.row(r).to_vec(),
        }
    }

    /// Column indices of the ones in row `r`, ascending.
    pub fn ones_in_row(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        let row = self.row(r);
        row.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rem = w;
            std::iter::from_fn(move || {
                if rem == 0 {
                    return None;
                }
                let b = rem.trailing_zeros() as usize;
                rem &= rem - 1;
                Some(wi * WORD_BITS + b)
            })
        })
    }

    /// y = M v over GF(2): bit j of the result is the parity of the overlap
    /// between row j and v.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        let mut out = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u64;
            for (a, b) in self.row(r).iter().zip(v.words()) {
                acc ^= a & b;
            }
            if acc.count_ones() & 1 == 1 {
                out.set(r, true);
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        EchelonForm::new(self).rank()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row_vec(r))?;
        }
        Ok(())
    }
}

/// Row echelon form kept for repeated row-space membership tests.
///
/// Each stored row has its first set bit at its pivot column and pivots are
/// held in ascending order, so reducing a probe vector is a single pass of
/// conditional XORs and membership is "did it reduce to zero".
pub struct EchelonForm {
    cols: usize,
    pivots: Vec<usize>,
    rows: Vec<BitVec>,
}

impl EchelonForm {
    pub fn new(m: &BitMatrix) -> Self {
        let mut e = EchelonForm {
            cols: m.cols(),
            pivots: Vec::new(),
            rows: Vec::new(),
        };
        for r in 0..m.rows() {
            let mut v = m.row_vec(r);
            e.reduce(&mut v);
            if let Some(p) = v.first_one() {
                let at = e.pivots.partition_point(|&q| q < p);
                e.pivots.insert(at, p);
                e.rows.insert(at, v);
            }
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &mut BitVec) {
        for (p, row) in self.pivots.iter().zip(&self.rows) {
            if v.get(*p) {
                v.xor_assign(row);
            }
        }
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        assert_eq!(v.len(), self.cols, "probe length mismatch");
        let mut probe = v.clone();
        self.reduce(&mut probe);
        probe.is_zero()
    }
}

/// True when every row of `h_a` is orthogonal to every row of `h_b`,
/// i.e. h_a h_b^T = 0 over GF(2). This is the commutation condition a CSS
/// pair must satisfy.
pub fn symplectic_check(h_a: &BitMatrix, h_b: &BitMatrix) -> bool {
    assert_eq!(h_a.cols(), h_b.cols(), "column count mismatch");
    for ra in 0..h_a.rows() {
        let row_a = h_a.row(ra);
        for rb in 0..h_b.rows() {
            let mut acc = 0u64;
            for (x, y) in row_a.iter().zip(h_b.row(rb)) {
                acc ^= x & y;
            }
            if acc.count_ones() & 1 == 1 {
                return false;
            }
        }
    }
    true
}

/// One-shot row-space membership; build an [`EchelonForm`] instead when the
/// same matrix is probed many times.
pub fn in_row_space(m: &BitMatrix, v: &BitVec) -> bool {
    EchelonForm::new(m).contains(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.gen::<bool>() {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// All 2^rows XOR combinations of the rows, as the low `cols` bits of a
    /// word. Exhaustive span oracle for rank and membership.
    fn span(m: &BitMatrix) -> HashSet<u64> {
        assert!(m.cols() <= 64 && m.rows() <= 16);
        let rows: Vec<u64> = (0..m.rows())
            .map(|r| (0..m.cols()).fold(0u64, |acc, c| acc | (u64::from(m.get(r, c)) << c)))
            .collect();
        let mut out = HashSet::new();
        for mask in 0..(1usize << m.rows()) {
            let mut v = 0u64;
            for (r, row) in rows.iter().enumerate() {
                if mask >> r & 1 == 1 {
                    v ^= row;
                }
            }
            out.insert(v);
        }
        out
    }

    fn as_int(v: &BitVec) -> u64 {
        (0..v.len()).fold(0u64, |acc, i| acc | (u64::from(v.get(i)) << i))
    }

    #[test]
    fn mul_vec_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_matrix(4, 6, &mut rng);
            let v = BitVec::from_bools(&(0..6).map(|_| rng.gen()).collect::<Vec<bool>>());
            let y = m.mul_vec(&v);
            for j in 0..4 {
                let mut naive = 0u32;
                for i in 0..6 {
                    naive += u32::from(m.get(j, i) && v.get(i));
                }
                assert_eq!(y.get(j), naive % 2 == 1, "row {j}");
            }
        }
    }

    #[test]
    fn mul_vec_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let m = random_matrix(7, 90, &mut rng);
            let u = BitVec::from_bools(&(0..90).map(|_| rng.gen()).collect::<Vec<bool>>());
            let v = BitVec::from_bools(&(0..90).map(|_| rng.gen()).collect::<Vec<bool>>());
            let mut uv = u.clone();
            uv.xor_assign(&v);
            let mut sum = m.mul_vec(&u);
            sum.xor_assign(&m.mul_vec(&v));
            assert_eq!(as_int(&m.mul_vec(&uv)), as_int(&sum));
        }
    }

    #[test]
    fn rank_matches_span_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let mut m = random_matrix(6, 6, &mut rng);
            // Duplicate one row so the matrix is certainly singular.
            let src = rng.gen_range(0..6);
            let mut dst = rng.gen_range(0..6);
            if dst == src {
                dst = (dst + 1) % 6;
            }
            for c in 0..6 {
                let bit = m.get(src, c);
                m.set(dst, c, bit);
            }
            let expect = span(&m).len().trailing_zeros() as usize;
            assert_eq!(m.rank(), expect);
            assert!(m.rank() < 6);
        }
    }

    #[test]
    fn membership_matches_span_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..40 {
            let m = random_matrix(5, 8, &mut rng);
            let all = span(&m);
            let e = EchelonForm::new(&m);

            // A sum of two rows is always in the span.
            let mut v = m.row_vec(rng.gen_range(0..5));
            v.xor_assign(&m.row_vec(rng.gen_range(0..5)));
            assert!(e.contains(&v));
            assert!(in_row_space(&m, &v));

            // Random probes agree with the exhaustive span.
            for _ in 0..32 {
                let probe = BitVec::from_int(rng.gen_range(0..256), 8);
                assert_eq!(e.contains(&probe), all.contains(&as_int(&probe)));
            }
        }
    }

    #[test]
    fn membership_closed_under_xor() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let m = random_matrix(6, 40, &mut rng);
        let e = EchelonForm::new(&m);
        for _ in 0..40 {
            let mut u = BitVec::zeros(40);
            let mut v = BitVec::zeros(40);
            for r in 0..6 {
                if rng.gen::<bool>() {
                    u.xor_assign(&m.row_vec(r));
                }
                if rng.gen::<bool>() {
                    v.xor_assign(&m.row_vec(r));
                }
            }
            let mut w = u.clone();
            w.xor_assign(&v);
            assert!(e.contains(&u) && e.contains(&v) && e.contains(&w));
        }
    }

    #[test]
    fn weight_and_flip() {
        let mut v = BitVec::zeros(130);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert_eq!(v.weight(), 3);
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        v.flip(64);
        assert_eq!(v.weight(), 2);
        assert!(!v.get(64));
        assert_eq!(v.first_one(), Some(0));
    }

    #[test]
    fn symplectic_detects_single_entry_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        // Build an orthogonal pair: h_b rows are sums of two identical
        // copies shifted, trivially orthogonal to h_a = same matrix when
        // every pairwise overlap is even. Use a known self-orthogonal one.
        let h = BitMatrix::from_rows(&[
            vec![1, 0, 1, 0, 1, 0, 1],
            vec![0, 1, 1, 0, 0, 1, 1],
            vec![0, 0, 0, 1, 1, 1, 1],
        ]);
        assert!(symplectic_check(&h, &h));
        for _ in 0..10 {
            let mut bad = h.clone();
            let r = rng.gen_range(0..3);
            let c = rng.gen_range(0..7);
            let cur = bad.get(r, c);
            bad.set(r, c, !cur);
            assert!(!symplectic_check(&h, &bad), "flip at ({r},{c})");
        }
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn mul_vec_rejects_wrong_length() {
        let m = BitMatrix::zeros(3, 5);
        let v = BitVec::zeros(4);
        let _ = m.mul_vec(&v);
    }
}
