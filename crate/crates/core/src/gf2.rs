//! Bit-packed GF(2) vectors and dense matrices.

/// A bit vector packed into `u64` words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                v.set(i, true);
            }
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
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Index of the lowest set bit.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// Parity of the bitwise AND with `other`.
    pub fn dot(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| u8::from(self.get(i))).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Dense row-major GF(2) matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: Vec<BitVec>,
    cols: usize,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows: vec![BitVec::zeros(cols); rows],
            cols,
        }
    }

    pub fn from_rows(rows: Vec<BitVec>, cols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols));
        Self { rows, cols }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i].set(i, true);
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.rows[r].set(c, v)
    }

    pub fn row(&self, r: usize) -> &BitVec {
        &self.rows[r]
    }

    /// Row vector times matrix: `x M`.
    pub fn left_mul(&self, x: &BitVec) -> BitVec {
        assert_eq!(x.len(), self.nrows());
        let mut out = BitVec::zeros(self.cols);
        for (i, row) in self.rows.iter().enumerate() {
            if x.get(i) {
                out.xor_assign(row);
            }
        }
        out
    }

    /// Matrix times column vector: `M y`.
    pub fn right_mul(&self, y: &BitVec) -> BitVec {
        assert_eq!(y.len(), self.cols);
        let mut out = BitVec::zeros(self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(y) {
                out.set(i, true);
            }
        }
        out
    }

    /// Gauss-Jordan inverse of a square matrix. On failure returns the rank.
    pub fn inverse(&self) -> Result<BitMatrix, usize> {
        let n = self.nrows();
        assert_eq!(n, self.cols, "inverse of a non-square matrix");
        let mut a = self.rows.clone();
        let mut inv = Self::identity(n).rows;
        let mut rank = 0;
        for col in 0..n {
            let Some(p) = (rank..n).find(|&r| a[r].get(col)) else {
                continue;
            };
            a.swap(rank, p);
            inv.swap(rank, p);
            let (pivot_a, pivot_i) = (a[rank].clone(), inv[rank].clone());
            for r in 0..n {
                if r != rank && a[r].get(col) {
                    a[r].xor_assign(&pivot_a);
                    inv[r].xor_assign(&pivot_i);
                }
            }
            rank += 1;
        }
        if rank < n {
            Err(rank)
        } else {
            Ok(Self {
                rows: inv,
                cols: n,
            })
        }
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut a = self.rows.clone();
        let n = a.len();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..n).find(|&r| a[r].get(col)) else {
                continue;
            };
            a.swap(rank, p);
            let pivot = a[rank].clone();
            for r in rank + 1..n {
                if a[r].get(col) {
                    a[r].xor_assign(&pivot);
                }
            }
            rank += 1;
        }
        rank
    }
}
