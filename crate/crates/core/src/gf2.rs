//! Dense GF(2) matrices, packed 64 columns per word.

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    /// Uniformly random entries.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        let tail = cols % 64;
        for r in 0..rows {
            for w in 0..m.words_per_row {
                let mut word: u64 = rng.random();
                if w + 1 == m.words_per_row && tail != 0 {
                    word &= (1u64 << tail) - 1;
                }
                m.data[r * m.words_per_row + w] = word;
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

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words_per_row + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        let word = &mut self.data[r * self.words_per_row + c / 64];
        if value {
            *word |= 1 << (c % 64);
        } else {
            *word &= !(1 << (c % 64));
        }
    }

    /// Matrix-vector product over GF(2).
    ///
    /// Panics if `x.len() != self.cols()`.
    pub fn mul_vec(&self, x: &[bool]) -> Vec<bool> {
        assert_eq!(x.len(), self.cols, "GF(2) product dimension mismatch");
        let packed = pack(x);
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.words_per_row..(r + 1) * self.words_per_row];
                row.iter()
                    .zip(&packed)
                    .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                    & 1
                    == 1
            })
            .collect()
    }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        out[i / 64] |= 1 << (i % 64);
    }
    out
}
