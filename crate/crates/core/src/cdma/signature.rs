use nalgebra::DMatrix;
use rand::Rng;

use crate::linalg::{CMatrix, CVector, C64};

/// Unit-energy spreading sequence with chips `+-1/sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSignature {
    chips: Vec<f64>,
}

impl UserSignature {
    /// Normalizes a `+-1` chip pattern to unit energy.
    pub fn from_signs(signs: &[bool]) -> Self {
        let a = 1.0 / (signs.len() as f64).sqrt();
        Self {
            chips: signs.iter().map(|&s| if s { a } else { -a }).collect(),
        }
    }

    /// Arbitrary chip values, taken as given.
    pub fn from_chips(chips: Vec<f64>) -> Self {
        Self { chips }
    }

    pub fn chips(&self) -> &[f64] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.chips.iter().map(|a| a * a).sum()
    }
}

/// `k` i.i.d. random binary signatures of length `n`.
pub fn gen_signatures<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<UserSignature> {
    (0..k)
        .map(|_| {
            let signs: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            UserSignature::from_signs(&signs)
        })
        .collect()
}

/// Which symbol of the three overlapping the observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolSlot {
    Previous,
    Current,
    Next,
}

/// Per-antenna chip-shift matrices for the previous, current and next symbol.
///
/// Each block is `M x L_p` with `M = N + L_p - 1`; column `l` holds the
/// signature delayed by `l` chips, restricted to the part of it that falls
/// inside the current symbol's observation window. The full matrices are
/// block diagonal with one identical block per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionMatrices {
    pub prev: DMatrix<f64>,
    pub cur: DMatrix<f64>,
    pub next: DMatrix<f64>,
    pub antennas: usize,
}

pub fn build_convolution_matrices(
    sig: &UserSignature,
    lp: usize,
    antennas: usize,
) -> ConvolutionMatrices {
    assert!(lp >= 1, "channel length must be at least one tap");
    let n = sig.len() as isize;
    let m = sig.len() + lp - 1;
    let chip = |idx: isize| {
        if (0..n).contains(&idx) {
            sig.chips()[idx as usize]
        } else {
            0.0
        }
    };
    let block = |offset: isize| {
        DMatrix::from_fn(m, lp, |row, col| chip(row as isize + offset - col as isize))
    };
    ConvolutionMatrices {
        prev: block(n),
        cur: block(0),
        next: block(-n),
        antennas,
    }
}

impl ConvolutionMatrices {
    /// Window length `M` per antenna.
    pub fn window(&self) -> usize {
        self.cur.nrows()
    }

    pub fn taps(&self) -> usize {
        self.cur.ncols()
    }

    pub fn block(&self, slot: SymbolSlot) -> &DMatrix<f64> {
        match slot {
            SymbolSlot::Previous => &self.prev,
            SymbolSlot::Current => &self.cur,
            SymbolSlot::Next => &self.next,
        }
    }

    /// Dense block-diagonal `JM x JL_p` matrix.
    pub fn block_diagonal(&self, slot: SymbolSlot) -> DMatrix<f64> {
        let b = self.block(slot);
        let (m, lp) = b.shape();
        let mut out = DMatrix::zeros(m * self.antennas, lp * self.antennas);
        for j in 0..self.antennas {
            out.view_mut((j * m, j * lp), (m, lp)).copy_from(b);
        }
        out
    }

    /// `F h` for a `J x L_p` tap matrix, skipping zero taps.
    pub fn apply(&self, slot: SymbolSlot, taps: &CMatrix) -> CVector {
        let b = self.block(slot);
        let m = b.nrows();
        let mut out = CVector::zeros(m * self.antennas);
        for j in 0..self.antennas {
            for l in 0..b.ncols() {
                let h = taps[(j, l)];
                if h == C64::new(0.0, 0.0) {
                    continue;
                }
                for (row, &f) in b.column(l).iter().enumerate() {
                    if f != 0.0 {
                        out[j * m + row] += h * f;
                    }
                }
            }
        }
        out
    }
}
