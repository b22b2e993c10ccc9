//! Oracles shared by the integration tests. Everything here works directly
//! from integer counts and does not call into the library's formulas.
#![allow(dead_code)]

pub mod fixtures;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

pub fn ratio(a: u64, b: u64) -> Q {
    Q::new(a.into(), b.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counts {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl Counts {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn normalized(&self) -> [Q; 4] {
        let n = self.n();
        [ratio(self.tp, n), ratio(self.fn_, n), ratio(self.fp, n), ratio(self.tn, n)]
    }

    pub fn precision(&self) -> Q {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Q {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Q {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn specificity(&self) -> Q {
        ratio(self.tn, self.fp + self.tn)
    }

    pub fn accuracy(&self) -> Q {
        ratio(self.tp + self.tn, self.n())
    }

    pub fn f_measure(&self) -> Q {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn density(&self) -> Q {
        ratio(self.tp + self.fn_, self.n())
    }

    /// MCC as `(negative, square)`, or `None` when a marginal is zero.
    pub fn mcc_signed_square(&self) -> Option<(bool, Q)> {
        let (tp, fn_, fp, tn) = (self.tp as i128, self.fn_ as i128, self.fp as i128, self.tn as i128);
        let num = tp * tn - fp * fn_;
        let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        (den != 0).then(|| (num < 0, Q::new(BigInt::from(num * num), BigInt::from(den))))
    }

    /// MCC rounded half away from zero to `places` decimals. Panics if undefined.
    pub fn mcc_rounded(&self, places: u32) -> Q {
        let (negative, square) = self.mcc_signed_square().expect("MCC defined");
        round_signed_sqrt(negative, &square, places)
    }
}

/// Every count matrix with all four cells at least 1 and total at most `max_n`.
pub fn enumerate_positive(max_n: u64) -> Vec<Counts> {
    let mut out = Vec::new();
    for tp in 1..=max_n {
        for fn_ in 1..=max_n.saturating_sub(tp) {
            for fp in 1..=max_n.saturating_sub(tp + fn_) {
                for tn in 1..=max_n.saturating_sub(tp + fn_ + fp) {
                    out.push(Counts::new(tp, fn_, fp, tn));
                }
            }
        }
    }
    out
}

/// Every count matrix (cells may be zero) with total between 1 and `max_n`.
pub fn enumerate_all(max_n: u64) -> Vec<Counts> {
    let mut out = Vec::new();
    for tp in 0..=max_n {
        for fn_ in 0..=max_n - tp {
            for fp in 0..=max_n - tp - fn_ {
                for tn in 0..=max_n - tp - fn_ - fp {
                    if tp + fn_ + fp + tn > 0 {
                        out.push(Counts::new(tp, fn_, fp, tn));
                    }
                }
            }
        }
    }
    out
}

fn pow10(places: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), places as usize)
}

/// Rounds half away from zero to `places` decimals.
pub fn round_to(x: &Q, places: u32) -> Q {
    let scale = Q::from_integer(pow10(places));
    let scaled = x.abs() * &scale;
    // floor(y + 1/2) = floor((2y + 1) / 2)
    let twice = (scaled * Q::from_integer(2.into())).floor().to_integer();
    let k = (twice + 1) / 2;
    let v = Q::new(k, pow10(places));
    if x.is_negative() {
        -v
    } else {
        v
    }
}

/// `±√square` rounded half away from zero to `places` decimals, exactly:
/// `floor(2·10^p·√s) = isqrt(floor(4·10^(2p)·s))`.
pub fn round_signed_sqrt(negative: bool, square: &Q, places: u32) -> Q {
    let scale = pow10(places);
    let four_s = square * Q::from_integer(&scale * &scale * 4);
    let twice = four_s.floor().to_integer().sqrt();
    let k = (twice + 1) / 2;
    let v = Q::new(k, scale);
    if negative && !v.is_zero() {
        -v
    } else {
        v
    }
}

/// Benjamini–Hochberg rejections without sorting: the cutoff is the
/// largest p-value `v` with `v ≤ alpha · #{p ≤ v} / m`, and everything at
/// or below it is rejected.
pub fn bh_oracle(p: &[Q], alpha: &Q) -> Vec<usize> {
    let m = p.len() as i64;
    let mut cutoff: Option<&Q> = None;
    for v in p {
        let rank = p.iter().filter(|x| *x <= v).count() as i64;
        if *v <= alpha * q(rank, m) && cutoff.map_or(true, |c| v > c) {
            cutoff = Some(v);
        }
    }
    match cutoff {
        Some(c) => (0..p.len()).filter(|&i| &p[i] <= c).collect(),
        None => vec![],
    }
}

