//! Index tuples `i_1 < … < i_m` over the observations, their exact count, and
//! lexicographic or sampled enumeration.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::error::{OjaError, Result};

/// Default cap on fully enumerated tuples.
pub const DEFAULT_ENUM_CAP: u64 = 50_000_000;

static ENUM_CAP: AtomicU64 = AtomicU64::new(DEFAULT_ENUM_CAP);

/// Current process-wide enumeration cap.
pub fn enumeration_cap() -> u64 {
    ENUM_CAP.load(Ordering::Relaxed)
}

/// Overrides the process-wide enumeration cap (the CLI maps `OJA_MAX_ENUM` here).
pub fn set_enumeration_cap(cap: u64) {
    ENUM_CAP.store(cap, Ordering::Relaxed);
}

/// Exact binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, m: usize) -> u128 {
    if m > n {
        return 0;
    }
    let m = m.min(n - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        // C(n, i) (n - i) / (i + 1) = C(n, i + 1); after cancelling gcd(acc, i + 1)
        // the remaining denominator divides n - i.
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        let g = gcd(acc, den);
        let (a, d) = (acc / g, den / g);
        match a.checked_mul(num / d) {
            Some(v) => acc = v,
            None => return u128::MAX,
        }
    }
    acc
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Fails with [`OjaError::Overflow`] when `C(n, m)` exceeds `cap`.
pub fn check_enumeration(n: usize, m: usize, cap: u64) -> Result<u128> {
    let count = binomial(n, m);
    if count > cap as u128 {
        return Err(OjaError::Overflow { n, m, count, cap });
    }
    Ok(count)
}

/// Strictly increasing tuple of 0-based observation indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTuple(pub Vec<usize>);

impl IndexTuple {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The same tuple with 1-based indices, as used in reports.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, i) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}

/// Lexicographic cursor over all `m`-subsets of `0..n` that reuses one buffer.
#[derive(Debug, Clone)]
pub struct SubsetCursor {
    idx: Vec<usize>,
    n: usize,
    started: bool,
    done: bool,
}

impl SubsetCursor {
    pub fn new(n: usize, m: usize) -> Self {
        Self { idx: (0..m).collect(), n, started: false, done: m > n }
    }

    /// Moves to the next tuple; returns the tuple or `None` when exhausted.
    pub fn advance(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.idx);
        }
        let m = self.idx.len();
        let mut i = m;
        while i > 0 {
            i -= 1;
            if self.idx[i] < self.n - m + i {
                self.idx[i] += 1;
                for j in i + 1..m {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
        self.done = true;
        None
    }
}

/// Enumeration mode for [`k_subsets`].
pub enum SubsetMode<'a, R: Rng + ?Sized> {
    All,
    Sample { count: usize, rng: &'a mut R },
}

/// All `m`-subsets of `0..n` in lexicographic order, or `count` independent
/// uniform draws (duplicates possible) in sample mode.
pub fn k_subsets<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    mode: SubsetMode<'_, R>,
    cap: u64,
) -> Result<Vec<IndexTuple>> {
    if m > n {
        return Err(OjaError::InvalidInput(format!("tuple size {m} exceeds n = {n}")));
    }
    match mode {
        SubsetMode::All => {
            let count = check_enumeration(n, m, cap)?;
            let mut out = Vec::with_capacity(count as usize);
            let mut cur = SubsetCursor::new(n, m);
            while let Some(t) = cur.advance() {
                out.push(IndexTuple(t.to_vec()));
            }
            Ok(out)
        }
        SubsetMode::Sample { count, rng } => {
            Ok((0..count).map(|_| random_subset(n, m, rng)).collect())
        }
    }
}

/// One uniformly random `m`-subset of `0..n`, sorted.
pub fn random_subset<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> IndexTuple {
    let mut v = rand::seq::index::sample(rng, n, m).into_vec();
    v.sort_unstable();
    IndexTuple(v)
}
