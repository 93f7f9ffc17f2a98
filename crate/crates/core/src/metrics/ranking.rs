use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A strict ranking of `n` items: `ranks[i]` is the 1-based rank of item `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Ranking(Vec<u32>);

impl Ranking {
    /// Validates that `ranks` is a permutation of `1..=n`.
    pub fn new(ranks: Vec<u32>) -> Result<Self> {
        let n = ranks.len();
        let mut seen = vec![false; n];
        for &r in &ranks {
            let idx = (r as usize).wrapping_sub(1);
            if idx >= n || seen[idx] {
                return Err(Error::NotPermutation(n));
            }
            seen[idx] = true;
        }
        Ok(Self(ranks))
    }

    /// The ranking `1, 2, .., n`.
    pub fn identity(n: usize) -> Self {
        Self((1..=n as u32).collect())
    }

    pub fn reversed(&self) -> Self {
        let n = self.0.len() as u32;
        Self(self.0.iter().map(|r| n + 1 - r).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ranks(&self) -> &[u32] {
        &self.0
    }
}

impl TryFrom<Vec<u32>> for Ranking {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        Ranking::new(v)
    }
}

impl From<Ranking> for Vec<u32> {
    fn from(r: Ranking) -> Self {
        r.0
    }
}

/// Spearman's rank correlation `1 - 6 sum(d^2) / (n (n^2 - 1))`.
pub fn spearman_src(r1: &Ranking, r2: &Ranking) -> Result<f64> {
    let n = r1.len();
    if r2.len() != n {
        return Err(Error::LengthMismatch { what: "ranking lengths", left: n, right: r2.len() });
    }
    if n < 2 {
        return Err(Error::Precondition(format!("SRC needs n >= 2, got {n}")));
    }
    let sum_d2: u64 = r1.ranks().iter().zip(r2.ranks()).map(|(&a, &b)| (a as i64 - b as i64).pow(2) as u64).sum();
    let n = n as f64;
    Ok(1.0 - 6.0 * sum_d2 as f64 / (n * (n * n - 1.0)))
}

/// Kendall's coefficient of concordance over `k >= 2` raters.
///
/// `S` is the sum of squared deviations of the per-item rank sums from their
/// mean `k (n + 1) / 2`, so unanimous raters give exactly 1.
pub fn kendalls_w(rankings: &[Ranking]) -> Result<f64> {
    let k = rankings.len();
    if k < 2 {
        return Err(Error::Precondition(format!("Kendall's W needs at least 2 raters, got {k}")));
    }
    let n = rankings[0].len();
    if let Some(bad) = rankings.iter().find(|r| r.len() != n) {
        return Err(Error::LengthMismatch { what: "ranking lengths", left: n, right: bad.len() });
    }
    if n < 2 {
        return Err(Error::Precondition(format!("Kendall's W needs n >= 2, got {n}")));
    }
    // Work in exact integers: 2 * (R_i - mean) = 2 R_i - k (n + 1).
    let mut sums = vec![0i64; n];
    for r in rankings {
        for (s, &x) in sums.iter_mut().zip(r.ranks()) {
            *s += x as i64;
        }
    }
    let centre2 = (k * (n + 1)) as i64;
    let s4: i64 = sums.iter().map(|&s| (2 * s - centre2).pow(2)).sum();
    let s = s4 as f64 / 4.0;
    let (k, n) = (k as f64, n as f64);
    Ok(12.0 * s / (k * k * (n * n * n - n)))
}
