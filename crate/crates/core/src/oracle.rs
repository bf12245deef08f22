//! Exact `A(n, d)` and `A_Lin(n, d)` at desk scale.
//!
//! `A(n, d)` is a maximum clique in the compatibility graph (pairs at distance
//! 0 or ≥ d), found by branch and bound with a greedy-colouring bound. By
//! translation invariance the all-zero word is fixed in the code. `A_Lin` is
//! found by extending a systematic generator `[I_k | A]` one row at a time,
//! rows of `A` in increasing order, for growing `k`.

use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use crate::cube::low_mask;
use crate::error::{Error, Result};

pub const DEFAULT_CODE_CAP: u32 = 9;
pub const DEFAULT_LINEAR_CAP: u32 = 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub n: u32,
    pub d: u32,
    pub linear: bool,
    pub size: u64,
    /// Codewords (unrestricted) or a basis (linear), as bit strings.
    pub witness: Vec<String>,
    /// Wall-clock time; left out of serialized output unless requested.
    #[serde(skip)]
    pub elapsed: Duration,
}

fn word(x: u64, n: u32) -> String {
    (0..n)
        .map(|j| if (x >> j) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn parse_word(s: &str) -> Option<u64> {
    s.chars().enumerate().try_fold(0u64, |acc, (j, c)| match c {
        '0' => Some(acc),
        '1' => Some(acc | 1 << j),
        _ => None,
    })
}

impl OracleResult {
    pub fn witness_words(&self) -> Option<Vec<u64>> {
        self.witness.iter().map(|w| parse_word(w)).collect()
    }

    /// Independent re-check of the witness: pairwise distances for a code,
    /// independence and span weights for a basis.
    pub fn validate(&self) -> bool {
        let Some(words) = self.witness_words() else {
            return false;
        };
        if self.witness.iter().any(|w| w.len() != self.n as usize) {
            return false;
        }
        if self.linear {
            let span = span_of(&words);
            let mut sorted = span.clone();
            sorted.sort_unstable();
            sorted.dedup();
            sorted.len() == span.len()
                && span.len() as u64 == self.size
                && span.iter().all(|x| *x == 0 || x.count_ones() >= self.d)
        } else {
            words.len() as u64 == self.size
                && words.iter().enumerate().all(|(i, a)| {
                    words[i + 1..]
                        .iter()
                        .all(|b| (a ^ b).count_ones() >= self.d)
                })
        }
    }
}

fn span_of(basis: &[u64]) -> Vec<u64> {
    let mut span = vec![0u64];
    for b in basis {
        let more: Vec<u64> = span.iter().map(|s| s ^ b).collect();
        span.extend(more);
    }
    span
}

fn check_args(n: u32, d: u32, cap: u32) -> Result<()> {
    if n > cap {
        return Err(Error::OracleCap {
            n: n as usize,
            cap: cap as usize,
        });
    }
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "need n, d ≥ 1, got n = {n}, d = {d}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Unrestricted codes
//
// Symmetry breaking: translate a code so that a closest pair is `0, z` with
// `|z| = w` the minimum distance, and permute coordinates so `z = 1^w 0^{n-w}`.
// Every other word then has weight ≥ w. Among those pick `y` of least weight;
// the stabiliser of `{0, z}` (permutations inside and outside the support of
// `z`) moves it to `1^a 0^{w-a} 1^b 0^{n-w-b}`. What remains is a clique
// search over words of weight ≥ |y| at distance ≥ w from `z` and `y`.

/// Fixed-width vertex set; `n ≤ 9` gives at most 512 vertices.
type Set = [u64; 8];

const EMPTY: Set = [0; 8];

#[inline]
fn bit_set(b: &mut Set, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

#[inline]
fn bit_clear(b: &mut Set, i: usize) {
    b[i / 64] &= !(1 << (i % 64));
}

#[inline]
fn and(a: &Set, b: &Set) -> Set {
    std::array::from_fn(|k| a[k] & b[k])
}

#[inline]
fn is_empty(a: &Set) -> bool {
    a.iter().all(|w| *w == 0)
}

#[inline]
fn first(a: &Set) -> Option<usize> {
    a.iter()
        .position(|w| *w != 0)
        .map(|k| k * 64 + a[k].trailing_zeros() as usize)
}

struct Clique<'a> {
    adj: Vec<Set>,
    /// Size to beat, shared across branches; `offset` converts between this
    /// branch's clique size and the code size.
    shared: &'a AtomicUsize,
    offset: usize,
    best: Option<Vec<usize>>,
    current: Vec<usize>,
}

impl Clique<'_> {
    /// Greedy sequential colouring of `p` in vertex order; colours are
    /// nondecreasing along the returned list.
    fn colour(&self, p: &Set, out: &mut Vec<(usize, u32)>) {
        out.clear();
        let mut uncoloured = *p;
        let mut colour = 0;
        while !is_empty(&uncoloured) {
            colour += 1;
            let mut avail = uncoloured;
            while let Some(v) = first(&avail) {
                bit_clear(&mut avail, v);
                bit_clear(&mut uncoloured, v);
                for (a, n) in avail.iter_mut().zip(self.adj[v].iter()) {
                    *a &= !n;
                }
                out.push((v, colour));
            }
        }
    }

    fn bound(&self) -> usize {
        self.shared.load(AtomicOrdering::Relaxed).saturating_sub(self.offset)
    }

    fn expand(&mut self, mut p: Set) {
        let mut order = Vec::new();
        self.colour(&p, &mut order);
        for &(v, c) in order.iter().rev() {
            if self.current.len() + c as usize <= self.bound() {
                return;
            }
            self.current.push(v);
            let next = and(&p, &self.adj[v]);
            if is_empty(&next) {
                let size = self.current.len() + self.offset;
                if self.shared.fetch_max(size, AtomicOrdering::Relaxed) < size {
                    self.best = Some(self.current.clone());
                }
            } else {
                self.expand(next);
            }
            self.current.pop();
            bit_clear(&mut p, v);
        }
    }
}

/// A code of size above `shared` made of `fixed` plus words from `vs` with
/// pairwise distance ≥ `w`, if one exists.
fn clique_above(fixed: &[u64], vs: &[u64], w: u32, shared: &AtomicUsize) -> Option<Vec<u64>> {
    let compatible = |a: u64, b: u64| (a ^ b).count_ones() >= w;
    // degree order, highest first; ties by weight then value for reproducibility
    let mut vs = vs.to_vec();
    let degree = |x: u64| vs.iter().filter(|&&y| y != x && compatible(x, y)).count();
    let mut keyed: Vec<(usize, u64)> = vs.iter().map(|&x| (degree(x), x)).collect();
    keyed.sort_by_key(|&(deg, x)| (std::cmp::Reverse(deg), std::cmp::Reverse(x.count_ones()), x));
    vs = keyed.into_iter().map(|(_, x)| x).collect();

    let mut adj = vec![EMPTY; vs.len()];
    for i in 0..vs.len() {
        for j in 0..vs.len() {
            if i != j && compatible(vs[i], vs[j]) {
                bit_set(&mut adj[i], j);
            }
        }
    }
    let mut all = EMPTY;
    (0..vs.len()).for_each(|i| bit_set(&mut all, i));
    let mut search = Clique {
        adj,
        shared,
        offset: fixed.len(),
        best: None,
        current: Vec::new(),
    };
    if vs.is_empty() {
        if shared.fetch_max(fixed.len(), AtomicOrdering::Relaxed) < fixed.len() {
            return Some(fixed.to_vec());
        }
        return None;
    }
    search.expand(all);
    search
        .best
        .map(|b| fixed.iter().copied().chain(b.iter().map(|i| vs[*i])).collect())
}

/// `A(n, d)` with a maximum code as witness (contains the zero word).
pub fn max_code_size(n: u32, d: u32) -> Result<OracleResult> {
    max_code_size_capped(n, d, DEFAULT_CODE_CAP)
}

pub fn max_code_size_capped(n: u32, d: u32, cap: u32) -> Result<OracleResult> {
    // the clique bit sets hold at most 2^9 vertices
    check_args(n, d, cap.min(DEFAULT_CODE_CAP))?;
    let start = Instant::now();
    let mut code: Vec<u64> = if d == 1 {
        (0..1u64 << n).collect()
    } else if d % 2 == 0 && n > 1 {
        // A(n, 2t) = A(n-1, 2t-1): append an overall parity bit
        let inner = max_code_size_capped(n - 1, d - 1, cap)?;
        inner
            .witness_words()
            .expect("own witness parses")
            .into_iter()
            .map(|x| x | ((x.count_ones() as u64 & 1) << (n - 1)))
            .collect()
    } else if d > n {
        vec![0]
    } else {
        // first decision layer: (w, a, b)
        let branches: Vec<(u32, u32, u32)> = (d..=n)
            .flat_map(|w| {
                (0..=w).flat_map(move |a| (a..=n - w).map(move |b| (w, a, b)))
            })
            .filter(|&(w, a, b)| a + b >= w)
            .collect();
        let branch_words = |&(w, a, b): &(u32, u32, u32)| {
            let z = low_mask(w);
            let y = low_mask(a) | low_mask(b) << w;
            let vs: Vec<u64> = (1..=low_mask(n))
                .filter(|&x| {
                    x != y
                        && x != z
                        && x.count_ones() >= a + b
                        && (x ^ z).count_ones() >= w
                        && (x ^ y).count_ones() >= w
                })
                .collect();
            ([0, z, y], vs, w)
        };
        // {0, 1^d} always works
        let shared = AtomicUsize::new(2);
        branches.par_iter().for_each(|br| {
            let (fixed, vs, w) = branch_words(br);
            clique_above(&fixed, &vs, w, &shared);
        });
        let size = shared.into_inner();
        // second pass in branch order for a reproducible witness
        if size == 2 {
            vec![0, low_mask(d)]
        } else {
            branches
                .iter()
                .find_map(|br| {
                    let (fixed, vs, w) = branch_words(br);
                    clique_above(&fixed, &vs, w, &AtomicUsize::new(size - 1))
                })
                .expect("an optimal branch exists")
        }
    };
    code.sort_unstable();
    Ok(OracleResult {
        n,
        d,
        linear: false,
        size: code.len() as u64,
        witness: code.iter().map(|x| word(*x, n)).collect(),
        elapsed: start.elapsed(),
    })
}

// ---------------------------------------------------------------------------
// Linear codes

/// Systematic search for an `[n, k, ≥d]` code, `d ≥ 3`. After a coordinate
/// permutation every code has a generator `[I_k | A]`; row `i` is `e_i` plus
/// the redundancy `a_i ∈ F_2^{n-k}`. Rows can be reordered freely, so the
/// `a_i` are taken strictly increasing (equal rows would give weight 2).
/// `reach[v]` is the least number of rows whose redundancies sum to `v`;
/// the code word for that subset has weight `reach[v] + |v|`.
struct Systematic {
    d: u32,
    k: usize,
}

const UNREACHED: u8 = u8::MAX;

impl Systematic {
    fn admissible(&self, reach: &[u8], c: u64) -> bool {
        reach.iter().enumerate().all(|(v, &m)| {
            m == UNREACHED || m as u32 + 1 + (v as u64 ^ c).count_ones() >= self.d
        })
    }

    fn extend(&self, rows: &mut Vec<u64>, reach: &[u8], candidates: &[u64]) -> bool {
        if rows.len() == self.k {
            return true;
        }
        for (i, &c) in candidates.iter().enumerate() {
            if rows.len() + candidates.len() - i < self.k {
                return false;
            }
            let mut next = reach.to_vec();
            for (v, m) in reach.iter().enumerate() {
                if *m != UNREACHED {
                    let t = &mut next[v ^ c as usize];
                    *t = (*t).min(m + 1);
                }
            }
            let rest: Vec<u64> = candidates[i + 1..]
                .iter()
                .copied()
                .filter(|&x| self.admissible(&next, x))
                .collect();
            rows.push(c);
            if self.extend(rows, &next, &rest) {
                return true;
            }
            rows.pop();
        }
        false
    }
}

/// Generator rows of an `[n, k, ≥d]` code, `d ≥ 3`, if one exists.
fn systematic_code(n: u32, d: u32, k: u32) -> Option<Vec<u64>> {
    let r = n - k;
    let mut reach = vec![UNREACHED; 1 << r];
    reach[0] = 0;
    let search = Systematic { d, k: k as usize };
    let candidates: Vec<u64> = (0..1u64 << r)
        .filter(|&c| search.admissible(&reach, c))
        .collect();
    let mut rows = Vec::new();
    search
        .extend(&mut rows, &reach, &candidates)
        .then(|| rows.iter().enumerate().map(|(i, a)| 1 << i | a << k).collect())
}

/// `A_Lin(n, d)` with a basis of an optimal code as witness.
pub fn max_linear_code_size(n: u32, d: u32) -> Result<OracleResult> {
    max_linear_code_size_capped(n, d, DEFAULT_LINEAR_CAP)
}

pub fn max_linear_code_size_capped(n: u32, d: u32, cap: u32) -> Result<OracleResult> {
    check_args(n, d, cap)?;
    let start = Instant::now();
    let basis: Vec<u64> = match d {
        1 => (0..n).map(|j| 1u64 << j).collect(),
        // even-weight code
        2 => (0..n - 1).map(|j| 1u64 << j | 1 << (n - 1)).collect(),
        _ => {
            // a k-dimensional code shortens to a (k-1)-dimensional one
            let mut best = Vec::new();
            for k in 1..n {
                match systematic_code(n, d, k) {
                    Some(rows) => best = rows,
                    None => break,
                }
            }
            best
        }
    };
    Ok(OracleResult {
        n,
        d,
        linear: true,
        size: 1u64 << basis.len(),
        witness: basis.iter().map(|x| word(*x, n)).collect(),
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_distance() {
        assert_eq!(max_code_size(4, 1).unwrap().size, 16);
        assert_eq!(max_linear_code_size(4, 1).unwrap().size, 16);
    }

    #[test]
    fn small_known_values() {
        for (n, d, a) in [
            (4, 2, 8),
            (5, 3, 4),
            (6, 3, 8),
            (7, 3, 16),
            (5, 5, 2),
            (3, 2, 4),
        ] {
            let r = max_code_size(n, d).unwrap();
            assert_eq!(r.size, a, "A({n},{d})");
            assert!(r.validate());
        }
        for (n, d, a) in [(5, 3, 4), (7, 3, 16), (6, 4, 4), (8, 4, 16), (4, 2, 8)] {
            let r = max_linear_code_size(n, d).unwrap();
            assert_eq!(r.size, a, "A_Lin({n},{d})");
            assert!(r.validate());
        }
    }

    #[test]
    fn caps() {
        assert!(matches!(max_code_size(10, 3), Err(Error::OracleCap { .. })));
        assert!(matches!(
            max_linear_code_size(15, 3),
            Err(Error::OracleCap { .. })
        ));
    }

    #[test]
    fn tampered_witness_is_rejected() {
        let mut r = max_code_size(5, 3).unwrap();
        r.witness[1] = r.witness[0].clone();
        assert!(!r.validate());
        let mut r = max_linear_code_size(7, 3).unwrap();
        r.witness[0] = "1000000".into();
        assert!(!r.validate());
    }
}
