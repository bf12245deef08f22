//! Column-type profiles and the symmetrized operator engine.
//!
//! A function on ℓ×n matrices that is invariant under column permutations
//! depends only on the profile `α`, where `α_v` counts the columns equal to
//! `v ∈ {0,1}^ℓ`. Types are bitmasks with bit `i` holding row `i`.

use std::sync::Arc;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cube::{low_mask, CubeMatrix};
use crate::error::{invalid, Error, Result};
use crate::scalar::{Number, Scalar};
use crate::table::{DenseCap, Side, ValueTable, Values};

/// Counts of each column type; the counts sum to `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile(pub Vec<u32>);

impl Profile {
    /// The profile with all `n` columns equal to type `v`.
    pub fn pure(ell: u32, n: u32, v: usize) -> Self {
        let mut c = vec![0; 1 << ell];
        c[v] = n;
        Profile(c)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn ell(&self) -> u32 {
        self.0.len().trailing_zeros()
    }

    /// `|x_i|`: columns whose type has bit `i` set.
    pub fn row_weight(&self, i: u32) -> u32 {
        self.0
            .iter()
            .enumerate()
            .filter(|(v, _)| (v >> i) & 1 == 1)
            .map(|(_, c)| c)
            .sum()
    }

    /// `|uᵀX|`: columns `v` with `⟨u, v⟩ = 1` over F₂.
    pub fn combination_weight(&self, u: u32) -> u32 {
        combination_weight(&self.0, u)
    }

    /// A matrix with this profile: columns sorted by type.
    pub fn representative(&self) -> CubeMatrix {
        let ell = self.ell();
        let n = self.total();
        CubeMatrix::from_index(ell, n, representative_index(&self.0, ell, n))
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.0[1..].iter().all(|c| *c == 0)
    }
}

#[inline]
pub(crate) fn combination_weight(counts: &[u32], u: u32) -> u32 {
    counts
        .iter()
        .enumerate()
        .filter(|(v, _)| (*v as u32 & u).count_ones() % 2 == 1)
        .map(|(_, c)| c)
        .sum()
}

fn representative_index(counts: &[u32], ell: u32, n: u32) -> u64 {
    let mut idx = 0u64;
    let mut col = 0u32;
    for (v, c) in counts.iter().enumerate() {
        for _ in 0..*c {
            for i in 0..ell {
                if (v >> i) & 1 == 1 {
                    idx |= 1 << (i * n + col);
                }
            }
            col += 1;
        }
    }
    idx
}

/// `α_v` = number of columns of `X` equal to `v`.
pub fn profile(x: &CubeMatrix) -> Profile {
    let mut c = vec![0u32; 1 << x.ell()];
    for j in 0..x.n() {
        c[x.column_type(j) as usize] += 1;
    }
    Profile(c)
}

pub(crate) fn profile_counts_of_index(index: u64, ell: u32, n: u32, out: &mut [u32]) {
    out.iter_mut().for_each(|c| *c = 0);
    let mask = low_mask(n);
    let rows: Vec<u64> = (0..ell).map(|i| (index >> (i * n)) & mask).collect();
    for j in 0..n {
        let mut v = 0usize;
        for (i, r) in rows.iter().enumerate() {
            v |= (((r >> j) & 1) as usize) << i;
        }
        out[v] += 1;
    }
}

/// All profiles for given `(ℓ, n)`, in lexicographic order of the count
/// tuple, with combinatorial ranking.
#[derive(Debug)]
pub struct ProfileSpace {
    ell: u32,
    n: u32,
    types: usize,
    counts: Vec<u32>,
    binom: Vec<Vec<u64>>,
}

impl ProfileSpace {
    pub fn new(ell: u32, n: u32) -> Result<Arc<Self>> {
        if ell == 0 || ell > 6 {
            return invalid(format!("profile level ℓ = {ell} outside 1..=6"));
        }
        let types = 1usize << ell;
        let top = n as usize + types;
        let mut binom = vec![vec![0u64; types + 1]; top + 1];
        binom[0][0] = 1;
        for a in 1..=top {
            binom[a][0] = 1;
            for b in 1..=types {
                binom[a][b] = binom[a - 1][b - 1]
                    .checked_add(binom[a - 1][b])
                    .ok_or_else(|| Error::InvalidParameter("profile space too large".into()))?;
            }
        }
        let len = binom[n as usize + types - 1][types - 1];
        if len > 1 << 28 {
            return invalid(format!("{len} profiles exceed the enumeration limit"));
        }
        let mut counts = Vec::with_capacity(len as usize * types);
        let mut cur = vec![0u32; types];
        enumerate(&mut cur, 0, n, &mut counts);
        debug_assert_eq!(counts.len(), len as usize * types);
        Ok(Arc::new(ProfileSpace {
            ell,
            n,
            types,
            counts,
            binom,
        }))
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn types(&self) -> usize {
        self.types
    }

    pub fn len(&self) -> usize {
        self.counts.len() / self.types
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self, idx: usize) -> &[u32] {
        &self.counts[idx * self.types..(idx + 1) * self.types]
    }

    pub fn profile(&self, idx: usize) -> Profile {
        Profile(self.counts(idx).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.counts.chunks(self.types)
    }

    fn c(&self, a: usize, b: usize) -> u64 {
        self.binom[a][b]
    }

    /// Position of a count tuple in lexicographic order.
    pub fn rank(&self, alpha: &[u32]) -> usize {
        debug_assert_eq!(alpha.len(), self.types);
        let mut rank = 0u64;
        let mut rem = self.n as usize;
        for (i, a) in alpha[..self.types - 1].iter().enumerate() {
            let p = self.types - i - 1;
            let a = *a as usize;
            rank += self.c(rem + p, p) - self.c(rem - a + p, p);
            rem -= a;
        }
        rank as usize
    }

    /// Rank of the profile of the matrix with flattened index `index`.
    pub fn rank_of_index(&self, index: u64) -> usize {
        let mut buf = vec![0u32; self.types];
        profile_counts_of_index(index, self.ell, self.n, &mut buf);
        self.rank(&buf)
    }

    /// Number of matrices with the given profile: the multinomial `n!/Π α_v!`.
    pub fn class_size(&self, alpha: &[u32]) -> num_bigint::BigUint {
        let mut rem = self.n as usize;
        let mut out = num_bigint::BigUint::from(1u32);
        for a in alpha {
            out *= crate::krawtchouk::binomial(rem, *a as usize)
                .to_biguint()
                .unwrap();
            rem -= *a as usize;
        }
        out
    }
}

fn enumerate(cur: &mut Vec<u32>, pos: usize, rem: u32, out: &mut Vec<u32>) {
    if pos == cur.len() - 1 {
        cur[pos] = rem;
        out.extend_from_slice(cur);
        return;
    }
    for a in 0..=rem {
        cur[pos] = a;
        enumerate(cur, pos + 1, rem - a, out);
    }
}

/// A function on profiles (equivalently, a column-symmetric table).
#[derive(Clone, Debug)]
pub struct ProfileFn<S> {
    space: Arc<ProfileSpace>,
    values: Vec<S>,
}

impl<S: Scalar> ProfileFn<S> {
    pub fn new(space: Arc<ProfileSpace>, values: Vec<S>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::LengthMismatch {
                expected: space.len(),
                found: values.len(),
            });
        }
        Ok(ProfileFn { space, values })
    }

    pub fn from_fn(space: Arc<ProfileSpace>, f: impl Fn(&[u32]) -> S + Sync) -> Self {
        let values = (0..space.len())
            .into_par_iter()
            .map(|i| f(space.counts(i)))
            .collect();
        ProfileFn { space, values }
    }

    /// Indicator of a single profile.
    pub fn indicator(space: Arc<ProfileSpace>, alpha: &[u32]) -> Self {
        let r = space.rank(alpha);
        let mut values = vec![S::zero(); space.len()];
        values[r] = S::one();
        ProfileFn { space, values }
    }

    pub fn space(&self) -> &Arc<ProfileSpace> {
        &self.space
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn get(&self, alpha: &[u32]) -> &S {
        &self.values[self.space.rank(alpha)]
    }

    pub fn at(&self, idx: usize) -> &S {
        &self.values[idx]
    }

    /// Value at the all-zero matrix.
    pub fn at_zero(&self) -> &S {
        &self.values[self
            .space
            .rank(&Profile::pure(self.space.ell, self.space.n, 0).0)]
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Sync) -> ProfileFn<T> {
        ProfileFn {
            space: self.space.clone(),
            values: self.values.par_iter().map(&f).collect(),
        }
    }

    pub fn zip_with(&self, other: &ProfileFn<S>, f: impl Fn(&S, &S) -> S + Sync) -> Result<Self> {
        if !Arc::ptr_eq(&self.space, &other.space)
            && (self.space.ell != other.space.ell || self.space.n != other.space.n)
        {
            return Err(Error::LengthMismatch {
                expected: self.space.len(),
                found: other.space.len(),
            });
        }
        Ok(ProfileFn {
            space: self.space.clone(),
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    /// Dense lift `X ↦ f(Γ_X)`.
    pub fn lift_to_dense(&self, side: Side) -> Result<ValueTable> {
        let (ell, n) = (self.space.ell, self.space.n);
        let dim = ell * n;
        DenseCap::current().check(dim, S::MODE)?;
        ValueTable::from_fn::<S, _>(dim, side, |idx| {
            self.values[self.space.rank_of_index(idx)].clone()
        })
    }

    /// Number of profiles (not matrices) where the function is nonzero.
    pub fn profile_support(&self) -> usize {
        self.values.iter().filter(|v| !v.is_zero()).count()
    }

    /// Number of matrices where the function is nonzero.
    pub fn support_size(&self) -> num_bigint::BigUint {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| self.space.class_size(self.space.counts(i)))
            .sum()
    }
}

impl ProfileFn<BigRational> {
    pub fn to_float(&self) -> ProfileFn<f64> {
        self.map(|q| q.to_f64())
    }
}

/// Restrict a dense table to profiles, first checking column symmetry on
/// `samples` random column permutations.
pub fn from_dense(
    table: &ValueTable,
    ell: u32,
    n: u32,
    samples: usize,
) -> Result<ProfileFn<BigRational>> {
    if table.dim() != ell * n {
        return Err(Error::InstanceMismatch(format!(
            "table has {} coordinates, expected {ell}×{n}",
            table.dim()
        )));
    }
    if !is_column_symmetric(table, ell, n, samples, 0x5eed) {
        return Err(Error::NotVerified("table is not column-symmetric".into()));
    }
    let space = ProfileSpace::new(ell, n)?;
    let values = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let idx = representative_index(space.counts(i), ell, n);
            match table.get(idx) {
                Number::Exact(q) => q,
                Number::Float(x) => BigRational::from_float(x).unwrap_or_default(),
            }
        })
        .collect();
    ProfileFn::new(space, values)
}

fn permute_columns(index: u64, ell: u32, n: u32, perm: &[u32]) -> u64 {
    let mut out = 0u64;
    for i in 0..ell {
        for (j, pj) in perm.iter().enumerate() {
            if (index >> (i * n + j as u32)) & 1 == 1 {
                out |= 1 << (i * n + pj);
            }
        }
    }
    out
}

/// Sampled check that `g(Xπ) = g(X)` for random column permutations `π`.
/// Tables up to 2^12 entries are checked at every point; larger ones at
/// 4096 random points per permutation.
pub fn is_column_symmetric(
    table: &ValueTable,
    ell: u32,
    n: u32,
    samples: usize,
    seed: u64,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = table.len() as u64;
    for _ in 0..samples {
        let mut perm: Vec<u32> = (0..n).collect();
        perm.shuffle(&mut rng);
        let points: Vec<u64> = if len <= 1 << 12 {
            (0..len).collect()
        } else {
            (0..4096).map(|_| rng.gen_range(0..len)).collect()
        };
        let ok = points.par_iter().all(|&x| {
            let y = permute_columns(x, ell, n, &perm);
            match table.values() {
                Values::Exact(v) => v[x as usize] == v[y as usize],
                Values::Float(v) => v[x as usize] == v[y as usize],
            }
        });
        if !ok {
            return false;
        }
    }
    true
}

/// Profile-domain `A^u`: `(A^u f)(α) = Σ_v α_v f(α - ε_v + ε_{u+v})`.
pub fn apply_au_symmetric<S: Scalar>(f: &ProfileFn<S>, u: u32) -> Result<ProfileFn<S>> {
    let space = f.space.clone();
    if u == 0 {
        return Err(Error::ZeroDirection);
    }
    if u as usize >= space.types {
        return invalid(format!(
            "direction {u:#b} has more than ℓ = {} bits",
            space.ell
        ));
    }
    let types = space.types;
    let values = (0..space.len())
        .into_par_iter()
        .map_init(
            || vec![0u32; types],
            |buf, i| {
                let alpha = space.counts(i);
                let mut acc = S::zero();
                for v in 0..types {
                    let a = alpha[v];
                    if a == 0 {
                        continue;
                    }
                    buf.copy_from_slice(alpha);
                    buf[v] -= 1;
                    buf[v ^ u as usize] += 1;
                    let term = f.values[space.rank(buf)].clone();
                    acc = acc + S::from_i64(a as i64) * term;
                }
                acc
            },
        )
        .collect();
    Ok(ProfileFn { space, values })
}

/// `(A^u + shift·I)^power f` in the profile domain.
pub fn apply_shifted_power<S: Scalar>(
    f: &ProfileFn<S>,
    u: u32,
    shift: &S,
    power: u32,
) -> Result<ProfileFn<S>> {
    let mut cur = f.clone();
    for _ in 0..power {
        let moved = apply_au_symmetric(&cur, u)?;
        cur = moved.zip_with(&cur, |a, b| a.clone() + shift.clone() * b.clone())?;
    }
    Ok(cur)
}

/// Fourier transform of a column-symmetric function, carried out in the
/// profile domain: `ĝ(β) = 2^{-ℓn} Σ_α g(α) K_α(β)` where the multivariate
/// Krawtchouk value `K_α(β)` is the `t^α` coefficient of
/// `Π_v (Σ_w (-1)^{⟨v,w⟩} t_w)^{β_v}`.
pub fn fourier_profile<S: Scalar>(f: &ProfileFn<S>) -> Result<ProfileFn<S>> {
    let space = f.space.clone();
    let (ell, n) = (space.ell, space.n);
    if ell * n > 120 {
        return invalid("profile transform coefficients exceed 128-bit range");
    }
    let types = space.types;
    let layers: Vec<Arc<ProfileSpace>> = (0..=n)
        .map(|k| ProfileSpace::new(ell, k))
        .collect::<Result<_>>()?;
    let chi: Vec<Vec<i128>> = (0..types)
        .map(|v| {
            (0..types)
                .map(|w| if (v & w).count_ones() % 2 == 0 { 1 } else { -1 })
                .collect()
        })
        .collect();
    let scale = -((ell * n) as i32);
    let values = (0..space.len())
        .into_par_iter()
        .map(|b| {
            let beta = space.counts(b);
            let mut poly = vec![1i128];
            let mut degree = 0usize;
            let mut buf = vec![0u32; types];
            for v in 0..types {
                for _ in 0..beta[v] {
                    let src = &layers[degree];
                    let dst = &layers[degree + 1];
                    let mut next = vec![0i128; dst.len()];
                    for (idx, c) in poly.iter().enumerate() {
                        if *c == 0 {
                            continue;
                        }
                        buf.copy_from_slice(src.counts(idx));
                        for w in 0..types {
                            buf[w] += 1;
                            next[dst.rank(&buf)] += chi[v][w] * c;
                            buf[w] -= 1;
                        }
                    }
                    poly = next;
                    degree += 1;
                }
            }
            let acc = poly
                .iter()
                .zip(f.values.iter())
                .filter(|(c, _)| **c != 0)
                .fold(S::zero(), |acc, (c, g)| acc + S::from_i128(*c) * g.clone());
            acc.mul_pow2(scale)
        })
        .collect();
    Ok(ProfileFn { space, values })
}
