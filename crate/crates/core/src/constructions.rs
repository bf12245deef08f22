//! Builders for dual feasible solutions: parameter selection, the
//! Christoffel–Darboux function `Λ`, the first-LP certificate, the sign
//! polynomials `Φ` / `Φ^Lin`, the level-ℓ certificate, and the linear-valued
//! lift with its closed-form transform.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cube::{combination_weight_index, low_mask, CubeMatrix, CubePoint};
use crate::error::{invalid, Error, Result};
use crate::krawtchouk::{binomial_row, eval_all, KrawtchoukTable};
use crate::lp::{self, phi_factor_directions, verify_dual, Instance, Variant, VerificationReport};
use crate::profile::{self, fourier_profile, ProfileFn, ProfileSpace};
use crate::scalar::{int, log2_abs_rational, rational_serde, Number, Scalar};
use crate::table::{fourier_coefficient, Side, ValueTable, Values};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    FirstLp,
    HierarchyGeneral,
    HierarchyLinearPhi,
    LinearValuedLift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(with = "rational_serde")]
    pub epsilon: BigRational,
    pub m: u32,
    pub r: u32,
}

/// A constructed dual solution. `g` is a primal-side table on `ℓ·n`
/// coordinates.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub construction: Construction,
    pub instance: Instance,
    pub params: Params,
    pub g: ValueTable,
    pub claimed_value: Number,
    /// `|supp Γ̂|` of the factor squared into `g` (for the lift: of `g₁`'s `Λ̂`).
    pub support_size: BigUint,
}

// ---------------------------------------------------------------------------
// Parameter selection

/// Default cap on the denominator of `2ε`: `max(2·m·(n-d)^{m-1}, 2)`.
pub fn default_denominator_cap(n: u32, d: u32, m: u32) -> u64 {
    let a = (n - d) as u64;
    let cap = 2u64
        .saturating_mul(m as u64)
        .saturating_mul(a.saturating_pow(m.saturating_sub(1)));
    cap.max(2)
}

/// Smallest `ε` such that `2ε` has denominator at most `cap` and
/// `(n - d + 2ε)^m - (n - d)^m ≥ 1`.
pub fn choose_epsilon(n: u32, d: u32, m: u32, cap: u64) -> Result<BigRational> {
    if d == 0 || d >= n {
        return invalid(format!("need 1 ≤ d < n, got n = {n}, d = {d}"));
    }
    if m < 2 || m % 2 == 1 {
        return invalid(format!("m must be even and at least 2, got {m}"));
    }
    if cap == 0 {
        return invalid("denominator cap must be positive");
    }
    let a = BigRational::from_integer(BigInt::from(n - d));
    let base = num_traits::pow(a.clone(), m as usize);
    let enough =
        |t: &BigRational| num_traits::pow(&a + t, m as usize) - &base >= BigRational::one();
    // The predicate is monotone in t. For each denominator q find the least
    // numerator p with p/q passing, and keep the smallest fraction overall.
    let mut best: Option<BigRational> = None;
    for q in 1..=cap {
        let qb = BigInt::from(q);
        let (mut lo, mut hi) = (BigInt::zero(), qb.clone());
        // invariant: lo/q fails (or lo = 0), hi/q passes
        if !enough(&BigRational::new(hi.clone(), qb.clone())) {
            continue;
        }
        if let Some(b) = &best {
            // skip denominators that cannot beat the current best
            let floor = (b * BigRational::from_integer(qb.clone()))
                .floor()
                .to_integer();
            if floor.is_zero() {
                continue;
            }
            hi = hi.min(floor + 1);
            if !enough(&BigRational::new(hi.clone(), qb.clone())) {
                continue;
            }
        }
        while &hi - &lo > BigInt::one() {
            let mid: BigInt = (&lo + &hi) >> 1usize;
            if enough(&BigRational::new(mid.clone(), qb.clone())) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t = BigRational::new(hi, qb);
        if best.as_ref().map_or(true, |b| t < *b) {
            best = Some(t);
        }
    }
    match best {
        Some(t) => Ok(t / int(2)),
        None => Err(Error::Construction(format!(
            "no 2ε ≤ 1 with denominator ≤ {cap} satisfies the slack bound"
        ))),
    }
}

/// Minimal even `m ≥ 2` with `target ≤ ((1+δ)/(1-δ))^m`, where the target is
/// `ℓ` for the general hierarchy and `2^{ℓ-1}` for the linear one.
pub fn choose_m(ell: u32, delta: &BigRational, variant: Variant) -> Result<u32> {
    if ell == 0 {
        return invalid("level ℓ must be at least 1");
    }
    if !delta.is_positive() || *delta >= BigRational::one() {
        return invalid(format!("δ must lie in (0, 1), got {delta}"));
    }
    let one = BigRational::one();
    let ratio = (&one + delta) / (&one - delta);
    let target = match variant {
        Variant::General => int(ell as i64),
        _ => BigRational::from_integer(BigInt::one() << (ell - 1) as usize),
    };
    let mut m = 2u32;
    let mut power = &ratio * &ratio;
    while power < target {
        m += 2;
        power = &power * &ratio * &ratio;
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Λ

/// The Christoffel–Darboux section `Λ = Λ_r(·, d - ε)` and its transform, as
/// functions of Hamming weight.
#[derive(Clone, Debug)]
pub struct Lambda {
    pub n: u32,
    pub d: u32,
    pub epsilon: BigRational,
    pub r: u32,
    /// `Λ̂` by weight: `C(n,j)^{-1} K_j(d - ε)` for `j ≤ r`, else 0.
    pub hat: Vec<BigRational>,
    /// `Λ` by weight: `Σ_{i≤r} C(n,i)^{-1} K_i(d-ε) K_i(j)`.
    pub primal: Vec<BigRational>,
}

impl Lambda {
    pub fn s(&self) -> BigRational {
        int(self.d as i64) - &self.epsilon
    }

    /// `|supp Λ̂| = Σ_{j ≤ r} C(n, j)`.
    pub fn support_size(&self) -> BigUint {
        binomial_row(self.n as usize)[..=self.r as usize]
            .iter()
            .map(|b| b.to_biguint().expect("binomials are nonnegative"))
            .sum()
    }

    /// `(‖Λ̂‖₁, ‖Λ̂‖₂²)` over the whole cube.
    pub fn hat_norms(&self) -> (BigRational, BigRational) {
        let binom = binomial_row(self.n as usize);
        let mut l1 = BigRational::zero();
        let mut l2 = BigRational::zero();
        for (j, h) in self.hat.iter().enumerate() {
            let c = BigRational::from_integer(binom[j].clone());
            l1 += &c * h.abs();
            l2 += &c * h * h;
        }
        (l1, l2)
    }

    pub fn hat_table(&self) -> Result<ValueTable> {
        let hat = &self.hat;
        ValueTable::from_fn_exact(self.n, Side::Fourier, |x| {
            hat[x.count_ones() as usize].clone()
        })
    }

    pub fn primal_table(&self) -> Result<ValueTable> {
        let primal = &self.primal;
        ValueTable::from_fn_exact(self.n, Side::Primal, |x| {
            primal[x.count_ones() as usize].clone()
        })
    }

    /// `Λ̂^{⊗ℓ}` as a profile function (it depends only on row weights).
    pub fn hat_tensor_profile(&self, ell: u32) -> Result<ProfileFn<BigRational>> {
        let space = ProfileSpace::new(ell, self.n)?;
        Ok(ProfileFn::from_fn(space, |c| {
            (0..ell).fold(BigRational::one(), |acc, i| {
                acc * &self.hat[profile::combination_weight(c, 1 << i) as usize]
            })
        }))
    }

    /// `(Λ^{⊗ℓ})²` as a profile function.
    pub fn primal_tensor_square_profile(&self, ell: u32) -> Result<ProfileFn<BigRational>> {
        let space = ProfileSpace::new(ell, self.n)?;
        Ok(ProfileFn::from_fn(space, |c| {
            (0..ell).fold(BigRational::one(), |acc, i| {
                let v = &self.primal[profile::combination_weight(c, 1 << i) as usize];
                acc * v * v
            })
        }))
    }
}

/// Build `Λ` for `(n, d, ε)`, choosing `r` as the least integer with
/// `K_{r+1}(d - ε) ≤ 0`, and check `Λ̂(0) = 1`, `Λ̂ ≥ 0` and
/// `A Λ̂ ≥ (n - 2d + 2ε) Λ̂`.
pub fn build_lambda(n: u32, d: u32, epsilon: &BigRational) -> Result<Lambda> {
    if d == 0 || d > n {
        return invalid(format!("need 1 ≤ d ≤ n, got n = {n}, d = {d}"));
    }
    if !epsilon.is_positive() || *epsilon >= int(d as i64) {
        return invalid(format!("need 0 < ε < d, got ε = {epsilon}"));
    }
    let nu = n as usize;
    let s = int(d as i64) - epsilon;
    let k = eval_all(nu, &s, nu);
    // Σ_i K_i(s) = 0 for s > 0, so some K_{i}(s) with 1 ≤ i ≤ n is ≤ 0
    let r = (1..=nu)
        .find(|i| !k[*i].is_positive())
        .map(|i| i - 1)
        .ok_or_else(|| Error::Construction("no nonpositive Krawtchouk value at d - ε".into()))?;
    if let Some(i) = (0..=r).find(|i| k[*i].is_negative()) {
        return Err(Error::Construction(format!(
            "K_{i}(d - ε) < 0 below the support radius"
        )));
    }
    let binom = binomial_row(nu);
    let hat: Vec<BigRational> = (0..=nu)
        .map(|j| {
            if j <= r {
                &k[j] / BigRational::from_integer(binom[j].clone())
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let table = KrawtchoukTable::build(nu)?;
    let primal: Vec<BigRational> = (0..=nu)
        .map(|j| {
            (0..=r).fold(BigRational::zero(), |acc, i| {
                acc + &hat[i] * BigRational::from_integer(table.get(i, j).clone())
            })
        })
        .collect();
    let lambda = Lambda {
        n,
        d,
        epsilon: epsilon.clone(),
        r: r as u32,
        hat,
        primal,
    };

    if !lambda.hat[0].is_one() {
        return Err(Error::Construction("Λ̂(0) ≠ 1".into()));
    }
    if lambda.hat.iter().any(|h| h.is_negative()) {
        return Err(Error::Construction("Λ̂ has a negative value".into()));
    }
    // (AΛ̂)(j) = (n - j)Λ̂(j+1) + jΛ̂(j-1), checked by weight so that any n works
    let threshold = int(n as i64) - lambda.s() * int(2);
    let zero = BigRational::zero();
    for j in 0..=nu {
        let up = lambda.hat.get(j + 1).unwrap_or(&zero);
        let down = if j > 0 { &lambda.hat[j - 1] } else { &zero };
        let au = int((nu - j) as i64) * up + int(j as i64) * down;
        if au < &threshold * &lambda.hat[j] {
            return Err(Error::Construction(format!(
                "A Λ̂ ≥ (n - 2d + 2ε) Λ̂ fails at weight {j}"
            )));
        }
    }
    Ok(lambda)
}

/// `A^u Λ̂^{⊗ℓ} ≥ (n - 2(d - ε)) Λ̂^{⊗ℓ}` for the given directions.
pub fn lambda_eigen_report(
    lambda: &Lambda,
    ell: u32,
    directions: &[u32],
) -> Result<VerificationReport> {
    let inst = Instance::new(lambda.n, lambda.d, ell, Variant::General)?;
    let f = lambda.hat_tensor_profile(ell)?;
    let threshold = int(lambda.n as i64) - lambda.s() * int(2);
    lp::verify_eigen_condition(&f, &inst, directions, &BigRational::zero(), 1, &threshold)
}

// ---------------------------------------------------------------------------
// First LP certificate

/// `g(x) = 2(d - |x|) Λ(x)²` as a function of weight.
fn g1_by_weight(lambda: &Lambda) -> Vec<BigRational> {
    lambda
        .primal
        .iter()
        .enumerate()
        .map(|(j, v)| int(2 * (lambda.d as i64 - j as i64)) * v * v)
        .collect()
}

/// `g(0)/ĝ(0)` of the first-LP certificate, computed over weights only.
pub fn first_lp_value(lambda: &Lambda) -> BigRational {
    let g = g1_by_weight(lambda);
    let binom = binomial_row(lambda.n as usize);
    let total = g
        .iter()
        .zip(binom.iter())
        .fold(BigRational::zero(), |acc, (v, c)| {
            acc + v * BigRational::from_integer(c.clone())
        });
    let ghat0 = total / BigRational::from_integer(BigInt::one() << lambda.n as usize);
    &g[0] / ghat0
}

pub fn build_g1(n: u32, d: u32, epsilon: &BigRational) -> Result<Certificate> {
    let lambda = build_lambda(n, d, epsilon)?;
    build_g1_from(&lambda)
}

pub fn build_g1_from(lambda: &Lambda) -> Result<Certificate> {
    let (n, d) = (lambda.n, lambda.d);
    let by_weight = g1_by_weight(lambda);
    let g = ValueTable::from_fn_exact(n, Side::Primal, |x| {
        by_weight[x.count_ones() as usize].clone()
    })?;
    let ghat0 = match fourier_coefficient(&g, 0) {
        Number::Exact(q) => q,
        Number::Float(_) => unreachable!(),
    };
    if !ghat0.is_positive() {
        return Err(Error::Construction("ĝ(0) ≤ 0".into()));
    }
    let value = &by_weight[0] / &ghat0;
    let (l1, l2) = lambda.hat_norms();
    let d_over_eps = int(d as i64) / &lambda.epsilon;
    let norm_bound = &d_over_eps * &l1 * &l1 / &l2;
    let support = lambda.support_size();
    let support_bound = &d_over_eps * BigRational::from_integer(BigInt::from(support.clone()));
    if value > norm_bound || norm_bound > support_bound {
        return Err(Error::Construction(format!(
            "first-LP value {value} exceeds (d/ε)·‖Λ̂‖₁²/‖Λ̂‖₂² = {norm_bound} or the support bound"
        )));
    }
    Ok(Certificate {
        construction: Construction::FirstLp,
        instance: Instance::new(n, d, 1, Variant::General)?,
        params: Params {
            epsilon: lambda.epsilon.clone(),
            m: 2,
            r: lambda.r,
        },
        g,
        claimed_value: Number::Exact(value),
        support_size: support,
    })
}

// ---------------------------------------------------------------------------
// Φ and Φ^Lin

/// `Φ` (general) or `Φ^Lin` (linear) at a configuration, given a way to read
/// `|uᵀX|` for a direction `u`.
pub fn phi_value(inst: &Instance, m: u32, weight_of: impl Fn(u32) -> u32) -> BigInt {
    phi_factors(inst, m, weight_of).into_iter().product()
}

/// The individual factors `φ_U` / `φ^Lin_v`, in the order of
/// [`phi_factor_directions`].
pub fn phi_factors(inst: &Instance, m: u32, weight_of: impl Fn(u32) -> u32) -> Vec<BigInt> {
    let (n, d) = (inst.n as i64, inst.d as i64);
    let base = num_traits::pow(BigInt::from(n - d), m as usize);
    phi_factor_directions(inst.ell, inst.variant)
        .into_iter()
        .map(|dirs| {
            dirs.into_iter()
                .map(|u| {
                    num_traits::pow(BigInt::from(n + d - 2 * weight_of(u) as i64), m as usize)
                        - &base
                })
                .sum()
        })
        .collect()
}

/// Sign of each factor at `X`.
pub fn phi_factor_signs(inst: &Instance, m: u32, x: &CubeMatrix) -> Vec<Ordering> {
    let p = profile::profile(x);
    phi_factors(inst, m, |u| p.combination_weight(u))
        .iter()
        .map(|f| f.cmp(&BigInt::zero()))
        .collect()
}

fn phi_profile(inst: &Instance, m: u32) -> Result<ProfileFn<BigRational>> {
    if m % 2 == 1 || m == 0 {
        return invalid(format!("m must be even and positive, got {m}"));
    }
    let space = ProfileSpace::new(inst.ell, inst.n)?;
    Ok(ProfileFn::from_fn(space, |c| {
        BigRational::from_integer(phi_value(inst, m, |u| profile::combination_weight(c, u)))
    }))
}

/// `Φ_{n,d,ℓ}` as a profile function; lift with `lift_to_dense` for a table.
pub fn build_phi_general(n: u32, d: u32, ell: u32, m: u32) -> Result<ProfileFn<BigRational>> {
    phi_profile(&Instance::new(n, d, ell, Variant::General)?, m)
}

/// `Φ^Lin_{n,d,ℓ}` as a profile function.
pub fn build_phi_linear(n: u32, d: u32, ell: u32, m: u32) -> Result<ProfileFn<BigRational>> {
    phi_profile(&Instance::new(n, d, ell, Variant::Linear)?, m)
}

/// Dense `Φ` / `Φ^Lin` table, evaluated straight from row combinations.
pub fn phi_dense(inst: &Instance, m: u32) -> Result<ValueTable> {
    let (ell, n) = (inst.ell, inst.n);
    ValueTable::from_fn_exact(inst.dim(), Side::Primal, |x| {
        BigRational::from_integer(phi_value(inst, m, |u| {
            combination_weight_index(x, n, ell, u)
        }))
    })
}

// ---------------------------------------------------------------------------
// Level-ℓ certificates

/// Overrides for the automatic parameter choices.
#[derive(Clone, Debug, Default)]
pub struct HierarchyOptions {
    pub m: Option<u32>,
    pub epsilon: Option<BigRational>,
    pub denominator_cap: Option<u64>,
}

/// Everything behind a level-ℓ certificate, kept for diagnostics.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub certificate: Certificate,
    pub lambda: Lambda,
}

fn resolve_params(inst: &Instance, opts: &HierarchyOptions) -> Result<(u32, BigRational)> {
    let m = match opts.m {
        Some(m) if m >= 2 && m % 2 == 0 => m,
        Some(m) => return invalid(format!("m must be even and at least 2, got {m}")),
        None => choose_m(inst.ell, &inst.delta(), inst.variant)?,
    };
    let epsilon = match &opts.epsilon {
        Some(e) => e.clone(),
        None => {
            let cap = opts
                .denominator_cap
                .unwrap_or_else(|| default_denominator_cap(inst.n, inst.d, m));
            choose_epsilon(inst.n, inst.d, m, cap)?
        }
    };
    Ok((m, epsilon))
}

/// `g = Φ · (Λ^{⊗ℓ})²` with automatically chosen `m` and `ε`.
pub fn build_g_ell(n: u32, d: u32, ell: u32) -> Result<Hierarchy> {
    build_g_ell_with(n, d, ell, &HierarchyOptions::default())
}

pub fn build_g_ell_with(n: u32, d: u32, ell: u32, opts: &HierarchyOptions) -> Result<Hierarchy> {
    let inst = Instance::new(n, d, ell, Variant::General)?;
    if d >= n {
        return invalid("hierarchy certificates need d < n");
    }
    let (m, epsilon) = resolve_params(&inst, opts)?;
    let lambda = build_lambda(n, d, &epsilon)?;
    let base = lambda.primal_table()?;
    let mut gamma = base.clone();
    for _ in 1..ell {
        gamma = gamma.tensor(&base)?;
    }
    let g = phi_dense(&inst, m)?.mul(&gamma.mul(&gamma)?)?;
    let ghat0 = fourier_coefficient(&g, 0);
    let (g0, ghat0) = (g.get(0), ghat0.as_exact().cloned().expect("exact table"));
    if !ghat0.is_positive() {
        return Err(Error::Construction("ĝ(0) ≤ 0".into()));
    }
    let value = g0.as_exact().expect("exact table") / &ghat0;
    let support = num_traits::pow(lambda.support_size(), ell as usize);
    check_hierarchy_value_bound(&inst, &value, &lambda.support_size())?;
    Ok(Hierarchy {
        certificate: Certificate {
            construction: Construction::HierarchyGeneral,
            instance: inst,
            params: Params {
                epsilon,
                m,
                r: lambda.r,
            },
            g,
            claimed_value: Number::Exact(value),
            support_size: support,
        },
        lambda,
    })
}

/// `log₂` of `(e·n^{1/δ})^{2^ℓ log₂ ℓ} · |supp Λ̂|^ℓ`.
pub fn hierarchy_value_bound_log2(n: u32, d: u32, ell: u32, support: &BigUint) -> f64 {
    let delta = d as f64 / n as f64;
    let exponent = (1u64 << ell) as f64 * (ell as f64).log2();
    let base = std::f64::consts::E.log2() + (n as f64).log2() / delta;
    exponent * base
        + ell as f64 * log2_abs_rational(&BigRational::from_integer(BigInt::from(support.clone())))
}

fn check_hierarchy_value_bound(
    inst: &Instance,
    value: &BigRational,
    support: &BigUint,
) -> Result<()> {
    if inst.ell == 1 {
        // exponent 2^ℓ log ℓ vanishes; the first-LP bound is checked instead
        return Ok(());
    }
    let lhs = log2_abs_rational(value);
    let rhs = hierarchy_value_bound_log2(inst.n, inst.d, inst.ell, support);
    if lhs > rhs + 1e-9 {
        return Err(Error::Construction(format!(
            "value 2^{lhs:.3} exceeds the level-ℓ bound 2^{rhs:.3}"
        )));
    }
    Ok(())
}

/// `Π_{j=1}^{ℓ} j^{C(ℓ,j)}`.
pub fn slack_threshold(ell: u32) -> BigInt {
    let binom = binomial_row(ell as usize);
    (1..=ell as usize)
        .map(|j| {
            num_traits::pow(
                BigInt::from(j),
                binom[j].to_usize().expect("small binomial"),
            )
        })
        .product()
}

/// Check `Φ̂ * (Γ̂ * Γ̂) ≥ Π_j j^{C(ℓ,j)} · (Γ̂ * Γ̂)` for `Γ = Λ^{⊗ℓ}` in the
/// profile domain. Uses `Γ̂ * Γ̂ = F[Γ²]`.
pub fn hierarchy_slack(h: &Hierarchy) -> Result<VerificationReport> {
    let inst = h.certificate.instance;
    let sq = h.lambda.primal_tensor_square_profile(inst.ell)?;
    let conv = fourier_profile(&sq)?;
    let threshold = BigRational::from_integer(slack_threshold(inst.ell));
    lp::verify_phi_condition(&conv, &inst, h.certificate.params.m, &threshold)
}

/// `g = Φ^Lin · Γ²` from a candidate `Γ̂` given on profiles (Problem-1 route).
pub fn build_g_linear_phi(
    n: u32,
    d: u32,
    ell: u32,
    gamma_hat: &ProfileFn<BigRational>,
    m: Option<u32>,
) -> Result<Certificate> {
    let inst = Instance::new(n, d, ell, Variant::Linear)?;
    let space = gamma_hat.space();
    if space.ell() != ell || space.n() != n {
        return Err(Error::InstanceMismatch(
            "Γ̂ lives on a different profile space".into(),
        ));
    }
    let m = match m {
        Some(m) => m,
        None => choose_m(ell, &inst.delta(), Variant::Linear)?,
    };
    // Γ = 2^{ℓn} F(Γ̂)
    let gamma = fourier_profile(gamma_hat)?.map(|q| q.mul_pow2((ell * n) as i32));
    let phi = phi_profile(&inst, m)?;
    let g = phi.zip_with(&gamma, |p, c| p * c * c)?;
    let table = g.lift_to_dense(Side::Primal)?;
    let report = verify_dual(&table, &inst)?;
    let value = report.value.clone().ok_or_else(|| {
        Error::Construction(format!(
            "Φ^Lin·Γ² is infeasible: {:?}",
            report.violations.first()
        ))
    })?;
    Ok(Certificate {
        construction: Construction::HierarchyLinearPhi,
        instance: inst,
        params: Params {
            epsilon: BigRational::zero(),
            m,
            r: support_radius(gamma_hat),
        },
        g: table,
        claimed_value: value,
        support_size: gamma_hat.support_size(),
    })
}

/// Largest total row-span weight `Σ_{v≠0} α_v` over the support.
fn support_radius(f: &ProfileFn<BigRational>) -> u32 {
    let space = f.space();
    (0..space.len())
        .filter(|i| !f.at(*i).is_zero())
        .map(|i| space.n() - space.counts(i)[0])
        .max()
        .unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Linear-valued lift

/// Rescale a ratio-form dual solution so that `ĝ(0) = 1`.
pub fn normalize_dual(g: &ValueTable) -> Result<ValueTable> {
    match fourier_coefficient(g, 0) {
        Number::Exact(q) if q.is_positive() => Ok(g.scale(&q.recip())),
        Number::Float(x) if x > 0.0 => {
            let inv = 1.0 / x;
            ValueTable::from_fn_float(g.dim(), g.side(), |i| g.get_f64(i) * inv)
        }
        _ => Err(Error::NotVerified("ĝ(0) is not positive".into())),
    }
}

/// The nonzero row shared by all nonzero rows of a rank-one matrix, with the
/// row selector `u`; `None` for the zero matrix and for rank ≥ 2.
pub fn rank_one_factor(index: u64, ell: u32, n: u32) -> Option<(u64, u64)> {
    let mask = low_mask(n);
    let mut x = 0u64;
    let mut u = 0u64;
    for i in 0..ell {
        let row = (index >> (i * n)) & mask;
        if row == 0 {
            continue;
        }
        if x == 0 {
            x = row;
        } else if row != x {
            return None;
        }
        u |= 1 << i;
    }
    (x != 0).then_some((u, x))
}

/// Lift a verified Delsarte dual `g₁` (with `ĝ₁(0) = 1`) to the level-ℓ
/// linear-valued program.
pub fn lift_linear_valued(g1: &ValueTable, d: u32, ell: u32) -> Result<Certificate> {
    let n = g1.dim();
    let base = Instance::new(n, d, 1, Variant::General)?;
    let report = verify_dual(g1, &base)?;
    if !report.feasible {
        return Err(Error::NotVerified(format!(
            "g₁ fails Delsarte's dual: {:?}",
            report.violations.first()
        )));
    }
    let unit = match fourier_coefficient(g1, 0) {
        Number::Exact(q) => q.is_one(),
        Number::Float(x) => (x - 1.0).abs() <= 1e-9,
    };
    if !unit {
        return Err(Error::NotVerified("ĝ₁(0) ≠ 1; normalize first".into()));
    }
    let inst = Instance::new(n, d, ell, Variant::LinearValued)?;
    let k = (1i64 << ell) - 1;
    let g = match g1.values() {
        Values::Exact(v) => {
            let kq = int(k);
            ValueTable::from_fn_exact(inst.dim(), Side::Primal, |idx| {
                if idx == 0 {
                    return v[0].clone();
                }
                match rank_one_factor(idx, ell, n) {
                    Some((_, x)) => {
                        BigRational::one() + (&v[x as usize] - BigRational::one()) / &kq
                    }
                    None => BigRational::one(),
                }
            })?
        }
        Values::Float(v) => ValueTable::from_fn_float(inst.dim(), Side::Primal, |idx| {
            if idx == 0 {
                return v[0];
            }
            match rank_one_factor(idx, ell, n) {
                Some((_, x)) => 1.0 + (v[x as usize] - 1.0) / k as f64,
                None => 1.0,
            }
        })?,
    };
    let support = BigUint::from(g1.fourier().support_size());
    Ok(Certificate {
        construction: Construction::LinearValuedLift,
        instance: inst,
        params: Params {
            epsilon: BigRational::zero(),
            m: 0,
            r: 0,
        },
        claimed_value: g1.get(0),
        g,
        support_size: support,
    })
}

/// First-LP `g₁` normalized to `ĝ₁(0) = 1`, then lifted, keeping `ε` and `r`.
pub fn lift_first_lp(n: u32, d: u32, ell: u32, epsilon: &BigRational) -> Result<Certificate> {
    let first = build_g1(n, d, epsilon)?;
    let g1 = normalize_dual(&first.g)?;
    let mut cert = lift_linear_valued(&g1, d, ell)?;
    cert.params = first.params;
    cert.support_size = first.support_size;
    Ok(cert)
}

/// `ĝ(X) = δ₀(X) + 2^{-(ℓ-1)n}/(2^ℓ - 1) · Σ_{u≠0} [ĝ₁(uᵀX) - δ₀(uᵀX)]`.
pub fn ghat_closed_form(g1_hat: &ValueTable, x: &CubeMatrix) -> Result<Number> {
    let n = g1_hat.dim();
    if x.n() != n {
        return Err(Error::LengthMismatch {
            expected: n as usize,
            found: x.n() as usize,
        });
    }
    let ell = x.ell();
    let k = (1i64 << ell) - 1;
    let shift = -(((ell - 1) * n) as i32);
    let combos: Vec<u64> = (1..=k as u64)
        .map(|u| {
            x.row_combination(&CubePoint::new(u, ell).expect("ℓ ≤ 64"))
                .expect("length ℓ")
                .bits()
        })
        .collect();
    let delta0 = |z: u64| if z == 0 { 1i64 } else { 0 };
    Ok(match g1_hat.values() {
        Values::Exact(v) => {
            let sum = combos.iter().fold(BigRational::zero(), |acc, z| {
                acc + &v[*z as usize] - int(delta0(*z))
            });
            Number::Exact(int(delta0(x.index())) + (sum / int(k)).mul_pow2(shift))
        }
        Values::Float(v) => {
            let sum: f64 = combos
                .iter()
                .map(|z| v[*z as usize] - delta0(*z) as f64)
                .sum();
            Number::Float(delta0(x.index()) as f64 + (sum / k as f64).mul_pow2(shift))
        }
    })
}

// ---------------------------------------------------------------------------
// Why Λ^{⊗ℓ} does not solve the linear problem

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub n: u32,
    pub d: u32,
    pub ell: u32,
    pub u: String,
    #[serde(with = "rational_serde")]
    pub epsilon: BigRational,
    /// `(A^u Λ̂^{⊗ℓ})(0)`.
    #[serde(with = "rational_serde")]
    pub lhs: BigRational,
    /// `(n - 2(d - ε)) · Λ̂^{⊗ℓ}(0)`.
    #[serde(with = "rational_serde")]
    pub rhs: BigRational,
    /// `n / (n - 2d)^{|u|}`.
    #[serde(with = "rational_serde")]
    pub bound: BigRational,
    pub violated: bool,
}

/// Evaluate `(A^u Λ̂^{⊗ℓ})(0) = Λ̂(0)^{ℓ-|u|} Σ_i Λ̂(e_i)^{|u|}` against the
/// eigenvalue the linear problem would need.
pub fn counterexample_au(
    n: u32,
    d: u32,
    ell: u32,
    u: u32,
    epsilon: &BigRational,
) -> Result<CounterexampleReport> {
    let k = u.count_ones();
    if u >= 1 << ell {
        return invalid(format!("direction {u:#b} has more than ℓ = {ell} bits"));
    }
    if k < 2 {
        return invalid("the probe needs |u| ≥ 2; single-row directions satisfy the condition");
    }
    if n <= 2 * d {
        return invalid("the probe needs n > 2d");
    }
    let lambda = build_lambda(n, d, epsilon)?;
    let h0 = &lambda.hat[0];
    let h1 = &lambda.hat[1];
    let lhs = num_traits::pow(h0.clone(), (ell - k) as usize)
        * int(n as i64)
        * num_traits::pow(h1.clone(), k as usize);
    let rhs = (int(n as i64) - lambda.s() * int(2)) * num_traits::pow(h0.clone(), ell as usize);
    let bound = int(n as i64) / num_traits::pow(int(n as i64 - 2 * d as i64), k as usize);
    Ok(CounterexampleReport {
        n,
        d,
        ell,
        u: CubePoint::new(u as u64, ell)?.to_string(),
        epsilon: epsilon.clone(),
        violated: lhs < rhs,
        lhs,
        rhs,
        bound,
    })
}
