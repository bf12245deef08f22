//! The LP data model: forbidden/valid configurations and feasibility
//! verifiers for the three dual programs.
//!
//! Dense verifiers scan every point of `{0,1}^{ℓn}`; profile verifiers scan
//! column-type profiles and are only meaningful for column-symmetric input.

use std::fmt;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{combination_weight_index, row_weight_index, CubeMatrix, CubePoint};
use crate::error::{invalid, Error, Result};
use crate::profile::{self, apply_shifted_power, fourier_profile, ProfileFn};
use crate::scalar::{Mode, Number, Scalar};
use crate::table::{Side, ValueTable, Values};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    General,
    Linear,
    LinearValued,
}

impl Variant {
    /// Whether forbidden configurations are judged on the row span.
    pub fn uses_span(self) -> bool {
        !matches!(self, Variant::General)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::General => "general",
            Variant::Linear => "linear",
            Variant::LinearValued => "linear-valued",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub n: u32,
    pub d: u32,
    pub ell: u32,
    pub variant: Variant,
}

impl Instance {
    pub fn new(n: u32, d: u32, ell: u32, variant: Variant) -> Result<Self> {
        if n == 0 || d == 0 || d > n {
            return invalid(format!("need 1 ≤ d ≤ n, got n = {n}, d = {d}"));
        }
        if ell == 0 {
            return invalid("level ℓ must be at least 1");
        }
        if ell * n > 64 {
            return invalid(format!("ℓ·n = {} exceeds 64 coordinates", ell * n));
        }
        Ok(Instance { n, d, ell, variant })
    }

    pub fn dim(&self) -> u32 {
        self.ell * self.n
    }

    /// `δ = d/n`.
    pub fn delta(&self) -> BigRational {
        BigRational::new(self.d.into(), self.n.into())
    }

    fn forbidden_weight(&self, w: u32) -> bool {
        w >= 1 && w < self.d
    }

    /// Validity of the flattened configuration `index`.
    pub fn is_valid_index(&self, index: u64) -> bool {
        if self.variant.uses_span() {
            (1..1u32 << self.ell).all(|u| {
                !self.forbidden_weight(combination_weight_index(index, self.n, self.ell, u))
            })
        } else {
            (0..self.ell).all(|i| !self.forbidden_weight(row_weight_index(index, self.n, i)))
        }
    }

    /// Validity of any configuration with column-type counts `alpha`.
    pub fn is_valid_profile(&self, alpha: &[u32]) -> bool {
        if self.variant.uses_span() {
            (1..1u32 << self.ell)
                .all(|u| !self.forbidden_weight(profile::combination_weight(alpha, u)))
        } else {
            (0..self.ell)
                .all(|i| !self.forbidden_weight(profile::combination_weight(alpha, 1 << i)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Forbidden,
    Valid,
}

fn classify_by(d: u32, mut weights: impl Iterator<Item = u32>) -> Classification {
    if weights.any(|w| w >= 1 && w < d) {
        Classification::Forbidden
    } else {
        Classification::Valid
    }
}

/// Forbidden iff some row has weight in `[1, d-1]`.
pub fn classify_general(x: &CubeMatrix, d: u32) -> Classification {
    classify_by(d, x.rows().iter().map(|r| r.weight()))
}

/// Forbidden iff some nonzero row combination has weight in `[1, d-1]`.
pub fn classify_linear(x: &CubeMatrix, d: u32) -> Classification {
    let ell = x.ell();
    classify_by(
        d,
        (1..1u64 << ell).map(|u| {
            x.row_combination(&CubePoint::new(u, ell).expect("ℓ ≤ 64"))
                .expect("direction length is ℓ")
                .weight()
        }),
    )
}

/// Dense `A^u`: `(A^u f)(X) = Σ_j f(X + u e_jᵀ)`. The level `ℓ` is the length
/// of `u`; the table must live on `ℓ·n` coordinates.
pub fn dense_au_matrix_action(f: &ValueTable, u: &CubePoint) -> Result<ValueTable> {
    if u.is_zero() {
        return Err(Error::ZeroDirection);
    }
    let ell = u.len();
    if f.dim() % ell != 0 {
        return invalid(format!(
            "table dimension {} is not a multiple of ℓ = {ell}",
            f.dim()
        ));
    }
    let n = f.dim() / ell;
    let shifts: Vec<u64> = (0..n)
        .map(|j| {
            (0..ell)
                .filter(|i| u.get(*i))
                .fold(0u64, |acc, i| acc | 1 << (i * n + j))
        })
        .collect();
    let out = match f.values() {
        Values::Exact(v) => ValueTable::from_fn_exact(f.dim(), f.side(), |x| {
            shifts.iter().map(|s| &v[(x ^ s) as usize]).sum()
        })?,
        Values::Float(v) => ValueTable::from_fn_float(f.dim(), f.side(), |x| {
            shifts.iter().map(|s| v[(x ^ s) as usize]).sum()
        })?,
    };
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// `ĝ ≥ 0` everywhere.
    FourierNonnegative,
    /// `ĝ(0) > 0`.
    FourierOriginPositive,
    /// `ĝ(0) = 1`.
    FourierOriginUnit,
    /// `g ≤ 0` on valid nonzero configurations.
    NonpositiveOnValid,
    /// `g ≤ 1` on valid nonzero configurations (linear-valued program).
    AtMostOneOnValid,
    /// `g(uxᵀ) ≤ 1 - 1/(2^ℓ - 1)` for `u ≠ 0`, `|x| ≥ d`.
    RankOneBound,
    /// `(A^u + dI)^m f ≥ t·f`.
    EigenCondition,
    /// `Φ̂ * f ≥ t·f`.
    PhiCondition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Matrix { rows: Vec<String> },
    Profile { profile: Vec<u32> },
}

impl Witness {
    pub fn matrix(ell: u32, n: u32, index: u64) -> Self {
        Witness::Matrix {
            rows: CubeMatrix::from_index(ell, n, index)
                .rows()
                .iter()
                .map(|r| r.to_string())
                .collect(),
        }
    }

    pub fn profile(alpha: &[u32]) -> Self {
        Witness::Profile {
            profile: alpha.to_vec(),
        }
    }

    /// Flattened index of a matrix witness.
    pub fn matrix_index(&self) -> Option<u64> {
        match self {
            Witness::Matrix { rows } => {
                let rows: Vec<CubePoint> =
                    rows.iter().map(|r| r.parse().ok()).collect::<Option<_>>()?;
                CubeMatrix::new(rows).ok().map(|m| m.index())
            }
            Witness::Profile { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub witness: Witness,
    /// Amount by which the constraint fails (positive).
    pub magnitude: Number,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckedDomain {
    Dense,
    Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instance: Instance,
    pub mode: Mode,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Number>,
    pub violations: Vec<Violation>,
    pub checked_domain: CheckedDomain,
    /// Float mode only: the largest constraint excess that was tolerated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_ratio: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_witness: Option<Witness>,
}

impl VerificationReport {
    fn new(instance: Instance, mode: Mode, checked_domain: CheckedDomain) -> Self {
        VerificationReport {
            instance,
            mode,
            feasible: false,
            value: None,
            violations: Vec::new(),
            checked_domain,
            worst_residual: None,
            worst_ratio: None,
            ratio_witness: None,
        }
    }

    #[cfg(test)]
    fn violated(&self, c: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }

    pub fn worst(&self, c: Constraint) -> Option<&Violation> {
        self.violations.iter().find(|v| v.constraint == c)
    }
}

// ---------------------------------------------------------------------------
// Generic scanning helpers

/// `1e-9 · max|v|` in float mode, zero in exact mode.
fn tolerance<S: Scalar>(values: &[S]) -> S {
    match S::MODE {
        Mode::Exact => S::zero(),
        Mode::Float => {
            let m = values.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
            S::from_rational(&BigRational::from_float(1e-9 * m).unwrap_or_default())
        }
    }
}

/// Largest `excess(i)` over the points where it is defined, ties broken
/// towards the lowest index.
fn worst_excess<S: Scalar>(
    len: usize,
    excess: impl Fn(usize) -> Option<S> + Sync,
) -> Option<(usize, S)> {
    (0..len)
        .into_par_iter()
        .filter_map(|i| excess(i).map(|e| (i, e)))
        .reduce_with(|a, b| {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        })
}

/// Record the outcome of one constraint family.
struct Ledger<S> {
    residual: f64,
    found: Vec<(Constraint, usize, S)>,
}

impl<S: Scalar> Ledger<S> {
    fn new() -> Self {
        Ledger {
            residual: 0.0,
            found: Vec::new(),
        }
    }

    fn family(&mut self, c: Constraint, worst: Option<(usize, S)>, tau: &S) {
        if let Some((i, e)) = worst {
            if e > *tau {
                self.found.push((c, i, e));
            } else if e.is_positive() {
                self.residual = self.residual.max(e.to_f64());
            }
        }
    }

    fn finish(self, report: &mut VerificationReport, witness: impl Fn(usize) -> Witness) {
        report.violations = self
            .found
            .into_iter()
            .map(|(constraint, i, e)| Violation {
                constraint,
                witness: witness(i),
                magnitude: e.to_number(),
                direction: None,
            })
            .collect();
        report.feasible = report.violations.is_empty();
        if S::MODE == Mode::Float {
            report.worst_residual = Some(self.residual);
        }
    }
}

// ---------------------------------------------------------------------------
// Dense verifiers

fn check_table(g: &ValueTable, inst: &Instance) -> Result<()> {
    if g.dim() != inst.dim() {
        return Err(Error::InstanceMismatch(format!(
            "table has {} coordinates, instance needs ℓ·n = {}",
            g.dim(),
            inst.dim()
        )));
    }
    if g.side() != Side::Primal {
        return Err(Error::SideMismatch);
    }
    Ok(())
}

/// Feasibility for the ratio-form dual (general or linear variant):
/// `g ≤ 0` on valid `X ≠ 0`, `ĝ ≥ 0`, `ĝ(0) > 0`; value `g(0)/ĝ(0)`.
pub fn verify_dual(g: &ValueTable, inst: &Instance) -> Result<VerificationReport> {
    if inst.variant == Variant::LinearValued {
        return verify_dual_linear_valued(g, inst);
    }
    check_table(g, inst)?;
    let ghat = g.fourier();
    Ok(match (g.values(), ghat.values()) {
        (Values::Exact(v), Values::Exact(h)) => ratio_dense(v, h, inst),
        (Values::Float(v), Values::Float(h)) => ratio_dense(v, h, inst),
        _ => unreachable!("transform preserves mode"),
    })
}

fn ratio_dense<S: Scalar>(g: &[S], ghat: &[S], inst: &Instance) -> VerificationReport {
    let mut report = VerificationReport::new(*inst, S::MODE, CheckedDomain::Dense);
    let (tau_g, tau_h) = (tolerance(g), tolerance(ghat));
    let mut ledger = Ledger::new();
    ledger.family(
        Constraint::NonpositiveOnValid,
        worst_excess(g.len(), |i| {
            (i != 0 && inst.is_valid_index(i as u64)).then(|| g[i].clone())
        }),
        &tau_g,
    );
    ledger.family(
        Constraint::FourierNonnegative,
        worst_excess(ghat.len(), |i| Some(-ghat[i].clone())),
        &tau_h,
    );
    origin_positive(&mut ledger, &ghat[0], &tau_h);
    ledger.finish(&mut report, |i| Witness::matrix(inst.ell, inst.n, i as u64));
    if report.feasible {
        report.value = Some((g[0].clone() / ghat[0].clone()).to_number());
    }
    report
}

fn origin_positive<S: Scalar>(ledger: &mut Ledger<S>, h0: &S, tau: &S) {
    // strict: ĝ(0) must exceed the tolerance (zero in exact mode)
    if *h0 <= *tau {
        ledger.found.push((
            Constraint::FourierOriginPositive,
            0,
            tau.clone() - h0.clone(),
        ));
    }
}

/// Feasibility for the linear-valued program: `ĝ ≥ 0`, `ĝ(0) = 1`,
/// `g ≤ 1` on valid `X ≠ 0`, and the rank-one bound; value `g(0)`.
pub fn verify_dual_linear_valued(g: &ValueTable, inst: &Instance) -> Result<VerificationReport> {
    check_table(g, inst)?;
    let inst = Instance {
        variant: Variant::LinearValued,
        ..*inst
    };
    let ghat = g.fourier();
    Ok(match (g.values(), ghat.values()) {
        (Values::Exact(v), Values::Exact(h)) => linear_valued_dense(v, h, &inst),
        (Values::Float(v), Values::Float(h)) => linear_valued_dense(v, h, &inst),
        _ => unreachable!("transform preserves mode"),
    })
}

/// `1 - 1/(2^ℓ - 1)`.
fn rank_one_cap<S: Scalar>(ell: u32) -> S {
    let k = (1i64 << ell) - 1;
    S::from_rational(&BigRational::new((k - 1).into(), k.into()))
}

fn linear_valued_dense<S: Scalar>(g: &[S], ghat: &[S], inst: &Instance) -> VerificationReport {
    let (ell, n) = (inst.ell, inst.n);
    let mut report = VerificationReport::new(*inst, S::MODE, CheckedDomain::Dense);
    let (tau_g, tau_h) = (tolerance(g), tolerance(ghat));
    let mut ledger = Ledger::new();

    let cap: S = rank_one_cap(ell);
    let heavy: Vec<u64> = (0..1u64 << n)
        .filter(|x| x.count_ones() >= inst.d)
        .collect();
    let dirs = (1u64 << ell) - 1;
    let rank_one = worst_excess(heavy.len() * dirs as usize, |k| {
        let x = CubePoint::new(heavy[k / dirs as usize], n).expect("n ≤ 64");
        let u = CubePoint::new(k as u64 % dirs + 1, ell).expect("ℓ ≤ 64");
        let idx = CubeMatrix::outer(&u, &x).index() as usize;
        Some(g[idx].clone() - cap.clone())
    })
    .map(|(k, e)| {
        let x = CubePoint::new(heavy[k / dirs as usize], n).expect("n ≤ 64");
        let u = CubePoint::new(k as u64 % dirs + 1, ell).expect("ℓ ≤ 64");
        (CubeMatrix::outer(&u, &x).index() as usize, e)
    });
    ledger.family(Constraint::RankOneBound, rank_one, &tau_g);

    let one = S::one();
    ledger.family(
        Constraint::AtMostOneOnValid,
        worst_excess(g.len(), |i| {
            (i != 0 && inst.is_valid_index(i as u64)).then(|| g[i].clone() - one.clone())
        }),
        &tau_g,
    );
    ledger.family(
        Constraint::FourierNonnegative,
        worst_excess(ghat.len(), |i| Some(-ghat[i].clone())),
        &tau_h,
    );
    let off = (ghat[0].clone() - S::one()).abs();
    if off > tau_h {
        ledger.found.push((Constraint::FourierOriginUnit, 0, off));
    }
    ledger.finish(&mut report, |i| Witness::matrix(ell, n, i as u64));
    if report.feasible {
        report.value = Some(g[0].to_number());
    }
    report
}

// ---------------------------------------------------------------------------
// Profile verifiers

/// Profile-domain version of [`verify_dual`] / [`verify_dual_linear_valued`]
/// for a column-symmetric `g` given by its profile values. Class sizes are
/// irrelevant here: every constraint is pointwise.
pub fn verify_dual_profile<S: Scalar>(
    g: &ProfileFn<S>,
    inst: &Instance,
) -> Result<VerificationReport> {
    let space = g.space();
    if space.ell() != inst.ell || space.n() != inst.n {
        return Err(Error::InstanceMismatch(format!(
            "profile space is ℓ = {}, n = {}; instance is ℓ = {}, n = {}",
            space.ell(),
            space.n(),
            inst.ell,
            inst.n
        )));
    }
    let ghat = fourier_profile(g)?;
    let (gv, hv) = (g.values(), ghat.values());
    let zero = space.rank(&profile::Profile::pure(inst.ell, inst.n, 0).0);
    let mut report = VerificationReport::new(*inst, S::MODE, CheckedDomain::Profile);
    let (tau_g, tau_h) = (tolerance(gv), tolerance(hv));
    let mut ledger = Ledger::new();
    ledger.family(
        Constraint::FourierNonnegative,
        worst_excess(hv.len(), |i| Some(-hv[i].clone())),
        &tau_h,
    );
    let valid_nonzero = |i: usize| i != zero && inst.is_valid_profile(space.counts(i));
    match inst.variant {
        Variant::General | Variant::Linear => {
            ledger.family(
                Constraint::NonpositiveOnValid,
                worst_excess(gv.len(), |i| valid_nonzero(i).then(|| gv[i].clone())),
                &tau_g,
            );
            origin_positive(&mut ledger, &hv[zero], &tau_h);
            // `origin_positive` records index 0; point it at the zero profile
            if let Some(last) = ledger.found.last_mut() {
                if last.0 == Constraint::FourierOriginPositive {
                    last.1 = zero;
                }
            }
        }
        Variant::LinearValued => {
            let cap: S = rank_one_cap(inst.ell);
            // rank-one uxᵀ has profile (n - |x|) ε_0 + |x| ε_u
            let rank_one = worst_excess(gv.len(), |i| {
                let c = space.counts(i);
                let nonzero: Vec<usize> = (1..c.len()).filter(|v| c[*v] > 0).collect();
                (nonzero.len() == 1 && c[nonzero[0]] >= inst.d).then(|| gv[i].clone() - cap.clone())
            });
            ledger.family(Constraint::RankOneBound, rank_one, &tau_g);
            let one = S::one();
            ledger.family(
                Constraint::AtMostOneOnValid,
                worst_excess(gv.len(), |i| {
                    valid_nonzero(i).then(|| gv[i].clone() - one.clone())
                }),
                &tau_g,
            );
            let off = (hv[zero].clone() - S::one()).abs();
            if off > tau_h {
                ledger
                    .found
                    .push((Constraint::FourierOriginUnit, zero, off));
            }
        }
    }
    ledger.finish(&mut report, |i| Witness::profile(space.counts(i)));
    if report.feasible {
        report.value = Some(match inst.variant {
            Variant::LinearValued => gv[zero].to_number(),
            _ => (gv[zero].clone() / hv[zero].clone()).to_number(),
        });
    }
    Ok(report)
}

/// Dense table → profile check, guarded by a sampled symmetry test.
pub fn verify_dual_symmetric(g: &ValueTable, inst: &Instance) -> Result<VerificationReport> {
    check_table(g, inst)?;
    let samples = if cfg!(debug_assertions) { 100 } else { 8 };
    match g.mode() {
        Mode::Exact => {
            verify_dual_profile(&profile::from_dense(g, inst.ell, inst.n, samples)?, inst)
        }
        Mode::Float => verify_dual_profile(
            &profile::from_dense(g, inst.ell, inst.n, samples)?.to_float(),
            inst,
        ),
    }
}

/// Check `op(f) ≥ threshold · f` pointwise on profiles, where `op(f)` has
/// already been computed. Reports the worst ratio `op(f)/f` over the support.
fn ratio_check<S: Scalar>(
    report: &mut VerificationReport,
    f: &ProfileFn<S>,
    image: &ProfileFn<S>,
    threshold: &S,
    constraint: Constraint,
    direction: Option<String>,
) {
    let space = f.space();
    let (fv, hv) = (f.values(), image.values());
    let tau = tolerance(hv);
    let worst = worst_excess(fv.len(), |i| {
        Some(threshold.clone() * fv[i].clone() - hv[i].clone())
    });
    if let Some((i, e)) = worst {
        if e > tau {
            report.violations.push(Violation {
                constraint,
                witness: Witness::profile(space.counts(i)),
                magnitude: e.to_number(),
                direction: direction.clone(),
            });
        } else if S::MODE == Mode::Float && e.is_positive() {
            let r = report.worst_residual.unwrap_or(0.0).max(e.to_f64());
            report.worst_residual = Some(r);
        }
    }
    // ratio: minimise h/f over the support of f (no parallel reduce needed for
    // profile-sized vectors)
    let mut best: Option<(usize, S)> = None;
    for i in 0..fv.len() {
        if fv[i].is_zero() {
            continue;
        }
        let r = hv[i].clone() / fv[i].clone();
        if best.as_ref().map_or(true, |(_, b)| r < *b) {
            best = Some((i, r));
        }
    }
    if let Some((i, r)) = best {
        let r = r.to_number();
        if report
            .worst_ratio
            .as_ref()
            .map_or(true, |prev| number_lt(&r, prev))
        {
            report.worst_ratio = Some(r);
            report.ratio_witness = Some(Witness::profile(space.counts(i)));
        }
    }
}

fn number_lt(a: &Number, b: &Number) -> bool {
    match (a, b) {
        (Number::Exact(x), Number::Exact(y)) => x < y,
        _ => a.to_f64() < b.to_f64(),
    }
}

fn check_nonnegative<S: Scalar>(report: &mut VerificationReport, f: &ProfileFn<S>) {
    let fv = f.values();
    if let Some((i, e)) = worst_excess(fv.len(), |i| Some(-fv[i].clone())) {
        if e > tolerance(fv) {
            report.violations.push(Violation {
                constraint: Constraint::FourierNonnegative,
                witness: Witness::profile(f.space().counts(i)),
                magnitude: e.to_number(),
                direction: None,
            });
        }
    }
}

fn direction_label(u: u32, ell: u32) -> String {
    CubePoint::new(u as u64, ell)
        .map(|p| p.to_string())
        .unwrap_or_default()
}

/// Check `(A^u + shift·I)^power λ̂ ≥ threshold · λ̂` for each direction.
/// On success the report's value is the worst ratio found.
pub fn verify_eigen_condition<S: Scalar>(
    lambda_hat: &ProfileFn<S>,
    inst: &Instance,
    directions: &[u32],
    shift: &S,
    power: u32,
    threshold: &S,
) -> Result<VerificationReport> {
    let space = lambda_hat.space();
    if space.ell() != inst.ell || space.n() != inst.n {
        return Err(Error::InstanceMismatch(
            "profile space does not match the instance".into(),
        ));
    }
    let mut report = VerificationReport::new(*inst, S::MODE, CheckedDomain::Profile);
    check_nonnegative(&mut report, lambda_hat);
    for &u in directions {
        let image = apply_shifted_power(lambda_hat, u, shift, power)?;
        ratio_check(
            &mut report,
            lambda_hat,
            &image,
            threshold,
            Constraint::EigenCondition,
            Some(direction_label(u, inst.ell)),
        );
    }
    report.feasible = report.violations.is_empty();
    if report.feasible {
        report.value = report.worst_ratio.clone();
    }
    Ok(report)
}

/// Direction sets of the factors of `Φ` (general: `{e_i : i ∈ U}` for
/// nonempty `U`) or `Φ^Lin` (linear: `{u : ⟨u, v⟩ = 1}` for `v ≠ 0`). Each
/// factor is `Σ_{u ∈ S} [(n + d - 2|uᵀX|)^m - (n-d)^m]`.
pub fn phi_factor_directions(ell: u32, variant: Variant) -> Vec<Vec<u32>> {
    (1u32..1 << ell)
        .map(|s| match variant {
            Variant::General => (0..ell)
                .filter(|i| (s >> i) & 1 == 1)
                .map(|i| 1 << i)
                .collect(),
            _ => (1u32..1 << ell)
                .filter(|u| (u & s).count_ones() % 2 == 1)
                .collect(),
        })
        .collect()
}

/// `Φ̂ * f` computed as a composition of profile-domain operators: the
/// fourier-side convolution with `F[(n + d - 2|uᵀX|)^m]` is `(A^u + dI)^m`.
pub fn apply_phi_operator<S: Scalar>(
    f: &ProfileFn<S>,
    inst: &Instance,
    m: u32,
) -> Result<ProfileFn<S>> {
    let (n, d) = (inst.n as i64, inst.d as i64);
    let shift = S::from_i64(d);
    let base = num_traits::pow(S::from_i64(n - d), m as usize);
    let mut cur = f.clone();
    for dirs in phi_factor_directions(inst.ell, inst.variant) {
        let mut acc: Option<ProfileFn<S>> = None;
        for u in dirs {
            let term = apply_shifted_power(&cur, u, &shift, m)?;
            let term = term.zip_with(&cur, |a, b| a.clone() - base.clone() * b.clone())?;
            acc = Some(match acc {
                None => term,
                Some(a) => a.zip_with(&term, |x, y| x.clone() + y.clone())?,
            });
        }
        cur = acc.expect("every factor has at least one direction");
    }
    Ok(cur)
}

/// Check `Φ̂ * f ≥ threshold · f` pointwise (the Problem-1 style constraint,
/// also used for the hierarchy slack).
pub fn verify_phi_condition<S: Scalar>(
    f: &ProfileFn<S>,
    inst: &Instance,
    m: u32,
    threshold: &S,
) -> Result<VerificationReport> {
    let space = f.space();
    if space.ell() != inst.ell || space.n() != inst.n {
        return Err(Error::InstanceMismatch(
            "profile space does not match the instance".into(),
        ));
    }
    let mut report = VerificationReport::new(*inst, S::MODE, CheckedDomain::Profile);
    check_nonnegative(&mut report, f);
    let image = apply_phi_operator(f, inst, m)?;
    ratio_check(
        &mut report,
        f,
        &image,
        threshold,
        Constraint::PhiCondition,
        None,
    );
    report.feasible = report.violations.is_empty();
    if report.feasible {
        report.value = report.worst_ratio.clone();
    }
    Ok(report)
}

/// Re-check a report's internal consistency: feasible iff no violations.
pub fn report_is_consistent(r: &VerificationReport) -> bool {
    r.feasible == r.violations.is_empty() && (r.value.is_some() <= r.feasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Profile, ProfileSpace};
    use crate::scalar::{int, rat};

    fn m(rows: &[&str]) -> CubeMatrix {
        CubeMatrix::new(rows.iter().map(|r| r.parse().unwrap()).collect()).unwrap()
    }

    #[test]
    fn general_classifier() {
        assert_eq!(
            classify_general(&CubeMatrix::zero(2, 4), 2),
            Classification::Valid
        );
        assert_eq!(
            classify_general(&m(&["1000", "0000"]), 2),
            Classification::Forbidden
        );
        assert_eq!(
            classify_general(&m(&["1100", "0011"]), 2),
            Classification::Valid
        );
    }

    #[test]
    fn linear_classifier() {
        assert_eq!(
            classify_linear(&m(&["1110", "0000"]), 3),
            Classification::Valid
        );
        assert_eq!(
            classify_linear(&m(&["1100", "0110"]), 3),
            Classification::Forbidden
        );
        let x = m(&["11100", "01110"]);
        assert_eq!(classify_general(&x, 3), Classification::Valid);
        assert_eq!(classify_linear(&x, 3), Classification::Forbidden);
    }

    #[test]
    fn index_and_profile_validity_agree_with_classifiers() {
        for variant in [Variant::General, Variant::Linear] {
            let inst = Instance::new(4, 2, 2, variant).unwrap();
            for idx in 0..256u64 {
                let x = CubeMatrix::from_index(2, 4, idx);
                let c = match variant {
                    Variant::General => classify_general(&x, 2),
                    _ => classify_linear(&x, 2),
                };
                assert_eq!(inst.is_valid_index(idx), c == Classification::Valid);
                assert_eq!(
                    inst.is_valid_profile(profile::profile(&x).counts()),
                    c == Classification::Valid
                );
            }
        }
    }

    #[test]
    fn au_on_delta() {
        let f = ValueTable::delta(8, Mode::Exact, Side::Fourier).unwrap();
        let u: CubePoint = "11".parse().unwrap();
        let af = dense_au_matrix_action(&f, &u).unwrap();
        let ones: Vec<u64> = (0..4)
            .map(|j| CubeMatrix::outer(&u, &CubePoint::unit(4, j)).index())
            .collect();
        for idx in 0..256u64 {
            let expect = if ones.contains(&idx) { 1 } else { 0 };
            assert_eq!(af.get(idx), Number::Exact(int(expect)));
        }
        assert!(matches!(
            dense_au_matrix_action(&f, &CubePoint::zero(2)),
            Err(Error::ZeroDirection)
        ));
    }

    #[test]
    fn au_is_convolution_with_linear_krawtchouk() {
        let (ell, n) = (2u32, 3u32);
        let f = ValueTable::from_fn_exact(ell * n, Side::Fourier, |i| {
            int(((i * 7 + 3) % 11) as i64 - 4)
        })
        .unwrap();
        for u in 1..4u32 {
            let k = ValueTable::from_fn_exact(ell * n, Side::Primal, |i| {
                int(n as i64 - 2 * combination_weight_index(i, n, ell, u) as i64)
            })
            .unwrap();
            let via_conv = k.fourier().convolve(&f).unwrap();
            let direct =
                dense_au_matrix_action(&f, &CubePoint::new(u as u64, ell).unwrap()).unwrap();
            assert_eq!(via_conv, direct);
            assert_eq!(
                direct.sum().as_exact().cloned().unwrap(),
                int(n as i64) * f.sum().as_exact().cloned().unwrap()
            );
        }
    }

    #[test]
    fn ell_one_is_cube_adjacency() {
        let f = ValueTable::from_fn_float(4, Side::Fourier, |i| i as f64).unwrap();
        let af = dense_au_matrix_action(&f, &"1".parse().unwrap()).unwrap();
        for x in 0..16u64 {
            let expect: f64 = (0..4).map(|j| (x ^ (1 << j)) as f64).sum();
            assert_eq!(af.get_f64(x), expect);
        }
    }

    #[test]
    fn delta_is_feasible_ones_is_not() {
        let inst = Instance::new(3, 2, 2, Variant::General).unwrap();
        let r = verify_dual(
            &ValueTable::delta(6, Mode::Exact, Side::Primal).unwrap(),
            &inst,
        )
        .unwrap();
        assert!(r.feasible);
        assert_eq!(r.value, Some(Number::Exact(int(64))));
        assert!(report_is_consistent(&r));

        let r = verify_dual(
            &ValueTable::ones(6, Mode::Exact, Side::Primal).unwrap(),
            &inst,
        )
        .unwrap();
        assert!(!r.feasible);
        assert!(r.value.is_none());
        let v = r.worst(Constraint::NonpositiveOnValid).unwrap();
        assert_eq!(v.magnitude, Number::Exact(int(1)));
        let idx = v.witness.matrix_index().unwrap();
        assert!(idx != 0 && inst.is_valid_index(idx));
    }

    #[test]
    fn float_mode_tolerates_tiny_noise() {
        let inst = Instance::new(3, 2, 1, Variant::General).unwrap();
        let mut g = ValueTable::delta(3, Mode::Float, Side::Primal).unwrap();
        g.float_mut().unwrap()[7] = 1e-12;
        let r = verify_dual(&g, &inst).unwrap();
        assert!(r.feasible);
        assert!(r.worst_residual.unwrap() > 0.0);
        g.float_mut().unwrap()[7] = 1e-3;
        assert!(!verify_dual(&g, &inst).unwrap().feasible);
    }

    #[test]
    fn linear_valued_rejections() {
        let inst = Instance::new(3, 2, 2, Variant::LinearValued).unwrap();
        let ones = ValueTable::ones(6, Mode::Exact, Side::Primal).unwrap();
        let r = verify_dual_linear_valued(&ones, &inst).unwrap();
        assert!(!r.feasible);
        assert!(r.violated(Constraint::RankOneBound));

        let bumped = ones
            .add(&ValueTable::delta(6, Mode::Exact, Side::Primal).unwrap())
            .unwrap();
        let r = verify_dual_linear_valued(&bumped, &inst).unwrap();
        let v = r.worst(Constraint::FourierOriginUnit).unwrap();
        assert_eq!(v.magnitude, Number::Exact(rat(1, 64)));
    }

    #[test]
    fn profile_and_dense_verdicts_agree() {
        let inst = Instance::new(3, 2, 2, Variant::General).unwrap();
        let space = ProfileSpace::new(2, 3).unwrap();
        // a symmetric function that is nonpositive off the origin but has
        // negative Fourier mass somewhere
        let f = ProfileFn::from_fn(space, |c| {
            if c[0] == 3 {
                int(4)
            } else {
                int(-(c[3] as i64))
            }
        });
        let dense = verify_dual(&f.lift_to_dense(Side::Primal).unwrap(), &inst).unwrap();
        let prof = verify_dual_profile(&f, &inst).unwrap();
        assert_eq!(dense.feasible, prof.feasible);
        assert_eq!(dense.value, prof.value);
        let sym = verify_dual_symmetric(&f.lift_to_dense(Side::Primal).unwrap(), &inst).unwrap();
        assert_eq!(sym.feasible, prof.feasible);
    }

    #[test]
    fn eigen_condition_fails_on_origin_delta() {
        let inst = Instance::new(4, 2, 1, Variant::General).unwrap();
        let space = ProfileSpace::new(1, 4).unwrap();
        let f = ProfileFn::indicator(space, &Profile::pure(1, 4, 0).0);
        let r = verify_eigen_condition(&f, &inst, &[1], &int(0), 1, &int(1)).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.violations[0].constraint, Constraint::EigenCondition);
        assert_eq!(r.violations[0].witness, Witness::profile(&[4, 0]));
        assert_eq!(r.worst_ratio, Some(Number::Exact(int(0))));
    }

    #[test]
    fn phi_directions() {
        assert_eq!(
            phi_factor_directions(2, Variant::General),
            vec![vec![1], vec![2], vec![1, 2]]
        );
        assert_eq!(
            phi_factor_directions(2, Variant::Linear),
            vec![vec![1, 3], vec![2, 3], vec![1, 2]]
        );
        for s in phi_factor_directions(3, Variant::Linear) {
            assert_eq!(s.len(), 4);
        }
    }

    #[test]
    fn report_json_shape() {
        let inst = Instance::new(3, 2, 1, Variant::General).unwrap();
        let r = verify_dual(
            &ValueTable::delta(3, Mode::Exact, Side::Primal).unwrap(),
            &inst,
        )
        .unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.starts_with(r#"{"instance":{"n":3,"d":2,"ell":1,"variant":"general"},"mode":"exact","feasible":true,"value":{"num":"8","den":"1"}"#));
        let back: VerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
