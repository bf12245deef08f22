//! Experimental search for a Problem-1 style `Γ̂` (linear variant):
//! `Γ̂(0) = 1`, `Γ̂ ≥ 0`, `Φ̂^Lin * Γ̂ ≥ 2^{(ℓ-1)(2^ℓ-1)} Γ̂`, small support.
//!
//! Heuristic and float-only. Nothing here is a certificate: a passing step
//! says the constraint held to float tolerance for the vector the iteration
//! produced. The support grows shell by shell (`n - α_0` nonzero columns)
//! and `Γ̂` on each support is the dominant vector of `Σ_u (A^u + dI)^m`
//! restricted to it.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::constructions::choose_m;
use crate::error::{invalid, Result};
use crate::lp::{verify_phi_condition, Instance, Variant};
use crate::profile::{apply_shifted_power, ProfileFn, ProfileSpace};

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub m: Option<u32>,
    pub iterations: usize,
    pub max_radius: Option<u32>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            m: None,
            iterations: 200,
            max_radius: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchStep {
    pub radius: u32,
    pub support_profiles: usize,
    /// Matrices in the support, as a float (it can exceed `u64`).
    pub support_size: f64,
    pub worst_ratio: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub instance: Instance,
    pub m: u32,
    pub threshold: f64,
    /// Always `false`: results of this search are not certified.
    pub certified: bool,
    pub steps: Vec<SearchStep>,
    #[serde(skip)]
    pub gamma_hat: Option<ProfileFn<f64>>,
}

/// `2^{(ℓ-1)(2^ℓ-1)}`.
pub fn problem1_threshold(ell: u32) -> f64 {
    2f64.powi(((ell - 1) * ((1 << ell) - 1)) as i32)
}

fn dominant_on(
    space: &std::sync::Arc<ProfileSpace>,
    inside: &[bool],
    inst: &Instance,
    m: u32,
    iterations: usize,
) -> Result<ProfileFn<f64>> {
    let project = |f: ProfileFn<f64>| {
        let vals = f
            .values()
            .iter()
            .zip(inside)
            .map(|(v, keep)| if *keep { *v } else { 0.0 })
            .collect();
        ProfileFn::new(space.clone(), vals)
    };
    let mut cur = project(ProfileFn::from_fn(space.clone(), |_| 1.0))?;
    let shift = inst.d as f64;
    for _ in 0..iterations {
        let mut acc = vec![0.0; space.len()];
        for u in 1u32..1 << inst.ell {
            let t = apply_shifted_power(&cur, u, &shift, m)?;
            acc.iter_mut().zip(t.values()).for_each(|(a, b)| *a += b);
        }
        let next = project(ProfileFn::new(space.clone(), acc)?)?;
        let norm = next.values().iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if norm == 0.0 {
            break;
        }
        cur = next.map(|v| v / norm);
    }
    Ok(cur)
}

/// Grow the support one shell at a time until the constraint holds or the
/// radius limit is reached.
pub fn greedy_problem1(n: u32, d: u32, ell: u32, opts: &SearchOptions) -> Result<SearchOutcome> {
    let inst = Instance::new(n, d, ell, Variant::Linear)?;
    if d >= n {
        return invalid("the search needs d < n");
    }
    let m = match opts.m {
        Some(m) => m,
        None => choose_m(ell, &inst.delta(), Variant::Linear)?,
    };
    let space = ProfileSpace::new(ell, n)?;
    let threshold = problem1_threshold(ell);
    let mut outcome = SearchOutcome {
        instance: inst,
        m,
        threshold,
        certified: false,
        steps: Vec::new(),
        gamma_hat: None,
    };
    for radius in 0..=opts.max_radius.unwrap_or(n).min(n) {
        let inside: Vec<bool> = space.iter().map(|a| n - a[0] <= radius).collect();
        let g = dominant_on(&space, &inside, &inst, m, opts.iterations)?;
        let at0 = *g.at_zero();
        let (passed, worst) = if at0 > 0.0 {
            let g = g.map(|v| v / at0);
            let report = verify_phi_condition(&g, &inst, m, &threshold)?;
            let worst = report.worst_ratio.as_ref().map(|r| r.to_f64());
            if report.feasible {
                outcome.gamma_hat = Some(g);
            }
            (report.feasible, worst)
        } else {
            (false, None)
        };
        let profiles: Vec<usize> = (0..space.len()).filter(|i| inside[*i]).collect();
        outcome.steps.push(SearchStep {
            radius,
            support_profiles: profiles.len(),
            support_size: profiles
                .iter()
                .map(|i| space.class_size(space.counts(*i)).to_f64().unwrap_or(f64::INFINITY))
                .sum(),
            worst_ratio: worst,
            passed,
        });
        if passed {
            break;
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_values() {
        assert_eq!(problem1_threshold(1), 1.0);
        assert_eq!(problem1_threshold(2), 8.0);
        assert_eq!(problem1_threshold(3), 2f64.powi(14));
    }

    #[test]
    fn level_one_search_runs_and_is_flagged() {
        let out = greedy_problem1(8, 3, 1, &SearchOptions::default()).unwrap();
        assert!(!out.certified);
        assert!(!out.steps.is_empty());
        // radius 0 is only the zero profile, where every A^u moves mass away
        assert!(!out.steps[0].passed);
        if let Some(g) = &out.gamma_hat {
            assert_eq!(*g.at_zero(), 1.0);
            assert!(g.values().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn two_rows_small() {
        let out = greedy_problem1(6, 2, 2, &SearchOptions { max_radius: Some(3), ..Default::default() }).unwrap();
        assert!(out.steps.len() <= 4);
        assert_eq!(out.steps[0].support_profiles, 1);
        assert_eq!(out.steps[0].support_size, 1.0);
    }
}
