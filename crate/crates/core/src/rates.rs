//! Rate curves and level-ℓ overhead bookkeeping.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Binary entropy in bits; `H(0) = H(1) = 0`.
pub fn entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Gilbert–Varshamov rate `1 - H(δ)`.
pub fn gv_rate(delta: f64) -> f64 {
    1.0 - entropy(delta)
}

/// First LP bound `H(1/2 - √(δ(1-δ)))`.
pub fn mrrw_rate(delta: f64) -> f64 {
    entropy(0.5 - (delta * (1.0 - delta)).sqrt())
}

/// Asymptotic first root of `K_k` divided by `n`: `1/2 - √(κ(1-κ))`, `κ = k/n`.
pub fn first_root_fraction(kappa: f64) -> f64 {
    0.5 - (kappa * (1.0 - kappa)).sqrt()
}

/// Per-symbol overhead of the level-ℓ bound over the first LP bound, in bits:
/// `2^ℓ · log₂ℓ · log₂n / (ℓ·n)`.
pub fn overhead_exponent(ell: u32, n: u64) -> f64 {
    let l = ell as f64;
    let nf = n as f64;
    2f64.powi(ell as i32) * l.log2() * nf.log2() / (l * nf)
}

/// `log₂ n - log₂ log₂ n`: the largest level at which the overhead vanishes.
pub fn level_threshold(n: u64) -> f64 {
    let lg = (n as f64).log2();
    lg - lg.log2()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverheadRow {
    pub ell: u32,
    pub n: u64,
    pub overhead: f64,
    pub threshold: f64,
}

impl OverheadRow {
    pub fn exceeds_one_bit(&self) -> bool {
        self.overhead > 1.0
    }

    pub fn above_threshold(&self) -> bool {
        self.ell as f64 > self.threshold
    }
}

pub fn overhead_table(ells: impl IntoIterator<Item = u32> + Clone, ns: &[u64]) -> Vec<OverheadRow> {
    ns.iter()
        .flat_map(|&n| {
            ells.clone().into_iter().map(move |ell| OverheadRow {
                ell,
                n,
                overhead: overhead_exponent(ell, n),
                threshold: level_threshold(n),
            })
        })
        .collect()
}

/// Parse `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, s] = parts.as_slice() else {
        return invalid(format!("grid must be start:stop:step, got {spec:?}"));
    };
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| crate::Error::InvalidParameter(format!("bad number {t:?} in grid")));
    let (a, b, s) = (parse(a)?, parse(b)?, parse(s)?);
    if !(s > 0.0) || b < a {
        return invalid(format!("grid needs step > 0 and stop ≥ start, got {spec:?}"));
    }
    let count = ((b - a) / s + 1e-9).floor() as usize;
    // snap to the decimal grid so 0.05 + 2·0.05 prints as 0.15
    let scale = 1e12;
    Ok((0..=count).map(|k| ((a + k as f64 * s) * scale).round() / scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(0.0), 0.0);
        assert!((entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((entropy(0.11) - entropy(0.89)).abs() < 1e-15);
    }

    #[test]
    fn curve_endpoints() {
        assert!((mrrw_rate(0.0) - 1.0).abs() < 1e-12);
        assert!(mrrw_rate(0.5).abs() < 1e-12);
        // the first LP bound lies above GV on (0, 1/2)
        for k in 1..50 {
            let d = k as f64 / 100.0;
            assert!(mrrw_rate(d) >= gv_rate(d));
        }
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0.05:0.45:0.05").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[2], 0.15);
        assert_eq!(*g.last().unwrap(), 0.45);
        assert!(parse_grid("0.1:0.05:0.01").is_err());
        assert!(parse_grid("0.1:0.2").is_err());
    }

    #[test]
    fn overhead_at_level_one_is_zero() {
        assert_eq!(overhead_exponent(1, 1024), 0.0);
        assert!((level_threshold(256) - 5.0).abs() < 1e-12);
    }
}
