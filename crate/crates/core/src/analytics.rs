//! Closed-form and Monte-Carlo estimates for a coalition that privately
//! extends the chain: consecutive leadership, grinding depth, the chance of
//! outgrowing the interconnectivity bound, and the resulting payoff ratio.
//!
//! A coalition of `n_c` players, each winning with probability `p` per
//! beacon value, grinds a Galton–Watson tree: every private block gives a
//! fresh beacon and therefore `Binomial(n_c, p)` new winners.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("coalition wins every draw; expectation diverges")]
    Degenerate,
    #[error("payoff ratio denominator is not positive ({0})")]
    NonPositiveDenominator(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoalitionParams {
    pub n: u64,
    pub n_c: u64,
    pub p: f64,
}

impl CoalitionParams {
    /// `p = 1/n`.
    pub fn new(n: u64, n_c: u64) -> Result<Self, AnalyticsError> {
        if n == 0 {
            return Err(AnalyticsError::InvalidParams("n must be positive"));
        }
        Self::with_p(n, n_c, 1.0 / n as f64)
    }

    pub fn with_p(n: u64, n_c: u64, p: f64) -> Result<Self, AnalyticsError> {
        if n_c == 0 || n_c > n {
            return Err(AnalyticsError::InvalidParams("need 0 < n_c <= n"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(AnalyticsError::InvalidParams("need p in (0, 1]"));
        }
        Ok(CoalitionParams { n, n_c, p })
    }

    /// Probability that at least one coalition member wins a draw.
    pub fn q(&self) -> f64 {
        1.0 - (1.0 - self.p).powf(self.n_c as f64)
    }
}

/// `P(X = k)` for `X ~ Binomial(n, p)`.
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln = ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln();
    ln.exp()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Expected run of consecutive coalition blocks without grinding:
/// `Σ_j j·q^j·(1−q) = q/(1−q)`, summed until the relative change is below
/// `1e-12`.
pub fn expected_consecutive(params: &CoalitionParams) -> Result<f64, AnalyticsError> {
    let q = params.q();
    if q >= 1.0 {
        return Err(AnalyticsError::Degenerate);
    }
    let mut sum = 0.0;
    let mut qj = q;
    let mut j = 1.0;
    loop {
        let term = j * qj * (1.0 - q);
        sum += term;
        if term <= 1e-12 * sum && j > 1.0 {
            break;
        }
        qj *= q;
        j += 1.0;
    }
    Ok(sum)
}

/// Exact-summation cap per generation.
const MAX_GENERATION: u64 = 64;
const TAIL_TRIALS: u64 = 1_000_000;
const TAIL_SEED: u64 = 0x6772_696e_6469_6e67;

/// Probabilities `P(depth ≥ ℓ)` for `ℓ = 1..=3`, summed exactly over the
/// nested generation sizes `x_1 ≤ n_c, x_i ≤ x_{i−1}·n_c` (each capped at 64).
pub fn depth_survival_exact(params: &CoalitionParams) -> [f64; 3] {
    let (n_c, p) = (params.n_c, params.p);
    let none = |x: u64| (1.0 - p).powf((x * n_c) as f64);
    let mut s = [params.q(), 0.0, 0.0];
    for x1 in 1..=n_c.min(MAX_GENERATION) {
        let w1 = binomial_pmf(n_c, p, x1);
        s[1] += w1 * (1.0 - none(x1));
        for x2 in 1..=(x1 * n_c).min(MAX_GENERATION) {
            let w2 = w1 * binomial_pmf(x1 * n_c, p, x2);
            s[2] += w2 * (1.0 - none(x2));
        }
    }
    s
}

/// Depth and size of one simulated grinding tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeSample {
    pub depth: u32,
    pub blocks: u64,
}

/// Simulates grinding trees generation by generation, stopping at `max_len`.
pub fn sample_trees(
    params: &CoalitionParams,
    max_len: u32,
    trials: u64,
    seed: u64,
) -> Vec<TreeSample> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let mut gen = 1u64;
            let mut depth = 0;
            let mut blocks = 0;
            while depth < max_len {
                let d = Binomial::new(gen * params.n_c, params.p).expect("valid binomial");
                gen = d.sample(&mut rng);
                if gen == 0 {
                    break;
                }
                depth += 1;
                blocks += gen;
            }
            TreeSample { depth, blocks }
        })
        .collect()
}

/// Expected number of consecutive blocks a grinding coalition creates:
/// `Σ_{ℓ=1..max_len} P(depth ≥ ℓ)`, exact for `ℓ ≤ 3` and simulated beyond.
pub fn grinding_expectation(params: &CoalitionParams, max_len: u32) -> Result<f64, AnalyticsError> {
    if max_len == 0 {
        return Err(AnalyticsError::InvalidParams("max_len must be at least 1"));
    }
    if params.q() >= 1.0 {
        return Err(AnalyticsError::Degenerate);
    }
    let exact = depth_survival_exact(params);
    let head: f64 = exact.iter().take(max_len as usize).sum();
    if max_len <= 3 {
        return Ok(head);
    }
    let samples = sample_trees(params, max_len, TAIL_TRIALS, TAIL_SEED);
    let tail: u64 = samples
        .iter()
        .map(|s| s.depth.saturating_sub(3) as u64)
        .sum();
    Ok(head + tail as f64 / TAIL_TRIALS as f64)
}

/// `P(T = t)` for the number `t` of private blocks in one grinding tree,
/// from the hitting-time identity `P(T = t) = P(S_{t+1} = t) / (t + 1)`.
pub fn tree_size_pmf(params: &CoalitionParams, t: u64) -> f64 {
    binomial_pmf((t + 1) * params.n_c, params.p, t) / (t + 1) as f64
}

/// Probability that a coalition privately assembles more than `k` blocks.
///
/// For `k = 3` this is one minus the explicit enumeration of every tree
/// shape with at most three blocks; otherwise the hitting-time sum.
pub fn harm_subdag_probability(params: &CoalitionParams, k: u32) -> Result<f64, AnalyticsError> {
    if k == 0 {
        return Err(AnalyticsError::InvalidParams("k must be at least 1"));
    }
    if k != 3 {
        let at_most: f64 = (0..=k as u64).map(|t| tree_size_pmf(params, t)).sum();
        return Ok((1.0 - at_most).max(0.0));
    }
    let (n, p) = (params.n_c as f64, params.p);
    let r = 1.0 - p;
    let one = n * p * r.powf(n - 1.0);
    let pairs = n * (n - 1.0) / 2.0;
    let triples = pairs * (n - 2.0) / 3.0;
    let shapes = [
        r.powf(n),
        n * p * r.powf(2.0 * n - 1.0),
        pairs * p * p * r.powf(3.0 * n - 2.0),
        one * one * r.powf(n),
        triples * p.powi(3) * r.powf(4.0 * n - 3.0),
        pairs * n * p.powi(3) * r.powf(4.0 * n - 3.0),
        pairs * 2.0 * n * p.powi(3) * r.powf(4.0 * n - 3.0),
        one.powi(3) * r.powf(n),
    ];
    Ok((1.0 - shapes.iter().sum::<f64>()).max(0.0))
}

/// Honest payoff per hundred blocks without and with the coalition's harm:
/// `67c / (67c − 100·h·pun)`.
pub fn immunity_ratio(
    params: &CoalitionParams,
    pun: f64,
    c: f64,
    k: u32,
) -> Result<f64, AnalyticsError> {
    let h = harm_subdag_probability(params, k)?;
    let base = 67.0 * c;
    let denom = base - 100.0 * h * pun;
    if denom <= 0.0 {
        return Err(AnalyticsError::NonPositiveDenominator(denom));
    }
    Ok(base / denom)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticsRow {
    pub n: u64,
    pub n_c: u64,
    pub expected_consecutive: f64,
    pub grinding_expectation: f64,
    pub harm_probability: f64,
    pub immunity_ratio: f64,
}

pub fn analytics_row(
    n: u64,
    n_c: u64,
    k: u32,
    pun: f64,
    c: f64,
) -> Result<AnalyticsRow, AnalyticsError> {
    let params = CoalitionParams::new(n, n_c)?;
    Ok(AnalyticsRow {
        n,
        n_c,
        expected_consecutive: expected_consecutive(&params)?,
        grinding_expectation: grinding_expectation(&params, 16)?,
        harm_probability: harm_subdag_probability(&params, k)?,
        immunity_ratio: immunity_ratio(&params, pun, c, k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn third() -> CoalitionParams {
        CoalitionParams::new(150, 50).unwrap()
    }

    /// Depth expectation by iterating the offspring generating function.
    fn pgf_depth(params: &CoalitionParams, max_len: u32) -> f64 {
        let f = |s: f64| (1.0 - params.p + params.p * s).powf(params.n_c as f64);
        let mut extinct = 0.0;
        let mut sum = 0.0;
        for _ in 0..max_len {
            extinct = f(extinct);
            sum += 1.0 - extinct;
        }
        sum
    }

    #[test]
    fn consecutive_matches_closed_form() {
        for n_c in [1, 10, 37, 50, 75, 149] {
            let p = CoalitionParams::new(150, n_c).unwrap();
            let q = p.q();
            assert!((expected_consecutive(&p).unwrap() - q / (1.0 - q)).abs() < 1e-9);
        }
    }

    #[test]
    fn consecutive_is_monotone_in_coalition() {
        let v: Vec<f64> = (1..=150)
            .map(|c| expected_consecutive(&CoalitionParams::new(150, c).unwrap()).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn certain_win_is_degenerate() {
        let p = CoalitionParams::with_p(1, 1, 1.0).unwrap();
        assert_eq!(expected_consecutive(&p), Err(AnalyticsError::Degenerate));
    }

    #[test]
    fn exact_survival_matches_generating_function() {
        let p = third();
        let exact = depth_survival_exact(&p);
        let f = |s: f64| (1.0 - p.p + p.p * s).powf(p.n_c as f64);
        let mut e = 0.0;
        for s in exact {
            e = f(e);
            assert!((s - (1.0 - e)).abs() < 1e-12, "{s} vs {}", 1.0 - e);
        }
    }

    #[test]
    fn grinding_matches_generating_function() {
        for n_c in [1, 20, 38, 50] {
            let p = CoalitionParams::new(150, n_c).unwrap();
            let g = grinding_expectation(&p, 16).unwrap();
            assert!((g - pgf_depth(&p, 16)).abs() < 1e-3, "n_c={n_c}: {g}");
        }
    }

    #[test]
    fn grinding_never_hurts() {
        for n_c in 1..=50 {
            let p = CoalitionParams::new(150, n_c).unwrap();
            let g = grinding_expectation(&p, 3).unwrap();
            let e = expected_consecutive(&p).unwrap();
            if n_c == 1 {
                assert!(g <= e + 1e-12);
            } else {
                assert!(g > e, "n_c={n_c}");
            }
        }
    }

    #[test]
    fn shape_enumeration_matches_hitting_time() {
        for n_c in [1, 5, 38, 50, 100] {
            let p = CoalitionParams::new(150, n_c).unwrap();
            let at_most: f64 = (0..=3).map(|t| tree_size_pmf(&p, t)).sum();
            let h = harm_subdag_probability(&p, 3).unwrap();
            assert!((h - (1.0 - at_most)).abs() < 1e-12, "n_c={n_c}");
        }
    }

    #[test]
    fn tree_sizes_match_simulation() {
        let p = third();
        let trials = 200_000u64;
        let samples = sample_trees(&p, 64, trials, 11);
        for t in 0..4u64 {
            let hits = samples.iter().filter(|s| s.blocks == t).count() as f64;
            let pt = tree_size_pmf(&p, t);
            let sigma = (pt * (1.0 - pt) / trials as f64).sqrt();
            assert!((hits / trials as f64 - pt).abs() < 4.0 * sigma, "t={t}");
        }
    }

    #[test]
    fn zero_harm_gives_unit_ratio() {
        let p = CoalitionParams::with_p(150, 1, 1e-9).unwrap();
        assert!((immunity_ratio(&p, 6.0, 1.0, 3).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn huge_punishment_is_guarded() {
        let p = third();
        assert!(matches!(
            immunity_ratio(&p, 1e6, 1.0, 3),
            Err(AnalyticsError::NonPositiveDenominator(_))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(CoalitionParams::new(10, 0).is_err());
        assert!(CoalitionParams::new(10, 11).is_err());
        assert!(CoalitionParams::with_p(10, 1, 0.0).is_err());
    }
}
