//! Classical likelihood theory for a biased coin: exact binomial
//! log-likelihood, its large-N Stirling form, binary relative entropy,
//! and simulated likelihood-decay series.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LikelihoodError {
    #[error("invalid toss record: {0} heads out of {1} tosses")]
    BadRecord(u64, u64),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("Stirling form undefined for degenerate frequencies (N_H = {n_heads}, N = {n_total}); use the exact form")]
    DegenerateFrequency { n_heads: u64, n_total: u64 },
}

/// Outcome tally of a toss string: N tosses, N_H heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TossRecord {
    n_total: u64,
    n_heads: u64,
}

impl TossRecord {
    pub fn new(n_total: u64, n_heads: u64) -> Result<Self, LikelihoodError> {
        if n_total < 1 || n_heads > n_total {
            return Err(LikelihoodError::BadRecord(n_heads, n_total));
        }
        Ok(Self { n_total, n_heads })
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn n_heads(&self) -> u64 {
        self.n_heads
    }

    pub fn n_tails(&self) -> u64 {
        self.n_total - self.n_heads
    }

    /// Observed frequency of heads.
    pub fn frequency(&self) -> f64 {
        self.n_heads as f64 / self.n_total as f64
    }
}

/// Two-outcome distribution, stored as the heads probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryDist {
    p_head: f64,
}

impl BinaryDist {
    pub fn new(p_head: f64) -> Result<Self, LikelihoodError> {
        if !(0.0..=1.0).contains(&p_head) || !p_head.is_finite() {
            return Err(LikelihoodError::BadProbability(p_head));
        }
        Ok(Self { p_head })
    }

    pub fn p_head(&self) -> f64 {
        self.p_head
    }

    pub fn p_tail(&self) -> f64 {
        1.0 - self.p_head
    }
}

/// Relative entropy that distinguishes a genuinely infinite divergence
/// (support mismatch) from a plain number. Never a silent `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KlDivergence {
    Finite(f64),
    Infinite,
}

impl KlDivergence {
    pub fn is_finite(&self) -> bool {
        matches!(self, KlDivergence::Finite(_))
    }

    /// Collapse to a float, mapping the flagged case to +inf.
    pub fn value(&self) -> f64 {
        match self {
            KlDivergence::Finite(v) => *v,
            KlDivergence::Infinite => f64::INFINITY,
        }
    }
}

/// KL divergence between two discrete distributions given as slices,
/// in nats, with the 0 log(0/q) = 0 convention.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> KlDivergence {
    debug_assert_eq!(p.len(), q.len());
    let mut sum = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return KlDivergence::Infinite;
            }
            sum += pi * (pi / qi).ln();
        }
    }
    // Clamp the tiny negative values that cancellation can produce.
    KlDivergence::Finite(sum.max(0.0))
}

/// Binary KL divergence D(pa || pb) in nats.
pub fn kl_binary(pa: BinaryDist, pb: BinaryDist) -> KlDivergence {
    kl_divergence(
        &[pa.p_head(), pa.p_tail()],
        &[pb.p_head(), pb.p_tail()],
    )
}

/// Log-probability that may be flagged as impossible (outcome of
/// probability zero observed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogLikelihood {
    Finite(f64),
    ImpossibleOutcome,
}

impl LogLikelihood {
    pub fn value(&self) -> f64 {
        match self {
            LogLikelihood::Finite(v) => *v,
            LogLikelihood::ImpossibleOutcome => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, LogLikelihood::Finite(_))
    }
}

/// Exact binomial log-likelihood ln[ C(N, N_H) q^N_H (1-q)^N_T ],
/// computed through log-gamma so large N never overflows.
///
/// This is the brute-force reference the Stirling form is checked against.
pub fn exact_log_likelihood(t: TossRecord, model: BinaryDist) -> LogLikelihood {
    let n = t.n_total() as f64;
    let h = t.n_heads() as f64;
    let tails = t.n_tails() as f64;
    let q = model.p_head();

    if (t.n_heads() > 0 && q == 0.0) || (t.n_tails() > 0 && q == 1.0) {
        return LogLikelihood::ImpossibleOutcome;
    }
    let log_binom = ln_gamma(n + 1.0) - ln_gamma(h + 1.0) - ln_gamma(tails + 1.0);
    let mut ll = log_binom;
    if t.n_heads() > 0 {
        ll += h * q.ln();
    }
    if t.n_tails() > 0 {
        ll += tails * (1.0 - q).ln();
    }
    LogLikelihood::Finite(ll)
}

/// Stirling approximation of the binomial log-likelihood:
/// -N D(P_A || model) - (1/2) ln(2 pi N p (1-p)) with p = N_H / N.
///
/// Undefined at degenerate frequencies (`N_H` of 0 or N); those cases must
/// go through `exact_log_likelihood`.
pub fn approx_log_likelihood(t: TossRecord, model: BinaryDist) -> Result<f64, LikelihoodError> {
    if t.n_heads() == 0 || t.n_heads() == t.n_total() {
        return Err(LikelihoodError::DegenerateFrequency {
            n_heads: t.n_heads(),
            n_total: t.n_total(),
        });
    }
    let n = t.n_total() as f64;
    let p = t.frequency();
    let observed = BinaryDist::new(p).expect("frequency is in [0,1]");
    let d = kl_binary(observed, model).value();
    Ok(-n * d - 0.5 * (2.0 * std::f64::consts::PI * n * p * (1.0 - p)).ln())
}

/// Simulate one toss string from `p_true` and score every prefix under
/// `model` with the exact binomial log-likelihood. Deterministic per seed.
pub fn likelihood_curve(
    p_true: BinaryDist,
    model: BinaryDist,
    n_max: u64,
    seed: u64,
) -> Vec<(u64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut heads = 0u64;
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        if rng.gen::<f64>() < p_true.p_head() {
            heads += 1;
        }
        let record = TossRecord::new(n, heads).expect("prefix tally is consistent");
        out.push((n, exact_log_likelihood(record, model).value()));
    }
    out
}

/// Write a curve as CSV with the `N,log_likelihood` header.
pub fn write_curve_csv<W: std::io::Write>(
    series: &[(u64, f64)],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "N,log_likelihood")?;
    for (n, ll) in series {
        writeln!(w, "{n},{ll}")?;
    }
    Ok(())
}

/// Least-squares slope of y against x.
pub fn regression_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
