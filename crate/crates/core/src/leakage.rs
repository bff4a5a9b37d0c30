//! Exact information accounting over attack transcripts: per-turn gains, the
//! cumulative chain-rule identity, per-query leakage bounds, and channel
//! capacity via alternating maximization.

use crate::defense::PolicyAction;
use crate::error::{Error, Result};
use crate::kernel::{binary_entropy, Kernel};
use crate::oracle::Observation;
use crate::query::QueryKind;
use crate::secret::SecretSpace;
use serde::{Deserialize, Serialize};

/// One turn of the attack dialogue as recorded for accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnRecord {
    /// 1-based turn number.
    pub turn: usize,
    pub query_kind: QueryKind,
    pub query_text: String,
    pub observation: Observation,
    pub detect_score: f64,
    pub detection_flag: bool,
    pub action: PolicyAction,
    /// Realized entropy drop of the attacker's belief on this turn, in bits.
    /// Can be negative for a single unlucky noisy observation.
    pub info_gain_bits: f64,
    pub posterior_entropy_bits: f64,
}

/// The ordered record of an attack run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub scenario_id: String,
    pub seed: u64,
    pub prior_entropy_bits: f64,
    pub turns: Vec<TurnRecord>,
}

impl Transcript {
    pub fn new(scenario_id: impl Into<String>, seed: u64, prior_entropy_bits: f64) -> Self {
        Transcript {
            scenario_id: scenario_id.into(),
            seed,
            prior_entropy_bits,
            turns: Vec::new(),
        }
    }

    pub fn final_entropy_bits(&self) -> f64 {
        self.turns
            .last()
            .map(|t| t.posterior_entropy_bits)
            .unwrap_or(self.prior_entropy_bits)
    }

    /// Sum of realized per-turn gains.
    pub fn cumulative_mi_bits(&self) -> f64 {
        self.turns.iter().map(|t| t.info_gain_bits).sum()
    }

    pub fn detection_events(&self) -> usize {
        self.turns.iter().filter(|t| t.detection_flag).count()
    }

    /// 1 - H_t / H_prior after each turn, clamped to [0, 1].
    pub fn fraction_revealed(&self) -> Vec<f64> {
        if self.prior_entropy_bits <= 0.0 {
            return vec![1.0; self.turns.len()];
        }
        self.turns
            .iter()
            .map(|t| (1.0 - t.posterior_entropy_bits / self.prior_entropy_bits).clamp(0.0, 1.0))
            .collect()
    }
}

/// Cumulative leakage metrics for one attack run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageReport {
    pub scenario_id: String,
    pub seed: u64,
    pub prior_entropy_bits: f64,
    pub cumulative_mi_bits: f64,
    /// Per-turn normalized entropy reduction.
    pub fraction_revealed: Vec<f64>,
    pub success: bool,
    pub turns_used: usize,
    pub detection_events: usize,
    /// Configured per-query leakage cap, when the scenario declares one.
    pub bound_ell: Option<f64>,
}

impl LeakageReport {
    pub fn from_transcript(
        transcript: &Transcript,
        success: bool,
        bound_ell: Option<f64>,
    ) -> Result<Self> {
        let cumulative = transcript.cumulative_mi_bits();
        if cumulative > transcript.prior_entropy_bits + 1e-9 {
            return Err(Error::IncompleteTranscript(format!(
                "cumulative MI {cumulative} exceeds prior entropy {}",
                transcript.prior_entropy_bits
            )));
        }
        Ok(LeakageReport {
            scenario_id: transcript.scenario_id.clone(),
            seed: transcript.seed,
            prior_entropy_bits: transcript.prior_entropy_bits,
            cumulative_mi_bits: cumulative,
            fraction_revealed: transcript.fraction_revealed(),
            success,
            turns_used: transcript.turns.len(),
            detection_events: transcript.detection_events(),
            bound_ell,
        })
    }

    pub fn final_fraction_revealed(&self) -> f64 {
        self.fraction_revealed.last().copied().unwrap_or(0.0)
    }
}

/// |sum_t I_t - (H_prior - H_final)|. The contract is residual < 1e-9 for
/// any transcript with a full belief trace.
pub fn chain_rule_check(transcript: &Transcript) -> Result<f64> {
    for t in &transcript.turns {
        if t.info_gain_bits.is_nan() || t.posterior_entropy_bits.is_nan() {
            return Err(Error::IncompleteTranscript(format!(
                "turn {} is missing belief-trace entries",
                t.turn
            )));
        }
    }
    let sum: f64 = transcript.cumulative_mi_bits();
    let drop = transcript.prior_entropy_bits - transcript.final_entropy_bits();
    Ok((sum - drop).abs())
}

/// Outcome of checking a transcript against a per-query leakage cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub ell: f64,
    /// Every realized per-turn gain stayed within ell (+1e-9). Realized
    /// gains can exceed the expected cap on unbalanced splits, so this is
    /// reported rather than asserted.
    pub per_turn_within_cap: bool,
    pub max_turn_gain_bits: f64,
    /// Success implies turns_used >= H_prior / ell - 1.
    pub success_meets_lower_bound: bool,
    /// Cumulative MI <= turns * ell (+1e-9).
    pub cumulative_within_total: bool,
}

pub fn bound_check(transcript: &Transcript, success: bool, ell: f64) -> Result<BoundVerdict> {
    if ell <= 0.0 {
        return Err(Error::config("bound_check.ell", "ell must be positive"));
    }
    let max_gain = transcript
        .turns
        .iter()
        .map(|t| t.info_gain_bits)
        .fold(0.0f64, f64::max);
    let turns = transcript.turns.len() as f64;
    let cumulative = transcript.cumulative_mi_bits();
    Ok(BoundVerdict {
        ell,
        per_turn_within_cap: max_gain <= ell + 1e-9,
        max_turn_gain_bits: max_gain,
        success_meets_lower_bound: !success
            || turns >= transcript.prior_entropy_bits / ell - 1.0,
        cumulative_within_total: cumulative <= turns * ell + 1e-9,
    })
}

// ---------------------------------------------------------------------------
// Channel capacity
// ---------------------------------------------------------------------------

pub const CAPACITY_TOLERANCE: f64 = 1e-9;
pub const CAPACITY_MAX_ITERATIONS: usize = 10_000;

/// Capacity in bits of a discrete memoryless channel given its row matrix
/// P(output | input class), via Blahut-Arimoto alternating maximization.
/// Converges when the duality gap drops below [`CAPACITY_TOLERANCE`].
pub fn capacity_bits(rows: &[Vec<f64>]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::InvalidChannel("empty channel matrix".into()));
    }
    let arity = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != arity {
            return Err(Error::InvalidChannel(format!(
                "row {i} has arity {} != {arity}",
                row.len()
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidChannel(format!(
                "row {i} sums to {sum}, expected 1"
            )));
        }
    }

    let n = rows.len();
    let mut p = vec![1.0 / n as f64; n];
    let mut info = 0.0;
    for iteration in 0..CAPACITY_MAX_ITERATIONS {
        let mut q = vec![0.0; arity];
        for (pi, row) in p.iter().zip(rows) {
            for (qj, &r) in q.iter_mut().zip(row) {
                *qj += pi * r;
            }
        }
        // D_i = KL(row_i || q) in bits
        let d: Vec<f64> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&q)
                    .filter(|(&r, _)| r > 0.0)
                    .map(|(&r, &qj)| r * (r / qj).log2())
                    .sum::<f64>()
            })
            .collect();
        info = p.iter().zip(&d).map(|(pi, di)| pi * di).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if upper - info < CAPACITY_TOLERANCE {
            return Ok(info.max(0.0));
        }
        let _ = iteration;
        // p_i <- p_i * 2^{D_i} / Z
        let mut z = 0.0;
        for (pi, di) in p.iter_mut().zip(&d) {
            *pi *= (*di * std::f64::consts::LN_2).exp();
            z += *pi;
        }
        for pi in &mut p {
            *pi /= z;
        }
    }
    Err(Error::CapacityNonConvergence {
        iterations: CAPACITY_MAX_ITERATIONS,
        last_estimate: info,
    })
}

/// Capacity of a query's response kernel. Kernels with finite class-row
/// matrices go through the iterative solver; leak kernels use the closed
/// form of an erasure channel with a permutation decoy,
/// p_emit * (log2 |S| - H_b(p_true)).
pub fn kernel_capacity(kernel: &Kernel, space: &SecretSpace) -> Result<f64> {
    match kernel.class_rows() {
        Some(rows) => capacity_bits(&rows),
        None => match kernel {
            Kernel::Leak { p_emit, p_true, .. } => {
                let bits = space.max_entropy_bits() - binary_entropy(*p_true);
                Ok((p_emit * bits).max(0.0))
            }
            _ => unreachable!("non-leak kernels expose class rows"),
        },
    }
}

/// Binary symmetric channel rows with flip probability `p`.
pub fn bsc_rows(p: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Symbol;
    use crate::oracle::ObsKind;

    fn record(turn: usize, gain: f64, post: f64) -> TurnRecord {
        TurnRecord {
            turn,
            query_kind: QueryKind::YesNoPredicate,
            query_text: String::new(),
            observation: Observation {
                kind: ObsKind::Answer,
                symbol: Symbol::Yes,
                payload: Some("Yes.".into()),
                exfil_target: None,
            },
            detect_score: 0.0,
            detection_flag: false,
            action: PolicyAction::Allow,
            info_gain_bits: gain,
            posterior_entropy_bits: post,
        }
    }

    #[test]
    fn empty_transcript_has_zero_residual_and_zero_mi() {
        let t = Transcript::new("s", 0, 9.0);
        assert_eq!(chain_rule_check(&t).unwrap(), 0.0);
        assert_eq!(t.cumulative_mi_bits(), 0.0);
    }

    #[test]
    fn binary_search_transcript_residual_is_zero() {
        let mut t = Transcript::new("s", 0, 9.0);
        for i in 0..9 {
            t.turns.push(record(i + 1, 1.0, 9.0 - (i + 1) as f64));
        }
        assert!(chain_rule_check(&t).unwrap() < 1e-12);
        let report = LeakageReport::from_transcript(&t, true, Some(1.0)).unwrap();
        assert!((report.cumulative_mi_bits - 9.0).abs() < 1e-12);
        assert_eq!(report.final_fraction_revealed(), 1.0);
    }

    #[test]
    fn refusal_only_transcript_is_trivially_bounded() {
        let mut t = Transcript::new("s", 0, 9.0);
        for i in 0..4 {
            t.turns.push(record(i + 1, 0.0, 9.0));
        }
        let verdict = bound_check(&t, false, 1.0).unwrap();
        assert!(verdict.per_turn_within_cap);
        assert!(verdict.cumulative_within_total);
        assert!(verdict.success_meets_lower_bound);
        assert_eq!(t.cumulative_mi_bits(), 0.0);
    }

    #[test]
    fn successful_run_below_lower_bound_fails_verdict() {
        let mut t = Transcript::new("s", 0, 9.0);
        // pretend 4 turns resolved 9 bits at ell = 1: violates T >= H/ell - 1
        for i in 0..4 {
            t.turns.push(record(i + 1, 2.25, 9.0 - 2.25 * (i + 1) as f64));
        }
        let verdict = bound_check(&t, true, 1.0).unwrap();
        assert!(!verdict.success_meets_lower_bound);
        assert!(!verdict.per_turn_within_cap);
    }

    #[test]
    fn bsc_capacity_matches_closed_form() {
        for &p in &[0.0, 0.1, 0.25, 0.5] {
            let cap = capacity_bits(&bsc_rows(p)).unwrap();
            let expected = 1.0 - binary_entropy(p);
            assert!(
                (cap - expected).abs() < 1e-6,
                "p={p}: {cap} vs {expected}"
            );
        }
        // the 0.1 case should land on the known value
        let cap = capacity_bits(&bsc_rows(0.1)).unwrap();
        assert!((cap - 0.5310).abs() < 5e-5);
    }

    #[test]
    fn z_channel_capacity_matches_closed_form() {
        // Z(q): input 0 noiseless, input 1 flips with q. For q = 0.5 the
        // capacity is log2(5/4).
        let rows = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        let cap = capacity_bits(&rows).unwrap();
        assert!((cap - 1.25f64.log2()).abs() < 1e-6, "{cap}");
    }

    #[test]
    fn constant_channel_capacity_is_zero() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert_eq!(capacity_bits(&rows).unwrap(), 0.0);
    }

    #[test]
    fn erasure_leak_kernel_capacity_closed_form() {
        let space = SecretSpace::digit_code("code3", 3).unwrap();
        let kernel = Kernel::Leak {
            p_emit: 0.5,
            p_true: 1.0,
            emit_true: Symbol::Reveal,
            emit_decoy: Symbol::RevealDecoy,
            null: Symbol::Refusal,
        };
        let cap = kernel_capacity(&kernel, &space).unwrap();
        assert!((cap - 0.5 * 1000f64.log2()).abs() < 1e-9);
    }
}
