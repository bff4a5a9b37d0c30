//! Conditional response kernels: P(symbol | query, secret).
//!
//! A kernel captures how a response distribution depends on the secret. The
//! dependence is always through a small statistic (a digit, a threshold test,
//! an equality test, or nothing at all), which is what keeps exact Bayesian
//! updates tractable on large secret spaces. The same kernel object drives
//! both sampling in the oracle and likelihood evaluation in belief updates,
//! so the two cannot drift apart.

use serde::{Deserialize, Serialize};

/// Abstract response symbol. Payload text (the leaked literal or document
/// body) is attached at the observation layer; the kernel only deals in
/// symbol classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symbol {
    Yes,
    No,
    Refusal,
    /// 10-ary answer naming a digit value.
    Digit(u8),
    /// Content-free acknowledgement (meta questions, summaries).
    Ack,
    /// Payload carries the true secret material.
    Reveal,
    /// Payload carries decoy material (perturbed under DP).
    RevealDecoy,
    /// Injected directive followed; payload carries the targeted document.
    Exfil,
    /// Injected directive followed but payload perturbed.
    ExfilDecoy,
    /// Injected directive present but not followed.
    Ignored,
    /// Output filter replaced the payload.
    Redacted,
}

impl Symbol {
    pub fn is_refusal(self) -> bool {
        matches!(self, Symbol::Refusal)
    }

    /// True for symbols whose observation carries leaked payload text.
    pub fn carries_payload(self) -> bool {
        matches!(
            self,
            Symbol::Reveal | Symbol::RevealDecoy | Symbol::Exfil | Symbol::ExfilDecoy
        )
    }
}

/// Minimal view of the true secret needed to pick a kernel row.
#[derive(Debug, Clone)]
pub struct SecretProbe {
    /// Index of the secret within its space.
    pub index: u64,
    /// Digits of the secret, most significant first (digit-code spaces only).
    pub digits: Option<Vec<u8>>,
}

impl SecretProbe {
    pub fn digit(&self, pos: usize) -> Option<u8> {
        self.digits.as_ref().and_then(|d| d.get(pos).copied())
    }
}

/// How a response distribution depends on the secret.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Kernel {
    /// `rows[d]` is the distribution over `symbols` when the digit at `pos`
    /// equals `d`.
    DigitLocal {
        pos: usize,
        symbols: Vec<Symbol>,
        rows: Vec<Vec<f64>>,
    },
    /// Row chosen by whether the secret's numeric value is >= `cutoff`.
    /// On explicit spaces the element index plays the role of the value.
    Interval {
        cutoff: u64,
        symbols: Vec<Symbol>,
        row_below: Vec<f64>,
        row_at_or_above: Vec<f64>,
    },
    /// Row chosen by whether the secret equals the guessed element.
    Equality {
        guess: u64,
        symbols: Vec<Symbol>,
        row_match: Vec<f64>,
        row_other: Vec<f64>,
    },
    /// Emits payload-bearing material with probability `p_emit`; the payload
    /// is the true material with probability `p_true`, otherwise a decoy.
    /// Symbol slots are fixed: 0 = true payload, 1 = decoy, 2 = null.
    Leak {
        p_emit: f64,
        p_true: f64,
        emit_true: Symbol,
        emit_decoy: Symbol,
        null: Symbol,
    },
    /// Same distribution for every secret; carries no information.
    Constant { symbols: Vec<Symbol>, row: Vec<f64> },
    /// One row per element of an explicit space.
    PerSecret {
        symbols: Vec<Symbol>,
        rows: Vec<Vec<f64>>,
    },
}

impl Kernel {
    pub fn symbols(&self) -> Vec<Symbol> {
        match self {
            Kernel::DigitLocal { symbols, .. }
            | Kernel::Interval { symbols, .. }
            | Kernel::Equality { symbols, .. }
            | Kernel::Constant { symbols, .. }
            | Kernel::PerSecret { symbols, .. } => symbols.clone(),
            Kernel::Leak {
                emit_true,
                emit_decoy,
                null,
                ..
            } => vec![*emit_true, *emit_decoy, *null],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Kernel::Leak { .. } => 3,
            other => other.symbols().len(),
        }
    }

    /// P(symbol slot | this secret).
    pub fn prob(&self, probe: &SecretProbe, slot: usize) -> f64 {
        match self {
            Kernel::DigitLocal { pos, rows, .. } => {
                let d = probe.digit(*pos).expect("digit-local kernel on non-digit space") as usize;
                rows[d][slot]
            }
            Kernel::Interval {
                cutoff,
                row_below,
                row_at_or_above,
                ..
            } => {
                if probe.index >= *cutoff {
                    row_at_or_above[slot]
                } else {
                    row_below[slot]
                }
            }
            Kernel::Equality {
                guess,
                row_match,
                row_other,
                ..
            } => {
                if probe.index == *guess {
                    row_match[slot]
                } else {
                    row_other[slot]
                }
            }
            Kernel::Leak { p_emit, p_true, .. } => match slot {
                0 => p_emit * p_true,
                1 => p_emit * (1.0 - p_true),
                2 => 1.0 - p_emit,
                _ => 0.0,
            },
            Kernel::Constant { row, .. } => row[slot],
            Kernel::PerSecret { rows, .. } => rows[probe.index as usize][slot],
        }
    }

    /// Draw a symbol slot for the given secret. `u` is a uniform [0,1) draw.
    pub fn sample_slot(&self, probe: &SecretProbe, u: f64) -> usize {
        let n = self.arity();
        let mut acc = 0.0;
        for slot in 0..n {
            acc += self.prob(probe, slot);
            if u < acc {
                return slot;
            }
        }
        n - 1
    }

    /// True when the kernel carries no information about the secret.
    pub fn is_constant(&self) -> bool {
        matches!(self, Kernel::Constant { .. })
    }

    /// Wrap every emitted symbol in k-ary randomized response: the true
    /// symbol is kept with probability e^eps / (e^eps + k - 1), otherwise one
    /// of the other k-1 symbols is emitted uniformly. Leak kernels randomize
    /// the binary true-vs-decoy payload choice instead, since their payload
    /// alphabet is not enumerable.
    pub fn randomized_response(&self, epsilon: f64) -> Kernel {
        match self {
            Kernel::Constant { .. } => self.clone(),
            Kernel::Leak {
                p_emit,
                emit_true,
                emit_decoy,
                null,
                ..
            } => Kernel::Leak {
                p_emit: *p_emit,
                p_true: keep_probability(epsilon, 2),
                emit_true: *emit_true,
                emit_decoy: *emit_decoy,
                null: *null,
            },
            Kernel::DigitLocal { pos, symbols, rows } => Kernel::DigitLocal {
                pos: *pos,
                symbols: symbols.clone(),
                rows: rows
                    .iter()
                    .map(|r| rr_mix(r, keep_probability(epsilon, r.len())))
                    .collect(),
            },
            Kernel::Interval {
                cutoff,
                symbols,
                row_below,
                row_at_or_above,
            } => {
                let keep = keep_probability(epsilon, symbols.len());
                Kernel::Interval {
                    cutoff: *cutoff,
                    symbols: symbols.clone(),
                    row_below: rr_mix(row_below, keep),
                    row_at_or_above: rr_mix(row_at_or_above, keep),
                }
            }
            Kernel::Equality {
                guess,
                symbols,
                row_match,
                row_other,
            } => {
                let keep = keep_probability(epsilon, symbols.len());
                Kernel::Equality {
                    guess: *guess,
                    symbols: symbols.clone(),
                    row_match: rr_mix(row_match, keep),
                    row_other: rr_mix(row_other, keep),
                }
            }
            Kernel::PerSecret { symbols, rows } => {
                let keep = keep_probability(epsilon, symbols.len());
                Kernel::PerSecret {
                    symbols: symbols.clone(),
                    rows: rows.iter().map(|r| rr_mix(r, keep)).collect(),
                }
            }
        }
    }

    /// Belief-side view of a kernel behind the output filter. Payload symbols
    /// are delivered as `Redacted`, whose likelihood is the emission
    /// probability for every secret: the attacker does not know the filter's
    /// registry, so a redaction carries no evidence about which literal was
    /// removed.
    pub fn through_output_filter(&self) -> Kernel {
        match self {
            Kernel::Leak { p_emit, null, .. } => Kernel::Constant {
                symbols: vec![Symbol::Redacted, *null],
                row: vec![*p_emit, 1.0 - *p_emit],
            },
            other => other.clone(),
        }
    }

    /// Exhaustive row matrix over secret-equivalence classes, along with the
    /// prior-independent class count. Used by the capacity solver. Leak
    /// kernels have no finite row matrix and are handled in closed form.
    pub fn class_rows(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            Kernel::DigitLocal { rows, .. } => Some(rows.clone()),
            Kernel::Interval {
                row_below,
                row_at_or_above,
                ..
            } => Some(vec![row_below.clone(), row_at_or_above.clone()]),
            Kernel::Equality {
                row_match,
                row_other,
                ..
            } => Some(vec![row_match.clone(), row_other.clone()]),
            Kernel::Constant { row, .. } => Some(vec![row.clone()]),
            Kernel::PerSecret { rows, .. } => Some(rows.clone()),
            Kernel::Leak { .. } => None,
        }
    }
}

/// Randomized-response keep probability e^eps / (e^eps + k - 1).
pub fn keep_probability(epsilon: f64, arity: usize) -> f64 {
    let e = epsilon.exp();
    e / (e + (arity as f64 - 1.0))
}

fn rr_mix(row: &[f64], keep: f64) -> Vec<f64> {
    let k = row.len();
    if k <= 1 {
        return row.to_vec();
    }
    let other = (1.0 - keep) / (k as f64 - 1.0);
    (0..k)
        .map(|j| row[j] * keep + (1.0 - row[j]) * other)
        .collect()
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of_row(&[p, 1.0 - p])
}

/// Shannon entropy of a probability row, in bits. Zero entries contribute 0.
pub fn entropy_of_row(row: &[f64]) -> f64 {
    let h = -row
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>();
    // normalize -0.0 so exports never print a negative zero
    h + 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yes_no_threshold(cutoff: u64) -> Kernel {
        Kernel::Interval {
            cutoff,
            symbols: vec![Symbol::Yes, Symbol::No],
            row_below: vec![0.0, 1.0],
            row_at_or_above: vec![1.0, 0.0],
        }
    }

    #[test]
    fn interval_rows_select_by_value() {
        let k = yes_no_threshold(5);
        let below = SecretProbe {
            index: 4,
            digits: None,
        };
        let above = SecretProbe {
            index: 5,
            digits: None,
        };
        assert_eq!(k.prob(&below, 0), 0.0);
        assert_eq!(k.prob(&below, 1), 1.0);
        assert_eq!(k.prob(&above, 0), 1.0);
    }

    #[test]
    fn randomized_response_binary_flip_is_one_tenth_at_ln9() {
        let k = yes_no_threshold(5).randomized_response(9.0f64.ln());
        let above = SecretProbe {
            index: 7,
            digits: None,
        };
        assert!((k.prob(&above, 0) - 0.9).abs() < 1e-12);
        assert!((k.prob(&above, 1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn randomized_response_epsilon_zero_is_uniform() {
        let k = yes_no_threshold(5).randomized_response(0.0);
        let probe = SecretProbe {
            index: 0,
            digits: None,
        };
        assert!((k.prob(&probe, 0) - 0.5).abs() < 1e-12);
        assert!((k.prob(&probe, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn likelihood_ratio_bounded_by_exp_epsilon() {
        for &eps in &[0.0, 0.5, 1.0, 9.0f64.ln()] {
            let k = yes_no_threshold(50).randomized_response(eps);
            let a = SecretProbe {
                index: 10,
                digits: None,
            };
            let b = SecretProbe {
                index: 90,
                digits: None,
            };
            let bound = eps.exp() + 1e-12;
            for slot in 0..2 {
                let pa = k.prob(&a, slot);
                let pb = k.prob(&b, slot);
                assert!(pa <= pb * bound, "eps={eps} slot={slot}");
                assert!(pb <= pa * bound, "eps={eps} slot={slot}");
            }
        }
    }

    #[test]
    fn sample_slot_matches_row() {
        let k = Kernel::Constant {
            symbols: vec![Symbol::Ack, Symbol::Refusal],
            row: vec![0.25, 0.75],
        };
        let probe = SecretProbe {
            index: 0,
            digits: None,
        };
        assert_eq!(k.sample_slot(&probe, 0.1), 0);
        assert_eq!(k.sample_slot(&probe, 0.3), 1);
        assert_eq!(k.sample_slot(&probe, 0.999), 1);
    }

    #[test]
    fn leak_slots_are_emit_decoy_null() {
        let k = Kernel::Leak {
            p_emit: 0.6,
            p_true: 0.9,
            emit_true: Symbol::Exfil,
            emit_decoy: Symbol::ExfilDecoy,
            null: Symbol::Ignored,
        };
        let probe = SecretProbe {
            index: 3,
            digits: None,
        };
        assert!((k.prob(&probe, 0) - 0.54).abs() < 1e-12);
        assert!((k.prob(&probe, 1) - 0.06).abs() < 1e-12);
        assert!((k.prob(&probe, 2) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn filter_view_of_leak_is_uninformative() {
        let k = Kernel::Leak {
            p_emit: 0.6,
            p_true: 1.0,
            emit_true: Symbol::Reveal,
            emit_decoy: Symbol::RevealDecoy,
            null: Symbol::Refusal,
        };
        let filtered = k.through_output_filter();
        assert!(filtered.is_constant());
        let probe = SecretProbe {
            index: 0,
            digits: None,
        };
        assert!((filtered.prob(&probe, 0) - 0.6).abs() < 1e-12);
    }
}
