//! Secret domains, beliefs over them, and exact Bayesian updating.
//!
//! All spaces are finite so every information quantity is exact. Large
//! digit-code spaces (10^width elements) are never enumerated: beliefs over
//! them use structured representations that stay closed under the kernel
//! shapes in [`crate::kernel`]:
//!
//! - `Dense` — one probability per element; explicit spaces, any kernel.
//! - `DigitFactored` — independent per-digit distributions; exact for
//!   digit-local kernels.
//! - `Piecewise` — piecewise-uniform over the integer value; exact for
//!   interval and equality kernels.

use crate::error::{Error, Result};
use crate::kernel::{entropy_of_row, Kernel, SecretProbe};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Posterior entropy (bits) below which the secret counts as pinned.
pub const KNOWN_ENTROPY_BITS: f64 = 0.01;

#[derive(Debug, Clone, Serialize, Deserialize)]
enum SpaceKind {
    Explicit(Vec<String>),
    DigitCode { width: usize },
}

/// An enumerable domain of secret values with a fixed element order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecretSpace {
    id: String,
    kind: SpaceKind,
}

impl SecretSpace {
    /// Space over an explicit, ordered list of distinct values.
    pub fn explicit(id: impl Into<String>, elements: Vec<String>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidSpace("explicit space is empty".into()));
        }
        let mut seen = HashSet::new();
        for e in &elements {
            if !seen.insert(e.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate element '{e}'")));
            }
        }
        Ok(SecretSpace {
            id: id.into(),
            kind: SpaceKind::Explicit(elements),
        })
    }

    /// Space of all fixed-width digit strings, ordered numerically.
    pub fn digit_code(id: impl Into<String>, width: usize) -> Result<Self> {
        if width == 0 || width > 18 {
            return Err(Error::InvalidSpace(format!(
                "digit-code width must be in 1..=18, got {width}"
            )));
        }
        Ok(SecretSpace {
            id: id.into(),
            kind: SpaceKind::DigitCode { width },
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn cardinality(&self) -> u64 {
        match &self.kind {
            SpaceKind::Explicit(e) => e.len() as u64,
            SpaceKind::DigitCode { width } => 10u64.pow(*width as u32),
        }
    }

    pub fn is_digit_code(&self) -> bool {
        matches!(self.kind, SpaceKind::DigitCode { .. })
    }

    pub fn digit_width(&self) -> Option<usize> {
        match &self.kind {
            SpaceKind::DigitCode { width } => Some(*width),
            _ => None,
        }
    }

    /// The element at `index` in the fixed order.
    pub fn element(&self, index: u64) -> String {
        match &self.kind {
            SpaceKind::Explicit(e) => e[index as usize].clone(),
            SpaceKind::DigitCode { width } => format!("{:0width$}", index, width = *width),
        }
    }

    pub fn index_of(&self, literal: &str) -> Option<u64> {
        match &self.kind {
            SpaceKind::Explicit(e) => e.iter().position(|x| x == literal).map(|i| i as u64),
            SpaceKind::DigitCode { width } => {
                if literal.len() == *width && literal.bytes().all(|b| b.is_ascii_digit()) {
                    literal.parse::<u64>().ok()
                } else {
                    None
                }
            }
        }
    }

    /// Digits of the element at `index`, most significant first.
    pub fn digits_of(&self, index: u64) -> Option<Vec<u8>> {
        let width = self.digit_width()?;
        let mut digits = vec![0u8; width];
        let mut v = index;
        for pos in (0..width).rev() {
            digits[pos] = (v % 10) as u8;
            v /= 10;
        }
        Some(digits)
    }

    pub fn probe(&self, index: u64) -> SecretProbe {
        SecretProbe {
            index,
            digits: self.digits_of(index),
        }
    }

    /// log2 of the cardinality.
    pub fn max_entropy_bits(&self) -> f64 {
        (self.cardinality() as f64).log2()
    }
}

/// Which belief representation a scenario tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefRepr {
    Dense,
    DigitFactored,
    Interval,
}

/// Contiguous run of element indices `[lo, hi)` carrying uniform mass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Segment {
    pub lo: u64,
    pub hi: u64,
    pub mass: f64,
}

impl Segment {
    fn len(&self) -> u64 {
        self.hi - self.lo
    }

    fn density(&self) -> f64 {
        self.mass / self.len() as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Repr {
    Dense(Vec<f64>),
    DigitFactored(Vec<Vec<f64>>),
    Piecewise(Vec<Segment>),
}

/// A probability distribution over a [`SecretSpace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeliefState {
    space_id: String,
    repr: Repr,
}

/// A delivered response as seen by the belief update: the symbol slot within
/// the kernel's alphabet plus, for payload-bearing symbols, the index of the
/// literal the attacker read out of the payload.
#[derive(Debug, Clone, Copy)]
pub struct ObservedSymbol {
    pub slot: usize,
    pub payload_index: Option<u64>,
}

impl ObservedSymbol {
    pub fn slot(slot: usize) -> Self {
        ObservedSymbol {
            slot,
            payload_index: None,
        }
    }
}

impl BeliefState {
    pub fn uniform(space: &SecretSpace, repr: BeliefRepr) -> Result<Self> {
        match repr {
            BeliefRepr::Dense => {
                let n = space.cardinality();
                if n > 1 << 22 {
                    return Err(Error::MalformedBelief(format!(
                        "dense belief over {n} elements is not tractable"
                    )));
                }
                Ok(BeliefState {
                    space_id: space.id().to_string(),
                    repr: Repr::Dense(vec![1.0 / n as f64; n as usize]),
                })
            }
            BeliefRepr::DigitFactored => {
                let width = space.digit_width().ok_or_else(|| {
                    Error::MalformedBelief("digit-factored belief requires a digit-code space".into())
                })?;
                Ok(BeliefState {
                    space_id: space.id().to_string(),
                    repr: Repr::DigitFactored(vec![vec![0.1; 10]; width]),
                })
            }
            BeliefRepr::Interval => Ok(BeliefState {
                space_id: space.id().to_string(),
                repr: Repr::Piecewise(vec![Segment {
                    lo: 0,
                    hi: space.cardinality(),
                    mass: 1.0,
                }]),
            }),
        }
    }

    /// Dense belief from explicit weights (explicit spaces only).
    pub fn from_probs(space: &SecretSpace, probs: Vec<f64>) -> Result<Self> {
        if probs.len() as u64 != space.cardinality() {
            return Err(Error::MalformedBelief(format!(
                "{} probabilities for a space of {} elements",
                probs.len(),
                space.cardinality()
            )));
        }
        if probs.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p) || p.is_nan()) {
            return Err(Error::MalformedBelief("probability out of [0,1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::MalformedBelief(format!(
                "probabilities sum to {sum}, expected 1 within {NORMALIZATION_TOLERANCE}"
            )));
        }
        Ok(BeliefState {
            space_id: space.id().to_string(),
            repr: Repr::Dense(probs),
        })
    }

    pub fn point_mass(space: &SecretSpace, index: u64, repr: BeliefRepr) -> Result<Self> {
        match repr {
            BeliefRepr::Dense => {
                let mut probs = vec![0.0; space.cardinality() as usize];
                probs[index as usize] = 1.0;
                Self::from_probs(space, probs)
            }
            BeliefRepr::DigitFactored => {
                let digits = space.digits_of(index).ok_or_else(|| {
                    Error::MalformedBelief("digit-factored belief requires a digit-code space".into())
                })?;
                let factors = digits
                    .iter()
                    .map(|&d| {
                        let mut f = vec![0.0; 10];
                        f[d as usize] = 1.0;
                        f
                    })
                    .collect();
                Ok(BeliefState {
                    space_id: space.id().to_string(),
                    repr: Repr::DigitFactored(factors),
                })
            }
            BeliefRepr::Interval => Ok(BeliefState {
                space_id: space.id().to_string(),
                repr: Repr::Piecewise(vec![Segment {
                    lo: index,
                    hi: index + 1,
                    mass: 1.0,
                }]),
            }),
        }
    }

    pub fn space_id(&self) -> &str {
        &self.space_id
    }

    pub fn repr_kind(&self) -> BeliefRepr {
        match &self.repr {
            Repr::Dense(_) => BeliefRepr::Dense,
            Repr::DigitFactored(_) => BeliefRepr::DigitFactored,
            Repr::Piecewise(_) => BeliefRepr::Interval,
        }
    }

    /// Dense probabilities, when this belief is dense.
    pub fn dense_probs(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Dense(p) => Some(p),
            _ => None,
        }
    }

    fn check_space(&self, space: &SecretSpace) -> Result<()> {
        if self.space_id != space.id() {
            return Err(Error::SpaceMismatch {
                belief_space: self.space_id.clone(),
                expected: space.id().to_string(),
            });
        }
        Ok(())
    }

    /// Shannon entropy in bits; 0*log(0) counts as 0.
    pub fn entropy_bits(&self) -> f64 {
        match &self.repr {
            Repr::Dense(p) => entropy_of_row(p),
            Repr::DigitFactored(factors) => factors.iter().map(|f| entropy_of_row(f)).sum(),
            Repr::Piecewise(segments) => segments
                .iter()
                .filter(|s| s.mass > 0.0)
                .map(|s| s.mass * (s.len() as f64 / s.mass).log2())
                .sum(),
        }
    }

    /// P(secret = element at `index`).
    pub fn prob_of(&self, index: u64) -> f64 {
        match &self.repr {
            Repr::Dense(p) => p[index as usize],
            Repr::DigitFactored(factors) => {
                let mut v = index;
                let mut prob = 1.0;
                for f in factors.iter().rev() {
                    prob *= f[(v % 10) as usize];
                    v /= 10;
                }
                prob
            }
            Repr::Piecewise(segments) => segments
                .iter()
                .find(|s| s.lo <= index && index < s.hi)
                .map(|s| s.density())
                .unwrap_or(0.0),
        }
    }

    /// Index of the most probable element; ties resolve to the lowest index.
    pub fn map_index(&self) -> u64 {
        match &self.repr {
            Repr::Dense(p) => {
                let mut best = 0usize;
                for (i, &v) in p.iter().enumerate() {
                    if v > p[best] {
                        best = i;
                    }
                }
                best as u64
            }
            Repr::DigitFactored(factors) => {
                let mut index = 0u64;
                for f in factors {
                    let mut best = 0usize;
                    for (d, &v) in f.iter().enumerate() {
                        if v > f[best] {
                            best = d;
                        }
                    }
                    index = index * 10 + best as u64;
                }
                index
            }
            Repr::Piecewise(segments) => {
                let mut best: Option<&Segment> = None;
                for s in segments {
                    if s.mass <= 0.0 {
                        continue;
                    }
                    match best {
                        None => best = Some(s),
                        Some(b) if s.density() > b.density() + 1e-15 => best = Some(s),
                        _ => {}
                    }
                }
                best.map(|s| s.lo).unwrap_or(0)
            }
        }
    }

    /// Total mass on indices `>= cutoff`.
    pub fn mass_at_or_above(&self, cutoff: u64) -> Result<f64> {
        match &self.repr {
            Repr::Dense(p) => Ok(p.iter().skip(cutoff as usize).sum()),
            Repr::Piecewise(segments) => Ok(segments
                .iter()
                .map(|s| {
                    let lo = s.lo.max(cutoff);
                    if lo >= s.hi {
                        0.0
                    } else {
                        s.density() * (s.hi - lo) as f64
                    }
                })
                .sum()),
            Repr::DigitFactored(_) => Err(Error::UnsupportedUpdate(
                "value-threshold mass on a digit-factored belief".into(),
            )),
        }
    }

    /// The cutoff c that makes P(secret >= c) as close to 1/2 as possible,
    /// considering only cutoffs that split the current support.
    pub fn balanced_cutoff(&self) -> Result<u64> {
        match &self.repr {
            Repr::Dense(p) => {
                let mut acc = 0.0;
                for (i, &v) in p.iter().enumerate() {
                    acc += v;
                    if acc >= 0.5 - 1e-12 {
                        return Ok(i as u64 + 1);
                    }
                }
                Ok(p.len() as u64)
            }
            Repr::Piecewise(segments) => {
                let mut acc = 0.0;
                for s in segments {
                    if s.mass <= 0.0 {
                        continue;
                    }
                    if acc + s.mass >= 0.5 - 1e-12 {
                        let need = 0.5 - acc;
                        let steps = (need / s.density()).ceil() as u64;
                        return Ok(s.lo + steps.clamp(1, s.len()));
                    }
                    acc += s.mass;
                }
                Err(Error::MalformedBelief("belief has no mass".into()))
            }
            Repr::DigitFactored(_) => Err(Error::UnsupportedUpdate(
                "value bisection on a digit-factored belief".into(),
            )),
        }
    }

    /// Marginal distribution of the digit at `pos` (digit-factored beliefs).
    pub fn digit_marginal(&self, pos: usize) -> Option<&[f64]> {
        match &self.repr {
            Repr::DigitFactored(f) => f.get(pos).map(|v| v.as_slice()),
            _ => None,
        }
    }

    /// Bayes-rule posterior after observing `obs` through `kernel`.
    /// The original belief is left unmodified.
    pub fn posterior(
        &self,
        kernel: &Kernel,
        obs: ObservedSymbol,
        space: &SecretSpace,
    ) -> Result<BeliefState> {
        self.check_space(space)?;

        // Payload-bearing leaks resolve to the literal the attacker read.
        if let Kernel::Leak { p_emit, .. } = kernel {
            return match obs.slot {
                0 | 1 => {
                    let idx = obs.payload_index.ok_or_else(|| {
                        Error::UnsupportedUpdate("leak observation without payload index".into())
                    })?;
                    BeliefState::point_mass(space, idx, self.repr_kind())
                }
                _ => {
                    if *p_emit >= 1.0 {
                        return Err(Error::ImpossibleEvidence);
                    }
                    Ok(self.clone())
                }
            };
        }

        match (&self.repr, kernel) {
            (Repr::Dense(p), _) => {
                let mut weights = vec![0.0; p.len()];
                let mut total = 0.0;
                for (i, &prior) in p.iter().enumerate() {
                    if prior == 0.0 {
                        continue;
                    }
                    let like = kernel.prob(&space.probe(i as u64), obs.slot);
                    weights[i] = prior * like;
                    total += weights[i];
                }
                if total <= 0.0 {
                    return Err(Error::ImpossibleEvidence);
                }
                for w in &mut weights {
                    *w /= total;
                }
                Ok(BeliefState {
                    space_id: self.space_id.clone(),
                    repr: Repr::Dense(weights),
                })
            }
            (Repr::DigitFactored(factors), Kernel::DigitLocal { pos, rows, .. }) => {
                let mut new_factors = factors.clone();
                let f = &mut new_factors[*pos];
                let mut total = 0.0;
                for d in 0..10 {
                    f[d] *= rows[d][obs.slot];
                    total += f[d];
                }
                if total <= 0.0 {
                    return Err(Error::ImpossibleEvidence);
                }
                for v in f.iter_mut() {
                    *v /= total;
                }
                Ok(BeliefState {
                    space_id: self.space_id.clone(),
                    repr: Repr::DigitFactored(new_factors),
                })
            }
            (Repr::DigitFactored(factors), Kernel::Constant { row, .. }) => {
                if row[obs.slot] <= 0.0 {
                    return Err(Error::ImpossibleEvidence);
                }
                let _ = factors;
                Ok(self.clone())
            }
            (
                Repr::DigitFactored(factors),
                Kernel::Equality {
                    guess,
                    row_match,
                    row_other,
                    ..
                },
            ) => {
                // Exact per-digit marginals of the joint posterior, projected
                // back onto the product family. When row_other[slot] is zero
                // (a noiseless "match" answer) this is the exact joint.
                let digits = space
                    .digits_of(*guess)
                    .ok_or_else(|| Error::UnsupportedUpdate("equality guess outside space".into()))?;
                let lm = row_match[obs.slot];
                let lo = row_other[obs.slot];
                let p_guess: f64 = factors
                    .iter()
                    .zip(&digits)
                    .map(|(f, &d)| f[d as usize])
                    .product();
                let z = p_guess * lm + (1.0 - p_guess) * lo;
                if z <= 0.0 {
                    return Err(Error::ImpossibleEvidence);
                }
                let mut new_factors = Vec::with_capacity(factors.len());
                for (f, &g) in factors.iter().zip(&digits) {
                    let mut nf = vec![0.0; 10];
                    for d in 0..10 {
                        let joint =
                            f[d] * lo + if d as u8 == g { p_guess * (lm - lo) } else { 0.0 };
                        nf[d] = joint.max(0.0) / z;
                    }
                    let s: f64 = nf.iter().sum();
                    for v in nf.iter_mut() {
                        *v /= s;
                    }
                    new_factors.push(nf);
                }
                Ok(BeliefState {
                    space_id: self.space_id.clone(),
                    repr: Repr::DigitFactored(new_factors),
                })
            }
            (Repr::Piecewise(segments), Kernel::Interval { cutoff, row_below, row_at_or_above, .. }) => {
                let mut out = Vec::new();
                let mut total = 0.0;
                for s in segments {
                    for part in split_segment(s, *cutoff) {
                        let like = if part.lo >= *cutoff {
                            row_at_or_above[obs.slot]
                        } else {
                            row_below[obs.slot]
                        };
                        let mass = part.mass * like;
                        if mass > 0.0 {
                            total += mass;
                            out.push(Segment { mass, ..part });
                        }
                    }
                }
                if total <= 0.0 {
                    return Err(Error::ImpossibleEvidence);
                }
                for s in &mut out {
                    s.mass /= total;
                }
                Ok(BeliefState {
                    space_id: self.space_id.clone(),
                    repr: Repr::Piecewise(out),
                })
            }
            (
                Repr::Piecewise(segments),
                Kernel::Equality {
                    guess,
                    row_match,
                    row_other,
                    ..
                },
            ) => {
                let lm = row_match[obs.slot];
                let lo = row_other[obs.slot];
                let mut out = Vec::new();
                let mut total = 0.0;
                for s in segments {
                    for part in split_segment(s, *guess)
                        .into_iter()
                        .flat_map(|p| split_segment(&p, *guess + 1))
                    {
                        let like = if part.lo == *guess { lm } else { lo };
                        let mass = part.mass * like;
                        if mass > 0.0 {
                            total += mass;
                            out.push(Segment { mass, ..part });
                        }
                    }
                }
                if total <= 0.0 {
                    return Err(Error::ImpossibleEvidence);
                }
                for s in &mut out {
                    s.mass /= total;
                }
                Ok(BeliefState {
                    space_id: self.space_id.clone(),
                    repr: Repr::Piecewise(out),
                })
            }
            (Repr::Piecewise(_), Kernel::Constant { row, .. }) => {
                if row[obs.slot] <= 0.0 {
                    return Err(Error::ImpossibleEvidence);
                }
                Ok(self.clone())
            }
            (_, k) => Err(Error::UnsupportedUpdate(format!(
                "{:?} belief with {} kernel",
                self.repr_kind(),
                kernel_name(k)
            ))),
        }
    }

    /// Exact expected information gain I(S;O) in bits for asking the query
    /// whose response kernel is `kernel`, under this belief. Always >= 0.
    ///
    /// For leak kernels the returned value is the planner's resolution value
    /// p_emit * p_true * H(S): the probability the payload arrives intact
    /// times the entropy it would resolve.
    pub fn expected_info_gain(&self, kernel: &Kernel, space: &SecretSpace) -> Result<f64> {
        self.check_space(space)?;
        match kernel {
            Kernel::Constant { .. } => Ok(0.0),
            Kernel::Leak { p_emit, p_true, .. } => Ok(p_emit * p_true * self.entropy_bits()),
            Kernel::DigitLocal { pos, rows, .. } => {
                let marg = self
                    .digit_marginal(*pos)
                    .ok_or_else(|| {
                        Error::UnsupportedUpdate(
                            "digit-local info gain requires a digit-factored belief".into(),
                        )
                    })?
                    .to_vec();
                let row_refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
                Ok(info_gain_from_classes(&marg, &row_refs))
            }
            Kernel::Interval {
                cutoff,
                row_below,
                row_at_or_above,
                ..
            } => {
                let above = self.mass_at_or_above(*cutoff)?;
                Ok(info_gain_from_classes(
                    &[1.0 - above, above],
                    &[row_below, row_at_or_above],
                ))
            }
            Kernel::Equality {
                guess,
                row_match,
                row_other,
                ..
            } => {
                let pm = self.prob_of(*guess);
                Ok(info_gain_from_classes(
                    &[pm, 1.0 - pm],
                    &[row_match, row_other],
                ))
            }
            Kernel::PerSecret { rows, .. } => {
                let probs = self.dense_probs().ok_or_else(|| {
                    Error::UnsupportedUpdate(
                        "per-secret info gain requires a dense belief".into(),
                    )
                })?;
                let row_refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
                Ok(info_gain_from_classes(probs, &row_refs))
            }
        }
    }
}

/// I = H(sum_c w_c R_c) - sum_c w_c H(R_c), clamped at 0 against rounding.
pub fn info_gain_from_classes(weights: &[f64], rows: &[&[f64]]) -> f64 {
    debug_assert_eq!(weights.len(), rows.len());
    let arity = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut mixture = vec![0.0; arity];
    let mut cond = 0.0;
    for (&w, row) in weights.iter().zip(rows) {
        if w == 0.0 {
            continue;
        }
        for (m, &p) in mixture.iter_mut().zip(row.iter()) {
            *m += w * p;
        }
        cond += w * entropy_of_row(row);
    }
    (entropy_of_row(&mixture) - cond).max(0.0)
}

fn split_segment(s: &Segment, at: u64) -> Vec<Segment> {
    if at <= s.lo || at >= s.hi {
        return vec![*s];
    }
    let left = at - s.lo;
    let total = s.len() as f64;
    vec![
        Segment {
            lo: s.lo,
            hi: at,
            mass: s.mass * left as f64 / total,
        },
        Segment {
            lo: at,
            hi: s.hi,
            mass: s.mass * (s.len() - left) as f64 / total,
        },
    ]
}

fn kernel_name(k: &Kernel) -> &'static str {
    match k {
        Kernel::DigitLocal { .. } => "digit-local",
        Kernel::Interval { .. } => "interval",
        Kernel::Equality { .. } => "equality",
        Kernel::Leak { .. } => "leak",
        Kernel::Constant { .. } => "constant",
        Kernel::PerSecret { .. } => "per-secret",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Symbol;

    fn ten_space() -> SecretSpace {
        SecretSpace::explicit("d10", (0..10).map(|i| i.to_string()).collect()).unwrap()
    }

    fn noiseless_threshold(cutoff: u64) -> Kernel {
        Kernel::Interval {
            cutoff,
            symbols: vec![Symbol::Yes, Symbol::No],
            row_below: vec![0.0, 1.0],
            row_at_or_above: vec![1.0, 0.0],
        }
    }

    #[test]
    fn entropy_of_nine_digit_uniform_is_about_thirty_bits() {
        let space = SecretSpace::digit_code("code9", 9).unwrap();
        let belief = BeliefState::uniform(&space, BeliefRepr::DigitFactored).unwrap();
        assert!((belief.entropy_bits() - 29.897352853986263).abs() < 1e-9);
        let interval = BeliefState::uniform(&space, BeliefRepr::Interval).unwrap();
        assert!((interval.entropy_bits() - 29.897352853986263).abs() < 1e-9);
    }

    #[test]
    fn entropy_of_point_mass_is_zero() {
        let space = ten_space();
        let belief = BeliefState::point_mass(&space, 3, BeliefRepr::Dense).unwrap();
        assert_eq!(belief.entropy_bits(), 0.0);
    }

    #[test]
    fn entropy_of_uniform_512_is_nine_bits() {
        let space =
            SecretSpace::explicit("s512", (0..512).map(|i| format!("{i:03}")).collect()).unwrap();
        let belief = BeliefState::uniform(&space, BeliefRepr::Dense).unwrap();
        assert!((belief.entropy_bits() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_probs_are_rejected() {
        let space = ten_space();
        let mut probs = vec![0.1; 10];
        probs[0] = 0.2;
        assert!(matches!(
            BeliefState::from_probs(&space, probs),
            Err(Error::MalformedBelief(_))
        ));
    }

    #[test]
    fn duplicate_elements_are_rejected() {
        assert!(SecretSpace::explicit("dup", vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn noiseless_partition_update() {
        let space = ten_space();
        let belief = BeliefState::uniform(&space, BeliefRepr::Dense).unwrap();
        let kernel = noiseless_threshold(5);
        let post = belief
            .posterior(&kernel, ObservedSymbol::slot(0), &space)
            .unwrap();
        for i in 0..5 {
            assert_eq!(post.prob_of(i), 0.0);
        }
        for i in 5..10 {
            assert!((post.prob_of(i) - 0.2).abs() < 1e-12);
        }
        // original untouched
        assert!((belief.prob_of(0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn uninformative_refusal_leaves_belief_unchanged() {
        let space = ten_space();
        let belief = BeliefState::uniform(&space, BeliefRepr::Dense).unwrap();
        let kernel = Kernel::Constant {
            symbols: vec![Symbol::Refusal],
            row: vec![1.0],
        };
        let post = belief
            .posterior(&kernel, ObservedSymbol::slot(0), &space)
            .unwrap();
        for i in 0..10 {
            assert!((post.prob_of(i) - belief.prob_of(i)).abs() < 1e-15);
        }
    }

    #[test]
    fn binary_flip_posterior_matches_hand_computation() {
        // uniform binary prior, yes/no with flip 0.1, observe yes -> 0.9
        let space = SecretSpace::explicit("pair", vec!["t".into(), "f".into()]).unwrap();
        let belief = BeliefState::uniform(&space, BeliefRepr::Dense).unwrap();
        let kernel = Kernel::Equality {
            guess: 0,
            symbols: vec![Symbol::Yes, Symbol::No],
            row_match: vec![0.9, 0.1],
            row_other: vec![0.1, 0.9],
        };
        let post = belief
            .posterior(&kernel, ObservedSymbol::slot(0), &space)
            .unwrap();
        assert!((post.prob_of(0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn impossible_evidence_is_an_error() {
        let space = ten_space();
        let belief = BeliefState::point_mass(&space, 2, BeliefRepr::Dense).unwrap();
        let kernel = noiseless_threshold(5);
        // point mass below the cutoff cannot produce "yes"
        assert!(matches!(
            belief.posterior(&kernel, ObservedSymbol::slot(0), &space),
            Err(Error::ImpossibleEvidence)
        ));
    }

    #[test]
    fn balanced_binary_predicate_gains_one_bit() {
        let space = ten_space();
        let belief = BeliefState::uniform(&space, BeliefRepr::Dense).unwrap();
        let gain = belief
            .expected_info_gain(&noiseless_threshold(5), &space)
            .unwrap();
        assert!((gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_of_ten_predicate_gains_binary_entropy_of_point_one() {
        let space = ten_space();
        let belief = BeliefState::uniform(&space, BeliefRepr::Dense).unwrap();
        let gain = belief
            .expected_info_gain(&noiseless_threshold(9), &space)
            .unwrap();
        let expected = crate::kernel::binary_entropy(0.1);
        assert!((gain - expected).abs() < 1e-12, "gain={gain} vs {expected}");
        assert!((gain - 0.469).abs() < 5e-4);
    }

    #[test]
    fn constant_channel_gains_nothing() {
        let space = ten_space();
        let belief = BeliefState::uniform(&space, BeliefRepr::Dense).unwrap();
        let kernel = Kernel::Constant {
            symbols: vec![Symbol::Refusal],
            row: vec![1.0],
        };
        assert_eq!(belief.expected_info_gain(&kernel, &space).unwrap(), 0.0);
    }

    #[test]
    fn factored_digit_update_is_exact() {
        let space = SecretSpace::digit_code("code3", 3).unwrap();
        let belief = BeliefState::uniform(&space, BeliefRepr::DigitFactored).unwrap();
        let kernel = Kernel::DigitLocal {
            pos: 1,
            symbols: vec![Symbol::Yes, Symbol::No],
            rows: (0..10)
                .map(|d| if d >= 5 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
                .collect(),
        };
        let post = belief
            .posterior(&kernel, ObservedSymbol::slot(0), &space)
            .unwrap();
        let marg = post.digit_marginal(1).unwrap();
        for d in 0..5 {
            assert_eq!(marg[d], 0.0);
        }
        for d in 5..10 {
            assert!((marg[d] - 0.2).abs() < 1e-12);
        }
        // other digits untouched
        let other = post.digit_marginal(0).unwrap();
        assert!((other[3] - 0.1).abs() < 1e-12);
        assert!((post.entropy_bits() - (2.0 * 10f64.log2() + 5f64.log2())).abs() < 1e-9);
    }

    #[test]
    fn piecewise_bisection_halves_entropy_by_one_bit() {
        let space = SecretSpace::digit_code("code9", 9).unwrap();
        let belief = BeliefState::uniform(&space, BeliefRepr::Interval).unwrap();
        let cutoff = belief.balanced_cutoff().unwrap();
        assert_eq!(cutoff, 500_000_000);
        let kernel = noiseless_threshold(cutoff);
        let post = belief
            .posterior(&kernel, ObservedSymbol::slot(0), &space)
            .unwrap();
        assert!((belief.entropy_bits() - post.entropy_bits() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn piecewise_equality_carves_out_single_point() {
        let space = SecretSpace::digit_code("code3", 3).unwrap();
        let belief = BeliefState::uniform(&space, BeliefRepr::Interval).unwrap();
        let kernel = Kernel::Equality {
            guess: 492,
            symbols: vec![Symbol::Yes, Symbol::No],
            row_match: vec![1.0, 0.0],
            row_other: vec![0.0, 1.0],
        };
        let yes = belief
            .posterior(&kernel, ObservedSymbol::slot(0), &space)
            .unwrap();
        assert_eq!(yes.map_index(), 492);
        assert_eq!(yes.entropy_bits(), 0.0);
        let no = belief
            .posterior(&kernel, ObservedSymbol::slot(1), &space)
            .unwrap();
        assert_eq!(no.prob_of(492), 0.0);
        assert!((no.entropy_bits() - 999f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn leak_observation_resolves_to_payload() {
        let space = SecretSpace::digit_code("code9", 9).unwrap();
        let belief = BeliefState::uniform(&space, BeliefRepr::DigitFactored).unwrap();
        let kernel = Kernel::Leak {
            p_emit: 0.6,
            p_true: 1.0,
            emit_true: Symbol::Exfil,
            emit_decoy: Symbol::ExfilDecoy,
            null: Symbol::Ignored,
        };
        let obs = ObservedSymbol {
            slot: 0,
            payload_index: Some(492_867_135),
        };
        let post = belief.posterior(&kernel, obs, &space).unwrap();
        assert_eq!(post.map_index(), 492_867_135);
        assert_eq!(post.entropy_bits(), 0.0);
        // ignored injection leaves the belief alone
        let same = belief
            .posterior(&kernel, ObservedSymbol::slot(2), &space)
            .unwrap();
        assert!((same.entropy_bits() - belief.entropy_bits()).abs() < 1e-12);
    }

    #[test]
    fn expected_posterior_entropy_identity_holds() {
        // E[H(posterior)] over the channel output distribution equals
        // H(prior) - expected_info_gain, for a dense belief and a noisy kernel.
        let space = ten_space();
        let probs = vec![0.05, 0.1, 0.15, 0.05, 0.05, 0.2, 0.1, 0.1, 0.1, 0.1];
        let belief = BeliefState::from_probs(&space, probs).unwrap();
        let kernel = noiseless_threshold(6).randomized_response(1.2);
        let gain = belief.expected_info_gain(&kernel, &space).unwrap();

        let mut expected_posterior_entropy = 0.0;
        for slot in 0..2 {
            let p_obs: f64 = (0..10)
                .map(|i| belief.prob_of(i) * kernel.prob(&space.probe(i), slot))
                .sum();
            let post = belief
                .posterior(&kernel, ObservedSymbol::slot(slot), &space)
                .unwrap();
            expected_posterior_entropy += p_obs * post.entropy_bits();
        }
        let identity = belief.entropy_bits() - gain;
        assert!(
            (expected_posterior_entropy - identity).abs() < 1e-9,
            "{expected_posterior_entropy} vs {identity}"
        );
    }
}
