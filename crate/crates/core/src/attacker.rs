//! Attack strategies and the adaptive attack loop with refusal backoff.
//!
//! The loop is factored into `plan` (choose the next query) and `apply`
//! (process one sampled response slot) so that tests can enumerate every
//! response sequence exhaustively with exact probabilities instead of
//! sampling. [`AttackSession::run`] drives the same two functions with a
//! seeded RNG.

use crate::defense::{apply_policy, ConfidentialDoc, DefenseStack, PolicyAction};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::leakage::{LeakageReport, Transcript, TurnRecord};
use crate::oracle::{
    assemble_effects, find_directive_in_excerpts, ChannelEffects, ChannelSpec, DocumentStore,
    Excerpt, ObsKind, Observation,
};
use crate::query::{Framing, Predicate, Query, QueryKind};
use crate::secret::{BeliefRepr, BeliefState, ObservedSymbol, SecretSpace, KNOWN_ENTROPY_BITS};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Direct,
    DigitBinarySearch,
    GreedyInfoGain,
    DetectionAware,
    MaskedCompletion,
    IndirectInjection,
}

/// A pool entry. Static templates carry their parameters; dynamic templates
/// are instantiated against the current belief each turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "template")]
pub enum QueryTemplate {
    DigitThreshold { pos: usize, min: u8 },
    DigitEquals { pos: usize, digit: u8 },
    DigitValue { pos: usize },
    ValueThreshold { cutoff: u64 },
    /// Value threshold at the belief's balance point.
    BisectMedian,
    /// Equality guess on the current MAP element.
    FullGuessMap,
    MetaRecon,
    DirectAsk,
    InjectedDoc { doc_id: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackerPolicy {
    pub strategy: Strategy,
    /// Detection-aversion weight, >= 0.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub candidate_pool: Vec<QueryTemplate>,
    /// Rephrase ladder on refusals: direct, theoretical, mask-completion.
    #[serde(default)]
    pub backoff: bool,
}

impl AttackerPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::Planning(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if matches!(
            self.strategy,
            Strategy::GreedyInfoGain | Strategy::DetectionAware
        ) && self.candidate_pool.is_empty()
        {
            return Err(Error::Planning(
                "planning strategies need a non-empty candidate pool".into(),
            ));
        }
        Ok(())
    }
}

/// Everything the attack loop needs about the world under attack.
#[derive(Debug, Clone)]
pub struct AttackEnvironment {
    pub scenario_id: String,
    pub space: SecretSpace,
    pub secret_index: u64,
    pub channel: ChannelSpec,
    pub store: DocumentStore,
    pub role: String,
    pub strict_acl: bool,
    pub belief_repr: BeliefRepr,
    /// Declared per-query leakage cap carried onto reports.
    pub bound_ell: Option<f64>,
}

/// Mutable attack progress.
#[derive(Debug, Clone)]
pub struct AttackState {
    pub belief: BeliefState,
    pub transcript: Transcript,
    pub retrieval_restricted: bool,
    pub terminated: bool,
    pub prev_query_text: Option<String>,
    /// Pending refusal-backoff target and the rung it will retry at.
    pending_retry: Option<(Predicate, Framing)>,
}

/// What `plan` decided for the turn, with planner metadata.
#[derive(Debug, Clone)]
pub struct PlannedQuery {
    pub query: Query,
    /// Planner's estimate of Pr(D=1 | q); 0 when no detector is active.
    pub predicted_detection: f64,
}

pub struct AttackSession<'a> {
    pub policy: &'a AttackerPolicy,
    pub env: &'a AttackEnvironment,
    pub defenses: &'a DefenseStack,
    confidential: Vec<ConfidentialDoc>,
}

impl<'a> AttackSession<'a> {
    pub fn new(
        policy: &'a AttackerPolicy,
        env: &'a AttackEnvironment,
        defenses: &'a DefenseStack,
    ) -> Result<Self> {
        policy.validate()?;
        let shingle_len = defenses
            .detector
            .as_ref()
            .map(|d| d.shingle_len())
            .unwrap_or(crate::defense::fingerprint::DEFAULT_SHINGLE_LEN);
        let confidential = env
            .store
            .confidential_bodies()
            .map(|d| ConfidentialDoc::from_document(d, shingle_len))
            .collect();
        Ok(AttackSession {
            policy,
            env,
            defenses,
            confidential,
        })
    }

    pub fn initial_state(&self, seed: u64) -> Result<AttackState> {
        let belief = BeliefState::uniform(&self.env.space, self.env.belief_repr)?;
        let prior = belief.entropy_bits();
        Ok(AttackState {
            belief,
            transcript: Transcript::new(self.env.scenario_id.clone(), seed, prior),
            retrieval_restricted: false,
            terminated: false,
            prev_query_text: None,
            pending_retry: None,
        })
    }

    /// The attack is over: the belief is pinned, the session was cut, or the
    /// turn budget elapsed (checked by the caller).
    pub fn is_done(&self, state: &AttackState) -> bool {
        if state.terminated {
            return true;
        }
        let entropy = state.belief.entropy_bits();
        if entropy <= 0.0 {
            return true;
        }
        // Residual uncertainty below the pinned threshold still gets one
        // verification query; done once that confirmation has landed.
        if entropy <= KNOWN_ENTROPY_BITS {
            if let Some(last) = state.transcript.turns.last() {
                if matches!(
                    last.observation.kind,
                    ObsKind::Answer | ObsKind::ExfilAttempt
                ) && last_was_confirmation(last)
                {
                    return true;
                }
            }
        }
        false
    }

    /// Choose the next query. On a pinned belief this is the confirmation
    /// guess; after a refusal with backoff enabled it is the same target one
    /// rung down the rephrase ladder.
    pub fn plan(&self, state: &AttackState) -> Result<PlannedQuery> {
        let query = self.plan_query(state)?;
        let predicted = self.predict_detection(state, &query);
        let mut query = query;
        query.stealth_cost = predicted;
        Ok(PlannedQuery {
            query,
            predicted_detection: predicted,
        })
    }

    fn plan_query(&self, state: &AttackState) -> Result<Query> {
        let entropy = state.belief.entropy_bits();
        if entropy <= KNOWN_ENTROPY_BITS {
            let guess = self.env.space.element(state.belief.map_index());
            return Ok(Query::full_guess(guess));
        }

        if let Some((predicate, framing)) = &state.pending_retry {
            return Ok(requery(predicate, *framing));
        }

        match self.policy.strategy {
            Strategy::Direct => Ok(Query::direct_ask()),
            Strategy::IndirectInjection => {
                let doc = self
                    .policy
                    .candidate_pool
                    .iter()
                    .find_map(|t| match t {
                        QueryTemplate::InjectedDoc { doc_id } => Some(doc_id.clone()),
                        _ => None,
                    })
                    .ok_or_else(|| {
                        Error::Planning("indirect-injection needs an injected-doc template".into())
                    })?;
                Ok(Query::summarize_doc(doc))
            }
            Strategy::DigitBinarySearch => self.plan_digit_bisection(state),
            Strategy::MaskedCompletion => self.plan_masked_guess(state),
            Strategy::GreedyInfoGain | Strategy::DetectionAware => self.plan_from_pool(state),
        }
    }

    fn plan_digit_bisection(&self, state: &AttackState) -> Result<Query> {
        let width = self.env.space.digit_width().ok_or_else(|| {
            Error::Planning("digit binary search requires a digit-code space".into())
        })?;
        for pos in 0..width {
            let marg = state.belief.digit_marginal(pos).ok_or_else(|| {
                Error::Planning("digit binary search requires a digit-factored belief".into())
            })?;
            let lo = marg.iter().position(|&p| p > 0.0).unwrap_or(0);
            let hi = marg.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            if lo < hi {
                let mid = (lo + hi + 1) / 2;
                return Ok(Query::digit_threshold(pos, mid as u8, Framing::Direct));
            }
        }
        // all digits resolved but entropy > threshold: confirm the MAP guess
        Ok(Query::full_guess(
            self.env.space.element(state.belief.map_index()),
        ))
    }

    fn plan_masked_guess(&self, state: &AttackState) -> Result<Query> {
        let width = self.env.space.digit_width().ok_or_else(|| {
            Error::Planning("masked completion requires a digit-code space".into())
        })?;
        for pos in 0..width {
            let marg = state.belief.digit_marginal(pos).ok_or_else(|| {
                Error::Planning("masked completion requires a digit-factored belief".into())
            })?;
            let support = marg.iter().filter(|&&p| p > 0.0).count();
            if support > 1 {
                let best = marg
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(d, _)| d as u8)
                    .unwrap_or(0);
                return Ok(Query::digit_equals(pos, best, Framing::Masked));
            }
        }
        Ok(Query::full_guess(
            self.env.space.element(state.belief.map_index()),
        ))
    }

    fn plan_from_pool(&self, state: &AttackState) -> Result<Query> {
        let mut best: Option<(f64, Query)> = None;
        for template in &self.policy.candidate_pool {
            let query = match self.instantiate(template, state) {
                Some(q) => q,
                None => continue,
            };
            let gain = self.planning_gain(state, &query)?;
            let penalty = if self.policy.strategy == Strategy::DetectionAware {
                self.policy.lambda * self.predict_detection(state, &query)
            } else {
                0.0
            };
            let score = gain - penalty;
            // strict inequality keeps the lowest-index candidate on ties
            let better = match &best {
                None => true,
                Some((s, _)) => score > *s + 1e-12,
            };
            if better {
                best = Some((score, query));
            }
        }
        best.map(|(_, q)| q)
            .ok_or_else(|| Error::Planning("no instantiable candidate in the pool".into()))
    }

    fn instantiate(&self, template: &QueryTemplate, state: &AttackState) -> Option<Query> {
        match template {
            QueryTemplate::DigitThreshold { pos, min } => {
                Some(Query::digit_threshold(*pos, *min, Framing::Direct))
            }
            QueryTemplate::DigitEquals { pos, digit } => {
                Some(Query::digit_equals(*pos, *digit, Framing::Direct))
            }
            QueryTemplate::DigitValue { pos } => Some(Query::digit_value(*pos)),
            QueryTemplate::ValueThreshold { cutoff } => {
                Some(Query::value_threshold(*cutoff, Framing::Direct))
            }
            QueryTemplate::BisectMedian => {
                let cutoff = state.belief.balanced_cutoff().ok()?;
                Some(Query::value_threshold(cutoff, Framing::Direct))
            }
            QueryTemplate::FullGuessMap => Some(Query::full_guess(
                self.env.space.element(state.belief.map_index()),
            )),
            QueryTemplate::MetaRecon => Some(Query::meta_recon()),
            QueryTemplate::DirectAsk => Some(Query::direct_ask()),
            QueryTemplate::InjectedDoc { doc_id } => Some(Query::summarize_doc(doc_id.clone())),
        }
    }

    /// Expected info gain of a candidate against the effective channel the
    /// attacker would actually face this turn (white-box planning).
    fn planning_gain(&self, state: &AttackState, query: &Query) -> Result<f64> {
        let (_, _, effects) = self.stage_inputs(state, query);
        let kernel = self
            .env
            .channel
            .kernel_for(query, &self.env.space, &effects)?;
        state.belief.expected_info_gain(&kernel, &self.env.space)
    }

    /// Planner's detection estimate: query-side features only, since the
    /// response is unknown before asking.
    fn predict_detection(&self, state: &AttackState, query: &Query) -> f64 {
        match &self.defenses.detector {
            Some(detector) => {
                let features = detector.score_turn(
                    &query.text,
                    state.prev_query_text.as_deref(),
                    None,
                    &self.confidential,
                );
                if features.score > detector.theta() {
                    1.0
                } else {
                    0.0
                }
            }
            None => 0.0,
        }
    }

    /// Retrieval, sanitization, and the channel effects for this turn.
    fn stage_inputs(
        &self,
        state: &AttackState,
        query: &Query,
    ) -> (Vec<Excerpt>, Option<crate::oracle::Directive>, ChannelEffects) {
        let excerpts = if state.retrieval_restricted {
            Vec::new()
        } else {
            self.env
                .store
                .retrieve(&query.retrieval_keywords, &self.env.role, self.env.strict_acl)
        };
        let excerpts = match &self.defenses.sanitizer {
            Some(rules) => excerpts
                .into_iter()
                .map(|e| {
                    let (text, _) = crate::defense::sanitize(rules, &e.text);
                    Excerpt {
                        doc_id: e.doc_id,
                        text,
                    }
                })
                .collect(),
            None => excerpts,
        };
        let directive = find_directive_in_excerpts(&excerpts);
        let effects = assemble_effects(
            self.defenses.spotlight.as_ref().map(|s| s.fidelity),
            state.retrieval_restricted,
            directive.is_some(),
            false,
        );
        (excerpts, directive, effects)
    }

    /// Response alphabet for exhaustive rollouts: each possible slot with its
    /// probability under the true secret.
    pub fn outcome_distribution(&self, state: &AttackState, query: &Query) -> Result<Vec<(usize, f64)>> {
        let (_, _, effects) = self.stage_inputs(state, query);
        let kernel = self
            .env
            .channel
            .kernel_for(query, &self.env.space, &effects)?;
        let probe = self.env.space.probe(self.env.secret_index);
        Ok((0..kernel.arity())
            .map(|slot| (slot, kernel.prob(&probe, slot)))
            .filter(|(_, p)| *p > 0.0)
            .collect())
    }

    /// Process one turn given the sampled (or enumerated) response slot.
    pub fn apply(&self, state: &AttackState, query: &Query, slot: usize) -> Result<AttackState> {
        let (_, directive, effects) = self.stage_inputs(state, query);
        let raw_kernel = self
            .env
            .channel
            .kernel_for(query, &self.env.space, &effects)?;
        let symbols = raw_kernel.symbols();
        let symbol = symbols[slot];
        let raw_obs = render_for_slot(
            &self.env.channel,
            query,
            &self.env.space,
            self.env.secret_index,
            &self.env.store,
            directive.as_ref(),
            symbol,
        )?;

        let delivered = match &self.defenses.output_filter {
            Some(filter) => filter.filter(&raw_obs, &self.env.role),
            None => raw_obs,
        };

        let mut next = state.clone();
        let turn_no = state.transcript.turns.len() + 1;
        let entropy_before = state.belief.entropy_bits();

        // detector watches the raw query text and the delivered payload
        let (score, flag, action) = match &self.defenses.detector {
            Some(detector) => {
                let features = detector.score_turn(
                    &query.text,
                    state.prev_query_text.as_deref(),
                    delivered.payload.as_deref(),
                    &self.confidential,
                );
                let action = apply_policy(detector, features.score);
                (features.score, features.score > detector.theta(), action)
            }
            None => (0.0, false, PolicyAction::Allow),
        };

        let recorded_obs;
        if action == PolicyAction::Terminate {
            // the session is cut before the answer is delivered
            recorded_obs = Observation::refusal(&self.env.channel.refusal_phrase);
            next.terminated = true;
        } else {
            recorded_obs = delivered.clone();
            if action == PolicyAction::RestrictRetrieval {
                next.retrieval_restricted = true;
            }
            self.update_belief(&mut next, query, &raw_kernel, slot, &delivered)?;
        }

        let entropy_after = next.belief.entropy_bits();
        next.transcript.turns.push(TurnRecord {
            turn: turn_no,
            query_kind: query.kind,
            query_text: query.text.clone(),
            observation: recorded_obs.clone(),
            detect_score: score,
            detection_flag: flag,
            action,
            info_gain_bits: entropy_before - entropy_after,
            posterior_entropy_bits: entropy_after,
        });
        next.prev_query_text = Some(query.text.clone());

        // refusal backoff ladder
        next.pending_retry = None;
        if self.policy.backoff && recorded_obs.is_refusal() && !next.terminated {
            if let Some(next_rung) = next_rung(query.framing) {
                if ladder_applies(&query.predicate) {
                    next.pending_retry = Some((query.predicate.clone(), next_rung));
                }
            }
        }
        Ok(next)
    }

    fn update_belief(
        &self,
        next: &mut AttackState,
        query: &Query,
        raw_kernel: &Kernel,
        slot: usize,
        delivered: &Observation,
    ) -> Result<()> {
        if delivered.kind == ObsKind::Redacted {
            // a redaction carries no evidence about which literal was removed
            if matches!(raw_kernel, Kernel::Leak { .. }) {
                let filtered = raw_kernel.through_output_filter();
                next.belief = next.belief.posterior(
                    &filtered,
                    ObservedSymbol::slot(0),
                    &self.env.space,
                )?;
            }
            return Ok(());
        }

        let payload_index = delivered
            .payload
            .as_deref()
            .and_then(|p| extract_literal_index(p, &self.env.space));
        let observed = ObservedSymbol {
            slot,
            payload_index,
        };
        if matches!(raw_kernel, Kernel::Leak { .. }) && slot < 2 && payload_index.is_none() {
            // payload arrived but nothing in it parses as a space element
            return Ok(());
        }
        next.belief = next
            .belief
            .posterior(raw_kernel, observed, &self.env.space)?;
        let _ = query;
        Ok(())
    }

    /// Run the full attack loop with a seeded RNG.
    pub fn run(&self, seed: u64, max_turns: usize) -> Result<AttackOutcome> {
        if max_turns == 0 {
            return Err(Error::Planning("max_turns must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = self.initial_state(seed)?;
        while state.transcript.turns.len() < max_turns && !self.is_done(&state) {
            let planned = self.plan(&state)?;
            let dist = self.outcome_distribution(&state, &planned.query)?;
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = dist.last().map(|(s, _)| *s).unwrap_or(0);
            for (slot, p) in &dist {
                acc += p;
                if u < acc {
                    chosen = *slot;
                    break;
                }
            }
            state = self.apply(&state, &planned.query, chosen)?;
        }
        self.finish(state)
    }

    /// Build the outcome for a finished state.
    pub fn finish(&self, state: AttackState) -> Result<AttackOutcome> {
        let success = state.belief.map_index() == self.env.secret_index
            && state.belief.entropy_bits() <= KNOWN_ENTROPY_BITS;
        let report = LeakageReport::from_transcript(&state.transcript, success, self.env.bound_ell)?;
        Ok(AttackOutcome {
            transcript: state.transcript,
            report,
            final_belief_entropy: state.belief.entropy_bits(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub transcript: Transcript,
    pub report: LeakageReport,
    pub final_belief_entropy: f64,
}

/// Convenience wrapper: build a session and run it.
pub fn run_attack(
    policy: &AttackerPolicy,
    env: &AttackEnvironment,
    defenses: &DefenseStack,
    max_turns: usize,
    seed: u64,
) -> Result<AttackOutcome> {
    AttackSession::new(policy, env, defenses)?.run(seed, max_turns)
}

fn last_was_confirmation(turn: &TurnRecord) -> bool {
    matches!(turn.query_kind, QueryKind::YesNoPredicate) && turn.query_text.contains("I will type")
}

fn next_rung(framing: Framing) -> Option<Framing> {
    match framing {
        Framing::Direct => Some(Framing::Theoretical),
        Framing::Theoretical => Some(Framing::Masked),
        Framing::Masked => None,
    }
}

fn ladder_applies(predicate: &Predicate) -> bool {
    matches!(
        predicate,
        Predicate::DigitThreshold { .. }
            | Predicate::DigitEquals { .. }
            | Predicate::ValueThreshold { .. }
    )
}

fn requery(predicate: &Predicate, framing: Framing) -> Query {
    match predicate {
        Predicate::DigitThreshold { pos, min } => Query::digit_threshold(*pos, *min, framing),
        Predicate::DigitEquals { pos, digit } => Query::digit_equals(*pos, *digit, framing),
        Predicate::ValueThreshold { cutoff } => Query::value_threshold(*cutoff, framing),
        _ => Query::meta_recon(),
    }
}

/// Pull the first literal out of a payload that names an element of the
/// space (for digit codes: the first exactly-width digit run).
fn extract_literal_index(payload: &str, space: &SecretSpace) -> Option<u64> {
    if let Some(width) = space.digit_width() {
        let bytes: Vec<char> = payload.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i].is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i - start == width {
                    let run: String = bytes[start..i].iter().collect();
                    if let Some(idx) = space.index_of(&run) {
                        return Some(idx);
                    }
                }
            } else {
                i += 1;
            }
        }
        None
    } else {
        // explicit spaces: look for any element appearing verbatim
        (0..space.cardinality())
            .map(|i| (i, space.element(i)))
            .find(|(_, e)| payload.contains(e.as_str()))
            .map(|(i, _)| i)
    }
}

/// Oracle-side rendering for a known slot, shared by sampling and
/// enumeration paths.
fn render_for_slot(
    channel: &ChannelSpec,
    query: &Query,
    space: &SecretSpace,
    secret_index: u64,
    store: &DocumentStore,
    directive: Option<&crate::oracle::Directive>,
    symbol: crate::kernel::Symbol,
) -> Result<Observation> {
    channel.render_observation(query, space, secret_index, store, directive, symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Behavior, ResponseRule, RuleMatcher};

    fn answer_all_channel() -> ChannelSpec {
        ChannelSpec {
            rules: vec![ResponseRule {
                matcher: RuleMatcher::default(),
                behavior: Behavior::AnswerTruthfully,
                requires_retrieval: true,
            }],
            ..ChannelSpec::default()
        }
    }

    fn env_512(secret_index: u64) -> AttackEnvironment {
        AttackEnvironment {
            scenario_id: "bs512".into(),
            space: SecretSpace::explicit(
                "s512",
                (0..512).map(|i| format!("SK{i:03}")).collect(),
            )
            .unwrap(),
            secret_index,
            channel: answer_all_channel(),
            store: DocumentStore::default(),
            role: "intern".into(),
            strict_acl: true,
            belief_repr: BeliefRepr::Dense,
            bound_ell: Some(1.0),
        }
    }

    #[test]
    fn bisection_on_512_elements_succeeds_in_exactly_nine_turns() {
        let policy = AttackerPolicy {
            strategy: Strategy::GreedyInfoGain,
            lambda: 0.0,
            candidate_pool: vec![QueryTemplate::BisectMedian],
            backoff: false,
        };
        for secret in [0u64, 137, 255, 256, 511] {
            let env = env_512(secret);
            let outcome =
                run_attack(&policy, &env, &DefenseStack::none(), 64, 7).unwrap();
            assert_eq!(outcome.report.turns_used, 9, "secret {secret}");
            assert!(outcome.report.success);
            assert!((outcome.report.cumulative_mi_bits - 9.0).abs() < 1e-9);
        }
    }

    #[test]
    fn digit_binary_search_pins_nine_digit_code_within_36_turns() {
        let env = AttackEnvironment {
            scenario_id: "digit9".into(),
            space: SecretSpace::digit_code("code9", 9).unwrap(),
            secret_index: 492_867_135,
            channel: answer_all_channel(),
            store: DocumentStore::default(),
            role: "intern".into(),
            strict_acl: true,
            belief_repr: BeliefRepr::DigitFactored,
            bound_ell: Some(1.0),
        };
        let policy = AttackerPolicy {
            strategy: Strategy::DigitBinarySearch,
            lambda: 0.0,
            candidate_pool: vec![],
            backoff: false,
        };
        let outcome = run_attack(&policy, &env, &DefenseStack::none(), 64, 3).unwrap();
        assert!(outcome.report.success);
        assert!(
            outcome.report.turns_used <= 36,
            "took {} turns",
            outcome.report.turns_used
        );
        assert!((outcome.final_belief_entropy).abs() < 1e-12);
    }

    #[test]
    fn greedy_picks_the_balanced_threshold_from_a_static_pool() {
        // uniform 10-element digit domain; thresholds >=1..=9; >=5 maximizes gain
        let env = AttackEnvironment {
            scenario_id: "ten".into(),
            space: SecretSpace::digit_code("code1", 1).unwrap(),
            secret_index: 7,
            channel: answer_all_channel(),
            store: DocumentStore::default(),
            role: "intern".into(),
            strict_acl: true,
            belief_repr: BeliefRepr::DigitFactored,
            bound_ell: None,
        };
        let policy = AttackerPolicy {
            strategy: Strategy::GreedyInfoGain,
            lambda: 0.0,
            candidate_pool: (1..=9)
                .map(|min| QueryTemplate::DigitThreshold { pos: 0, min })
                .collect(),
            backoff: false,
        };
        let defenses = DefenseStack::none();
        let session = AttackSession::new(&policy, &env, &defenses).unwrap();
        let state = session.initial_state(0).unwrap();
        let planned = session.plan(&state).unwrap();
        match planned.query.predicate {
            Predicate::DigitThreshold { min, .. } => assert_eq!(min, 5),
            other => panic!("unexpected predicate {other:?}"),
        }
    }

    #[test]
    fn refusal_descends_the_rephrase_ladder() {
        let channel = ChannelSpec {
            rules: vec![
                ResponseRule {
                    matcher: RuleMatcher {
                        kind: Some(QueryKind::YesNoPredicate),
                        framing: Some(Framing::Direct),
                    },
                    behavior: Behavior::Refuse,
                    requires_retrieval: true,
                },
                ResponseRule {
                    matcher: RuleMatcher {
                        kind: Some(QueryKind::YesNoPredicate),
                        framing: Some(Framing::Theoretical),
                    },
                    behavior: Behavior::AnswerTheoreticalHint,
                    requires_retrieval: true,
                },
            ],
            ..ChannelSpec::default()
        };
        let env = AttackEnvironment {
            scenario_id: "ladder".into(),
            space: SecretSpace::digit_code("code2", 2).unwrap(),
            secret_index: 73,
            channel,
            store: DocumentStore::default(),
            role: "intern".into(),
            strict_acl: true,
            belief_repr: BeliefRepr::DigitFactored,
            bound_ell: None,
        };
        let policy = AttackerPolicy {
            strategy: Strategy::DigitBinarySearch,
            lambda: 0.0,
            candidate_pool: vec![],
            backoff: true,
        };
        let outcome = run_attack(&policy, &env, &DefenseStack::none(), 64, 5).unwrap();
        assert!(outcome.report.success);
        let turns = &outcome.transcript.turns;
        // first turn is refused, second re-asks the same target theoretically
        assert!(turns[0].observation.is_refusal());
        assert!(turns[1].query_text.contains("theoretically") || turns[1].query_text.contains("Purely"));
        assert!(!turns[1].observation.is_refusal());
    }

    #[test]
    fn point_mass_belief_leads_to_confirmation_then_stop() {
        let env = env_512(42);
        let policy = AttackerPolicy {
            strategy: Strategy::GreedyInfoGain,
            lambda: 0.0,
            candidate_pool: vec![QueryTemplate::BisectMedian],
            backoff: false,
        };
        let defenses = DefenseStack::none();
        let session = AttackSession::new(&policy, &env, &defenses).unwrap();
        let mut state = session.initial_state(0).unwrap();
        state.belief = BeliefState::point_mass(&env.space, 42, BeliefRepr::Dense).unwrap();
        assert!(session.is_done(&state));
    }

    #[test]
    fn empty_pool_for_planning_strategy_is_a_planning_error() {
        let policy = AttackerPolicy {
            strategy: Strategy::GreedyInfoGain,
            lambda: 0.0,
            candidate_pool: vec![],
            backoff: false,
        };
        assert!(matches!(policy.validate(), Err(Error::Planning(_))));
    }
}
