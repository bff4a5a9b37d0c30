//! The synthetic enterprise assistant: document retrieval under ACLs, a
//! rule-table response channel with injection susceptibility, and the
//! randomized-response privacy wrapper.

mod channel;
mod store;

pub use channel::{
    assemble_effects, decoy_digits, find_directive, find_directive_in_excerpts, Behavior,
    ChannelEffects, ChannelSpec, Directive, ObsKind, Observation, ResponseRule, RuleMatcher,
    DEFAULT_REFUSAL,
};
pub use store::{Document, DocumentStore, Excerpt, Sensitivity};
