//! Context tracking across turns.

use crate::concept::ConceptDictionary;
use crate::template::{Template, TemplateToken};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DialogState {
    /// At most one token per keyword.
    pub context: Template,
    pub turn: usize,
}

impl DialogState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Merges `new` into the context.
///
/// A keyword counts as changed when the context holds it with a different
/// value. A changed rank-0 keyword starts a fresh context; otherwise every
/// changed keyword deletes the context tokens ranked strictly below it. The
/// new tokens are then laid over what survives. The merged template is both
/// the answer basis and the next context.
pub fn merge_context(state: &DialogState, new: &Template, dictionary: &ConceptDictionary) -> (DialogState, Template) {
    // Later duplicates within one template win.
    let mut incoming: Vec<TemplateToken> = Vec::new();
    for t in &new.tokens {
        match incoming.iter_mut().find(|x| x.keyword == t.keyword) {
            Some(slot) => *slot = t.clone(),
            None => incoming.push(t.clone()),
        }
    }

    let changed: Vec<u32> = incoming
        .iter()
        .filter(|t| state.context.get(&t.keyword).is_some_and(|v| v != t.value))
        .map(|t| dictionary.rank(&t.keyword))
        .collect();

    let mut survivors: Vec<TemplateToken> = if changed.contains(&0) {
        Vec::new()
    } else {
        let cutoff = changed.iter().copied().min();
        state
            .context
            .tokens
            .iter()
            .filter(|t| cutoff.is_none_or(|r| dictionary.rank(&t.keyword) <= r))
            .cloned()
            .collect()
    };

    for t in incoming {
        match survivors.iter_mut().find(|s| s.keyword == t.keyword) {
            Some(slot) => *slot = t,
            None => survivors.push(t),
        }
    }

    let merged = Template {
        tokens: survivors,
        unmatched: new.unmatched,
    };
    let next = DialogState {
        context: Template {
            tokens: merged.tokens.clone(),
            unmatched: 0,
        },
        turn: state.turn + 1,
    };
    (next, merged)
}
