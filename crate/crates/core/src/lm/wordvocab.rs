use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency-ranked token inventory for word-level models: the `limit` most
/// frequent forms plus an unknown id (ties broken by form).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenVocab {
    forms: Vec<String>,
    limit: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl TokenVocab {
    pub fn from_forms(forms: Vec<String>, limit: usize) -> Self {
        let index = forms
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        TokenVocab { forms, limit, index }
    }

    pub fn reindex(&mut self) {
        self.index = self
            .forms
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
    }

    pub fn forms(&self) -> &[String] {
        &self.forms
    }

    pub fn unk_id(&self) -> u32 {
        self.forms.len() as u32
    }

    pub fn total_ids(&self) -> usize {
        self.forms.len() + 1
    }

    pub fn id_of(&self, form: &str) -> u32 {
        self.index.get(form).copied().unwrap_or_else(|| self.unk_id())
    }

    pub fn contains(&self, form: &str) -> bool {
        self.index.contains_key(form)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id_of(t)).collect()
    }
}

/// Build a token vocabulary of the `limit` most frequent forms.
pub fn build_token_vocab(tokens: &[String], limit: usize) -> Result<TokenVocab> {
    if tokens.is_empty() {
        return Err(Error::data("cannot build a token vocabulary from no tokens"));
    }
    if limit == 0 {
        return Err(Error::config("vocab_limit must be at least 1".to_string()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(limit);
    Ok(TokenVocab::from_forms(
        ranked.into_iter().map(|(f, _)| f.to_string()).collect(),
        limit,
    ))
}
