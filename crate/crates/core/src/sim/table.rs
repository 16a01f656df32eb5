use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::ConditionVector;

/// Word context plus conditions. At order `k` the key holds the last `k - 1`
/// context tokens; order 1 is the condition-only table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NGramKey {
    pub words: Vec<String>,
    pub conditions: ConditionVector,
}

impl NGramKey {
    pub fn new(words: Vec<String>, conditions: ConditionVector) -> Self {
        Self { words, conditions }
    }

    pub fn order(&self) -> usize {
        self.words.len() + 1
    }
}

pub type ItemCounts = BTreeMap<String, u64>;

/// Counts of predicted items per key, one map per order `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    orders: Vec<BTreeMap<NGramKey, ItemCounts>>,
    /// per order: word context -> keys with that context
    by_words: Vec<BTreeMap<Vec<String>, Vec<ConditionVector>>>,
}

impl CountTable {
    pub fn new(n: usize) -> Self {
        Self {
            orders: vec![BTreeMap::new(); n],
            by_words: vec![BTreeMap::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.orders.len()
    }

    /// Record one observation at every order. `context` must already be
    /// padded to at least `n - 1` tokens.
    pub fn add(&mut self, context: &[String], conditions: ConditionVector, item: &str, count: u64) {
        for k in 1..=self.n() {
            self.add_at(k, context, conditions, item, count);
        }
    }

    /// Record one observation at a single order.
    pub fn add_at(&mut self, order: usize, context: &[String], conditions: ConditionVector, item: &str, count: u64) {
        let words = context[context.len() - (order - 1)..].to_vec();
        let key = NGramKey::new(words, conditions);
        let entry = self.orders[order - 1].entry(key.clone()).or_default();
        if entry.is_empty() {
            let list = self.by_words[order - 1].entry(key.words).or_default();
            list.push(conditions);
            list.sort();
        }
        *entry.entry(item.to_string()).or_insert(0) += count;
    }

    pub fn get(&self, key: &NGramKey) -> Option<&ItemCounts> {
        self.orders.get(key.order().checked_sub(1)?)?.get(key)
    }

    /// Condition vectors stored with exactly this word context at `order`.
    pub fn conditions_for(&self, order: usize, words: &[String]) -> &[ConditionVector] {
        self.by_words
            .get(order - 1)
            .and_then(|m| m.get(words))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn entries(&self, order: usize) -> impl Iterator<Item = (&NGramKey, &ItemCounts)> {
        self.orders[order - 1].iter()
    }

    pub fn key_count(&self, order: usize) -> usize {
        self.orders[order - 1].len()
    }
}
