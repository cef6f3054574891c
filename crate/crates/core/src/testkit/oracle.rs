//! Exact minimum usage for tiny instances by enumerating set partitions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{fits, Instance, Item, SizeVector};

/// Largest instance the oracle accepts (Bell(8) = 4140 partitions).
pub const ORACLE_MAX_ITEMS: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance has {0} items; the oracle handles at most {ORACLE_MAX_ITEMS}")]
    TooLarge(usize),
    #[error("assignment covers {got} items, instance has {expected}")]
    Length { got: usize, expected: usize },
    #[error("bin {bin} exceeds capacity at {time}us")]
    Overfull { bin: usize, time: i64 },
}

/// An optimal packing: bin index per item in instance order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptSolution {
    pub usage: i64,
    pub bins: usize,
    pub assignment: Vec<usize>,
}

/// Whether `items` can share one bin at every instant.
fn block_feasible<'a>(items: impl Iterator<Item = &'a Item> + Clone, d: usize) -> Result<(), i64> {
    // Peak load occurs at some arrival.
    for probe in items.clone() {
        let t = probe.arrival;
        let mut load = SizeVector::zeros(d);
        for it in items.clone().filter(|it| it.arrival <= t && t < it.departure) {
            if !fits(&load, &it.size).unwrap_or(false) {
                return Err(t.micros());
            }
            load.add_assign(&it.size);
        }
    }
    Ok(())
}

/// Time during which at least one of `items` is active.
fn union_length<'a>(items: impl Iterator<Item = &'a Item>) -> i64 {
    let mut spans: Vec<(i64, i64)> = items.map(|it| (it.arrival.micros(), it.departure.micros())).collect();
    spans.sort_unstable();
    let mut total = 0;
    let mut current: Option<(i64, i64)> = None;
    for (a, b) in spans {
        current = match current {
            Some((s, e)) if a <= e => Some((s, e.max(b))),
            Some((s, e)) => {
                total += e - s;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    total + current.map_or(0, |(s, e)| e - s)
}

/// Usage of a given assignment (bin index per item in instance order),
/// after checking every bin stays within capacity.
pub fn schedule_usage(instance: &Instance, assignment: &[usize]) -> Result<i64, OracleError> {
    let items = instance.items();
    if assignment.len() != items.len() {
        return Err(OracleError::Length {
            got: assignment.len(),
            expected: items.len(),
        });
    }
    let bins = assignment.iter().max().map_or(0, |&b| b + 1);
    let mut members: Vec<Vec<&Item>> = vec![Vec::new(); bins];
    for (it, &b) in items.iter().zip(assignment) {
        members[b].push(it);
    }
    let mut total = 0;
    for (bin, block) in members.iter().enumerate() {
        block_feasible(block.iter().copied(), instance.d()).map_err(|time| OracleError::Overfull { bin, time })?;
        total += union_length(block.iter().copied());
    }
    Ok(total)
}

struct Search<'a> {
    items: &'a [Item],
    d: usize,
    blocks: Vec<Vec<usize>>,
    assignment: Vec<usize>,
    best: Option<OptSolution>,
}

impl Search<'_> {
    fn cost(&self) -> i64 {
        self.blocks
            .iter()
            .map(|b| union_length(b.iter().map(|&k| &self.items[k])))
            .sum()
    }

    // Restricted-growth enumeration: item `next` joins an existing block or
    // starts the next one. Infeasible prefixes are cut immediately.
    fn descend(&mut self, next: usize) {
        if next == self.items.len() {
            let usage = self.cost();
            if self.best.as_ref().is_none_or(|b| usage < b.usage) {
                self.best = Some(OptSolution {
                    usage,
                    bins: self.blocks.len(),
                    assignment: self.assignment.clone(),
                });
            }
            return;
        }
        for b in 0..=self.blocks.len() {
            if b == self.blocks.len() {
                self.blocks.push(Vec::new());
            }
            self.blocks[b].push(next);
            let ok = block_feasible(self.blocks[b].iter().map(|&k| &self.items[k]), self.d).is_ok();
            if ok {
                self.assignment[next] = b;
                self.descend(next + 1);
            }
            self.blocks[b].pop();
            if self.blocks[b].is_empty() {
                self.blocks.pop();
            }
        }
    }
}

/// Minimum total usage over all packings, with one optimal assignment.
pub fn brute_force_opt(instance: &Instance) -> Result<OptSolution, OracleError> {
    let items = instance.items();
    if items.len() > ORACLE_MAX_ITEMS {
        return Err(OracleError::TooLarge(items.len()));
    }
    let mut search = Search {
        items,
        d: instance.d(),
        blocks: Vec::new(),
        assignment: vec![0; items.len()],
        best: None,
    };
    search.descend(0);
    Ok(search.best.expect("singleton bins are always feasible"))
}
