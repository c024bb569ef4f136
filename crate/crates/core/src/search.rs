//! Bounded breadth-first closure over a nondeterministic successor relation.
//!
//! Each layer of the frontier is expanded (in parallel when the `parallel`
//! feature is enabled and more than one worker is requested), then merged
//! sequentially in canonical order. Results and counters therefore do not
//! depend on the worker count.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BudgetError {
    #[error("max_states must be at least 1")]
    NoStates,
}

/// Hard caps on an exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SearchBudget {
    /// Maximal derivation depth.
    pub max_steps: u64,
    /// Maximal state size (multiset cardinality or register sum).
    pub max_state_size: u64,
    /// Maximal number of visited states.
    pub max_states: u64,
}

impl SearchBudget {
    pub fn new(max_steps: u64, max_state_size: u64, max_states: u64) -> Result<Self, BudgetError> {
        if max_states == 0 {
            return Err(BudgetError::NoStates);
        }
        Ok(SearchBudget {
            max_steps,
            max_state_size,
            max_states,
        })
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_steps: 100,
            max_state_size: 32,
            max_states: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Diagnostics {
    /// New states that would have exceeded `max_steps`.
    pub steps_pruned: u64,
    /// New states larger than `max_state_size`.
    pub size_pruned: u64,
    /// New states dropped because the visited set was full.
    pub states_pruned: u64,
    /// Recorded results whose state still held non-terminal symbols.
    pub nonterminal_residue_results: u64,
    /// Branches that died without a successor state (vesicle elimination).
    pub eliminated_branches: u64,
    pub visited_states: u64,
    /// Depth of the deepest visited layer.
    pub depth: u64,
}

impl Diagnostics {
    pub fn pruned(&self) -> bool {
        self.steps_pruned + self.size_pruned + self.states_pruned > 0
    }
}

/// Deduplicated, lexicographically ordered result vectors plus diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResultSet {
    pub vectors: BTreeSet<Vec<u64>>,
    pub diagnostics: Diagnostics,
}

impl ResultSet {
    /// True iff no pruning counter fired.
    pub fn complete(&self) -> bool {
        !self.diagnostics.pruned()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.vectors.contains(v)
    }

    /// One vector per line, then a `#`-prefixed diagnostics footer.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for v in &self.vectors {
            let line: Vec<String> = v.iter().map(u64::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out.push_str(&self.footer());
        out
    }

    pub fn footer(&self) -> String {
        let d = &self.diagnostics;
        format!(
            "# results: {}\n# complete: {}\n# visited_states: {}\n# depth: {}\n# steps_pruned: {}\n# size_pruned: {}\n# states_pruned: {}\n# nonterminal_residue_results: {}\n# eliminated_branches: {}\n",
            self.vectors.len(),
            self.complete(),
            d.visited_states,
            d.depth,
            d.steps_pruned,
            d.size_pruned,
            d.states_pruned,
            d.nonterminal_residue_results,
            d.eliminated_branches
        )
    }
}

impl fmt::Display for ResultSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A result emitted at a visited state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub vector: Vec<u64>,
    /// The state still held symbols outside the terminal alphabet.
    pub residue: bool,
}

impl Record {
    pub fn clean(vector: Vec<u64>) -> Self {
        Record {
            vector,
            residue: false,
        }
    }
}

/// Successors of one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion<S> {
    pub successors: Vec<S>,
    /// Branches that ended without producing a state.
    pub eliminated: u64,
}

impl<S> Expansion<S> {
    pub fn of(successors: Vec<S>) -> Self {
        Expansion {
            successors,
            eliminated: 0,
        }
    }
}

/// A nondeterministic transition system explored by [`closure`].
///
/// `expand` and `record` must be pure: calling them twice on the same state
/// yields the same answer.
pub trait Exploration: Sync {
    type State: Clone + Eq + Hash + Ord + Send + Sync;

    fn initial(&self) -> Self::State;
    fn expand(&self, state: &Self::State) -> Expansion<Self::State>;
    fn size(&self, state: &Self::State) -> u64;
    /// Result emitted at `state`; `halting` is true iff it has no successor.
    fn record(&self, state: &Self::State, halting: bool) -> Option<Record>;
}

/// Closure output together with a witness derivation for each result.
#[derive(Clone, Debug)]
pub struct Witnessed<S> {
    pub results: ResultSet,
    /// For each result vector, the path from the initial state to the first
    /// state (in canonical visit order) that recorded it.
    pub witnesses: Vec<(Vec<u64>, Vec<S>)>,
}

pub fn closure<E: Exploration>(system: &E, budget: &SearchBudget, workers: usize) -> ResultSet {
    run(system, budget, workers, false).results
}

pub fn closure_with_witnesses<E: Exploration>(
    system: &E,
    budget: &SearchBudget,
    workers: usize,
) -> Witnessed<E::State> {
    run(system, budget, workers, true)
}

struct Expanded<S> {
    expansion: Expansion<S>,
    record: Option<Record>,
}

fn expand_one<E: Exploration>(system: &E, state: &E::State) -> Expanded<E::State> {
    let mut expansion = system.expand(state);
    expansion.successors.sort();
    expansion.successors.dedup();
    let halting = expansion.successors.is_empty();
    let record = system.record(state, halting);
    Expanded { expansion, record }
}

/// Expands frontier layers, on a dedicated pool when `workers > 1`.
struct Expander {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Expander {
    #[cfg(feature = "parallel")]
    fn new(workers: usize) -> Self {
        let pool = (workers > 1)
            .then(|| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .ok()
            })
            .flatten();
        Expander { pool }
    }

    #[cfg(not(feature = "parallel"))]
    fn new(_workers: usize) -> Self {
        Expander {}
    }

    #[cfg(feature = "parallel")]
    fn layer<E: Exploration>(&self, system: &E, frontier: &[E::State]) -> Vec<Expanded<E::State>> {
        use rayon::prelude::*;
        match &self.pool {
            Some(pool) if frontier.len() > 1 => {
                pool.install(|| frontier.par_iter().map(|s| expand_one(system, s)).collect())
            }
            _ => frontier.iter().map(|s| expand_one(system, s)).collect(),
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn layer<E: Exploration>(&self, system: &E, frontier: &[E::State]) -> Vec<Expanded<E::State>> {
        frontier.iter().map(|s| expand_one(system, s)).collect()
    }
}

fn run<E: Exploration>(
    system: &E,
    budget: &SearchBudget,
    workers: usize,
    track: bool,
) -> Witnessed<E::State> {
    let mut results = ResultSet::default();
    let mut witness_ends: Vec<(Vec<u64>, E::State)> = Vec::new();
    let mut parents: HashMap<E::State, E::State> = HashMap::new();

    let initial = system.initial();
    if system.size(&initial) > budget.max_state_size {
        results.diagnostics.size_pruned = 1;
        return Witnessed {
            results,
            witnesses: Vec::new(),
        };
    }
    let mut visited: HashSet<E::State> = HashSet::new();
    let mut pruned_steps: HashSet<E::State> = HashSet::new();
    let mut pruned_size: HashSet<E::State> = HashSet::new();
    let mut pruned_states: HashSet<E::State> = HashSet::new();
    visited.insert(initial.clone());
    let mut frontier = vec![initial];
    let mut depth = 0u64;
    let expander = Expander::new(workers);

    while !frontier.is_empty() {
        results.diagnostics.depth = depth;
        let layer = expander.layer(system, &frontier);
        let mut next = Vec::new();
        for (state, expanded) in frontier.iter().zip(layer) {
            results.diagnostics.eliminated_branches += expanded.expansion.eliminated;
            if let Some(record) = expanded.record {
                if record.residue {
                    results.diagnostics.nonterminal_residue_results += 1;
                }
                if results.vectors.insert(record.vector.clone()) && track {
                    witness_ends.push((record.vector, state.clone()));
                }
            }
            for succ in expanded.expansion.successors {
                if visited.contains(&succ) {
                    continue;
                }
                if system.size(&succ) > budget.max_state_size {
                    if pruned_size.insert(succ) {
                        results.diagnostics.size_pruned += 1;
                    }
                    continue;
                }
                if depth >= budget.max_steps {
                    if pruned_steps.insert(succ) {
                        results.diagnostics.steps_pruned += 1;
                    }
                    continue;
                }
                if visited.len() as u64 >= budget.max_states {
                    if pruned_states.insert(succ) {
                        results.diagnostics.states_pruned += 1;
                    }
                    continue;
                }
                visited.insert(succ.clone());
                if track {
                    parents.insert(succ.clone(), state.clone());
                }
                next.push(succ);
            }
        }
        next.sort();
        frontier = next;
        depth += 1;
    }
    results.diagnostics.visited_states = visited.len() as u64;

    let witnesses = witness_ends
        .into_iter()
        .map(|(vector, end)| {
            let mut path = vec![end];
            while let Some(parent) = parents.get(path.last().expect("non-empty path")) {
                path.push(parent.clone());
            }
            path.reverse();
            (vector, path)
        })
        .collect();
    Witnessed { results, witnesses }
}
