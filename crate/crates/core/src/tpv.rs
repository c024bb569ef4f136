//! Tissue P systems working on a single vesicle of a multiset.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::multiset::{
    applicable, apply_one, apply_set, maximal_applicable_subsets, parikh, Alphabet, CellId,
    Multiset, Mutation, MutationKind, Symbol,
};
use crate::search::{
    closure, closure_with_witnesses, Expansion, Exploration, Record, ResultSet, SearchBudget,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DerivationMode {
    Sequ,
    Smax,
}

impl fmt::Display for DerivationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DerivationMode::Sequ => "sequ",
            DerivationMode::Smax => "smax",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputStrategy {
    Halt,
    Term,
    HaltTerm,
}

impl fmt::Display for OutputStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputStrategy::Halt => "halt",
            OutputStrategy::Term => "term",
            OutputStrategy::HaltTerm => "halt-term",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystemError {
    #[error("duplicate cell {0:?}")]
    DuplicateCell(String),
    #[error("invalid cell name {0:?}")]
    InvalidCellName(String),
    #[error("cell index {0} out of range")]
    UnknownCell(usize),
    #[error("symbol #{0} is not in the alphabet")]
    UnknownSymbol(usize),
    #[error("terminal symbol {0:?} listed twice")]
    DuplicateTerminal(String),
    #[error("{0}")]
    Polarization(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TpvRule {
    pub source: CellId,
    pub mutation: Mutation,
    pub target: CellId,
}

/// Whether `name` can be used as a cell label in the text format.
pub fn valid_cell_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('@')
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '{' | '}' | '"' | ';'))
        && name != ":"
}

/// `(L, V, T, R, (i0, w0), h)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TpvSystem {
    cells: Vec<String>,
    alphabet: Alphabet,
    terminals: Vec<Symbol>,
    rules: Vec<TpvRule>,
    by_cell: Vec<Vec<usize>>,
    init_cell: CellId,
    init_multiset: Multiset,
    output_cell: CellId,
}

impl TpvSystem {
    /// Validates and builds a system; duplicate rules are dropped, keeping
    /// the first occurrence.
    pub fn new(
        cells: Vec<String>,
        alphabet: Alphabet,
        terminals: Vec<Symbol>,
        rules: Vec<TpvRule>,
        init_cell: CellId,
        init_multiset: Multiset,
        output_cell: CellId,
    ) -> Result<Self, SystemError> {
        let mut seen = HashMap::new();
        for (i, c) in cells.iter().enumerate() {
            if !valid_cell_name(c) {
                return Err(SystemError::InvalidCellName(c.clone()));
            }
            if seen.insert(c.as_str(), i).is_some() {
                return Err(SystemError::DuplicateCell(c.clone()));
            }
        }
        let check_cell = |c: CellId| {
            if c.index() < cells.len() {
                Ok(())
            } else {
                Err(SystemError::UnknownCell(c.index()))
            }
        };
        let check_sym = |s: Symbol| {
            if alphabet.contains(s) {
                Ok(())
            } else {
                Err(SystemError::UnknownSymbol(s.index()))
            }
        };
        check_cell(init_cell)?;
        check_cell(output_cell)?;
        let mut term_seen = BTreeSet::new();
        for &t in &terminals {
            check_sym(t)?;
            if !term_seen.insert(t) {
                return Err(SystemError::DuplicateTerminal(alphabet.name(t).to_string()));
            }
        }
        for s in init_multiset.support() {
            check_sym(s)?;
        }
        let mut unique = Vec::new();
        let mut rule_seen = BTreeSet::new();
        for r in rules {
            check_cell(r.source)?;
            check_cell(r.target)?;
            for s in r.mutation.symbols() {
                check_sym(s)?;
            }
            if rule_seen.insert(r) {
                unique.push(r);
            }
        }
        let mut by_cell = vec![Vec::new(); cells.len()];
        for (i, r) in unique.iter().enumerate() {
            by_cell[r.source.index()].push(i);
        }
        Ok(TpvSystem {
            cells,
            alphabet,
            terminals,
            rules: unique,
            by_cell,
            init_cell,
            init_multiset,
            output_cell,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.cells.len()).map(CellId::new)
    }

    pub fn cell_name(&self, c: CellId) -> &str {
        &self.cells[c.index()]
    }

    pub fn cell_named(&self, name: &str) -> Option<CellId> {
        self.cells.iter().position(|c| c == name).map(CellId::new)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Terminal symbols in declaration order (the Parikh order).
    pub fn terminals(&self) -> &[Symbol] {
        &self.terminals
    }

    pub fn is_terminal(&self, s: Symbol) -> bool {
        self.terminals.contains(&s)
    }

    pub fn rules(&self) -> &[TpvRule] {
        &self.rules
    }

    /// Rules of `cell` in declaration order.
    pub fn rules_of(&self, cell: CellId) -> impl Iterator<Item = &TpvRule> + '_ {
        self.by_cell[cell.index()]
            .iter()
            .map(move |&i| &self.rules[i])
    }

    pub fn init_cell(&self) -> CellId {
        self.init_cell
    }

    pub fn init_multiset(&self) -> &Multiset {
        &self.init_multiset
    }

    pub fn output_cell(&self) -> CellId {
        self.output_cell
    }

    pub fn initial_config(&self) -> VesicleConfig {
        VesicleConfig {
            cell: self.init_cell,
            content: self.init_multiset.clone(),
        }
    }

    pub fn rule_display<'a>(&'a self, rule: &'a TpvRule) -> RuleDisplay<'a> {
        RuleDisplay { system: self, rule }
    }
}

/// Renders a rule as `src : a => b @tgt`.
pub struct RuleDisplay<'a> {
    system: &'a TpvSystem,
    rule: &'a TpvRule,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} : {} @{}",
            self.system.cell_name(self.rule.source),
            self.rule.mutation.display(&self.system.alphabet),
            self.system.cell_name(self.rule.target)
        )
    }
}

/// The vesicle's position and content.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VesicleConfig {
    pub cell: CellId,
    pub content: Multiset,
}

impl VesicleConfig {
    pub fn new(cell: CellId, content: Multiset) -> Self {
        VesicleConfig { cell, content }
    }
}

/// Directed communication graph implied by the rule targets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommGraph {
    pub nodes: usize,
    pub edges: BTreeSet<(CellId, CellId)>,
}

impl CommGraph {
    pub fn out_neighbors(&self, from: CellId) -> impl Iterator<Item = CellId> + '_ {
        self.edges
            .iter()
            .filter(move |(i, _)| *i == from)
            .map(|&(_, j)| j)
    }

    /// Undirected simple edges `{i, j}` with `i < j`, loops dropped.
    pub fn undirected(&self) -> BTreeSet<(CellId, CellId)> {
        self.edges
            .iter()
            .filter(|(i, j)| i != j)
            .map(|&(i, j)| if i < j { (i, j) } else { (j, i) })
            .collect()
    }
}

pub fn comm_graph(sys: &TpvSystem) -> CommGraph {
    CommGraph {
        nodes: sys.cell_count(),
        edges: sys.rules.iter().map(|r| (r.source, r.target)).collect(),
    }
}

/// True iff the loop-free undirected graph is a tree spanning all cells.
pub fn is_hierarchical(sys: &TpvSystem) -> bool {
    let edges = comm_graph(sys).undirected();
    is_spanning_tree(sys.cell_count(), sys.init_cell, &edges)
}

pub(crate) fn is_spanning_tree(
    nodes: usize,
    root: CellId,
    edges: &BTreeSet<(CellId, CellId)>,
) -> bool {
    if edges.len() + 1 != nodes {
        return false;
    }
    let mut adj = vec![Vec::new(); nodes];
    for &(i, j) in edges {
        adj[i.index()].push(j.index());
        adj[j.index()].push(i.index());
    }
    let mut seen = vec![false; nodes];
    let mut stack = vec![root.index()];
    seen[root.index()] = true;
    let mut reached = 1;
    while let Some(n) = stack.pop() {
        for &m in &adj[n] {
            if !seen[m] {
                seen[m] = true;
                reached += 1;
                stack.push(m);
            }
        }
    }
    reached == nodes
}

/// True iff every cell uses at most one kind of point mutation.
pub fn is_hybrid(sys: &TpvSystem) -> bool {
    sys.cells().all(|c| {
        let kinds: BTreeSet<MutationKind> = sys.rules_of(c).map(|r| r.mutation.kind()).collect();
        kinds.len() <= 1
    })
}

/// A maximal same-target rule set applicable in smax mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmaxChoice {
    pub target: CellId,
    /// Indices into [`TpvSystem::rules`].
    pub rules: Vec<usize>,
}

/// Non-extendable, jointly applicable rule sets of the current cell, one
/// family per target cell.
pub fn smax_choices(sys: &TpvSystem, cfg: &VesicleConfig) -> Vec<SmaxChoice> {
    let mut targets: Vec<CellId> = Vec::new();
    for r in sys.rules_of(cfg.cell) {
        if !targets.contains(&r.target) {
            targets.push(r.target);
        }
    }
    let mut out = Vec::new();
    for target in targets {
        let group: Vec<usize> = sys.by_cell[cfg.cell.index()]
            .iter()
            .copied()
            .filter(|&i| sys.rules[i].target == target)
            .collect();
        let mutations: Vec<Mutation> = group.iter().map(|&i| sys.rules[i].mutation).collect();
        for subset in maximal_applicable_subsets(&cfg.content, &mutations) {
            out.push(SmaxChoice {
                target,
                rules: subset.into_iter().map(|k| group[k]).collect(),
            });
        }
    }
    out
}

/// One derivation step together with the rules it applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rules: Vec<usize>,
    pub next: VesicleConfig,
}

pub fn tpv_steps(sys: &TpvSystem, mode: DerivationMode, cfg: &VesicleConfig) -> Vec<Step> {
    match mode {
        DerivationMode::Sequ => sys.by_cell[cfg.cell.index()]
            .iter()
            .filter(|&&i| applicable(&cfg.content, sys.rules[i].mutation))
            .map(|&i| {
                let r = &sys.rules[i];
                let content = apply_one(&cfg.content, r.mutation).expect("checked applicable");
                Step {
                    rules: vec![i],
                    next: VesicleConfig::new(r.target, content),
                }
            })
            .collect(),
        DerivationMode::Smax => smax_choices(sys, cfg)
            .into_iter()
            .map(|choice| {
                let ms: Vec<Mutation> = choice
                    .rules
                    .iter()
                    .map(|&i| sys.rules[i].mutation)
                    .collect();
                let content =
                    apply_set(&cfg.content, &ms).expect("maximal sets are jointly applicable");
                Step {
                    rules: choice.rules,
                    next: VesicleConfig::new(choice.target, content),
                }
            })
            .collect(),
    }
}

/// Successor configurations; empty iff the configuration is halting.
pub fn tpv_successors(
    sys: &TpvSystem,
    mode: DerivationMode,
    cfg: &VesicleConfig,
) -> Vec<VesicleConfig> {
    let mut out: Vec<VesicleConfig> = tpv_steps(sys, mode, cfg)
        .into_iter()
        .map(|s| s.next)
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Result emitted when the vesicle sits in the output cell and the strategy
/// accepts it. Under `halt`, residual non-terminals are projected away and
/// flagged.
pub fn record_result(
    sys: &TpvSystem,
    strategy: OutputStrategy,
    cfg: &VesicleConfig,
    halting: bool,
) -> Option<Record> {
    if cfg.cell != sys.output_cell {
        return None;
    }
    let terminal_only = cfg.content.support().all(|s| sys.is_terminal(s));
    let accept = match strategy {
        OutputStrategy::Halt => halting,
        OutputStrategy::Term => terminal_only,
        OutputStrategy::HaltTerm => halting && terminal_only,
    };
    accept.then(|| Record {
        vector: parikh(&cfg.content, &sys.terminals),
        residue: !terminal_only,
    })
}

struct TpvSpace<'a> {
    sys: &'a TpvSystem,
    mode: DerivationMode,
    strategy: OutputStrategy,
}

impl Exploration for TpvSpace<'_> {
    type State = VesicleConfig;

    fn initial(&self) -> VesicleConfig {
        self.sys.initial_config()
    }

    fn expand(&self, s: &VesicleConfig) -> Expansion<VesicleConfig> {
        Expansion::of(tpv_successors(self.sys, self.mode, s))
    }

    fn size(&self, s: &VesicleConfig) -> u64 {
        s.content.size()
    }

    fn record(&self, s: &VesicleConfig, halting: bool) -> Option<Record> {
        record_result(self.sys, self.strategy, s, halting)
    }
}

pub fn tpv_enumerate(
    sys: &TpvSystem,
    mode: DerivationMode,
    strategy: OutputStrategy,
    budget: &SearchBudget,
    workers: usize,
) -> ResultSet {
    closure(
        &TpvSpace {
            sys,
            mode,
            strategy,
        },
        budget,
        workers,
    )
}

/// A result vector with the derivation that produced it.
pub type Witness = (Vec<u64>, Vec<VesicleConfig>);

/// Enumeration plus one witness derivation per result vector.
pub fn tpv_enumerate_traced(
    sys: &TpvSystem,
    mode: DerivationMode,
    strategy: OutputStrategy,
    budget: &SearchBudget,
    workers: usize,
) -> (ResultSet, Vec<Witness>) {
    let w = closure_with_witnesses(
        &TpvSpace {
            sys,
            mode,
            strategy,
        },
        budget,
        workers,
    );
    (w.results, w.witnesses)
}
