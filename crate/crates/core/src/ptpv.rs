//! Polarized tissue P systems on vesicles.
//!
//! A derivation step has two substeps: evolution (rules applied according to
//! the derivation mode, possibly none) and communication (the vesicle moves
//! to a neighboring cell whose polarization equals the sign of the evolved
//! multiset, never staying where it is). A vesicle with nowhere to go is
//! eliminated and its branch ends.

use std::collections::BTreeSet;

use crate::multiset::{
    applicable, apply_one, apply_set, evaluate_sum, maximal_applicable_subsets, sign, Alphabet,
    CellId, Multiset, Mutation, Polarity, PolarizationTable, Symbol,
};
use crate::search::{
    closure, closure_with_witnesses, Expansion, Exploration, Record, ResultSet, SearchBudget,
};
use crate::tpv::{
    comm_graph, record_result, DerivationMode, OutputStrategy, SystemError, TpvRule, TpvSystem,
    VesicleConfig, Witness,
};

/// Evaluation of a multiset's polarization. Only the sum is provided.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Evaluation {
    #[default]
    Sum,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Communication {
    /// Movement restricted to the out-neighbors given by rule targets.
    Directed,
    /// Movement along an undirected graph; rules carry no target.
    Undirected {
        /// Edges `{i, j}` stored with `i <= j`.
        edges: BTreeSet<(CellId, CellId)>,
        /// Declared `(cell, mutation)` rules.
        rules: Vec<(CellId, Mutation)>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PtpvSystem {
    base: TpvSystem,
    pol: PolarizationTable,
    eval: Evaluation,
    comm: Communication,
    // per cell: rule groups for smax (one per target, or one in total when undirected)
    groups: Vec<Vec<Vec<Mutation>>>,
    neighbors: Vec<Vec<CellId>>,
}

fn polarization_error(msg: String) -> SystemError {
    SystemError::Polarization(msg)
}

impl PtpvSystem {
    /// Polarized system whose movement follows the rule targets of `base`.
    pub fn directed(base: TpvSystem, pol: PolarizationTable) -> Result<Self, SystemError> {
        let graph = comm_graph(&base);
        let neighbors = base
            .cells()
            .map(|c| {
                let mut out: Vec<CellId> = graph.out_neighbors(c).filter(|&j| j != c).collect();
                out.sort();
                out.dedup();
                out
            })
            .collect();
        let groups = base
            .cells()
            .map(|c| {
                let mut targets: Vec<CellId> = Vec::new();
                for r in base.rules_of(c) {
                    if !targets.contains(&r.target) {
                        targets.push(r.target);
                    }
                }
                targets
                    .into_iter()
                    .map(|t| {
                        base.rules_of(c)
                            .filter(|r| r.target == t)
                            .map(|r| r.mutation)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let sys = PtpvSystem {
            base,
            pol,
            eval: Evaluation::Sum,
            comm: Communication::Directed,
            groups,
            neighbors,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Polarized system with an undirected communication graph `edges` and
    /// targetless rules.
    #[allow(clippy::too_many_arguments)]
    pub fn undirected(
        cells: Vec<String>,
        alphabet: Alphabet,
        terminals: Vec<Symbol>,
        rules: Vec<(CellId, Mutation)>,
        edges: Vec<(CellId, CellId)>,
        init_cell: CellId,
        init_multiset: Multiset,
        output_cell: CellId,
        pol: PolarizationTable,
    ) -> Result<Self, SystemError> {
        let n = cells.len();
        let mut normalized = BTreeSet::new();
        for (i, j) in edges {
            for c in [i, j] {
                if c.index() >= n {
                    return Err(SystemError::UnknownCell(c.index()));
                }
            }
            normalized.insert(if i <= j { (i, j) } else { (j, i) });
        }
        let mut declared: Vec<(CellId, Mutation)> = Vec::new();
        for r in rules {
            if r.0.index() >= n {
                return Err(SystemError::UnknownCell(r.0.index()));
            }
            if !declared.contains(&r) {
                declared.push(r);
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &normalized {
            if i != j {
                neighbors[i.index()].push(j);
                neighbors[j.index()].push(i);
            }
        }
        for list in &mut neighbors {
            list.sort();
            list.dedup();
        }
        let expanded: Vec<TpvRule> = declared
            .iter()
            .flat_map(|&(source, mutation)| {
                neighbors[source.index()]
                    .iter()
                    .map(move |&target| TpvRule {
                        source,
                        mutation,
                        target,
                    })
            })
            .collect();
        let base = TpvSystem::new(
            cells,
            alphabet,
            terminals,
            expanded,
            init_cell,
            init_multiset,
            output_cell,
        )?;
        for &(_, m) in &declared {
            for s in m.symbols() {
                if !base.alphabet().contains(s) {
                    return Err(SystemError::UnknownSymbol(s.index()));
                }
            }
        }
        let groups = (0..n)
            .map(|c| {
                let own: Vec<Mutation> = declared
                    .iter()
                    .filter(|r| r.0.index() == c)
                    .map(|r| r.1)
                    .collect();
                if own.is_empty() {
                    Vec::new()
                } else {
                    vec![own]
                }
            })
            .collect();
        let sys = PtpvSystem {
            base,
            pol,
            eval: Evaluation::Sum,
            comm: Communication::Undirected {
                edges: normalized,
                rules: declared,
            },
            groups,
            neighbors,
        };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<(), SystemError> {
        let base = &self.base;
        if self.pol.cell_count() != base.cell_count() {
            return Err(polarization_error(format!(
                "{} cell polarizations for {} cells",
                self.pol.cell_count(),
                base.cell_count()
            )));
        }
        if self.pol.symbol_count() != base.alphabet().len() {
            return Err(polarization_error(format!(
                "{} symbol polarizations for {} symbols",
                self.pol.symbol_count(),
                base.alphabet().len()
            )));
        }
        for &t in base.terminals() {
            if self.pol.symbol(t) != Some(Polarity::Neutral) {
                return Err(polarization_error(format!(
                    "terminal symbol {:?} must have polarization 0",
                    base.alphabet().name(t)
                )));
            }
        }
        if self.pol.cell(base.output_cell()) != Some(Polarity::Neutral) {
            return Err(polarization_error(format!(
                "output cell {:?} must have polarization 0",
                base.cell_name(base.output_cell())
            )));
        }
        let init_value = evaluate_sum(base.init_multiset(), &self.pol)
            .map_err(|e| polarization_error(e.to_string()))?;
        let cell_pol = self.pol.cell(base.init_cell());
        if cell_pol != Some(sign(init_value)) {
            return Err(polarization_error(format!(
                "initial multiset has sign {} but cell {:?} has polarization {}",
                sign(init_value).as_str(),
                base.cell_name(base.init_cell()),
                cell_pol.map_or("?", Polarity::as_str)
            )));
        }
        Ok(())
    }

    pub fn base(&self) -> &TpvSystem {
        &self.base
    }

    pub fn polarization(&self) -> &PolarizationTable {
        &self.pol
    }

    pub fn evaluation(&self) -> Evaluation {
        self.eval
    }

    pub fn communication(&self) -> &Communication {
        &self.comm
    }

    pub fn is_undirected(&self) -> bool {
        matches!(self.comm, Communication::Undirected { .. })
    }

    pub fn cell_polarity(&self, c: CellId) -> Polarity {
        self.pol.cell(c).expect("validated table covers all cells")
    }

    /// Cells the vesicle may move to from `from` (rule targets or graph
    /// neighbors), regardless of polarization; never `from` itself.
    pub fn neighbors(&self, from: CellId) -> &[CellId] {
        &self.neighbors[from.index()]
    }

    /// Distinct mutations available in `cell`, in declaration order.
    pub fn mutations_of(&self, cell: CellId) -> Vec<Mutation> {
        let mut out: Vec<Mutation> = Vec::new();
        for m in self.groups[cell.index()].iter().flatten() {
            if !out.contains(m) {
                out.push(*m);
            }
        }
        out
    }

    pub fn value(&self, w: &Multiset) -> i64 {
        match self.eval {
            Evaluation::Sum => {
                evaluate_sum(w, &self.pol).expect("validated table covers the alphabet")
            }
        }
    }
}

/// Evolved multiset together with the mutations that produced it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Evolution {
    pub applied: Vec<Mutation>,
    pub content: Multiset,
}

/// Evolution substep. The applied rule set is empty exactly when no rule
/// of the cell is applicable; otherwise sequ applies one rule and smax a
/// maximal same-group set.
pub fn evolutions(sys: &PtpvSystem, mode: DerivationMode, cfg: &VesicleConfig) -> Vec<Evolution> {
    let w = &cfg.content;
    let mut out: Vec<Evolution> = match mode {
        DerivationMode::Sequ => sys
            .mutations_of(cfg.cell)
            .into_iter()
            .filter(|&m| applicable(w, m))
            .map(|m| Evolution {
                applied: vec![m],
                content: apply_one(w, m).expect("checked applicable"),
            })
            .collect(),
        DerivationMode::Smax => sys.groups[cfg.cell.index()]
            .iter()
            .flat_map(|group| {
                maximal_applicable_subsets(w, group)
                    .into_iter()
                    .map(move |subset| {
                        let applied: Vec<Mutation> = subset.iter().map(|&k| group[k]).collect();
                        let content =
                            apply_set(w, &applied).expect("maximal sets are jointly applicable");
                        Evolution { applied, content }
                    })
            })
            .collect(),
    };
    if out.is_empty() {
        out.push(Evolution {
            applied: Vec::new(),
            content: w.clone(),
        });
    }
    out.sort();
    out.dedup();
    out
}

pub fn evolution_substep(
    sys: &PtpvSystem,
    mode: DerivationMode,
    cfg: &VesicleConfig,
) -> Vec<Multiset> {
    let mut out: Vec<Multiset> = evolutions(sys, mode, cfg)
        .into_iter()
        .map(|e| e.content)
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Neighbors of `from` whose polarization equals the sign of `w`.
pub fn candidate_cells(sys: &PtpvSystem, from: CellId, w: &Multiset) -> Vec<CellId> {
    let s = sign(sys.value(w));
    sys.neighbors(from)
        .iter()
        .copied()
        .filter(|&j| j != from && sys.cell_polarity(j) == s)
        .collect()
}

/// One two-substep derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarizedStep {
    pub applied: Vec<Mutation>,
    pub next: VesicleConfig,
}

/// Labelled successors plus the number of evolved multisets that were eliminated.
pub fn ptpv_steps(
    sys: &PtpvSystem,
    mode: DerivationMode,
    cfg: &VesicleConfig,
) -> (Vec<PolarizedStep>, u64) {
    let mut steps = Vec::new();
    let mut eliminated = 0;
    for evo in evolutions(sys, mode, cfg) {
        let targets = candidate_cells(sys, cfg.cell, &evo.content);
        if targets.is_empty() {
            eliminated += 1;
        }
        for j in targets {
            steps.push(PolarizedStep {
                applied: evo.applied.clone(),
                next: VesicleConfig::new(j, evo.content.clone()),
            });
        }
    }
    (steps, eliminated)
}

pub fn ptpv_successors(
    sys: &PtpvSystem,
    mode: DerivationMode,
    cfg: &VesicleConfig,
) -> Vec<VesicleConfig> {
    let mut out: Vec<VesicleConfig> = ptpv_steps(sys, mode, cfg)
        .0
        .into_iter()
        .map(|s| s.next)
        .collect();
    out.sort();
    out.dedup();
    out
}

struct PtpvSpace<'a> {
    sys: &'a PtpvSystem,
    mode: DerivationMode,
    strategy: OutputStrategy,
}

impl Exploration for PtpvSpace<'_> {
    type State = VesicleConfig;

    fn initial(&self) -> VesicleConfig {
        self.sys.base.initial_config()
    }

    fn expand(&self, s: &VesicleConfig) -> Expansion<VesicleConfig> {
        let (steps, eliminated) = ptpv_steps(self.sys, self.mode, s);
        Expansion {
            successors: steps.into_iter().map(|st| st.next).collect(),
            eliminated,
        }
    }

    fn size(&self, s: &VesicleConfig) -> u64 {
        s.content.size()
    }

    fn record(&self, s: &VesicleConfig, halting: bool) -> Option<Record> {
        record_result(&self.sys.base, self.strategy, s, halting)
    }
}

pub fn ptpv_enumerate(
    sys: &PtpvSystem,
    mode: DerivationMode,
    strategy: OutputStrategy,
    budget: &SearchBudget,
    workers: usize,
) -> ResultSet {
    closure(
        &PtpvSpace {
            sys,
            mode,
            strategy,
        },
        budget,
        workers,
    )
}

pub fn ptpv_enumerate_traced(
    sys: &PtpvSystem,
    mode: DerivationMode,
    strategy: OutputStrategy,
    budget: &SearchBudget,
    workers: usize,
) -> (ResultSet, Vec<Witness>) {
    let w = closure_with_witnesses(
        &PtpvSpace {
            sys,
            mode,
            strategy,
        },
        budget,
        workers,
    );
    (w.results, w.witnesses)
}
