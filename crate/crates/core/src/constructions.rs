//! Compilers between register machines and vesicle systems, and the budget
//! mapping used to compare a machine with its compiled system.
//!
//! Compiled cell names are structured strings: `0`, `h`, `r:2`, `rm:2`,
//! `r0:2` for the vesicle systems built from machines, and `0`, `0'`, `00`,
//! `0-`, `lh`, `lh~`, `r+:2`, `r+~:2`, `r0:2`, `r0~:2`, `r-:2`, `r-~:2`,
//! `r-bar:2` for the polarized one.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::multiset::{
    valid_symbol_name, Alphabet, CellId, Multiset, Mutation, Polarity, PolarizationTable, Symbol,
};
use crate::ptpv::{ptpv_enumerate, PtpvSystem};
use crate::regmach::{
    machine_enumerate, machine_enumerate_weighted, Instruction, InstructionCosts, Label,
    MachineError, MachineKind, MachineProgram, ProgramBuilder,
};
use crate::search::{ResultSet, SearchBudget};
use crate::tpv::{tpv_enumerate, DerivationMode, OutputStrategy, SystemError, TpvRule, TpvSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Construction {
    /// General machine to a hierarchical system run in `smax` mode.
    Thm1,
    /// Partially blind machine to a hierarchical system run in `sequ` mode.
    Thm2,
    /// Sequential system to a partially blind machine.
    Thm4,
    /// General machine to an undirected polarized system run in `sequ` mode.
    Thm5,
}

impl Construction {
    pub const ALL: [Construction; 4] = [
        Construction::Thm1,
        Construction::Thm2,
        Construction::Thm4,
        Construction::Thm5,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Construction::Thm1 => "thm1",
            Construction::Thm2 => "thm2",
            Construction::Thm4 => "thm4",
            Construction::Thm5 => "thm5",
        }
    }

    /// Strategy used when none is requested.
    pub fn default_strategy(self) -> OutputStrategy {
        match self {
            Construction::Thm1 => OutputStrategy::HaltTerm,
            Construction::Thm2 | Construction::Thm4 | Construction::Thm5 => OutputStrategy::Term,
        }
    }

    /// Derivation mode of the system side.
    pub fn mode(self) -> DerivationMode {
        match self {
            Construction::Thm1 => DerivationMode::Smax,
            _ => DerivationMode::Sequ,
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Construction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Construction::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| {
                format!("unknown construction {s:?} (expected thm1, thm2, thm4 or thm5)")
            })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("expected a {expected} program")]
    WrongKind { expected: &'static str },
    #[error("label {label:?} decrements output register {register}")]
    OutputDecremented { label: String, register: usize },
    #[error("label {0:?} cannot be used as a symbol")]
    InvalidSymbol(String),
    #[error("name {0:?} is generated twice")]
    NameClash(String),
    #[error("label {0:?} carries both ADD and SUB instructions")]
    MixedLabel(String),
    #[error("system has no terminal symbols")]
    NoTerminals,
    #[error("construction {0} does not apply here")]
    Unsupported(Construction),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Hops a compiled system spends per simulated instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetMap {
    pub add: u32,
    pub sub_decrement: u32,
    pub sub_zero: u32,
    /// Hops from the halt label at cell `0` to the output cell.
    pub closing: u32,
}

impl BudgetMap {
    /// `None` for constructions that do not start from a machine.
    pub fn of(construction: Construction) -> Option<BudgetMap> {
        match construction {
            Construction::Thm1 | Construction::Thm2 => Some(BudgetMap {
                add: 2,
                sub_decrement: 2,
                sub_zero: 2,
                closing: 1,
            }),
            Construction::Thm5 => Some(BudgetMap {
                add: 4,
                sub_decrement: 5,
                sub_zero: 4,
                closing: 2,
            }),
            Construction::Thm4 => None,
        }
    }

    pub fn max_instruction(&self) -> u32 {
        self.add.max(self.sub_decrement).max(self.sub_zero)
    }

    /// The map as machine instruction costs; HALT costs the closing hops.
    pub fn costs(&self) -> InstructionCosts {
        InstructionCosts {
            add: self.add,
            sub_decrement: self.sub_decrement,
            sub_zero: self.sub_zero,
            halt: self.closing,
        }
    }

    /// System steps needed for a machine run of `steps` steps (HALT included).
    pub fn system_steps(&self, steps: u64) -> u64 {
        match steps {
            0 => self.closing as u64,
            n => (self.max_instruction() as u64)
                .saturating_mul(n - 1)
                .saturating_add(self.closing as u64),
        }
    }
}

/// System-side budget admitting every run the machine budget admits.
///
/// The state size grows by one for the label symbol the vesicle carries.
pub fn matched_budgets(construction: Construction, machine: &SearchBudget) -> SearchBudget {
    match BudgetMap::of(construction) {
        None => *machine,
        Some(map) => SearchBudget {
            max_steps: map.system_steps(machine.max_steps),
            max_state_size: machine.max_state_size.saturating_add(1),
            max_states: machine.max_states,
        },
    }
}

/// Checks machine labels can serve as symbols next to `reserved` names.
fn label_symbols(p: &MachineProgram, reserved: &[String]) -> Result<(), CompileError> {
    let mut seen: HashSet<&str> = reserved.iter().map(String::as_str).collect();
    for l in p.labels() {
        let name = p.label_name(l);
        if !valid_symbol_name(name) {
            return Err(CompileError::InvalidSymbol(name.to_string()));
        }
        if !seen.insert(name) {
            return Err(CompileError::NameClash(name.to_string()));
        }
    }
    Ok(())
}

struct SystemBuilder {
    cells: Vec<String>,
    alphabet: Alphabet,
    rules: Vec<TpvRule>,
}

impl SystemBuilder {
    fn new(cells: Vec<String>) -> Self {
        SystemBuilder {
            cells,
            alphabet: Alphabet::new(),
            rules: Vec::new(),
        }
    }

    fn cell(&self, name: &str) -> CellId {
        CellId::new(
            self.cells
                .iter()
                .position(|c| c == name)
                .expect("cell declared"),
        )
    }

    fn sym(&self, name: &str) -> Symbol {
        self.alphabet.get(name).expect("symbol declared")
    }

    fn rule(&mut self, src: &str, mutation: Mutation, tgt: &str) {
        let (source, target) = (self.cell(src), self.cell(tgt));
        self.rules.push(TpvRule {
            source,
            mutation,
            target,
        });
    }

    fn subst(&mut self, src: &str, a: &str, b: &str, tgt: &str) {
        let m = Mutation::Substitute(self.sym(a), self.sym(b));
        self.rule(src, m, tgt);
    }
}

/// Register symbol `a<r>`.
fn reg_symbol(r: usize) -> String {
    format!("a{r}")
}

/// Shared skeleton of the two hierarchical constructions.
fn compile_hierarchical(
    p: &MachineProgram,
    strategy: OutputStrategy,
    blind: bool,
) -> Result<TpvSystem, CompileError> {
    let (m, k) = (p.registers(), p.outputs());
    for (l, ins) in p.instructions() {
        if let Instruction::Sub { register, .. } | Instruction::SubBlind { register, .. } = ins {
            if register <= k {
                return Err(CompileError::OutputDecremented {
                    label: p.label_name(l).to_string(),
                    register,
                });
            }
        }
    }
    let mut reserved: Vec<String> = (1..=m).map(reg_symbol).collect();
    reserved.push("#".to_string());
    label_symbols(p, &reserved)?;

    let mut cells = vec!["0".to_string()];
    for r in 1..=m {
        cells.push(format!("r:{r}"));
        if r > k {
            cells.push(format!("rm:{r}"));
            if !blind {
                cells.push(format!("r0:{r}"));
            }
        }
    }
    cells.push("h".to_string());
    let mut b = SystemBuilder::new(cells);
    for l in p.labels() {
        b.alphabet
            .intern(p.label_name(l))
            .map_err(|_| CompileError::InvalidSymbol(p.label_name(l).to_string()))?;
    }
    for name in &reserved {
        b.alphabet.intern(name).expect("generated names are valid");
    }
    let name = |l: Label| p.label_name(l).to_string();
    for (l, ins) in p.instructions() {
        let at = name(l);
        match ins {
            Instruction::Add {
                register,
                next,
                alt,
            } => {
                let cell = format!("r:{register}");
                b.subst("0", &at, &name(next), &cell);
                b.subst("0", &at, &name(alt), &cell);
                let a = b.sym(&reg_symbol(register));
                b.rule(&cell, Mutation::Insert(a), "0");
            }
            Instruction::Sub {
                register,
                next,
                zero,
            } => {
                let (minus, zero_cell) = (format!("rm:{register}"), format!("r0:{register}"));
                let a = reg_symbol(register);
                b.subst("0", &at, &name(next), &minus);
                b.subst("0", &at, &name(zero), &zero_cell);
                let del = Mutation::Delete(b.sym(&a));
                b.rule(&minus, del, "0");
                b.subst(&zero_cell, &name(zero), &name(zero), "0");
                b.subst(&zero_cell, &a, "#", "0");
            }
            Instruction::SubBlind { register, next } => {
                let minus = format!("rm:{register}");
                b.subst("0", &at, &name(next), &minus);
                let del = Mutation::Delete(b.sym(&reg_symbol(register)));
                b.rule(&minus, del, "0");
            }
            Instruction::Halt => {}
        }
    }
    let halt = name(p.halt_label());
    let del = Mutation::Delete(b.sym(&halt));
    b.rule("0", del, "h");
    if strategy != OutputStrategy::Term {
        b.subst("h", "#", "#", "0");
        b.subst("0", "#", "#", "h");
        if blind {
            for r in k + 1..=m {
                b.subst("h", &reg_symbol(r), "#", "0");
            }
        }
    }
    let terminals: Vec<Symbol> = (1..=k).map(|r| b.sym(&reg_symbol(r))).collect();
    let init = Multiset::from_symbols([b.sym(&name(p.init()))]);
    let (zero, h) = (b.cell("0"), b.cell("h"));
    Ok(TpvSystem::new(
        b.cells, b.alphabet, terminals, b.rules, zero, init, h,
    )?)
}

/// General machine to a system generating the same vectors in `smax` mode.
///
/// Trap rules for the `#` loop are only emitted for `halt` and `halt-term`.
pub fn compile_rm_to_pv_smax(
    p: &MachineProgram,
    strategy: OutputStrategy,
) -> Result<TpvSystem, CompileError> {
    if p.kind() != MachineKind::General {
        return Err(CompileError::WrongKind {
            expected: "general",
        });
    }
    compile_hierarchical(p, strategy, false)
}

/// Partially blind machine to a system generating the same vectors in
/// `sequ` mode.
pub fn compile_pbrm_to_pv_sequ(
    p: &MachineProgram,
    strategy: OutputStrategy,
) -> Result<TpvSystem, CompileError> {
    if p.kind() != MachineKind::PartiallyBlind {
        return Err(CompileError::WrongKind {
            expected: "partially blind",
        });
    }
    compile_hierarchical(p, strategy, true)
}

/// Picks `base`, or `base` with a numeric suffix, avoiding `taken`.
fn fresh(taken: &mut HashSet<String>, base: &str) -> String {
    let mut name = base.to_string();
    let mut n = 1;
    while taken.contains(&name) {
        name = format!("{base}{n}");
        n += 1;
    }
    taken.insert(name.clone());
    name
}

/// Sequential system (term strategy) to a relaxed partially blind machine.
///
/// Registers list the terminals first, then the other symbols in alphabet
/// order. Cell names become labels; each substitution gets an intermediate
/// label, and the output cell hands over to a fresh ADD/SUB/HALT tail.
pub fn compile_tpv_to_pbrm(sys: &TpvSystem) -> Result<MachineProgram, CompileError> {
    let terminals = sys.terminals();
    if terminals.is_empty() {
        return Err(CompileError::NoTerminals);
    }
    let mut order: Vec<Symbol> = terminals.to_vec();
    order.extend(sys.alphabet().symbols().filter(|s| !sys.is_terminal(*s)));
    let reg = |s: Symbol| {
        order
            .iter()
            .position(|&t| t == s)
            .expect("symbol in alphabet")
            + 1
    };

    let mut taken: HashSet<String> = sys.cells().map(|c| sys.cell_name(c).to_string()).collect();
    let mut b = ProgramBuilder::new();
    for c in sys.cells() {
        b.label(sys.cell_name(c));
    }
    for r in sys.rules() {
        let (src, tgt) = (sys.cell_name(r.source), sys.cell_name(r.target));
        match r.mutation {
            Mutation::Insert(x) => {
                b.add(src, reg(x), tgt, tgt);
            }
            Mutation::Delete(x) => {
                b.sub_blind(src, reg(x), tgt);
            }
            Mutation::Substitute(x, y) => {
                let mid = fresh(&mut taken, &format!("{src}'"));
                b.sub_blind(src, reg(x), &mid);
                b.add(&mid, reg(y), tgt, tgt);
            }
        }
    }
    let out = sys.cell_name(sys.output_cell());
    let tilde = fresh(&mut taken, &format!("{out}~"));
    let hat = fresh(&mut taken, &format!("{out}^"));
    b.add(out, 1, &tilde, &tilde);
    b.sub_blind(&tilde, 1, &hat);
    b.halt(&hat);

    let start = sys.cell_name(sys.init_cell()).to_string();
    let loads: Vec<Symbol> = sys
        .init_multiset()
        .iter()
        .flat_map(|(s, n)| std::iter::repeat_n(s, n as usize))
        .collect();
    let chain: Vec<String> = loads.iter().map(|_| fresh(&mut taken, "load")).collect();
    for (i, &s) in loads.iter().enumerate() {
        let next = chain.get(i + 1).unwrap_or(&start).clone();
        b.add(&chain[i], reg(s), &next, &next);
    }
    let init = chain.first().unwrap_or(&start).clone();
    Ok(b.build(
        MachineKind::PartiallyBlind,
        order.len(),
        terminals.len(),
        &init,
    )?)
}

fn plus(name: &str) -> String {
    format!("{name}+")
}

fn minus(name: &str) -> String {
    format!("{name}-")
}

/// General machine to an undirected polarized system generating the same
/// vectors in `sequ` mode under the `term` strategy.
pub fn compile_rm_to_uptpv(p: &MachineProgram) -> Result<PtpvSystem, CompileError> {
    if p.kind() != MachineKind::General {
        return Err(CompileError::WrongKind {
            expected: "general",
        });
    }
    for l in p.labels() {
        let set = p.instructions_at(l);
        let adds = set.iter().any(|i| matches!(i, Instruction::Add { .. }));
        let subs = set.iter().any(|i| matches!(i, Instruction::Sub { .. }));
        if adds && subs {
            return Err(CompileError::MixedLabel(p.label_name(l).to_string()));
        }
    }
    let m = p.registers();
    let mut names: Vec<(String, Polarity)> = Vec::new();
    for r in 1..=m {
        let a = reg_symbol(r);
        names.push((plus(&a), Polarity::Positive));
        names.push((minus(&a), Polarity::Negative));
        names.push((a, Polarity::Neutral));
    }
    let reserved: Vec<String> = names.iter().map(|(n, _)| n.clone()).collect();
    label_symbols(p, &reserved)?;
    let mut seen: HashSet<String> = reserved.into_iter().collect();
    for l in p.labels() {
        let name = p.label_name(l);
        for (n, pol) in [
            (name.to_string(), Polarity::Neutral),
            (plus(name), Polarity::Positive),
            (minus(name), Polarity::Negative),
        ] {
            if !seen.insert(n.clone()) {
                return Err(CompileError::NameClash(n));
            }
            names.push((n, pol));
        }
    }
    let mut alphabet = Alphabet::new();
    let mut symbol_pols = Vec::new();
    for (n, pol) in &names {
        alphabet
            .intern(n)
            .map_err(|_| CompileError::InvalidSymbol(n.clone()))?;
        symbol_pols.push(*pol);
    }
    // interning order equals `names` order, so `symbol_pols` is indexed by symbol

    let mut cells: Vec<(String, Polarity)> = ["0", "0'", "00", "0-", "lh", "lh~"]
        .iter()
        .map(|c| (c.to_string(), Polarity::Neutral))
        .collect();
    for r in 1..=m {
        for (c, pol) in [
            ("r+", Polarity::Positive),
            ("r+~", Polarity::Positive),
            ("r0", Polarity::Negative),
            ("r0~", Polarity::Negative),
            ("r-", Polarity::Positive),
            ("r-~", Polarity::Neutral),
            ("r-bar", Polarity::Negative),
        ] {
            cells.push((format!("{c}:{r}"), pol));
        }
    }
    let cell = |name: &str| {
        CellId::new(
            cells
                .iter()
                .position(|(c, _)| c == name)
                .expect("cell declared"),
        )
    };
    let sym = |name: &str| alphabet.get(name).expect("symbol declared");

    let mut edges = vec![
        (cell("0"), cell("0'")),
        (cell("0"), cell("00")),
        (cell("0"), cell("0-")),
        (cell("0"), cell("lh")),
    ];
    edges.push((cell("lh"), cell("lh~")));
    for r in 1..=m {
        let c = |base: &str| cell(&format!("{base}:{r}"));
        edges.extend([
            (cell("0'"), c("r+")),
            (c("r+"), c("r+~")),
            (c("r+~"), cell("0")),
            (cell("0"), c("r0")),
            (c("r0"), c("r0~")),
            (c("r0~"), cell("00")),
            (cell("0"), c("r-")),
            (c("r-"), c("r-~")),
            (c("r-~"), c("r-bar")),
            (c("r-bar"), cell("0-")),
        ]);
    }

    let mut rules: Vec<(CellId, Mutation)> = Vec::new();
    let subst = |a: &str, b: &str| Mutation::Substitute(sym(a), sym(b));
    let name = |l: Label| p.label_name(l).to_string();
    for (l, ins) in p.instructions() {
        let at = name(l);
        match ins {
            Instruction::Add {
                register,
                next,
                alt,
            } => {
                rules.push((cell("0"), subst(&at, &at)));
                rules.push((cell("0'"), subst(&at, &plus(&at))));
                let tilde = cell(&format!("r+~:{register}"));
                rules.push((tilde, subst(&plus(&at), &name(next))));
                rules.push((tilde, subst(&plus(&at), &name(alt))));
            }
            Instruction::Sub {
                register,
                next,
                zero,
            } => {
                rules.push((cell("0"), subst(&at, &plus(&at))));
                rules.push((cell("0"), subst(&at, &minus(&at))));
                rules.push((
                    cell(&format!("r0~:{register}")),
                    subst(&minus(&at), &name(zero)),
                ));
                rules.push((
                    cell(&format!("r-~:{register}")),
                    subst(&plus(&at), &name(next)),
                ));
            }
            Instruction::SubBlind { .. } | Instruction::Halt => {}
        }
    }
    let halt = name(p.halt_label());
    rules.push((cell("0"), subst(&halt, &halt)));
    rules.push((cell("lh"), Mutation::Delete(sym(&halt))));
    for r in 1..=m {
        let a = reg_symbol(r);
        rules.push((cell(&format!("r+:{r}")), Mutation::Insert(sym(&a))));
        rules.push((cell(&format!("r0:{r}")), subst(&a, &plus(&a))));
        rules.push((cell(&format!("r-:{r}")), subst(&a, &minus(&a))));
        rules.push((
            cell(&format!("r-bar:{r}")),
            Mutation::Delete(sym(&minus(&a))),
        ));
    }
    rules.sort_by_key(|(c, _)| *c);

    let terminals: Vec<Symbol> = (1..=p.outputs()).map(|r| sym(&reg_symbol(r))).collect();
    let init = Multiset::from_symbols([sym(&name(p.init()))]);
    let (zero, out) = (cell("0"), cell("lh~"));
    let pol = PolarizationTable::new(cells.iter().map(|(_, pol)| *pol).collect(), symbol_pols);
    let cell_names = cells.into_iter().map(|(c, _)| c).collect();
    Ok(PtpvSystem::undirected(
        cell_names, alphabet, terminals, rules, edges, zero, init, out, pol,
    )?)
}

/// Outcome of running a machine (or system) against its compiled form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub construction: Construction,
    /// Reference run: the source machine, or the compiled machine for `thm4`.
    pub reference: ResultSet,
    /// The exact set the compiled side must produce under `system_budget`.
    pub expected: ResultSet,
    pub system: ResultSet,
    pub system_budget: SearchBudget,
    /// Both sides must be complete (used when comparing a system with its
    /// compiled machine).
    pub require_complete: bool,
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        let exact = self.system.vectors == self.expected.vectors;
        let covered = self.reference.vectors.is_subset(&self.system.vectors);
        let complete =
            !self.require_complete || (self.reference.complete() && self.system.complete());
        exact && covered && complete
    }

    /// Vectors expected but not produced by the system side.
    pub fn missing(&self) -> BTreeSet<Vec<u64>> {
        let want: BTreeSet<Vec<u64>> = self
            .expected
            .vectors
            .union(&self.reference.vectors)
            .cloned()
            .collect();
        want.difference(&self.system.vectors).cloned().collect()
    }

    /// Vectors the system side produced beyond the expected set.
    pub fn unexpected(&self) -> BTreeSet<Vec<u64>> {
        self.system
            .vectors
            .difference(&self.expected.vectors)
            .cloned()
            .collect()
    }
}

/// Compiles `p` and compares both sides.
///
/// The system runs under [`matched_budgets`]; its result set must equal the
/// machine's run with instruction costs from the [`BudgetMap`] under the same
/// step bound and the machine's size bound, and must contain every vector of
/// the plain machine run under `machine_budget`.
pub fn compare_machine(
    construction: Construction,
    p: &MachineProgram,
    strategy: Option<OutputStrategy>,
    machine_budget: &SearchBudget,
    workers: usize,
) -> Result<Comparison, CompileError> {
    let map = BudgetMap::of(construction).ok_or(CompileError::Unsupported(construction))?;
    let strategy = strategy.unwrap_or(construction.default_strategy());
    let system_budget = matched_budgets(construction, machine_budget);
    let system = match construction {
        Construction::Thm1 => {
            let sys = compile_rm_to_pv_smax(p, strategy)?;
            tpv_enumerate(
                &sys,
                DerivationMode::Smax,
                strategy,
                &system_budget,
                workers,
            )
        }
        Construction::Thm2 => {
            let sys = compile_pbrm_to_pv_sequ(p, strategy)?;
            tpv_enumerate(
                &sys,
                DerivationMode::Sequ,
                strategy,
                &system_budget,
                workers,
            )
        }
        Construction::Thm5 => {
            let sys = compile_rm_to_uptpv(p)?;
            ptpv_enumerate(
                &sys,
                DerivationMode::Sequ,
                strategy,
                &system_budget,
                workers,
            )
        }
        Construction::Thm4 => unreachable!("no budget map"),
    };
    let weighted_budget = SearchBudget {
        max_steps: system_budget.max_steps,
        ..*machine_budget
    };
    let expected = machine_enumerate_weighted(p, &map.costs(), &weighted_budget, workers);
    let reference = machine_enumerate(p, machine_budget, workers);
    Ok(Comparison {
        construction,
        reference,
        expected,
        system,
        system_budget,
        require_complete: false,
    })
}

/// Compiles a sequential system to a machine and compares the `sequ`/`term`
/// results with the machine's; both runs must be complete under `budget`.
pub fn compare_system(
    sys: &TpvSystem,
    budget: &SearchBudget,
    workers: usize,
) -> Result<Comparison, CompileError> {
    let p = compile_tpv_to_pbrm(sys)?;
    let reference = machine_enumerate(&p, budget, workers);
    let system = tpv_enumerate(
        sys,
        DerivationMode::Sequ,
        OutputStrategy::Term,
        budget,
        workers,
    );
    Ok(Comparison {
        construction: Construction::Thm4,
        expected: reference.clone(),
        reference,
        system,
        system_budget: *budget,
        require_complete: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tpv::{is_hierarchical, is_hybrid};

    fn budget(steps: u64, size: u64) -> SearchBudget {
        SearchBudget::new(steps, size, 1_000_000).unwrap()
    }

    fn counter(k: usize) -> MachineProgram {
        // k outputs, two working registers, all registers used
        let mut b = ProgramBuilder::new();
        let mut at = "l0".to_string();
        for r in 1..=k {
            let next = format!("o{r}");
            b.add(&at, r, &next, &next);
            at = next;
        }
        b.add(&at, k + 1, "w1", "w1");
        b.sub("w1", k + 1, "w2", "w2");
        b.add("w2", k + 2, "w3", "w3");
        b.sub("w3", k + 2, "lh", "lh");
        b.halt("lh");
        b.build(MachineKind::General, k + 2, k, "l0").unwrap()
    }

    #[test]
    fn cell_count_with_two_working_registers() {
        for k in 1..=3 {
            let sys = compile_rm_to_pv_smax(&counter(k), OutputStrategy::Halt).unwrap();
            assert_eq!(sys.cell_count(), k + 8);
            assert!(is_hierarchical(&sys));
            assert!(sys.rules().iter().all(|r| r.source != r.target));
        }
    }

    #[test]
    fn only_the_halt_deletion_mixes_kinds() {
        let sys = compile_rm_to_pv_smax(&counter(1), OutputStrategy::Halt).unwrap();
        assert!(!is_hybrid(&sys));
        let zero = sys.cell_named("0").unwrap();
        let deletions: Vec<_> = sys
            .rules()
            .iter()
            .filter(|r| r.source == zero && !matches!(r.mutation, Mutation::Substitute(..)))
            .collect();
        assert_eq!(deletions.len(), 1);
        assert_eq!(sys.cell_name(deletions[0].target), "h");
        for c in sys.cells().filter(|&c| c != zero) {
            let kinds: BTreeSet<_> = sys.rules_of(c).map(|r| r.mutation.kind()).collect();
            assert!(kinds.len() <= 1, "{}", sys.cell_name(c));
        }
    }

    #[test]
    fn term_omits_trap_loop() {
        let p = counter(1);
        let halt = compile_rm_to_pv_smax(&p, OutputStrategy::Halt).unwrap();
        let term = compile_rm_to_pv_smax(&p, OutputStrategy::Term).unwrap();
        assert_eq!(halt.rules().len(), term.rules().len() + 2);
    }

    #[test]
    fn rejects_wrong_kinds() {
        let p = counter(1);
        assert!(matches!(
            compile_pbrm_to_pv_sequ(&p, OutputStrategy::Term),
            Err(CompileError::WrongKind { .. })
        ));
        let mut b = ProgramBuilder::new();
        b.add("l0", 1, "lh", "lh").halt("lh");
        let blind = b.build(MachineKind::PartiallyBlind, 1, 1, "l0").unwrap();
        assert!(compile_rm_to_pv_smax(&blind, OutputStrategy::Halt).is_err());
        assert!(compile_rm_to_uptpv(&blind).is_err());
    }

    #[test]
    fn rejects_output_decrement_and_clashes() {
        let mut b = ProgramBuilder::new();
        b.add("l0", 1, "l1", "l1")
            .sub("l1", 1, "lh", "lh")
            .halt("lh");
        let p = b.build(MachineKind::General, 1, 1, "l0").unwrap();
        assert!(matches!(
            compile_rm_to_pv_smax(&p, OutputStrategy::Halt),
            Err(CompileError::OutputDecremented { .. })
        ));
        let mut b = ProgramBuilder::new();
        b.add("a1", 1, "lh", "lh").halt("lh");
        let p = b.build(MachineKind::General, 1, 1, "a1").unwrap();
        assert!(matches!(
            compile_rm_to_pv_smax(&p, OutputStrategy::Halt),
            Err(CompileError::NameClash(_))
        ));
    }

    #[test]
    fn mixed_label_rejected_for_polarized() {
        let mut b = ProgramBuilder::new();
        b.add("l0", 2, "l0", "lh")
            .sub("l0", 2, "lh", "lh")
            .halt("lh");
        let p = b.build(MachineKind::General, 2, 1, "l0").unwrap();
        assert!(matches!(
            compile_rm_to_uptpv(&p),
            Err(CompileError::MixedLabel(_))
        ));
    }

    #[test]
    fn budget_scaling() {
        let m = budget(10, 5);
        let s1 = matched_budgets(Construction::Thm1, &m);
        assert_eq!((s1.max_steps, s1.max_state_size), (19, 6));
        let s5 = matched_budgets(Construction::Thm5, &m);
        assert_eq!(s5.max_steps, 5 * 9 + 2);
        assert_eq!(
            matched_budgets(Construction::Thm5, &budget(0, 5)).max_steps,
            2
        );
        assert_eq!(matched_budgets(Construction::Thm4, &m), m);
    }

    #[test]
    fn polarized_compile_shape() {
        let p = counter(1);
        let sys = compile_rm_to_uptpv(&p).unwrap();
        assert_eq!(sys.base().cell_count(), 6 + 7 * 3);
        assert!(sys.is_undirected());
    }

    #[test]
    fn counter_round_trips() {
        let p = counter(1);
        for c in [Construction::Thm1, Construction::Thm5] {
            let cmp = compare_machine(c, &p, None, &budget(12, 6), 1).unwrap();
            assert!(cmp.agrees(), "{c}: {:?}", cmp);
            assert_eq!(
                cmp.system.vectors.iter().cloned().collect::<Vec<_>>(),
                vec![vec![1]]
            );
        }
    }

    #[test]
    fn system_to_machine_labels() {
        let sys = compile_pbrm_to_pv_sequ(
            &{
                let mut b = ProgramBuilder::new();
                b.add("l0", 1, "l1", "l1")
                    .add("l1", 2, "l2", "l2")
                    .sub_blind("l2", 2, "lh")
                    .halt("lh");
                b.build(MachineKind::PartiallyBlind, 2, 1, "l0").unwrap()
            },
            OutputStrategy::Term,
        )
        .unwrap();
        let p = compile_tpv_to_pbrm(&sys).unwrap();
        let subs = sys
            .rules()
            .iter()
            .filter(|r| matches!(r.mutation, Mutation::Substitute(..)))
            .count();
        assert!(p.label_count() <= 2 * sys.rules().len() + sys.cell_count() + 2 + 1);
        assert_eq!(p.label_count(), sys.cell_count() + subs + 2 + 1);
        let cmp = compare_system(&sys, &budget(60, 8), 1).unwrap();
        assert!(cmp.agrees(), "{cmp:?}");
    }
}
