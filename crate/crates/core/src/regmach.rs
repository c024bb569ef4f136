//! Register machines and partially blind register machines.
//!
//! Labels may carry several instructions (relaxed labeling); a strictly
//! labeled program is the special case with one instruction per label. A
//! label without instructions is a dead end.
//! Machines run in generating mode: they start at the initial label with
//! all registers zero and report the first `k` registers when they halt.

use std::collections::HashMap;

use thiserror::Error;

use crate::search::{closure, Expansion, Exploration, Record, ResultSet, SearchBudget};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(u32);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MachineKind {
    General,
    PartiallyBlind,
}

/// One instruction; registers are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instruction {
    /// Increment, then continue at either label.
    Add {
        register: usize,
        next: Label,
        alt: Label,
    },
    /// Decrement and go to `next`, or go to `zero` if the register is empty.
    Sub {
        register: usize,
        next: Label,
        zero: Label,
    },
    /// Decrement and go to `next`; aborts on an empty register.
    SubBlind {
        register: usize,
        next: Label,
    },
    Halt,
}

impl Instruction {
    pub fn register(&self) -> Option<usize> {
        match *self {
            Instruction::Add { register, .. }
            | Instruction::Sub { register, .. }
            | Instruction::SubBlind { register, .. } => Some(register),
            Instruction::Halt => None,
        }
    }

    fn targets(&self) -> Vec<Label> {
        match *self {
            Instruction::Add { next, alt, .. } => vec![next, alt],
            Instruction::Sub { next, zero, .. } => vec![next, zero],
            Instruction::SubBlind { next, .. } => vec![next],
            Instruction::Halt => vec![],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("register {register} out of range 1..={registers}")]
    RegisterOutOfRange { register: usize, registers: usize },
    #[error("output count {outputs} exceeds register count {registers}")]
    TooManyOutputs { outputs: usize, registers: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("no HALT instruction")]
    MissingHalt,
    #[error("HALT appears at more than one label ({0:?} and {1:?})")]
    SeveralHaltLabels(String, String),
    #[error("halt label {0:?} mixes HALT with other instructions")]
    MixedHaltLabel(String),
    #[error("two-branch SUB at {0:?} in a partially blind program")]
    ZeroTestInBlind(String),
    #[error("blind SUB at {0:?} in a general program")]
    BlindSubInGeneral(String),
    #[error("configuration has {found} registers, program has {expected}")]
    RegisterCount { expected: usize, found: usize },
}

/// A validated (partially blind) register machine `(m, B, l0, lh, P)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineProgram {
    registers: usize,
    outputs: usize,
    kind: MachineKind,
    labels: Vec<String>,
    instructions: Vec<Vec<Instruction>>,
    init: Label,
    halt: Label,
}

/// Assembles a program by label name.
#[derive(Clone, Debug, Default)]
pub struct ProgramBuilder {
    labels: Vec<String>,
    index: HashMap<String, Label>,
    instructions: Vec<Vec<Instruction>>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn label(&mut self, name: &str) -> Label {
        if let Some(&l) = self.index.get(name) {
            return l;
        }
        let l = Label(self.labels.len() as u32);
        self.labels.push(name.to_string());
        self.index.insert(name.to_string(), l);
        self.instructions.push(Vec::new());
        l
    }

    pub fn push(&mut self, at: &str, instruction: Instruction) -> &mut Self {
        let l = self.label(at);
        if !self.instructions[l.index()].contains(&instruction) {
            self.instructions[l.index()].push(instruction);
        }
        self
    }

    pub fn add(&mut self, at: &str, register: usize, next: &str, alt: &str) -> &mut Self {
        let (next, alt) = (self.label(next), self.label(alt));
        self.push(
            at,
            Instruction::Add {
                register,
                next,
                alt,
            },
        )
    }

    pub fn sub(&mut self, at: &str, register: usize, next: &str, zero: &str) -> &mut Self {
        let (next, zero) = (self.label(next), self.label(zero));
        self.push(
            at,
            Instruction::Sub {
                register,
                next,
                zero,
            },
        )
    }

    pub fn sub_blind(&mut self, at: &str, register: usize, next: &str) -> &mut Self {
        let next = self.label(next);
        self.push(at, Instruction::SubBlind { register, next })
    }

    pub fn halt(&mut self, at: &str) -> &mut Self {
        self.push(at, Instruction::Halt)
    }

    pub fn build(
        &self,
        kind: MachineKind,
        registers: usize,
        outputs: usize,
        init: &str,
    ) -> Result<MachineProgram, MachineError> {
        let init = *self
            .index
            .get(init)
            .ok_or_else(|| MachineError::UnknownLabel(init.to_string()))?;
        MachineProgram::new(
            kind,
            registers,
            outputs,
            self.labels.clone(),
            self.instructions.clone(),
            init,
        )
    }
}

impl MachineProgram {
    pub fn new(
        kind: MachineKind,
        registers: usize,
        outputs: usize,
        labels: Vec<String>,
        instructions: Vec<Vec<Instruction>>,
        init: Label,
    ) -> Result<Self, MachineError> {
        if outputs > registers {
            return Err(MachineError::TooManyOutputs { outputs, registers });
        }
        if init.index() >= labels.len() {
            return Err(MachineError::UnknownLabel(format!("#{}", init.index())));
        }
        let mut halt: Option<Label> = None;
        for (i, set) in instructions.iter().enumerate() {
            let name = &labels[i];
            let halts = set
                .iter()
                .filter(|ins| matches!(ins, Instruction::Halt))
                .count();
            if halts > 0 {
                if halts != set.len() {
                    return Err(MachineError::MixedHaltLabel(name.clone()));
                }
                if let Some(prev) = halt {
                    return Err(MachineError::SeveralHaltLabels(
                        labels[prev.index()].clone(),
                        name.clone(),
                    ));
                }
                halt = Some(Label(i as u32));
            }
            for ins in set {
                if let Some(register) = ins.register() {
                    if register == 0 || register > registers {
                        return Err(MachineError::RegisterOutOfRange {
                            register,
                            registers,
                        });
                    }
                }
                match (kind, ins) {
                    (MachineKind::PartiallyBlind, Instruction::Sub { .. }) => {
                        return Err(MachineError::ZeroTestInBlind(name.clone()))
                    }
                    (MachineKind::General, Instruction::SubBlind { .. }) => {
                        return Err(MachineError::BlindSubInGeneral(name.clone()))
                    }
                    _ => {}
                }
                for t in ins.targets() {
                    if t.index() >= labels.len() {
                        return Err(MachineError::UnknownLabel(format!("#{}", t.index())));
                    }
                }
            }
        }
        let halt = halt.ok_or(MachineError::MissingHalt)?;
        Ok(MachineProgram {
            registers,
            outputs,
            kind,
            labels,
            instructions,
            init,
            halt,
        })
    }

    /// Register count `m`.
    pub fn registers(&self) -> usize {
        self.registers
    }

    /// Output register count `k`.
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn kind(&self) -> MachineKind {
        self.kind
    }

    pub fn init(&self) -> Label {
        self.init
    }

    pub fn halt_label(&self) -> Label {
        self.halt
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.labels.len()).map(|i| Label(i as u32))
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label_name(&self, label: Label) -> &str {
        &self.labels[label.index()]
    }

    pub fn label_named(&self, name: &str) -> Option<Label> {
        self.labels
            .iter()
            .position(|l| l == name)
            .map(|i| Label(i as u32))
    }

    pub fn instructions_at(&self, label: Label) -> &[Instruction] {
        &self.instructions[label.index()]
    }

    /// All `(label, instruction)` pairs in label order.
    pub fn instructions(&self) -> impl Iterator<Item = (Label, Instruction)> + '_ {
        self.instructions
            .iter()
            .enumerate()
            .flat_map(|(i, set)| set.iter().map(move |ins| (Label(i as u32), *ins)))
    }

    pub fn is_strictly_labeled(&self) -> bool {
        self.instructions.iter().all(|set| set.len() <= 1)
    }

    pub fn initial_config(&self) -> MachineConfig {
        MachineConfig {
            label: self.init,
            regs: vec![0; self.registers],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MachineConfig {
    pub label: Label,
    pub regs: Vec<u64>,
}

impl MachineConfig {
    pub fn new(label: Label, regs: Vec<u64>) -> Self {
        MachineConfig { label, regs }
    }

    fn with(&self, label: Label, register: usize, delta: i64) -> MachineConfig {
        let mut regs = self.regs.clone();
        let slot = &mut regs[register - 1];
        *slot = (*slot as i64 + delta) as u64;
        MachineConfig { label, regs }
    }
}

/// Which branch of an instruction produced a successor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepKind {
    Add,
    Decrement,
    ZeroTest,
}

fn step_kinds(
    p: &MachineProgram,
    c: &MachineConfig,
) -> Result<Vec<(StepKind, MachineConfig)>, MachineError> {
    if c.label.index() >= p.labels.len() {
        return Err(MachineError::UnknownLabel(format!("#{}", c.label.index())));
    }
    if c.regs.len() != p.registers {
        return Err(MachineError::RegisterCount {
            expected: p.registers,
            found: c.regs.len(),
        });
    }
    let mut out = Vec::new();
    for ins in p.instructions_at(c.label) {
        match *ins {
            Instruction::Add {
                register,
                next,
                alt,
            } => {
                out.push((StepKind::Add, c.with(next, register, 1)));
                out.push((StepKind::Add, c.with(alt, register, 1)));
            }
            Instruction::Sub {
                register,
                next,
                zero,
            } => {
                if c.regs[register - 1] > 0 {
                    out.push((StepKind::Decrement, c.with(next, register, -1)));
                } else {
                    out.push((StepKind::ZeroTest, c.with(zero, register, 0)));
                }
            }
            Instruction::SubBlind { register, next } => {
                if c.regs[register - 1] > 0 {
                    out.push((StepKind::Decrement, c.with(next, register, -1)));
                }
            }
            Instruction::Halt => {}
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Successor configurations of `c`; empty at HALT and on blind aborts.
pub fn machine_step(
    p: &MachineProgram,
    c: &MachineConfig,
) -> Result<Vec<MachineConfig>, MachineError> {
    let mut out: Vec<MachineConfig> = step_kinds(p, c)?.into_iter().map(|(_, c)| c).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// At the halt label, and for blind machines with registers `k+1..m` empty.
pub fn is_accepting(p: &MachineProgram, c: &MachineConfig) -> bool {
    c.label == p.halt
        && match p.kind {
            MachineKind::General => true,
            MachineKind::PartiallyBlind => c.regs.iter().skip(p.outputs).all(|&r| r == 0),
        }
}

/// Step costs used to align a machine run with a compiled system's hop counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InstructionCosts {
    pub add: u32,
    pub sub_decrement: u32,
    pub sub_zero: u32,
    pub halt: u32,
}

impl InstructionCosts {
    pub const UNIT: InstructionCosts = InstructionCosts {
        add: 1,
        sub_decrement: 1,
        sub_zero: 1,
        halt: 1,
    };

    fn of(&self, kind: StepKind) -> u32 {
        match kind {
            StepKind::Add => self.add,
            StepKind::Decrement => self.sub_decrement,
            StepKind::ZeroTest => self.sub_zero,
        }
    }
}

impl Default for InstructionCosts {
    fn default() -> Self {
        Self::UNIT
    }
}

/// Enumeration state: `delay` more steps until `regs` is reached at `label`
/// (`None` = halted).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Pending {
    label: Option<Label>,
    regs: Vec<u64>,
    delay: u32,
}

struct MachineSpace<'a> {
    program: &'a MachineProgram,
    costs: InstructionCosts,
}

impl Exploration for MachineSpace<'_> {
    type State = Pending;

    fn initial(&self) -> Pending {
        Pending {
            label: Some(self.program.init),
            regs: vec![0; self.program.registers],
            delay: 0,
        }
    }

    fn expand(&self, s: &Pending) -> Expansion<Pending> {
        if s.delay > 0 {
            return Expansion::of(vec![Pending {
                delay: s.delay - 1,
                ..s.clone()
            }]);
        }
        let Some(label) = s.label else {
            return Expansion::of(Vec::new());
        };
        let config = MachineConfig {
            label,
            regs: s.regs.clone(),
        };
        if label == self.program.halt {
            // executing HALT is itself a step
            let done = is_accepting(self.program, &config).then(|| Pending {
                label: None,
                regs: s.regs.clone(),
                delay: self.costs.halt.max(1) - 1,
            });
            return Expansion::of(done.into_iter().collect());
        }
        let successors = step_kinds(self.program, &config)
            .expect("enumerated configs are well-formed")
            .into_iter()
            .map(|(kind, c)| Pending {
                label: Some(c.label),
                regs: c.regs,
                delay: self.costs.of(kind).max(1) - 1,
            })
            .collect();
        Expansion::of(successors)
    }

    fn size(&self, s: &Pending) -> u64 {
        s.regs.iter().sum()
    }

    fn record(&self, s: &Pending, _halting: bool) -> Option<Record> {
        (s.label.is_none() && s.delay == 0)
            .then(|| Record::clean(s.regs[..self.program.outputs].to_vec()))
    }
}

/// Output vectors of all accepting computations within `budget`.
///
/// One instruction execution is one step, HALT included; `max_state_size`
/// bounds the register sum.
pub fn machine_enumerate(p: &MachineProgram, budget: &SearchBudget, workers: usize) -> ResultSet {
    machine_enumerate_weighted(p, &InstructionCosts::UNIT, budget, workers)
}

/// As [`machine_enumerate`], charging each executed instruction its cost.
pub fn machine_enumerate_weighted(
    p: &MachineProgram,
    costs: &InstructionCosts,
    budget: &SearchBudget,
    workers: usize,
) -> ResultSet {
    closure(
        &MachineSpace {
            program: p,
            costs: *costs,
        },
        budget,
        workers,
    )
}
