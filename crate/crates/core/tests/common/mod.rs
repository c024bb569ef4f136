//! Generators and checks shared by the property suite and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use vesicle::multiset::{
    apply_one, apply_set, jointly_applicable, Alphabet, CellId, Multiset, Mutation, Symbol,
};
use vesicle::regmach::{machine_enumerate, MachineKind, MachineProgram, ProgramBuilder};
use vesicle::search::SearchBudget;
use vesicle::tpv::{
    smax_choices, tpv_enumerate, tpv_steps, tpv_successors, DerivationMode, OutputStrategy,
    TpvRule, TpvSystem, VesicleConfig,
};

pub const SYMBOLS: [&str; 3] = ["a", "b", "c"];

pub fn alphabet() -> (Alphabet, Vec<Symbol>) {
    let mut a = Alphabet::new();
    let syms = SYMBOLS.iter().map(|s| a.intern(s).unwrap()).collect();
    (a, syms)
}

/// Counts per symbol of `SYMBOLS`.
pub fn counts() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..4, SYMBOLS.len())
}

pub fn multiset(syms: &[Symbol], counts: &[u64]) -> Multiset {
    Multiset::from_counts(syms.iter().copied().zip(counts.iter().copied()))
}

/// A mutation as `(kind, lhs, rhs)` indices into `SYMBOLS`.
pub fn mutation_spec() -> impl Strategy<Value = (u8, usize, usize)> {
    (0u8..3, 0..SYMBOLS.len(), 0..SYMBOLS.len())
}

pub fn mutation(syms: &[Symbol], spec: (u8, usize, usize)) -> Mutation {
    match spec.0 {
        0 => Mutation::Insert(syms[spec.2]),
        1 => Mutation::Delete(syms[spec.1]),
        _ => Mutation::Substitute(syms[spec.1], syms[spec.2]),
    }
}

/// Random small system: up to 3 cells, rules over `a b c`, terminals `a b`.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub cells: usize,
    pub rules: Vec<(usize, (u8, usize, usize), usize)>,
    pub init: Vec<u64>,
    pub output: usize,
}

pub fn system_spec() -> impl Strategy<Value = SystemSpec> {
    (1usize..4)
        .prop_flat_map(|cells| {
            (
                Just(cells),
                prop::collection::vec((0..cells, mutation_spec(), 0..cells), 0..7),
                prop::collection::vec(0u64..3, SYMBOLS.len()),
                0..cells,
            )
        })
        .prop_map(|(cells, rules, init, output)| SystemSpec {
            cells,
            rules,
            init,
            output,
        })
}

pub fn build_system(spec: &SystemSpec) -> TpvSystem {
    let (alphabet, syms) = alphabet();
    let rules = spec
        .rules
        .iter()
        .map(|&(s, m, t)| TpvRule {
            source: CellId::new(s),
            mutation: mutation(&syms, m),
            target: CellId::new(t),
        })
        .collect();
    TpvSystem::new(
        (0..spec.cells).map(|i| format!("c{i}")).collect(),
        alphabet,
        vec![syms[0], syms[1]],
        rules,
        CellId::new(0),
        multiset(&syms, &spec.init),
        CellId::new(spec.output),
    )
    .unwrap()
}

/// Random general machine over 2 registers with labels `l0..l3` and halt `h`.
pub fn machine_spec() -> impl Strategy<Value = Vec<(u8, usize, usize, usize)>> {
    prop::collection::vec((0u8..2, 1usize..3, 0usize..5, 0usize..5), 1..6)
}

pub fn build_machine(spec: &[(u8, usize, usize, usize)]) -> MachineProgram {
    let name = |i: usize| {
        if i == 4 {
            "h".to_string()
        } else {
            format!("l{i}")
        }
    };
    let mut b = ProgramBuilder::new();
    for (i, &(op, r, q, s)) in spec.iter().enumerate() {
        let at = name(i % 4);
        if op == 0 {
            b.add(&at, r, &name(q), &name(s));
        } else {
            b.sub(&at, r, &name(q), &name(s));
        }
    }
    b.halt("h");
    b.label("l0");
    b.build(MachineKind::General, 2, 1, "l0").unwrap()
}

pub fn budget() -> impl Strategy<Value = SearchBudget> {
    (0u64..8, 0u64..7, 1u64..200).prop_map(|(s, z, n)| SearchBudget::new(s, z, n).unwrap())
}

/// Mode of a case, chosen by a flag.
pub fn mode(smax: bool) -> DerivationMode {
    if smax {
        DerivationMode::Smax
    } else {
        DerivationMode::Sequ
    }
}

/// The same set applied in two orders, and by counting, agrees.
pub fn check_apply_order(
    counts: &[u64],
    specs: &[(u8, usize, usize)],
    perm_seed: u64,
) -> Result<(), TestCaseError> {
    let (_, syms) = alphabet();
    let w = multiset(&syms, counts);
    let ms: Vec<Mutation> = specs.iter().map(|&s| mutation(&syms, s)).collect();
    if !jointly_applicable(&w, &ms) {
        prop_assert!(apply_set(&w, &ms).is_err());
        return Ok(());
    }
    let forward = apply_set(&w, &ms).unwrap();
    let mut shuffled = ms.clone();
    let n = shuffled.len();
    let mut x = perm_seed;
    for i in (1..n).rev() {
        x = x
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        shuffled.swap(i, (x >> 33) as usize % (i + 1));
    }
    prop_assert_eq!(&apply_set(&w, &shuffled).unwrap(), &forward);
    // counting oracle: w - lhs + rhs
    let mut expect: Vec<i64> = counts.iter().map(|&c| c as i64).collect();
    for m in &ms {
        if let Some(a) = m.lhs() {
            expect[a.index()] -= 1;
        }
        if let Some(b) = m.rhs() {
            expect[b.index()] += 1;
        }
    }
    for (i, &s) in syms.iter().enumerate() {
        prop_assert_eq!(forward.count(s) as i64, expect[i]);
    }
    // sequential application also agrees when every step stays applicable
    let mut seq = w.clone();
    for m in &ms {
        seq = apply_one(&seq, *m).map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
    prop_assert_eq!(seq, forward);
    Ok(())
}

/// Every smax choice is jointly applicable and cannot be extended by another
/// rule with the same target; brute force over all subsets finds the same sets.
pub fn check_smax_maximal(
    spec: &SystemSpec,
    cell: usize,
    counts: &[u64],
) -> Result<(), TestCaseError> {
    let sys = build_system(spec);
    let (_, syms) = alphabet();
    let cfg = VesicleConfig::new(CellId::new(cell % spec.cells), multiset(&syms, counts));
    let rules = sys.rules();
    let choices = smax_choices(&sys, &cfg);
    let got: BTreeSet<(CellId, Vec<usize>)> = choices
        .iter()
        .map(|c| {
            let mut r = c.rules.clone();
            r.sort();
            (c.target, r)
        })
        .collect();
    let own: Vec<usize> = (0..rules.len())
        .filter(|&i| rules[i].source == cfg.cell)
        .collect();
    let mut want = BTreeSet::new();
    let targets: BTreeSet<CellId> = own.iter().map(|&i| rules[i].target).collect();
    for t in targets {
        let group: Vec<usize> = own
            .iter()
            .copied()
            .filter(|&i| rules[i].target == t)
            .collect();
        let ok = |set: &[usize]| {
            jointly_applicable(
                &cfg.content,
                &set.iter().map(|&i| rules[i].mutation).collect::<Vec<_>>(),
            )
        };
        for mask in 1u32..(1 << group.len()) {
            let set: Vec<usize> = (0..group.len())
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| group[b])
                .collect();
            if !ok(&set) {
                continue;
            }
            let extendable = group.iter().any(|g| {
                !set.contains(g) && {
                    let mut bigger = set.clone();
                    bigger.push(*g);
                    ok(&bigger)
                }
            });
            if !extendable {
                want.insert((t, set));
            }
        }
    }
    prop_assert_eq!(got, want);
    Ok(())
}

/// No successor exactly when no rule of the current cell is applicable.
pub fn check_halting(
    spec: &SystemSpec,
    cell: usize,
    counts: &[u64],
    smax: bool,
) -> Result<(), TestCaseError> {
    let sys = build_system(spec);
    let (_, syms) = alphabet();
    let cfg = VesicleConfig::new(CellId::new(cell % spec.cells), multiset(&syms, counts));
    let any_applicable = sys
        .rules()
        .iter()
        .any(|r| r.source == cfg.cell && r.mutation.lhs().is_none_or(|a| cfg.content.count(a) > 0));
    let succ = tpv_successors(&sys, mode(smax), &cfg);
    prop_assert_eq!(succ.is_empty(), !any_applicable);
    for step in tpv_steps(&sys, mode(smax), &cfg) {
        prop_assert!(!step.rules.is_empty());
    }
    Ok(())
}

/// Pointwise larger budgets never lose results (systems and machines).
///
/// The visited-state cap is left open: which states a full cap drops depends
/// on the whole frontier, so it is not monotone.
pub fn check_monotone(
    spec: &SystemSpec,
    machine: &[(u8, usize, usize, usize)],
    b1: SearchBudget,
    b2: SearchBudget,
    smax: bool,
) -> Result<(), TestCaseError> {
    let small = SearchBudget::new(
        b1.max_steps.min(b2.max_steps),
        b1.max_state_size.min(b2.max_state_size),
        1_000_000,
    )
    .unwrap();
    let large = SearchBudget::new(
        b1.max_steps.max(b2.max_steps),
        b1.max_state_size.max(b2.max_state_size),
        1_000_000,
    )
    .unwrap();
    let sys = build_system(spec);
    for strategy in [
        OutputStrategy::Halt,
        OutputStrategy::Term,
        OutputStrategy::HaltTerm,
    ] {
        let r1 = tpv_enumerate(&sys, mode(smax), strategy, &small, 1);
        let r2 = tpv_enumerate(&sys, mode(smax), strategy, &large, 1);
        prop_assert!(
            r1.vectors.is_subset(&r2.vectors),
            "{strategy}: {:?} vs {:?}",
            r1.vectors,
            r2.vectors
        );
    }
    let p = build_machine(machine);
    let m1 = machine_enumerate(&p, &small, 1);
    let m2 = machine_enumerate(&p, &large, 1);
    prop_assert!(m1.vectors.is_subset(&m2.vectors));
    Ok(())
}

/// Result sets and diagnostics do not depend on the worker count.
pub fn check_workers(spec: &SystemSpec, b: SearchBudget, smax: bool) -> Result<(), TestCaseError> {
    let sys = build_system(spec);
    for strategy in [
        OutputStrategy::Halt,
        OutputStrategy::Term,
        OutputStrategy::HaltTerm,
    ] {
        let one = tpv_enumerate(&sys, mode(smax), strategy, &b, 1);
        let four = tpv_enumerate(&sys, mode(smax), strategy, &b, 4);
        prop_assert_eq!(one.render(), four.render());
    }
    Ok(())
}
