use std::fs;
use std::path::PathBuf;

use vesicle::constructions::{
    compare_machine, compare_system, compile_pbrm_to_pv_sequ, compile_rm_to_pv_smax,
    compile_rm_to_uptpv, compile_tpv_to_pbrm, matched_budgets, BudgetMap, Construction,
};
use vesicle::multiset::{Multiset, Polarity};
use vesicle::ptpv::{candidate_cells, evolutions, ptpv_enumerate_traced};
use vesicle::regmach::{machine_enumerate, MachineProgram};
use vesicle::search::SearchBudget;
use vesicle::text::{parse_machine, parse_system, SystemFile};
use vesicle::tpv::{
    is_hierarchical, tpv_enumerate, tpv_enumerate_traced, tpv_successors, DerivationMode,
    OutputStrategy, TpvSystem, VesicleConfig,
};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(name)
}

fn machine(name: &str) -> MachineProgram {
    parse_machine(&fs::read_to_string(corpus(&format!("machines/{name}.rm"))).unwrap()).unwrap()
}

fn plain_system(name: &str) -> TpvSystem {
    match parse_system(&fs::read_to_string(corpus(&format!("systems/{name}"))).unwrap()).unwrap() {
        SystemFile::Plain(s) => s,
        SystemFile::Polarized(_) => panic!("{name} is polarized"),
    }
}

fn inline(text: &str) -> MachineProgram {
    parse_machine(text).unwrap()
}

fn budget(steps: u64, size: u64) -> SearchBudget {
    SearchBudget::new(steps, size, 1_000_000).unwrap()
}

const GENERAL: [&str; 6] = [
    "p1",
    "doubling",
    "zero_trap",
    "transfer",
    "halving",
    "pairs_general",
];
const BLIND: [&str; 3] = ["pairs_blind", "one_blind", "relaxed_blind"];

#[test]
fn smax_compile_agrees_for_every_strategy() {
    for name in GENERAL {
        let p = machine(name);
        for strategy in [
            OutputStrategy::Halt,
            OutputStrategy::Term,
            OutputStrategy::HaltTerm,
        ] {
            for workers in [1, 4] {
                let cmp = compare_machine(
                    Construction::Thm1,
                    &p,
                    Some(strategy),
                    &budget(30, 10),
                    workers,
                )
                .unwrap();
                assert!(cmp.agrees(), "{name} {strategy}: {cmp:?}");
            }
        }
    }
}

#[test]
fn sequ_compile_agrees_for_every_strategy() {
    for name in BLIND {
        let p = machine(name);
        for strategy in [
            OutputStrategy::Halt,
            OutputStrategy::Term,
            OutputStrategy::HaltTerm,
        ] {
            let cmp = compare_machine(Construction::Thm2, &p, Some(strategy), &budget(30, 10), 2)
                .unwrap();
            assert!(cmp.agrees(), "{name} {strategy}: {cmp:?}");
        }
    }
}

#[test]
fn polarized_compile_agrees() {
    for name in GENERAL {
        let p = machine(name);
        for workers in [1, 4] {
            let cmp =
                compare_machine(Construction::Thm5, &p, None, &budget(25, 10), workers).unwrap();
            assert!(cmp.agrees(), "{name}: {cmp:?}");
        }
    }
}

#[test]
fn doubling_reaches_four() {
    let p = machine("doubling");
    let cmp = compare_machine(Construction::Thm1, &p, None, &budget(45, 16), 1).unwrap();
    assert!(cmp.agrees());
    assert_eq!(
        cmp.system.vectors.iter().map(|v| v[0]).collect::<Vec<_>>(),
        vec![1, 2, 4]
    );
}

#[test]
fn system_compile_round_trips() {
    for name in ["choice.tpv", "shuttle.tpv", "drain.tpv", "trivial.tpv"] {
        let sys = plain_system(name);
        let cmp = compare_system(&sys, &budget(500, 40), 1).unwrap();
        assert!(cmp.agrees(), "{name}: {cmp:?}");
        assert!(cmp.system.complete() && cmp.reference.complete());
    }
    for name in ["one_blind", "zero_trap_blind"] {
        let p = if name == "one_blind" {
            machine(name)
        } else {
            inline("registers 2\noutputs 1\nkind blind\ninit l0\nl0: ADD 2 l1 l1\nl1: ADD 1 l2 l2\nl2: SUB 2 l3\nl3: ADD 1 lh lh\nl1: ADD 1 lh lh\nlh: HALT\n")
        };
        let sys = compile_pbrm_to_pv_sequ(&p, OutputStrategy::Term).unwrap();
        let cmp = compare_system(&sys, &budget(500, 40), 1).unwrap();
        assert!(cmp.agrees(), "{name}: {cmp:?}");
        assert_eq!(
            cmp.system.vectors,
            machine_enumerate(&p, &budget(100, 40), 1).vectors
        );
    }
}

#[test]
fn system_compile_needs_terminals() {
    assert!(compile_tpv_to_pbrm(&plain_system("trap.tpv")).is_err());
}

#[test]
fn system_compile_label_bound() {
    for name in ["choice.tpv", "shuttle.tpv", "drain.tpv"] {
        let sys = plain_system(name);
        let p = compile_tpv_to_pbrm(&sys).unwrap();
        let loads = sys.init_multiset().size() as usize;
        assert!(
            p.label_count() <= 2 * sys.rules().len() + sys.cell_count() + 2 + loads,
            "{name}"
        );
        assert_eq!(p.registers(), sys.alphabet().len());
        assert_eq!(p.outputs(), sys.terminals().len());
    }
}

#[test]
fn hierarchical_outputs() {
    for name in GENERAL {
        let sys = compile_rm_to_pv_smax(&machine(name), OutputStrategy::Halt).unwrap();
        assert!(is_hierarchical(&sys), "{name}");
        let m = machine(name);
        assert_eq!(
            sys.cell_count(),
            m.outputs() + 3 * (m.registers() - m.outputs()) + 2
        );
    }
    for name in BLIND {
        let m = machine(name);
        let sys = compile_pbrm_to_pv_sequ(&m, OutputStrategy::Halt).unwrap();
        assert!(is_hierarchical(&sys), "{name}");
        assert_eq!(
            sys.cell_count(),
            m.outputs() + 2 * (m.registers() - m.outputs()) + 2
        );
    }
}

/// Cell names along the witness of `v` in a polarized compile.
fn polarized_path(p: &MachineProgram, v: &[u64]) -> Vec<String> {
    let sys = compile_rm_to_uptpv(p).unwrap();
    let (_, witnesses) = ptpv_enumerate_traced(
        &sys,
        DerivationMode::Sequ,
        OutputStrategy::Term,
        &budget(200, 10),
        1,
    );
    let (_, path) = witnesses
        .iter()
        .find(|(w, _)| w == v)
        .expect("result present");
    path.iter()
        .map(|c| sys.base().cell_name(c.cell).to_string())
        .collect()
}

#[test]
fn polarized_hop_counts() {
    let map = BudgetMap::of(Construction::Thm5).unwrap();
    let add = inline("registers 1\noutputs 1\nkind general\ninit l0\nl0: ADD 1 lh lh\nlh: HALT\n");
    assert_eq!(
        polarized_path(&add, &[1]),
        ["0", "0'", "r+:1", "r+~:1", "0", "lh", "lh~"]
    );
    assert_eq!(map.add + map.closing, 6);
    let zero = inline("registers 2\noutputs 1\nkind general\ninit l0\nl0: SUB 2 lh lh\nlh: HALT\n");
    assert_eq!(
        polarized_path(&zero, &[0]),
        ["0", "r0:2", "r0~:2", "00", "0", "lh", "lh~"]
    );
    assert_eq!(map.sub_zero, 4);
    let dec = inline("registers 2\noutputs 1\nkind general\ninit l0\nl0: ADD 2 l1 l1\nl1: SUB 2 lh lh\nlh: HALT\n");
    let path = polarized_path(&dec, &[0]);
    assert_eq!(
        &path[4..],
        ["0", "r-:2", "r-~:2", "r-bar:2", "0-", "0", "lh", "lh~"]
    );
    assert_eq!(map.sub_decrement, 5);
}

#[test]
fn hierarchical_hop_counts() {
    let map = BudgetMap::of(Construction::Thm1).unwrap();
    let p = inline("registers 2\noutputs 1\nkind general\ninit l0\nl0: ADD 2 l1 l1\nl1: SUB 2 l2 l2\nl2: SUB 2 l3 l3\nl3: ADD 1 lh lh\nlh: HALT\n");
    let sys = compile_rm_to_pv_smax(&p, OutputStrategy::HaltTerm).unwrap();
    let (_, witnesses) = tpv_enumerate_traced(
        &sys,
        DerivationMode::Smax,
        OutputStrategy::HaltTerm,
        &budget(50, 10),
        1,
    );
    let path: Vec<&str> = witnesses[0]
        .1
        .iter()
        .map(|c| sys.cell_name(c.cell))
        .collect();
    assert_eq!(
        path,
        ["0", "r:2", "0", "rm:2", "0", "r0:2", "0", "r:1", "0", "h"]
    );
    assert_eq!(
        (map.add, map.sub_decrement, map.sub_zero, map.closing),
        (2, 2, 2, 1)
    );
}

#[test]
fn increment_rewrites_label_and_adds() {
    let p = inline("registers 1\noutputs 1\nkind general\ninit l0\nl0: ADD 1 l1 l1\nl1: HALT\n");
    let sys = compile_rm_to_uptpv(&p).unwrap();
    let base = sys.base();
    let (_, witnesses) = ptpv_enumerate_traced(
        &sys,
        DerivationMode::Sequ,
        OutputStrategy::Term,
        &budget(20, 5),
        1,
    );
    let path = &witnesses[0].1;
    let back = &path[4];
    assert_eq!(base.cell_name(back.cell), "0");
    let a = base.alphabet();
    let expect = Multiset::from_symbols([a.get("l1").unwrap(), a.get("a1").unwrap()]);
    assert_eq!(back.content, expect);
}

#[test]
fn present_register_blocks_zero_branch() {
    let p = inline("registers 2\noutputs 1\nkind general\ninit l0\nl0: SUB 2 lh lh\nlh: HALT\n");
    let sys = compile_rm_to_uptpv(&p).unwrap();
    let base = sys.base();
    let a = base.alphabet();
    let r0 = base.cell_named("r0:2").unwrap();
    let cfg = VesicleConfig::new(
        r0,
        Multiset::from_symbols([a.get("l0-").unwrap(), a.get("a2").unwrap()]),
    );
    let evo = evolutions(&sys, DerivationMode::Sequ, &cfg);
    assert_eq!(evo.len(), 1);
    assert_eq!(sys.value(&evo[0].content), 0);
    let cells: Vec<&str> = candidate_cells(&sys, r0, &evo[0].content)
        .iter()
        .map(|&c| base.cell_name(c))
        .collect();
    assert_eq!(cells, ["0"]);
    assert_eq!(
        sys.cell_polarity(base.cell_named("r0~:2").unwrap()),
        Polarity::Negative
    );
}

#[test]
fn blind_residue_loops_forever() {
    let p = machine("pairs_blind");
    let sys = compile_pbrm_to_pv_sequ(&p, OutputStrategy::Halt).unwrap();
    let a = sys.alphabet();
    let h = sys.cell_named("h").unwrap();
    let residue = VesicleConfig::new(
        h,
        Multiset::from_symbols([a.get("a1").unwrap(), a.get("a3").unwrap()]),
    );
    let next = tpv_successors(&sys, DerivationMode::Sequ, &residue);
    assert_eq!(next.len(), 1);
    assert_eq!(sys.cell_name(next[0].cell), "0");
    assert_eq!(next[0].content.count(a.get("#").unwrap()), 1);
    let halt = tpv_enumerate(
        &sys,
        DerivationMode::Sequ,
        OutputStrategy::Halt,
        &budget(40, 10),
        1,
    );
    assert!(halt.vectors.iter().all(|v| v[0] == v[1]));
    assert_eq!(halt.diagnostics.nonterminal_residue_results, 0);
}

#[test]
fn matched_budget_examples() {
    let m = budget(10, 8);
    assert_eq!(matched_budgets(Construction::Thm1, &m).max_steps, 2 * 9 + 1);
    assert_eq!(matched_budgets(Construction::Thm2, &m).max_state_size, 9);
    assert_eq!(matched_budgets(Construction::Thm5, &m).max_steps, 5 * 9 + 2);
    assert_eq!(
        matched_budgets(Construction::Thm5, &budget(0, 8)).max_steps,
        2
    );
}
