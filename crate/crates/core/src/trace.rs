//! Rendering of witness derivations, checked against the step relation.

use std::fmt::Write as _;

use thiserror::Error;

use crate::multiset::{Alphabet, Mutation};
use crate::ptpv::{ptpv_steps, PtpvSystem};
use crate::tpv::{tpv_steps, DerivationMode, TpvSystem, VesicleConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("step {0} is not a derivation step")]
    NotAStep(usize),
    #[error("derivation does not start at the initial configuration")]
    WrongStart,
}

fn line(
    out: &mut String,
    n: usize,
    base: &TpvSystem,
    from: &VesicleConfig,
    applied: &[Mutation],
    to: &VesicleConfig,
) {
    let alphabet: &Alphabet = base.alphabet();
    let rules: Vec<String> = applied
        .iter()
        .map(|m| m.display(alphabet).to_string())
        .collect();
    let _ = writeln!(
        out,
        "step {n}: cell {} {} --[{}]--> cell {}",
        base.cell_name(from.cell),
        from.content.display(alphabet),
        rules.join("; "),
        base.cell_name(to.cell)
    );
}

/// One `step <n>: cell <i> {w} --[rules]--> cell <j>` line per step.
pub fn render_tpv_trace(
    sys: &TpvSystem,
    mode: DerivationMode,
    path: &[VesicleConfig],
) -> Result<String, TraceError> {
    if path.first() != Some(&sys.initial_config()) {
        return Err(TraceError::WrongStart);
    }
    let mut out = String::new();
    for (n, pair) in path.windows(2).enumerate() {
        let step = tpv_steps(sys, mode, &pair[0])
            .into_iter()
            .find(|s| s.next == pair[1])
            .ok_or(TraceError::NotAStep(n + 1))?;
        let applied: Vec<Mutation> = step
            .rules
            .iter()
            .map(|&i| sys.rules()[i].mutation)
            .collect();
        line(&mut out, n + 1, sys, &pair[0], &applied, &pair[1]);
    }
    Ok(out)
}

/// As [`render_tpv_trace`]; an empty rule list means the vesicle passed
/// through without evolving.
pub fn render_ptpv_trace(
    sys: &PtpvSystem,
    mode: DerivationMode,
    path: &[VesicleConfig],
) -> Result<String, TraceError> {
    let base = sys.base();
    if path.first() != Some(&base.initial_config()) {
        return Err(TraceError::WrongStart);
    }
    let mut out = String::new();
    for (n, pair) in path.windows(2).enumerate() {
        let (steps, _) = ptpv_steps(sys, mode, &pair[0]);
        let step = steps
            .into_iter()
            .find(|s| s.next == pair[1])
            .ok_or(TraceError::NotAStep(n + 1))?;
        line(&mut out, n + 1, base, &pair[0], &step.applied, &pair[1]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiset::Multiset;
    use crate::search::SearchBudget;
    use crate::text::{parse_system, SystemFile};
    use crate::tpv::{tpv_enumerate_traced, OutputStrategy};

    fn plain(text: &str) -> TpvSystem {
        match parse_system(text).unwrap() {
            SystemFile::Plain(s) => s,
            SystemFile::Polarized(_) => panic!("expected plain"),
        }
    }

    #[test]
    fn renders_and_rejects() {
        let sys = plain(
            "cells 0 1\nalphabet p a\nterminals a\ninit 0 { p }\noutput 1\nrule 0 : p => a @1\n",
        );
        let (_, witnesses) = tpv_enumerate_traced(
            &sys,
            DerivationMode::Sequ,
            OutputStrategy::Halt,
            &SearchBudget::default(),
            1,
        );
        let text = render_tpv_trace(&sys, DerivationMode::Sequ, &witnesses[0].1).unwrap();
        assert_eq!(text, "step 1: cell 0 {p} --[p => a]--> cell 1\n");
        let bogus = vec![
            sys.initial_config(),
            VesicleConfig::new(sys.output_cell(), Multiset::new()),
        ];
        assert_eq!(
            render_tpv_trace(&sys, DerivationMode::Sequ, &bogus),
            Err(TraceError::NotAStep(1))
        );
    }
}
