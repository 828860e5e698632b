mod common;

use beaver_zoo::sim::productivity_of;
use beaver_zoo::transform::{
    augment_state, goanna, is_normal, mirror, normalize, rebase_start, structural_shortcut, swap_states,
    swap_symbols, NormalViolation, Normality, NormalizeVerdict, Rebase, RebaseRule, Shortcut, TransformError,
};
use beaver_zoo::{run, Dimension, Machine, OutcomeKind, RunOptions, StateId};
use common::*;
use proptest::prelude::*;

fn dragon91() -> Machine {
    machine(3, 3, &["a01rb", "b02lc", "c12rb", "b20lc", "c20lb", "c01ra"])
}

fn same_run(a: &Machine, b: &Machine, opts: &RunOptions) -> Result<(), TestCaseError> {
    let (x, y) = (run(a, opts), run(b, opts));
    prop_assert_eq!(x.kind, y.kind, "{} vs {}", a, b);
    prop_assert_eq!(x.steps, y.steps);
    prop_assert_eq!(productivity_of(&x.last), productivity_of(&y.last));
    Ok(())
}

#[test]
fn swap_states_example() {
    let m = machine(3, 2, &["a01rb", "b00lc", "c01rz"]);
    let want = machine(3, 2, &["a01rc", "c00lb", "b01rz"]);
    assert_eq!(swap_states(&m, st('b'), st('c')), want);
}

#[test]
fn dragon_prefix_rebases_onto_b() {
    let d = dragon91();
    let Rebase::Changed { machine, rule, state } = rebase_start(&d, &RunOptions::default()) else {
        panic!("expected a rebase");
    };
    assert_eq!((rule, state), (RebaseRule::LastBlank, st('b')));
    assert_eq!(machine, swap_states(&d, st('a'), st('b')));
    let twice = swap_states(&machine, st('b'), st('c'));
    assert_eq!(twice.get(st('a'), sym(0)), Some("2lb".parse().unwrap()));
}

#[test]
fn dragon_prefix_normalizes() {
    let report = normalize(&dragon91(), &RunOptions::plain(200));
    let steps: Vec<String> = report.applied.iter().map(|t| t.to_string()).collect();
    assert_eq!(steps, ["rebase-last-blank b", "swap-symbols 2 1", "mirror", "swap-states c b"]);
    assert_eq!(report.result.to_string(), "3x3 1rb 0rb --- 2lc 0ra 1la 2la --- ---");
    assert_eq!(report.result.get(st('a'), sym(0)), Some("1rb".parse().unwrap()));
    assert_eq!(report.verdict, NormalizeVerdict::Normal);
}

#[test]
fn normal_machines_are_left_alone() {
    let m = machine(2, 2, &["a01rb", "a11lb", "b01la", "b11rz"]);
    let report = normalize(&m, &RunOptions::default());
    assert!(report.applied.is_empty());
    assert_eq!(report.result, m);
    assert_eq!(report.verdict, NormalizeVerdict::Normal);
}

#[test]
fn is_normal_rejections() {
    let opts = RunOptions::default();
    let bad_first = machine(2, 2, &["a00la", "b01la"]);
    assert_eq!(is_normal(&bad_first, &opts), Normality::No(NormalViolation::FirstTransition));
    let bad_b0 = machine(2, 4, &["a01rb", "b03la"]);
    assert_eq!(is_normal(&bad_b0, &opts), Normality::No(NormalViolation::SecondTransition));
}

#[test]
fn augment_adds_one_mark() {
    let left = machine(3, 2, &["a01rb", "a11la", "b00la", "b10lc", "c11rc", "c01rz"]);
    let aug = augment_state(&left).unwrap();
    assert_eq!(aug.dim(), dim(4, 2));
    let out = run(&aug, &RunOptions::default());
    assert_eq!((out.activity(), out.productivity()), (Some(8), Some(3)));

    for n in 2..=5 {
        let aug = augment_state(&goanna(n, 2).unwrap()).unwrap();
        let out = run(&aug, &RunOptions::default());
        assert_eq!((out.activity(), out.productivity()), (Some(n as u64 + 1), Some(n + 1)));
    }
}

#[test]
fn augment_keeps_tables_exhaustive() {
    let m = machine(2, 3, &["a01rb", "a11la", "a22lb", "b02la", "b12rb", "b21rz"]);
    let aug = augment_state(&m).unwrap();
    assert!(aug.is_exhaustive());
    assert_eq!(aug.len(), 3 * 3);
    assert!(matches!(augment_state(&machine(2, 2, &["a01rb"])), Err(TransformError::NotHalting)));
}

#[test]
fn shortcut_examples() {
    assert_eq!(structural_shortcut(&machine(2, 2, &["a01la"])), Some(Shortcut::StartLoops));
    assert_eq!(structural_shortcut(&machine(2, 2, &["a01lz"])), Some(Shortcut::ImmediateHalt));
    assert_eq!(structural_shortcut(&machine(2, 2, &["a01rb", "b00rb"])), Some(Shortcut::RightRunaway));
    assert_eq!(structural_shortcut(&machine(2, 2, &["a01rb", "b00lb"])), None);
}

fn non_start_pair(d: Dimension) -> impl Strategy<Value = (StateId, StateId)> {
    let n = d.states();
    (1..n, 1..n).prop_map(|(p, q)| (StateId::new(p), StateId::new(q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn state_swaps_preserve_runs(
        (m, (p, q)) in prop_oneof![Just(dim(3, 2)), Just(dim(3, 3))]
            .prop_flat_map(|d| (machine_in(d, 0.9), non_start_pair(d)))
    ) {
        same_run(&m, &swap_states(&m, p, q), &RunOptions::with_bound(500))?;
        prop_assert_eq!(swap_states(&swap_states(&m, p, q), p, q), m);
    }

    #[test]
    fn symbol_swaps_preserve_runs(
        (m, p, q) in machine_in(dim(2, 3), 0.9).prop_flat_map(|m| (Just(m), 1usize..3, 1usize..3))
    ) {
        let (p, q) = (sym(p), sym(q));
        same_run(&m, &swap_symbols(&m, p, q), &RunOptions::with_bound(500))?;
        prop_assert_eq!(swap_symbols(&swap_symbols(&m, p, q), p, q), m);
    }

    #[test]
    fn mirror_preserves_runs(m in any_machine()) {
        same_run(&m, &mirror(&m), &RunOptions::with_bound(500))?;
        prop_assert_eq!(mirror(&mirror(&m)), m);
    }

    #[test]
    fn rebasing_preserves_productivity(m in complete_machine()) {
        let opts = RunOptions::plain(500);
        let before = run(&m, &opts);
        if let Rebase::Changed { machine, .. } = rebase_start(&m, &opts) {
            if let Some(p) = before.productivity() {
                let after = run(&machine, &opts);
                prop_assert_eq!(after.productivity(), Some(p));
                prop_assert!(after.steps < before.steps);
            }
        }
    }

    #[test]
    fn normalize_preserves_productivity(m in complete_machine()) {
        let opts = RunOptions::plain(500);
        let before = run(&m, &opts);
        let report = normalize(&m, &opts);
        // Every applied step is an equivalence, whatever the final verdict.
        if let Some(p) = before.productivity() {
            let after = run(&report.result, &opts);
            prop_assert_eq!(after.productivity(), Some(p), "{} -> {}", m, report.result);
            prop_assert!(after.steps <= before.steps);
        }
        if report.verdict == NormalizeVerdict::Normal {
            prop_assert_eq!(is_normal(&report.result, &opts), Normality::Yes);
        }
    }

    #[test]
    fn shortcuts_agree_with_execution(m in complete_machine()) {
        let out = run(&m, &RunOptions::plain(300));
        match structural_shortcut(&m) {
            Some(Shortcut::ImmediateHalt) => prop_assert_eq!((out.kind, out.steps), (OutcomeKind::Halted, 1)),
            Some(_) => prop_assert_eq!(out.kind, OutcomeKind::BoundExceeded),
            None => {}
        }
    }
}
