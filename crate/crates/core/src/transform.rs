//! Equivalence-preserving rewrites and the normal form.
//!
//! State swaps (away from `a` and `z`), swaps of non-blank symbols and
//! mirroring all preserve activity and productivity. Rebasing the start
//! state drops a blank prefix of the run, so it preserves productivity and
//! shortens activity.

use std::fmt;

use thiserror::Error;

use crate::machine::{
    Action, Dimension, Direction, Machine, MachineError, StateId, Symbol, Transition,
};
use crate::sim::{self, OutcomeKind, RunOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("machine has no halting transition")]
    NotHalting,
    #[error("machine has {0} halting transitions, expected exactly one")]
    MultiHalting(usize),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

fn remap(
    m: &Machine,
    dim: Dimension,
    state: impl Fn(StateId) -> StateId,
    symbol: impl Fn(Symbol) -> Symbol,
    direction: impl Fn(Direction) -> Direction,
) -> Machine {
    let ts = m.transitions().map(|t| {
        Transition::new(
            state(t.state),
            symbol(t.input),
            Action::new(symbol(t.action.output), direction(t.action.direction), state(t.action.next)),
        )
    });
    Machine::from_transitions(dim, ts).expect("remapping is a bijection on cells")
}

fn swap<T: PartialEq + Copy>(x: T, p: T, q: T) -> T {
    if x == p {
        q
    } else if x == q {
        p
    } else {
        x
    }
}

/// Exchanges two standard states everywhere, as cell keys and as targets.
///
/// Panics if either is the halt state or outside the dimension.
pub fn swap_states(m: &Machine, s1: StateId, s2: StateId) -> Machine {
    assert!(!s1.is_halt() && !s2.is_halt(), "cannot swap the halt state");
    assert!(m.dim().contains_state(s1) && m.dim().contains_state(s2));
    remap(m, m.dim(), |s| swap(s, s1, s2), |o| o, |d| d)
}

/// Exchanges two symbols everywhere, as inputs and as outputs.
pub fn swap_symbols(m: &Machine, o1: Symbol, o2: Symbol) -> Machine {
    assert!(m.dim().contains_symbol(o1) && m.dim().contains_symbol(o2));
    remap(m, m.dim(), |s| s, |o| swap(o, o1, o2), |d| d)
}

/// Flips every direction.
pub fn mirror(m: &Machine) -> Machine {
    remap(m, m.dim(), |s| s, |o| o, Direction::flip)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RebaseRule {
    /// The tape is blank again later in the run; start from the last such
    /// configuration.
    LastBlank,
    /// The first transition writes a blank; start from the first
    /// non-blank write.
    FirstWrite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rebase {
    Changed {
        machine: Machine,
        rule: RebaseRule,
        /// The state that became `a`.
        state: StateId,
    },
    Unchanged,
    /// The bound was reached before the run settled the case.
    Unknown,
}

/// Moves the start of the run past a blank-tape prefix by swapping `a`
/// with a later state.
pub fn rebase_start(m: &Machine, opts: &RunOptions) -> Rebase {
    let plain = RunOptions {
        detect_blank_tape: false,
        detect_cycles: false,
        ..*opts
    };
    let out = sim::run(m, &plain);
    let finished = matches!(out.kind, OutcomeKind::Halted | OutcomeKind::UndefinedCell);

    let changed = |rule, state: StateId| {
        if state.is_halt() || state == StateId::START {
            Rebase::Unchanged
        } else {
            Rebase::Changed {
                machine: swap_states(m, StateId::START, state),
                rule,
                state,
            }
        }
    };
    if finished {
        return match out.last_blank {
            Some((_, state)) => changed(RebaseRule::LastBlank, state),
            None => Rebase::Unchanged,
        };
    }
    // Unfinished: a later blank tape may still occur, but skipping a blank
    // prefix up to the first non-blank write is sound regardless.
    match out.first_write {
        Some((step, state)) if step > 0 => changed(RebaseRule::FirstWrite, state),
        _ => Rebase::Unknown,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transformation {
    RebaseLastBlank(StateId),
    RebaseFirstWrite(StateId),
    StateSwap(StateId, StateId),
    SymbolSwap(Symbol, Symbol),
    Mirror,
    /// The unique halting action was replaced by `1rz`.
    HaltRewrite { original: Action },
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transformation::RebaseLastBlank(s) => write!(f, "rebase-last-blank {s}"),
            Transformation::RebaseFirstWrite(s) => write!(f, "rebase-first-write {s}"),
            Transformation::StateSwap(p, q) => write!(f, "swap-states {p} {q}"),
            Transformation::SymbolSwap(p, q) => write!(f, "swap-symbols {p} {q}"),
            Transformation::Mirror => f.write_str("mirror"),
            Transformation::HaltRewrite { original } => write!(f, "halt-rewrite {original} -> 1rz"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalViolation {
    /// `(a,0,1,r,b)` is missing.
    FirstTransition,
    /// The `(b,0)` action is missing or has the wrong shape.
    SecondTransition,
    ZeroDextrous,
    StateOrder,
    SymbolOrder,
    BlankTape,
}

impl fmt::Display for NormalViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalViolation::FirstTransition => "first transition is not (a,0,1,r,b)",
            NormalViolation::SecondTransition => "b,0 transition has the wrong shape",
            NormalViolation::ZeroDextrous => "0-dextrous",
            NormalViolation::StateOrder => "states not encountered in order",
            NormalViolation::SymbolOrder => "symbols not encountered in order",
            NormalViolation::BlankTape => "blank tape recurs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normality {
    Yes,
    No(NormalViolation),
    /// Structural conditions hold but the replay hit the bound.
    Unknown,
}

fn b0_admissible(a: Action) -> bool {
    let small = a.output.value() <= 2;
    let next = a.next.ordinal();
    small
        && !a.next.is_halt()
        && match a.direction {
            Direction::Left => next <= 2,
            Direction::Right => next == 2,
        }
}

/// Replays the blank-input run checking encounter order and the blank tape
/// condition. `Ok(true)` when the run stopped within the bound.
fn replay_order(m: &Machine, opts: &RunOptions) -> Result<bool, NormalViolation> {
    let mut config = sim::Configuration::blank();
    let mut next_state = 1usize;
    let mut next_symbol = 1usize;
    let mut steps = 0u64;
    loop {
        if config.state.is_halt() {
            return Ok(true);
        }
        let Some(action) = m.get(config.state, config.read()) else {
            return Ok(true);
        };
        if steps >= opts.bound {
            return Ok(false);
        }
        let o = action.output.value();
        if o != 0 {
            if o > next_symbol {
                return Err(NormalViolation::SymbolOrder);
            }
            if o == next_symbol {
                next_symbol += 1;
            }
        }
        if !action.next.is_halt() {
            let s = action.next.ordinal();
            if s > next_state {
                return Err(NormalViolation::StateOrder);
            }
            if s == next_state {
                next_state += 1;
            }
        }
        sim::step(m, &mut config);
        steps += 1;
        if config.tape.is_blank() && !config.state.is_halt() {
            return Err(NormalViolation::BlankTape);
        }
    }
}

/// Checks the four normal-form conditions; the last by bounded replay.
pub fn is_normal(m: &Machine, opts: &RunOptions) -> Normality {
    let a0 = m.get(StateId::START, Symbol::BLANK);
    let first = Action::new(Symbol::new(1), Direction::Right, StateId::new(1));
    if a0 != Some(first) {
        return Normality::No(NormalViolation::FirstTransition);
    }
    match m.get(StateId::new(1), Symbol::BLANK) {
        Some(a) if b0_admissible(a) => {}
        _ => return Normality::No(NormalViolation::SecondTransition),
    }
    if m.is_zero_dextrous() {
        return Normality::No(NormalViolation::ZeroDextrous);
    }
    match replay_order(m, opts) {
        Ok(true) => Normality::Yes,
        Ok(false) => Normality::Unknown,
        Err(v) => Normality::No(v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeVerdict {
    Normal,
    NotNormalizable(NotNormalizable),
    /// The run did not settle within this bound.
    Unknown(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotNormalizable {
    /// The run stops without ever writing a non-blank symbol.
    NoWrite,
    /// `(a,0)` is undefined.
    NoStart,
    Violates(NormalViolation),
}

impl fmt::Display for NormalizeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizeVerdict::Normal => f.write_str("normal"),
            NormalizeVerdict::NotNormalizable(NotNormalizable::NoWrite) => {
                f.write_str("not normalizable: no non-blank write")
            }
            NormalizeVerdict::NotNormalizable(NotNormalizable::NoStart) => {
                f.write_str("not normalizable: (a,0) undefined")
            }
            NormalizeVerdict::NotNormalizable(NotNormalizable::Violates(v)) => {
                write!(f, "not normalizable: {v}")
            }
            NormalizeVerdict::Unknown(bound) => write!(f, "unknown at bound {bound}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizeReport {
    pub result: Machine,
    pub applied: Vec<Transformation>,
    pub verdict: NormalizeVerdict,
}

/// First-encounter order of states and of non-blank written symbols.
fn encounter_order(m: &Machine, opts: &RunOptions) -> (Vec<StateId>, Vec<Symbol>) {
    let mut states = vec![StateId::START];
    let mut symbols = Vec::new();
    let mut config = sim::Configuration::blank();
    let mut steps = 0u64;
    while !config.state.is_halt() && steps < opts.bound {
        match sim::step(m, &mut config) {
            sim::Step::Applied(t) => {
                let o = t.action.output;
                if !o.is_blank() && !symbols.contains(&o) {
                    symbols.push(o);
                }
                let s = t.action.next;
                if !s.is_halt() && !states.contains(&s) {
                    states.push(s);
                }
            }
            sim::Step::Undefined(..) => break,
        }
        steps += 1;
    }
    (states, symbols)
}

/// Brings `m` into normal form using equivalence-preserving rewrites.
///
/// Order: rebase to a fixpoint, make the first write `1`, mirror if the
/// first move is left, rewrite a unique non-blank halting action to `1rz`,
/// then relabel states and symbols by first encounter.
pub fn normalize(m: &Machine, opts: &RunOptions) -> NormalizeReport {
    let mut machine = m.clone();
    let mut applied = Vec::new();
    let unknown = |machine, applied| NormalizeReport {
        result: machine,
        applied,
        verdict: NormalizeVerdict::Unknown(opts.bound),
    };
    let stuck = |machine, applied, why| NormalizeReport {
        result: machine,
        applied,
        verdict: NormalizeVerdict::NotNormalizable(why),
    };

    for _ in 0..=m.dim().states() {
        match rebase_start(&machine, opts) {
            Rebase::Changed { machine: next, rule, state } => {
                applied.push(match rule {
                    RebaseRule::LastBlank => Transformation::RebaseLastBlank(state),
                    RebaseRule::FirstWrite => Transformation::RebaseFirstWrite(state),
                });
                machine = next;
            }
            Rebase::Unchanged => break,
            Rebase::Unknown => return unknown(machine, applied),
        }
    }

    let Some(a0) = machine.get(StateId::START, Symbol::BLANK) else {
        return stuck(machine, applied, NotNormalizable::NoStart);
    };
    if a0.output.is_blank() {
        return stuck(machine, applied, NotNormalizable::NoWrite);
    }
    let one = Symbol::new(1);
    if a0.output != one {
        machine = swap_symbols(&machine, a0.output, one);
        applied.push(Transformation::SymbolSwap(a0.output, one));
    }
    if a0.direction == Direction::Left {
        machine = mirror(&machine);
        applied.push(Transformation::Mirror);
    }

    if machine.halting_count() == 1 {
        let t = machine.halting_transitions().next().expect("one halting transition");
        if !t.action.output.is_blank() && t.action != Action::halt() {
            machine.remove(t.state, t.input);
            machine
                .insert(t.state, t.input, Action::halt())
                .expect("cell just cleared");
            applied.push(Transformation::HaltRewrite { original: t.action });
        }
    }

    let (states, symbols) = encounter_order(&machine, opts);
    // `label[i]` is the current label of the state originally called `i`.
    let mut label: Vec<StateId> = machine.dim().state_ids().collect();
    for (i, &orig) in states.iter().enumerate() {
        let want = StateId::new(i);
        let have = label[orig.ordinal()];
        if have != want {
            machine = swap_states(&machine, have, want);
            applied.push(Transformation::StateSwap(have, want));
            for l in label.iter_mut() {
                *l = swap(*l, have, want);
            }
        }
    }
    let mut sym_label: Vec<Symbol> = machine.dim().symbol_ids().collect();
    for (i, &orig) in symbols.iter().enumerate() {
        let want = Symbol::new(i + 1);
        let have = sym_label[orig.value()];
        if have != want {
            machine = swap_symbols(&machine, have, want);
            applied.push(Transformation::SymbolSwap(have, want));
            for l in sym_label.iter_mut() {
                *l = swap(*l, have, want);
            }
        }
    }

    let verdict = match is_normal(&machine, opts) {
        Normality::Yes => NormalizeVerdict::Normal,
        Normality::Unknown => NormalizeVerdict::Unknown(opts.bound),
        Normality::No(v) => NormalizeVerdict::NotNormalizable(NotNormalizable::Violates(v)),
    };
    NormalizeReport {
        result: machine,
        applied,
        verdict,
    }
}

/// Adds a fresh state that walks right over non-blanks and writes one more
/// `1` before halting. Activity grows by at least one, productivity by
/// exactly one.
pub fn augment_state(m: &Machine) -> Result<Machine, TransformError> {
    let halting: Vec<Transition> = m.halting_transitions().collect();
    let t = match halting.as_slice() {
        [] => return Err(TransformError::NotHalting),
        [t] => *t,
        many => return Err(TransformError::MultiHalting(many.len())),
    };
    let n = m.dim().states();
    let dim = Dimension::new(n as u32 + 1, m.dim().symbols() as u32)?;
    let fresh = StateId::new(n);
    let mut out = Machine::empty(dim);
    for u in m.transitions() {
        let action = if u == t {
            Action { next: fresh, ..u.action }
        } else {
            u.action
        };
        out.insert(u.state, u.input, action)?;
    }
    out.insert(fresh, Symbol::BLANK, Action::halt())?;
    for j in dim.symbol_ids().skip(1) {
        out.insert(fresh, j, Action::new(j, Direction::Right, fresh))?;
    }
    Ok(out)
}

/// The chain machine writing `n` ones in `n` steps. Only blank-input cells
/// are defined.
pub fn goanna(n: usize, m: usize) -> Result<Machine, TransformError> {
    let dim = Dimension::new(n as u32, m as u32)?;
    let mut out = Machine::empty(dim);
    for i in 0..n {
        let next = if i + 1 < n { StateId::new(i + 1) } else { StateId::HALT };
        out.insert(
            StateId::new(i),
            Symbol::BLANK,
            Action::new(Symbol::new(1), Direction::Right, next),
        )?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shortcut {
    /// `(a,0,_,_,a)`: the head keeps meeting fresh blanks in state `a`.
    StartLoops,
    /// `(a,0,_,_,z)`: activity 1.
    ImmediateHalt,
    /// `(a,0,_,r,b)` with `(b,0,_,r,a|b)`: runs right forever.
    RightRunaway,
}

/// Decides a few cases from the first two transitions alone.
pub fn structural_shortcut(m: &Machine) -> Option<Shortcut> {
    let a0 = m.get(StateId::START, Symbol::BLANK)?;
    if a0.next == StateId::START {
        return Some(Shortcut::StartLoops);
    }
    if a0.next.is_halt() {
        return Some(Shortcut::ImmediateHalt);
    }
    let b = StateId::new(1);
    if a0.direction == Direction::Right && a0.next == b {
        if let Some(b0) = m.get(b, Symbol::BLANK) {
            if b0.direction == Direction::Right && b0.next.ordinal() <= 1 && !b0.next.is_halt() {
                return Some(Shortcut::RightRunaway);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::tr;

    fn machine(n: u32, m: u32, ts: &[&str]) -> Machine {
        let d = Dimension::new(n, m).unwrap();
        Machine::from_transitions(d, ts.iter().map(|t| tr(t))).unwrap()
    }

    fn st(c: char) -> StateId {
        StateId::from_letter(c).unwrap()
    }

    #[test]
    fn swap_states_example() {
        let m = machine(3, 2, &["a01rb", "b00lc", "c01rz"]);
        let want = machine(3, 2, &["a01rc", "c00lb", "b01rz"]);
        assert_eq!(swap_states(&m, st('b'), st('c')), want);
        assert_eq!(swap_states(&swap_states(&m, st('b'), st('c')), st('b'), st('c')), m);
    }

    #[test]
    fn mirror_example() {
        let m = machine(2, 2, &["a01lb"]);
        assert_eq!(mirror(&m), machine(2, 2, &["a01rb"]));
        assert_eq!(mirror(&mirror(&m)), m);
    }

    #[test]
    fn swap_symbols_without_occurrence_is_identity() {
        let m = machine(2, 4, &["a01rb", "b01la"]);
        assert_eq!(swap_symbols(&m, Symbol::new(2), Symbol::new(3)), m);
    }

    #[test]
    fn goanna_shape() {
        let g = goanna(4, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.is_zero_dextrous());
        let out = sim::run(&g, &RunOptions::default());
        assert_eq!(out.activity(), Some(4));
        assert_eq!(out.productivity(), Some(4));
    }

    #[test]
    fn augment_goanna() {
        let g = goanna(3, 2).unwrap();
        let a = augment_state(&g).unwrap();
        assert_eq!(a.dim().states(), 4);
        let out = sim::run(&a, &RunOptions::default());
        assert_eq!(out.activity(), Some(4));
        assert_eq!(out.productivity(), Some(4));
    }

    #[test]
    fn augment_rejects_non_one_halting() {
        let m = machine(2, 2, &["a01rb", "b01la"]);
        assert_eq!(augment_state(&m), Err(TransformError::NotHalting));
        let m = machine(2, 2, &["a01rb", "b01lz", "b11lz"]);
        assert_eq!(augment_state(&m), Err(TransformError::MultiHalting(2)));
    }

    #[test]
    fn is_normal_conditions() {
        let opts = RunOptions::default();
        let m = machine(2, 2, &["a00la"]);
        assert_eq!(is_normal(&m, &opts), Normality::No(NormalViolation::FirstTransition));
        let m = machine(2, 4, &["a01rb", "b03la"]);
        assert_eq!(is_normal(&m, &opts), Normality::No(NormalViolation::SecondTransition));
        let m = machine(2, 2, &["a01rb", "b01la", "a11lb", "b11rz"]);
        assert_eq!(is_normal(&m, &opts), Normality::Yes);
    }

    #[test]
    fn normal_machine_is_fixed_point() {
        let m = machine(2, 2, &["a01rb", "b01la", "a11lb", "b11rz"]);
        let r = normalize(&m, &RunOptions::default());
        assert_eq!(r.result, m);
        assert!(r.applied.is_empty());
        assert_eq!(r.verdict, NormalizeVerdict::Normal);
    }

    #[test]
    fn rebase_unchanged_when_first_write_is_immediate() {
        let m = machine(2, 2, &["a01rb", "b01la", "a11lb", "b11rz"]);
        assert_eq!(rebase_start(&m, &RunOptions::default()), Rebase::Unchanged);
    }

    #[test]
    fn rebase_on_last_blank() {
        // a writes blank and hands over to b, which does the real work.
        let m = machine(2, 2, &["a00rb", "b01lz"]);
        let want = Rebase::Changed {
            machine: machine(2, 2, &["b00ra", "a01lz"]),
            rule: RebaseRule::LastBlank,
            state: st('b'),
        };
        assert_eq!(rebase_start(&m, &RunOptions::default()), want);
    }

    #[test]
    fn rebase_on_first_write_when_unfinished() {
        // b writes and then runs right forever.
        let m = machine(2, 2, &["a00rb", "b01rb"]);
        let want = Rebase::Changed {
            machine: machine(2, 2, &["b00ra", "a01ra"]),
            rule: RebaseRule::FirstWrite,
            state: st('b'),
        };
        assert_eq!(rebase_start(&m, &RunOptions::with_bound(50)), want);
        let looping = machine(2, 2, &["a01rb", "b01la", "a11ra", "b11rb"]);
        assert_eq!(rebase_start(&looping, &RunOptions::with_bound(50)), Rebase::Unknown);
    }

    #[test]
    fn shortcuts() {
        assert_eq!(structural_shortcut(&machine(2, 2, &["a01ra"])), Some(Shortcut::StartLoops));
        assert_eq!(structural_shortcut(&machine(2, 2, &["a01rz"])), Some(Shortcut::ImmediateHalt));
        assert_eq!(
            structural_shortcut(&machine(2, 2, &["a01rb", "b00rb"])),
            Some(Shortcut::RightRunaway)
        );
        assert_eq!(structural_shortcut(&machine(2, 2, &["a01rb", "b00la"])), None);
    }
}
