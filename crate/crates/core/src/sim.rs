//! Step-exact execution of quintuple machines from the blank tape.

use std::collections::HashSet;
use std::fmt;

use crate::machine::{Machine, StateId, Symbol, Transition};

/// Default step bound for generation runs.
pub const DEFAULT_BOUND: u64 = 200;
pub const DEFAULT_CYCLE_HISTORY_CAP: usize = 100_000;

/// A two-way unbounded tape. Unwritten positions read as blank.
#[derive(Debug, Clone)]
pub struct Tape {
    cells: Vec<u8>,
    /// Index in `cells` of tape position 0.
    origin: usize,
    nonblank: usize,
}

impl Default for Tape {
    fn default() -> Self {
        Tape {
            cells: vec![0; 32],
            origin: 16,
            nonblank: 0,
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_symbols(start: i64, symbols: &[Symbol]) -> Self {
        let mut tape = Tape::new();
        for (i, s) in symbols.iter().enumerate() {
            tape.write(start + i as i64, *s);
        }
        tape
    }

    fn index(&self, pos: i64) -> Option<usize> {
        let idx = self.origin as i64 + pos;
        (0..self.cells.len() as i64).contains(&idx).then_some(idx as usize)
    }

    pub fn read(&self, pos: i64) -> Symbol {
        self.index(pos)
            .map_or(Symbol::BLANK, |i| Symbol::new(self.cells[i] as usize))
    }

    pub fn write(&mut self, pos: i64, symbol: Symbol) {
        let idx = match self.index(pos) {
            Some(i) => i,
            None => {
                self.grow_to(pos);
                self.index(pos).expect("tape grown to cover position")
            }
        };
        let old = self.cells[idx];
        let new = symbol.value() as u8;
        match (old == 0, new == 0) {
            (true, false) => self.nonblank += 1,
            (false, true) => self.nonblank -= 1,
            _ => {}
        }
        self.cells[idx] = new;
    }

    fn grow_to(&mut self, pos: i64) {
        let idx = self.origin as i64 + pos;
        if idx < 0 {
            let extra = (-idx as usize).max(self.cells.len());
            let mut cells = vec![0; extra];
            cells.extend_from_slice(&self.cells);
            self.cells = cells;
            self.origin += extra;
        } else {
            let needed = idx as usize + 1;
            let len = needed.max(self.cells.len() * 2);
            self.cells.resize(len, 0);
        }
    }

    pub fn nonblank_count(&self) -> usize {
        self.nonblank
    }

    pub fn is_blank(&self) -> bool {
        self.nonblank == 0
    }

    /// Leftmost and rightmost non-blank positions.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.is_blank() {
            return None;
        }
        let lo = self.cells.iter().position(|&c| c != 0)?;
        let hi = self.cells.iter().rposition(|&c| c != 0)?;
        Some((lo as i64 - self.origin as i64, hi as i64 - self.origin as i64))
    }

    /// Contents of the non-blank span, leftmost first.
    pub fn span(&self) -> &[u8] {
        match self.support() {
            None => &[],
            Some((lo, hi)) => {
                let o = self.origin as i64;
                &self.cells[(lo + o) as usize..=(hi + o) as usize]
            }
        }
    }
}

impl PartialEq for Tape {
    fn eq(&self, other: &Self) -> bool {
        self.support() == other.support() && self.span() == other.span()
    }
}

impl Eq for Tape {}

/// Tape contents, head position and control state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub tape: Tape,
    pub head: i64,
    pub state: StateId,
}

impl Default for Configuration {
    fn default() -> Self {
        Self::blank()
    }
}

impl Configuration {
    /// All-blank tape, head at 0, start state.
    pub fn blank() -> Self {
        Configuration {
            tape: Tape::new(),
            head: 0,
            state: StateId::START,
        }
    }

    pub fn read(&self) -> Symbol {
        self.tape.read(self.head)
    }
}

impl fmt::Display for Configuration {
    /// `111{b}011` notation: the head cell and everything right of it follow
    /// the braces. Blanks outside the non-blank span are dropped except the
    /// scanned cell; a halted configuration drops a blank scanned cell at
    /// the edge of the span.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = self.head;
        let (mut lo, mut hi) = self.tape.support().unwrap_or((head, head));
        let show_head = !self.state.is_halt() || !self.read().is_blank() || (lo < head && head < hi);
        if show_head {
            lo = lo.min(head);
            hi = hi.max(head);
        }
        let mut out = String::new();
        for pos in lo..head {
            out.push_str(&self.tape.read(pos).to_string());
        }
        out.push('{');
        out.push(self.state.letter());
        out.push('}');
        let start = if show_head { head } else { head + 1 };
        for pos in start..=hi {
            out.push_str(&self.tape.read(pos).to_string());
        }
        f.write_str(&out)
    }
}

/// Productivity of a configuration: the number of non-blank cells.
pub fn productivity_of(config: &Configuration) -> usize {
    config.tape.nonblank_count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub bound: u64,
    pub detect_blank_tape: bool,
    pub detect_cycles: bool,
    pub cycle_history_cap: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            bound: DEFAULT_BOUND,
            detect_blank_tape: true,
            detect_cycles: false,
            cycle_history_cap: DEFAULT_CYCLE_HISTORY_CAP,
        }
    }
}

impl RunOptions {
    pub fn with_bound(bound: u64) -> Self {
        RunOptions {
            bound: bound.max(1),
            ..Self::default()
        }
    }

    /// Plain execution: no early stop other than the bound.
    pub fn plain(bound: u64) -> Self {
        RunOptions {
            bound: bound.max(1),
            detect_blank_tape: false,
            ..Self::default()
        }
    }

    pub fn cycles(mut self, on: bool) -> Self {
        self.detect_cycles = on;
        self
    }

    pub fn blank_check(mut self, on: bool) -> Self {
        self.detect_blank_tape = on;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Halted,
    UndefinedCell,
    BlankTapeRecurrence,
    CycleDetected,
    BoundExceeded,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OutcomeKind::Halted => "Halted",
            OutcomeKind::UndefinedCell => "UndefinedCell",
            OutcomeKind::BlankTapeRecurrence => "BlankTapeRecurrence",
            OutcomeKind::CycleDetected => "CycleDetected",
            OutcomeKind::BoundExceeded => "BoundExceeded",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub kind: OutcomeKind,
    pub steps: u64,
    pub last: Configuration,
    /// The missing cell, for [`OutcomeKind::UndefinedCell`].
    pub cell: Option<(StateId, Symbol)>,
    /// Latest step after the start at which the tape was all blank, and the
    /// state at that point.
    pub last_blank: Option<(u64, StateId)>,
    /// State that performed the first non-blank write, and the step count
    /// before that write.
    pub first_write: Option<(u64, StateId)>,
}

impl RunOutcome {
    /// Steps taken to halt, if the run halted.
    pub fn activity(&self) -> Option<u64> {
        (self.kind == OutcomeKind::Halted).then_some(self.steps)
    }

    pub fn productivity(&self) -> Option<usize> {
        (self.kind == OutcomeKind::Halted).then(|| productivity_of(&self.last))
    }

    /// Halted, or stopped on an undefined cell (which also halts the machine).
    pub fn stopped(&self) -> bool {
        matches!(self.kind, OutcomeKind::Halted | OutcomeKind::UndefinedCell)
    }

    /// One-line summary: `<tag> steps=<k> productivity=<p|->`.
    pub fn summary(&self) -> String {
        let p = self
            .productivity()
            .map_or_else(|| "-".to_string(), |p| p.to_string());
        format!("{} steps={} productivity={}", self.kind, self.steps, p)
    }
}

/// Result of attempting a single step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Applied(Transition),
    Undefined(StateId, Symbol),
}

/// Applies one quintuple to `config`.
///
/// # Panics
/// If `config` is already in the halt state.
pub fn step(machine: &Machine, config: &mut Configuration) -> Step {
    assert!(!config.state.is_halt(), "cannot step a halted configuration");
    let input = config.read();
    match machine.get(config.state, input) {
        None => Step::Undefined(config.state, input),
        Some(action) => {
            let t = Transition::new(config.state, input, action);
            config.tape.write(config.head, action.output);
            config.head += action.direction.offset();
            config.state = action.next;
            Step::Applied(t)
        }
    }
}

/// Translation-invariant key: state, head relative to the leftmost
/// non-blank, and the non-blank span.
#[derive(Hash, PartialEq, Eq)]
pub(crate) struct ConfigKey {
    state: StateId,
    offset: i64,
    span: Box<[u8]>,
}

impl ConfigKey {
    pub(crate) fn of(config: &Configuration) -> Self {
        let offset = config.tape.support().map_or(0, |(lo, _)| config.head - lo);
        ConfigKey {
            state: config.state,
            offset,
            span: config.tape.span().into(),
        }
    }
}

/// Resumable execution state.
#[derive(Debug, Clone, Default)]
pub struct Run {
    pub config: Configuration,
    pub steps: u64,
    pub last_blank: Option<(u64, StateId)>,
    pub first_write: Option<(u64, StateId)>,
}

impl Run {
    /// Continues until a stopping condition. Cycle detection is not
    /// available when resuming, since the earlier history is gone.
    pub fn advance(&mut self, machine: &Machine, opts: &RunOptions) -> OutcomeKind {
        self.advance_inner(machine, opts, None::<&mut HashSet<ConfigKey>>)
    }

    fn advance_inner(
        &mut self,
        machine: &Machine,
        opts: &RunOptions,
        mut history: Option<&mut HashSet<ConfigKey>>,
    ) -> OutcomeKind {
        loop {
            if self.config.state.is_halt() {
                return OutcomeKind::Halted;
            }
            let input = self.config.read();
            let Some(action) = machine.get(self.config.state, input) else {
                return OutcomeKind::UndefinedCell;
            };
            if self.steps >= opts.bound {
                return OutcomeKind::BoundExceeded;
            }
            if self.first_write.is_none() && !action.output.is_blank() {
                self.first_write = Some((self.steps, self.config.state));
            }
            self.config.tape.write(self.config.head, action.output);
            self.config.head += action.direction.offset();
            self.config.state = action.next;
            self.steps += 1;
            if action.next.is_halt() {
                return OutcomeKind::Halted;
            }
            if self.config.tape.is_blank() {
                self.last_blank = Some((self.steps, self.config.state));
                if opts.detect_blank_tape {
                    return OutcomeKind::BlankTapeRecurrence;
                }
            }
            if let Some(seen) = history.as_deref_mut() {
                if seen.len() < opts.cycle_history_cap {
                    if !seen.insert(ConfigKey::of(&self.config)) {
                        return OutcomeKind::CycleDetected;
                    }
                } else if seen.contains(&ConfigKey::of(&self.config)) {
                    return OutcomeKind::CycleDetected;
                }
            }
        }
    }

    pub fn outcome(self, kind: OutcomeKind) -> RunOutcome {
        let cell = (kind == OutcomeKind::UndefinedCell)
            .then(|| (self.config.state, self.config.read()));
        RunOutcome {
            kind,
            steps: self.steps,
            last: self.config,
            cell,
            last_blank: self.last_blank,
            first_write: self.first_write,
        }
    }
}

/// Runs `machine` from the blank tape.
pub fn run(machine: &Machine, opts: &RunOptions) -> RunOutcome {
    let (kind, r) = run_state(machine, opts);
    r.outcome(kind)
}

/// Like [`run`], but keeps the resumable state.
pub fn run_state(machine: &Machine, opts: &RunOptions) -> (OutcomeKind, Run) {
    let mut r = Run::default();
    let kind = if opts.detect_cycles {
        let mut history = HashSet::new();
        history.insert(ConfigKey::of(&r.config));
        r.advance_inner(machine, opts, Some(&mut history))
    } else {
        r.advance(machine, opts)
    };
    (kind, r)
}

/// Rendered configuration sequence of a run plus its outcome.
#[derive(Debug, Clone)]
pub struct Trace {
    pub configurations: Vec<String>,
    pub outcome: RunOutcome,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.configurations.join(" => "))
    }
}

/// Runs `machine` like [`run`], recording every configuration.
pub fn trace(machine: &Machine, opts: &RunOptions) -> Trace {
    let single = RunOptions {
        bound: 1,
        ..*opts
    };
    let mut r = Run::default();
    let mut history = opts.detect_cycles.then(|| {
        let mut h = HashSet::new();
        h.insert(ConfigKey::of(&r.config));
        h
    });
    let mut configurations = vec![r.config.to_string()];
    let kind = loop {
        if r.steps >= opts.bound {
            let kind = match r.config.state.is_halt() {
                true => OutcomeKind::Halted,
                false if machine.get(r.config.state, r.config.read()).is_none() => {
                    OutcomeKind::UndefinedCell
                }
                false => OutcomeKind::BoundExceeded,
            };
            break kind;
        }
        let limit = RunOptions {
            bound: r.steps + 1,
            ..single
        };
        let before = r.steps;
        let kind = r.advance_inner(machine, &limit, history.as_mut());
        if r.steps > before {
            configurations.push(r.config.to_string());
        }
        if kind != OutcomeKind::BoundExceeded {
            break kind;
        }
    };
    Trace {
        configurations,
        outcome: r.outcome(kind),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrelevantReason {
    /// Halts within `n` steps, no better than the trivial chain machine.
    ActivityAtMostStates,
    ZeroProductivity,
    BlankTape,
    NonTerminating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relevance {
    Relevant,
    Irrelevant(IrrelevantReason),
    Unknown,
}

/// Applies the relevance conditions to a finished run of `machine`.
///
/// A stop on an undefined cell is treated as halting there.
pub fn classify_relevance(machine: &Machine, outcome: &RunOutcome) -> Relevance {
    use IrrelevantReason::*;
    match outcome.kind {
        OutcomeKind::BoundExceeded => Relevance::Unknown,
        OutcomeKind::CycleDetected => Relevance::Irrelevant(NonTerminating),
        OutcomeKind::BlankTapeRecurrence => Relevance::Irrelevant(BlankTape),
        OutcomeKind::Halted | OutcomeKind::UndefinedCell => {
            if outcome.steps <= machine.dim().states() as u64 {
                Relevance::Irrelevant(ActivityAtMostStates)
            } else if productivity_of(&outcome.last) == 0 {
                Relevance::Irrelevant(ZeroProductivity)
            } else if outcome.last_blank.is_some() {
                Relevance::Irrelevant(BlankTape)
            } else {
                Relevance::Relevant
            }
        }
    }
}
