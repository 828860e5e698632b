//! Machine generators: tree normal form (tnf), free and all.
//!
//! The tnf generator interleaves execution with extension. It starts from
//! `(a,0,1,r,b)` plus one of the [`b0_candidates`], runs the partial machine
//! on the blank tape and, whenever execution reaches an undefined cell,
//! branches over the transitions that may fill it. Halting transitions are
//! only offered once every state and symbol is in use. Free and all
//! generation are purely combinatorial and exist as baselines.

use std::collections::BTreeSet;
use std::fmt;

use crate::machine::{
    Action, Dimension, Direction, Machine, MachineStatus, StateId, StatusKind, Symbol, Transition,
};
use crate::sim::{self, OutcomeKind, Run, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenMode {
    Tnf,
    Free,
    All,
}

impl GenMode {
    pub fn name(self) -> &'static str {
        match self {
            GenMode::Tnf => "tnf",
            GenMode::Free => "free",
            GenMode::All => "all",
        }
    }
}

impl fmt::Display for GenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tnf" => Ok(GenMode::Tnf),
            "free" => Ok(GenMode::Free),
            "all" => Ok(GenMode::All),
            other => Err(format!("unknown generation mode {other:?}")),
        }
    }
}

/// What to generate. `run_options` only matter for [`GenMode::Tnf`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub dim: Dimension,
    pub mode: GenMode,
    pub run_options: RunOptions,
}

impl GenConfig {
    pub fn new(dim: Dimension, mode: GenMode) -> Self {
        GenConfig {
            dim,
            mode,
            run_options: RunOptions::default(),
        }
    }
}

/// An owned generated machine with its 1-based sequence identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub id: u64,
    pub machine: Machine,
    pub status: MachineStatus,
}

/// A generated machine as handed to a sink; the machine is borrowed from
/// the generator.
#[derive(Debug, Clone, Copy)]
pub struct Emitted<'a> {
    pub id: u64,
    pub machine: &'a Machine,
    pub status: MachineStatus,
}

impl Emitted<'_> {
    pub fn to_record(self) -> CorpusRecord {
        CorpusRecord {
            id: self.id,
            machine: self.machine.clone(),
            status: self.status,
        }
    }
}

/// A sink refused a record. `emitted` counts the records it accepted.
#[derive(Debug)]
pub struct SinkError<E> {
    pub emitted: u64,
    pub source: E,
}

impl<E: fmt::Display> fmt::Display for SinkError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sink failed after {} records: {}", self.emitted, self.source)
    }
}

impl<E: std::error::Error + 'static> std::error::Error for SinkError<E> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// `used` plus the lowest unused state, if fewer than `n` are in use.
pub fn state_choice(n: usize, used: &BTreeSet<StateId>) -> BTreeSet<StateId> {
    let mut out = used.clone();
    if used.len() < n {
        if let Some(next) = (0..n).map(StateId::new).find(|s| !used.contains(s)) {
            out.insert(next);
        }
    }
    out
}

/// `used` plus the lowest unused symbol, if fewer than `m` are in use.
pub fn symbol_choice(m: usize, used: &BTreeSet<Symbol>) -> BTreeSet<Symbol> {
    let mut out = used.clone();
    if used.len() < m {
        if let Some(next) = (0..m).map(Symbol::new).find(|s| !used.contains(s)) {
            out.insert(next);
        }
    }
    out
}

/// Admissible `(b,0)` actions in the order
/// `0la 1la 2la 0lb 1lb 2lb 0lc 0rc 1lc 1rc 2lc 2rc`, restricted to the
/// dimension.
pub fn b0_candidates(dim: Dimension) -> Vec<Action> {
    let outputs: Vec<Symbol> = (0..dim.symbols().min(3)).map(Symbol::new).collect();
    let mut out = Vec::new();
    for next in [StateId::new(0), StateId::new(1)] {
        for &o in &outputs {
            out.push(Action::new(o, Direction::Left, next));
        }
    }
    if dim.states() >= 3 {
        for &o in &outputs {
            for d in [Direction::Left, Direction::Right] {
                out.push(Action::new(o, d, StateId::new(2)));
            }
        }
    }
    out
}

/// The fixed first transition `(a,0,1,r,b)`.
pub fn first_transition() -> Transition {
    Transition::new(
        StateId::START,
        Symbol::BLANK,
        Action::new(Symbol::new(1), Direction::Right, StateId::new(1)),
    )
}

fn b_state() -> StateId {
    StateId::new(1)
}

fn seed(dim: Dimension, b0: Action) -> Machine {
    let mut m = Machine::empty(dim);
    let first = first_transition();
    m.insert(first.state, first.input, first.action)
        .expect("fresh machine");
    m.insert(b_state(), Symbol::BLANK, b0)
        .expect("b0 cell is empty and in range");
    m
}

struct Tnf<'a, F> {
    dim: Dimension,
    opts: RunOptions,
    emitted: u64,
    sink: &'a mut F,
}

impl<F, E> Tnf<'_, F>
where
    F: FnMut(Emitted<'_>) -> Result<(), E>,
{
    fn emit(&mut self, machine: &Machine, kind: StatusKind, steps: u64) -> Result<(), SinkError<E>> {
        let rec = Emitted {
            id: self.emitted + 1,
            machine,
            status: MachineStatus::new(kind, steps),
        };
        (self.sink)(rec).map_err(|source| SinkError {
            emitted: self.emitted,
            source,
        })?;
        self.emitted += 1;
        Ok(())
    }

    fn execute(&self, machine: &Machine, mut resume: Run) -> (OutcomeKind, Run) {
        if self.opts.detect_cycles {
            // Cycle detection needs the full history, so start over.
            sim::run_state(machine, &self.opts)
        } else {
            let kind = resume.advance(machine, &self.opts);
            (kind, resume)
        }
    }

    fn explore(&mut self, machine: &mut Machine, resume: Run) -> Result<(), SinkError<E>> {
        let (kind, run) = self.execute(machine, resume);
        let steps = run.steps;
        match kind {
            OutcomeKind::Halted => {
                panic!("tnf partial machine halted during execution: {machine}")
            }
            OutcomeKind::BlankTapeRecurrence => {
                self.emit(machine, StatusKind::BlankTapeIrrelevant, steps)
            }
            OutcomeKind::CycleDetected => self.emit(machine, StatusKind::CycleIrrelevant, steps),
            OutcomeKind::BoundExceeded => self.emit(machine, StatusKind::BoundExceeded, steps),
            OutcomeKind::UndefinedCell => {
                let (state, input) = (run.config.state, run.config.read());
                self.extend(machine, state, input, run)
            }
        }
    }

    fn extend(
        &mut self,
        machine: &mut Machine,
        state: StateId,
        input: Symbol,
        run: Run,
    ) -> Result<(), SinkError<E>> {
        let total = self.dim.cells();
        if machine.is_full() {
            machine
                .insert(state, input, Action::halt())
                .expect("undefined cell");
            if !machine.is_zero_dextrous() {
                self.emit(machine, StatusKind::Complete, run.steps)?;
            }
            machine.remove(state, input);
        }

        let states = state_choice(self.dim.states(), &machine.states_of());
        let symbols = symbol_choice(self.dim.symbols(), &machine.symbols_of());
        for &next in &states {
            for &output in &symbols {
                for direction in [Direction::Left, Direction::Right] {
                    let action = Action::new(output, direction, next);
                    machine.insert(state, input, action).expect("undefined cell");
                    if !machine.is_zero_dextrous() {
                        if machine.len() == total - 1 {
                            let (s, i) = machine
                                .undefined_cells()
                                .next()
                                .expect("one cell left");
                            machine.insert(s, i, Action::halt()).expect("undefined cell");
                            let r = self.emit(machine, StatusKind::Complete, run.steps);
                            machine.remove(s, i);
                            r?;
                        } else {
                            self.explore(machine, run.clone())?;
                        }
                    }
                    machine.remove(state, input);
                }
            }
        }
        Ok(())
    }
}

/// Explores the tnf subtree rooted at one `(b,0)` action. Identifiers
/// restart at 1. Returns the number of records emitted.
pub fn generate_tnf_branch<F, E>(
    dim: Dimension,
    opts: &RunOptions,
    b0: Action,
    sink: &mut F,
) -> Result<u64, SinkError<E>>
where
    F: FnMut(Emitted<'_>) -> Result<(), E>,
{
    let mut search = Tnf {
        dim,
        opts: *opts,
        emitted: 0,
        sink,
    };
    let mut machine = seed(dim, b0);
    search.explore(&mut machine, Run::default())?;
    Ok(search.emitted)
}

/// Depth-first tnf enumeration over every `(b,0)` candidate, in
/// [`b0_candidates`] order. Returns the number of records emitted.
pub fn generate_tnf<F, E>(dim: Dimension, opts: &RunOptions, sink: &mut F) -> Result<u64, SinkError<E>>
where
    F: FnMut(Emitted<'_>) -> Result<(), E>,
{
    let mut offset = 0;
    for b0 in b0_candidates(dim) {
        let mut shifted = |rec: Emitted<'_>| {
            sink(Emitted {
                id: rec.id + offset,
                ..rec
            })
        };
        offset += generate_tnf_branch(dim, opts, b0, &mut shifted).map_err(|e| SinkError {
            emitted: offset + e.emitted,
            source: e.source,
        })?;
    }
    Ok(offset)
}

/// Every action with a standard next state, ordered by next state, then
/// output, then direction (`l` before `r`).
pub fn standard_actions(dim: Dimension) -> Vec<Action> {
    let mut out = Vec::with_capacity(2 * dim.cells());
    for next in dim.state_ids() {
        for output in dim.symbol_ids() {
            for d in [Direction::Left, Direction::Right] {
                out.push(Action::new(output, d, next));
            }
        }
    }
    out
}

/// Odometer over complete 1-halting machines with halting action `(1,r,z)`.
///
/// Machines are produced in lexicographic choice order: the halting cell
/// (row-major among the eligible cells) is the most significant digit,
/// followed by the remaining variable cells in row-major order.
#[derive(Debug, Clone)]
pub struct Combinatorial {
    dim: Dimension,
    /// Cells that may host the halting transition.
    halt_cells: Vec<usize>,
    /// Fixed cells and their actions.
    fixed: Vec<(usize, Action)>,
    /// Choices for each cell; cells listed here but not fixed are variable.
    choices: Vec<Option<Vec<Action>>>,
    halt_digit: usize,
    digits: Vec<usize>,
    variable: Vec<usize>,
    machine: Machine,
    started: bool,
    done: bool,
}

impl Combinatorial {
    /// Free generation: `(a,0)` fixed, `(b,0)` over [`b0_candidates`], the
    /// halting cell chosen among the remaining `n·m − 2` cells.
    pub fn free(dim: Dimension) -> Self {
        let a0 = dim.cell_index(StateId::START, Symbol::BLANK);
        let b0 = dim.cell_index(b_state(), Symbol::BLANK);
        let mut choices: Vec<Option<Vec<Action>>> = vec![Some(standard_actions(dim)); dim.cells()];
        choices[a0] = None;
        choices[b0] = Some(b0_candidates(dim));
        let halt_cells = (0..dim.cells()).filter(|&c| c != a0 && c != b0).collect();
        Self::build(dim, halt_cells, vec![(a0, first_transition().action)], choices)
    }

    /// All generation: any halting cell, every other cell unrestricted.
    pub fn all(dim: Dimension) -> Self {
        let choices = vec![Some(standard_actions(dim)); dim.cells()];
        Self::build(dim, (0..dim.cells()).collect(), Vec::new(), choices)
    }

    fn build(
        dim: Dimension,
        halt_cells: Vec<usize>,
        fixed: Vec<(usize, Action)>,
        choices: Vec<Option<Vec<Action>>>,
    ) -> Self {
        let mut it = Combinatorial {
            dim,
            halt_cells,
            fixed,
            choices,
            halt_digit: 0,
            digits: Vec::new(),
            variable: Vec::new(),
            machine: Machine::empty(dim),
            started: false,
            done: false,
        };
        it.reset_fill();
        it
    }

    fn halt_cell(&self) -> usize {
        self.halt_cells[self.halt_digit]
    }

    fn reset_fill(&mut self) {
        let halt = self.halt_cell();
        self.variable = (0..self.dim.cells())
            .filter(|&c| c != halt && self.choices[c].is_some())
            .collect();
        self.digits = vec![0; self.variable.len()];
        let mut m = Machine::empty(self.dim);
        for &(c, a) in &self.fixed {
            let (s, i) = self.dim.cell_at(c);
            m.insert(s, i, a).expect("fixed cell");
        }
        let (s, i) = self.dim.cell_at(halt);
        m.insert(s, i, Action::halt()).expect("halting cell");
        for &c in &self.variable {
            let (s, i) = self.dim.cell_at(c);
            let a = self.choices[c].as_ref().expect("variable cell")[0];
            m.insert(s, i, a).expect("variable cell");
        }
        self.machine = m;
    }

    fn set_cell(&mut self, cell: usize, action: Action) {
        let (s, i) = self.dim.cell_at(cell);
        self.machine.remove(s, i);
        self.machine.insert(s, i, action).expect("cell cleared");
    }

    fn advance(&mut self) -> bool {
        for pos in (0..self.variable.len()).rev() {
            let cell = self.variable[pos];
            let options = self.choices[cell].as_ref().expect("variable cell");
            if self.digits[pos] + 1 < options.len() {
                self.digits[pos] += 1;
                let a = options[self.digits[pos]];
                self.set_cell(cell, a);
                return true;
            }
            self.digits[pos] = 0;
            let a = options[0];
            self.set_cell(cell, a);
        }
        if self.halt_digit + 1 < self.halt_cells.len() {
            self.halt_digit += 1;
            self.reset_fill();
            return true;
        }
        false
    }

    /// Moves to the next machine and borrows it.
    pub fn next_machine(&mut self) -> Option<&Machine> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(&self.machine)
    }
}

impl Iterator for Combinatorial {
    type Item = Machine;

    fn next(&mut self) -> Option<Machine> {
        self.next_machine().cloned()
    }
}

fn int_pow(base: u128, exp: usize) -> u128 {
    base.checked_pow(exp as u32).expect("count overflows u128")
}

/// `|b0_candidates| · (n·m − 2) · (2·n·m)^(n·m − 3)`.
pub fn count_free(dim: Dimension) -> u128 {
    let cells = dim.cells();
    let per_cell = 2 * cells as u128;
    b0_candidates(dim).len() as u128 * (cells as u128 - 2) * int_pow(per_cell, cells - 3)
}

/// `n·m · (2·n·m)^(n·m − 1)`.
pub fn count_all(dim: Dimension) -> u128 {
    let cells = dim.cells();
    cells as u128 * int_pow(2 * cells as u128, cells - 1)
}

/// Emits every free or all machine with status `Complete` and 0 steps.
pub fn generate_combinatorial<F, E>(
    mut iter: Combinatorial,
    sink: &mut F,
) -> Result<u64, SinkError<E>>
where
    F: FnMut(Emitted<'_>) -> Result<(), E>,
{
    let mut emitted = 0;
    while let Some(machine) = iter.next_machine() {
        let rec = Emitted {
            id: emitted + 1,
            machine,
            status: MachineStatus::new(StatusKind::Complete, 0),
        };
        sink(rec).map_err(|source| SinkError { emitted, source })?;
        emitted += 1;
    }
    Ok(emitted)
}

/// Dispatches on `cfg.mode`.
pub fn generate<F, E>(cfg: &GenConfig, sink: &mut F) -> Result<u64, SinkError<E>>
where
    F: FnMut(Emitted<'_>) -> Result<(), E>,
{
    match cfg.mode {
        GenMode::Tnf => generate_tnf(cfg.dim, &cfg.run_options, sink),
        GenMode::Free => generate_combinatorial(Combinatorial::free(cfg.dim), sink),
        GenMode::All => generate_combinatorial(Combinatorial::all(cfg.dim), sink),
    }
}

/// Collects a whole stream into memory.
pub fn collect(cfg: &GenConfig) -> Vec<CorpusRecord> {
    let mut out = Vec::new();
    let mut push = |rec: Emitted<'_>| {
        out.push(rec.to_record());
        Ok::<(), std::convert::Infallible>(())
    };
    generate(cfg, &mut push).expect("infallible sink");
    out
}

/// Number of records `cfg` would produce, without storing them.
pub fn count(cfg: &GenConfig) -> u64 {
    let mut n = 0u64;
    let mut tally = |_: Emitted<'_>| {
        n += 1;
        Ok::<(), std::convert::Infallible>(())
    };
    generate(cfg, &mut tally).expect("infallible sink")
}
