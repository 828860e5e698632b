//! Quadruple machines, where each transition either writes or moves.
//!
//! Output transitions can be collapsed along write chains, after which every
//! quadruple machine that halts on the blank input converts into a
//! quintuple machine of the same dimension with the same productivity.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::machine::{
    Action, Dimension, Direction, Machine, MachineError, ParseError, StateId, Symbol,
};
use crate::sim::{ConfigKey, Configuration, OutcomeKind, RunOptions, RunOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadOp {
    Write(Symbol),
    Move(Direction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadAction {
    pub op: QuadOp,
    pub next: StateId,
}

impl QuadAction {
    pub fn write(output: Symbol, next: StateId) -> Self {
        QuadAction {
            op: QuadOp::Write(output),
            next,
        }
    }

    pub fn shift(direction: Direction, next: StateId) -> Self {
        QuadAction {
            op: QuadOp::Move(direction),
            next,
        }
    }

    pub fn is_move(&self) -> bool {
        matches!(self.op, QuadOp::Move(_))
    }
}

impl fmt::Display for QuadAction {
    /// `w<symbol><state>` or `m<dir><state>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            QuadOp::Write(o) => write!(f, "w{o}{}", self.next),
            QuadOp::Move(d) => write!(f, "m{}{}", d.letter(), self.next),
        }
    }
}

impl FromStr for QuadAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        let [kind, arg, next] = chars[..] else {
            return Err("expected three characters".into());
        };
        let next = StateId::from_letter(next).ok_or_else(|| format!("bad state {next:?}"))?;
        match kind {
            'w' => {
                let o = Symbol::from_digit(arg).ok_or_else(|| format!("bad symbol {arg:?}"))?;
                Ok(QuadAction::write(o, next))
            }
            'm' => {
                let d = Direction::from_letter(arg).ok_or_else(|| format!("bad direction {arg:?}"))?;
                Ok(QuadAction::shift(d, next))
            }
            _ => Err(format!("expected w or m, found {kind:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadMachine {
    dim: Dimension,
    cells: Vec<Option<QuadAction>>,
}

impl QuadMachine {
    pub fn empty(dim: Dimension) -> Self {
        QuadMachine {
            dim,
            cells: vec![None; dim.cells()],
        }
    }

    pub fn from_rules(
        dim: Dimension,
        rules: impl IntoIterator<Item = (StateId, Symbol, QuadAction)>,
    ) -> Result<Self, MachineError> {
        let mut m = Self::empty(dim);
        for (s, i, a) in rules {
            m.insert(s, i, a)?;
        }
        Ok(m)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn get(&self, state: StateId, input: Symbol) -> Option<QuadAction> {
        if state.is_halt() || !self.dim.contains_state(state) || !self.dim.contains_symbol(input) {
            return None;
        }
        self.cells[self.dim.cell_index(state, input)]
    }

    pub fn insert(&mut self, state: StateId, input: Symbol, action: QuadAction) -> Result<(), MachineError> {
        if state.is_halt() {
            return Err(MachineError::HaltCell);
        }
        for s in [state, action.next] {
            if !s.is_halt() && !self.dim.contains_state(s) {
                return Err(MachineError::StateOutOfRange(s));
            }
        }
        if !self.dim.contains_symbol(input) {
            return Err(MachineError::SymbolOutOfRange(input));
        }
        if let QuadOp::Write(o) = action.op {
            if !self.dim.contains_symbol(o) {
                return Err(MachineError::SymbolOutOfRange(o));
            }
        }
        let slot = &mut self.cells[self.dim.cell_index(state, input)];
        if slot.is_some() {
            return Err(MachineError::DuplicateCell(state, input));
        }
        *slot = Some(action);
        Ok(())
    }

    /// Defined rules in row-major order.
    pub fn rules(&self) -> impl Iterator<Item = (StateId, Symbol, QuadAction)> + '_ {
        self.cells.iter().enumerate().filter_map(move |(i, a)| {
            a.map(|a| {
                let (s, input) = self.dim.cell_at(i);
                (s, input, a)
            })
        })
    }

    pub fn len(&self) -> usize {
        self.cells.iter().filter(|a| a.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every output rule is a self-loop, ends its chain, or feeds a move.
    pub fn is_normalised(&self) -> bool {
        self.rules().all(|(s, i, a)| match a.op {
            QuadOp::Move(_) => true,
            QuadOp::Write(o) => {
                (a.next == s && o == i) || self.get(a.next, o).is_none_or(|b| b.is_move())
            }
        })
    }
}

impl fmt::Display for QuadMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dim)?;
        for cell in &self.cells {
            match cell {
                Some(a) => write!(f, " {a}")?,
                None => write!(f, " ---")?,
            }
        }
        Ok(())
    }
}

impl FromStr for QuadMachine {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split(' ').collect();
        let (dim_field, cells) = fields.split_first().ok_or(ParseError::Empty)?;
        if dim_field.is_empty() {
            return Err(ParseError::Empty);
        }
        let dim: Dimension = dim_field.parse()?;
        if cells.len() != dim.cells() {
            return Err(ParseError::CellCount(dim, dim.cells(), cells.len()));
        }
        let mut m = QuadMachine::empty(dim);
        for (index, text) in cells.iter().enumerate() {
            if *text == "---" {
                continue;
            }
            let cell_err = |reason: String| ParseError::Cell {
                index,
                text: text.to_string(),
                reason,
            };
            let a: QuadAction = text.parse().map_err(cell_err)?;
            let (st, input) = dim.cell_at(index);
            m.insert(st, input, a).map_err(|e| cell_err(e.to_string()))?;
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    /// The write chain revisits one of its own cells.
    OutputCycle,
    /// The write chain stops at a cell with no rule.
    OutputChain { terminal: (StateId, Symbol) },
    /// The write chain reaches a movement rule, given as
    /// `(state, input, direction, next)`.
    MovementChain {
        terminal_move: (StateId, Symbol, Direction, StateId),
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadError {
    #[error("cell ({0},{1}) has no rule")]
    Undefined(StateId, Symbol),
    #[error("rule at ({0},{1}) is not normalised")]
    NotNormalised(StateId, Symbol),
    #[error("rule at ({0},{1}) is a self-loop")]
    SelfLoop(StateId, Symbol),
}

/// Follows the write chain starting at `(state, input)`.
pub fn classify_cell(qm: &QuadMachine, state: StateId, input: Symbol) -> Result<CellClass, QuadError> {
    let mut cell = (state, input);
    let mut action = qm.get(state, input).ok_or(QuadError::Undefined(state, input))?;
    let mut seen = HashSet::from([cell]);
    loop {
        let o = match action.op {
            QuadOp::Move(d) => {
                return Ok(CellClass::MovementChain {
                    terminal_move: (cell.0, cell.1, d, action.next),
                })
            }
            QuadOp::Write(o) => o,
        };
        cell = (action.next, o);
        if !seen.insert(cell) {
            return Ok(CellClass::OutputCycle);
        }
        match qm.get(cell.0, cell.1) {
            Some(a) => action = a,
            None => return Ok(CellClass::OutputChain { terminal: cell }),
        }
    }
}

/// Collapses every output rule onto the end of its write chain; rules on
/// a cycle become self-loops.
pub fn normalise_quad(qm: &QuadMachine) -> QuadMachine {
    let mut out = QuadMachine::empty(qm.dim);
    for (s, i, a) in qm.rules() {
        let replaced = match a.op {
            QuadOp::Move(_) => a,
            QuadOp::Write(_) => match classify_cell(qm, s, i).expect("rule is defined") {
                CellClass::OutputCycle => QuadAction::write(i, s),
                CellClass::OutputChain { terminal: (ns, o) } => QuadAction::write(o, ns),
                CellClass::MovementChain {
                    terminal_move: (ns, o, _, _),
                } => QuadAction::write(o, ns),
            },
        };
        out.insert(s, i, replaced).expect("same cell layout");
    }
    out
}

/// Drops rules of the form `(S,I,I,S)`.
pub fn strip_self_loops(qm: &QuadMachine) -> QuadMachine {
    let mut out = QuadMachine::empty(qm.dim);
    for (s, i, a) in qm.rules() {
        if a != QuadAction::write(i, s) {
            out.insert(s, i, a).expect("same cell layout");
        }
    }
    out
}

/// Converts a normalised, self-loop-free quadruple machine into a
/// quintuple machine with the same dimension and productivity.
pub fn quad_to_quint(qm: &QuadMachine) -> Result<Machine, QuadError> {
    let mut out = Machine::empty(qm.dim);
    for (s, i, a) in qm.rules() {
        let action = match a.op {
            QuadOp::Move(d) => Action::new(i, d, a.next),
            QuadOp::Write(o) => {
                if a.next == s && o == i {
                    return Err(QuadError::SelfLoop(s, i));
                }
                match qm.get(a.next, o) {
                    None => Action::new(o, Direction::Right, StateId::HALT),
                    Some(QuadAction {
                        op: QuadOp::Move(d),
                        next,
                    }) => Action::new(o, d, next),
                    Some(_) => return Err(QuadError::NotNormalised(s, i)),
                }
            }
        };
        out.insert(s, i, action).expect("same cell layout");
    }
    Ok(out)
}

/// Runs from the blank tape. A missing rule halts the machine just like
/// entering `z`. Blank-tape detection is not applied.
pub fn run_quad(qm: &QuadMachine, opts: &RunOptions) -> RunOutcome {
    let mut config = Configuration::blank();
    let mut steps = 0u64;
    let mut history = opts.detect_cycles.then(|| HashSet::from([ConfigKey::of(&config)]));
    let mut last_blank = None;
    let mut first_write = None;
    let kind = loop {
        if config.state.is_halt() {
            break OutcomeKind::Halted;
        }
        let Some(action) = qm.get(config.state, config.read()) else {
            break OutcomeKind::Halted;
        };
        if steps >= opts.bound {
            break OutcomeKind::BoundExceeded;
        }
        match action.op {
            QuadOp::Write(o) => {
                if first_write.is_none() && !o.is_blank() {
                    first_write = Some((steps, config.state));
                }
                config.tape.write(config.head, o);
            }
            QuadOp::Move(d) => config.head += d.offset(),
        }
        config.state = action.next;
        steps += 1;
        if config.tape.is_blank() {
            last_blank = Some((steps, config.state));
        }
        if let Some(seen) = history.as_mut() {
            let key = ConfigKey::of(&config);
            if seen.contains(&key) {
                break OutcomeKind::CycleDetected;
            }
            if seen.len() < opts.cycle_history_cap {
                seen.insert(key);
            }
        }
    };
    RunOutcome {
        kind,
        steps,
        last: config,
        cell: None,
        last_blank,
        first_write,
    }
}

/// Every 2-state 2-symbol quadruple machine over states `a`, `b`: each cell
/// is empty or one of eight actions, 9⁴ machines in all.
pub fn all_quad_2x2() -> impl Iterator<Item = QuadMachine> {
    let dim = Dimension::new(2, 2).expect("valid dimension");
    let mut options: Vec<Option<QuadAction>> = vec![None];
    for next in dim.state_ids() {
        for o in dim.symbol_ids() {
            options.push(Some(QuadAction::write(o, next)));
        }
        for d in [Direction::Left, Direction::Right] {
            options.push(Some(QuadAction::shift(d, next)));
        }
    }
    let k = options.len();
    (0..k.pow(4)).map(move |mut code| {
        let mut cells = Vec::with_capacity(4);
        for _ in 0..4 {
            cells.push(options[code % k]);
            code /= k;
        }
        cells.reverse();
        QuadMachine { dim, cells }
    })
}
