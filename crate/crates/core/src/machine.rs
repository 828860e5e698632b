//! Quintuple machine model, well-formedness predicates and the single-line
//! text codec used by corpus files.
//!
//! A machine is a partial transition table over `n` standard states and `m`
//! tape symbols. Cells are addressed by `(state, input)` and hold at most one
//! [`Action`], so determinism is enforced by construction.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest supported state count. Letters `a`..=`y` name standard states,
/// `z` is reserved for the halt state.
pub const MAX_STATES: u8 = 25;
/// Largest supported symbol count. Symbols are rendered as single digits.
pub const MAX_SYMBOLS: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("dimension {states}x{symbols} is out of range (need 2..={MAX_STATES} states and 2..={MAX_SYMBOLS} symbols)")]
    Dimension { states: u32, symbols: u32 },
    #[error("state {0} is outside the machine's dimension")]
    StateOutOfRange(StateId),
    #[error("symbol {0} is outside the machine's dimension")]
    SymbolOutOfRange(Symbol),
    #[error("cell ({0},{1}) is already defined")]
    DuplicateCell(StateId, Symbol),
    #[error("the halt state has no transitions")]
    HaltCell,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty line")]
    Empty,
    #[error("bad dimension field {0:?}")]
    Dimension(String),
    #[error("dimension {0} expects {1} cells, found {2}")]
    CellCount(Dimension, usize, usize),
    #[error("bad cell {index} ({text:?}): {reason}")]
    Cell {
        index: usize,
        text: String,
        reason: String,
    },
    #[error("bad status field {0:?}")]
    Status(String),
    #[error("missing status field")]
    MissingStatus,
}

/// Machine size: `n` standard states and `m` tape symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension {
    states: u8,
    symbols: u8,
}

impl Dimension {
    pub fn new(states: u32, symbols: u32) -> Result<Self, MachineError> {
        if !(2..=MAX_STATES as u32).contains(&states) || !(2..=MAX_SYMBOLS as u32).contains(&symbols)
        {
            return Err(MachineError::Dimension { states, symbols });
        }
        Ok(Dimension {
            states: states as u8,
            symbols: symbols as u8,
        })
    }

    pub fn states(self) -> usize {
        self.states as usize
    }

    pub fn symbols(self) -> usize {
        self.symbols as usize
    }

    /// Number of `(state, symbol)` cells, `n·m`.
    pub fn cells(self) -> usize {
        self.states() * self.symbols()
    }

    pub fn contains_state(self, state: StateId) -> bool {
        state.0 < self.states
    }

    pub fn contains_symbol(self, symbol: Symbol) -> bool {
        symbol.0 < self.symbols
    }

    /// Standard states in ordinal order.
    pub fn state_ids(self) -> impl Iterator<Item = StateId> {
        (0..self.states).map(StateId)
    }

    pub fn symbol_ids(self) -> impl Iterator<Item = Symbol> {
        (0..self.symbols).map(Symbol)
    }

    /// Row-major cell index of `(state, input)`.
    pub fn cell_index(self, state: StateId, input: Symbol) -> usize {
        state.0 as usize * self.symbols() + input.0 as usize
    }

    pub fn cell_at(self, index: usize) -> (StateId, Symbol) {
        (
            StateId((index / self.symbols()) as u8),
            Symbol((index % self.symbols()) as u8),
        )
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.states, self.symbols)
    }
}

impl FromStr for Dimension {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::Dimension(s.to_string());
        let (n, m) = s.split_once('x').ok_or_else(bad)?;
        let n: u32 = n.parse().map_err(|_| bad())?;
        let m: u32 = m.parse().map_err(|_| bad())?;
        Dimension::new(n, m).map_err(|_| bad())
    }
}

/// A control state. Ordinal 0 is the start state `a`; [`StateId::HALT`] is `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(u8);

impl StateId {
    pub const START: StateId = StateId(0);
    pub const HALT: StateId = StateId(MAX_STATES);

    /// # Panics
    /// If `ordinal` is not below [`MAX_STATES`].
    pub fn new(ordinal: usize) -> Self {
        assert!(ordinal < MAX_STATES as usize, "state ordinal {ordinal} out of range");
        StateId(ordinal as u8)
    }

    pub fn ordinal(self) -> usize {
        self.0 as usize
    }

    pub fn is_halt(self) -> bool {
        self == Self::HALT
    }

    pub fn letter(self) -> char {
        (b'a' + self.0) as char
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'a'..='z' => Some(StateId(c as u8 - b'a')),
            _ => None,
        }
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A tape symbol; 0 is the blank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u8);

impl Symbol {
    pub const BLANK: Symbol = Symbol(0);

    /// # Panics
    /// If `value` is not below [`MAX_SYMBOLS`].
    pub fn new(value: usize) -> Self {
        assert!(value < MAX_SYMBOLS as usize, "symbol {value} out of range");
        Symbol(value as u8)
    }

    pub fn value(self) -> usize {
        self.0 as usize
    }

    pub fn is_blank(self) -> bool {
        self.0 == 0
    }

    pub fn from_digit(c: char) -> Option<Self> {
        c.to_digit(10).map(|d| Symbol(d as u8))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Direction::Left => 'l',
            Direction::Right => 'r',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'l' => Some(Direction::Left),
            'r' => Some(Direction::Right),
            _ => None,
        }
    }

    pub(crate) fn offset(self) -> i64 {
        match self {
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }
}

/// Output, direction and next state of a quintuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub output: Symbol,
    pub direction: Direction,
    pub next: StateId,
}

impl Action {
    pub fn new(output: Symbol, direction: Direction, next: StateId) -> Self {
        Action {
            output,
            direction,
            next,
        }
    }

    /// The canonical halting action `(1, r, z)`.
    pub fn halt() -> Self {
        Action::new(Symbol(1), Direction::Right, StateId::HALT)
    }

    pub fn is_halting(&self) -> bool {
        self.next.is_halt()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.output, self.direction.letter(), self.next)
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let (Some(o), Some(d), Some(ns), None) =
            (chars.next(), chars.next(), chars.next(), chars.next())
        else {
            return Err("expected three characters".into());
        };
        let output = Symbol::from_digit(o).ok_or("output is not a digit")?;
        let direction = Direction::from_letter(d).ok_or("direction is not l or r")?;
        let next = StateId::from_letter(ns).ok_or("next state is not a letter")?;
        Ok(Action::new(output, direction, next))
    }
}

/// One quintuple `(State, Input, Output, Direction, NewState)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub state: StateId,
    pub input: Symbol,
    pub action: Action,
}

impl Transition {
    pub fn new(state: StateId, input: Symbol, action: Action) -> Self {
        Transition {
            state,
            input,
            action,
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{},{},{})",
            self.state,
            self.input,
            self.action.output,
            self.action.direction.letter(),
            self.action.next
        )
    }
}

/// Shorthand used heavily in tests: `tr("a01rb")` is `(a,0,1,r,b)`.
///
/// # Panics
/// On malformed input.
pub fn tr(text: &str) -> Transition {
    let chars: Vec<char> = text.chars().collect();
    assert_eq!(chars.len(), 5, "transition shorthand {text:?}");
    let state = StateId::from_letter(chars[0]).expect("state letter");
    let input = Symbol::from_digit(chars[1]).expect("input digit");
    let action: Action = chars[2..].iter().collect::<String>().parse().expect("action");
    Transition::new(state, input, action)
}

/// A partial quintuple transition table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Machine {
    dim: Dimension,
    cells: Vec<Option<Action>>,
}

impl Machine {
    pub fn empty(dim: Dimension) -> Self {
        Machine {
            dim,
            cells: vec![None; dim.cells()],
        }
    }

    pub fn from_transitions(
        dim: Dimension,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, MachineError> {
        let mut machine = Machine::empty(dim);
        for t in transitions {
            machine.insert(t.state, t.input, t.action)?;
        }
        Ok(machine)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn get(&self, state: StateId, input: Symbol) -> Option<Action> {
        if state.is_halt() || !self.dim.contains_state(state) || !self.dim.contains_symbol(input) {
            return None;
        }
        self.cells[self.dim.cell_index(state, input)]
    }

    /// Defines a previously undefined cell.
    pub fn insert(
        &mut self,
        state: StateId,
        input: Symbol,
        action: Action,
    ) -> Result<(), MachineError> {
        self.check(state, input, action)?;
        let slot = &mut self.cells[self.dim.cell_index(state, input)];
        if slot.is_some() {
            return Err(MachineError::DuplicateCell(state, input));
        }
        *slot = Some(action);
        Ok(())
    }

    /// Clears a cell, returning the action it held.
    pub fn remove(&mut self, state: StateId, input: Symbol) -> Option<Action> {
        if state.is_halt() || !self.dim.contains_state(state) || !self.dim.contains_symbol(input) {
            return None;
        }
        self.cells[self.dim.cell_index(state, input)].take()
    }

    fn check(&self, state: StateId, input: Symbol, action: Action) -> Result<(), MachineError> {
        if state.is_halt() {
            return Err(MachineError::HaltCell);
        }
        if !self.dim.contains_state(state) {
            return Err(MachineError::StateOutOfRange(state));
        }
        if !action.next.is_halt() && !self.dim.contains_state(action.next) {
            return Err(MachineError::StateOutOfRange(action.next));
        }
        for sym in [input, action.output] {
            if !self.dim.contains_symbol(sym) {
                return Err(MachineError::SymbolOutOfRange(sym));
            }
        }
        Ok(())
    }

    /// Defined transitions in row-major order.
    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.cells.iter().enumerate().filter_map(move |(i, a)| {
            a.map(|action| {
                let (state, input) = self.dim.cell_at(i);
                Transition::new(state, input, action)
            })
        })
    }

    /// Undefined cells in row-major order.
    pub fn undefined_cells(&self) -> impl Iterator<Item = (StateId, Symbol)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_none())
            .map(move |(i, _)| self.dim.cell_at(i))
    }

    /// Number of defined cells.
    pub fn len(&self) -> usize {
        self.cells.iter().filter(|a| a.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }

    /// Bit `i` set iff standard state `i` occurs as a cell key or a next state.
    pub(crate) fn state_mask(&self) -> u32 {
        self.transitions().fold(0u32, |mask, t| {
            let mut mask = mask | 1 << t.state.0;
            if !t.action.next.is_halt() {
                mask |= 1 << t.action.next.0;
            }
            mask
        })
    }

    pub(crate) fn symbol_mask(&self) -> u32 {
        self.transitions()
            .fold(0u32, |mask, t| mask | 1 << t.input.0 | 1 << t.action.output.0)
    }

    /// Standard states used anywhere in the table.
    pub fn states_of(&self) -> BTreeSet<StateId> {
        let mask = self.state_mask();
        (0..MAX_STATES)
            .filter(|i| mask & (1 << i) != 0)
            .map(StateId)
            .collect()
    }

    pub fn symbols_of(&self) -> BTreeSet<Symbol> {
        let mask = self.symbol_mask();
        (0..MAX_SYMBOLS)
            .filter(|i| mask & (1 << i) != 0)
            .map(Symbol)
            .collect()
    }

    pub fn halting_count(&self) -> usize {
        self.transitions().filter(|t| t.action.is_halting()).count()
    }

    pub fn halting_transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.transitions().filter(|t| t.action.is_halting())
    }

    pub fn is_exhaustive(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// n-state full and m-symbol full.
    pub fn is_full(&self) -> bool {
        self.state_mask().count_ones() as usize == self.dim.states()
            && self.symbol_mask().count_ones() as usize == self.dim.symbols()
    }

    pub fn is_maximising(&self) -> bool {
        self.halting_transitions().all(|t| !t.action.output.is_blank())
    }

    /// All `n` zero-input cells are defined and every one of them moves right.
    pub fn is_zero_dextrous(&self) -> bool {
        self.dim.state_ids().all(|s| {
            matches!(
                self.get(s, Symbol::BLANK),
                Some(Action {
                    direction: Direction::Right,
                    ..
                })
            )
        })
    }
}

impl fmt::Display for Machine {
    /// `<n>x<m>` followed by every cell in row-major order, `---` when undefined.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dim)?;
        for cell in &self.cells {
            match cell {
                Some(action) => write!(f, " {action}")?,
                None => write!(f, " ---")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Machine {
    type Err = ParseError;

    /// Parses the table part of a corpus line (no status field).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split(' ').collect();
        parse_table(&fields)
    }
}

fn parse_table(fields: &[&str]) -> Result<Machine, ParseError> {
    let (dim_field, cells) = fields.split_first().ok_or(ParseError::Empty)?;
    if dim_field.is_empty() {
        return Err(ParseError::Empty);
    }
    let dim: Dimension = dim_field.parse()?;
    if cells.len() != dim.cells() {
        return Err(ParseError::CellCount(dim, dim.cells(), cells.len()));
    }
    let mut machine = Machine::empty(dim);
    for (index, text) in cells.iter().enumerate() {
        if *text == "---" {
            continue;
        }
        let cell_err = |reason: String| ParseError::Cell {
            index,
            text: text.to_string(),
            reason,
        };
        let action: Action = text.parse().map_err(cell_err)?;
        let (state, input) = dim.cell_at(index);
        machine
            .insert(state, input, action)
            .map_err(|e| cell_err(e.to_string()))?;
    }
    Ok(machine)
}

/// Generation-time classification stored alongside each corpus machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatusKind {
    /// A halting transition was added; the machine is 1-halting.
    Complete,
    BoundExceeded,
    BlankTapeIrrelevant,
    CycleIrrelevant,
}

impl StatusKind {
    pub const ALL: [StatusKind; 4] = [
        StatusKind::Complete,
        StatusKind::BoundExceeded,
        StatusKind::BlankTapeIrrelevant,
        StatusKind::CycleIrrelevant,
    ];

    pub fn letter(self) -> char {
        match self {
            StatusKind::Complete => 'H',
            StatusKind::BoundExceeded => 'B',
            StatusKind::BlankTapeIrrelevant => 'T',
            StatusKind::CycleIrrelevant => 'C',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.letter() == c)
    }
}

/// Status tag plus the number of steps executed while generating the machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MachineStatus {
    pub kind: StatusKind,
    pub steps: u64,
}

impl MachineStatus {
    pub fn new(kind: StatusKind, steps: u64) -> Self {
        MachineStatus { kind, steps }
    }
}

impl fmt::Display for MachineStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.letter(), self.steps)
    }
}

impl FromStr for MachineStatus {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::Status(s.to_string());
        let (tag, steps) = s.split_once(':').ok_or_else(bad)?;
        let mut tag_chars = tag.chars();
        let kind = match (tag_chars.next(), tag_chars.next()) {
            (Some(c), None) => StatusKind::from_letter(c).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
        if steps.is_empty() || !steps.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let steps = steps.parse().map_err(|_| bad())?;
        Ok(MachineStatus::new(kind, steps))
    }
}

/// Renders one corpus line (without the trailing newline).
pub fn format_machine(machine: &Machine, status: MachineStatus) -> String {
    format!("{machine} {status}")
}

/// Parses one corpus line: `<n>x<m> <cell>… <status>:<steps>`.
pub fn parse_machine(line: &str) -> Result<(Machine, MachineStatus), ParseError> {
    let fields: Vec<&str> = line.split(' ').collect();
    let Some((last, table)) = fields.split_last() else {
        return Err(ParseError::Empty);
    };
    if !last.contains(':') {
        // Either the status is missing or the cell count is wrong; report the
        // more useful of the two.
        return match parse_table(&fields) {
            Ok(_) => Err(ParseError::MissingStatus),
            Err(e) => Err(e),
        };
    }
    let machine = parse_table(table)?;
    let status = last.parse()?;
    Ok((machine, status))
}
