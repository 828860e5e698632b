#![allow(dead_code)]

use beaver_zoo::machine::tr;
use beaver_zoo::{Action, Dimension, Direction, Machine, StateId, Symbol};
use proptest::prelude::*;

pub fn dim(n: u32, m: u32) -> Dimension {
    Dimension::new(n, m).unwrap()
}

pub fn machine(n: u32, m: u32, ts: &[&str]) -> Machine {
    Machine::from_transitions(dim(n, m), ts.iter().map(|t| tr(t))).unwrap()
}

pub fn st(c: char) -> StateId {
    StateId::from_letter(c).unwrap()
}

pub fn sym(v: usize) -> Symbol {
    Symbol::new(v)
}

/// A machine of the given dimension with each cell defined with
/// probability `fill`.
pub fn machine_in(d: Dimension, fill: f64) -> impl Strategy<Value = Machine> {
    let (n, m) = (d.states(), d.symbols());
    let cell = (any::<f64>(), 0..m, any::<bool>(), 0..=n).prop_map(move |(p, o, right, next)| {
        (p < fill).then(|| {
            let next = if next == n { StateId::HALT } else { StateId::new(next) };
            let dir = if right { Direction::Right } else { Direction::Left };
            Action::new(Symbol::new(o), dir, next)
        })
    });
    prop::collection::vec(cell, d.cells()).prop_map(move |cells| {
        let mut machine = Machine::empty(d);
        for (c, a) in cells.into_iter().enumerate() {
            if let Some(a) = a {
                let (s, i) = d.cell_at(c);
                machine.insert(s, i, a).unwrap();
            }
        }
        machine
    })
}

pub fn small_dim() -> impl Strategy<Value = Dimension> {
    prop_oneof![Just(dim(2, 2)), Just(dim(3, 2)), Just(dim(2, 3)), Just(dim(3, 3))]
}

pub fn any_machine() -> impl Strategy<Value = Machine> {
    small_dim().prop_flat_map(|d| machine_in(d, 0.85))
}

pub fn complete_machine() -> impl Strategy<Value = Machine> {
    small_dim().prop_flat_map(|d| machine_in(d, 1.0))
}
