//! Sample machines used as fixtures: `loop`, `countdown`, `transfer`, and
//! their halting-augmented variants with an `_aug` suffix.

use crate::counter_machine::{Configuration, CounterMachine};

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub machine: CounterMachine,
    pub initial: Configuration,
}

/// Two states that idle in place; started at state 1 it never halts.
pub fn loop_machine() -> CounterMachine {
    CounterMachine::new(2, 2)
        .with_all(1, 1, [0, 0])
        .with_all(2, 2, [0, 0])
}

/// Drains counter 1 in state 1, then moves to the halting state 2.
pub fn countdown() -> CounterMachine {
    CounterMachine::new(2, 2)
        .with(1, 1, 0, 1, [-1, 0])
        .with(1, 1, 1, 1, [-1, 0])
        .with(1, 0, 0, 2, [0, 0])
        .with(1, 0, 1, 2, [0, 0])
        .with_all(2, 2, [0, 0])
}

/// Moves counter 1 into counter 2 one unit per step, passes through state 2,
/// then drains counter 2 in the halting state 3.
pub fn transfer() -> CounterMachine {
    CounterMachine::new(3, 3)
        .with(1, 1, 0, 1, [-1, 1])
        .with(1, 1, 1, 1, [-1, 1])
        .with(1, 0, 0, 2, [0, 0])
        .with(1, 0, 1, 2, [0, 0])
        .with_all(2, 3, [0, 0])
        .with(3, 0, 0, 3, [0, 0])
        .with(3, 0, 1, 3, [0, -1])
        .with(3, 1, 0, 3, [0, 0])
        .with(3, 1, 1, 3, [0, -1])
}

pub fn all() -> Vec<CorpusEntry> {
    let base = [
        ("loop", loop_machine(), Configuration::new(1, 0, 0)),
        ("countdown", countdown(), Configuration::new(1, 3, 0)),
        ("transfer", transfer(), Configuration::new(1, 4, 0)),
    ];
    let aug_names = ["loop_aug", "countdown_aug", "transfer_aug"];
    let mut out = Vec::new();
    for ((name, machine, initial), aug) in base.into_iter().zip(aug_names) {
        let augmented = machine.augment_halting().expect("corpus machines are valid");
        out.push(CorpusEntry { name, machine, initial });
        out.push(CorpusEntry {
            name: aug,
            machine: augmented,
            initial,
        });
    }
    out
}

pub fn get(name: &str) -> Option<CorpusEntry> {
    all().into_iter().find(|e| e.name == name)
}
