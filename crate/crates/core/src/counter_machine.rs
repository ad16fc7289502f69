//! Two-counter machines: validation, stepping, budget-bounded runs, and the
//! halting-state augmentation used before the reduction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counter updates `(delta1, delta2)`, each in `{-1, 0, 1}`.
pub type Delta = [i8; 2];

/// The updates allowed by the single-counter machine model.
pub const SINGLE_COUNTER_DELTAS: [Delta; 5] = [[-1, 0], [0, -1], [0, 0], [1, 0], [0, 1]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub next: usize,
    pub delta: Delta,
}

/// `(state, C1, C2)`. States are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub state: usize,
    pub c1: u64,
    pub c2: u64,
}

impl Configuration {
    pub fn new(state: usize, c1: u64, c2: u64) -> Self {
        Configuration { state, c1, c2 }
    }

    /// The zero/positive flags `(1{C1>0}, 1{C2>0})` that select a transition.
    pub fn flags(&self) -> (u8, u8) {
        (u8::from(self.c1 > 0), u8::from(self.c2 > 0))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.state, self.c1, self.c2)
    }
}

/// Offset of `(state, b, c)` inside a block of `4m` slots: `4(state-1)+2b+c`.
pub fn triple_offset(state: usize, b: u8, c: u8) -> usize {
    4 * (state - 1) + 2 * usize::from(b) + usize::from(c)
}

/// A machine with states `1..=m`, a transition table over
/// `(state, b, c)` and a designated halting state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterMachine {
    states: usize,
    halt_state: usize,
    table: Vec<Option<Transition>>,
}

impl CounterMachine {
    /// An empty table; fill it with [`CounterMachine::set`].
    pub fn new(states: usize, halt_state: usize) -> Self {
        CounterMachine {
            states,
            halt_state,
            table: vec![None; 4 * states],
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn halt_state(&self) -> usize {
        self.halt_state
    }

    pub fn set(&mut self, state: usize, b: u8, c: u8, next: usize, delta: Delta) -> Result<()> {
        if state == 0 || state > self.states || b > 1 || c > 1 {
            return Err(Error::usage(format!(
                "transition key ({state},{b},{c}) out of range for {} states",
                self.states
            )));
        }
        self.table[triple_offset(state, b, c)] = Some(Transition { next, delta });
        Ok(())
    }

    /// Builder form of [`CounterMachine::set`]; panics on an out-of-range key.
    pub fn with(mut self, state: usize, b: u8, c: u8, next: usize, delta: Delta) -> Self {
        self.set(state, b, c, next, delta).expect("transition key in range");
        self
    }

    /// Sets the same transition for all four flag combinations of `state`.
    pub fn with_all(self, state: usize, next: usize, delta: Delta) -> Self {
        self.with(state, 0, 0, next, delta)
            .with(state, 0, 1, next, delta)
            .with(state, 1, 0, next, delta)
            .with(state, 1, 1, next, delta)
    }

    pub fn transition(&self, state: usize, b: u8, c: u8) -> Option<&Transition> {
        if state == 0 || state > self.states || b > 1 || c > 1 {
            return None;
        }
        self.table[triple_offset(state, b, c)].as_ref()
    }

    /// All defined entries as `((state, b, c), transition)` in table order.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, u8, u8), &Transition)> {
        self.table.iter().enumerate().filter_map(|(k, t)| {
            t.as_ref()
                .map(|t| ((k / 4 + 1, ((k / 2) % 2) as u8, (k % 2) as u8), t))
        })
    }

    /// True when every update changes at most one counter.
    pub fn is_single_counter(&self) -> bool {
        self.entries()
            .all(|(_, t)| SINGLE_COUNTER_DELTAS.contains(&t.delta))
    }

    /// Lists every problem with the machine; an empty report means valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.states == 0 {
            violations.push(Violation::NoStates);
        }
        if self.halt_state == 0 || self.halt_state > self.states {
            violations.push(Violation::HaltOutOfRange(self.halt_state));
        }
        for state in 1..=self.states {
            for b in 0..2u8 {
                for c in 0..2u8 {
                    let Some(t) = self.transition(state, b, c) else {
                        violations.push(Violation::Undefined { state, b, c });
                        continue;
                    };
                    if t.next == 0 || t.next > self.states {
                        violations.push(Violation::NextOutOfRange { state, b, c, next: t.next });
                    }
                    if t.delta.iter().any(|d| !(-1..=1).contains(d)) {
                        violations.push(Violation::BadDelta { state, b, c, delta: t.delta });
                    }
                    for (k, flag) in [(1u8, b), (2u8, c)] {
                        if t.delta[usize::from(k - 1)] == -1 && flag == 0 {
                            violations.push(Violation::DecrementsZero { state, b, c, counter: k });
                        }
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidMachine(report))
        }
    }

    fn check_state(&self, cfg: &Configuration) -> Result<()> {
        if cfg.state == 0 || cfg.state > self.states {
            return Err(Error::usage(format!(
                "configuration state {} out of range 1..={}",
                cfg.state, self.states
            )));
        }
        Ok(())
    }

    /// Applies the transition table once, whether or not `cfg` is at the halting state.
    pub fn successor(&self, cfg: &Configuration) -> Result<Configuration> {
        self.check_state(cfg)?;
        let (b, c) = cfg.flags();
        let t = self.transition(cfg.state, b, c).ok_or_else(|| {
            Error::InvalidMachine(ValidationReport {
                violations: vec![Violation::Undefined { state: cfg.state, b, c }],
            })
        })?;
        let apply = |value: u64, d: i8| -> Result<u64> {
            match d {
                -1 => value.checked_sub(1).ok_or_else(|| {
                    Error::InvalidMachine(ValidationReport {
                        violations: vec![Violation::DecrementsZero {
                            state: cfg.state,
                            b,
                            c,
                            counter: 0,
                        }],
                    })
                }),
                0 => Ok(value),
                _ => Ok(value + 1),
            }
        };
        Ok(Configuration {
            state: t.next,
            c1: apply(cfg.c1, t.delta[0])?,
            c2: apply(cfg.c2, t.delta[1])?,
        })
    }

    /// One machine step. Stepping a configuration at the halting state is a usage error.
    pub fn step(&self, cfg: &Configuration) -> Result<Configuration> {
        if cfg.state == self.halt_state {
            return Err(Error::usage(format!(
                "configuration {cfg} is at the halting state; no further updates"
            )));
        }
        self.successor(cfg)
    }

    /// Runs from `cfg0` until the halting state is reached or `budget` steps
    /// have been taken.
    pub fn run(&self, cfg0: Configuration, budget: usize) -> Result<Run> {
        self.ensure_valid()?;
        self.check_state(&cfg0)?;
        let mut trajectory = vec![cfg0];
        let mut cfg = cfg0;
        for t in 0..=budget {
            if cfg.state == self.halt_state {
                return Ok(Run { trajectory, halted_at: Some(t) });
            }
            if t == budget {
                break;
            }
            cfg = self.successor(&cfg)?;
            trajectory.push(cfg);
        }
        Ok(Run { trajectory, halted_at: None })
    }

    /// The first `steps + 1` configurations obtained by applying the table
    /// repeatedly, ignoring the halting state.
    pub fn unroll(&self, cfg0: Configuration, steps: usize) -> Result<Vec<Configuration>> {
        self.ensure_valid()?;
        self.check_state(&cfg0)?;
        let mut out = Vec::with_capacity(steps + 1);
        out.push(cfg0);
        for _ in 0..steps {
            let next = self.successor(out.last().expect("nonempty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// Adds state `m+1`, reached exactly from the halting configuration
    /// `(halt_state, 0, 0)` with both counters raised to one; `m+1` becomes
    /// the new halting state and loops on itself.
    pub fn augment_halting(&self) -> Result<CounterMachine> {
        self.ensure_valid()?;
        let m = self.states;
        let mut out = CounterMachine::new(m + 1, m + 1);
        for ((state, b, c), t) in self.entries() {
            out.set(state, b, c, t.next, t.delta)?;
        }
        out.set(self.halt_state, 0, 0, m + 1, [1, 1])?;
        Ok(out.with_all(m + 1, m + 1, [0, 0]))
    }
}

/// Result of [`CounterMachine::run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    /// `trajectory[t]` is the configuration after `t` steps.
    pub trajectory: Vec<Configuration>,
    pub halted_at: Option<usize>,
}

impl Run {
    pub fn last(&self) -> &Configuration {
        self.trajectory.last().expect("trajectory holds at least cfg0")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoStates,
    HaltOutOfRange(usize),
    Undefined { state: usize, b: u8, c: u8 },
    NextOutOfRange { state: usize, b: u8, c: u8, next: usize },
    BadDelta { state: usize, b: u8, c: u8, delta: Delta },
    /// `counter` is 1 or 2; 0 when discovered while stepping.
    DecrementsZero { state: usize, b: u8, c: u8, counter: u8 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "machine has no states"),
            Violation::HaltOutOfRange(s) => write!(f, "halt state {s} out of range"),
            Violation::Undefined { state, b, c } => {
                write!(f, "Γ undefined at ({state},{b},{c})")
            }
            Violation::NextOutOfRange { state, b, c, next } => {
                write!(f, "next state {next} out of range at ({state},{b},{c})")
            }
            Violation::BadDelta { state, b, c, delta } => {
                write!(f, "delta {delta:?} outside {{-1,0,1}} at ({state},{b},{c})")
            }
            Violation::DecrementsZero { state, b, c, counter } => {
                write!(f, "decrements zero counter")?;
                if *counter > 0 {
                    write!(f, " {counter}")?;
                }
                write!(f, " at ({state},{b},{c})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn countdown() -> CounterMachine {
        CounterMachine::new(2, 2)
            .with(1, 1, 0, 1, [-1, 0])
            .with(1, 1, 1, 1, [-1, 0])
            .with(1, 0, 0, 2, [0, 0])
            .with(1, 0, 1, 2, [0, 0])
            .with_all(2, 2, [0, 0])
    }

    #[test]
    fn validate_reports_problems() {
        assert!(countdown().validate().is_valid());

        let bad = CounterMachine::new(1, 1).with_all(1, 1, [0, 0]).with(1, 0, 0, 1, [-1, 0]);
        let report = bad.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].to_string(), "decrements zero counter 1 at (1,0,0)");

        let mut missing = CounterMachine::new(2, 1).with_all(1, 1, [0, 0]).with_all(2, 2, [0, 0]);
        missing.table[triple_offset(2, 1, 0)] = None;
        let report = missing.validate();
        assert_eq!(report.violations, vec![Violation::Undefined { state: 2, b: 1, c: 0 }]);
        assert!(report.violations[0].to_string().contains("Γ undefined"));
    }

    #[test]
    fn step_examples() {
        let cm = CounterMachine::new(3, 3)
            .with_all(1, 1, [0, 0])
            .with(1, 1, 0, 2, [-1, 0])
            .with(1, 0, 1, 3, [1, 0])
            .with_all(2, 2, [0, 0])
            .with_all(3, 3, [0, 0]);
        assert_eq!(cm.step(&Configuration::new(1, 3, 0)).unwrap(), Configuration::new(2, 2, 0));
        assert_eq!(cm.step(&Configuration::new(1, 0, 0)).unwrap(), Configuration::new(1, 0, 0));
        assert_eq!(cm.step(&Configuration::new(1, 0, 5)).unwrap(), Configuration::new(3, 1, 5));
        assert!(cm.step(&Configuration::new(3, 0, 0)).is_err());
    }

    #[test]
    fn countdown_halts_at_four() {
        let run = countdown().run(Configuration::new(1, 3, 0), 100).unwrap();
        assert_eq!(run.halted_at, Some(4));
        let states: Vec<usize> = run.trajectory.iter().map(|c| c.state).collect();
        assert_eq!(states, vec![1, 1, 1, 1, 2]);
    }

    #[test]
    fn loop_never_halts_and_start_at_halt() {
        let lp = CounterMachine::new(2, 2).with_all(1, 1, [0, 0]).with_all(2, 2, [0, 0]);
        let run = lp.run(Configuration::new(1, 0, 0), 100).unwrap();
        assert_eq!(run.halted_at, None);
        assert_eq!(run.trajectory.len(), 101);
        let run = lp.run(Configuration::new(2, 4, 4), 100).unwrap();
        assert_eq!(run.halted_at, Some(0));
    }

    #[test]
    fn augmentation_examples() {
        let aug = countdown().augment_halting().unwrap();
        assert_eq!(aug.states(), 3);
        assert_eq!(aug.halt_state(), 3);
        let run = aug.run(Configuration::new(1, 3, 0), 100).unwrap();
        assert_eq!(run.halted_at, Some(5));
        assert_eq!(*run.last(), Configuration::new(3, 1, 1));

        let direct = aug.run(Configuration::new(2, 0, 0), 10).unwrap();
        assert_eq!(direct.halted_at, Some(1));
        assert_eq!(*direct.last(), Configuration::new(3, 1, 1));

        let invalid = CounterMachine::new(1, 1);
        assert!(invalid.augment_halting().is_err());
    }

    fn arb_machine() -> impl Strategy<Value = CounterMachine> {
        (1usize..4).prop_flat_map(|m| {
            (
                Just(m),
                1..=m,
                proptest::collection::vec((1..=m, 0usize..5), 4 * m),
            )
                .prop_map(|(m, halt, entries)| {
                    let mut cm = CounterMachine::new(m, halt);
                    for (k, (next, d)) in entries.into_iter().enumerate() {
                        let (state, b, c) = (k / 4 + 1, ((k / 2) % 2) as u8, (k % 2) as u8);
                        let mut delta = SINGLE_COUNTER_DELTAS[d];
                        // Keep the table consistent: never decrement a zero-flagged counter.
                        if (delta[0] == -1 && b == 0) || (delta[1] == -1 && c == 0) {
                            delta = [0, 0];
                        }
                        cm.set(state, b, c, next, delta).unwrap();
                    }
                    cm
                })
        })
    }

    proptest! {
        #[test]
        fn run_prefix_property(cm in arb_machine(), c1 in 0u64..4, c2 in 0u64..4, b1 in 0usize..20, extra in 0usize..20) {
            let cfg0 = Configuration::new(1, c1, c2);
            let short = cm.run(cfg0, b1).unwrap();
            let long = cm.run(cfg0, b1 + extra).unwrap();
            prop_assert_eq!(&long.trajectory[..short.trajectory.len()], &short.trajectory[..]);
            if short.halted_at.is_some() {
                prop_assert_eq!(short.halted_at, long.halted_at);
            }
        }

        #[test]
        fn augmentation_soundness(cm in arb_machine(), c1 in 0u64..4, c2 in 0u64..4, budget in 0usize..30) {
            let cfg0 = Configuration::new(1, c1, c2);
            let aug = cm.augment_halting().unwrap();
            let target = Configuration::new(cm.halt_state(), 0, 0);
            let unrolled = cm.unroll(cfg0, budget).unwrap();
            let original_hit = unrolled.iter().position(|c| *c == target);
            let aug_run = aug.run(cfg0, budget + 1).unwrap();
            prop_assert_eq!(aug_run.halted_at, original_hit.map(|t| t + 1));
            if aug_run.halted_at.is_some() {
                prop_assert_eq!(*aug_run.last(), Configuration::new(cm.states() + 1, 1, 1));
            }
            for cfg in &aug_run.trajectory {
                prop_assert!(cfg.state >= 1 && cfg.state <= aug.states());
            }
        }
    }
}
