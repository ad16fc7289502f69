//! On-disk formats: machine specs, instances, traces and the sampled CSV.
//! Every number is stored as an exact `"p/q"` string; only the CSV is lossy.

use serde::{Deserialize, Serialize};

use crate::counter_machine::{Configuration, CounterMachine, Delta};
use crate::error::{Error, Result};
use crate::exact_num::{Rational, RationalMatrix, RationalVector};
use crate::fluid_sim::Trace;
use crate::reduction::{Group, GroupLayout, SkorokhodInstance};

/// A counter machine together with its starting configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineFile {
    pub states: usize,
    pub halt_state: usize,
    pub initial: Configuration,
    pub transitions: Vec<TransitionEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub state: usize,
    pub b: u8,
    pub c: u8,
    pub next: usize,
    pub delta: Delta,
}

impl MachineFile {
    pub fn from_machine(cm: &CounterMachine, initial: Configuration) -> Self {
        MachineFile {
            states: cm.states(),
            halt_state: cm.halt_state(),
            initial,
            transitions: cm
                .entries()
                .map(|((state, b, c), t)| TransitionEntry {
                    state,
                    b,
                    c,
                    next: t.next,
                    delta: t.delta,
                })
                .collect(),
        }
    }

    /// Builds the machine; structural problems surface as an invalid-machine
    /// error with the full validation report.
    pub fn to_machine(&self) -> Result<(CounterMachine, Configuration)> {
        let mut cm = CounterMachine::new(self.states, self.halt_state);
        for t in &self.transitions {
            cm.set(t.state, t.b, t.c, t.next, t.delta)?;
        }
        let report = cm.validate();
        if !report.is_valid() {
            return Err(Error::InvalidMachine(report));
        }
        if self.initial.state == 0 || self.initial.state > self.states {
            return Err(Error::usage(format!("initial state {} out of range", self.initial.state)));
        }
        Ok((cm, self.initial))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub m: usize,
    /// Alternating group name and size: `["A", 5, "B", m, ...]`.
    pub groups: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub dim: usize,
    pub z0: RationalVector,
    pub theta: RationalVector,
    #[serde(rename = "R")]
    pub r: Vec<RationalVector>,
    pub layout: Option<LayoutFile>,
    pub modified: bool,
    pub labels: Vec<String>,
}

impl InstanceFile {
    pub fn from_instance(inst: &SkorokhodInstance) -> Self {
        let layout = inst.layout.map(|l| LayoutFile {
            m: l.m(),
            groups: Group::ALL
                .iter()
                .flat_map(|&g| [serde_json::json!(g.name()), serde_json::json!(l.size(g))])
                .collect(),
        });
        let labels = match inst.layout {
            Some(l) => l.labels(),
            None => (1..=inst.dim()).map(|j| format!("z{j}")).collect(),
        };
        InstanceFile {
            dim: inst.dim(),
            z0: inst.z0.clone(),
            theta: inst.theta.clone(),
            r: inst.r.to_rows(),
            layout,
            modified: inst.modified,
            labels,
        }
    }

    pub fn to_instance(&self) -> Result<SkorokhodInstance> {
        let r = RationalMatrix::from_rows(self.r.clone())?;
        if self.dim != self.z0.len() {
            return Err(Error::Format(format!("dim {} but z0 has {} entries", self.dim, self.z0.len())));
        }
        let mut inst = SkorokhodInstance::new(self.z0.clone(), self.theta.clone(), r)?;
        if let Some(lf) = &self.layout {
            let layout = GroupLayout::new(lf.m)?;
            let expected = InstanceFile::from_instance(&SkorokhodInstance {
                layout: Some(layout),
                ..inst.clone()
            })
            .layout
            .expect("layout set");
            if layout.dim() != self.dim || expected.groups != lf.groups {
                return Err(Error::Format(format!(
                    "layout for m={} does not match dimension {}",
                    lf.m, self.dim
                )));
            }
            inst.layout = Some(layout);
        }
        inst.modified = self.modified;
        Ok(inst)
    }
}

pub fn parse_machine(text: &str) -> Result<(CounterMachine, Configuration)> {
    serde_json::from_str::<MachineFile>(text)?.to_machine()
}

pub fn parse_instance(text: &str) -> Result<SkorokhodInstance> {
    serde_json::from_str::<InstanceFile>(text)?.to_instance()
}

pub fn parse_trace(text: &str) -> Result<Trace> {
    Ok(serde_json::from_str(text)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Decimal rendering with 12 significant digits, for plotting only.
pub fn decimal(x: &Rational) -> String {
    let v = x.to_f64();
    if v == 0.0 {
        return "0".into();
    }
    let digits = 11 - v.abs().log10().floor() as i32;
    let s = if digits > 0 {
        format!("{:.*}", digits as usize, v)
    } else {
        format!("{v:.0}")
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Samples `trace` at `0, dt, 2 dt, ...` up to the last covered time (or
/// `t_end` for a trailing ray) as CSV with header `t,z_1,...,z_d`.
pub fn sample_csv(trace: &Trace, dt: &Rational, t_end: &Rational) -> Result<String> {
    if !dt.is_positive() {
        return Err(Error::usage("sample step must be positive"));
    }
    let Some(first) = trace.segments.first() else {
        return Ok(String::new());
    };
    let d = first.z.len();
    let last = match trace.segments.last().and_then(|s| s.t1.clone()) {
        Some(t1) => t1.min(t_end.clone()),
        None => t_end.clone(),
    };
    let mut out = String::from("t");
    for j in 1..=d {
        out.push_str(&format!(",z_{j}"));
    }
    out.push('\n');
    let mut t = Rational::zero();
    while t <= last {
        if let Some(z) = trace.state_at(&t) {
            out.push_str(&decimal(&t));
            for v in &z {
                out.push(',');
                out.push_str(&decimal(v));
            }
            out.push('\n');
        }
        t += dt;
    }
    Ok(out)
}
