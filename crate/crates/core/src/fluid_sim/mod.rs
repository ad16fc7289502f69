//! Exact event-driven simulation of fluid Skorokhod paths
//! `z(t) = z0 + theta t + R y(t)`.
//!
//! Between events the zero set is constant and so are the rates, so every
//! path is a list of exact linear segments. An event is a positive coordinate
//! reaching zero.

mod lcp;
mod trace;

pub use lcp::{resolve_rates, RateSolution, DEFAULT_ZSET_CAP};
pub use trace::{validate_trace, Status, Trace, TraceReport, TraceSegment, TraceViolation, ViolationKind};

use crate::error::Result;
use crate::exact_num::{axpy, nonneg_solution, Rational, RationalVector};
use crate::reduction::SkorokhodInstance;

pub const DEFAULT_MAX_EVENTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    pub t_max: Rational,
    pub max_events: usize,
    /// Largest zero-set block handed to support enumeration.
    pub zset_cap: usize,
}

impl SimOptions {
    pub fn until(t_max: Rational) -> Self {
        SimOptions {
            t_max,
            max_events: DEFAULT_MAX_EVENTS,
            zset_cap: DEFAULT_ZSET_CAP,
        }
    }
}

/// Time until the next positive coordinate hits zero along `zdot`, and the
/// coordinates that hit first. `None` when nothing is heading down.
pub fn advance(z: &[Rational], zdot: &[Rational]) -> (Option<Rational>, Vec<usize>) {
    let mut best: Option<Rational> = None;
    let mut hitters = Vec::new();
    for (j, (zj, dj)) in z.iter().zip(zdot).enumerate() {
        if !zj.is_positive() || !dj.is_negative() {
            continue;
        }
        let dt = zj / &(-dj);
        match &best {
            Some(b) if dt > *b => {}
            Some(b) if dt == *b => hitters.push(j),
            _ => {
                best = Some(dt);
                hitters = vec![j];
            }
        }
    }
    (best, hitters)
}

/// Push rates `u >= 0` with `theta + R u = 0`, which hold `z` at the origin
/// forever. Solved as a linear feasibility problem, so no enumeration cap
/// applies.
pub fn detect_absorption(inst: &SkorokhodInstance) -> Result<Option<RationalVector>> {
    let rhs: RationalVector = inst.theta.iter().map(|t| -t).collect();
    nonneg_solution(&inst.r, &rhs)
}

/// Path state while a trajectory is being built.
#[derive(Debug, Clone)]
struct Cursor {
    t: Rational,
    z: RationalVector,
    segments: Vec<TraceSegment>,
    events: usize,
}

impl Cursor {
    fn start(inst: &SkorokhodInstance) -> Self {
        Cursor {
            t: Rational::zero(),
            z: inst.z0.clone(),
            segments: Vec::new(),
            events: 0,
        }
    }

    fn finish(self, status: Status) -> Trace {
        Trace {
            status,
            segments: self.segments,
        }
    }

    /// Follows `rate` to the next event, or ends the path.
    fn follow(&mut self, rate: &RateSolution, opts: &SimOptions) -> Option<Status> {
        let (dt, _) = advance(&self.z, &rate.w);
        let Some(dt) = dt else {
            self.segments.push(TraceSegment {
                t0: self.t.clone(),
                t1: None,
                z: self.z.clone(),
                zdot: rate.w.clone(),
                ydot: rate.u.clone(),
            });
            return Some(Status::DivergingRay { t: self.t.clone() });
        };
        let t_next = &self.t + &dt;
        let clipped = t_next > opts.t_max;
        let t1 = if clipped { opts.t_max.clone() } else { t_next };
        let z1 = axpy(&self.z, &(&t1 - &self.t), &rate.w);
        self.segments.push(TraceSegment {
            t0: self.t.clone(),
            t1: Some(t1.clone()),
            z: std::mem::replace(&mut self.z, z1),
            zdot: rate.w.clone(),
            ydot: rate.u.clone(),
        });
        self.t = t1;
        self.events += 1;
        clipped.then(|| Status::BudgetExhausted { t: self.t.clone() })
    }
}

enum Step {
    Done(Status),
    Fork(Vec<RateSolution>),
}

/// Runs until the path ends or the rates become ambiguous.
fn extend(inst: &SkorokhodInstance, opts: &SimOptions, cur: &mut Cursor) -> Result<Step> {
    loop {
        if cur.z.iter().all(Rational::is_zero) {
            if let Some(u) = detect_absorption(inst)? {
                cur.segments.push(TraceSegment {
                    t0: cur.t.clone(),
                    t1: None,
                    z: cur.z.clone(),
                    zdot: vec![Rational::zero(); inst.dim()],
                    ydot: u,
                });
                return Ok(Step::Done(Status::ReachedZero { t: cur.t.clone() }));
            }
        }
        if cur.t >= opts.t_max {
            return Ok(Step::Done(Status::BudgetExhausted { t: cur.t.clone() }));
        }
        if cur.events >= opts.max_events {
            return Ok(Step::Done(Status::ZenoSuspected { t: cur.t.clone() }));
        }
        let rates = resolve_rates(&inst.r, &inst.theta, &cur.z, opts.zset_cap)
            .map_err(|e| e.at_time(&cur.t))?;
        match rates.len() {
            0 => {
                return Ok(Step::Done(Status::Ambiguous {
                    t: cur.t.clone(),
                    alternatives: Vec::new(),
                }))
            }
            1 => {
                if let Some(status) = cur.follow(&rates[0], opts) {
                    return Ok(Step::Done(status));
                }
            }
            _ => return Ok(Step::Fork(rates)),
        }
    }
}

/// Deterministic simulation: stops as ambiguous at the first instant with
/// more than one distinct derivative.
///
/// At the origin an absorbing rate ends the path as reached-zero. Without
/// one, a unique continuation is still followed, since the origin is then
/// just another boundary point.
pub fn simulate(inst: &SkorokhodInstance, opts: &SimOptions) -> Result<Trace> {
    let mut cur = Cursor::start(inst);
    let status = match extend(inst, opts, &mut cur)? {
        Step::Done(status) => status,
        Step::Fork(rates) => Status::Ambiguous {
            t: cur.t.clone(),
            alternatives: rates.into_iter().map(|r| r.w).collect(),
        },
    };
    Ok(cur.finish(status))
}

/// Explores every distinct derivative at each ambiguous instant, depth first
/// in the deterministic solution order, keeping at most `branch_budget`
/// trajectories. A fork that would exceed the budget ends as ambiguous.
pub fn simulate_branching(
    inst: &SkorokhodInstance,
    opts: &SimOptions,
    branch_budget: usize,
) -> Result<Vec<Trace>> {
    let mut done = Vec::new();
    let mut live = 1usize;
    let mut stack = vec![Cursor::start(inst)];
    while let Some(mut cur) = stack.pop() {
        match extend(inst, opts, &mut cur)? {
            Step::Done(status) => {
                live -= 1;
                done.push(cur.finish(status));
            }
            Step::Fork(rates) if live - 1 + rates.len() > branch_budget => {
                live -= 1;
                let status = Status::Ambiguous {
                    t: cur.t.clone(),
                    alternatives: rates.into_iter().map(|r| r.w).collect(),
                };
                done.push(cur.finish(status));
            }
            Step::Fork(rates) => {
                live += rates.len() - 1;
                let mut children = Vec::with_capacity(rates.len());
                for rate in &rates {
                    let mut child = cur.clone();
                    match child.follow(rate, opts) {
                        Some(status) => {
                            live -= 1;
                            done.push(child.finish(status));
                        }
                        None => children.push(child),
                    }
                }
                stack.extend(children.into_iter().rev());
            }
        }
    }
    Ok(done)
}
