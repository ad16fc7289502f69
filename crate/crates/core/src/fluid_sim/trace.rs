use std::fmt;

use serde::{Deserialize, Serialize};

use crate::exact_num::{axpy, fmt_vector, Rational, RationalVector};
use crate::reduction::SkorokhodInstance;

/// One linear piece of a trajectory. `t1 = None` marks a terminal ray.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSegment {
    pub t0: Rational,
    pub t1: Option<Rational>,
    /// State at `t0`.
    pub z: RationalVector,
    pub zdot: RationalVector,
    pub ydot: RationalVector,
}

impl TraceSegment {
    /// State at `t1`, or `None` for a ray.
    pub fn end(&self) -> Option<RationalVector> {
        self.t1
            .as_ref()
            .map(|t1| axpy(&self.z, &(t1 - &self.t0), &self.zdot))
    }

    pub fn at(&self, t: &Rational) -> RationalVector {
        axpy(&self.z, &(t - &self.t0), &self.zdot)
    }

    pub fn contains(&self, t: &Rational) -> bool {
        *t >= self.t0 && self.t1.as_ref().is_none_or(|t1| t <= t1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    /// `z(t) = 0` with an absorbing rate, so `z` stays at zero from `t` on.
    ReachedZero { t: Rational },
    /// No coordinate ever hits zero again after `t`.
    DivergingRay { t: Rational },
    BudgetExhausted { t: Rational },
    /// Zero or several distinct derivatives at `t`; `alternatives` lists them.
    Ambiguous {
        t: Rational,
        alternatives: Vec<RationalVector>,
    },
    ZenoSuspected { t: Rational },
}

impl Status {
    pub fn time(&self) -> &Rational {
        match self {
            Status::ReachedZero { t }
            | Status::DivergingRay { t }
            | Status::BudgetExhausted { t }
            | Status::Ambiguous { t, .. }
            | Status::ZenoSuspected { t } => t,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::ReachedZero { t } => write!(f, "reached zero at t={t}"),
            Status::DivergingRay { t } => write!(f, "diverging ray from t={t}"),
            Status::BudgetExhausted { t } => write!(f, "time budget exhausted at t={t}"),
            Status::Ambiguous { t, alternatives } => {
                write!(f, "ambiguous at t={t} ({} alternatives)", alternatives.len())
            }
            Status::ZenoSuspected { t } => write!(f, "event budget exhausted at t={t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub status: Status,
    pub segments: Vec<TraceSegment>,
}

impl Trace {
    /// State at time `t`, if some segment covers it.
    pub fn state_at(&self, t: &Rational) -> Option<RationalVector> {
        self.segments.iter().find(|s| s.contains(t)).map(|s| s.at(t))
    }

    /// Shortest finite segment.
    pub fn min_step(&self) -> Option<Rational> {
        self.segments
            .iter()
            .filter_map(|s| s.t1.as_ref().map(|t1| t1 - &s.t0))
            .min()
    }

    /// Start times of every segment after the first, i.e. the breakpoints.
    pub fn breakpoints(&self) -> Vec<Rational> {
        self.segments.iter().skip(1).map(|s| s.t0.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Shape,
    /// `z != z0 + theta t + R y` at a segment start, or `zdot != theta + R ydot`.
    Reflection,
    YDecreasing,
    NegativeState,
    Idling,
    Discontinuity,
    EmptyInterval,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Shape => "shape mismatch",
            ViolationKind::Reflection => "z = z0 + theta t + R y violated",
            ViolationKind::YDecreasing => "y decreasing",
            ViolationKind::NegativeState => "z negative",
            ViolationKind::Idling => "y pushes while z is positive",
            ViolationKind::Discontinuity => "segments do not join",
            ViolationKind::EmptyInterval => "segment does not advance time",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceViolation {
    pub segment: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "segment {}: {} ({})", self.segment, self.kind, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceReport {
    pub violations: Vec<TraceViolation>,
}

impl TraceReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Re-checks the Skorokhod conditions on every segment of `trace`, with `y`
/// rebuilt by integrating `ydot` from `y(0) = 0`.
///
/// Within a segment everything is affine in `t`, so checking both endpoints
/// covers the whole interval. Rays are checked at `t0` and through the sign
/// of `zdot`.
pub fn validate_trace(inst: &SkorokhodInstance, trace: &Trace) -> TraceReport {
    let d = inst.dim();
    let mut out = TraceReport::default();
    let mut push = |segment: usize, kind: ViolationKind, detail: String| {
        out.violations.push(TraceViolation {
            segment,
            kind,
            detail,
        })
    };

    let mut y = vec![Rational::zero(); d];
    let mut y_time = Rational::zero();
    let mut prev_end: Option<(Rational, RationalVector)> = None;

    for (k, seg) in trace.segments.iter().enumerate() {
        if seg.z.len() != d || seg.zdot.len() != d || seg.ydot.len() != d {
            push(k, ViolationKind::Shape, format!("expected {d} coordinates"));
            return out;
        }
        if let Some((t_end, z_end)) = &prev_end {
            if *t_end != seg.t0 || *z_end != seg.z {
                push(
                    k,
                    ViolationKind::Discontinuity,
                    format!("previous end t={t_end}, this start t={}", seg.t0),
                );
            }
        }
        if let Some(t1) = &seg.t1 {
            if *t1 <= seg.t0 {
                push(k, ViolationKind::EmptyInterval, format!("[{}, {t1}]", seg.t0));
            }
        }
        if seg.t0 < y_time {
            push(k, ViolationKind::EmptyInterval, format!("starts before t={y_time}"));
        }

        let x: RationalVector = inst
            .z0
            .iter()
            .zip(&inst.theta)
            .map(|(z0, th)| z0 + &(th * &seg.t0))
            .collect();
        let ry = inst.r.mul_vec(&y).expect("dimension checked");
        let expected: RationalVector = x.iter().zip(&ry).map(|(a, b)| a + b).collect();
        if expected != seg.z {
            push(
                k,
                ViolationKind::Reflection,
                format!("z(t0)={} but z0+theta t+R y={}", fmt_vector(&seg.z), fmt_vector(&expected)),
            );
        }

        let rydot = inst.r.mul_vec(&seg.ydot).expect("dimension checked");
        for (j, ry) in rydot.iter().enumerate() {
            let expected = &inst.theta[j] + ry;
            if seg.zdot[j] != expected {
                push(
                    k,
                    ViolationKind::Reflection,
                    format!("zdot[{j}]={} but theta+R ydot gives {expected}", seg.zdot[j]),
                );
            }
            if seg.ydot[j].is_negative() {
                push(k, ViolationKind::YDecreasing, format!("ydot[{j}]={}", seg.ydot[j]));
            }
            if seg.z[j].is_negative() {
                push(k, ViolationKind::NegativeState, format!("z[{j}]={} at t0", seg.z[j]));
            }
            if seg.ydot[j].is_positive() && !(seg.z[j].is_zero() && seg.zdot[j].is_zero()) {
                push(
                    k,
                    ViolationKind::Idling,
                    format!("ydot[{j}]={} with z={} zdot={}", seg.ydot[j], seg.z[j], seg.zdot[j]),
                );
            }
        }
        match seg.end() {
            Some(z_end) => {
                for (j, v) in z_end.iter().enumerate() {
                    if v.is_negative() {
                        push(k, ViolationKind::NegativeState, format!("z[{j}]={v} at t1"));
                    }
                }
                let t1 = seg.t1.clone().expect("finite segment");
                y = axpy(&y, &(&t1 - &seg.t0), &seg.ydot);
                y_time = t1.clone();
                prev_end = Some((t1, z_end));
            }
            None => {
                for j in 0..d {
                    if seg.zdot[j].is_negative() {
                        push(k, ViolationKind::NegativeState, format!("ray leaves orthant along z[{j}]"));
                    }
                }
                if k + 1 != trace.segments.len() {
                    push(k, ViolationKind::Discontinuity, "ray is not the last segment".into());
                }
            }
        }
    }
    out
}
