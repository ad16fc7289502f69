//! Compiles a counter machine into a fluid Skorokhod instance `(z0, theta, R)`.
//!
//! Coordinates come in six groups `A..F` of sizes `5, m, 2, 2, 4m, 4m`, so the
//! dimension is `9m + 9`. Inside `E` and `F` the slot of a transition key
//! `(i, b, c)` is `4(i-1) + 2b + c`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::counter_machine::{triple_offset, Configuration, CounterMachine};
use crate::error::{Error, Result};
use crate::exact_num::{int, Rational, RationalMatrix, RationalVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Group {
    pub const ALL: [Group; 6] = [Group::A, Group::B, Group::C, Group::D, Group::E, Group::F];

    pub fn name(self) -> &'static str {
        match self {
            Group::A => "A",
            Group::B => "B",
            Group::C => "C",
            Group::D => "D",
            Group::E => "E",
            Group::F => "F",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coordinate bookkeeping for an instance built from an `m`-state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupLayout {
    m: usize,
}

impl GroupLayout {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::usage("group layout needs at least one state"));
        }
        Ok(GroupLayout { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        9 * self.m + 9
    }

    pub fn size(&self, g: Group) -> usize {
        match g {
            Group::A => 5,
            Group::B => self.m,
            Group::C | Group::D => 2,
            Group::E | Group::F => 4 * self.m,
        }
    }

    pub fn offset(&self, g: Group) -> usize {
        Group::ALL
            .iter()
            .take_while(|&&h| h != g)
            .map(|&h| self.size(h))
            .sum()
    }

    /// Flat index of the `k`-th coordinate (1-based) of group `g`.
    pub fn index(&self, g: Group, k: usize) -> usize {
        assert!(k >= 1 && k <= self.size(g), "{g}{k} out of range");
        self.offset(g) + k - 1
    }

    /// Flat index of the `(i, b, c)` slot of group `E` or `F`.
    pub fn triple(&self, g: Group, i: usize, b: u8, c: u8) -> usize {
        assert!(matches!(g, Group::E | Group::F), "triples live in E and F");
        assert!(i >= 1 && i <= self.m && b <= 1 && c <= 1);
        self.offset(g) + triple_offset(i, b, c)
    }

    /// Flat index range of a group.
    pub fn range(&self, g: Group) -> std::ops::Range<usize> {
        let o = self.offset(g);
        o..o + self.size(g)
    }

    /// `(group, 0-based offset in group)` of a flat index.
    pub fn locate(&self, idx: usize) -> (Group, usize) {
        for g in Group::ALL {
            if self.range(g).contains(&idx) {
                return (g, idx - self.offset(g));
            }
        }
        panic!("index {idx} outside dimension {}", self.dim());
    }

    /// `A1`, `B2`, ..., `E(i,b,c)`, `F(i,b,c)`.
    pub fn label(&self, idx: usize) -> String {
        let (g, k) = self.locate(idx);
        match g {
            Group::E | Group::F => format!("{g}({},{},{})", k / 4 + 1, (k / 2) % 2, k % 2),
            _ => format!("{g}{}", k + 1),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dim()).map(|i| self.label(i)).collect()
    }

    /// Every `(i, b, c)` key in slot order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, u8, u8)> {
        let m = self.m;
        (1..=m).flat_map(|i| [(0u8, 0u8), (0, 1), (1, 0), (1, 1)].map(|(b, c)| (i, b, c)))
    }

    pub fn block<'a>(&self, v: &'a [Rational], g: Group) -> &'a [Rational] {
        &v[self.range(g)]
    }
}

/// A fluid Skorokhod problem `z = z0 + theta t + R y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkorokhodInstance {
    pub z0: RationalVector,
    pub theta: RationalVector,
    pub r: RationalMatrix,
    /// Present for instances built from a counter machine.
    pub layout: Option<GroupLayout>,
    /// The halting modification has been applied.
    pub modified: bool,
}

impl SkorokhodInstance {
    pub fn new(z0: RationalVector, theta: RationalVector, r: RationalMatrix) -> Result<Self> {
        let d = z0.len();
        if theta.len() != d || r.rows() != d || r.cols() != d {
            return Err(Error::dim(format!(
                "z0 has {d} entries, theta {}, R is {}x{}",
                theta.len(),
                r.rows(),
                r.cols()
            )));
        }
        if let Some(j) = z0.iter().position(Rational::is_negative) {
            return Err(Error::usage(format!("z0[{j}] = {} is negative", z0[j])));
        }
        Ok(SkorokhodInstance {
            z0,
            theta,
            r,
            layout: None,
            modified: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.z0.len()
    }

    /// Same `(theta, R)` started elsewhere.
    pub fn with_start(&self, z0: RationalVector) -> Result<Self> {
        let mut out = SkorokhodInstance::new(z0, self.theta.clone(), self.r.clone())?;
        out.layout = self.layout;
        out.modified = self.modified;
        Ok(out)
    }
}

/// Drift: `-1` on the five `A` coordinates, zero elsewhere.
pub fn build_theta(m: usize) -> Result<RationalVector> {
    let layout = GroupLayout::new(m)?;
    let mut theta = vec![Rational::zero(); layout.dim()];
    for v in &mut theta[layout.range(Group::A)] {
        *v = int(-1);
    }
    Ok(theta)
}

/// The 5x5 `AA` block: `[1, 2, 1, 1, 0]` rotated one step per row.
const AA: [[i64; 5]; 5] = [
    [1, 2, 1, 1, 0],
    [0, 1, 2, 1, 1],
    [1, 0, 1, 2, 1],
    [1, 1, 0, 1, 2],
    [2, 1, 1, 0, 1],
];

struct Builder {
    layout: GroupLayout,
    r: RationalMatrix,
}

impl Builder {
    fn put(&mut self, row: usize, col: usize, v: i64) {
        self.r[(row, col)] = int(v);
    }

    fn identity(&mut self, rg: Group, cg: Group) {
        for k in 1..=self.layout.size(rg) {
            let (i, j) = (self.layout.index(rg, k), self.layout.index(cg, k));
            self.put(i, j, 1);
        }
    }
}

/// Reflection matrix of the reduction, block rows
/// `[AA 0 0 0 0 0; BA I 0 0 BE 0; CA 0 I I CE 0; DA 0 I I 0 0; EA EB EC 0 I I; FA FB FC 0 I I]`.
pub fn build_r(cm: &CounterMachine) -> Result<RationalMatrix> {
    let report = cm.validate();
    if !report.is_valid() {
        return Err(Error::InvalidMachine(report));
    }
    let layout = GroupLayout::new(cm.states())?;
    let mut b = Builder {
        layout,
        r: RationalMatrix::zeros(layout.dim(), layout.dim()),
    };
    let a = |k| layout.index(Group::A, k);

    for (i, row) in AA.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            b.put(a(i + 1), a(j + 1), v);
        }
    }

    for g in [Group::B, Group::C, Group::D, Group::E, Group::F] {
        b.identity(g, g);
    }
    b.identity(Group::C, Group::D);
    b.identity(Group::D, Group::C);
    b.identity(Group::E, Group::F);
    b.identity(Group::F, Group::E);

    for j in 1..=layout.m() {
        b.put(layout.index(Group::B, j), a(1), -1);
    }
    for k in 1..=2 {
        let ck = layout.index(Group::C, k);
        b.put(ck, a(1), -1);
        b.put(ck, a(4), -1);
        b.put(layout.index(Group::D, k), a(2), -1);
    }

    for (i, bf, cf) in layout.triples() {
        let t = cm.transition(i, bf, cf).expect("validated machine is total");
        let e = layout.triple(Group::E, i, bf, cf);
        let f = layout.triple(Group::F, i, bf, cf);

        // BE: zero on the row of the target state, one elsewhere.
        for j in 1..=layout.m() {
            if j != t.next {
                b.put(layout.index(Group::B, j), e, 1);
            }
        }
        // CE: delta + 1 per counter.
        b.put(layout.index(Group::C, 1), e, i64::from(t.delta[0]) + 1);
        b.put(layout.index(Group::C, 2), e, i64::from(t.delta[1]) + 1);

        let (bf, cf) = (i64::from(bf), i64::from(cf));
        for row in [e, f] {
            b.put(row, a(1), -bf - cf);
            b.put(row, a(3), -1);
            b.put(row, layout.index(Group::B, i), -1);
            b.put(row, layout.index(Group::C, 1), 2 * bf - 1);
            b.put(row, layout.index(Group::C, 2), 2 * cf - 1);
        }
        b.put(f, a(4), -4);
        b.put(f, a(5), 4);
    }
    Ok(b.r)
}

/// Orthant state encoding `cfg`: `z_A = (0,1,1,1,0)`, `z_B` all ones but a
/// zero at the current state, `z_C = (C1, C2)`, `z_D = 0`, `z_E = 3`, `z_F = 4`.
pub fn encode_configuration(layout: &GroupLayout, cfg: &Configuration) -> Result<RationalVector> {
    if cfg.state == 0 || cfg.state > layout.m() {
        return Err(Error::usage(format!(
            "state {} out of range 1..={}",
            cfg.state,
            layout.m()
        )));
    }
    let mut z = vec![Rational::zero(); layout.dim()];
    for (k, v) in [0, 1, 1, 1, 0].into_iter().enumerate() {
        z[layout.index(Group::A, k + 1)] = int(v);
    }
    for j in 1..=layout.m() {
        if j != cfg.state {
            z[layout.index(Group::B, j)] = int(1);
        }
    }
    z[layout.index(Group::C, 1)] = Rational::from(num_bigint::BigInt::from(cfg.c1));
    z[layout.index(Group::C, 2)] = Rational::from(num_bigint::BigInt::from(cfg.c2));
    for idx in layout.range(Group::E) {
        z[idx] = int(3);
    }
    for idx in layout.range(Group::F) {
        z[idx] = int(4);
    }
    Ok(z)
}

pub fn build_z0(cm: &CounterMachine, cfg0: &Configuration) -> Result<RationalVector> {
    encode_configuration(&GroupLayout::new(cm.states())?, cfg0)
}

/// The unmodified instance for `cm` started at `cfg0`.
pub fn reduce(cm: &CounterMachine, cfg0: &Configuration) -> Result<SkorokhodInstance> {
    let r = build_r(cm)?;
    let z0 = build_z0(cm, cfg0)?;
    let theta = build_theta(cm.states())?;
    let mut inst = SkorokhodInstance::new(z0, theta, r)?;
    inst.layout = Some(GroupLayout::new(cm.states())?);
    Ok(inst)
}

/// Rewires column `B_{i*}` so that arriving at the halting state drains every
/// coordinate: `AB_{k,i*} = -1` for `k = 3, 4, 5`, `EB_{(i,b,c),i*} = -3+b+c`
/// and `FB_{(i,b,c),i*} = -4+b+c`. The drift is left alone.
pub fn apply_halting_modification(
    inst: &SkorokhodInstance,
    halt_state: usize,
) -> Result<SkorokhodInstance> {
    let layout = inst
        .layout
        .ok_or_else(|| Error::usage("halting modification needs a reduction-built instance"))?;
    if halt_state == 0 || halt_state > layout.m() {
        return Err(Error::usage(format!(
            "halting state {halt_state} out of range 1..={}",
            layout.m()
        )));
    }
    let mut out = inst.clone();
    let col = layout.index(Group::B, halt_state);
    for k in 3..=5 {
        out.r[(layout.index(Group::A, k), col)] = int(-1);
    }
    for (i, b, c) in layout.triples() {
        let s = i64::from(b) + i64::from(c);
        out.r[(layout.triple(Group::E, i, b, c), col)] = int(-3 + s);
        out.r[(layout.triple(Group::F, i, b, c), col)] = int(-4 + s);
    }
    out.modified = true;
    Ok(out)
}

/// Drain depth of the `(i, b, c)` slot while the machine sits at `current`:
/// `-b - c + (2b-1) 1{C1=0} + (2c-1) 1{C2=0} - 1{i = state}`.
pub fn upsilon(i: usize, b: u8, c: u8, current: &Configuration) -> i64 {
    assert!(b <= 1 && c <= 1, "flags are 0 or 1");
    let (b, c) = (i64::from(b), i64::from(c));
    let delta = |cond: bool| i64::from(cond);
    let v = -b - c + (2 * b - 1) * delta(current.c1 == 0) + (2 * c - 1) * delta(current.c2 == 0)
        - delta(i == current.state);
    debug_assert!((-3..=0).contains(&v), "upsilon out of range: {v}");
    v
}
