//! Analog replay of micro-op windows on crossbar models of the banks.
//!
//! A and NA are modelled as 64 slice crossbars of 5×5 (rows y, columns x),
//! all receiving the same shared drives; data-dependent lines carry the
//! per-slice gate outputs. Rho is five plane crossbars of 5×64 (rows x,
//! columns z). Gate computations go through [`crate::gates`].

use std::collections::HashMap;

use serde::Serialize;

use crate::config::{Electrical, SimConfig};
use crate::crossbar::{Crossbar, CycleSolution, Drives, Polarity, Wire, WireDrive};
use crate::device::{DeviceParams, MemristorState};
use crate::error::{Error, Result};
use crate::gates::{self, AnalogEval, Xnor2Gate};
use crate::keccak::{self, pi_destination, KeccakState, Variant};

use super::mux::SELECT_ROT1;
use super::{Banks, CycleTrace, OpKind};

const SLICES: usize = 64;

/// Result of one analog window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalogTrace {
    pub op: OpKind,
    /// Plane, sheet, chunk or lane index the window covers.
    pub selector: Option<u8>,
    /// Energy of compute and write pulses (J).
    pub compute_energy_j: f64,
    /// Energy of initialization pulses, gate re-init included (J).
    pub init_energy_j: f64,
    /// Largest |Δw| of any cell not targeted by a pulse.
    pub max_disturb: f64,
    /// Bits differing from the logical backend.
    pub mismatches: usize,
}

impl AnalogTrace {
    pub fn energy_j(&self) -> f64 {
        self.compute_energy_j + self.init_energy_j
    }

    pub fn equivalent(&self) -> bool {
        self.mismatches == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalogReport {
    pub windows: Vec<AnalogTrace>,
    /// Bits of A after the replayed round that differ from the reference round.
    pub round_mismatches: usize,
    pub max_disturb: f64,
}

impl AnalogReport {
    pub fn equivalent(&self) -> bool {
        self.round_mismatches == 0 && self.windows.iter().all(AnalogTrace::equivalent)
    }

    pub fn total_energy_j(&self) -> f64 {
        self.windows.iter().map(AnalogTrace::energy_j).sum()
    }

    pub fn energy_of(&self, op: OpKind) -> f64 {
        self.windows
            .iter()
            .filter(|w| w.op == op)
            .map(AnalogTrace::energy_j)
            .sum()
    }

    pub fn init_energy_of(&self, op: OpKind) -> f64 {
        self.windows
            .iter()
            .filter(|w| w.op == op)
            .map(|w| w.init_energy_j)
            .sum()
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    compute: f64,
    init: f64,
    disturb: f64,
}

impl Tally {
    fn add(&mut self, init: bool, energy: f64, disturb: f64) {
        if init {
            self.init += energy;
        } else {
            self.compute += energy;
        }
        self.disturb = self.disturb.max(disturb);
    }
}

fn step(
    bar: &mut Crossbar,
    drives: &Drives,
    dt: f64,
    target: impl Fn(usize, usize) -> bool,
) -> Result<(f64, f64, CycleSolution)> {
    let sol = bar.solve_cycle(drives)?;
    let before = bar.clone();
    let energy = bar.apply_cycle(&sol, dt);
    let mut disturb: f64 = 0.0;
    for r in 0..bar.rows() {
        for c in 0..bar.cols() {
            if !target(r, c) {
                if let (Some(a), Some(b)) = (before.state(r, c), bar.state(r, c)) {
                    disturb = disturb.max((a.w() - b.w()).abs());
                }
            }
        }
    }
    Ok((energy, disturb, sol))
}

/// Per-slice bits of five lanes.
type SliceBits = Vec<[bool; 5]>;

fn to_lanes(bits: &SliceBits) -> [u64; 5] {
    let mut out = [0u64; 5];
    for (z, b) in bits.iter().enumerate() {
        for (i, &v) in b.iter().enumerate() {
            out[i] |= u64::from(v) << z;
        }
    }
    out
}

fn from_lanes(lanes: &[u64; 5]) -> SliceBits {
    (0..SLICES)
        .map(|z| std::array::from_fn(|i| (lanes[i] >> z) & 1 == 1))
        .collect()
}

/// A or NA as 64 slices of 5×5.
#[derive(Debug, Clone)]
struct SliceBank {
    bars: Vec<Crossbar>,
}

impl SliceBank {
    fn new(name: &str, state: &KeccakState, params: DeviceParams) -> Self {
        let bars = (0..SLICES)
            .map(|z| {
                let mut bar = Crossbar::empty(format!("{name}[z={z}]"), 5, 5, params);
                for y in 0..5 {
                    for x in 0..5 {
                        bar.place(
                            y,
                            x,
                            Polarity::RowAnode,
                            MemristorState::from_bit(state.bit(x, y, z)),
                        );
                    }
                }
                bar
            })
            .collect();
        SliceBank { bars }
    }

    fn bits(&self) -> KeccakState {
        let mut s = KeccakState::zero();
        for (z, bar) in self.bars.iter().enumerate() {
            for y in 0..5 {
                for x in 0..5 {
                    s.set_bit(x, y, z, bar.bit(y, x).unwrap_or(false));
                }
            }
        }
        s
    }

    fn drive(
        &mut self,
        e: &Electrical,
        drives: impl Fn(usize) -> Drives,
        rows: &[usize],
        cols: &[usize],
        tally: &mut Tally,
        init: bool,
    ) -> Result<Vec<CycleSolution>> {
        let mut sols = Vec::with_capacity(SLICES);
        for (z, bar) in self.bars.iter_mut().enumerate() {
            let target = |r: usize, c: usize| rows.contains(&r) && cols.contains(&c);
            let (energy, disturb, sol) = step(bar, &drives(z), e.dt, target)?;
            tally.add(init, energy, disturb);
            sols.push(sol);
        }
        Ok(sols)
    }

    fn shared(
        e: &Electrical,
        rows: &[usize],
        row_level: f64,
        cols: &[usize],
        col_level: f64,
    ) -> Drives {
        let mut d = Drives::uniform(5, 5, WireDrive::Fixed(e.v_plus));
        for &r in rows {
            d.set(Wire::Row(r), WireDrive::Fixed(row_level));
        }
        for &c in cols {
            d.set(Wire::Col(c), WireDrive::Fixed(col_level));
        }
        d
    }

    /// V_SET pulse on rows × cols, everything else half-selected.
    fn set(
        &mut self,
        e: &Electrical,
        rows: &[usize],
        cols: &[usize],
        tally: &mut Tally,
    ) -> Result<()> {
        let d = Self::shared(e, rows, e.v_set, cols, 0.0);
        self.drive(e, |_| d.clone(), rows, cols, tally, true)
            .map(drop)
    }

    /// Reverse V_SET-magnitude pulse on rows × cols.
    fn clear(
        &mut self,
        e: &Electrical,
        rows: &[usize],
        cols: &[usize],
        tally: &mut Tally,
    ) -> Result<()> {
        let d = Self::shared(e, rows, 0.0, cols, e.v_set);
        self.drive(e, |_| d.clone(), rows, cols, tally, true)
            .map(drop)
    }

    /// HRS then LRS on rows × cols (two cycles).
    fn reinit(
        &mut self,
        e: &Electrical,
        rows: &[usize],
        cols: &[usize],
        tally: &mut Tally,
    ) -> Result<()> {
        self.clear(e, rows, cols, tally)?;
        self.set(e, rows, cols, tally)
    }

    /// Writes lanes `xs` of plane `y` into freshly initialized (LRS) cells:
    /// per-slice column lines clear the cells that must hold 0.
    fn store_plane(
        &mut self,
        e: &Electrical,
        y: usize,
        xs: &[usize],
        data: &SliceBits,
        tally: &mut Tally,
    ) -> Result<()> {
        let drives = |z: usize| {
            let mut d = Self::shared(e, &[y], 0.0, &[], 0.0);
            for &x in xs {
                d.set(
                    Wire::Col(x),
                    WireDrive::Fixed(if data[z][x] { 0.0 } else { e.v_set }),
                );
            }
            d
        };
        self.drive(e, drives, &[y], xs, tally, false).map(drop)
    }

    /// Senses lanes `xs` of plane `y` on the columns.
    fn read_plane(
        &mut self,
        e: &Electrical,
        y: usize,
        xs: &[usize],
        tally: &mut Tally,
    ) -> Result<SliceBits> {
        let mut d = Drives::uniform(5, 5, WireDrive::Fixed(0.0))
            .with(Wire::Row(y), WireDrive::Fixed(e.v_plus));
        for c in 0..5 {
            let drive = if xs.contains(&c) {
                WireDrive::Pulled {
                    r_g: e.r_read,
                    rail: 0.0,
                }
            } else {
                WireDrive::Fixed(e.v_plus)
            };
            d.set(Wire::Col(c), drive);
        }
        let sols = self.drive(e, |_| d.clone(), &[], &[], tally, false)?;
        Ok(sols
            .iter()
            .map(|s| {
                std::array::from_fn(|x| {
                    xs.contains(&x) && s.voltage(Wire::Col(x)) >= e.v_plus / 2.0
                })
            })
            .collect())
    }

    /// Senses sheet `x` on the rows (inverted: a conducting cell pulls its row low).
    fn read_sheet(&mut self, e: &Electrical, x: usize, tally: &mut Tally) -> Result<SliceBits> {
        let d = Drives::uniform(
            5,
            5,
            WireDrive::Pulled {
                r_g: e.r_read,
                rail: e.v_plus,
            },
        )
        .with(Wire::Col(0), WireDrive::Fixed(e.v_plus))
        .with(Wire::Col(1), WireDrive::Fixed(e.v_plus))
        .with(Wire::Col(2), WireDrive::Fixed(e.v_plus))
        .with(Wire::Col(3), WireDrive::Fixed(e.v_plus))
        .with(Wire::Col(4), WireDrive::Fixed(e.v_plus))
        .with(Wire::Col(x), WireDrive::Fixed(0.0));
        let sols = self.drive(e, |_| d.clone(), &[], &[], tally, false)?;
        Ok(sols
            .iter()
            .map(|s| std::array::from_fn(|y| s.voltage(Wire::Row(y)) < e.v_plus / 2.0))
            .collect())
    }
}

/// Rho as five plane crossbars of 5×64.
#[derive(Debug, Clone)]
struct RhoBank {
    planes: Vec<Crossbar>,
}

impl RhoBank {
    fn new(state: &KeccakState, params: DeviceParams) -> Self {
        let planes = (0..5)
            .map(|y| {
                let mut bar = Crossbar::empty(format!("rho[y={y}]"), 5, SLICES, params);
                for x in 0..5 {
                    for z in 0..SLICES {
                        bar.place(
                            x,
                            z,
                            Polarity::RowAnode,
                            MemristorState::from_bit(state.bit(x, y, z)),
                        );
                    }
                }
                bar
            })
            .collect();
        RhoBank { planes }
    }

    fn bits(&self) -> KeccakState {
        let mut s = KeccakState::zero();
        for (y, bar) in self.planes.iter().enumerate() {
            for x in 0..5 {
                for z in 0..SLICES {
                    s.set_bit(x, y, z, bar.bit(x, z).unwrap_or(false));
                }
            }
        }
        s
    }

    fn clear_rows(&mut self, e: &Electrical, rows: &[usize], tally: &mut Tally) -> Result<()> {
        let mut d = Drives::uniform(5, SLICES, WireDrive::Fixed(e.v_set));
        for r in 0..5 {
            d.set(
                Wire::Row(r),
                WireDrive::Fixed(if rows.contains(&r) { 0.0 } else { e.v_plus }),
            );
        }
        for bar in &mut self.planes {
            let (energy, disturb, _) = step(bar, &d, e.dt, |r, _| rows.contains(&r))?;
            tally.add(true, energy, disturb);
        }
        Ok(())
    }

    /// SETs the one bits of `lane` into row `x` of plane `y` (cells start HRS).
    fn store_row(
        &mut self,
        e: &Electrical,
        y: usize,
        x: usize,
        lane: u64,
        tally: &mut Tally,
    ) -> Result<()> {
        let mut d = Drives::uniform(5, SLICES, WireDrive::Fixed(e.v_plus))
            .with(Wire::Row(x), WireDrive::Fixed(e.v_set));
        for z in 0..SLICES {
            d.set(
                Wire::Col(z),
                WireDrive::Fixed(if (lane >> z) & 1 == 1 { 0.0 } else { e.v_plus }),
            );
        }
        let (energy, disturb, _) = step(&mut self.planes[y], &d, e.dt, |r, _| r == x)?;
        tally.add(false, energy, disturb);
        Ok(())
    }

    fn read_row(&mut self, e: &Electrical, y: usize, x: usize, tally: &mut Tally) -> Result<u64> {
        let d = Drives::uniform(
            5,
            SLICES,
            WireDrive::Pulled {
                r_g: e.r_read,
                rail: 0.0,
            },
        );
        let mut d = d;
        for r in 0..5 {
            d.set(
                Wire::Row(r),
                WireDrive::Fixed(if r == x { e.v_plus } else { 0.0 }),
            );
        }
        let (energy, disturb, sol) = step(&mut self.planes[y], &d, e.dt, |_, _| false)?;
        tally.add(false, energy, disturb);
        Ok((0..SLICES).fold(0, |acc, z| {
            acc | (u64::from(sol.voltage(Wire::Col(z)) >= e.v_plus / 2.0) << z)
        }))
    }
}

/// Memoized gate-lib evaluations. A re-initialized XNOR gate is always
/// back in the same state, so each evaluation depends only on its inputs.
#[derive(Debug, Default)]
struct GateLib {
    xnor: HashMap<(bool, bool), (AnalogEval, f64)>,
    nand: HashMap<(bool, bool), AnalogEval>,
    mismatches: usize,
}

impl GateLib {
    /// XNOR evaluation followed by gate re-initialization.
    fn xnor(&mut self, e: &Electrical, a: bool, b: bool, tally: &mut Tally) -> Result<bool> {
        let (ev, init) = match self.xnor.get(&(a, b)) {
            Some(v) => *v,
            None => {
                let mut g = Xnor2Gate::new(e);
                let ev = g.evaluate(a, b)?;
                let (_, init) = g.init()?;
                self.xnor.insert((a, b), (ev, init));
                (ev, init)
            }
        };
        tally.add(false, ev.energy, ev.read_drift);
        tally.add(true, init, 0.0);
        if ev.bit != gates::xnor2(a, b) {
            self.mismatches += 1;
        }
        Ok(ev.bit)
    }

    /// XOR through an XNOR stage with ideal re-leveling of the second input.
    fn xor(&mut self, e: &Electrical, a: bool, b: bool, tally: &mut Tally) -> Result<bool> {
        self.xnor(e, a, !b, tally)
    }

    fn xor_multi(&mut self, e: &Electrical, bits: &[bool], tally: &mut Tally) -> Result<bool> {
        let mut acc = bits[0];
        for &b in &bits[1..] {
            acc = self.xor(e, acc, b, tally)?;
        }
        Ok(acc)
    }

    fn nand(&mut self, e: &Electrical, a: bool, b: bool, tally: &mut Tally) -> Result<bool> {
        let ev = match self.nand.get(&(a, b)) {
            Some(v) => *v,
            None => {
                let ev = gates::eval_diode_nand(e, a, b)?;
                self.nand.insert((a, b), ev);
                ev
            }
        };
        tally.add(false, ev.energy, ev.read_drift);
        if ev.bit != gates::diode_nand(a, b) {
            self.mismatches += 1;
        }
        Ok(ev.bit)
    }
}

const ALL: [usize; 5] = [0, 1, 2, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Which {
    A,
    NA,
    R,
}

/// Analog banks replayed in lockstep with a logical reference.
pub struct AnalogSession {
    e: Electrical,
    a: SliceBank,
    na: SliceBank,
    r: RhoBank,
    gates: GateLib,
    logical: Banks,
    scratch: CycleTrace,
    current: Option<OpKind>,
    block: Vec<u8>,
    rate_bytes: usize,
    round: usize,
}

impl AnalogSession {
    /// Banks holding `state` and its complement, Rho cleared.
    pub fn new(config: &SimConfig, state: &KeccakState) -> Self {
        let e = config.electrical();
        AnalogSession {
            a: SliceBank::new("A", state, e.params),
            na: SliceBank::new("NA", &state.complement(), e.params),
            r: RhoBank::new(&KeccakState::zero(), e.params),
            gates: GateLib::default(),
            logical: Banks::loaded(*state),
            scratch: CycleTrace::new(config.control_bits.per_cycle()),
            current: None,
            block: Vec::new(),
            rate_bytes: 0,
            round: 1,
            e,
        }
    }

    /// Block used by subsequent mapping windows.
    pub fn set_block(&mut self, block: &[u8], variant: Variant) {
        self.block = block.to_vec();
        self.rate_bytes = variant.rate_bytes();
    }

    pub fn set_round(&mut self, round: usize) {
        self.round = round;
    }

    pub fn state(&self) -> KeccakState {
        self.a.bits()
    }

    pub fn complement_bank(&self) -> KeccakState {
        self.na.bits()
    }

    fn advance_logical(&mut self, op: OpKind) -> Result<()> {
        let group = match op {
            OpKind::RhoInit => OpKind::Rho,
            OpKind::StateInit => OpKind::Pi,
            other => other,
        };
        if self.current == Some(group) {
            return Ok(());
        }
        self.current = Some(group);
        let t = &mut self.scratch;
        match group {
            OpKind::Init => self.logical.exec_message_init(t),
            OpKind::Map => self.logical.map_block(&self.block, self.rate_bytes, t)?,
            OpKind::Theta => self.logical.exec_theta(t)?,
            OpKind::Rho => self.logical.exec_rho(t)?,
            OpKind::Pi => self.logical.exec_pi(t)?,
            OpKind::Complement => self.logical.exec_complement(t)?,
            OpKind::Chi => self.logical.exec_chi(t)?,
            OpKind::Iota => self.logical.exec_iota(self.round, t)?,
            OpKind::RhoInit | OpKind::StateInit => unreachable!(),
        }
        Ok(())
    }

    fn mismatches(&self, which: Which, lanes: &[(usize, usize)]) -> usize {
        let (analog, logical) = match which {
            Which::A => (self.a.bits(), *self.logical.a()),
            Which::NA => (self.na.bits(), *self.logical.na()),
            Which::R => (self.r.bits(), *self.logical.rho()),
        };
        lanes
            .iter()
            .map(|&l| (analog[l] ^ logical[l]).count_ones() as usize)
            .sum()
    }

    /// Replays one window: `op` restricted to `selector` (plane, sheet,
    /// chunk or lane index, depending on the operation).
    pub fn window(&mut self, op: OpKind, selector: Option<u8>) -> Result<AnalogTrace> {
        self.advance_logical(op)?;
        let e = self.e;
        let mut t = Tally::default();
        let gate_errors = self.gates.mismatches;
        let sel = selector.map(usize::from);
        let need = |max: usize| match sel {
            Some(s) if s < max => Ok(s),
            _ => Err(Error::InvalidConfig(format!(
                "{op} window needs a selector below {max}"
            ))),
        };
        let mut extra_mismatch = 0;
        let touched: Vec<(Which, Vec<(usize, usize)>)> = match op {
            OpKind::Init => {
                self.a.clear(&e, &ALL, &ALL, &mut t)?;
                self.na.clear(&e, &ALL, &ALL, &mut t)?;
                self.na.set(&e, &ALL, &ALL, &mut t)?;
                self.r.clear_rows(&e, &ALL, &mut t)?;
                let all = all_lanes();
                vec![
                    (Which::A, all.clone()),
                    (Which::NA, all.clone()),
                    (Which::R, all),
                ]
            }
            OpKind::Map => {
                let chunk = need(self.rate_bytes.div_ceil(40).max(1))?;
                let y = chunk;
                let lanes = self.rate_bytes / 8;
                let xs: Vec<usize> = (5 * chunk..lanes.min(5 * chunk + 5))
                    .map(|l| l % 5)
                    .collect();
                let a = self.a.read_plane(&e, y, &xs, &mut t)?;
                let mut out = a.clone();
                for (z, row) in out.iter_mut().enumerate() {
                    for &x in &xs {
                        let l = keccak::lane_index(x, y);
                        let word = u64::from_le_bytes(
                            self.block[8 * l..8 * l + 8].try_into().expect("8 bytes"),
                        );
                        row[x] = self.gates.xor(&e, a[z][x], (word >> z) & 1 == 1, &mut t)?;
                    }
                }
                self.a.set(&e, &[y], &xs, &mut t)?;
                self.na.set(&e, &[y], &xs, &mut t)?;
                self.a.store_plane(&e, y, &xs, &out, &mut t)?;
                self.na.store_plane(&e, y, &xs, &invert(&out), &mut t)?;
                let lanes: Vec<_> = xs.iter().map(|&x| (x, y)).collect();
                vec![(Which::A, lanes.clone()), (Which::NA, lanes)]
            }
            OpKind::Theta => {
                let x = need(5)?;
                let (next, prev) = ((x + 1) % 5, (x + 4) % 5);
                self.r.clear_rows_in_all_planes(&e, next, &mut t)?;
                let src = to_lanes(&self.a.read_sheet(&e, next, &mut t)?);
                for (y, lane) in src.iter().enumerate() {
                    let rotated = self.logical.mux().route(SELECT_ROT1, y, *lane);
                    self.r.store_row(&e, y, next, rotated, &mut t)?;
                }
                let left = self.a.read_sheet(&e, prev, &mut t)?;
                let mut right = [0u64; 5];
                for (y, lane) in right.iter_mut().enumerate() {
                    *lane = self.r.read_row(&e, y, next, &mut t)?;
                }
                let right = from_lanes(&right);
                let mut d = [false; SLICES];
                for z in 0..SLICES {
                    let bits: Vec<bool> = left[z].iter().chain(&right[z]).copied().collect();
                    d[z] = self.gates.xor_multi(&e, &bits, &mut t)?;
                }
                for y in 0..5 {
                    self.na.set(&e, &[y], &[x], &mut t)?;
                    let a = self.a.read_plane(&e, y, &[x], &mut t)?;
                    let mut out = vec![[false; 5]; SLICES];
                    for z in 0..SLICES {
                        out[z][x] = self.gates.xor(&e, d[z], a[z][x], &mut t)?;
                    }
                    self.na.store_plane(&e, y, &[x], &out, &mut t)?;
                }
                vec![
                    (Which::NA, (0..5).map(|y| (x, y)).collect()),
                    (Which::R, (0..5).map(|y| (next, y)).collect()),
                ]
            }
            OpKind::RhoInit => {
                self.r.clear_rows(&e, &ALL, &mut t)?;
                extra_mismatch = self.r.bits().count_ones() as usize;
                vec![]
            }
            OpKind::Rho => {
                let x = need(5)?;
                let lanes = to_lanes(&self.na.read_sheet(&e, x, &mut t)?);
                let routed = self.logical.mux().route_all(x as u8, lanes);
                for (y, lane) in routed.into_iter().enumerate() {
                    self.r.store_row(&e, y, x, lane, &mut t)?;
                }
                vec![(Which::R, (0..5).map(|y| (x, y)).collect())]
            }
            OpKind::StateInit => {
                self.a.reinit(&e, &ALL, &ALL, &mut t)?;
                self.na.reinit(&e, &ALL, &ALL, &mut t)?;
                extra_mismatch = self.a.bits().complement().count_ones() as usize
                    + self.na.bits().complement().count_ones() as usize;
                vec![]
            }
            OpKind::Pi => {
                let l = need(25)?;
                let (x, y) = (l % 5, l / 5);
                let lane = self.r.read_row(&e, y, x, &mut t)?;
                let (dx, dy) = pi_destination(x, y);
                let mut lanes = [0u64; 5];
                lanes[dx] = lane;
                self.a
                    .store_plane(&e, dy, &[dx], &from_lanes(&lanes), &mut t)?;
                vec![(Which::A, vec![(dx, dy)])]
            }
            OpKind::Complement => {
                let y = need(5)?;
                let a = self.a.read_plane(&e, y, &ALL, &mut t)?;
                self.na.store_plane(&e, y, &ALL, &invert(&a), &mut t)?;
                vec![(Which::NA, (0..5).map(|x| (x, y)).collect())]
            }
            OpKind::Chi => {
                let y = need(5)?;
                let a = self.a.read_plane(&e, y, &ALL, &mut t)?;
                let na = self.na.read_plane(&e, y, &ALL, &mut t)?;
                let mut out = vec![[false; 5]; SLICES];
                for z in 0..SLICES {
                    for x in 0..5 {
                        let wired_or =
                            self.gates
                                .nand(&e, na[z][(x + 1) % 5], a[z][(x + 2) % 5], &mut t)?;
                        out[z][x] = self.gates.xnor(&e, a[z][x], wired_or, &mut t)?;
                    }
                }
                self.a.reinit(&e, &[y], &ALL, &mut t)?;
                self.na.reinit(&e, &[y], &ALL, &mut t)?;
                self.a.store_plane(&e, y, &ALL, &out, &mut t)?;
                self.na.store_plane(&e, y, &ALL, &invert(&out), &mut t)?;
                let lanes: Vec<_> = (0..5).map(|x| (x, y)).collect();
                vec![(Which::A, lanes.clone()), (Which::NA, lanes)]
            }
            OpKind::Iota => {
                let rc = self.logical.iota_bank().constant(self.round)?;
                let a = self.a.read_plane(&e, 0, &[0], &mut t)?;
                let mut out = vec![[false; 5]; SLICES];
                for z in 0..SLICES {
                    out[z][0] = self.gates.xor(&e, a[z][0], (rc >> z) & 1 == 1, &mut t)?;
                }
                self.a.reinit(&e, &[0], &[0], &mut t)?;
                self.na.reinit(&e, &[0], &[0], &mut t)?;
                self.a.store_plane(&e, 0, &[0], &out, &mut t)?;
                self.na.store_plane(&e, 0, &[0], &invert(&out), &mut t)?;
                vec![(Which::A, vec![(0, 0)]), (Which::NA, vec![(0, 0)])]
            }
        };
        let mut mismatches = extra_mismatch + (self.gates.mismatches - gate_errors);
        for (which, lanes) in &touched {
            mismatches += self.mismatches(*which, lanes);
        }
        Ok(AnalogTrace {
            op,
            selector,
            compute_energy_j: t.compute,
            init_energy_j: t.init,
            max_disturb: t.disturb,
            mismatches,
        })
    }

    /// Every window of one round, in schedule order.
    pub fn round_windows(&mut self, round: usize) -> Result<Vec<AnalogTrace>> {
        self.set_round(round);
        let mut out = Vec::new();
        let mut run = |s: &mut Self, op: OpKind, n: Option<u8>| -> Result<()> {
            match n {
                None => out.push(s.window(op, None)?),
                Some(n) => {
                    for k in 0..n {
                        out.push(s.window(op, Some(k))?);
                    }
                }
            }
            Ok(())
        };
        run(self, OpKind::Theta, Some(5))?;
        run(self, OpKind::RhoInit, None)?;
        run(self, OpKind::Rho, Some(5))?;
        run(self, OpKind::StateInit, None)?;
        run(self, OpKind::Pi, Some(25))?;
        run(self, OpKind::Complement, Some(5))?;
        run(self, OpKind::Chi, Some(5))?;
        run(self, OpKind::Iota, None)?;
        self.current = None;
        Ok(out)
    }
}

impl RhoBank {
    fn clear_rows_in_all_planes(
        &mut self,
        e: &Electrical,
        row: usize,
        tally: &mut Tally,
    ) -> Result<()> {
        self.clear_rows(e, &[row], tally)
    }
}

fn invert(bits: &SliceBits) -> SliceBits {
    bits.iter().map(|b| b.map(|v| !v)).collect()
}

fn all_lanes() -> Vec<(usize, usize)> {
    (0..5).flat_map(|y| (0..5).map(move |x| (x, y))).collect()
}

/// Message init, mapping and the first round of `block`, replayed analog.
pub fn analyze_first_block(
    config: &SimConfig,
    block: &[u8],
    variant: Variant,
) -> Result<AnalogReport> {
    let mut s = AnalogSession::new(config, &KeccakState::zero());
    s.set_block(block, variant);
    let mut windows = vec![s.window(OpKind::Init, None)?];
    let chunks = variant.rate_bytes().div_ceil(40);
    for c in 0..chunks {
        windows.push(s.window(OpKind::Map, Some(c as u8))?);
    }
    let mut absorbed = KeccakState::zero();
    absorbed.xor_block(block);
    windows.extend(s.round_windows(1)?);
    let want = keccak::round(&absorbed, 1)?;
    let round_mismatches = (0..25)
        .map(|l| (s.state().0[l] ^ want.0[l]).count_ones() as usize)
        .sum();
    let max_disturb = windows.iter().map(|w| w.max_disturb).fold(0.0, f64::max);
    Ok(AnalogReport {
        windows,
        round_mismatches,
        max_disturb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_block_replay_matches_logical() {
        let cfg = SimConfig::default();
        let block: Vec<u8> = (0..136u32).map(|i| (i * 37 + 11) as u8).collect();
        let rep = analyze_first_block(&cfg, &block, Variant::Sha3_256).unwrap();
        assert!(rep.equivalent(), "{rep:?}");
        assert!(rep.max_disturb < gates::DRIFT_LIMIT);
        assert!(rep.windows.iter().all(|w| w.energy_j() >= 0.0));
        assert!(rep.energy_of(OpKind::Theta) > rep.energy_of(OpKind::Pi));
    }

    #[test]
    fn window_needs_selector() {
        let mut s = AnalogSession::new(&SimConfig::default(), &KeccakState::zero());
        assert!(s.window(OpKind::Chi, None).is_err());
        assert!(s.window(OpKind::Chi, Some(5)).is_err());
    }

    #[test]
    fn chi_plane_on_random_data() {
        let mut st = KeccakState::zero();
        for (i, l) in st.0.iter_mut().enumerate() {
            *l = (i as u64 + 3).wrapping_mul(0xD6E8_FEB8_6659_FD93);
        }
        let mut s = AnalogSession::new(&SimConfig::default(), &st);
        let w = s.window(OpKind::Chi, Some(2)).unwrap();
        assert!(w.equivalent() && w.energy_j() > 0.0);
        assert_eq!(s.state().plane(2), keccak::chi(&st).plane(2));
    }
}
