//! Logical model of the memristor banks and the micro-ops that act on them.
//!
//! Every cell is a bit plus a ready flag (tracked per lane, since the 64
//! slices always see identical drives). A store needs the target lane to
//! have been initialized since its last write.

use crate::error::{Error, Result};
use crate::gates;
use crate::keccak::{lane_index, pi_destination, KeccakState, LANES, ROUNDS, ROUND_CONSTANTS};

use super::mux::{MuxNetwork, SELECT_ROT1};
use super::schedule::{CycleTrace, MicroOp};

const ALL_LANES: u32 = (1 << LANES) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BankId {
    A,
    NA,
    R,
}

/// Read-only round constants, one 64-cell row per round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IotaBank {
    rows: [u64; ROUNDS],
}

impl Default for IotaBank {
    fn default() -> Self {
        IotaBank {
            rows: *ROUND_CONSTANTS,
        }
    }
}

impl IotaBank {
    pub const CELLS: usize = ROUNDS * 64;

    /// Constant for 1-based round `i`.
    pub fn constant(&self, i: usize) -> Result<u64> {
        if !(1..=ROUNDS).contains(&i) {
            return Err(Error::RoundOutOfRange(i));
        }
        Ok(self.rows[i - 1])
    }
}

/// Wired-OR cells of the Chi array: 5 planes × 64 rows × 10 input columns,
/// programmed LRS once and never rewritten.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChiBank {
    wired_or: [[u64; 10]; 5],
}

impl Default for ChiBank {
    fn default() -> Self {
        ChiBank {
            wired_or: [[u64::MAX; 10]; 5],
        }
    }
}

impl ChiBank {
    pub const CELLS: usize = 5 * 64 * 10;

    pub fn wired_or(&self) -> &[[u64; 10]; 5] {
        &self.wired_or
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Banks {
    a: KeccakState,
    na: KeccakState,
    r: KeccakState,
    a_ready: u32,
    na_ready: u32,
    r_ready: u32,
    chi: ChiBank,
    iota: IotaBank,
    mux: MuxNetwork,
    parity_cycles: u32,
}

impl Default for Banks {
    fn default() -> Self {
        Self::from_lanes(KeccakState::zero(), KeccakState::zero())
    }
}

impl Banks {
    pub const STATE_CELLS: usize = 1600;

    /// Banks holding `a` and `na`, with a cleared Rho array.
    pub fn from_lanes(a: KeccakState, na: KeccakState) -> Self {
        Banks {
            a,
            na,
            r: KeccakState::zero(),
            a_ready: 0,
            na_ready: 0,
            r_ready: ALL_LANES,
            chi: ChiBank::default(),
            iota: IotaBank::default(),
            mux: MuxNetwork::default(),
            parity_cycles: gates::xor_multi_cycles(10).expect("ten inputs"),
        }
    }

    /// Banks holding `state` and its complement.
    pub fn loaded(state: KeccakState) -> Self {
        Self::from_lanes(state, state.complement())
    }

    pub fn a(&self) -> &KeccakState {
        &self.a
    }

    pub fn na(&self) -> &KeccakState {
        &self.na
    }

    pub fn rho(&self) -> &KeccakState {
        &self.r
    }

    pub fn chi_bank(&self) -> &ChiBank {
        &self.chi
    }

    pub fn iota_bank(&self) -> &IotaBank {
        &self.iota
    }

    pub fn mux(&self) -> &MuxNetwork {
        &self.mux
    }

    pub fn is_consistent(&self) -> bool {
        self.na == self.a.complement()
    }

    fn bank(&mut self, id: BankId) -> (&mut KeccakState, &mut u32) {
        match id {
            BankId::A => (&mut self.a, &mut self.a_ready),
            BankId::NA => (&mut self.na, &mut self.na_ready),
            BankId::R => (&mut self.r, &mut self.r_ready),
        }
    }

    /// Programs the given lanes to their initialized level.
    fn init(&mut self, id: BankId, lanes: impl IntoIterator<Item = (usize, usize)>) {
        // State cells initialize to LRS, Rho cells to HRS.
        let level = if id == BankId::R { 0 } else { u64::MAX };
        let (bank, ready) = self.bank(id);
        for (x, y) in lanes {
            bank[(x, y)] = level;
            *ready |= 1 << lane_index(x, y);
        }
    }

    fn store(&mut self, id: BankId, (x, y): (usize, usize), value: u64) -> Result<()> {
        let (bank, ready) = self.bank(id);
        let bit = 1 << lane_index(x, y);
        if *ready & bit == 0 {
            return Err(Error::ScheduleViolation(format!(
                "write to uninitialized lane {id:?}[{x},{y}]"
            )));
        }
        *ready &= !bit;
        bank[(x, y)] = value;
        Ok(())
    }

    fn all_lanes() -> impl Iterator<Item = (usize, usize)> {
        (0..5).flat_map(|y| (0..5).map(move |x| (x, y)))
    }

    /// A to zero, NA to all ones, Rho to HRS.
    pub fn exec_message_init(&mut self, trace: &mut CycleTrace) {
        self.a = KeccakState::zero();
        self.na = KeccakState::ones();
        self.a_ready = 0;
        self.na_ready = 0;
        self.init(BankId::R, Self::all_lanes());
        trace.push(MicroOp::MessageInit, 2, None);
    }

    /// XORs an `r`-bit block into the rate lanes of A (and its complement into NA),
    /// one plane-sized chunk at a time.
    pub fn map_block(
        &mut self,
        block: &[u8],
        rate_bytes: usize,
        trace: &mut CycleTrace,
    ) -> Result<()> {
        if block.len() != rate_bytes || !rate_bytes.is_multiple_of(8) {
            return Err(Error::BlockSizeMismatch {
                expected: rate_bytes,
                got: block.len(),
            });
        }
        let lanes = rate_bytes / 8;
        for (chunk, first) in (0..lanes).step_by(5).enumerate() {
            let chunk_lanes: Vec<(usize, usize)> = (first..lanes.min(first + 5))
                .map(|l| (l % 5, l / 5))
                .collect();
            let c = chunk as u8;
            let sums: Vec<u64> = chunk_lanes
                .iter()
                .map(|&(x, y)| {
                    let l = lane_index(x, y);
                    let word =
                        u64::from_le_bytes(block[8 * l..8 * l + 8].try_into().expect("8 bytes"));
                    self.a[(x, y)] ^ word
                })
                .collect();
            trace.push(MicroOp::MapXor { chunk: c }, 1, None);
            self.init(BankId::A, chunk_lanes.iter().copied());
            self.init(BankId::NA, chunk_lanes.iter().copied());
            trace.push(MicroOp::MapInit { chunk: c }, 1, None);
            for (&lane, &v) in chunk_lanes.iter().zip(&sums) {
                self.store(BankId::A, lane, v)?;
                self.store(BankId::NA, lane, !v)?;
            }
            trace.push(MicroOp::MapStore { chunk: c }, 1, None);
        }
        Ok(())
    }

    /// Theta on A, result left in NA.
    pub fn exec_theta(&mut self, trace: &mut CycleTrace) -> Result<()> {
        for x in 0..5 {
            let (next, prev) = ((x + 1) % 5, (x + 4) % 5);
            let sheet = x as u8;

            self.init(BankId::R, (0..5).map(|y| (next, y)));
            let rotated = self.mux.route_all(SELECT_ROT1, self.a.sheet(next));
            for (y, v) in rotated.into_iter().enumerate() {
                self.store(BankId::R, (next, y), v)?;
            }
            trace.push(MicroOp::ThetaRotate { sheet }, 1, Some(SELECT_ROT1));

            let d = (0..5).fold(0, |acc, y| acc ^ self.a[(prev, y)] ^ self.r[(next, y)]);
            trace.push(MicroOp::ThetaParity { sheet }, self.parity_cycles, None);

            for y in 0..5 {
                let yy = y as u8;
                self.init(BankId::NA, [(x, y)]);
                trace.push(MicroOp::ThetaLaneInit { sheet, y: yy }, 1, None);
                let v = d ^ self.a[(x, y)];
                trace.push(MicroOp::ThetaLaneXor { sheet, y: yy }, 1, None);
                self.store(BankId::NA, (x, y), v)?;
                trace.push(MicroOp::ThetaLaneStore { sheet, y: yy }, 1, None);
            }
        }
        Ok(())
    }

    /// Re-initializes Rho, then rotates every NA lane into Rho, one sheet per cycle.
    pub fn exec_rho(&mut self, trace: &mut CycleTrace) -> Result<()> {
        self.init(BankId::R, Self::all_lanes());
        trace.push(MicroOp::RhoInit, 1, None);
        for x in 0..5 {
            let select = x as u8;
            let routed = self.mux.route_all(select, self.na.sheet(x));
            for (y, v) in routed.into_iter().enumerate() {
                self.store(BankId::R, (x, y), v)?;
            }
            trace.push(MicroOp::Rho { sheet: select }, 1, Some(select));
        }
        Ok(())
    }

    /// Re-initializes A and NA, then moves Rho lanes back into A one per cycle.
    pub fn exec_pi(&mut self, trace: &mut CycleTrace) -> Result<()> {
        self.init(BankId::A, Self::all_lanes());
        self.init(BankId::NA, Self::all_lanes());
        trace.push(MicroOp::StateInit, 2, None);
        for (x, y) in Self::all_lanes() {
            self.store(BankId::A, pi_destination(x, y), self.r[(x, y)])?;
            trace.push(
                MicroOp::Pi {
                    x: x as u8,
                    y: y as u8,
                },
                1,
                None,
            );
        }
        Ok(())
    }

    /// NA = ¬A, one plane per cycle.
    pub fn exec_complement(&mut self, trace: &mut CycleTrace) -> Result<()> {
        for y in 0..5 {
            for x in 0..5 {
                self.store(BankId::NA, (x, y), !self.a[(x, y)])?;
            }
            trace.push(MicroOp::Complement { plane: y as u8 }, 1, None);
        }
        Ok(())
    }

    /// Chi plane by plane: each output is XNOR(a0, a1 ∨ ¬a2), with the
    /// wired-OR reading A[x+1] and NA[x+2].
    pub fn exec_chi(&mut self, trace: &mut CycleTrace) -> Result<()> {
        if !self.is_consistent() {
            return Err(Error::ComplementStale);
        }
        for y in 0..5 {
            let plane = y as u8;
            trace.push(MicroOp::ChiXorInit { plane }, 1, None);
            let mut out = [0u64; 5];
            for (x, o) in out.iter_mut().enumerate() {
                let wired_or = self.a[((x + 1) % 5, y)] | self.na[((x + 2) % 5, y)];
                *o = !(self.a[(x, y)] ^ wired_or);
                trace.push(MicroOp::ChiEval { plane, x: x as u8 }, 1, None);
            }
            let lanes = (0..5).map(|x| (x, y));
            self.init(BankId::A, lanes.clone());
            self.init(BankId::NA, lanes);
            trace.push(MicroOp::ChiPlaneInit { plane }, 2, None);
            for (x, v) in out.into_iter().enumerate() {
                self.store(BankId::A, (x, y), v)?;
                self.store(BankId::NA, (x, y), !v)?;
            }
            trace.push(MicroOp::ChiStore { plane }, 1, None);
        }
        Ok(())
    }

    /// XORs the 1-based round constant into A[0,0].
    pub fn exec_iota(&mut self, round: usize, trace: &mut CycleTrace) -> Result<()> {
        let rc = self.iota.constant(round)?;
        trace.push(MicroOp::IotaXorInit, 1, None);
        let v = self.a[(0, 0)] ^ rc;
        trace.push(MicroOp::IotaXor, 1, None);
        self.init(BankId::A, [(0, 0)]);
        self.init(BankId::NA, [(0, 0)]);
        trace.push(MicroOp::IotaLaneInit, 2, None);
        self.store(BankId::A, (0, 0), v)?;
        self.store(BankId::NA, (0, 0), !v)?;
        trace.push(MicroOp::IotaStore, 1, None);
        Ok(())
    }

    /// One full round, 1-based.
    pub fn exec_round(&mut self, round: usize, trace: &mut CycleTrace) -> Result<()> {
        trace.set_round(Some(round as u8));
        self.exec_theta(trace)?;
        self.exec_rho(trace)?;
        self.exec_pi(trace)?;
        self.exec_complement(trace)?;
        self.exec_chi(trace)?;
        self.exec_iota(round, trace)?;
        trace.set_round(None);
        Ok(())
    }
}
