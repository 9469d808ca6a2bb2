//! In-memory SHA3 accelerator: memristor banks driven by a fixed
//! micro-op schedule, with optional analog replay of the first round.

pub mod analog;
mod banks;
mod mux;
mod schedule;

use serde::Serialize;

use crate::config::{Backend, SimConfig};
use crate::error::Result;
use crate::keccak::{self, KeccakState, Variant, ROUNDS};

pub use analog::{AnalogReport, AnalogTrace};
pub use banks::{Banks, ChiBank, IotaBank};
pub use mux::{MuxNetwork, SELECT_ROT1};
pub use schedule::{CycleRecord, CycleTrace, MicroOp, OpKind};

/// Bank contents at a round boundary; recorded only in debug mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundSnapshot {
    pub block: u32,
    pub round: u8,
    pub a: KeccakState,
    pub na: KeccakState,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub variant: Variant,
    pub message_bytes: usize,
    pub blocks: usize,
    pub digest: String,
    pub matches_reference: bool,
    pub total_cycles: u64,
    pub cycles_per_block: Vec<u64>,
    pub control_bits: u64,
    pub trace: CycleTrace,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analog: Option<AnalogReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<RoundSnapshot>,
}

#[derive(Debug, Clone)]
pub struct Accelerator {
    config: SimConfig,
    debug_rounds: bool,
}

impl Accelerator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Accelerator {
            config,
            debug_rounds: false,
        })
    }

    /// Enables bank snapshots at every round boundary.
    pub fn with_debug_rounds(mut self, on: bool) -> Self {
        self.debug_rounds = on;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn permute(
        &self,
        banks: &mut Banks,
        trace: &mut CycleTrace,
        block: u32,
        snapshots: &mut Vec<RoundSnapshot>,
    ) -> Result<()> {
        for round in 1..=ROUNDS {
            banks.exec_round(round, trace)?;
            if self.debug_rounds {
                snapshots.push(RoundSnapshot {
                    block,
                    round: round as u8,
                    a: *banks.a(),
                    na: *banks.na(),
                });
            }
        }
        Ok(())
    }

    /// Absorbs one rate-sized block into a zero state and runs Keccak-f.
    /// Only the final state and the trace leave the accelerator.
    pub fn run_block(&self, variant: Variant, block: &[u8]) -> Result<(KeccakState, CycleTrace)> {
        let mut trace = CycleTrace::new(self.config.control_bits.per_cycle());
        let mut banks = Banks::default();
        banks.exec_message_init(&mut trace);
        banks.map_block(block, variant.rate_bytes(), &mut trace)?;
        self.permute(&mut banks, &mut trace, 0, &mut Vec::new())?;
        Ok((*banks.a(), trace))
    }

    pub fn hash_message(&self, message: &[u8]) -> Result<(Vec<u8>, RunReport)> {
        self.hash_with(message, self.config.variant)
    }

    pub fn hash_with(&self, message: &[u8], variant: Variant) -> Result<(Vec<u8>, RunReport)> {
        let blocks = keccak::pad(message, variant);
        let mut trace = CycleTrace::new(self.config.control_bits.per_cycle());
        let mut snapshots = Vec::new();
        let mut banks = Banks::default();
        banks.exec_message_init(&mut trace);
        for (i, block) in blocks.iter().enumerate() {
            trace.set_block(i as u32);
            banks.map_block(block, variant.rate_bytes(), &mut trace)?;
            self.permute(&mut banks, &mut trace, i as u32, &mut snapshots)?;
        }
        let digest = keccak::squeeze(banks.a(), variant);
        let analog = match self.config.backend {
            Backend::Logical => None,
            Backend::LogicalAnalog => Some(analog::analyze_first_block(
                &self.config,
                &blocks[0],
                variant,
            )?),
        };
        let report = RunReport {
            variant,
            message_bytes: message.len(),
            blocks: blocks.len(),
            digest: hex::encode(&digest),
            matches_reference: digest == keccak::sha3_digest(message, variant),
            total_cycles: trace.total_cycles(),
            cycles_per_block: (0..blocks.len() as u32)
                .map(|b| trace.cycles_of_block(b))
                .collect(),
            control_bits: trace.total_control_bits(),
            trace,
            analog,
            snapshots,
        };
        Ok((digest, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_block_costs_6326_cycles() {
        let acc = Accelerator::new(SimConfig::default()).unwrap();
        let (state, trace) = acc.run_block(Variant::Sha3_256, &[0x5a; 136]).unwrap();
        assert_eq!(trace.total_cycles(), 6326);
        let mut want = KeccakState::zero();
        want.xor_block(&[0x5a; 136]);
        assert_eq!(state, keccak::keccak_f(&want));
    }

    #[test]
    fn digests_match_reference() {
        let acc = Accelerator::new(SimConfig::default()).unwrap();
        for len in [0, 1, 135, 136, 137, 300] {
            let msg: Vec<u8> = (0..len).map(|i| i as u8).collect();
            for v in [Variant::Sha3_256, Variant::Sha3_512] {
                let (d, r) = acc.hash_with(&msg, v).unwrap();
                assert_eq!(d, keccak::sha3_digest(&msg, v));
                assert!(r.matches_reference);
                assert!(r.snapshots.is_empty());
            }
        }
    }

    #[test]
    fn debug_mode_snapshots_rounds() {
        let acc = Accelerator::new(SimConfig::default())
            .unwrap()
            .with_debug_rounds(true);
        let (_, r) = acc.hash_message(b"abc").unwrap();
        assert_eq!(r.snapshots.len(), 24);
        assert!(r.snapshots.iter().all(|s| s.na == s.a.complement()));
    }
}
