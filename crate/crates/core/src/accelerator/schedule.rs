//! Micro-op schedule records and the cycle trace.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

/// Operation groups used for cycle and energy accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    /// Once-per-message bank initialization.
    Init,
    Map,
    Theta,
    RhoInit,
    Rho,
    /// Re-initialization of A and NA ahead of Pi.
    StateInit,
    Pi,
    Complement,
    Chi,
    Iota,
}

impl OpKind {
    pub const ALL: [OpKind; 10] = [
        OpKind::Init,
        OpKind::Map,
        OpKind::Theta,
        OpKind::RhoInit,
        OpKind::Rho,
        OpKind::StateInit,
        OpKind::Pi,
        OpKind::Complement,
        OpKind::Chi,
        OpKind::Iota,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Init => "init",
            OpKind::Map => "map",
            OpKind::Theta => "theta",
            OpKind::RhoInit => "rho-init",
            OpKind::Rho => "rho",
            OpKind::StateInit => "state-init",
            OpKind::Pi => "pi",
            OpKind::Complement => "complement",
            OpKind::Chi => "chi",
            OpKind::Iota => "iota",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One step of the driver program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum MicroOp {
    /// A and NA to their zero/one states, Rho to HRS.
    MessageInit,
    MapXor {
        chunk: u8,
    },
    MapInit {
        chunk: u8,
    },
    MapStore {
        chunk: u8,
    },
    /// R[x+1, y] = rot(A[x+1, y], 1), Rho sheet re-init folded in.
    ThetaRotate {
        sheet: u8,
    },
    /// 64 parallel 10-input column XORs.
    ThetaParity {
        sheet: u8,
    },
    ThetaLaneInit {
        sheet: u8,
        y: u8,
    },
    ThetaLaneXor {
        sheet: u8,
        y: u8,
    },
    ThetaLaneStore {
        sheet: u8,
        y: u8,
    },
    RhoInit,
    Rho {
        sheet: u8,
    },
    StateInit,
    Pi {
        x: u8,
        y: u8,
    },
    Complement {
        plane: u8,
    },
    ChiXorInit {
        plane: u8,
    },
    ChiEval {
        plane: u8,
        x: u8,
    },
    ChiPlaneInit {
        plane: u8,
    },
    ChiStore {
        plane: u8,
    },
    IotaXorInit,
    IotaXor,
    IotaLaneInit,
    IotaStore,
}

impl MicroOp {
    pub fn kind(self) -> OpKind {
        use MicroOp::*;
        match self {
            MessageInit => OpKind::Init,
            MapXor { .. } | MapInit { .. } | MapStore { .. } => OpKind::Map,
            ThetaRotate { .. }
            | ThetaParity { .. }
            | ThetaLaneInit { .. }
            | ThetaLaneXor { .. }
            | ThetaLaneStore { .. } => OpKind::Theta,
            RhoInit => OpKind::RhoInit,
            Rho { .. } => OpKind::Rho,
            StateInit => OpKind::StateInit,
            Pi { .. } => OpKind::Pi,
            Complement { .. } => OpKind::Complement,
            ChiXorInit { .. } | ChiEval { .. } | ChiPlaneInit { .. } | ChiStore { .. } => {
                OpKind::Chi
            }
            IotaXorInit | IotaXor | IotaLaneInit | IotaStore => OpKind::Iota,
        }
    }

    /// True for steps that (re)program cells rather than compute.
    pub fn is_initialization(self) -> bool {
        use MicroOp::*;
        matches!(
            self,
            MessageInit
                | MapInit { .. }
                | ThetaLaneInit { .. }
                | RhoInit
                | StateInit
                | ChiXorInit { .. }
                | ChiPlaneInit { .. }
                | IotaXorInit
                | IotaLaneInit
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleRecord {
    pub op: OpKind,
    pub micro_op: MicroOp,
    /// 1-based round number, `None` outside the permutation.
    pub round: Option<u8>,
    /// Message block index.
    pub block: u32,
    pub cycles: u32,
    pub control_bits: u64,
    /// Shared select value driven to every multiplexer, if any.
    pub mux_select: Option<u8>,
}

/// Per-micro-op record of everything the driver program executed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleTrace {
    pub control_bits_per_cycle: u32,
    pub records: Vec<CycleRecord>,
    #[serde(skip)]
    round: Option<u8>,
    #[serde(skip)]
    block: u32,
}

impl CycleTrace {
    pub fn new(control_bits_per_cycle: u32) -> Self {
        CycleTrace {
            control_bits_per_cycle,
            records: Vec::new(),
            round: None,
            block: 0,
        }
    }

    pub(crate) fn set_round(&mut self, round: Option<u8>) {
        self.round = round;
    }

    pub(crate) fn set_block(&mut self, block: u32) {
        self.block = block;
    }

    pub(crate) fn push(&mut self, micro_op: MicroOp, cycles: u32, mux_select: Option<u8>) {
        self.records.push(CycleRecord {
            op: micro_op.kind(),
            micro_op,
            round: self.round,
            block: self.block,
            cycles,
            control_bits: u64::from(cycles) * u64::from(self.control_bits_per_cycle),
            mux_select,
        });
    }

    pub fn total_cycles(&self) -> u64 {
        self.records.iter().map(|r| u64::from(r.cycles)).sum()
    }

    pub fn total_control_bits(&self) -> u64 {
        self.records.iter().map(|r| r.control_bits).sum()
    }

    pub fn cycles_of(&self, op: OpKind) -> u64 {
        self.records
            .iter()
            .filter(|r| r.op == op)
            .map(|r| u64::from(r.cycles))
            .sum()
    }

    pub fn cycles_in_round(&self, block: u32, round: u8) -> u64 {
        self.records
            .iter()
            .filter(|r| r.block == block && r.round == Some(round))
            .map(|r| u64::from(r.cycles))
            .sum()
    }

    /// Cycles per operation group within one round of one block.
    pub fn round_breakdown(&self, block: u32, round: u8) -> BTreeMap<OpKind, u64> {
        let mut out = BTreeMap::new();
        for r in self
            .records
            .iter()
            .filter(|r| r.block == block && r.round == Some(round))
        {
            *out.entry(r.op).or_insert(0) += u64::from(r.cycles);
        }
        out
    }

    pub fn cycles_of_block(&self, block: u32) -> u64 {
        self.records
            .iter()
            .filter(|r| r.block == block)
            .map(|r| u64::from(r.cycles))
            .sum()
    }

    /// Records limited to `op`.
    pub fn filter(&self, op: OpKind) -> CycleTrace {
        CycleTrace {
            control_bits_per_cycle: self.control_bits_per_cycle,
            records: self
                .records
                .iter()
                .filter(|r| r.op == op)
                .copied()
                .collect(),
            round: None,
            block: 0,
        }
    }

    /// Records of one message block.
    pub fn block_trace(&self, block: u32) -> CycleTrace {
        CycleTrace {
            control_bits_per_cycle: self.control_bits_per_cycle,
            records: self
                .records
                .iter()
                .filter(|r| r.block == block)
                .copied()
                .collect(),
            round: None,
            block,
        }
    }

    /// Delimited export, one row per micro-op.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("block,round,op,micro_op,cycles,control_bits,mux_select\n");
        for r in &self.records {
            let step = serde_json::to_string(&r.micro_op)
                .unwrap_or_default()
                .replace(',', ";");
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.block,
                r.round.map(|x| x.to_string()).unwrap_or_default(),
                r.op,
                step,
                r.cycles,
                r.control_bits,
                r.mux_select.map(|x| x.to_string()).unwrap_or_default()
            ));
        }
        out
    }
}
