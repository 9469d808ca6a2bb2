//! Control storage, memristor area, throughput and energy accounting.

use std::fmt::Write as _;

use serde::Serialize;

use crate::accelerator::{AnalogReport, Banks, ChiBank, CycleTrace, IotaBank, OpKind, RunReport};
use crate::config::{ComparisonRow, EnergyReference, SimConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlStorage {
    pub cycles: u64,
    pub bits: u64,
    pub bytes: f64,
    pub kb: f64,
}

/// Externally stored driver settings needed to replay `trace`.
pub fn control_storage(trace: &CycleTrace, bytes_per_kb: f64) -> ControlStorage {
    let bits = trace.total_control_bits();
    let bytes = bits as f64 / 8.0;
    ControlStorage {
        cycles: trace.total_cycles(),
        bits,
        bytes,
        kb: bytes / bytes_per_kb,
    }
}

/// Block size over latency, times clock frequency (bit/s).
pub fn throughput(block_bits: f64, latency_cycles: f64, frequency_hz: f64) -> Result<f64> {
    if latency_cycles <= 0.0 {
        return Err(Error::ZeroLatency);
    }
    Ok(block_bits / latency_cycles * frequency_hz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaModel {
    pub a_bits: u64,
    pub na_bits: u64,
    pub rho_bits: u64,
    pub chi_bits: u64,
    pub iota_bits: u64,
    pub gates_and_routing_bits: u64,
    pub bytes_per_kb: f64,
}

impl AreaModel {
    pub fn new(config: &SimConfig) -> Self {
        AreaModel {
            a_bits: Banks::STATE_CELLS as u64,
            na_bits: Banks::STATE_CELLS as u64,
            rho_bits: Banks::STATE_CELLS as u64,
            chi_bits: ChiBank::CELLS as u64,
            iota_bits: IotaBank::CELLS as u64,
            gates_and_routing_bits: config.area.gate_and_routing_bits,
            bytes_per_kb: config.area.bytes_per_kb,
        }
    }

    fn kb(&self, bits: u64) -> f64 {
        bits as f64 / 8.0 / self.bytes_per_kb
    }

    pub fn crossbar_bits(&self) -> u64 {
        self.a_bits + self.na_bits + self.rho_bits + self.chi_bits + self.iota_bits
    }

    pub fn crossbar_kb(&self) -> f64 {
        self.kb(self.crossbar_bits())
    }

    pub fn gates_and_routing_kb(&self) -> f64 {
        self.kb(self.gates_and_routing_bits)
    }

    pub fn total_kb(&self) -> f64 {
        self.kb(self.crossbar_bits() + self.gates_and_routing_bits)
    }

    /// (array, bits, KB)
    pub fn breakdown(&self) -> Vec<(&'static str, u64, f64)> {
        [
            ("A", self.a_bits),
            ("NA", self.na_bits),
            ("Rho", self.rho_bits),
            ("Chi", self.chi_bits),
            ("Iota", self.iota_bits),
            ("gates+routing", self.gates_and_routing_bits),
        ]
        .into_iter()
        .map(|(n, b)| (n, b, self.kb(b)))
        .collect()
    }
}

/// Rows of the first-round energy breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EnergyRow {
    Initialization,
    Mapping,
    Theta,
    Rho,
    Pi,
    Chi,
    Iota,
}

impl EnergyRow {
    pub const ALL: [EnergyRow; 7] = [
        EnergyRow::Initialization,
        EnergyRow::Mapping,
        EnergyRow::Theta,
        EnergyRow::Rho,
        EnergyRow::Pi,
        EnergyRow::Chi,
        EnergyRow::Iota,
    ];

    pub fn of(op: OpKind) -> EnergyRow {
        match op {
            OpKind::Init => EnergyRow::Initialization,
            OpKind::Map => EnergyRow::Mapping,
            OpKind::Theta => EnergyRow::Theta,
            OpKind::RhoInit | OpKind::Rho => EnergyRow::Rho,
            OpKind::StateInit | OpKind::Pi => EnergyRow::Pi,
            OpKind::Complement | OpKind::Chi => EnergyRow::Chi,
            OpKind::Iota => EnergyRow::Iota,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnergyRow::Initialization => "Initialization",
            EnergyRow::Mapping => "Mapping",
            EnergyRow::Theta => "Theta",
            EnergyRow::Rho => "Rho",
            EnergyRow::Pi => "Pi",
            EnergyRow::Chi => "Chi",
            EnergyRow::Iota => "Iota",
        }
    }

    fn reference(self, r: &EnergyReference) -> f64 {
        match self {
            EnergyRow::Initialization => r.initialization,
            EnergyRow::Mapping => r.mapping,
            EnergyRow::Theta => r.theta,
            EnergyRow::Rho => r.rho,
            EnergyRow::Pi => r.pi,
            EnergyRow::Chi => r.chi,
            EnergyRow::Iota => r.iota,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergySource {
    AnalogMeasured,
    TableReference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyEntry {
    pub row: EnergyRow,
    pub pj: f64,
    /// Part of `pj` spent on initialization pulses, when measured.
    pub init_pj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub source: EnergySource,
    pub entries: Vec<EnergyEntry>,
}

impl EnergyLedger {
    pub fn reference(r: &EnergyReference) -> Self {
        EnergyLedger {
            source: EnergySource::TableReference,
            entries: EnergyRow::ALL
                .iter()
                .map(|&row| EnergyEntry {
                    row,
                    pj: row.reference(r),
                    init_pj: None,
                })
                .collect(),
        }
    }

    /// Sums analog window energies into rows; every row needs at least one window.
    pub fn from_analog(report: &AnalogReport) -> Result<Self> {
        let mut entries = Vec::new();
        for row in EnergyRow::ALL {
            let windows: Vec<_> = report
                .windows
                .iter()
                .filter(|w| EnergyRow::of(w.op) == row)
                .collect();
            if windows.is_empty() {
                return Err(Error::MissingTrace(row.name().to_string()));
            }
            entries.push(EnergyEntry {
                row,
                pj: windows.iter().map(|w| w.energy_j()).sum::<f64>() * 1e12,
                init_pj: Some(windows.iter().map(|w| w.init_energy_j).sum::<f64>() * 1e12),
            });
        }
        Ok(EnergyLedger {
            source: EnergySource::AnalogMeasured,
            entries,
        })
    }

    pub fn get(&self, row: EnergyRow) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.row == row)
            .map(|e| e.pj)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.pj).sum()
    }

    /// Theta ≥ Chi ≥ Mapping ≥ every other row.
    pub fn ordering_holds(&self) -> bool {
        let (theta, chi, map) = (
            self.get(EnergyRow::Theta),
            self.get(EnergyRow::Chi),
            self.get(EnergyRow::Mapping),
        );
        let rest = [
            EnergyRow::Initialization,
            EnergyRow::Rho,
            EnergyRow::Pi,
            EnergyRow::Iota,
        ];
        theta >= chi && chi >= map && rest.iter().all(|&r| map >= self.get(r))
    }

    /// Share of computation energy (everything after message setup) spent
    /// on initialization pulses. Only known for measured ledgers.
    pub fn initialization_share(&self) -> Option<f64> {
        let comp: Vec<_> = self
            .entries
            .iter()
            .filter(|e| e.row != EnergyRow::Initialization)
            .collect();
        let init: Option<f64> = comp.iter().map(|e| e.init_pj).sum();
        let total: f64 = comp.iter().map(|e| e.pj).sum();
        init.filter(|_| total > 0.0).map(|i| i / total)
    }

    pub fn to_csv(&self, reference: Option<&EnergyReference>) -> String {
        let mut out = String::from("row,energy_pj,init_pj,reference_pj\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{:.6},{},{}",
                e.row.name(),
                e.pj,
                e.init_pj.map(|v| format!("{v:.6}")).unwrap_or_default(),
                reference
                    .map(|r| format!("{:.3}", e.row.reference(r)))
                    .unwrap_or_default()
            );
        }
        out
    }
}

/// Derived figures of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub block_bits: usize,
    pub cycles_per_block: u64,
    pub control_storage_per_block: ControlStorage,
    pub throughput_bps: f64,
    pub area: AreaModel,
    pub crossbar_kb: f64,
    pub gates_and_routing_kb: f64,
    pub total_area_kb: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyLedger>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initialization_share: Option<f64>,
}

impl RunMetrics {
    pub fn new(config: &SimConfig, report: &RunReport) -> Result<Self> {
        let first = report.trace.block_trace(0);
        let cycles = first.total_cycles();
        let block_bits = report.variant.rate_bits();
        let area = AreaModel::new(config);
        let energy = report
            .analog
            .as_ref()
            .map(EnergyLedger::from_analog)
            .transpose()?;
        Ok(RunMetrics {
            block_bits,
            cycles_per_block: cycles,
            control_storage_per_block: control_storage(&first, config.area.bytes_per_kb),
            throughput_bps: throughput(block_bits as f64, cycles as f64, config.frequency_hz)?,
            crossbar_kb: area.crossbar_kb(),
            gates_and_routing_kb: area.gates_and_routing_kb(),
            total_area_kb: area.total_kb(),
            area,
            initialization_share: energy.as_ref().and_then(EnergyLedger::initialization_share),
            energy,
        })
    }
}

/// Published comparison rows plus, when available, this run's measured row.
pub fn comparison_table(config: &SimConfig, metrics: Option<&RunMetrics>) -> Vec<ComparisonRow> {
    let mut rows = config.comparison.clone();
    if let Some(m) = metrics {
        rows.push(ComparisonRow {
            name: "In-memory SHA3 (simulated)".into(),
            frequency_mhz: config.frequency_hz / 1e6,
            instruction_kb: Some(m.control_storage_per_block.kb),
            computing_kb: Some(m.total_area_kb),
            cmos_kge: Some(config.area.cmos_kge),
            latency_cycles: m.cycles_per_block as f64,
            throughput_gbps: m.throughput_bps / 1e9,
            energy_uj: m.energy.as_ref().map(|l| l.total() * 1e-6),
        });
    }
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "-".into())
}

pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<26} {:>9} {:>10} {:>10} {:>8} {:>9} {:>12} {:>11}\n",
        "design", "MHz", "instr KB", "comp KB", "KGE", "latency", "Gbps", "energy uJ"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<26} {:>9} {:>10} {:>10} {:>8} {:>9} {:>12.6} {:>11}",
            r.name,
            r.frequency_mhz,
            opt(r.instruction_kb.map(|v| (v * 1000.0).round() / 1000.0)),
            opt(r.computing_kb.map(|v| (v * 1000.0).round() / 1000.0)),
            opt(r.cmos_kge),
            r.latency_cycles,
            r.throughput_gbps,
            opt(r.energy_uj)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn throughput_formula() {
        assert_eq!(throughput(1088.0, 1088.0, 1.0).unwrap(), 1.0);
        assert_eq!(throughput(1088.0, 0.0, 1e9), Err(Error::ZeroLatency));
        let t = throughput(1088.0, 6326.0, 1e9).unwrap();
        assert!((t / 1e6 - 171.99).abs() < 0.005);
    }

    #[test]
    fn empty_trace_needs_no_storage() {
        let s = control_storage(&CycleTrace::new(178), 1000.0);
        assert_eq!(s.bits, 0);
        assert_eq!(s.kb, 0.0);
    }

    #[test]
    fn area_from_cell_counts() {
        let a = AreaModel::new(&SimConfig::default());
        assert_eq!(a.crossbar_bits(), 9536);
        assert_eq!(a.breakdown()[0], ("A", 1600, 0.2));
        assert!((a.crossbar_kb() - 1.192).abs() < 1e-12);
        assert!((a.gates_and_routing_kb() - 0.304).abs() < 1e-12);
        assert!((a.total_kb() - 1.496).abs() < 1e-12);
    }

    #[test]
    fn reference_ledger() {
        let l = EnergyLedger::reference(&SimConfig::default().energy_reference);
        assert!((l.total() - 64.181).abs() < 1e-9);
        assert!(l.ordering_holds());
        assert_eq!(l.initialization_share(), None);
    }

    #[test]
    fn empty_report_gives_static_rows() {
        let cfg = SimConfig::default();
        let rows = comparison_table(&cfg, None);
        assert_eq!(rows.len(), cfg.comparison.len());
        let shine = rows.iter().find(|r| r.name == "SHINE-1").unwrap();
        assert_eq!((shine.latency_cycles, shine.throughput_gbps), (264.0, 33.4));
    }
}
