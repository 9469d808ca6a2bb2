//! Diode and volistor logic gates on rectifying-memristor crossbars.
//!
//! Each gate has a boolean semantic used by the logical backend and an
//! analog realization solved on [`crate::crossbar`] networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Electrical, GateInit};
use crate::crossbar::{
    Crossbar, CycleSolution, Drives, Network, Polarity, Wire, WireDrive, WireRef,
};
use crate::device::MemristorState;
use crate::error::{Error, Result};

/// Largest tolerated state drift of a cell during a read cycle.
pub const DRIFT_LIMIT: f64 = 0.01;

pub fn diode_and(a: bool, b: bool) -> bool {
    a && b
}

pub fn diode_nand(a: bool, b: bool) -> bool {
    !(a && b)
}

pub fn xnor2(a: bool, b: bool) -> bool {
    a == b
}

pub fn xor_multi(bits: &[bool]) -> Result<bool> {
    if bits.len() < 2 {
        return Err(Error::EmptyInput(bits.len()));
    }
    Ok(bits.iter().fold(false, |acc, &b| acc ^ b))
}

/// Cycles to absorb `k` bits sequentially: one load plus two per further bit.
pub fn xor_multi_cycles(k: usize) -> Result<u32> {
    if k < 2 {
        return Err(Error::EmptyInput(k));
    }
    Ok(1 + 2 * (k as u32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    DiodeAnd,
    DiodeNand,
    VolistorXnor2,
    VolistorXorMulti,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [
        GateKind::DiodeAnd,
        GateKind::DiodeNand,
        GateKind::VolistorXnor2,
        GateKind::VolistorXorMulti,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::DiodeAnd => "diode-AND",
            GateKind::DiodeNand => "diode-NAND",
            GateKind::VolistorXnor2 => "volistor-XNOR-2",
            GateKind::VolistorXorMulti => "volistor-XOR-multi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRef {
    pub bar: usize,
    pub row: usize,
    pub col: usize,
}

/// Crossbar configuration of one gate evaluation: which cells hold the
/// inputs, where the output is sensed and the drive map of each phase.
/// The last phase is the read.
#[derive(Debug, Clone)]
pub struct GateConfig {
    pub kind: GateKind,
    pub inputs: Vec<CellRef>,
    pub output: WireRef,
    /// One drive map per array, per phase.
    pub phases: Vec<Vec<Drives>>,
}

impl GateConfig {
    pub fn cycles(&self) -> usize {
        self.phases.len()
    }
}

/// Outcome of one analog gate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AnalogEval {
    pub bit: bool,
    /// Sensed output wire voltage at the read phase.
    pub v_out: f64,
    /// Dissipated energy over every simulated phase (J).
    pub energy: f64,
    /// Largest |Δw| of any cell across a read phase.
    pub read_drift: f64,
    /// Largest current through a reverse-biased cell during a read phase (A).
    pub max_reverse_current: f64,
    /// Cells whose stored bit flipped during write phases.
    pub toggled: usize,
    /// Cells whose stored bit flipped during the read phase.
    pub read_toggled: usize,
    pub cycles: usize,
}

impl AnalogEval {
    fn absorb(&mut self, other: &AnalogEval) {
        self.energy += other.energy;
        self.read_drift = self.read_drift.max(other.read_drift);
        self.max_reverse_current = self.max_reverse_current.max(other.max_reverse_current);
        self.toggled += other.toggled;
        self.read_toggled += other.read_toggled;
    }
}

fn bits_of(net: &Network) -> Vec<Vec<Option<bool>>> {
    net.bars
        .iter()
        .map(|b| {
            (0..b.rows())
                .flat_map(|r| (0..b.cols()).map(move |c| (r, c)))
                .map(|(r, c)| b.bit(r, c))
                .collect()
        })
        .collect()
}

fn flips(before: &[Vec<Option<bool>>], after: &[Vec<Option<bool>>]) -> usize {
    before
        .iter()
        .flatten()
        .zip(after.iter().flatten())
        .filter(|(a, b)| a != b)
        .count()
}

fn reverse_current(sols: &[CycleSolution]) -> f64 {
    sols.iter()
        .flat_map(|s| s.drops.iter().zip(&s.currents))
        .filter_map(|(d, i)| match (d, i) {
            (Some(d), Some(i)) if *d < 0.0 => Some(i.abs()),
            _ => None,
        })
        .fold(0.0, f64::max)
}

/// Runs every phase of `cfg` on `net`, sensing the output at the last one.
pub fn run_config(net: &mut Network, cfg: &GateConfig, e: &Electrical) -> Result<AnalogEval> {
    let mut out = AnalogEval {
        cycles: cfg.cycles(),
        ..Default::default()
    };
    let last = cfg.phases.len() - 1;
    for (k, drives) in cfg.phases.iter().enumerate() {
        let before_bars = net.bars.clone();
        let before = bits_of(net);
        let (sols, energy) = net.cycle(drives, e.dt)?;
        out.energy += energy;
        let after = bits_of(net);
        if k == last {
            out.read_drift = before_bars
                .iter()
                .zip(&net.bars)
                .map(|(a, b)| a.max_drift(b))
                .fold(0.0, f64::max);
            out.read_toggled = flips(&before, &after);
            out.max_reverse_current = reverse_current(&sols);
            out.v_out = sols[cfg.output.bar].voltage(cfg.output.wire);
            out.bit = out.v_out >= e.v_plus / 2.0;
        } else {
            out.toggled += flips(&before, &after);
        }
    }
    Ok(out)
}

fn corrupted(eval: AnalogEval) -> Result<AnalogEval> {
    if eval.read_toggled > 0 {
        Err(Error::StateCorruption {
            drift: eval.read_drift,
        })
    } else {
        Ok(eval)
    }
}

// Diode AND layout: row 0 holds the stored inputs and is the read row,
// row 1 is the output wire Y with LRS cells Y1, Y2. Column 2 does not
// take part in the evaluation.
const READ_ROW: usize = 0;
const OUT_ROW: usize = 1;

fn and_read_drives(e: &Electrical, cols: usize, participating: &[usize]) -> Drives {
    let mut d = Drives::uniform(2, cols, WireDrive::Fixed(e.v_plus));
    d.set(
        Wire::Row(OUT_ROW),
        WireDrive::Pulled {
            r_g: e.r_g,
            rail: e.v_plus,
        },
    );
    for &c in participating {
        d.set(
            Wire::Col(c),
            WireDrive::Pulled {
                r_g: e.r_read,
                rail: 0.0,
            },
        );
    }
    d
}

/// Analog circuit of the diode AND gate with `a`, `b` already stored.
pub fn diode_and_circuit(e: &Electrical, a: bool, b: bool) -> (Network, GateConfig) {
    let mut bar = Crossbar::empty("and", 2, 3, e.params);
    for (c, bit) in [(0, a), (1, b), (2, false)] {
        bar.place(
            READ_ROW,
            c,
            Polarity::RowAnode,
            MemristorState::from_bit(bit),
        );
        bar.place(OUT_ROW, c, Polarity::RowAnode, MemristorState::LRS);
    }
    let cfg = GateConfig {
        kind: GateKind::DiodeAnd,
        inputs: vec![
            CellRef {
                bar: 0,
                row: READ_ROW,
                col: 0,
            },
            CellRef {
                bar: 0,
                row: READ_ROW,
                col: 1,
            },
        ],
        output: WireRef {
            bar: 0,
            wire: Wire::Row(OUT_ROW),
        },
        phases: vec![vec![and_read_drives(e, 3, &[0, 1])]],
    };
    (Network::new(vec![bar]), cfg)
}

/// Evaluates the diode AND gate without checking for read corruption.
pub fn eval_diode_and(e: &Electrical, a: bool, b: bool) -> Result<AnalogEval> {
    let (mut net, cfg) = diode_and_circuit(e, a, b);
    run_config(&mut net, &cfg, e)
}

pub fn analog_diode_and(e: &Electrical, a: bool, b: bool) -> Result<AnalogEval> {
    corrupted(eval_diode_and(e, a, b)?)
}

/// Analog circuit of the diode NAND gate: a memory array read through
/// inverting pull-ups, joined by transmission gates to a wired-OR row.
pub fn diode_nand_circuit(e: &Electrical, a: bool, b: bool) -> Result<(Network, GateConfig)> {
    let mut mem = Crossbar::empty("nand-mem", 1, 3, e.params);
    let mut calc = Crossbar::empty("nand-calc", 1, 3, e.params);
    for (c, bit) in [(0, a), (1, b), (2, true)] {
        mem.place(0, c, Polarity::ColAnode, MemristorState::from_bit(bit));
        calc.place(0, c, Polarity::ColAnode, MemristorState::LRS);
    }
    let net = crate::crossbar::gate_link(
        mem,
        calc,
        &[(Wire::Col(0), Wire::Col(0)), (Wire::Col(1), Wire::Col(1))],
        true,
    )?;
    let mut mem_d = Drives::uniform(1, 3, WireDrive::Fixed(0.0));
    let mut calc_d = Drives::uniform(1, 3, WireDrive::Fixed(0.0));
    for c in [0, 1] {
        mem_d.set(
            Wire::Col(c),
            WireDrive::Pulled {
                r_g: e.r_read,
                rail: e.v_plus,
            },
        );
        calc_d.set(Wire::Col(c), WireDrive::HighZ);
    }
    calc_d.set(
        Wire::Row(0),
        WireDrive::Pulled {
            r_g: e.r_g,
            rail: 0.0,
        },
    );
    let cfg = GateConfig {
        kind: GateKind::DiodeNand,
        inputs: vec![
            CellRef {
                bar: 0,
                row: 0,
                col: 0,
            },
            CellRef {
                bar: 0,
                row: 0,
                col: 1,
            },
        ],
        output: WireRef {
            bar: 1,
            wire: Wire::Row(0),
        },
        phases: vec![vec![mem_d, calc_d]],
    };
    Ok((net, cfg))
}

pub fn eval_diode_nand(e: &Electrical, a: bool, b: bool) -> Result<AnalogEval> {
    let (mut net, cfg) = diode_nand_circuit(e, a, b)?;
    run_config(&mut net, &cfg, e)
}

pub fn analog_diode_nand(e: &Electrical, a: bool, b: bool) -> Result<AnalogEval> {
    corrupted(eval_diode_nand(e, a, b)?)
}

/// Two-input volistor XNOR gate. Cells A and B sit on row X, the LRS
/// output cells Y1 and Y2 on row Y.
#[derive(Debug, Clone)]
pub struct Xnor2Gate {
    pub net: Network,
    e: Electrical,
    ready: bool,
}

const X_ROW: usize = 0;
const Y_ROW: usize = 1;

impl Xnor2Gate {
    /// A freshly programmed gate, ready for one evaluation.
    pub fn new(e: &Electrical) -> Self {
        let bar = Crossbar::filled(
            "xnor",
            2,
            2,
            e.params,
            Polarity::RowAnode,
            MemristorState::LRS,
        );
        Xnor2Gate {
            net: Network::new(vec![bar]),
            e: *e,
            ready: true,
        }
    }

    pub fn is_ready(&self) -> bool {
        self.ready
    }

    pub fn cells(&self) -> [MemristorState; 2] {
        let bar = &self.net.bars[0];
        [bar.state(X_ROW, 0).unwrap(), bar.state(X_ROW, 1).unwrap()]
    }

    fn init_drives(&self, x_level: f64) -> Drives {
        Drives::uniform(2, 2, WireDrive::Fixed(0.0))
            .with(Wire::Row(X_ROW), WireDrive::Fixed(x_level))
    }

    /// Re-programs A and B to LRS; returns the phases and energy used.
    pub fn init(&mut self) -> Result<(usize, f64)> {
        let levels: &[f64] = match self.e.gate_init {
            GateInit::DirectSet => &[self.e.v_set],
            GateInit::ClearThenSet => &[self.e.v_clear, self.e.v_set],
        };
        let mut energy = 0.0;
        for &v in levels {
            let d = self.init_drives(v);
            energy += self.net.cycle(&[d], self.e.dt)?.1;
        }
        self.ready = true;
        Ok((levels.len(), energy))
    }

    pub fn config(&self, a: bool, b: bool) -> GateConfig {
        let e = &self.e;
        let hi = e.v_clear.abs();
        let write = Drives::uniform(2, 2, WireDrive::Fixed(0.0))
            .with(Wire::Row(X_ROW), WireDrive::HighZ)
            .with(Wire::Row(Y_ROW), WireDrive::Fixed(e.v_plus))
            .with(Wire::Col(0), WireDrive::Fixed(if a { hi } else { 0.0 }))
            .with(Wire::Col(1), WireDrive::Fixed(if b { hi } else { 0.0 }));
        GateConfig {
            kind: GateKind::VolistorXnor2,
            inputs: vec![
                CellRef {
                    bar: 0,
                    row: X_ROW,
                    col: 0,
                },
                CellRef {
                    bar: 0,
                    row: X_ROW,
                    col: 1,
                },
            ],
            output: WireRef {
                bar: 0,
                wire: Wire::Row(Y_ROW),
            },
            phases: vec![vec![write], vec![and_read_drives(e, 2, &[0, 1])]],
        }
    }

    /// Write then read; the gate must be re-initialized before the next call.
    pub fn evaluate(&mut self, a: bool, b: bool) -> Result<AnalogEval> {
        if !self.ready {
            return Err(Error::ReuseWithoutInit);
        }
        let cfg = self.config(a, b);
        let out = run_config(&mut self.net, &cfg, &self.e)?;
        self.ready = false;
        Ok(out)
    }
}

pub fn eval_xnor2(e: &Electrical, a: bool, b: bool) -> Result<AnalogEval> {
    Xnor2Gate::new(e).evaluate(a, b)
}

/// Multi-input XOR by sequential absorption into one XNOR gate:
/// acc ⊕ b = XNOR(acc, ¬b), with ideal re-leveling between stages.
pub fn eval_xor_multi(e: &Electrical, bits: &[bool]) -> Result<AnalogEval> {
    let cycles = xor_multi_cycles(bits.len())? as usize;
    let mut gate = Xnor2Gate::new(e);
    let mut out = AnalogEval {
        bit: bits[0],
        cycles,
        ..Default::default()
    };
    for (k, &b) in bits[1..].iter().enumerate() {
        if k > 0 {
            out.energy += gate.init()?.1;
        }
        let step = gate.evaluate(out.bit, !b)?;
        out.absorb(&step);
        out.bit = step.bit;
        out.v_out = step.v_out;
    }
    Ok(out)
}

/// Truth-table verification result for one gate kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub kind: GateKind,
    pub domain: usize,
    pub mismatches: usize,
    pub max_read_drift: f64,
    pub max_reverse_current: f64,
    pub reverse_current_bound: f64,
    /// Evaluations whose read drift reached [`DRIFT_LIMIT`].
    pub disturb_violations: usize,
    pub max_write_toggles: usize,
    pub energy_j: f64,
    pub passed: bool,
}

fn summarize(kind: GateKind, e: &Electrical, evals: &[(bool, AnalogEval)]) -> GateReport {
    let bound = e.v_plus / e.params.r_off * (1.0 + 1e-9);
    let mismatches = evals.iter().filter(|(want, ev)| *want != ev.bit).count();
    let max_read_drift = evals
        .iter()
        .map(|(_, ev)| ev.read_drift)
        .fold(0.0, f64::max);
    let max_reverse_current = evals
        .iter()
        .map(|(_, ev)| ev.max_reverse_current)
        .fold(0.0, f64::max);
    let disturb_violations = evals
        .iter()
        .filter(|(_, ev)| ev.read_drift >= DRIFT_LIMIT)
        .count();
    let max_write_toggles = match kind {
        // one absorption per write phase
        GateKind::VolistorXorMulti => 0,
        _ => evals.iter().map(|(_, ev)| ev.toggled).max().unwrap_or(0),
    };
    GateReport {
        kind,
        domain: evals.len(),
        mismatches,
        max_read_drift,
        max_reverse_current,
        reverse_current_bound: bound,
        disturb_violations,
        max_write_toggles,
        energy_j: evals.iter().map(|(_, ev)| ev.energy).sum(),
        passed: mismatches == 0
            && disturb_violations == 0
            && max_reverse_current <= bound
            && max_write_toggles <= 1,
    }
}

const PAIRS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

/// Exhaustive check of one 2-input gate kind.
pub fn validate_two_input(kind: GateKind, e: &Electrical) -> Result<GateReport> {
    let mut evals = Vec::with_capacity(4);
    for (a, b) in PAIRS {
        let (want, ev) = match kind {
            GateKind::DiodeAnd => (diode_and(a, b), eval_diode_and(e, a, b)?),
            GateKind::DiodeNand => (diode_nand(a, b), eval_diode_nand(e, a, b)?),
            GateKind::VolistorXnor2 => (xnor2(a, b), eval_xnor2(e, a, b)?),
            GateKind::VolistorXorMulti => unreachable!("multi-input gate has its own validator"),
        };
        evals.push((want, ev));
    }
    Ok(summarize(kind, e, &evals))
}

/// Random-sample check of the multi-input XOR.
pub fn validate_xor_multi(
    e: &Electrical,
    inputs: usize,
    samples: usize,
    seed: u64,
) -> Result<GateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let bits: Vec<bool> = (0..inputs).map(|_| rng.gen()).collect();
        evals.push((xor_multi(&bits)?, eval_xor_multi(e, &bits)?));
    }
    Ok(summarize(GateKind::VolistorXorMulti, e, &evals))
}

/// Full gate suite: exhaustive 2-input tables and 256 ten-input XOR samples.
pub fn validate_all(e: &Electrical, seed: u64) -> Result<Vec<GateReport>> {
    let mut out = Vec::new();
    for kind in [
        GateKind::DiodeAnd,
        GateKind::DiodeNand,
        GateKind::VolistorXnor2,
    ] {
        out.push(validate_two_input(kind, e)?);
    }
    out.push(validate_xor_multi(e, 10, 256, seed)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn elec() -> Electrical {
        Electrical::default()
    }

    #[test]
    fn boolean_semantics() {
        assert!(!diode_and(false, true));
        assert!(diode_and(true, true));
        assert!(diode_nand(false, true));
        assert!(!diode_nand(true, true));
        assert!(xnor2(true, true) && xnor2(false, false) && !xnor2(true, false));
        assert!(!xor_multi(&[false; 10]).unwrap());
        assert!(xor_multi(&[true, false, true, true]).unwrap());
        assert_eq!(xor_multi(&[true]), Err(Error::EmptyInput(1)));
        assert_eq!(xor_multi_cycles(10).unwrap(), 19);
    }

    #[test]
    fn diode_and_levels() {
        let e = elec();
        let hi = analog_diode_and(&e, true, true).unwrap();
        let lo = analog_diode_and(&e, false, true).unwrap();
        assert!(hi.v_out > 0.5 && hi.bit, "{hi:?}");
        assert!(lo.v_out < 0.2 && !lo.bit, "{lo:?}");
        assert!(hi.read_drift < DRIFT_LIMIT && lo.read_drift < DRIFT_LIMIT);
    }

    #[test]
    fn diode_nand_levels() {
        let e = elec();
        let one = analog_diode_nand(&e, false, true).unwrap();
        let zero = analog_diode_nand(&e, true, true).unwrap();
        assert!(one.bit && one.v_out > 0.4, "{one:?}");
        assert!(!zero.bit && zero.v_out < 0.1, "{zero:?}");
    }

    #[test]
    fn xnor_write_toggles_at_most_one() {
        let e = elec();
        for (a, b) in PAIRS {
            let ev = eval_xnor2(&e, a, b).unwrap();
            assert_eq!(ev.bit, xnor2(a, b));
            assert_eq!(ev.toggled, usize::from(a != b));
            assert_eq!(ev.cycles, 2);
        }
    }

    #[test]
    fn xnor_reuse_requires_init() {
        let e = elec();
        let mut g = Xnor2Gate::new(&e);
        g.evaluate(true, false).unwrap();
        assert_eq!(g.evaluate(true, true), Err(Error::ReuseWithoutInit));
        let (phases, energy) = g.init().unwrap();
        assert_eq!(phases, 1);
        assert!(energy > 0.0);
        assert!(g.cells().iter().all(|s| s.bit()));
        assert!(g.evaluate(true, true).unwrap().bit);
    }

    #[test]
    fn clear_then_set_init_takes_two_phases() {
        let e = Electrical {
            gate_init: GateInit::ClearThenSet,
            ..elec()
        };
        let mut g = Xnor2Gate::new(&e);
        g.evaluate(false, true).unwrap();
        assert_eq!(g.init().unwrap().0, 2);
        assert!(g.cells().iter().all(|s| s.w() > 0.999));
    }

    #[test]
    fn suite_passes_with_defaults() {
        for r in validate_all(&elec(), 7).unwrap() {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn literal_params_report_disturb() {
        let cfg = crate::config::SimConfig::default().with_literal_device();
        let e = cfg.electrical();
        let r = validate_two_input(GateKind::DiodeAnd, &e).unwrap();
        assert!(r.disturb_violations > 0, "{r:?}");
    }
}
