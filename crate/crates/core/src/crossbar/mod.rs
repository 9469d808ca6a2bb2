//! Crossbar arrays of rectifying memristors, their wire drivers and the
//! transmission-gate links between arrays.

mod solver;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::device::{step_energy, step_state, DeviceParams, MemristorState};
use crate::error::{Error, Result};

pub use solver::SolverSettings;
use solver::{Branch, Circuit};

/// Which wire of a crossing connects to the device's forward (anode) terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    /// Forward bias when the row wire sits above the column wire.
    RowAnode,
    /// Forward bias when the column wire sits above the row wire.
    ColAnode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub polarity: Polarity,
    pub state: MemristorState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wire {
    Row(usize),
    Col(usize),
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wire::Row(i) => write!(f, "row {i}"),
            Wire::Col(j) => write!(f, "col {j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WireDrive {
    Fixed(f64),
    HighZ,
    /// Tied to `rail` through a reference resistor `r_g`.
    Pulled {
        r_g: f64,
        rail: f64,
    },
}

/// One drive mode per wire of an array.
#[derive(Debug, Clone, PartialEq)]
pub struct Drives {
    rows: Vec<WireDrive>,
    cols: Vec<WireDrive>,
}

impl Drives {
    pub fn uniform(rows: usize, cols: usize, drive: WireDrive) -> Self {
        Drives {
            rows: vec![drive; rows],
            cols: vec![drive; cols],
        }
    }

    pub fn for_bar(bar: &Crossbar, drive: WireDrive) -> Self {
        Self::uniform(bar.rows, bar.cols, drive)
    }

    pub fn set(&mut self, wire: Wire, drive: WireDrive) -> &mut Self {
        match wire {
            Wire::Row(i) => self.rows[i] = drive,
            Wire::Col(j) => self.cols[j] = drive,
        }
        self
    }

    pub fn with(mut self, wire: Wire, drive: WireDrive) -> Self {
        self.set(wire, drive);
        self
    }

    pub fn get(&self, wire: Wire) -> WireDrive {
        match wire {
            Wire::Row(i) => self.rows[i],
            Wire::Col(j) => self.cols[j],
        }
    }

    /// Every fixed level in use.
    pub fn fixed_levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().chain(&self.cols).filter_map(|d| match d {
            WireDrive::Fixed(v) => Some(*v),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossbar {
    pub name: String,
    rows: usize,
    cols: usize,
    params: DeviceParams,
    cells: Vec<Option<Cell>>,
}

impl Crossbar {
    /// An array with no devices placed.
    pub fn empty(name: impl Into<String>, rows: usize, cols: usize, params: DeviceParams) -> Self {
        Crossbar {
            name: name.into(),
            rows,
            cols,
            params,
            cells: vec![None; rows * cols],
        }
    }

    /// Fully populated array with one polarity and state.
    pub fn filled(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        params: DeviceParams,
        polarity: Polarity,
        state: MemristorState,
    ) -> Self {
        let mut bar = Self::empty(name, rows, cols, params);
        bar.cells
            .iter_mut()
            .for_each(|c| *c = Some(Cell { polarity, state }));
        bar
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn place(&mut self, row: usize, col: usize, polarity: Polarity, state: MemristorState) {
        self.cells[row * self.cols + col] = Some(Cell { polarity, state });
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&Cell> {
        self.cells[row * self.cols + col].as_ref()
    }

    pub fn state(&self, row: usize, col: usize) -> Option<MemristorState> {
        self.cell(row, col).map(|c| c.state)
    }

    pub fn set_state(&mut self, row: usize, col: usize, state: MemristorState) {
        if let Some(c) = self.cells[row * self.cols + col].as_mut() {
            c.state = state;
        }
    }

    pub fn bit(&self, row: usize, col: usize) -> Option<bool> {
        self.state(row, col).map(MemristorState::bit)
    }

    fn contains(&self, wire: Wire) -> bool {
        match wire {
            Wire::Row(i) => i < self.rows,
            Wire::Col(j) => j < self.cols,
        }
    }

    fn wire_index(&self, wire: Wire) -> usize {
        match wire {
            Wire::Row(i) => i,
            Wire::Col(j) => self.rows + j,
        }
    }

    /// Largest |w| difference to another array of identical shape.
    pub fn max_drift(&self, other: &Crossbar) -> f64 {
        self.cells
            .iter()
            .zip(&other.cells)
            .filter_map(|(a, b)| Some((a.as_ref()?.state.w() - b.as_ref()?.state.w()).abs()))
            .fold(0.0, f64::max)
    }

    pub fn snapshot(&self) -> CrossbarSnapshot {
        CrossbarSnapshot {
            name: self.name.clone(),
            rows: self.rows,
            cols: self.cols,
            w: self.cells.iter().map(|c| c.map(|c| c.state.w())).collect(),
        }
    }

    /// Solves this array on its own.
    pub fn solve_cycle(&self, drives: &Drives) -> Result<CycleSolution> {
        solve_cycle(self, drives)
    }

    /// Steps every cell by its solved bias; returns the dissipated energy (J).
    pub fn apply_cycle(&mut self, solution: &CycleSolution, dt: f64) -> f64 {
        let mut energy = 0.0;
        for (idx, cell) in self.cells.iter_mut().enumerate() {
            if let (Some(cell), Some(drop)) = (cell.as_mut(), solution.drops[idx]) {
                energy += step_energy(&self.params, cell.state, drop, dt);
                cell.state = step_state(&self.params, cell.state, drop, dt);
            }
        }
        energy
    }
}

/// Structured dump of an array's state for debugging and baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossbarSnapshot {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSolution {
    pub rows: usize,
    pub cols: usize,
    /// Row voltages followed by column voltages.
    pub wire_voltages: Vec<f64>,
    /// Forward-referenced bias per cell, row-major.
    pub drops: Vec<Option<f64>>,
    pub currents: Vec<Option<f64>>,
    pub iterations: usize,
    pub residual: f64,
}

impl CycleSolution {
    pub fn voltage(&self, wire: Wire) -> f64 {
        match wire {
            Wire::Row(i) => self.wire_voltages[i],
            Wire::Col(j) => self.wire_voltages[self.rows + j],
        }
    }

    pub fn drop(&self, row: usize, col: usize) -> Option<f64> {
        self.drops[row * self.cols + col]
    }

    pub fn current(&self, row: usize, col: usize) -> Option<f64> {
        self.currents[row * self.cols + col]
    }

    pub fn max_abs_current(&self) -> f64 {
        self.currents
            .iter()
            .flatten()
            .map(|i| i.abs())
            .fold(0.0, f64::max)
    }
}

pub fn solve_cycle(bar: &Crossbar, drives: &Drives) -> Result<CycleSolution> {
    let net = Network {
        bars: vec![bar.clone()],
        links: Vec::new(),
        settings: SolverSettings::default(),
    };
    Ok(net.solve(std::slice::from_ref(drives))?.remove(0))
}

/// Value-semantics form of [`Crossbar::apply_cycle`].
pub fn apply_cycle(bar: &Crossbar, solution: &CycleSolution, dt: f64) -> (Crossbar, f64) {
    let mut next = bar.clone();
    let energy = next.apply_cycle(solution, dt);
    (next, energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireRef {
    pub bar: usize,
    pub wire: Wire,
}

/// Ideal transmission gate between two wires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub a: WireRef,
    pub b: WireRef,
    pub enabled: bool,
}

/// Several arrays solved together, joined by transmission gates.
#[derive(Debug, Clone)]
pub struct Network {
    pub bars: Vec<Crossbar>,
    pub links: Vec<Link>,
    pub settings: SolverSettings,
}

/// Joins `src` and `dst` through transmission gates on the mapped wire pairs.
pub fn gate_link(
    src: Crossbar,
    dst: Crossbar,
    mapping: &[(Wire, Wire)],
    enabled: bool,
) -> Result<Network> {
    let mut net = Network::new(vec![src, dst]);
    for &(a, b) in mapping {
        net.link(
            WireRef { bar: 0, wire: a },
            WireRef { bar: 1, wire: b },
            enabled,
        )?;
    }
    Ok(net)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Network {
    pub fn new(bars: Vec<Crossbar>) -> Self {
        Network {
            bars,
            links: Vec::new(),
            settings: SolverSettings::default(),
        }
    }

    pub fn link(&mut self, a: WireRef, b: WireRef, enabled: bool) -> Result<usize> {
        for r in [a, b] {
            let bar = self.bars.get(r.bar).ok_or_else(|| Error::DanglingWire {
                array: format!("#{}", r.bar),
                wire: r.wire.to_string(),
            })?;
            if !bar.contains(r.wire) {
                return Err(Error::DanglingWire {
                    array: bar.name.clone(),
                    wire: r.wire.to_string(),
                });
            }
        }
        self.links.push(Link { a, b, enabled });
        Ok(self.links.len() - 1)
    }

    pub fn set_links(&mut self, enabled: bool) {
        self.links.iter_mut().for_each(|l| l.enabled = enabled);
    }

    fn offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.bars.len() + 1);
        let mut acc = 0;
        for b in &self.bars {
            offs.push(acc);
            acc += b.rows + b.cols;
        }
        offs.push(acc);
        offs
    }

    /// Solves one clock cycle with one drive map per array.
    pub fn solve(&self, drives: &[Drives]) -> Result<Vec<CycleSolution>> {
        assert_eq!(drives.len(), self.bars.len(), "one drive map per array");
        let offs = self.offsets();
        let total = offs[self.bars.len()];
        let mut parent: Vec<usize> = (0..total).collect();
        for l in self.links.iter().filter(|l| l.enabled) {
            let a = offs[l.a.bar] + self.bars[l.a.bar].wire_index(l.a.wire);
            let b = offs[l.b.bar] + self.bars[l.b.bar].wire_index(l.b.wire);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut node_of = vec![0; total];
        let mut roots = Vec::new();
        for (g, slot) in node_of.iter_mut().enumerate() {
            let r = find(&mut parent, g);
            let pos = match roots.iter().position(|&x| x == r) {
                Some(p) => p,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
            *slot = pos;
        }

        let mut circuit = Circuit {
            fixed: vec![None; roots.len()],
            ..Default::default()
        };
        for (b, (bar, d)) in self.bars.iter().zip(drives).enumerate() {
            let (lo, hi) = (10.0 * bar.params.r_on, bar.params.r_off / 10.0);
            let wires = (0..bar.rows)
                .map(Wire::Row)
                .chain((0..bar.cols).map(Wire::Col));
            for wire in wires {
                let node = node_of[offs[b] + bar.wire_index(wire)];
                match d.get(wire) {
                    WireDrive::Fixed(v) => match circuit.fixed[node] {
                        Some(prev) if (prev - v).abs() > 1e-12 => {
                            return Err(Error::ConflictingDrives(prev, v))
                        }
                        _ => circuit.fixed[node] = Some(v),
                    },
                    WireDrive::Pulled { r_g, rail } => {
                        if !(lo..=hi).contains(&r_g) {
                            return Err(Error::ReferenceResistor {
                                r_g,
                                min: lo,
                                max: hi,
                            });
                        }
                        circuit.pulls.push((node, 1.0 / r_g, rail));
                    }
                    WireDrive::HighZ => {}
                }
            }
            for r in 0..bar.rows {
                for c in 0..bar.cols {
                    if let Some(cell) = bar.cell(r, c) {
                        let rn = node_of[offs[b] + r];
                        let cn = node_of[offs[b] + bar.rows + c];
                        let (anode, cathode) = match cell.polarity {
                            Polarity::RowAnode => (rn, cn),
                            Polarity::ColAnode => (cn, rn),
                        };
                        circuit.branches.push(Branch {
                            anode,
                            cathode,
                            state: cell.state,
                            params: bar.params,
                        });
                    }
                }
            }
        }
        if circuit.fixed.iter().all(Option::is_none) {
            return Err(Error::NoFixedWire);
        }

        let sol = circuit.solve(&self.settings)?;
        let mut out = Vec::with_capacity(self.bars.len());
        let mut branch = circuit.branches.iter();
        for (b, bar) in self.bars.iter().enumerate() {
            let wire_voltages: Vec<f64> = (0..bar.rows + bar.cols)
                .map(|k| sol.voltages[node_of[offs[b] + k]])
                .collect();
            let mut drops = vec![None; bar.rows * bar.cols];
            let mut currents = vec![None; bar.rows * bar.cols];
            for r in 0..bar.rows {
                for c in 0..bar.cols {
                    if bar.cell(r, c).is_some() {
                        let br = branch.next().expect("branch per cell");
                        let drop = sol.voltages[br.anode] - sol.voltages[br.cathode];
                        drops[r * bar.cols + c] = Some(drop);
                        currents[r * bar.cols + c] =
                            Some(crate::device::current(&br.params, br.state, drop));
                    }
                }
            }
            out.push(CycleSolution {
                rows: bar.rows,
                cols: bar.cols,
                wire_voltages,
                drops,
                currents,
                iterations: sol.iterations,
                residual: sol.residual,
            });
        }
        Ok(out)
    }

    /// Steps every array; returns the total dissipated energy (J).
    pub fn apply(&mut self, solutions: &[CycleSolution], dt: f64) -> f64 {
        self.bars
            .iter_mut()
            .zip(solutions)
            .map(|(bar, s)| bar.apply_cycle(s, dt))
            .sum()
    }

    /// Solve and apply in one step.
    pub fn cycle(&mut self, drives: &[Drives], dt: f64) -> Result<(Vec<CycleSolution>, f64)> {
        let sols = self.solve(drives)?;
        let e = self.apply(&sols, dt);
        Ok((sols, e))
    }
}
