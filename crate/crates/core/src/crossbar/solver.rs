//! Quasi-static nodal solver for networks of rectifying memristors.
//!
//! Each device is linear on either side of zero bias, so the network is
//! solved by guessing every device's bias branch, solving the resulting
//! linear conductance system and re-deriving the branches from the new
//! voltages until they stop changing.

use nalgebra::{DMatrix, DVector};

use crate::device::{resistance, DeviceParams, MemristorState};
use crate::error::{Error, Result};

/// Leak to ground on every floating node so isolated wires stay solvable.
pub(crate) const GMIN: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub damping: f64,
    pub max_iterations: usize,
    pub voltage_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            damping: 0.5,
            max_iterations: 100,
            voltage_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Branch {
    pub anode: usize,
    pub cathode: usize,
    pub state: MemristorState,
    pub params: DeviceParams,
}

impl Branch {
    fn conductance(&self, forward: bool) -> f64 {
        let probe = if forward { 1.0 } else { -1.0 };
        1.0 / resistance(&self.params, self.state, probe)
    }
}

#[derive(Debug, Default)]
pub(crate) struct Circuit {
    /// Known voltage per node, `None` when floating.
    pub fixed: Vec<Option<f64>>,
    /// (node, conductance, rail voltage)
    pub pulls: Vec<(usize, f64, f64)>,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone)]
pub(crate) struct NodalSolution {
    pub voltages: Vec<f64>,
    pub iterations: usize,
    /// Largest KCL imbalance over floating nodes (A).
    pub residual: f64,
}

impl Circuit {
    fn forward_pattern(&self, v: &[f64]) -> Vec<bool> {
        self.branches
            .iter()
            .map(|b| v[b.anode] - v[b.cathode] >= 0.0)
            .collect()
    }

    fn solve_linear(
        &self,
        index: &[Option<usize>],
        n: usize,
        forward: &[bool],
    ) -> Result<Vec<f64>> {
        let mut g = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..n {
            g[(i, i)] += GMIN;
        }
        for &(node, cond, rail) in &self.pulls {
            if let Some(i) = index[node] {
                g[(i, i)] += cond;
                rhs[i] += cond * rail;
            }
        }
        for (b, &fwd) in self.branches.iter().zip(forward) {
            let c = b.conductance(fwd);
            match (index[b.anode], index[b.cathode]) {
                (Some(i), Some(j)) => {
                    g[(i, i)] += c;
                    g[(j, j)] += c;
                    g[(i, j)] -= c;
                    g[(j, i)] -= c;
                }
                (Some(i), None) => {
                    g[(i, i)] += c;
                    rhs[i] += c * self.fixed[b.cathode].unwrap();
                }
                (None, Some(j)) => {
                    g[(j, j)] += c;
                    rhs[j] += c * self.fixed[b.anode].unwrap();
                }
                (None, None) => {}
            }
        }
        let x = g.lu().solve(&rhs).ok_or(Error::NonConvergence {
            iterations: 0,
            last_delta: f64::NAN,
        })?;
        let mut v: Vec<f64> = self.fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        for (node, slot) in index.iter().enumerate() {
            if let Some(i) = slot {
                v[node] = x[*i];
            }
        }
        Ok(v)
    }

    fn residual(&self, v: &[f64]) -> f64 {
        let mut net = vec![0.0; v.len()];
        for (node, f) in self.fixed.iter().enumerate() {
            if f.is_none() {
                net[node] -= GMIN * v[node];
            }
        }
        for &(node, cond, rail) in &self.pulls {
            net[node] += cond * (rail - v[node]);
        }
        for b in &self.branches {
            let drop = v[b.anode] - v[b.cathode];
            let i = drop / resistance(&b.params, b.state, drop);
            net[b.anode] -= i;
            net[b.cathode] += i;
        }
        self.fixed
            .iter()
            .zip(&net)
            .filter(|(f, _)| f.is_none())
            .map(|(_, r)| r.abs())
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, settings: &SolverSettings) -> Result<NodalSolution> {
        let mut index = vec![None; self.fixed.len()];
        let mut n = 0;
        for (node, f) in self.fixed.iter().enumerate() {
            if f.is_none() {
                index[node] = Some(n);
                n += 1;
            }
        }
        let fixed_v: Vec<f64> = self.fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        if n == 0 {
            return Ok(NodalSolution {
                voltages: fixed_v,
                iterations: 0,
                residual: 0.0,
            });
        }

        let mut forward = vec![true; self.branches.len()];
        let mut v = self.solve_linear(&index, n, &forward)?;
        let mut last_delta = f64::INFINITY;
        for iteration in 1..=settings.max_iterations {
            let pattern = self.forward_pattern(&v);
            if pattern == forward && last_delta < settings.voltage_tolerance {
                let residual = self.residual(&v);
                return Ok(NodalSolution {
                    voltages: v,
                    iterations: iteration,
                    residual,
                });
            }
            let linear = self.solve_linear(&index, n, &pattern)?;
            // Once the branch guess is self-consistent the linear solution is exact.
            if self.forward_pattern(&linear) == pattern {
                let residual = self.residual(&linear);
                return Ok(NodalSolution {
                    voltages: linear,
                    iterations: iteration,
                    residual,
                });
            }
            let d = settings.damping;
            last_delta = 0.0;
            for (vi, li) in v.iter_mut().zip(&linear) {
                let next = (1.0 - d) * *vi + d * li;
                last_delta = f64::max(last_delta, (next - *vi).abs());
                *vi = next;
            }
            forward = pattern;
        }
        Err(Error::NonConvergence {
            iterations: settings.max_iterations,
            last_delta,
        })
    }
}
