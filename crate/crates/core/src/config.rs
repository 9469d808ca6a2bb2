//! Simulator configuration, loaded from TOML layered over the bundled defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::keccak::Variant;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

const LEVEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Logical,
    #[serde(rename = "logical+analog")]
    LogicalAnalog,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logical" => Ok(Backend::Logical),
            "logical+analog" | "analog" => Ok(Backend::LogicalAnalog),
            other => Err(Error::Parse(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateInit {
    DirectSet,
    ClearThenSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Voltages {
    pub v_plus: f64,
    pub v_minus: f64,
    pub v_set: f64,
    pub v_clear: f64,
}

impl Voltages {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (
                self.v_minus - self.v_plus - self.v_clear,
                "v_minus - v_plus must equal v_clear",
            ),
            (
                self.v_set - 2.0 * self.v_plus,
                "v_set must equal 2 * v_plus",
            ),
            (
                self.v_clear - 2.0 * self.v_minus,
                "v_clear must equal 2 * v_minus",
            ),
        ];
        for (residual, msg) in checks {
            if residual.abs() > LEVEL_TOL {
                return Err(Error::InvalidConfig(format!(
                    "drive levels violate the level relations: {msg} (v+={}, v-={}, V_SET={}, V_CLEAR={})",
                    self.v_plus, self.v_minus, self.v_set, self.v_clear
                )));
            }
        }
        if self.v_plus <= 0.0 {
            return Err(Error::InvalidConfig("v_plus must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_g: Option<f64>,
    pub r_read: f64,
    pub gate_init: GateInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    State,
    Rho,
    Chi,
    Iota,
}

impl ArrayKind {
    pub fn name(self) -> &'static str {
        match self {
            ArrayKind::State => "state",
            ArrayKind::Rho => "rho",
            ArrayKind::Chi => "chi",
            ArrayKind::Iota => "iota",
        }
    }
}

/// Permitted drive levels per array, in multiples of `v_plus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSets {
    pub state: Vec<u32>,
    pub rho: Vec<u32>,
    pub chi: Vec<u32>,
    pub iota: Vec<u32>,
}

impl LevelSets {
    pub fn multiples(&self, array: ArrayKind) -> &[u32] {
        match array {
            ArrayKind::State => &self.state,
            ArrayKind::Rho => &self.rho,
            ArrayKind::Chi => &self.chi,
            ArrayKind::Iota => &self.iota,
        }
    }

    pub fn permitted(&self, array: ArrayKind, v_plus: f64) -> Vec<f64> {
        self.multiples(array)
            .iter()
            .map(|&m| m as f64 * v_plus)
            .collect()
    }

    pub fn check(&self, array: ArrayKind, v_plus: f64, level: f64) -> Result<()> {
        if self
            .permitted(array, v_plus)
            .iter()
            .any(|p| (p - level).abs() < LEVEL_TOL)
        {
            Ok(())
        } else {
            Err(Error::LevelNotPermitted {
                array: array.name(),
                level,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlBits {
    pub state: u32,
    pub rho: u32,
    pub chi: u32,
    pub iota: u32,
    pub other: u32,
}

impl ControlBits {
    pub fn per_cycle(&self) -> u32 {
        self.state + self.rho + self.chi + self.iota + self.other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaConfig {
    pub gate_and_routing_bits: u64,
    pub bytes_per_kb: f64,
    pub cmos_kge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReference {
    pub initialization: f64,
    pub mapping: f64,
    pub theta: f64,
    pub rho: f64,
    pub pi: f64,
    pub chi: f64,
    pub iota: f64,
    pub total: f64,
    pub initialization_share_of_computation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub frequency_mhz: f64,
    #[serde(default)]
    pub instruction_kb: Option<f64>,
    #[serde(default)]
    pub computing_kb: Option<f64>,
    #[serde(default)]
    pub cmos_kge: Option<f64>,
    pub latency_cycles: f64,
    pub throughput_gbps: f64,
    #[serde(default)]
    pub energy_uj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub variant: Variant,
    pub backend: Backend,
    pub frequency_hz: f64,
    pub clock_period_s: f64,
    pub device: DeviceParams,
    pub literal_device: DeviceParams,
    pub voltages: Voltages,
    pub circuit: CircuitConfig,
    pub levels: LevelSets,
    pub control_bits: ControlBits,
    pub area: AreaConfig,
    pub energy_reference: EnergyReference,
    #[serde(default)]
    pub comparison: Vec<ComparisonRow>,
}

impl Default for SimConfig {
    fn default() -> Self {
        toml::from_str(DEFAULT_CONFIG).expect("bundled default config parses")
    }
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl SimConfig {
    /// Parses `text` as overrides on top of the defaults. Does not validate.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut base: toml::Value =
            toml::from_str(DEFAULT_CONFIG).expect("bundled default config parses");
        let overlay: toml::Value = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        merge(&mut base, overlay);
        base.try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// Swaps in the literal device parameter set.
    pub fn with_literal_device(mut self) -> Self {
        self.device = self.literal_device;
        self
    }

    pub fn r_g(&self) -> f64 {
        self.circuit
            .r_g
            .unwrap_or_else(|| self.device.geometric_mean())
    }

    fn check_reference(&self, name: &str, r: f64) -> Result<()> {
        let (lo, hi) = (10.0 * self.device.r_on, self.device.r_off / 10.0);
        if (lo..=hi).contains(&r) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{name} = {r:.4e} ohm must satisfy 10*r_on <= {name} <= r_off/10 ([{lo:.3e}, {hi:.3e}])"
            )))
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.voltages.validate()?;
        self.check_reference("r_g", self.r_g())?;
        self.check_reference("r_read", self.circuit.r_read)?;
        if !(self.frequency_hz > 0.0 && self.clock_period_s > 0.0) {
            return Err(Error::InvalidConfig(
                "frequency and clock period must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn electrical(&self) -> Electrical {
        Electrical {
            params: self.device,
            v_plus: self.voltages.v_plus,
            v_set: self.voltages.v_set,
            v_clear: self.voltages.v_clear,
            r_g: self.r_g(),
            r_read: self.circuit.r_read,
            dt: self.clock_period_s,
            gate_init: self.circuit.gate_init,
        }
    }
}

/// Electrical operating point shared by every analog realisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Electrical {
    pub params: DeviceParams,
    pub v_plus: f64,
    pub v_set: f64,
    pub v_clear: f64,
    pub r_g: f64,
    pub r_read: f64,
    pub dt: f64,
    pub gate_init: GateInit,
}

impl Default for Electrical {
    fn default() -> Self {
        SimConfig::default().electrical()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.control_bits.per_cycle(), 178);
        assert!((c.r_g() - 15.811e6).abs() < 1e3);
        assert_eq!(c.comparison.len(), 8);
    }

    #[test]
    fn overlay_changes_only_given_keys() {
        let c =
            SimConfig::from_toml_str("variant = \"sha3-512\"\n[device]\nr_on = 1.0e5\n").unwrap();
        assert_eq!(c.variant, Variant::Sha3_512);
        assert_eq!(c.device.r_on, 1e5);
        assert_eq!(c.device.r_off, 5e8);
    }

    #[test]
    fn level_relations_enforced() {
        let c = SimConfig::from_toml_str("[voltages]\nv_set = 1.3\n").unwrap();
        let err = c.validate().unwrap_err();
        assert!(
            err.to_string().contains("v_set must equal 2 * v_plus"),
            "{err}"
        );
    }

    #[test]
    fn reference_resistor_must_sit_between_states() {
        let c = SimConfig::from_toml_str("[circuit]\nr_g = 5.0e5\n").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn literal_preset_is_loadable() {
        let c = SimConfig::default().with_literal_device();
        c.validate().unwrap();
        assert_eq!(c.device.v_closed, 0.2);
        // 1 ns full SET at 1.2 V
        assert!((c.device.full_switch_time(1.2).unwrap() - 1e-9).abs() < 1e-18);
    }

    #[test]
    fn permitted_levels() {
        let c = SimConfig::default();
        let v = c.voltages.v_plus;
        c.levels.check(ArrayKind::State, v, 1.2).unwrap();
        assert!(c.levels.check(ArrayKind::Chi, v, 1.2).is_err());
        c.levels.check(ArrayKind::Iota, v, 0.6).unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        let c = SimConfig::default();
        assert_eq!(SimConfig::from_toml_str(&c.to_toml()).unwrap(), c);
    }
}
