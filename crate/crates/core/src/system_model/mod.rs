//! Network description: buses, branches, static loads and generating units.
//!
//! A [`PowerSystemCase`] is built once by the parser and never mutated
//! afterwards. All impedances it holds are per-unit on the system base;
//! generator and controller parameters stay on the unit's own MVA base and
//! are rescaled when the dynamic model is assembled.

mod line;
mod load;
mod parser;
mod ybus;

pub use line::{
    exact_pi_from_totals, exact_pi_two_port, long_line_to_pi, ohms_to_pu, pu_to_ohms, LineTwoPort, PhysicalBranch,
};
pub use load::load_power;
pub use parser::{parse_case, parse_case_str};
pub use ybus::build_ybus;

use crate::dynamics::{ExciterST1A, Governor, MachineParams, PssMB};
use thiserror::Error;

/// Lines strictly longer than this are modeled with distributed parameters.
pub const LONG_LINE_THRESHOLD_KM: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("line {line}: {reason}")]
    MalformedCase { line: usize, reason: String },
    #[error("duplicate bus id {0}")]
    DuplicateId(u32),
    #[error("case has no slack bus")]
    NoSlackBus,
    #[error("case has more than one slack bus ({0} and {1})")]
    MultipleSlackBuses(u32, u32),
    #[error("unit {unit} is connected to PQ bus {bus}")]
    UnitOnPqBus { unit: String, bus: u32 },
    #[error("load at bus {bus}: exponent {name} = {value} outside accepted range [0, 2]")]
    ExponentOutOfRange { bus: u32, name: &'static str, value: f64 },
    #[error("voltage magnitude must be positive, got {0}")]
    NonPositiveVoltage(f64),
    #[error("line has zero series impedance and zero shunt admittance")]
    DegenerateLine,
    #[error("cannot read case file {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BusKind {
    Slack,
    PV,
    PQ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: u32,
    pub name: String,
    pub kind: BusKind,
    pub base_kv: f64,
    /// Voltage magnitude setpoint; meaningful for PV and slack buses.
    pub v_set: f64,
    /// Angle setpoint in radians; meaningful for the slack bus.
    pub angle_set: f64,
    /// Scheduled MW from non-modeled generation at a PV bus (0 otherwise).
    pub p_gen: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineModel {
    NominalPi,
    DistributedExactPi,
}

impl LineModel {
    /// Model mandated for a line of the given length.
    pub fn for_length(length_km: f64) -> Self {
        if length_km > LONG_LINE_THRESHOLD_KM {
            LineModel::DistributedExactPi
        } else {
            LineModel::NominalPi
        }
    }
}

/// A PI branch. `r`, `x` and `b_shunt` are the lumped values actually used
/// in the admittance matrix: for distributed lines they already carry the
/// hyperbolic correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: u32,
    pub to_bus: u32,
    pub r: f64,
    pub x: f64,
    pub b_shunt: f64,
    pub length_km: f64,
    pub model: LineModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadModel {
    pub bus: u32,
    /// MW at the reference voltage.
    pub p0: f64,
    /// MVAr at the reference voltage.
    pub q0: f64,
    pub v0: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingUnit {
    pub bus: u32,
    pub name: String,
    pub mva_base: f64,
    /// Scheduled MW output; `None` for the unit on the slack bus.
    pub p_set: Option<f64>,
    pub machine: MachineParams,
    pub exciter: ExciterST1A,
    pub governor: Governor,
    pub pss: Option<PssMB>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemBase {
    /// System MVA base.
    pub s_base: f64,
    pub f_nominal: f64,
}

impl SystemBase {
    pub fn omega_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_nominal
    }
}

impl Default for SystemBase {
    fn default() -> Self {
        SystemBase { s_base: 100.0, f_nominal: 50.0 }
    }
}

/// Validated, immutable network description.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSystemCase {
    pub base: SystemBase,
    /// Sorted by id; a bus's position is its internal index.
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub loads: Vec<LoadModel>,
    pub units: Vec<GeneratingUnit>,
}

impl PowerSystemCase {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.binary_search_by_key(&id, |b| b.id).ok()
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    pub fn unit_at(&self, bus_id: u32) -> Option<&GeneratingUnit> {
        self.units.iter().find(|u| u.bus == bus_id)
    }

    pub fn unit_by_name(&self, name: &str) -> Option<(usize, &GeneratingUnit)> {
        self.units.iter().enumerate().find(|(_, u)| u.name == name)
    }

    /// Sum of the loads' reference active powers, MW.
    pub fn total_load_mw(&self) -> f64 {
        self.loads.iter().fold(0.0, |acc, l| acc + l.p0)
    }

    /// Per-unit (P, Q) drawn by all loads at bus index `i` for voltage `v`.
    pub fn bus_load_pu(&self, i: usize, v: f64) -> (f64, f64) {
        let id = self.buses[i].id;
        let mut p = 0.0;
        let mut q = 0.0;
        for l in self.loads.iter().filter(|l| l.bus == id) {
            p += l.p0 / self.base.s_base * (v / l.v0).powf(l.a);
            q += l.q0 / self.base.s_base * (v / l.v0).powf(l.b);
        }
        (p, q)
    }

    /// Partial derivatives of [`Self::bus_load_pu`] with respect to `v`.
    pub fn bus_load_dv_pu(&self, i: usize, v: f64) -> (f64, f64) {
        let id = self.buses[i].id;
        let mut dp = 0.0;
        let mut dq = 0.0;
        for l in self.loads.iter().filter(|l| l.bus == id) {
            let s = self.base.s_base;
            if l.a != 0.0 {
                dp += l.a * l.p0 / s * (v / l.v0).powf(l.a - 1.0) / l.v0;
            }
            if l.b != 0.0 {
                dq += l.b * l.q0 / s * (v / l.v0).powf(l.b - 1.0) / l.v0;
            }
        }
        (dp, dq)
    }

    /// Returns a copy with every PSS removed.
    pub fn without_pss(&self) -> Self {
        let mut c = self.clone();
        for u in &mut c.units {
            u.pss = None;
        }
        c
    }

    /// Checks the structural invariants the parser guarantees. Exposed so
    /// programmatically built cases go through the same gate.
    pub fn validate(&self) -> Result<(), CaseError> {
        let bad = |reason: String| CaseError::MalformedCase { line: 0, reason };
        for w in self.buses.windows(2) {
            if w[0].id == w[1].id {
                return Err(CaseError::DuplicateId(w[0].id));
            }
            if w[0].id > w[1].id {
                return Err(bad("buses must be sorted by id".into()));
            }
        }
        let mut slack: Option<u32> = None;
        for b in &self.buses {
            if b.base_kv <= 0.0 {
                return Err(bad(format!("bus {}: kv must be positive", b.id)));
            }
            if b.kind != BusKind::PQ && b.v_set <= 0.0 {
                return Err(bad(format!("bus {}: vset must be positive", b.id)));
            }
            if b.kind == BusKind::Slack {
                if let Some(first) = slack {
                    return Err(CaseError::MultipleSlackBuses(first, b.id));
                }
                slack = Some(b.id);
            }
        }
        if slack.is_none() {
            return Err(CaseError::NoSlackBus);
        }
        let known = |id: u32| self.bus_index(id).is_some();
        for br in &self.branches {
            if !known(br.from_bus) || !known(br.to_bus) {
                return Err(bad(format!("branch {}-{}: unknown bus", br.from_bus, br.to_bus)));
            }
            if br.from_bus == br.to_bus {
                return Err(bad(format!("branch {}-{}: self loop", br.from_bus, br.to_bus)));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(bad(format!("branch {}-{}: zero impedance", br.from_bus, br.to_bus)));
            }
            if br.length_km < 0.0 {
                return Err(bad(format!("branch {}-{}: negative length", br.from_bus, br.to_bus)));
            }
            if br.model != LineModel::for_length(br.length_km) {
                return Err(bad(format!(
                    "branch {}-{}: {:?} not allowed for {} km",
                    br.from_bus, br.to_bus, br.model, br.length_km
                )));
            }
        }
        for l in &self.loads {
            if !known(l.bus) {
                return Err(bad(format!("load at unknown bus {}", l.bus)));
            }
            if l.v0 <= 0.0 {
                return Err(CaseError::NonPositiveVoltage(l.v0));
            }
            for (name, value) in [("a", l.a), ("b", l.b)] {
                if !(0.0..=2.0).contains(&value) {
                    return Err(CaseError::ExponentOutOfRange { bus: l.bus, name, value });
                }
            }
        }
        let mut seen = Vec::new();
        for u in &self.units {
            let Some(bi) = self.bus_index(u.bus) else {
                return Err(bad(format!("unit {} at unknown bus {}", u.name, u.bus)));
            };
            if seen.contains(&u.bus) {
                return Err(bad(format!("more than one unit at bus {}", u.bus)));
            }
            seen.push(u.bus);
            if self.units.iter().filter(|o| o.name == u.name).count() > 1 {
                return Err(bad(format!("duplicate unit name {}", u.name)));
            }
            if u.mva_base <= 0.0 {
                return Err(bad(format!("unit {}: mva must be positive", u.name)));
            }
            match self.buses[bi].kind {
                BusKind::PQ => {
                    return Err(CaseError::UnitOnPqBus { unit: u.name.clone(), bus: u.bus })
                }
                BusKind::Slack if u.p_set.is_some() => {
                    return Err(bad(format!("unit {} on the slack bus cannot have pset", u.name)))
                }
                BusKind::PV if u.p_set.is_none() => {
                    return Err(bad(format!("unit {} on a PV bus needs pset", u.name)))
                }
                _ => {}
            }
            let check = |r: Result<(), String>| r.map_err(|e| bad(format!("unit {}: {e}", u.name)));
            check(u.machine.validate())?;
            check(u.exciter.validate())?;
            check(u.governor.validate())?;
            if let Some(p) = &u.pss {
                check(p.validate())?;
            }
        }
        Ok(())
    }
}
