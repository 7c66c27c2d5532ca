use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::smooth::{inside_limits, BLEND_WIDTH};
use super::{
    electrical_torque, exciter_derivatives, machine_derivatives, pss_derivatives, stator_algebraic,
    DynamicsError, ExciterST1A, Governor, MachineParams, MachineState, PssMB,
};
use crate::power_flow::PowerFlowSolution;
use crate::system_model::{build_ybus, BusKind, PowerSystemCase, SystemBase};

/// Largest residual accepted at the computed equilibrium.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
struct UnitModel {
    name: String,
    bus: usize,
    /// Machine MVA over system MVA.
    scale: f64,
    machine: MachineParams,
    exciter: ExciterST1A,
    governor: Governor,
    pss: Option<PssMB>,
    x_machine: usize,
    x_exciter: usize,
    x_governor: usize,
    x_pss: Option<usize>,
    u_offset: usize,
}

#[derive(Debug, Clone, Copy)]
struct BusLoad {
    p0: f64,
    q0: f64,
    v0: f64,
    a: f64,
    b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub u0: Vec<f64>,
}

/// Monitored quantities of one unit, on the machine base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitOutputs {
    pub delta_deg: f64,
    pub omega_pu: f64,
    pub v_terminal: f64,
    pub p_elec: f64,
    /// Mechanical minus electrical power.
    pub p_accel: f64,
    pub efd: f64,
    pub vs_pss: f64,
}

impl UnitOutputs {
    pub const NAMES: [&'static str; 7] =
        ["delta", "omega", "v_terminal", "p_elec", "p_accel", "efd", "vs_pss"];

    pub fn values(&self) -> [f64; 7] {
        [
            self.delta_deg,
            self.omega_pu,
            self.v_terminal,
            self.p_elec,
            self.p_accel,
            self.efd,
            self.vs_pss,
        ]
    }
}

/// Assembled semi-explicit DAE `ẋ = f(x, y, u)`, `0 = g(x, y, u)`.
///
/// `x` stacks, unit by unit, the machine, exciter, governor and PSS states.
/// `y` holds the real and imaginary voltage of every bus that is not an
/// infinite bus (a slack bus without a unit). `u` holds each unit's power
/// and voltage references.
#[derive(Debug, Clone)]
pub struct DynamicSystem {
    base: SystemBase,
    units: Vec<UnitModel>,
    ybus: DMatrix<Complex64>,
    bus_names: Vec<String>,
    /// Position of the bus's real voltage in `y`, `None` for infinite buses.
    alg_pos: Vec<Option<usize>>,
    fixed_voltage: Vec<Complex64>,
    loads: Vec<Vec<BusLoad>>,
    state_labels: Vec<String>,
    algebraic_labels: Vec<String>,
    input_labels: Vec<String>,
    state_index: BTreeMap<(String, String), usize>,
    algebraic_index: BTreeMap<(String, String), usize>,
    input_index: BTreeMap<(String, String), usize>,
    equilibrium: Equilibrium,
}

/// Builds the DAE for `case` and initializes it at the power-flow point.
pub fn assemble(case: &PowerSystemCase, pf: &PowerFlowSolution) -> Result<DynamicSystem, DynamicsError> {
    let mut sys = layout(case, pf)?;
    let eq = compute_equilibrium(&sys, case, pf)?;
    sys.equilibrium = eq;
    let res = sys.residual_norm(&sys.equilibrium.x0, &sys.equilibrium.y0, &sys.equilibrium.u0);
    if !(res < EQUILIBRIUM_TOLERANCE) {
        return Err(DynamicsError::InitializationFailed { unit: sys.worst_unit(), residual: res });
    }
    Ok(sys)
}

/// Equilibrium `(x0, y0, u0)` consistent with the power-flow solution.
pub fn init_dynamics(
    case: &PowerSystemCase,
    pf: &PowerFlowSolution,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), DynamicsError> {
    let sys = assemble(case, pf)?;
    let Equilibrium { x0, y0, u0 } = sys.equilibrium;
    Ok((x0, y0, u0))
}

fn layout(case: &PowerSystemCase, pf: &PowerFlowSolution) -> Result<DynamicSystem, DynamicsError> {
    for b in &case.buses {
        if b.kind == BusKind::PV && case.unit_at(b.id).is_none() {
            return Err(DynamicsError::NoGeneratorAtPvBus(b.id));
        }
    }
    let n_bus = case.n_buses();
    let mut alg_pos = vec![None; n_bus];
    let mut fixed_voltage = vec![Complex64::new(0.0, 0.0); n_bus];
    let mut algebraic_labels = Vec::new();
    for (i, b) in case.buses.iter().enumerate() {
        let infinite = b.kind == BusKind::Slack && case.unit_at(b.id).is_none();
        if infinite {
            fixed_voltage[i] = pf.voltage(i);
        } else {
            alg_pos[i] = Some(algebraic_labels.len());
            algebraic_labels.push(format!("{}.re", b.name));
            algebraic_labels.push(format!("{}.im", b.name));
        }
    }
    let mut loads = vec![Vec::new(); n_bus];
    for l in &case.loads {
        let i = case.bus_index(l.bus).expect("validated load");
        loads[i].push(BusLoad {
            p0: l.p0 / case.base.s_base,
            q0: l.q0 / case.base.s_base,
            v0: l.v0,
            a: l.a,
            b: l.b,
        });
    }

    let mut units = Vec::new();
    let mut state_labels = Vec::new();
    let mut input_labels = Vec::new();
    for u in &case.units {
        let push = |labels: &mut Vec<String>, names: &[&str]| {
            let at = labels.len();
            labels.extend(names.iter().map(|n| format!("{}.{}", u.name, n)));
            at
        };
        let x_machine = push(&mut state_labels, &MachineState::NAMES);
        let x_exciter = push(&mut state_labels, u.exciter.state_names());
        let x_governor = push(&mut state_labels, u.governor.state_names());
        let x_pss = u.pss.map(|_| push(&mut state_labels, &PssMB::STATE_NAMES));
        let u_offset = push(&mut input_labels, &["p_ref", "v_ref"]);
        units.push(UnitModel {
            name: u.name.clone(),
            bus: case.bus_index(u.bus).expect("validated unit"),
            scale: u.mva_base / case.base.s_base,
            machine: u.machine,
            exciter: u.exciter,
            governor: u.governor,
            pss: u.pss,
            x_machine,
            x_exciter,
            x_governor,
            x_pss,
            u_offset,
        });
    }
    let index = |labels: &[String]| -> BTreeMap<(String, String), usize> {
        labels
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let (a, b) = l.rsplit_once('.').expect("labels are owner.name");
                ((a.to_string(), b.to_string()), k)
            })
            .collect()
    };
    Ok(DynamicSystem {
        base: case.base,
        ybus: build_ybus(case),
        bus_names: case.buses.iter().map(|b| b.name.clone()).collect(),
        alg_pos,
        fixed_voltage,
        loads,
        state_index: index(&state_labels),
        algebraic_index: index(&algebraic_labels),
        input_index: index(&input_labels),
        state_labels,
        algebraic_labels,
        input_labels,
        units,
        equilibrium: Equilibrium { x0: Vec::new(), y0: Vec::new(), u0: Vec::new() },
    })
}

fn compute_equilibrium(
    sys: &DynamicSystem,
    case: &PowerSystemCase,
    pf: &PowerFlowSolution,
) -> Result<Equilibrium, DynamicsError> {
    let ws = sys.base.omega_s();
    let mut x0 = vec![0.0; sys.n_states()];
    let mut u0 = vec![0.0; sys.n_inputs()];
    let mut y0 = vec![0.0; sys.n_algebraic()];
    for (i, pos) in sys.alg_pos.iter().enumerate() {
        if let Some(k) = pos {
            let v = pf.voltage(i);
            y0[*k] = v.re;
            y0[*k + 1] = v.im;
        }
    }
    for u in &sys.units {
        let p = &u.machine;
        let v = pf.voltage(u.bus);
        let s_gen = pf.generation(case, u.bus);
        let i_mach = (s_gen / v).conj() / u.scale;
        let delta = (v + Complex64::new(p.rs, p.xq) * i_mach).arg();
        let rot = Complex64::from_polar(1.0, -delta);
        let (vr, ir) = (v * rot, i_mach * rot);
        let (vq, iq, id) = (vr.re, ir.re, ir.im);

        let e_q = vq + p.rs * iq - p.xd_pp * id;
        let ed_p = (p.xq - p.xq_p) * iq;
        let psi_2q = ed_p + (p.xq_p - p.xls) * iq;
        let eq_p = e_q - (p.xd_p - p.xd_pp) * id;
        let psi_1d = eq_p + (p.xd_p - p.xls) * id;
        let efd = eq_p - (p.xd - p.xd_p) * id;
        let state = MachineState { delta, omega: ws, eq_p, ed_p, psi_1d, psi_2q };
        let tm = electrical_torque(p, &state, id, iq);
        x0[u.x_machine..u.x_machine + 6].copy_from_slice(&state.to_array());

        let e = &u.exciter;
        if !inside_limits(efd, e.efd_min, e.efd_max, BLEND_WIDTH) {
            return Err(DynamicsError::LimitBindingAtEquilibrium { unit: u.name.clone(), limit: "efd" });
        }
        let vt = v.norm();
        x0[u.x_exciter] = vt;
        if e.has_lead_lag() {
            x0[u.x_exciter + 1] = efd / e.ka;
        }
        u0[u.u_offset + 1] = vt + efd / e.ka;

        match &u.governor {
            Governor::Hydro(g) => {
                let gate = g.gate_reference(tm);
                if !inside_limits(gate, g.g_min, g.g_max, BLEND_WIDTH) {
                    return Err(DynamicsError::LimitBindingAtEquilibrium { unit: u.name.clone(), limit: "gate" });
                }
                x0[u.x_governor..u.x_governor + 4].copy_from_slice(&[gate, 0.0, gate, gate]);
                u0[u.u_offset] = tm;
            }
            Governor::Gas(g) => {
                let fuel = tm / g.k_turb;
                if !inside_limits(fuel, g.f_min, g.f_max, BLEND_WIDTH) {
                    return Err(DynamicsError::LimitBindingAtEquilibrium { unit: u.name.clone(), limit: "fuel" });
                }
                x0[u.x_governor..u.x_governor + 3].copy_from_slice(&[fuel; 3]);
                u0[u.u_offset] = fuel;
            }
        }
    }
    Ok(Equilibrium { x0, y0, u0 })
}

/// Per-unit intermediate quantities shared by the residual and the outputs.
struct UnitEval {
    current: Complex64,
    derivs: [f64; 6],
    exc: [f64; 2],
    gov: [f64; 4],
    pss: [f64; 12],
    out: UnitOutputs,
}

impl DynamicSystem {
    pub fn n_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn n_algebraic(&self) -> usize {
        self.algebraic_labels.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.input_labels.len()
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn base(&self) -> SystemBase {
        self.base
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn algebraic_labels(&self) -> &[String] {
        &self.algebraic_labels
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn unit_names(&self) -> Vec<&str> {
        self.units.iter().map(|u| u.name.as_str()).collect()
    }

    pub fn bus_names(&self) -> &[String] {
        &self.bus_names
    }

    /// `H·S` of each unit, MW·s.
    pub fn unit_inertia(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.machine.h * u.scale * self.base.s_base).collect()
    }

    /// Whether some bus voltage is held fixed.
    pub fn has_infinite_bus(&self) -> bool {
        self.alg_pos.iter().any(Option::is_none)
    }

    /// Position of state `name` of `unit` in `x`.
    pub fn state_position(&self, unit: &str, name: &str) -> Option<usize> {
        self.state_index.get(&(unit.to_string(), name.to_string())).copied()
    }

    /// Position of the `part` ("re" or "im") voltage of `bus` in `y`.
    pub fn algebraic_position(&self, bus: &str, part: &str) -> Option<usize> {
        self.algebraic_index.get(&(bus.to_string(), part.to_string())).copied()
    }

    /// Position of input `name` ("p_ref" or "v_ref") of `unit` in `u`.
    pub fn input_position(&self, unit: &str, name: &str) -> Option<usize> {
        self.input_index.get(&(unit.to_string(), name.to_string())).copied()
    }

    pub fn equilibrium(&self) -> &Equilibrium {
        &self.equilibrium
    }

    fn bus_voltage(&self, y: &[f64], i: usize) -> Complex64 {
        match self.alg_pos[i] {
            Some(k) => Complex64::new(y[k], y[k + 1]),
            None => self.fixed_voltage[i],
        }
    }

    fn eval_unit(&self, u: &UnitModel, x: &[f64], v: Complex64, inputs: &[f64]) -> UnitEval {
        let ws = self.base.omega_s();
        let s = MachineState::from_slice(&x[u.x_machine..u.x_machine + 6]);
        let vr = v * Complex64::from_polar(1.0, -s.delta);
        let (vq, vd) = (vr.re, vr.im);
        let (id, iq) = stator_algebraic(&u.machine, &s, vd, vq).expect("validated stator reactances");
        let speed_dev = (s.omega - ws) / ws;

        let mut pss = [0.0; 12];
        let vs = match (&u.pss, u.x_pss) {
            (Some(p), Some(off)) => {
                let (d, vs) = pss_derivatives(p, &x[off..off + PssMB::N_STATES], speed_dev);
                pss = d;
                vs
            }
            _ => 0.0,
        };
        let vt = v.norm();
        let (exc, efd) = exciter_derivatives(
            &u.exciter,
            &x[u.x_exciter..u.x_exciter + u.exciter.n_states()],
            vt,
            inputs[u.u_offset + 1],
            vs,
        );
        let (gov, tm) = u.governor.derivatives(
            &x[u.x_governor..u.x_governor + u.governor.n_states()],
            speed_dev,
            inputs[u.u_offset],
        );
        let derivs = machine_derivatives(&u.machine, &s, id, iq, efd, tm, ws).to_array();
        let current = Complex64::new(iq, id) * Complex64::from_polar(u.scale, s.delta);
        let p_elec = vd * id + vq * iq;
        UnitEval {
            current,
            derivs,
            exc,
            gov,
            pss,
            out: UnitOutputs {
                delta_deg: s.delta.to_degrees(),
                omega_pu: s.omega / ws,
                v_terminal: vt,
                p_elec,
                p_accel: tm - p_elec,
                efd,
                vs_pss: vs,
            },
        }
    }

    /// Evaluates `f` (length `n_states`) and `g` (length `n_algebraic`).
    pub fn residual(&self, x: &[f64], y: &[f64], u: &[f64], f: &mut [f64], g: &mut [f64]) {
        let n_bus = self.bus_names.len();
        let v: Vec<Complex64> = (0..n_bus).map(|i| self.bus_voltage(y, i)).collect();
        let mut mismatch: Vec<Complex64> = (0..n_bus)
            .map(|i| {
                if self.alg_pos[i].is_none() {
                    return Complex64::new(0.0, 0.0);
                }
                let mut acc: Complex64 = (0..n_bus)
                    .filter(|&j| self.ybus[(i, j)].norm_sqr() > 0.0)
                    .map(|j| self.ybus[(i, j)] * v[j])
                    .sum();
                let vm = v[i].norm();
                for l in &self.loads[i] {
                    let r = vm / l.v0;
                    let s = Complex64::new(l.p0 * r.powf(l.a), l.q0 * r.powf(l.b));
                    acc += (s / v[i]).conj();
                }
                acc
            })
            .collect();
        for unit in &self.units {
            let ev = self.eval_unit(unit, x, v[unit.bus], u);
            mismatch[unit.bus] -= ev.current;
            f[unit.x_machine..unit.x_machine + 6].copy_from_slice(&ev.derivs);
            let ne = unit.exciter.n_states();
            f[unit.x_exciter..unit.x_exciter + ne].copy_from_slice(&ev.exc[..ne]);
            let ng = unit.governor.n_states();
            f[unit.x_governor..unit.x_governor + ng].copy_from_slice(&ev.gov[..ng]);
            if let Some(off) = unit.x_pss {
                f[off..off + PssMB::N_STATES].copy_from_slice(&ev.pss);
            }
        }
        for (i, pos) in self.alg_pos.iter().enumerate() {
            if let Some(k) = pos {
                g[*k] = mismatch[i].re;
                g[*k + 1] = mismatch[i].im;
            }
        }
    }

    /// Infinity norm of `(f, g)`.
    pub fn residual_norm(&self, x: &[f64], y: &[f64], u: &[f64]) -> f64 {
        let mut f = vec![0.0; self.n_states()];
        let mut g = vec![0.0; self.n_algebraic()];
        self.residual(x, y, u, &mut f, &mut g);
        f.iter().chain(&g).fold(0.0, |m, v| m.max(v.abs()))
    }

    fn worst_unit(&self) -> String {
        let eq = &self.equilibrium;
        let mut f = vec![0.0; self.n_states()];
        let mut g = vec![0.0; self.n_algebraic()];
        self.residual(&eq.x0, &eq.y0, &eq.u0, &mut f, &mut g);
        let (k, fx) = f.iter().enumerate().fold((0, 0.0), |b, (k, v)| if v.abs() > b.1 { (k, v.abs()) } else { b });
        let gx = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gx > fx || f.is_empty() {
            "network".to_string()
        } else {
            self.state_labels[k].split('.').next().unwrap_or("").to_string()
        }
    }

    /// Monitored quantities per unit, in catalog order.
    pub fn unit_outputs(&self, x: &[f64], y: &[f64], u: &[f64]) -> Vec<UnitOutputs> {
        self.units
            .iter()
            .map(|unit| self.eval_unit(unit, x, self.bus_voltage(y, unit.bus), u).out)
            .collect()
    }

    /// Voltage magnitude of every bus.
    pub fn bus_voltages(&self, y: &[f64]) -> Vec<f64> {
        (0..self.bus_names.len()).map(|i| self.bus_voltage(y, i).norm()).collect()
    }

    /// Total machine energy relative to the equilibrium, used by
    /// conservative-limit checks: kinetic `H·Δω²` on the system base plus
    /// nothing else. Potential energy depends on the network and is left to
    /// the caller.
    pub fn kinetic_energy(&self, x: &[f64]) -> f64 {
        let ws = self.base.omega_s();
        self.units
            .iter()
            .map(|u| {
                let dw = (x[u.x_machine + 1] - ws) / ws;
                u.machine.h * u.scale * dw * dw
            })
            .sum()
    }
}
