//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use gridmodal::cases;
use gridmodal::dynamics::{DynamicSystem, MachineParams, MachineState};
use gridmodal::power_flow::{solve_power_flow, PfOptions, PowerFlowSolution};
use gridmodal::small_signal::StateMatrix;
use gridmodal::system_model::{parse_case_str, BusKind, PowerSystemCase};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub fn bundled(name: &str) -> PowerSystemCase {
    cases::find(name).unwrap().load().unwrap()
}

pub fn solved(case: &PowerSystemCase) -> PowerFlowSolution {
    solve_power_flow(case, &PfOptions::default()).unwrap()
}

/// Three-bus ring with a PV generator and constant-power loads.
pub const RING3: &str = "\
SYSTEM s_base=100 f=50
BUS id=1 name=A kind=slack kv=132 vset=1.03
BUS id=2 name=B kind=pv kv=132 vset=1.01 pgen=60
BUS id=3 name=C kind=pq kv=132
BRANCH from=1 to=2 r=0.01 x=0.08 b=0.02 len=10
BRANCH from=2 to=3 r=0.015 x=0.10 b=0.02 len=12
BRANCH from=1 to=3 r=0.02 x=0.12 b=0.03 len=15
LOAD bus=3 p0=110 q0=35 a=0 b=0
LOAD bus=2 p0=20 q0=5 a=0 b=0
";

/// Four buses, mixed load exponents and one long line.
pub const MESH4: &str = "\
SYSTEM s_base=100 f=50
BUS id=1 name=A kind=slack kv=132 vset=1.02
BUS id=2 name=B kind=pq kv=132
BUS id=3 name=C kind=pv kv=132 vset=1.0 pgen=40
BUS id=4 name=D kind=pq kv=132
BRANCH from=1 to=2 r=0.01 x=0.09 b=0.04 len=40
BRANCH from=2 to=3 r=0.012 x=0.07 b=0.02 len=18
BRANCH from=3 to=4 r=0.02 x=0.11 b=0.02 len=20
BRANCH from=4 to=1 r=0.015 x=0.10 b=0.03 len=22
LOAD bus=2 p0=60 q0=20 a=1 b=2
LOAD bus=4 p0=70 q0=25 a=2 b=2
";

/// Five buses, radial spur plus a loop, constant-power loads.
pub const FIVE: &str = "\
SYSTEM s_base=100 f=60
BUS id=1 name=A kind=slack kv=132 vset=1.04
BUS id=2 name=B kind=pq kv=132
BUS id=3 name=C kind=pq kv=132
BUS id=4 name=D kind=pv kv=132 vset=1.02 pgen=50
BUS id=5 name=E kind=pq kv=132
BRANCH from=1 to=2 r=0.02 x=0.06 b=0.03 len=10
BRANCH from=1 to=3 r=0.08 x=0.24 b=0.025 len=15
BRANCH from=2 to=3 r=0.06 x=0.18 b=0.02 len=12
BRANCH from=2 to=4 r=0.06 x=0.18 b=0.02 len=12
BRANCH from=3 to=5 r=0.01 x=0.03 b=0.01 len=5
BRANCH from=4 to=5 r=0.08 x=0.24 b=0.025 len=16
LOAD bus=2 p0=20 q0=10 a=0 b=0
LOAD bus=3 p0=45 q0=15 a=0 b=0
LOAD bus=5 p0=60 q0=10 a=0 b=0
";

/// Every case with at most five buses: the bundled ones plus the fixtures.
pub fn small_cases() -> Vec<(&'static str, PowerSystemCase)> {
    let mut v: Vec<(&'static str, PowerSystemCase)> = cases::BUNDLED
        .iter()
        .map(|b| (b.name, b.load().unwrap()))
        .filter(|(_, c)| c.n_buses() <= 5)
        .collect();
    for (name, text) in [("ring3", RING3), ("mesh4", MESH4), ("five", FIVE)] {
        v.push((name, parse_case_str(text).unwrap()));
    }
    v
}

/// Admittance matrix assembled branch by branch, independent of the library.
pub fn admittance(case: &PowerSystemCase) -> Vec<Vec<Complex64>> {
    let n = case.buses.len();
    let pos = |id: u32| case.buses.iter().position(|b| b.id == id).unwrap();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for br in &case.branches {
        let (i, j) = (pos(br.from_bus), pos(br.to_bus));
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let half = Complex64::new(0.0, br.b_shunt / 2.0);
        y[i][i] += ys + half;
        y[j][j] += ys + half;
        y[i][j] -= ys;
        y[j][i] -= ys;
    }
    y
}

/// Load drawn at bus `id` for voltage `v`, per unit.
fn load_at(case: &PowerSystemCase, id: u32, v: f64) -> Complex64 {
    case.loads
        .iter()
        .filter(|l| l.bus == id)
        .map(|l| {
            let r = v / l.v0;
            Complex64::new(l.p0 * r.powf(l.a), l.q0 * r.powf(l.b)) / case.base.s_base
        })
        .sum()
}

/// Classical Gauss–Seidel fixed point. Returns `(|V|, angle)` per bus.
pub fn gauss_seidel(case: &PowerSystemCase) -> (Vec<f64>, Vec<f64>) {
    let y = admittance(case);
    let n = case.buses.len();
    let mut v: Vec<Complex64> = case
        .buses
        .iter()
        .map(|b| match b.kind {
            BusKind::PQ => Complex64::new(1.0, 0.0),
            BusKind::Slack => Complex64::from_polar(b.v_set, b.angle_set),
            BusKind::PV => Complex64::new(b.v_set, 0.0),
        })
        .collect();
    let p_gen: Vec<f64> = case
        .buses
        .iter()
        .map(|b| {
            let unit = case.units.iter().find(|u| u.bus == b.id).and_then(|u| u.p_set).unwrap_or(0.0);
            (unit + b.p_gen) / case.base.s_base
        })
        .collect();
    for _ in 0..200_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let bus = &case.buses[i];
            if bus.kind == BusKind::Slack {
                continue;
            }
            let sum: Complex64 = (0..n).filter(|&j| j != i).map(|j| y[i][j] * v[j]).sum();
            let s = match bus.kind {
                BusKind::PV => {
                    let q = (v[i] * (y[i][i] * v[i] + sum).conj()).im;
                    Complex64::new(p_gen[i] - load_at(case, bus.id, v[i].norm()).re, q)
                }
                _ => Complex64::new(p_gen[i], 0.0) - load_at(case, bus.id, v[i].norm()),
            };
            let mut next = ((s / v[i]).conj() - sum) / y[i][i];
            if bus.kind == BusKind::PV {
                next *= bus.v_set / next.norm();
            }
            change = change.max((next - v[i]).norm());
            v[i] = next;
        }
        if change < 1e-14 {
            break;
        }
    }
    (v.iter().map(|c| c.norm()).collect(), v.iter().map(|c| c.arg()).collect())
}

/// Rotor derivatives written out term by term with explicit reactance
/// ratios, independent of the flux-coefficient factoring in the library.
pub fn machine_oracle(
    p: &MachineParams,
    s: &MachineState,
    id: f64,
    iq: f64,
    efd: f64,
    tm: f64,
    ws: f64,
) -> [f64; 6] {
    let (xd, xdp, xdpp, xq, xqp, xqpp, xls) = (p.xd, p.xd_p, p.xd_pp, p.xq, p.xq_p, p.xq_pp, p.xls);
    let d_delta = s.omega - ws;
    let bracket = tm - p.d * (s.omega - ws) / ws
        - (xdpp - xls) / (xdp - xls) * s.eq_p * iq
        - (xdp - xdpp) / (xdp - xls) * s.psi_1d * iq
        + (xqpp - xls) / (xqp - xls) * s.ed_p * id
        + (xqp - xqpp) / (xqp - xls) * s.psi_2q * id
        + (xqpp - xdpp) * iq * id;
    let d_omega = ws / (2.0 * p.h) * bracket;
    let d_eq = (-s.eq_p
        - (xd - xdp) * (-id - (xdp - xdpp) / ((xdp - xls) * (xdp - xls)) * (s.psi_1d - (xdp - xls) * id - s.eq_p))
        + efd)
        / p.tdo_p;
    let d_ed = (-s.ed_p
        - (xq - xqp) * (-iq - (xqp - xqpp) / ((xqp - xls) * (xqp - xls)) * (s.psi_2q - (xqp - xls) * iq - s.ed_p)))
        / p.tqo_p;
    let d_psi1 = (-s.psi_1d + s.eq_p + (xdp - xls) * id) / p.tdo_pp;
    let d_psi2 = (-s.psi_2q + s.ed_p + (xqp - xls) * iq) / p.tqo_pp;
    [d_delta, d_omega, d_eq, d_ed, d_psi1, d_psi2]
}

/// One machine with frozen fluxes and controls behind a line to an
/// infinite bus, for the two-state swing-equation limit.
pub const CLASSICAL_SMIB: &str = "\
SYSTEM s_base=100 f=50
BUS id=1 name=Plant kind=pv kv=132 vset=1.02
BUS id=2 name=Grid kind=slack kv=132 vset=1.0
BRANCH from=1 to=2 r=0.01 x=0.3 b=0.02 len=10
UNIT bus=1 name=G1 mva=100 pset=80 \\
  machine{h=3.5 d=2 xd=1.1 xd_p=0.35 xd_pp=0.25 xq=0.8 xq_p=0.5 xq_pp=0.25 xls=0.15 rs=0.003 \\
          tdo_p=1e4 tdo_pp=2e3 tqo_p=5e3 tqo_pp=1e3} \\
  exciter{tr=3e3 ka=50} \\
  governor{gas r_droop=1e6 t_valve=7e3 t_comb=9e3 t_turb=1.1e4}
";

/// Closed-form swing-model eigenvalue `−D/(4H) + j·√(ω_s·K_s/(2H))` for
/// [`CLASSICAL_SMIB`], with `K_s` obtained by rotating the constant EMF
/// behind the sub-transient reactance and re-solving the two-bus circuit.
pub fn classical_swing_eigenvalue(case: &PowerSystemCase, pf: &PowerFlowSolution) -> Complex64 {
    let unit = &case.units[0];
    let m = unit.machine;
    let ws = case.base.omega_s();
    let v1 = pf.voltage(0);
    let v2 = pf.voltage(1);
    let s_gen = pf.generation(case, 0);
    let i0 = (s_gen / v1).conj();
    let zg = Complex64::new(m.rs, m.xd_pp);
    let e0 = v1 + zg * i0;
    let br = &case.branches[0];
    let zl = Complex64::new(br.r, br.x);
    let half = Complex64::new(0.0, br.b_shunt / 2.0);
    let torque = |rot: f64| {
        let e = e0 * Complex64::from_polar(1.0, rot);
        let v = (e / zg + v2 / zl) / (1.0 / zg + 1.0 / zl + half);
        let i = (e - v) / zg;
        (e * i.conj()).re * case.base.s_base / unit.mva_base
    };
    let h = 1e-6;
    let ks = (torque(h) - torque(-h)) / (2.0 * h);
    Complex64::new(-m.d / (4.0 * m.h), (ws * ks / (2.0 * m.h)).sqrt())
}

/// `Δx(t) = ∫₀ᵗ e^{A s} ds · B·Δu`, via the exponential of the augmented
/// matrix `[[A, BΔu], [0, 0]]`, which stays valid when `A` is singular.
pub fn linear_step_response(sm: &StateMatrix, du: &DVector<f64>, t: f64) -> DVector<f64> {
    let n = sm.a.nrows();
    let bu = &sm.b * du;
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(&sm.a * t));
    m.view_mut((0, n), (n, 1)).copy_from(&(bu * t));
    let e = m.exp();
    e.view((0, n), (n, 1)).into_owned().column(0).into_owned()
}

/// Largest distance from an eigenvalue of `a` to the closest unused one of
/// `b`, matching greedily from the left.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// Machine-state position helper.
pub fn state(sys: &DynamicSystem, unit: &str, name: &str) -> usize {
    sys.state_position(unit, name).unwrap_or_else(|| panic!("no state {unit}.{name}"))
}
