mod common;

use common::*;
use gridmodal::dynamics::{
    assemble, electrical_torque, machine_derivatives, stator_algebraic, Governor, MachineParams, MachineState, PssMB,
};
use gridmodal::system_model::parse_case_str;
use gridmodal::time_domain::{simulate_from, SimOptions};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(rng: &mut ChaCha8Rng) -> MachineParams {
    let xls = rng.random_range(0.05..0.2);
    let xd_pp = xls + rng.random_range(0.02..0.2);
    let xd_p = xd_pp + rng.random_range(0.02..0.3);
    let xq_pp = xls + rng.random_range(0.02..0.2);
    let xq_p = xq_pp + rng.random_range(0.02..0.4);
    MachineParams {
        h: rng.random_range(1.0..10.0),
        d: rng.random_range(0.0..5.0),
        xd: xd_p + rng.random_range(0.1..1.5),
        xd_p,
        xd_pp,
        xq: xq_p + rng.random_range(0.05..1.2),
        xq_p,
        xq_pp,
        xls,
        rs: rng.random_range(0.0..0.01),
        tdo_p: rng.random_range(2.0..10.0),
        tdo_pp: rng.random_range(0.01..0.1),
        tqo_p: rng.random_range(0.3..2.0),
        tqo_pp: rng.random_range(0.01..0.1),
    }
}

fn random_state(rng: &mut ChaCha8Rng, ws: f64) -> MachineState {
    MachineState {
        delta: rng.random_range(-3.0..3.0),
        omega: ws * rng.random_range(0.95..1.05),
        eq_p: rng.random_range(0.0..1.5),
        ed_p: rng.random_range(-0.8..0.8),
        psi_1d: rng.random_range(0.0..1.5),
        psi_2q: rng.random_range(-0.8..0.8),
    }
}

#[test]
fn rotor_equations_match_expanded_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ws = 100.0 * std::f64::consts::PI;
    for _ in 0..1000 {
        let p = params(&mut rng);
        let s = random_state(&mut rng, ws);
        let (id, iq) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (efd, tm) = (rng.random_range(-2.0..4.0), rng.random_range(0.0..1.2));
        let got = machine_derivatives(&p, &s, id, iq, efd, tm, ws).to_array();
        let want = machine_oracle(&p, &s, id, iq, efd, tm, ws);
        for k in 0..6 {
            assert!((got[k] - want[k]).abs() <= 1e-12 * want[k].abs().max(1.0), "{} {got:?} {want:?}", MachineState::NAMES[k]);
        }
    }
}

#[test]
fn torque_equals_air_gap_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let p = params(&mut rng);
        let s = random_state(&mut rng, 1.0);
        let (vd, vq) = (rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
        let (id, iq) = stator_algebraic(&p, &s, vd, vq).unwrap();
        let air_gap = vd * id + vq * iq + p.rs * (id * id + iq * iq);
        let te = electrical_torque(&p, &s, id, iq);
        assert!((te - air_gap).abs() < 1e-12 * air_gap.abs().max(1.0), "{te} vs {air_gap}");
    }
}

#[test]
fn equilibrium_holds_for_bundled_cases() {
    for name in ["smib", "three_machine", "krps35"] {
        let case = bundled(name);
        let sys = assemble(&case, &solved(&case)).unwrap();
        let eq = sys.equilibrium();
        let res = sys.residual_norm(&eq.x0, &eq.y0, &eq.u0);
        assert!(res < 1e-6, "{name}: {res:e}");
    }
}

#[test]
fn catalog_is_a_bijection() {
    let case = bundled("krps35");
    let sys = assemble(&case, &solved(&case)).unwrap();
    let mut expected = 0;
    for u in &case.units {
        let gov = match u.governor {
            Governor::Hydro(_) => 4,
            Governor::Gas(_) => 3,
        };
        expected += MachineState::NAMES.len() + u.exciter.state_names().len() + gov + u.pss.map_or(0, |_| PssMB::N_STATES);
    }
    assert!(case.units.iter().all(|u| u.pss.is_some()));
    assert_eq!(sys.n_states(), expected);
    assert_eq!(sys.state_labels().len(), sys.n_states());
    for (k, label) in sys.state_labels().iter().enumerate() {
        let (unit, name) = label.split_once('.').unwrap();
        assert_eq!(sys.state_position(unit, name), Some(k), "{label}");
    }
    for (k, label) in sys.algebraic_labels().iter().enumerate() {
        let (bus, part) = label.rsplit_once('.').unwrap();
        assert_eq!(sys.algebraic_position(bus, part), Some(k), "{label}");
    }
    for (k, label) in sys.input_labels().iter().enumerate() {
        let (unit, name) = label.split_once('.').unwrap();
        assert_eq!(sys.input_position(unit, name), Some(k), "{label}");
    }
    assert_eq!(sys.n_inputs(), 2 * sys.n_units());
    assert_eq!(sys.n_algebraic(), 2 * (case.n_buses() - usize::from(sys.has_infinite_bus())));
    assert!(sys.state_position("Dokan", "no_such_state").is_none());
}

/// Kinetic plus potential energy of an undamped, lossless machine against an
/// infinite bus stays constant over a swing cycle.
#[test]
fn undamped_swing_conserves_energy() {
    let text = CLASSICAL_SMIB.replace(" d=2 ", " d=0 ").replace("rs=0.003", "rs=0").replace("r=0.01 ", "r=0 ");
    let case = parse_case_str(&text).unwrap();
    let sys = assemble(&case, &solved(&case)).unwrap();
    let ws = sys.base().omega_s();
    let eq = sys.equilibrium();
    let k_delta = state(&sys, "G1", "delta");
    let k_omega = state(&sys, "G1", "omega");
    let mut x0 = eq.x0.clone();
    x0[k_omega] += 0.002 * ws;
    let opts = SimOptions { t_end: 1.0, max_step: 0.002, output_dt: 0.002, ..Default::default() };
    let ts = simulate_from(&sys, &x0, &eq.y0, &eq.u0, &[], &opts).unwrap();
    let h = case.units[0].machine.h;
    let kinetic = |x: &[f64]| {
        let dw = (x[k_omega] - ws) / ws;
        h * dw * dw
    };
    let e0 = kinetic(&ts.states[0]);
    let mut potential = 0.0;
    let mut worst = 0.0f64;
    let mut crossings = 0;
    for j in 1..ts.t.len() {
        let (a, b) = (&ts.states[j - 1], &ts.states[j]);
        let torque = -(ts.units[j - 1][0].p_accel + ts.units[j][0].p_accel) / 2.0;
        potential += torque * (b[k_delta] - a[k_delta]) / ws;
        worst = worst.max((kinetic(b) + potential - e0).abs());
        if (a[k_omega] - ws) * (b[k_omega] - ws) < 0.0 {
            crossings += 1;
        }
    }
    assert!(crossings >= 2, "less than one swing cycle simulated");
    assert!(worst < 0.01 * e0, "energy drift {:.3e} of {:.3e}", worst, e0);
}
