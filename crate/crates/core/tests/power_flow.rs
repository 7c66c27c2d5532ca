mod common;

use common::*;
use gridmodal::cases;
use gridmodal::power_flow::{bus_injections, solve_power_flow, PfOptions};
use gridmodal::system_model::{build_ybus, parse_case_str, BusKind, PowerSystemCase};
use num_complex::Complex64;
use proptest::prelude::*;

/// Rewrites every bus id in a case text through `map`.
fn relabel(text: &str, map: impl Fn(u32) -> u32) -> String {
    text.lines()
        .map(|line| {
            line.split(' ')
                .map(|tok| {
                    for key in ["id=", "from=", "to=", "bus="] {
                        if let Some(v) = tok.strip_prefix(key) {
                            if let Ok(id) = v.parse::<u32>() {
                                return format!("{key}{}", map(id));
                            }
                        }
                    }
                    tok.to_string()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn by_name(case: &PowerSystemCase, name: &str) -> usize {
    case.buses.iter().position(|b| b.name == name).unwrap()
}

#[test]
fn newton_matches_gauss_seidel_on_small_cases() {
    for (name, case) in small_cases() {
        let pf = solved(&case);
        let (vm, va) = gauss_seidel(&case);
        for i in 0..case.n_buses() {
            let dev = (pf.voltage(i) - Complex64::from_polar(vm[i], va[i])).norm();
            assert!(dev < 1e-6, "{name} bus {i}: {dev:e}");
        }
    }
}

#[test]
fn bundled_cases_converge_tightly() {
    for b in &cases::BUNDLED {
        let case = b.load().unwrap();
        let pf = solved(&case);
        assert!(pf.max_mismatch < 1e-8, "{}: {:e}", b.name, pf.max_mismatch);
        let s = bus_injections(&build_ybus(&case), &pf.v_mag, &pf.v_ang);
        for (i, s) in s.iter().enumerate() {
            assert!((s.re - pf.p_inj[i]).abs() < 1e-8);
            assert!((s.im - pf.q_inj[i]).abs() < 1e-8);
        }
    }
}

#[test]
fn ybus_matches_independent_assembly() {
    for b in &cases::BUNDLED {
        let case = b.load().unwrap();
        let y = build_ybus(&case);
        let oracle = admittance(&case);
        for i in 0..case.n_buses() {
            for j in 0..case.n_buses() {
                assert!((y[(i, j)] - oracle[i][j]).norm() < 1e-9);
                assert!((y[(i, j)] - y[(j, i)]).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn ybus_row_sums_equal_line_charging() {
    let case = bundled("krps35");
    let y = build_ybus(&case);
    for i in 0..case.n_buses() {
        let id = case.buses[i].id;
        let charging: f64 = case
            .branches
            .iter()
            .filter(|br| br.from_bus == id || br.to_bus == id)
            .map(|br| br.b_shunt / 2.0)
            .sum();
        let row: Complex64 = (0..case.n_buses()).map(|j| y[(i, j)]).sum();
        assert!((row - Complex64::new(0.0, charging)).norm() < 1e-8, "bus {id}");
    }
}

#[test]
fn relabeling_buses_leaves_solution_unchanged() {
    let texts = [RING3, MESH4, FIVE, cases::find("three_machine").unwrap().text];
    for text in texts {
        let base = parse_case_str(text).unwrap();
        let max_id = base.buses.iter().map(|b| b.id).max().unwrap();
        let permuted = parse_case_str(&relabel(text, |id| 10 * (max_id + 1 - id) + 7)).unwrap();
        let a = solved(&base);
        let b = solved(&permuted);
        for bus in &base.buses {
            let i = by_name(&base, &bus.name);
            let j = by_name(&permuted, &bus.name);
            assert!((a.voltage(i) - b.voltage(j)).norm() < 1e-10, "{}", bus.name);
        }
    }
}

#[test]
fn convergence_is_quadratic() {
    for b in &cases::BUNDLED {
        let case = b.load().unwrap();
        let pf = solve_power_flow(&case, &PfOptions { tolerance: 1e-13, ..Default::default() }).unwrap();
        let h = &pf.mismatch_history;
        let n = h.len();
        assert!(n >= 3 && h[n - 1] > 0.0, "{}: {h:?}", b.name);
        for k in [n - 3, n - 2] {
            let ratio = h[k + 1].ln() / h[k].ln();
            assert!(h[k] < 1.0 && ratio >= 1.8, "{}: log ratio {ratio:.2} at step {k} of {h:?}", b.name);
        }
    }
}

#[test]
fn generation_covers_load_and_losses() {
    for b in &cases::BUNDLED {
        let case = b.load().unwrap();
        let pf = solved(&case);
        let mut losses = 0.0;
        for br in &case.branches {
            let i = case.bus_index(br.from_bus).unwrap();
            let j = case.bus_index(br.to_bus).unwrap();
            let ys = Complex64::new(br.r, br.x).inv();
            let i_series = (pf.voltage(i) - pf.voltage(j)) * ys;
            losses += br.r * i_series.norm_sqr();
        }
        let gen: f64 = (0..case.n_buses()).map(|i| pf.generation(&case, i).re).sum();
        let load: f64 = (0..case.n_buses()).map(|i| case.bus_load_pu(i, pf.v_mag[i]).0).sum();
        assert!((gen - load - losses).abs() < 1e-7, "{}: {gen} vs {load} + {losses}", b.name);
    }
}

#[test]
fn krps35_slack_picks_up_the_balance() {
    let case = bundled("krps35");
    let pf = solved(&case);
    let slack = case.slack_index();
    assert_eq!(case.buses[slack].kind, BusKind::Slack);
    let p = pf.generation(&case, slack).re * case.base.s_base;
    assert!(p > 0.0 && p < 400.0, "slack output {p} MW");
}

fn four_bus(x: [f64; 4], r: [f64; 4], p: [f64; 3]) -> String {
    format!(
        "BUS id=1 name=s kind=slack kv=132 vset=1.0\n\
         BUS id=2 name=a kind=pq kv=132\n\
         BUS id=3 name=b kind=pq kv=132\n\
         BUS id=4 name=c kind=pq kv=132\n\
         BRANCH from=1 to=2 r={} x={} b=0 len=5\n\
         BRANCH from=2 to=3 r={} x={} b=0 len=5\n\
         BRANCH from=3 to=4 r={} x={} b=0 len=5\n\
         BRANCH from=4 to=1 r={} x={} b=0 len=5\n\
         LOAD bus=2 p0={} q0=5 a=0 b=0\n\
         LOAD bus=3 p0={} q0=5 a=0 b=0\n\
         LOAD bus=4 p0={} q0=5 a=0 b=0\n",
        r[0], x[0], r[1], x[1], r[2], x[2], r[3], x[3], p[0], p[1], p[2]
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lossless_network_has_no_losses(
        x in prop::array::uniform4(0.05f64..0.3),
        p in prop::array::uniform3(5.0f64..40.0),
    ) {
        let case = parse_case_str(&four_bus(x, [0.0; 4], p)).unwrap();
        let pf = solved(&case);
        let net: f64 = pf.p_inj.iter().sum();
        prop_assert!(net.abs() < 1e-8);
    }

    #[test]
    fn losses_equal_series_dissipation(
        x in prop::array::uniform4(0.05f64..0.3),
        r in prop::array::uniform4(0.0f64..0.05),
        p in prop::array::uniform3(5.0f64..40.0),
    ) {
        let case = parse_case_str(&four_bus(x, r, p)).unwrap();
        let pf = solved(&case);
        let net: f64 = pf.p_inj.iter().sum();
        let mut dissipated = 0.0;
        for br in &case.branches {
            let i = case.bus_index(br.from_bus).unwrap();
            let j = case.bus_index(br.to_bus).unwrap();
            let current = (pf.voltage(i) - pf.voltage(j)) / Complex64::new(br.r, br.x);
            dissipated += br.r * current.norm_sqr();
        }
        prop_assert!(net >= -1e-10);
        prop_assert!((net - dissipated).abs() < 1e-8);
    }
}
