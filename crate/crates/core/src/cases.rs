//! Bundled cases and the generator for the 35-bus surrogate grid.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::system_model::{parse_case_str, CaseError, LineModel, PowerSystemCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundledCase {
    pub name: &'static str,
    pub description: &'static str,
    pub provenance: &'static str,
    pub text: &'static str,
}

impl BundledCase {
    pub fn load(&self) -> Result<PowerSystemCase, CaseError> {
        parse_case_str(self.text)
    }
}

pub const BUNDLED: [BundledCase; 3] = [
    BundledCase {
        name: "smib",
        description: "one hydro unit on a 20 km line to an infinite bus",
        provenance: "synthetic; parameters are typical textbook values",
        text: include_str!("../cases/smib.case"),
    },
    BundledCase {
        name: "three_machine",
        description: "nine-bus, three-machine network in the WSCC layout",
        provenance: "network impedances follow the widely published WSCC 9-bus data; dynamic data synthetic",
        text: include_str!("../cases/three_machine.case"),
    },
    BundledCase {
        name: "krps35",
        description: "35-bus, 53-branch 132 kV surrogate with six stations and 2202 MW of load",
        provenance: "synthetic surrogate written by generate_krps35(); bus, branch and unit counts, unit ratings and total load match the planned Kurdistan regional grid",
        text: include_str!("../cases/krps35.case"),
    },
];

pub fn find(name: &str) -> Option<&'static BundledCase> {
    BUNDLED.iter().find(|c| c.name == name)
}

/// Summary counts shown by `gridmodal cases`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStats {
    pub buses: usize,
    pub branches: usize,
    pub units: usize,
    pub unit_mva: Vec<f64>,
    pub total_load_mw: f64,
    pub exact_pi_branches: usize,
}

pub fn case_stats(case: &PowerSystemCase) -> CaseStats {
    CaseStats {
        buses: case.n_buses(),
        branches: case.branches.len(),
        units: case.units.len(),
        unit_mva: case.units.iter().map(|u| u.mva_base).collect(),
        total_load_mw: case.total_load_mw(),
        exact_pi_branches: case.branches.iter().filter(|b| b.model == LineModel::DistributedExactPi).count(),
    }
}

/// Largest number of branches on a shortest path between two buses, `None`
/// if the network is disconnected.
pub fn hop_diameter(case: &PowerSystemCase) -> Option<usize> {
    let n = case.n_buses();
    let mut adj = vec![Vec::new(); n];
    for b in &case.branches {
        let (i, j) = (case.bus_index(b.from_bus)?, case.bus_index(b.to_bus)?);
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut diameter = 0;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        diameter = diameter.max(*dist.iter().max()?);
        if diameter == usize::MAX {
            return None;
        }
    }
    Some(diameter)
}

const KRPS35_SEED: u64 = 0x4b52_5053_3335;

/// Overhead-line constants at 132 kV: Ω/km, Ω/km, µS/km.
const LINE_R: f64 = 0.06;
const LINE_X: f64 = 0.32;
const LINE_B: f64 = 3.6;

struct Station {
    name: &'static str,
    mva: f64,
    /// MW; `None` for the slack station.
    dispatch: Option<f64>,
    vset: f64,
    hydro: bool,
    /// Hub or load-bus ids the station feeds, with a flag for long lines.
    ties: &'static [(u32, bool)],
}

const STATIONS: [Station; 6] = [
    Station { name: "Dokan", mva: 400.0, dispatch: None, vset: 1.04, hydro: true, ties: &[(7, true), (8, true)] },
    Station { name: "Darbandikhan", mva: 249.0, dispatch: Some(235.0), vset: 1.03, hydro: true, ties: &[(8, true), (9, true)] },
    Station { name: "Perdawood", mva: 500.0, dispatch: Some(480.0), vset: 1.03, hydro: false, ties: &[(7, false), (11, false), (15, false)] },
    Station { name: "Chamchamal", mva: 750.0, dispatch: Some(720.0), vset: 1.03, hydro: false, ties: &[(9, false), (8, false), (13, false)] },
    Station { name: "Duhok", mva: 200.0, dispatch: Some(190.0), vset: 1.03, hydro: false, ties: &[(10, true), (7, true)] },
    Station { name: "TaqTaq", mva: 200.0, dispatch: Some(190.0), vset: 1.03, hydro: false, ties: &[(7, true), (9, true)] },
];

/// Load buses (ids 7..=35): name and MW. Ids 7–10 are the hub substations.
const LOADS: [(&str, f64); 29] = [
    ("Erbil", 265.0),
    ("Sulaymaniyah", 245.0),
    ("Kirkuk", 205.0),
    ("DuhokCity", 185.0),
    ("Ankawa", 75.0),
    ("Shaqlawa", 48.0),
    ("Bazian", 62.0),
    ("Koya", 55.0),
    ("Makhmur", 44.0),
    ("Khabat", 58.0),
    ("Soran", 52.0),
    ("Halabja", 60.0),
    ("Penjwen", 36.0),
    ("Ranya", 54.0),
    ("Qaladiza", 40.0),
    ("Kalar", 70.0),
    ("Kifri", 38.0),
    ("Tuz", 46.0),
    ("Dibis", 42.0),
    ("Zakho", 72.0),
    ("Amedi", 34.0),
    ("Akre", 46.0),
    ("Simele", 58.0),
    ("Faida", 40.0),
    ("Bardarash", 44.0),
    ("Mergasor", 30.0),
    ("Chamchamal", 66.0),
    ("Darbandikhan", 36.0),
    ("Sidakan", 96.0),
];

/// Hub (7–10) that each non-hub load bus (11–35) hangs from.
fn hub_of(bus: u32) -> u32 {
    7 + (bus - 11) % 4
}

fn machine_block(hydro: bool) -> &'static str {
    if hydro {
        "machine{h=3.5 d=0 xd=1.0 xd_p=0.32 xd_pp=0.29 xq=0.65 xq_p=0.45 xq_pp=0.40 xls=0.15 rs=0.003 \\\n  tdo_p=6.0 tdo_pp=0.02 tqo_p=0.5 tqo_pp=0.02}"
    } else {
        "machine{h=4.5 d=0 xd=1.8 xd_p=0.30 xd_pp=0.28 xq=1.7 xq_p=0.55 xq_pp=0.50 xls=0.15 rs=0.003 \\\n  tdo_p=8.0 tdo_pp=0.02 tqo_p=0.8 tqo_pp=0.02}"
    }
}

const KRPS35_EXCITER: &str = "exciter{tr=0.02 ka=200 efd_min=-6 efd_max=6}";
const KRPS35_PSS: &str = "pss{f_l=0.07 k_l=20 f_i=0.7 k_i=80 f_h=8 k_h=120 vs_min=-0.1 vs_max=0.1}";

/// Line length in km, rounded to 100 m.
fn draw_length(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo..hi) * 10.0).round() / 10.0
}

/// Writes the 35-bus surrogate case file. The output is a pure function of
/// a fixed seed; the bundled `krps35.case` is this function's output.
pub fn generate_krps35() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(KRPS35_SEED);
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "# 35-bus 132 kV surrogate: 6 stations, 29 load buses, 53 branches.").unwrap();
    writeln!(w, "# Written by gridmodal::cases::generate_krps35; do not edit by hand.").unwrap();
    writeln!(w, "SYSTEM s_base=100 f=50").unwrap();
    writeln!(w).unwrap();

    for (k, s) in STATIONS.iter().enumerate() {
        let id = k + 1;
        match s.dispatch {
            None => writeln!(w, "BUS id={id} name={} kind=slack kv=132 vset={}", s.name, s.vset).unwrap(),
            Some(_) => writeln!(w, "BUS id={id} name={} kind=pv kv=132 vset={}", s.name, s.vset).unwrap(),
        }
    }
    for (k, (name, _)) in LOADS.iter().enumerate() {
        let id = k + 7;
        writeln!(w, "BUS id={id} name={name}_L kind=pq kv=132").unwrap();
    }
    writeln!(w).unwrap();

    let mut branches: Vec<(u32, u32, f64)> = Vec::new();
    // hub ring and diagonals
    for (a, b) in [(7, 8), (8, 9), (9, 10), (10, 7), (7, 9), (8, 10)] {
        branches.push((a, b, draw_length(&mut rng, 32.0, 70.0)));
    }
    for (k, s) in STATIONS.iter().enumerate() {
        for &(to, long) in s.ties {
            let len = if long { draw_length(&mut rng, 30.0, 60.0) } else { draw_length(&mut rng, 6.0, 24.0) };
            branches.push((k as u32 + 1, to, len));
        }
    }
    for bus in 11..=35 {
        branches.push((hub_of(bus), bus, draw_length(&mut rng, 6.0, 24.0)));
    }
    // cross links between load buses fed from different hubs
    let mut extra = 0;
    while extra < 53 - 14 - 6 - 25 {
        let a = rng.random_range(11..=35u32);
        let b = rng.random_range(11..=35u32);
        if a == b || hub_of(a) == hub_of(b) {
            continue;
        }
        let (a, b) = (a.min(b), a.max(b));
        if branches.iter().any(|&(x, y, _)| (x, y) == (a, b)) {
            continue;
        }
        branches.push((a, b, draw_length(&mut rng, 6.0, 24.0)));
        extra += 1;
    }
    for (a, b, len) in &branches {
        writeln!(
            w,
            "BRANCH from={a} to={b} r_ohm={:.3} x_ohm={:.3} b_us={:.2} len={len}",
            LINE_R * len,
            LINE_X * len,
            LINE_B * len
        )
        .unwrap();
    }
    writeln!(w).unwrap();

    for (k, (_, p)) in LOADS.iter().enumerate() {
        writeln!(w, "LOAD bus={} p0={p} q0={:.1} v0=1.0 a=1.0 b=2.0", k + 7, 0.3 * p).unwrap();
    }
    writeln!(w).unwrap();

    for (k, s) in STATIONS.iter().enumerate() {
        let pset = s.dispatch.map(|p| format!(" pset={p}")).unwrap_or_default();
        let governor = if s.hydro { "governor{hydro}" } else { "governor{gas}" };
        writeln!(
            w,
            "UNIT bus={} name={} mva={}{pset} \\\n  {} \\\n  {KRPS35_EXCITER} {governor} \\\n  {KRPS35_PSS}",
            k + 1,
            s.name,
            s.mva,
            machine_block(s.hydro)
        )
        .unwrap();
    }
    out
}
