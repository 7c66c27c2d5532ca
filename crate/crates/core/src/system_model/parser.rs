//! Line-oriented case format.
//!
//! ```text
//! # comment
//! SYSTEM s_base=100 f=50
//! BUS id=1 name=Dokan kind=slack kv=132 vset=1.02
//! BRANCH from=1 to=2 r=0.01 x=0.08 b=0.02 len=30
//! LOAD bus=5 p0=40 q0=12 v0=1.0 a=2 b=2
//! UNIT bus=1 name=G1 mva=400 machine{h=3.5 ...} exciter{ka=200} governor{hydro tw=2} pss{f_i=1}
//! ```
//!
//! A trailing `\` continues a record on the next line. Unknown keys are
//! errors.

use std::collections::BTreeMap;
use std::path::Path;

use super::line::{exact_pi_from_totals, ohms_to_pu, PhysicalBranch};
use super::{
    Branch, Bus, BusKind, CaseError, GeneratingUnit, LineModel, LoadModel, PowerSystemCase,
    SystemBase,
};
use crate::dynamics::{
    ExciterST1A, GasGovernor, Governor, HydroGovernor, MachineParams, PssBand, PssMB,
};

pub fn parse_case(path: impl AsRef<Path>) -> Result<PowerSystemCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CaseError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_case_str(&text)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Pair(String, String),
    Block(String, Vec<Tok>),
}

fn malformed(line: usize, reason: impl Into<String>) -> CaseError {
    CaseError::MalformedCase { line, reason: reason.into() }
}

fn tokenize(line: usize, text: &str) -> Result<Vec<Tok>, CaseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let toks = tokenize_until(line, &chars, &mut pos, false)?;
    Ok(toks)
}

fn tokenize_until(
    line: usize,
    c: &[char],
    pos: &mut usize,
    in_block: bool,
) -> Result<Vec<Tok>, CaseError> {
    let is_delim = |ch: char| ch.is_whitespace() || ch == '=' || ch == '{' || ch == '}';
    let mut out = Vec::new();
    loop {
        while *pos < c.len() && c[*pos].is_whitespace() {
            *pos += 1;
        }
        if *pos >= c.len() {
            if in_block {
                return Err(malformed(line, "unterminated '{' block"));
            }
            return Ok(out);
        }
        match c[*pos] {
            '}' if in_block => {
                *pos += 1;
                return Ok(out);
            }
            '}' => return Err(malformed(line, "unexpected '}'")),
            '=' | '{' => return Err(malformed(line, format!("unexpected '{}'", c[*pos]))),
            _ => {}
        }
        let start = *pos;
        while *pos < c.len() && !is_delim(c[*pos]) {
            *pos += 1;
        }
        let word: String = c[start..*pos].iter().collect();
        if *pos < c.len() && c[*pos] == '=' {
            *pos += 1;
            let vstart = *pos;
            while *pos < c.len() && !is_delim(c[*pos]) {
                *pos += 1;
            }
            if vstart == *pos {
                return Err(malformed(line, format!("key '{word}' has no value")));
            }
            out.push(Tok::Pair(word, c[vstart..*pos].iter().collect()));
        } else if *pos < c.len() && c[*pos] == '{' {
            *pos += 1;
            let inner = tokenize_until(line, c, pos, true)?;
            out.push(Tok::Block(word, inner));
        } else {
            out.push(Tok::Word(word));
        }
    }
}

/// Key/value pairs of one record or block; every key must be consumed.
struct Fields {
    line: usize,
    what: String,
    map: BTreeMap<String, String>,
}

impl Fields {
    fn new(line: usize, what: &str, toks: &[Tok]) -> Result<(Self, Vec<String>, Vec<(String, Vec<Tok>)>), CaseError> {
        let mut map = BTreeMap::new();
        let mut words = Vec::new();
        let mut blocks = Vec::new();
        for t in toks {
            match t {
                Tok::Pair(k, v) => {
                    if map.insert(k.clone(), v.clone()).is_some() {
                        return Err(malformed(line, format!("{what}: duplicate key '{k}'")));
                    }
                }
                Tok::Word(w) => words.push(w.clone()),
                Tok::Block(n, inner) => blocks.push((n.clone(), inner.clone())),
            }
        }
        Ok((Fields { line, what: what.to_string(), map }, words, blocks))
    }

    fn text(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>, CaseError> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| malformed(self.line, format!("{}: '{key}={v}' is not a number", self.what))),
        }
    }

    fn req(&mut self, key: &str) -> Result<f64, CaseError> {
        self.num(key)?
            .ok_or_else(|| malformed(self.line, format!("{}: missing required key '{key}'", self.what)))
    }

    fn or(&mut self, key: &str, default: f64) -> Result<f64, CaseError> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn id(&mut self, key: &str) -> Result<u32, CaseError> {
        let v = self.req(key)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(malformed(self.line, format!("{}: '{key}' must be a non-negative integer", self.what)));
        }
        Ok(v as u32)
    }

    fn finish(self) -> Result<(), CaseError> {
        match self.map.keys().next() {
            Some(k) => Err(malformed(self.line, format!("{}: unknown key '{k}'", self.what))),
            None => Ok(()),
        }
    }
}

fn no_extras(line: usize, what: &str, words: &[String], blocks: &[(String, Vec<Tok>)]) -> Result<(), CaseError> {
    if let Some(w) = words.first() {
        return Err(malformed(line, format!("{what}: unexpected word '{w}'")));
    }
    if let Some((b, _)) = blocks.first() {
        return Err(malformed(line, format!("{what}: unexpected block '{b}'")));
    }
    Ok(())
}

struct Record {
    line: usize,
    kind: String,
    toks: Vec<Tok>,
}

fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (k, raw) in text.lines().enumerate() {
        let no = k + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim_end();
        let (body, cont) = match stripped.strip_suffix('\\') {
            Some(b) => (b, true),
            None => (stripped, false),
        };
        let entry = pending.get_or_insert((no, String::new()));
        entry.1.push(' ');
        entry.1.push_str(body);
        if !cont {
            let (l, s) = pending.take().unwrap();
            if !s.trim().is_empty() {
                out.push((l, s));
            }
        }
    }
    if let Some((l, s)) = pending {
        if !s.trim().is_empty() {
            out.push((l, s));
        }
    }
    out
}

pub fn parse_case_str(text: &str) -> Result<PowerSystemCase, CaseError> {
    let mut records = Vec::new();
    for (line, body) in logical_lines(text) {
        let mut toks = tokenize(line, &body)?;
        let kind = match toks.first() {
            Some(Tok::Word(w)) => w.clone(),
            _ => return Err(malformed(line, "record must start with a section keyword")),
        };
        toks.remove(0);
        records.push(Record { line, kind, toks });
    }

    let mut base = SystemBase::default();
    let mut seen_system = false;
    for r in records.iter().filter(|r| r.kind == "SYSTEM") {
        if seen_system {
            return Err(malformed(r.line, "more than one SYSTEM header"));
        }
        seen_system = true;
        let (mut f, words, blocks) = Fields::new(r.line, "SYSTEM", &r.toks)?;
        no_extras(r.line, "SYSTEM", &words, &blocks)?;
        base.s_base = f.or("s_base", base.s_base)?;
        base.f_nominal = f.or("f", base.f_nominal)?;
        f.finish()?;
        if !(base.s_base > 0.0) {
            return Err(malformed(r.line, "s_base must be positive"));
        }
        if base.f_nominal != 50.0 && base.f_nominal != 60.0 {
            return Err(malformed(r.line, "f must be 50 or 60"));
        }
    }

    if let Some(r) = records
        .iter()
        .find(|r| !matches!(r.kind.as_str(), "SYSTEM" | "BUS" | "BRANCH" | "LOAD" | "UNIT"))
    {
        return Err(malformed(r.line, format!("unknown section '{}'", r.kind)));
    }

    let mut buses = Vec::new();
    for r in records.iter().filter(|r| r.kind == "BUS") {
        buses.push(parse_bus(r)?);
    }
    buses.sort_by_key(|b: &Bus| b.id);
    for w in buses.windows(2) {
        if w[0].id == w[1].id {
            return Err(CaseError::DuplicateId(w[0].id));
        }
    }
    let kv_of = |id: u32, line: usize| {
        buses
            .binary_search_by_key(&id, |b| b.id)
            .map(|k| buses[k].base_kv)
            .map_err(|_| malformed(line, format!("unknown bus {id}")))
    };

    let mut branches = Vec::new();
    for r in records.iter().filter(|r| r.kind == "BRANCH") {
        branches.push(parse_branch(r, &kv_of, base.s_base)?);
    }
    let mut loads = Vec::new();
    for r in records.iter().filter(|r| r.kind == "LOAD") {
        let load = parse_load(r)?;
        kv_of(load.bus, r.line)?;
        loads.push(load);
    }
    let mut units = Vec::new();
    for r in records.iter().filter(|r| r.kind == "UNIT") {
        let unit = parse_unit(r)?;
        kv_of(unit.bus, r.line)?;
        units.push(unit);
    }

    let case = PowerSystemCase { base, buses, branches, loads, units };
    case.validate()?;
    Ok(case)
}

fn parse_bus(r: &Record) -> Result<Bus, CaseError> {
    let (mut f, words, blocks) = Fields::new(r.line, "BUS", &r.toks)?;
    no_extras(r.line, "BUS", &words, &blocks)?;
    let id = f.id("id")?;
    let name = f.text("name").unwrap_or_else(|| format!("bus{id}"));
    let kind = match f.text("kind").as_deref() {
        Some("slack") => BusKind::Slack,
        Some("pv") => BusKind::PV,
        Some("pq") => BusKind::PQ,
        Some(other) => return Err(malformed(r.line, format!("BUS: unknown kind '{other}'"))),
        None => return Err(malformed(r.line, "BUS: missing required key 'kind'")),
    };
    let base_kv = f.req("kv")?;
    if !(base_kv > 0.0) {
        return Err(malformed(r.line, "BUS: kv must be positive"));
    }
    let v_set = match kind {
        BusKind::PQ => 1.0,
        _ => f.req("vset")?,
    };
    if !(v_set > 0.0) {
        return Err(malformed(r.line, "BUS: vset must be positive"));
    }
    let angle_set = match kind {
        BusKind::Slack => f.or("angle_deg", 0.0)?.to_radians(),
        _ => 0.0,
    };
    let p_gen = match kind {
        BusKind::PV => f.or("pgen", 0.0)?,
        _ => 0.0,
    };
    f.finish()?;
    Ok(Bus { id, name, kind, base_kv, v_set, angle_set, p_gen })
}

fn parse_branch(
    r: &Record,
    kv_of: &dyn Fn(u32, usize) -> Result<f64, CaseError>,
    s_base: f64,
) -> Result<Branch, CaseError> {
    let (mut f, words, blocks) = Fields::new(r.line, "BRANCH", &r.toks)?;
    no_extras(r.line, "BRANCH", &words, &blocks)?;
    let from_bus = f.id("from")?;
    let to_bus = f.id("to")?;
    let length_km = f.or("len", 0.0)?;
    if length_km < 0.0 {
        return Err(malformed(r.line, "BRANCH: len must be non-negative"));
    }
    let physical = [f.num("r_ohm")?, f.num("x_ohm")?, f.num("b_us")?];
    let pu = [f.num("r")?, f.num("x")?, f.num("b")?];
    let (r_pu, x_pu, b_pu) = match (physical.iter().any(Option::is_some), pu.iter().any(Option::is_some)) {
        (true, true) => {
            return Err(malformed(r.line, "BRANCH: mix of per-unit and physical impedances"))
        }
        (true, false) => {
            let kv = kv_of(from_bus, r.line)?;
            ohms_to_pu(
                PhysicalBranch {
                    r_ohm: physical[0].unwrap_or(0.0),
                    x_ohm: physical[1].unwrap_or(0.0),
                    b_us: physical[2].unwrap_or(0.0),
                },
                kv,
                s_base,
            )
        }
        _ => (pu[0].unwrap_or(0.0), pu[1].unwrap_or(0.0), pu[2].unwrap_or(0.0)),
    };
    f.finish()?;
    kv_of(from_bus, r.line)?;
    kv_of(to_bus, r.line)?;
    if r_pu == 0.0 && x_pu == 0.0 {
        return Err(if b_pu == 0.0 {
            CaseError::DegenerateLine
        } else {
            malformed(r.line, "BRANCH: zero series impedance")
        });
    }
    let model = LineModel::for_length(length_km);
    let (r, x, b_shunt) = match model {
        LineModel::NominalPi => (r_pu, x_pu, b_pu),
        LineModel::DistributedExactPi => exact_pi_from_totals(r_pu, x_pu, b_pu, length_km)?,
    };
    Ok(Branch { from_bus, to_bus, r, x, b_shunt, length_km, model })
}

fn parse_load(r: &Record) -> Result<LoadModel, CaseError> {
    let (mut f, words, blocks) = Fields::new(r.line, "LOAD", &r.toks)?;
    no_extras(r.line, "LOAD", &words, &blocks)?;
    let load = LoadModel {
        bus: f.id("bus")?,
        p0: f.req("p0")?,
        q0: f.or("q0", 0.0)?,
        v0: f.or("v0", 1.0)?,
        a: f.or("a", 2.0)?,
        b: f.or("b", 2.0)?,
    };
    f.finish()?;
    if !(load.v0 > 0.0) {
        return Err(CaseError::NonPositiveVoltage(load.v0));
    }
    for (name, value) in [("a", load.a), ("b", load.b)] {
        if !(0.0..=2.0).contains(&value) {
            return Err(CaseError::ExponentOutOfRange { bus: load.bus, name, value });
        }
    }
    Ok(load)
}

fn parse_unit(r: &Record) -> Result<GeneratingUnit, CaseError> {
    let line = r.line;
    let (mut f, words, blocks) = Fields::new(line, "UNIT", &r.toks)?;
    no_extras(line, "UNIT", &words, &[])?;
    let bus = f.id("bus")?;
    let name = f.text("name").unwrap_or_else(|| format!("G{bus}"));
    let mva_base = f.req("mva")?;
    let p_set = f.num("pset")?;
    f.finish()?;
    if !(mva_base > 0.0) {
        return Err(malformed(line, "UNIT: mva must be positive"));
    }

    let mut machine = None;
    let mut exciter = None;
    let mut governor = None;
    let mut pss = None;
    for (bname, inner) in &blocks {
        let what = format!("UNIT {name} {bname}");
        let (mut f, words, sub) = Fields::new(line, &what, inner)?;
        let dup = || malformed(line, format!("{what}: block given twice"));
        match bname.as_str() {
            "machine" => {
                no_extras(line, &what, &words, &sub)?;
                if machine.is_some() {
                    return Err(dup());
                }
                machine = Some(parse_machine(&mut f)?);
            }
            "exciter" => {
                no_extras(line, &what, &words, &sub)?;
                if exciter.is_some() {
                    return Err(dup());
                }
                let d = ExciterST1A::default();
                exciter = Some(ExciterST1A {
                    tr: f.or("tr", d.tr)?,
                    ka: f.or("ka", d.ka)?,
                    tb: f.or("tb", d.tb)?,
                    tc: f.or("tc", d.tc)?,
                    efd_min: f.or("efd_min", d.efd_min)?,
                    efd_max: f.or("efd_max", d.efd_max)?,
                });
            }
            "governor" => {
                no_extras(line, &what, &[], &sub)?;
                if governor.is_some() {
                    return Err(dup());
                }
                governor = Some(match words.as_slice() {
                    [w] if w == "hydro" => {
                        let d = HydroGovernor::default();
                        Governor::Hydro(HydroGovernor {
                            kp: f.or("kp", d.kp)?,
                            ki: f.or("ki", d.ki)?,
                            kd: f.or("kd", d.kd)?,
                            td: f.or("td", d.td)?,
                            ta_servo: f.or("ta_servo", d.ta_servo)?,
                            g_min: f.or("g_min", d.g_min)?,
                            g_max: f.or("g_max", d.g_max)?,
                            rate_limit: f.or("rate_limit", d.rate_limit)?,
                            tw: f.or("tw", d.tw)?,
                            at: f.or("at", d.at)?,
                            q_nl: f.or("q_nl", d.q_nl)?,
                            r_perm: f.or("r_perm", d.r_perm)?,
                        })
                    }
                    [w] if w == "gas" => {
                        let d = GasGovernor::default();
                        Governor::Gas(GasGovernor {
                            r_droop: f.or("r_droop", d.r_droop)?,
                            t_valve: f.or("t_valve", d.t_valve)?,
                            t_comb: f.or("t_comb", d.t_comb)?,
                            t_turb: f.or("t_turb", d.t_turb)?,
                            f_min: f.or("f_min", d.f_min)?,
                            f_max: f.or("f_max", d.f_max)?,
                            k_turb: f.or("k_turb", d.k_turb)?,
                        })
                    }
                    _ => {
                        return Err(malformed(line, format!("{what}: expected 'hydro' or 'gas' variant")))
                    }
                });
            }
            "pss" => {
                no_extras(line, &what, &words, &sub)?;
                if pss.is_some() {
                    return Err(dup());
                }
                pss = Some(PssMB {
                    low: PssBand { freq: f.or("f_l", 0.07)?, gain: f.or("k_l", 0.0)? },
                    intermediate: PssBand { freq: f.or("f_i", 0.7)?, gain: f.or("k_i", 0.0)? },
                    high: PssBand { freq: f.or("f_h", 8.0)?, gain: f.or("k_h", 0.0)? },
                    vs_min: f.or("vs_min", -0.1)?,
                    vs_max: f.or("vs_max", 0.1)?,
                });
            }
            other => return Err(malformed(line, format!("UNIT {name}: unknown block '{other}'"))),
        }
        f.finish()?;
    }

    let unit = GeneratingUnit {
        bus,
        name: name.clone(),
        mva_base,
        p_set,
        machine: machine.ok_or_else(|| malformed(line, format!("UNIT {name}: missing machine{{...}} block")))?,
        exciter: exciter.unwrap_or_default(),
        governor: governor.ok_or_else(|| malformed(line, format!("UNIT {name}: missing governor{{...}} block")))?,
        pss,
    };
    let check = |r: Result<(), String>| r.map_err(|e| malformed(line, format!("UNIT {name}: {e}")));
    check(unit.machine.validate())?;
    check(unit.exciter.validate())?;
    check(unit.governor.validate())?;
    if let Some(p) = &unit.pss {
        check(p.validate())?;
    }
    Ok(unit)
}

fn parse_machine(f: &mut Fields) -> Result<MachineParams, CaseError> {
    Ok(MachineParams {
        h: f.req("h")?,
        d: f.or("d", 0.0)?,
        xd: f.req("xd")?,
        xd_p: f.req("xd_p")?,
        xd_pp: f.req("xd_pp")?,
        xq: f.req("xq")?,
        xq_p: f.req("xq_p")?,
        xq_pp: f.req("xq_pp")?,
        xls: f.req("xls")?,
        rs: f.or("rs", 0.0)?,
        tdo_p: f.req("tdo_p")?,
        tdo_pp: f.req("tdo_pp")?,
        tqo_p: f.req("tqo_p")?,
        tqo_pp: f.req("tqo_pp")?,
    })
}
