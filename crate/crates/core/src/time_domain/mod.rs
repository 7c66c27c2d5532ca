//! Event-driven time-domain simulation of the assembled DAE.

mod trbdf2;

pub use trbdf2::{trbdf2_step, DaeSystem, StepOutput, Stepper, GAMMA};

use std::fmt;

use thiserror::Error;

use crate::dynamics::{DynamicSystem, UnitOutputs};

/// Smallest step before the integrator gives up.
pub const H_MIN: f64 = 1e-10;

const SAFETY: f64 = 0.9;
const GROWTH_CAP: f64 = 2.0;
const SHRINK_FLOOR: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("Newton iteration failed at t = {t:.6} s (residual {residual:.3e})")]
    NewtonFailure { t: f64, residual: f64 },
    #[error("step size fell below {H_MIN:e} s at t = {0:.6} s")]
    StepUnderflow(f64),
    #[error("iteration matrix is singular")]
    SingularIterationMatrix,
    #[error("no input {input} on unit {unit}")]
    UnknownTarget { unit: String, input: InputKind },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("invalid options: {0}")]
    InvalidOptions(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    MechanicalPowerRef,
    VoltageRef,
}

impl InputKind {
    /// Name of the input in the system catalog.
    pub fn catalog_name(self) -> &'static str {
        match self {
            InputKind::MechanicalPowerRef => "p_ref",
            InputKind::VoltageRef => "v_ref",
        }
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.catalog_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Change {
    /// Multiply the reference by `1 + fraction`.
    StepRelative(f64),
    /// Add a per-unit amount to the reference.
    StepAbsolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub unit: String,
    pub input: InputKind,
    pub change: Change,
}

impl Event {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.time >= 0.0 && self.time.is_finite()) {
            return Err(SimError::InvalidEvent(format!("time {} must be non-negative", self.time)));
        }
        match self.change {
            Change::StepRelative(f) if !(f > -1.0 && f.is_finite()) => {
                Err(SimError::InvalidEvent(format!("relative change {f} must exceed -1")))
            }
            Change::StepAbsolute(a) if !a.is_finite() => Err(SimError::InvalidEvent("non-finite change".into())),
            _ => Ok(()),
        }
    }
}

/// Grammar accepted by `Event::from_str`.
pub const EVENT_GRAMMAR: &str = "<unit>:<pm|vref>:<+|-><value>[%]@<time s>, e.g. G1:pm:+5%@40";

impl std::str::FromStr for Event {
    type Err = SimError;

    /// Parses `unit:quantity:±value[%]@time`. A trailing `%` makes the change
    /// relative to the current reference; otherwise it is added in per unit.
    fn from_str(s: &str) -> Result<Self, SimError> {
        let bad = |why: &str| SimError::InvalidEvent(format!("{why} in '{s}'; expected {EVENT_GRAMMAR}"));
        let (spec, time) = s.rsplit_once('@').ok_or_else(|| bad("missing '@time'"))?;
        let time: f64 = time.trim().parse().map_err(|_| bad("bad time"))?;
        let mut parts = spec.rsplitn(3, ':');
        let (value, quantity, unit) = match (parts.next(), parts.next(), parts.next()) {
            (Some(v), Some(q), Some(u)) if !u.is_empty() => (v.trim(), q.trim(), u.trim()),
            _ => return Err(bad("expected three ':'-separated fields")),
        };
        let input = match quantity {
            "pm" => InputKind::MechanicalPowerRef,
            "vref" => InputKind::VoltageRef,
            _ => return Err(bad("quantity must be pm or vref")),
        };
        if !value.starts_with(['+', '-']) {
            return Err(bad("value needs an explicit sign"));
        }
        let change = match value.strip_suffix('%') {
            Some(v) => Change::StepRelative(v.parse::<f64>().map_err(|_| bad("bad value"))? / 100.0),
            None => Change::StepAbsolute(value.parse().map_err(|_| bad("bad value"))?),
        };
        let e = Event { time, unit: unit.to_string(), input, change };
        e.validate()?;
        Ok(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub t_end: f64,
    pub max_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub output_dt: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { t_end: 10.0, max_step: 0.02, rel_tol: 1e-6, abs_tol: 1e-8, output_dt: 0.02 }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.t_end > 0.0) {
            return Err(SimError::InvalidOptions("t_end must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(SimError::InvalidOptions("max_step must be positive"));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(SimError::InvalidOptions("tolerances must be positive"));
        }
        if !(self.output_dt > 0.0) {
            return Err(SimError::InvalidOptions("output_dt must be positive"));
        }
        Ok(())
    }
}

/// Applies `e` to the input vector `u`.
pub fn apply_event(sys: &DynamicSystem, u: &mut [f64], e: &Event) -> Result<(), SimError> {
    e.validate()?;
    let k = sys
        .input_position(&e.unit, e.input.catalog_name())
        .ok_or_else(|| SimError::UnknownTarget { unit: e.unit.clone(), input: e.input })?;
    match e.change {
        Change::StepRelative(f) => u[k] *= 1.0 + f,
        Change::StepAbsolute(a) => u[k] += a,
    }
    Ok(())
}

/// Sampled trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub unit_names: Vec<String>,
    pub bus_names: Vec<String>,
    /// Full state vector at each sample.
    pub states: Vec<Vec<f64>>,
    /// Per sample, one entry per unit.
    pub units: Vec<Vec<UnitOutputs>>,
    /// Per sample, voltage magnitude of every bus.
    pub v_mag: Vec<Vec<f64>>,
    /// Inertia weights of the centre-of-inertia speed; `None` when an
    /// infinite bus fixes the frequency at nominal.
    pub coi_weights: Option<Vec<f64>>,
    pub stats: SimStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub jacobian_evals: usize,
}

impl TimeSeries {
    /// Column names after `t_s`, in CSV order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for u in &self.unit_names {
            names.extend(UnitOutputs::NAMES.iter().map(|q| format!("{u}.{q}")));
        }
        names.extend(self.bus_names.iter().map(|b| format!("{b}.v_mag")));
        names
    }

    /// Row of values matching `column_names` at sample `k`.
    pub fn row(&self, k: usize) -> Vec<f64> {
        let mut row: Vec<f64> = self.units[k].iter().flat_map(|o| o.values()).collect();
        row.extend(&self.v_mag[k]);
        row
    }

    /// Trajectory of `<unit>.<quantity>` or `<bus>.v_mag`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let pos = self.column_names().iter().position(|c| c == name)?;
        Some((0..self.t.len()).map(|k| self.row(k)[pos]).collect())
    }

    /// Peak-to-peak value of a column over `[t0, t1]`.
    pub fn envelope(&self, name: &str, t0: f64, t1: f64) -> Option<f64> {
        self.peak_to_peak(&self.column(name)?, t0, t1)
    }

    fn peak_to_peak(&self, values: &[f64], t0: f64, t1: f64) -> Option<f64> {
        let window: Vec<f64> = self
            .t
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .map(|(_, v)| *v)
            .collect();
        if window.is_empty() {
            return None;
        }
        let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = window.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max - min)
    }

    /// Speed of unit `k` relative to the centre of inertia (or to nominal
    /// speed when an infinite bus is present), per unit.
    pub fn relative_speed(&self, k: usize) -> Vec<f64> {
        self.units
            .iter()
            .map(|sample| {
                let reference = match &self.coi_weights {
                    Some(w) => {
                        let total: f64 = w.iter().sum();
                        sample.iter().zip(w).map(|(o, w)| o.omega_pu * w).sum::<f64>() / total
                    }
                    None => 1.0,
                };
                sample[k].omega_pu - reference
            })
            .collect()
    }

    /// Largest peak-to-peak relative speed over `[t0, t1]` among all units.
    /// Inter-machine swings show up here; the common frequency drift that
    /// governors correct slowly does not.
    pub fn speed_oscillation_envelope(&self, t0: f64, t1: f64) -> f64 {
        (0..self.unit_names.len())
            .filter_map(|k| self.peak_to_peak(&self.relative_speed(k), t0, t1))
            .fold(0.0, f64::max)
    }
}

/// The dynamic system with its inputs frozen.
struct Driven<'a> {
    sys: &'a DynamicSystem,
    u: Vec<f64>,
}

impl DaeSystem for Driven<'_> {
    fn n_x(&self) -> usize {
        self.sys.n_states()
    }
    fn n_y(&self) -> usize {
        self.sys.n_algebraic()
    }
    fn eval(&self, x: &[f64], y: &[f64], f: &mut [f64], g: &mut [f64]) {
        self.sys.residual(x, y, &self.u, f, g);
    }
}

/// Simulates from the stored equilibrium.
pub fn simulate(sys: &DynamicSystem, events: &[Event], opts: &SimOptions) -> Result<TimeSeries, SimError> {
    let eq = sys.equilibrium();
    simulate_from(sys, &eq.x0, &eq.y0, &eq.u0, events, opts)
}

/// Simulates from an arbitrary consistent point.
pub fn simulate_from(
    sys: &DynamicSystem,
    x0: &[f64],
    y0: &[f64],
    u0: &[f64],
    events: &[Event],
    opts: &SimOptions,
) -> Result<TimeSeries, SimError> {
    opts.validate()?;
    let mut events = events.to_vec();
    for e in &events {
        e.validate()?;
        if sys.input_position(&e.unit, e.input.catalog_name()).is_none() {
            return Err(SimError::UnknownTarget { unit: e.unit.clone(), input: e.input });
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));

    let mut series = TimeSeries {
        t: Vec::new(),
        unit_names: sys.unit_names().iter().map(|s| s.to_string()).collect(),
        bus_names: sys.bus_names().to_vec(),
        states: Vec::new(),
        units: Vec::new(),
        v_mag: Vec::new(),
        coi_weights: (!sys.has_infinite_bus()).then(|| sys.unit_inertia()),
        stats: SimStats::default(),
    };
    let mut driven = Driven { sys, u: u0.to_vec() };
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let h0 = opts.max_step.min(1e-3);
    let mut h = h0;
    let mut next_event = 0;
    let n_samples = (opts.t_end / opts.output_dt + 1e-9).floor() as usize;
    let mut next_sample = 0usize;
    let sample_time = |k: usize| (k as f64 * opts.output_dt).min(opts.t_end);

    let record = |series: &mut TimeSeries, t: f64, x: &[f64], y: &[f64], u: &[f64]| {
        if series.t.last().is_some_and(|&last| t <= last) {
            return;
        }
        series.t.push(t);
        series.states.push(x.to_vec());
        series.units.push(sys.unit_outputs(x, y, u));
        series.v_mag.push(sys.bus_voltages(y));
    };

    // events at t = 0 act before the first sample
    while next_event < events.len() && events[next_event].time <= 0.0 {
        apply_event(sys, &mut driven.u, &events[next_event])?;
        next_event += 1;
    }
    record(&mut series, 0.0, &x, &y, &driven.u);
    next_sample = next_sample.max(1);

    let mut f = vec![0.0; sys.n_states()];
    let mut g = vec![0.0; sys.n_algebraic()];
    sys.residual(&x, &y, &driven.u, &mut f, &mut g);
    let mut stepper = Stepper::new(&driven, opts.rel_tol, opts.abs_tol);
    let mut stats = SimStats::default();

    while t < opts.t_end {
        let stop = events
            .get(next_event)
            .map(|e| e.time.min(opts.t_end))
            .unwrap_or(opts.t_end);
        let mut h_try = h.min(opts.max_step);
        let mut landing = false;
        if t + h_try >= stop - 1e-12 * stop.max(1.0) {
            h_try = stop - t;
            landing = true;
        }
        let out = match stepper.step(h_try, &x, &y, &f) {
            Ok(out) if out.error <= 1.0 => out,
            Ok(out) => {
                stats.rejected_steps += 1;
                h = h_try * (SAFETY * out.error.powf(-1.0 / 3.0)).clamp(SHRINK_FLOOR, 1.0);
                if h < H_MIN {
                    return Err(SimError::StepUnderflow(t));
                }
                continue;
            }
            Err(SimError::NewtonFailure { residual, .. }) => {
                stats.rejected_steps += 1;
                h = h_try * 0.25;
                if h < H_MIN {
                    return Err(SimError::NewtonFailure { t, residual });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        stats.accepted_steps += 1;
        let t_new = if landing { stop } else { t + h_try };

        // dense output on (t, t_new]
        while next_sample <= n_samples && sample_time(next_sample) <= t_new {
            let ts = sample_time(next_sample);
            let (xs, ys) = interpolate(t, h_try, &x, &f, &y, &out, ts);
            record(&mut series, ts, &xs, &ys, &driven.u);
            next_sample += 1;
        }

        t = t_new;
        x = out.x;
        y = out.y;
        f = out.f;
        let grow = if out.error > 0.0 { SAFETY * out.error.powf(-1.0 / 3.0) } else { GROWTH_CAP };
        h = (h_try * grow.clamp(SHRINK_FLOOR, GROWTH_CAP)).min(opts.max_step);

        let due = |k: usize| k < events.len() && events[k].time <= t + 1e-12 * t.max(1.0);
        if due(next_event) {
            record(&mut series, t, &x, &y, &driven.u);
            stats.jacobian_evals += stepper.jacobian_evals;
            while due(next_event) {
                apply_event(sys, &mut driven.u, &events[next_event])?;
                next_event += 1;
            }
            stepper = Stepper::new(&driven, opts.rel_tol, opts.abs_tol);
            sys.residual(&x, &y, &driven.u, &mut f, &mut g);
            h = h0;
        }
    }
    stats.jacobian_evals += stepper.jacobian_evals;
    if series.t.last().is_some_and(|&last| last < opts.t_end) {
        record(&mut series, opts.t_end, &x, &y, &driven.u);
    }
    series.stats = stats;
    Ok(series)
}

/// Cubic Hermite interpolation of `x` and quadratic interpolation of `y`
/// through the three stage points of a step.
fn interpolate(
    t0: f64,
    h: f64,
    x0: &[f64],
    f0: &[f64],
    y0: &[f64],
    out: &StepOutput,
    ts: f64,
) -> (Vec<f64>, Vec<f64>) {
    let s = ((ts - t0) / h).clamp(0.0, 1.0);
    if s == 1.0 {
        return (out.x.clone(), out.y.clone());
    }
    let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
    let h10 = s.powi(3) - 2.0 * s * s + s;
    let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
    let h11 = s.powi(3) - s * s;
    let x = (0..x0.len())
        .map(|i| h00 * x0[i] + h10 * h * f0[i] + h01 * out.x[i] + h11 * h * out.f[i])
        .collect();
    let g = GAMMA;
    let l0 = (s - g) * (s - 1.0) / g;
    let lg = s * (s - 1.0) / (g * (g - 1.0));
    let l1 = s * (s - g) / (1.0 - g);
    let y = (0..y0.len())
        .map(|i| l0 * y0[i] + lg * out.y_gamma[i] + l1 * out.y[i])
        .collect();
    (x, y)
}
