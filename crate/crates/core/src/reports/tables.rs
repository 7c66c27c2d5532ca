use super::{fmt_num, ReportError};
use crate::dynamics::DynamicSystem;
use crate::power_flow::PowerFlowSolution;
use crate::small_signal::ModalResult;
use crate::system_model::PowerSystemCase;
use crate::time_domain::TimeSeries;

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, ReportError> {
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Columns: `bus_id, v_pu, angle_deg, p_inj_mw, q_inj_mvar`.
pub fn power_flow_csv(case: &PowerSystemCase, pf: &PowerFlowSolution) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bus_id", "v_pu", "angle_deg", "p_inj_mw", "q_inj_mvar"])?;
    let s = case.base.s_base;
    for (i, bus) in case.buses.iter().enumerate() {
        w.write_record([
            bus.id.to_string(),
            fmt_num(pf.v_mag[i]),
            fmt_num(pf.v_ang[i].to_degrees()),
            fmt_num(pf.p_inj[i] * s),
            fmt_num(pf.q_inj[i] * s),
        ])?;
    }
    finish(w)
}

/// One row per mode, in the order of `result.modes` (conjugate pairs once,
/// with `im > 0`). Columns:
/// `re, im, freq_hz, damping_ratio, category, dominant_state_1, p_1,
/// dominant_state_2, p_2`.
pub fn modal_csv(result: &ModalResult) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "re",
        "im",
        "freq_hz",
        "damping_ratio",
        "category",
        "dominant_state_1",
        "p_1",
        "dominant_state_2",
        "p_2",
    ])?;
    for m in &result.modes {
        let dom = |k: usize| {
            m.dominant_states
                .get(k)
                .map(|(s, p)| (s.clone(), fmt_num(*p)))
                .unwrap_or_default()
        };
        let (s1, p1) = dom(0);
        let (s2, p2) = dom(1);
        w.write_record([
            fmt_num(m.lambda.re),
            fmt_num(m.lambda.im),
            fmt_num(m.freq_hz),
            fmt_num(m.damping_ratio),
            m.category.as_str().to_string(),
            s1,
            p1,
            s2,
            p2,
        ])?;
    }
    finish(w)
}

/// `t_s` followed by `<unit>.<quantity>` and `<bus>.v_mag` columns.
pub fn time_series_csv(ts: &TimeSeries) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t_s".to_string()];
    header.extend(ts.column_names());
    w.write_record(&header)?;
    for (k, t) in ts.t.iter().enumerate() {
        let mut rec = vec![fmt_num(*t)];
        rec.extend(ts.row(k).into_iter().map(fmt_num));
        w.write_record(&rec)?;
    }
    finish(w)
}

/// Index of every state, algebraic variable and input of the assembled
/// model, with its equilibrium value.
pub fn catalog_csv(sys: &DynamicSystem) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "index", "name", "equilibrium"])?;
    let eq = sys.equilibrium();
    let groups: [(&str, &[String], &[f64]); 3] = [
        ("state", sys.state_labels(), &eq.x0),
        ("algebraic", sys.algebraic_labels(), &eq.y0),
        ("input", sys.input_labels(), &eq.u0),
    ];
    for (kind, labels, values) in groups {
        for (i, (name, v)) in labels.iter().zip(values).enumerate() {
            w.write_record([kind.to_string(), i.to_string(), name.clone(), fmt_num(*v)])?;
        }
    }
    finish(w)
}
