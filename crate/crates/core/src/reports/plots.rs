use plotters::prelude::*;

use super::ReportError;
use crate::dynamics::UnitOutputs;
use crate::small_signal::{ModalResult, Mode};
use crate::time_domain::TimeSeries;

/// Number of modes annotated on the eigenvalue map.
pub const LABELED_MODES: usize = 5;

const SIZE: (u32, u32) = (900, 600);

fn plot_err<E: std::fmt::Display>(e: E) -> ReportError {
    ReportError::Plot(e.to_string())
}

/// Oscillatory modes with positive frequency, least damped first.
fn least_damped(result: &ModalResult, n: usize) -> Vec<&Mode> {
    let mut modes: Vec<&Mode> = result.modes.iter().filter(|m| m.is_oscillatory() && m.lambda.im > 0.0).collect();
    modes.sort_by(|a, b| a.damping_ratio.total_cmp(&b.damping_ratio).then(a.index.cmp(&b.index)));
    modes.truncate(n);
    modes
}

/// Complex-plane scatter of the spectrum with the right half-plane shaded.
pub fn eigenvalue_map_svg(result: &ModalResult, title: &str) -> Result<String, ReportError> {
    let re_min = result.modes.iter().map(|m| m.lambda.re).fold(-1.0, f64::min) * 1.05;
    let re_max = result.modes.iter().map(|m| m.lambda.re).fold(0.0, f64::max).max(-0.1 * re_min);
    let im_max = result.modes.iter().map(|m| m.lambda.im.abs()).fold(1.0, f64::max) * 1.1;

    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(re_min..re_max, -im_max..im_max)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("real part (1/s)")
            .y_desc("imaginary part (rad/s)")
            .draw()
            .map_err(plot_err)?;

        chart
            .draw_series(std::iter::once(Rectangle::new(
                [(0.0, -im_max), (re_max, im_max)],
                RGBColor(255, 200, 200).mix(0.5).filled(),
            )))
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new([(0.0, -im_max), (0.0, im_max)], BLACK.stroke_width(1)))
            .map_err(plot_err)?;
        chart
            .draw_series(
                result
                    .modes
                    .iter()
                    .map(|m| Cross::new((m.lambda.re, m.lambda.im), 4, BLUE.stroke_width(1))),
            )
            .map_err(plot_err)?;
        // ring and number the least-damped modes; details go in a corner list
        // because these modes tend to sit on top of each other
        let labeled = least_damped(result, LABELED_MODES);
        chart
            .draw_series(labeled.iter().enumerate().map(|(k, m)| {
                EmptyElement::at((m.lambda.re, m.lambda.im))
                    + Circle::new((0, 0), 7, RED.stroke_width(2))
                    + Text::new(format!("{}", k + 1), (10, -18 + 12 * k as i32), ("sans-serif", 12).into_font().color(&RED))
            }))
            .map_err(plot_err)?;
        let corner = (re_min + 0.02 * (re_max - re_min), im_max * 0.95);
        chart
            .draw_series(labeled.iter().enumerate().map(|(k, m)| {
                EmptyElement::at(corner)
                    + Text::new(
                        format!(
                            "{}: {:.4}{:+.4}j  {:.3} Hz  ζ = {:.4}",
                            k + 1,
                            m.lambda.re,
                            m.lambda.im,
                            m.freq_hz,
                            m.damping_ratio
                        ),
                        (0, 16 * k as i32),
                        ("sans-serif", 13),
                    )
            }))
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(out)
}

/// One line per unit for `quantity` (one of [`UnitOutputs::NAMES`]).
pub fn time_series_svg(ts: &TimeSeries, quantity: &str) -> Result<String, ReportError> {
    let q = UnitOutputs::NAMES
        .iter()
        .position(|n| *n == quantity)
        .ok_or_else(|| ReportError::UnknownQuantity(quantity.to_string()))?;
    let series: Vec<Vec<(f64, f64)>> = (0..ts.unit_names.len())
        .map(|k| ts.t.iter().zip(&ts.units).map(|(t, s)| (*t, s[k].values()[q])).collect())
        .collect();
    let (mut lo, mut hi) = series
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9 * hi.abs().max(1.0));
    let t_end = ts.t.last().copied().unwrap_or(1.0).max(1e-9);

    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(quantity, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(80)
            .build_cartesian_2d(0.0..t_end, (lo - pad)..(hi + pad))
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("t (s)").y_desc(quantity).draw().map_err(plot_err)?;
        for (k, pts) in series.into_iter().enumerate() {
            let color = Palette99::pick(k).to_rgba();
            chart
                .draw_series(LineSeries::new(pts, color.stroke_width(2)))
                .map_err(plot_err)?
                .label(ts.unit_names[k].clone())
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(out)
}
