//! Density-curve output for prior sets: CSV rows and a self-contained
//! SVG with one polyline per prior. Informative priors draw in blues,
//! non-informative ones in reds, so the two families are visually
//! distinct at a glance.

use coxprior::priors::PriorKind;

pub struct Series {
    pub label: String,
    pub kind: PriorKind,
    pub points: Vec<(f64, f64)>,
}

const INFORMATIVE_COLORS: [&str; 3] = ["#1b4f9c", "#2f7fd1", "#7db4e8"];
const NONINFORMATIVE_COLORS: [&str; 3] = ["#b03a2e", "#e74c3c", "#f1948a"];

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn render_csv(series: &[Series]) -> String {
    let mut out = String::from("prior_label,hr,density\n");
    for s in series {
        let label = csv_field(&s.label);
        for &(hr, density) in &s.points {
            out.push_str(&format!("{label},{hr},{density}\n"));
        }
    }
    out
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions at a 1/2/2.5/5 times power-of-ten step covering
/// [lo, hi] with about `target` intervals.
fn ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let mut marks = Vec::new();
    let mut k = (lo / step).ceil();
    while k * step <= hi + step * 1e-9 {
        marks.push(k * step);
        k += 1.0;
    }
    (marks, decimals)
}

fn color_for(kind: PriorKind, index_within_kind: usize) -> &'static str {
    let palette = match kind {
        PriorKind::Informative => INFORMATIVE_COLORS,
        PriorKind::NonInformative => NONINFORMATIVE_COLORS,
    };
    palette[index_within_kind % palette.len()]
}

pub fn render_svg(series: &[Series]) -> String {
    const WIDTH: f64 = 880.0;
    const HEIGHT: f64 = 520.0;
    const X0: f64 = 64.0;
    const X1: f64 = 620.0;
    const Y0: f64 = 48.0;
    const Y1: f64 = 462.0;

    let mut hr_lo = f64::INFINITY;
    let mut hr_hi = f64::NEG_INFINITY;
    let mut density_hi: f64 = 0.0;
    for s in series {
        for &(hr, density) in &s.points {
            hr_lo = hr_lo.min(hr);
            hr_hi = hr_hi.max(hr);
            density_hi = density_hi.max(density);
        }
    }
    if !(hr_lo.is_finite() && hr_hi > hr_lo) {
        hr_lo = 0.0;
        hr_hi = 1.0;
    }
    if density_hi <= 0.0 {
        density_hi = 1.0;
    }
    let y_top = density_hi * 1.05;
    let x_of = |hr: f64| X0 + (hr - hr_lo) / (hr_hi - hr_lo) * (X1 - X0);
    let y_of = |density: f64| Y1 - density / y_top * (Y1 - Y0);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n\
         <text x=\"{:.1}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\" fill=\"#222222\">\
         Prior densities on the hazard ratio</text>\n",
        (X0 + X1) / 2.0
    );

    let (x_marks, x_decimals) = ticks(hr_lo, hr_hi, 6);
    for mark in &x_marks {
        let x = x_of(*mark);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{Y1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#bbbbbb\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" \
             fill=\"#222222\">{mark:.x_decimals$}</text>\n",
            Y1 + 5.0,
            Y1 + 20.0
        ));
    }
    let (y_marks, y_decimals) = ticks(0.0, y_top, 5);
    for mark in &y_marks {
        let y = y_of(*mark);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{X0}\" y2=\"{y:.1}\" stroke=\"#bbbbbb\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"12\" \
             fill=\"#222222\">{mark:.y_decimals$}</text>\n",
            X0 - 5.0,
            X0 - 9.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{X0}\" y1=\"{Y1}\" x2=\"{X1}\" y2=\"{Y1}\" stroke=\"#222222\"/>\n\
         <line x1=\"{X0}\" y1=\"{Y0}\" x2=\"{X0}\" y2=\"{Y1}\" stroke=\"#222222\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\" \
         fill=\"#222222\">hazard ratio</text>\n\
         <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\" fill=\"#222222\" \
         transform=\"rotate(-90 18 {:.1})\">density</text>\n",
        (X0 + X1) / 2.0,
        Y1 + 42.0,
        (Y0 + Y1) / 2.0,
        (Y0 + Y1) / 2.0
    ));

    let mut informative_seen = 0;
    let mut noninformative_seen = 0;
    let mut legend_y = Y0 + 22.0;
    for s in series {
        let index = match s.kind {
            PriorKind::Informative => {
                informative_seen += 1;
                informative_seen - 1
            }
            PriorKind::NonInformative => {
                noninformative_seen += 1;
                noninformative_seen - 1
            }
        };
        let color = color_for(s.kind, index);
        let mut path = String::new();
        for &(hr, density) in &s.points {
            path.push_str(&format!("{:.2},{:.2} ", x_of(hr), y_of(density)));
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.trim_end()
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{legend_y:.1}\" x2=\"{:.1}\" y2=\"{legend_y:.1}\" \
             stroke=\"{color}\" stroke-width=\"3\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#222222\">{}</text>\n",
            X1 + 18.0,
            X1 + 48.0,
            X1 + 56.0,
            legend_y + 4.0,
            escape_xml(&s.label)
        ));
        legend_y += 22.0;
    }
    svg.push_str("</svg>\n");
    svg
}
