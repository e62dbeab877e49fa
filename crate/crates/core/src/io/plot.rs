//! Static SVG line plots with deterministic output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::blowup::BlowupCertificate;
use crate::error::{Error, Result};
use crate::io::TimeSeriesRow;
use crate::picard::IterationTrace;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const PLOT_W: f64 = 540.0;
const PLOT_H: f64 = 300.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Vertical line at `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        Some((lo - pad, hi + pad))
    } else {
        let pad = 0.05 * (hi - lo);
        Some((lo - pad, hi + pad))
    }
}

impl LinePlot {
    fn plotted(&self) -> Vec<(usize, Vec<(f64, f64)>)> {
        self.series
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let pts = s
                    .points
                    .iter()
                    .filter(|(x, y)| x.is_finite() && y.is_finite() && (!self.log_y || *y > 0.0))
                    .map(|&(x, y)| (x, if self.log_y { y.log10() } else { y }))
                    .collect();
                (i, pts)
            })
            .collect()
    }

    pub fn render(&self) -> Result<String> {
        let data = self.plotted();
        let all: Vec<(f64, f64)> = data.iter().flat_map(|d| d.1.iter().copied()).collect();
        if all.is_empty() {
            return Err(Error::NoData(format!("plot '{}' has no finite points", self.title)));
        }
        let markers: Vec<&Marker> = self.markers.iter().filter(|m| m.x.is_finite()).collect();
        let (x0, x1) = range(all.iter().map(|p| p.0).chain(markers.iter().map(|m| m.x))).expect("non-empty");
        let (y0, y1) = range(all.iter().map(|p| p.1)).expect("non-empty");
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * PLOT_W;
        let py = |y: f64| TOP + PLOT_H - (y - y0) / (y1 - y0) * PLOT_H;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<g class="plot-area" data-x0="{x0:e}" data-x1="{x1:e}" data-y0="{y0:e}" data-y1="{y1:e}" data-log-y="{}" data-left="{LEFT}" data-top="{TOP}" data-width="{PLOT_W}" data-height="{PLOT_H}">"#,
            self.log_y
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let ylab = if self.log_y { format!("1e{fy:.1}") } else { format!("{fy:.3e}") };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{fx:.3}</text>"#,
                px(fx),
                TOP + PLOT_H + 16.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{ylab}</text>"#,
                LEFT - 6.0,
                py(fy) + 4.0
            );
        }
        for (i, pts) in &data {
            if pts.is_empty() {
                continue;
            }
            let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.4},{:.4}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="series" data-label="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                escape(&self.series[*i].label),
                COLORS[i % COLORS.len()],
                coords.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
                LEFT + 8.0,
                TOP + 14.0 + 14.0 * *i as f64,
                COLORS[i % COLORS.len()],
                escape(&self.series[*i].label)
            );
        }
        for m in markers {
            let x = px(m.x);
            let _ = writeln!(
                s,
                r##"<line class="marker" data-x="{:e}" x1="{x:.4}" y1="{TOP}" x2="{x:.4}" y2="{}" stroke="#555" stroke-dasharray="5,4"/>"##,
                m.x,
                TOP + PLOT_H
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
                x + 3.0,
                TOP + PLOT_H - 6.0,
                escape(&m.label)
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            LEFT + PLOT_W / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + PLOT_H / 2.0,
            TOP + PLOT_H / 2.0,
            escape(&self.y_label)
        );
        s.push_str("</svg>\n");
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()?)?;
        Ok(())
    }
}

fn marker(x: Option<f64>, label: &str) -> Vec<Marker> {
    x.map(|x| Marker {
        x,
        label: label.to_string(),
    })
    .into_iter()
    .collect()
}

pub fn moment_plot(rows: &[TimeSeriesRow], cert: &BlowupCertificate) -> LinePlot {
    LinePlot {
        title: "Second moment over B0".into(),
        x_label: "t".into(),
        y_label: "M(t)".into(),
        log_y: false,
        series: vec![Series {
            label: "M(t)".into(),
            points: rows.iter().filter_map(|r| r.second_moment.map(|m| (r.t, m))).collect(),
        }],
        markers: marker(cert.t_moment, "T_moment"),
    }
}

pub fn gradient_plot(rows: &[TimeSeriesRow], cert: &BlowupCertificate) -> LinePlot {
    let (t, label) = match (cert.t_damped, cert.t_burgers) {
        (Some(t), _) => (Some(t), "t_damped"),
        (None, t) => (t, "t_burgers"),
    };
    LinePlot {
        title: "Velocity gradient".into(),
        x_label: "t".into(),
        y_label: "max |grad u|".into(),
        log_y: true,
        series: vec![Series {
            label: "max |grad u|".into(),
            points: rows.iter().map(|r| (r.t, r.max_grad_u)).collect(),
        }],
        markers: marker(t, label),
    }
}

pub fn radiation_plot(rows: &[TimeSeriesRow], cert: &BlowupCertificate) -> LinePlot {
    LinePlot {
        title: "Radiation deviation from equilibrium in B0".into(),
        x_label: "t".into(),
        y_label: "sup |I - B|".into(),
        log_y: true,
        series: vec![Series {
            label: "sup |I - B|".into(),
            points: rows.iter().map(|r| (r.t, r.rad_dev_b0)).collect(),
        }],
        markers: marker(cert.t_c, "T_c"),
    }
}

pub fn picard_plot(trace: &IterationTrace) -> LinePlot {
    LinePlot {
        title: "Picard differences".into(),
        x_label: "k".into(),
        y_label: "|X(k+1) - X(k)|".into(),
        log_y: true,
        series: vec![Series {
            label: "combined".into(),
            points: trace.records().iter().map(|r| (r.k as f64, r.combined())).collect(),
        }],
        markers: Vec::new(),
    }
}

/// Writes every plot that has data; an empty time series is an error.
pub fn emit_plots(
    dir: &Path,
    rows: &[TimeSeriesRow],
    cert: &BlowupCertificate,
    trace: Option<&IterationTrace>,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(trace) = trace {
        let p = dir.join("picard.svg");
        picard_plot(trace).save(&p)?;
        written.push(p);
    }
    if rows.is_empty() {
        if written.is_empty() {
            return Err(Error::NoData("empty time series".into()));
        }
        return Ok(written);
    }
    let plots = [
        ("moment.svg", moment_plot(rows, cert)),
        ("gradient.svg", gradient_plot(rows, cert)),
        ("radiation.svg", radiation_plot(rows, cert)),
    ];
    for (name, plot) in plots {
        match plot.render() {
            Ok(svg) => {
                let p = dir.join(name);
                std::fs::write(&p, svg)?;
                written.push(p);
            }
            Err(Error::NoData(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> LinePlot {
        LinePlot {
            title: "a < b".into(),
            x_label: "t".into(),
            y_label: "y".into(),
            log_y: false,
            series: vec![Series {
                label: "s".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)],
            }],
            markers: vec![Marker {
                x: 1.5,
                label: "m".into(),
            }],
        }
    }

    #[test]
    fn rendering_is_deterministic_and_escaped() {
        let a = demo().render().unwrap();
        assert_eq!(a, demo().render().unwrap());
        assert!(a.contains("a &lt; b"));
        assert!(a.contains(r#"class="marker" data-x="1.5e0""#));
    }

    #[test]
    fn empty_plot_is_no_data() {
        let mut p = demo();
        p.series[0].points.clear();
        assert!(matches!(p.render(), Err(Error::NoData(_))));
        p.series[0].points = vec![(0.0, -1.0)];
        p.log_y = true;
        assert!(matches!(p.render(), Err(Error::NoData(_))));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_plots(dir.path(), &[], &BlowupCertificate::default(), None),
            Err(Error::NoData(_))
        ));
    }
}
