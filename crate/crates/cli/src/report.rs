//! Plot data and dot charts from a simulation result table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use factest_core::simulate::{deviation_pct, ColorClass, GridRow, Layout};
use factest_core::Method;

use crate::error::{CliError, CliResult};
use crate::write_atomic;

pub const DOTS_HEADER: &str = "layout,setting,m,alpha,method,scenario_index,label,color_class,color,rate,mc_se";
pub const DEVIATION_HEADER: &str =
    "layout,setting,m,method,scenario_index,label,color_class,deviation_pct_0.05,deviation_pct_0.005";

const HIGH: f64 = 0.05;
const LOW: f64 = 0.005;

/// Rows sharing `(layout, setting, m, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct PanelKey {
    layout: Layout,
    setting: u8,
    m: usize,
    /// Alpha as ordered bits; all alphas are positive.
    alpha_bits: u64,
}

impl PanelKey {
    fn alpha(&self) -> f64 {
        f64::from_bits(self.alpha_bits)
    }
}

fn color_class(label: &str) -> CliResult<ColorClass> {
    ColorClass::from_label(label).ok_or_else(|| CliError::Report(format!("scenario label '{label}' has no colour class")))
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Per-panel dot data: one row per method, one dot per scenario, with a
/// reference line at alpha. Returns the files written.
pub fn dots(rows: &[GridRow], out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(CliError::Report("result table has no rows".into()));
    }
    let mut panels: BTreeMap<PanelKey, BTreeMap<Method, Vec<&GridRow>>> = BTreeMap::new();
    for r in rows {
        let key = PanelKey {
            layout: r.layout,
            setting: r.setting,
            m: r.m,
            alpha_bits: r.alpha.to_bits(),
        };
        panels.entry(key).or_default().entry(r.method).or_default().push(r);
    }
    let mut csv = format!("{DOTS_HEADER}\n");
    let mut written = Vec::new();
    for (key, methods) in &panels {
        let mut chart_rows = Vec::new();
        for (method, scenarios) in methods {
            let mut scenarios = scenarios.clone();
            scenarios.sort_by_key(|r| r.scenario_index);
            let mut dots = Vec::new();
            for r in scenarios {
                let class = color_class(&r.label)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    key.layout,
                    key.setting,
                    key.m,
                    key.alpha(),
                    method,
                    r.scenario_index,
                    quote(&r.label),
                    quote(class.name()),
                    class.color(),
                    r.estimate.rate,
                    r.estimate.mc_se
                );
                dots.push(Dot {
                    x: r.estimate.rate,
                    color: class.color(),
                    title: format!("scenario {}: {}", r.scenario_index, r.label),
                });
            }
            chart_rows.push((method.to_string(), dots));
        }
        let chart = Chart {
            title: format!(
                "{} setting {}, m = {}: type-I error rates at alpha = {}",
                key.layout,
                key.setting,
                key.m,
                key.alpha()
            ),
            x_label: "rejection rate".into(),
            rows: chart_rows,
            references: vec![(key.alpha(), "#444444")],
            legend: ColorClass::ALL.iter().map(|c| (c.name().to_string(), c.color())).collect(),
        };
        let path = out_dir.join(format!(
            "dots_{}_setting{}_m{}_alpha{}.svg",
            key.layout,
            key.setting,
            key.m,
            key.alpha()
        ));
        write_atomic(&path, chart.to_svg().as_bytes())?;
        written.push(path);
    }
    let path = out_dir.join("dots.csv");
    write_atomic(&path, csv.as_bytes())?;
    written.insert(0, path);
    Ok(written)
}

/// Joins the alpha = 0.05 and alpha = 0.005 rows of every cell and emits
/// their deviations `(rate - alpha) * 100`. Every cell needs both levels.
pub fn deviation(rows: &[GridRow], out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(CliError::Report("result table has no rows".into()));
    }
    type CellKey = (Layout, u8, usize, Method, usize);
    let mut cells: BTreeMap<CellKey, (Option<&GridRow>, Option<&GridRow>)> = BTreeMap::new();
    for r in rows {
        let entry = cells
            .entry((r.layout, r.setting, r.m, r.method, r.scenario_index))
            .or_default();
        if r.alpha == HIGH {
            entry.0 = Some(r);
        } else if r.alpha == LOW {
            entry.1 = Some(r);
        }
    }
    let missing: Vec<String> = cells
        .iter()
        .filter_map(|(&(layout, setting, m, method, index), pair)| {
            let absent: Vec<&str> = [(pair.0.is_none(), "0.05"), (pair.1.is_none(), "0.005")]
                .iter()
                .filter(|(gone, _)| *gone)
                .map(|(_, a)| *a)
                .collect();
            (!absent.is_empty()).then(|| {
                format!(
                    "{layout} setting {setting} scenario {index} m={m} {method} (alpha {})",
                    absent.join(" and ")
                )
            })
        })
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Report(format!(
            "deviation mode needs alpha = 0.05 and 0.005 for every cell; missing: {}",
            missing.join("; ")
        )));
    }
    let mut csv = format!("{DEVIATION_HEADER}\n");
    let mut panels: BTreeMap<(Layout, u8, usize), BTreeMap<Method, Vec<Dot>>> = BTreeMap::new();
    for (&(layout, setting, m, method, index), pair) in &cells {
        let (high, low) = (pair.0.unwrap(), pair.1.unwrap());
        let class = color_class(&high.label)?;
        let d_high = deviation_pct(high.estimate.rate, HIGH);
        let d_low = deviation_pct(low.estimate.rate, LOW);
        let _ = writeln!(
            csv,
            "{layout},{setting},{m},{method},{index},{},{},{d_high},{d_low}",
            quote(&high.label),
            quote(class.name())
        );
        let dots = panels.entry((layout, setting, m)).or_default().entry(method).or_default();
        for (x, color, a) in [(d_high, "#d62728", HIGH), (d_low, "#000000", LOW)] {
            dots.push(Dot {
                x,
                color,
                title: format!("scenario {index} at alpha = {a}: {x}%"),
            });
        }
    }
    let mut written = Vec::new();
    for ((layout, setting, m), methods) in panels {
        let chart = Chart {
            title: format!("{layout} setting {setting}, m = {m}: deviation (in percent) from alpha"),
            x_label: "deviation in percent".into(),
            rows: methods.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            references: vec![(0.0, "#444444")],
            legend: vec![("alpha = 0.05".into(), "#d62728"), ("alpha = 0.005".into(), "#000000")],
        };
        let path = out_dir.join(format!("deviation_{layout}_setting{setting}_m{m}.svg"));
        write_atomic(&path, chart.to_svg().as_bytes())?;
        written.push(path);
    }
    let path = out_dir.join("deviation.csv");
    write_atomic(&path, csv.as_bytes())?;
    written.insert(0, path);
    Ok(written)
}

struct Dot {
    x: f64,
    color: &'static str,
    title: String,
}

struct Chart {
    title: String,
    x_label: String,
    rows: Vec<(String, Vec<Dot>)>,
    references: Vec<(f64, &'static str)>,
    legend: Vec<(String, &'static str)>,
}

impl Chart {
    fn to_svg(&self) -> String {
        const LEFT: f64 = 90.0;
        const PLOT_W: f64 = 500.0;
        const TOP: f64 = 40.0;
        const ROW_H: f64 = 24.0;
        let xs = self
            .rows
            .iter()
            .flat_map(|(_, d)| d.iter().map(|d| d.x))
            .chain(self.references.iter().map(|r| r.0));
        let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
        let (lo, hi) = if hi - lo < 1e-9 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
        let pad = 0.05 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let sx = |x: f64| LEFT + (x - lo) / (hi - lo) * PLOT_W;
        let plot_h = ROW_H * self.rows.len() as f64;
        let axis_y = TOP + plot_h + 10.0;
        let height = axis_y + 50.0 + 16.0 * self.legend.len() as f64;
        let width = LEFT + PLOT_W + 30.0;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<text x="{LEFT:.1}" y="20" font-size="13">{}</text>"#, escape(&self.title));
        for &(x, color) in &self.references {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.2}" y1="{TOP:.2}" x2="{0:.2}" y2="{axis_y:.2}" stroke="{color}" stroke-dasharray="4 3"/>"#,
                sx(x)
            );
        }
        for (k, (name, dots)) in self.rows.iter().enumerate() {
            let y = TOP + ROW_H * (k as f64 + 0.5);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 8.0,
                y + 4.0,
                escape(name)
            );
            for d in dots {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{y:.2}" r="4" fill="{}" fill-opacity="0.8"><title>{}</title></circle>"#,
                    sx(d.x),
                    d.color,
                    escape(&d.title)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
            LEFT + PLOT_W
        );
        for t in 0..=4 {
            let v = lo + (hi - lo) * t as f64 / 4.0;
            let x = sx(v);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{axis_y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.4}</text>"#,
                axis_y + 4.0,
                axis_y + 16.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + PLOT_W / 2.0,
            axis_y + 32.0,
            escape(&self.x_label)
        );
        for (k, (name, color)) in self.legend.iter().enumerate() {
            let y = axis_y + 50.0 + 16.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<circle cx="{LEFT:.2}" cy="{:.2}" r="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 4.0,
                LEFT + 10.0,
                y,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
