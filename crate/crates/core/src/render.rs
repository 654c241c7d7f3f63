//! Static SVG figures: polar radar curves, 3-D radar heatmaps and pin views,
//! and design scatter plots.
//!
//! Output is plain SVG 1.1 built with `std::fmt`. Coordinates are written
//! with two decimals so identical inputs give byte-identical documents.
//! Data-bearing elements carry `data-*` attributes (angles, values) so the
//! figures can be checked without rasterizing.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{argument, Result};
use crate::radar::{RadarScan2D, RadarScan3D};

pub const MIN_FIGURE_PX: u32 = 100;

/// p-value thresholds of the heatmap bands, loosest first.
pub const PVALUE_BANDS: [f64; 3] = [0.05, 0.01, 0.001];

/// Camera of the 3-D pin view (degrees).
pub const PIN_AZIMUTH_DEG: f64 = 30.0;
pub const PIN_ELEVATION_DEG: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    #[default]
    Viridis,
    Gray,
}

impl Palette {
    const VIRIDIS: [[u8; 3]; 6] = [
        [68, 1, 84],
        [65, 68, 135],
        [42, 120, 142],
        [34, 168, 132],
        [122, 209, 81],
        [253, 231, 37],
    ];

    /// Color at `x` in `[0, 1]`, as `#rrggbb`.
    pub fn color(self, x: f64) -> String {
        let x = if x.is_finite() {
            x.clamp(0.0, 1.0)
        } else {
            0.0
        };
        let rgb = match self {
            Palette::Gray => {
                let g = (235.0 - 200.0 * x).round() as u8;
                [g, g, g]
            }
            Palette::Viridis => {
                let stops = &Self::VIRIDIS;
                let pos = x * (stops.len() - 1) as f64;
                let i = (pos.floor() as usize).min(stops.len() - 2);
                let w = pos - i as f64;
                let mut c = [0u8; 3];
                for (k, ck) in c.iter_mut().enumerate() {
                    let (a, b) = (stops[i][k] as f64, stops[i + 1][k] as f64);
                    *ck = (a + w * (b - a)).round() as u8;
                }
                c
            }
        };
        format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub theta_deg: f64,
    /// Elevation for 3-D figures; ignored by planar plots.
    pub phi_deg: Option<f64>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub width: u32,
    pub height: u32,
    pub title: String,
    #[serde(default)]
    pub palette: Palette,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

impl Default for FigureSpec {
    fn default() -> Self {
        Self {
            width: 600,
            height: 600,
            title: String::new(),
            palette: Palette::default(),
            annotations: Vec::new(),
        }
    }
}

impl FigureSpec {
    pub fn new(width: u32, height: u32, title: impl Into<String>) -> Result<Self> {
        let spec = Self {
            width,
            height,
            title: title.into(),
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_FIGURE_PX || self.height < MIN_FIGURE_PX {
            return Err(argument(format!(
                "figure must be at least {MIN_FIGURE_PX}x{MIN_FIGURE_PX} px, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMode {
    #[default]
    PvalueLog10,
    Statistic,
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

struct Svg {
    out: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(spec: &FigureSpec) -> Self {
        let mut out = String::new();
        writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
            w = spec.width,
            h = spec.height
        )
        .unwrap();
        writeln!(
            out,
            r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
            spec.width, spec.height
        )
        .unwrap();
        if !spec.title.is_empty() {
            writeln!(
                out,
                r#"<text class="title" x="{:.2}" y="18" font-size="14" text-anchor="middle">{}</text>"#,
                spec.width as f64 / 2.0,
                escape(&spec.title)
            )
            .unwrap();
        }
        Self {
            out,
            width: spec.width as f64,
            height: spec.height as f64,
        }
    }

    fn line(&mut self, s: &str) {
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Top and bottom reserve for the title and tick labels.
const MARGIN: f64 = 30.0;

/// Tick spacing giving 3 to 6 ticks up to `max`.
fn tick_step(max: f64) -> f64 {
    let raw = max / 4.0;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac < 1.5 {
        1.0
    } else if frac < 3.5 {
        2.0
    } else if frac < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Polar radar curve `r = D_N(theta)` with the critical circle and the
/// exceedance arcs drawn over the curve.
pub fn plot_radar2d(scan: &RadarScan2D, spec: &FigureSpec) -> Result<String> {
    spec.validate()?;
    let mut svg = Svg::new(spec);
    let (cx, cy) = (svg.width / 2.0, svg.height / 2.0 + 6.0);
    let radius_px = (svg.width.min(svg.height) / 2.0 - MARGIN).max(10.0);
    let rmax = scan
        .values
        .iter()
        .copied()
        .fold(scan.critical, f64::max)
        .max(f64::MIN_POSITIVE)
        * 1.1;
    let scale = radius_px / rmax;
    let point = |theta_deg: f64, r: f64| {
        let t = theta_deg.to_radians();
        (cx + r * scale * t.cos(), cy - r * scale * t.sin())
    };

    // radial ticks
    let step = tick_step(rmax);
    let mut k = 1;
    while k as f64 * step <= rmax * (1.0 + 1e-9) {
        let r = k as f64 * step;
        svg.line(&format!(
            r##"<circle class="tick" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#dddddd" stroke-width="0.8"/>"##,
            r * scale
        ));
        svg.line(&format!(
            r##"<text class="tick-label" x="{:.2}" y="{:.2}" font-size="9" fill="#666666">{}</text>"##,
            cx + r * scale * std::f64::consts::FRAC_1_SQRT_2 + 2.0,
            cy - r * scale * std::f64::consts::FRAC_1_SQRT_2 - 2.0,
            format_tick(r)
        ));
        k += 1;
    }
    for deg in (0..360).step_by(45) {
        let (x, y) = point(deg as f64, rmax);
        svg.line(&format!(
            r##"<line class="spoke" x1="{cx:.2}" y1="{cy:.2}" x2="{x:.2}" y2="{y:.2}" stroke="#eeeeee" stroke-width="0.8"/>"##
        ));
        let (lx, ly) = point(deg as f64, rmax * 1.06);
        svg.line(&format!(
            r##"<text class="angle-label" x="{lx:.2}" y="{:.2}" font-size="9" text-anchor="middle" fill="#666666">{deg}°</text>"##,
            ly + 3.0
        ));
    }

    svg.line(&format!(
        r##"<circle class="critical" data-value="{:.6}" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#d62728" stroke-width="1.2" stroke-dasharray="5,3"/>"##,
        scan.critical,
        scan.critical * scale
    ));

    let mut d = String::new();
    for (i, (&t, &v)) in scan.theta_deg.iter().zip(&scan.values).enumerate() {
        let (x, y) = point(t, v);
        write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" }).unwrap();
    }
    d.push('Z');
    svg.line(&format!(
        r##"<path class="curve" d="{d}" fill="#1f77b433" stroke="#1f77b4" stroke-width="1.5"/>"##
    ));

    let n = scan.values.len();
    for (start, end) in scan.exceedance_runs() {
        let len = if end >= start {
            end - start + 1
        } else {
            n - start + end + 1
        };
        let mut d = String::new();
        for k in 0..len {
            let i = (start + k) % n;
            let (x, y) = point(scan.theta_deg[i], scan.values[i]);
            write!(d, "{}{x:.2},{y:.2} ", if k == 0 { "M" } else { "L" }).unwrap();
        }
        svg.line(&format!(
            r##"<path class="exceedance" data-theta-start="{:.4}" data-theta-end="{:.4}" d="{}" fill="none" stroke="#d62728" stroke-width="3"/>"##,
            scan.theta_deg[start],
            scan.theta_deg[end],
            d.trim_end()
        ));
    }

    for a in &spec.annotations {
        let v = value_near(scan, a.theta_deg);
        let (x, y) = point(a.theta_deg, v);
        svg.line(&format!(
            r##"<g class="annotation" data-theta="{:.4}"><circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/><text x="{:.2}" y="{:.2}" font-size="10">{}</text></g>"##,
            a.theta_deg,
            x + 5.0,
            y - 5.0,
            escape(&a.label)
        ));
    }
    Ok(svg.finish())
}

fn value_near(scan: &RadarScan2D, theta_deg: f64) -> f64 {
    let target = theta_deg.rem_euclid(360.0);
    let dist = |t: f64| {
        let d = (t - target).abs();
        d.min(360.0 - d)
    };
    let mut best = 0;
    for (i, &t) in scan.theta_deg.iter().enumerate() {
        if dist(t) < dist(scan.theta_deg[best]) {
            best = i;
        }
    }
    scan.values[best]
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Value shown for a cell: `-log10 p` or the statistic itself.
pub fn heatmap_value(scan: &RadarScan3D, i: usize, j: usize, mode: HeatmapMode) -> f64 {
    match mode {
        HeatmapMode::Statistic => scan.values[i][j],
        HeatmapMode::PvalueLog10 => -scan.p_values[i][j].max(1e-300).log10(),
    }
}

/// Number of `PVALUE_BANDS` a p-value falls below.
pub fn pvalue_band(p: f64) -> usize {
    PVALUE_BANDS.iter().filter(|&&b| p < b).count()
}

/// `(theta, phi)` heatmap with a color legend spanning the data range and
/// the maximum annotated. Cells in the tightest p-value band are outlined.
pub fn plot_radar3d_heatmap(
    scan: &RadarScan3D,
    spec: &FigureSpec,
    mode: HeatmapMode,
) -> Result<String> {
    spec.validate()?;
    let (nt, np) = (scan.theta_deg.len(), scan.phi_deg.len());
    if nt == 0 || np == 0 {
        return Err(argument("empty 3-D scan"));
    }
    let mut svg = Svg::new(spec);
    let legend_w = 70.0;
    let (x0, y0) = (40.0, MARGIN);
    let plot_w = (svg.width - x0 - legend_w - 10.0).max(10.0);
    let plot_h = (svg.height - y0 - MARGIN).max(10.0);
    let (cw, ch) = (plot_w / nt as f64, plot_h / np as f64);

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut best = (0, 0);
    for i in 0..nt {
        for j in 0..np {
            let v = heatmap_value(scan, i, j, mode);
            lo = lo.min(v);
            if v > hi {
                hi = v;
                best = (i, j);
            }
        }
    }
    let span = if hi > lo { hi - lo } else { 1.0 };

    // rows top to bottom: largest phi first
    let cell_x = |i: usize| x0 + i as f64 * cw;
    let cell_y = |j: usize| y0 + (np - 1 - j) as f64 * ch;
    svg.line(r#"<g class="cells" shape-rendering="crispEdges">"#);
    for i in 0..nt {
        for j in 0..np {
            let v = heatmap_value(scan, i, j, mode);
            let band = pvalue_band(scan.p_values[i][j]);
            let outline = if band == PVALUE_BANDS.len() {
                r##" stroke="#ff0000" stroke-width="0.6""##
            } else {
                ""
            };
            svg.line(&format!(
                r#"<rect class="cell" data-theta="{}" data-phi="{}" data-value="{:.6e}" data-band="{band}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"{outline}/>"#,
                scan.theta_deg[i],
                scan.phi_deg[j],
                v,
                cell_x(i),
                cell_y(j),
                cw,
                ch,
                spec.palette.color((v - lo) / span)
            ));
        }
    }
    svg.line("</g>");

    for deg in (0..=360).step_by(90) {
        let x = x0 + plot_w * deg as f64 / 360.0;
        svg.line(&format!(
            r#"<text class="axis-label" x="{x:.2}" y="{:.2}" font-size="9" text-anchor="middle">{deg}°</text>"#,
            y0 + plot_h + 12.0
        ));
    }
    for deg in [-90i32, -45, 0, 45, 90] {
        let y = y0 + plot_h * (90.0 - deg as f64) / 180.0;
        svg.line(&format!(
            r#"<text class="axis-label" x="{:.2}" y="{:.2}" font-size="9" text-anchor="end">{deg}°</text>"#,
            x0 - 3.0,
            y + 3.0
        ));
    }

    // legend
    let lx = x0 + plot_w + 15.0;
    let steps = 32;
    let lh = plot_h / steps as f64;
    svg.line(&format!(
        r#"<g class="legend" data-min="{lo:.6e}" data-max="{hi:.6e}" data-mode="{}">"#,
        match mode {
            HeatmapMode::PvalueLog10 => "pvalue_log10",
            HeatmapMode::Statistic => "statistic",
        }
    ));
    for k in 0..steps {
        let frac = 1.0 - (k as f64 + 0.5) / steps as f64;
        svg.line(&format!(
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="{:.2}" fill="{}"/>"#,
            y0 + k as f64 * lh,
            lh + 0.05,
            spec.palette.color(frac)
        ));
    }
    svg.line(&format!(
        r#"<text class="legend-max" x="{:.2}" y="{:.2}" font-size="9">{}</text>"#,
        lx + 17.0,
        y0 + 8.0,
        format_tick(hi)
    ));
    svg.line(&format!(
        r#"<text class="legend-min" x="{:.2}" y="{:.2}" font-size="9">{}</text>"#,
        lx + 17.0,
        y0 + plot_h,
        format_tick(lo)
    ));
    svg.line("</g>");

    let (bi, bj) = best;
    let (mx, my) = (cell_x(bi) + cw / 2.0, cell_y(bj) + ch / 2.0);
    svg.line(&format!(
        r#"<g class="max-marker" data-theta="{}" data-phi="{}" data-value="{:.6e}"><circle cx="{mx:.2}" cy="{my:.2}" r="5" fill="none" stroke="white" stroke-width="1.5"/><text x="{:.2}" y="{:.2}" font-size="10" fill="black">max ({}°, {}°)</text></g>"#,
        scan.theta_deg[bi],
        scan.phi_deg[bj],
        hi,
        (mx + 7.0).min(x0 + plot_w - 70.0),
        (my - 7.0).max(y0 + 10.0),
        scan.theta_deg[bi],
        scan.phi_deg[bj]
    ));

    for a in &spec.annotations {
        let phi = a.phi_deg.unwrap_or(0.0);
        let x = x0 + plot_w * a.theta_deg.rem_euclid(360.0) / 360.0;
        let y = y0 + plot_h * (90.0 - phi.clamp(-90.0, 90.0)) / 180.0;
        svg.line(&format!(
            r#"<g class="annotation" data-theta="{:.4}" data-phi="{phi:.4}"><circle cx="{x:.2}" cy="{y:.2}" r="3" fill="white" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="10">{}</text></g>"#,
            a.theta_deg,
            x + 5.0,
            y - 5.0,
            escape(&a.label)
        ));
    }
    Ok(svg.finish())
}

/// Orthographic projection of `v` for the fixed pin-view camera; returns
/// screen `(right, up)` coordinates.
pub fn pin_camera(v: [f64; 3]) -> (f64, f64) {
    let (sa, ca) = PIN_AZIMUTH_DEG.to_radians().sin_cos();
    let (se, ce) = PIN_ELEVATION_DEG.to_radians().sin_cos();
    let right = -sa * v[0] + ca * v[1];
    let up = -se * ca * v[0] - se * sa * v[1] + ce * v[2];
    (right, up)
}

/// 3-D "pins": one segment from the origin along each scanned direction with
/// length `D_N(theta, phi)`, plus the outline of the critical sphere.
pub fn plot_radar3d_pins(scan: &RadarScan3D, spec: &FigureSpec) -> Result<String> {
    spec.validate()?;
    let mut svg = Svg::new(spec);
    let (cx, cy) = (svg.width / 2.0, svg.height / 2.0 + 6.0);
    let radius_px = (svg.width.min(svg.height) / 2.0 - MARGIN).max(10.0);
    let rmax = scan
        .values
        .iter()
        .flatten()
        .copied()
        .fold(scan.critical, f64::max)
        .max(f64::MIN_POSITIVE)
        * 1.05;
    let scale = radius_px / rmax;
    let screen = |v: [f64; 3]| {
        let (r, u) = pin_camera(v);
        (cx + r * scale, cy - u * scale)
    };
    for (axis, name) in [
        ([1.0, 0.0, 0.0], "x"),
        ([0.0, 1.0, 0.0], "y"),
        ([0.0, 0.0, 1.0], "z"),
    ] {
        let (x, y) = screen([axis[0] * rmax, axis[1] * rmax, axis[2] * rmax]);
        svg.line(&format!(
            r##"<line class="axis" x1="{cx:.2}" y1="{cy:.2}" x2="{x:.2}" y2="{y:.2}" stroke="#999999" stroke-width="0.8"/><text x="{x:.2}" y="{y:.2}" font-size="10" fill="#666666">{name}</text>"##
        ));
    }
    svg.line(&format!(
        r##"<circle class="critical" data-value="{:.6}" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#d62728" stroke-width="1" stroke-dasharray="5,3"/>"##,
        scan.critical,
        scan.critical * scale
    ));
    svg.line(r#"<g class="pins">"#);
    for (i, &t) in scan.theta_deg.iter().enumerate() {
        for (j, &p) in scan.phi_deg.iter().enumerate() {
            let v = scan.values[i][j];
            let (tr, pr) = (t.to_radians(), p.to_radians());
            let dir = [pr.cos() * tr.cos(), pr.cos() * tr.sin(), pr.sin()];
            let (x, y) = screen([dir[0] * v, dir[1] * v, dir[2] * v]);
            let color = if v > scan.critical {
                "#d62728"
            } else {
                "#1f77b4"
            };
            svg.line(&format!(
                r#"<line class="pin" data-theta="{t}" data-phi="{p}" x1="{cx:.2}" y1="{cy:.2}" x2="{x:.2}" y2="{y:.2}" stroke="{color}" stroke-width="0.5" stroke-opacity="0.6"/>"#
            ));
        }
    }
    svg.line("</g>");
    Ok(svg.finish())
}

/// Scatter of a 2-D design inside the square border.
pub fn plot_design2d(design: &Design, spec: &FigureSpec) -> Result<String> {
    spec.validate()?;
    if design.dim() != 2 {
        return Err(argument(format!(
            "plot_design2d needs a 2-D design, got d = {}",
            design.dim()
        )));
    }
    let mut svg = Svg::new(spec);
    let side = (svg.width.min(svg.height) - 2.0 * MARGIN).max(10.0);
    let (x0, y0) = ((svg.width - side) / 2.0, (svg.height - side) / 2.0 + 6.0);
    svg.line(&format!(
        r#"<rect class="domain" x="{x0:.2}" y="{y0:.2}" width="{side:.2}" height="{side:.2}" fill="none" stroke="black" stroke-width="1"/>"#
    ));
    svg.line(r#"<g class="points">"#);
    for p in design.rows() {
        let x = x0 + (p[0] + 1.0) / 2.0 * side;
        let y = y0 + (1.0 - p[1]) / 2.0 * side;
        svg.line(&format!(
            r#"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="2" fill="black"/>"#
        ));
    }
    svg.line("</g>");
    Ok(svg.finish())
}
