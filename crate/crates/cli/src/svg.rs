//! SVG figures of a fitted code with `p = 1`.
//!
//! Cells are computed in the data plane `x = (x₁, x₂)`: the image of the
//! domain box (two parabolic arcs and two vertical segments) is clipped by
//! each facet half-plane. The hyperbolic view carries every vertex through
//! `x ↦ (x₁, √V(x))`, the horomap image in upper half-plane coordinates,
//! where the straight facets become the semicircles and vertical lines of
//! the code file.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write;

use hypersmml_core::{u_from_theta, xi_from_theta, HyperbolicPlane, NaturalParam};

use crate::codefile::{CodeFile, FacetRecord};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Affine,
    Hyperbolic,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;
const CURVE_SAMPLES: usize = 256;
const EDGE_SAMPLES: usize = 48;
const PALETTE: [&str; 8] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
];

type Pt = [f64; 2];

struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(lo: Pt, hi: Pt, equal_axes: bool) -> Self {
        let mut sx = (WIDTH - 2.0 * MARGIN) / (hi[0] - lo[0]);
        let mut sy = (HEIGHT - 2.0 * MARGIN) / (hi[1] - lo[1]);
        if equal_axes {
            sx = sx.min(sy);
            sy = sx;
        }
        let width = (hi[0] - lo[0]) * sx + 2.0 * MARGIN;
        let height = (hi[1] - lo[1]) * sy + 2.0 * MARGIN;
        Frame {
            x0: lo[0],
            y0: lo[1],
            sx,
            sy,
            width,
            height,
        }
    }

    fn map(&self, p: Pt) -> Pt {
        [
            MARGIN + (p[0] - self.x0) * self.sx,
            self.height - MARGIN - (p[1] - self.y0) * self.sy,
        ]
    }
}

fn clip(poly: &[Pt], a: [f64; 2], b: f64) -> Vec<Pt> {
    let f = |p: &Pt| a[0] * p[0] + a[1] * p[1] + b;
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let (fp, fq) = (f(&p), f(&q));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp <= 0.0) != (fq <= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Boundary of `{ξ(u) : u ∈ box}` traversed counter-clockwise.
fn domain_outline(lo: Pt, hi: Pt) -> Vec<Pt> {
    let along = |h: f64, from: f64, to: f64| {
        (0..=CURVE_SAMPLES).map(move |k| {
            let u1 = from + (to - from) * k as f64 / CURVE_SAMPLES as f64;
            [u1, u1 * u1 + h * h / 2.0]
        })
    };
    let mut pts: Vec<Pt> = along(lo[1], lo[0], hi[0]).collect();
    pts.extend(along(hi[1], hi[0], lo[0]));
    pts
}

fn densify(poly: &[Pt]) -> Vec<Pt> {
    let mut out = Vec::with_capacity(poly.len() * EDGE_SAMPLES);
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        for s in 0..EDGE_SAMPLES {
            let t = s as f64 / EDGE_SAMPLES as f64;
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn to_half_plane(x: Pt) -> Pt {
    [x[0], (x[1] - x[0] * x[0]).max(0.0).sqrt()]
}

fn path_data(frame: &Frame, poly: &[Pt]) -> String {
    let mut d = String::new();
    for (k, p) in poly.iter().enumerate() {
        let [x, y] = frame.map(*p);
        let _ = write!(d, "{}{x:.3},{y:.3} ", if k == 0 { "M" } else { "L" });
    }
    if !d.is_empty() {
        d.push('Z');
    }
    d
}

struct Scores {
    thetas: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl Scores {
    fn new(file: &CodeFile) -> Self {
        let n = file.n as f64;
        let offsets = file
            .assertions
            .iter()
            .zip(&file.coding_probs)
            .map(|(t, q)| {
                // -log q + log Z(θ) for p = 1
                let log_z = -n / 2.0 * (-2.0 * t[1]).ln() - t[0] * t[0] / (4.0 * t[1]);
                -q.ln() + log_z
            })
            .collect();
        Scores {
            thetas: file.assertions.clone(),
            offsets,
        }
    }

    fn lambda(&self, i: usize, x: Pt) -> f64 {
        self.offsets[i] - self.thetas[i][0] * x[0] - self.thetas[i][1] * x[1]
    }

    /// Whether `i` and `j` both attain the minimum score at `x`.
    fn on_boundary(&self, i: usize, j: usize, x: Pt) -> bool {
        let best = (0..self.thetas.len())
            .map(|k| self.lambda(k, x))
            .fold(f64::INFINITY, f64::min);
        let slack = 1e-9 * (1.0 + best.abs());
        self.lambda(i, x) <= best + slack && self.lambda(j, x) <= best + slack
    }
}

/// Maximal runs of consecutive `true` indices.
fn runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, &f) in flags.iter().chain(std::iter::once(&false)).enumerate() {
        match (f, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Last point of `[inside, outside]` where `keep` still holds, to
/// bisection precision.
fn bisect(mut inside: f64, mut outside: f64, keep: &dyn Fn(f64) -> bool) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if keep(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Sub-intervals of `[t0, t1]` on which `keep` holds, located on a grid and
/// sharpened by bisection.
fn kept_intervals(t0: f64, t1: f64, keep: &dyn Fn(f64) -> bool) -> Vec<(f64, f64)> {
    const SAMPLES: usize = 1440;
    let ts: Vec<f64> = (0..=SAMPLES)
        .map(|k| t0 + (t1 - t0) * k as f64 / SAMPLES as f64)
        .collect();
    let flags: Vec<bool> = ts.iter().map(|&t| keep(t)).collect();
    runs(&flags)
        .into_iter()
        .map(|(s, e)| {
            let a = if s > 0 {
                bisect(ts[s], ts[s - 1], keep)
            } else {
                ts[s]
            };
            let b = if e < SAMPLES {
                bisect(ts[e], ts[e + 1], keep)
            } else {
                ts[e]
            };
            (a, b)
        })
        .collect()
}

fn hyperbolic_boundary(
    out: &mut String,
    frame: &Frame,
    facet: &FacetRecord,
    scores: &Scores,
    lo: Pt,
    hi: Pt,
) -> CliResult<()> {
    let Some(record) = &facet.hyperbolic else {
        return Ok(());
    };
    let plane = record.to_plane()?;
    let [i, j] = facet.cells;
    let keep = |u: Pt| {
        let inside = u[0] >= lo[0] && u[0] <= hi[0] && u[1] >= lo[1] && u[1] <= hi[1];
        // the data point whose horomap image is u
        inside && scores.on_boundary(i, j, [u[0], u[0] * u[0] + u[1] * u[1]])
    };
    match plane {
        HyperbolicPlane::Sphere { center, radius } => {
            let at = |phi: f64| [center[0] + radius * phi.cos(), radius * phi.sin()];
            for (a, b) in kept_intervals(0.0, PI, &|phi| keep(at(phi))) {
                let [x1, y1] = frame.map(at(a));
                let [x2, y2] = frame.map(at(b));
                let r = radius * frame.sx;
                let _ = writeln!(
                    out,
                    r#"    <path class="boundary" data-cells="{i} {j}" d="M{x1:.3},{y1:.3} A{r:.3},{r:.3} 0 0 0 {x2:.3},{y2:.3}"/>"#
                );
            }
        }
        HyperbolicPlane::Vertical { normal, offset } => {
            let at = |y: f64| [offset / normal[0], y];
            for (a, b) in kept_intervals(lo[1], hi[1], &|y| keep(at(y))) {
                let [x1, y1] = frame.map(at(a));
                let [x2, y2] = frame.map(at(b));
                let _ = writeln!(
                    out,
                    r#"    <line class="boundary" data-cells="{i} {j}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#
                );
            }
        }
    }
    Ok(())
}

/// Renders `file` as an SVG document.
pub fn render(file: &CodeFile, view: View) -> CliResult<String> {
    if file.p != 1 {
        return Err(CliError::Model(hypersmml_core::Error::Unsupported(
            format!("plots need p = 1, the code has p = {}", file.p),
        )));
    }
    let code = file.to_code()?;
    let (lo, hi): (Pt, Pt) = (
        [file.domain.lower[0], file.domain.lower[1]],
        [file.domain.upper[0], file.domain.upper[1]],
    );
    let outline = domain_outline(lo, hi);
    let scores = Scores::new(file);
    let cells: Vec<Vec<Pt>> = (0..file.m)
        .map(|i| {
            let mut poly = outline.clone();
            for j in (0..file.m).filter(|&j| j != i) {
                let a = [
                    file.assertions[j][0] - file.assertions[i][0],
                    file.assertions[j][1] - file.assertions[i][1],
                ];
                let b = scores.offsets[i] - scores.offsets[j];
                poly = clip(&poly, a, b);
                if poly.is_empty() {
                    break;
                }
            }
            poly
        })
        .collect();

    let (frame, shapes): (Frame, Vec<Vec<Pt>>) = match view {
        View::Affine => {
            let x2_lo = if lo[0] <= 0.0 && hi[0] >= 0.0 {
                0.0
            } else {
                lo[0].abs().min(hi[0].abs()).powi(2)
            };
            let x2_hi = lo[0].abs().max(hi[0].abs()).powi(2) + hi[1] * hi[1] / 2.0;
            (
                Frame::new([lo[0], x2_lo], [hi[0], x2_hi], false),
                cells.clone(),
            )
        }
        View::Hyperbolic => {
            let frame = Frame::new(
                [lo[0], lo[1] * FRAC_1_SQRT_2],
                [hi[0], hi[1] * FRAC_1_SQRT_2],
                true,
            );
            let mapped = cells
                .iter()
                .map(|c| densify(c).into_iter().map(to_half_plane).collect())
                .collect();
            (frame, mapped)
        }
    };

    let mut out = String::new();
    let (w, h) = (frame.width, frame.height);
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(
        out,
        r#"  <style>.cell {{ stroke: #333; stroke-width: 0.6; }} .boundary {{ fill: none; stroke: #000; stroke-width: 1.5; }} .parabola {{ fill: none; stroke: #b00; stroke-dasharray: 4 3; }} .assertion {{ fill: #000; }}</style>"#
    );
    let _ = writeln!(
        out,
        r#"  <defs><clipPath id="view"><rect x="{m:.3}" y="{m:.3}" width="{cw:.3}" height="{ch:.3}"/></clipPath></defs>"#,
        m = MARGIN,
        cw = w - 2.0 * MARGIN,
        ch = h - 2.0 * MARGIN
    );
    let title = match view {
        View::Affine => "data space",
        View::Hyperbolic => "upper half-plane",
    };
    let _ = writeln!(
        out,
        r#"  <text x="{MARGIN:.0}" y="{:.0}" font-family="sans-serif" font-size="13">m = {}, n = {}, {title}, I1 = {:.6} nats</text>"#,
        MARGIN * 0.6,
        file.m,
        file.n,
        file.i1_nats
    );

    let _ = writeln!(out, r#"  <g class="cells">"#);
    for (i, shape) in shapes.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"    <path class="cell" data-index="{i}" fill="{}" d="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            path_data(&frame, shape)
        );
    }
    let _ = writeln!(out, "  </g>");

    let _ = writeln!(out, r#"  <g class="boundaries" clip-path="url(#view)">"#);
    match view {
        View::Hyperbolic => {
            let view_lo = [lo[0], lo[1] * FRAC_1_SQRT_2];
            let view_hi = [hi[0], hi[1] * FRAC_1_SQRT_2];
            for facet in &file.facets {
                hyperbolic_boundary(&mut out, &frame, facet, &scores, view_lo, view_hi)?;
            }
        }
        View::Affine => {
            let parabola: Vec<Pt> = (0..=CURVE_SAMPLES)
                .map(|k| {
                    let x1 = lo[0] + (hi[0] - lo[0]) * k as f64 / CURVE_SAMPLES as f64;
                    [x1, x1 * x1]
                })
                .collect();
            let mut d = path_data(&frame, &parabola);
            d.pop();
            let _ = writeln!(out, r#"    <path class="parabola" d="{}"/>"#, d.trim_end());
        }
    }
    let _ = writeln!(out, "  </g>");

    let _ = writeln!(out, r#"  <g class="assertions" clip-path="url(#view)">"#);
    for (i, theta) in code.assertions().iter().enumerate() {
        let at = assertion_position(theta, file.n, view);
        let [x, y] = frame.map(at);
        let _ = writeln!(
            out,
            r#"    <circle class="assertion" data-index="{i}" cx="{x:.3}" cy="{y:.3}" r="3"/>"#
        );
    }
    let _ = writeln!(out, "  </g>");
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

/// `ξ(θ)` in the data plane, or its horomap image `η(u(θ))` in the half-plane.
fn assertion_position(theta: &NaturalParam, n: usize, view: View) -> Pt {
    match view {
        View::Affine => {
            let xi = xi_from_theta(theta, n);
            [xi.as_vector()[0], xi.as_vector()[1]]
        }
        View::Hyperbolic => {
            let u = u_from_theta(theta, n);
            [u.as_vector()[0], u.height() * FRAC_1_SQRT_2]
        }
    }
}
