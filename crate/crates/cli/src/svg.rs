use std::fmt::Write as _;

use torusnf::estimator::StabilityCurve;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

/// Log-log plot of `T` against `ρ0`, with a dashed marker wherever the optimal
/// order changes.
pub fn stability_plot(curve: &StabilityCurve, title: &str) -> String {
    let pts: Vec<(f64, f64)> = curve
        .rows
        .iter()
        .filter(|r| r.t.is_finite() && r.t > 0.0)
        .map(|r| (r.rho0.log10(), r.t.log10()))
        .collect();
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"14\" text-anchor=\"middle\">{}</text>", W / 2.0, escape(title));
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }

    let (x0, x1) = decade_range(pts.iter().map(|p| p.0));
    let (y0, y1) = decade_range(pts.iter().map(|p| p.1));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    let xstep = tick_step(x1 - x0);
    let mut d = x0;
    while d <= x1 + 1e-9 {
        let x = px(d);
        let _ = writeln!(s, "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">1e{}</text>", H - BOTTOM + 18.0, d as i64);
        d += xstep;
    }
    let ystep = tick_step(y1 - y0);
    let mut d = y0;
    while d <= y1 + 1e-9 {
        let y = py(d);
        let _ = writeln!(s, "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/>", LEFT - 5.0);
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{}</text>", LEFT - 8.0, y + 4.0, d as i64);
        d += ystep;
    }
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">rho0</text>", (LEFT + W - RIGHT) / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{0:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.2})\">T</text>",
        (TOP + H - BOTTOM) / 2.0
    );

    for (rho0, from, to) in curve.slope_changes() {
        let x = px(rho0.log10());
        let _ = writeln!(
            s,
            "<line class=\"slope-change\" x1=\"{x:.2}\" y1=\"{TOP}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>",
            H - BOTTOM
        );
        let _ = writeln!(
            s,
            "<text class=\"slope-change\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" fill=\"gray\">r {from}-&gt;{to}</text>",
            x + 2.0,
            TOP + 10.0
        );
    }

    s.push_str("<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"");
    for (i, (x, y)) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.2},{:.2}", px(*x), py(*y));
    }
    s.push_str("\"/>\n</svg>\n");
    s
}

fn decade_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn tick_step(span: f64) -> f64 {
    (span / 8.0).ceil().max(1.0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
