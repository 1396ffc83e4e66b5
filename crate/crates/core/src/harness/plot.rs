use std::fmt::Write;

use super::summary::SweepSummary;

const W: f64 = 640.0;
const H: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log plot of median excess risk against `n`, one series per mixing
/// level, with the fitted power laws dashed.
pub fn sweep_svg(summary: &SweepSummary) -> String {
    let pts: Vec<(f64, f64)> = summary
        .cells
        .iter()
        .filter(|c| c.median > 0.0)
        .map(|c| ((c.cell.n as f64).log10(), c.median.log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if pts.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}">no positive medians</text></svg>"#, W / 2.0 - 60.0, H / 2.0);
        return svg;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let _ = writeln!(
        svg,
        r#"<path d="M{} {} H{} M{} {} V{}" stroke="black" fill="none"/>"#,
        MARGIN,
        H - MARGIN,
        W - MARGIN,
        MARGIN,
        H - MARGIN,
        MARGIN
    );
    for e in x0 as i32..=x1 as i32 {
        let x = px(e as f64);
        let _ = writeln!(svg, r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#, H - MARGIN, H - MARGIN + 5.0);
        let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="middle">1e{e}</text>"#, H - MARGIN + 20.0);
    }
    for e in y0 as i32..=y1 as i32 {
        let y = py(e as f64);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y}" x2="{MARGIN}" y2="{y}" stroke="black"/>"#, MARGIN - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">1e{e}</text>"#, MARGIN - 8.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">median excess risk</text>"#,
        H / 2.0,
        H / 2.0
    );

    for (i, lf) in summary.fits.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let series: Vec<(f64, f64)> = summary
            .cells
            .iter()
            .filter(|c| c.cell.mixing_level == lf.mixing_level && c.median > 0.0)
            .map(|c| ((c.cell.n as f64).log10(), c.median.log10()))
            .collect();
        for &(x, y) in &series {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{colour}"/>"#, px(x), py(y));
        }
        let mut label = format!("level {}", lf.mixing_level);
        if let Some(fit) = &lf.fit {
            let line = |x: f64| (fit.log_constant + fit.exponent * x * std::f64::consts::LN_10) / std::f64::consts::LN_10;
            let (a, b) = (series.first().map_or(x0, |p| p.0), series.last().map_or(x1, |p| p.0));
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}" stroke-dasharray="5,4"/>"#,
                px(a),
                py(line(a)),
                px(b),
                py(line(b))
            );
            let _ = write!(label, ": slope {:.3}, R² {:.3}", fit.exponent, fit.r_squared);
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{colour}">{label}</text>"#,
            W - MARGIN - 230.0,
            MARGIN + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
