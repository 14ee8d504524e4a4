use std::fmt::Write as _;

use crate::compromise::ARule;
use crate::risk::RiskTable;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 45.0;

/// Dotted for the two extremes, dashed for the threshold rules, solid otherwise.
fn dash(rule: &ARule) -> &'static str {
    match rule {
        ARule::Narrow | ARule::Wide => "2,4",
        ARule::PreTest { .. } | ARule::LimitedTranslation { .. } => "8,5",
        _ => "none",
    }
}

const COLOURS: [&str; 8] = ["#1b1b1b", "#555555", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Line plot of every curve. The vertical range follows the bounded curves,
/// so the unbounded narrow risk is clipped.
pub fn risk_svg(table: &RiskTable, estimand: Option<&str>) -> String {
    let a_max = table.a_grid.last().copied().unwrap_or(1.0).max(1e-9);
    let bounded: Vec<_> = table.curves.iter().filter(|c| c.rule != ARule::Narrow).collect();
    let source = if bounded.is_empty() { table.curves.iter().collect() } else { bounded };
    let y_top = source.iter().flat_map(|c| c.values.iter().copied()).fold(0.0f64, f64::max) * 1.1;
    let y_max = if y_top > 0.0 { y_top } else { 1.0 };
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |a: f64| LEFT + pw * a / a_max;
    let py = |r: f64| TOP + ph * (1.0 - r / y_max);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#);
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=5 {
        let a = a_max * i as f64 / 5.0;
        let r = y_max * i as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{a:.1}</text>"#, px(a), H - BOTTOM + 16.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{r:.2}</text>"#, LEFT - 6.0, py(r) + 4.0);
    }
    let ylabel = match estimand {
        Some(e) => format!("risk of {e}"),
        None => "R(a)".into(),
    };
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">a</text>"#, LEFT + pw / 2.0, H - 8.0);
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{ylabel}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0);

    for (k, c) in table.curves.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let pts: Vec<String> =
            table.a_grid.iter().zip(&c.values).map(|(&a, &r)| format!("{:.2},{:.2}", px(a), py(r))).collect();
        let _ = writeln!(
            s,
            r#"<polyline clip-path="url(#plot)" fill="none" stroke="{colour}" stroke-width="1.6" stroke-dasharray="{}" points="{}"/>"#,
            dash(&c.rule),
            pts.join(" ")
        );
        let ly = TOP + 16.0 * (k as f64 + 1.0);
        let lx = W - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="1.6" stroke-dasharray="{}"/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            dash(&c.rule),
            lx + 30.0,
            ly + 4.0,
            c.rule.column()
        );
    }
    s.push_str("</svg>\n");
    s
}
