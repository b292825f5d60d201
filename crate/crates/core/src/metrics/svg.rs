//! Grouped bar charts of a comparison: one latency and one bandwidth panel,
//! a bar group per network and a bar per fabric family.

use std::fmt::Write as _;

use super::{to_f64, ComparisonTable};

const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];
const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(out: &mut String, x0: f64, title: &str, table: &ComparisonTable, values: &[Vec<Option<f64>>]) {
    let top = values.iter().flatten().flatten().copied().fold(1.0_f64, f64::max) * 1.1;
    let _ = writeln!(
        out,
        r#"<g transform="translate({x0},0)"><text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN + PANEL_W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{MARGIN}" y1="30" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        30.0 + PANEL_H,
        MARGIN + PANEL_W,
        30.0 + PANEL_H,
        30.0 + PANEL_H
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="36" text-anchor="end" font-size="10">{top:.1}</text>"#,
        MARGIN - 4.0
    );
    let group_w = PANEL_W / values.len().max(1) as f64;
    let bars = table.groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / bars;
    for (i, (net, vals)) in table.networks.iter().zip(values).enumerate() {
        let gx = MARGIN + group_w * i as f64 + group_w * 0.1;
        for (j, v) in vals.iter().enumerate() {
            let Some(v) = v else { continue };
            let h = v / top * PANEL_H;
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{} {}: {v:.3}</title></rect>"#,
                gx + bar_w * j as f64,
                30.0 + PANEL_H - h,
                bar_w,
                h,
                PALETTE[j % PALETTE.len()],
                escape(net),
                table.groups[j]
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            gx + group_w * 0.4,
            48.0 + PANEL_H,
            escape(net)
        );
    }
    out.push_str("</g>\n");
}

pub fn comparison_svg(table: &ComparisonTable) -> String {
    let latency: Vec<Vec<Option<f64>>> = table
        .networks
        .iter()
        .map(|n| {
            table
                .groups
                .iter()
                .map(|&g| table.best_latency(n, g).map(|l| l as f64))
                .collect()
        })
        .collect();
    let bandwidth: Vec<Vec<Option<f64>>> = table
        .networks
        .iter()
        .map(|n| {
            table
                .groups
                .iter()
                .map(|&g| table.best_bandwidth(n, g).map(to_f64))
                .collect()
        })
        .collect();
    let width = 2.0 * (PANEL_W + 2.0 * MARGIN);
    let height = PANEL_H + 110.0;
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif">"#
    );
    out.push('\n');
    panel(&mut out, 0.0, "Pipeline stage latency [cycles]", table, &latency);
    panel(
        &mut out,
        PANEL_W + 2.0 * MARGIN,
        "Max link bandwidth [C_max bits/T]",
        table,
        &bandwidth,
    );
    for (j, g) in table.groups.iter().enumerate() {
        let x = MARGIN + 90.0 * j as f64;
        let y = height - 20.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{y}" font-size="11">{g}</text>"#,
            y - 10.0,
            PALETTE[j % PALETTE.len()],
            x + 16.0
        );
    }
    out.push_str("</svg>\n");
    out
}
