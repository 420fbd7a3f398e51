//! Minimal SVG heatmap writer for confusion matrices: shaded rects plus
//! text labels, no plotting dependency.

use std::fmt::Write;

use lqe_core::evaluate::ConfusionMatrix;
use lqe_core::featurize::LinkClass;

const CELL: f64 = 110.0;
const MARGIN_LEFT: f64 = 120.0;
const MARGIN_TOP: f64 = 70.0;

/// Column-normalized heatmap (each actual class sums to one down its
/// column), darker diagonal = better classifier.
pub fn confusion_heatmap(cm: &ConfusionMatrix) -> String {
    let width = MARGIN_LEFT + 3.0 * CELL + 40.0;
    let height = MARGIN_TOP + 3.0 * CELL + 60.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"##
    );
    let _ = writeln!(
        out,
        r##"<rect width="{width}" height="{height}" fill="white"/>
<text x="{x}" y="28" font-family="sans-serif" font-size="16" text-anchor="middle">Confusion matrix (column-normalized)</text>
<text x="{x}" y="50" font-family="sans-serif" font-size="12" text-anchor="middle" fill="#555">columns: actual class, rows: predicted class</text>"##,
        x = MARGIN_LEFT + 1.5 * CELL
    );

    let column_totals: Vec<u64> = LinkClass::ALL
        .iter()
        .map(|&actual| {
            LinkClass::ALL
                .iter()
                .map(|&p| cm.count(p, actual))
                .sum()
        })
        .collect();

    for (row, predicted) in LinkClass::ALL.into_iter().enumerate() {
        let y = MARGIN_TOP + row as f64 * CELL;
        let _ = writeln!(
            out,
            r##"<text x="{tx}" y="{ty}" font-family="sans-serif" font-size="13" text-anchor="end">{predicted}</text>"##,
            tx = MARGIN_LEFT - 10.0,
            ty = y + CELL / 2.0 + 4.0
        );
        for (col, actual) in LinkClass::ALL.into_iter().enumerate() {
            let x = MARGIN_LEFT + col as f64 * CELL;
            let count = cm.count(predicted, actual);
            let fraction = if column_totals[col] == 0 {
                0.0
            } else {
                count as f64 / column_totals[col] as f64
            };
            // white through a deep blue
            let shade = (255.0 - fraction * 195.0) as u8;
            let fill = format!("rgb({},{},255)", shade, shade);
            let text_color = if fraction > 0.55 { "white" } else { "black" };
            let _ = writeln!(
                out,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#888"/>
<text x="{cx}" y="{cy}" font-family="sans-serif" font-size="15" text-anchor="middle" fill="{text_color}">{pct:.1}%</text>
<text x="{cx}" y="{cy2}" font-family="sans-serif" font-size="11" text-anchor="middle" fill="{text_color}">{count}</text>"##,
                cx = x + CELL / 2.0,
                cy = y + CELL / 2.0 - 2.0,
                cy2 = y + CELL / 2.0 + 16.0,
                pct = fraction * 100.0,
            );
        }
    }
    for (col, actual) in LinkClass::ALL.into_iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<text x="{tx}" y="{ty}" font-family="sans-serif" font-size="13" text-anchor="middle">{actual}</text>"##,
            tx = MARGIN_LEFT + col as f64 * CELL + CELL / 2.0,
            ty = MARGIN_TOP + 3.0 * CELL + 24.0
        );
    }
    out.push_str("</svg>\n");
    out
}
