use std::fmt::Write;

use ndarray::Array2;

/// Geometry and shading of one heatmap cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
    /// `weight / max weight`, 0 when every weight is 0.
    pub shade: f64,
    /// Grey level of the fill, 255 for white; nonincreasing in `shade`.
    pub grey: u8,
}

const CELL: usize = 48;
const MARGIN: usize = 140;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub(crate) fn cells(weights: &Array2<f64>) -> Vec<HeatmapCell> {
    let max = weights.iter().cloned().fold(0.0, f64::max);
    weights
        .indexed_iter()
        .map(|((row, col), &weight)| {
            let shade = if max > 0.0 { weight / max } else { 0.0 };
            HeatmapCell {
                row,
                col,
                weight,
                shade,
                grey: (255.0 * (1.0 - shade)).round() as u8,
            }
        })
        .collect()
}

/// Self-contained SVG of a weight matrix. Row `a` (vertical axis) is the
/// source process and column `b` the target, so cell `(a, b)` shows
/// `W[a][b]`. Darker means larger. Cells carry `data-row`, `data-col`,
/// `data-weight` and `data-shade` attributes.
pub fn render_heatmap(labels: &[String], weights: &Array2<f64>) -> String {
    let k = labels.len();
    let size = MARGIN + k * CELL + 20;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="14" text-anchor="middle">target</text>"#,
        MARGIN + k * CELL / 2
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">source</text>"#,
        y = MARGIN + k * CELL / 2
    );
    for (i, label) in labels.iter().enumerate() {
        let label = escape(label);
        let centre = MARGIN + i * CELL + CELL / 2;
        let _ = writeln!(
            svg,
            r#"<text class="row-label" x="{}" y="{}" text-anchor="end" dominant-baseline="middle">{label}</text>"#,
            MARGIN - 6,
            centre
        );
        let _ = writeln!(
            svg,
            r#"<text class="col-label" x="{centre}" y="{y}" text-anchor="start" transform="rotate(-60 {centre} {y})">{label}</text>"#,
            y = MARGIN - 6
        );
    }
    for c in cells(weights) {
        let _ = writeln!(
            svg,
            r##"<rect class="cell" x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({g},{g},{g})" stroke="#999" data-row="{}" data-col="{}" data-weight="{:.6}" data-shade="{:.6}"><title>{} -> {}: {:.6}</title></rect>"##,
            MARGIN + c.col * CELL,
            MARGIN + c.row * CELL,
            c.row,
            c.col,
            c.weight,
            c.shade,
            escape(&labels[c.row]),
            escape(&labels[c.col]),
            c.weight,
            g = c.grey
        );
    }
    svg.push_str("</svg>\n");
    svg
}
