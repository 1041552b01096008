//! Static horizontal bar chart of a frequency report.

use std::fmt::Write as _;

use super::FrequencyReport;

const BAR_HEIGHT: usize = 16;
const GAP: usize = 4;
const LABEL_WIDTH: usize = 220;
const PLOT_WIDTH: usize = 480;
const MARGIN: usize = 10;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One bar per row, length proportional to the channel count. Catalog
/// domains are drawn in a second colour.
pub fn bar_chart_svg(report: &FrequencyReport) -> String {
    let n = report.rows.len();
    let height = 2 * MARGIN + 24 + n * (BAR_HEIGHT + GAP);
    let width = 2 * MARGIN + LABEL_WIDTH + PLOT_WIDTH + 60;
    let max = report.rows.iter().map(|r| r.channel_count).max().unwrap_or(0).max(1);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(
        s,
        "  <text x=\"{MARGIN}\" y=\"{}\" font-size=\"13\">Top {} domains by citing channels ({})</text>",
        MARGIN + 12,
        n,
        report.segment
    );
    for (i, r) in report.rows.iter().enumerate() {
        let y = MARGIN + 24 + i * (BAR_HEIGHT + GAP);
        let len = (r.channel_count as f64 / max as f64 * PLOT_WIDTH as f64).round() as usize;
        let fill = if r.is_catalog { "#d62728" } else { "#1f77b4" };
        let x0 = MARGIN + LABEL_WIDTH;
        let _ = writeln!(
            s,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            x0 - 6,
            y + BAR_HEIGHT - 4,
            escape(r.domain.as_str())
        );
        let _ = writeln!(
            s,
            "  <rect x=\"{x0}\" y=\"{y}\" width=\"{len}\" height=\"{BAR_HEIGHT}\" fill=\"{fill}\"/>"
        );
        let _ = writeln!(
            s,
            "  <text x=\"{}\" y=\"{}\">{}</text>",
            x0 + len + 4,
            y + BAR_HEIGHT - 4,
            r.channel_count
        );
    }
    s.push_str("</svg>\n");
    s
}
