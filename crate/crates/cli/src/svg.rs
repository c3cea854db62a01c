//! Minimal static SVG line charts for learning curves.

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 48.0;

pub fn line_chart(title: &str, x_label: &str, y_label: &str, values: &[f64]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        MARGIN,
        escape(title)
    ));

    let (x0, y0) = (MARGIN, H - MARGIN);
    let (x1, y1) = (W - MARGIN / 2.0, MARGIN);
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"12\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 12 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    ));

    if values.len() >= 2 {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-9);
        let px = |i: usize| x0 + (x1 - x0) * i as f64 / (values.len() - 1) as f64;
        let py = |v: f64| y0 - (y0 - y1) * (v - lo) / span;
        let points: Vec<String> =
            values.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v))).collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{x0}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\">{:.3}</text>\n",
            y1 - 4.0,
            hi
        ));
        out.push_str(&format!(
            "<text x=\"{x0}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\">{:.3}</text>\n",
            y0 + 14.0,
            lo
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
