//! Minimal deterministic SVG line plots. No timestamps, no external state:
//! identical inputs produce byte-identical files.

/// One polyline series plus optional marked points.
pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<(&'a str, Vec<(f64, f64)>)>,
    pub marks: Vec<(f64, f64)>,
    pub log_log: bool,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub fn render(plot: &Plot) -> String {
    let tx = |v: f64| if plot.log_log { v.max(1e-300).log10() } else { v };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (_, pts) in &plot.series {
        for &(x, y) in pts {
            if x.is_finite() && y.is_finite() {
                xs.push(tx(x));
                ys.push(tx(y));
            }
        }
    }
    for &(x, y) in &plot.marks {
        xs.push(tx(x));
        ys.push(tx(y));
    }
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let sx = move |x: f64| MARGIN + (tx(x) - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = move |y: f64| H - MARGIN - (tx(y) - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        plot.title
    ));
    // Axes.
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        H - 16.0,
        plot.x_label
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        plot.y_label
    ));
    // Axis range labels.
    for (v, x, y, anchor) in [
        (x0, MARGIN, H - MARGIN + 16.0, "middle"),
        (x1, W - MARGIN, H - MARGIN + 16.0, "middle"),
        (y0, MARGIN - 6.0, H - MARGIN, "end"),
        (y1, MARGIN - 6.0, MARGIN + 4.0, "end"),
    ] {
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-size=\"10\" text-anchor=\"{anchor}\">{v:.4}</text>\n"
        ));
    }

    for (k, (name, pts)) in plot.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut path = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            path.push_str(if i == 0 { "M" } else { "L" });
            path.push_str(&format!("{:.2} {:.2} ", sx(x), sy(y)));
        }
        out.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.trim_end()
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{name}</text>\n",
            W - MARGIN - 140.0,
            MARGIN + 16.0 * (k as f64 + 1.0)
        ));
    }
    for &(x, y) in &plot.marks {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"none\" stroke=\"#d62728\" \
             stroke-width=\"1.5\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn span(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
