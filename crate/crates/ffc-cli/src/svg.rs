//! Minimal hand-rolled SVG emission: deterministic text, no dependencies.
//! Every figure is reconstructible from the CSV that accompanies it; the
//! SVG is a convenience view only.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliResult;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        // Degenerate span: pad so the plot stays well defined.
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn x_pixel(v: f64, lo: f64, hi: f64) -> f64 {
    MARGIN + (v - lo) / (hi - lo) * (WIDTH - 2.0 * MARGIN)
}

fn y_pixel(v: f64, lo: f64, hi: f64) -> f64 {
    HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN)
}

fn header(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{title}</text>",
        WIDTH / 2.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">{x_label}</text>",
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    // Plot frame.
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    s
}

fn axis_ticks(s: &mut String, x_range: (f64, f64), y_range: (f64, f64)) {
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x_range.0 + t * (x_range.1 - x_range.0);
        let yv = y_range.0 + t * (y_range.1 - y_range.0);
        let xp = x_pixel(xv, x_range.0, x_range.1);
        let yp = y_pixel(yv, y_range.0, y_range.1);
        let _ = writeln!(
            s,
            "<text x=\"{xp:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{xv:.3}</text>",
            HEIGHT - MARGIN + 16.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{yp:.1}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"end\">{yv:.3}</text>",
            MARGIN - 6.0
        );
    }
}

/// Polyline plot of one or more named series sharing the x grid.
pub fn write_line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    series: &[(&str, &[f64], &str)],
) -> CliResult<()> {
    let x_range = axis_range(xs.iter().copied());
    let y_range = axis_range(series.iter().flat_map(|(_, ys, _)| ys.iter().copied()));
    let mut s = header(title, x_label, y_label);
    axis_ticks(&mut s, x_range, y_range);
    for (i, (name, ys, color)) in series.iter().enumerate() {
        let points: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .map(|(&x, &y)| {
                format!(
                    "{:.2},{:.2}",
                    x_pixel(x, x_range.0, x_range.1),
                    y_pixel(y, y_range.0, y_range.1)
                )
            })
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        );
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>",
            WIDTH - MARGIN - 130.0,
            WIDTH - MARGIN - 110.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{name}</text>",
            WIDTH - MARGIN - 104.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Scatter with per-point radius (normalized onto 3..12 px).
pub fn write_scatter_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64, f64)],
) -> CliResult<()> {
    let x_range = axis_range(points.iter().map(|p| p.0));
    let y_range = axis_range(points.iter().map(|p| p.1));
    let (size_lo, size_hi) = axis_range(points.iter().map(|p| p.2));
    let mut s = header(title, x_label, y_label);
    axis_ticks(&mut s, x_range, y_range);
    for &(x, y, size) in points {
        let r = 3.0 + 9.0 * (size - size_lo) / (size_hi - size_lo);
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r:.2}\" fill=\"steelblue\" \
             fill-opacity=\"0.7\"/>",
            x_pixel(x, x_range.0, x_range.1),
            y_pixel(y, y_range.0, y_range.1)
        );
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_deterministic_and_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.svg");
        let b = dir.path().join("b.svg");
        let xs = [0.0, 0.5, 1.0];
        let ys = [1.0, 0.8, 0.2];
        let series = [("least", &ys[..], "steelblue")];
        write_line_plot(&a, "t", "x", "y", &xs, &series).unwrap();
        write_line_plot(&b, "t", "x", "y", &xs, &series).unwrap();
        let sa = std::fs::read(&a).unwrap();
        assert_eq!(sa, std::fs::read(&b).unwrap());
        let text = String::from_utf8(sa).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("polyline"));
    }

    #[test]
    fn degenerate_ranges_do_not_produce_nan_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.svg");
        let xs = [0.0, 1.0];
        let ys = [1.0, 1.0];
        write_line_plot(&path, "flat", "x", "y", &xs, &[("s", &ys[..], "red")]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("NaN"));
        let scatter = dir.path().join("one.svg");
        write_scatter_plot(&scatter, "one", "x", "y", &[(0.5, 0.5, 1.0)]).unwrap();
        assert!(!std::fs::read_to_string(&scatter).unwrap().contains("NaN"));
    }
}
