//! Standalone SVG line plots on a fixed 800×500 viewport.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

/// Black first, then blue, as in the usual full/Markovian/memory layout.
pub const PALETTE: [&str; 6] = ["#000000", "#1f4fd1", "#d1261f", "#1e8a3a", "#9b30b5", "#c98a00"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

impl Plot {
    fn transform(&self, y: f64) -> Option<f64> {
        if !y.is_finite() {
            None
        } else if self.log_y {
            (y > 0.0).then(|| y.log10())
        } else {
            Some(y)
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for (&x, &y) in s.x.iter().zip(&s.y) {
                if x.is_finite() {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                }
                if let Some(y) = self.transform(y) {
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            let pad = if y0 == 0.0 { 1.0 } else { 0.5 * y0.abs() };
            if self.log_y {
                y0 -= 1.0;
                y1 += 1.0;
            } else {
                y0 -= pad;
                y1 += pad;
            }
        }
        if self.log_y {
            y0 = y0.floor();
            y1 = y1.ceil();
        }
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="500" viewBox="0 0 800 500" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="800" height="500" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="dimgray"/>"#
        );
        for i in 0..=TICKS {
            let f = i as f64 / TICKS as f64;
            let xv = x0 + f * (x1 - x0);
            let px = sx(xv);
            let _ = writeln!(s, r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="dimgray"/>"#, TOP + ph, TOP + ph + 5.0);
            let _ = writeln!(s, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, TOP + ph + 20.0, tick_label(xv));
        }
        let yticks: Vec<f64> = if self.log_y {
            let step = ((y1 - y0) / TICKS as f64).ceil().max(1.0);
            let mut v = Vec::new();
            let mut e = y0;
            while e <= y1 + 1e-9 {
                v.push(e);
                e += step;
            }
            v
        } else {
            (0..=TICKS).map(|i| y0 + i as f64 / TICKS as f64 * (y1 - y0)).collect()
        };
        for yv in yticks {
            let py = sy(yv);
            let label = if self.log_y { format!("1e{}", yv.round() as i64) } else { tick_label(yv) };
            let _ = writeln!(s, r#"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT:.1}" y2="{py:.1}" stroke="dimgray"/>"#, LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, LEFT - 8.0, py + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            // non-finite or (log scale) non-positive values split the polyline
            let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for (&x, &y) in series.x.iter().zip(&series.y) {
                match self.transform(y) {
                    Some(y) => runs.last_mut().unwrap().push((sx(x), sy(y))),
                    None if runs.last().is_some_and(|r| !r.is_empty()) => runs.push(Vec::new()),
                    None => {}
                }
            }
            for run in runs.iter().filter(|r| !r.is_empty()) {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
            }
            let ly = TOP + 10.0 + 20.0 * i as f64;
            let lx = WIDTH - RIGHT + 15.0;
            let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 25.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(log_y: bool, y: Vec<f64>) -> Plot {
        Plot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_y,
            series: vec![Series { label: "a<b".into(), x: (0..y.len()).map(|i| i as f64).collect(), y }],
        }
    }

    #[test]
    fn fixed_viewport_and_escaping() {
        let s = plot(false, vec![0.0, 1.0, 0.5]).render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains(r#"viewBox="0 0 800 500""#));
        assert!(s.contains("a&lt;b"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }

    #[test]
    fn log_scale_breaks_at_nonpositive() {
        let s = plot(true, vec![1e-3, 1e-2, 0.0, 1e-1, f64::NAN, 1.0]).render();
        assert_eq!(s.matches("<polyline").count(), 3);
        assert!(s.contains(">1e-3<") && s.contains(">1e0<"));
    }

    #[test]
    fn constant_series_renders() {
        let s = plot(false, vec![0.0; 4]).render();
        assert!(!s.contains("NaN"));
        let s = plot(true, vec![f64::NAN; 4]).render();
        assert!(!s.contains("NaN") && !s.contains("<polyline"));
    }
}
