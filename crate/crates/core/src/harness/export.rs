use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::{AggregateResult, Curve, CurveStats, SweepRow};
use crate::error::{Error, Result};

pub const CURVE_HEADER: [&str; 4] = ["algorithm", "step", "mean_regret", "band_halfwidth"];
pub const SWEEP_HEADER: [&str; 5] = ["algorithm", "d_star", "alpha", "mean_terminal_regret", "band_halfwidth"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Plot,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "plot" => Ok(Format::Plot),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

fn metadata_lines(result: &AggregateResult) -> String {
    let seeds: Vec<String> = result.seeds.iter().map(u64::to_string).collect();
    format!(
        "# config_hash={}\n# seeds={}\n",
        result.config_hash,
        seeds.join(",")
    )
}

/// CSV text: metadata comments, then the curve table, or the sweep table
/// when the result holds sweep rows.
pub fn render_table(result: &AggregateResult) -> Result<String> {
    let mut out = metadata_lines(result);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Table(e.to_string());
    if result.sweep.is_empty() {
        w.write_record(CURVE_HEADER).map_err(csv_err)?;
        for c in &result.curves {
            for (t, (m, b)) in c.stats.mean.iter().zip(&c.stats.band).enumerate() {
                w.write_record([
                    c.algorithm.clone(),
                    (t + 1).to_string(),
                    m.to_string(),
                    b.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    } else {
        w.write_record(SWEEP_HEADER).map_err(csv_err)?;
        for r in &result.sweep {
            w.write_record([
                r.algorithm.clone(),
                r.d_star.to_string(),
                r.alpha.to_string(),
                r.mean_terminal_regret.to_string(),
                r.band_halfwidth.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let body = w.into_inner().map_err(|e| Error::Table(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Table(e.to_string()))?);
    Ok(out)
}

fn parse<T: FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Table(format!("bad {what} {field:?}")))
}

/// Inverse of [`render_table`].
pub fn parse_table(text: &str) -> Result<AggregateResult> {
    let mut result = AggregateResult::default();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let meta = line.trim_start_matches('#').trim();
        if let Some(h) = meta.strip_prefix("config_hash=") {
            result.config_hash = h.to_string();
        } else if let Some(s) = meta.strip_prefix("seeds=") {
            result.seeds = s
                .split(',')
                .filter(|x| !x.is_empty())
                .map(|x| parse(x, "seed"))
                .collect::<Result<_>>()?;
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::Table(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let sweep = if header == CURVE_HEADER {
        false
    } else if header == SWEEP_HEADER {
        true
    } else {
        return Err(Error::Table(format!("unexpected header {header:?}")));
    };
    for record in r.records() {
        let rec = record.map_err(|e| Error::Table(e.to_string()))?;
        let algorithm = rec[0].to_string();
        if sweep {
            result.sweep.push(SweepRow {
                algorithm,
                d_star: parse(&rec[1], "d_star")?,
                alpha: parse(&rec[2], "alpha")?,
                mean_terminal_regret: parse(&rec[3], "mean")?,
                band_halfwidth: parse(&rec[4], "band")?,
            });
            continue;
        }
        let step: usize = parse(&rec[1], "step")?;
        let idx = match result.curves.iter().position(|c| c.algorithm == algorithm) {
            Some(i) => i,
            None => {
                result.curves.push(Curve {
                    algorithm,
                    stats: CurveStats {
                        mean: Vec::new(),
                        band: Vec::new(),
                    },
                });
                result.curves.len() - 1
            }
        };
        let stats = &mut result.curves[idx].stats;
        if step != stats.mean.len() + 1 {
            return Err(Error::Table(format!("step {step} out of order")));
        }
        stats.mean.push(parse(&rec[2], "mean")?);
        stats.band.push(parse(&rec[3], "band")?);
    }
    Ok(result)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Series<'a> {
    name: &'a str,
    x: Vec<f64>,
    y: Vec<f64>,
    band: Vec<f64>,
}

fn series_of(result: &AggregateResult) -> (Vec<Series<'_>>, &'static str, &'static str) {
    if result.sweep.is_empty() {
        let s = result
            .curves
            .iter()
            .map(|c| Series {
                name: &c.algorithm,
                x: (1..=c.stats.mean.len()).map(|t| t as f64).collect(),
                y: c.stats.mean.clone(),
                band: c.stats.band.clone(),
            })
            .collect();
        (s, "step", "cumulative regret")
    } else {
        let mut s: Vec<Series<'_>> = Vec::new();
        for r in &result.sweep {
            let i = match s.iter().position(|x| x.name == r.algorithm) {
                Some(i) => i,
                None => {
                    s.push(Series {
                        name: &r.algorithm,
                        x: Vec::new(),
                        y: Vec::new(),
                        band: Vec::new(),
                    });
                    s.len() - 1
                }
            };
            s[i].x.push(r.alpha);
            s[i].y.push(r.mean_terminal_regret);
            s[i].band.push(r.band_halfwidth);
        }
        (s, "hardness level alpha", "terminal regret")
    }
}

/// SVG document: one shaded band and one curve per algorithm.
pub fn render_plot(result: &AggregateResult) -> String {
    let (series, x_label, y_label) = series_of(result);
    let xs = series.iter().flat_map(|s| s.x.iter().copied());
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ys = series
        .iter()
        .flat_map(|s| s.y.iter().zip(&s.band).flat_map(|(y, b)| [y - b, y + b]));
    let (y_min, y_max) = ys.fold((0.0f64, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (x_min, x_max) = if x_min < x_max { (x_min, x_max) } else { (x_min.min(0.0), x_min.max(0.0) + 1.0) };
    let y_max = if y_max > y_min { y_max } else { y_min + 1.0 };
    let px = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, "<!-- config_hash={} -->", result.config_hash);
    let _ = writeln!(svg, "<metadata>config_hash={}</metadata>", result.config_hash);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 15 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (v, anchor) in [(x_min, "start"), (x_max, "end")] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}" font-size="11">{v:.3}</text>"#,
            px(v),
            y0 + 15.0
        );
    }
    for v in [y_min, y_max] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{v:.1}</text>"#,
            x0 - 5.0,
            py(v)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = s.x.iter().zip(&s.y).zip(&s.band).map(|((x, y), b)| (px(*x), py(y + b)));
        let lower = s.x.iter().zip(&s.y).zip(&s.band).rev().map(|((x, y), b)| (px(*x), py(y - b)));
        let band: Vec<String> = upper.chain(lower).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let line: Vec<String> = s
            .x
            .iter()
            .zip(&s.y)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="band" data-algorithm="{}" fill="{color}" fill-opacity="0.2" stroke="none" points="{}"/>"#,
            s.name,
            band.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<polyline class="curve" data-algorithm="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            s.name,
            line.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{}</text>"#,
            x0 + 10.0,
            y1 + 15.0 * (i as f64 + 1.0),
            s.name
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `result` to `path`; refuses to replace an existing file unless `force`.
pub fn write_results(result: &AggregateResult, format: Format, path: &Path, force: bool) -> Result<PathBuf> {
    if path.exists() && !force {
        return Err(Error::WouldOverwrite(path.to_path_buf()));
    }
    let text = match format {
        Format::Table => render_table(result)?,
        Format::Plot => render_plot(result),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

pub fn read_table(path: &Path) -> Result<AggregateResult> {
    parse_table(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AggregateResult {
        AggregateResult {
            config_hash: "abc123".into(),
            seeds: vec![7, 8],
            curves: vec![
                Curve {
                    algorithm: "linucb++".into(),
                    stats: CurveStats {
                        mean: vec![0.1, 0.30000000000000004, 1.0 / 3.0],
                        band: vec![0.0, 0.2, 1e-17],
                    },
                },
                Curve {
                    algorithm: "linucb".into(),
                    stats: CurveStats {
                        mean: vec![0.2, 0.4, 0.9],
                        band: vec![0.0, 0.1, 0.3],
                    },
                },
            ],
            sweep: Vec::new(),
        }
    }

    #[test]
    fn table_round_trip() {
        let r = sample();
        let text = render_table(&r).unwrap();
        assert!(text.contains("algorithm,step,mean_regret,band_halfwidth\n"));
        assert!(text.starts_with("# config_hash=abc123\n"));
        assert_eq!(parse_table(&text).unwrap(), r);
    }

    #[test]
    fn sweep_round_trip_and_empty_sweep() {
        let r = AggregateResult {
            config_hash: "h".into(),
            seeds: vec![1],
            curves: Vec::new(),
            sweep: vec![SweepRow {
                algorithm: "linucb".into(),
                d_star: 5,
                alpha: 0.2055,
                mean_terminal_regret: 12.5,
                band_halfwidth: 0.0,
            }],
        };
        let text = render_table(&r).unwrap();
        assert!(text.contains("algorithm,d_star,alpha,mean_terminal_regret,band_halfwidth\n"));
        assert_eq!(parse_table(&text).unwrap(), r);

        let empty = AggregateResult {
            config_hash: "h".into(),
            ..Default::default()
        };
        let text = render_table(&empty).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec!["algorithm,step,mean_regret,band_halfwidth"]);
        assert_eq!(parse_table(&text).unwrap(), empty);
    }

    #[test]
    fn plot_has_one_curve_per_algorithm() {
        let svg = render_plot(&sample());
        assert_eq!(svg.matches(r#"class="curve""#).count(), 2);
        assert_eq!(svg.matches(r#"class="band""#).count(), 2);
        assert!(svg.contains("config_hash=abc123"));
        assert!(svg.contains(">step<") && svg.contains(">cumulative regret<"));
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_results(&sample(), Format::Table, &path, false).unwrap();
        let err = write_results(&sample(), Format::Table, &path, false).unwrap_err();
        assert!(matches!(err, Error::WouldOverwrite(_)));
        write_results(&sample(), Format::Table, &path, true).unwrap();
        assert_eq!(read_table(&path).unwrap(), sample());
    }

    #[test]
    fn rejects_foreign_tables() {
        assert!(parse_table("a,b\n1,2\n").is_err());
        assert!(parse_table("algorithm,step,mean_regret,band_halfwidth\nx,2,0,0\n").is_err());
    }
}
