use robustline::metrics::LineFit;
use robustline::report::{points_csv, render_svg, scatter_svg, ScatterPoint, ScatterSeries, SvgOptions};

fn pts(xy: &[(f64, f64)]) -> Vec<ScatterPoint> {
    xy.iter()
        .enumerate()
        .map(|(i, &(x, y))| ScatterPoint {
            x,
            y,
            model_id: format!("m{i}"),
            param_count: 1000 * (i + 1),
        })
        .collect()
}

/// `(x1, y1, x2, y2)` of the first `<line>` carrying `class`.
fn line_coords(svg: &str, class: &str) -> [f64; 4] {
    let tag = svg
        .lines()
        .find(|l| l.contains("<line") && l.contains(&format!("class=\"{class}\"")))
        .unwrap_or_else(|| panic!("no {class} line"));
    ["x1", "y1", "x2", "y2"].map(|a| {
        let start = tag.find(&format!(" {a}=\"")).unwrap() + a.len() + 3;
        let len = tag[start..].find('"').unwrap();
        tag[start..start + len].parse().unwrap()
    })
}

#[test]
fn fit_on_the_diagonal_coincides_with_reference() {
    let s = ScatterSeries::new("clean", pts(&[(0.2, 0.2), (0.5, 0.5), (0.8, 0.8)]));
    let svg = render_svg(&[s], &SvgOptions::default()).unwrap();
    let diag = line_coords(&svg, "diagonal");
    let fit = line_coords(&svg, "fit");
    for (a, b) in diag.iter().zip(&fit) {
        assert!((a - b).abs() <= 1.0, "{diag:?} vs {fit:?}");
    }
}

#[test]
fn each_series_gets_its_own_glyph() {
    let a = ScatterSeries::new("clean", pts(&[(0.9, 0.5), (0.8, 0.4)]));
    let b = ScatterSeries::new("env_imp", pts(&[(0.9, 0.7), (0.85, 0.6)]));
    let svg = render_svg(&[a, b], &SvgOptions::default()).unwrap();
    let glyphs: std::collections::BTreeSet<&str> = svg
        .match_indices("class=\"marker glyph-")
        .map(|(i, _)| {
            let rest = &svg[i + 20..];
            &rest[..rest.find('"').unwrap()]
        })
        .collect();
    assert_eq!(glyphs.len(), 2);
    assert!(svg.contains("generator: robustline"));
    assert!(svg.contains("clean accuracy") && svg.contains("OOD accuracy"));
}

#[test]
fn sibling_csv_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let series = [
        ScatterSeries::new("clean", pts(&[(0.9, 0.5), (0.8, 0.4), (0.7, 0.3)])),
        ScatterSeries::new("env_imp", pts(&[(0.9, 0.7), (0.85, 0.6)])),
    ];
    let path = dir.path().join("fig.svg");
    let csv = scatter_svg(&series, &path, &SvgOptions::default()).unwrap();
    assert_eq!(csv, dir.path().join("fig.csv"));
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["series", "model_id", "param_count", "x", "y"]);
    assert_eq!(rdr.records().count(), 5);
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("<svg"));
}

#[test]
fn fit_presence_follows_line_fit() {
    assert!(ScatterSeries::new("a", pts(&[(0.5, 0.1)])).fit.is_none());
    assert!(ScatterSeries::new("a", pts(&[(0.5, 0.1), (0.5, 0.3)])).fit.is_none());
    let s = ScatterSeries::new("a", pts(&[(0.5, 0.1), (0.7, 0.3)]));
    let LineFit { slope, .. } = s.fit.unwrap();
    assert!((slope - 1.0).abs() < 1e-12);
}

#[test]
fn empty_input_and_bad_path_fail() {
    assert!(render_svg(&[], &SvgOptions::default()).is_err());
    assert!(render_svg(&[ScatterSeries::new("a", vec![])], &SvgOptions::default()).is_err());
    let s = [ScatterSeries::new("a", pts(&[(0.5, 0.1)]))];
    assert!(scatter_svg(&s, std::path::Path::new("/nonexistent/dir/f.svg"), &SvgOptions::default()).is_err());
    assert_eq!(points_csv(&s).unwrap().lines().count(), 2);
}
