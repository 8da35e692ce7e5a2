use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::nn::format_f64;

pub const METRICS_HEADER: &str =
    "step,return_raw,return_smooth,loss_q1,loss_q2,director_v,actor_j,gamma_d,buf_main,buf_high,buf_low";

/// One evaluation point. Loss and objective columns hold the most recent
/// value reported since the previous evaluation, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub return_raw: f64,
    pub return_smooth: f64,
    pub loss_q1: Option<f64>,
    pub loss_q2: Option<f64>,
    pub director_v: Option<f64>,
    pub actor_j: Option<f64>,
    pub gamma_d: f64,
    pub buf_main: usize,
    pub buf_high: usize,
    pub buf_low: usize,
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            format_f64(self.return_raw),
            format_f64(self.return_smooth),
            opt(self.loss_q1),
            opt(self.loss_q2),
            opt(self.director_v),
            opt(self.actor_j),
            format_f64(self.gamma_d),
            self.buf_main,
            self.buf_high,
            self.buf_low
        )
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(Error::config("metrics", format!("expected 11 fields, found {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::config("metrics", format!("malformed number `{s}`")))
        };
        let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
        let count = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::config("metrics", format!("malformed count `{s}`")))
        };
        Ok(Self {
            step: f[0].parse().map_err(|_| Error::config("metrics", format!("malformed step `{}`", f[0])))?,
            return_raw: num(f[1])?,
            return_smooth: num(f[2])?,
            loss_q1: opt(f[3])?,
            loss_q2: opt(f[4])?,
            director_v: opt(f[5])?,
            actor_j: opt(f[6])?,
            gamma_d: num(f[7])?,
            buf_main: count(f[8])?,
            buf_high: count(f[9])?,
            buf_low: count(f[10])?,
        })
    }
}

/// Trailing moving average: element `i` is the mean of the raw elements
/// `max(0, i + 1 - window) ..= i`.
///
/// # Panics
/// When `window` is zero.
pub fn smooth(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "smoothing window must be at least 1");
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let part = &series[lo..=i];
            part.iter().sum::<f64>() / part.len() as f64
        })
        .collect()
}

/// Writes rows as they arrive and flushes after each one, so a failed run
/// still leaves every completed row on disk.
pub struct MetricsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line(METRICS_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn append(&mut self, row: &MetricsRow) -> Result<()> {
        self.line(&row.to_csv_line())
    }
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = MetricsWriter::create(path)?;
    rows.iter().try_for_each(|r| w.append(r))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::config("metrics", format!("{} lacks the metrics header", path.display())));
    }
    lines.filter(|l| !l.is_empty()).map(MetricsRow::from_csv_line).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(step: u64) -> MetricsRow {
        MetricsRow {
            step,
            return_raw: -123.456,
            return_smooth: 0.1 + 0.2,
            loss_q1: Some(1e-300),
            loss_q2: None,
            director_v: Some(1.5),
            actor_j: None,
            gamma_d: 0.5,
            buf_main: 10,
            buf_high: 3,
            buf_low: 7,
        }
    }

    #[test]
    fn smooth_examples() {
        assert_eq!(smooth(&[0.0, 10.0], 2), vec![0.0, 5.0]);
        assert_eq!(smooth(&[3.0, -1.0, 4.0], 1), vec![3.0, -1.0, 4.0]);
        assert_eq!(smooth(&[2.5; 7], 3), vec![2.5; 7]);
        assert!(smooth(&[], 5).is_empty());
        assert_eq!(smooth(&[1.0, 2.0, 3.0, 4.0], 3), vec![1.0, 1.5, 2.0, 3.0]);
    }

    #[test]
    #[should_panic(expected = "window")]
    fn zero_window_panics() {
        smooth(&[1.0], 0);
    }

    #[test]
    fn csv_line_round_trips_exactly() {
        let r = row(1000);
        let line = r.to_csv_line();
        assert_eq!(line.split(',').count(), METRICS_HEADER.split(',').count());
        assert_eq!(MetricsRow::from_csv_line(&line).unwrap(), r);
        assert!(line.contains(",,"), "absent values are empty fields: {line}");
        assert!(line.contains("3.0000000000000004e-1"), "{line}");
    }

    #[test]
    fn file_round_trip_and_header_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let rows = vec![row(1000), row(2000)];
        write_metrics_csv(&p, &rows).unwrap();
        assert_eq!(read_metrics_csv(&p).unwrap(), rows);
        std::fs::write(&p, "nope\n").unwrap();
        assert!(read_metrics_csv(&p).is_err());
        assert!(MetricsRow::from_csv_line("1,2").is_err());
    }

    proptest! {
        #[test]
        fn smooth_matches_windowed_mean(xs in proptest::collection::vec(-1e3f64..1e3, 0..60), w in 1usize..25) {
            let s = smooth(&xs, w);
            prop_assert_eq!(s.len(), xs.len());
            for i in 0..xs.len() {
                let lo = i.saturating_sub(w - 1);
                let mean = xs[lo..=i].iter().sum::<f64>() / (i - lo + 1) as f64;
                prop_assert!((s[i] - mean).abs() <= 1e-12);
            }
        }

        #[test]
        fn smooth_is_linear(xs in proptest::collection::vec(-1e3f64..1e3, 1..40), ys in proptest::collection::vec(-1e3f64..1e3, 40), a in -3.0f64..3.0, w in 1usize..10) {
            let ys = &ys[..xs.len()];
            let combo: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| a * x + y).collect();
            let lhs = smooth(&combo, w);
            let (sx, sy) = (smooth(&xs, w), smooth(ys, w));
            for i in 0..xs.len() {
                prop_assert!((lhs[i] - (a * sx[i] + sy[i])).abs() <= 1e-9);
            }
        }
    }
}
