use std::fmt::Write as _;
use std::path::Path;

use crate::dataplane::Modality;
use crate::error::{Error, Result};
use crate::ingest::PixelImage;

use super::probability::ConfusionMatrix;
use super::retrieval::{PrecisionCell, PrecisionReport};

fn preamble_text(preamble: &[String]) -> String {
    preamble.iter().map(|l| format!("# {l}\n")).collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `query,candidate,top1,top3,...,trials`, one row per cell, values to six
/// decimals. Rows read "query modality -> candidate modality".
pub fn precision_csv(report: &PrecisionReport, preamble: &[String]) -> String {
    let mut s = preamble_text(preamble);
    s.push_str("query,candidate");
    for k in &report.top_ks {
        let _ = write!(s, ",top{k}");
    }
    s.push_str(",trials\n");
    for c in &report.cells {
        let _ = write!(s, "{},{}", c.query, c.candidate);
        for k in &report.top_ks {
            let _ = write!(s, ",{:.6}", c.precision_at(*k).unwrap_or(f64::NAN));
        }
        let _ = writeln!(s, ",{}", c.trials);
    }
    s
}

pub fn parse_precision_csv(text: &str) -> Result<PrecisionReport> {
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Malformed("precision CSV without header".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3
        || cols[0] != "query"
        || cols[1] != "candidate"
        || cols[cols.len() - 1] != "trials"
    {
        return Err(Error::Malformed(format!("unexpected header {header:?}")));
    }
    let top_ks = cols[2..cols.len() - 1]
        .iter()
        .map(|c| {
            c.strip_prefix("top")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| Error::Malformed(format!("bad column {c:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut cells = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(Error::Malformed(format!(
                "row {line:?} has {} fields",
                f.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Malformed(format!("bad value {s:?}")))
        };
        cells.push(PrecisionCell {
            query: f[0].parse::<Modality>()?,
            candidate: f[1].parse::<Modality>()?,
            topk: top_ks
                .iter()
                .enumerate()
                .map(|(i, &k)| num(f[2 + i]).map(|v| (k, v)))
                .collect::<Result<_>>()?,
            trials: f[f.len() - 1]
                .parse()
                .map_err(|_| Error::Malformed(format!("bad trial count in {line:?}")))?,
        });
    }
    Ok(PrecisionReport { top_ks, cells })
}

pub fn export_precision(report: &PrecisionReport, preamble: &[String], path: &Path) -> Result<()> {
    write(path, precision_csv(report, preamble).as_bytes())
}

/// Header row of fabric ids, then one row per fabric.
pub fn confusion_csv(matrix: &ConfusionMatrix, preamble: &[String]) -> String {
    let mut s = preamble_text(preamble);
    s.push_str("fabric");
    for f in &matrix.fabric_order {
        let _ = write!(s, ",{f}");
    }
    s.push('\n');
    for (f, row) in matrix.fabric_order.iter().zip(&matrix.values) {
        let _ = write!(s, "{f}");
        for v in row {
            let _ = write!(s, ",{v:.9}");
        }
        s.push('\n');
    }
    s
}

/// Square matrix with integer row/column labels (e.g. cluster ids).
pub fn labelled_matrix_csv(
    labels: &[u32],
    values: &[Vec<f64>],
    corner: &str,
    preamble: &[String],
) -> String {
    let m = ConfusionMatrix {
        fabric_order: labels.to_vec(),
        values: values.to_vec(),
    };
    confusion_csv(&m, preamble).replacen("fabric", corner, 1)
}

/// 8-bit grayscale heatmap, each cell `round(255 p / row max)`.
pub fn heatmap(values: &[Vec<f64>]) -> Result<PixelImage> {
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptyInput("empty matrix".into()));
    }
    let w = values[0].len();
    let mut pixels = Vec::with_capacity(n * w);
    for row in values {
        if row.len() != w {
            return Err(Error::dim("heatmap row", w, row.len()));
        }
        let max = row.iter().copied().fold(0.0f64, f64::max);
        pixels.extend(row.iter().map(|&p| {
            if max > 0.0 {
                (255.0 * p / max).round().clamp(0.0, 255.0) as u16
            } else {
                0
            }
        }));
    }
    PixelImage::new(w, n, 1, 255, pixels)
}

pub fn export_confusion(
    matrix: &ConfusionMatrix,
    preamble: &[String],
    csv_path: &Path,
    pnm_path: &Path,
) -> Result<()> {
    write(csv_path, confusion_csv(matrix, preamble).as_bytes())?;
    write(pnm_path, &heatmap(&matrix.values)?.to_pnm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_scaling() {
        let img = heatmap(&[vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        assert_eq!((img.width, img.height), (2, 2));
        assert_eq!(img.pixels, vec![255, 28, 170, 255]);
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = PrecisionReport {
            top_ks: vec![1, 3],
            cells: vec![],
        };
        assert_eq!(precision_csv(&r, &[]), "query,candidate,top1,top3,trials\n");
        assert_eq!(parse_precision_csv(&precision_csv(&r, &[])).unwrap(), r);
    }

    #[test]
    fn precision_round_trip_at_six_decimals() {
        let r = PrecisionReport {
            top_ks: vec![1, 3],
            cells: vec![PrecisionCell {
                query: Modality::TouchFold,
                candidate: Modality::Depth,
                topk: vec![(1, 0.4291666), (3, 0.75)],
                trials: 1500,
            }],
        };
        let text = precision_csv(&r, &["seed = 3".into()]);
        assert!(text.starts_with("# seed = 3\n"));
        let back = parse_precision_csv(&text).unwrap();
        assert_eq!(back.cells[0].trials, 1500);
        for ((_, a), (_, b)) in back.cells[0].topk.iter().zip(&r.cells[0].topk) {
            assert!((a - b).abs() < 5e-7);
        }
        assert_eq!(precision_csv(&back, &["seed = 3".into()]), text);
    }

    #[test]
    fn confusion_csv_layout() {
        let m = ConfusionMatrix {
            fabric_order: vec![4, 2],
            values: vec![vec![0.75, 0.25], vec![0.5, 0.5]],
        };
        let s = confusion_csv(&m, &[]);
        assert_eq!(
            s,
            "fabric,4,2\n4,0.750000000,0.250000000\n2,0.500000000,0.500000000\n"
        );
    }
}
