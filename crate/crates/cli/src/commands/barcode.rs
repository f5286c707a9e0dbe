use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use topolayer::dataset::{binarize, read_idx_images};
use topolayer::geometry::pairwise_distances;
use topolayer::{build_rips, compute_persistence, Barcode, PointCloud};

use crate::error::{io_error, CliError};
use crate::output::{write_file, VERSION};
use crate::BarcodeArgs;

#[derive(Debug, Serialize, PartialEq)]
pub struct BarRecord {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
    pub essential: bool,
}

/// Parses `x y` lines; `#` starts a comment anywhere on a line.
pub fn parse_point_list(text: &str) -> Result<PointCloud, CliError> {
    let mut coords = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CliError::Data(format!("line {}: expected two numbers, got {line:?}", n + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [x, y] = fields[..] else {
            return Err(bad());
        };
        coords.push((x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?));
    }
    PointCloud::from_xy(&coords).map_err(|e| CliError::Data(e.to_string()))
}

fn is_idx(bytes: &[u8]) -> bool {
    bytes.starts_with(&[0, 0, 8, 3]) || bytes.starts_with(&[0x1f, 0x8b])
}

fn read_cloud(args: &BarcodeArgs) -> Result<PointCloud, CliError> {
    let bytes = fs::read(&args.input).map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    if is_idx(&bytes) {
        let images = read_idx_images(&args.input)?;
        let img = images.get(args.index).ok_or_else(|| {
            CliError::Data(format!("{} holds {} images, no index {}", args.input.display(), images.len(), args.index))
        })?;
        Ok(binarize(img, args.threshold))
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::Data(format!("{}: neither IDX nor a text point list", args.input.display())))?;
        parse_point_list(&text)
    }
}

/// Bars sorted by `(dim, birth, death)`; zero-length bars dropped unless
/// `keep_zero`.
pub fn records(bc: &Barcode, keep_zero: bool) -> Vec<BarRecord> {
    bc.bars()
        .iter()
        .filter(|b| keep_zero || b.essential || b.length() > 0.0)
        .map(|b| BarRecord {
            dim: b.dim,
            birth: b.birth,
            death: b.death,
            essential: b.essential,
        })
        .collect()
}

pub fn barcode_json(cloud: &PointCloud, keep_zero: bool) -> String {
    let bc = compute_persistence(&build_rips(&pairwise_distances(cloud)));
    let mut s = serde_json::to_string_pretty(&records(&bc, keep_zero)).expect("plain records serialize");
    s.push('\n');
    s
}

pub fn run(args: &BarcodeArgs) -> Result<(), CliError> {
    if !(args.threshold > 0.0 && args.threshold < 1.0) {
        return Err(CliError::Config(format!("threshold must lie in (0, 1), got {}", args.threshold)));
    }
    let cloud = read_cloud(args)?;
    let json = barcode_json(&cloud, args.keep_zero);
    match &args.out {
        Some(path) => {
            write_file(path, json.as_bytes())?;
            let meta = format!(
                "input = {}\nindex = {}\nthreshold = {}\nkeep_zero = {}\npoints = {}\nversion = {VERSION}\n",
                args.input.display(),
                args.index,
                args.threshold,
                args.keep_zero,
                cloud.len()
            );
            write_file(&meta_path(path), meta.as_bytes())
        }
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

/// The settings sidecar written next to a JSON output, `<out>.meta`.
pub fn meta_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta");
    name.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_list_parsing() {
        let cloud = parse_point_list("# figure\n0 1\n  2.5\t-3 # trailing\n\n").unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.points()[1].y, -3.0);
        assert!(matches!(parse_point_list("1 2 3"), Err(CliError::Data(_))));
        assert!(parse_point_list("x 2").is_err());
        assert!(parse_point_list("").unwrap().is_empty());
    }

    #[test]
    fn figure_eight_json() {
        let json = barcode_json(&topolayer::fixtures::figure_eight(), false);
        let v: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(v[5]["essential"], true);
        assert_eq!(v[6]["dim"], 1);
        assert!(barcode_json(&topolayer::fixtures::figure_eight(), true).len() > json.len());
        assert_eq!(barcode_json(&PointCloud::from_xy(&[]).unwrap(), false), "[]\n");
    }
}
