//! MNIST-family datasets in the IDX container.
//!
//! Image files carry magic `0x00000803` followed by big-endian `u32` count,
//! rows and cols, then one byte per pixel in row-major order. Label files
//! carry magic `0x00000801`, a count, then one byte per label. Paths ending
//! in `.gz` are decompressed transparently.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Frame, Point2, PointCloud};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Default binarization threshold on normalized intensity.
pub const DEFAULT_THRESHOLD: f32 = 0.5;

/// Binarized clouds larger than this keep only their brightest pixels.
pub const MAX_CLOUD_POINTS: usize = 400;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: bad magic 0x{found:08x} at offset 0 (expected 0x{expected:08x})")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: truncated at byte offset {offset} (needed {needed} more bytes)")]
    Truncated {
        path: PathBuf,
        offset: usize,
        needed: usize,
    },
    #[error("{path}: invalid header at byte offset {offset}: {reason}")]
    BadHeader {
        path: PathBuf,
        offset: usize,
        reason: String,
    },
    #[error("{label_path}: {labels} labels but {images} images")]
    CountMismatch {
        label_path: PathBuf,
        images: usize,
        labels: usize,
    },
    #[error("{path}: label {label} at byte offset {offset} is outside 0..=9")]
    BadLabel {
        path: PathBuf,
        label: u8,
        offset: usize,
    },
    #[error("requested {requested} images from a dataset of {available}")]
    SubsetTooLarge { requested: usize, available: usize },
    #[error("image has {found} pixels, frame {width}x{height} needs {expected}")]
    PixelCount {
        found: usize,
        expected: usize,
        width: usize,
        height: usize,
    },
    #[error("pixel {index} = {value} is outside [0, 1]")]
    PixelRange { index: usize, value: f32 },
}

/// Grey-level image with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    frame: Frame,
    pixels: Vec<f32>,
}

impl Image {
    pub fn new(frame: Frame, pixels: Vec<f32>) -> Result<Self, DatasetError> {
        if pixels.len() != frame.pixel_count() {
            return Err(DatasetError::PixelCount {
                found: pixels.len(),
                expected: frame.pixel_count(),
                width: frame.width(),
                height: frame.height(),
            });
        }
        if let Some((index, &value)) = pixels
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(DatasetError::PixelRange { index, value });
        }
        Ok(Self { frame, pixels })
    }

    pub fn blank(frame: Frame) -> Self {
        Self {
            frame,
            pixels: vec![0.0; frame.pixel_count()],
        }
    }

    pub fn from_bytes(frame: Frame, bytes: &[u8]) -> Self {
        assert_eq!(bytes.len(), frame.pixel_count());
        Self {
            frame,
            pixels: bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        }
    }

    /// Pixel bytes, `round(255 * v)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| (v * 255.0).round() as u8).collect()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    /// Intensity at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.frame.width() + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        assert!((0.0..=1.0).contains(&v));
        let w = self.frame.width();
        self.pixels[y * w + x] = v;
    }

    /// Number of nonzero pixels.
    pub fn lit_pixels(&self) -> usize {
        self.pixels.iter().filter(|&&v| v > 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    images: Vec<Image>,
    labels: Vec<u8>,
}

impl Dataset {
    /// # Panics
    /// If the lengths differ or a label exceeds 9.
    pub fn new(name: impl Into<String>, images: Vec<Image>, labels: Vec<u8>) -> Self {
        assert_eq!(images.len(), labels.len(), "one label per image");
        assert!(labels.iter().all(|&l| l <= 9), "labels must be digits");
        Self {
            name: name.into(),
            images,
            labels,
        }
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Same labels, images replaced one for one.
    pub fn with_images(&self, images: Vec<Image>) -> Self {
        Self::new(self.name.clone(), images, self.labels.clone())
    }

    pub fn label_histogram(&self) -> [usize; 10] {
        let mut h = [0; 10];
        for &l in &self.labels {
            h[l as usize] += 1;
        }
        h
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(io_err)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io_err)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let available = self.bytes.len() - self.offset;
        if available < n {
            return Err(DatasetError::Truncated {
                path: self.path.to_path_buf(),
                offset: self.bytes.len(),
                needed: n - available,
            });
        }
        let out = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<(), DatasetError> {
        let found = self.u32()?;
        if found != expected {
            return Err(DatasetError::BadMagic {
                path: self.path.to_path_buf(),
                found,
                expected,
            });
        }
        Ok(())
    }
}

/// Reads an IDX image file into images of the stored `rows x cols` frame.
pub fn read_idx_images(path: &Path) -> Result<Vec<Image>, DatasetError> {
    let bytes = read_all(path)?;
    let mut cur = Cursor {
        path,
        bytes: &bytes,
        offset: 0,
    };
    cur.magic(IMAGE_MAGIC)?;
    let count = cur.u32()? as usize;
    let rows = cur.u32()? as usize;
    let cols = cur.u32()? as usize;
    let frame = Frame::new(cols, rows).map_err(|e| DatasetError::BadHeader {
        path: path.to_path_buf(),
        offset: 8,
        reason: e.to_string(),
    })?;
    let body = cur.take(count * rows * cols)?;
    Ok(body
        .chunks_exact(rows * cols)
        .map(|px| Image::from_bytes(frame, px))
        .collect())
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>, DatasetError> {
    let bytes = read_all(path)?;
    let mut cur = Cursor {
        path,
        bytes: &bytes,
        offset: 0,
    };
    cur.magic(LABEL_MAGIC)?;
    let count = cur.u32()? as usize;
    let start = cur.offset;
    let labels = cur.take(count)?.to_vec();
    if let Some((i, &label)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
        return Err(DatasetError::BadLabel {
            path: path.to_path_buf(),
            label,
            offset: start + i,
        });
    }
    Ok(labels)
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset, DatasetError> {
    let images = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if images.len() != labels.len() {
        return Err(DatasetError::CountMismatch {
            label_path: labels_path.to_path_buf(),
            images: images.len(),
            labels: labels.len(),
        });
    }
    let name = images_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset::new(name, images, labels))
}

/// Serializes images as an uncompressed IDX file.
///
/// # Panics
/// If the images do not share one frame.
pub fn encode_idx_images(images: &[Image]) -> Vec<u8> {
    let frame = images.first().map(Image::frame).unwrap_or_default();
    let mut out = Vec::with_capacity(16 + images.len() * frame.pixel_count());
    for word in [
        IMAGE_MAGIC,
        images.len() as u32,
        frame.height() as u32,
        frame.width() as u32,
    ] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        assert_eq!(img.frame(), frame, "mixed frames in one IDX file");
        out.extend(img.to_bytes());
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    if path.extension().is_some_and(|e| e == "gz") {
        let mut gz = flate2::write::GzEncoder::new(w, flate2::Compression::default());
        gz.write_all(bytes).map_err(io_err)?;
        gz.finish().and_then(|mut w| w.flush()).map_err(io_err)
    } else {
        w.write_all(bytes).and_then(|_| w.flush()).map_err(io_err)
    }
}

pub fn write_idx(ds: &Dataset, images_path: &Path, labels_path: &Path) -> Result<(), DatasetError> {
    write_bytes(images_path, &encode_idx_images(ds.images()))?;
    write_bytes(labels_path, &encode_idx_labels(ds.labels()))
}

/// One point at `(col, row)` per pixel at or above `threshold`, row-major.
///
/// Images with more than [`MAX_CLOUD_POINTS`] such pixels keep the brightest
/// ones (ties broken by row-major position), still listed row-major.
pub fn binarize(img: &Image, threshold: f32) -> PointCloud {
    let w = img.frame().width();
    let mut lit: Vec<usize> = (0..img.pixels.len())
        .filter(|&i| img.pixels[i] >= threshold)
        .collect();
    if lit.len() > MAX_CLOUD_POINTS {
        lit.sort_by(|&a, &b| img.pixels[b].total_cmp(&img.pixels[a]).then(a.cmp(&b)));
        lit.truncate(MAX_CLOUD_POINTS);
        lit.sort_unstable();
    }
    let points = lit
        .into_iter()
        .map(|i| Point2::new((i % w) as f64, (i / w) as f64))
        .collect();
    PointCloud::new(points, img.frame()).expect("pixel coordinates are finite")
}

/// The first `n` images under a shuffle seeded with `seed`.
pub fn subset(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset, DatasetError> {
    if n > ds.len() {
        return Err(DatasetError::SubsetTooLarge {
            requested: n,
            available: ds.len(),
        });
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.truncate(n);
    let out = Dataset::new(
        format!("{}-{n}", ds.name),
        order.iter().map(|&i| ds.images[i].clone()).collect(),
        order.iter().map(|&i| ds.labels[i]).collect(),
    );
    log::info!("subset {} labels {:?}", out.name, out.label_histogram());
    Ok(out)
}

/// The conventional file names inside a dataset directory, preferring the
/// uncompressed variant when both exist.
pub fn idx_paths(dir: &Path, split: Split) -> (PathBuf, PathBuf) {
    let stem = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    let pick = |kind: &str| {
        let plain = dir.join(format!("{stem}-{kind}-ubyte"));
        if plain.exists() {
            plain
        } else {
            dir.join(format!("{stem}-{kind}-ubyte.gz"))
        }
    };
    (pick("images-idx3"), pick("labels-idx1"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_dataset() -> Dataset {
        let frame = Frame::new(4, 3).unwrap();
        let images = (0..5u8)
            .map(|k| Image::from_bytes(frame, &(0..12).map(|i| i * 20 + k).collect::<Vec<u8>>()))
            .collect();
        Dataset::new("tiny", images, vec![3, 1, 4, 1, 5])
    }

    #[test]
    fn idx_round_trip_plain_and_gz() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny_dataset();
        for suffix in ["", ".gz"] {
            let ip = dir.path().join(format!("imgs{suffix}"));
            let lp = dir.path().join(format!("lbls{suffix}"));
            write_idx(&ds, &ip, &lp).unwrap();
            let back = load_idx(&ip, &lp).unwrap();
            assert_eq!(back.images(), ds.images());
            assert_eq!(back.labels(), ds.labels());
            assert_eq!(back.images()[0].frame(), Frame::new(4, 3).unwrap());
        }
    }

    #[test]
    fn header_layout_is_big_endian() {
        let bytes = encode_idx_images(tiny_dataset().images());
        assert_eq!(&bytes[..16], &[0, 0, 8, 3, 0, 0, 0, 5, 0, 0, 0, 3, 0, 0, 0, 4]);
        assert_eq!(bytes.len(), 16 + 5 * 12);
        assert_eq!(&encode_idx_labels(&[7, 2])[..], &[0, 0, 8, 1, 0, 0, 0, 2, 7, 2]);
    }

    #[test]
    fn error_paths_name_file_and_offset() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny_dataset();
        let ip = dir.path().join("imgs");
        let lp = dir.path().join("lbls");
        write_idx(&ds, &ip, &lp).unwrap();

        // truncated labels: header says 5, only 3 present
        let mut lbl = encode_idx_labels(ds.labels());
        lbl.truncate(11);
        std::fs::write(&lp, &lbl).unwrap();
        match load_idx(&ip, &lp) {
            Err(DatasetError::Truncated { path, offset, needed }) => {
                assert_eq!(path, lp);
                assert_eq!((offset, needed), (11, 2));
            }
            other => panic!("{other:?}"),
        }

        std::fs::write(&lp, encode_idx_images(ds.images())).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(DatasetError::BadMagic { found: 0x803, expected: 0x801, .. })
        ));

        std::fs::write(&lp, encode_idx_labels(&[1, 2])).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(DatasetError::CountMismatch { images: 5, labels: 2, .. })
        ));

        std::fs::write(&lp, encode_idx_labels(&[1, 2, 12, 0, 0])).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(DatasetError::BadLabel { label: 12, offset: 10, .. })
        ));

        assert!(matches!(
            load_idx(&dir.path().join("missing"), &lp),
            Err(DatasetError::Io { .. })
        ));
    }

    #[test]
    fn binarize_examples() {
        let frame = Frame::default();
        assert!(binarize(&Image::blank(frame), 0.5).is_empty());

        let mut img = Image::blank(frame);
        img.set(2, 3, 1.0);
        img.set(9, 9, 1.0);
        img.set(5, 5, 0.49);
        let cloud = binarize(&img, 0.5);
        assert_eq!(cloud.points(), &[Point2::new(2.0, 3.0), Point2::new(9.0, 9.0)]);
    }

    #[test]
    fn binarize_caps_large_clouds_by_brightness() {
        let frame = Frame::default();
        let mut img = Image::blank(frame);
        for y in 0..28 {
            for x in 0..28 {
                img.set(x, y, if y < 2 { 1.0 } else { 0.6 });
            }
        }
        let cloud = binarize(&img, 0.5);
        assert_eq!(cloud.len(), MAX_CLOUD_POINTS);
        // the two bright rows survive, then row-major among the ties
        assert_eq!(cloud.points()[0], Point2::new(0.0, 0.0));
        assert_eq!(cloud.points()[56], Point2::new(0.0, 2.0));
        assert!(cloud.points().windows(2).all(|w| (w[0].y, w[0].x) < (w[1].y, w[1].x)));
    }

    #[test]
    fn subset_is_seeded_and_bounded() {
        let ds = tiny_dataset();
        let a = subset(&ds, 3, 42).unwrap();
        let b = subset(&ds, 3, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let full = subset(&ds, 5, 7).unwrap();
        let mut labels = full.labels().to_vec();
        labels.sort_unstable();
        assert_eq!(labels, vec![1, 1, 3, 4, 5]);
        assert!(matches!(subset(&ds, 6, 0), Err(DatasetError::SubsetTooLarge { .. })));
    }

    #[test]
    fn image_validation() {
        let frame = Frame::new(2, 2).unwrap();
        assert!(Image::new(frame, vec![0.0; 3]).is_err());
        assert!(Image::new(frame, vec![0.0, 0.5, 1.5, 0.0]).is_err());
        assert_eq!(Image::new(frame, vec![0.0, 0.5, 1.0, 0.0]).unwrap().lit_pixels(), 2);
    }

    proptest! {
        #[test]
        fn pixel_bytes_survive_encoding(bytes in prop::collection::vec(any::<u8>(), 784)) {
            let img = Image::from_bytes(Frame::default(), &bytes);
            prop_assert_eq!(img.to_bytes(), bytes.clone());
            let encoded = encode_idx_images(std::slice::from_ref(&img));
            prop_assert_eq!(&encoded[16..], &bytes[..]);
        }

        #[test]
        fn binarize_counts_pixels_over_threshold(bytes in prop::collection::vec(any::<u8>(), 784), t in 0.05f32..0.95) {
            let img = Image::from_bytes(Frame::default(), &bytes);
            let expected = img.pixels().iter().filter(|&&v| v >= t).count().min(MAX_CLOUD_POINTS);
            prop_assert_eq!(binarize(&img, t).len(), expected);
        }
    }
}
