//! Checks against the IDX sample shipped under `data/mnist`.

use std::io::Read;
use std::path::PathBuf;

use flate2::read::GzDecoder;
use topolayer::dataset::{binarize, idx_paths, load_idx, Split};
use topolayer::signature::barcode_of;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

fn gunzip(path: &std::path::Path) -> Vec<u8> {
    let mut out = Vec::new();
    GzDecoder::new(std::fs::File::open(path).unwrap()).read_to_end(&mut out).unwrap();
    out
}

/// Plain byte-offset reader, independent of the library's parser.
fn first_record(images: &[u8], labels: &[u8]) -> (Vec<u8>, u8) {
    let be = |b: &[u8], at: usize| u32::from_be_bytes(b[at..at + 4].try_into().unwrap()) as usize;
    assert_eq!(be(images, 0), 2051);
    assert_eq!(be(labels, 0), 2049);
    let (rows, cols) = (be(images, 8), be(images, 12));
    (images[16..16 + rows * cols].to_vec(), labels[8])
}

#[test]
fn first_test_image_matches_a_second_reader() {
    let (ip, lp) = idx_paths(&data_dir(), Split::Test);
    let ds = load_idx(&ip, &lp).unwrap();
    let (bytes, label) = first_record(&gunzip(&ip), &gunzip(&lp));
    assert_eq!(ds.images()[0].to_bytes(), bytes);
    assert_eq!(ds.labels()[0], label);
    let checksum: u64 = bytes.iter().map(|&b| b as u64).sum();
    assert!(checksum > 0);
}

#[test]
fn eights_have_more_prominent_holes_than_ones() {
    let (ip, lp) = idx_paths(&data_dir(), Split::Train);
    let ds = load_idx(&ip, &lp).unwrap();
    assert_eq!(ds.len(), 5000);
    let holes = |digit: u8| {
        ds.images()
            .iter()
            .zip(ds.labels())
            .filter(|(_, &l)| l == digit)
            .take(50)
            .filter(|(img, _)| {
                let bc = barcode_of(&binarize(img, 0.5));
                bc.in_dim(1).filter(|b| b.length() >= 1.0).count() >= 2
            })
            .count()
    };
    let (eights, ones) = (holes(8), holes(1));
    assert!(eights > ones, "eights {eights}/50, ones {ones}/50");
}
