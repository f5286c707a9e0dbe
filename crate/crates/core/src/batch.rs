//! Per-image work over whole datasets.
//!
//! With the `parallel` feature (the default) the `*_parallel` entry points
//! run on the current rayon pool; results always come back in input order.
//! Without it they fall back to the sequential versions.

use crate::dataset::{binarize, Image};
use crate::persistence::Barcode;
use crate::signature::barcode_of;
use crate::topologize::{topologize_image, TopologizeConfig, TopologizeError, TopologizeTrace};

pub type TopologizeResult = Result<(Image, TopologizeTrace), TopologizeError>;

pub fn topologize_images_sequential(images: &[Image], cfg: &TopologizeConfig, threshold: f32) -> Vec<TopologizeResult> {
    images.iter().map(|img| topologize_image(img, cfg, threshold)).collect()
}

#[cfg(feature = "parallel")]
pub fn topologize_images_parallel(images: &[Image], cfg: &TopologizeConfig, threshold: f32) -> Vec<TopologizeResult> {
    use rayon::prelude::*;
    images.par_iter().map(|img| topologize_image(img, cfg, threshold)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn topologize_images_parallel(images: &[Image], cfg: &TopologizeConfig, threshold: f32) -> Vec<TopologizeResult> {
    topologize_images_sequential(images, cfg, threshold)
}

pub fn barcodes_sequential(images: &[Image], threshold: f32) -> Vec<Barcode> {
    images.iter().map(|img| barcode_of(&binarize(img, threshold))).collect()
}

#[cfg(feature = "parallel")]
pub fn barcodes_parallel(images: &[Image], threshold: f32) -> Vec<Barcode> {
    use rayon::prelude::*;
    images.par_iter().map(|img| barcode_of(&binarize(img, threshold))).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn barcodes_parallel(images: &[Image], threshold: f32) -> Vec<Barcode> {
    barcodes_sequential(images, threshold)
}

/// Binarized copy of every image, so baseline and topologized runs see the
/// same kind of input.
pub fn binarize_images(images: &[Image], threshold: f32) -> Vec<Image> {
    images
        .iter()
        .map(|img| crate::geometry::rasterize(&binarize(img, threshold)).expect("pixel grid points lie in frame"))
        .collect()
}
