//! Gradient descent on point positions under a topological loss.
//!
//! The layer has no trainable parameters: each image is binarized into a
//! point cloud, the points descend the loss for a fixed number of steps, and
//! the result is rendered back into an image before the classifier sees it.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dataset::{binarize, Image};
use crate::geometry::{clamp_to_frame, rasterize, GeometryError, PointCloud};
use crate::signature::{loss_gradient, loss_value, LossSpec, LossSpecError};

#[derive(Debug, Error, PartialEq)]
pub enum TopologizeError {
    #[error("steps must be at least 1")]
    NoSteps,
    #[error("learning rate must be positive and finite, got {0}")]
    LearningRate(f64),
    #[error(transparent)]
    Spec(#[from] LossSpecError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologizeConfig {
    pub spec: LossSpec,
    pub steps: usize,
    /// Pixels moved per unit of gradient. The nonparametric H0 term scales
    /// with the bar count, so a digit's gradient components run into the
    /// hundreds; the default keeps each step well under a pixel.
    pub learning_rate: f64,
    pub clamp: bool,
}

impl Default for TopologizeConfig {
    fn default() -> Self {
        Self {
            spec: LossSpec::default(),
            steps: 10,
            learning_rate: 1e-3,
            clamp: true,
        }
    }
}

impl TopologizeConfig {
    pub fn new(spec: LossSpec) -> Self {
        Self {
            spec,
            ..Self::default()
        }
    }

    /// Checks every field. A zero learning rate is accepted as the identity
    /// configuration even though it is useless in practice.
    pub fn validate(&self) -> Result<(), TopologizeError> {
        if self.steps == 0 {
            return Err(TopologizeError::NoSteps);
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TopologizeError::LearningRate(self.learning_rate));
        }
        self.spec.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologizeTrace {
    /// Sign-adjusted loss before each step.
    pub losses: Vec<f64>,
    /// Loss of the returned cloud.
    pub final_loss: f64,
    pub duration: Duration,
    /// `1 - lit_after / lit_before` through the binarize/rasterize round
    /// trip; 0 for point-cloud runs.
    pub space_reduction_ratio: f64,
    /// Set when the input had nothing to optimize.
    pub blank: bool,
}

impl TopologizeTrace {
    pub fn initial_loss(&self) -> f64 {
        self.losses.first().copied().unwrap_or(0.0)
    }
}

/// Runs `cfg.steps` steps of `x <- x - lr * ∇loss`, clamping to the frame
/// after each step when `cfg.clamp` is set. Point count and order are kept.
///
/// A step that would produce a non-finite coordinate is skipped and the
/// descent stops there.
pub fn topologize(cloud: &PointCloud, cfg: &TopologizeConfig) -> (PointCloud, TopologizeTrace) {
    let start = Instant::now();
    if cloud.is_empty() {
        return (
            cloud.clone(),
            TopologizeTrace {
                losses: Vec::new(),
                final_loss: 0.0,
                duration: start.elapsed(),
                space_reduction_ratio: 0.0,
                blank: true,
            },
        );
    }
    let mut current = cloud.clone();
    let mut losses = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let report = loss_gradient(&current, &cfg.spec);
        losses.push(report.value);
        if cfg.learning_rate == 0.0 {
            continue;
        }
        if current.descend(&report.grad_points, cfg.learning_rate).is_err() {
            log::warn!("non-finite step; stopping descent early");
            break;
        }
        if cfg.clamp {
            current = clamp_to_frame(&current);
        }
    }
    let final_loss = loss_value(&current, &cfg.spec);
    let trace = TopologizeTrace {
        losses,
        final_loss,
        duration: start.elapsed(),
        space_reduction_ratio: 0.0,
        blank: false,
    };
    (current, trace)
}

/// Binarizes, topologizes and re-rasterizes one image.
pub fn topologize_image(
    img: &Image,
    cfg: &TopologizeConfig,
    threshold: f32,
) -> Result<(Image, TopologizeTrace), TopologizeError> {
    let start = Instant::now();
    let cloud = binarize(img, threshold);
    if cloud.is_empty() {
        let (_, mut trace) = topologize(&cloud, cfg);
        trace.duration = start.elapsed();
        return Ok((img.clone(), trace));
    }
    let lit_before = cloud.len();
    let (moved, mut trace) = topologize(&cloud, cfg);
    let out = rasterize(&moved)?;
    trace.space_reduction_ratio = 1.0 - out.lit_pixels() as f64 / lit_before as f64;
    trace.duration = start.elapsed();
    Ok((out, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::figure_eight;
    use crate::geometry::Frame;
    use crate::signature::Sign;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_learning_rate_is_identity() {
        let cfg = TopologizeConfig {
            steps: 1,
            learning_rate: 0.0,
            ..TopologizeConfig::default()
        };
        let cloud = figure_eight();
        let (out, trace) = topologize(&cloud, &cfg);
        assert_eq!(out, cloud);
        assert_eq!(trace.losses.len(), 1);
        assert_eq!(trace.final_loss, trace.losses[0]);
    }

    /// The figure '8' with its equal edges pulled apart by a few hundredths,
    /// so each hole has a single shortest diagonal.
    fn generic_figure_eight() -> PointCloud {
        let jitter = [(0.01, 0.02), (-0.02, 0.0), (0.03, -0.01), (0.0, 0.02), (-0.01, -0.03), (0.02, 0.01)];
        let pts = figure_eight()
            .points()
            .iter()
            .zip(jitter)
            .map(|(p, (dx, dy))| crate::geometry::Point2::new(p.x + dx, p.y + dy))
            .collect();
        PointCloud::new(pts, Frame::default()).unwrap()
    }

    #[test]
    fn promoting_holes_descends() {
        let cfg = TopologizeConfig {
            spec: LossSpec::parametrized(1, 1.0, 1.0).with_sign(Sign::Promote),
            steps: 2,
            learning_rate: 1e-3,
            clamp: false,
        };
        let (_, trace) = topologize(&generic_figure_eight(), &cfg);
        assert!(trace.losses[1] < trace.losses[0], "{:?}", trace.losses);
        assert!(trace.final_loss < trace.losses[1]);
    }

    #[test]
    fn exact_figure_eight_ties_defeat_the_subgradient() {
        // Both diagonals of each square tie at √2. The death gradient lengthens
        // only the tie-broken one while shrinking the birth edges shortens the
        // other, so the first step goes uphill.
        let cfg = TopologizeConfig {
            spec: LossSpec::parametrized(1, 1.0, 1.0),
            steps: 2,
            learning_rate: 1e-3,
            clamp: false,
        };
        let (_, trace) = topologize(&figure_eight(), &cfg);
        assert!((trace.losses[0] + 1.0).abs() < 1e-12);
        assert!(trace.losses[1] > trace.losses[0]);
    }

    #[test]
    fn clamping_pins_escaping_points_to_the_border() {
        // figure '8' shifted so its left column sits on x = 0.5; widening the
        // holes pushes that column left, past the frame edge
        let cloud = figure_eight().translated(0.5, 5.0);
        let cfg = TopologizeConfig {
            spec: LossSpec::parametrized(1, 1.0, 1.0),
            steps: 3,
            learning_rate: 2.0,
            clamp: true,
        };
        let (out, _) = topologize(&cloud, &cfg);
        let frame = out.frame();
        assert!(out.points().iter().all(|p| frame.contains(p)));
        assert!(out.points().iter().any(|p| p.x == 0.0));

        let unclamped = TopologizeConfig { clamp: false, ..cfg };
        let (free, _) = topologize(&cloud, &unclamped);
        assert!(free.points().iter().any(|p| p.x < 0.0));
        assert_eq!(free.len(), cloud.len());
    }

    #[test]
    fn empty_cloud_returns_empty_trace() {
        let (out, trace) = topologize(&PointCloud::empty(Frame::default()), &TopologizeConfig::default());
        assert!(out.is_empty());
        assert!(trace.losses.is_empty() && trace.blank);
    }

    #[test]
    fn blank_and_identity_images() {
        let frame = Frame::default();
        let (out, trace) = topologize_image(&Image::blank(frame), &TopologizeConfig::default(), 0.5).unwrap();
        assert_eq!(out, Image::blank(frame));
        assert_eq!(trace.space_reduction_ratio, 0.0);
        assert!(trace.blank);

        let mut img = Image::blank(frame);
        for (x, y, v) in [(3, 4, 0.9), (10, 4, 0.7), (10, 12, 0.55), (3, 12, 0.2)] {
            img.set(x, y, v);
        }
        let cfg = TopologizeConfig {
            steps: 1,
            learning_rate: 0.0,
            ..TopologizeConfig::default()
        };
        let (out, trace) = topologize_image(&img, &cfg, 0.5).unwrap();
        assert_eq!(out, rasterize(&binarize(&img, 0.5)).unwrap());
        assert_eq!(trace.space_reduction_ratio, 0.0);
    }

    #[test]
    fn first_small_step_does_not_increase_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cfg = TopologizeConfig {
            spec: LossSpec::nonparametric(1),
            steps: 2,
            learning_rate: 1e-3,
            clamp: true,
        };
        let mut ok = 0;
        for _ in 0..40 {
            let coords: Vec<_> = (0..10)
                .map(|_| (rng.random_range(2.0..25.0), rng.random_range(2.0..25.0)))
                .collect();
            let (out, trace) = topologize(&PointCloud::from_xy(&coords).unwrap(), &cfg);
            assert_eq!(out.len(), 10);
            if trace.losses[1] <= trace.losses[0] {
                ok += 1;
            }
        }
        assert!(ok >= 38, "{ok}/40 descending first steps");
    }

    #[test]
    fn config_validation() {
        assert!(TopologizeConfig::default().validate().is_ok());
        let bad = TopologizeConfig {
            steps: 0,
            ..TopologizeConfig::default()
        };
        assert_eq!(bad.validate(), Err(TopologizeError::NoSteps));
        let bad = TopologizeConfig {
            learning_rate: f64::NAN,
            ..TopologizeConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
