//! Planar point clouds living inside a pixel frame.
//!
//! Coordinates are in pixel units with the origin at the top-left corner:
//! `x` is the column and `y` is the row, matching the IDX image layout.

use thiserror::Error;

use crate::dataset::Image;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyFrame { width: usize, height: usize },
    #[error("point {index} has a non-finite coordinate ({x}, {y})")]
    NonFinite { index: usize, x: f64, y: f64 },
    #[error("point {index} at ({x}, {y}) lies outside the {width}x{height} frame")]
    OutsideFrame {
        index: usize,
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Rectangular pixel frame. Valid coordinates are `[0, width-1] x [0, height-1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    width: usize,
    height: usize,
}

impl Frame {
    pub fn new(width: usize, height: usize) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyFrame { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, p: &Point2) -> bool {
        (0.0..=self.max_x()).contains(&p.x) && (0.0..=self.max_y()).contains(&p.y)
    }

    fn max_x(&self) -> f64 {
        (self.width - 1) as f64
    }

    fn max_y(&self) -> f64 {
        (self.height - 1) as f64
    }
}

impl Default for Frame {
    /// The 28x28 MNIST frame.
    fn default() -> Self {
        Self {
            width: 28,
            height: 28,
        }
    }
}

/// An ordered set of points inside a frame. A point's index identifies it
/// across every operation (gradients, topologization, rasterization).
///
/// Points are not required to lie inside the frame; [`clamp_to_frame`] and
/// [`rasterize`] are where the frame is enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point2>,
    frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<Point2>, frame: Frame) -> Result<Self, GeometryError> {
        if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(GeometryError::NonFinite {
                index,
                x: p.x,
                y: p.y,
            });
        }
        Ok(Self { points, frame })
    }

    /// Convenience constructor from `(x, y)` pairs in the default frame.
    pub fn from_xy(coords: &[(f64, f64)]) -> Result<Self, GeometryError> {
        let points = coords.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        Self::new(points, Frame::default())
    }

    pub fn empty(frame: Frame) -> Self {
        Self {
            points: Vec::new(),
            frame,
        }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Moves every point by `-step * grad[i]`.
    ///
    /// Returns an error (and leaves `self` untouched) if any resulting
    /// coordinate is non-finite.
    pub fn descend(&mut self, grad: &[[f64; 2]], step: f64) -> Result<(), GeometryError> {
        assert_eq!(grad.len(), self.points.len(), "gradient length mismatch");
        let moved: Vec<Point2> = self
            .points
            .iter()
            .zip(grad)
            .map(|(p, g)| Point2::new(p.x - step * g[0], p.y - step * g[1]))
            .collect();
        *self = Self::new(moved, self.frame)?;
        Ok(())
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        self.map(|p| Point2::new(p.x + dx, p.y + dy))
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|p| Point2::new(p.x * s, p.y * s))
    }

    /// Rotation by `theta` radians about the origin.
    pub fn rotated(&self, theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        self.map(|p| Point2::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y))
    }

    fn map(&self, f: impl Fn(&Point2) -> Point2) -> Self {
        Self {
            points: self.points.iter().map(f).collect(),
            frame: self.frame,
        }
    }
}

/// Symmetric matrix of Euclidean distances, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from a full row-major `n*n` buffer.
    ///
    /// # Panics
    /// If `entries.len() != n * n`.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), n * n, "distance buffer must be n*n");
        Self { n, entries }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Largest entry and a pair realizing it, the lexicographically largest
    /// among ties. `None` for fewer than two points.
    pub fn diameter(&self) -> Option<(f64, (usize, usize))> {
        let mut best: Option<(f64, (usize, usize))> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = self.get(i, j);
                if best.is_none_or(|(b, _)| d >= b) {
                    best = Some((d, (i, j)));
                }
            }
        }
        best
    }
}

pub fn pairwise_distances(cloud: &PointCloud) -> DistanceMatrix {
    let pts = cloud.points();
    let n = pts.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pts[i].distance(&pts[j]);
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

/// Clamps every coordinate into the frame, preserving point order.
pub fn clamp_to_frame(cloud: &PointCloud) -> PointCloud {
    let frame = cloud.frame;
    cloud.map(|p| Point2::new(p.x.clamp(0.0, frame.max_x()), p.y.clamp(0.0, frame.max_y())))
}

/// Nearest pixel, ties rounding up.
fn pixel_index(v: f64) -> usize {
    (v + 0.5).floor() as usize
}

/// Renders the cloud as a binary image: every point lights its nearest pixel.
pub fn rasterize(cloud: &PointCloud) -> Result<Image, GeometryError> {
    let frame = cloud.frame;
    let mut pixels = vec![0.0f32; frame.pixel_count()];
    for (index, p) in cloud.points.iter().enumerate() {
        if !frame.contains(p) {
            return Err(GeometryError::OutsideFrame {
                index,
                x: p.x,
                y: p.y,
                width: frame.width,
                height: frame.height,
            });
        }
        let (col, row) = (pixel_index(p.x), pixel_index(p.y));
        pixels[row * frame.width + col] = 1.0;
    }
    Ok(Image::new(frame, pixels).expect("binary pixels are in range"))
}
