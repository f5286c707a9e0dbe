//! Small hand-built inputs shared by tests, benches and the CLI.

use crate::geometry::PointCloud;

/// Six vertices of a figure '8' on a unit grid, in the order a..f:
///
/// ```text
///   a c        a=(0,1) c=(1,1)
///   b f        b=(0,0) f=(1,0)
///   d e        d=(0,-1) e=(1,-1)
/// ```
///
/// Seven unit edges, four diagonals of length √2, two long diagonals of
/// length √5 (`ae`, `cd`) and two vertical edges of length 2 (`ad`, `ce`).
pub fn figure_eight() -> PointCloud {
    PointCloud::from_xy(&[
        (0.0, 1.0),
        (0.0, 0.0),
        (1.0, 1.0),
        (0.0, -1.0),
        (1.0, -1.0),
        (1.0, 0.0),
    ])
    .expect("finite coordinates")
}

/// Corners of the unit square, counter-clockwise from the origin.
pub fn unit_square() -> PointCloud {
    PointCloud::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
        .expect("finite coordinates")
}
