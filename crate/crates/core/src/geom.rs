//! Foundational geometric types shared by the whole pipeline: 3D/2D vectors,
//! labeled point clouds, top-down oriented rectangles, z-extruded oriented
//! bounding boxes, and joint axes.
//!
//! All types are plain immutable values; every operation is a pure function.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Unit-norm tolerance for direction vectors.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Two 2D lines are treated as parallel when the sine of the angle between
/// their directions is at most this value.
pub const PARALLEL_SIN_TOL: f64 = 1e-6;

/// A top-down rectangle with aspect ratio below this is considered
/// near-square: its longer-edge direction is ambiguous.
pub const NEAR_SQUARE_ASPECT: f64 = 1.05;

/// 3D vector / point, in meters (or unitless when used as a direction).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    /// Positive vertical direction.
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near-)zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n < 1e-12 {
            None
        } else {
            Some(self * (1.0 / n))
        }
    }

    /// Top-down projection.
    pub fn xy(self) -> Vec2 {
        Vec2 { x: self.x, y: self.y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl serde::Serialize for Vec3 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Vec3 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        Ok(Vec3 { x, y, z })
    }
}

/// 2D vector / point in the top-down (x, y) plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product of the lifted vectors.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Lift into 3D at the given height.
    pub fn lift(self, z: f64) -> Vec3 {
        Vec3::new(self.x, self.y, z)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl serde::Serialize for Vec2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Vec2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Vec2 { x, y })
    }
}

/// 2D line in point + direction form. The direction need not be unit length
/// but must be nonzero.
#[derive(Debug, Clone, Copy)]
pub struct Line2 {
    pub point: Vec2,
    pub dir: Vec2,
}

impl Line2 {
    pub fn new(point: Vec2, dir: Vec2) -> Self {
        Line2 { point, dir }
    }

    /// Perpendicular distance from `p` to the line.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let n = self.dir.norm();
        if n < 1e-12 {
            return self.point.distance(p);
        }
        (self.dir.cross(p - self.point) / n).abs()
    }
}

/// Intersection of two 2D lines, or `None` when they are parallel within
/// [`PARALLEL_SIN_TOL`] (the caller treats that as degenerate motion).
pub fn line_intersection_2d(l1: &Line2, l2: &Line2) -> Option<Vec2> {
    let n1 = l1.dir.norm();
    let n2 = l2.dir.norm();
    if n1 < 1e-12 || n2 < 1e-12 {
        return None;
    }
    let denom = l1.dir.cross(l2.dir);
    if denom.abs() <= PARALLEL_SIN_TOL * n1 * n2 {
        return None;
    }
    let t = (l2.point - l1.point).cross(l2.dir) / denom;
    Some(l1.point + l1.dir * t)
}

/// Per-point part tag carried by labeled clouds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartLabel {
    Body,
    MotionPart,
    Handle,
    Outlier,
    Unknown,
}

impl PartLabel {
    /// Stable numeric code used by the PLY `label` property.
    pub fn code(self) -> u8 {
        match self {
            PartLabel::Body => 0,
            PartLabel::MotionPart => 1,
            PartLabel::Handle => 2,
            PartLabel::Outlier => 3,
            PartLabel::Unknown => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<PartLabel> {
        Some(match code {
            0 => PartLabel::Body,
            1 => PartLabel::MotionPart,
            2 => PartLabel::Handle,
            3 => PartLabel::Outlier,
            4 => PartLabel::Unknown,
            _ => return None,
        })
    }
}

/// Ordered set of 3D points with optional per-point part labels.
///
/// Invariant: when labels are present they have the same length as `points`.
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub labels: Option<Vec<PartLabel>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud { points, labels: None }
    }

    pub fn with_labels(points: Vec<Vec3>, labels: Vec<PartLabel>) -> Self {
        assert_eq!(points.len(), labels.len(), "label/point length mismatch");
        PointCloud { points, labels: Some(labels) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self, i: usize) -> PartLabel {
        self.labels
            .as_ref()
            .map_or(PartLabel::Unknown, |l| l[i])
    }

    /// Keep exactly the points whose mask entry is true, preserving order
    /// and labels.
    pub fn masked(&self, keep: &[bool]) -> PointCloud {
        assert_eq!(keep.len(), self.points.len());
        let points = self
            .points
            .iter()
            .zip(keep)
            .filter_map(|(p, &k)| k.then_some(*p))
            .collect();
        let labels = self.labels.as_ref().map(|ls| {
            ls.iter()
                .zip(keep)
                .filter_map(|(l, &k)| k.then_some(*l))
                .collect()
        });
        PointCloud { points, labels }
    }

    /// New cloud containing the points at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> PointCloud {
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|ls| indices.iter().map(|&i| ls[i]).collect());
        PointCloud { points, labels }
    }
}

/// Normalize a rectangle heading into `[0, π)`.
pub fn normalize_heading(theta: f64) -> f64 {
    let t = theta.rem_euclid(std::f64::consts::PI);
    if t >= std::f64::consts::PI {
        0.0
    } else {
        t
    }
}

/// Top-down rectangle: center, half extents with the longer one first, and
/// the heading (radians in `[0, π)`) of the longer edges.
#[derive(Debug, Clone, Copy)]
pub struct Rect2 {
    pub center: Vec2,
    /// Half extent along the heading direction (the longer edges).
    pub half_long: f64,
    /// Half extent across the heading direction.
    pub half_short: f64,
    /// Direction of the longer edges, radians in `[0, π)`.
    pub heading: f64,
}

impl Rect2 {
    /// Build from a center, half extents along/across `heading`, swapping the
    /// pair (and rotating the heading by 90°) so that `half_long >= half_short`.
    pub fn new(center: Vec2, half_u: f64, half_v: f64, heading: f64) -> Self {
        let (half_long, half_short, theta) = if half_u >= half_v {
            (half_u, half_v, heading)
        } else {
            (half_v, half_u, heading + std::f64::consts::FRAC_PI_2)
        };
        Rect2 { center, half_long, half_short, heading: normalize_heading(theta) }
    }

    /// Unit vector along the longer edges.
    pub fn long_dir(&self) -> Vec2 {
        Vec2::new(self.heading.cos(), self.heading.sin())
    }

    /// Unit vector along the shorter edges.
    pub fn short_dir(&self) -> Vec2 {
        self.long_dir().perp()
    }

    /// Central line running along the longer edges (equivalently, the
    /// perpendicular bisector of the shorter edges).
    pub fn midline(&self) -> Line2 {
        Line2 { point: self.center, dir: self.long_dir() }
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_long * self.half_short
    }

    /// Aspect ratio `half_long / half_short` (>= 1; infinite for degenerate
    /// zero-width rectangles).
    pub fn aspect(&self) -> f64 {
        self.half_long / self.half_short
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let u = self.long_dir() * self.half_long;
        let v = self.short_dir() * self.half_short;
        [
            self.center + u + v,
            self.center + u - v,
            self.center - u - v,
            self.center - u + v,
        ]
    }

    /// True when `p` lies inside the rectangle inflated by `margin` on every
    /// side (boundary inclusive).
    pub fn contains(&self, p: Vec2, margin: f64) -> bool {
        let d = p - self.center;
        let u = d.dot(self.long_dir());
        let v = d.dot(self.short_dir());
        u.abs() <= self.half_long + margin && v.abs() <= self.half_short + margin
    }
}

/// Z-aligned oriented bounding box: a top-down rectangle extruded over a
/// vertical interval.
#[derive(Debug, Clone, Copy)]
pub struct OrientedBoundingBox {
    pub rect: Rect2,
    pub z_min: f64,
    pub z_max: f64,
}

impl OrientedBoundingBox {
    /// Rectangle center lifted to mid-height.
    pub fn center(&self) -> Vec3 {
        self.rect.center.lift(0.5 * (self.z_min + self.z_max))
    }

    /// True when `p` lies inside the box inflated by `margin` on all six
    /// faces (boundary inclusive).
    pub fn contains(&self, p: Vec3, margin: f64) -> bool {
        p.z >= self.z_min - margin
            && p.z <= self.z_max + margin
            && self.rect.contains(p.xy(), margin)
    }
}

/// Joint kind of a 1-DoF articulated part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Prismatic,
    Revolute,
}

/// A 1-DoF joint axis: a pivot point on the axis line plus a unit direction.
#[derive(Debug, Clone, Copy)]
pub struct JointAxis {
    pub kind: JointKind,
    pub pivot: Vec3,
    pub direction: Vec3,
}

impl JointAxis {
    /// Construct with a normalized direction. Panics on a zero direction.
    pub fn new(kind: JointKind, pivot: Vec3, direction: Vec3) -> Self {
        let direction = direction
            .normalized()
            .expect("joint axis direction must be nonzero");
        JointAxis { kind, pivot, direction }
    }

    pub fn prismatic(pivot: Vec3, direction: Vec3) -> Self {
        Self::new(JointKind::Prismatic, pivot, direction)
    }

    pub fn revolute(pivot: Vec3, direction: Vec3) -> Self {
        Self::new(JointKind::Revolute, pivot, direction)
    }

    /// Perpendicular distance from `p` to the axis line.
    pub fn distance_to_line(&self, p: Vec3) -> f64 {
        let r = p - self.pivot;
        (r - self.direction * r.dot(self.direction)).norm()
    }
}

/// Rigid rotation of `p` by `angle` radians about the axis line (Rodrigues).
pub fn rotate_about_axis(p: Vec3, axis: &JointAxis, angle: f64) -> Vec3 {
    debug_assert_eq!(axis.kind, JointKind::Revolute);
    let k = axis.direction;
    let v = p - axis.pivot;
    let (s, c) = angle.sin_cos();
    let rotated = v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c));
    axis.pivot + rotated
}

/// Geometric evidence backing an axis estimate: the bounding-box centers of
/// the start/end motion parts and the derived displacement/tangent vectors.
#[derive(Debug, Clone, Copy)]
pub struct AxisEvidence {
    /// Center of the start-frame motion-part box.
    pub start_center: Vec3,
    /// Center of the end-frame motion-part box.
    pub end_center: Vec3,
    /// `end_center - start_center`, exactly.
    pub displacement: Vec3,
    /// `(start_center -> pivot) × z` for revolute estimates; zero for
    /// prismatic ones.
    pub tangent: Vec3,
    /// Estimated pivot in the top-down view (start-frame box center for
    /// prismatic estimates).
    pub pivot_2d: Vec2,
}
