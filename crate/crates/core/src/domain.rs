//! Domains, points, and nested pairs.
//!
//! Geometry feeds the inequality engine on a known side, so every derived
//! quantity here is bracketed rather than merely estimated:
//!
//! * `signed_distance` is exact for intervals, balls, boxes, and polygons,
//!   exact to bisection tolerance for ellipses, and inside a union of balls
//!   its magnitude is a certified lower bound on the true boundary distance
//!   (the safe side for sphere jumps and inscribed Harnack balls),
//! * `boundary_sample` reports a certified covering radius, which turns a
//!   sampled boundary extremum into a one-sided bound after a Lipschitz or
//!   Harnack correction,
//! * diameters and nesting gaps come as `[lower, upper]` brackets with exact
//!   fast paths for the shape pairs the corpus uses.

use crate::error::Error;
use crate::Result;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Hard cap on the ambient dimension; estimator geometry stays in `d <= 3`
/// but the scalar kernel formulas remain valid above it.
pub const MAX_DIM: usize = 8;

/// Slack used when classifying points against analytic shapes.
pub const GEOM_TOL: f64 = 1e-9;

/// A point in `R^d`, `d <= MAX_DIM`, stored inline so walks never allocate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    dim: u8,
    c: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&coords.len()),
            "dimension must be in 1..={MAX_DIM}"
        );
        assert!(
            coords.iter().all(|x| x.is_finite()),
            "coordinates must be finite"
        );
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            dim: coords.len() as u8,
            c,
        }
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Point {
            dim: dim as u8,
            c: [0.0; MAX_DIM],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    pub fn get(&self, i: usize) -> f64 {
        assert!(i < self.dim());
        self.c[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        assert!(i < self.dim());
        self.c[i] = v;
    }

    pub fn add(&self, other: &Point) -> Point {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Point) -> Point {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Point {
        let mut out = *self;
        for x in &mut out.c[..self.dim()] {
            *x *= s;
        }
        out
    }

    pub fn dot(&self, other: &Point) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }

    /// `self + t * (other - self)`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        self.add(&other.sub(self).scale(t))
    }

    fn zip(&self, other: &Point, f: impl Fn(f64, f64) -> f64) -> Point {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = *self;
        for i in 0..self.dim() {
            out.c[i] = f(self.c[i], other.c[i]);
        }
        out
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if !(1..=MAX_DIM).contains(&v.len()) {
            return Err(D::Error::custom(format!(
                "point needs 1..={MAX_DIM} coordinates, got {}",
                v.len()
            )));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(D::Error::custom("point coordinates must be finite"));
        }
        Ok(Point::new(&v))
    }
}

/// A closed `[lower, upper]` bracket around a scalar quantity. Consumers
/// pick the side that keeps their inequality a theorem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Bracket { lower: v, upper: v }
    }

    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(lower <= upper, "bracket inverted: [{lower}, {upper}]");
        Bracket { lower, upper }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn diameter(&self) -> f64 {
        self.max.dist(&self.min)
    }
}

/// Open interval `(a, b)`; the dimension-one domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::geometry(format!(
                "interval needs a < b, got [{a}, {b}]"
            )));
        }
        Ok(Interval { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Open ball in `R^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::geometry(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn signed_distance(&self, p: &Point) -> f64 {
        p.dist(&self.center) - self.radius
    }
}

/// Implicit shapes beyond balls and intervals. Signed distances are exact
/// except inside a union of balls, where the magnitude is a lower bound on
/// the boundary distance (still the safe side for every consumer).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Axis-aligned box, dimension 2 or 3.
    Box { center: Point, half_extents: Point },
    /// Ellipse in the plane with semi-axes along the coordinate axes.
    Ellipse { center: Point, semi_axes: [f64; 2] },
    /// Union of open disks in the plane.
    UnionOfBalls { balls: Vec<Ball> },
    /// Simple polygon in the plane, vertices in order, no repeated closing
    /// vertex.
    Polygon { vertices: Vec<Point> },
}

/// A domain described by a signed distance function from the [`Shape`]
/// catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdfDomain {
    pub shape: Shape,
}

impl SdfDomain {
    pub fn new(shape: Shape) -> Result<Self> {
        match &shape {
            Shape::Box {
                center,
                half_extents,
            } => {
                if center.dim() != half_extents.dim() || !(2..=3).contains(&center.dim()) {
                    return Err(Error::geometry("box needs matching dimension 2 or 3"));
                }
                if half_extents.coords().iter().any(|h| *h <= 0.0) {
                    return Err(Error::geometry("box half extents must be positive"));
                }
            }
            Shape::Ellipse { center, semi_axes } => {
                if center.dim() != 2 {
                    return Err(Error::geometry("ellipse lives in dimension 2"));
                }
                if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::geometry("ellipse semi-axes must be positive"));
                }
            }
            Shape::UnionOfBalls { balls } => {
                if balls.is_empty() {
                    return Err(Error::geometry("union of balls needs at least one ball"));
                }
                if balls.iter().any(|b| b.dim() != 2) {
                    return Err(Error::geometry(
                        "union of balls is supported in dimension 2",
                    ));
                }
                if balls.iter().any(|b| b.radius <= 0.0) {
                    return Err(Error::geometry("ball radii must be positive"));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::geometry("polygon needs at least three vertices"));
                }
                if vertices.iter().any(|v| v.dim() != 2) {
                    return Err(Error::geometry("polygon lives in dimension 2"));
                }
            }
        }
        Ok(SdfDomain { shape })
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Box { center, .. } => center.dim(),
            Shape::Ellipse { .. } | Shape::UnionOfBalls { .. } | Shape::Polygon { .. } => 2,
        }
    }

    pub fn signed_distance(&self, p: &Point) -> f64 {
        match &self.shape {
            Shape::Box {
                center,
                half_extents,
            } => {
                let d = p.dim();
                let mut q = [0.0; MAX_DIM];
                for (i, qi) in q[..d].iter_mut().enumerate() {
                    *qi = (p.get(i) - center.get(i)).abs() - half_extents.get(i);
                }
                let outside: f64 = q[..d]
                    .iter()
                    .map(|x| x.max(0.0).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let inside = q[..d]
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
                    .min(0.0);
                outside + inside
            }
            Shape::Ellipse { center, semi_axes } => {
                let y0 = (p.get(0) - center.get(0)).abs();
                let y1 = (p.get(1) - center.get(1)).abs();
                let (dist, _) = ellipse_distance(semi_axes[0], semi_axes[1], y0, y1);
                let inside = (y0 / semi_axes[0]).powi(2) + (y1 / semi_axes[1]).powi(2) < 1.0;
                if inside {
                    -dist
                } else {
                    dist
                }
            }
            Shape::UnionOfBalls { balls } => balls
                .iter()
                .map(|b| b.signed_distance(p))
                .fold(f64::INFINITY, f64::min),
            Shape::Polygon { vertices } => polygon_signed_distance(vertices, p),
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        match &self.shape {
            Shape::Box {
                center,
                half_extents,
            } => Aabb {
                min: center.sub(half_extents),
                max: center.add(half_extents),
            },
            Shape::Ellipse { center, semi_axes } => {
                let h = Point::new(&[semi_axes[0], semi_axes[1]]);
                Aabb {
                    min: center.sub(&h),
                    max: center.add(&h),
                }
            }
            Shape::UnionOfBalls { balls } => {
                let mut min = [f64::INFINITY; 2];
                let mut max = [f64::NEG_INFINITY; 2];
                for b in balls {
                    for i in 0..2 {
                        min[i] = min[i].min(b.center.get(i) - b.radius);
                        max[i] = max[i].max(b.center.get(i) + b.radius);
                    }
                }
                Aabb {
                    min: Point::new(&min),
                    max: Point::new(&max),
                }
            }
            Shape::Polygon { vertices } => {
                let mut min = [f64::INFINITY; 2];
                let mut max = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for i in 0..2 {
                        min[i] = min[i].min(v.get(i));
                        max[i] = max[i].max(v.get(i));
                    }
                }
                Aabb {
                    min: Point::new(&min),
                    max: Point::new(&max),
                }
            }
        }
    }
}

/// Distance from the first-quadrant point `(y0, y1)` to the ellipse with
/// semi-axes `(e0, e1)`, by bisection on the Lagrange parameter (Eberly's
/// robust scheme). Also returns the nearest ellipse point.
fn ellipse_distance(e0: f64, e1: f64, y0: f64, y1: f64) -> (f64, [f64; 2]) {
    // Reduce to e0 >= e1 by swapping axes.
    if e0 < e1 {
        let (d, x) = ellipse_distance(e1, e0, y1, y0);
        return (d, [x[1], x[0]]);
    }
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g.abs() < 1e-15 {
                return (0.0, [y0, y1]);
            }
            // f(t) = (e0 y0 / (t + e0^2))^2 + (e1 y1 / (t + e1^2))^2 - 1 is
            // strictly decreasing on (-e1^2, inf) with a unique root.
            let mut lo = -e1 * e1 + e1 * y1;
            let mut hi = -e1 * e1 + (e0 * y0).hypot(e1 * y1);
            for _ in 0..200 {
                let t = 0.5 * (lo + hi);
                let r0 = e0 * y0 / (t + e0 * e0);
                let r1 = e1 * y1 / (t + e1 * e1);
                let f = r0 * r0 + r1 * r1 - 1.0;
                if f > 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
                if hi - lo < 1e-16 * (1.0 + hi.abs()) {
                    break;
                }
            }
            let t = 0.5 * (lo + hi);
            let x0 = e0 * e0 * y0 / (t + e0 * e0);
            let x1 = e1 * e1 * y1 / (t + e1 * e1);
            ((x0 - y0).hypot(x1 - y1), [x0, x1])
        } else {
            ((y1 - e1).abs(), [0.0, e1])
        }
    } else if y0 < (e0 * e0 - e1 * e1) / e0 {
        // Inside the evolute cusp: nearest point is off-axis.
        let x0 = e0 * e0 * y0 / (e0 * e0 - e1 * e1);
        let z = x0 / e0;
        let x1 = e1 * (1.0 - z * z).max(0.0).sqrt();
        ((x0 - y0).hypot(x1), [x0, x1])
    } else {
        ((y0 - e0).abs(), [e0, 0.0])
    }
}

/// Exact signed distance to a simple polygon: unsigned distance to the edge
/// set, negated when an even-odd crossing count says the point is inside.
fn polygon_signed_distance(vertices: &[Point], p: &Point) -> f64 {
    let (px, py) = (p.get(0), p.get(1));
    let mut d2 = f64::INFINITY;
    let mut inside = false;
    let n = vertices.len();
    for i in 0..n {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % n];
        let (ax, ay) = (a.get(0), a.get(1));
        let (bx, by) = (b.get(0), b.get(1));
        let (ex, ey) = (bx - ax, by - ay);
        let (wx, wy) = (px - ax, py - ay);
        let t = ((wx * ex + wy * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
        let (cx, cy) = (wx - t * ex, wy - t * ey);
        d2 = d2.min(cx * cx + cy * cy);
        if (ay > py) != (by > py) {
            let x_cross = ax + (py - ay) * ex / ey;
            if px < x_cross {
                inside = !inside;
            }
        }
    }
    let d = d2.sqrt();
    if inside {
        -d
    } else {
        d
    }
}

/// Deterministic boundary sample with a certified covering radius: every
/// boundary point lies within `covering_radius` of some sample point.
#[derive(Clone, Debug)]
pub struct BoundarySample {
    pub points: Vec<Point>,
    pub covering_radius: f64,
}

/// A domain of one of the three supported representations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Interval(Interval),
    Ball(Ball),
    Sdf(SdfDomain),
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Ok(Domain::Interval(Interval::new(a, b)?))
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        Ok(Domain::Ball(Ball::new(center, radius)?))
    }

    pub fn sdf(shape: Shape) -> Result<Self> {
        Ok(Domain::Sdf(SdfDomain::new(shape)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval(_) => 1,
            Domain::Ball(b) => b.dim(),
            Domain::Sdf(s) => s.dim(),
        }
    }

    /// Re-checks the constructor invariants. Deserialization fills the
    /// fields directly, so loaders must call this before trusting a value.
    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Interval(iv) => Interval::new(iv.a, iv.b).map(drop),
            Domain::Ball(b) => Ball::new(b.center, b.radius).map(drop),
            Domain::Sdf(s) => SdfDomain::new(s.shape.clone()).map(drop),
        }
    }

    /// Negative inside, positive outside. Exact except inside a union of
    /// balls, where the magnitude is a lower bound on the distance to the
    /// boundary.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        match self {
            Domain::Interval(iv) => {
                let x = p.get(0);
                (iv.a - x).max(x - iv.b)
            }
            Domain::Ball(b) => b.signed_distance(p),
            Domain::Sdf(s) => s.signed_distance(p),
        }
    }

    /// Certified lower bound on the distance from `p` to the boundary when
    /// `p` is inside; 0 otherwise. Safe as a sphere-jump radius and as an
    /// inscribed Harnack ball radius.
    pub fn inside_distance_lower(&self, p: &Point) -> f64 {
        (-self.signed_distance(p)).max(0.0)
    }

    pub fn contains_closure(&self, p: &Point, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }

    pub fn strictly_inside(&self, p: &Point, margin: f64) -> bool {
        self.signed_distance(p) <= -margin
    }

    pub fn bounding_box(&self) -> Aabb {
        match self {
            Domain::Interval(iv) => Aabb {
                min: Point::new(&[iv.a]),
                max: Point::new(&[iv.b]),
            },
            Domain::Ball(b) => {
                let h = Point::new(&vec![b.radius; b.dim()]);
                Aabb {
                    min: b.center.sub(&h),
                    max: b.center.add(&h),
                }
            }
            Domain::Sdf(s) => s.bounding_box(),
        }
    }

    /// `[lower, upper]` bracket on the diameter. Exact for intervals, balls,
    /// boxes, ellipses, and polygons; a union of balls gets the certified
    /// pair bound `max_{i,j}(|c_i - c_j| + r_i + r_j)` as its upper side.
    pub fn diameter(&self) -> Bracket {
        match self {
            Domain::Interval(iv) => Bracket::exact(iv.length()),
            Domain::Ball(b) => Bracket::exact(2.0 * b.radius),
            Domain::Sdf(s) => match &s.shape {
                Shape::Box { half_extents, .. } => Bracket::exact(2.0 * half_extents.norm()),
                Shape::Ellipse { semi_axes, .. } => {
                    Bracket::exact(2.0 * semi_axes[0].max(semi_axes[1]))
                }
                Shape::UnionOfBalls { balls } => {
                    let mut upper = 0.0f64;
                    let mut lower = 0.0f64;
                    for (i, bi) in balls.iter().enumerate() {
                        lower = lower.max(2.0 * bi.radius);
                        for bj in &balls[i..] {
                            let c = bi.center.dist(&bj.center);
                            upper = upper.max(c + bi.radius + bj.radius);
                            lower = lower.max(c + bi.radius.max(bj.radius));
                        }
                    }
                    Bracket::new(lower.min(upper), upper)
                }
                Shape::Polygon { vertices } => {
                    // The diameter of a polygon is attained at a vertex pair.
                    let mut best = 0.0f64;
                    for (i, a) in vertices.iter().enumerate() {
                        for b in &vertices[i + 1..] {
                            best = best.max(a.dist(b));
                        }
                    }
                    Bracket::exact(best)
                }
            },
        }
    }

    /// Deterministic boundary sample of roughly `n` points with a certified
    /// covering radius. Intervals return both endpoints exactly.
    pub fn boundary_sample(&self, n: usize) -> BoundarySample {
        let n = n.max(4);
        match self {
            Domain::Interval(iv) => BoundarySample {
                points: vec![Point::new(&[iv.a]), Point::new(&[iv.b])],
                covering_radius: 0.0,
            },
            Domain::Ball(b) => match b.dim() {
                1 => BoundarySample {
                    points: vec![
                        Point::new(&[b.center.get(0) - b.radius]),
                        Point::new(&[b.center.get(0) + b.radius]),
                    ],
                    covering_radius: 0.0,
                },
                2 => {
                    let points = circle_points(&b.center, b.radius, n);
                    BoundarySample {
                        points,
                        covering_radius: b.radius * std::f64::consts::PI / n as f64,
                    }
                }
                3 => sphere_lat_long(&b.center, b.radius, n),
                d => panic!("boundary sampling unsupported in dimension {d}"),
            },
            Domain::Sdf(s) => match &s.shape {
                Shape::Box {
                    center,
                    half_extents,
                } => {
                    if center.dim() == 2 {
                        let (cx, cy) = (center.get(0), center.get(1));
                        let (hx, hy) = (half_extents.get(0), half_extents.get(1));
                        let corners = vec![
                            Point::new(&[cx - hx, cy - hy]),
                            Point::new(&[cx + hx, cy - hy]),
                            Point::new(&[cx + hx, cy + hy]),
                            Point::new(&[cx - hx, cy + hy]),
                        ];
                        polyline_sample(&corners, n)
                    } else {
                        box_faces_sample(center, half_extents, n)
                    }
                }
                Shape::Ellipse { center, semi_axes } => {
                    let mut points = Vec::with_capacity(n);
                    for k in 0..n {
                        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                        points.push(Point::new(&[
                            center.get(0) + semi_axes[0] * t.cos(),
                            center.get(1) + semi_axes[1] * t.sin(),
                        ]));
                    }
                    // Arc length between neighbours is at most max(a,b) dt.
                    let cover = semi_axes[0].max(semi_axes[1]) * std::f64::consts::PI / n as f64;
                    BoundarySample {
                        points,
                        covering_radius: cover,
                    }
                }
                Shape::UnionOfBalls { balls } => union_boundary_sample(balls, n),
                Shape::Polygon { vertices } => polyline_sample(vertices, n),
            },
        }
    }

    /// Nearest boundary point for walk-on-spheres landing. `None` means the
    /// candidate projection could not be certified to lie on the boundary
    /// (possible near inner corners of a union of balls); the caller keeps
    /// walking.
    pub fn boundary_project(&self, p: &Point) -> Option<Point> {
        match self {
            Domain::Interval(iv) => {
                let x = p.get(0);
                let target = if (x - iv.a).abs() <= (iv.b - x).abs() {
                    iv.a
                } else {
                    iv.b
                };
                Some(Point::new(&[target]))
            }
            Domain::Ball(b) => {
                let v = p.sub(&b.center);
                let r = v.norm();
                if r == 0.0 {
                    let mut q = b.center;
                    q.set(0, q.get(0) + b.radius);
                    return Some(q);
                }
                Some(b.center.add(&v.scale(b.radius / r)))
            }
            Domain::Sdf(s) => match &s.shape {
                Shape::Box {
                    center,
                    half_extents,
                } => Some(box_project(center, half_extents, p)),
                Shape::Ellipse { center, semi_axes } => {
                    let y0 = p.get(0) - center.get(0);
                    let y1 = p.get(1) - center.get(1);
                    let (_, q) = ellipse_distance(semi_axes[0], semi_axes[1], y0.abs(), y1.abs());
                    Some(Point::new(&[
                        center.get(0) + q[0].copysign(if y0 == 0.0 { 1.0 } else { y0 }),
                        center.get(1) + q[1].copysign(if y1 == 0.0 { 1.0 } else { y1 }),
                    ]))
                }
                Shape::UnionOfBalls { balls } => {
                    let (mut best, mut best_sd) = (None, f64::INFINITY);
                    for b in balls {
                        let sd = b.signed_distance(p);
                        if sd < best_sd {
                            best_sd = sd;
                            best = Some(b);
                        }
                    }
                    let b = best?;
                    let v = p.sub(&b.center);
                    let r = v.norm();
                    if r == 0.0 {
                        return None;
                    }
                    let q = b.center.add(&v.scale(b.radius / r));
                    // Valid only if q is genuinely on the union's boundary,
                    // not buried inside a sibling ball.
                    let depth = balls
                        .iter()
                        .map(|o| o.signed_distance(&q))
                        .fold(f64::INFINITY, f64::min);
                    if depth < -1e-9 * b.radius {
                        None
                    } else {
                        Some(q)
                    }
                }
                Shape::Polygon { vertices } => Some(polygon_project(vertices, p)),
            },
        }
    }
}

fn circle_points(center: &Point, radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Point::new(&[
                center.get(0) + radius * t.cos(),
                center.get(1) + radius * t.sin(),
            ])
        })
        .collect()
}

fn sphere_lat_long(center: &Point, radius: f64, n: usize) -> BoundarySample {
    // n_theta rings of 2 n_theta points each gives about n samples total.
    let n_theta = (((n as f64) / 2.0).sqrt().ceil() as usize).max(3);
    let n_phi = 2 * n_theta;
    let d_theta = std::f64::consts::PI / n_theta as f64;
    let d_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut points = Vec::with_capacity(n_theta * n_phi + 2);
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * d_theta;
        for j in 0..n_phi {
            let phi = j as f64 * d_phi;
            points.push(Point::new(&[
                center.get(0) + radius * theta.sin() * phi.cos(),
                center.get(1) + radius * theta.sin() * phi.sin(),
                center.get(2) + radius * theta.cos(),
            ]));
        }
    }
    // Poles close the theta gaps at the axis.
    points.push(Point::new(&[
        center.get(0),
        center.get(1),
        center.get(2) + radius,
    ]));
    points.push(Point::new(&[
        center.get(0),
        center.get(1),
        center.get(2) - radius,
    ]));
    BoundarySample {
        points,
        // Geodesic travel of at most d_theta/2 in latitude and d_phi/2 in
        // longitude reaches a sample.
        covering_radius: radius * 0.5 * (d_theta + d_phi),
    }
}

/// Uniform sampling of a closed polyline with all vertices included.
fn polyline_sample(vertices: &[Point], n: usize) -> BoundarySample {
    let m = vertices.len();
    let total: f64 = (0..m)
        .map(|i| vertices[i].dist(&vertices[(i + 1) % m]))
        .sum();
    let target = total / n as f64;
    let mut points = Vec::new();
    let mut max_gap = 0.0f64;
    for i in 0..m {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % m];
        let len = a.dist(b);
        let segments = (len / target).ceil().max(1.0) as usize;
        let gap = len / segments as f64;
        max_gap = max_gap.max(gap);
        for k in 0..segments {
            points.push(a.lerp(b, k as f64 / segments as f64));
        }
    }
    BoundarySample {
        points,
        covering_radius: max_gap / 2.0,
    }
}

fn box_faces_sample(center: &Point, half: &Point, n: usize) -> BoundarySample {
    // Partition the budget over six faces; inclusive grids keep edges and
    // corners sampled so the covering radius is the half cell diagonal.
    let per_face = (n / 6).max(4);
    let m = (per_face as f64).sqrt().ceil() as usize;
    let mut points = Vec::new();
    let mut cover = 0.0f64;
    for axis in 0..3 {
        let (u, v) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (hu, hv) = (half.get(u), half.get(v));
        let (du, dv) = (2.0 * hu / m as f64, 2.0 * hv / m as f64);
        cover = cover.max(0.5 * du.hypot(dv));
        for side in [-1.0, 1.0] {
            for i in 0..=m {
                for j in 0..=m {
                    let mut p = *center;
                    p.set(axis, center.get(axis) + side * half.get(axis));
                    p.set(u, center.get(u) - hu + du * i as f64);
                    p.set(v, center.get(v) - hv + dv * j as f64);
                    points.push(p);
                }
            }
        }
    }
    BoundarySample {
        points,
        covering_radius: cover,
    }
}

fn union_boundary_sample(balls: &[Ball], n: usize) -> BoundarySample {
    let per = (n / balls.len()).max(16);
    let mut points = Vec::new();
    let keep = |p: &Point| {
        balls
            .iter()
            .map(|b| b.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
            >= -1e-12
    };
    let mut cover = 0.0f64;
    for (i, b) in balls.iter().enumerate() {
        for p in circle_points(&b.center, b.radius, per) {
            if keep(&p) {
                points.push(p);
            }
        }
        // Arc gaps around dropped grid points are closed by the circle
        // intersection points, so the covering radius stays one grid step.
        cover = cover.max(2.0 * std::f64::consts::PI * b.radius / per as f64);
        for o in balls.iter().skip(i + 1) {
            for q in circle_intersections(b, o) {
                if keep(&q) {
                    points.push(q);
                }
            }
        }
    }
    assert!(
        !points.is_empty(),
        "union of balls produced no boundary points"
    );
    BoundarySample {
        points,
        covering_radius: cover,
    }
}

fn circle_intersections(a: &Ball, b: &Ball) -> Vec<Point> {
    let d = a.center.dist(&b.center);
    if d == 0.0 || d > a.radius + b.radius || d < (a.radius - b.radius).abs() {
        return Vec::new();
    }
    let l = (a.radius * a.radius - b.radius * b.radius + d * d) / (2.0 * d);
    let h2 = a.radius * a.radius - l * l;
    if h2 < 0.0 {
        return Vec::new();
    }
    let h = h2.sqrt();
    let ex = (b.center.get(0) - a.center.get(0)) / d;
    let ey = (b.center.get(1) - a.center.get(1)) / d;
    let mx = a.center.get(0) + l * ex;
    let my = a.center.get(1) + l * ey;
    vec![
        Point::new(&[mx + h * -ey, my + h * ex]),
        Point::new(&[mx - h * -ey, my - h * ex]),
    ]
}

fn box_project(center: &Point, half: &Point, p: &Point) -> Point {
    let d = p.dim();
    let mut q = *p;
    let mut inside = true;
    for i in 0..d {
        let lo = center.get(i) - half.get(i);
        let hi = center.get(i) + half.get(i);
        if p.get(i) < lo {
            q.set(i, lo);
            inside = false;
        } else if p.get(i) > hi {
            q.set(i, hi);
            inside = false;
        }
    }
    if !inside {
        return q;
    }
    // Inside: push the coordinate with the smallest slack to its face.
    let mut best_axis = 0;
    let mut best_slack = f64::INFINITY;
    let mut best_side = 1.0;
    for i in 0..d {
        let up = center.get(i) + half.get(i) - p.get(i);
        let down = p.get(i) - (center.get(i) - half.get(i));
        if up < best_slack {
            best_slack = up;
            best_axis = i;
            best_side = 1.0;
        }
        if down < best_slack {
            best_slack = down;
            best_axis = i;
            best_side = -1.0;
        }
    }
    q.set(
        best_axis,
        center.get(best_axis) + best_side * half.get(best_axis),
    );
    q
}

fn polygon_project(vertices: &[Point], p: &Point) -> Point {
    let n = vertices.len();
    let mut best = vertices[0];
    let mut best_d2 = f64::INFINITY;
    for i in 0..n {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % n];
        let e = b.sub(a);
        let w = p.sub(a);
        let t = (w.dot(&e) / e.dot(&e)).clamp(0.0, 1.0);
        let q = a.add(&e.scale(t));
        let d2 = p.sub(&q).dot(&p.sub(&q));
        if d2 < best_d2 {
            best_d2 = d2;
            best = q;
        }
    }
    best
}

/// Two nested domains and a base point: `base` strictly inside `inner`,
/// `inner` compactly contained in `outer`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestedPair {
    pub inner: Domain,
    pub outer: Domain,
    pub base: Point,
}

/// Sampling effort used when a bracket has no closed form.
const GAP_SAMPLES: usize = 512;

impl NestedPair {
    pub fn new(inner: Domain, outer: Domain, base: Point) -> Result<Self> {
        let pair = NestedPair { inner, outer, base };
        pair.validate()?;
        Ok(pair)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner.dim() != self.outer.dim() || self.inner.dim() != self.base.dim() {
            return Err(Error::geometry(
                "inner, outer, and base dimensions must agree",
            ));
        }
        if !self.inner.strictly_inside(&self.base, GEOM_TOL) {
            return Err(Error::geometry(
                "base point must lie strictly inside the inner domain",
            ));
        }
        let gap = self.gap().lower;
        if gap <= 0.0 {
            return Err(Error::geometry(format!(
                "inner domain must be compactly contained in the outer domain \
                 (certified gap lower bound {gap:.3e} is not positive)"
            )));
        }
        Ok(())
    }

    /// Bracket on `R = dist(base, boundary of inner)`. The lower side is the
    /// signed distance magnitude; the upper side is the nearest sampled
    /// boundary point, exact for intervals and balls.
    pub fn base_inradius(&self) -> Bracket {
        match &self.inner {
            Domain::Interval(iv) => {
                let x = self.base.get(0);
                Bracket::exact((x - iv.a).min(iv.b - x))
            }
            Domain::Ball(b) => Bracket::exact(b.radius - self.base.dist(&b.center)),
            Domain::Sdf(_) => {
                let lower = self.inner.inside_distance_lower(&self.base);
                let sample = self.inner.boundary_sample(GAP_SAMPLES);
                let upper = sample
                    .points
                    .iter()
                    .map(|q| q.dist(&self.base))
                    .fold(f64::INFINITY, f64::min);
                Bracket::new(lower.min(upper), upper)
            }
        }
    }

    /// Bracket on the nesting gap `dist(closure of inner, complement of
    /// outer)`. Exact for interval and ball pairs and for polygon-, box-,
    /// and union-shaped inner domains inside a ball; otherwise the lower
    /// side subtracts the boundary covering radius from a sampled minimum.
    pub fn gap(&self) -> Bracket {
        match (&self.inner, &self.outer) {
            (Domain::Interval(di), Domain::Interval(dg)) => {
                Bracket::exact((di.a - dg.a).min(dg.b - di.b))
            }
            (Domain::Ball(bi), Domain::Ball(bg)) => {
                Bracket::exact(bg.radius - bi.center.dist(&bg.center) - bi.radius)
            }
            (Domain::Sdf(s), Domain::Ball(bg)) => match &s.shape {
                Shape::Box {
                    center,
                    half_extents,
                } if center.dim() == 2 => {
                    let mut far = 0.0f64;
                    for sx in [-1.0, 1.0] {
                        for sy in [-1.0, 1.0] {
                            let corner = Point::new(&[
                                center.get(0) + sx * half_extents.get(0),
                                center.get(1) + sy * half_extents.get(1),
                            ]);
                            far = far.max(corner.dist(&bg.center));
                        }
                    }
                    Bracket::exact(bg.radius - far)
                }
                Shape::Box {
                    center,
                    half_extents,
                } => {
                    let mut far = 0.0f64;
                    for sx in [-1.0, 1.0] {
                        for sy in [-1.0, 1.0] {
                            for sz in [-1.0, 1.0] {
                                let corner = Point::new(&[
                                    center.get(0) + sx * half_extents.get(0),
                                    center.get(1) + sy * half_extents.get(1),
                                    center.get(2) + sz * half_extents.get(2),
                                ]);
                                far = far.max(corner.dist(&bg.center));
                            }
                        }
                    }
                    Bracket::exact(bg.radius - far)
                }
                Shape::Polygon { vertices } => {
                    let far = vertices
                        .iter()
                        .map(|v| v.dist(&bg.center))
                        .fold(0.0f64, f64::max);
                    Bracket::exact(bg.radius - far)
                }
                Shape::UnionOfBalls { balls } => {
                    let far = balls
                        .iter()
                        .map(|b| b.center.dist(&bg.center) + b.radius)
                        .fold(0.0f64, f64::max);
                    Bracket::exact(bg.radius - far)
                }
                Shape::Ellipse { .. } => self.sampled_gap(),
            },
            _ => self.sampled_gap(),
        }
    }

    fn sampled_gap(&self) -> Bracket {
        let sample = self.inner.boundary_sample(GAP_SAMPLES);
        let mut min_clear = f64::INFINITY;
        for q in &sample.points {
            min_clear = min_clear.min(self.outer.inside_distance_lower(q));
        }
        // An unsampled boundary point is within covering_radius of a sample,
        // so its clearance is at least the sampled minimum minus that.
        Bracket::new((min_clear - sample.covering_radius).max(0.0), min_clear)
    }
}
