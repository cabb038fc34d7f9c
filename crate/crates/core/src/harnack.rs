//! Harnack distances: exact formulas, a converging oracle, and certified
//! chain upper bounds.
//!
//! The Harnack distance between `x` and `y` in a domain `D` is the smallest
//! `t >= 1` with `h(y)/t <= h(x) <= t h(y)` for every positive harmonic `h`
//! on `D`. Three facts drive everything here:
//!
//! * in a ball it has a closed form when one argument is the center,
//! * it never exceeds the distance computed in any subdomain containing the
//!   two points,
//! * it is submultiplicative along chains: `d(x, z) <= d(x, y) d(y, z)`.
//!
//! Chaining inscribed balls therefore yields a certified upper bound in any
//! domain with a conservative inside-distance function: each hop stays in an
//! inscribed ball centered at the hop's start, where the closed form is
//! exact. Upper bounds are the useful side, because every inequality the
//! engine checks consumes the Harnack distance destructively.

use crate::domain::{Ball, Domain, Interval, NestedPair, Point, GEOM_TOL};
use crate::error::Error;
use crate::Result;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

/// How a reported Harnack value relates to the true distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Equal to the true distance up to floating point rounding.
    Exact,
    /// Certified `>=` the true distance.
    UpperBound,
    /// Converging estimate with no certified side; never fed into an
    /// inequality slot that needs certification.
    OracleEstimate,
}

/// A Harnack distance together with its certification status.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HarnackValue {
    pub value: f64,
    pub kind: BoundKind,
}

impl HarnackValue {
    pub fn exact(value: f64) -> Self {
        HarnackValue {
            value,
            kind: BoundKind::Exact,
        }
    }

    pub fn upper(value: f64) -> Self {
        HarnackValue {
            value,
            kind: BoundKind::UpperBound,
        }
    }

    /// True when the value may be used where an upper bound is required.
    pub fn is_certified_upper(&self) -> bool {
        matches!(self.kind, BoundKind::Exact | BoundKind::UpperBound)
    }
}

/// Harnack distance from the center of a ball of radius `r` to a point at
/// distance `offset` from it: `(r + offset) r^{d-2} / (r - offset)^{d-1}`
/// for `d >= 2`. In dimension 1 that expression is not the distance; the
/// interval extreme-ray formula gives `r / (r - offset)`, and this function
/// routes there.
pub fn ball_center_distance(d: u32, radius: f64, offset: f64) -> Result<HarnackValue> {
    if !(radius > 0.0 && offset >= 0.0 && offset < radius) {
        return Err(Error::geometry(format!(
            "need 0 <= offset < radius, got offset={offset}, radius={radius}"
        )));
    }
    if d == 1 {
        let iv = Interval::new(-radius, radius)?;
        return interval_distance(&iv, 0.0, offset);
    }
    let value =
        (radius + offset) * radius.powi(d as i32 - 2) / (radius - offset).powi(d as i32 - 1);
    Ok(HarnackValue::exact(value))
}

/// Exact Harnack distance in an interval. Positive harmonic functions on
/// `(a, b)` form the cone spanned by `t - a` and `b - t`, so the distance is
/// the largest of the four extreme-ray ratios.
pub fn interval_distance(iv: &Interval, x: f64, y: f64) -> Result<HarnackValue> {
    if !(iv.a < x && x < iv.b && iv.a < y && y < iv.b) {
        return Err(Error::geometry(format!(
            "points must lie strictly inside ({}, {}), got {x}, {y}",
            iv.a, iv.b
        )));
    }
    let r1 = (x - iv.a) / (y - iv.a);
    let r2 = (iv.b - x) / (iv.b - y);
    let value = r1.max(1.0 / r1).max(r2).max(1.0 / r2);
    Ok(HarnackValue::exact(value))
}

/// Converging two-point oracle in a ball: extremal positive harmonic
/// functions are Poisson kernels of boundary points, so the distance is the
/// sup over the boundary of the kernel ratio, scanned here over a
/// deterministic boundary grid. Dimension 1 hits both endpoints and is
/// exact; otherwise the result is a lower estimate converging as `n` grows.
pub fn ball_pair_oracle(ball: &Ball, x: &Point, y: &Point, n: usize) -> Result<HarnackValue> {
    let d = ball.dim();
    let (rx, ry) = (x.dist(&ball.center), y.dist(&ball.center));
    if rx >= ball.radius || ry >= ball.radius {
        return Err(Error::geometry(
            "oracle points must lie strictly inside the ball",
        ));
    }
    let r2 = ball.radius * ball.radius;
    let front = (r2 - rx * rx) / (r2 - ry * ry);
    let zetas: Vec<Point> = match d {
        1 => vec![
            Point::new(&[ball.center.get(0) - ball.radius]),
            Point::new(&[ball.center.get(0) + ball.radius]),
        ],
        2 => (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point::new(&[
                    ball.center.get(0) + ball.radius * t.cos(),
                    ball.center.get(1) + ball.radius * t.sin(),
                ])
            })
            .collect(),
        3 => {
            // Fibonacci sphere: near-uniform and fully deterministic.
            let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64;
                    Point::new(&[
                        ball.center.get(0) + ball.radius * rho * phi.cos(),
                        ball.center.get(1) + ball.radius * rho * phi.sin(),
                        ball.center.get(2) + ball.radius * z,
                    ])
                })
                .collect()
        }
        d => {
            return Err(Error::estimator(format!(
                "oracle unsupported in dimension {d}"
            )))
        }
    };
    let score = |zeta: &Point| front * (y.dist(zeta) / x.dist(zeta)).powi(d as i32);
    let mut best = 1.0f64;
    let mut arg_hi = zetas[0];
    let mut arg_lo = zetas[0];
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for zeta in &zetas {
        let ratio = score(zeta);
        if ratio > hi {
            hi = ratio;
            arg_hi = *zeta;
        }
        if ratio < lo {
            lo = ratio;
            arg_lo = *zeta;
        }
        best = best.max(ratio).max(1.0 / ratio);
    }
    if d >= 2 {
        // The grid maximum is O(spacing^2) short of the sup, far too coarse
        // near the boundary; a derivative-free polish around the best probe
        // closes the gap while keeping the estimate a max over probes.
        let step = (4.0 * std::f64::consts::PI / n as f64).sqrt();
        best = best.max(polish_on_sphere(ball, &score, &arg_hi, step));
        best = best.max(polish_on_sphere(
            ball,
            &|z: &Point| 1.0 / score(z),
            &arg_lo,
            step,
        ));
    }
    let kind = if d == 1 {
        BoundKind::Exact
    } else {
        BoundKind::OracleEstimate
    };
    Ok(HarnackValue { value: best, kind })
}

/// Pattern search for the maximum of `f` over the sphere, started at a grid
/// argmax: step along tangent directions, halve the step on failure.
/// Deterministic, and the result is still a max over finitely many probes.
fn polish_on_sphere(ball: &Ball, f: &dyn Fn(&Point) -> f64, start: &Point, step0: f64) -> f64 {
    let to_zeta = |u: &Point| ball.center.add(&u.scale(ball.radius));
    let mut u = start.sub(&ball.center).scale(1.0 / ball.radius);
    u = u.scale(1.0 / u.norm());
    let mut best = f(&to_zeta(&u));
    let mut h = step0;
    for _ in 0..200 {
        if h < 1e-13 {
            break;
        }
        let dirs = tangent_basis(&u);
        let mut improved = false;
        for dir in &dirs {
            for sign in [1.0, -1.0] {
                let cand = u.scale((sign * h).cos()).add(&dir.scale((sign * h).sin()));
                let cand = cand.scale(1.0 / cand.norm());
                let v = f(&to_zeta(&cand));
                if v > best {
                    best = v;
                    u = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best
}

/// One or two unit tangent directions at a unit vector, depending on the
/// ambient dimension.
fn tangent_basis(u: &Point) -> Vec<Point> {
    match u.dim() {
        2 => vec![Point::new(&[-u.get(1), u.get(0)])],
        3 => {
            // Pick the axis least aligned with u to seed the cross products.
            let axis = if u.get(0).abs() <= u.get(1).abs().min(u.get(2).abs()) {
                Point::new(&[1.0, 0.0, 0.0])
            } else if u.get(1).abs() <= u.get(2).abs() {
                Point::new(&[0.0, 1.0, 0.0])
            } else {
                Point::new(&[0.0, 0.0, 1.0])
            };
            let e1 = cross(u, &axis);
            let e1 = e1.scale(1.0 / e1.norm());
            let e2 = cross(u, &e1);
            vec![e1, e2.scale(1.0 / e2.norm())]
        }
        d => panic!("no tangent basis in dimension {d}"),
    }
}

fn cross(a: &Point, b: &Point) -> Point {
    Point::new(&[
        a.get(1) * b.get(2) - a.get(2) * b.get(1),
        a.get(2) * b.get(0) - a.get(0) * b.get(2),
        a.get(0) * b.get(1) - a.get(1) * b.get(0),
    ])
}

/// Tuning for chain bounds. `beta` is the fraction of the inscribed radius
/// a hop may use, `slack` a per-hop multiplicative guard absorbing rounding
/// in the log-domain accumulation.
#[derive(Clone, Copy, Debug)]
pub struct ChainConfig {
    pub beta: f64,
    pub slack: f64,
    pub boundary_samples: usize,
    pub source_samples: usize,
    pub max_nodes: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            beta: 0.9,
            slack: 1e-6,
            boundary_samples: 256,
            source_samples: 128,
            max_nodes: 400_000,
        }
    }
}

/// The space a chain graph lives in: a domain as-is, or a domain with one
/// point removed (the base-point puncture of the refined bound).
enum ChainSpace<'a> {
    Plain(&'a Domain),
    Punctured { outer: &'a Domain, puncture: Point },
}

impl ChainSpace<'_> {
    fn dim(&self) -> usize {
        match self {
            ChainSpace::Plain(d) => d.dim(),
            ChainSpace::Punctured { outer, .. } => outer.dim(),
        }
    }

    /// Certified lower bound on the distance to the space's boundary; the
    /// puncture contributes `|p - o|`.
    fn inside_lower(&self, p: &Point) -> f64 {
        match self {
            ChainSpace::Plain(d) => d.inside_distance_lower(p),
            ChainSpace::Punctured { outer, puncture } => {
                outer.inside_distance_lower(p).min(p.dist(puncture))
            }
        }
    }

    fn bounding_box(&self) -> crate::domain::Aabb {
        match self {
            ChainSpace::Plain(d) => d.bounding_box(),
            ChainSpace::Punctured { outer, .. } => outer.bounding_box(),
        }
    }
}

/// Grid-plus-extras node set over a chain space. A directed hop `a -> b`
/// exists when `|b - a| <= beta * rho(a)`, with `rho` the certified
/// inscribed radius at `a`, and costs the log of the exact center-pole ball
/// distance. Hops are enumerated on demand through a uniform cell index, so
/// the graph is never materialised.
struct ChainGraph {
    d: u32,
    mesh: f64,
    cfg: ChainConfig,
    nodes: Vec<Point>,
    rho: Vec<f64>,
    origin: Point,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

/// Min-heap entry ordered by cost, ties broken by node index so runs are
/// reproducible.
#[derive(PartialEq)]
struct State {
    cost: f64,
    node: u32,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .expect("chain costs are never NaN")
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl ChainGraph {
    /// Nodes with inscribed radius below `mesh / 4` are useless as hop
    /// centers and are dropped; the floor halves together with the mesh, so
    /// refining the mesh only ever adds nodes.
    fn build(
        space: &ChainSpace<'_>,
        mesh: f64,
        extras: &[Point],
        cfg: ChainConfig,
    ) -> Result<Self> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::estimator(format!(
                "mesh must be positive, got {mesh}"
            )));
        }
        let bbox = space.bounding_box();
        let d = space.dim();
        let mut counts = [1usize; 3];
        for (i, count) in counts[..d].iter_mut().enumerate() {
            let extent = bbox.max.get(i) - bbox.min.get(i);
            *count = (extent / mesh).ceil() as usize + 1;
        }
        let total: usize = counts[..d].iter().product();
        if total > cfg.max_nodes {
            return Err(Error::estimator(format!(
                "chain grid would need {total} nodes (cap {})",
                cfg.max_nodes
            )));
        }
        let mut nodes = Vec::new();
        let mut rho = Vec::new();
        let floor = mesh / 4.0;
        let mut idx = [0usize; 3];
        loop {
            let mut coords = [0.0f64; 3];
            for i in 0..d {
                coords[i] = bbox.min.get(i) + idx[i] as f64 * mesh;
            }
            let p = Point::new(&coords[..d]);
            let r = space.inside_lower(&p);
            if r >= floor {
                nodes.push(p);
                rho.push(r);
            }
            // Odometer increment over the d-dimensional index range.
            let mut carry = 0;
            loop {
                idx[carry] += 1;
                if idx[carry] < counts[carry] {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
                if carry == d {
                    break;
                }
            }
            if carry == d {
                break;
            }
        }
        for p in extras {
            let r = space.inside_lower(p);
            if r <= 0.0 {
                return Err(Error::geometry(
                    "chain endpoint lies outside the space (inscribed radius is zero)",
                ));
            }
            nodes.push(*p);
            rho.push(r);
        }
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in nodes.iter().enumerate() {
            cells
                .entry(cell_key(p, &bbox.min, mesh, d))
                .or_default()
                .push(i as u32);
        }
        Ok(ChainGraph {
            d: d as u32,
            mesh,
            cfg,
            nodes,
            rho,
            origin: bbox.min,
            cells,
        })
    }

    /// Multi-source Dijkstra in the log domain. Returns per-node costs;
    /// unreachable nodes stay at infinity.
    fn log_distances(&self, sources: &[u32]) -> Vec<f64> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s as usize] = 0.0;
            heap.push(State { cost: 0.0, node: s });
        }
        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node as usize] {
                continue;
            }
            let a = &self.nodes[node as usize];
            let reach = self.cfg.beta * self.rho[node as usize];
            let lo = cell_key(
                &a.sub(&splat(reach, self.d as usize)),
                &self.origin,
                self.mesh,
                self.d as usize,
            );
            let hi = cell_key(
                &a.add(&splat(reach, self.d as usize)),
                &self.origin,
                self.mesh,
                self.d as usize,
            );
            let mut key = lo;
            loop {
                if let Some(bucket) = self.cells.get(&key) {
                    for &j in bucket {
                        if j == node {
                            continue;
                        }
                        let b = &self.nodes[j as usize];
                        let gap = a.dist(b);
                        if gap > reach {
                            continue;
                        }
                        let hop = ball_center_distance(self.d, self.rho[node as usize], gap)
                            .expect("hop stays strictly inside the inscribed ball");
                        let w = hop.value.ln() * (1.0 + self.cfg.slack);
                        let next = cost + w;
                        if next < dist[j as usize] {
                            dist[j as usize] = next;
                            heap.push(State {
                                cost: next,
                                node: j,
                            });
                        }
                    }
                }
                // Odometer over the cell-key box [lo, hi].
                let mut carry = 0;
                loop {
                    key[carry] += 1;
                    if key[carry] <= hi[carry] {
                        break;
                    }
                    key[carry] = lo[carry];
                    carry += 1;
                    if carry == 3 {
                        break;
                    }
                }
                if carry == 3 {
                    break;
                }
            }
        }
        dist
    }
}

fn splat(v: f64, d: usize) -> Point {
    Point::new(&vec![v; d])
}

fn cell_key(p: &Point, origin: &Point, mesh: f64, d: usize) -> [i64; 3] {
    let mut key = [0i64; 3];
    for (i, k) in key[..d].iter_mut().enumerate() {
        *k = ((p.get(i) - origin.get(i)) / mesh).floor() as i64;
    }
    key
}

/// Certified upper bounds on the Harnack distances from one source point to
/// each target, all strictly inside `domain`. Intervals (and dimension-one
/// balls) are exact; everything else chains inscribed balls on a grid of
/// the given mesh.
pub fn chain_upper_bounds(
    domain: &Domain,
    from: &Point,
    targets: &[Point],
    mesh: f64,
    cfg: ChainConfig,
) -> Result<Vec<HarnackValue>> {
    match domain {
        Domain::Interval(iv) => targets
            .iter()
            .map(|t| interval_distance(iv, from.get(0), t.get(0)))
            .collect(),
        Domain::Ball(b) if b.dim() == 1 => {
            let iv = Interval::new(b.center.get(0) - b.radius, b.center.get(0) + b.radius)?;
            targets
                .iter()
                .map(|t| interval_distance(&iv, from.get(0), t.get(0)))
                .collect()
        }
        _ => {
            let mut extras = vec![*from];
            extras.extend_from_slice(targets);
            let graph = ChainGraph::build(&ChainSpace::Plain(domain), mesh, &extras, cfg)?;
            let base = graph.nodes.len() - extras.len();
            let source = base as u32;
            let logd = graph.log_distances(&[source]);
            targets
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let v = logd[base + 1 + i];
                    if v.is_finite() {
                        Ok(HarnackValue::upper(v.exp()))
                    } else {
                        Err(Error::estimator(format!(
                            "chain graph does not connect the source to {:?}; refine the mesh",
                            t.coords()
                        )))
                    }
                })
                .collect()
        }
    }
}

/// Convenience single-target wrapper around [`chain_upper_bounds`].
pub fn chain_upper_bound(
    domain: &Domain,
    x: &Point,
    y: &Point,
    mesh: f64,
    cfg: ChainConfig,
) -> Result<HarnackValue> {
    Ok(chain_upper_bounds(domain, x, std::slice::from_ref(y), mesh, cfg)?.remove(0))
}

/// Certified upper bound on
/// `sup over x on the inner boundary of dist(x, sphere(base, R))` in the
/// punctured outer domain, the quantity multiplying the outer boundary sup
/// in the refined lower bound. `R` is taken at the lower side of the
/// base-point inradius bracket, which is the conservative sphere.
///
/// Exact fast paths: an inner ball centered at the base point gives 1 (its
/// boundary IS the sphere), and dimension 1 reduces to interval components.
/// Otherwise a multi-source chain search runs from sphere samples, and the
/// sampled maximum over the inner boundary is promoted to a sup by one
/// extra inscribed-ball hop covering the sampling gaps.
pub fn punctured_sup_distance(
    pair: &NestedPair,
    mesh: f64,
    cfg: ChainConfig,
) -> Result<HarnackValue> {
    let radius = pair.base_inradius();
    let r_lo = radius.lower;
    if r_lo <= 0.0 {
        return Err(Error::geometry("base point sits on the inner boundary"));
    }
    if let Domain::Ball(b) = &pair.inner {
        if b.center.dist(&pair.base) <= GEOM_TOL * b.radius {
            return Ok(HarnackValue::exact(1.0));
        }
    }
    if pair.dim() == 1 {
        return punctured_sup_interval(pair, r_lo);
    }
    let gap = pair.gap();
    let rho0 = gap.lower.min(r_lo);
    let inner_sample = pair.inner.boundary_sample(cfg.boundary_samples);
    let delta = inner_sample.covering_radius;
    if delta >= cfg.beta * rho0 {
        return Err(Error::estimator(format!(
            "inner boundary sample too coarse: covering radius {delta} \
             vs inscribed floor {rho0}; raise boundary_samples"
        )));
    }
    let sphere = Domain::ball(pair.base, r_lo)?;
    let sphere_sample = sphere.boundary_sample(cfg.source_samples);
    let mut extras = sphere_sample.points.clone();
    extras.extend_from_slice(&inner_sample.points);
    let space = ChainSpace::Punctured {
        outer: &pair.outer,
        puncture: pair.base,
    };
    let graph = ChainGraph::build(&space, mesh, &extras, cfg)?;
    let base = graph.nodes.len() - extras.len();
    let sources: Vec<u32> = (0..sphere_sample.points.len())
        .map(|i| (base + i) as u32)
        .collect();
    let logd = graph.log_distances(&sources);
    let mut worst = 0.0f64;
    for i in 0..inner_sample.points.len() {
        let v = logd[base + sphere_sample.points.len() + i];
        if !v.is_finite() {
            return Err(Error::estimator(
                "punctured chain graph leaves part of the inner boundary unreachable; \
                 refine the mesh",
            ));
        }
        worst = worst.max(v);
    }
    // Promote the sampled max to a boundary sup: any unsampled boundary
    // point reaches its nearest sample inside an inscribed ball of radius
    // at least rho0 at cost ball_center_distance(rho0, delta).
    let patch = ball_center_distance(graph.d, rho0, delta)?.value;
    Ok(HarnackValue::upper(worst.exp() * patch))
}

fn punctured_sup_interval(pair: &NestedPair, r_lo: f64) -> Result<HarnackValue> {
    let (inner, outer) = match (&pair.inner, &pair.outer) {
        (Domain::Interval(i), Domain::Interval(g)) => (*i, *g),
        _ => return Err(Error::geometry("dimension-one pairs must use intervals")),
    };
    let o = pair.base.get(0);
    // Removing the base point splits the outer interval in two; each inner
    // endpoint chains to the sphere point on its own side.
    let mut worst = 1.0f64;
    for (x, component) in [
        (inner.a, Interval::new(outer.a, o)?),
        (inner.b, Interval::new(o, outer.b)?),
    ] {
        let sphere_pt = if x < o { o - r_lo } else { o + r_lo };
        let v = interval_distance(&component, x, sphere_pt)?;
        worst = worst.max(v.value);
    }
    Ok(HarnackValue::exact(worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ball_center_reference_values() {
        // d=2, r=1, offset 1/2: (1.5)(1)/(0.5) = 3.
        let v = ball_center_distance(2, 1.0, 0.5).unwrap();
        assert!((v.value - 3.0).abs() < 1e-14);
        assert_eq!(v.kind, BoundKind::Exact);
        // d=3, r=1, offset 1/2: (1.5)(1)/(0.25) = 6.
        let v = ball_center_distance(3, 1.0, 0.5).unwrap();
        assert!((v.value - 6.0).abs() < 1e-14);
        // offset 0 gives 1 in every dimension.
        for d in 1..=5 {
            assert!((ball_center_distance(d, 2.0, 0.0).unwrap().value - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_one_uses_the_interval_formula_not_the_ball_expression() {
        // The d >= 2 expression would give (r + c)/r = 1.5; the true
        // interval value is r/(r - c) = 2.
        let v = ball_center_distance(1, 1.0, 0.5).unwrap();
        assert!((v.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn interval_distance_matches_extreme_ray_ratios() {
        let iv = Interval::new(0.0, 2.0).unwrap();
        let v = interval_distance(&iv, 1.0, 1.5).unwrap();
        assert!((v.value - 2.0).abs() < 1e-14);
        // Symmetry.
        let w = interval_distance(&iv, 1.5, 1.0).unwrap();
        assert!((v.value - w.value).abs() < 1e-15);
        // Same point gives 1.
        assert!((interval_distance(&iv, 0.3, 0.3).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_approaches_center_formula_from_below() {
        for d in [2u32, 3] {
            let center = Point::zero(d as usize);
            let ball = Ball::new(center, 1.0).unwrap();
            for offset in [0.1, 0.5, 0.8] {
                let mut x = center;
                x.set(0, offset);
                let oracle = ball_pair_oracle(&ball, &center, &x, 20_000).unwrap();
                let exact = ball_center_distance(d, 1.0, offset).unwrap().value;
                let rel = (oracle.value - exact).abs() / exact;
                assert!(rel < 1e-9, "d={d} offset={offset}: rel err {rel}");
                assert!(
                    oracle.value <= exact * (1.0 + 1e-12),
                    "oracle must not overshoot"
                );
            }
        }
    }

    #[test]
    fn oracle_is_symmetric_in_its_arguments() {
        let ball = Ball::new(Point::new(&[0.0, 0.0]), 1.0).unwrap();
        let x = Point::new(&[0.3, 0.2]);
        let y = Point::new(&[-0.4, 0.1]);
        let a = ball_pair_oracle(&ball, &x, &y, 4096).unwrap().value;
        let b = ball_pair_oracle(&ball, &y, &x, 4096).unwrap().value;
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn chain_bound_dominates_exact_disk_distance() {
        let disk = Domain::ball(Point::new(&[0.0, 0.0]), 1.0).unwrap();
        let o = Point::new(&[0.0, 0.0]);
        for offset in [0.2, 0.5, 0.7] {
            let x = Point::new(&[offset, 0.0]);
            let bound = chain_upper_bound(&disk, &o, &x, 0.05, ChainConfig::default()).unwrap();
            let exact = ball_center_distance(2, 1.0, offset).unwrap().value;
            assert!(
                bound.value >= exact - 1e-12,
                "offset {offset}: {} < {exact}",
                bound.value
            );
            assert!(
                bound.value <= exact * 4.0,
                "offset {offset}: chain too loose"
            );
            assert_eq!(bound.kind, BoundKind::UpperBound);
        }
    }

    #[test]
    fn chain_bound_never_increases_under_mesh_refinement() {
        let dom = Domain::sdf(crate::domain::Shape::Box {
            center: Point::new(&[0.0, 0.0]),
            half_extents: Point::new(&[1.0, 0.7]),
        })
        .unwrap();
        let x = Point::new(&[-0.6, -0.3]);
        let y = Point::new(&[0.7, 0.4]);
        let coarse = chain_upper_bound(&dom, &x, &y, 0.2, ChainConfig::default()).unwrap();
        let fine = chain_upper_bound(&dom, &x, &y, 0.1, ChainConfig::default()).unwrap();
        let finest = chain_upper_bound(&dom, &x, &y, 0.05, ChainConfig::default()).unwrap();
        assert!(fine.value <= coarse.value + 1e-9);
        assert!(finest.value <= fine.value + 1e-9);
    }

    #[test]
    fn chain_on_interval_is_exact() {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let v = chain_upper_bound(
            &dom,
            &Point::new(&[0.0]),
            &Point::new(&[0.5]),
            0.1,
            ChainConfig::default(),
        )
        .unwrap();
        assert!((v.value - 2.0).abs() < 1e-14);
        assert_eq!(v.kind, BoundKind::Exact);
    }

    #[test]
    fn punctured_sup_is_one_for_a_centered_inner_ball() {
        let pair = NestedPair::new(
            Domain::ball(Point::new(&[0.0, 0.0]), 1.0).unwrap(),
            Domain::ball(Point::new(&[0.0, 0.0]), 2.0).unwrap(),
            Point::new(&[0.0, 0.0]),
        )
        .unwrap();
        let v = punctured_sup_distance(&pair, 0.1, ChainConfig::default()).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(v.kind, BoundKind::Exact);
    }

    #[test]
    fn punctured_sup_interval_matches_hand_computation() {
        // D = (-1, 1), G = (-3, 2), o = 0: R = 1... o at 0 makes R = 1 and
        // the sphere hits the inner endpoints, so pick o = 0.25 instead:
        // R = min(1.25, 0.75) = 0.75, sphere = {-0.5, 1.0}. Left component
        // (-3, 0.25): chain -1 -> -0.5 has ratios (x-a)/(y-a) = 2/2.5 and
        // (b-x)/(b-y) = 1.25/0.75; max of the four is 1.25/0.75. The right
        // component (0.25, 2) needs dist(1, 1) = 1. Sup = 5/3.
        let pair = NestedPair::new(
            Domain::interval(-1.0, 1.0).unwrap(),
            Domain::interval(-3.0, 2.0).unwrap(),
            Point::new(&[0.25]),
        )
        .unwrap();
        let v = punctured_sup_distance(&pair, 0.05, ChainConfig::default()).unwrap();
        assert!((v.value - 5.0 / 3.0).abs() < 1e-12, "got {}", v.value);
    }

    #[test]
    fn punctured_sup_chain_bound_is_at_least_one_and_finite() {
        let pair = NestedPair::new(
            Domain::ball(Point::new(&[0.0, 0.0]), 1.0).unwrap(),
            Domain::ball(Point::new(&[0.0, 0.0]), 2.0).unwrap(),
            Point::new(&[0.3, 0.0]),
        )
        .unwrap();
        let v = punctured_sup_distance(&pair, 0.08, ChainConfig::default()).unwrap();
        assert!(v.value.is_finite() && v.value >= 1.0);
        assert_eq!(v.kind, BoundKind::UpperBound);
    }

    proptest! {
        #[test]
        fn interval_distance_satisfies_the_multiplicative_triangle_inequality(
            x in -0.9f64..0.9,
            y in -0.9f64..0.9,
            z in -0.9f64..0.9,
        ) {
            let iv = Interval::new(-1.0, 1.0).unwrap();
            let dxz = interval_distance(&iv, x, z).unwrap().value;
            let dxy = interval_distance(&iv, x, y).unwrap().value;
            let dyz = interval_distance(&iv, y, z).unwrap().value;
            prop_assert!(dxz <= dxy * dyz * (1.0 + 1e-12));
        }

        #[test]
        fn bigger_intervals_have_smaller_distances(
            x in -0.9f64..0.9,
            y in -0.9f64..0.9,
            grow in 0.01f64..3.0,
        ) {
            let small = Interval::new(-1.0, 1.0).unwrap();
            let big = Interval::new(-1.0 - grow, 1.0 + grow).unwrap();
            let ds = interval_distance(&small, x, y).unwrap().value;
            let db = interval_distance(&big, x, y).unwrap().value;
            prop_assert!(db <= ds * (1.0 + 1e-12));
        }

        #[test]
        fn ball_center_distance_is_monotone_in_offset(
            d in 1u32..5,
            r in 0.5f64..3.0,
            c1 in 0.0f64..0.9,
            bump in 0.001f64..0.09,
        ) {
            let a = ball_center_distance(d, r, c1 * r).unwrap().value;
            let b = ball_center_distance(d, r, (c1 + bump) * r).unwrap().value;
            prop_assert!(b >= a);
        }
    }
}
