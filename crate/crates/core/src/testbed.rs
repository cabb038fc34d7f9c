//! A catalog of subharmonic test functions whose Riesz measures are known
//! in closed form, normalised to vanish at a chosen base point.
//!
//! Three families cover the supported dimensions:
//!
//! * dimension 1: convex piecewise-linear functions (`slope * t` plus
//!   positive kinks), with an atom of half the slope jump at each kink;
//! * dimension 2: sums of weighted `ln |x - z_j|`, with an atom of the
//!   weight at each zero;
//! * dimension 3: sums of weighted `-1/|x - p_j|` plus a harmonic affine
//!   term, with an atom of the weight at each pole.
//!
//! Boundary suprema come as a certified bracket: the sampled maximum from
//! below, and the sampled maximum plus a Lipschitz correction over the
//! covering radius from above. A handful of single-singularity cases are
//! recognised and reported exactly.

use crate::domain::{Domain, Point};
use crate::error::Error;
use crate::extreal::ExtReal;
use crate::kernel::kernel_k;
use crate::numeric::KahanSum;
use crate::riesz::{Atom, AtomicMeasure};
use crate::Result;
use serde::{Deserialize, Serialize};

/// One weighted singularity of a test function.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub location: Point,
    pub mass: f64,
}

/// One convex kink of a piecewise-linear function on the line.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Kink {
    pub location: f64,
    pub jump: f64,
}

/// The shape of a test function before normalisation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctionKind {
    /// Dimension 2: `sum of m_j ln |x - z_j|`.
    LogAbsProduct { zeros: Vec<WeightedPoint> },
    /// Dimension 3: `sum of m_j (-1 / |x - p_j|) + a0 + a . x`.
    NewtonPotential {
        poles: Vec<WeightedPoint>,
        #[serde(default)]
        affine_constant: f64,
        #[serde(default)]
        affine_gradient: Vec<f64>,
    },
    /// Dimension 1: `slope * t + sum of j_k (t - b_k)^+`.
    ConvexPiecewiseLinear {
        slope: f64,
        #[serde(default)]
        kinks: Vec<Kink>,
    },
}

/// A certified bracket for a boundary supremum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupBracket {
    /// Sampled maximum: a true lower bound of the supremum.
    pub lower: f64,
    /// Lipschitz-corrected maximum: a true upper bound, absent when no
    /// finite Lipschitz constant holds near the boundary (a singularity
    /// sits on it).
    pub upper: Option<f64>,
    /// The bracket is exact (both sides coincide by a closed form).
    pub exact: bool,
}

/// A subharmonic test function normalised to vanish at its base point.
#[derive(Clone, Debug)]
pub struct TestFunction {
    kind: TestFunctionKind,
    base: Point,
    shift: f64,
}

impl TestFunction {
    /// Builds and normalises a test function; the base point must not sit
    /// on a singularity (the normalising value must be finite).
    pub fn new(kind: TestFunctionKind, base: Point) -> Result<Self> {
        match &kind {
            TestFunctionKind::LogAbsProduct { zeros } => {
                if base.dim() != 2 {
                    return Err(Error::schema(
                        "function",
                        "log products live in dimension 2",
                    ));
                }
                if zeros.is_empty() {
                    return Err(Error::schema("function.zeros", "need at least one zero"));
                }
                for z in zeros {
                    if z.location.dim() != 2 {
                        return Err(Error::schema("function.zeros", "zero dimension mismatch"));
                    }
                    if !(z.mass > 0.0 && z.mass.is_finite()) {
                        return Err(Error::schema("function.zeros", "masses must be positive"));
                    }
                }
            }
            TestFunctionKind::NewtonPotential {
                poles,
                affine_gradient,
                ..
            } => {
                if base.dim() != 3 {
                    return Err(Error::schema(
                        "function",
                        "newton potentials live in dimension 3",
                    ));
                }
                if !affine_gradient.is_empty() && affine_gradient.len() != 3 {
                    return Err(Error::schema(
                        "function.affine_gradient",
                        "gradient must have three components",
                    ));
                }
                for p in poles {
                    if p.location.dim() != 3 {
                        return Err(Error::schema("function.poles", "pole dimension mismatch"));
                    }
                    if !(p.mass > 0.0 && p.mass.is_finite()) {
                        return Err(Error::schema("function.poles", "masses must be positive"));
                    }
                }
            }
            TestFunctionKind::ConvexPiecewiseLinear { slope, kinks } => {
                if base.dim() != 1 {
                    return Err(Error::schema(
                        "function",
                        "piecewise-linear lives in dimension 1",
                    ));
                }
                if !slope.is_finite() {
                    return Err(Error::schema("function.slope", "slope must be finite"));
                }
                for k in kinks {
                    if !(k.jump > 0.0 && k.jump.is_finite()) {
                        return Err(Error::schema(
                            "function.kinks",
                            "slope jumps must be positive",
                        ));
                    }
                }
            }
        }
        let raw = raw_value(&kind, &base);
        let shift = raw.finite().ok_or_else(|| {
            Error::degenerate("base point sits on a singularity of the test function")
        })?;
        Ok(TestFunction { kind, base, shift })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn kind(&self) -> &TestFunctionKind {
        &self.kind
    }

    /// Normalised value: the raw value minus the value at the base point.
    pub fn evaluate(&self, x: &Point) -> ExtReal {
        match raw_value(&self.kind, x) {
            ExtReal::Finite(v) => ExtReal::Finite(v - self.shift),
            inf => inf,
        }
    }

    /// The exact (normalised) Riesz measure of the function.
    pub fn riesz_measure(&self) -> AtomicMeasure {
        let atoms = match &self.kind {
            TestFunctionKind::LogAbsProduct { zeros } => zeros
                .iter()
                .map(|z| Atom {
                    location: z.location,
                    mass: z.mass,
                })
                .collect(),
            TestFunctionKind::NewtonPotential { poles, .. } => poles
                .iter()
                .map(|p| Atom {
                    location: p.location,
                    mass: p.mass,
                })
                .collect(),
            TestFunctionKind::ConvexPiecewiseLinear { kinks, .. } => kinks
                .iter()
                .map(|k| Atom {
                    location: Point::new(&[k.location]),
                    mass: k.jump / 2.0,
                })
                .collect(),
        };
        AtomicMeasure::new(atoms).expect("constructor validated the masses")
    }

    /// Locations of the singularities (where the function is minus
    /// infinity in dimensions 2 and 3).
    pub fn singularities(&self) -> Vec<Point> {
        match &self.kind {
            TestFunctionKind::LogAbsProduct { zeros } => zeros.iter().map(|z| z.location).collect(),
            TestFunctionKind::NewtonPotential { poles, .. } => {
                poles.iter().map(|p| p.location).collect()
            }
            TestFunctionKind::ConvexPiecewiseLinear { .. } => Vec::new(),
        }
    }

    /// Certified bracket for the supremum of the function over the
    /// boundary of `domain`, from `samples` boundary points.
    pub fn sup_on_boundary(&self, domain: &Domain, samples: usize) -> Result<SupBracket> {
        if domain.dim() != self.dim() {
            return Err(Error::geometry(
                "domain dimension mismatch with test function",
            ));
        }
        // Exact fast path: one singularity, pure potential, ball boundary.
        if let Some(exact) = self.exact_ball_sup(domain) {
            return Ok(SupBracket {
                lower: exact,
                upper: Some(exact),
                exact: true,
            });
        }
        let sample = domain.boundary_sample(samples);
        let mut best = f64::NEG_INFINITY;
        for p in &sample.points {
            if let ExtReal::Finite(v) = self.evaluate(p) {
                best = best.max(v);
            }
        }
        if !best.is_finite() {
            return Err(Error::degenerate("boundary sample hit only singularities"));
        }
        if sample.covering_radius == 0.0 {
            return Ok(SupBracket {
                lower: best,
                upper: Some(best),
                exact: true,
            });
        }
        let upper = self
            .boundary_lipschitz(domain)
            .map(|lip| best + lip * sample.covering_radius);
        Ok(SupBracket {
            lower: best,
            upper,
            exact: false,
        })
    }

    /// `max |x - q|` over a sphere of radius `rho` around `c` is
    /// `rho + |c - q|`, which makes single-singularity potentials exactly
    /// maximisable on ball boundaries.
    fn exact_ball_sup(&self, domain: &Domain) -> Option<f64> {
        let ball = match domain {
            Domain::Ball(b) => b,
            _ => return None,
        };
        match &self.kind {
            TestFunctionKind::LogAbsProduct { zeros } if zeros.len() == 1 => {
                let far = ball.radius + ball.center.dist(&zeros[0].location);
                Some(zeros[0].mass * far.ln() - self.shift)
            }
            TestFunctionKind::NewtonPotential {
                poles,
                affine_constant,
                affine_gradient,
            } if poles.len() == 1 && affine_gradient.iter().all(|g| *g == 0.0) => {
                let far = ball.radius + ball.center.dist(&poles[0].location);
                Some(poles[0].mass * (-1.0 / far) + affine_constant - self.shift)
            }
            _ => None,
        }
    }

    /// A Lipschitz constant valid in a neighbourhood of the boundary, or
    /// `None` when a singularity touches it. Distances from singularities
    /// to the boundary are taken from the signed distance, which
    /// under-estimates them for implicit shapes and therefore only ever
    /// enlarges the constant.
    fn boundary_lipschitz(&self, domain: &Domain) -> Option<f64> {
        let scale = domain.diameter().upper;
        let mut lip = KahanSum::default();
        match &self.kind {
            TestFunctionKind::LogAbsProduct { zeros } => {
                for z in zeros {
                    let t = domain.signed_distance(&z.location).abs();
                    if t <= 1e-12 * scale {
                        return None;
                    }
                    lip.add(z.mass / t);
                }
            }
            TestFunctionKind::NewtonPotential {
                poles,
                affine_gradient,
                ..
            } => {
                for p in poles {
                    let t = domain.signed_distance(&p.location).abs();
                    if t <= 1e-12 * scale {
                        return None;
                    }
                    lip.add(p.mass / (t * t));
                }
                if !affine_gradient.is_empty() {
                    lip.add(affine_gradient.iter().map(|g| g * g).sum::<f64>().sqrt());
                }
            }
            TestFunctionKind::ConvexPiecewiseLinear { slope, kinks } => {
                lip.add(slope.abs());
                for k in kinks {
                    lip.add(k.jump);
                }
            }
        }
        Some(lip.value())
    }
}

fn raw_value(kind: &TestFunctionKind, x: &Point) -> ExtReal {
    match kind {
        TestFunctionKind::LogAbsProduct { zeros } => {
            let mut acc = KahanSum::default();
            for z in zeros {
                let t = x.dist(&z.location);
                if t == 0.0 {
                    return ExtReal::NegInf;
                }
                acc.add(z.mass * t.ln());
            }
            ExtReal::Finite(acc.value())
        }
        TestFunctionKind::NewtonPotential {
            poles,
            affine_constant,
            affine_gradient,
        } => {
            let mut acc = KahanSum::default();
            for p in poles {
                let t = x.dist(&p.location);
                match kernel_k(3, t) {
                    ExtReal::Finite(k) => acc.add(p.mass * k),
                    _ => return ExtReal::NegInf,
                }
            }
            acc.add(*affine_constant);
            for (i, g) in affine_gradient.iter().enumerate() {
                acc.add(g * x.get(i));
            }
            ExtReal::Finite(acc.value())
        }
        TestFunctionKind::ConvexPiecewiseLinear { slope, kinks } => {
            let t = x.get(0);
            let mut acc = KahanSum::default();
            acc.add(slope * t);
            for k in kinks {
                if t > k.location {
                    acc.add(k.jump * (t - k.location));
                }
            }
            ExtReal::Finite(acc.value())
        }
    }
}
