//! Atomic measures and their counting functions.
//!
//! The Riesz measure of every testbed function is purely atomic, so the
//! radial counting function `t -> mu(closed ball of radius t around x)` is a
//! right-continuous step function and the integrated counting function
//!
//! `N_x(r) = dhat(d) * integral_0^r mu_x(t) / t^{d-1} dt`
//!
//! collapses to the closed form `sum_{|p_j - x| <= r} m_j (k(r) - k(|p_j - x|))`.
//! [`AtomicMeasure::integrated_counting_quadrature`] re-derives the same
//! value by adaptive quadrature of the definition, piecewise between jump
//! radii, and exists purely as an independent oracle for the closed form.

use crate::domain::{Domain, Point};
use crate::error::Error;
use crate::extreal::ExtReal;
use crate::kernel::{dhat, kernel_diff};
use crate::numeric::adaptive_simpson;
use crate::Result;
use serde::{Deserialize, Serialize};

/// One atom: a location and a strictly positive mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Point,
    pub mass: f64,
}

/// A finite nonnegative atomic measure.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn empty() -> Self {
        AtomicMeasure { atoms: Vec::new() }
    }

    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::geometry(format!(
                    "atom mass must be positive and finite, got {}",
                    a.mass
                )));
            }
        }
        Ok(AtomicMeasure { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Restriction to the closed set `{signed_distance <= tol}`; with the
    /// default geometric tolerance this is the restriction to the closure,
    /// keeping atoms that sit exactly on the boundary.
    pub fn restrict_closure(&self, domain: &Domain, tol: f64) -> AtomicMeasure {
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .filter(|a| domain.contains_closure(&a.location, tol))
                .cloned()
                .collect(),
        }
    }

    /// Mass of the closed ball of radius `t` around `x`. Right-continuous
    /// and nondecreasing in `t`; the closed ball convention puts each atom's
    /// jump at exactly its distance from `x`.
    pub fn radial_counting(&self, x: &Point, t: f64) -> f64 {
        assert!(t >= 0.0, "radius must be nonnegative");
        self.atoms
            .iter()
            .filter(|a| a.location.dist(x) <= t)
            .map(|a| a.mass)
            .sum()
    }

    /// Sorted distinct distances from `x` to the atoms: the jump set of the
    /// radial counting function.
    pub fn jump_radii(&self, x: &Point) -> Vec<f64> {
        let mut rs: Vec<f64> = self.atoms.iter().map(|a| a.location.dist(x)).collect();
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rs.dedup();
        rs
    }

    /// Closed form of the integrated counting function
    /// `N_x(r) = sum_{a_j <= r} m_j (k(r) - k(a_j))` where `a_j = |p_j - x|`.
    ///
    /// An atom at `x` itself contributes `m * r` in dimension 1 and makes
    /// the value plus infinity in dimension at least 2.
    pub fn integrated_counting(&self, d: u32, x: &Point, r: f64) -> ExtReal {
        assert!(r >= 0.0, "radius must be nonnegative");
        let mut total = ExtReal::Finite(0.0);
        for a in &self.atoms {
            let dist = a.location.dist(x);
            if dist <= r {
                total = total + kernel_diff(d, dist, r) * a.mass;
            }
        }
        total
    }

    /// Quadrature oracle for [`integrated_counting`](Self::integrated_counting):
    /// integrates `dhat(d) * mu_x(t) * t^{1-d}` piecewise between jump radii
    /// with adaptive Simpson. Fails when an atom sits at `x` in dimension at
    /// least 2, where the integral diverges.
    pub fn integrated_counting_quadrature(
        &self,
        d: u32,
        x: &Point,
        r: f64,
        tol: f64,
    ) -> Result<f64> {
        assert!(r >= 0.0);
        let mass_at_x = self.radial_counting(x, 0.0);
        if mass_at_x > 0.0 && d >= 2 {
            return Err(Error::degenerate(
                "integrated counting diverges at an atom of the measure",
            ));
        }
        let mut cuts: Vec<f64> = self
            .jump_radii(x)
            .into_iter()
            .filter(|a| *a > 0.0 && *a < r)
            .collect();
        cuts.push(r);
        let coeff = dhat(d);
        let mut total = 0.0;
        let mut lo = 0.0;
        for hi in cuts {
            // On (lo, hi) the radial counting is constant: evaluate it at
            // the midpoint so boundary ties cannot leak across the cut.
            let mid = 0.5 * (lo + hi);
            let mass = self.radial_counting(x, mid);
            if mass > 0.0 {
                let piece = if d == 1 {
                    mass * (hi - lo)
                } else {
                    adaptive_simpson(
                        &|t: f64| mass * t.powi(1 - d as i32),
                        lo.max(1e-300),
                        hi,
                        tol,
                    )
                };
                total += coeff * piece;
            }
            lo = hi;
        }
        Ok(total)
    }
}
