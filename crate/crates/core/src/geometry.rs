//! Domain geometry through boundary collars.
//!
//! Every supported domain is one-dimensional or radial, so a boundary
//! collar is parametrized by the depth `y` alone and the surface element
//! is a power law `J(y) = (base + slope y)^(dim-1)`. The logarithmic
//! derivative of `J` drives two constants used by the barrier modules:
//!
//! * `lambda_abs = max |d/dy log J|` bounds curvature from either side and
//!   scales the distance barrier;
//! * `lambda_min = min d/dy log J` must be nonnegative for the subsolution
//!   construction, which rules out shrinking collars (ball, annulus outer).

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainGeometry {
    /// `(0, L)` with Dirichlet ends; collars at both endpoints.
    Interval { length: f64 },
    /// Ball of the given radius in `dim` dimensions, radial coordinate.
    Ball { radius: f64, dim: u32 },
    /// Annulus `r_in < r < r_out`, radial coordinate, two boundary spheres.
    Annulus { r_in: f64, r_out: f64, dim: u32 },
    /// Collar of depth `depth` growing inward from a sphere of the given
    /// radius (the inner boundary of an annulus-like region).
    InnerCollar { radius: f64, dim: u32, depth: f64 },
    /// Collar shrinking inward from an enclosing sphere (ball-like side).
    OuterCollar { radius: f64, dim: u32, depth: f64 },
}

/// One boundary component seen from inside its collar:
/// `J(y) = (base + slope y)^power` with `power = dim - 1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CollarMap {
    pub name: &'static str,
    base: f64,
    slope: f64,
    power: f64,
}

impl CollarMap {
    fn flat(name: &'static str) -> Self {
        CollarMap { name, base: 1.0, slope: 0.0, power: 0.0 }
    }

    fn spherical(name: &'static str, base: f64, slope: f64, dim: u32) -> Self {
        CollarMap { name, base, slope, power: (dim - 1) as f64 }
    }

    pub fn jacobian(&self, y: f64) -> f64 {
        (self.base + self.slope * y).powf(self.power)
    }

    /// `d/dy log J(y)`.
    pub fn dlog(&self, y: f64) -> f64 {
        if self.power == 0.0 {
            0.0
        } else {
            self.power * self.slope / (self.base + self.slope * y)
        }
    }

    fn radius_at(&self, y: f64) -> f64 {
        self.base + self.slope * y
    }
}

/// Curvature constants of the collar family up to a given depth.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvatureInfo {
    pub lambda_abs: f64,
    pub lambda_min: f64,
    pub sign: CurvatureSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurvatureSign {
    Nonnegative,
    Negative,
    Indefinite,
}

impl DomainGeometry {
    pub fn interval(length: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!("interval length {length} invalid")));
        }
        Ok(DomainGeometry::Interval { length })
    }

    pub fn ball(radius: f64, dim: u32) -> Result<Self> {
        if !(radius > 0.0) || dim < 2 {
            return Err(Error::Config(format!("ball radius {radius}, dim {dim} invalid")));
        }
        Ok(DomainGeometry::Ball { radius, dim })
    }

    pub fn annulus(r_in: f64, r_out: f64, dim: u32) -> Result<Self> {
        if !(0.0 < r_in && r_in < r_out) || dim < 2 {
            return Err(Error::Config(format!(
                "annulus radii ({r_in}, {r_out}), dim {dim} invalid"
            )));
        }
        Ok(DomainGeometry::Annulus { r_in, r_out, dim })
    }

    pub fn inner_collar(radius: f64, dim: u32, depth: f64) -> Result<Self> {
        if !(radius > 0.0 && depth > 0.0) || dim < 2 {
            return Err(Error::Config("inner collar parameters invalid".into()));
        }
        Ok(DomainGeometry::InnerCollar { radius, dim, depth })
    }

    pub fn outer_collar(radius: f64, dim: u32, depth: f64) -> Result<Self> {
        if !(radius > 0.0 && depth > 0.0 && depth < radius) || dim < 2 {
            return Err(Error::Config("outer collar parameters invalid".into()));
        }
        Ok(DomainGeometry::OuterCollar { radius, dim, depth })
    }

    pub fn kind_tag(&self) -> &'static str {
        match self {
            DomainGeometry::Interval { .. } => "interval",
            DomainGeometry::Ball { .. } => "ball",
            DomainGeometry::Annulus { .. } => "annulus",
            DomainGeometry::InnerCollar { .. } => "inner_collar",
            DomainGeometry::OuterCollar { .. } => "outer_collar",
        }
    }

    /// Deepest collar the geometry supports (boundary layers must not
    /// meet each other or the center).
    pub fn max_collar_depth(&self) -> f64 {
        match *self {
            DomainGeometry::Interval { length } => 0.5 * length,
            DomainGeometry::Ball { radius, .. } => radius,
            DomainGeometry::Annulus { r_in, r_out, .. } => 0.5 * (r_out - r_in),
            DomainGeometry::InnerCollar { depth, .. } => depth,
            DomainGeometry::OuterCollar { depth, .. } => depth,
        }
    }

    /// Boundary components with their collar maps.
    pub fn components(&self) -> Vec<CollarMap> {
        match *self {
            DomainGeometry::Interval { .. } => {
                vec![CollarMap::flat("left"), CollarMap::flat("right")]
            }
            DomainGeometry::Ball { radius, dim } => {
                vec![CollarMap::spherical("sphere", radius, -1.0, dim)]
            }
            DomainGeometry::Annulus { r_in, r_out, dim } => vec![
                CollarMap::spherical("inner", r_in, 1.0, dim),
                CollarMap::spherical("outer", r_out, -1.0, dim),
            ],
            DomainGeometry::InnerCollar { radius, dim, .. } => {
                vec![CollarMap::spherical("inner", radius, 1.0, dim)]
            }
            DomainGeometry::OuterCollar { radius, dim, .. } => {
                vec![CollarMap::spherical("outer", radius, -1.0, dim)]
            }
        }
    }

    /// Collar Jacobian of one component at depth `y`.
    pub fn jacobian(&self, component: usize, y: f64) -> Result<f64> {
        let comps = self.components();
        let map = comps.get(component).ok_or_else(|| {
            Error::UnsupportedGeometry(format!("component {component} of {}", self.kind_tag()))
        })?;
        let depth = self.max_collar_depth();
        if !(0.0..=depth * (1.0 + 1e-12)).contains(&y) {
            return Err(Error::OutOfCollar { t: y, rho0: depth });
        }
        let r = map.radius_at(y);
        if r <= 0.0 {
            return Err(Error::DegenerateJacobian { y, value: map.jacobian(y) });
        }
        Ok(map.jacobian(y))
    }

    /// Curvature constants over all components up to depth `rho`.
    pub fn lambda_constants(&self, rho: f64) -> Result<CurvatureInfo> {
        if !(rho > 0.0) || rho > self.max_collar_depth() * (1.0 + 1e-12) {
            return Err(Error::OutOfCollar { t: rho, rho0: self.max_collar_depth() });
        }
        let mut lambda_abs: f64 = 0.0;
        let mut lambda_min = f64::INFINITY;
        let mut lambda_max = f64::NEG_INFINITY;
        for map in self.components() {
            if map.radius_at(rho) <= 0.0 {
                return Err(Error::DegenerateJacobian { y: rho, value: map.jacobian(rho) });
            }
            // d/dy log J is monotone in y, so the extremes sit at the ends.
            for v in [map.dlog(0.0), map.dlog(rho)] {
                lambda_abs = lambda_abs.max(v.abs());
                lambda_min = lambda_min.min(v);
                lambda_max = lambda_max.max(v);
            }
        }
        let tol = 1e-14 * (1.0 + lambda_abs);
        let sign = if lambda_min >= -tol {
            CurvatureSign::Nonnegative
        } else if lambda_max <= tol {
            CurvatureSign::Negative
        } else {
            CurvatureSign::Indefinite
        };
        Ok(CurvatureInfo { lambda_abs, lambda_min, sign })
    }

    /// Coordinate interval of the one-dimensional reduction.
    pub fn coords(&self) -> (f64, f64) {
        match *self {
            DomainGeometry::Interval { length } => (0.0, length),
            DomainGeometry::Ball { radius, .. } => (0.0, radius),
            DomainGeometry::Annulus { r_in, r_out, .. } => (r_in, r_out),
            DomainGeometry::InnerCollar { depth, .. } => (0.0, depth),
            DomainGeometry::OuterCollar { depth, .. } => (0.0, depth),
        }
    }

    /// Volume element in the reduction coordinate (angular factor dropped).
    pub fn measure(&self, x: f64) -> f64 {
        match *self {
            DomainGeometry::Interval { .. } => 1.0,
            DomainGeometry::Ball { dim, .. } | DomainGeometry::Annulus { dim, .. } => {
                x.powi(dim as i32 - 1)
            }
            DomainGeometry::InnerCollar { radius, dim, .. } => {
                (radius + x).powi(dim as i32 - 1)
            }
            DomainGeometry::OuterCollar { radius, dim, .. } => {
                (radius - x).powi(dim as i32 - 1)
            }
        }
    }

    /// Which coordinate endpoints carry the Dirichlet condition.
    /// The ball has none at the center; regularity stands in for it.
    pub fn dirichlet_ends(&self) -> (bool, bool) {
        match self {
            DomainGeometry::Ball { .. } => (false, true),
            _ => (true, true),
        }
    }

    /// Boundary component and collar depth of a coordinate point.
    pub fn dist_to_boundary(&self, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.coords();
        if !(lo..=hi).contains(&x) {
            return Err(Error::OutsideDomain { x });
        }
        match *self {
            DomainGeometry::Interval { length } => {
                if x <= length - x {
                    Ok((0, x))
                } else {
                    Ok((1, length - x))
                }
            }
            DomainGeometry::Ball { radius, .. } => Ok((0, radius - x)),
            DomainGeometry::Annulus { r_in, r_out, .. } => {
                if x - r_in <= r_out - x {
                    Ok((0, x - r_in))
                } else {
                    Ok((1, r_out - x))
                }
            }
            DomainGeometry::InnerCollar { .. } | DomainGeometry::OuterCollar { .. } => Ok((0, x)),
        }
    }

    /// Collar depth only.
    pub fn dist(&self, x: f64) -> f64 {
        match *self {
            DomainGeometry::Interval { length } => x.min(length - x).max(0.0),
            DomainGeometry::Ball { radius, .. } => (radius - x).max(0.0),
            DomainGeometry::Annulus { r_in, r_out, .. } => (x - r_in).min(r_out - x).max(0.0),
            DomainGeometry::InnerCollar { .. } | DomainGeometry::OuterCollar { .. } => x.max(0.0),
        }
    }
}
