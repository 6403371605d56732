//! Distance-comparable barrier on the boundary collar.
//!
//! The barrier solves the one-dimensional collar problem
//! `-(a |psi'|^{p-2} psi')' - Lambda a |psi'|^{p-1} = a^{-1/(p-1)}`
//! with `psi(0) = 0` by an explicit flux formula: the quantity
//! `G(y) = a |psi'|^{p-1}` equals `e^{-Lambda y} (A - E(y))` with
//! `E(y) = int_0^y e^{Lambda tau} a^{-1/(p-1)}`. Choosing the amplitude
//! `A` strictly above `E(rho0)` keeps the flux positive through the whole
//! collar, and the derivative envelope pins `psi` between multiples of
//! the weighted distance. That two-sided comparability is what turns
//! collar-bounded right-hand sides into boundary growth control.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Field, Mesh};
use crate::geometry::DomainGeometry;
use crate::quadrature::{integrate, p_flux_inverse, PrimitiveTable, QuadratureSpec};
use crate::weights::{weighted_distance, WeightProfile};

/// Collar mesh resolution for the assembled barrier.
const PSI_CELLS: usize = 512;

/// Floor of the multiplier grid.
const MULTIPLIER_FLOOR: f64 = 1e-6;

/// Barrier comparable to the weighted boundary distance.
#[derive(Debug, Clone)]
pub struct PsiBarrier {
    /// Flux amplitude; strictly above the collar mass `E(rho0)`.
    pub amplitude: f64,
    /// Curvature constant of the collar Jacobian used in the flux.
    pub lambda: f64,
    /// Collar depth the barrier is built on.
    pub rho0: f64,
    /// Recorded strictness margin of the amplitude.
    pub margin: f64,
    /// Nodal barrier on the collar coordinate; constant beyond `rho0`.
    pub psi: Field,
    /// Envelope-derived constant: `d / c_bound <= psi <= c_bound * d`.
    pub c_bound: f64,
    /// The cruder constant `max(A, e^{Lambda rho0/(p-1)} / (A - E(rho0)))`
    /// kept for reference alongside the sharp one.
    pub crude_bound: f64,
    /// Two-route flux identity residual, relative to the amplitude.
    pub flux_residual: f64,
}

impl PsiBarrier {
    /// Barrier value at collar depth `y` (constant extension inside).
    pub fn eval(&self, y: f64) -> f64 {
        self.psi.eval(y)
    }
}

/// Amplitude `(1 + margin) * int_0^rho0 e^{Lambda tau} a^{-1/(p-1)}`.
pub fn choose_amplitude(
    profile: &WeightProfile,
    p: f64,
    lambda: f64,
    rho0: f64,
    margin: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(margin > 0.0) {
        return Err(Error::MarginTooSmall { margin });
    }
    let spec = profile.apow_quad(p, quad);
    let mass = integrate(
        |t| (lambda * t).exp() * profile.apow(p, t),
        0.0,
        rho0,
        &spec,
    )?;
    Ok((1.0 + margin) * mass)
}

/// Assembles the collar barrier for the geometry's curvature constant.
///
/// The flux identity `-G' - Lambda G = a^{-1/(p-1)}` is certified in
/// integral form on every mesh cell: the left side from the cached
/// collar mass table, the right side integrated afresh.
pub fn build_psi(
    profile: &WeightProfile,
    p: f64,
    geom: &DomainGeometry,
    margin: f64,
    quad: &QuadratureSpec,
) -> Result<PsiBarrier> {
    if !(margin > 0.0) {
        return Err(Error::MarginTooSmall { margin });
    }
    let rho0 = profile.rho0().min(geom.max_collar_depth());
    let lambda = geom.lambda_constants(rho0)?.lambda_abs;
    let spec = profile.apow_quad(p, quad);
    let mass = PrimitiveTable::build(
        |t| (lambda * t).exp() * profile.apow(p, t),
        rho0,
        &spec,
    )?;
    let amplitude = (1.0 + margin) * mass.total();
    if !(amplitude - mass.total() > 1e-12 * amplitude) {
        return Err(Error::MarginTooSmall { margin });
    }

    let mesh = Arc::new(Mesh::boundary_layer(0.0, rho0, PSI_CELLS, Some(rho0), None)?);
    let nodes = mesh.nodes();
    let plain = quad.without_hint();
    let slope = |y: f64| {
        (-lambda * y / (p - 1.0)).exp()
            * profile.apow(p, y)
            * p_flux_inverse(amplitude - mass.eval(y), p)
    };
    let mut vals = Vec::with_capacity(nodes.len());
    vals.push(0.0);
    let mut acc = 0.0;
    for (i, w) in nodes.windows(2).enumerate() {
        let cell_spec = if i == 0 { spec } else { plain };
        acc += integrate(&slope, w[0], w[1], &cell_spec)?;
        vals.push(acc);
    }
    let psi = Field::new(
        Arc::clone(&mesh),
        vals,
        p,
        format!("psi[{}]", profile.family_tag()),
    )?;

    // psi'/d' = e^{-Lambda y/(p-1)} (A - E)^{1/(p-1)} is decreasing, so
    // the quotient psi/d lives between its endpoint values.
    let upper = amplitude.powf(1.0 / (p - 1.0));
    let lower = (-lambda * rho0 / (p - 1.0)).exp()
        * (amplitude - mass.total()).powf(1.0 / (p - 1.0));
    let c_bound = upper.max(1.0 / lower);
    let crude_bound = amplitude.max((lambda * rho0 / (p - 1.0)).exp() / (amplitude - mass.total()));

    let flux = |y: f64| (-lambda * y).exp() * (amplitude - mass.eval(y));
    let mut flux_residual = 0.0_f64;
    for (i, w) in nodes.windows(2).enumerate() {
        let lhs = flux(w[0]) - flux(w[1]) - lambda * integrate(&flux, w[0], w[1], &plain)?;
        let cell_spec = if i == 0 { spec } else { plain };
        let rhs = integrate(|t| profile.apow(p, t), w[0], w[1], &cell_spec)?;
        flux_residual = flux_residual.max((lhs - rhs).abs());
    }
    flux_residual /= amplitude;

    Ok(PsiBarrier {
        amplitude,
        lambda,
        rho0,
        margin,
        psi,
        c_bound,
        crude_bound,
        flux_residual,
    })
}

/// Sup of `|u| / d` over collar nodes with boundary distance in `(0, rho]`.
///
/// `d` is the weighted distance. Returns infinity when `u` fails to
/// vanish at a boundary node, the divergent case.
pub fn boundary_quotient(
    u: &Field,
    profile: &WeightProfile,
    p: f64,
    rho: f64,
) -> Result<f64> {
    if rho > profile.rho0() {
        return Err(Error::OutOfCollar { t: rho, rho0: profile.rho0() });
    }
    let mesh = u.mesh();
    let dist = |x: f64| match u.geom {
        Some(g) => g.dist(x),
        None => (x - mesh.lo()).min(mesh.hi() - x),
    };
    let mut sup = 0.0_f64;
    for (&x, &v) in mesh.nodes().iter().zip(u.values()) {
        let d_euclid = dist(x);
        if d_euclid == 0.0 {
            if v != 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        if d_euclid > rho {
            continue;
        }
        let dw = weighted_distance(profile, p, d_euclid)?;
        if dw > 0.0 {
            sup = sup.max(v.abs() / dw);
        }
    }
    Ok(sup)
}

/// Smallest multiplier on a 1.1-geometric grid with `M^{p-1} > K` and
/// `M * d(rho) >= c_bound`, floored at 1e-6.
pub fn barrier_multiplier(
    k: f64,
    profile: &WeightProfile,
    p: f64,
    rho: f64,
    psi: &PsiBarrier,
) -> Result<f64> {
    let d = weighted_distance(profile, p, rho)?;
    let mut m = MULTIPLIER_FLOOR;
    for _ in 0..10_000 {
        if m.powf(p - 1.0) > k && m * d >= psi.c_bound {
            return Ok(m);
        }
        m *= 1.1;
    }
    Err(Error::Divergent {
        detail: format!("no multiplier below {m:.3e} satisfies both collar constraints"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::{default_mesh, solve, Problem, Rhs};
    use crate::weights::WeightProfile;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn amplitude_closed_forms() {
        let flat = WeightProfile::uniform(1.0, 1.0).unwrap();
        let a = choose_amplitude(&flat, 2.0, 0.0, 1.0, 1.0, &spec()).unwrap();
        assert!((a - 2.0).abs() < 1e-12, "a = {a}");
        let a = choose_amplitude(&flat, 2.0, 0.0, 1.0, 0.1, &spec()).unwrap();
        assert!((a - 1.1).abs() < 1e-12);
        // a(t) = t at p = 3 integrates t^{-1/2} to 2.
        let lin = WeightProfile::power(1.0, 1.0, 1.0).unwrap();
        let a = choose_amplitude(&lin, 3.0, 0.0, 1.0, 0.5, &spec()).unwrap();
        assert!((a - 3.0).abs() < 1e-10, "a = {a}");
        assert!(matches!(
            choose_amplitude(&lin, 3.0, 0.0, 1.0, 0.0, &spec()),
            Err(Error::MarginTooSmall { .. })
        ));
    }

    #[test]
    fn flat_weight_closed_form_barrier() {
        // a = 1, Lambda = 0, A = 2: psi(y) = 2y - y^2/2.
        let flat = WeightProfile::uniform(1.0, 1.0).unwrap();
        let geom = DomainGeometry::interval(2.0).unwrap();
        let b = build_psi(&flat, 2.0, &geom, 1.0, &spec()).unwrap();
        assert_eq!(b.lambda, 0.0);
        assert!((b.amplitude - 2.0).abs() < 1e-12);
        let mut err = 0.0_f64;
        for (&y, &v) in b.psi.mesh().nodes().iter().zip(b.psi.values()) {
            err = err.max((v - (2.0 * y - 0.5 * y * y)).abs());
        }
        assert!(err < 1e-10, "barrier error {err:.3e}");
        assert!((b.eval(1.0) - 1.5).abs() < 1e-10);
        assert!((b.c_bound - 2.0).abs() < 1e-12);
        assert!((b.crude_bound - 2.0).abs() < 1e-12);
        assert!(b.flux_residual < 1e-10, "flux residual {:.3e}", b.flux_residual);
    }

    #[test]
    fn barrier_pinched_by_weighted_distance() {
        let flat = WeightProfile::uniform(1.0, 1.0).unwrap();
        let geom = DomainGeometry::interval(2.0).unwrap();
        let b = build_psi(&flat, 2.0, &geom, 1.0, &spec()).unwrap();
        for (&y, &v) in b.psi.mesh().nodes().iter().zip(b.psi.values()) {
            if y == 0.0 {
                assert_eq!(v, 0.0);
                continue;
            }
            let d = weighted_distance(&flat, 2.0, y).unwrap();
            assert!(v <= b.c_bound * d + 1e-12, "upper bound fails at {y}");
            assert!(v >= d / b.c_bound - 1e-12, "lower bound fails at {y}");
        }
    }

    #[test]
    fn singular_weight_barrier() {
        // a = t^{1/2}, p = 2: E(y) = 2 sqrt(y), psi(y) = 2 A sqrt(y) - 2y.
        let root = WeightProfile::power(1.0, 0.5, 0.5).unwrap();
        let geom = DomainGeometry::interval(2.0).unwrap();
        let b = build_psi(&root, 2.0, &geom, 1.0, &spec()).unwrap();
        let a = b.amplitude;
        assert!((a - 4.0 * 0.5_f64.sqrt()).abs() < 1e-10);
        let mut err = 0.0_f64;
        for (&y, &v) in b.psi.mesh().nodes().iter().zip(b.psi.values()) {
            err = err.max((v - (2.0 * a * y.sqrt() - 2.0 * y)).abs());
        }
        assert!(err < 1e-9, "barrier error {err:.3e}");
        assert!(b.flux_residual < 1e-9, "flux residual {:.3e}", b.flux_residual);
        for (&y, &v) in b.psi.mesh().nodes().iter().zip(b.psi.values()) {
            if y == 0.0 {
                continue;
            }
            let d = weighted_distance(&root, 2.0, y).unwrap();
            assert!(v <= b.c_bound * d + 1e-12 && v >= d / b.c_bound - 1e-12);
        }
    }

    #[test]
    fn curved_collar_barrier() {
        // Ball, N = 3, rho0 = 1/2: Lambda = 4. With a = 1 and p = 2,
        // E(y) = (e^{4y} - 1)/4 and
        // psi(y) = (A + 1/4)(1 - e^{-4y})/4 - y/4.
        let flat = WeightProfile::uniform(1.0, 0.5).unwrap();
        let geom = DomainGeometry::ball(1.0, 3).unwrap();
        let b = build_psi(&flat, 2.0, &geom, 1.0, &spec()).unwrap();
        assert!((b.lambda - 4.0).abs() < 1e-12);
        let a = b.amplitude;
        assert!((a - (2.0_f64.exp() - 1.0) / 2.0).abs() < 1e-10);
        let exact = |y: f64| (a + 0.25) * (1.0 - (-4.0 * y).exp()) / 4.0 - 0.25 * y;
        let mut err = 0.0_f64;
        for (&y, &v) in b.psi.mesh().nodes().iter().zip(b.psi.values()) {
            err = err.max((v - exact(y)).abs());
        }
        assert!(err < 1e-9, "curved barrier error {err:.3e}");
        assert!(b.flux_residual < 1e-9);
        for (&y, &v) in b.psi.mesh().nodes().iter().zip(b.psi.values()) {
            if y == 0.0 {
                continue;
            }
            assert!(v <= b.c_bound * y + 1e-12 && v >= y / b.c_bound - 1e-12);
        }
    }

    #[test]
    fn quotient_of_torsion_profile() {
        let flat = WeightProfile::uniform(1.0, 0.5).unwrap();
        let mesh = Arc::new(
            Mesh::boundary_layer(0.0, 1.0, 200, Some(0.3), Some(0.3)).unwrap(),
        );
        let u = Field::from_fn(mesh, |x| 0.5 * x * (1.0 - x), 2.0, "torsion").unwrap();
        let q = boundary_quotient(&u, &flat, 2.0, 0.5).unwrap();
        assert!((q - 0.5).abs() < 1e-9, "quotient {q}");
        let zero = Field::from_fn(u.mesh_arc(), |_| 0.0, 2.0, "zero").unwrap();
        assert_eq!(boundary_quotient(&zero, &flat, 2.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn quotient_of_ball_torsion() {
        let flat = WeightProfile::uniform(1.0, 0.5).unwrap();
        let geom = DomainGeometry::ball(1.0, 3).unwrap();
        let problem = Problem::new(geom, flat.clone(), 2.0, spec()).unwrap();
        let mesh = default_mesh(&problem, 400).unwrap();
        let one = |_: f64, _: f64| 1.0;
        let rhs = Rhs::Analytic { f: &one, gamma: 0.0 };
        let (u, _) = solve(&problem, &rhs, &mesh).unwrap();
        // Nodes at depth ~1e-12 carry quotient noise ~ulp(u)/d ~ 1e-4.
        let q = boundary_quotient(&u, &flat, 2.0, 0.5).unwrap();
        assert!((q - 1.0 / 3.0).abs() < 1e-3, "quotient {q}");
    }

    #[test]
    fn quotient_diverges_without_boundary_decay() {
        let flat = WeightProfile::uniform(1.0, 0.5).unwrap();
        let mesh = Arc::new(Mesh::uniform(0.0, 1.0, 16).unwrap());
        let u = Field::from_fn(mesh, |_| 1.0, 2.0, "constant").unwrap();
        assert!(boundary_quotient(&u, &flat, 2.0, 0.5).unwrap().is_infinite());
        assert!(matches!(
            boundary_quotient(&u, &flat, 2.0, 0.7),
            Err(Error::OutOfCollar { .. })
        ));
    }

    #[test]
    fn multiplier_grid() {
        let flat = WeightProfile::uniform(1.0, 1.0).unwrap();
        let geom = DomainGeometry::interval(2.0).unwrap();
        let b = build_psi(&flat, 2.0, &geom, 1.0, &spec()).unwrap();
        // d(1) = 1, c_bound = 2: the distance condition binds.
        let m = barrier_multiplier(0.0, &flat, 2.0, 1.0, &b).unwrap();
        assert!(m >= 2.0 - 1e-9 && m <= 2.2, "m = {m}");
        // K = 7 at p = 2: the growth condition binds.
        let m = barrier_multiplier(7.0, &flat, 2.0, 1.0, &b).unwrap();
        assert!(m > 7.0 && m <= 7.7, "m = {m}");
        // A huge weighted distance leaves only the floor.
        let thin = WeightProfile::uniform(1e-12, 1.0).unwrap();
        let m = barrier_multiplier(0.0, &thin, 2.0, 1.0, &b).unwrap();
        assert_eq!(m, MULTIPLIER_FLOOR);
    }

    #[test]
    fn barrier_dominates_collar_bounded_solutions() {
        // rhs bounded by K a^{-1/(p-1)} with K = 1 forces
        // |w| <= M (1 + sup w) psi on the collar.
        let flat = WeightProfile::uniform(1.0, 0.5).unwrap();
        let geom = DomainGeometry::interval(1.0).unwrap();
        let problem = Problem::new(geom, flat.clone(), 2.0, spec()).unwrap();
        let mesh = default_mesh(&problem, 300).unwrap();
        let one = |_: f64, _: f64| 1.0;
        let rhs = Rhs::Analytic { f: &one, gamma: 0.0 };
        let (w, _) = solve(&problem, &rhs, &mesh).unwrap();
        let b = build_psi(&flat, 2.0, &geom, 1.0, &spec()).unwrap();
        let m = barrier_multiplier(1.0, &flat, 2.0, 0.3, &b).unwrap();
        let cap = m * (1.0 + w.sup_norm());
        for (&x, &v) in w.mesh().nodes().iter().zip(w.values()) {
            let d = geom.dist(x);
            if d > 0.0 && d <= 0.3 {
                assert!(
                    v.abs() <= cap * b.eval(d) + 1e-12,
                    "barrier fails at {x}: {} vs {}",
                    v.abs(),
                    cap * b.eval(d)
                );
            }
        }
    }
}
