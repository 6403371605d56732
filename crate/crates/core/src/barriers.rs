//! Ordered sub/supersolution pair for the semipositone problem
//! `-div(a |grad u|^(p-2) grad u) = lambda b f(u)`.
//!
//! The upper barrier is `M L(b)`: the resolvent of the coefficient scaled
//! until `lambda f^(M ||L(b)||) <= M^(p-1)`, which exists because the
//! nondecreasing majorant `f^` of `f` is (p-1)-sublinear. The lower
//! barrier is `lambda^sigma v(dist)`, where `v` follows the weighted
//! distance power `B(rho) d(y)^beta` up to a gluing depth `rho`, continues
//! with an interior profile `phi` whose flux decays to zero at `rho1`, and
//! stays constant past `rho1`. The gluing depth solves
//! `t(rho) = lambda^(1 - sigma (p-1-r))` for the map
//! `t(rho) = e^(Lambda rho) A(rho) / \int_rho^rho1 e^(Lambda tau) a^(-1/(p-1))`,
//! whose minimum over `[rho1/2, rho1)` sets the threshold `lambda_hat_one`.
//! Everything is certified a posteriori: a signed finite-difference
//! residual for the lower barrier, a scalar crossover certificate for the
//! upper one, and a nodal ordering check.

use crate::error::{Error, Result};
use crate::field::{Field, Mesh};
use crate::geometry::DomainGeometry;
use crate::quadrature::{PrimitiveTable, QuadratureSpec};
use crate::resolvent::{p_flux, resolvent, Problem, Rhs};
use crate::weights::{weighted_distance, CoefficientB, WeightProfile};
use std::sync::Arc;

/// Sample points of the majorant cache on [0, 1].
const GRID_LINEAR: usize = 200_000;
/// Log-spaced sample points of the majorant cache on (1, ceiling].
const GRID_LOG: usize = 300_000;
/// Largest argument at which sublinearity can be certified.
const GRID_CEILING: f64 = 1e12;
/// Scan resolution for the gluing-radius map over [rho1/2, rho1).
const RHO_SCAN: usize = 2048;
/// Multiplier grid for the upper barrier.
const M_GRID_STEP: f64 = 1.001;
/// Geometric search grid for the certified threshold lambda_star.
const LAMBDA_STAR_STEP: f64 = 1.1;
const LAMBDA_STAR_TRIES: usize = 200;
/// Samples of the growth inequality over the profile range [1, plateau].
const GROWTH_SAMPLES: usize = 64;
/// Multiplier growth of the ordering pass.
const ORDER_GROW_STEP: f64 = 1.1;
const ORDER_GROW_TRIES: usize = 500;
/// Doubling budget of the lambda_zero sweep.
const LAMBDA_ZERO_DOUBLINGS: i32 = 40;

/// Nonlinearity `f` with its nondecreasing majorant and the comparison
/// envelope `f_tilde <= f` driving the lower barrier.
///
/// The majorant is a running maximum of `f` over a dense cached grid
/// (linear on [0, 1], log-spaced up to the ceiling), interpolated between
/// samples and constant past the ceiling; it is nondecreasing by
/// construction and dominates `f` up to grid resolution. The envelope
/// `f_tilde` must be nondecreasing with `f_tilde(0) < 0` and grow like
/// `mu zeta^r`; that growth is only certified later, per lambda, by the
/// sampled inequality of the lower-barrier builder.
pub struct NonlinearitySpec {
    f_fn: Box<dyn Fn(f64) -> f64>,
    tilde_fn: Box<dyn Fn(f64) -> f64>,
    /// Asymptotic slope of `f_tilde(zeta) / zeta^r`.
    pub mu: f64,
    /// Growth exponent of the envelope.
    pub r: f64,
    /// Whether `f` was negative somewhere on the sampled grid; the
    /// nontriviality of the problem rests on it, the barriers do not.
    pub semipositone: bool,
    tilde_zero: f64,
    grid: Vec<f64>,
    hat: Vec<f64>,
}

impl NonlinearitySpec {
    pub fn new(
        f: impl Fn(f64) -> f64 + 'static,
        f_tilde: impl Fn(f64) -> f64 + 'static,
        mu: f64,
        r: f64,
    ) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidNonlinearity(format!(
                "envelope slope mu = {mu} must be positive"
            )));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidNonlinearity(format!(
                "growth exponent r = {r} must be positive"
            )));
        }
        let f0 = f(0.0);
        if !(f0 <= 0.0) {
            return Err(Error::InvalidNonlinearity(format!(
                "f(0) = {f0:.6e} must be <= 0"
            )));
        }
        let t0 = f_tilde(0.0);
        if !(t0 < 0.0) {
            return Err(Error::InvalidNonlinearity(format!(
                "f_tilde(0) = {t0:.6e} must be negative"
            )));
        }

        let mut grid = Vec::with_capacity(GRID_LINEAR + GRID_LOG + 1);
        for k in 0..=GRID_LINEAR {
            grid.push(k as f64 / GRID_LINEAR as f64);
        }
        let step = GRID_CEILING.ln() / GRID_LOG as f64;
        for k in 1..=GRID_LOG {
            grid.push((k as f64 * step).exp());
        }

        let mut hat = Vec::with_capacity(grid.len());
        let mut running = f64::NEG_INFINITY;
        let mut f_min = f64::INFINITY;
        let mut prev_tilde = f64::NEG_INFINITY;
        for &z in &grid {
            let fz = f(z);
            let tz = f_tilde(z);
            if !fz.is_finite() || !tz.is_finite() {
                return Err(Error::NaNEncountered { t: z });
            }
            if tz > fz + 1e-12 * (1.0 + fz.abs()) {
                return Err(Error::InvalidNonlinearity(format!(
                    "f_tilde({z:.6e}) = {tz:.6e} exceeds f = {fz:.6e}"
                )));
            }
            if tz < prev_tilde - 1e-12 * (1.0 + prev_tilde.abs()) {
                return Err(Error::InvalidNonlinearity(format!(
                    "f_tilde decreases near zeta = {z:.6e}"
                )));
            }
            prev_tilde = tz;
            running = running.max(fz);
            f_min = f_min.min(fz);
            hat.push(running);
        }

        Ok(NonlinearitySpec {
            f_fn: Box::new(f),
            tilde_fn: Box::new(f_tilde),
            mu,
            r,
            semipositone: f_min < 0.0,
            tilde_zero: t0,
            grid,
            hat,
        })
    }

    pub fn f(&self, zeta: f64) -> f64 {
        (self.f_fn)(zeta)
    }

    pub fn tilde(&self, zeta: f64) -> f64 {
        (self.tilde_fn)(zeta)
    }

    pub fn tilde_zero(&self) -> f64 {
        self.tilde_zero
    }

    /// Nondecreasing majorant of `f`, interpolated from the cache.
    pub fn hat(&self, zeta: f64) -> f64 {
        let z = zeta.max(0.0);
        let n = self.grid.len();
        if z >= self.grid[n - 1] {
            return self.hat[n - 1];
        }
        let i = match self
            .grid
            .binary_search_by(|g| g.partial_cmp(&z).unwrap())
        {
            Ok(i) => return self.hat[i],
            Err(i) => i - 1,
        };
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        let s = (z - a) / (b - a);
        self.hat[i] + s * (self.hat[i + 1] - self.hat[i])
    }

    /// Majorant-to-power ratios `hat(zeta) / zeta^(p-1)` on a decade grid,
    /// for hypothesis reporting.
    pub fn sublinearity_ratios(&self, p: f64) -> Vec<(f64, f64)> {
        [1e2, 1e4, 1e6, 1e8]
            .iter()
            .map(|&z| (z, self.hat(z) / z.powf(p - 1.0)))
            .collect()
    }

    /// Smallest cached `zeta >= 1` past which `hat(z) <= eps z^(p-1)`
    /// holds at every later sample; None when the ceiling is reached first.
    fn zeta_lambda(&self, eps: f64, p: f64) -> Option<f64> {
        let mut best = None;
        for i in (GRID_LINEAR..self.grid.len()).rev() {
            let z = self.grid[i];
            if self.hat[i] <= eps * z.powf(p - 1.0) {
                best = Some(z);
            } else {
                break;
            }
        }
        best
    }
}

/// The nondecreasing majorant of `f` at `zeta`.
pub fn f_hat(spec: &NonlinearitySpec, zeta: f64) -> f64 {
    spec.hat(zeta)
}

/// Exponents of the lower-barrier construction.
#[derive(Debug, Clone, Copy)]
pub struct SubsolutionParams {
    /// Growth exponent of the comparison envelope, 0 < r < p-1.
    pub r: f64,
    /// Scaling exponent, 1/(p-1) < sigma < 1/(p-1-r).
    pub sigma: f64,
    /// Distance power of the boundary branch, 1 < beta < 1 + 1/(p-1).
    pub beta: f64,
    /// Slack taken out of the envelope slope mu, 0 < epsilon < mu.
    pub epsilon: f64,
    /// Collar depth at which the interior profile goes flat.
    pub rho1: f64,
    /// The growth hypothesis is usually quoted for r > 1; the gluing
    /// algebra only needs 0 < r < p-1, so smaller r is flagged here
    /// instead of rejected.
    pub r_below_usual: bool,
}

impl SubsolutionParams {
    pub fn new(
        p: f64,
        r: f64,
        sigma: f64,
        beta: f64,
        epsilon: Option<f64>,
        rho1: f64,
        mu: f64,
    ) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponents(format!("p = {p} must exceed 1")));
        }
        if !(r > 0.0 && r < p - 1.0) {
            return Err(Error::InvalidExponents(format!(
                "need 0 < r < p-1, got r = {r} at p = {p}"
            )));
        }
        let (lo, hi) = (1.0 / (p - 1.0), 1.0 / (p - 1.0 - r));
        if !(sigma > lo && sigma < hi) {
            return Err(Error::InvalidExponents(format!(
                "sigma = {sigma} outside ({lo:.6}, {hi:.6})"
            )));
        }
        if !(beta > 1.0 && beta < 1.0 + 1.0 / (p - 1.0)) {
            return Err(Error::InvalidExponents(format!(
                "beta = {beta} outside (1, {:.6})",
                1.0 + 1.0 / (p - 1.0)
            )));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidNonlinearity(format!(
                "envelope slope mu = {mu} must be positive"
            )));
        }
        let epsilon = epsilon.unwrap_or(0.5 * mu);
        if !(epsilon > 0.0 && epsilon < mu) {
            return Err(Error::InvalidNonlinearity(format!(
                "epsilon = {epsilon} must sit in (0, mu = {mu})"
            )));
        }
        if !(rho1 > 0.0) || !rho1.is_finite() {
            return Err(Error::Config(format!("rho1 = {rho1} invalid")));
        }
        Ok(SubsolutionParams {
            r,
            sigma,
            beta,
            epsilon,
            rho1,
            r_below_usual: r <= 1.0,
        })
    }

    /// Parameters with `r` and the default slack taken from the envelope.
    pub fn for_spec(
        p: f64,
        spec: &NonlinearitySpec,
        sigma: f64,
        beta: f64,
        rho1: f64,
    ) -> Result<Self> {
        Self::new(p, spec.r, sigma, beta, None, rho1, spec.mu)
    }
}

/// Certified lambda landmarks of a barrier pair.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LambdaThresholds {
    /// Smallest lambda at which the gluing radius exists.
    pub lambda_hat_one: f64,
    /// Smallest swept lambda passing the flux and growth conditions.
    pub lambda_star: f64,
    /// Lambda at which the pair was ordered.
    pub lambda_zero: f64,
    /// Gluing radius used by the lower barrier.
    pub rho_of_lambda: f64,
    /// Upper-barrier multiplier after ordering.
    pub m_of_lambda: f64,
}

/// Upper barrier `M L(b)` with its crossover data.
#[derive(Debug, Clone)]
pub struct Supersolution {
    pub u: Field,
    pub m: f64,
    /// Crossover argument past which the majorant sits below
    /// `eps zeta^(p-1)`.
    pub zeta_lambda: f64,
    pub epsilon: f64,
    pub psi_sup: f64,
    /// `lambda hat(M ||psi||) - M^(p-1)`; nonpositive when certified.
    pub certificate: f64,
}

/// Lower barrier `lambda^sigma v(dist)` with its thresholds.
#[derive(Debug, Clone)]
pub struct Subsolution {
    pub u: Field,
    pub rho: f64,
    pub rho_hat: f64,
    pub lambda_hat_one: f64,
    pub lambda_star: f64,
    /// Interior profile value at rho1, before the lambda^sigma scaling.
    pub plateau: f64,
    /// Largest signed finite-difference residual over interior nodes,
    /// normalized per node by `1 + |flux term| + |reaction term|`.
    pub residual: f64,
}

/// Ordered pair with its certificates.
#[derive(Debug, Clone)]
pub struct BarrierPair {
    pub u_lower: Field,
    pub u_upper: Field,
    pub thresholds: LambdaThresholds,
    pub lower_residual: f64,
    pub upper_certificate: f64,
}

/// Result of the gluing-radius equation.
#[derive(Debug, Clone, Copy)]
pub struct GluingRadius {
    pub rho_hat: f64,
    pub lambda_hat_one: f64,
    pub rho: f64,
}

/// The map `t(rho)` and its tail integral, shared by the threshold
/// search and the radius solve.
struct RhoMap {
    profile: WeightProfile,
    p: f64,
    /// Curvature constant Lambda = min d/dy log J >= 0.
    lam: f64,
    beta: f64,
    rho1: f64,
    /// 1 - sigma (p-1-r), in (0, 1); the lambda power t(rho) matches.
    exponent: f64,
    quad: QuadratureSpec,
    /// Integral of `e^(Lambda tau) a^(-1/(p-1))` over `[rho1 - u, rho1]`.
    tail: PrimitiveTable,
}

impl RhoMap {
    fn new(
        profile: &WeightProfile,
        geom: &DomainGeometry,
        params: &SubsolutionParams,
        p: f64,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let rho1 = params.rho1;
        let depth = geom.max_collar_depth().min(profile.rho0());
        if rho1 > depth * (1.0 + 1e-12) {
            return Err(Error::OutOfCollar { t: rho1, rho0: depth });
        }
        let info = geom.lambda_constants(rho1)?;
        if info.lambda_min < 0.0 {
            return Err(Error::GeometryInadmissible {
                lambda_min: info.lambda_min,
            });
        }
        let lam = info.lambda_min;
        let plain = quad.without_hint();
        let prof = profile.clone();
        let tail = PrimitiveTable::build(
            |u| (lam * (rho1 - u)).exp() * prof.apow(p, rho1 - u),
            0.5 * rho1,
            &plain,
        )?;
        Ok(RhoMap {
            profile: profile.clone(),
            p,
            lam,
            beta: params.beta,
            rho1,
            exponent: 1.0 - params.sigma * (p - 1.0 - params.r),
            quad: plain,
            tail,
        })
    }

    fn dist(&self, rho: f64) -> Result<f64> {
        weighted_distance(&self.profile, self.p, rho)
    }

    /// Boundary flux amplitude `A(rho) = beta^(p-1) d(rho)^(1-p)`.
    fn amplitude(&self, rho: f64) -> Result<f64> {
        Ok(self.beta.powf(self.p - 1.0) * self.dist(rho)?.powf(1.0 - self.p))
    }

    fn t(&self, rho: f64) -> Result<f64> {
        let tail = self.tail.eval(self.rho1 - rho);
        if !(tail > 0.0) {
            return Err(Error::Divergent {
                detail: format!("collar tail integral vanished at rho = {rho:.6e}"),
            });
        }
        Ok((self.lam * rho).exp() * self.amplitude(rho)? / tail)
    }

    fn scan_point(&self, j: usize) -> f64 {
        let half = 0.5 * self.rho1;
        half + half * (1.0 - 1e-9) * j as f64 / RHO_SCAN as f64
    }

    /// Minimizer of t over [rho1/2, rho1): scan plus ternary refinement.
    fn minimize(&self) -> Result<(f64, f64)> {
        let mut best_j = 0;
        let mut best_t = self.t(self.scan_point(0))?;
        for j in 1..=RHO_SCAN {
            let t = self.t(self.scan_point(j))?;
            if t < best_t {
                best_t = t;
                best_j = j;
            }
        }
        let mut a = self.scan_point(best_j.saturating_sub(1));
        let mut b = self.scan_point((best_j + 1).min(RHO_SCAN));
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if self.t(m1)? <= self.t(m2)? {
                b = m2;
            } else {
                a = m1;
            }
        }
        let rho_hat = 0.5 * (a + b);
        Ok((rho_hat, self.t(rho_hat)?))
    }

    /// Smallest solution of `t(rho) = lambda^exponent` in `[rho_hat, rho1)`.
    fn root(&self, lambda: f64, rho_hat: f64, t_hat: f64) -> Result<f64> {
        let lambda_hat_one = t_hat.powf(1.0 / self.exponent);
        if lambda < lambda_hat_one * (1.0 - 1e-12) {
            return Err(Error::BelowLambdaHatOne {
                lambda,
                lambda_hat_one,
            });
        }
        let target = lambda.powf(self.exponent);
        if target <= t_hat * (1.0 + 1e-12) {
            return Ok(rho_hat);
        }
        let mut lo = rho_hat;
        let mut hi = None;
        for j in 0..=RHO_SCAN {
            let rho = self.scan_point(j);
            if rho <= rho_hat {
                continue;
            }
            if self.t(rho)? >= target {
                hi = Some(rho);
                break;
            }
            lo = rho;
        }
        let mut hi = match hi {
            Some(h) => h,
            None => {
                let edge = self.rho1 * (1.0 - 1e-12);
                if self.t(edge)? < target {
                    return Err(Error::Divergent {
                        detail: format!(
                            "gluing radius pushed against rho1 = {:.6e}",
                            self.rho1
                        ),
                    });
                }
                edge
            }
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.t(mid)? >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Solves for the gluing radius of the lower barrier at `lambda`.
///
/// Scans `t` over `[rho1/2, rho1)` for its minimizer `rho_hat`, converts
/// the minimum into the threshold `lambda_hat_one = t(rho_hat)^(1/(1 -
/// sigma (p-1-r)))`, and bisects for the smallest crossing right of the
/// minimizer. Geometries whose collar curvature constant is negative are
/// refused.
pub fn solve_rho(
    profile: &WeightProfile,
    geom: &DomainGeometry,
    params: &SubsolutionParams,
    p: f64,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<GluingRadius> {
    let map = RhoMap::new(profile, geom, params, p, quad)?;
    let (rho_hat, t_hat) = map.minimize()?;
    let lambda_hat_one = t_hat.powf(1.0 / map.exponent);
    let rho = map.root(lambda, rho_hat, t_hat)?;
    Ok(GluingRadius {
        rho_hat,
        lambda_hat_one,
        rho,
    })
}

/// Closed-form boundary amplitudes of the distance-power branch:
/// `A = beta^(p-1) d(rho)^(1-p)` and `B = d(rho)^(-beta)`, so that
/// `B d(y)^beta` has value 1 and flux `A` at the gluing radius.
pub fn boundary_amplitude(
    profile: &WeightProfile,
    p: f64,
    beta: f64,
    rho: f64,
) -> Result<(f64, f64)> {
    let d = weighted_distance(profile, p, rho)?;
    Ok((beta.powf(p - 1.0) * d.powf(1.0 - p), d.powf(-beta)))
}

/// Builds the upper barrier `M L(b)` at `lambda`.
///
/// The resolvent profile is scaled onto the smallest multiplier of the
/// 1.001 grid with `M ||psi|| >= zeta_lambda`, where the crossover
/// `zeta_lambda` is the smallest cached argument past which
/// `hat(z) <= z^(p-1) / (lambda ||psi||^(p-1))` holds at every sample.
/// The returned certificate `lambda hat(M ||psi||) - M^(p-1)` is
/// nonpositive whenever the construction succeeded.
pub fn build_supersolution(
    spec: &NonlinearitySpec,
    problem: &Problem,
    b: &CoefficientB,
    lambda: f64,
    mesh: &Arc<Mesh>,
) -> Result<Supersolution> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda = {lambda} must be positive")));
    }
    let p = problem.p;
    let profile = &problem.weight;
    let f = |_x: f64, d: f64| b.eval(d, profile, p);
    let rhs = Rhs::Analytic {
        f: &f,
        gamma: b.gamma(profile, p),
    };
    let psi = resolvent(problem, &rhs, mesh)?;
    let psi_sup = psi.sup_norm();
    if !(psi_sup > 0.0) {
        return Err(Error::Config(
            "coefficient b produced a vanishing resolvent profile".into(),
        ));
    }
    let epsilon = 1.0 / (lambda * psi_sup.powf(p - 1.0));
    let zeta_lambda = spec
        .zeta_lambda(epsilon, p)
        .ok_or(Error::SublinearityUnverifiable {
            ceiling: GRID_CEILING,
        })?;

    // Round the multiplier up onto the grid; the certificate keeps a
    // margin over the sampled crossover.
    let raw = zeta_lambda / psi_sup;
    let mut k = (raw.ln() / M_GRID_STEP.ln()).ceil();
    if M_GRID_STEP.powf(k) < raw {
        k += 1.0;
    }
    let m = M_GRID_STEP.powf(k);

    let values: Vec<f64> = psi.values().iter().map(|v| m * v).collect();
    let u = Field::new(psi.mesh_arc(), values, p, "supersolution")?
        .with_geom(problem.geometry.clone());
    let certificate = lambda * spec.hat(m * psi_sup) - p_flux(m, p);
    Ok(Supersolution {
        u,
        m,
        zeta_lambda,
        epsilon,
        psi_sup,
        certificate,
    })
}

/// Interior profile on `[rho, rho1]` as a primitive table of `phi - 1`,
/// together with the plateau value `phi(rho1)`.
fn build_phi(map: &RhoMap, rho: f64, lambda: f64) -> Result<(PrimitiveTable, f64)> {
    let len = map.rho1 - rho;
    let c0 = (map.lam * rho).exp() * map.amplitude(rho)?;
    let scale = lambda.powf(map.exponent);
    let pm1 = map.p - 1.0;
    let inner = PrimitiveTable::build(
        |u| (map.lam * (rho + u)).exp() * map.profile.apow(map.p, rho + u),
        len,
        &map.quad,
    )?;
    // The bracket reaches zero at rho1 by choice of rho; clamping guards
    // the bisection residual.
    let phi = PrimitiveTable::build(
        |u| {
            let bracket = (c0 - scale * inner.eval(u)).max(0.0);
            (-map.lam * (rho + u) / pm1).exp()
                * map.profile.apow(map.p, rho + u)
                * bracket.powf(1.0 / pm1)
        },
        len,
        &map.quad,
    )?;
    let plateau = 1.0 + phi.total();
    Ok((phi, plateau))
}

/// Worst normalized margin of `(mu - eps) lambda^(sigma r) v^r <=
/// f_tilde(lambda^sigma v)` over `v` in `[1, top]`.
fn growth_margin(
    spec: &NonlinearitySpec,
    params: &SubsolutionParams,
    lambda: f64,
    top: f64,
) -> (f64, f64) {
    let mu_eps = spec.mu - params.epsilon;
    let lam_sig = lambda.powf(params.sigma);
    let lam_r = lambda.powf(params.sigma * spec.r);
    let mut worst = f64::INFINITY;
    let mut at = 1.0;
    for k in 0..=GROWTH_SAMPLES {
        let v = 1.0 + (top - 1.0).max(0.0) * k as f64 / GROWTH_SAMPLES as f64;
        let need = mu_eps * lam_r * v.powf(spec.r);
        let have = spec.tilde(lam_sig * v);
        let margin = (have - need) / (1.0 + need.abs());
        if margin < worst {
            worst = margin;
            at = v;
        }
    }
    (worst, at)
}

/// Closed-form upper bound for the plateau: the flux bracket never
/// exceeds its value at rho, so `phi(rho1) <= 1 + C^(1/(p-1)) (d(rho1) -
/// d(rho))`.
fn plateau_bound(map: &RhoMap, rho: f64) -> Result<f64> {
    let c0 = (map.lam * rho).exp() * map.amplitude(rho)?;
    let spread = map.dist(map.rho1)? - map.dist(rho)?;
    Ok(1.0 + c0.powf(1.0 / (map.p - 1.0)) * spread)
}

/// Smallest lambda on the geometric grid above `lambda_hat_one` passing
/// the two flux threshold conditions and the sampled growth inequality.
fn lambda_star_search(
    spec: &NonlinearitySpec,
    map: &RhoMap,
    params: &SubsolutionParams,
    b: &CoefficientB,
    lambda_hat_one: f64,
    rho_hat: f64,
    t_hat: f64,
) -> Result<f64> {
    let pm1 = map.p - 1.0;
    let d1 = map.dist(map.rho1)?;
    // Divergence of the distance-power flux at depth rho1, the worst
    // point of the boundary branch.
    let wall = params.beta.powf(pm1) * (params.beta - 1.0) * pm1 * d1.powf(-map.p);
    let drive = b.c2 * (-spec.tilde_zero);
    let mu_eps = spec.mu - params.epsilon;

    let mut cand = lambda_hat_one;
    let mut worst = (f64::INFINITY, 1.0, lambda_hat_one);
    for _ in 0..=LAMBDA_STAR_TRIES {
        let flux_ok = cand.powf(1.0 - params.sigma * pm1) * drive <= wall;
        let slope_ok = cand.powf(-params.sigma * pm1) <= b.c1 * mu_eps;
        if flux_ok && slope_ok {
            let rho = map.root(cand, rho_hat, t_hat)?;
            let top = plateau_bound(map, rho)?;
            let (margin, at) = growth_margin(spec, params, cand, top);
            if margin >= -1e-12 {
                return Ok(cand);
            }
            if margin < worst.0 {
                worst = (margin, at, cand);
            }
        }
        cand *= LAMBDA_STAR_STEP;
    }
    let detail = if worst.0.is_finite() {
        format!(
            "growth envelope short by {:.3e} at v = {:.6e}",
            -worst.0, worst.1
        )
    } else {
        format!("flux threshold conditions unmet below lambda = {cand:.6e}")
    };
    Err(Error::EnvelopeFailure {
        lambda: worst.2,
        detail,
    })
}

/// Copy of `mesh` with nodes at the gluing depths of every Dirichlet end.
fn with_barrier_nodes(
    geom: &DomainGeometry,
    mesh: &Arc<Mesh>,
    rho: f64,
    rho1: f64,
) -> Arc<Mesh> {
    let (lo, hi) = geom.coords();
    let (dl, dr) = geom.dirichlet_ends();
    let mut out = (**mesh).clone();
    if dl {
        out.insert(lo + rho);
        out.insert(lo + rho1);
    }
    if dr {
        out.insert(hi - rho);
        out.insert(hi - rho1);
    }
    Arc::new(out)
}

/// Builds the lower barrier `lambda^sigma v(dist)` at `lambda`.
///
/// Certifies the thresholds first (the gluing gate `lambda >=
/// lambda_hat_one` binds before `lambda >= lambda_star`), solves the
/// gluing radius,
/// assembles `v` (distance power below `rho`, interior profile up to
/// `rho1`, constant past it) on a copy of the mesh with the gluing depths
/// inserted, re-checks the growth inequality against the actual plateau,
/// and evaluates the signed finite-difference residual
/// `-(J a |u'|^(p-2) u')' / J - lambda b f_tilde(u)` at every interior
/// node. The residual should be dominated by its negative part; the
/// reported value is the worst (largest) node, normalized.
pub fn build_subsolution(
    spec: &NonlinearitySpec,
    problem: &Problem,
    b: &CoefficientB,
    params: &SubsolutionParams,
    lambda: f64,
    mesh: &Arc<Mesh>,
) -> Result<Subsolution> {
    if (spec.r - params.r).abs() > 1e-12 * (1.0 + spec.r.abs()) {
        return Err(Error::InvalidExponents(format!(
            "growth exponent mismatch: envelope r = {}, params r = {}",
            spec.r, params.r
        )));
    }
    if !(params.epsilon < spec.mu) {
        return Err(Error::InvalidNonlinearity(format!(
            "epsilon = {} must stay below mu = {}",
            params.epsilon, spec.mu
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda = {lambda} must be positive")));
    }
    let p = problem.p;
    let profile = &problem.weight;
    let geom = &problem.geometry;

    let map = RhoMap::new(profile, geom, params, p, &problem.quad)?;
    let (rho_hat, t_hat) = map.minimize()?;
    let lambda_hat_one = t_hat.powf(1.0 / map.exponent);
    if lambda < lambda_hat_one * (1.0 - 1e-12) {
        return Err(Error::BelowLambdaHatOne {
            lambda,
            lambda_hat_one,
        });
    }
    let lambda_star =
        lambda_star_search(spec, &map, params, b, lambda_hat_one, rho_hat, t_hat)?;
    if lambda < lambda_star * (1.0 - 1e-12) {
        return Err(Error::BelowLambdaStar {
            lambda,
            lambda_star,
        });
    }

    let rho = map.root(lambda, rho_hat, t_hat)?;
    let (phi, plateau) = build_phi(&map, rho, lambda)?;
    let (margin, at) = growth_margin(spec, params, lambda, plateau);
    if margin < -1e-12 {
        return Err(Error::EnvelopeFailure {
            lambda,
            detail: format!("growth envelope short by {:.3e} at v = {:.6e}", -margin, at),
        });
    }

    let aug = with_barrier_nodes(geom, mesh, rho, params.rho1);
    let big_b = map.dist(rho)?.powf(-params.beta);
    let lam_sigma = lambda.powf(params.sigma);
    let mut values = Vec::with_capacity(aug.len());
    for &x in aug.nodes() {
        let y = geom.dist(x);
        let v = if y <= 0.0 {
            0.0
        } else if y < rho {
            big_b * weighted_distance(profile, p, y)?.powf(params.beta)
        } else if y < params.rho1 {
            1.0 + phi.eval(y - rho)
        } else {
            plateau
        };
        values.push(lam_sigma * v);
    }
    let u = Field::new(aug.clone(), values, p, "subsolution")?.with_geom(geom.clone());

    let nodes = aug.nodes();
    let vals = u.values();
    let mut residual = f64::NEG_INFINITY;
    for i in 1..nodes.len() - 1 {
        let (xl, x, xr) = (nodes[i - 1], nodes[i], nodes[i + 1]);
        let (ml, mr) = (0.5 * (xl + x), 0.5 * (x + xr));
        let sl = (vals[i] - vals[i - 1]) / (x - xl);
        let sr = (vals[i + 1] - vals[i]) / (xr - x);
        let gl = geom.measure(ml) * profile.eval(geom.dist(ml)) * p_flux(sl, p);
        let gr = geom.measure(mr) * profile.eval(geom.dist(mr)) * p_flux(sr, p);
        let lhs = -(gr - gl) / ((mr - ml) * geom.measure(x));
        let rhs = lambda * b.eval(geom.dist(x), profile, p) * spec.tilde(vals[i]);
        let res = (lhs - rhs) / (1.0 + lhs.abs() + rhs.abs());
        if res > residual {
            residual = res;
        }
    }

    Ok(Subsolution {
        u,
        rho,
        rho_hat,
        lambda_hat_one,
        lambda_star,
        plateau,
        residual,
    })
}

/// Orders the pair at `lambda` by growing the upper multiplier.
///
/// Grows `M` geometrically until the interior comparison scale
/// `c1 lambda^(sigma(p-1-r) - 1) M^(p-1) >= phi(rho1)^r` holds and the
/// lower barrier sits below the upper one at every node of the lower
/// mesh (the upper barrier is piecewise linear, so resampling onto the
/// refined mesh is exact).
pub fn order_pair(
    sub: &Subsolution,
    sup: &Supersolution,
    spec: &NonlinearitySpec,
    params: &SubsolutionParams,
    b: &CoefficientB,
    problem: &Problem,
    lambda: f64,
) -> Result<BarrierPair> {
    let p = problem.p;
    let mesh = sub.u.mesh_arc();
    let nodes = mesh.nodes();
    let base: Vec<f64> = nodes.iter().map(|&x| sup.u.eval(x)).collect();
    let need = sub.plateau.powf(params.r);
    let power = params.sigma * (p - 1.0 - params.r) - 1.0;

    let mut m = sup.m;
    let mut last = (nodes[0], 0.0);
    for _ in 0..=ORDER_GROW_TRIES {
        let scale = m / sup.m;
        let mut gap = f64::NEG_INFINITY;
        let mut at = nodes[0];
        for (i, &x) in nodes.iter().enumerate() {
            let g = sub.u.values()[i] - scale * base[i];
            if g > gap {
                gap = g;
                at = x;
            }
        }
        let tol = 1e-10 * (1.0 + scale * sup.u.sup_norm());
        let scale_ok = b.c1 * lambda.powf(power) * p_flux(m, p) >= need;
        if scale_ok && gap <= tol {
            let values: Vec<f64> = base.iter().map(|v| scale * v).collect();
            let upper = Field::new(mesh.clone(), values, p, "supersolution")?
                .with_geom(problem.geometry.clone());
            let certificate = lambda * spec.hat(m * sup.psi_sup) - p_flux(m, p);
            return Ok(BarrierPair {
                u_lower: sub.u.clone(),
                u_upper: upper,
                thresholds: LambdaThresholds {
                    lambda_hat_one: sub.lambda_hat_one,
                    lambda_star: sub.lambda_star,
                    lambda_zero: lambda,
                    rho_of_lambda: sub.rho,
                    m_of_lambda: m,
                },
                lower_residual: sub.residual,
                upper_certificate: certificate,
            });
        }
        last = (at, gap);
        m *= ORDER_GROW_STEP;
    }
    Err(Error::OrderingFailure {
        node: last.0,
        gap: last.1,
    })
}

/// Smallest lambda of the doubling sweep above lambda_star at which the
/// pair builds and orders; returns the certified pair at that lambda.
pub fn lambda_zero(
    spec: &NonlinearitySpec,
    problem: &Problem,
    b: &CoefficientB,
    params: &SubsolutionParams,
    mesh: &Arc<Mesh>,
) -> Result<BarrierPair> {
    let map = RhoMap::new(&problem.weight, &problem.geometry, params, problem.p, &problem.quad)?;
    let (rho_hat, t_hat) = map.minimize()?;
    let lambda_hat_one = t_hat.powf(1.0 / map.exponent);
    let star = lambda_star_search(spec, &map, params, b, lambda_hat_one, rho_hat, t_hat)?;

    let mut last = Error::OrderingFailure {
        node: 0.0,
        gap: 0.0,
    };
    for k in 0..=LAMBDA_ZERO_DOUBLINGS {
        let lambda = star * 2.0f64.powi(k);
        let sub = build_subsolution(spec, problem, b, params, lambda, mesh)?;
        let sup = build_supersolution(spec, problem, b, lambda, mesh)?;
        match order_pair(&sub, &sup, spec, params, b, problem, lambda) {
            Ok(pair) => return Ok(pair),
            Err(e @ Error::OrderingFailure { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}
