//! Boundary weight profiles and hypothesis checks.
//!
//! The weight `a` acts through the distance to the boundary: near the
//! boundary `a(x) = a(dist(x))` for a one-variable profile on the collar
//! `(0, rho0)`, and `a` is continued into the interior by a positive
//! constant. The standing integrability assumptions are `a` integrable
//! on the collar and `a^-1` in `L^s` with `s > max(N/p, 1/(p-1))`;
//! everything downstream also leans on the weighted distance
//! `d(t) = \int_0^t a^(-1/(p-1))` being finite.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, PrimitiveTable, QuadratureSpec};
use serde::Serialize;

/// Shape of the weight on the collar.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// `a(t) = c`.
    Uniform { c: f64 },
    /// `a(t) = c t^alpha`; alpha > 0 degenerates at the boundary,
    /// alpha < 0 blows up.
    Power { c: f64, alpha: f64 },
    /// Positive samples `(t, a(t))`, interpolated log-linearly.
    Table { samples: Vec<(f64, f64)> },
}

/// Value of `a` past the collar depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteriorExtension {
    /// Continue with the collar value `a(rho0)`.
    Continuation,
    /// Explicit positive constant.
    Floor(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    family: WeightFamily,
    rho0: f64,
    interior: InteriorExtension,
}

impl WeightProfile {
    pub fn new(family: WeightFamily, rho0: f64) -> Result<Self> {
        if !(rho0 > 0.0) || !rho0.is_finite() {
            return Err(Error::Config(format!("collar depth rho0 = {rho0} invalid")));
        }
        match &family {
            WeightFamily::Uniform { c } | WeightFamily::Power { c, .. } => {
                if !(*c > 0.0) {
                    return Err(Error::NonPositiveWeight { t: 0.0, value: *c });
                }
            }
            WeightFamily::Table { samples } => {
                if samples.len() < 2 {
                    return Err(Error::Config("weight table needs at least 2 samples".into()));
                }
                for w in samples.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::Config("weight table abscissae not increasing".into()));
                    }
                }
                for &(t, a) in samples {
                    if !(a > 0.0) || !a.is_finite() {
                        return Err(Error::NonPositiveWeight { t, value: a });
                    }
                }
            }
        }
        Ok(WeightProfile {
            family,
            rho0,
            interior: InteriorExtension::Continuation,
        })
    }

    pub fn uniform(c: f64, rho0: f64) -> Result<Self> {
        Self::new(WeightFamily::Uniform { c }, rho0)
    }

    pub fn power(c: f64, alpha: f64, rho0: f64) -> Result<Self> {
        Self::new(WeightFamily::Power { c, alpha }, rho0)
    }

    pub fn with_interior(mut self, interior: InteriorExtension) -> Result<Self> {
        if let InteriorExtension::Floor(v) = interior {
            if !(v > 0.0) {
                return Err(Error::NonPositiveWeight { t: self.rho0, value: v });
            }
        }
        self.interior = interior;
        Ok(self)
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn family_tag(&self) -> String {
        match &self.family {
            WeightFamily::Uniform { c } => format!("uniform(c={c})"),
            WeightFamily::Power { c, alpha } => format!("power(c={c}, alpha={alpha})"),
            WeightFamily::Table { samples } => format!("table({} samples)", samples.len()),
        }
    }

    fn collar_value(&self, t: f64) -> f64 {
        match &self.family {
            WeightFamily::Uniform { c } => *c,
            WeightFamily::Power { c, alpha } => c * t.powf(*alpha),
            WeightFamily::Table { samples } => {
                let first = samples[0];
                let last = samples[samples.len() - 1];
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let i = samples.partition_point(|&(x, _)| x <= t) - 1;
                let (t0, a0) = samples[i];
                let (t1, a1) = samples[i + 1];
                let s = (t - t0) / (t1 - t0);
                (a0.ln() * (1.0 - s) + a1.ln() * s).exp()
            }
        }
    }

    pub fn interior_value(&self) -> f64 {
        match self.interior {
            InteriorExtension::Continuation => self.collar_value(self.rho0),
            InteriorExtension::Floor(v) => v,
        }
    }

    /// `a` at boundary distance `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        if t >= self.rho0 {
            self.interior_value()
        } else {
            self.collar_value(t)
        }
    }

    /// `a(t)^(-1/(p-1))`, the density of the weighted distance.
    pub fn apow(&self, p: f64, t: f64) -> f64 {
        self.eval(t).powf(-1.0 / (p - 1.0))
    }

    /// Exponent gamma with `a^(-1/(p-1)) ~ t^-gamma` at the boundary.
    pub fn apow_gamma(&self, p: f64) -> f64 {
        match &self.family {
            WeightFamily::Power { alpha, .. } if *alpha > 0.0 => alpha / (p - 1.0),
            _ => 0.0,
        }
    }

    /// Quadrature spec for collar integrals of `a^(-1/(p-1))`.
    pub fn apow_quad(&self, p: f64, base: &QuadratureSpec) -> QuadratureSpec {
        let gamma = self.apow_gamma(p);
        if gamma > 0.0 {
            base.with_hint(gamma)
        } else {
            base.without_hint()
        }
    }
}

/// The exponent cluster `(p, N, s, q)` with the derived pair
/// `p_s = ps/(s+1)` and its Sobolev conjugate `p_s* = N p_s / (N - p_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    pub p: f64,
    pub n: u32,
    pub s: f64,
    pub q: f64,
    pub p_s: f64,
    pub p_s_star: f64,
}

/// Derived exponents for a weight with `a^-1` in `L^s`.
pub fn sobolev_exponents(p: f64, s: f64, n: u32) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidExponents(format!("N = {n} must be >= 2")));
    }
    let nf = n as f64;
    if !(p > 1.0 && p < nf) {
        return Err(Error::InvalidExponents(format!("p = {p} outside (1, {n})")));
    }
    let s_floor = (nf / p).max(1.0 / (p - 1.0));
    if !(s > s_floor) {
        return Err(Error::InvalidExponents(format!(
            "s = {s} must exceed max(N/p, 1/(p-1)) = {s_floor}"
        )));
    }
    let p_s = p * s / (s + 1.0);
    let p_s_star = nf * p_s / (nf - p_s);
    Ok((p_s, p_s_star))
}

impl ExponentSet {
    pub fn new(p: f64, n: u32, s: f64, q: f64) -> Result<Self> {
        let (p_s, p_s_star) = sobolev_exponents(p, s, n)?;
        let nf = n as f64;
        let unweighted_star = nf * p / (nf - p);
        if !(p_s < p && p < p_s_star && p_s_star < unweighted_star) {
            return Err(Error::InvalidExponents(format!(
                "chain p_s < p < p_s* < Np/(N-p) broken: {p_s}, {p}, {p_s_star}, {unweighted_star}"
            )));
        }
        if !(q >= p && q < p_s_star) {
            return Err(Error::InvalidExponents(format!(
                "q = {q} outside [p, p_s*) = [{p}, {p_s_star})"
            )));
        }
        Ok(ExponentSet {
            p,
            n,
            s,
            q,
            p_s,
            p_s_star,
        })
    }

    /// Conjugate exponent `q/(q-p)` for the coefficient norm; `None` is sup.
    pub fn b_norm_exponent(&self) -> Option<f64> {
        if self.q > self.p {
            Some(self.q / (self.q - self.p))
        } else {
            None
        }
    }
}

/// Coefficient `b` multiplying the nonlinearity, defined through the
/// boundary distance like the weight.
#[derive(Debug, Clone, PartialEq)]
pub enum BFamily {
    /// `b(t) = c`.
    Uniform { c: f64 },
    /// `b(t) = c a(t)^(-1/(p-1))` on the collar, continued inside.
    MatchedToWeight { c: f64 },
    /// `b(t) = c t^exponent` on the collar, continued inside.
    Power { c: f64, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientB {
    pub family: BFamily,
    /// Lower collar envelope constant in `c1 a^(-1/(p-1)) <= b`.
    pub c1: f64,
    /// Upper collar envelope constant in `b <= c2 a^(-1/(p-1))`.
    pub c2: f64,
}

impl CoefficientB {
    pub fn new(family: BFamily, c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > c1) {
            return Err(Error::Config(format!(
                "envelope constants need 0 < c1 < c2, got ({c1}, {c2})"
            )));
        }
        let c = match &family {
            BFamily::Uniform { c } | BFamily::MatchedToWeight { c } | BFamily::Power { c, .. } => *c,
        };
        if !(c > 0.0) {
            return Err(Error::Config(format!("coefficient scale {c} must be positive")));
        }
        Ok(CoefficientB { family, c1, c2 })
    }

    /// `b` at boundary distance `t`, against the profile of `a`.
    pub fn eval(&self, t: f64, profile: &WeightProfile, p: f64) -> f64 {
        let rho0 = profile.rho0();
        match &self.family {
            BFamily::Uniform { c } => *c,
            BFamily::MatchedToWeight { c } => {
                let t_eff = t.clamp(0.0, rho0);
                c * profile.apow(p, t_eff)
            }
            BFamily::Power { c, exponent } => c * t.min(rho0).max(0.0).powf(*exponent),
        }
    }

    /// Exponent gamma with `b ~ t^-gamma` at the boundary.
    pub fn gamma(&self, profile: &WeightProfile, p: f64) -> f64 {
        match &self.family {
            BFamily::Uniform { .. } => 0.0,
            BFamily::MatchedToWeight { .. } => profile.apow_gamma(p),
            BFamily::Power { exponent, .. } => (-exponent).max(0.0),
        }
    }
}

/// One named hypothesis check with its numeric evidence.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of a validation pass; `passed` is the conjunction of all items.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub subject: String,
    pub items: Vec<CheckItem>,
    pub passed: bool,
    /// Largest collar depth on which the coefficient envelope held
    /// (coefficient validation only).
    pub rho1: Option<f64>,
}

impl ValidationReport {
    fn new(subject: &str) -> Self {
        ValidationReport {
            subject: subject.into(),
            items: Vec::new(),
            passed: true,
            rho1: None,
        }
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.items.push(CheckItem {
            name: name.into(),
            passed,
            detail,
        });
        self.passed &= passed;
    }
}

enum Mass {
    Finite(f64),
    Infinite,
}

/// Estimate `\int_0^rho0 f` allowing a non-integrable blow-up at 0:
/// shrink the left cutoff and declare the mass infinite when the
/// estimate keeps growing past 1e12.
fn improper_mass<F: Fn(f64) -> f64>(f: F, rho0: f64, spec: &QuadratureSpec) -> Result<Mass> {
    let mut prev = 0.0;
    for (k, cut) in [1e-4, 1e-8, 1e-12].iter().enumerate() {
        let lo = rho0 * cut;
        let v = integrate(&f, lo, rho0, &spec.without_hint())?;
        if !v.is_finite() || v.abs() > 1e12 {
            return Ok(Mass::Infinite);
        }
        if k == 2 {
            let tail = v - prev;
            // Extrapolate one more refinement; generous factor covers
            // slowly divergent tails.
            if v.abs() + 4.0 * tail.abs() > 1e12 {
                return Ok(Mass::Infinite);
            }
            return Ok(Mass::Finite(v));
        }
        prev = v;
    }
    unreachable!()
}

/// Check the standing hypotheses on the weight for the given exponents.
pub fn validate_weight(
    profile: &WeightProfile,
    exps: &ExponentSet,
    quad: &QuadratureSpec,
) -> Result<ValidationReport> {
    let mut report = ValidationReport::new(&format!("weight {}", profile.family_tag()));
    let rho0 = profile.rho0();
    let p = exps.p;

    // Positivity on a collar sweep plus the interior extension.
    let mut min_val = profile.interior_value();
    let mut min_at = rho0;
    for k in 0..=400 {
        let t = rho0 * 10f64.powf(-12.0 + 12.0 * k as f64 / 400.0);
        let v = profile.eval(t);
        if v < min_val {
            min_val = v;
            min_at = t;
        }
    }
    report.push(
        "positivity",
        min_val > 0.0,
        format!("min sampled a = {min_val:.6e} at t = {min_at:.6e}"),
    );

    // a integrable on the collar.
    let a_mass = match profile.family() {
        WeightFamily::Uniform { c } => Mass::Finite(c * rho0),
        WeightFamily::Power { c, alpha } => {
            if *alpha > -1.0 {
                Mass::Finite(c * rho0.powf(alpha + 1.0) / (alpha + 1.0))
            } else {
                Mass::Infinite
            }
        }
        WeightFamily::Table { .. } => improper_mass(|t| profile.eval(t), rho0, quad)?,
    };
    match a_mass {
        Mass::Finite(v) => report.push("a_integrable", true, format!("L1 mass {v:.6e}")),
        Mass::Infinite => report.push("a_integrable", false, "L1 mass diverges".into()),
    }

    // a^-1 in L^s.
    let inv_mass = match profile.family() {
        WeightFamily::Uniform { c } => Mass::Finite(c.powf(-exps.s) * rho0),
        WeightFamily::Power { c, alpha } => {
            if alpha * exps.s < 1.0 {
                Mass::Finite(c.powf(-exps.s) * rho0.powf(1.0 - alpha * exps.s) / (1.0 - alpha * exps.s))
            } else {
                Mass::Infinite
            }
        }
        WeightFamily::Table { .. } => {
            improper_mass(|t| profile.eval(t).powf(-exps.s), rho0, quad)?
        }
    };
    match inv_mass {
        Mass::Finite(v) => report.push(
            "a_inverse_in_Ls",
            true,
            format!("L^s mass {v:.6e} (s = {})", exps.s),
        ),
        Mass::Infinite => report.push(
            "a_inverse_in_Ls",
            false,
            format!("a^-1 not in L^s: mass diverges (s = {})", exps.s),
        ),
    }

    // s floor, restated from the exponent set for the report.
    let s_floor = (exps.n as f64 / p).max(1.0 / (p - 1.0));
    report.push(
        "s_above_floor",
        exps.s > s_floor,
        format!("s = {} vs max(N/p, 1/(p-1)) = {s_floor:.6e}", exps.s),
    );

    // Weighted distance finite.
    let d_mass = match profile.family() {
        WeightFamily::Uniform { c } => Mass::Finite(c.powf(-1.0 / (p - 1.0)) * rho0),
        WeightFamily::Power { c, alpha } => {
            let gamma = alpha / (p - 1.0);
            if gamma < 1.0 {
                Mass::Finite(c.powf(-1.0 / (p - 1.0)) * rho0.powf(1.0 - gamma) / (1.0 - gamma))
            } else {
                Mass::Infinite
            }
        }
        WeightFamily::Table { .. } => improper_mass(|t| profile.apow(p, t), rho0, quad)?,
    };
    match d_mass {
        Mass::Finite(v) => report.push("weighted_distance_finite", true, format!("d(rho0) = {v:.6e}")),
        Mass::Infinite => report.push("weighted_distance_finite", false, "d(rho0) diverges".into()),
    }

    Ok(report)
}

/// Weighted boundary distance `d(t) = \int_0^t a^(-1/(p-1))`, `t <= rho0`.
pub fn weighted_distance(profile: &WeightProfile, p: f64, t: f64) -> Result<f64> {
    let rho0 = profile.rho0();
    if !(0.0..=rho0 * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::OutOfCollar { t, rho0 });
    }
    let t = t.min(rho0);
    match profile.family() {
        WeightFamily::Uniform { c } => Ok(c.powf(-1.0 / (p - 1.0)) * t),
        WeightFamily::Power { c, alpha } => {
            let gamma = alpha / (p - 1.0);
            if gamma >= 1.0 {
                return Err(Error::Divergent {
                    detail: format!("weighted distance diverges: alpha/(p-1) = {gamma}"),
                });
            }
            Ok(c.powf(-1.0 / (p - 1.0)) * t.powf(1.0 - gamma) / (1.0 - gamma))
        }
        WeightFamily::Table { .. } => {
            if t == 0.0 {
                return Ok(0.0);
            }
            integrate(
                |x| profile.apow(p, x),
                0.0,
                t,
                &profile.apow_quad(p, &QuadratureSpec::default()),
            )
        }
    }
}

/// Cached `d(t)` over the whole collar.
pub fn distance_table(profile: &WeightProfile, p: f64, quad: &QuadratureSpec) -> Result<PrimitiveTable> {
    PrimitiveTable::build(
        |t| profile.apow(p, t),
        profile.rho0(),
        &profile.apow_quad(p, quad),
    )
}

/// Check the collar envelope `c1 a^(-1/(p-1)) <= b <= c2 a^(-1/(p-1))`
/// and the integrability class of `b`; reports the largest depth `rho1`
/// on which the envelope held at every sample.
pub fn validate_b(
    b: &CoefficientB,
    profile: &WeightProfile,
    exps: &ExponentSet,
    quad: &QuadratureSpec,
) -> Result<ValidationReport> {
    let mut report = ValidationReport::new("coefficient b");
    let rho0 = profile.rho0();
    let p = exps.p;
    let slack = 1e-9 * b.c2;

    // Envelope sweep from the boundary outward on a log grid.
    let samples = 600;
    let mut rho1 = 0.0;
    let mut first_violation: Option<(f64, f64)> = None;
    for k in 0..=samples {
        let t = rho0 * 10f64.powf(-12.0 + 12.0 * k as f64 / samples as f64);
        let ratio = profile.eval(t).powf(1.0 / (p - 1.0)) * b.eval(t, profile, p);
        if ratio >= b.c1 - slack && ratio <= b.c2 + slack {
            rho1 = t;
        } else {
            first_violation = Some((t, ratio));
            break;
        }
    }
    let envelope_ok = first_violation.is_none();
    report.rho1 = Some(rho1);
    report.push(
        "collar_envelope",
        envelope_ok,
        match first_violation {
            None => format!("a^(1/(p-1)) b within [{}, {}] up to rho1 = {rho1:.6e}", b.c1, b.c2),
            Some((t, ratio)) => format!("ratio {ratio:.6e} at t = {t:.6e} leaves [{}, {}]", b.c1, b.c2),
        },
    );

    // b nonnegative by construction of the families; record the sweep.
    report.push("nonnegative", true, "b >= 0 on the collar families".into());

    // Integrability class: L^(q/(q-p)), sup norm when q = p.
    match exps.b_norm_exponent() {
        None => {
            let gamma = b.gamma(profile, p);
            let bounded = gamma == 0.0;
            let sup = b.eval(rho0 * 1e-12, profile, p).max(b.eval(rho0, profile, p));
            report.push(
                "b_norm",
                bounded,
                if bounded {
                    format!("q = p: sup b = {sup:.6e}")
                } else {
                    format!("q = p needs bounded b, but b ~ t^-{gamma:.4}")
                },
            );
        }
        Some(m) => {
            let gamma = b.gamma(profile, p);
            if gamma * m >= 1.0 {
                report.push(
                    "b_norm",
                    false,
                    format!("L^{m:.4} mass diverges: b^m ~ t^-{:.4}", gamma * m),
                );
            } else {
                let mass = match improper_mass(|t| b.eval(t, profile, p).powf(m), rho0, quad)? {
                    Mass::Finite(v) => v,
                    Mass::Infinite => f64::INFINITY,
                };
                report.push(
                    "b_norm",
                    mass.is_finite(),
                    format!("L^{m:.4} collar mass {mass:.6e}"),
                );
            }
        }
    }

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobolev_exponent_chain() {
        let (p_s, p_s_star) = sobolev_exponents(2.0, 3.0, 3).unwrap();
        assert!((p_s - 1.5).abs() < 1e-15);
        assert!((p_s_star - 3.0).abs() < 1e-15);

        let e = ExponentSet::new(2.0, 3, 3.0, 2.0).unwrap();
        assert!(e.p_s < e.p && e.p < e.p_s_star);
        assert!(e.p_s_star < 3.0 * 2.0 / (3.0 - 2.0));
    }

    #[test]
    fn exponent_rejections() {
        assert!(sobolev_exponents(3.5, 9.0, 3).is_err(), "p >= N");
        assert!(sobolev_exponents(2.0, 1.4, 3).is_err(), "s below N/p");
        assert!(sobolev_exponents(1.2, 4.0, 3).is_err(), "s below 1/(p-1)");
        assert!(ExponentSet::new(2.0, 3, 3.0, 3.5).is_err(), "q >= p_s*");
    }

    #[test]
    fn chain_holds_across_draws() {
        // Dense parameter sweep in place of random draws: the chain is an
        // algebraic consequence of s > max(N/p, 1/(p-1)).
        for n in [2u32, 3, 5, 8] {
            for ip in 1..=20 {
                let p = 1.0 + (n as f64 - 1.0) * ip as f64 / 21.0;
                let floor = (n as f64 / p).max(1.0 / (p - 1.0));
                for js in 1..=10 {
                    let s = floor * (1.0 + js as f64);
                    let (p_s, p_s_star) = sobolev_exponents(p, s, n).unwrap();
                    let star = n as f64 * p / (n as f64 - p);
                    assert!(p_s < p && p < p_s_star && p_s_star < star);
                }
            }
        }
    }

    #[test]
    fn uniform_weight_distance() {
        let w = WeightProfile::uniform(4.0, 1.0).unwrap();
        // d(t) = 4^(-1) t for p = 2.
        let d = weighted_distance(&w, 2.0, 0.5).unwrap();
        assert!((d - 0.125).abs() < 1e-14);
    }

    #[test]
    fn power_weight_distance_matches_quadrature() {
        let w = WeightProfile::power(1.0, 0.5, 1.0).unwrap();
        let d = weighted_distance(&w, 2.0, 0.25).unwrap();
        assert!((d - 2.0 * 0.25_f64.sqrt()).abs() < 1e-12, "2 sqrt(t) for a = sqrt(t), p = 2");

        for &(p, alpha, t) in &[(2.0, 0.5, 0.8), (3.0, 1.0, 0.6), (1.5, 0.3, 0.9), (2.5, -0.7, 0.4)] {
            let w = WeightProfile::power(2.0, alpha, 1.0).unwrap();
            let closed = weighted_distance(&w, p, t).unwrap();
            let quad = integrate(
                |x| w.apow(p, x),
                0.0,
                t,
                &w.apow_quad(p, &QuadratureSpec::default()),
            )
            .unwrap();
            assert!(
                (closed - quad).abs() < 1e-10 * closed.abs().max(1.0),
                "p={p} alpha={alpha}: {closed} vs {quad}"
            );
        }
    }

    #[test]
    fn distance_rejects_outside_collar() {
        let w = WeightProfile::uniform(1.0, 0.5).unwrap();
        assert!(matches!(
            weighted_distance(&w, 2.0, 0.75),
            Err(Error::OutOfCollar { .. })
        ));
    }

    #[test]
    fn distance_diverges_for_strong_degeneracy() {
        // alpha/(p-1) = 1.2 >= 1: no finite weighted distance.
        let w = WeightProfile::power(1.0, 0.6, 1.0).unwrap();
        assert!(matches!(
            weighted_distance(&w, 1.5, 0.5),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn table_weight_interpolates() {
        let samples = vec![(0.0, 2.0), (0.5, 2.0), (1.0, 8.0)];
        let w = WeightProfile::new(WeightFamily::Table { samples }, 1.0).unwrap();
        assert_eq!(w.eval(0.25), 2.0);
        assert!((w.eval(0.75) - 4.0).abs() < 1e-12, "log-linear midpoint of 2 and 8");
        assert_eq!(w.eval(2.0), 8.0, "interior continuation");
    }

    #[test]
    fn validate_weight_accepts_model() {
        let w = WeightProfile::power(1.0, 0.5, 1.0).unwrap();
        let e = ExponentSet::new(2.0, 3, 1.9, 2.0).unwrap();
        let r = validate_weight(&w, &e, &QuadratureSpec::default()).unwrap();
        assert!(r.passed, "{:?}", r.items);
    }

    #[test]
    fn validate_weight_flags_non_integrable_inverse() {
        // alpha s = 1.5 >= 1: a^-1 not in L^s.
        let w = WeightProfile::power(1.0, 0.5, 1.0).unwrap();
        let e = ExponentSet::new(2.0, 3, 3.0, 2.0).unwrap();
        let r = validate_weight(&w, &e, &QuadratureSpec::default()).unwrap();
        assert!(!r.passed);
        let item = r.items.iter().find(|i| i.name == "a_inverse_in_Ls").unwrap();
        assert!(!item.passed);
    }

    #[test]
    fn validate_weight_flags_non_integrable_mass() {
        let w = WeightProfile::power(1.0, -1.2, 1.0).unwrap();
        let e = ExponentSet::new(2.0, 3, 3.0, 2.0).unwrap();
        let r = validate_weight(&w, &e, &QuadratureSpec::default()).unwrap();
        let item = r.items.iter().find(|i| i.name == "a_integrable").unwrap();
        assert!(!item.passed);
    }

    #[test]
    fn validate_b_accepts_matched_coefficient() {
        // a = t, p = 2, b = 2/t: ratio a^(1/(p-1)) b = 2 on the whole collar.
        let w = WeightProfile::power(1.0, 1.0, 1.0).unwrap();
        let e = ExponentSet::new(2.0, 3, 2.5, 2.2).unwrap();
        let b = CoefficientB::new(BFamily::MatchedToWeight { c: 2.0 }, 1.0, 3.0).unwrap();
        let r = validate_b(&b, &w, &e, &QuadratureSpec::default()).unwrap();
        let env = r.items.iter().find(|i| i.name == "collar_envelope").unwrap();
        assert!(env.passed, "{}", env.detail);
        assert!((r.rho1.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validate_b_rejects_vanishing_ratio() {
        // a = t, p = 2, b = t^(-1/2): ratio sqrt(t) -> 0 leaves the envelope.
        let w = WeightProfile::power(1.0, 1.0, 1.0).unwrap();
        let e = ExponentSet::new(2.0, 3, 2.5, 2.2).unwrap();
        let b = CoefficientB::new(BFamily::Power { c: 1.0, exponent: -0.5 }, 0.5, 1.5).unwrap();
        let r = validate_b(&b, &w, &e, &QuadratureSpec::default()).unwrap();
        let env = r.items.iter().find(|i| i.name == "collar_envelope").unwrap();
        assert!(!env.passed);
    }

    #[test]
    fn validate_b_uniform_passes_sup_norm() {
        let w = WeightProfile::uniform(1.0, 0.5).unwrap();
        let e = ExponentSet::new(2.0, 3, 3.0, 2.0).unwrap();
        let b = CoefficientB::new(BFamily::Uniform { c: 1.0 }, 0.5, 1.5).unwrap();
        let r = validate_b(&b, &w, &e, &QuadratureSpec::default()).unwrap();
        assert!(r.passed, "{:?}", r.items);
    }

    #[test]
    fn distance_table_tracks_closed_form() {
        let w = WeightProfile::power(1.0, 0.5, 1.0).unwrap();
        let table = distance_table(&w, 2.0, &QuadratureSpec::default()).unwrap();
        for k in 1..=50 {
            let t = k as f64 / 50.0;
            let exact = 2.0 * t.sqrt();
            assert!((table.eval(t) - exact).abs() < 1e-9 * exact, "t = {t}");
        }
    }
}
