//! Run configuration.
//!
//! One TOML file describes a whole run: domain, weight, exponents,
//! coefficient, quadrature budget, nonlinearity, and solver knobs. The
//! sections materialize into solver objects through the methods on
//! [`RunConfig`]; every constructor failure is rewrapped as a config
//! error naming the section, so a malformed file is rejected before any
//! pipeline stage runs and maps onto the usage exit code.

use std::path::Path;

use serde::Deserialize;

use crate::barriers::{NonlinearitySpec, SubsolutionParams};
use crate::error::{Error, Result};
use crate::fixedpoint::SolveOptions;
use crate::geometry::DomainGeometry;
use crate::quadrature::QuadratureSpec;
use crate::resolvent::Problem;
use crate::weights::{
    BFamily, CoefficientB, ExponentSet, InteriorExtension, WeightFamily, WeightProfile,
};

/// Parsed configuration file. Optional sections are demanded lazily by
/// the subcommands that need them.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub weight: WeightSection,
    pub exponents: ExponentsSection,
    pub b: Option<BSection>,
    #[serde(default)]
    pub quad: QuadSection,
    #[serde(default)]
    pub mesh: MeshSection,
    pub f: Option<FSection>,
    pub subsolution: Option<SubsolutionSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub psi: PsiSection,
    #[serde(default)]
    pub verify: VerifySection,
}

/// `[domain]`: kind plus the measurements that kind needs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub kind: String,
    #[serde(rename = "L")]
    pub length: Option<f64>,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    #[serde(rename = "R_in")]
    pub r_in: Option<f64>,
    #[serde(rename = "R_out")]
    pub r_out: Option<f64>,
    #[serde(rename = "N")]
    pub dim: Option<u32>,
    /// Collar depth, for the bare collar kinds.
    pub rho0: Option<f64>,
}

/// `[weight]`: profile family on the collar.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    pub family: String,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub rho0: f64,
    /// `(t, a(t))` pairs for the table family.
    pub samples: Option<Vec<(f64, f64)>>,
    /// Interior constant; the collar edge value when absent.
    pub interior_floor: Option<f64>,
}

/// `[exponents]`: `p` always; `N`, `s`, `q` only for hypothesis checks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    pub p: f64,
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub s: Option<f64>,
    pub q: Option<f64>,
}

/// `[b]`: coefficient family with its collar envelope constants.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BSection {
    pub family: String,
    pub c: Option<f64>,
    pub exponent: Option<f64>,
    pub c1: f64,
    pub c2: f64,
}

/// `[quad]`: integration budget.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadSection {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        QuadSection {
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            max_depth: q.max_depth,
        }
    }
}

/// `[mesh]`: cell count of the solve mesh.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub cells: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection { cells: 1_000 }
    }
}

/// `[f]`: nonlinearity `scale * zeta^power - shift` with its growth
/// envelope slope `mu` and exponent `r`; `[f.tilde]` overrides the
/// envelope shape, which otherwise copies `f`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FSection {
    pub kind: String,
    pub scale: Option<f64>,
    pub power: f64,
    pub shift: Option<f64>,
    pub mu: f64,
    pub r: f64,
    pub tilde: Option<TildeSection>,
}

/// `[f.tilde]`: comparison envelope `scale * zeta^power - shift`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TildeSection {
    pub scale: Option<f64>,
    pub power: f64,
    pub shift: Option<f64>,
}

/// `[subsolution]`: lower-barrier exponents.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsolutionSection {
    pub sigma: f64,
    pub beta: f64,
    pub rho1: f64,
    pub epsilon: Option<f64>,
}

/// `[solver]`: Picard iteration knobs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub theta: f64,
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolverSection {
            theta: o.theta,
            tol: o.tol,
            max_iter: o.max_iter,
        }
    }
}

/// `[psi]`: amplitude margin of the distance barrier.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsiSection {
    pub margin: f64,
}

impl Default for PsiSection {
    fn default() -> Self {
        PsiSection { margin: 0.5 }
    }
}

/// `[verify]`: scenario names the verify subcommand runs by default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub scenarios: Vec<String>,
}

fn section_err(section: &str, err: Error) -> Error {
    Error::Config(format!("{section}: {err}"))
}

fn need<T: Copy>(value: Option<T>, section: &str, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("{section}: missing key {key}")))
}

impl RunConfig {
    /// Parses a file; returns the config with the raw text for the
    /// manifest snapshot.
    pub fn from_path(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok((cfg, text))
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn p(&self) -> f64 {
        self.exponents.p
    }

    pub fn geometry(&self) -> Result<DomainGeometry> {
        let d = &self.domain;
        let s = "domain";
        match d.kind.as_str() {
            "interval" => DomainGeometry::interval(need(d.length, s, "L")?),
            "ball" => DomainGeometry::ball(need(d.radius, s, "R")?, need(d.dim, s, "N")?),
            "annulus" => DomainGeometry::annulus(
                need(d.r_in, s, "R_in")?,
                need(d.r_out, s, "R_out")?,
                need(d.dim, s, "N")?,
            ),
            "inner_collar" => DomainGeometry::inner_collar(
                need(d.radius, s, "R")?,
                need(d.dim, s, "N")?,
                need(d.rho0, s, "rho0")?,
            ),
            "outer_collar" => DomainGeometry::outer_collar(
                need(d.radius, s, "R")?,
                need(d.dim, s, "N")?,
                need(d.rho0, s, "rho0")?,
            ),
            other => Err(Error::Config(format!(
                "domain.kind = {other:?} is not one of interval, ball, annulus, inner_collar, outer_collar"
            ))),
        }
        .map_err(|e| section_err(s, e))
    }

    pub fn weight_profile(&self) -> Result<WeightProfile> {
        let w = &self.weight;
        let s = "weight";
        let family = match w.family.as_str() {
            "uniform" => WeightFamily::Uniform {
                c: w.c.unwrap_or(1.0),
            },
            "power" => WeightFamily::Power {
                c: w.c.unwrap_or(1.0),
                alpha: need(w.alpha, s, "alpha")?,
            },
            "table" => WeightFamily::Table {
                samples: w
                    .samples
                    .clone()
                    .ok_or_else(|| Error::Config("weight: missing key samples".into()))?,
            },
            other => {
                return Err(Error::Config(format!(
                    "weight.family = {other:?} is not one of uniform, power, table"
                )))
            }
        };
        let profile = WeightProfile::new(family, w.rho0).map_err(|e| section_err(s, e))?;
        match w.interior_floor {
            Some(v) => profile
                .with_interior(InteriorExtension::Floor(v))
                .map_err(|e| section_err(s, e)),
            None => Ok(profile),
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: self.quad.rel_tol,
            abs_tol: self.quad.abs_tol,
            max_depth: self.quad.max_depth,
            singularity_hint: None,
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(
            self.geometry()?,
            self.weight_profile()?,
            self.exponents.p,
            self.quadrature(),
        )
        .map_err(|e| section_err("exponents", e))
    }

    /// Full exponent cluster; `N` and `s` must be present.
    pub fn exponent_set(&self) -> Result<ExponentSet> {
        let e = &self.exponents;
        let s = "exponents";
        ExponentSet::new(
            e.p,
            need(e.n, s, "N")?,
            need(e.s, s, "s")?,
            e.q.unwrap_or(e.p),
        )
        .map_err(|err| section_err(s, err))
    }

    pub fn coefficient_b(&self) -> Result<CoefficientB> {
        let b = self
            .b
            .as_ref()
            .ok_or_else(|| Error::Config("missing [b] section".into()))?;
        let s = "b";
        let family = match b.family.as_str() {
            "uniform" => BFamily::Uniform {
                c: b.c.unwrap_or(1.0),
            },
            "matched" => BFamily::MatchedToWeight {
                c: b.c.unwrap_or(1.0),
            },
            "power" => BFamily::Power {
                c: b.c.unwrap_or(1.0),
                exponent: need(b.exponent, s, "exponent")?,
            },
            other => {
                return Err(Error::Config(format!(
                    "b.family = {other:?} is not one of uniform, matched, power"
                )))
            }
        };
        CoefficientB::new(family, b.c1, b.c2).map_err(|e| section_err(s, e))
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec> {
        let f = self
            .f
            .as_ref()
            .ok_or_else(|| Error::Config("missing [f] section".into()))?;
        if f.kind != "power_shift" {
            return Err(Error::Config(format!(
                "f.kind = {:?} is not power_shift",
                f.kind
            )));
        }
        let (a, e, k) = (f.scale.unwrap_or(1.0), f.power, f.shift.unwrap_or(0.0));
        if !(a > 0.0 && e > 0.0) || !a.is_finite() || !e.is_finite() || !k.is_finite() {
            return Err(Error::Config(format!(
                "f: scale = {a}, power = {e}, shift = {k} must be finite with scale, power positive"
            )));
        }
        let (ta, te, tk) = match &f.tilde {
            Some(t) => (t.scale.unwrap_or(1.0), t.power, t.shift.unwrap_or(0.0)),
            None => (a, e, k),
        };
        NonlinearitySpec::new(
            move |z: f64| a * z.max(0.0).powf(e) - k,
            move |z: f64| ta * z.max(0.0).powf(te) - tk,
            f.mu,
            f.r,
        )
        .map_err(|err| section_err("f", err))
    }

    pub fn subsolution_params(&self) -> Result<SubsolutionParams> {
        let f = self
            .f
            .as_ref()
            .ok_or_else(|| Error::Config("missing [f] section".into()))?;
        let sub = self
            .subsolution
            .as_ref()
            .ok_or_else(|| Error::Config("missing [subsolution] section".into()))?;
        SubsolutionParams::new(
            self.exponents.p,
            f.r,
            sub.sigma,
            sub.beta,
            sub.epsilon,
            sub.rho1,
            f.mu,
        )
        .map_err(|e| section_err("subsolution", e))
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            theta: self.solver.theta,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            mesh_cells: self.mesh.cells,
        }
    }
}
