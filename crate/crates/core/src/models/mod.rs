//! Generative models for marked point patterns: a sequential inhibition process and
//! log-Gaussian Cox processes with intensity-dependent or spatially correlated marks.

pub mod field;
pub mod lgcp;
pub mod marks;
pub mod seqnimpp;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{MarkedPattern, Window};

pub use field::{simulate_gaussian_field, FieldLattice, GaussianFieldSampler, GaussianFieldSpec};
pub use lgcp::simulate_lgcp_points;
pub use marks::{assign_marks_expimcp, assign_marks_gncp, assign_marks_gnimcp, IntensityCoupling};
pub use seqnimpp::{influence, simulate_seqnimpp_raw, SeqNimppParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelFamily {
    SeqNimpp,
    ExpNimcp,
    ExpPimcp,
    Gnimcp,
    Gncp,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::SeqNimpp,
        ModelFamily::ExpNimcp,
        ModelFamily::ExpPimcp,
        ModelFamily::Gnimcp,
        ModelFamily::Gncp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::SeqNimpp => "SeqNIMPP",
            ModelFamily::ExpNimcp => "ExpNIMCP",
            ModelFamily::ExpPimcp => "ExpPIMCP",
            ModelFamily::Gnimcp => "GNIMCP",
            ModelFamily::Gncp => "GNCP",
        }
    }

    /// Names of the parameters this family reads.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ModelFamily::SeqNimpp => &["mu", "sigma2", "theta", "radius"],
            ModelFamily::ExpNimcp | ModelFamily::ExpPimcp => &["a", "b"],
            ModelFamily::Gnimcp | ModelFamily::Gncp => &["a", "b", "sigma_eps"],
        }
    }

    pub fn uses_field(self) -> bool {
        self != ModelFamily::SeqNimpp
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model family '{s}'")))
    }
}

impl TryFrom<String> for ModelFamily {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelFamily> for String {
    fn from(f: ModelFamily) -> String {
        f.name().to_string()
    }
}

/// One generative model with all parameters resolved. Parameters the family does not read
/// keep their defaults and are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecFile", into = "ModelSpecFile")]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub n: usize,
    pub window: Window,
    pub mu: f64,
    pub sigma2: f64,
    pub theta: f64,
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub sigma_eps: f64,
    pub field: GaussianFieldSpec,
}

impl ModelSpec {
    /// Defaults of the simulation study: 200 points on `[0,100]²`, field mean −4.4 and
    /// range 4, and the fixed mark parameters of each family. The changing parameter
    /// starts at its first study value.
    pub fn defaults(family: ModelFamily) -> ModelSpec {
        let base = ModelSpec {
            family,
            n: 200,
            window: Window::square(100.0).expect("valid window"),
            mu: 24.0,
            sigma2: 9.0,
            theta: 0.0,
            radius: 6.0,
            a: 24.0,
            b: 0.0,
            sigma_eps: 0.0,
            field: GaussianFieldSpec::default(),
        };
        match family {
            ModelFamily::SeqNimpp => base,
            ModelFamily::ExpNimcp => ModelSpec { a: 0.0, b: 1.0, ..base },
            ModelFamily::ExpPimcp => ModelSpec { a: 0.0, b: 6600.0, ..base },
            ModelFamily::Gnimcp | ModelFamily::Gncp => ModelSpec { a: 24.0, b: -0.12, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidModel("n must be at least 1".into()));
        }
        let finite = [self.mu, self.sigma2, self.theta, self.radius, self.a, self.b, self.sigma_eps];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("model parameters must be finite".into()));
        }
        match self.family {
            ModelFamily::SeqNimpp => {
                if self.theta < 0.0 {
                    return Err(Error::UnsupportedAttraction(self.theta));
                }
                if !(self.radius > 0.0 && self.mu > 0.0 && self.sigma2 >= 0.0) {
                    return Err(Error::InvalidModel("need R > 0, μ > 0, σ² ≥ 0".into()));
                }
            }
            ModelFamily::ExpNimcp | ModelFamily::ExpPimcp => {
                if !(self.a >= 0.0 && self.b >= 0.0 && self.a + self.b > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "need a, b ≥ 0 and a + b > 0 (a={}, b={})",
                        self.a, self.b
                    )));
                }
            }
            ModelFamily::Gnimcp | ModelFamily::Gncp => {
                if !(self.a > 0.0 && self.sigma_eps >= 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "need a > 0 and σ_ε ≥ 0 (a={}, σ_ε={})",
                        self.a, self.sigma_eps
                    )));
                }
            }
        }
        if self.family.uses_field() {
            self.field.validate()?;
            self.window.lattice_dims(self.field.cell)?;
        }
        Ok(())
    }

    pub fn parameter(&self, name: &str) -> Result<f64> {
        Ok(match name {
            "mu" => self.mu,
            "sigma2" => self.sigma2,
            "theta" => self.theta,
            "radius" => self.radius,
            "a" => self.a,
            "b" => self.b,
            "sigma_eps" => self.sigma_eps,
            "n" => self.n as f64,
            other => return Err(Error::InvalidConfig(format!("unknown model parameter '{other}'"))),
        })
    }

    /// Copy with one named parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<ModelSpec> {
        let mut s = *self;
        match name {
            "mu" => s.mu = value,
            "sigma2" => s.sigma2 = value,
            "theta" => s.theta = value,
            "radius" => s.radius = value,
            "a" => s.a = value,
            "b" => s.b = value,
            "sigma_eps" => s.sigma_eps = value,
            "n" => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!("n must be a positive integer, got {value}")));
                }
                s.n = value as usize;
            }
            other => return Err(Error::InvalidConfig(format!("unknown model parameter '{other}'"))),
        }
        Ok(s)
    }

    fn seqnimpp_params(&self) -> SeqNimppParams {
        SeqNimppParams { mu: self.mu, sigma2: self.sigma2, theta: self.theta, radius: self.radius }
    }
}

/// On-disk form: family-specific defaults fill anything left out, and keys the family does
/// not read are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpecFile {
    family: ModelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    field: Option<GaussianFieldSpec>,
}

impl TryFrom<ModelSpecFile> for ModelSpec {
    type Error = Error;

    fn try_from(f: ModelSpecFile) -> Result<Self> {
        let family = f.family;
        let used = family.parameter_names();
        let given = [
            ("mu", f.mu),
            ("sigma2", f.sigma2),
            ("theta", f.theta),
            ("radius", f.radius),
            ("a", f.a),
            ("b", f.b),
            ("sigma_eps", f.sigma_eps),
        ];
        let mut spec = ModelSpec::defaults(family);
        for (name, value) in given {
            if let Some(v) = value {
                if !used.contains(&name) {
                    return Err(Error::InvalidConfig(format!("{family} has no parameter '{name}'")));
                }
                spec = spec.with_parameter(name, v)?;
            }
        }
        if let Some(field) = f.field {
            if !family.uses_field() {
                return Err(Error::InvalidConfig(format!("{family} has no random field")));
            }
            spec.field = field;
        }
        if let Some(n) = f.n {
            spec.n = n;
        }
        if let Some(w) = f.window {
            spec.window = w;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ModelSpec> for ModelSpecFile {
    fn from(s: ModelSpec) -> Self {
        let used = s.family.parameter_names();
        let pick = |name: &str, v: f64| used.contains(&name).then_some(v);
        ModelSpecFile {
            family: s.family,
            n: Some(s.n),
            window: Some(s.window),
            mu: pick("mu", s.mu),
            sigma2: pick("sigma2", s.sigma2),
            theta: pick("theta", s.theta),
            radius: pick("radius", s.radius),
            a: pick("a", s.a),
            b: pick("b", s.b),
            sigma_eps: pick("sigma_eps", s.sigma_eps),
            field: s.family.uses_field().then_some(s.field),
        }
    }
}

/// A validated model with its field sampler set up once, ready for repeated draws.
#[derive(Debug)]
pub struct Simulator {
    spec: ModelSpec,
    sampler: Option<GaussianFieldSampler>,
}

impl Simulator {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let sampler = if spec.family.uses_field() {
            Some(GaussianFieldSampler::new(spec.field, spec.window)?)
        } else {
            None
        };
        Ok(Simulator { spec, sampler })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn sampler(&self) -> Option<&GaussianFieldSampler> {
        self.sampler.as_ref()
    }

    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MarkedPattern> {
        let s = &self.spec;
        let (points, marks) = match (s.family, &self.sampler) {
            (ModelFamily::SeqNimpp, _) => {
                simulate_seqnimpp_raw(&s.seqnimpp_params(), s.n, &s.window, rng)?
            }
            (family, Some(sampler)) => {
                let z = sampler.sample(rng);
                let points = simulate_lgcp_points(&z, s.n, rng)?;
                let marks = match family {
                    ModelFamily::ExpNimcp => assign_marks_expimcp(
                        &points, &z, s.a, s.b, IntensityCoupling::Negative, rng,
                    )?,
                    ModelFamily::ExpPimcp => assign_marks_expimcp(
                        &points, &z, s.a, s.b, IntensityCoupling::Positive, rng,
                    )?,
                    ModelFamily::Gnimcp => {
                        assign_marks_gnimcp(&points, &z, s.a, s.b, s.sigma_eps, s.field.mean, rng)?
                    }
                    _ => assign_marks_gncp(&points, sampler, s.a, s.b, s.sigma_eps, rng)?,
                };
                (points, marks)
            }
            (_, None) => unreachable!("field families always carry a sampler"),
        };
        MarkedPattern::new(points, marks, s.window)
    }
}

/// One SeqNIMPP pattern for `spec`.
pub fn simulate_seqnimpp<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<MarkedPattern> {
    if spec.family != ModelFamily::SeqNimpp {
        return Err(Error::InvalidModel(format!("{} is not SeqNIMPP", spec.family)));
    }
    Simulator::new(*spec)?.simulate(rng)
}

/// One pattern from any family.
pub fn simulate<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<MarkedPattern> {
    Simulator::new(*spec)?.simulate(rng)
}
