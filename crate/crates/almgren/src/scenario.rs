//! Scenario files and the end-to-end pipeline.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blowup::{blowup_analysis, BlowupReport, BlowupSettings};
use crate::diagnostics::{
    derivative_identity_check, pohozaev_check, pohozaev_convergence, random_audit, DerivativeIdentity, PohozaevConvergence, PohozaevTerms,
    RandomAudit,
};
use crate::eigenbasis::{Chart, DomainSpec, SpectralFunction};
use crate::error::{Error, Result};
use crate::extension::{build_kernel, extend, kappa_gamma_formula, ExtensionField};
use crate::field::Field;
use crate::fractional_op::{weak_residual, FractionalOrder, WeakResidual};
use crate::frequency::{frequency_profile, monotonicity_audit, validate_grid, MonotonicityAudit, ProfileSettings, RadialProfile};
use crate::quadrature::{Quadrature, QuadratureOrders};
use crate::sphere_eig::SphereBasis;
use crate::straightening::{
    audit_coefficients, build_map, coefficient_field, reflect_solution, verify_expansions, BoundaryGraph, CoefficientAudit, CoefficientField,
    ExpansionReport, ParabolaSource, Potential,
};

pub const SCHEMA: &str = "almgren-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Interval {
        a: f64,
        b: f64,
        boundary_point: f64,
        chart_radius: f64,
    },
    Rectangle {
        lower: [f64; 2],
        upper: [f64; 2],
        boundary_point: [f64; 2],
        chart_radius: f64,
    },
    /// Ω = {x₂ < x₁²/4} at the origin.
    Parabola { chart_radius: f64 },
}

impl DomainConfig {
    pub fn dim(&self) -> usize {
        match self {
            DomainConfig::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn chart_radius(&self) -> f64 {
        match self {
            DomainConfig::Interval { chart_radius, .. } | DomainConfig::Rectangle { chart_radius, .. } | DomainConfig::Parabola { chart_radius } => {
                *chart_radius
            }
        }
    }

    pub fn spec(&self) -> Option<DomainSpec> {
        match *self {
            DomainConfig::Interval { a, b, boundary_point, chart_radius } => Some(DomainSpec::interval(a, b, boundary_point, chart_radius)),
            DomainConfig::Rectangle {
                lower,
                upper,
                boundary_point,
                chart_radius,
            } => Some(DomainSpec::rectangle(lower, upper, boundary_point, chart_radius)),
            DomainConfig::Parabola { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTerm {
    pub index: Vec<usize>,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolutionConfig {
    /// amplitude · φ_index.
    Eigenfunction {
        index: Vec<usize>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Σ c φ_index.
    Coefficients { terms: Vec<ModeTerm> },
    /// v(x)(1 + b t^{2s}) on the parabola domain.
    Manufactured { b: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// First radius as a fraction of r₀.
    pub start: f64,
    pub ratio: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            start: 0.1,
            ratio: std::f64::consts::FRAC_1_SQRT_2,
            points: 14,
        }
    }
}

impl GridConfig {
    pub fn radii(&self, r0: f64) -> Vec<f64> {
        let mut v = vec![self.start * r0];
        while v.len() < self.points {
            let next = v[v.len() - 1] * self.ratio;
            v.push(next);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// |γ̂ − m₀| below this classifies the order.
    pub classification: f64,
    /// Relative gap allowed between the two β routes.
    pub route_agreement: f64,
    /// Final relative profile discrepancy.
    pub convergence: f64,
    /// Leading Fourier degree over all others at the smallest λ.
    pub dominance: f64,
    pub pohozaev: f64,
    /// Largest weak-form residual accepted for u.
    pub solution: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            classification: 0.05,
            route_agreement: 0.05,
            convergence: 0.05,
            dominance: 10.0,
            pohozaev: 1e-3,
            solution: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// Pohozaev radius as a fraction of r₀.
    pub pohozaev_radius: f64,
    pub random_cases: usize,
    pub margin: f64,
    /// Fixed 𝒮_{N,s}; calibrated when absent.
    pub sobolev_constant: Option<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            pohozaev_radius: 0.8,
            random_cases: 100,
            margin: 1.1,
            sobolev_constant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub s: f64,
    #[serde(default = "half")]
    pub epsilon: f64,
    pub domain: DomainConfig,
    #[serde(default)]
    pub potential: Option<Potential>,
    pub solution: SolutionConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quadrature: Option<QuadratureOrders>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub audit: AuditConfig,
}

fn half() -> f64 {
    0.5
}

const BUILTIN: [(&str, &str); 3] = [
    ("phi1_interval", include_str!("../scenarios/phi1_interval.toml")),
    ("order2_square", include_str!("../scenarios/order2_square.toml")),
    ("parabola_edge", include_str!("../scenarios/parabola_edge.toml")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|b| b.0).collect()
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn builtin(name: &str) -> Result<Scenario> {
        let text = BUILTIN
            .iter()
            .find(|b| b.0 == name)
            .map(|b| b.1)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{name}`; shipped: {}", builtin_names().join(", "))))?;
        Scenario::from_toml(text)
    }

    /// A shipped scenario name or a path to a TOML file.
    pub fn load(arg: &str) -> Result<Scenario> {
        let p = Path::new(arg);
        if p.exists() {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: arg.to_string(),
                source: e,
            })?;
            Scenario::from_toml(&text).map_err(|e| e.context("cli_report", arg))
        } else {
            Scenario::builtin(arg)
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn r0(&self) -> f64 {
        self.domain.chart_radius()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.grid.radii(self.r0())
    }

    pub fn orders(&self) -> QuadratureOrders {
        self.quadrature.unwrap_or_else(|| QuadratureOrders::default_for(self.dim()))
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        FractionalOrder::new(self.s, dim)?;
        if (dim as f64) < 2.0 * self.s {
            return Err(Error::Config(format!("N = {dim} must be at least 2s = {}", 2.0 * self.s)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("ε = {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.grid.start > 0.0 && self.grid.start < 1.0) {
            return Err(Error::Config("grid start must be a fraction of r₀ in (0, 1)".into()));
        }
        validate_grid(&self.radii(), self.r0())?;
        let t = &self.tolerances;
        if [t.classification, t.route_agreement, t.convergence, t.dominance, t.pohozaev, t.solution]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.audit.pohozaev_radius > 0.0 && self.audit.pohozaev_radius < 1.0) {
            return Err(Error::Config("Pohozaev radius must be a fraction of r₀ in (0, 1)".into()));
        }
        if let Some(q) = self.quadrature {
            if q.polar == 0 || q.azimuth == 0 || q.radial == 0 || q.flat == 0 {
                return Err(Error::Config("quadrature orders must be positive".into()));
            }
        }
        match (&self.domain, &self.solution) {
            (DomainConfig::Parabola { .. }, SolutionConfig::Manufactured { .. }) => {
                if self.potential.is_some() {
                    return Err(Error::Config("the manufactured solution fixes h; remove [potential]".into()));
                }
            }
            (DomainConfig::Parabola { .. }, _) => {
                return Err(Error::Config("the parabola domain only supports the manufactured solution".into()));
            }
            (_, SolutionConfig::Manufactured { .. }) => {
                return Err(Error::Config("the manufactured solution needs the parabola domain".into()));
            }
            _ => {
                if self.potential.is_none() {
                    return Err(Error::Config("[potential] is required".into()));
                }
            }
        }
        Ok(())
    }
}

/// Everything the analysis stages need.
pub struct Prepared {
    pub scenario: Scenario,
    pub kappa: f64,
    pub cf: CoefficientField,
    pub field: Arc<dyn Field>,
    pub extension: Option<Arc<ExtensionField>>,
    pub solution_residual: Option<WeakResidual>,
    pub quadrature: Quadrature,
    pub radii: Vec<f64>,
}

fn identity_chart(dim: usize) -> Chart {
    Chart {
        origin: [0.0; 2],
        rotation: [[1.0, 0.0], [0.0, 1.0]],
        dim,
    }
}

/// Spectral data, extension and straightened field for a scenario.
pub fn prepare(sc: &Scenario) -> Result<Prepared> {
    sc.validate().map_err(|e| e.context("cli_report", &sc.name))?;
    let name = sc.name.as_str();
    let dim = sc.dim();
    let s = sc.s;
    let r0 = sc.r0();
    let quadrature = Quadrature::new(dim, s, sc.orders());
    let radii = sc.radii();
    match &sc.solution {
        SolutionConfig::Manufactured { b } => {
            let kappa = kappa_gamma_formula(s);
            let src = ParabolaSource { s, b: *b };
            let map = build_map(ParabolaSource::graph(), dim, r0).map_err(|e| e.context("straightening", name))?;
            let cf = coefficient_field(map, identity_chart(dim), src.potential(kappa), s, kappa).map_err(|e| e.context("straightening", name))?;
            let field = reflect_solution(Arc::new(src), &cf).map_err(|e| e.context("straightening", name))?;
            Ok(Prepared {
                scenario: sc.clone(),
                kappa,
                cf,
                field: Arc::new(field),
                extension: None,
                solution_residual: None,
                quadrature,
                radii,
            })
        }
        sol => {
            let domain = sc.domain.spec().expect("validated");
            let terms: Vec<(Vec<usize>, f64)> = match sol {
                SolutionConfig::Eigenfunction { index, amplitude } => vec![(index.clone(), *amplitude)],
                SolutionConfig::Coefficients { terms } => terms.iter().map(|t| (t.index.clone(), t.coefficient)).collect(),
                SolutionConfig::Manufactured { .. } => unreachable!(),
            };
            let u = SpectralFunction::from_indexed(&domain, &terms).map_err(|e| e.context("eigenbasis", name))?;
            if u.is_zero() {
                return Err(Error::Degenerate("u ≡ 0 has no vanishing order".into()).context("eigenbasis", name));
            }
            let potential = sc.potential.clone().expect("validated");
            let pot = potential.clone();
            let h = move |x: &[f64]| pot.eval(&[x[0], if x.len() > 1 { x[1] } else { 0.0 }]).0;
            let residual = weak_residual(&u, &h, s, 8).map_err(|e| e.context("fractional_op", name))?;
            if residual.max_residual > sc.tolerances.solution {
                return Err(Error::Config(format!(
                    "u does not solve the equation with the given h: weak residual {:e}",
                    residual.max_residual
                ))
                .context("fractional_op", name));
            }
            let kernel = Arc::new(build_kernel(s).map_err(|e| e.context("extension", name))?);
            let kappa = kernel.kappa;
            let ext = Arc::new(extend(&u, kernel).map_err(|e| e.context("extension", name))?);
            let chart = domain.chart().map_err(|e| e.context("eigenbasis", name))?;
            let map = build_map(BoundaryGraph::flat(), dim, r0).map_err(|e| e.context("straightening", name))?;
            let cf = coefficient_field(map, chart, potential, s, kappa).map_err(|e| e.context("straightening", name))?;
            let field = reflect_solution(ext.clone(), &cf).map_err(|e| e.context("straightening", name))?;
            Ok(Prepared {
                scenario: sc.clone(),
                kappa,
                cf,
                field: Arc::new(field),
                extension: Some(ext),
                solution_residual: Some(residual),
                quadrature,
                radii,
            })
        }
    }
}

/// Orders used by the randomized inequality audit (half the defaults).
pub fn audit_orders(dim: usize) -> QuadratureOrders {
    QuadratureOrders::default_for(dim).scaled(0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub coefficients: CoefficientAudit,
    pub expansions: ExpansionReport,
    pub pohozaev: PohozaevTerms,
    pub pohozaev_convergence: PohozaevConvergence,
    pub pohozaev_pass: bool,
    pub derivative: DerivativeIdentity,
    /// Randomized inequality audit at (N, s); absent when N = 2s.
    pub inequalities: Option<RandomAudit>,
    pub pass: bool,
}

/// Coefficient, expansion, identity and inequality audits.
pub fn audit_stage(p: &Prepared) -> Result<AuditReport> {
    let sc = &p.scenario;
    let name = sc.name.as_str();
    let r0 = sc.r0();
    let coefficients = audit_coefficients(&p.cf, 1000, 0xA1);
    let expansions = verify_expansions(&p.cf, &[0.1 * r0, 0.05 * r0, 0.025 * r0, 0.0125 * r0]);
    let rp = sc.audit.pohozaev_radius * r0;
    let w = p.field.as_ref();
    let pohozaev = pohozaev_check(w, &p.cf, rp, &p.quadrature);
    let pohozaev_convergence = pohozaev_convergence(w, &p.cf, rp, sc.orders());
    let pohozaev_pass = pohozaev.gap < sc.tolerances.pohozaev && pohozaev_convergence.pass;
    let derivative = derivative_identity_check(w, &p.cf, p.radii[0], &p.quadrature).map_err(|e| e.context("diagnostics", name))?;
    let inequalities = inequality_stage(sc)?;
    let pass = coefficients.pass && expansions.pass && pohozaev_pass && inequalities.as_ref().is_none_or(|a| a.pass);
    Ok(AuditReport {
        coefficients,
        expansions,
        pohozaev,
        pohozaev_convergence,
        pohozaev_pass,
        derivative,
        inequalities,
        pass,
    })
}

fn inequality_stage(sc: &Scenario) -> Result<Option<RandomAudit>> {
    let dim = sc.dim();
    if (dim as f64) <= 2.0 * sc.s {
        return Ok(None);
    }
    random_audit(dim, sc.s, sc.audit.random_cases, sc.audit.margin, audit_orders(dim))
        .map(Some)
        .map_err(|e| e.context("diagnostics", &sc.name))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyStage {
    pub profile: RadialProfile,
    pub monotonicity: MonotonicityAudit,
    /// 𝒮_{N,s} used in η (non-normative).
    pub sobolev_constant: f64,
}

pub fn frequency_stage(p: &Prepared, sobolev_constant: f64) -> Result<FrequencyStage> {
    let sc = &p.scenario;
    let settings = ProfileSettings {
        epsilon: sc.epsilon,
        sobolev_constant,
        classification_tolerance: sc.tolerances.classification,
    };
    let profile = frequency_profile(p.field.as_ref(), &p.cf, &p.quadrature, &p.radii, &settings).map_err(|e| e.context("frequency", &sc.name))?;
    let gamma = if profile.classified { profile.m0 as f64 } else { profile.gamma_hat };
    let monotonicity = monotonicity_audit(&profile, gamma);
    Ok(FrequencyStage {
        profile,
        monotonicity,
        sobolev_constant,
    })
}

pub fn blowup_stage(p: &Prepared, m0: usize) -> Result<BlowupReport> {
    let sc = &p.scenario;
    let name = sc.name.as_str();
    let basis = SphereBasis::new(sc.dim(), sc.s, m0 + 2).map_err(|e| e.context("sphere_eig", name))?;
    let settings = BlowupSettings {
        epsilon: sc.epsilon,
        convergence_tolerance: sc.tolerances.convergence,
        dominance: sc.tolerances.dominance,
    };
    let mut rep = blowup_analysis(p.field.clone(), &p.cf, &basis, m0, &p.radii, &p.quadrature, &settings).map_err(|e| e.context("blowup", name))?;
    if rep.beta.relative_gap > sc.tolerances.route_agreement {
        rep.classified = false;
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    AuditFailure,
    Unclassified,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::AuditFailure => 4,
            Outcome::Unclassified => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub m0: usize,
    pub gamma_hat: f64,
    pub beta: Vec<f64>,
    pub classified: bool,
    pub audits_pass: bool,
    pub outcome: Outcome,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub version: String,
    pub scenario: Scenario,
    pub kappa: f64,
    pub solution_residual: Option<WeakResidual>,
    pub frequency: FrequencyStage,
    pub blowup: BlowupReport,
    pub audit: AuditReport,
    pub verdict: Verdict,
}

/// Runs every stage of the pipeline.
pub fn run(sc: &Scenario) -> Result<RunReport> {
    let p = prepare(sc)?;
    let audit = audit_stage(&p)?;
    let sobolev = sc
        .audit
        .sobolev_constant
        .or_else(|| audit.inequalities.as_ref().map(|a| a.sobolev_constant))
        .unwrap_or(1.0);
    let frequency = frequency_stage(&p, sobolev)?;
    let m0 = frequency.profile.m0;
    let blowup = blowup_stage(&p, m0)?;
    let classified = frequency.profile.classified && blowup.classified;
    let audits_pass = audit.pass
        && frequency.monotonicity.pass
        && blowup.converged
        && blowup.bessel_excess <= 1e-8
        && blowup.normalization.iter().all(|v| (v - 1.0).abs() < 1e-10);
    let outcome = if !classified {
        Outcome::Unclassified
    } else if !audits_pass {
        Outcome::AuditFailure
    } else {
        Outcome::Pass
    };
    let mut diagnostics = frequency.profile.diagnostics.clone();
    diagnostics.extend(blowup.diagnostics.iter().cloned());
    let verdict = Verdict {
        m0,
        gamma_hat: frequency.profile.gamma_hat,
        beta: blowup.beta.route_b.iter().map(|e| e.value).collect(),
        classified,
        audits_pass,
        outcome,
        diagnostics,
    };
    let report = RunReport {
        schema: SCHEMA.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: sc.clone(),
        kappa: p.kappa,
        solution_residual: p.solution_residual.clone(),
        frequency,
        blowup,
        audit,
        verdict,
    };
    crate::report::check_finite(&report).map_err(|e| e.context("cli_report", &sc.name))?;
    Ok(report)
}
