//! Configuration-driven runs behind the command-line tool.
//!
//! Every output embeds the artifact version and the SHA-256 of the effective
//! configuration (with the output path removed), and contains nothing that
//! varies between runs with the same configuration and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::km::{km_iterate, validate_schedule, Schedule};
use crate::maps::catalog::{FiberSpec, MapSpec, ProductMapSpec, SelectionSpec};
use crate::maps::{falsify_product_nonexpansive, ProductDomain};
use crate::numeric::Rational;
use crate::product::{
    check_family, check_family_invariance, solve_product_afpp, AffineOracle, AfppOracle, Certificate,
    GridOracle, Partial, Pipeline, Probe, ProductError, SolveMode, SolveOutcome,
};
use crate::rates::{rate_brs, rate_ishikawa, rate_product, rate_product_ishikawa, BigCount, RateError, RateInputs};
use crate::spaces::{check_axioms, fmt17, Point, Space, DEFAULT_ETA};
use crate::uafpp::{
    banach_modulus, gk_boundedness_check, regularity_table, regularity_to_uafpp, uafpp_table, uafpp_to_regularity,
    ModulusRow, UafppModulus,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schedule validation horizon cap; validation sums up to `α(n)` terms.
const VALIDATION_HORIZON: u64 = 10_000;

/// Process exit status of a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Violation = 1,
    ConfigError = 2,
    BudgetExhausted = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// What a command reports: an exit status and text for standard output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CmdResult {
    pub status: Status,
    pub message: String,
}

impl CmdResult {
    fn new(status: Status, message: impl Into<String>) -> Self {
        CmdResult {
            status,
            message: message.into(),
        }
    }

    fn config(message: impl std::fmt::Display) -> Self {
        CmdResult::new(Status::ConfigError, format!("config error: {message}"))
    }
}

fn default_budget() -> u64 {
    1000
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_samples() -> usize {
    10_000
}

fn default_orbit_samples() -> usize {
    16
}

/// One experiment, e.g. `{"space": {"kind": "interval", "a": 0, "b": 1}, "eps": "1/100"}`.
/// Rationals are written as `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub space: Option<Space>,
    #[serde(default)]
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub start: Option<Point>,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    /// Number of KM steps for `iterate`.
    #[serde(default)]
    pub steps: Option<u64>,
    #[serde(default)]
    pub eps: Option<Rational>,
    #[serde(default)]
    pub b: Option<Rational>,
    #[serde(default)]
    pub b1: Option<Rational>,
    #[serde(default)]
    pub b2: Option<Rational>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub product: Option<ProductConfig>,
    #[serde(default)]
    pub uafpp: Option<UafppConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductConfig {
    /// `C`, or the ambient space of the fibers in family mode.
    pub c: Space,
    pub m: Space,
    pub map: ProductMapSpec,
    pub selection: SelectionSpec,
    /// Family mode: `u ↦ C_u`.
    #[serde(default)]
    pub fibers: Option<FiberSpec>,
    /// Declared `diam(C_u) ≤ b` in family mode.
    #[serde(default)]
    pub diameter_bound: Option<Rational>,
    #[serde(default)]
    pub oracle: OracleSpec,
    pub mode: ModeSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleSpec {
    #[default]
    Grid,
    Affine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeSpec {
    /// KM orbits of `T_u` from `start` (default `δ(u)`) have diameter `≤ b`.
    BoundedOrbit {
        b: Rational,
        #[serde(default)]
        start: Option<Point>,
        #[serde(default = "default_orbit_samples")]
        samples: usize,
    },
    /// Bounded fibers: orbits from `δ(u)` are bounded by `diameter_bound`.
    BoundedFamily {
        #[serde(default = "default_orbit_samples")]
        samples: usize,
    },
    /// `sup_u r_{C_u}(T_u) = r_star`, probes within `phi` of `δ(u)`.
    SupResidual {
        probe: ProbeSpec,
        phi: Rational,
        r_star: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeSpec {
    /// `x* = δ(u)`.
    Selection,
    Constant { point: Point },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UafppConfig {
    pub modulus: ModulusSpec,
    pub eps_grid: Vec<Rational>,
    pub b_grid: Vec<Rational>,
    /// Claimed Goebel–Kirk bound `D₁`, checked on `space`.
    #[serde(default)]
    pub gk_d1: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusSpec {
    Banach { k: Rational },
    Constant { d: Rational },
}

/// Command-line overrides of configuration fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub eta: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(b) = o.budget {
            self.budget = b;
        }
        if let Some(p) = &o.out {
            self.output = Some(p.clone());
        }
        if let Some(e) = o.eta {
            self.eta = e;
        }
        self
    }

    /// SHA-256 of the canonical JSON form, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let bytes = serde_json::to_vec(&c).expect("configs serialize");
        hex::encode(Sha256::digest(bytes))
    }

    fn space(&self) -> Result<Space, CmdResult> {
        require(&self.space, "space")?.clone().validated().map_err(CmdResult::config)
    }

    fn schedule(&self, horizon: u64) -> Result<Schedule, CmdResult> {
        let s = require(&self.schedule, "schedule")?.clone();
        let report = validate_schedule(&s, horizon.clamp(1, VALIDATION_HORIZON));
        match report.first_violation {
            None => Ok(s),
            Some(v) => Err(CmdResult::config(format!("schedule invalid at n = {}: {}", v.n, v.detail))),
        }
    }

    fn header(&self) -> Value {
        json!({ "artifact": "kmfix", "version": VERSION, "config_sha256": self.hash(), "seed": self.seed })
    }
}

fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T, CmdResult> {
    field.as_ref().ok_or_else(|| CmdResult::config(format!("missing field `{name}`")))
}

fn write_output(path: Option<&PathBuf>, contents: &str) -> Result<(), CmdResult> {
    if let Some(p) = path {
        std::fs::write(p, contents)
            .map_err(|e| CmdResult::new(Status::ConfigError, format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn unwrap_cmd(r: Result<CmdResult, CmdResult>) -> CmdResult {
    r.unwrap_or_else(|e| e)
}

/// Checks the metric axioms and (W1)–(W4) on `space`; exit 1 on any failure.
pub fn cmd_axioms(cfg: &ExperimentConfig) -> CmdResult {
    unwrap_cmd((|| {
        let space = cfg.space()?;
        if cfg.samples == 0 {
            return Err(CmdResult::config("samples must be >= 1"));
        }
        let report = check_axioms(&space, cfg.samples, cfg.seed, cfg.eta);
        let mut out = cfg.header();
        out["report"] = serde_json::to_value(&report).expect("reports serialize");
        out["passed"] = json!(report.passed());
        write_output(cfg.output.as_ref(), &json_text(&out))?;
        let status = if report.passed() { Status::Ok } else { Status::Violation };
        Ok(CmdResult::new(status, report.to_string()))
    })())
}

/// KM trace `n, residual, point…` of `map` on `space` from `start`.
pub fn cmd_iterate(cfg: &ExperimentConfig) -> CmdResult {
    unwrap_cmd((|| {
        let space = cfg.space()?;
        let map = require(&cfg.map, "map")?.build(space.clone()).map_err(CmdResult::config)?;
        let start = require(&cfg.start, "start")?;
        let steps = *require(&cfg.steps, "steps")?;
        let sched = cfg.schedule(steps)?;
        let trace = match km_iterate(&space, &map, start, &sched, steps) {
            Ok(t) => t,
            Err(e) => return Ok(CmdResult::new(Status::Violation, e.to_string())),
        };
        let mut csv = format!("# kmfix {VERSION} config-sha256 {}\n", cfg.hash());
        csv.push_str(&trace.to_csv());
        write_output(cfg.output.as_ref(), &csv)?;
        Ok(CmdResult::new(Status::Ok, csv))
    })())
}

/// Exact values of `h`, `h̃` (needs `eps`, `b`), `g` (needs `eps`, `b1`,
/// `b2`) and `g̃` (needs `eps`, `b`) for the schedule's `K` and `α`.
///
/// The step sizes are not consulted, so the schedule is not validated here.
pub fn cmd_rates(cfg: &ExperimentConfig) -> CmdResult {
    unwrap_cmd((|| {
        let sched = require(&cfg.schedule, "schedule")?;
        let eps = require(&cfg.eps, "eps")?;
        let (k, alpha) = (sched.k, &sched.alpha);
        let mut rows: Vec<(&str, Result<BigCount, RateError>)> = Vec::new();
        if let Some(b) = &cfg.b {
            let inputs = RateInputs::new(eps.clone(), b.clone(), k, alpha.clone());
            rows.push(("h", rate_brs(&inputs)));
            rows.push(("h_tilde", rate_ishikawa(&inputs)));
        }
        if let (Some(b1), Some(b2)) = (&cfg.b1, &cfg.b2) {
            rows.push(("g", rate_product(eps, b1, b2, k, alpha)));
        }
        if let Some(b) = &cfg.b {
            rows.push(("g_tilde", rate_product_ishikawa(eps, b, k, alpha)));
        }
        if rows.is_empty() {
            return Err(CmdResult::config("rates need `b`, or both `b1` and `b2`"));
        }
        let mut text = String::new();
        let mut values = serde_json::Map::new();
        let mut status = Status::Ok;
        for (name, r) in rows {
            match r {
                Ok(v) => {
                    writeln!(text, "{name} = {v}").unwrap();
                    values.insert(name.into(), json!(v.to_string()));
                }
                Err(RateError::Argument(m)) => return Err(CmdResult::config(m)),
                Err(e) => {
                    status = Status::BudgetExhausted;
                    writeln!(text, "{name} unavailable: {e}").unwrap();
                    values.insert(name.into(), json!(format!("unavailable: {e}")));
                }
            }
        }
        let mut out = cfg.header();
        out["rates"] = Value::Object(values);
        write_output(cfg.output.as_ref(), &json_text(&out))?;
        Ok(CmdResult::new(status, text))
    })())
}

fn build_domain(p: &ProductConfig, selection: &crate::maps::SelectionFunction) -> Result<ProductDomain, CmdResult> {
    let c = p.c.clone().validated().map_err(CmdResult::config)?;
    let m = p.m.clone().validated().map_err(CmdResult::config)?;
    match &p.fibers {
        None => Ok(ProductDomain::plain(c, m)),
        Some(spec) => {
            let bound = p.diameter_bound.as_ref().map(Rational::to_f64);
            let family = spec.family(c, m, selection.clone(), bound);
            match check_family(family) {
                Ok(f) => Ok(ProductDomain::Family(f)),
                Err(e @ ProductError::Argument(_)) => Err(CmdResult::config(e)),
                Err(e) => Err(CmdResult::new(Status::Violation, e.to_string())),
            }
        }
    }
}

fn product_error(e: ProductError) -> CmdResult {
    match e {
        ProductError::Argument(_) | ProductError::Rate(RateError::Argument(_)) => CmdResult::config(e),
        ProductError::Rate(RateError::Unaffordable(_)) => CmdResult::new(Status::BudgetExhausted, e.to_string()),
        other => CmdResult::new(Status::Violation, other.to_string()),
    }
}

fn certificate_json(c: &Certificate) -> Value {
    json!({
        "status": "certified",
        "point": c.point,
        "residual": fmt17(c.residual),
        "eps_target": fmt17(c.eps_target),
        "n_used": c.n_used,
        "bound_used": c.bound_used.as_ref().map(|b| b.to_string()),
        "truncated": c.truncated,
        "justification": c.justification,
        "lemma": c.lemma.as_ref().map(|l| json!({
            "lhs": fmt17(l.lhs),
            "rhs": fmt17(l.rhs),
            "holds": l.holds,
            "asserted": l.asserted,
        })),
        "notes": c.notes,
    })
}

fn partial_json(p: &Partial) -> Value {
    json!({
        "status": "budget_exhausted",
        "best_point": p.best_point,
        "best_residual": fmt17(p.best_residual),
        "eps_target": fmt17(p.eps_target),
        "n_used": p.n_used,
        "bound_used": p.bound_used.as_ref().map(|b| b.to_string()),
        "notes": p.notes,
    })
}

/// Builds the pipeline and the solver mode described by `cfg.product`.
pub fn product_setup(cfg: &ExperimentConfig) -> Result<(Pipeline, SolveMode), CmdResult> {
    let p = require(&cfg.product, "product")?;
    let sched = cfg.schedule(cfg.budget)?;
    let m = p.m.clone().validated().map_err(CmdResult::config)?;
    let selection = p.selection.build(m.clone());
    let domain = build_domain(p, &selection)?;
    let t = p.map.build(domain.clone()).map_err(CmdResult::config)?;
    if let ProductDomain::Family(f) = &domain {
        let report = check_family_invariance(&t, f, cfg.samples, cfg.seed).map_err(product_error)?;
        if let Some((x, u, tx)) = report.first_violation {
            return Err(CmdResult::new(
                Status::Violation,
                format!("T does not map H into itself: P1 T({x:?}, {u:?}) = {tx:?} is outside C_u"),
            ));
        }
    }
    if let Some(cx) = falsify_product_nonexpansive(&t, cfg.samples, cfg.seed, cfg.eta).map_err(|e| product_error(e.into()))? {
        return Err(CmdResult::new(
            Status::Violation,
            format!("T is not nonexpansive: {:?} and {:?} move from {} to {}", cx.x, cx.y, cx.distance, cx.image_distance),
        ));
    }
    let oracle: Arc<dyn AfppOracle> = match p.oracle {
        OracleSpec::Grid => Arc::new(GridOracle::new(m).map_err(CmdResult::config)?),
        OracleSpec::Affine => Arc::new(AffineOracle::new(m).map_err(CmdResult::config)?),
    };
    let mut pipeline = Pipeline::new(t, selection.clone(), sched, oracle);
    pipeline.eta = cfg.eta;
    let mode = match &p.mode {
        ModeSpec::BoundedOrbit { b, start, samples } => SolveMode::BoundedOrbit {
            b: b.clone(),
            start: start.clone().map(|y| -> Probe { Arc::new(move |_: &Point, _| Ok(y.clone())) }),
            samples: *samples,
            seed: cfg.seed,
        },
        ModeSpec::BoundedFamily { samples } => {
            let b = require(&p.diameter_bound, "product.diameter_bound")?;
            if p.fibers.is_none() {
                return Err(CmdResult::config("bounded_family mode needs `fibers`"));
            }
            SolveMode::BoundedOrbit {
                b: b.clone(),
                start: None,
                samples: *samples,
                seed: cfg.seed,
            }
        }
        ModeSpec::SupResidual { probe, phi, r_star } => {
            let probe: Probe = match probe {
                ProbeSpec::Selection => Arc::new(move |u: &Point, _| selection.apply(u)),
                ProbeSpec::Constant { point } => {
                    let point = point.clone();
                    Arc::new(move |_: &Point, _| Ok(point.clone()))
                }
            };
            let phi = phi.clone();
            SolveMode::SupResidual {
                probe,
                modulus: Arc::new(move |_: &Rational| phi.clone()),
                r_star: r_star.clone(),
            }
        }
    };
    Ok((pipeline, mode))
}

/// Solves for an approximate fixed point of the product map and writes the
/// certificate (exit 0) or the best partial result (exit 3).
pub fn cmd_product(cfg: &ExperimentConfig) -> CmdResult {
    unwrap_cmd((|| {
        let eps = require(&cfg.eps, "eps")?;
        let (pipeline, mode) = product_setup(cfg)?;
        let outcome = solve_product_afpp(&pipeline, eps, &mode, cfg.budget).map_err(product_error)?;
        let mut out = cfg.header();
        let (status, body) = match &outcome {
            SolveOutcome::Certified(c) => (Status::Ok, certificate_json(c)),
            SolveOutcome::BudgetExhausted(p) => (Status::BudgetExhausted, partial_json(p)),
        };
        out["result"] = body;
        let text = json_text(&out);
        write_output(cfg.output.as_ref(), &text)?;
        Ok(CmdResult::new(status, text))
    })())
}

fn modulus(spec: &ModulusSpec) -> Result<UafppModulus, CmdResult> {
    match spec {
        ModulusSpec::Banach { k } => banach_modulus(k).map_err(CmdResult::config),
        ModulusSpec::Constant { d } => Ok(UafppModulus::constant(d.clone())),
    }
}

fn table_text(title: &str, rows: &[ModulusRow]) -> String {
    let mut s = format!("{title}\n");
    for r in rows {
        writeln!(s, "  eps = {:<10} b = {:<10} {}", r.eps.to_string(), r.b.to_string(), r.value).unwrap();
    }
    s
}

/// Tables of `D(ε,b)`, of the derived `N(ε,b)` and of the round-trip `D`;
/// with `gk_d1`, also the Goebel–Kirk check on `space` (exit 1 on violation).
pub fn cmd_uafpp(cfg: &ExperimentConfig) -> CmdResult {
    unwrap_cmd((|| {
        let u = require(&cfg.uafpp, "uafpp")?;
        let sched = cfg.schedule(cfg.budget)?;
        let phi = modulus(&u.modulus)?;
        let reg = uafpp_to_regularity(&phi, &sched);
        let back = regularity_to_uafpp(&reg, &sched);
        let d_rows = uafpp_table(&phi, &u.eps_grid, &u.b_grid);
        let n_rows = regularity_table(&reg, &u.eps_grid, &u.b_grid);
        let rt_rows = uafpp_table(&back, &u.eps_grid, &u.b_grid);
        let mut text = table_text(&format!("D: {}", phi.label()), &d_rows);
        text.push_str(&table_text(&format!("N (residual <= {} eps): {}", reg.residual_factor, reg.label()), &n_rows));
        text.push_str(&table_text(&format!("D round trip: {}", back.label()), &rt_rows));
        let mut out = cfg.header();
        out["uafpp"] = json!({ "modulus": d_rows, "regularity": n_rows, "round_trip": rt_rows });
        let mut status = Status::Ok;
        if let Some(d1) = &u.gk_d1 {
            let space = cfg.space()?;
            let gk = gk_boundedness_check(&space, d1.to_f64(), cfg.samples, cfg.seed);
            match &gk.violation {
                None => writeln!(text, "Goebel-Kirk check: all {} pairs within {}", gk.samples, gk.bound).unwrap(),
                Some((x, y, d)) => {
                    status = Status::Violation;
                    writeln!(text, "Goebel-Kirk check: rho({x:?}, {y:?}) = {d} > {}; the claimed bound fails", gk.bound)
                        .unwrap();
                }
            }
            out["goebel_kirk"] = serde_json::to_value(&gk).expect("reports serialize");
        }
        write_output(cfg.output.as_ref(), &json_text(&out))?;
        Ok(CmdResult::new(status, text))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn rates_prints_h() {
        let c = cfg(r#"{"schedule": {"lambda": {"kind": "constant", "value": "1/2"}, "K": 1, "alpha": {"kind": "identity"}},
                       "eps": "4", "b": "1"}"#);
        let r = cmd_rates(&c);
        assert_eq!(r.status, Status::Ok);
        assert!(r.message.lines().any(|l| l == "h = 30"), "{}", r.message);
    }

    #[test]
    fn iterate_translation() {
        let c = cfg(r#"{"space": {"kind": "euclidean", "dim": 1},
                       "map": {"kind": "clamped_translation", "shift": 1},
                       "start": {"coords": [0]}, "steps": 3,
                       "schedule": {"lambda": {"kind": "constant", "value": "1/2"}, "K": 2, "alpha": {"kind": "linear", "factor": 2}}}"#);
        let r = cmd_iterate(&c);
        assert_eq!(r.status, Status::Ok);
        let rows: Vec<&str> = r.message.lines().skip(2).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|l| l.split(',').nth(1) == Some("1.0000000000000000e0")));
    }

    #[test]
    fn axioms_exit_codes() {
        assert_eq!(cmd_axioms(&cfg(r#"{"space": {"kind": "euclidean", "dim": 2}, "samples": 200}"#)).status, Status::Ok);
        let broken = cmd_axioms(&cfg(r#"{"space": {"kind": "broken_w", "dim": 1}, "samples": 200}"#));
        assert_eq!(broken.status, Status::Violation);
        assert!(broken.message.contains("(W2)"));
        assert!(ExperimentConfig::from_json(r#"{"space": {"a": 0}}"#).is_err());
        assert_eq!(cmd_axioms(&cfg("{}")).status, Status::ConfigError);
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = cfg(r#"{"seed": 3, "output": "a.json"}"#);
        let b = cfg(r#"{"seed": 3, "output": "b.json"}"#);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), cfg(r#"{"seed": 4}"#).hash());
    }
}
