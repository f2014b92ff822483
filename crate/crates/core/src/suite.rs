//! The acceptance suite: eleven end-to-end checks, each returning a
//! pass/fail line. Shared by `kmfix demo` and the `acceptance` test target.

use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::experiment::{cmd_product, ExperimentConfig, Overrides, Status};
use crate::km::{estimate_residual_inf, km_iterate, Schedule};
use crate::maps::catalog::{
    self, clamped_translation, random_box_map, random_product_affine, AffinePair, Clamp, FiberSpec, ProductMapSpec,
};
use crate::maps::{slice, FamilyProduct, NonexpansiveMap, ProductDomain, ProductMap, SelectionFunction};
use crate::numeric::Rational;
use crate::product::{
    check_family, check_family_invariance, estimate_rh, solve_product_afpp, GridOracle, Pipeline, Probe, SolveMode,
};
use crate::rates::{alpha_hat, rate_brs, rate_ishikawa, rate_product, AlphaFn, BigCount, RateInputs};
use crate::spaces::{
    check_axioms, make_euclidean, make_half_line, make_interval, make_poincare_disk, make_star_tree, Axiom, Point,
    Space,
};
use crate::uafpp::{
    banach_a_priori_bound, banach_fixed_point, banach_modulus, check_uafpp_empirically, gk_boundedness_check,
    regularity_to_uafpp, regularity_witness, uafpp_to_regularity, RegularityModulus, UafppCase, UafppModulus,
    UafppProbe,
};

/// Seed of every randomized criterion.
pub const SUITE_SEED: u64 = 20_240_601;

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{verdict}] {:>2}. {}: {} ({:.2} s)",
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type Check = Result<String, String>;

fn timed(id: u8, title: &'static str, limit: Option<u64>, f: impl FnOnce() -> Check) -> CriterionResult {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let limit = limit.map(Duration::from_secs);
    let (mut passed, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(l) = limit {
        if elapsed > l {
            passed = false;
            detail.push_str(&format!("; exceeded the {} s limit", l.as_secs()));
        }
    }
    CriterionResult {
        id,
        title,
        passed,
        detail,
        elapsed,
        limit,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit() -> Space {
    make_interval(0.0, 1.0).expect("valid interval")
}

/// `((x+u)/2, x)` on `[0,1]²` with `δ = id`: every `(u,u)` is fixed.
pub fn diagonal_pipeline() -> Pipeline {
    Pipeline::new(
        catalog::diagonal_average(unit(), unit()),
        SelectionFunction::identity(unit()),
        Schedule::half(),
        Arc::new(GridOracle::new(unit()).expect("interval")),
    )
}

/// `(x + 1/2, (u+1)/2)` on `ℝ × [0,1]` with `δ ≡ 0`: every slice has
/// residual `1/2`, so `sup_u r_C(T_u) = 1/2`.
pub fn known_r_star_pipeline() -> Pipeline {
    let t = ProductMapSpec::Affine {
        coefficients: AffinePair { a: 1.0, b: 0.0, c: 0.5, d: 0.0, e: 0.5, f: 0.5 },
        clamp_x: Clamp::NONE,
        clamp_u: Clamp::NONE,
    }
    .build(ProductDomain::plain(Space::Euclidean { dim: 1 }, unit()))
    .expect("real components");
    Pipeline::new(
        t,
        SelectionFunction::constant(unit(), Point::real(0.0)),
        Schedule::half(),
        Arc::new(GridOracle::new(unit()).expect("interval")),
    )
}

/// `C_u = [0, 1+u]` over `M = [0,1]` with `δ ≡ 0`.
pub fn growing_family() -> FamilyProduct {
    let spec = FiberSpec::Interval { lo: 0.0, hi: 1.0, slope: 1.0 };
    let zero = SelectionFunction::constant(unit(), Point::real(0.0));
    check_family(spec.family(Space::Euclidean { dim: 1 }, unit(), zero, Some(2.0))).expect("valid family")
}

/// `(x+u, u)` on the growing family: leaves `C_u` whenever `x > 1`.
pub fn drifting_family_map() -> ProductMap {
    ProductMapSpec::Affine {
        coefficients: AffinePair { a: 1.0, b: 1.0, c: 0.0, d: 0.0, e: 1.0, f: 0.0 },
        clamp_x: Clamp::NONE,
        clamp_u: Clamp::NONE,
    }
    .build(ProductDomain::Family(growing_family()))
    .expect("real components")
}

/// The diagonal example as a `product` configuration.
pub const DIAGONAL_CONFIG: &str = r#"{
  "product": {
    "c": {"kind": "interval", "a": 0, "b": 1},
    "m": {"kind": "interval", "a": 0, "b": 1},
    "map": {"kind": "diagonal_average"},
    "selection": {"kind": "identity"},
    "mode": {"kind": "bounded_orbit", "b": "1"}
  },
  "schedule": {"lambda": {"kind": "constant", "value": "1/2"}, "K": 2, "alpha": {"kind": "linear", "factor": 2}},
  "eps": "1/100",
  "budget": 256,
  "seed": 42,
  "samples": 1000
}"#;

pub fn axiom_suite() -> CriterionResult {
    timed(1, "axiom suite on the shipped spaces", Some(10), || {
        let spaces = [
            make_euclidean(2).map_err(|e| e.to_string())?,
            make_interval(-1.0, 2.0).map_err(|e| e.to_string())?,
            make_poincare_disk(),
            make_star_tree(3, 1.0).map_err(|e| e.to_string())?,
        ];
        for s in &spaces {
            let r = check_axioms(s, 10_000, SUITE_SEED, 1e-9);
            ensure(r.passed() && r.checks.len() == 8, || format!("{} failed: {:?}", s.label(), r.failed_axioms()))?;
        }
        let broken = check_axioms(&Space::BrokenW { dim: 2 }, 10_000, SUITE_SEED, 1e-9);
        ensure(broken.failed_axioms().contains(&Axiom::W2), || "broken W was not caught by (W2)".into())?;
        Ok("4 spaces pass 10^4 samples at 1e-9; the broken W fails (W2)".into())
    })
}

fn random_square_maps() -> Vec<(NonexpansiveMap, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    (0..500)
        .map(|_| {
            let t = random_box_map(&mut rng, 2);
            let x = t.domain().sample(&mut rng);
            (t, x)
        })
        .collect()
}

pub fn residual_monotonicity() -> CriterionResult {
    timed(2, "KM residuals are nonincreasing", Some(10), || {
        let sched = Schedule::half();
        for (i, (t, x)) in random_square_maps().iter().enumerate() {
            let trace = km_iterate(t.domain(), t, x, &sched, 100).map_err(|e| e.to_string())?;
            for (n, w) in trace.residuals.windows(2).enumerate() {
                ensure(w[1] <= w[0] + 1e-12, || format!("map {i}: residual rises at n = {n}: {} -> {}", w[0], w[1]))?;
            }
        }
        Ok("500 random affine maps on [0,1]^2, N = 100".into())
    })
}

pub fn cross_parameter_stability() -> CriterionResult {
    timed(3, "cross-parameter KM stability", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED + 3);
        let maps = [catalog::diagonal_average(unit(), unit()), random_product_affine(&mut rng)];
        let sched = Schedule::half();
        let mut worst: f64 = f64::NEG_INFINITY;
        for t in &maps {
            let c = t.domain().ambient().clone();
            for _ in 0..200 {
                let (x, u) = t.domain().sample(&mut rng);
                let (y, v) = t.domain().sample(&mut rng);
                let bound = c.distance(&x, &y).max(t.domain().base().distance(&u, &v));
                let xs = km_iterate(&c, &slice(t, &u).map_err(|e| e.to_string())?, &x, &sched, 50)
                    .map_err(|e| e.to_string())?;
                let ys = km_iterate(&c, &slice(t, &v).map_err(|e| e.to_string())?, &y, &sched, 50)
                    .map_err(|e| e.to_string())?;
                for (n, (a, b)) in xs.points.iter().zip(&ys.points).enumerate() {
                    let gap = c.distance(a, b) - bound;
                    worst = worst.max(gap);
                    ensure(gap <= 1e-9, || format!("{}: n = {n} exceeds the bound by {gap}", t.label()))?;
                }
            }
        }
        Ok(format!("2 maps x 200 tuples, n <= 50; largest excess {worst:.3e}"))
    })
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

pub fn rates_exactness() -> CriterionResult {
    timed(4, "exact rates and alpha-hat closed forms", None, || {
        for i in 0..=64u64 {
            for n in 0..=20u64 {
                let id = alpha_hat(&AlphaFn::Identity, i, n).map_err(|e| e.to_string())?;
                let id_oracle = big(i + 1) * big(n + 1);
                ensure(id.as_exact() == Some(&id_oracle), || format!("identity at ({i},{n}): {id}"))?;
                let lin = alpha_hat(&AlphaFn::Linear { factor: 2 }, i, n).map_err(|e| e.to_string())?;
                let lin_oracle = big(2 * n + 1) * ((BigUint::from(1u32) << (i + 1)) - 1u32);
                ensure(lin.as_exact() == Some(&lin_oracle), || format!("2n at ({i},{n}): {lin}"))?;
            }
        }
        let q = |p: i64, d: i64| Rational::new(p, d);
        let h = rate_brs(&RateInputs::new(q(4, 1), q(1, 1), 1, AlphaFn::Identity)).map_err(|e| e.to_string())?;
        let ht = rate_ishikawa(&RateInputs::new(q(7, 1), q(1, 1), 1, AlphaFn::Identity)).map_err(|e| e.to_string())?;
        let g = rate_product(&q(4, 1), &q(1, 4), &q(1, 2), 1, &AlphaFn::Identity).map_err(|e| e.to_string())?;
        ensure(h == BigCount::from(30), || format!("h(4,1,1,id) = {h}"))?;
        ensure(ht == BigCount::from(178), || format!("h~(7,1,1,id) = {ht}"))?;
        ensure(g == BigCount::from(30), || format!("g(4,1/4,1/2,1,id) = {g}"))?;
        Ok("alpha-hat matches (i+1)(n+1) and (2n+1)(2^(i+1)-1) for i <= 64; h = 30, h~ = 178, g = 30".into())
    })
}

/// The catalogued `α` used for monotonicity checks.
pub fn alpha_catalog() -> Vec<AlphaFn> {
    vec![
        AlphaFn::Identity,
        AlphaFn::Linear { factor: 2 },
        AlphaFn::Linear { factor: 3 },
        AlphaFn::CeilScaled { c: Rational::new(3, 2) },
        AlphaFn::CeilScaled { c: Rational::new(1, 2) },
        AlphaFn::Tabulated { values: vec![0, 4, 4, 9], step: 2 },
    ]
}

pub fn alpha_hat_monotonicity() -> CriterionResult {
    timed(5, "alpha-hat is nondecreasing in i", None, || {
        let mut checked = 0usize;
        for alpha in alpha_catalog() {
            for n in 0..=50u64 {
                let mut prev = alpha_hat(&alpha, 0u64, n).map_err(|e| e.to_string())?;
                for i in 1..200u64 {
                    let next = alpha_hat(&alpha, i, n).map_err(|e| e.to_string())?;
                    let ok = matches!(prev.partial_cmp_exact(&next), Some(o) if o.is_le());
                    ensure(ok, || format!("{} at n = {n}: {prev} then {next} at i = {i}", alpha.label()))?;
                    prev = next;
                    checked += 1;
                }
            }
        }
        Ok(format!("{checked} consecutive pairs over {} alphas", alpha_catalog().len()))
    })
}

pub fn residual_limits() -> CriterionResult {
    timed(6, "KM residual limits", None, || {
        let line = Space::Euclidean { dim: 1 };
        let shift = clamped_translation(line.clone(), 1.0, Clamp::NONE);
        let sched = Schedule::half();
        for n in 0..=1000u64 {
            let r = estimate_residual_inf(&line, &shift, &Point::real(0.0), &sched, n).map_err(|e| e.to_string())?;
            ensure(r == 1.0, || format!("x + 1: estimate {r} at N = {n}"))?;
        }
        let half_line = make_half_line(0.0).map_err(|e| e.to_string())?;
        let down = clamped_translation(half_line.clone(), -1.0, Clamp::below(0.0));
        let r = estimate_residual_inf(&half_line, &down, &Point::real(5.0), &sched, 60).map_err(|e| e.to_string())?;
        ensure(r <= 1e-9, || format!("max(x-1, 0): estimate {r} at N = 60"))?;
        Ok(format!("x + 1 gives exactly 1 for N <= 1000; max(x-1, 0) from 5 gives {r:e} at N = 60"))
    })
}

fn selection_probe(delta: SelectionFunction) -> Probe {
    Arc::new(move |u: &Point, _| delta.apply(u))
}

pub fn product_pipeline() -> CriterionResult {
    timed(7, "product pipeline certificates", Some(30), || {
        let eps = Rational::new(1, 100);
        let p = diagonal_pipeline();
        let mode = SolveMode::SupResidual {
            probe: selection_probe(p.delta.clone()),
            modulus: Arc::new(|_: &Rational| Rational::new(1, 10)),
            r_star: Rational::integer(0),
        };
        let out = solve_product_afpp(&p, &eps, &mode, 256).map_err(|e| e.to_string())?;
        let c = out.certificate().ok_or_else(|| format!("diagonal: no certificate: {out:?}"))?;
        let lemma = c.lemma.as_ref().ok_or("diagonal: no inner inequality reported")?;
        ensure(c.residual <= 0.01 && lemma.holds, || format!("diagonal: {c:?}"))?;

        let q = known_r_star_pipeline();
        let r_star = Rational::new(1, 2);
        let mode = SolveMode::SupResidual {
            probe: selection_probe(q.delta.clone()),
            modulus: Arc::new(|_: &Rational| Rational::integer(1)),
            r_star: r_star.clone(),
        };
        let out = solve_product_afpp(&q, &eps, &mode, 256).map_err(|e| e.to_string())?;
        let c2 = out.certificate().ok_or_else(|| format!("known r*: no certificate: {out:?}"))?;
        let est = estimate_rh(&q, c2.n_used).map_err(|e| e.to_string())?;
        let bound = r_star.to_f64() + 2.0 * eps.to_f64();
        ensure(est <= bound, || format!("known r*: estimate {est} > {bound}"))?;
        Ok(format!(
            "diagonal residual {} at n = {} (inner inequality {} <= {}); known r* = 1/2: estimate {est} <= {bound}",
            c.residual, c.n_used, lemma.lhs, lemma.rhs
        ))
    })
}

pub fn family_mode() -> CriterionResult {
    timed(8, "family mode", None, || {
        let plain = diagonal_pipeline();
        let fixed = FiberSpec::Fixed { space: unit() };
        let family = check_family(fixed.family(unit(), unit(), plain.delta.clone(), None)).map_err(|e| e.to_string())?;
        let mut fam = plain.clone();
        fam.t = plain.t.with_domain(ProductDomain::Family(family));
        let eps = Rational::new(1, 100);
        let modes = [
            SolveMode::BoundedOrbit { b: Rational::integer(1), start: None, samples: 8, seed: SUITE_SEED },
            SolveMode::SupResidual {
                probe: selection_probe(plain.delta.clone()),
                modulus: Arc::new(|_: &Rational| Rational::new(1, 10)),
                r_star: Rational::integer(0),
            },
        ];
        for mode in &modes {
            let a = solve_product_afpp(&plain, &eps, mode, 256).map_err(|e| e.to_string())?;
            let b = solve_product_afpp(&fam, &eps, mode, 256).map_err(|e| e.to_string())?;
            ensure(a == b && a.certificate().is_some(), || format!("certificates differ: {a:?} vs {b:?}"))?;
        }
        let report =
            check_family_invariance(&drifting_family_map(), &growing_family(), 1000, SUITE_SEED).map_err(|e| e.to_string())?;
        let (x, u, tx) = report.first_violation.ok_or("the drifting map was not flagged")?;
        Ok(format!(
            "identical certificates in 2 modes; (x+u, u) flagged at ({x:?}, {u:?}) -> {tx:?}, {} of 1000 samples",
            report.violations
        ))
    })
}

pub fn uafpp_moduli() -> CriterionResult {
    timed(9, "UAFPP and regularity moduli", None, || {
        let sched = Schedule::half();
        let steps = 100u64;
        let fejer = regularity_to_uafpp(&RegularityModulus::constant(steps), &sched);
        for (i, (t, x)) in random_square_maps().iter().enumerate() {
            let b = t.displacement(x).map_err(|e| e.to_string())?;
            if b == 0.0 {
                continue;
            }
            let d = fejer.d_of(&Rational::integer(1), &Rational::from_f64(b).expect("finite")).map_err(|e| e.to_string())?;
            let xn = km_iterate(t.domain(), t, x, &sched, steps).map_err(|e| e.to_string())?;
            let dist = t.domain().distance(x, xn.points.last().expect("nonempty"));
            ensure(dist <= d.to_f64() + 1e-9, || format!("map {i}: rho(x, x_N) = {dist} > D = {d}"))?;
        }

        let line = Space::Euclidean { dim: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED + 9);
        for k in [0.3, 0.5, 0.9] {
            for _ in 0..20 {
                let c: f64 = rng.gen_range(-2.0..2.0);
                let x: f64 = rng.gen_range(-5.0..5.0);
                let fixed = c / (1.0 - k);
                let mut y = x;
                let disp = (x - (k * x + c)).abs();
                for n in 0..=60u32 {
                    let gap = (y - fixed).abs();
                    let bound = banach_a_priori_bound(k, n, disp);
                    ensure(gap <= bound + 1e-9, || format!("k = {k}, n = {n}: {gap} > {bound}"))?;
                    y = k * y + c;
                }
            }
        }

        // (i) ⇒ (iii) ⇒ (i): N = 21 and D = 21/200 at ε = 3/2, b = 1/100.
        let (eps, b) = (Rational::new(3, 2), Rational::new(1, 100));
        let reg = uafpp_to_regularity(&banach_modulus(&Rational::new(1, 2)).map_err(|e| e.to_string())?, &sched);
        let back = regularity_to_uafpp(&reg, &sched);
        let eps_half = eps.clone();
        // The round trip doubles ε: D'(2ε, b) := D(ε, b).
        let doubled = UafppModulus::new("round trip at 2 eps", move |_, b| back.d_of(&eps_half, b));
        let witness: UafppProbe = {
            let (reg, sched, eps, b) = (reg.clone(), sched.clone(), eps.clone(), b.clone());
            Arc::new(move |t, x| regularity_witness(t.domain(), t, x, &sched, &reg, &eps, &b))
        };
        let cases: Vec<UafppCase> = (0..50)
            .map(|_| {
                let c: f64 = rng.gen_range(-1.0..1.0);
                let fixed = 2.0 * c;
                let start = fixed + rng.gen_range(-0.02..0.02);
                UafppCase {
                    map: catalog::affine(line.clone(), vec![vec![0.5]], vec![c]).expect("1x1"),
                    start: Point::real(start),
                    probe: witness.clone(),
                }
            })
            .collect();
        let two_eps = Rational(eps.inner() * num_rational::BigRational::from_integer(2.into()));
        let report = check_uafpp_empirically(&cases, &two_eps, &b, &doubled).map_err(|e| e.to_string())?;
        ensure(report.passed() && report.checked > 0, || format!("round trip: {report:?}"))?;
        let run = banach_fixed_point(&cases[0].map, &cases[0].start, &Rational::new(1, 2), 1e-9, 500)
            .map_err(|e| e.to_string())?;
        ensure(run.distance <= run.bound + 1e-9, || format!("banach run: {run:?}"))?;
        Ok(format!(
            "rho(x, x_100) <= 50 b on 500 maps; Banach bound for k in 0.3, 0.5, 0.9 with n <= 60; round trip D = {} passes {} cases at 2 eps",
            report.d, report.checked
        ))
    })
}

pub fn goebel_kirk() -> CriterionResult {
    timed(10, "Goebel-Kirk boundedness remark", None, || {
        let ok = gk_boundedness_check(&unit(), 1.0, 10_000, SUITE_SEED);
        ensure(ok.passed(), || format!("[0,1] reported a violation: {ok:?}"))?;
        let line = gk_boundedness_check(&Space::Euclidean { dim: 1 }, 1.0, 10_000, SUITE_SEED);
        let (x, y, d) = line.violation.ok_or("no violation found on R")?;
        Ok(format!("[0,1] passes; on R the constant map to {y:?} moves {x:?} by {d:.3} > 3"))
    })
}

pub fn determinism(workdir: &Path) -> CriterionResult {
    timed(11, "byte-identical product certificates", None, || {
        let cfg = ExperimentConfig::from_json(DIAGONAL_CONFIG)?;
        let mut files = Vec::new();
        for name in ["certificate-a.json", "certificate-b.json"] {
            let path = workdir.join(name);
            let run = cmd_product(&cfg.clone().with_overrides(&Overrides { out: Some(path.clone()), ..Default::default() }));
            ensure(run.status == Status::Ok, || format!("cmd_product exited {:?}: {}", run.status, run.message))?;
            files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(files[0] == files[1], || "certificate files differ".into())?;
        Ok(format!("two runs wrote identical {}-byte certificates", files[0].len()))
    })
}

/// Runs every criterion in order; criterion 11 writes into `workdir`.
pub fn run_all(workdir: &Path) -> Vec<CriterionResult> {
    vec![
        axiom_suite(),
        residual_monotonicity(),
        cross_parameter_stability(),
        rates_exactness(),
        alpha_hat_monotonicity(),
        residual_limits(),
        product_pipeline(),
        family_mode(),
        uafpp_moduli(),
        goebel_kirk(),
        determinism(workdir),
    ]
}
