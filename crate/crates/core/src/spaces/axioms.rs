use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Point, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Axiom {
    /// `ρ(x, x) = 0`.
    Identity,
    Symmetry,
    Triangle,
    /// `W(x, y, λ)` lies in the space.
    Closure,
    /// `ρ(z, W(x,y,λ)) ≤ (1−λ)ρ(z,x) + λρ(z,y)`.
    W1,
    /// `ρ(W(x,y,λ), W(x,y,λ̃)) = |λ−λ̃|·ρ(x,y)`.
    W2,
    /// `W(x,y,λ) = W(y,x,1−λ)`.
    W3,
    /// `ρ(W(x,z,λ), W(y,w,λ)) ≤ (1−λ)ρ(x,y) + λρ(z,w)`.
    W4,
}

impl Axiom {
    pub const METRIC: [Axiom; 3] = [Axiom::Identity, Axiom::Symmetry, Axiom::Triangle];
    pub const CONVEXITY: [Axiom; 5] = [Axiom::Closure, Axiom::W1, Axiom::W2, Axiom::W3, Axiom::W4];
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axiom::Identity => "identity",
            Axiom::Symmetry => "symmetry",
            Axiom::Triangle => "triangle",
            Axiom::Closure => "closure",
            Axiom::W1 => "(W1)",
            Axiom::W2 => "(W2)",
            Axiom::W3 => "(W3)",
            Axiom::W4 => "(W4)",
        };
        f.write_str(name)
    }
}

/// Outcome for one axiom over all samples.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    /// Largest observed excess over the axiom's bound (0 when never violated).
    pub max_violation: f64,
    /// Number of samples whose violation exceeded `η`.
    pub failures: usize,
    /// The first sample exceeding `η`.
    pub counterexample: Option<String>,
}

impl AxiomCheck {
    fn new(axiom: Axiom) -> Self {
        AxiomCheck {
            axiom,
            max_violation: 0.0,
            failures: 0,
            counterexample: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, violation: f64, eta: f64, witness: impl FnOnce() -> String) {
        // NaN counts as a violation.
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.max_violation {
            self.max_violation = v;
        }
        if v > eta {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(witness());
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub space: String,
    pub samples: usize,
    pub seed: u64,
    pub eta: f64,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(AxiomCheck::passed)
    }

    pub fn check(&self, axiom: Axiom) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    pub fn failed_axioms(&self) -> Vec<Axiom> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.axiom).collect()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "space: {}  samples: {}  seed: {}  eta: {:e}",
            self.space, self.samples, self.seed, self.eta
        )?;
        for c in &self.checks {
            let status = if c.passed() { "pass" } else { "FAIL" };
            write!(f, "  {:<10} {status}  max violation {:.3e}", c.axiom.to_string(), c.max_violation)?;
            if let Some(w) = &c.counterexample {
                write!(f, "  ({} failures; first: {w})", c.failures)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn sample_lambda<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..16) {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => rng.gen::<f64>(),
    }
}

/// Evaluates the metric axioms, and (W1)–(W4) when the space has a convexity
/// map, on `samples` random tuples drawn with `seed`.
pub fn check_axioms(space: &Space, samples: usize, seed: u64, eta: f64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hyperbolic = space.is_hyperbolic();
    let axioms: Vec<Axiom> = if hyperbolic {
        Axiom::METRIC.iter().chain(&Axiom::CONVEXITY).copied().collect()
    } else {
        Axiom::METRIC.to_vec()
    };
    let mut checks: Vec<AxiomCheck> = axioms.iter().map(|a| AxiomCheck::new(*a)).collect();
    let idx = |a: Axiom| axioms.iter().position(|b| *b == a).unwrap();
    let d = |p: &Point, q: &Point| space.distance(p, q);

    for _ in 0..samples.max(1) {
        let x = space.sample(&mut rng);
        let y = space.sample(&mut rng);
        let z = space.sample(&mut rng);
        let w = space.sample(&mut rng);

        checks[idx(Axiom::Identity)].record(d(&x, &x).abs(), eta, || format!("x = {x:?}"));
        checks[idx(Axiom::Symmetry)].record((d(&x, &y) - d(&y, &x)).abs(), eta, || {
            format!("x = {x:?}, y = {y:?}")
        });
        checks[idx(Axiom::Triangle)].record(d(&x, &z) - d(&x, &y) - d(&y, &z), eta, || {
            format!("x = {x:?}, y = {y:?}, z = {z:?}")
        });
        if !hyperbolic {
            continue;
        }

        let l = sample_lambda(&mut rng);
        let l2 = sample_lambda(&mut rng);
        let m = space.combine_unchecked(&x, &y, l);
        let m2 = space.combine_unchecked(&x, &y, l2);

        let closure = if space.contains(&m) { 0.0 } else { f64::INFINITY };
        checks[idx(Axiom::Closure)].record(closure, eta, || {
            format!("W({x:?}, {y:?}, {l}) = {m:?} left the space")
        });
        checks[idx(Axiom::W1)].record(
            d(&z, &m) - ((1.0 - l) * d(&z, &x) + l * d(&z, &y)),
            eta,
            || format!("x = {x:?}, y = {y:?}, z = {z:?}, lambda = {l}"),
        );
        checks[idx(Axiom::W2)].record(
            (d(&m, &m2) - (l - l2).abs() * d(&x, &y)).abs(),
            eta,
            || format!("x = {x:?}, y = {y:?}, lambda = {l}, lambda' = {l2}"),
        );
        let flipped = space.combine_unchecked(&y, &x, 1.0 - l);
        checks[idx(Axiom::W3)].record(d(&m, &flipped), eta, || {
            format!("x = {x:?}, y = {y:?}, lambda = {l}")
        });
        let a = space.combine_unchecked(&x, &z, l);
        let b = space.combine_unchecked(&y, &w, l);
        checks[idx(Axiom::W4)].record(
            d(&a, &b) - ((1.0 - l) * d(&x, &y) + l * d(&z, &w)),
            eta,
            || format!("x = {x:?}, y = {y:?}, z = {z:?}, w = {w:?}, lambda = {l}"),
        );
    }

    AxiomReport {
        space: space.label(),
        samples,
        seed,
        eta,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::*;

    #[test]
    fn shipped_spaces_pass() {
        for s in [
            make_euclidean(2).unwrap(),
            make_interval(0.0, 1.0).unwrap(),
            make_poincare_disk(),
            make_star_tree(3, 1.0).unwrap(),
            make_cube(2, 0.0, 1.0).unwrap(),
            make_half_line(0.0).unwrap(),
            product(make_interval(0.0, 1.0).unwrap(), make_poincare_disk()),
        ] {
            let r = check_axioms(&s, 1000, 7, 1e-9);
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn broken_convexity_fails_w2() {
        let r = check_axioms(&Space::BrokenW { dim: 2 }, 200, 1, 1e-9);
        assert!(r.failed_axioms().contains(&Axiom::W2));
        assert!(r.check(Axiom::Triangle).unwrap().passed());
        let w2 = r.check(Axiom::W2).unwrap();
        assert!(w2.max_violation > 1.0 && w2.counterexample.is_some());
    }

    #[test]
    fn circle_is_checked_as_a_metric_space() {
        let r = check_axioms(&make_circle(), 500, 3, 1e-9);
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks.len(), 3);
    }

    #[test]
    fn reports_are_reproducible() {
        let s = make_poincare_disk();
        let a = check_axioms(&s, 100, 11, 1e-9).to_string();
        let b = check_axioms(&s, 100, 11, 1e-9).to_string();
        assert_eq!(a, b);
    }
}
