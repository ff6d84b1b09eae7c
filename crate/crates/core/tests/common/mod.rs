#![allow(dead_code)]

use rand::Rng;
use relichoice::{ComponentParams, SystemExpr, SystemSpec};

/// Random probability vector of length `n` with every entry positive.
pub fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

pub fn components(lambdas: &[f64], t0s: &[f64]) -> Vec<ComponentParams> {
    lambdas
        .iter()
        .zip(t0s)
        .enumerate()
        .map(|(i, (&l, &t))| ComponentParams::new(format!("C{i}"), l, t))
        .collect()
}

pub fn flat_series(lambdas: &[f64], t0s: &[f64]) -> SystemSpec {
    let comps = components(lambdas, t0s);
    let root = if comps.len() == 1 {
        SystemExpr::leaf(&comps[0].id)
    } else {
        SystemExpr::Series(comps.iter().map(|c| SystemExpr::leaf(&c.id)).collect())
    };
    SystemSpec::new(comps, root).unwrap()
}

pub fn flat_parallel(psi: &[f64], lambdas: &[f64], t0s: &[f64]) -> SystemSpec {
    let comps = components(lambdas, t0s);
    let root = SystemExpr::ProbChoice(
        psi.iter()
            .zip(&comps)
            .map(|(&w, c)| (w, SystemExpr::leaf(&c.id)))
            .collect(),
    );
    SystemSpec::new(comps, root).unwrap()
}

pub struct FlatParallel {
    pub psi: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub t0s: Vec<f64>,
    pub spec: SystemSpec,
}

pub fn random_flat_parallel<R: Rng>(rng: &mut R, max_t0: f64) -> FlatParallel {
    let n = rng.random_range(2..=6);
    let psi = random_weights(rng, n);
    let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
    let t0s: Vec<f64> = (0..n)
        .map(|_| {
            if max_t0 > 0.0 {
                rng.random_range(0.0..max_t0)
            } else {
                0.0
            }
        })
        .collect();
    let spec = flat_parallel(&psi, &lambdas, &t0s);
    FlatParallel {
        psi,
        lambdas,
        t0s,
        spec,
    }
}

pub fn random_flat_series<R: Rng>(rng: &mut R, max_t0: f64) -> SystemSpec {
    let n = rng.random_range(1..=5);
    let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
    let t0s: Vec<f64> = (0..n)
        .map(|_| {
            if max_t0 > 0.0 {
                rng.random_range(0.0..max_t0)
            } else {
                0.0
            }
        })
        .collect();
    flat_series(&lambdas, &t0s)
}

fn random_expr<R: Rng>(rng: &mut R, n_comp: usize, depth: u32) -> SystemExpr {
    if depth == 0 || rng.random_bool(0.3) {
        return SystemExpr::leaf(format!("C{}", rng.random_range(0..n_comp)));
    }
    let k = rng.random_range(2..=3);
    if rng.random_bool(0.5) {
        SystemExpr::Series(
            (0..k)
                .map(|_| random_expr(rng, n_comp, depth - 1))
                .collect(),
        )
    } else {
        let w = random_weights(rng, k);
        SystemExpr::ProbChoice(
            w.into_iter()
                .map(|w| (w, random_expr(rng, n_comp, depth - 1)))
                .collect(),
        )
    }
}

/// Random system of any shape, with at least one series-inside-choice or
/// choice-inside-series level most of the time.
pub fn random_system<R: Rng>(rng: &mut R, max_t0: f64) -> SystemSpec {
    let n = rng.random_range(2..=5);
    let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
    let t0s: Vec<f64> = (0..n)
        .map(|_| {
            if max_t0 > 0.0 {
                rng.random_range(0.0..max_t0)
            } else {
                0.0
            }
        })
        .collect();
    let comps = components(&lambdas, &t0s);
    let root = loop {
        let e = random_expr(rng, n, 3);
        if !matches!(e, SystemExpr::Leaf(_)) {
            break e;
        }
    };
    SystemSpec::new(comps, root).unwrap()
}

/// Survival evaluated straight from the definition, independent of the library.
pub fn survival_oracle(spec: &SystemSpec, expr: &SystemExpr, t: f64) -> f64 {
    match expr {
        SystemExpr::Leaf(id) => {
            let c = &spec.components[id.as_str()];
            if t <= c.t0 {
                1.0
            } else {
                (-c.lambda * (t - c.t0)).exp()
            }
        }
        SystemExpr::Series(children) => children
            .iter()
            .map(|c| survival_oracle(spec, c, t))
            .product(),
        SystemExpr::ProbChoice(branches) => branches
            .iter()
            .map(|(w, c)| w * survival_oracle(spec, c, t))
            .sum(),
        SystemExpr::UniformChoice(children) => {
            children
                .iter()
                .map(|c| survival_oracle(spec, c, t))
                .sum::<f64>()
                / children.len() as f64
        }
    }
}

pub mod strategies {
    use proptest::collection::vec;
    use proptest::option;
    use proptest::prelude::*;
    use relichoice::{ComponentParams, SystemExpr, SystemSpec};

    fn normalize(raw: Vec<(f64, SystemExpr)>) -> SystemExpr {
        let total: f64 = raw.iter().map(|(w, _)| w).sum();
        SystemExpr::ProbChoice(raw.into_iter().map(|(w, e)| (w / total, e)).collect())
    }

    /// Expressions over `C0..C{n-1}`, possibly non-canonical (nested series,
    /// uniform choices).
    pub fn expr(n: usize) -> BoxedStrategy<SystemExpr> {
        let leaf = (0..n).prop_map(|i| SystemExpr::leaf(format!("C{i}")));
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                vec(inner.clone(), 2..4).prop_map(SystemExpr::Series),
                vec((0.01..1.0f64, inner.clone()), 2..4).prop_map(normalize),
                vec(inner, 2..4).prop_map(SystemExpr::UniformChoice),
            ]
        })
        .boxed()
    }

    pub fn component(i: usize, max_t0: f64) -> impl Strategy<Value = ComponentParams> {
        (
            1e-3..50.0f64,
            0.0..=max_t0,
            option::weighted(0.3, 0.0..=1.0f64),
        )
            .prop_map(move |(lambda, t0, p)| ComponentParams {
                id: format!("C{i}"),
                lambda,
                t0,
                static_p: p,
            })
    }

    fn components(n: usize, max_t0: f64) -> impl Strategy<Value = Vec<ComponentParams>> {
        (0..n).map(|i| component(i, max_t0)).collect::<Vec<_>>()
    }

    /// Valid specs of every shape.
    pub fn spec_with(max_t0: f64, max_lambda: f64) -> BoxedStrategy<SystemSpec> {
        (1usize..=5)
            .prop_flat_map(move |n| (components(n, max_t0), expr(n)))
            .prop_map(move |(mut comps, root)| {
                for c in &mut comps {
                    c.lambda = c.lambda.min(max_lambda);
                }
                SystemSpec::new(comps, root).unwrap()
            })
            .boxed()
    }

    pub fn spec() -> BoxedStrategy<SystemSpec> {
        spec_with(20.0, 50.0)
    }

    /// Flat parallel systems: `(ψ, λ, t0)` per branch.
    pub fn flat_parallel(max_t0: f64) -> BoxedStrategy<SystemSpec> {
        vec((0.01..1.0f64, 0.05..3.0f64, 0.0..=max_t0), 2..=6)
            .prop_map(|rows| {
                let total: f64 = rows.iter().map(|r| r.0).sum();
                let psi: Vec<f64> = rows.iter().map(|r| r.0 / total).collect();
                let lambdas: Vec<f64> = rows.iter().map(|r| r.1).collect();
                let t0s: Vec<f64> = rows.iter().map(|r| r.2).collect();
                super::flat_parallel(&psi, &lambdas, &t0s)
            })
            .boxed()
    }

    pub fn flat_series(max_t0: f64) -> BoxedStrategy<SystemSpec> {
        vec((0.05..3.0f64, 0.0..=max_t0), 1..=5)
            .prop_map(|rows| {
                let lambdas: Vec<f64> = rows.iter().map(|r| r.0).collect();
                let t0s: Vec<f64> = rows.iter().map(|r| r.1).collect();
                super::flat_series(&lambdas, &t0s)
            })
            .boxed()
    }
}

/// Survival and its time derivative, differentiated by hand from the definition.
pub fn survival_slope_oracle(spec: &SystemSpec, expr: &SystemExpr, t: f64) -> (f64, f64) {
    match expr {
        SystemExpr::Leaf(id) => {
            let c = &spec.components[id.as_str()];
            if t <= c.t0 {
                (1.0, 0.0)
            } else {
                let s = (-c.lambda * (t - c.t0)).exp();
                (s, -c.lambda * s)
            }
        }
        SystemExpr::Series(children) => {
            let parts: Vec<(f64, f64)> = children
                .iter()
                .map(|c| survival_slope_oracle(spec, c, t))
                .collect();
            let s: f64 = parts.iter().map(|p| p.0).product();
            // product rule, one factor differentiated at a time
            let d: f64 = (0..parts.len())
                .map(|i| {
                    parts
                        .iter()
                        .enumerate()
                        .map(|(j, p)| if i == j { p.1 } else { p.0 })
                        .product::<f64>()
                })
                .sum();
            (s, d)
        }
        SystemExpr::ProbChoice(branches) => branches.iter().fold((0.0, 0.0), |acc, (w, c)| {
            let (s, d) = survival_slope_oracle(spec, c, t);
            (acc.0 + w * s, acc.1 + w * d)
        }),
        SystemExpr::UniformChoice(children) => {
            let w = 1.0 / children.len() as f64;
            children.iter().fold((0.0, 0.0), |acc, c| {
                let (s, d) = survival_slope_oracle(spec, c, t);
                (acc.0 + w * s, acc.1 + w * d)
            })
        }
    }
}
