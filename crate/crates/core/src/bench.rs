//! Test problems with known optima.

use std::f64::consts::PI;

use crate::error::{Result, SgoalError};
use crate::problem::{BoxSpace, FiniteSet, Problem, Relation, Space};

pub const NAMES: [&str; 5] = ["sphere", "rastrigin", "rosenbrock", "onemax", "trap5"];

#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub name: String,
    pub problem: Problem,
    pub f_star: f64,
    pub x_star: Vec<f64>,
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn onemax(x: &[f64]) -> f64 {
    x.iter().sum()
}

/// Concatenated 5-bit deceptive traps: a block with `u` ones scores 5 when
/// `u = 5` and `4 - u` otherwise.
pub fn trap5(x: &[f64]) -> f64 {
    x.chunks(5)
        .map(|b| {
            let u = b.iter().sum::<f64>();
            if u == 5.0 {
                5.0
            } else {
                4.0 - u
            }
        })
        .sum()
}

pub fn make_benchmark(name: &str, dim: usize) -> Result<BenchmarkProblem> {
    if dim == 0 {
        return Err(SgoalError::usage("benchmark dimension must be at least 1"));
    }
    let continuous =
        |lo: f64, hi: f64, f: fn(&[f64]) -> f64, x_star: f64| -> Result<BenchmarkProblem> {
            let space = Space::ContinuousBox(BoxSpace::cube(dim, lo, hi)?);
            Ok(BenchmarkProblem {
                name: name.to_string(),
                problem: Problem::new(space, f, Relation::Minimize, Some(0.0))?,
                f_star: 0.0,
                x_star: vec![x_star; dim],
            })
        };
    let bits = |f: fn(&[f64]) -> f64| -> Result<BenchmarkProblem> {
        let space = Space::FiniteSet(FiniteSet::hypercube(dim)?);
        let f_star = dim as f64;
        Ok(BenchmarkProblem {
            name: name.to_string(),
            problem: Problem::new(space, f, Relation::Maximize, Some(f_star))?,
            f_star,
            x_star: vec![1.0; dim],
        })
    };
    match name {
        "sphere" => continuous(-5.12, 5.12, sphere, 0.0),
        "rastrigin" => continuous(-5.12, 5.12, rastrigin, 0.0),
        "rosenbrock" => continuous(-2.048, 2.048, rosenbrock, 1.0),
        "onemax" => bits(onemax),
        "trap5" => {
            if !dim.is_multiple_of(5) {
                return Err(SgoalError::usage(format!(
                    "trap5 needs a multiple of 5 bits, got {dim}"
                )));
            }
            bits(trap5)
        }
        other => Err(SgoalError::usage(format!(
            "unknown benchmark '{other}' (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn known_values() {
        assert_eq!(sphere(&[0.0, 0.0]), 0.0);
        assert_eq!(onemax(&[1.0; 4]), 4.0);
        assert!(rastrigin(&[0.0, 0.0]).abs() < 1e-12);
        assert!((rastrigin(&[1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert_eq!(rosenbrock(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(trap5(&[1.0; 5]), 5.0);
        assert_eq!(trap5(&[0.0; 5]), 4.0);
        assert_eq!(trap5(&[1.0, 1.0, 1.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn optimizer_attains_declared_optimum() {
        for (name, dim) in [
            ("sphere", 3),
            ("rastrigin", 2),
            ("rosenbrock", 4),
            ("onemax", 6),
            ("trap5", 10),
        ] {
            let b = make_benchmark(name, dim).unwrap();
            assert!(
                (b.problem.objective(&b.x_star) - b.f_star).abs() <= 1e-12,
                "{name}"
            );
            assert!(b.problem.space().contains(&b.x_star));
        }
    }

    #[test]
    fn random_points_never_beat_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (name, dim) in [
            ("sphere", 3),
            ("rastrigin", 2),
            ("rosenbrock", 4),
            ("onemax", 6),
            ("trap5", 10),
        ] {
            let b = make_benchmark(name, dim).unwrap();
            let rel = b.problem.relation();
            for _ in 0..10_000 {
                let x = b.problem.space().sample_uniform(&mut rng);
                assert!(
                    rel.better_or_equal(b.f_star, b.problem.objective(&x)),
                    "{name} {x:?}"
                );
            }
        }
    }

    #[test]
    fn exhaustive_finite_optimum() {
        let b = make_benchmark("trap5", 10).unwrap();
        let fit = b.problem.finite_fitness().unwrap();
        assert_eq!(fit.len(), 1024);
        assert_eq!(fit.iter().cloned().fold(f64::MIN, f64::max), 10.0);
        assert_eq!(fit.iter().filter(|f| **f == 10.0).count(), 1);
    }

    #[test]
    fn usage_errors() {
        assert!(matches!(
            make_benchmark("ackley", 2),
            Err(SgoalError::Usage(_))
        ));
        assert!(matches!(
            make_benchmark("trap5", 7),
            Err(SgoalError::Usage(_))
        ));
        assert!(make_benchmark("sphere", 0).is_err());
    }
}
