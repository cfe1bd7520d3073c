//! Monotone regression functions with their declared local structure.
//!
//! The catalog carries the functions used throughout the test suite and
//! the experiment harness; each entry pairs an evaluator on `[0,1]^d`
//! with the smoothness profile (exponents and derivatives) at its
//! declared query point.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rates::{AlphaExp, MixedDeriv, SmoothnessProfile};
use crate::rng;

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TestFunction {
    pub id: String,
    pub dim: usize,
    pub profile: SmoothnessProfile,
    eval: Evaluator,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        id: impl Into<String>,
        dim: usize,
        profile: SmoothnessProfile,
        eval: Evaluator,
    ) -> Result<Self> {
        profile.validate()?;
        if profile.dim() != dim {
            return Err(Error::InvalidProfile(
                "profile dimension does not match the function".into(),
            ));
        }
        let f = TestFunction {
            id: id.into(),
            dim,
            profile,
            eval,
        };
        f.check_monotone(1000, 0x150)?;
        Ok(f)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    pub fn evaluator(&self) -> Evaluator {
        Arc::clone(&self.eval)
    }

    /// Spot-check coordinate-wise monotonicity on `pairs` random ordered
    /// pairs of points.
    pub fn check_monotone(&self, pairs: usize, seed: u64) -> Result<()> {
        let mut rng = rng::stream(seed, 0);
        for _ in 0..pairs {
            let a: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>()).collect();
            let b: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>()).collect();
            let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
            let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
            if self.value(&lo) > self.value(&hi) + 1e-12 {
                return Err(Error::InvalidProfile(format!(
                    "function {} is not coordinate-wise nondecreasing at {lo:?} vs {hi:?}",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Constant function with empty intrinsic dimension.
    pub fn constant(dim: usize, c: f64) -> TestFunction {
        let profile = SmoothnessProfile {
            x0: vec![0.5; dim],
            alpha: vec![AlphaExp::Infinite; dim],
            marginal_derivs: vec![],
            mixed_derivs: vec![],
            density_at_x0: 1.0,
        };
        TestFunction {
            id: format!("const{dim}"),
            dim,
            profile,
            eval: Arc::new(move |_| c),
        }
    }
}

fn profile(
    x0: Vec<f64>,
    alpha: Vec<AlphaExp>,
    marginal: Vec<f64>,
    mixed: Vec<MixedDeriv>,
) -> SmoothnessProfile {
    SmoothnessProfile {
        x0,
        alpha,
        marginal_derivs: marginal,
        mixed_derivs: mixed,
        density_at_x0: 1.0,
    }
}

const FIN: fn(u32) -> AlphaExp = AlphaExp::Finite;
const INF: AlphaExp = AlphaExp::Infinite;

/// Look up a catalog function by identifier.
///
/// `f1 = exp(x1+x2)` and `f2 = e·(x1+x2)` are the planar pair whose
/// local constants coincide at `(1/2,1/2)`; `f3` is a strip function of
/// intrinsic dimension one there; `f4`/`f5` are cubic pairs with
/// vanishing and non-vanishing critical cross derivatives; `sum2`,
/// `coord1`, and `linear1d` are the elementary linear cases.
pub fn by_id(id: &str) -> Result<TestFunction> {
    let e = std::f64::consts::E;
    match id {
        "f1" => TestFunction::new(
            "f1",
            2,
            profile(vec![0.5, 0.5], vec![FIN(1), FIN(1)], vec![e, e], vec![]),
            Arc::new(|x: &[f64]| (x[0] + x[1]).exp()),
        ),
        "f2" => TestFunction::new(
            "f2",
            2,
            profile(vec![0.5, 0.5], vec![FIN(1), FIN(1)], vec![e, e], vec![]),
            Arc::new(move |x: &[f64]| e * (x[0] + x[1])),
        ),
        "f3" => TestFunction::new(
            "f3",
            2,
            profile(vec![0.5, 0.5], vec![FIN(1), INF], vec![8.0], vec![]),
            Arc::new(|x: &[f64]| {
                if x[0] <= 0.25 {
                    x[0] + x[1]
                } else if x[0] < 0.75 {
                    8.0 * x[0]
                } else {
                    8.0 * (x[0] + x[1])
                }
            }),
        ),
        "f4" => TestFunction::new(
            "f4",
            2,
            profile(vec![0.5, 0.5], vec![FIN(3), FIN(3)], vec![6.0, 6.0], vec![]),
            Arc::new(|x: &[f64]| (x[0] - 0.5).powi(3) + (x[1] - 0.5).powi(3)),
        ),
        "f5" => TestFunction::new(
            "f5",
            2,
            profile(
                vec![0.5, 0.5],
                vec![FIN(3), FIN(3)],
                vec![6.0, 6.0],
                vec![
                    MixedDeriv { j: vec![2, 1], value: 2.0 },
                    MixedDeriv { j: vec![1, 2], value: 2.0 },
                ],
            ),
            Arc::new(|x: &[f64]| {
                let (t1, t2) = (x[0] - 0.5, x[1] - 0.5);
                t1.powi(3) + t1 * t1 * t2 + t1 * t2 * t2 + t2.powi(3)
            }),
        ),
        "sum2" => TestFunction::new(
            "sum2",
            2,
            profile(vec![0.5, 0.5], vec![FIN(1), FIN(1)], vec![1.0, 1.0], vec![]),
            Arc::new(|x: &[f64]| x[0] + x[1]),
        ),
        "coord1" => TestFunction::new(
            "coord1",
            2,
            profile(vec![0.5, 0.5], vec![FIN(1), INF], vec![1.0], vec![]),
            Arc::new(|x: &[f64]| x[0]),
        ),
        "linear1d" => TestFunction::new(
            "linear1d",
            1,
            profile(vec![0.5], vec![FIN(1)], vec![1.0], vec![]),
            Arc::new(|x: &[f64]| x[0]),
        ),
        other => Err(Error::InvalidConfig(format!(
            "unknown test function `{other}` (known: {})",
            CATALOG.join(", ")
        ))),
    }
}

pub const CATALOG: &[&str] = &["f1", "f2", "f3", "f4", "f5", "sum2", "coord1", "linear1d"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_entries_are_monotone_and_consistent() {
        for id in CATALOG {
            let f = by_id(id).unwrap();
            f.check_monotone(1000, 42).unwrap();
            f.profile.validate().unwrap();
        }
    }

    #[test]
    fn f1_values_and_derivatives() {
        let f = by_id("f1").unwrap();
        assert!((f.value(&[0.5, 0.5]) - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(f.profile.s(), 2);
    }

    #[test]
    fn coord1_ignores_second_coordinate() {
        let f = by_id("coord1").unwrap();
        assert_eq!(f.value(&[0.3, 0.1]), f.value(&[0.3, 0.9]));
        assert_eq!(f.profile.s(), 1);
    }

    #[test]
    fn f5_declares_cross_derivatives() {
        let f = by_id("f5").unwrap();
        assert!(f.profile.has_nonzero_mixed());
        let f4 = by_id("f4").unwrap();
        assert!(!f4.profile.has_nonzero_mixed());
    }

    #[test]
    fn non_monotone_function_is_rejected() {
        let f = TestFunction::constant(1, 0.0);
        // Hand-build a decreasing evaluator around the constant profile.
        let bad = TestFunction {
            eval: Arc::new(|x: &[f64]| -x[0]),
            ..f
        };
        assert!(bad.check_monotone(1000, 1).is_err());
    }
}
