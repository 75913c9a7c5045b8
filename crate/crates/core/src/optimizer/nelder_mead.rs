use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{wrap_angle, Scalar};

/// Simplex coefficients and stopping rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct NelderMeadOptions<T> {
    pub reflection: T,
    pub expansion: T,
    pub contraction: T,
    pub shrink: T,
    /// Stop when `max f − min f` over the simplex drops below this.
    pub f_tolerance: T,
    /// Stop when the largest vertex distance from the best vertex drops below this.
    pub x_tolerance: T,
    /// `None` means `200 × dimension`.
    pub max_iterations: Option<usize>,
    /// Initial edge along axis `i` is `max(|x0_i|, 1) × initial_simplex_scale`.
    pub initial_simplex_scale: T,
}

impl<T: Scalar> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self {
            reflection: T::one(),
            expansion: T::lit(2.0),
            contraction: T::lit(0.5),
            shrink: T::lit(0.5),
            f_tolerance: T::lit(1e-8),
            x_tolerance: T::lit(1e-8),
            max_iterations: None,
            initial_simplex_scale: T::lit(0.05),
        }
    }
}

impl<T: Scalar> NelderMeadOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.reflection > T::zero()
            && self.expansion > T::one()
            && self.contraction > T::zero()
            && self.contraction < T::one()
            && self.shrink > T::zero()
            && self.shrink < T::one()
            && self.f_tolerance >= T::zero()
            && self.x_tolerance >= T::zero()
            && self.initial_simplex_scale > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "Nelder-Mead coefficients need reflection > 0, expansion > 1 > contraction > 0, 0 < shrink < 1: {self:?}"
            )))
        }
    }
}

/// A minimisation problem over `dimension` reals, some of which are angles.
pub struct OptimizationProblem<F> {
    pub dimension: usize,
    pub objective: F,
    /// Coordinates wrapped into `[0, 2π)` after every candidate is generated.
    pub theta_indices: Vec<usize>,
}

impl<F> OptimizationProblem<F> {
    pub fn new(dimension: usize, objective: F) -> Self {
        Self {
            dimension,
            objective,
            theta_indices: Vec::new(),
        }
    }

    pub fn with_theta_indices(mut self, theta_indices: Vec<usize>) -> Self {
        self.theta_indices = theta_indices;
        self
    }

    /// Swarm layout: `(x, y, z, θ)` per spacecraft, θ at `4k + 3`.
    pub fn swarm(n_spacecraft: usize, objective: F) -> Self {
        Self {
            dimension: 4 * n_spacecraft,
            objective,
            theta_indices: (0..n_spacecraft).map(|k| 4 * k + 3).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FunctionTolerance,
    SimplexTolerance,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult<T> {
    pub best_point: Vec<T>,
    /// Objective value last returned for `best_point`.
    pub best_value: T,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Exact number of objective calls.
    pub evaluation_count: usize,
}

/// One line of the optional convergence trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<T> {
    pub iteration: usize,
    pub best_value: T,
    pub simplex_diameter: T,
}

struct Evaluator<'a, T, F> {
    objective: &'a mut F,
    theta_indices: &'a [usize],
    count: usize,
    _t: std::marker::PhantomData<T>,
}

impl<T: Scalar, F: FnMut(&[T]) -> T> Evaluator<'_, T, F> {
    fn wrap(&self, x: &mut [T]) {
        for &i in self.theta_indices {
            x[i] = wrap_angle(x[i]);
        }
    }

    fn eval(&mut self, x: &[T]) -> Result<T> {
        self.count += 1;
        let v = (self.objective)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ObjectiveDomain {
                point: x.iter().map(|c| c.to_f64_lossy()).collect(),
                value: v.to_f64_lossy(),
            })
        }
    }
}

/// Affine combination `a + s·(b − a)` with angle wrapping.
fn towards<T: Scalar>(a: &[T], b: &[T], s: T) -> Vec<T> {
    a.iter()
        .zip(b)
        .map(|(&ai, &bi)| ai + s * (bi - ai))
        .collect()
}

/// Minimises the problem objective from `x0`.
pub fn nelder_mead<T, F>(
    problem: &mut OptimizationProblem<F>,
    x0: &[T],
    opts: &NelderMeadOptions<T>,
) -> Result<OptResult<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    nelder_mead_traced(problem, x0, opts, |_| {})
}

/// [`nelder_mead`] with a callback invoked once per iteration.
pub fn nelder_mead_traced<T, F, C>(
    problem: &mut OptimizationProblem<F>,
    x0: &[T],
    opts: &NelderMeadOptions<T>,
    trace: C,
) -> Result<OptResult<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
    C: FnMut(&TraceRecord<T>),
{
    let steps: Vec<T> = x0
        .iter()
        .map(|x| x.abs().max(T::one()) * opts.initial_simplex_scale)
        .collect();
    nelder_mead_with_steps(problem, x0, &steps, opts, trace)
}

/// Like [`nelder_mead_traced`] but with explicit initial edge lengths, one per
/// coordinate. `opts.initial_simplex_scale` is ignored.
pub fn nelder_mead_with_steps<T, F, C>(
    problem: &mut OptimizationProblem<F>,
    x0: &[T],
    steps: &[T],
    opts: &NelderMeadOptions<T>,
    mut trace: C,
) -> Result<OptResult<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
    C: FnMut(&TraceRecord<T>),
{
    opts.validate()?;
    let n = problem.dimension;
    if n == 0 || x0.len() != n || steps.len() != n {
        return Err(Error::InvalidParameter(format!(
            "starting point has length {} and {} steps but the problem dimension is {n}",
            x0.len(),
            steps.len()
        )));
    }
    if steps.iter().any(|s| !(s.is_finite() && *s != T::zero())) {
        return Err(Error::InvalidParameter(
            "initial simplex steps must be finite and non-zero".into(),
        ));
    }
    if let Some(&bad) = problem.theta_indices.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParameter(format!(
            "angle index {bad} out of range"
        )));
    }
    let max_iterations = opts.max_iterations.unwrap_or(200 * n);
    let mut ev = Evaluator {
        objective: &mut problem.objective,
        theta_indices: &problem.theta_indices,
        count: 0,
        _t: std::marker::PhantomData,
    };

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    ev.wrap(&mut start);
    let f0 = ev.eval(&start)?;
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        v[i] += steps[i];
        ev.wrap(&mut v);
        let f = ev.eval(&v)?;
        simplex.push((v, f));
    }

    let mut iterations = 0;
    let termination = loop {
        // stable sort keeps the earlier vertex first on ties
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let f_best = simplex[0].1;
        let f_worst = simplex[n].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .fold(T::zero(), |s, x| s + x)
                    .sqrt()
            })
            .fold(T::zero(), T::max);
        trace(&TraceRecord {
            iteration: iterations,
            best_value: f_best,
            simplex_diameter: diameter,
        });
        if f_worst - f_best < opts.f_tolerance {
            break Termination::FunctionTolerance;
        }
        if diameter < opts.x_tolerance {
            break Termination::SimplexTolerance;
        }
        if iterations >= max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let inv_n = T::one() / T::from_usize(n).unwrap();
        let mut centroid = vec![T::zero(); n];
        for (v, _) in &simplex[..n] {
            for (c, &x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c *= inv_n);

        let f_second_worst = simplex[n - 1].1;
        let worst = simplex[n].0.clone();

        let mut xr = towards(&centroid, &worst, -opts.reflection);
        ev.wrap(&mut xr);
        let fr = ev.eval(&xr)?;

        if fr < f_best {
            let mut xe = towards(&centroid, &xr, opts.expansion);
            ev.wrap(&mut xe);
            let fe = ev.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second_worst {
            simplex[n] = (xr, fr);
            continue;
        }
        if fr < f_worst {
            let mut xc = towards(&centroid, &xr, opts.contraction);
            ev.wrap(&mut xc);
            let fc = ev.eval(&xc)?;
            if fc <= fr {
                simplex[n] = (xc, fc);
                continue;
            }
        } else {
            let mut xc = towards(&centroid, &worst, opts.contraction);
            ev.wrap(&mut xc);
            let fc = ev.eval(&xc)?;
            if fc < f_worst {
                simplex[n] = (xc, fc);
                continue;
            }
        }

        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut v = towards(&best, &vertex.0, opts.shrink);
            ev.wrap(&mut v);
            let f = ev.eval(&v)?;
            *vertex = (v, f);
        }
    };

    let evaluation_count = ev.count;
    let (best_point, best_value) = simplex.swap_remove(0);
    Ok(OptResult {
        best_point,
        best_value,
        iterations,
        converged: termination != Termination::MaxIterations,
        termination,
        evaluation_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;
    use std::f64::consts::TAU;

    #[test]
    fn sphere_function() {
        let mut p = OptimizationProblem::new(4, |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>());
        let opts = NelderMeadOptions {
            f_tolerance: 1e-14,
            x_tolerance: 1e-10,
            ..Default::default()
        };
        let r = nelder_mead(&mut p, &[1.0; 4], &opts).unwrap();
        assert!(r.best_value < 1e-10, "{r:?}");
        assert!(r.iterations <= 500);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock() {
        let calls = Cell::new(0usize);
        let mut p = OptimizationProblem::new(2, |x: &[f64]| {
            calls.set(calls.get() + 1);
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        });
        let opts = NelderMeadOptions {
            f_tolerance: 1e-16,
            x_tolerance: 1e-10,
            max_iterations: Some(5000),
            ..Default::default()
        };
        let r = nelder_mead(&mut p, &[-1.2, 1.0], &opts).unwrap();
        assert!(
            (r.best_point[0] - 1.0).abs() < 1e-6 && (r.best_point[1] - 1.0).abs() < 1e-6,
            "{r:?}"
        );
        assert!(r.evaluation_count <= 5000);
        assert_eq!(r.evaluation_count, calls.get());
    }

    #[test]
    fn wrapped_angle_converges_and_stays_in_range() {
        let seen_outside = Cell::new(false);
        let mut p = OptimizationProblem::new(1, |x: &[f64]| {
            if !(0.0..TAU).contains(&x[0]) {
                seen_outside.set(true);
            }
            1.0 - (x[0] - 5.5).cos()
        })
        .with_theta_indices(vec![0]);
        let opts = NelderMeadOptions {
            initial_simplex_scale: 0.3,
            ..Default::default()
        };
        let r = nelder_mead(&mut p, &[6.0], &opts).unwrap();
        assert!((r.best_point[0] - 5.5).abs() < 1e-3, "{r:?}");
        assert!(!seen_outside.get());
    }

    #[test]
    fn best_value_is_non_increasing_and_deterministic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 1.0).abs() + 0.1 * (5.0 * x[0]).sin();
        let mut values = Vec::new();
        let mut p = OptimizationProblem::new(2, f);
        let r1 = nelder_mead_traced(&mut p, &[0.0, 0.0], &NelderMeadOptions::default(), |t| {
            values.push(t.best_value)
        })
        .unwrap();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
        let mut p = OptimizationProblem::new(2, f);
        let r2 = nelder_mead(&mut p, &[0.0, 0.0], &NelderMeadOptions::default()).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.best_value, f(&r1.best_point));
    }

    #[test]
    fn non_finite_objective_reports_point() {
        let mut p =
            OptimizationProblem::new(2, |x: &[f64]| if x[0] > 1.02 { f64::NAN } else { x[0] });
        match nelder_mead(&mut p, &[1.0, 0.0], &NelderMeadOptions::default()) {
            Err(Error::ObjectiveDomain { point, .. }) => assert!(point[0] > 1.02),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        let mut p = OptimizationProblem::new(2, |x: &[f64]| x[0]);
        assert!(nelder_mead(&mut p, &[1.0], &NelderMeadOptions::default()).is_err());
        let bad = NelderMeadOptions {
            expansion: 0.5,
            ..Default::default()
        };
        assert!(nelder_mead(&mut p, &[1.0, 1.0], &bad).is_err());
        let mut q = OptimizationProblem::new(2, |x: &[f64]| x[0]).with_theta_indices(vec![2]);
        assert!(nelder_mead(&mut q, &[1.0, 1.0], &NelderMeadOptions::default()).is_err());
    }

    #[test]
    fn max_iterations_default_scales_with_dimension() {
        let mut p = OptimizationProblem::new(3, |x: &[f64]| -(x[0] + x[1] + x[2]));
        let r = nelder_mead(&mut p, &[0.0; 3], &NelderMeadOptions::default()).unwrap();
        assert_eq!(r.termination, Termination::MaxIterations);
        assert_eq!(r.iterations, 600);
        assert!(!r.converged);
    }

    #[test]
    fn swarm_layout() {
        let p = OptimizationProblem::swarm(3, |_: &[f64]| 0.0);
        assert_eq!(p.dimension, 12);
        assert_eq!(p.theta_indices, vec![3, 7, 11]);
    }

    #[test]
    fn works_in_f32() {
        let mut p =
            OptimizationProblem::new(2, |x: &[f32]| (x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2));
        let r = nelder_mead(
            &mut p,
            &[0.0f32, 0.0],
            &NelderMeadOptions {
                f_tolerance: 1e-10,
                x_tolerance: 1e-5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.best_point[0] - 1.0).abs() < 1e-2 && (r.best_point[1] - 2.0).abs() < 1e-2);
    }
}
