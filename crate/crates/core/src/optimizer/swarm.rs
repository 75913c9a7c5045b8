use serde::{Deserialize, Serialize};

use crate::cost::{
    expected_information_cost, information_cost, CostBreakdown, CostOptions, SwarmConfig,
};
use crate::error::{Error, Result};
use crate::optimizer::nelder_mead::{
    nelder_mead_with_steps, NelderMeadOptions, OptResult, OptimizationProblem, TraceRecord,
};
use crate::sampling::PoiSet;
use crate::scalar::Scalar;

/// Objective value returned when a spacecraft sits on the ellipsoid centre.
pub const DEGENERATE_PENALTY: f64 = 1e9;
/// Distance from the centre below which a position counts as degenerate.
pub const DEGENERATE_RADIUS: f64 = 1e-6;

/// Which cost the optimizer minimises.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CostMode<T> {
    #[default]
    Deterministic,
    /// Monte Carlo expectation under Gaussian position noise.
    Expected {
        stddev: T,
        n_samples: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug)]
pub struct SwarmOptimization<T> {
    pub config: SwarmConfig<T>,
    /// Deterministic cost of the final configuration.
    pub cost: CostBreakdown<T>,
    pub result: OptResult<T>,
}

/// Packs a swarm as `(x − c_x, y − c_y, z − c_z, θ)` per spacecraft.
///
/// Positions are stored relative to the ellipsoid centre so the initial simplex
/// scale tracks the distance to the ellipsoid rather than the absolute frame.
pub fn pack_swarm<T: Scalar>(swarm: &SwarmConfig<T>) -> Vec<T> {
    let c = swarm.ellipsoid.center;
    swarm
        .spacecraft
        .iter()
        .flat_map(|p| {
            let r = p.position - c;
            [r.x, r.y, r.z, p.theta]
        })
        .collect()
}

/// Initial simplex edges for a packed swarm.
///
/// Position coordinates use `max(|x_i|, r_k) × scale`, where `r_k` is the
/// spacecraft's distance from the centre, so a spacecraft sitting on an axis
/// still moves by a useful amount along the other two. θ uses `max(|θ|, 1) × scale`.
pub fn swarm_simplex_steps<T: Scalar>(x: &[T], scale: T) -> Vec<T> {
    x.chunks_exact(4)
        .flat_map(|c| {
            let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2])
                .sqrt()
                .max(T::one());
            [
                c[0].abs().max(r) * scale,
                c[1].abs().max(r) * scale,
                c[2].abs().max(r) * scale,
                c[3].abs().max(T::one()) * scale,
            ]
        })
        .collect()
}

/// Inverse of [`pack_swarm`]; ν and φ come from `template`.
pub fn unpack_swarm_into<T: Scalar>(x: &[T], template: &SwarmConfig<T>, out: &mut SwarmConfig<T>) {
    let c = template.ellipsoid.center;
    for ((dst, src), chunk) in out
        .spacecraft
        .iter_mut()
        .zip(&template.spacecraft)
        .zip(x.chunks_exact(4))
    {
        dst.position = c + crate::geometry::Vector3::new(chunk[0], chunk[1], chunk[2]);
        dst.theta = crate::scalar::wrap_angle(chunk[3]);
        dst.nu = src.nu;
        dst.phi = src.phi;
    }
}

fn is_degenerate<T: Scalar>(swarm: &SwarmConfig<T>) -> bool {
    let c = swarm.ellipsoid.center;
    swarm
        .spacecraft
        .iter()
        .any(|p| (p.position - c).norm() < T::lit(DEGENERATE_RADIUS))
}

fn evaluate<T: Scalar>(
    swarm: &SwarmConfig<T>,
    pois: &PoiSet<T>,
    mode: &CostMode<T>,
    cost_opts: &CostOptions<T>,
) -> T {
    if is_degenerate(swarm) {
        return T::lit(DEGENERATE_PENALTY);
    }
    let value = match *mode {
        CostMode::Deterministic => {
            information_cost(swarm, pois, cost_opts).map(|b| b.information_cost)
        }
        CostMode::Expected {
            stddev,
            n_samples,
            seed,
        } => expected_information_cost(swarm, pois, stddev, n_samples, seed, cost_opts),
    };
    match value {
        Ok(v) => v,
        Err(Error::DegenerateGeometry(_)) => T::lit(DEGENERATE_PENALTY),
        Err(_) => T::nan(),
    }
}

/// Minimises the information cost (or its expectation) over every
/// spacecraft position and θ, starting from `initial`.
pub fn optimize_swarm<T: Scalar>(
    pois: &PoiSet<T>,
    n_spacecraft: usize,
    initial: &SwarmConfig<T>,
    opts: &NelderMeadOptions<T>,
    cost_mode: CostMode<T>,
    cost_opts: &CostOptions<T>,
) -> Result<SwarmOptimization<T>> {
    optimize_swarm_traced(
        pois,
        n_spacecraft,
        initial,
        opts,
        cost_mode,
        cost_opts,
        |_| {},
    )
}

pub fn optimize_swarm_traced<T: Scalar>(
    pois: &PoiSet<T>,
    n_spacecraft: usize,
    initial: &SwarmConfig<T>,
    opts: &NelderMeadOptions<T>,
    cost_mode: CostMode<T>,
    cost_opts: &CostOptions<T>,
    trace: impl FnMut(&TraceRecord<T>),
) -> Result<SwarmOptimization<T>> {
    if initial.len() != n_spacecraft {
        return Err(Error::InvalidParameter(format!(
            "initial swarm has {} spacecraft, expected {n_spacecraft}",
            initial.len()
        )));
    }
    initial.validate()?;
    if pois.is_empty() {
        return Err(Error::Empty("POI set is empty".into()));
    }
    let x0 = pack_swarm(initial);
    let mut scratch = initial.clone();
    let mut problem = OptimizationProblem::swarm(n_spacecraft, |x: &[T]| {
        unpack_swarm_into(x, initial, &mut scratch);
        evaluate(&scratch, pois, &cost_mode, cost_opts)
    });
    let steps = swarm_simplex_steps(&x0, opts.initial_simplex_scale);
    let result = nelder_mead_with_steps(&mut problem, &x0, &steps, opts, trace)?;

    let mut config = initial.clone();
    unpack_swarm_into(&result.best_point, initial, &mut config);
    let cost = information_cost(&config, pois, cost_opts)?;
    Ok(SwarmOptimization {
        config,
        cost,
        result,
    })
}
