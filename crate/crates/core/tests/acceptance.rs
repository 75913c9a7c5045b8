//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::cell::Cell;
use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng as _;

use isoswarm::bound::{zeta_integral, EncounterBound};
use isoswarm::cost::{coverage, information_cost, kappa_total, pair_overlap};
use isoswarm::experiments::{
    aggregate, run_swarm_size_sweep, run_view_probability, ExperimentConfig, ExperimentFile,
    SuccessCriterion,
};
use isoswarm::geometry::in_fov;
use isoswarm::optimizer::{nelder_mead, OptimizationProblem};
use isoswarm::rng::rng_from_seed;
use isoswarm::sampling::sample_pois;
use isoswarm::{
    ConeFov, ContractionParams, CostOptions, NelderMeadOptions, NoiseProfile, SpacecraftPose,
    SwarmConfig, UncertaintyEllipsoid, Vector3,
};

type Rng = isoswarm::rng::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn uniform_vec(rng: &mut Rng, half: f64) -> Vector3 {
    Vector3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

fn cross(a: Vector3, b: Vector3) -> Vector3 {
    Vector3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

fn synthetic() -> ContractionParams {
    ContractionParams {
        alpha_c: 20.0,
        alpha_e: 2.0,
        m_c_lower: 0.5,
        m_c_upper: 1.0,
        m_e_lower: 0.5,
        m_e_upper: 1.0,
        eps_c: 0.2,
        eps_e: 0.0,
        g_bar: 1.0,
        u_bar: 0.1,
        h_bar: 1.0,
        ell_bar: 1.0,
        gamma_c: 10.0,
        lambda: 1.0,
        alpha_s: 0.1,
    }
}

fn random_scene(rng: &mut Rng, max_sc: usize) -> (SwarmConfig, isoswarm::PoiSet) {
    let center = uniform_vec(rng, 500.0);
    let radii = Vector3::new(
        rng.random_range(5.0..100.0),
        rng.random_range(5.0..100.0),
        rng.random_range(5.0..100.0),
    );
    let e = UncertaintyEllipsoid::new(center, radii).unwrap();
    let pois = sample_pois(&e, rng.random_range(20..400), rng.random()).unwrap();
    let n = rng.random_range(1..=max_sc);
    let spacecraft = (0..n)
        .map(|_| {
            let dir = uniform_vec(rng, 1.0).normalized().unwrap();
            let pos = center + dir * rng.random_range(120.0..800.0);
            SpacecraftPose::new(
                pos,
                rng.random_range(0.0..TAU),
                rng.random_range(0.05..1.5),
                rng.random_range(0.1..2.5),
            )
        })
        .collect();
    (SwarmConfig::new(spacecraft, e).unwrap(), pois)
}

fn criterion_1() -> Outcome {
    let mut rng = rng_from_seed(1);
    let mut draws = Vec::with_capacity(10_000);
    while draws.len() < 10_000 {
        let apex = uniform_vec(&mut rng, 1000.0);
        let center = uniform_vec(&mut rng, 1000.0);
        if (center - apex).norm() < 1e-3 {
            continue;
        }
        let phi = rng.random_range(0.01..PI - 0.01);
        let poi = center + uniform_vec(&mut rng, 800.0);
        draws.push((apex, center, phi, poi));
    }
    let start = Instant::now();
    let mut mismatches = 0;
    let mut near_boundary = 0;
    for &(apex, center, phi, poi) in &draws {
        let fov = ConeFov::with_default_nu(apex, center, phi, 0.0).unwrap();
        let got = in_fov(poi, &fov);
        let rel = poi - apex;
        let axis = (center - apex).normalized().unwrap();
        let angle = cross(rel, axis).norm().atan2(rel.dot(axis));
        let want = rel.dot(axis) > 0.0 && angle <= phi / 2.0;
        if (angle - phi / 2.0).abs() <= 1e-12 {
            near_boundary += 1;
            continue;
        }
        if got != want {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(1),
        format!("{mismatches} mismatches in 10000 draws ({near_boundary} within 1e-12 of the surface), {elapsed:?} (limit 1 s)"),
    )
}

fn brute_overlap(a: &SpacecraftPose, b: &SpacecraftPose, h: f64) -> f64 {
    let inside = |p: &SpacecraftPose, x: f64| {
        let d = (x - p.theta).rem_euclid(TAU);
        d.min(TAU - d) <= p.nu
    };
    let n = (TAU / h).round() as usize;
    let step = TAU / n as f64;
    (0..n)
        .filter(|&k| inside(a, k as f64 * step) && inside(b, k as f64 * step))
        .count() as f64
        * step
}

fn criterion_2() -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut worst = 0.0f64;
    let mut asymmetric = 0;
    for _ in 0..10_000 {
        let p = |rng: &mut Rng| {
            SpacecraftPose::new(
                Vector3::new(1.0, 0.0, 0.0),
                rng.random_range(0.0..TAU),
                rng.random_range(1e-3..PI - 1e-3),
                1.0,
            )
        };
        let a = p(&mut rng);
        let b = p(&mut rng);
        let k = pair_overlap(&a, &b, 1e-6);
        if k != pair_overlap(&b, &a, 1e-6) {
            asymmetric += 1;
        }
        worst = worst.max((k - brute_overlap(&a, &b, 1e-4)).abs());
    }
    outcome(
        worst <= 2e-4 && asymmetric == 0,
        format!("max |exact - discretised| = {worst:.3e} rad (limit 2e-4), {asymmetric} asymmetric pairs"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = rng_from_seed(3);
    let mut bad = 0;
    for _ in 0..1000 {
        let (swarm, pois) = random_scene(&mut rng, 6);
        let b = information_cost(&swarm, &pois, &CostOptions::default()).unwrap();
        let k = kappa_total(&swarm.spacecraft, 1e-6);
        let (_, pct) = coverage(&swarm, &pois).unwrap();
        if b.information_cost.to_bits() != (k - pct).to_bits() {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("{bad} of 1000 scenes differ from kappa_total - coverage% bit-for-bit"),
    )
}

fn criterion_4() -> Outcome {
    let p = synthetic();
    let (c, t) = (0.01, 10.0);
    let noise = NoiseProfile::constant(c, t, 10_000).unwrap();
    let got = zeta_integral(t, &p, &noise).unwrap();
    let want = p.lambda * p.m_e_upper * p.ell_bar * c * ((2.0 * p.alpha_s * t).exp() - 1.0)
        / (2.0 * p.alpha_s);
    let rel = ((got - want) / want).abs();
    outcome(
        rel < 1e-6,
        format!("relative error {rel:.3e} at 10^4 intervals (limit 1e-6)"),
    )
}

fn criterion_5() -> Outcome {
    let mut zero = synthetic();
    zero.eps_c = 0.0;
    zero.u_bar = 0.0;
    let quiet = NoiseProfile::constant(0.0, 10.0, 10).unwrap();
    let r = EncounterBound::new(&zero, &quiet)
        .unwrap()
        .evaluate(1.0, 10.0, 0.0)
        .unwrap();
    let exact = r.failure_prob_upper == 0.0 && r.success_prob_lower == 1.0;

    let mut rng = rng_from_seed(5);
    let (mut draws, mut worst, mut non_monotone) = (0, 0.0f64, 0);
    while draws < 1000 {
        let p = ContractionParams {
            alpha_c: rng.random_range(0.1..50.0),
            alpha_e: rng.random_range(0.1..50.0),
            m_c_lower: rng.random_range(0.1..2.0),
            m_c_upper: 0.0,
            m_e_lower: rng.random_range(0.1..2.0),
            m_e_upper: 0.0,
            eps_c: rng.random_range(0.0..1.0),
            eps_e: rng.random_range(0.0..1.0),
            g_bar: rng.random_range(0.0..2.0),
            u_bar: rng.random_range(0.0..1.0),
            h_bar: rng.random_range(0.0..2.0),
            ell_bar: rng.random_range(0.0..2.0),
            gamma_c: rng.random_range(0.1..10.0),
            lambda: rng.random_range(0.1..2.0),
            alpha_s: rng.random_range(0.01..1.0),
        };
        let p = ContractionParams {
            m_c_upper: p.m_c_lower * rng.random_range(1.0..3.0),
            m_e_upper: p.m_e_lower * rng.random_range(1.0..3.0),
            ..p
        };
        let level = rng.random_range(0.0..1.0);
        let noise = NoiseProfile::from_fn(5.0, 50, |t| level * (1.0 + (t).sin().abs())).unwrap();
        let Ok(bound) = EncounterBound::new(&p, &noise) else {
            continue;
        };
        draws += 1;
        let t = rng.random_range(0.0..5.0);
        let v0 = rng.random_range(0.0..10.0);
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let d = 0.01 * 1.6f64.powi(k);
            let r = bound.evaluate(d, t, v0).unwrap();
            worst = worst.max((r.success_raw + r.failure_raw - 1.0).abs());
            if r.failure_prob_upper > prev {
                non_monotone += 1;
            }
            prev = r.failure_prob_upper;
        }
    }
    outcome(
        exact && worst <= 1e-12 && non_monotone == 0,
        format!(
            "zero-input failure {} success {}, max |success + failure - 1| = {worst:.3e} (limit 1e-12), {non_monotone} monotonicity violations",
            r.failure_prob_upper, r.success_prob_lower
        ),
    )
}

fn criterion_6() -> Outcome {
    let p = synthetic();
    let noise = NoiseProfile::constant(0.01, 10.0, 1000).unwrap();
    let bound = EncounterBound::new(&p, &noise).unwrap();
    let mut worst = 0.0f64;
    for target in [0.1, 0.5, 0.9, 0.99] {
        let d = bound
            .radius_for_success_probability(target, 10.0, 1.0)
            .unwrap();
        let got = bound.evaluate(d, 10.0, 1.0).unwrap().success_prob_lower;
        worst = worst.max((got - target).abs());
    }
    outcome(
        worst <= 1e-9,
        format!("max |p(D(p)) - p| = {worst:.3e} over p in {{0.1, 0.5, 0.9, 0.99}} (limit 1e-9)"),
    )
}

fn criterion_7() -> Outcome {
    let calls = Cell::new(0usize);
    let mut rosen = OptimizationProblem::new(2, |x: &[f64]| {
        calls.set(calls.get() + 1);
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    });
    let opts = NelderMeadOptions {
        f_tolerance: 1e-16,
        x_tolerance: 1e-12,
        max_iterations: Some(5000),
        ..Default::default()
    };
    let r = nelder_mead(&mut rosen, &[-1.2, 1.0], &opts).unwrap();
    let evals = calls.get();
    let rosen_ok = r.best_value < 1e-10 && evals <= 5000;

    let outside = Cell::new(0usize);
    let mut wave = OptimizationProblem::new(2, |x: &[f64]| {
        if !(0.0..TAU).contains(&x[1]) {
            outside.set(outside.get() + 1);
        }
        (x[0] - 2.0).powi(2) + 1.0 - (x[1] - 0.2).cos()
    })
    .with_theta_indices(vec![1]);
    let w = nelder_mead(
        &mut wave,
        &[0.0, 6.0],
        &NelderMeadOptions {
            initial_simplex_scale: 0.3,
            ..Default::default()
        },
    )
    .unwrap();
    let dtheta = (w.best_point[1] - 0.2).abs();
    let wave_ok = w.converged && dtheta < 1e-3 && outside.get() == 0;
    outcome(
        rosen_ok && wave_ok,
        format!(
            "Rosenbrock f = {:.3e} after {evals} evaluations (limits 1e-10, 5000); wrapped sinusoid |theta - 0.2| = {dtheta:.2e}, {} evaluations outside [0, 2pi)",
            r.best_value,
            outside.get()
        ),
    )
}

fn criterion_8() -> Outcome {
    let e = UncertaintyEllipsoid::sphere(Vector3::zeros(), 1.0).unwrap();
    let mut ok = 0;
    for seed in 0..100 {
        let pois = sample_pois(&e, 5000, seed).unwrap();
        let frac = pois.points.iter().filter(|p| p.norm() <= 0.5).count() as f64 / 5000.0;
        if (0.105..=0.145).contains(&frac) {
            ok += 1;
        }
    }
    outcome(
        ok >= 95,
        format!("{ok} of 100 seeds inside [0.105, 0.145] (need 95)"),
    )
}

fn bundled(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name);
    ExperimentFile::from_json(&std::fs::read_to_string(path).unwrap())
        .unwrap()
        .experiment
}

fn view_probability_gap(criterion: SuccessCriterion) -> (f64, f64) {
    let ExperimentConfig::ViewProbability(mut cfg) = bundled("experiment1.json") else {
        unreachable!()
    };
    cfg.trials_per_radius = 50;
    cfg.sphere_radii = vec![50.0, 500.0, 1000.0];
    cfg.success_criterion = criterion;
    let (mut p50, mut p1000) = (0.0, 0.0);
    for seed in 1..=5 {
        cfg.master_seed = seed;
        let s = aggregate(&run_view_probability(&cfg).unwrap()).unwrap();
        p50 += s.cell(50.0, 1).unwrap().p_pct.unwrap() / 5.0;
        p1000 += s.cell(1000.0, 1).unwrap().p_pct.unwrap() / 5.0;
    }
    (p50, p1000)
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let (p50, p1000) = view_probability_gap(SuccessCriterion::SphereCenter);
    let (t50, t1000) = view_probability_gap(SuccessCriterion::SampledTruth);
    outcome(
        p50 - p1000 >= 10.0,
        format!(
            "sphere-centre p(50) = {p50:.1}%, p(1000) = {p1000:.1}%, gap {:.1} pp (need 10); sampled-truth p(50) = {t50:.1}%, p(1000) = {t1000:.1}% (informational), {:?}",
            p50 - p1000,
            start.elapsed()
        ),
    )
}

fn swarm_sweep() -> (Vec<f64>, Vec<f64>, Duration) {
    let ExperimentConfig::SwarmSize(mut cfg) = bundled("experiment2.json") else {
        unreachable!()
    };
    cfg.trials = 5;
    cfg.sphere_radius = 100.0;
    cfg.n_pois = 5000;
    cfg.spacecraft_range = [1, 7];
    let start = Instant::now();
    let s = aggregate(&run_swarm_size_sweep(&cfg).unwrap()).unwrap();
    let cov = (1..=7)
        .map(|n| s.cell(100.0, n).unwrap().coverage_mean)
        .collect();
    let neg = (1..=7)
        .map(|n| s.cell(100.0, n).unwrap().neg_info_mean)
        .collect();
    (cov, neg, start.elapsed())
}

fn criterion_10(cov: &[f64], elapsed: Duration) -> Outcome {
    let gain = cov[6] - cov[0];
    outcome(
        gain >= 25.0 && cov[4] >= 80.0,
        format!(
            "coverage N=1 {:.1}%, N=5 {:.1}%, N=7 {:.1}%; gain {gain:.1} pp (need 25), N=5 (need 80%), sweep {elapsed:?}",
            cov[0], cov[4], cov[6]
        ),
    )
}

fn criterion_11(neg: &[f64]) -> Outcome {
    let mean_1_5 = neg[..5].iter().sum::<f64>() / 5.0;
    outcome(
        neg[6] < mean_1_5,
        format!(
            "-I at N=7 {:.2} vs mean over N=1..5 {mean_1_5:.2}; per N {:?}",
            neg[6],
            neg.iter()
                .map(|v| (v * 100.0).round() / 100.0)
                .collect::<Vec<_>>()
        ),
    )
}

fn criterion_12() -> Outcome {
    let mut rng = rng_from_seed(12);
    let mut violations = 0;
    let mut checks = 0;
    for _ in 0..100 {
        let (swarm, pois) = random_scene(&mut rng, 8);
        let mut prev = 0;
        for k in 1..=swarm.len() {
            let sub = SwarmConfig::new(swarm.spacecraft[..k].to_vec(), swarm.ellipsoid).unwrap();
            let count = coverage(&sub, &pois).unwrap().0.len();
            if count < prev {
                violations += 1;
            }
            prev = count;
            checks += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} decreases over {checks} appended spacecraft in 100 scenes"),
    )
}

fn main() {
    let (cov, neg, elapsed) = swarm_sweep();
    let results = [
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
        (10, criterion_10(&cov, elapsed)),
        (11, criterion_11(&neg)),
        (12, criterion_12()),
    ];
    let mut failed = 0;
    for (id, r) in &results {
        println!(
            "criterion {id:>2}: {}  {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
