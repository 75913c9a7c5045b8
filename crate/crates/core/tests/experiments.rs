use std::f64::consts::FRAC_PI_3;

use isoswarm::cost::information_cost;
use isoswarm::experiments::*;
use isoswarm::geometry::visible;
use isoswarm::sampling::sample_pois;
use isoswarm::{
    CostOptions, NelderMeadOptions, SpacecraftPose, SwarmConfig, UncertaintyEllipsoid, Vector3,
};

fn view_config() -> ViewProbabilityConfig {
    ViewProbabilityConfig {
        iso_terminal_position: [1.8804e8, 2.2023e8, 1.0029e8],
        sphere_radii: vec![50.0, 500.0],
        trials_per_radius: 4,
        initial_distance_range: [100, 600],
        n_pois: 400,
        master_seed: 21,
        aperture_phi: FRAC_PI_3,
        nu: None,
        success_criterion: SuccessCriterion::SphereCenter,
        kappa_unit: KappaUnit::Radians,
        optimizer: NelderMeadOptions {
            max_iterations: Some(150),
            ..Default::default()
        },
    }
}

fn pose(row: &isoswarm::io::PoseRow) -> SpacecraftPose {
    SpacecraftPose::new(
        Vector3::new(row.x, row.y, row.z),
        row.theta,
        row.nu,
        row.phi,
    )
}

#[test]
fn stored_records_are_self_consistent() {
    let cfg = view_config();
    let report = run_view_probability(&cfg).unwrap();
    assert_eq!(report.trials.len(), 8);
    let center = Vector3::from_array(cfg.iso_terminal_position);
    for t in &report.trials {
        let swarm = SwarmConfig::new(
            t.final_poses.iter().map(pose).collect(),
            UncertaintyEllipsoid::sphere(center, t.radius).unwrap(),
        )
        .unwrap();
        // success flag recomputes from the final pose
        let fov = swarm.spacecraft[0].fov(center).unwrap();
        assert_eq!(t.success, Some(visible(center, &fov, center)));
        // coverage recomputes from the stored POI seed
        let pois = sample_pois(&swarm.ellipsoid, cfg.n_pois, t.poi_seed).unwrap();
        let c = information_cost(&swarm, &pois, &CostOptions::default()).unwrap();
        assert_eq!(c.coverage_pct, t.coverage_pct);
        assert_eq!(-c.information_cost, t.neg_info_cost);
        let start = t.initial_poses[0];
        let dist = (Vector3::new(start.x, start.y, start.z) - center).norm();
        assert!(
            (dist - dist.round()).abs() < 1e-6 * dist && (100.0..=600.0).contains(&dist.round()),
            "{dist}"
        );
    }
}

#[test]
fn same_seed_same_report() {
    let cfg = view_config();
    assert_eq!(
        run_view_probability(&cfg).unwrap(),
        run_view_probability(&cfg).unwrap()
    );
    let mut other = cfg.clone();
    other.master_seed += 1;
    assert_ne!(
        run_view_probability(&other).unwrap().trials,
        run_view_probability(&cfg).unwrap().trials
    );
}

#[test]
fn report_json_reaggregates_bit_identically() {
    let mut cfg = view_config();
    cfg.success_criterion = SuccessCriterion::SampledTruth;
    let report = run_view_probability(&cfg).unwrap();
    let dir = tempfile::TempDir::new().unwrap();
    let summary = write_outputs(dir.path(), &report).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let back: ExperimentReport = serde_json::from_value(v["report"].clone()).unwrap();
    assert_eq!(back, report);
    assert_eq!(aggregate(&back).unwrap(), summary);
    assert!(report.trials.iter().all(|t| t.truth.is_some()));
}

#[test]
fn tiny_sphere_is_always_viewed() {
    let mut cfg = view_config();
    cfg.sphere_radii = vec![1e-3];
    cfg.trials_per_radius = 1;
    let r = aggregate(&run_view_probability(&cfg).unwrap()).unwrap();
    assert_eq!(r.cells[0].p_pct, Some(100.0));
}

#[test]
fn more_spacecraft_see_more() {
    let cfg = SwarmSizeConfig {
        sphere_radius: 100.0,
        n_pois: 1000,
        spacecraft_range: [1, 3],
        trials: 2,
        master_seed: 8,
        aperture_phi: FRAC_PI_3,
        nu: None,
        start_distance_factor: [3.0, 6.0],
        kappa_unit: KappaUnit::Degrees,
        optimizer: NelderMeadOptions::default(),
    };
    let s = aggregate(&run_swarm_size_sweep(&cfg).unwrap()).unwrap();
    let one = s.cell(100.0, 1).unwrap().coverage_mean;
    let three = s.cell(100.0, 3).unwrap().coverage_mean;
    assert!(one <= 55.0 && three > one + 25.0, "{one} {three}");
}
