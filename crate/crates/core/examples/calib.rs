//! Scratch calibration probe (not part of the deliverable test suite).

use artaxis::cloud::{extract_motion_part, filter_cloud, refine_body_obb, FilterParams};
use artaxis::config::{ExperimentConfig, TaskKind};
use artaxis::geom::{JointKind, Vec2};
use artaxis::pipeline::PipelineParams;
use artaxis::policy::{direction_error_deg, pivot_error_m};
use artaxis::sim::{sample_cloud, ArticulatedScene, BoxDims, ScenePose, SensorModel};
use artaxis::{estimate_prismatic, estimate_revolute, run_trial, PolicyConfig, PolicyMode};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pose_jitter(rng: &mut ChaCha8Rng) -> ScenePose {
    ScenePose {
        offset: Vec2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)),
        yaw: rng.random_range(-0.175..0.175),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn criterion4(door_width: f64, q_st_deg: f64, q_st_drawer: f64, eps: usize) {
    let mut params = PipelineParams::default();
    params.filter = FilterParams::new(0.05, eps);
    params.extraction.refilter = FilterParams::new(0.05, 3);
    let sensor = SensorModel { surface_density: 2000.0, noise_sigma: 0.005, ..SensorModel::default() };
    let cluster = FilterParams::new(0.05, 1);

    let mut dir_errs = Vec::new();
    let mut pivot_errs = Vec::new();
    let mut sign_ok = 0usize;
    let mut fails = 0usize;
    let n = 100;
    for seed in 0..n as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // drawer: fixed dims + pose jitter
        let mut scene = ArticulatedScene::drawer(
            BoxDims::new(0.8, 0.6, 0.8),
            BoxDims::new(0.7, 0.55, 0.28),
            0.45,
            0.52,
            pose_jitter(&mut rng),
        );
        let f0 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 1));
        let body = refine_body_obb(&filter_cloud(&f0, &params.filter), &params.filter).unwrap();
        scene.set_joint_state(q_st_drawer);
        let f1 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 2));
        scene.set_joint_state(0.10);
        let f2 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 3));
        let truth = scene.true_axis();
        let m1 = extract_motion_part(&filter_cloud(&f1, &params.filter), &body, &params.extraction);
        let m2 = extract_motion_part(&filter_cloud(&f2, &params.filter), &body, &params.extraction);
        match (m1, m2) {
            (Ok(a), Ok(b)) => {
                let oa = refine_body_obb(&a, &cluster).unwrap();
                let ob = refine_body_obb(&b, &cluster).unwrap();
                match estimate_prismatic(&oa, &ob, 0.01) {
                    Ok(est) => dir_errs.push(direction_error_deg(&est.axis, &truth)),
                    Err(_) => fails += 1,
                }
            }
            _ => fails += 1,
        }
    }
    println!(
        "C4 prismatic (st={q_st_drawer}, eps={eps}): median dir err {:.3} deg (p90 {:.3}), fails {}",
        median(dir_errs.clone()),
        {
            let mut v = dir_errs.clone();
            v.sort_by(|a, b| a.total_cmp(b));
            v[(v.len() * 9 / 10).min(v.len() - 1)]
        },
        fails
    );

    let mut fails = 0usize;
    for seed in 0..n as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let mut scene = ArticulatedScene::door(
            BoxDims::new(0.9, 0.5, 0.9),
            door_width,
            false,
            85f64.to_radians(),
            pose_jitter(&mut rng),
        );
        let f0 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 1));
        let body = refine_body_obb(&filter_cloud(&f0, &params.filter), &params.filter).unwrap();
        scene.set_joint_state(q_st_deg.to_radians());
        let f1 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 2));
        scene.set_joint_state(15f64.to_radians());
        let f2 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 3));
        let truth = scene.true_axis();
        let m1 = extract_motion_part(&filter_cloud(&f1, &params.filter), &body, &params.extraction);
        let m2 = extract_motion_part(&filter_cloud(&f2, &params.filter), &body, &params.extraction);
        match (m1, m2) {
            (Ok(a), Ok(b)) => {
                let oa = refine_body_obb(&a, &cluster).unwrap();
                let ob = refine_body_obb(&b, &cluster).unwrap();
                match estimate_revolute(&oa, &ob, 1e-3) {
                    Ok(est) => {
                        pivot_errs.push(pivot_error_m(&est.axis, &truth));
                        if est.axis.direction.dot(truth.direction) > 0.99 {
                            sign_ok += 1;
                        }
                    }
                    Err(e) => {
                        fails += 1;
                        if seed < 3 {
                            println!("  revolute est fail seed {seed}: {e}");
                        }
                    }
                }
            }
            _ => fails += 1,
        }
    }
    println!(
        "C4 revolute (w={door_width}, st={q_st_deg} deg): median pivot err {:.4} m ({:.2}% of width), p90 {:.4}, sign {}/{}, fails {}",
        median(pivot_errs.clone()),
        100.0 * median(pivot_errs.clone()) / door_width,
        {
            let mut v = pivot_errs.clone();
            v.sort_by(|a, b| a.total_cmp(b));
            v[(v.len() * 9 / 10).min(v.len() - 1)]
        },
        sign_ok,
        n,
        fails
    );
}

fn criterion6(task: TaskKind, trials: usize, targets: &[f64]) {
    let mut cfg = ExperimentConfig::for_task(task);
    cfg.trials_per_target = trials;
    cfg.targets = targets.to_vec();
    let t0 = std::time::Instant::now();
    for &target in &cfg.targets {
        let mut line = format!("C6 {} target {:>5}:", task.as_str(), target);
        for mode in [PolicyMode::ClosedLoop, PolicyMode::OpenLoop] {
            let reports = artaxis::bench::run_cell(&cfg, target, mode);
            let ok = reports.iter().filter(|r| r.success).count();
            let slips = reports.iter().filter(|r| r.grasp_lost).count();
            line.push_str(&format!(
                "  {}={:>3}/{} (slip {:>3})",
                mode.as_str(),
                ok,
                trials,
                slips
            ));
        }
        println!("{line}");
    }
    println!("C6 {} elapsed {:?}", task.as_str(), t0.elapsed());
}

fn criterion5_check() {
    // noise-free closed-loop door: per-step pivot error trace
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let scene = artaxis::sim::random_door(&mut rng, &artaxis::sim::SceneRanges::default());
        let sensor = SensorModel { surface_density: 800.0, ..SensorModel::default() };
        let policy = PolicyConfig {
            mode: PolicyMode::ClosedLoop,
            target: 70f64.to_radians(),
            ..PolicyConfig::default()
        };
        let report = run_trial(scene, &sensor, &policy, &PipelineParams::default(), 0.02, seed);
        let errs: Vec<String> = report
            .per_step
            .iter()
            .filter_map(|r| r.pivot_error_m.map(|e| format!("{e:.2e}")))
            .collect();
        println!(
            "C5 seed {seed}: success={} steps={} errors=[{}]",
            report.success,
            report.steps_used,
            errs.join(", ")
        );
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(|s| s.as_str()).unwrap_or("all");
    if what == "c4" || what == "all" {
        criterion4(0.7, 6.0, 0.03, 8);
        criterion4(0.7, 6.0, 0.03, 10);
        criterion4(0.8, 8.0, 0.03, 10);
        criterion4(0.8, 8.0, 0.03, 12);
    }
    if what == "c5" || what == "all" {
        criterion5_check();
    }
    if what == "c6" || what == "all" {
        criterion6(TaskKind::OpenDrawer, 50, &[0.15, 0.30, 0.45]);
        criterion6(TaskKind::OpenDoor, 50, &[10.0, 40.0, 70.0]);
    }
}
