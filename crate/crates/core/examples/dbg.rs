use artaxis::cloud::{extract_motion_part, filter_cloud, refine_body_obb, FilterParams};
use artaxis::geom::{PartLabel, Vec2, Vec3};
use artaxis::pipeline::PipelineParams;
use artaxis::sim::{sample_cloud, ArticulatedScene, BoxDims, ScenePose, SensorModel};
use artaxis::estimate_prismatic;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let params = PipelineParams::default();
    let sensor = SensorModel { surface_density: 2000.0, noise_sigma: 0.005, ..SensorModel::default() };
    let cluster = FilterParams::new(0.05, 1);
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scene = ArticulatedScene::drawer(
            BoxDims::new(0.8, 0.6, 0.8),
            BoxDims::new(0.7, 0.55, 0.28),
            0.45, 0.52,
            ScenePose { offset: Vec2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)), yaw: rng.random_range(-0.175..0.175) });
        let truth = scene.true_axis();
        let f0 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 1));
        let body = refine_body_obb(&filter_cloud(&f0, &params.filter), &params.filter).unwrap();
        scene.set_joint_state(0.04);
        let f1 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 2));
        scene.set_joint_state(0.10);
        let f2 = sample_cloud(&scene, &sensor.with_seed(seed * 1000 + 3));
        let m1 = extract_motion_part(&filter_cloud(&f1, &params.filter), &body, &params.extraction).unwrap();
        let m2 = extract_motion_part(&filter_cloud(&f2, &params.filter), &body, &params.extraction).unwrap();
        let h1 = m1.labels.as_ref().unwrap().iter().filter(|&&l| l == PartLabel::Handle).count();
        let o1 = refine_body_obb(&m1, &cluster).unwrap();
        let o2 = refine_body_obb(&m2, &cluster).unwrap();
        let est = estimate_prismatic(&o1, &o2, 0.01).unwrap();
        // express displacement in scene-local coordinates
        let d = est.evidence.displacement;
        let (s, c) = scene.pose.yaw.sin_cos();
        let local = Vec3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z);
        let err = est.axis.direction.dot(truth.direction).clamp(-1.0, 1.0).acos().to_degrees();
        println!(
            "seed {seed}: err {err:5.2} deg | disp local ({:+.4}, {:+.4}, {:+.4}) | st pts {} (handle {h1}) st half ({:.3},{:.3}) z [{:.3},{:.3}] | ed half ({:.3},{:.3}) z [{:.3},{:.3}]",
            local.x, local.y, local.z, m1.len(), o1.rect.half_long, o1.rect.half_short, o1.z_min, o1.z_max,
            o2.rect.half_long, o2.rect.half_short, o2.z_min, o2.z_max
        );
    }
}
