mod oracles;

use fus_core::consistency::SampleQueue;
use fus_core::lift::ScenePoints;
use fus_core::metrics::one_sided_chamfer;
use fus_core::perception::Observation;
use fus_core::raster::{PartId, PerPart};
use fus_core::sampler::{
    fps_sample, part_weights, sample_frame, stream_rng, uniform_downsample, weighted_sample,
    SamplerConfig, Strategy,
};
use fus_core::simulator::{
    build_scene, build_scene_with, generate_frame, NoiseSpec, ObjectKind, SceneOptions,
};
use fus_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frequencies(weights: &[f64], n: usize, trials: usize) -> Vec<f64> {
    let mut hits = vec![0usize; weights.len()];
    for seed in 0..trials as u64 {
        let mut rng = stream_rng(seed, 0, PartId(1));
        for i in weights_sample(weights, n, &mut rng) {
            hits[i] += 1;
        }
    }
    hits.iter().map(|&h| h as f64 / trials as f64).collect()
}

fn weights_sample(weights: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let picks = weighted_sample(weights, n, rng).unwrap();
    assert_eq!(picks.len(), n);
    picks
}

#[test]
fn two_one_one_inclusion_matches_enumeration() {
    let exact = oracles::inclusion_probabilities(&[2.0, 1.0, 1.0], 2);
    assert!((exact[0] - 5.0 / 6.0).abs() < 1e-12);
    let trials = 100_000;
    let freq = frequencies(&[2.0, 1.0, 1.0], 2, trials);
    for (f, p) in freq.iter().zip(&exact) {
        assert!(
            (f - p).abs() <= oracles::three_sigma(*p, trials),
            "{f} vs {p}"
        );
    }
}

#[test]
fn scaling_weights_changes_nothing() {
    let mut gen = ChaCha8Rng::seed_from_u64(5);
    let w: Vec<f64> = (0..40).map(|_| gen.random::<f64>()).collect();
    // exact powers of two keep every partial sum exact
    let scaled: Vec<f64> = w.iter().map(|x| x * 1024.0).collect();
    for seed in 0..500 {
        let a = weighted_sample(&w, 8, &mut stream_rng(seed, 3, PartId(2))).unwrap();
        let b = weighted_sample(&scaled, 8, &mut stream_rng(seed, 3, PartId(2))).unwrap();
        assert_eq!(a, b);
    }
    // any other constant: same distribution
    let w = [3.0, 1.0, 0.5, 2.5, 1.0];
    let odd: Vec<f64> = w.iter().map(|x| x * 0.37).collect();
    let exact = oracles::inclusion_probabilities(&w, 2);
    let trials = 50_000;
    for (f, p) in frequencies(&odd, 2, trials).iter().zip(&exact) {
        assert!((f - p).abs() <= oracles::three_sigma(*p, trials));
    }
}

#[test]
fn degenerate_weights() {
    let mut rng = stream_rng(1, 0, PartId(1));
    for _ in 0..100 {
        assert_eq!(
            weighted_sample(&[1.0, 0.0, 0.0, 0.0], 1, &mut rng).unwrap(),
            vec![0]
        );
    }
    let mut all = weighted_sample(&[0.1, 5.0, 0.2], 3, &mut rng).unwrap();
    all.sort_unstable();
    assert_eq!(all, vec![0, 1, 2]);
    assert!(weighted_sample(&[0.0, 0.0], 1, &mut rng).is_err());
    assert!(weighted_sample(&[1.0, -1.0], 1, &mut rng).is_err());
}

#[test]
fn downsample_inclusion_is_uniform() {
    let mut gen = ChaCha8Rng::seed_from_u64(9);
    let n = 2048;
    let scene = ScenePoints {
        points: (0..n + 200)
            .map(|i| {
                let z = if i < n {
                    1.0 + gen.random::<f64>()
                } else {
                    0.5
                };
                Point::new(gen.random(), gen.random(), z)
            })
            .collect(),
        labels: vec![PartId(1); n + 200],
        pixels: (0..(n + 200) as u32).collect(),
    };
    let trials = 100_000;
    let mut hits = vec![0usize; n + 200];
    for seed in 0..trials as u64 {
        let picks =
            uniform_downsample(&scene, Some(0.5), 1024, &mut stream_rng(seed, 0, PartId(0)));
        assert_eq!(picks.len(), 1024);
        for i in picks {
            hits[i] += 1;
        }
    }
    assert!(hits[n..].iter().all(|&h| h == 0), "table points survived");
    // 2048 marginal tests: a handful may fall past 3 sigma by chance, none past 5
    let p = 0.5;
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    let z: Vec<f64> = hits[..n]
        .iter()
        .map(|&h| (h as f64 / trials as f64 - p).abs() / sd)
        .collect();
    assert!(z.iter().all(|&z| z < 5.0));
    assert!(z.iter().filter(|&&z| z > 3.0).count() <= n / 100);
}

#[test]
fn fps_covers_better_than_random() {
    let (mut fps_r, mut rnd_r) = (0.0, 0.0);
    for seed in 0..100 {
        let mut gen = ChaCha8Rng::seed_from_u64(seed);
        let cloud: Vec<Point> = (0..1000)
            .map(|_| Point::new(gen.random(), gen.random(), gen.random()))
            .collect();
        let radius = |picks: &[usize]| {
            let chosen: Vec<Point> = picks.iter().map(|&i| cloud[i]).collect();
            cloud
                .iter()
                .map(|p| oracles::nearest(p, &chosen))
                .fold(0.0, f64::max)
        };
        fps_r += radius(&fps_sample(&cloud, 32));
        rnd_r += radius(
            &weighted_sample(&vec![1.0; 1000], 32, &mut stream_rng(seed, 0, PartId(1))).unwrap(),
        );
    }
    assert!(fps_r <= rnd_r, "fps {fps_r} random {rnd_r}");
}

fn door_observation(seed: u64, frame: usize) -> Observation {
    let spec = build_scene(ObjectKind::Door, seed);
    let f = generate_frame(&spec, &NoiseSpec::default(), 4, seed, frame).unwrap();
    Observation::perceive(&f.depth, &f.stack, &f.camera)
        .unwrap()
        .with_table(Some(spec.table_z))
}

#[test]
fn first_frame_of_queue_strategies_is_random() {
    for seed in 0..5 {
        let obs = door_observation(seed, 0);
        let run = |strategy| {
            let cfg = SamplerConfig {
                strategy,
                seed,
                ..Default::default()
            };
            sample_frame(&obs, &mut cfg.new_queue().unwrap(), &cfg, 0).unwrap()
        };
        let random = run(Strategy::Random);
        for s in [Strategy::Fus, Strategy::FusNoUncertainty] {
            let got = run(s);
            assert_eq!(
                got.points.iter().map(|p| p.position).collect::<Vec<_>>(),
                random.points.iter().map(|p| p.position).collect::<Vec<_>>()
            );
        }
    }
}

#[test]
fn sampling_is_deterministic_and_fixed_size() {
    let obs = door_observation(3, 12);
    let present = obs
        .cloud
        .parts()
        .iter()
        .filter(|(_, p)| !p.is_empty())
        .count();
    for strategy in Strategy::ALL {
        let cfg = SamplerConfig {
            strategy,
            seed: 3,
            ..Default::default()
        };
        let a = sample_frame(&obs, &mut cfg.new_queue().unwrap(), &cfg, 12).unwrap();
        let b = sample_frame(&obs, &mut cfg.new_queue().unwrap(), &cfg, 12).unwrap();
        assert_eq!(a, b);
        let want = if strategy.is_part_aware() {
            present * 32
        } else {
            1024.min(obs.scene.points.len())
        };
        assert_eq!(a.len(), want, "{strategy}");
        for f in a.features() {
            assert_eq!(f.len(), 3 + obs.cloud.num_classes());
            assert_eq!(f[3..].iter().sum::<f64>(), 1.0);
        }
    }
}

#[test]
fn ablations_reduce_to_full_fus() {
    let mut gen = ChaCha8Rng::seed_from_u64(2);
    let cands: Vec<Point> = (0..300)
        .map(|_| Point::new(gen.random(), gen.random(), gen.random()))
        .collect();
    let mut queue = SampleQueue::new(3).unwrap();
    let mut parts = PerPart::new(2);
    *parts.get_mut(PartId(1)).unwrap() = cands[..32].to_vec();
    queue.push(0, parts).unwrap();
    let part = PartId(1);

    // constant uncertainty: uniform uncertainty factor
    let flat = vec![0.4; cands.len()];
    let full = part_weights(Strategy::Fus, &cands, &flat, &queue, part, 40.0).unwrap();
    let no_u = part_weights(
        Strategy::FusNoUncertainty,
        &cands,
        &flat,
        &queue,
        part,
        40.0,
    )
    .unwrap();
    let ratio = full[0] / no_u[0];
    assert!(full
        .iter()
        .zip(&no_u)
        .all(|(a, b)| (a / b - ratio).abs() < 1e-12 * ratio));

    // candidates all on one queued point: uniform consistency factor
    let unc: Vec<f64> = (0..cands.len()).map(|_| gen.random()).collect();
    let stacked = vec![cands[0]; cands.len()];
    let full = part_weights(Strategy::Fus, &stacked, &unc, &queue, part, 40.0).unwrap();
    let no_c = part_weights(
        Strategy::FusNoConsistency,
        &stacked,
        &unc,
        &queue,
        part,
        40.0,
    )
    .unwrap();
    assert_eq!(full, no_c);
}

#[test]
fn erroneous_queue_entries_are_forgotten() {
    let mut gen = ChaCha8Rng::seed_from_u64(4);
    let mut cloud = |n: usize, offset: f64| -> Vec<Point> {
        (0..n)
            .map(|_| Point::new(gen.random::<f64>() + offset, gen.random(), gen.random()))
            .collect()
    };
    let cands = cloud(200, 0.0);
    let unc: Vec<f64> = (0..200).map(|i| (i % 7) as f64 / 7.0).collect();
    let clean_sets: Vec<Vec<Point>> = (0..6).map(|_| cloud(32, 0.0)).collect();
    let wrong = cloud(32, 3.0);
    let part = PartId(1);
    let t = 2;
    let mut clean = SampleQueue::new(3).unwrap();
    let mut dirty = SampleQueue::new(3).unwrap();
    let mut history = vec![];
    for (f, set) in clean_sets.iter().enumerate() {
        let entry = |pts: &Vec<Point>| {
            let mut p = PerPart::new(2);
            *p.get_mut(part).unwrap() = pts.clone();
            p
        };
        clean.push(f as u64, entry(set)).unwrap();
        dirty
            .push(f as u64, entry(if f == t { &wrong } else { set }))
            .unwrap();
        let a = part_weights(Strategy::Fus, &cands, &unc, &clean, part, 40.0).unwrap();
        let b = part_weights(Strategy::Fus, &cands, &unc, &dirty, part, 40.0).unwrap();
        history.push(a == b);
    }
    // the wrong set influences the weights while it is queued...
    assert!(!history[t]);
    // ...and leaves no trace after three clean pushes evict it
    assert!(history[t + 3..].iter().all(|&same| same));
}

#[test]
fn fus_settles_on_a_static_scene() {
    let opts = SceneOptions {
        static_object: true,
        static_camera: true,
        ..Default::default()
    };
    let frames = 10;
    let seeds = 100;
    let mut per_step = vec![Vec::new(); frames - 1];
    for seed in 0..seeds {
        let spec = build_scene_with(ObjectKind::Door, seed, &opts);
        let f = generate_frame(&spec, &NoiseSpec::default(), 4, seed, 0).unwrap();
        let obs = Observation::perceive(&f.depth, &f.stack, &f.camera).unwrap();
        let cfg = SamplerConfig {
            seed,
            ..Default::default()
        };
        let mut queue = cfg.new_queue().unwrap();
        let sampled: Vec<_> = (0..frames as u64)
            .map(|t| sample_frame(&obs, &mut queue, &cfg, t).unwrap())
            .collect();
        for t in 1..frames {
            let mut total = 0.0;
            let mut parts = 0.0;
            for part in 1..4u8 {
                let (a, b) = (
                    sampled[t - 1].part_points(PartId(part)),
                    sampled[t].part_points(PartId(part)),
                );
                if let Some(d) = one_sided_chamfer(&a, &b) {
                    total += d;
                    parts += 1.0;
                }
            }
            per_step[t - 1].push(total / parts);
        }
    }
    let stats: Vec<(f64, f64)> = per_step
        .iter()
        .map(|v| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (m, (var / v.len() as f64).sqrt())
        })
        .collect();
    for w in stats.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        assert!(b <= a + 3.0 * (sa * sa + sb * sb).sqrt(), "{stats:?}");
    }
}
