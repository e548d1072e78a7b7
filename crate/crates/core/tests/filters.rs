use kfusion::{explicit_poly2_map, KernelSpec, Klms, LmsFilter};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn stream(seed: u64, n: usize, dim: usize) -> Vec<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d = u.iter().map(|v| v * v).sum::<f64>().sin() + rng.gen_range(-0.1..0.1);
            (u, d)
        })
        .collect()
}

#[test]
fn linear_klms_is_lms() {
    let mu = 0.05;
    let mut lms = LmsFilter::new(4, mu).unwrap();
    let mut klms = Klms::new(KernelSpec::Linear, 2.0 * mu, None).unwrap();
    for (u, d) in stream(1, 500, 4) {
        let a = lms.step(&u, d).unwrap();
        let b = klms.step(&u, d).unwrap();
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
}

#[test]
fn poly2_klms_is_lms_in_feature_space() {
    let mu = 0.01;
    for seed in 0..5 {
        let data = stream(seed, 200, 3);
        let mut klms = Klms::new(KernelSpec::polynomial(2), 2.0 * mu, None).unwrap();
        let mut lms = LmsFilter::new(explicit_poly2_map(&data[0].0, 1.0).unwrap().len(), mu).unwrap();
        for (u, d) in &data {
            let phi = explicit_poly2_map(u, 1.0).unwrap();
            let a = klms.predict(u).unwrap();
            let b = lms.predict(&phi).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0), "{a} vs {b}");
            klms.step(u, *d).unwrap();
            lms.step(&phi, *d).unwrap();
        }
    }
}

#[test]
fn capped_filter_equals_truncated_dictionary() {
    let data = stream(3, 120, 2);
    let mut capped = Klms::new(KernelSpec::gaussian(0.7), 0.4, Some(30)).unwrap();
    let mut free = Klms::new(KernelSpec::gaussian(0.7), 0.4, None).unwrap();
    for (u, d) in &data[..30] {
        capped.step(u, *d).unwrap();
        free.step(u, *d).unwrap();
    }
    for (u, d) in &data[30..] {
        capped.step(u, *d).unwrap();
        free.step(u, *d).unwrap();
    }
    assert_eq!(capped.dictionary().len(), 30);
    let head = free.truncated(30);
    for (u, _) in &data {
        assert_eq!(capped.predict(u).unwrap(), head.predict(u).unwrap());
    }
}

#[test]
fn identical_streams_give_identical_states() {
    let run = || {
        let mut f = Klms::new(KernelSpec::gaussian(1.0), 0.2, None).unwrap();
        for (u, d) in stream(9, 100, 3) {
            f.step(&u, d).unwrap();
        }
        f
    };
    assert_eq!(run(), run());
}
