//! Synthetic problems used by tests, benchmarks and the CLI's demo data.

use rand::Rng;

use crate::data::Dataset;
use crate::ensemble::{Ensemble, Mlp};
use crate::error::Result;
use crate::seed;

/// The four corners of the unit square labelled by XOR.
pub fn xor_pattern() -> (Vec<Vec<f64>>, Vec<f64>) {
    (
        vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        vec![0.0, 1.0, 1.0, 0.0],
    )
}

/// Two well separated 2-D Gaussian blobs inside the unit square.
pub fn two_blobs(n: usize, seed: u64) -> Dataset {
    let mut rng = seed::rng(seed);
    let centers = [(0.25, 0.3), (0.75, 0.7)];
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        let (cx, cy) = centers[c];
        let x: f64 = cx + 0.08 * gaussian(&mut rng);
        let y: f64 = cy + 0.08 * gaussian(&mut rng);
        features.push(vec![x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)]);
        labels.push(c);
    }
    Dataset::from_indexed("blobs", features, labels).expect("both classes present")
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Quadrant index of a point of the unit square: 0 = lower left,
/// 1 = lower right, 2 = upper left, 3 = upper right.
pub fn quadrant(x: f64, y: f64) -> usize {
    usize::from(x >= 0.5) + 2 * usize::from(y >= 0.5)
}

/// Class of a point in the regional-expert problem. Each quadrant has its
/// own linear boundary in local coordinates, so no single linear rule fits
/// the whole square.
pub fn regional_label(x: f64, y: f64) -> usize {
    let u = (x * 2.0).fract();
    let v = (y * 2.0).fract();
    let positive = match quadrant(x, y) {
        0 => u > v,
        1 => u + v > 1.0,
        2 => u + v < 1.0,
        _ => u < v,
    };
    usize::from(positive)
}

fn uniform_points(n: usize, rng: &mut impl Rng) -> Dataset {
    let features: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let labels = features.iter().map(|p| regional_label(p[0], p[1])).collect();
    Dataset::new("regional", features, labels, vec!["0".into(), "1".into()]).expect("both classes present")
}

/// Regional-expert fixture: four MLPs, each trained only on the training
/// points of one quadrant.
#[derive(Debug, Clone)]
pub struct RegionalExperts {
    pub train: Dataset,
    pub test: Dataset,
    pub experts: Ensemble,
}

impl RegionalExperts {
    pub const HIDDEN: usize = 6;
    pub const EPOCHS: usize = 400;
    pub const LEARN_RATE: f64 = 0.5;

    pub fn generate(n_train: usize, n_test: usize, seed: u64) -> Result<Self> {
        let mut rng = seed::rng(seed);
        let train = uniform_points(n_train, &mut rng);
        let test = uniform_points(n_test, &mut rng);
        let members = (0..4)
            .map(|q| {
                let idx: Vec<usize> = (0..train.len())
                    .filter(|&i| {
                        let p = &train.features()[i];
                        quadrant(p[0], p[1]) == q
                    })
                    .collect();
                let (xs, ys) = train.gather(&idx);
                let member_seed = seed::derive(seed, q as u64 + 1);
                let mut m = Mlp::init(&[2, Self::HIDDEN, 2], member_seed)?;
                m.train(&xs, &ys, Self::EPOCHS, Self::LEARN_RATE, member_seed)?;
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            train,
            test,
            experts: Ensemble::from_members(members)?,
        })
    }
}
