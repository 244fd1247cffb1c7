#![allow(dead_code)]

use hexflow::conformal::{curvature, is_admissible, scale_metric};
use hexflow::{BackgroundMetric, ConformalFactor, SurfaceComplex};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn arccosh2() -> f64 {
    2f64.acosh()
}

pub fn pants() -> (SurfaceComplex, BackgroundMetric) {
    (
        SurfaceComplex::pair_of_pants(),
        BackgroundMetric::uniform(3, arccosh2()).unwrap(),
    )
}

pub fn torus() -> (SurfaceComplex, BackgroundMetric) {
    (
        SurfaceComplex::one_holed_torus(),
        BackgroundMetric::uniform(3, arccosh2()).unwrap(),
    )
}

/// Pair of pants, one-holed torus and ten random complexes with F ≤ 10, each
/// with a random background metric.
pub fn corpus(seed: u64) -> Vec<(SurfaceComplex, BackgroundMetric)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![pants(), torus()];
    for i in 0..10u64 {
        let faces = 2 * (1 + (i as usize % 5));
        let cx = SurfaceComplex::random(faces, seed.wrapping_mul(31).wrapping_add(i)).unwrap();
        let lengths = (0..cx.num_edges()).map(|_| rng.gen_range(0.5..2.5)).collect();
        out.push((cx, BackgroundMetric::new(lengths).unwrap()));
    }
    out
}

/// A random admissible factor with entries in `[-spread, spread]`.
pub fn random_admissible(
    rng: &mut impl Rng,
    cx: &SurfaceComplex,
    bg: &BackgroundMetric,
    spread: f64,
) -> ConformalFactor {
    loop {
        let w = ConformalFactor((0..cx.num_components()).map(|_| rng.gen_range(-spread..spread)).collect());
        if is_admissible(&w, bg, cx) {
            return w;
        }
    }
}

/// `K ∘ scale_metric`.
pub fn forward(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Vec<f64> {
    curvature(&scale_metric(w, bg, cx).unwrap(), cx).unwrap().0
}

/// Central-difference Jacobian of `K ∘ scale_metric`.
pub fn fd_jacobian(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex, h: f64) -> DMatrix<f64> {
    let n = w.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut up = w.clone();
        let mut dn = w.clone();
        up.0[j] += h;
        dn.0[j] -= h;
        let (ku, kd) = (forward(&up, bg, cx), forward(&dn, bg, cx));
        for i in 0..n {
            jac[(i, j)] = (ku[i] - kd[i]) / (2.0 * h);
        }
    }
    jac
}

/// Largest entrywise relative error, with entries below `floor · max|fd|`
/// measured against that floor.
pub fn max_relative_error(a: &DMatrix<f64>, fd: &DMatrix<f64>, floor: f64) -> f64 {
    let scale = fd.amax();
    a.iter()
        .zip(fd.iter())
        .map(|(x, y)| (x - y).abs() / y.abs().max(floor * scale))
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
