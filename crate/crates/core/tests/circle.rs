use formsys::arith::rat;
use formsys::circle::{singular_integral, singular_series, singular_series_with, SeriesMethod};
use formsys::count::count_solutions;
use formsys::{BoxRegion, FormSystem};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quinary() -> FormSystem {
    FormSystem::parse("x1^2 + x2^2 + x3^2 + x4^2 - x5^2", 5).unwrap()
}

/// vol{x in [-1,1]^5 : |f(x)| <= eps} / (2 eps) by uniform sampling.
fn density_oracle(eps: f64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let f = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - x[4] * x[4];
        if f.abs() <= eps {
            hits += 1;
        }
    }
    32.0 * hits as f64 / samples as f64 / (2.0 * eps)
}

#[test]
fn singular_integral_matches_real_density() {
    let j = singular_integral(&quinary(), &BoxRegion::unit(5), 8.0, 16).unwrap();
    let oracle = density_oracle(0.01, 4_000_000);
    assert!((j.value - oracle).abs() <= 0.05 * oracle, "J = {} vs oracle {oracle}", j.value);
    assert!(j.converged);
    let first = j.convergence_trace[0].1;
    assert!((j.value - first).abs() < 0.05 * j.value);
}

#[test]
fn series_agrees_with_count_density() {
    let sys = quinary();
    let s = singular_series(&sys, 50).unwrap();
    let j = singular_integral(&sys, &BoxRegion::unit(5), 8.0, 16).unwrap();
    let n = count_solutions(&sys, &BoxRegion::unit(5), &rat(40, 1)).unwrap().count.to_f64().unwrap();
    let limit = n / (j.value * 40f64.powi(3));
    assert!((s.value - limit).abs() <= 0.1 * limit, "S = {} vs N/(J P^3) = {limit}", s.value);
    assert!(s.tail_estimate < 0.01);
}

#[test]
fn series_methods_agree_on_two_forms() {
    let sys = FormSystem::parse("x1^2 - x2^2 + x3*x4; x1*x3 - 2*x4^2 + x2^2", 4).unwrap();
    let a = singular_series_with(&sys, 15, SeriesMethod::Multiplicative).unwrap();
    let b = singular_series_with(&sys, 15, SeriesMethod::Direct).unwrap();
    assert!((a.value - b.value).abs() < 1e-9);
    assert!(a.partial_sums.iter().zip(&b.partial_sums).all(|(x, y)| (x.1 - y.1).abs() < 1e-9));
}
