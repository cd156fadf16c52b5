use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgkernel::kernel::{
    build_circulant, eval_1d_on_fine, kernel_eval, solve_1d, GridFunction1D, KernelInterpolant1D, KernelMode,
    KernelSpec,
};
use sgkernel::special::bernoulli_polynomial;
use sgkernel::Error;

type Q = Ratio<i128>;

/// Bernoulli numbers from `sum_{k<n+1} C(n+1, k) B_k = 0`, exactly.
fn exact_bernoulli_numbers(max: usize) -> Vec<Q> {
    let binom = |n: usize, k: usize| -> i128 { (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128) };
    let mut b = vec![Q::from_integer(1)];
    for n in 1..=max {
        let s: Q = (0..n).map(|k| b[k] * Q::from_integer(binom(n + 1, k))).sum();
        b.push(-s / Q::from_integer((n + 1) as i128));
    }
    b
}

fn exact_bernoulli_poly(n: usize, x: Q, numbers: &[Q]) -> Q {
    let binom = |n: usize, k: usize| -> i128 { (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128) };
    (0..=n)
        .map(|k| numbers[k] * Q::from_integer(binom(n, k)) * num_traits_pow(x, n - k))
        .sum()
}

fn num_traits_pow(x: Q, e: usize) -> Q {
    (0..e).fold(Q::from_integer(1), |acc, _| acc * x)
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[test]
fn bernoulli_matches_exact_rational_values() {
    let numbers = exact_bernoulli_numbers(12);
    for n in 0..=12 {
        for num in [0i128, 1, 7, 13, 21, 32, 45, 63, 64] {
            let x = Q::new(num, 64);
            let exact = to_f64(exact_bernoulli_poly(n, x, &numbers));
            let got = bernoulli_polynomial(n, to_f64(x)).unwrap();
            assert!((got - exact).abs() < 1e-13, "B_{n}({num}/64): {got} vs {exact}");
        }
    }
}

#[test]
fn bernoulli_derivative_and_mean_identities() {
    // B_n' = n B_{n-1} by central differences, and the mean over [0,1] vanishes for n >= 1.
    let h = 1e-5;
    for n in 1..=10 {
        for &x in &[0.2, 0.45, 0.8] {
            let d = (bernoulli_polynomial(n, x + h).unwrap() - bernoulli_polynomial(n, x - h).unwrap()) / (2.0 * h);
            let expected = n as f64 * bernoulli_polynomial(n - 1, x).unwrap();
            assert!((d - expected).abs() < 1e-6 * expected.abs().max(1.0));
        }
        let m = 2000;
        let mean = (0..m)
            .map(|k| bernoulli_polynomial(n, (k as f64 + 0.5) / m as f64).unwrap())
            .sum::<f64>()
            / m as f64;
        assert!(mean.abs() < 1e-6, "mean of B_{n} = {mean}");
    }
}

fn naive_series(p: f64, x: f64, y: f64, terms: usize) -> f64 {
    1.0 + 2.0
        * (1..=terms)
            .map(|k| (2.0 * PI * k as f64).powf(-2.0 * p) * (2.0 * PI * k as f64 * (x - y)).cos())
            .sum::<f64>()
}

#[test]
fn closed_form_matches_naive_fourier_sum() {
    for p in [2u32, 3] {
        let spec = KernelSpec::closed_form(p).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.1, 0.7), (0.5, 0.0), (0.33, 0.34)] {
            let naive = naive_series(p as f64, x, y, 20_000);
            let got = kernel_eval(&spec, x, y).unwrap();
            assert!((got - naive).abs() < 1e-13, "p={p} ({x},{y}): {got} vs {naive}");
        }
    }
}

#[test]
fn kernel_examples() {
    let p1 = KernelSpec::closed_form(1).unwrap();
    assert!((kernel_eval(&p1, 0.4, 0.4).unwrap() - 13.0 / 12.0).abs() < 1e-15);
    assert!((kernel_eval(&p1, 0.0, 0.5).unwrap() - 23.0 / 24.0).abs() < 1e-15);
    assert!(matches!(kernel_eval(&p1, 1.2, 0.0), Err(Error::OutOfDomain { .. })));
    assert!(KernelSpec::new(1.5, KernelMode::ClosedForm, 1e-12).is_err());
    assert!(KernelSpec::new(0.5, KernelMode::TruncatedSeries, 1e-12).is_err());
    assert!(KernelSpec::new(1.0, KernelMode::TruncatedSeries, 0.0).is_err());
}

#[test]
fn fractional_order_series_matches_naive_sum_with_tail() {
    // For p = 1.5 the naive sum converges fast enough to serve as an oracle.
    let spec = KernelSpec::series(1.5).unwrap();
    for &(x, y) in &[(0.0, 0.25), (0.1, 0.9), (0.6, 0.61)] {
        let naive = naive_series(1.5, x, y, 200_000);
        let got = kernel_eval(&spec, x, y).unwrap();
        assert!((got - naive).abs() < 1e-12, "({x},{y}): {got} vs {naive}");
    }
}

#[test]
fn circulant_structure_and_dense_eigenvalues() {
    for p in [1u32, 2] {
        let spec = KernelSpec::closed_form(p).unwrap();
        for level in 0..=6 {
            let m = build_circulant(&spec, level).unwrap();
            let rows = m.dense();
            for (k, row) in rows.iter().enumerate() {
                for (kk, &v) in row.iter().enumerate() {
                    assert_eq!(v, m.first_row[(kk + m.n - k) % m.n]);
                }
            }
            let dense = DMatrix::from_fn(m.n, m.n, |r, c| rows[r][c]);
            let mut oracle: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
            let mut ours = m.eigenvalues.clone();
            oracle.sort_by(f64::total_cmp);
            ours.sort_by(f64::total_cmp);
            let scale = ours[ours.len() - 1];
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12 * scale, "p={p} level={level}: {a} vs {b}");
            }
            assert!(ours[0] > 0.0);
        }
    }
}

#[test]
fn level_zero_and_level_two_examples() {
    let p1 = KernelSpec::closed_form(1).unwrap();
    let m = build_circulant(&p1, 0).unwrap();
    assert!((m.first_row[0] - 13.0 / 12.0).abs() < 1e-15);
    assert!((m.eigenvalues[0] - 13.0 / 12.0).abs() < 1e-15);
    let m = build_circulant(&p1, 2).unwrap();
    assert_eq!(m.first_row[1], m.first_row[3]);
}

fn dense_solve(m: &sgkernel::kernel::CirculantKernelMatrix, rhs: &[f64]) -> Vec<f64> {
    let rows = m.dense();
    let dense = DMatrix::from_fn(m.n, m.n, |r, c| rows[r][c]);
    dense.lu().solve(&DVector::from_column_slice(rhs)).unwrap().iter().copied().collect()
}

/// `max lambda / min lambda`.
fn condition(m: &sgkernel::kernel::CirculantKernelMatrix) -> f64 {
    let max = m.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = m.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

#[test]
fn solve_matches_dense_lu() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in [1u32, 2] {
        let spec = KernelSpec::closed_form(p).unwrap();
        for level in 0..=6 {
            let m = build_circulant(&spec, level).unwrap();
            // beyond p = 1 the dense oracle itself is only accurate to about eps * cond
            let tol = if p == 1 {
                1e-10
            } else {
                (1e-10f64).max(64.0 * f64::EPSILON * condition(&m))
            };
            for _ in 0..5 {
                let rhs: Vec<f64> = (0..m.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let fast = solve_1d(&m, &GridFunction1D::new(level, rhs.clone()).unwrap()).unwrap();
                let direct = dense_solve(&m, &rhs);
                let scale = direct.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for (a, b) in fast.coefficients.iter().zip(&direct) {
                    assert!((a - b).abs() < tol * scale, "p={p} level={level}");
                }
            }
        }
    }
}

#[test]
fn level_four_random_solve_absolute() {
    let m = build_circulant(&KernelSpec::closed_form(1).unwrap(), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let rhs: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let fast = solve_1d(&m, &GridFunction1D::new(4, rhs.clone()).unwrap()).unwrap();
    let direct = dense_solve(&m, &rhs);
    for (a, b) in fast.coefficients.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn constant_samples_give_constant_coefficients() {
    let m = build_circulant(&KernelSpec::closed_form(1).unwrap(), 3).unwrap();
    let fast = solve_1d(&m, &GridFunction1D::new(3, vec![1.0; 8]).unwrap()).unwrap();
    let direct = dense_solve(&m, &[1.0; 8]);
    for (a, b) in fast.coefficients.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-13);
        assert!((a - 1.0 / m.eigenvalues[0]).abs() < 1e-13);
    }
}

#[test]
fn fine_evaluation_matches_pointwise_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in [KernelSpec::closed_form(1).unwrap(), KernelSpec::series(0.8).unwrap()] {
        let coefficients: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let interp = KernelInterpolant1D {
            spec,
            level: 2,
            coefficients,
        };
        let fine = eval_1d_on_fine(&interp, 5).unwrap();
        for (k, v) in fine.values.iter().enumerate() {
            let direct: f64 = interp
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, c)| c * kernel_eval(&spec, k as f64 / 32.0, i as f64 / 4.0).unwrap())
                .sum();
            assert!((v - direct).abs() < 1e-10, "p={} k={k}", spec.p);
        }
    }
    let interp = KernelInterpolant1D {
        spec: KernelSpec::closed_form(1).unwrap(),
        level: 3,
        coefficients: vec![0.0; 8],
    };
    assert!(eval_1d_on_fine(&interp, 2).is_err());
}

#[test]
fn reinterpolation_on_finer_grids_is_idempotent() {
    let spec = KernelSpec::closed_form(1).unwrap();
    let f = |x: f64| (2.0 * PI * x).sin().exp();
    let coarse = solve_1d(&build_circulant(&spec, 3).unwrap(), &GridFunction1D::from_fn(3, f)).unwrap();
    for fine_level in 3..=6 {
        let values = eval_1d_on_fine(&coarse, fine_level).unwrap();
        let again = solve_1d(&build_circulant(&spec, fine_level).unwrap(), &values).unwrap();
        let a = eval_1d_on_fine(&coarse, 7).unwrap();
        let b = eval_1d_on_fine(&again, 7).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

proptest! {
    #[test]
    fn kernel_is_symmetric_and_translation_invariant(x in 0.0..1.0f64, y in 0.0..1.0f64, h in 0.0..1.0f64, p in 1u32..=6) {
        let spec = KernelSpec::closed_form(p).unwrap();
        let a = kernel_eval(&spec, x, y).unwrap();
        prop_assert_eq!(a, kernel_eval(&spec, y, x).unwrap());
        let b = kernel_eval(&spec, (x + h).fract(), (y + h).fract()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_are_positive(p in 0.6..4.0f64, level in 0usize..=8) {
        let m = build_circulant(&KernelSpec::auto(p).unwrap(), level).unwrap();
        prop_assert!(m.eigenvalues.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn interpolants_reproduce_samples(level in 0usize..=8, seed in any::<u64>()) {
        let spec = KernelSpec::closed_form(1).unwrap();
        let m = build_circulant(&spec, level).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..m.n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let samples = GridFunction1D::new(level, values).unwrap();
        let back = eval_1d_on_fine(&solve_1d(&m, &samples).unwrap(), level).unwrap();
        for (a, b) in back.values.iter().zip(&samples.values) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn smoother_interpolants_reproduce_samples_to_conditioning(values in prop::collection::vec(-10.0..10.0f64, 16), p in 2u32..=3) {
        let spec = KernelSpec::closed_form(p).unwrap();
        let m = build_circulant(&spec, 4).unwrap();
        let samples = GridFunction1D::new(4, values).unwrap();
        let back = eval_1d_on_fine(&solve_1d(&m, &samples).unwrap(), 4).unwrap();
        let scale = samples.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let tol = 64.0 * f64::EPSILON * condition(&m) * scale;
        for (a, b) in back.values.iter().zip(&samples.values) {
            prop_assert!((a - b).abs() < tol);
        }
    }

    #[test]
    fn series_agrees_with_closed_form(x in 0.0..1.0f64, y in 0.0..1.0f64, p in 1u32..=3) {
        let closed = KernelSpec::closed_form(p).unwrap();
        let series = KernelSpec::series(p as f64).unwrap();
        let a = kernel_eval(&closed, x, y).unwrap();
        match kernel_eval(&series, x, y) {
            Ok(b) => prop_assert!((a - b).abs() < series.series_tolerance + 1e-12),
            // only admissible extremely close to the diagonal
            Err(Error::SeriesBudget { .. }) => prop_assert!((x - y).abs().min(1.0 - (x - y).abs()) < 1e-6),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
