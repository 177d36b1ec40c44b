//! Benchmark-only crate; see the `benches/` directory. Shared fixture
//! builders live here so every benchmark measures the same instances.

use maxmargin::{Dataset, Kernel, SignedGram, SignedMatrix};

/// Deterministic two-cloud dataset of `n` points used by all benchmarks.
pub fn fixture_dataset(n: usize) -> Dataset {
    // A fixed low-discrepancy fill keeps the benches free of RNG setup: the
    // fractional parts of i * golden ratio spread uniformly in [0, 1).
    let phi = 0.618_033_988_749_894_9_f64;
    let mut points = ndarray::Array2::<f64>::zeros((n, 2));
    let mut labels = ndarray::Array1::<f64>::zeros(n);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let a = ((i as f64) * phi).fract() - 0.5;
        let b = ((i as f64) * phi * phi).fract() - 0.5;
        points[[i, 0]] = sign * 0.5 + 0.3 * a;
        points[[i, 1]] = sign * 0.5 + 0.3 * b;
        labels[i] = sign;
    }
    Dataset::new(points, labels).expect("fixture is valid")
}

/// Gram operator and signed matrix for the fixture.
pub fn fixture_gram(n: usize, kernel: &Kernel) -> (Dataset, SignedGram, SignedMatrix) {
    let ds = fixture_dataset(n);
    let g = maxmargin::gram(&ds, kernel).expect("fixture gram is valid");
    let xs = maxmargin::signed_matrix(&ds);
    (ds, g, xs)
}
