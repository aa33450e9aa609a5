use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numcore::Tensor;

/// `out × in` matrix with entries uniform in `±√(6/(in+out))`.
pub fn glorot_uniform(rng: &mut ChaCha8Rng, output: usize, input: usize) -> Tensor {
    let limit = (6.0 / (input + output) as f64).sqrt();
    let data = (0..output * input).map(|_| rng.random_range(-limit..limit)).collect();
    Tensor::from_parts(vec![output, input], data)
}

/// Square orthogonal matrix: a Gaussian draw orthonormalized column by
/// column with two passes of modified Gram–Schmidt.
pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
    // Columns are held as rows of `cols` while orthonormalizing.
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[i];
                let v = &mut rest[0];
                let p: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= p * qi);
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|x| *x /= norm);
    }
    let mut data = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            data[i * n + j] = v;
        }
    }
    Tensor::from_parts(vec![n, n], data)
}
