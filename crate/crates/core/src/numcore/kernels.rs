//! Inner loops shared by the tape ops. Every routine accumulates into
//! `out` with a fixed summation order, so results are bit-reproducible and
//! a single row computed alone matches the same row computed in a batch.

/// `out[m×p] += a[m×n] · b[n×p]`
pub fn gemm_nn(a: &[f64], b: &[f64], out: &mut [f64], m: usize, n: usize, p: usize) {
    for i in 0..m {
        let o = &mut out[i * p..(i + 1) * p];
        let ar = &a[i * n..(i + 1) * n];
        for (k, &aik) in ar.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let br = &b[k * p..(k + 1) * p];
            for (x, &y) in o.iter_mut().zip(br) {
                *x += aik * y;
            }
        }
    }
}

/// `out[m×p] += a[m×n] · b[p×n]ᵀ`
pub fn gemm_nt(a: &[f64], b: &[f64], out: &mut [f64], m: usize, n: usize, p: usize) {
    for i in 0..m {
        let ar = &a[i * n..(i + 1) * n];
        let o = &mut out[i * p..(i + 1) * p];
        for (j, x) in o.iter_mut().enumerate() {
            *x += dot(ar, &b[j * n..(j + 1) * n]);
        }
    }
}

/// `out[n×p] += a[m×n]ᵀ · b[m×p]`
pub fn gemm_tn(a: &[f64], b: &[f64], out: &mut [f64], m: usize, n: usize, p: usize) {
    for i in 0..m {
        let ar = &a[i * n..(i + 1) * n];
        let br = &b[i * p..(i + 1) * p];
        for (k, &aik) in ar.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let o = &mut out[k * p..(k + 1) * p];
            for (x, &y) in o.iter_mut().zip(br) {
                *x += aik * y;
            }
        }
    }
}

/// Dot product with four interleaved partial sums.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn add_into(x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += xi;
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^v)` in the overflow-safe form `max(v, 0) + ln(1 + e^(−|v|))`.
pub fn softplus(v: f64) -> f64 {
    v.max(0.0) + (-v.abs()).exp().ln_1p()
}
