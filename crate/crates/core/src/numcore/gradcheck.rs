//! Central finite-difference checks of analytic gradients.
//!
//! The reported error of one check is
//! `max_i |analytic_i − numeric_i| / max(‖analytic‖∞, ‖numeric‖∞)`,
//! i.e. the worst elementwise deviation relative to the gradient's scale.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::numcore::{ParamStore, Tape, Tensor, Var};

pub const FD_STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

type CheckFn = dyn Fn(&mut ChaCha8Rng) -> Result<f64> + Send + Sync;

/// One registered check: `run` draws random inputs and returns the relative
/// error for that trial.
#[derive(Clone)]
pub struct GradCheck {
    pub name: String,
    pub trials: usize,
    run: Arc<CheckFn>,
}

impl GradCheck {
    pub fn new(
        name: impl Into<String>,
        trials: usize,
        run: impl Fn(&mut ChaCha8Rng) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        GradCheck {
            name: name.into(),
            trials,
            run: Arc::new(run),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub trials: usize,
    pub max_rel_error: f64,
    pub passed: bool,
    pub error: Option<String>,
}

/// Runs every check for its number of trials, each from its own seed.
pub fn run_checks(checks: &[GradCheck], seed: u64) -> Vec<CheckOutcome> {
    checks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64 * 7919));
            let mut worst: f64 = 0.0;
            let mut error = None;
            for _ in 0..c.trials {
                match (c.run)(&mut rng) {
                    Ok(e) if e.is_finite() => worst = worst.max(e),
                    Ok(e) => {
                        worst = f64::INFINITY;
                        error = Some(format!("non-finite error {e}"));
                        break;
                    }
                    Err(e) => {
                        worst = f64::INFINITY;
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            CheckOutcome {
                name: c.name.clone(),
                trials: c.trials,
                max_rel_error: worst,
                passed: worst < TOLERANCE,
                error,
            }
        })
        .collect()
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Compares tape gradients against central differences for free inputs.
///
/// `build` must record a scalar on the tape from the given input vars.
pub fn check_inputs<F>(inputs: &[Tensor], build: F) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.variable(t.clone())).collect();
        let loss = build(&mut tape, &vars)?;
        Ok(tape.value(loss).data()[0])
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.variable(t.clone())).collect();
    let loss = build(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;

    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (slot, &v) in vars.iter().enumerate() {
        let n = inputs[slot].len();
        match grads.wrt(v) {
            Some(g) => analytic.extend_from_slice(g),
            None => analytic.extend(std::iter::repeat_n(0.0, n)),
        }
        for i in 0..n {
            let orig = work[slot].data()[i];
            work[slot].data_mut()[i] = orig + FD_STEP;
            let up = eval(&work)?;
            work[slot].data_mut()[i] = orig - FD_STEP;
            let down = eval(&work)?;
            work[slot].data_mut()[i] = orig;
            numeric.push((up - down) / (2.0 * FD_STEP));
        }
    }
    Ok(relative_error(&analytic, &numeric))
}

/// Same as [`check_inputs`] but perturbs every parameter of a store.
pub fn check_params<F>(store: &ParamStore, build: F) -> Result<f64>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = build(&mut tape, store)?;
    let grads = tape.backward(loss)?.param_grads(store);

    let mut work = store.clone();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for id in store.ids() {
        analytic.extend_from_slice(&grads[id.index()]);
        for i in 0..store.get(id).len() {
            let orig = store.get(id).data()[i];
            work.get_mut(id).data_mut()[i] = orig + FD_STEP;
            let mut t = Tape::new();
            let l = build(&mut t, &work)?;
            let up = t.value(l).data()[0];
            work.get_mut(id).data_mut()[i] = orig - FD_STEP;
            let mut t = Tape::new();
            let l = build(&mut t, &work)?;
            let down = t.value(l).data()[0];
            work.get_mut(id).data_mut()[i] = orig;
            numeric.push((up - down) / (2.0 * FD_STEP));
        }
    }
    Ok(relative_error(&analytic, &numeric))
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::from_parts(shape.to_vec(), data)
}

/// Reduces `v` to a scalar through a fixed random weighting so that every
/// output element contributes a distinct gradient.
pub fn weighted_sum(tape: &mut Tape, v: Var, weights: &Tensor) -> Result<Var> {
    let w = tape.constant(weights.clone());
    tape.dot(v, w)
}

fn dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(1..5), rng.random_range(1..5))
}

fn unary_check(name: &str, lo: f64, hi: f64, f: fn(&mut Tape, Var) -> Result<Var>) -> GradCheck {
    GradCheck::new(name, 50, move |rng| {
        let (m, n) = dims(rng);
        let x = random_tensor(rng, &[m, n], lo, hi);
        let w = random_tensor(rng, &[m, n], -1.0, 1.0);
        check_inputs(&[x], |t, v| {
            let y = f(t, v[0])?;
            weighted_sum(t, y, &w)
        })
    })
}

fn binary_check(name: &str, f: fn(&mut Tape, Var, Var) -> Result<Var>) -> GradCheck {
    GradCheck::new(name, 50, move |rng| {
        let (m, n) = dims(rng);
        let a = random_tensor(rng, &[m, n], -2.0, 2.0);
        let b = random_tensor(rng, &[m, n], 0.5, 2.0);
        let w = random_tensor(rng, &[m, n], -1.0, 1.0);
        check_inputs(&[a, b], |t, v| {
            let y = f(t, v[0], v[1])?;
            weighted_sum(t, y, &w)
        })
    })
}

/// Checks for every primitive tape op.
pub fn tape_op_checks() -> Vec<GradCheck> {
    vec![
        GradCheck::new("matmul", 50, |rng| {
            let (m, n) = dims(rng);
            let p = rng.random_range(1..5);
            let a = random_tensor(rng, &[m, n], -1.0, 1.0);
            let b = random_tensor(rng, &[n, p], -1.0, 1.0);
            let w = random_tensor(rng, &[m, p], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let y = t.matmul(v[0], v[1])?;
                weighted_sum(t, y, &w)
            })
        }),
        GradCheck::new("matmul_t", 50, |rng| {
            let (m, n) = dims(rng);
            let p = rng.random_range(1..5);
            let a = random_tensor(rng, &[m, n], -1.0, 1.0);
            let b = random_tensor(rng, &[p, n], -1.0, 1.0);
            let w = random_tensor(rng, &[m, p], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let y = t.matmul_t(v[0], v[1])?;
                weighted_sum(t, y, &w)
            })
        }),
        binary_check("add", |t, a, b| t.add(a, b)),
        binary_check("sub", |t, a, b| t.sub(a, b)),
        binary_check("mul", |t, a, b| t.mul(a, b)),
        binary_check("div", |t, a, b| t.div(a, b)),
        unary_check("scale", -2.0, 2.0, |t, a| Ok(t.scale(a, -1.7))),
        unary_check("add_scalar", -2.0, 2.0, |t, a| Ok(t.add_scalar(a, 0.3))),
        unary_check("one_minus", -2.0, 2.0, |t, a| Ok(t.one_minus(a))),
        unary_check("sigmoid", -4.0, 4.0, |t, a| Ok(t.sigmoid(a))),
        unary_check("tanh", -3.0, 3.0, |t, a| Ok(t.tanh(a))),
        unary_check("softplus", -6.0, 6.0, |t, a| Ok(t.softplus(a))),
        GradCheck::new("add_bias", 50, |rng| {
            let (m, n) = dims(rng);
            let a = random_tensor(rng, &[m, n], -1.0, 1.0);
            let b = random_tensor(rng, &[1, n], -1.0, 1.0);
            let w = random_tensor(rng, &[m, n], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let y = t.add_bias(v[0], v[1])?;
                weighted_sum(t, y, &w)
            })
        }),
        GradCheck::new("sum", 50, |rng| {
            let (m, n) = dims(rng);
            let a = random_tensor(rng, &[m, n], -1.0, 1.0);
            check_inputs(&[a], |t, v| {
                let s = t.sum(v[0]);
                t.mul(s, s)
            })
        }),
        GradCheck::new("dot", 50, |rng| {
            let (m, n) = dims(rng);
            let a = random_tensor(rng, &[m, n], -1.0, 1.0);
            let b = random_tensor(rng, &[m, n], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let d = t.dot(v[0], v[1])?;
                let e = t.dot(v[0], v[0])?;
                t.mul(d, e)
            })
        }),
        GradCheck::new("row", 50, |rng| {
            let (m, n) = dims(rng);
            let r = rng.random_range(0..m);
            let a = random_tensor(rng, &[m, n], -1.0, 1.0);
            let w = random_tensor(rng, &[1, n], -1.0, 1.0);
            check_inputs(&[a], |t, v| {
                let y = t.row(v[0], r)?;
                let y = t.tanh(y);
                weighted_sum(t, y, &w)
            })
        }),
        GradCheck::new("cols", 50, |rng| {
            let m = rng.random_range(1..5);
            let n = rng.random_range(2..7);
            let start = rng.random_range(0..n - 1);
            let len = rng.random_range(1..=n - start);
            let a = random_tensor(rng, &[m, n], -1.0, 1.0);
            let w = random_tensor(rng, &[m, len], -1.0, 1.0);
            check_inputs(&[a], |t, v| {
                let y = t.cols(v[0], start, len)?;
                let y = t.tanh(y);
                weighted_sum(t, y, &w)
            })
        }),
        GradCheck::new("vstack", 50, |rng| {
            let n = rng.random_range(1..5);
            let (m1, m2) = (rng.random_range(1..4), rng.random_range(1..4));
            let a = random_tensor(rng, &[m1, n], -1.0, 1.0);
            let b = random_tensor(rng, &[m2, n], -1.0, 1.0);
            let w = random_tensor(rng, &[2 * m1 + m2, n], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let y = t.vstack(&[v[0], v[1], v[0]])?;
                let y = t.sigmoid(y);
                weighted_sum(t, y, &w)
            })
        }),
        GradCheck::new("hconcat", 50, |rng| {
            let m = rng.random_range(1..5);
            let (n1, n2) = (rng.random_range(1..4), rng.random_range(1..4));
            let a = random_tensor(rng, &[m, n1], -1.0, 1.0);
            let b = random_tensor(rng, &[m, n2], -1.0, 1.0);
            let w = random_tensor(rng, &[m, n1 + n2 + n1], -1.0, 1.0);
            check_inputs(&[a, b], |t, v| {
                let y = t.hconcat(&[v[0], v[1], v[0]])?;
                let y = t.sigmoid(y);
                weighted_sum(t, y, &w)
            })
        }),
    ]
}
