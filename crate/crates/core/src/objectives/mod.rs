//! Training loss and evaluation metric, both on time-domain signals.

use crate::error::{Error, Result};
use crate::numcore::kernels::dot;
use crate::numcore::{Tape, Var};

/// Added to `xᵀx` so a silent output does not divide by zero.
pub const LOSS_EPS: f64 = 1e-12;

/// SI-SDR values are clamped to `±SDR_CLAMP_DB`.
pub const SDR_CLAMP_DB: f64 = 60.0;

/// SDR-proxy loss `−(xᵀy)² / (xᵀx + ε)` for output `x` and target `y`.
///
/// It lies in `[−‖y‖², 0]` and reaches the lower end exactly when `x` is
/// parallel to `y`; scaling `x` leaves it unchanged.
pub fn sdr_loss(tape: &mut Tape, x: Var, y: Var) -> Result<Var> {
    if tape.value(x).len() != tape.value(y).len() {
        return Err(Error::dim("sdr_loss", tape.shape(x), tape.shape(y)));
    }
    let xy = tape.dot(x, y)?;
    let num = tape.mul(xy, xy)?;
    let xx = tape.dot(x, x)?;
    let den = tape.add_scalar(xx, LOSS_EPS);
    let ratio = tape.div(num, den)?;
    Ok(tape.scale(ratio, -1.0))
}

/// Plain-value version of [`sdr_loss`].
pub fn sdr_loss_value(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim("sdr_loss", &[x.len()], &[y.len()]));
    }
    let xy = dot(x, y);
    let xx = dot(x, x);
    Ok(-(xy * xy) / (xx + LOSS_EPS))
}

/// Scale-invariant signal-to-distortion ratio in dB.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SdrScore(pub f64);

impl SdrScore {
    pub fn db(self) -> f64 {
        self.0
    }
}

/// SI-SDR of `estimate` against `reference`:
/// `s = (⟨e,r⟩/⟨r,r⟩)·r`, `10·log₁₀(‖s‖² / ‖e − s‖²)`, clamped to ±60 dB.
pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<SdrScore> {
    if estimate.len() != reference.len() {
        return Err(Error::dim("si_sdr", &[estimate.len()], &[reference.len()]));
    }
    let rr: f64 = reference.iter().map(|r| r * r).sum();
    if rr <= 0.0 {
        return Err(Error::Input("si_sdr reference has zero energy".into()));
    }
    if estimate.iter().all(|&e| e == 0.0) {
        return Err(Error::Input("si_sdr estimate is identically zero".into()));
    }
    let er: f64 = estimate.iter().zip(reference).map(|(e, r)| e * r).sum();
    let alpha = er / rr;
    let (mut target, mut residual) = (0.0, 0.0);
    for (e, r) in estimate.iter().zip(reference) {
        let s = alpha * r;
        target += s * s;
        residual += (e - s) * (e - s);
    }
    let db = if residual == 0.0 {
        SDR_CLAMP_DB
    } else if target == 0.0 {
        -SDR_CLAMP_DB
    } else {
        (10.0 * (target / residual).log10()).clamp(-SDR_CLAMP_DB, SDR_CLAMP_DB)
    };
    Ok(SdrScore(db))
}
