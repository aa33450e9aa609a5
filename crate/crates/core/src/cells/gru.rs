use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cells::{glorot_uniform, orthogonal, BoundCell};
use crate::error::Result;
use crate::numcore::{ParamId, ParamStore, Tape, Tensor, Var};

/// Gated recurrent unit.
///
/// ```text
/// z  = σ(W_z x + U_z h + b_z)
/// r  = σ(W_r x + U_r h + b_r)
/// c  = tanh(W_c x + U_c (r ⊙ h) + b_c)
/// h' = (1 − z) ⊙ h + z ⊙ c
/// ```
///
/// With this convention `z → 0` keeps the previous state.
#[derive(Clone, Debug)]
pub struct GruCell {
    pub w_z: ParamId,
    pub w_r: ParamId,
    pub w_c: ParamId,
    pub u_z: ParamId,
    pub u_r: ParamId,
    pub u_c: ParamId,
    pub b_z: ParamId,
    pub b_r: ParamId,
    pub b_c: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl GruCell {
    pub fn register(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize) -> Result<Self> {
        let mut reg = |name: &str, shape: &[usize]| store.register(format!("{prefix}.{name}"), Tensor::zeros(shape));
        Ok(GruCell {
            w_z: reg("w_z", &[hidden, input])?,
            w_r: reg("w_r", &[hidden, input])?,
            w_c: reg("w_c", &[hidden, input])?,
            u_z: reg("u_z", &[hidden, hidden])?,
            u_r: reg("u_r", &[hidden, hidden])?,
            u_c: reg("u_c", &[hidden, hidden])?,
            b_z: reg("b_z", &[1, hidden])?,
            b_r: reg("b_r", &[1, hidden])?,
            b_c: reg("b_c", &[1, hidden])?,
            input,
            hidden,
        })
    }

    pub fn init(&self, store: &mut ParamStore, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in [self.w_z, self.w_r, self.w_c] {
            *store.get_mut(w) = glorot_uniform(&mut rng, self.hidden, self.input);
        }
        for u in [self.u_z, self.u_r, self.u_c] {
            *store.get_mut(u) = orthogonal(&mut rng, self.hidden);
        }
        for b in [self.b_z, self.b_r, self.b_c] {
            *store.get_mut(b) = Tensor::zeros(&[1, self.hidden]);
        }
    }

    pub fn bind(&self, tape: &mut Tape, store: &ParamStore) -> Result<BoundCell> {
        let mut p = |id| tape.param(store, id);
        let (w_z, w_r, w_c) = (p(self.w_z), p(self.w_r), p(self.w_c));
        let (u_z, u_r, u_c) = (p(self.u_z), p(self.u_r), p(self.u_c));
        let (b_z, b_r, b_c) = (p(self.b_z), p(self.b_r), p(self.b_c));
        Ok(BoundCell::Gru {
            w: tape.vstack(&[w_z, w_r, w_c])?,
            b: tape.hconcat(&[b_z, b_r, b_c])?,
            u_zr: tape.vstack(&[u_z, u_r])?,
            u_c,
            input: self.input,
            hidden: self.hidden,
        })
    }
}

pub(super) fn step(tape: &mut Tape, projected: Var, h: Var, u_zr: Var, u_c: Var, hidden: usize) -> Result<Var> {
    let rec = tape.matmul_t(h, u_zr)?;
    let xz = tape.cols(projected, 0, hidden)?;
    let xr = tape.cols(projected, hidden, hidden)?;
    let xc = tape.cols(projected, 2 * hidden, hidden)?;
    let hz = tape.cols(rec, 0, hidden)?;
    let hr = tape.cols(rec, hidden, hidden)?;

    let z = tape.add(xz, hz)?;
    let z = tape.sigmoid(z);
    let r = tape.add(xr, hr)?;
    let r = tape.sigmoid(r);
    let rh = tape.mul(r, h)?;
    let hc = tape.matmul_t(rh, u_c)?;
    let c = tape.add(xc, hc)?;
    let c = tape.tanh(c);

    let keep = tape.one_minus(z);
    let kept = tape.mul(keep, h)?;
    let fresh = tape.mul(z, c)?;
    tape.add(kept, fresh)
}
