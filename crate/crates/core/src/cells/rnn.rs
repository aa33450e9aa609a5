use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cells::{glorot_uniform, orthogonal, Activation, BoundCell};
use crate::error::Result;
use crate::numcore::{ParamId, ParamStore, Tape, Tensor};

/// `h' = act(W_h x + U_h h + b)`.
#[derive(Clone, Debug)]
pub struct PlainRnnCell {
    pub w_h: ParamId,
    pub u_h: ParamId,
    pub b: ParamId,
    pub activation: Activation,
    pub input: usize,
    pub hidden: usize,
}

impl PlainRnnCell {
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        activation: Activation,
    ) -> Result<Self> {
        Ok(PlainRnnCell {
            w_h: store.register(format!("{prefix}.w_h"), Tensor::zeros(&[hidden, input]))?,
            u_h: store.register(format!("{prefix}.u_h"), Tensor::zeros(&[hidden, hidden]))?,
            b: store.register(format!("{prefix}.b"), Tensor::zeros(&[1, hidden]))?,
            activation,
            input,
            hidden,
        })
    }

    pub fn init(&self, store: &mut ParamStore, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        *store.get_mut(self.w_h) = glorot_uniform(&mut rng, self.hidden, self.input);
        *store.get_mut(self.u_h) = orthogonal(&mut rng, self.hidden);
        *store.get_mut(self.b) = Tensor::zeros(&[1, self.hidden]);
    }

    pub fn bind(&self, tape: &mut Tape, store: &ParamStore) -> Result<BoundCell> {
        Ok(BoundCell::Plain {
            w: tape.param(store, self.w_h),
            u: tape.param(store, self.u_h),
            b: tape.param(store, self.b),
            activation: self.activation,
            input: self.input,
            hidden: self.hidden,
        })
    }
}
