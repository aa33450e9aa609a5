use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cells::{glorot_uniform, Activation};
use crate::error::Result;
use crate::numcore::{ParamId, ParamStore, Tape, Tensor, Var};

/// Fully connected layer `act(x · Wᵀ + b)`.
#[derive(Clone, Debug)]
pub struct DenseLayer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub activation: Activation,
    pub input: usize,
    pub output: usize,
}

impl DenseLayer {
    /// Registers `{prefix}.weight` (`out × in`) and `{prefix}.bias`
    /// (`1 × out`), both zero until [`DenseLayer::init`].
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        output: usize,
        activation: Activation,
    ) -> Result<Self> {
        let weight = store.register(format!("{prefix}.weight"), Tensor::zeros(&[output, input]))?;
        let bias = store.register(format!("{prefix}.bias"), Tensor::zeros(&[1, output]))?;
        Ok(DenseLayer {
            weight,
            bias,
            activation,
            input,
            output,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(&self, store: &mut ParamStore, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        *store.get_mut(self.weight) = glorot_uniform(&mut rng, self.output, self.input);
        *store.get_mut(self.bias) = Tensor::zeros(&[1, self.output]);
    }

    pub fn bind(&self, tape: &mut Tape, store: &ParamStore) -> BoundDense {
        BoundDense {
            w: tape.param(store, self.weight),
            b: tape.param(store, self.bias),
            activation: self.activation,
        }
    }
}

pub struct BoundDense {
    w: Var,
    b: Var,
    activation: Activation,
}

impl BoundDense {
    /// Applies the layer to every row of `x`.
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let y = tape.matmul_t(x, self.w)?;
        let y = tape.add_bias(y, self.b)?;
        Ok(self.activation.apply(tape, y))
    }
}
