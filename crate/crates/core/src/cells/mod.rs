//! Dense layers and recurrent cells.
//!
//! Layers register their weights in a [`ParamStore`] under stable dotted
//! names (`front.weight`, `cell.u_z`, ...). A forward pass first *binds* a
//! layer, copying its weights onto the tape once, and then applies the bound
//! layer as often as the unrolling requires.
//!
//! Vectors are `1 × n` rows; weights are stored `out × in`.

mod dense;
mod gru;
mod init;
mod rnn;

pub use dense::{BoundDense, DenseLayer};
pub use gru::GruCell;
pub use init::{glorot_uniform, orthogonal};
pub use rnn::PlainRnnCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{ParamStore, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Softplus,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, v: Var) -> Var {
        match self {
            Activation::Softplus => tape.softplus(v),
            Activation::Sigmoid => tape.sigmoid(v),
            Activation::Tanh => tape.tanh(v),
            Activation::Identity => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Gru,
    Plain,
}

/// A recurrent cell of either kind.
#[derive(Clone, Debug)]
pub enum Cell {
    Plain(PlainRnnCell),
    Gru(GruCell),
}

impl Cell {
    pub fn register(kind: CellKind, store: &mut ParamStore, prefix: &str, input: usize, hidden: usize) -> Result<Self> {
        Ok(match kind {
            CellKind::Plain => Cell::Plain(PlainRnnCell::register(store, prefix, input, hidden, Activation::Tanh)?),
            CellKind::Gru => Cell::Gru(GruCell::register(store, prefix, input, hidden)?),
        })
    }

    pub fn kind(&self) -> CellKind {
        match self {
            Cell::Plain(_) => CellKind::Plain,
            Cell::Gru(_) => CellKind::Gru,
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            Cell::Plain(c) => c.hidden,
            Cell::Gru(c) => c.hidden,
        }
    }

    pub fn input(&self) -> usize {
        match self {
            Cell::Plain(c) => c.input,
            Cell::Gru(c) => c.input,
        }
    }

    pub fn init(&self, store: &mut ParamStore, seed: u64) {
        match self {
            Cell::Plain(c) => c.init(store, seed),
            Cell::Gru(c) => c.init(store, seed),
        }
    }

    pub fn bind(&self, tape: &mut Tape, store: &ParamStore) -> Result<BoundCell> {
        match self {
            Cell::Plain(c) => c.bind(tape, store),
            Cell::Gru(c) => c.bind(tape, store),
        }
    }
}

/// A cell whose weights are on a tape.
///
/// Unrolling is split in two: [`BoundCell::project`] applies the
/// input-facing weights to many inputs at once, and [`BoundCell::step`]
/// consumes one projected row plus the previous state. [`BoundCell::cell_step`]
/// does both for a single input and yields identical values.
pub enum BoundCell {
    Plain {
        w: Var,
        u: Var,
        b: Var,
        activation: Activation,
        input: usize,
        hidden: usize,
    },
    Gru {
        /// `[W_z; W_r; W_c]`, `3h × in`.
        w: Var,
        /// `[b_z, b_r, b_c]`, `1 × 3h`.
        b: Var,
        /// `[U_z; U_r]`, `2h × h`.
        u_zr: Var,
        u_c: Var,
        input: usize,
        hidden: usize,
    },
}

impl BoundCell {
    pub fn hidden(&self) -> usize {
        match *self {
            BoundCell::Plain { hidden, .. } | BoundCell::Gru { hidden, .. } => hidden,
        }
    }

    pub fn input(&self) -> usize {
        match *self {
            BoundCell::Plain { input, .. } | BoundCell::Gru { input, .. } => input,
        }
    }

    pub fn zero_state(&self, tape: &mut Tape) -> Var {
        tape.constant(Tensor::zeros(&[1, self.hidden()]))
    }

    /// Input projections (bias included) for every row of `x`.
    pub fn project(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        match *self {
            BoundCell::Plain { w, b, .. } | BoundCell::Gru { w, b, .. } => {
                let p = tape.matmul_t(x, w)?;
                tape.add_bias(p, b)
            }
        }
    }

    /// Advances the state by one input whose projection is `projected`.
    pub fn step(&self, tape: &mut Tape, projected: Var, h: Var) -> Result<Var> {
        if tape.shape(h) != [1, self.hidden()] {
            return Err(Error::dim("cell_step", tape.shape(h), &[1, self.hidden()]));
        }
        match *self {
            BoundCell::Plain { u, activation, .. } => {
                let r = tape.matmul_t(h, u)?;
                let pre = tape.add(projected, r)?;
                Ok(activation.apply(tape, pre))
            }
            BoundCell::Gru { u_zr, u_c, hidden, .. } => gru::step(tape, projected, h, u_zr, u_c, hidden),
        }
    }

    pub fn cell_step(&self, tape: &mut Tape, x: Var, h: Var) -> Result<Var> {
        if tape.shape(x) != [1, self.input()] {
            return Err(Error::dim("cell_step", tape.shape(x), &[1, self.input()]));
        }
        let p = self.project(tape, x)?;
        self.step(tape, p, h)
    }
}
