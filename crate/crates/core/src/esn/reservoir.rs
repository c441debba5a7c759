use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{spectral_radius, CsrMatrix, EsnConfig};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

const MAX_DRAWS: usize = 10;

/// A fixed random reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct Esn {
    /// `N x M` input weights.
    pub w_in: DMatrix<f64>,
    /// `N x N` recurrent weights, scaled to the target spectral radius.
    pub w_res: CsrMatrix,
    pub bias: DVector<f64>,
    pub config: EsnConfig,
}

/// Post-update states, one column per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub states: DMatrix<f64>,
    pub washout_len: usize,
}

impl StateTrajectory {
    pub fn usable_len(&self) -> usize {
        self.states.ncols() - self.washout_len
    }

    /// States after the washout.
    pub fn usable(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.states.columns(self.washout_len, self.usable_len())
    }

    pub fn last_state(&self) -> DVector<f64> {
        self.states.column(self.states.ncols() - 1).into_owned()
    }
}

/// Draws a reservoir from `cfg.seed`.
///
/// Draw order is fixed: `w_in` row-major, then the recurrent matrix
/// row-major (one connection draw per entry, followed by a value draw for
/// each connection that exists), then the bias. A recurrent draw that is
/// empty or has zero spectral radius is redrawn from a derived seed, up to
/// ten times.
pub fn init_reservoir(cfg: &EsnConfig) -> Result<Esn> {
    cfg.validate()?;
    let n = cfg.n_nodes;
    for attempt in 0..MAX_DRAWS {
        let seed = if attempt == 0 { cfg.seed } else { derive_seed(cfg.seed, attempt as u64) };
        let mut rng = rng_from_seed(seed);
        let mut sym = |scale: f64| (rng.gen::<f64>() * 2.0 - 1.0) * scale;

        let w_in = DMatrix::from_row_iterator(n, cfg.input_dim, (0..n * cfg.input_dim).map(|_| sym(cfg.input_scale)));
        drop(sym);
        let mut triples = Vec::with_capacity(n * n / 4);
        for i in 0..n {
            for j in 0..n {
                if rng.gen::<f64>() < cfg.connection_prob {
                    let v = rng.gen::<f64>() * 2.0 - 1.0;
                    triples.push((i, j, v));
                }
            }
        }
        let bias = DVector::from_iterator(n, (0..n).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * cfg.bias_scale));

        let mut w_res = CsrMatrix::from_triples(n, triples);
        if w_res.nnz() == 0 {
            continue;
        }
        let rho = spectral_radius(&w_res)?;
        if rho < 1e-12 {
            continue;
        }
        w_res.scale(cfg.spectral_radius_target / rho);
        return Ok(Esn {
            w_in,
            w_res,
            bias,
            config: *cfg,
        });
    }
    Err(Error::DegenerateReservoir { attempts: MAX_DRAWS })
}

impl Esn {
    pub fn n_nodes(&self) -> usize {
        self.config.n_nodes
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    /// Leaky update written into `next`; `scratch` holds the pre-activation.
    fn update(&self, state: &[f64], input: &[f64], scratch: &mut [f64], next: &mut [f64]) {
        self.w_res.mul_vec_into(state, scratch);
        let alpha = self.config.leak_rate;
        for (i, pre) in scratch.iter_mut().enumerate() {
            let mut acc = *pre + self.bias[i];
            for (j, u) in input.iter().enumerate() {
                acc += self.w_in[(i, j)] * u;
            }
            next[i] = (1.0 - alpha) * state[i] + alpha * acc.tanh();
        }
    }

    /// States for every column of `inputs` (`M x T`), starting from
    /// `initial` or the zero state.
    pub fn collect_states(&self, inputs: &DMatrix<f64>, initial: Option<&DVector<f64>>) -> Result<DMatrix<f64>> {
        let n = self.n_nodes();
        if inputs.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "reservoir expects {}-dimensional input, got {}",
                self.input_dim(),
                inputs.nrows()
            )));
        }
        let mut state: Vec<f64> = match initial {
            Some(x0) if x0.len() == n => x0.iter().copied().collect(),
            Some(x0) => {
                return Err(Error::DimensionMismatch(format!("initial state has {} entries, need {n}", x0.len())))
            }
            None => vec![0.0; n],
        };
        let mut scratch = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut input = vec![0.0; inputs.nrows()];
        let mut states = DMatrix::zeros(n, inputs.ncols());
        for t in 0..inputs.ncols() {
            input.iter_mut().zip(inputs.column(t).iter()).for_each(|(d, s)| *d = *s);
            self.update(&state, &input, &mut scratch, &mut next);
            std::mem::swap(&mut state, &mut next);
            states.column_mut(t).copy_from_slice(&state);
        }
        Ok(states)
    }

    /// Same as [`collect_states`](Self::collect_states) for a scalar input
    /// stream, without materializing an input matrix.
    pub fn collect_states_scalar(&self, inputs: &[f64]) -> Result<DMatrix<f64>> {
        if self.input_dim() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "scalar stream fed to a reservoir with {} inputs",
                self.input_dim()
            )));
        }
        let n = self.n_nodes();
        let mut state = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut states = DMatrix::zeros(n, inputs.len());
        for (t, &u) in inputs.iter().enumerate() {
            self.update(&state, &[u], &mut scratch, &mut next);
            std::mem::swap(&mut state, &mut next);
            states.column_mut(t).copy_from_slice(&state);
        }
        Ok(states)
    }
}

/// One reservoir update:
/// `x' = (1 - a) x + a tanh(W_res x + W_in u + b)`.
pub fn step(esn: &Esn, state: &DVector<f64>, input: &DVector<f64>) -> Result<DVector<f64>> {
    let n = esn.n_nodes();
    if state.len() != n || input.len() != esn.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state {} / input {} for a reservoir of {n} nodes and {} inputs",
            state.len(),
            input.len(),
            esn.input_dim()
        )));
    }
    let mut scratch = vec![0.0; n];
    let mut next = vec![0.0; n];
    esn.update(state.as_slice(), input.as_slice(), &mut scratch, &mut next);
    Ok(DVector::from_vec(next))
}

/// Drives the reservoir over `inputs` (`M x T`), keeping every state and
/// recording how many leading columns are washout.
pub fn run(esn: &Esn, inputs: &DMatrix<f64>, initial: Option<&DVector<f64>>, washout: usize) -> Result<StateTrajectory> {
    if inputs.ncols() <= washout {
        return Err(Error::arg(format!(
            "sequence of {} steps does not outlast a washout of {washout}",
            inputs.ncols()
        )));
    }
    Ok(StateTrajectory {
        states: esn.collect_states(inputs, initial)?,
        washout_len: washout,
    })
}
