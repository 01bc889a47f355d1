use alloc::vec::Vec;

use super::blocks::{dynamic_block, global_block, linear_terms, BlockObjective};
use super::lbfgs::{self, LbfgsConfig};
use super::phi::refresh_step;
use super::{
    elbo, init_variational, update_phi, AuxWeights, BlockId, ExpectedRateSums, FitConfig, Observations, Side,
    VariationalState,
};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::model::Hyperparams;
use crate::tensor::InteractionTensor;

#[derive(Debug, Clone)]
pub struct FitResult {
    pub state: VariationalState,
    /// ELBO after each completed sweep.
    pub elbo_trace: Vec<f64>,
    pub converged: bool,
}

/// Coordinate-ascent driver.
///
/// One [`sweep`](Fitter::sweep) refreshes `φ`, then for every step `t`
/// updates all user blocks, all item blocks and the weights at `t`, and
/// finally updates the global user and item blocks. The finer-grained
/// methods are public so callers can time or instrument individual phases.
pub struct Fitter<'a, E: Executor = Sequential> {
    hp: Hyperparams,
    config: FitConfig,
    exec: &'a E,
    obs: Observations<'a>,
    state: VariationalState,
    phi: AuxWeights,
    sums: ExpectedRateSums,
    trace: Vec<f64>,
}

impl<'a, E: Executor> Fitter<'a, E> {
    pub fn new(tensor: &'a InteractionTensor, hp: Hyperparams, config: FitConfig, exec: &'a E) -> Result<Self> {
        hp.validate()?;
        config.validate()?;
        let state = init_variational(&hp, tensor.n_users(), tensor.n_items(), tensor.n_steps(), &config)?;
        Self::with_state(tensor, hp, config, exec, state)
    }

    /// Start from an existing variational state.
    pub fn with_state(
        tensor: &'a InteractionTensor,
        hp: Hyperparams,
        config: FitConfig,
        exec: &'a E,
        state: VariationalState,
    ) -> Result<Self> {
        hp.validate()?;
        config.validate()?;
        if tensor.is_empty() {
            return Err(Error::EmptyInput);
        }
        if (state.n_users, state.n_items, state.n_steps, state.k)
            != (tensor.n_users(), tensor.n_items(), tensor.n_steps(), hp.k)
        {
            return Err(Error::InvalidDimensions(alloc::format!(
                "state is {}x{}x{} (K={}), tensor is {}x{}x{} (K={})",
                state.n_users,
                state.n_items,
                state.n_steps,
                state.k,
                tensor.n_users(),
                tensor.n_items(),
                tensor.n_steps(),
                hp.k
            )));
        }
        let phi = update_phi(&state, tensor);
        let sums = ExpectedRateSums::compute(&state);
        Ok(Self { hp, config, exec, obs: Observations::new(tensor), state, phi, sums, trace: Vec::new() })
    }

    pub fn state(&self) -> &VariationalState {
        &self.state
    }

    pub fn phi(&self) -> &AuxWeights {
        &self.phi
    }

    pub fn sums(&self) -> &ExpectedRateSums {
        &self.sums
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn tensor(&self) -> &'a InteractionTensor {
        self.obs.tensor()
    }

    pub fn elbo(&self) -> Result<f64> {
        elbo(&self.state, &self.phi, self.obs.tensor(), &self.hp)
    }

    fn lbfgs_config(&self) -> LbfgsConfig {
        LbfgsConfig { memory: self.config.lbfgs_memory, max_iters: self.config.inner_iters, ..LbfgsConfig::default() }
    }

    pub fn refresh_phi_step(&mut self, t: usize) {
        refresh_step(&self.state, self.obs.tensor(), t, &mut self.phi, self.exec);
    }

    pub fn refresh_phi(&mut self) {
        for t in 0..self.state.n_steps {
            self.refresh_phi_step(t);
        }
    }

    pub fn refresh_sums(&mut self, side: Side, t: usize) {
        self.sums.refresh(&self.state, side, t);
    }

    /// `Σ_obs y φ` for every entity of `side` at step `t`, laid out `[e * K + k]`.
    pub fn linear_terms_step(&self, side: Side, t: usize) -> Vec<f64> {
        let k = self.state.k;
        let mut out = alloc::vec![0.0; self.state.count(side) * k];
        let (obs, phi) = (&self.obs, &self.phi);
        self.exec.for_each_chunk(&mut out, k, |e, chunk| linear_terms(obs, phi, side, e, t, chunk));
        out
    }

    /// Linear terms summed over all steps.
    pub fn linear_terms_global(&self, side: Side) -> Vec<f64> {
        let k = self.state.k;
        let steps = self.state.n_steps;
        let mut out = alloc::vec![0.0; self.state.count(side) * k];
        let (obs, phi) = (&self.obs, &self.phi);
        self.exec.for_each_chunk(&mut out, k, |e, chunk| {
            for t in 0..steps {
                linear_terms(obs, phi, side, e, t, chunk);
            }
        });
        out
    }

    fn optimize_blocks<B>(&mut self, side: Side, id_of: impl Fn(usize) -> BlockId + Sync + Send, build: B) -> Result<()>
    where
        B: Fn(&VariationalState, usize) -> BlockObjective + Sync + Send,
    {
        let cfg = self.lbfgs_config();
        let state = &self.state;
        let results: Vec<core::result::Result<Vec<f64>, BlockId>> = self.exec.map(state.count(side), |e| {
            let id = id_of(e);
            let block = build(state, e);
            let x0 = state.block_params(id);
            let res = lbfgs::minimize(
                |x, g| {
                    let v = block.value_grad(x, g);
                    g.iter_mut().for_each(|gi| *gi = -*gi);
                    -v
                },
                &x0,
                &cfg,
            );
            if res.value.is_finite() && res.x.iter().all(|v| v.is_finite()) {
                Ok(res.x)
            } else {
                Err(id)
            }
        });
        let sweep = self.trace.len() + 1;
        for (e, r) in results.into_iter().enumerate() {
            let x = r.map_err(|id| Error::Diverged { block: Some(id), sweep })?;
            self.state.set_block_params(id_of(e), &x);
        }
        Ok(())
    }

    /// Optimize every dynamic block of `side` at `t` given precomputed linear terms.
    /// The other side's sums at `t` must be current.
    pub fn optimize_dynamic(&mut self, side: Side, t: usize, linear: &[f64]) -> Result<()> {
        let k = self.state.k;
        let hp = self.hp;
        let other = self.sums.at(side.other(), t).to_vec();
        self.optimize_blocks(
            side,
            |e| BlockId::Dynamic { side, entity: e, step: t },
            |state, e| dynamic_block(state, &hp, side, e, t, &linear[e * k..(e + 1) * k], &other),
        )
    }

    /// Refresh the other side's sums at `t`, then update all dynamic blocks of `side` at `t`.
    pub fn update_dynamic(&mut self, side: Side, t: usize) -> Result<()> {
        self.refresh_sums(side.other(), t);
        let lin = self.linear_terms_step(side, t);
        self.optimize_dynamic(side, t, &lin)
    }

    /// Refresh the other side's sums at every step, then update all global blocks of `side`.
    pub fn update_globals(&mut self, side: Side) -> Result<()> {
        for t in 0..self.state.n_steps {
            self.refresh_sums(side.other(), t);
        }
        let lin = self.linear_terms_global(side);
        let k = self.state.k;
        let hp = self.hp;
        let other = self.sums.side(side.other()).to_vec();
        self.optimize_blocks(
            side,
            |e| BlockId::Global { side, entity: e },
            |state, e| global_block(state, &hp, side, e, &lin[e * k..(e + 1) * k], &other),
        )
    }

    /// One full coordinate-ascent sweep; returns the ELBO afterwards.
    pub fn sweep(&mut self) -> Result<f64> {
        self.refresh_phi();
        for t in 0..self.state.n_steps {
            self.update_dynamic(Side::User, t)?;
            self.update_dynamic(Side::Item, t)?;
            self.refresh_phi_step(t);
        }
        self.update_globals(Side::User)?;
        self.update_globals(Side::Item)?;
        for t in 0..self.state.n_steps {
            self.refresh_sums(Side::User, t);
            self.refresh_sums(Side::Item, t);
        }
        let sweep = self.trace.len() + 1;
        let value = self.elbo().map_err(|_| Error::Diverged { block: None, sweep })?;
        self.trace.push(value);
        Ok(value)
    }

    /// Sweep until the relative ELBO change drops below the tolerance or
    /// `max_sweeps` is reached.
    pub fn run(mut self) -> Result<FitResult> {
        let mut converged = false;
        while self.trace.len() < self.config.max_sweeps {
            let value = self.sweep()?;
            if let [.., prev, _] = self.trace[..] {
                if ((value - prev) / prev).abs() < self.config.tolerance {
                    converged = true;
                    break;
                }
            }
        }
        Ok(FitResult { state: self.state, elbo_trace: self.trace, converged })
    }
}

/// Fit the variational posterior to `tensor`.
pub fn fit<E: Executor>(
    tensor: &InteractionTensor,
    hp: &Hyperparams,
    config: &FitConfig,
    exec: &E,
) -> Result<FitResult> {
    Fitter::new(tensor, *hp, *config, exec)?.run()
}
