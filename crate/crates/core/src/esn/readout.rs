use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::dsp::ZScore;
use crate::{Error, Result};

/// Linear readout `y = W_out x + c`. The intercept `c` comes from fitting
/// on states augmented with a constant-1 row.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    /// `P x N`.
    pub w_out: DMatrix<f64>,
    pub intercept: DVector<f64>,
    pub ridge_lambda: f64,
    /// Normalization applied to the reservoir's inputs before driving it.
    pub input_normalization: Option<ZScore>,
}

impl Readout {
    pub fn n_outputs(&self) -> usize {
        self.w_out.nrows()
    }

    pub fn n_states(&self) -> usize {
        self.w_out.ncols()
    }

    /// `[W_out | c]`, the weights acting on the augmented state.
    pub fn augmented_weights(&self) -> DMatrix<f64> {
        let mut w = self.w_out.clone().insert_column(self.n_states(), 0.0);
        w.set_column(self.n_states(), &self.intercept);
        w
    }
}

/// Running sums `S S^T` and `T S^T` over augmented states, so long state
/// sequences never have to be held in memory at once.
#[derive(Debug, Clone)]
pub struct RidgeAccumulator {
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    count: usize,
}

impl RidgeAccumulator {
    pub fn new(n_states: usize, n_outputs: usize) -> Self {
        Self {
            gram: DMatrix::zeros(n_states + 1, n_states + 1),
            cross: DMatrix::zeros(n_outputs, n_states + 1),
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, states: DMatrixView<'_, f64>, targets: DMatrixView<'_, f64>) -> Result<()> {
        let n = self.gram.nrows() - 1;
        if states.nrows() != n || targets.nrows() != self.cross.nrows() || states.ncols() != targets.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "states {}x{} and targets {}x{} for an accumulator of {n} states and {} outputs",
                states.nrows(),
                states.ncols(),
                targets.nrows(),
                targets.ncols(),
                self.cross.nrows()
            )));
        }
        let k = states.ncols();
        if k == 0 {
            return Ok(());
        }
        let mut aug = DMatrix::from_element(n + 1, k, 1.0);
        aug.rows_mut(0, n).copy_from(&states);
        let aug_t = aug.transpose();
        self.gram.gemm(1.0, &aug, &aug_t, 1.0);
        self.cross.gemm(1.0, &targets, &aug_t, 1.0);
        self.count += k;
        Ok(())
    }

    /// Merges another accumulator's sums into this one.
    pub fn merge(&mut self, other: &RidgeAccumulator) {
        self.gram += &other.gram;
        self.cross += &other.cross;
        self.count += other.count;
    }

    /// Solves `W (S S^T + lambda I) = T S^T` by Cholesky factorization.
    pub fn solve(&self, ridge_lambda: f64) -> Result<Readout> {
        if self.count == 0 {
            return Err(Error::NoUsableData("ridge regression without samples".into()));
        }
        if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
            return Err(Error::arg(format!("ridge lambda must be finite and >= 0, got {ridge_lambda}")));
        }
        let n = self.gram.nrows() - 1;
        let mut a = self.gram.clone();
        for i in 0..=n {
            a[(i, i)] += ridge_lambda;
        }
        let chol = a.cholesky().ok_or(Error::IllConditioned)?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        if !(lo > 0.0) || (lo / hi).powi(2) < 1e-15 {
            return Err(Error::IllConditioned);
        }
        let w = chol.solve(&self.cross.transpose()).transpose();
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned);
        }
        Ok(Readout {
            w_out: w.columns(0, n).into_owned(),
            intercept: w.column(n).into_owned(),
            ridge_lambda,
            input_normalization: None,
        })
    }

    /// `S S^T` over the augmented states.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn cross(&self) -> &DMatrix<f64> {
        &self.cross
    }
}

/// Ridge-regression readout from `N x K` states to `P x K` targets.
pub fn train_readout(states: &DMatrix<f64>, targets: &DMatrix<f64>, ridge_lambda: f64) -> Result<Readout> {
    if states.ncols() == 0 {
        return Err(Error::arg("need at least one training column"));
    }
    let mut acc = RidgeAccumulator::new(states.nrows(), targets.nrows());
    acc.add(states.as_view(), targets.as_view())?;
    acc.solve(ridge_lambda)
}

pub fn apply_readout(readout: &Readout, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if states.nrows() != readout.n_states() {
        return Err(Error::DimensionMismatch(format!(
            "readout expects {} states, got {}",
            readout.n_states(),
            states.nrows()
        )));
    }
    let mut out = &readout.w_out * states;
    for mut col in out.column_iter_mut() {
        col += &readout.intercept;
    }
    Ok(out)
}

/// Root-mean-square error divided by the population standard deviation of
/// the target.
pub fn nrmse(prediction: &[f64], target: &[f64]) -> Result<f64> {
    if prediction.len() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "prediction has {} samples, target {}",
            prediction.len(),
            target.len()
        )));
    }
    if target.len() < 2 {
        return Err(Error::arg("NRMSE needs at least two samples"));
    }
    let n = target.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let var = target.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::ConstantTarget);
    }
    let mse = prediction.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n;
    Ok((mse / var).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(r, c, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn zero_targets_zero_weights() {
        let r = train_readout(&random(10, 40, 1), &DMatrix::zeros(3, 40), 1e-6).unwrap();
        assert!(r.w_out.iter().all(|&v| v == 0.0));
        assert!(r.intercept.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn recovers_teacher() {
        let s = random(20, 200, 2);
        let g = random(4, 20, 3);
        let r = train_readout(&s, &(&g * &s), 1e-12).unwrap();
        assert!((&r.w_out - &g).amax() < 1e-6);
        assert!(r.intercept.amax() < 1e-6);
    }

    #[test]
    fn fits_intercept() {
        let s = random(5, 100, 4);
        let g = random(2, 5, 5);
        let mut t = &g * &s;
        t.row_mut(0).add_scalar_mut(3.0);
        let r = train_readout(&s, &t, 1e-12).unwrap();
        assert!((r.intercept[0] - 3.0).abs() < 1e-8);
        let y = apply_readout(&r, &s).unwrap();
        assert!((y - t).amax() < 1e-8);
    }

    #[test]
    fn shrinkage_is_monotone() {
        let s = random(15, 60, 6);
        let t = random(3, 60, 7);
        let norms: Vec<f64> = [1e-8, 1e-4, 1e-2, 1.0]
            .iter()
            .map(|&l| train_readout(&s, &t, l).unwrap().augmented_weights().norm())
            .collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]), "{norms:?}");
    }

    #[test]
    fn singular_without_ridge() {
        // Two identical state rows make S S^T singular.
        let mut s = random(4, 30, 8);
        let r0 = s.row(0).into_owned();
        s.set_row(1, &r0);
        let t = random(1, 30, 9);
        assert!(matches!(train_readout(&s, &t, 0.0), Err(Error::IllConditioned)));
        assert!(train_readout(&s, &t, 1e-3).is_ok());
    }

    #[test]
    fn normal_equations_hold() {
        let s = random(30, 400, 10);
        let t = random(5, 400, 11);
        let lambda = 1e-4;
        let mut acc = RidgeAccumulator::new(30, 5);
        acc.add(s.columns(0, 150), t.columns(0, 150)).unwrap();
        acc.add(s.columns(150, 250), t.columns(150, 250)).unwrap();
        let r = acc.solve(lambda).unwrap();
        let a = acc.gram() + DMatrix::identity(31, 31) * lambda;
        let resid = (r.augmented_weights() * a - acc.cross()).norm();
        assert!(resid < 1e-8 * acc.cross().norm());
        let whole = train_readout(&s, &t, lambda).unwrap();
        assert!((whole.augmented_weights() - r.augmented_weights()).amax() < 1e-12);
    }

    #[test]
    fn apply_checks_dims() {
        let r = train_readout(&random(3, 10, 1), &random(2, 10, 2), 1e-3).unwrap();
        assert!(apply_readout(&r, &DMatrix::zeros(4, 5)).is_err());
        let y = apply_readout(&Readout { w_out: DMatrix::identity(3, 3), intercept: DVector::zeros(3), ridge_lambda: 0.0, input_normalization: None }, &random(3, 6, 3)).unwrap();
        assert_eq!(y, random(3, 6, 3));
    }

    #[test]
    fn nrmse_cases() {
        let t = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(nrmse(&t, &t).unwrap(), 0.0);
        assert!((nrmse(&[3.5; 4], &t).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(nrmse(&[0.0, 0.0], &[-1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(nrmse(&[1.0, 2.0], &[5.0, 5.0]), Err(Error::ConstantTarget)));
        assert!(nrmse(&[1.0], &[1.0]).is_err());
    }
}
