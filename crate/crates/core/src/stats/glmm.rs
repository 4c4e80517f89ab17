//! Logistic regression with crossed random intercepts, fitted by the
//! Laplace approximation.
//!
//! Random effects are parameterised spherically, `u_g = σ_g · b_g` with
//! `b ~ N(0, I)`. For fixed σ the mode of `(β, b)` comes from penalised
//! IRLS; the σ are then chosen by golden-section search on `log σ`, one
//! factor at a time, until a full cycle stops moving.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

/// A grouping factor: one level index per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
    pub index: Vec<usize>,
}

/// Response, fixed-effect design (intercept included) and grouping factors.
#[derive(Debug, Clone)]
pub struct GlmmData {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone)]
pub struct GlmmOptions {
    /// Fix the random-effect standard deviations instead of estimating them.
    pub fixed_sigma: Option<Vec<f64>>,
    /// Search bounds for each σ.
    pub sigma_bounds: (f64, f64),
    /// Golden-section tolerance on `log σ`.
    pub tol: f64,
    pub max_cycles: usize,
    pub max_pirls_iter: usize,
}

impl Default for GlmmOptions {
    fn default() -> Self {
        GlmmOptions {
            fixed_sigma: None,
            sigma_bounds: (1e-4, 10.0),
            tol: 1e-4,
            max_cycles: 20,
            max_pirls_iter: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEffect {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
    pub odds_ratio: f64,
    /// 95% Wald interval for the odds ratio.
    pub or_ci_low: f64,
    pub or_ci_high: f64,
}

impl FixedEffect {
    fn new(name: String, estimate: f64, std_error: f64) -> Self {
        let z = estimate / std_error;
        let normal = Normal::standard();
        FixedEffect {
            name,
            estimate,
            std_error,
            z,
            p_value: 2.0 * normal.sf(z.abs()),
            odds_ratio: estimate.exp(),
            or_ci_low: (estimate - 1.96 * std_error).exp(),
            or_ci_high: (estimate + 1.96 * std_error).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponent {
    pub factor: String,
    pub sigma: f64,
    pub variance: f64,
    /// Predicted random intercept per level.
    pub intercepts: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub fixed: Vec<FixedEffect>,
    pub components: Vec<VarianceComponent>,
    pub marginal_r2: f64,
    pub conditional_r2: f64,
    /// Laplace-approximated deviance at the optimum.
    pub deviance: f64,
    pub n: usize,
    pub converged: bool,
    /// Fitted probabilities pinned at 0 or 1 for part of the data.
    pub separation: bool,
    pub outer_iterations: usize,
    pub pirls_iterations: usize,
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(eta))` without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

struct Model<'a> {
    data: &'a GlmmData,
    /// Row-major copy of the design.
    rows: Vec<f64>,
    p: usize,
    offsets: Vec<usize>,
    q: usize,
}

struct Mode {
    /// `(β, b)` stacked.
    v: DVector<f64>,
    /// Negative Hessian of the penalised log-likelihood at the mode.
    h: DMatrix<f64>,
    deviance: f64,
    converged: bool,
    iterations: usize,
}

impl<'a> Model<'a> {
    fn new(data: &'a GlmmData) -> Self {
        let p = data.x.ncols();
        let mut offsets = Vec::new();
        let mut q = 0;
        for f in &data.factors {
            offsets.push(p + q);
            q += f.levels.len();
        }
        let rows = data.x.transpose().as_slice().to_vec();
        Model {
            data,
            rows,
            p,
            offsets,
            q,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.p..(i + 1) * self.p]
    }

    fn eta(&self, v: &DVector<f64>, sigma: &[f64]) -> Vec<f64> {
        let beta = &v.as_slice()[..self.p];
        (0..self.data.y.len())
            .map(|i| {
                let mut e: f64 = self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
                for (g, f) in self.data.factors.iter().enumerate() {
                    e += sigma[g] * v[self.offsets[g] + f.index[i]];
                }
                e
            })
            .collect()
    }

    /// Penalised log-likelihood `l(η) − |b|²/2`.
    fn objective(&self, v: &DVector<f64>, sigma: &[f64]) -> f64 {
        let eta = self.eta(v, sigma);
        let ll: f64 = eta
            .iter()
            .zip(&self.data.y)
            .map(|(&e, &y)| y * e - softplus(e))
            .sum();
        let pen: f64 = v.rows(self.p, self.q).iter().map(|b| b * b).sum();
        ll - 0.5 * pen
    }

    /// Gradient and negative Hessian of the penalised log-likelihood.
    fn derivatives(&self, v: &DVector<f64>, sigma: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (p, m) = (self.p, self.p + self.q);
        let eta = self.eta(v, sigma);
        let mut grad = DVector::zeros(m);
        let mut h = DMatrix::zeros(m, m);
        let mut cols: Vec<(usize, f64)> = Vec::with_capacity(self.data.factors.len());
        for i in 0..self.data.y.len() {
            let x = self.row(i);
            let mu = logistic(eta[i]);
            let w = mu * (1.0 - mu);
            let r = self.data.y[i] - mu;
            cols.clear();
            for (g, f) in self.data.factors.iter().enumerate() {
                cols.push((self.offsets[g] + f.index[i], sigma[g]));
            }
            for j in 0..p {
                let xj = x[j];
                grad[j] += xj * r;
                let wx = w * xj;
                for k in 0..=j {
                    h[(j, k)] += wx * x[k];
                }
                for &(c, s) in &cols {
                    h[(c, j)] += wx * s;
                }
            }
            for (a, &(c, s)) in cols.iter().enumerate() {
                grad[c] += s * r;
                for &(d, t) in &cols[..=a] {
                    h[(c, d)] += w * s * t;
                }
            }
        }
        for c in p..m {
            grad[c] -= v[c];
            h[(c, c)] += 1.0;
        }
        // Fill the upper triangle; every entry above was written below the
        // diagonal (factor columns come after fixed ones, later factors
        // after earlier ones).
        for j in 0..m {
            for k in 0..j {
                h[(k, j)] = h[(j, k)];
            }
        }
        (grad, h)
    }

    /// Penalised IRLS from `start`, then the Laplace deviance.
    fn mode(&self, start: &DVector<f64>, sigma: &[f64], max_iter: usize) -> Result<Mode, StatsError> {
        let mut v = start.clone();
        let mut obj = self.objective(&v, sigma);
        let mut converged = false;
        let mut iterations = 0;
        let (mut grad, mut h) = self.derivatives(&v, sigma);
        while iterations < max_iter {
            iterations += 1;
            let chol = h.clone().cholesky().ok_or(StatsError::RankDeficient)?;
            let step = chol.solve(&grad);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = &v + &step * t;
                let o = self.objective(&cand, sigma);
                if o >= obj - 1e-12 * obj.abs().max(1.0) {
                    v = cand;
                    let gain = o - obj;
                    obj = o;
                    accepted = true;
                    if step.amax() * t < 1e-10 || gain.abs() < 1e-12 * obj.abs().max(1.0) {
                        converged = true;
                    }
                    break;
                }
                t *= 0.5;
            }
            (grad, h) = self.derivatives(&v, sigma);
            if !accepted || converged {
                converged = true;
                break;
            }
        }
        // log det of the b-block of the negative Hessian.
        let hb = h.view((self.p, self.p), (self.q, self.q)).clone_owned();
        let logdet = match hb.cholesky() {
            Some(c) => 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
            None => return Err(StatsError::RankDeficient),
        };
        Ok(Mode {
            deviance: -2.0 * obj + logdet,
            v,
            h,
            converged,
            iterations,
        })
    }
}

/// Golden-section minimisation of `f` on `[a, b]`.
fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn column_rank(x: &DMatrix<f64>) -> usize {
    let svd = x.clone().svd(false, false);
    let max = svd.singular_values.max();
    let eps = max * 1e-10 * x.nrows().max(x.ncols()) as f64;
    svd.singular_values.iter().filter(|&&s| s > eps).count()
}

fn validate(data: &GlmmData) -> Result<(), StatsError> {
    let n = data.y.len();
    if n == 0 {
        return Err(StatsError::EmptyInput);
    }
    if data.x.nrows() != n || data.names.len() != data.x.ncols() {
        return Err(StatsError::DimensionMismatch);
    }
    if data.y.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(StatsError::InvalidOutcome);
    }
    for f in &data.factors {
        if f.index.len() != n || f.index.iter().any(|&i| i >= f.levels.len()) {
            return Err(StatsError::DimensionMismatch);
        }
        if f.levels.len() < 2 {
            return Err(StatsError::InsufficientLevels(f.name.clone()));
        }
    }
    if column_rank(&data.x) < data.x.ncols() {
        return Err(StatsError::RankDeficient);
    }
    Ok(())
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Fit the crossed random-intercepts logistic model.
pub fn fit_glmm(data: &GlmmData, opts: &GlmmOptions) -> Result<RegressionFit, StatsError> {
    validate(data)?;
    let model = Model::new(data);
    let k = data.factors.len();
    let m = model.p + model.q;
    let mut start = DVector::zeros(m);
    let mut pirls_iterations = 0;
    let mut all_converged = true;
    let mut outer_iterations = 0;

    let sigma: Vec<f64> = match &opts.fixed_sigma {
        Some(s) if s.len() == k => s.clone(),
        Some(_) => return Err(StatsError::DimensionMismatch),
        None => {
            let (lo, hi) = (opts.sigma_bounds.0.ln(), opts.sigma_bounds.1.ln());
            let mut log_sigma = vec![0.5f64.ln(); k];
            let mut best = f64::INFINITY;
            let mut cycles_converged = false;
            for _ in 0..opts.max_cycles {
                outer_iterations += 1;
                let before = log_sigma.clone();
                for g in 0..k {
                    let mut failure = None;
                    let (arg, dev) = golden_section(
                        |ls| {
                            let mut s: Vec<f64> = log_sigma.iter().map(|l| l.exp()).collect();
                            s[g] = ls.exp();
                            match model.mode(&start, &s, opts.max_pirls_iter) {
                                Ok(md) => {
                                    pirls_iterations += md.iterations;
                                    all_converged &= md.converged;
                                    start = md.v;
                                    md.deviance
                                }
                                Err(e) => {
                                    failure = Some(e);
                                    f64::INFINITY
                                }
                            }
                        },
                        lo,
                        hi,
                        opts.tol,
                    );
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    log_sigma[g] = arg;
                    best = dev;
                }
                let moved = log_sigma
                    .iter()
                    .zip(&before)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if moved < opts.tol {
                    cycles_converged = true;
                    break;
                }
            }
            let _ = best;
            all_converged &= cycles_converged;
            log_sigma.iter().map(|l| l.exp()).collect()
        }
    };

    let md = model.mode(&start, &sigma, opts.max_pirls_iter * 4)?;
    pirls_iterations += md.iterations;
    all_converged &= md.converged;

    let cov = md
        .h
        .clone()
        .cholesky()
        .ok_or(StatsError::RankDeficient)?
        .inverse();
    let p = model.p;
    let beta: Vec<f64> = md.v.rows(0, p).iter().copied().collect();
    let fixed: Vec<FixedEffect> = (0..p)
        .map(|j| FixedEffect::new(data.names[j].clone(), beta[j], cov[(j, j)].sqrt()))
        .collect();

    let components: Vec<VarianceComponent> = data
        .factors
        .iter()
        .enumerate()
        .map(|(g, f)| VarianceComponent {
            factor: f.name.clone(),
            sigma: sigma[g],
            variance: sigma[g] * sigma[g],
            intercepts: f
                .levels
                .iter()
                .enumerate()
                .map(|(l, name)| (name.clone(), sigma[g] * md.v[model.offsets[g] + l]))
                .collect(),
        })
        .collect();

    let fixed_eta: Vec<f64> = (0..data.x.nrows())
        .map(|i| (0..p).map(|j| data.x[(i, j)] * beta[j]).sum())
        .collect();
    let var_f = sample_variance(&fixed_eta);
    let var_r: f64 = sigma.iter().map(|s| s * s).sum();
    let resid = std::f64::consts::PI.powi(2) / 3.0;
    let total = var_f + var_r + resid;

    let eta = model.eta(&md.v, &sigma);
    let pinned = eta.iter().filter(|e| e.abs() > 18.0).count();
    let separation = pinned * 100 > eta.len() || beta[1..].iter().any(|b| b.abs() > 15.0);

    Ok(RegressionFit {
        fixed,
        components,
        marginal_r2: var_f / total,
        conditional_r2: (var_f + var_r) / total,
        deviance: md.deviance,
        n: data.y.len(),
        converged: all_converged,
        separation,
        outer_iterations,
        pirls_iterations,
    })
}

/// Plain logistic regression by IRLS. Returns estimates and standard errors.
pub fn logistic_irls(x: &DMatrix<f64>, y: &[f64], max_iter: usize) -> Result<(Vec<f64>, Vec<f64>), StatsError> {
    let (n, p) = (x.nrows(), x.ncols());
    if n == 0 || y.len() != n {
        return Err(StatsError::DimensionMismatch);
    }
    let mut beta = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    for _ in 0..max_iter {
        let eta = x * &beta;
        let mut grad = DVector::zeros(p);
        info = DMatrix::zeros(p, p);
        for i in 0..n {
            let mu = logistic(eta[i]);
            let w = mu * (1.0 - mu);
            let row = x.row(i);
            grad += row.transpose() * (y[i] - mu);
            info += row.transpose() * row * w;
        }
        let step = info
            .clone()
            .cholesky()
            .ok_or(StatsError::RankDeficient)?
            .solve(&grad);
        beta += &step;
        if step.amax() < 1e-12 {
            break;
        }
    }
    let cov = info.cholesky().ok_or(StatsError::RankDeficient)?.inverse();
    let se = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
    Ok((beta.iter().copied().collect(), se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic(seed: u64, n: usize, beta: &[f64], sigma: [f64; 2]) -> GlmmData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std_normal = Normal::standard();
        let normal = |rng: &mut ChaCha8Rng| std_normal.inverse_cdf(rng.random_range(1e-12..1.0));
        let ua: Vec<f64> = (0..6).map(|_| sigma[0] * normal(&mut rng)).collect();
        let ub: Vec<f64> = (0..4).map(|_| sigma[1] * normal(&mut rng)).collect();
        let p = beta.len();
        let mut x = DMatrix::zeros(n, p);
        let mut y = Vec::new();
        let (mut ia, mut ib) = (Vec::new(), Vec::new());
        for i in 0..n {
            x[(i, 0)] = 1.0;
            for j in 1..p {
                x[(i, j)] = normal(&mut rng);
            }
            let (a, b) = (rng.random_range(0..6), rng.random_range(0..4));
            let eta: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + ua[a] + ub[b];
            y.push(if rng.random::<f64>() < logistic(eta) { 1.0 } else { 0.0 });
            ia.push(a);
            ib.push(b);
        }
        GlmmData {
            y,
            x,
            names: (0..p).map(|j| format!("x{j}")).collect(),
            factors: vec![
                Factor {
                    name: "a".into(),
                    levels: (0..6).map(|l| l.to_string()).collect(),
                    index: ia,
                },
                Factor {
                    name: "b".into(),
                    levels: (0..4).map(|l| l.to_string()).collect(),
                    index: ib,
                },
            ],
        }
    }

    #[test]
    fn zero_sigma_matches_irls() {
        let d = synthetic(3, 800, &[0.3, 0.8, -0.5], [0.4, 0.4]);
        let opts = GlmmOptions {
            fixed_sigma: Some(vec![0.0, 0.0]),
            ..Default::default()
        };
        let fit = fit_glmm(&d, &opts).unwrap();
        let (b, se) = logistic_irls(&d.x, &d.y, 100).unwrap();
        for j in 0..3 {
            assert!((fit.fixed[j].estimate - b[j]).abs() < 1e-6);
            assert!((fit.fixed[j].std_error - se[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn recovers_slopes() {
        let beta = [0.5, 1.0, -0.7];
        let d = synthetic(11, 3000, &beta, [0.6, 0.6]);
        let fit = fit_glmm(&d, &GlmmOptions::default()).unwrap();
        assert!(fit.converged);
        for j in 1..3 {
            assert!((fit.fixed[j].estimate - beta[j]).abs() < 0.15, "{:?}", fit.fixed[j]);
        }
        assert!(fit.marginal_r2 <= fit.conditional_r2);
        assert!(fit.components.iter().all(|c| c.sigma > 0.1));
    }

    #[test]
    fn one_level_factor_is_rejected() {
        let mut d = synthetic(1, 50, &[0.0, 1.0], [0.1, 0.1]);
        d.factors[0].levels.truncate(1);
        d.factors[0].index.iter_mut().for_each(|i| *i = 0);
        assert!(matches!(
            fit_glmm(&d, &GlmmOptions::default()),
            Err(StatsError::InsufficientLevels(_))
        ));
    }
}
