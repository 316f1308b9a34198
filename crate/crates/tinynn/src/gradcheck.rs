//! Central finite-difference oracle for checking analytic gradients.
//!
//! This module never calls `backward`; it only evaluates losses, so it stays
//! independent of the code path it verifies.

use rand::seq::index::sample;
use rand::Rng;

use crate::mlp::{Input, Mlp};

#[derive(Debug, Clone)]
pub struct GradCheck {
    /// Probe step `h` for `(f(p + h) - f(p - h)) / 2h`.
    pub probe: f64,
    pub rtol: f64,
    /// Absolute slack for gradients that are numerically zero.
    pub atol: f64,
    /// How many parameters to probe; `0` probes all of them.
    pub samples: usize,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self { probe: 1e-5, rtol: 1e-4, atol: 1e-8, samples: 0 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Probes skipped because `+h` and `-h` landed on different ReLU pieces.
    pub skipped_kinks: usize,
    pub max_rel_err: f64,
    pub failures: Vec<(usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }

    pub fn merge(&mut self, other: GradCheckReport) {
        self.checked += other.checked;
        self.skipped_kinks += other.skipped_kinks;
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        self.failures.extend(other.failures);
    }
}

/// Compares `analytic` against central differences of `loss` around `params`.
///
/// `pattern` returns the piecewise-linear region (ReLU sign pattern) for a
/// parameter vector; probes whose two evaluations fall in different regions
/// are skipped because the finite difference straddles a kink there.
pub fn check_param_gradients<F, P, R>(
    params: &[f64],
    analytic: &[f64],
    loss: F,
    pattern: P,
    cfg: &GradCheck,
    rng: &mut R,
) -> GradCheckReport
where
    F: Fn(&[f64]) -> f64,
    P: Fn(&[f64]) -> Vec<bool>,
    R: Rng + ?Sized,
{
    assert_eq!(params.len(), analytic.len());
    let n = params.len();
    let indices: Vec<usize> = if cfg.samples == 0 || cfg.samples >= n {
        (0..n).collect()
    } else {
        // Half the probes go to parameters with a nonzero analytic gradient so
        // sparse inputs do not leave the check vacuous.
        let nonzero: Vec<usize> = (0..n).filter(|&i| analytic[i] != 0.0).collect();
        let half = (cfg.samples / 2).min(nonzero.len());
        let mut picked: Vec<usize> = sample(rng, nonzero.len(), half.max(0))
            .into_iter()
            .map(|k| nonzero[k])
            .collect();
        picked.extend(sample(rng, n, cfg.samples - half));
        picked.sort_unstable();
        picked.dedup();
        picked
    };

    let mut report = GradCheckReport::default();
    let mut probe = params.to_vec();
    for i in indices {
        let orig = probe[i];
        probe[i] = orig + cfg.probe;
        let plus = loss(&probe);
        let pat_plus = pattern(&probe);
        probe[i] = orig - cfg.probe;
        let minus = loss(&probe);
        let pat_minus = pattern(&probe);
        probe[i] = orig;
        if pat_plus != pat_minus {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * cfg.probe);
        let a = analytic[i];
        let err = (a - numeric).abs();
        let scale = a.abs().max(numeric.abs());
        let rel = if scale > 0.0 { err / scale } else { 0.0 };
        if err > cfg.atol {
            report.max_rel_err = report.max_rel_err.max(rel);
        }
        if err > cfg.rtol * scale + cfg.atol {
            report.failures.push((i, a, numeric));
        }
        report.checked += 1;
    }
    report
}

/// Checks `model.backward` for a loss that depends only on the model output.
pub fn check_gradients<L, G, R>(
    model: &Mlp,
    input: Input<'_>,
    loss_of_output: L,
    grad_of_output: G,
    cfg: &GradCheck,
    rng: &mut R,
) -> GradCheckReport
where
    L: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
    R: Rng + ?Sized,
{
    let cache = model.forward(input);
    let mut analytic = model.zero_grads();
    model.backward(&cache, &grad_of_output(cache.output()), &mut analytic);
    let sizes = model.sizes().to_vec();
    let head = model.head();
    let rebuild = |p: &[f64]| Mlp::from_params(&sizes, head, p.to_vec());
    check_param_gradients(
        model.params(),
        &analytic,
        |p| loss_of_output(rebuild(p).forward(input).output()),
        |p| rebuild(p).forward(input).activation_pattern(),
        cfg,
        rng,
    )
}
