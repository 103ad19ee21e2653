//! Finite-difference oracle for every analytic derivative in the crate.
//!
//! Relative error is `|analytic − numeric| / max(1, |analytic|)` with a central
//! difference at `h = 1e-5`.

use std::fmt;

use crate::activation::{activate, activate_derivative, ActivationKind, ActivationSpec};
use crate::error::{Error, Result};
use crate::linalg::{uniform_matrix, Matrix, Rng};
use crate::network::{softmax_cross_entropy, Network};

pub const FD_STEP: f64 = 1e-5;
pub const KINK_RADIUS: f64 = 0.01;
pub const ACTIVATION_TOL: f64 = 1e-6;
pub const NETWORK_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub name: String,
    pub max_relative_error: f64,
    pub worst_point: String,
    pub points_checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<20} max_rel_err={:.3e} tol={:.0e} points={} worst={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_relative_error,
            self.tolerance,
            self.points_checked,
            self.worst_point
        )
    }
}

/// Accumulates the worst relative error over a set of comparisons.
struct Tally {
    max: f64,
    worst: String,
    count: usize,
}

impl Tally {
    fn new() -> Self {
        Tally {
            max: 0.0,
            worst: String::from("-"),
            count: 0,
        }
    }

    fn record(&mut self, analytic: f64, numeric: f64, at: impl FnOnce() -> String) {
        let err = relative_error(analytic, numeric);
        self.count += 1;
        if err > self.max || self.count == 1 {
            self.max = err;
            self.worst = at();
        }
    }

    fn finish(self, name: String, tolerance: f64) -> Result<GradCheckReport> {
        if self.count == 0 {
            return Err(Error::InvalidArgument(format!("{name}: nothing to check")));
        }
        Ok(GradCheckReport {
            name,
            passed: self.max <= tolerance,
            max_relative_error: self.max,
            worst_point: self.worst,
            points_checked: self.count,
            tolerance,
        })
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(1.0)
}

/// `(f(x + h) − f(x − h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let (hi, lo) = (f(x + h), f(x - h));
    if !(hi.is_finite() && lo.is_finite()) {
        return Err(Error::NonFinite(format!("f({x} ± {h}) = ({hi}, {lo})")));
    }
    Ok((hi - lo) / (2.0 * h))
}

/// `x ∈ [−20, 20]` in steps of 0.01, minus the open kink neighborhoods.
pub fn activation_grid(kinks: &[f64]) -> Vec<f64> {
    (-2000..=2000)
        .map(|k| k as f64 / 100.0)
        .filter(|x| kinks.iter().all(|k| (x - k).abs() >= KINK_RADIUS))
        .collect()
}

/// Compares `df` with central differences of `f` over `grid`.
pub fn check_derivative(
    name: &str,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    grid: &[f64],
    kinks: &[f64],
    tolerance: f64,
) -> Result<GradCheckReport> {
    let mut tally = Tally::new();
    for &x in grid {
        if let Some(&kink) = kinks.iter().find(|&&k| (x - k).abs() < KINK_RADIUS) {
            return Err(Error::KinkViolation {
                x,
                kink,
                radius: KINK_RADIUS,
            });
        }
        let numeric = central_difference(&f, x, FD_STEP)?;
        tally.record(df(x), numeric, || format!("x={x}"));
    }
    tally.finish(name.to_string(), tolerance)
}

pub fn check_activation(
    spec: &ActivationSpec,
    grid: &[f64],
    tolerance: f64,
) -> Result<GradCheckReport> {
    check_derivative(
        &spec.label(),
        |x| activate(spec, x),
        |x| activate_derivative(spec, x),
        grid,
        spec.kinks(),
        tolerance,
    )
}

fn eval_loss(net: &Network, x: &Matrix, labels: &[u8]) -> Result<f64> {
    let logits = net.predict(x)?;
    let (loss, _) = softmax_cross_entropy(&logits, labels)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss = {loss}")));
    }
    Ok(loss)
}

/// Perturbs every scalar parameter by `±h` and compares the loss difference
/// quotient with the backpropagated gradient. Dropout is off throughout.
pub fn check_network(
    net: &Network,
    x: &Matrix,
    labels: &[u8],
    tolerance: f64,
) -> Result<GradCheckReport> {
    let (logits, cache) = net.forward_eval(x)?;
    let (_, dlogits) = softmax_cross_entropy(&logits, labels)?;
    let grads = net.backward(&cache, &dlogits)?;

    let mut probe = net.clone();
    let mut tally = Tally::new();
    for (l, g) in grads.layers.iter().enumerate() {
        for (param, analytic) in [("w", &g.w), ("bias", &g.bias)] {
            for i in 0..analytic.len() {
                let original = *param_mut(&mut probe, l, param, i);
                *param_mut(&mut probe, l, param, i) = original + FD_STEP;
                let up = eval_loss(&probe, x, labels)?;
                *param_mut(&mut probe, l, param, i) = original - FD_STEP;
                let down = eval_loss(&probe, x, labels)?;
                *param_mut(&mut probe, l, param, i) = original;
                let numeric = (up - down) / (2.0 * FD_STEP);
                let cols = analytic.cols();
                tally.record(analytic.as_slice()[i], numeric, || {
                    format!("layer {l} {param}[{},{}]", i / cols, i % cols)
                });
            }
        }
    }
    tally.finish(
        format!("network({})", net.hidden_activation.label()),
        tolerance,
    )
}

fn param_mut<'a>(net: &'a mut Network, layer: usize, param: &str, i: usize) -> &'a mut f64 {
    let l = &mut net.layers[layer];
    let m = if param == "w" { &mut l.w } else { &mut l.bias };
    &mut m.as_mut_slice()[i]
}

/// Activations covered by the standard suite: every kind at its default
/// parameters, with FTS at `t = 0, -0.20, -0.40`.
pub fn suite_activations() -> Vec<ActivationSpec> {
    let mut specs: Vec<ActivationSpec> = ActivationKind::ALL
        .into_iter()
        .filter(|&k| k != ActivationKind::Fts)
        .map(ActivationSpec::new)
        .collect();
    specs.extend([0.0, -0.2, -0.4].map(ActivationSpec::fts));
    specs
}

/// Scalar checks on the `[-20, 20]` grid at `ACTIVATION_TOL`.
pub fn activation_suite() -> Result<Vec<GradCheckReport>> {
    suite_activations()
        .iter()
        .map(|spec| check_activation(spec, &activation_grid(spec.kinks()), ACTIVATION_TOL))
        .collect()
}

/// Full-network checks on a 4-5-3 net with a batch of 2, at `NETWORK_TOL`.
pub fn network_suite(seed: u64) -> Result<Vec<GradCheckReport>> {
    suite_activations()
        .into_iter()
        .map(|spec| {
            let mut rng = Rng::new(seed);
            let net = Network::new(4, &[5, 3], spec, &mut rng)?;
            let x = uniform_matrix(&mut rng, 2, 4, -1.0, 1.0)?;
            check_network(&net, &x, &[0, 2], NETWORK_TOL)
        })
        .collect()
}
