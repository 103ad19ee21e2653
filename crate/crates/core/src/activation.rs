//! Hidden-layer activations: Flatten-T Swish (FTS) and the comparators it is
//! benchmarked against.
//!
//! | kind     | x ≥ 0          | x < 0          |
//! |----------|----------------|----------------|
//! | relu     | x              | 0              |
//! | lrelu    | x              | αx             |
//! | elu      | x              | α(eˣ − 1)      |
//! | softplus | ln(1 + eˣ)     | ln(1 + eˣ)     |
//! | swish    | x·σ(βx)        | x·σ(βx)        |
//! | frelu    | x + b          | b              |
//! | fts      | x·σ(x) + T     | T              |
//!
//! Kinks (x = 0) take the upper branch for both value and slope. The FTS slope
//! on the upper branch is the Swish slope `s + σ(x)(1 − s)` with `s = x·σ(x)`;
//! the threshold is a constant offset and never enters the derivative.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_T: f64 = -0.20;
pub const DEFAULT_LRELU_ALPHA: f64 = 0.01;
pub const DEFAULT_ELU_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_FRELU_B: f64 = -0.398;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivationKind {
    Relu,
    LRelu,
    Elu,
    Softplus,
    Swish,
    FRelu,
    Fts,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 7] = [
        ActivationKind::Relu,
        ActivationKind::LRelu,
        ActivationKind::Elu,
        ActivationKind::Softplus,
        ActivationKind::Swish,
        ActivationKind::FRelu,
        ActivationKind::Fts,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::LRelu => "lrelu",
            ActivationKind::Elu => "elu",
            ActivationKind::Softplus => "softplus",
            ActivationKind::Swish => "swish",
            ActivationKind::FRelu => "frelu",
            ActivationKind::Fts => "fts",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activation '{s}'")))
    }
}

/// An activation kind plus its fixed parameters. Only the fields relevant to
/// `kind` are read: `t` for FTS, `alpha` for LReLU and ELU, `beta` for Swish,
/// `b` for FReLU.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
}

impl ActivationSpec {
    /// `kind` with every parameter at its default.
    pub fn new(kind: ActivationKind) -> Self {
        ActivationSpec {
            kind,
            t: DEFAULT_T,
            alpha: if kind == ActivationKind::Elu {
                DEFAULT_ELU_ALPHA
            } else {
                DEFAULT_LRELU_ALPHA
            },
            beta: DEFAULT_BETA,
            b: DEFAULT_FRELU_B,
        }
    }

    pub fn relu() -> Self {
        Self::new(ActivationKind::Relu)
    }

    pub fn lrelu(alpha: f64) -> Self {
        ActivationSpec {
            alpha,
            ..Self::new(ActivationKind::LRelu)
        }
    }

    pub fn elu(alpha: f64) -> Self {
        ActivationSpec {
            alpha,
            ..Self::new(ActivationKind::Elu)
        }
    }

    pub fn softplus() -> Self {
        Self::new(ActivationKind::Softplus)
    }

    pub fn swish(beta: f64) -> Self {
        ActivationSpec {
            beta,
            ..Self::new(ActivationKind::Swish)
        }
    }

    pub fn frelu(b: f64) -> Self {
        ActivationSpec {
            b,
            ..Self::new(ActivationKind::FRelu)
        }
    }

    pub fn fts(t: f64) -> Self {
        ActivationSpec {
            t,
            ..Self::new(ActivationKind::Fts)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t", self.t),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("b", self.b),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{} parameter {name} must be finite, got {v}",
                    self.kind
                )));
            }
        }
        Ok(())
    }

    /// Points where the derivative is discontinuous.
    pub fn kinks(&self) -> &'static [f64] {
        match self.kind {
            ActivationKind::Softplus | ActivationKind::Swish => &[],
            _ => &[0.0],
        }
    }

    /// Stable identifier, e.g. `relu`, `lrelu(alpha=0.25)`, `fts(t=-0.20)`.
    ///
    /// Labels key result rows and feed per-run seed derivation, so two specs
    /// share a label exactly when they describe the same activation.
    pub fn label(&self) -> String {
        let kind = self.kind.token();
        match self.kind {
            ActivationKind::Relu | ActivationKind::Softplus => kind.to_string(),
            ActivationKind::LRelu => format!("{kind}(alpha={})", fmt_param(self.alpha)),
            ActivationKind::Elu if self.alpha == DEFAULT_ELU_ALPHA => kind.to_string(),
            ActivationKind::Elu => format!("{kind}(alpha={})", fmt_param(self.alpha)),
            ActivationKind::Swish if self.beta == DEFAULT_BETA => kind.to_string(),
            ActivationKind::Swish => format!("{kind}(beta={})", fmt_param(self.beta)),
            ActivationKind::FRelu if self.b == DEFAULT_FRELU_B => kind.to_string(),
            ActivationKind::FRelu => format!("{kind}(b={})", fmt_param(self.b)),
            ActivationKind::Fts => format!("{kind}(t={})", fmt_param(self.t)),
        }
    }

    /// Inverse of [`label`](Self::label); a bare token takes default parameters.
    pub fn from_label(label: &str) -> Result<Self> {
        let label = label.trim();
        let (token, params) = match label.find('(') {
            Some(open) => {
                let close = label.strip_suffix(')').ok_or_else(|| {
                    Error::InvalidArgument(format!("unterminated label '{label}'"))
                })?;
                (&label[..open], Some(&close[open + 1..]))
            }
            None => (label, None),
        };
        let mut spec = ActivationSpec::new(token.parse()?);
        for pair in params.into_iter().flat_map(|p| p.split(',')) {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("bad parameter '{pair}' in '{label}'"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("bad number '{value}' in '{label}'"))
            })?;
            match key.trim() {
                "t" => spec.t = value,
                "alpha" => spec.alpha = value,
                "beta" => spec.beta = value,
                "b" => spec.b = value,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown parameter '{other}' in '{label}'"
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Two decimals when that is exact (`-0.20`), otherwise the shortest round-trip form.
fn fmt_param(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let short = format!("{v:.2}");
    if short.parse::<f64>().ok() == Some(v) {
        short
    } else {
        format!("{v}")
    }
}

/// Logistic function, evaluated so that `exp` never sees a large positive argument.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eˣ)` as `max(x, 0) + ln(1 + e^{−|x|})`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn fts_value(t: f64, x: f64) -> f64 {
    if x >= 0.0 {
        x * sigmoid(x) + t
    } else {
        t
    }
}

#[inline]
fn fts_slope(x: f64) -> f64 {
    if x >= 0.0 {
        let sig = sigmoid(x);
        let s = x * sig;
        s + sig * (1.0 - s)
    } else {
        0.0
    }
}

#[inline]
fn swish_slope(beta: f64, x: f64) -> f64 {
    let sig = sigmoid(beta * x);
    let w = x * sig;
    beta * w + sig * (1.0 - beta * w)
}

#[inline]
pub fn activate(spec: &ActivationSpec, x: f64) -> f64 {
    match spec.kind {
        ActivationKind::Relu => {
            if x >= 0.0 {
                x
            } else {
                0.0
            }
        }
        ActivationKind::LRelu => {
            if x >= 0.0 {
                x
            } else {
                spec.alpha * x
            }
        }
        ActivationKind::Elu => {
            if x >= 0.0 {
                x
            } else {
                spec.alpha * x.exp_m1()
            }
        }
        ActivationKind::Softplus => softplus(x),
        ActivationKind::Swish => x * sigmoid(spec.beta * x),
        ActivationKind::FRelu => {
            if x >= 0.0 {
                x + spec.b
            } else {
                spec.b
            }
        }
        ActivationKind::Fts => fts_value(spec.t, x),
    }
}

#[inline]
pub fn activate_derivative(spec: &ActivationSpec, x: f64) -> f64 {
    match spec.kind {
        ActivationKind::Relu | ActivationKind::FRelu => {
            if x >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        ActivationKind::LRelu => {
            if x >= 0.0 {
                1.0
            } else {
                spec.alpha
            }
        }
        ActivationKind::Elu => {
            if x >= 0.0 {
                1.0
            } else {
                spec.alpha * x.exp()
            }
        }
        ActivationKind::Softplus => sigmoid(x),
        ActivationKind::Swish => swish_slope(spec.beta, x),
        ActivationKind::Fts => fts_slope(x),
    }
}

pub fn activate_rows(spec: &ActivationSpec, m: &Matrix) -> Matrix {
    m.map(|x| activate(spec, x))
}

pub fn derivative_rows(spec: &ActivationSpec, m: &Matrix) -> Matrix {
    m.map(|x| activate_derivative(spec, x))
}
