//! Named inputs for the worked examples: `Psi'`, `Phi'`, ... as rational
//! functions, from which series (for the engine) and K-functions (for the
//! measure reconstruction) are both derived.

use crate::error::{Error, Result};
use crate::measures::KFunction;
use crate::momentengine::{default_order, AsymptoticInput, Side};
use crate::rational::PartialFractions;
use crate::series::TruncatedSeries;

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    pub side: Side,
    /// `Psi_0', Psi_1', ...`; orders missing from the list are zero.
    pub derivs: Vec<PartialFractions>,
    pub epsilon: f64,
}

/// Names accepted by [`model`], with their parameter lists.
pub const MODEL_NAMES: &[(&str, &str)] = &[
    ("gue", ""),
    ("gue-bbp", "theta"),
    ("wishart", "lambda"),
    ("wishart-bbp", "lambda,theta"),
    ("plancherel-dbbp", "gamma,alpha"),
    ("aztec", "alpha,A"),
    ("gue-three-scale", ""),
    ("spiked-three-scale", "theta1,theta2"),
    ("higher-bbp", "theta1,theta2,epsilon"),
    ("uniform-schur", ""),
];

fn arity(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() == n {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("model {name} takes {n} parameter(s), got {}", params.len())))
    }
}

pub fn model(name: &str, params: &[f64]) -> Result<Model> {
    let x = PartialFractions::polynomial(&[0.0, 1.0]);
    let zero = PartialFractions::zero();
    let (side, derivs, epsilon) = match name {
        "gue" => {
            arity(name, params, 0)?;
            (Side::Hc, vec![x], 1.0)
        }
        "gue-bbp" => {
            arity(name, params, 1)?;
            (Side::Hc, vec![x, PartialFractions::spike(params[0])], 1.0)
        }
        "wishart" => {
            arity(name, params, 1)?;
            positive("lambda", params[0])?;
            (Side::Hc, vec![PartialFractions::simple_pole(1.0, -params[0]), x], 1.0)
        }
        "wishart-bbp" => {
            arity(name, params, 2)?;
            positive("lambda", params[0])?;
            (Side::Hc, vec![PartialFractions::simple_pole(1.0, -params[0]), PartialFractions::spike(params[1])], 1.0)
        }
        "plancherel-dbbp" => {
            arity(name, params, 2)?;
            let (g, a) = (params[0], params[1]);
            positive("gamma", g)?;
            positive("alpha", a)?;
            // Phi(u) = -log(1 - a(u-1)),  Phi' = -1 / (u - 1 - 1/a)
            (Side::Schur, vec![PartialFractions::polynomial(&[g]), PartialFractions::simple_pole(1.0 + 1.0 / a, -1.0)], 1.0)
        }
        "aztec" => {
            arity(name, params, 2)?;
            let (a, big_a) = (params[0], params[1]);
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidParameter(format!("aztec needs 0 < alpha < 1, got {a}")));
            }
            positive("A", big_a)?;
            let dpsi = PartialFractions::simple_pole(-1.0, 1.0 / a - 1.0);
            let dphi = PartialFractions::simple_pole(-1.0 / big_a, 1.0).add(&PartialFractions::simple_pole(-1.0, -1.0));
            (Side::Schur, vec![dpsi, dphi], 1.0)
        }
        "gue-three-scale" => {
            arity(name, params, 0)?;
            (Side::Hc, vec![x.clone(), x.clone(), x], 1.0)
        }
        "spiked-three-scale" => {
            arity(name, params, 2)?;
            (Side::Hc, vec![x, PartialFractions::spike(params[0]), PartialFractions::polynomial(&[params[1]])], 1.0)
        }
        "higher-bbp" => {
            arity(name, params, 3)?;
            let eps = params[2];
            (Side::Hc, vec![x, PartialFractions::spike(params[0]), PartialFractions::spike(params[1])], eps)
        }
        "uniform-schur" => {
            arity(name, params, 0)?;
            (Side::Schur, vec![zero.clone(), zero], 1.0)
        }
        _ => return Err(Error::InvalidParameter(format!("unknown model {name}"))),
    };
    Ok(Model { name: name.to_string(), side, derivs, epsilon })
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be positive, got {v}")))
    }
}

impl Model {
    /// `Psi_j'` or zero when the model does not specify that order.
    pub fn deriv(&self, j: usize) -> PartialFractions {
        self.derivs.get(j).cloned().unwrap_or_default()
    }

    /// `Psi_j` as a series vanishing at the center, of the given order.
    pub fn series(&self, j: usize, order: usize) -> Result<TruncatedSeries> {
        let c = self.side.center();
        Ok(self.deriv(j).to_series(c, order.saturating_sub(1))?.integral())
    }

    /// Engine input with `Psi_0..Psi_n`, truncated for moments up to `k_max`.
    pub fn input(&self, n: usize, k_max: usize) -> Result<AsymptoticInput> {
        let order = default_order(k_max, n);
        let series = (0..=n).map(|j| self.series(j, order)).collect::<Result<Vec<_>>>()?;
        AsymptoticInput::new(self.side, series, self.epsilon)
    }

    pub fn k_function_lln(&self) -> KFunction {
        KFunction::lln(self.side, self.deriv(0))
    }

    pub fn k_function_correction(&self) -> KFunction {
        KFunction::correction(self.side, self.deriv(0), self.deriv(1))
    }
}
