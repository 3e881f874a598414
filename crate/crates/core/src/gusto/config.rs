use crate::conic::Settings;
use crate::kv::{self, KvError};

/// Starting point of the conic solver in the first round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStart {
    /// Origin, no dual guess.
    Zero,
    /// The initialization trajectory with tight slacks.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GustoConfig {
    pub delta0: f64,
    pub omega0: f64,
    pub omega_max: f64,
    pub epsilon: f64,
    pub beta_fail: f64,
    pub beta_succ: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub gamma_fail: f64,
    pub max_outer_iters: usize,
    /// Largest state change (∞-norm) of an accepted round that still counts
    /// as converged.
    pub convergence_tol_x: f64,
    pub inner: Settings,
    pub inner_start: InnerStart,
    /// Reuse the previous round's primal/dual solution as the next start.
    pub inner_warm: bool,
}

impl Default for GustoConfig {
    fn default() -> Self {
        Self {
            delta0: 10.0,
            omega0: 10.0,
            omega_max: 1e6,
            epsilon: 1e-4,
            beta_fail: 0.5,
            beta_succ: 2.0,
            rho0: 0.1,
            rho1: 0.9,
            gamma_fail: 5.0,
            max_outer_iters: 50,
            convergence_tol_x: 1e-3,
            inner: Settings {
                max_iter: 10_000,
                ..Settings::default()
            }
            .with_tolerance(1e-5),
            inner_start: InnerStart::Zero,
            inner_warm: true,
        }
    }
}

impl GustoConfig {
    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            self.delta0,
            self.omega0,
            self.omega_max,
            self.epsilon,
            self.beta_fail,
            self.beta_succ,
            self.rho0,
            self.rho1,
            self.gamma_fail,
            self.convergence_tol_x,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err("parameters must be finite".into());
        }
        if self.delta0 <= 0.0 {
            return Err("delta0 must be positive".into());
        }
        if !(self.omega0 >= 1.0 && self.omega_max > self.omega0) {
            return Err("require omega_max > omega0 >= 1".into());
        }
        if self.epsilon <= 0.0 {
            return Err("epsilon must be positive".into());
        }
        if !(self.beta_fail > 0.0 && self.beta_fail < 1.0) {
            return Err("beta_fail must lie in (0, 1)".into());
        }
        if self.beta_succ <= 1.0 {
            return Err("beta_succ must exceed 1".into());
        }
        if !(0.0 < self.rho0 && self.rho0 < self.rho1 && self.rho1 < 1.0) {
            return Err("require 0 < rho0 < rho1 < 1".into());
        }
        if self.gamma_fail <= 1.0 {
            return Err("gamma_fail must exceed 1".into());
        }
        if self.max_outer_iters == 0 {
            return Err("max_outer_iters must be positive".into());
        }
        if self.convergence_tol_x <= 0.0 {
            return Err("convergence_tol_x must be positive".into());
        }
        if !(self.inner.eps_abs > 0.0 && self.inner.eps_rel > 0.0 && self.inner.max_iter > 0) {
            return Err("inner solver tolerances and iteration cap must be positive".into());
        }
        Ok(())
    }
}

/// Reads `gusto.*` keys over the defaults. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<GustoConfig, KvError> {
    let entries = kv::parse(text)?;
    kv::check_unique(&entries, &[])?;
    let mut c = GustoConfig::default();
    for e in &entries {
        match e.key.as_str() {
            "gusto.delta0" => c.delta0 = e.f64()?,
            "gusto.omega0" => c.omega0 = e.f64()?,
            "gusto.omega_max" => c.omega_max = e.f64()?,
            "gusto.epsilon" => c.epsilon = e.f64()?,
            "gusto.beta_fail" => c.beta_fail = e.f64()?,
            "gusto.beta_succ" => c.beta_succ = e.f64()?,
            "gusto.rho0" => c.rho0 = e.f64()?,
            "gusto.rho1" => c.rho1 = e.f64()?,
            "gusto.gamma_fail" => c.gamma_fail = e.f64()?,
            "gusto.max_outer_iters" => c.max_outer_iters = e.usize()?,
            "gusto.convergence_tol_x" => c.convergence_tol_x = e.f64()?,
            "gusto.inner_eps" => c.inner = c.inner.with_tolerance(e.f64()?),
            "gusto.inner_max_iter" => c.inner.max_iter = e.usize()?,
            "gusto.inner_start" => {
                c.inner_start = match e.value.as_str() {
                    "zero" => InnerStart::Zero,
                    "reference" => InnerStart::Reference,
                    _ => {
                        return Err(KvError::Value {
                            line: e.line,
                            key: e.key.clone(),
                            msg: "expected `zero` or `reference`".into(),
                        })
                    }
                }
            }
            "gusto.inner_warm" => {
                c.inner_warm = match e.value.as_str() {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(KvError::Value {
                            line: e.line,
                            key: e.key.clone(),
                            msg: "expected `true` or `false`".into(),
                        })
                    }
                }
            }
            _ => {
                return Err(KvError::UnknownKey {
                    line: e.line,
                    key: e.key.clone(),
                })
            }
        }
    }
    c.validate().map_err(|msg| KvError::Value {
        line: 0,
        key: "gusto".into(),
        msg,
    })?;
    Ok(c)
}

pub fn write_config(c: &GustoConfig) -> String {
    format!(
        "gusto.delta0 = {}\ngusto.omega0 = {}\ngusto.omega_max = {}\ngusto.epsilon = {}\n\
         gusto.beta_fail = {}\ngusto.beta_succ = {}\ngusto.rho0 = {}\ngusto.rho1 = {}\n\
         gusto.gamma_fail = {}\ngusto.max_outer_iters = {}\ngusto.convergence_tol_x = {}\n\
         gusto.inner_eps = {}\ngusto.inner_max_iter = {}\ngusto.inner_start = {}\ngusto.inner_warm = {}\n",
        c.delta0,
        c.omega0,
        c.omega_max,
        c.epsilon,
        c.beta_fail,
        c.beta_succ,
        c.rho0,
        c.rho1,
        c.gamma_fail,
        c.max_outer_iters,
        c.convergence_tol_x,
        c.inner.eps_abs,
        c.inner.max_iter,
        match c.inner_start {
            InnerStart::Zero => "zero",
            InnerStart::Reference => "reference",
        },
        c.inner_warm,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(GustoConfig::default().validate().is_ok());
    }

    #[test]
    fn round_trip() {
        let mut c = GustoConfig::default();
        c.gamma_fail = 3.0;
        c.inner_start = InnerStart::Reference;
        assert_eq!(parse_config(&write_config(&c)).unwrap(), c);
    }

    #[test]
    fn require_line_inequalities_enforced() {
        assert!(parse_config("gusto.omega0 = 0.5").is_err());
        assert!(parse_config("gusto.rho0 = 0.95").is_err());
        assert!(parse_config("gusto.beta_fail = 1").is_err());
        assert!(parse_config("gusto.beta_succ = 1").is_err());
        assert!(parse_config("gusto.delta0 = 0").is_err());
        assert!(parse_config("gusto.omega_max = 1").is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(parse_config("gusto.foo = 1"), Err(KvError::UnknownKey { .. })));
    }
}
