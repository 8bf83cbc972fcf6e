use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Choice of the diverging sequence `s_n` used when `sigma` or `mu` is unknown.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum SnRule {
    /// `s_n = ln n`.
    #[default]
    LogN,
    /// A fixed value, for sensitivity runs and for pinning the unknown branch.
    Fixed(f64),
}

impl SnRule {
    pub fn eval(self, n: usize) -> f64 {
        match self {
            SnRule::LogN => (n as f64).ln(),
            SnRule::Fixed(v) => v,
        }
    }
}

/// `(log(n^2) / n)^(1/d)`, the rate shared by both branches of `h_n`.
fn base_rate(n: usize, d: usize) -> f64 {
    let n = n as f64;
    ((n * n).ln() / n).powf(1.0 / d as f64)
}

/// Histogram cell width `h_n`.
///
/// With known `sigma`: `2 (512 sigma^2 / l^2)^(1/d) (log(n^2)/n)^(1/d)`; otherwise
/// `s_n (log(n^2)/n)^(1/d)`. Logs are natural. The result is clamped to `1/2`.
pub fn calibrate_h(n: usize, d: usize, sigma: Option<f64>, l: f64, rule: SnRule) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("calibrate_h needs n >= 2, got {n}")));
    }
    if d == 0 {
        return Err(invalid("calibrate_h needs d >= 1"));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(invalid(format!("jump floor l must be positive, got {l}")));
    }
    let h = match sigma {
        Some(s) if !(s > 0.0 && s.is_finite()) => {
            return Err(invalid(format!(
                "known sigma must be positive (got {s}); pass an explicit h for noiseless data"
            )))
        }
        Some(s) => 2.0 * (512.0 * s * s / (l * l)).powf(1.0 / d as f64) * base_rate(n, d),
        None => {
            let sn = rule.eval(n);
            if !(sn > 0.0 && sn.is_finite()) {
                return Err(invalid(format!("s_n must be positive, got {sn}")));
            }
            sn * base_rate(n, d)
        }
    };
    Ok(h.min(0.5))
}

/// Offset radius `r_n`: `(1 + sqrt d) h / mu` with known `mu`, else `s_n h`.
pub fn calibrate_r(h: f64, d: usize, mu: Option<f64>, s_n: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("h must be positive, got {h}")));
    }
    match mu {
        Some(mu) => {
            check_mu(mu)?;
            Ok((1.0 + (d as f64).sqrt()) * h / mu)
        }
        None => positive_sn(s_n).map(|s| s * h),
    }
}

/// Survival threshold `kappa_n`: `2 r / mu^2` with known `mu`, else `s_n r`.
pub fn calibrate_kappa(r: f64, mu: Option<f64>, s_n: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("r must be positive, got {r}")));
    }
    match mu {
        Some(mu) => {
            check_mu(mu)?;
            Ok(2.0 * r / (mu * mu))
        }
        None => positive_sn(s_n).map(|s| s * r),
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("mu must lie in (0, 1], got {mu}")))
    }
}

fn positive_sn(s_n: f64) -> Result<f64> {
    if s_n > 0.0 && s_n.is_finite() {
        Ok(s_n)
    } else {
        Err(invalid(format!("s_n must be positive, got {s_n}")))
    }
}

/// Every tuning constant the estimator and the Betti rule consume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// Requested cell width.
    pub h: f64,
    /// Width actually used by the histogram, `1 / round(1/h)`.
    pub cell_width: f64,
    pub r: f64,
    pub kappa: f64,
    /// Local-range threshold, `l / 2` unless overridden.
    pub threshold: f64,
    pub sigma_known: bool,
    pub mu_known: bool,
    pub s_n_rule: SnRule,
}

/// Inputs to [`CalibrationParams::calibrate`]. `None` for `sigma`/`mu` selects the
/// unknown-parameter branch.
#[derive(Clone, Debug, Default)]
pub struct CalibrationRequest {
    pub n: usize,
    pub side: usize,
    pub dim: usize,
    pub l: f64,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
    pub s_n_rule: SnRule,
    pub h_override: Option<f64>,
    pub r_override: Option<f64>,
    pub kappa_override: Option<f64>,
}

impl CalibrationParams {
    pub fn calibrate(req: &CalibrationRequest) -> Result<Self> {
        let s_n = req.s_n_rule.eval(req.n);
        let h = match req.h_override {
            Some(h) => h,
            None => calibrate_h(req.n, req.dim, req.sigma, req.l, req.s_n_rule)?,
        };
        let r = match req.r_override {
            Some(r) => r,
            None => calibrate_r(h, req.dim, req.mu, s_n)?,
        };
        let kappa = match req.kappa_override {
            Some(k) => k,
            None => calibrate_kappa(r, req.mu, s_n)?,
        };
        if req.side > 0 && h < 1.0 / req.side as f64 {
            log::warn!(
                "h = {h} is below the data spacing 1/N = {}; some histogram cells may be empty",
                1.0 / req.side as f64
            );
        }
        let params = Self {
            h,
            cell_width: 1.0 / cells_per_axis(h) as f64,
            r,
            kappa,
            threshold: req.l / 2.0,
            sigma_known: req.sigma.is_some(),
            mu_known: req.mu.is_some(),
            s_n_rule: req.s_n_rule,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 0.5) {
            return Err(invalid(format!("h must lie in (0, 1/2], got {}", self.h)));
        }
        if !(self.r >= 0.0) || !(self.kappa >= 0.0) {
            return Err(invalid("r and kappa must be nonnegative"));
        }
        if !(self.threshold > 0.0) {
            return Err(invalid("threshold must be positive"));
        }
        Ok(())
    }

    pub fn cells_per_axis(&self) -> usize {
        cells_per_axis(self.h)
    }
}

/// `round(1/h)`, at least 1.
pub fn cells_per_axis(h: f64) -> usize {
    ((1.0 / h).round() as usize).max(1)
}
