//! Run settings: defaults, flat key=value config files, flag merging and
//! sweep-axis parsing.
//!
//! Precedence is defaults < config file < command-line flags. Keys are
//! case-insensitive and `-`/`_` are interchangeable; `[section]` headers in
//! config files are decorative and skipped.

use std::path::{Path, PathBuf};

use spinlight::PhysicalParams;

use crate::{CliError, CommonArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Slice-by-slice probing with deterministic conditioning.
    Discrete,
    /// Fixed-step integration of the covariance flow.
    Ode,
    /// Exact linearization of the constant-coefficient flow.
    Doubling,
    /// Closed-form covariances (lossless rotated, or lossy static).
    Analytic,
}

impl Engine {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match normalize(name).as_str() {
            "discrete" => Ok(Engine::Discrete),
            "ode" => Ok(Engine::Ode),
            "doubling" => Ok(Engine::Doubling),
            "analytic" => Ok(Engine::Analytic),
            other => Err(CliError::Usage(format!(
                "unknown engine '{other}'; expected discrete, ode, doubling or analytic"
            ))),
        }
    }
}

/// How a sweep cell's time series is collapsed into one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    /// Values at t_end.
    Final,
    /// Values at the entanglement maximum.
    Peak,
    /// Values at entanglement death (empty cells if it never dies).
    Death,
}

impl Reduce {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match normalize(name).as_str() {
            "final" => Ok(Reduce::Final),
            "peak" => Ok(Reduce::Peak),
            "death" => Ok(Reduce::Death),
            other => Err(CliError::Usage(format!(
                "unknown reduction '{other}'; expected final, peak or death"
            ))),
        }
    }
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub alpha0: Option<f64>,
    pub eta: f64,
    pub omega: f64,
    pub kappa_sq: Option<f64>,
    pub t_end: Option<f64>,
    pub tau: Option<f64>,
    pub gamma_over_detuning: Option<f64>,
    pub seed: u64,
    pub ntraj: usize,
    pub engine: Engine,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            alpha0: None,
            eta: 0.0,
            omega: 0.0,
            kappa_sq: None,
            t_end: None,
            tau: None,
            gamma_over_detuning: None,
            seed: 1,
            ntraj: 1000,
            engine: Engine::Ode,
            out: None,
        }
    }
}

impl Settings {
    /// Defaults, overlaid with the config file (if any), overlaid with
    /// explicit flags.
    pub fn load(flags: &CommonArgs) -> Result<Self, CliError> {
        let mut settings = Settings::default();
        if let Some(path) = &flags.config {
            settings.apply_config_file(path)?;
        }
        settings.apply_flags(flags)?;
        Ok(settings)
    }

    fn apply_config_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                continue; // section headers are decorative
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected key=value, got '{line}'",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.apply_key(&normalize(key), value.trim()).map_err(|e| {
                CliError::Usage(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn float(value: &str) -> Result<f64, String> {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{value}' is not a finite number"))
        }
        match key {
            "alpha0" => self.alpha0 = Some(float(value)?),
            "eta" => self.eta = float(value)?,
            "omega" => self.omega = float(value)?,
            "kappa_sq" => self.kappa_sq = Some(float(value)?),
            "t_end" => self.t_end = Some(float(value)?),
            "tau" => self.tau = Some(float(value)?),
            "gamma_over_detuning" => self.gamma_over_detuning = Some(float(value)?),
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| format!("'{value}' is not a valid seed"))?
            }
            "ntraj" | "n_traj" => {
                self.ntraj = value
                    .parse()
                    .map_err(|_| format!("'{value}' is not a valid trajectory count"))?
            }
            "engine" => self.engine = Engine::parse(value).map_err(|e| e.message())?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(format!("unknown setting '{other}'")),
        }
        Ok(())
    }

    fn apply_flags(&mut self, flags: &CommonArgs) -> Result<(), CliError> {
        if let Some(v) = flags.alpha0 {
            self.alpha0 = Some(v);
        }
        if let Some(v) = flags.eta {
            self.eta = v;
        }
        if let Some(v) = flags.omega {
            self.omega = v;
        }
        if let Some(v) = flags.kappa_sq {
            self.kappa_sq = Some(v);
        }
        if let Some(v) = flags.t_end {
            self.t_end = Some(v);
        }
        if let Some(v) = flags.tau {
            self.tau = Some(v);
        }
        if let Some(v) = flags.gamma_over_detuning {
            self.gamma_over_detuning = Some(v);
        }
        if let Some(v) = flags.seed {
            self.seed = v;
        }
        if let Some(v) = flags.ntraj {
            self.ntraj = v;
        }
        if let Some(name) = &flags.engine {
            self.engine = Engine::parse(name)?;
        }
        if let Some(path) = &flags.out {
            self.out = Some(path.clone());
        }
        Ok(())
    }

    /// Physical parameters from the coupling settings. An explicit
    /// measurement rate κ̃² wins; otherwise the rate is η·α₀. The lossless
    /// case (η = 0) needs the rate spelled out.
    pub fn resolve_params(&self) -> Result<PhysicalParams, CliError> {
        let usage = |e: spinlight::Error| CliError::Usage(e.to_string());
        let base = match (self.kappa_sq, self.alpha0) {
            (Some(k2), _) if self.eta == 0.0 => {
                PhysicalParams::lossless(k2).map_err(usage)?
            }
            (Some(k2), _) => {
                PhysicalParams::from_optical_density(k2 / self.eta, self.eta).map_err(usage)?
            }
            (None, Some(a0)) if self.eta > 0.0 => {
                PhysicalParams::from_optical_density(a0, self.eta).map_err(usage)?
            }
            (None, Some(_)) => {
                return Err(CliError::Usage(
                    "alpha0 sets the coupling only together with eta > 0; \
                     give kappa-sq for the lossless case"
                        .into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "no coupling given: set kappa-sq, or alpha0 together with eta > 0".into(),
                ))
            }
        };
        let mut params = base.with_omega(self.omega);
        if let Some(g) = self.gamma_over_detuning {
            params = params.with_gamma_over_detuning(g);
        }
        if let Some(tau) = self.tau {
            params = params.with_tau(tau);
        }
        params.validate().map_err(usage)?;
        Ok(params)
    }

    pub fn require_t_end(&self) -> Result<f64, CliError> {
        match self.t_end {
            Some(t) if t.is_finite() && t > 0.0 => Ok(t),
            Some(t) => Err(CliError::Usage(format!("t-end must be positive, got {t}"))),
            None => Err(CliError::Usage("t-end is required for this command".into())),
        }
    }
}

/// One sweep axis: a recognized parameter name and its values.
#[derive(Debug, Clone)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

/// Parses `name=start:stop:n` (inclusive, evenly spaced) or
/// `name=v1,v2,…`.
pub fn parse_axis(text: &str) -> Result<Axis, CliError> {
    let (name, spec) = text.split_once('=').ok_or_else(|| {
        CliError::Usage(format!(
            "axis '{text}' must look like name=start:stop:n or name=v1,v2,…"
        ))
    })?;
    let key = normalize(name);
    const KEYS: [&str; 6] = ["alpha0", "eta", "omega", "kappa_sq", "t_end", "tau"];
    if !KEYS.contains(&key.as_str()) {
        return Err(CliError::Usage(format!(
            "unknown axis '{key}'; expected one of {}",
            KEYS.join(", ")
        )));
    }
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::Usage(format!("axis '{key}': '{v}' is not a finite number")))
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "axis '{key}': range form is start:stop:n"
            )));
        }
        let (start, stop) = (parse(parts[0])?, parse(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::Usage(format!("axis '{key}': point count must be a positive integer"))
            })?;
        if n == 1 {
            vec![start]
        } else {
            (0..n)
                .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                .collect()
        }
    } else {
        spec.split(',')
            .map(parse)
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(CliError::Usage(format!("axis '{key}' has no values")));
    }
    Ok(Axis { key, values })
}

/// Applies one axis value to a settings copy.
pub fn apply_axis_value(settings: &mut Settings, key: &str, value: f64) {
    match key {
        "alpha0" => settings.alpha0 = Some(value),
        "eta" => settings.eta = value,
        "omega" => settings.omega = value,
        "kappa_sq" => settings.kappa_sq = Some(value),
        "t_end" => settings.t_end = Some(value),
        "tau" => settings.tau = Some(value),
        _ => unreachable!("axis keys are validated at parse time"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_range_is_inclusive_and_even() {
        let axis = parse_axis("alpha0=10:100:4").unwrap();
        assert_eq!(axis.key, "alpha0");
        assert_eq!(axis.values, vec![10.0, 40.0, 70.0, 100.0]);
    }

    #[test]
    fn axis_list_and_normalization() {
        let axis = parse_axis("KAPPA-SQ=1,2.5,4").unwrap();
        assert_eq!(axis.key, "kappa_sq");
        assert_eq!(axis.values, vec![1.0, 2.5, 4.0]);
    }

    #[test]
    fn bad_axes_are_usage_errors() {
        assert!(parse_axis("alpha0").is_err());
        assert!(parse_axis("banana=1:2:3").is_err());
        assert!(parse_axis("eta=1:2").is_err());
        assert!(parse_axis("eta=1:2:0").is_err());
        assert!(parse_axis("eta=nan").is_err());
    }

    #[test]
    fn coupling_resolution_prefers_the_explicit_rate() {
        let mut s = Settings::default();
        s.kappa_sq = Some(4.0);
        s.eta = 2.0;
        let p = s.resolve_params().unwrap();
        assert_eq!(p.kappa_sq_rate, 4.0);
        assert_eq!(p.alpha0, 2.0);

        s.kappa_sq = None;
        s.alpha0 = Some(50.0);
        let p = s.resolve_params().unwrap();
        assert_eq!(p.kappa_sq_rate, 100.0);

        s.eta = 0.0;
        assert!(s.resolve_params().is_err());
        s.alpha0 = None;
        assert!(s.resolve_params().is_err());
    }
}
