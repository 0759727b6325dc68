//! Log-normal priors on the hazard ratio, equivalently normal priors on
//! beta = log HR. Holds the six chatbot-elicited presets, quantile and
//! density helpers, and a JSON file format for prior collections.

use crate::math::{norm_cdf, norm_logpdf, norm_ppf, LN_2PI};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("sigma must be positive and finite, got {sigma}")]
    InvalidSigma { sigma: f64 },
    #[error("mu must be finite, got {mu}")]
    InvalidMu { mu: f64 },
    #[error("quantile level must lie strictly between 0 and 1, got {p}")]
    QuantileLevel { p: f64 },
    #[error("density curve needs 0 < hr_min < hr_max, got [{hr_min}, {hr_max}]")]
    CurveRange { hr_min: f64, hr_max: f64 },
    #[error("density curve needs at least 2 points, got {points}")]
    CurvePoints { points: usize },
    #[error("invalid prior file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Whether a prior encodes literature information or is deliberately
/// diffuse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Informative,
    NonInformative,
}

/// Which assistant (or user) supplied the prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorSource {
    ChatGPT,
    Gemini,
    Grok,
    Custom,
}

/// LogNormal(mu, sigma) prior on the hazard ratio; sigma is the
/// standard deviation of log HR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHrPrior {
    pub label: String,
    pub source: PriorSource,
    pub kind: PriorKind,
    pub mu: f64,
    pub sigma: f64,
}

/// Median and central 95% interval of a prior on the HR scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriorSummary {
    pub median_hr: f64,
    pub hr_2_5: f64,
    pub hr_97_5: f64,
}

impl LogHrPrior {
    pub fn new(
        label: impl Into<String>,
        source: PriorSource,
        kind: PriorKind,
        mu: f64,
        sigma: f64,
    ) -> Result<Self, PriorError> {
        let prior = LogHrPrior {
            label: label.into(),
            source,
            kind,
            mu,
            sigma,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// A user-supplied prior; labeled by its parameters.
    pub fn custom(mu: f64, sigma: f64) -> Result<Self, PriorError> {
        LogHrPrior::new(
            format!("lognormal:{mu},{sigma}"),
            PriorSource::Custom,
            PriorKind::Informative,
            mu,
            sigma,
        )
    }

    pub fn validate(&self) -> Result<(), PriorError> {
        if !self.mu.is_finite() {
            return Err(PriorError::InvalidMu { mu: self.mu });
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(PriorError::InvalidSigma { sigma: self.sigma });
        }
        Ok(())
    }
}

/// The six preset priors, informative and diffuse per assistant.
pub fn preset_priors() -> Vec<LogHrPrior> {
    let table = [
        ("chatgpt-informative", PriorSource::ChatGPT, PriorKind::Informative, 0.431, 0.30),
        ("chatgpt-noninformative", PriorSource::ChatGPT, PriorKind::NonInformative, 0.0, 1.0),
        ("gemini-informative", PriorSource::Gemini, PriorKind::Informative, 0.095, 0.18),
        ("gemini-noninformative", PriorSource::Gemini, PriorKind::NonInformative, 0.0, 2.0),
        ("grok-informative", PriorSource::Grok, PriorKind::Informative, 0.068, 0.093),
        ("grok-noninformative", PriorSource::Grok, PriorKind::NonInformative, 0.0, 31.62),
    ];
    table.iter()
        .map(|&(label, source, kind, mu, sigma)| {
            LogHrPrior::new(label, source, kind, mu, sigma).expect("presets are valid")
        })
        .collect()
}

/// Looks up a preset by its label.
pub fn preset(label: &str) -> Option<LogHrPrior> {
    preset_priors().into_iter().find(|p| p.label == label)
}

/// Quantile of the prior on the HR scale: exp(mu + sigma * z_p).
pub fn hr_quantile(prior: &LogHrPrior, p: f64) -> Result<f64, PriorError> {
    prior.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(PriorError::QuantileLevel { p });
    }
    Ok((prior.mu + prior.sigma * norm_ppf(p)).exp())
}

/// Median and central 95% HR interval.
pub fn prior_summary(prior: &LogHrPrior) -> Result<PriorSummary, PriorError> {
    Ok(PriorSummary {
        median_hr: hr_quantile(prior, 0.5)?,
        hr_2_5: hr_quantile(prior, 0.025)?,
        hr_97_5: hr_quantile(prior, 0.975)?,
    })
}

/// Log density of beta = log HR under the prior.
pub fn log_density_beta(prior: &LogHrPrior, beta: f64) -> f64 {
    let z = (beta - prior.mu) / prior.sigma;
    norm_logpdf(z) - prior.sigma.ln()
}

/// Prior mass of the HR interval (lo, hi], for checks and plots.
pub fn hr_interval_mass(prior: &LogHrPrior, lo: f64, hi: f64) -> f64 {
    let at = |h: f64| {
        if h <= 0.0 {
            0.0
        } else {
            norm_cdf((h.ln() - prior.mu) / prior.sigma)
        }
    };
    at(hi) - at(lo)
}

/// Density of the prior on the HR scale, evaluated on an inclusive
/// equally spaced grid over [hr_min, hr_max].
pub fn density_curve(
    prior: &LogHrPrior,
    hr_min: f64,
    hr_max: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>, PriorError> {
    prior.validate()?;
    if !(hr_min > 0.0 && hr_max > hr_min && hr_max.is_finite()) {
        return Err(PriorError::CurveRange { hr_min, hr_max });
    }
    if points < 2 {
        return Err(PriorError::CurvePoints { points });
    }
    let step = (hr_max - hr_min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let hr = hr_min + i as f64 * step;
            let z = (hr.ln() - prior.mu) / prior.sigma;
            // Log-normal density: the normal density in log HR divided
            // by hr for the change of variables.
            let dens = (-0.5 * (LN_2PI + z * z)).exp() / (prior.sigma * hr);
            (hr, dens)
        })
        .collect())
}

/// Parses a JSON array of priors and validates each entry.
pub fn read_priors_json(text: &str) -> Result<Vec<LogHrPrior>, PriorError> {
    let priors: Vec<LogHrPrior> = serde_json::from_str(text)?;
    for p in &priors {
        p.validate()?;
    }
    Ok(priors)
}

/// Renders priors as the JSON array format `read_priors_json` accepts.
pub fn write_priors_json(priors: &[LogHrPrior]) -> String {
    serde_json::to_string_pretty(priors).expect("priors serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_the_published_six() {
        let ps = preset_priors();
        let expected = [
            ("chatgpt-informative", 0.431, 0.30),
            ("chatgpt-noninformative", 0.0, 1.0),
            ("gemini-informative", 0.095, 0.18),
            ("gemini-noninformative", 0.0, 2.0),
            ("grok-informative", 0.068, 0.093),
            ("grok-noninformative", 0.0, 31.62),
        ];
        assert_eq!(ps.len(), 6);
        for (p, &(label, mu, sigma)) in ps.iter().zip(&expected) {
            assert_eq!(p.label, label);
            assert_eq!(p.mu, mu);
            assert_eq!(p.sigma, sigma);
            let informative = label.ends_with("-informative");
            assert_eq!(p.kind == PriorKind::Informative, informative);
        }
        assert_eq!(ps[0].source, PriorSource::ChatGPT);
        assert_eq!(ps[3].source, PriorSource::Gemini);
        assert_eq!(ps[5].source, PriorSource::Grok);
    }

    #[test]
    fn preset_lookup_by_label() {
        assert_eq!(preset("grok-informative").unwrap().sigma, 0.093);
        assert!(preset("claude-informative").is_none());
    }

    #[test]
    fn quantiles_match_reference() {
        // (label, median, 2.5%, 97.5%) from 40-digit arithmetic.
        let expected = [
            ("chatgpt-informative", 1.53879554995686511, 0.85471329363551318, 2.77039302208024675),
            ("chatgpt-noninformative", 1.0, 0.140863494093217471, 7.09907138423133364),
            ("gemini-informative", 1.09965885512610294, 0.772754776191410378, 1.56485554656438874),
            ("gemini-noninformative", 1.0, 0.0198425239681499134, 50.3968145184121835),
            ("grok-informative", 1.07036530847877437, 0.892011146358834561, 1.2843806921824961),
            ("grok-noninformative", 1.0, 1.21620617342114178e-27, 8.22229011703687309e+26),
        ];
        for &(label, med, lo, hi) in &expected {
            let p = preset(label).unwrap();
            let s = prior_summary(&p).unwrap();
            assert!((s.median_hr / med - 1.0).abs() < 1e-9, "{label} median");
            assert!((s.hr_2_5 / lo - 1.0).abs() < 1e-9, "{label} lower");
            assert!((s.hr_97_5 / hi - 1.0).abs() < 1e-9, "{label} upper");
        }
    }

    #[test]
    fn centered_prior_median_is_exactly_one() {
        let p = preset("grok-noninformative").unwrap();
        assert_eq!(hr_quantile(&p, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn centered_prior_quantiles_are_reciprocal() {
        let p = preset("chatgpt-noninformative").unwrap();
        for i in 1..20 {
            let q = i as f64 / 20.0;
            let prod = hr_quantile(&p, q).unwrap() * hr_quantile(&p, 1.0 - q).unwrap();
            assert!((prod - 1.0).abs() < 1e-12, "at {q}: {prod}");
        }
    }

    #[test]
    fn quantile_rejects_bad_levels() {
        let p = preset("grok-informative").unwrap();
        assert!(matches!(
            hr_quantile(&p, 0.0),
            Err(PriorError::QuantileLevel { .. })
        ));
        assert!(hr_quantile(&p, 1.0).is_err());
        assert!(hr_quantile(&p, f64::NAN).is_err());
    }

    #[test]
    fn log_density_matches_reference() {
        let p = preset("chatgpt-informative").unwrap();
        assert!((log_density_beta(&p, 0.0) - (-0.746971284434292304713)).abs() < 1e-12);
        assert!((log_density_beta(&p, 0.7) - (-0.116971284434292304713)).abs() < 1e-12);
        let diffuse = preset("grok-noninformative").unwrap();
        assert!((log_density_beta(&diffuse, 2.0) - (-4.37472871624768025202)).abs() < 1e-12);
    }

    #[test]
    fn density_curve_matches_reference_and_mass() {
        let p = preset("chatgpt-informative").unwrap();
        let curve = density_curve(&p, 1.0, 1.54, 1000).unwrap();
        assert_eq!(curve.len(), 1000);
        assert_eq!(curve[0].0, 1.0);
        assert!((curve[999].0 - 1.54).abs() < 1e-12);
        assert!((curve[0].1 - 0.4737993853980116709).abs() < 1e-12);
        assert!((curve[999].1 - 0.863508492664718416692).abs() < 1e-10);
        // Trapezoid mass over the window agrees with the CDF.
        let h = curve[1].0 - curve[0].0;
        let mut mass = 0.0;
        for w in curve.windows(2) {
            mass += 0.5 * (w[0].1 + w[1].1) * h;
        }
        assert!((mass - hr_interval_mass(&p, 1.0, 1.54)).abs() < 1e-6);
    }

    #[test]
    fn density_curve_rejects_bad_ranges() {
        let p = preset("gemini-informative").unwrap();
        assert!(matches!(
            density_curve(&p, 0.0, 5.0, 10),
            Err(PriorError::CurveRange { .. })
        ));
        assert!(density_curve(&p, 2.0, 1.0, 10).is_err());
        assert!(matches!(
            density_curve(&p, 0.1, 5.0, 1),
            Err(PriorError::CurvePoints { points: 1 })
        ));
    }

    #[test]
    fn json_round_trip_preserves_priors() {
        let ps = preset_priors();
        let text = write_priors_json(&ps);
        assert!(text.contains("\"noninformative\""));
        assert!(text.contains("\"chatgpt\""));
        let back = read_priors_json(&text).unwrap();
        assert_eq!(back, ps);
    }

    #[test]
    fn json_rejects_invalid_sigma() {
        let text = r#"[{"label":"x","source":"custom","kind":"informative","mu":0.0,"sigma":-1.0}]"#;
        assert!(matches!(
            read_priors_json(text),
            Err(PriorError::InvalidSigma { .. })
        ));
    }

    #[test]
    fn constructors_validate() {
        assert!(LogHrPrior::custom(0.2, 0.5).is_ok());
        assert!(matches!(
            LogHrPrior::custom(0.2, 0.0),
            Err(PriorError::InvalidSigma { .. })
        ));
        assert!(LogHrPrior::custom(f64::INFINITY, 0.5).is_err());
        let c = LogHrPrior::custom(0.25, 0.5).unwrap();
        assert_eq!(c.label, "lognormal:0.25,0.5");
        assert_eq!(c.source, PriorSource::Custom);
    }
}
