//! Prior elicitation through a chat-completion endpoint: the fixed
//! elicitation prompt, a small HTTP client with a mock mode, and a
//! parser that recovers log-normal prior parameters from a response.
//!
//! The API key is read from a named environment variable at call time
//! and sent in the authorization header; it is never part of any
//! config value, file, or transcript.

use crate::priors::{LogHrPrior, PriorKind, PriorSource};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ElicitError {
    #[error("invalid provider config: {reason}")]
    InvalidProviderConfig { reason: String },
    #[error("no canned response for mock model `{model}` (expected chatgpt, gemini, or grok)")]
    UnknownMockModel { model: String },
    #[error("environment variable `{var}` is not set; it must hold the API key")]
    MissingApiKey { var: String },
    #[error("provider returned HTTP status {status}")]
    Http { status: u16, transcript: String },
    #[error("request timed out after {seconds} seconds")]
    Timeout { seconds: u64, transcript: String },
    #[error("network error: {detail}")]
    Network { detail: String },
    #[error("could not find assistant text in the response envelope")]
    MalformedEnvelope { transcript: String },
    #[error("no log-normal prior pair found in the response")]
    NoPriorFound { transcript: String },
    #[error("parsed sigma {value} is not a positive finite number")]
    InvalidSigmaValue { value: f64, transcript: String },
    #[error("parsed numeral `{token}` is not finite")]
    NonFiniteNumeral { token: String, transcript: String },
}

impl ElicitError {
    /// The transcript attached to parse and HTTP errors, for human
    /// inspection.
    pub fn transcript(&self) -> Option<&str> {
        match self {
            ElicitError::Http { transcript, .. }
            | ElicitError::Timeout { transcript, .. }
            | ElicitError::MalformedEnvelope { transcript }
            | ElicitError::NoPriorFound { transcript }
            | ElicitError::InvalidSigmaValue { transcript, .. }
            | ElicitError::NonFiniteNumeral { transcript, .. } => Some(transcript),
            _ => None,
        }
    }
}

/// Where and how to reach the chat endpoint. `api_key_env` names the
/// environment variable holding the key; the key itself never lives in
/// a config value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub base_url: String,
    pub api_key_env: String,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
    #[serde(default)]
    pub mock: bool,
}

fn default_timeout() -> u64 {
    120
}

impl ProviderConfig {
    /// A config that serves the bundled canned response for `model`.
    pub fn mock(model: &str) -> Self {
        ProviderConfig {
            base_url: String::new(),
            api_key_env: String::new(),
            model_name: model.to_string(),
            temperature: 0.0,
            timeout_seconds: default_timeout(),
            mock: true,
        }
    }

    pub fn validate(&self) -> Result<(), ElicitError> {
        let fail = |reason: &str| {
            Err(ElicitError::InvalidProviderConfig {
                reason: reason.to_string(),
            })
        };
        if self.model_name.is_empty() {
            return fail("model_name must be non-empty");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return fail("temperature must be finite and >= 0");
        }
        if self.timeout_seconds == 0 {
            return fail("timeout_seconds must be at least 1");
        }
        if !self.mock {
            if self.base_url.is_empty() {
                return fail("base_url must be non-empty unless mock");
            }
            if self.api_key_env.is_empty() {
                return fail("api_key_env must be non-empty unless mock");
            }
        }
        Ok(())
    }
}

/// Parsed elicitation output: both priors plus the prose sections that
/// justify them, with the response kept byte-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ElicitationResult {
    pub informative: LogHrPrior,
    pub noninformative: LogHrPrior,
    pub literature_summary: String,
    pub justification: String,
    pub raw_transcript: String,
    pub provider: String,
}

/// Plausibility bounds for [`sanity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SanityBounds {
    pub median_lo: f64,
    pub median_hi: f64,
    pub sigma_inf_max: f64,
}

impl Default for SanityBounds {
    fn default() -> Self {
        SanityBounds {
            median_lo: 0.25,
            median_hi: 4.0,
            sigma_inf_max: 1.0,
        }
    }
}

/// The fixed elicitation prompt: the clinical framing and response
/// requirements, then a machine-readability clause asking for a fenced
/// JSON block alongside the prose. Byte-stable across calls.
pub fn build_prompt() -> String {
    concat!(
        "You are a radiation oncologist assisting a biostatistician in the Bayesian ",
        "analysis of a Cox survival model of glioblastoma data from an adult population. ",
        "The Cox model compares two groups using the hazard ratio.\n",
        "\n",
        "1. The name of the treatment group is called \"group.\" There are two groups, ",
        "called HFRT and CRT. HFRT is a treatment with the radiation fractionation ",
        "schedule having fewer, larger fractions. CRT is a treatment standard using ",
        "radiation.\n",
        "2. The variable \"time_os_months\" is the survival time in months.\n",
        "3. The binary (0/1) event variable is called \"event\", with 1 = dead and ",
        "0 = censored.\n",
        "\n",
        "You, the radiation oncologist, has to develop the prior distribution for a ",
        "hazard ratio of HFRT and CRT, where CRT is the reference group, using ",
        "glioblastoma literature.\n",
        "\n",
        "The response should include:\n",
        "\n",
        "1. The results of review of the information on HFRT and CRT trials in the ",
        "glioblastoma literature.\n",
        "2. An informative log-normal prior for the hazard ratio (which is on the log ",
        "scale)\n",
        "3. A justification of the informative prior using the information on HFRT and ",
        "CRT trials in the glioblastoma literature.\n",
        "4. A non-informative log-normal prior for the hazard ratio (which is on the ",
        "log scale), to compare to the informative one.\n",
        "\n",
        "In addition to the prose above, finish the response with a fenced JSON block ",
        "(```json ... ```) containing exactly these fields: mu_informative, ",
        "sigma_informative, mu_noninformative, sigma_noninformative, holding the ",
        "numeric parameters of the two log-normal priors on the hazard ratio.\n",
    )
    .to_string()
}

const MOCK_CHATGPT: &str = r#"1. Literature review

Randomized trials comparing hypofractionated radiation therapy (HFRT) with
conventional radiation therapy (CRT) in adult glioblastoma, including the
trials restricted to elderly or poor-performance-status patients, report
broadly similar overall survival between the two schedules. Individual trial
hazard ratios for death under HFRT range from modestly protective to
moderately harmful, and pooled estimates sit somewhat above the null with wide
uncertainty. No adequately powered trial has shown a significant survival
difference in either direction.

2. Informative prior

HR ~ LogNormal(μ = 0.431, σ = 0.30).

3. Justification

Centering the prior at exp(0.431) = 1.54 reflects the pooled point estimates,
which lean toward a higher hazard under HFRT, while σ = 0.30 places about 95%
of the prior mass between roughly 0.85 and 2.77 on the hazard-ratio scale.
That range still covers the protective effects reported in some individual
trials, so the prior is informative without being dogmatic.

4. Non-informative prior

HR ~ LogNormal(μ = 0, σ = 1), centered on no effect with wide dispersion, to
compare against the informative analysis.

```json
{"mu_informative": 0.431, "sigma_informative": 0.30, "mu_noninformative": 0.0, "sigma_noninformative": 1.0}
```
"#;

const MOCK_GEMINI: &str = r#"1. Literature review

The trial evidence on hypofractionated versus conventional radiation therapy
for adult glioblastoma is dominated by equivalence findings. Across the
randomized studies and the subsequent meta-analyses, overall survival under
HFRT is statistically indistinguishable from CRT, with pooled hazard ratios
very close to one and confidence intervals that exclude large effects in
either direction.

2. Informative prior

HR ~ LogNormal(μ = 0.095, σ = 0.18).

3. Justification

A median hazard ratio of exp(0.095) = 1.10 encodes the mild excess hazard
suggested by the pooled trial data while remaining broadly consistent with
equivalence. The scale σ = 0.18 concentrates 95% of the prior between about
0.77 and 1.56, matching the precision of the meta-analytic intervals rather
than any single trial.

4. Non-informative prior

HR ~ LogNormal(μ = 0, σ = 2), a weak reference prior for comparison.

```json
{"mu_informative": 0.095, "sigma_informative": 0.18, "mu_noninformative": 0.0, "sigma_noninformative": 2.0}
```
"#;

const MOCK_GROK: &str = r#"1. Literature review

Head-to-head randomized comparisons of hypofractionated and conventional
radiation therapy in adult glioblastoma consistently meet their
non-inferiority margins. The trial populations span newly diagnosed elderly
patients and younger adults with good performance status, and in every case
the overall survival curves are nearly superimposable, with individual hazard
ratios tightly clustered around one.

2. Informative prior

HR ~ LogNormal(μ = 0.068, σ = 0.093).

3. Justification

The prior median exp(0.068) = 1.07 matches the small pooled excess hazard
under HFRT, and the narrow scale σ = 0.093 reflects how consistent the trial
estimates are with one another: 95% of the prior mass falls between about
0.89 and 1.28, mirroring the pooled interval.

4. Non-informative prior

HR ~ LogNormal(μ = 0, σ = 31.62), an extremely diffuse reference prior whose
precision on the log scale is a thousandth of a unit, for comparison.

```json
{"mu_informative": 0.068, "sigma_informative": 0.093, "mu_noninformative": 0.0, "sigma_noninformative": 31.62}
```
"#;

fn mock_response(model: &str) -> Option<&'static str> {
    match model.to_ascii_lowercase().as_str() {
        "chatgpt" => Some(MOCK_CHATGPT),
        "gemini" => Some(MOCK_GEMINI),
        "grok" => Some(MOCK_GROK),
        _ => None,
    }
}

/// Sends the prompt and returns the assistant's response text. Mock
/// providers return a bundled canned response without touching the
/// network; live providers make a single chat-completion POST.
pub fn elicit(provider: &ProviderConfig, prompt: &str) -> Result<String, ElicitError> {
    provider.validate()?;
    if provider.mock {
        return mock_response(&provider.model_name)
            .map(str::to_string)
            .ok_or_else(|| ElicitError::UnknownMockModel {
                model: provider.model_name.clone(),
            });
    }

    // The key must exist before anything goes on the wire.
    let key = std::env::var(&provider.api_key_env).map_err(|_| ElicitError::MissingApiKey {
        var: provider.api_key_env.clone(),
    })?;

    let body = serde_json::json!({
        "model": provider.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": provider.temperature,
    });
    let request_text = body.to_string();
    let client = reqwest::blocking::Client::builder()
        .timeout(std::time::Duration::from_secs(provider.timeout_seconds))
        .build()
        .map_err(|e| ElicitError::Network {
            detail: e.to_string(),
        })?;
    let response = client
        .post(&provider.base_url)
        .bearer_auth(key)
        .json(&body)
        .send()
        .map_err(|e| {
            if e.is_timeout() {
                ElicitError::Timeout {
                    seconds: provider.timeout_seconds,
                    transcript: request_text.clone(),
                }
            } else {
                ElicitError::Network {
                    detail: e.to_string(),
                }
            }
        })?;
    let status = response.status();
    let text = response.text().map_err(|e| ElicitError::Network {
        detail: e.to_string(),
    })?;
    if !status.is_success() {
        return Err(ElicitError::Http {
            status: status.as_u16(),
            transcript: text,
        });
    }
    extract_assistant_text(&text)
}

/// Pulls the assistant message out of the common chat-completion
/// envelope shapes.
fn extract_assistant_text(envelope: &str) -> Result<String, ElicitError> {
    let malformed = || ElicitError::MalformedEnvelope {
        transcript: envelope.to_string(),
    };
    let v: serde_json::Value = serde_json::from_str(envelope).map_err(|_| malformed())?;
    if let Some(s) = v["choices"][0]["message"]["content"].as_str() {
        return Ok(s.to_string());
    }
    if let Some(parts) = v["candidates"][0]["content"]["parts"].as_array() {
        let text: String = parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join("");
        if !text.is_empty() {
            return Ok(text);
        }
    }
    if let Some(blocks) = v["content"].as_array() {
        let text: String = blocks
            .iter()
            .filter_map(|b| b["text"].as_str())
            .collect::<Vec<_>>()
            .join("");
        if !text.is_empty() {
            return Ok(text);
        }
    }
    if let Some(s) = v["choices"][0]["text"].as_str() {
        return Ok(s.to_string());
    }
    Err(malformed())
}

#[derive(Debug, Clone, Copy)]
struct ProseMatch {
    start: usize,
    end: usize,
    mu: f64,
    sigma: f64,
}

#[derive(Debug, Deserialize)]
struct StructuredBlock {
    mu_informative: f64,
    sigma_informative: f64,
    mu_noninformative: f64,
    sigma_noninformative: f64,
}

/// Byte range and parsed payload of the first fenced block that
/// deserializes as a [`StructuredBlock`].
fn find_structured_block(text: &str) -> Option<(usize, StructuredBlock)> {
    let mut search_from = 0;
    while let Some(rel_open) = text[search_from..].find("```") {
        let open = search_from + rel_open;
        let content_start = match text[open..].find('\n') {
            Some(nl) => open + nl + 1,
            None => return None,
        };
        let close = match text[content_start..].find("```") {
            Some(rel_close) => content_start + rel_close,
            None => return None,
        };
        let content = &text[content_start..close];
        if let Ok(block) = serde_json::from_str::<StructuredBlock>(content.trim()) {
            return Some((open, block));
        }
        search_from = close + 3;
    }
    None
}

fn prose_matches(text: &str) -> Vec<ProseMatch> {
    let re = Regex::new(
        r"(?i)log[-\s]?normal\s*\(\s*(?:μ|mu)\s*=\s*([+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*,\s*(?:σ|sigma)\s*=\s*([+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*\)",
    )
    .expect("prose pattern compiles");
    re.captures_iter(text)
        .filter_map(|cap| {
            let whole = cap.get(0)?;
            let mu: f64 = cap[1].parse().ok()?;
            let sigma: f64 = cap[2].parse().ok()?;
            Some(ProseMatch {
                start: whole.start(),
                end: whole.end(),
                mu,
                sigma,
            })
        })
        .collect()
}

fn source_from_label(label: &str) -> PriorSource {
    match label.to_ascii_lowercase().as_str() {
        "chatgpt" => PriorSource::ChatGPT,
        "gemini" => PriorSource::Gemini,
        "grok" => PriorSource::Grok,
        _ => PriorSource::Custom,
    }
}

/// Recovers both priors and the surrounding prose from a response.
///
/// The fenced JSON block is the primary source of the parameters; when
/// it is absent, the prose is scanned for `LogNormal(μ = X, σ = Y)`
/// statements (`mu`/`sigma` spellings accepted), taking the first as
/// the informative prior and the first μ = 0 match after it as the
/// non-informative one. The literature summary is the text before the
/// informative statement and the justification is the text between the
/// two statements.
pub fn parse_response(text: &str, source_label: &str) -> Result<ElicitationResult, ElicitError> {
    let transcript = || text.to_string();
    let check = |mu: f64, sigma: f64| -> Result<(), ElicitError> {
        if !mu.is_finite() {
            return Err(ElicitError::NonFiniteNumeral {
                token: mu.to_string(),
                transcript: transcript(),
            });
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(ElicitError::InvalidSigmaValue {
                value: sigma,
                transcript: transcript(),
            });
        }
        Ok(())
    };

    let block = find_structured_block(text);
    let prose = prose_matches(text);

    let inf_idx = Some(0).filter(|_| !prose.is_empty());
    let noninf_idx = prose
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, m)| m.mu == 0.0)
        .map(|(i, _)| i);

    let (inf_params, noninf_params) = if let Some((_, ref b)) = block {
        (
            (b.mu_informative, b.sigma_informative),
            (b.mu_noninformative, b.sigma_noninformative),
        )
    } else {
        let inf = inf_idx.map(|i| prose[i]).ok_or_else(|| ElicitError::NoPriorFound {
            transcript: transcript(),
        })?;
        let noninf = noninf_idx
            .map(|i| prose[i])
            .ok_or_else(|| ElicitError::NoPriorFound {
                transcript: transcript(),
            })?;
        ((inf.mu, inf.sigma), (noninf.mu, noninf.sigma))
    };
    check(inf_params.0, inf_params.1)?;
    check(noninf_params.0, noninf_params.1)?;

    // Prose spans give the section boundaries; with a block-only
    // response everything before the block is the literature summary.
    let (literature_summary, justification) = match (inf_idx, noninf_idx) {
        (Some(i), Some(j)) => (
            text[..prose[i].start].trim().to_string(),
            text[prose[i].end..prose[j].start].trim().to_string(),
        ),
        (Some(i), None) => {
            let end = block.as_ref().map_or(text.len(), |&(at, _)| at);
            (
                text[..prose[i].start].trim().to_string(),
                text[prose[i].end..end].trim().to_string(),
            )
        }
        _ => {
            let end = block.as_ref().map_or(text.len(), |&(at, _)| at);
            (text[..end].trim().to_string(), String::new())
        }
    };

    let label = source_label.to_ascii_lowercase();
    let source = source_from_label(source_label);
    let build = |suffix: &str, kind, (mu, sigma): (f64, f64)| {
        LogHrPrior::new(format!("{label}-{suffix}"), source, kind, mu, sigma).map_err(|_| {
            ElicitError::InvalidSigmaValue {
                value: sigma,
                transcript: transcript(),
            }
        })
    };
    Ok(ElicitationResult {
        informative: build("informative", PriorKind::Informative, inf_params)?,
        noninformative: build("noninformative", PriorKind::NonInformative, noninf_params)?,
        literature_summary,
        justification,
        raw_transcript: text.to_string(),
        provider: source_label.to_string(),
    })
}

/// Plausibility screening that warns but never fails; an empty list
/// means the result can go forward to expert review.
pub fn sanity_check(result: &ElicitationResult, bounds: &SanityBounds) -> Vec<String> {
    let mut warnings = Vec::new();
    let median = result.informative.mu.exp();
    if median > bounds.median_hi {
        warnings.push(format!(
            "informative prior median HR {median:.2} exceeds {}: implausibly large harm",
            bounds.median_hi
        ));
    }
    if median < bounds.median_lo {
        warnings.push(format!(
            "informative prior median HR {median:.2} is below {}: implausibly large benefit",
            bounds.median_lo
        ));
    }
    if result.informative.sigma > bounds.sigma_inf_max {
        warnings.push(format!(
            "informative prior sigma {} exceeds {}: too diffuse to count as informative",
            result.informative.sigma, bounds.sigma_inf_max
        ));
    }
    if result.noninformative.sigma < result.informative.sigma {
        warnings.push(format!(
            "non-informative prior is narrower than the informative prior (sigma {} < {})",
            result.noninformative.sigma, result.informative.sigma
        ));
    }
    warnings
}
