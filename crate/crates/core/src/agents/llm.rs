//! Chat-completions backend.
//!
//! Any server that accepts `POST {endpoint}/chat/completions` with the usual
//! `{model, messages, temperature}` body works, hosted or self-hosted. The
//! model must answer with a JSON object `{"message": ..., "potency": ...}`
//! somewhere in its reply; the first such object is used.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Agent, AgentAction, AgentError, Observation};
use crate::dynamics::Side;

pub const DEFAULT_PROMPT_TEMPLATE: &str = "Topic: {topic}\n\
Round: {round}\n\
Population alignment: {counts}\n\
Mean opinion (0 = red pole, 1 = blue pole): {mean}\n\
Your remaining energy: {energy}\n\
Opponent's last message: {opponent_message}\n\
Write your next broadcast.";

const MAX_RETRIES_CAP: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmBackendConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Variable holding the bearer token. Unset means the per-side default
    /// (`SIM_LLM_API_KEY_RED` / `SIM_LLM_API_KEY_BLUE`); empty disables auth.
    #[serde(default)]
    pub api_key_env_var: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First backoff delay; each further retry doubles it.
    #[serde(default = "default_backoff")]
    pub backoff_base_secs: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_template")]
    pub prompt_template: String,
    /// Side-specific system instructions. Nothing adversarial ships by default.
    #[serde(default)]
    pub role_instructions: Option<String>,
}

fn default_timeout() -> f64 {
    30.0
}
fn default_retries() -> u32 {
    2
}
fn default_backoff() -> f64 {
    1.0
}
fn default_temperature() -> f64 {
    0.7
}
fn default_template() -> String {
    DEFAULT_PROMPT_TEMPLATE.to_string()
}

impl LlmBackendConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        LlmBackendConfig {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            api_key_env_var: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_base_secs: default_backoff(),
            temperature: default_temperature(),
            prompt_template: default_template(),
            role_instructions: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, AgentError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| AgentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.max_retries > MAX_RETRIES_CAP {
            return Err(AgentError::Config(format!("max_retries must be <= {MAX_RETRIES_CAP}")));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(AgentError::Config("timeout_secs must be > 0".into()));
        }
        if !(self.backoff_base_secs >= 0.0 && self.backoff_base_secs.is_finite()) {
            return Err(AgentError::Config("backoff_base_secs must be >= 0".into()));
        }
        if self.endpoint_url.is_empty() {
            return Err(AgentError::Config("endpoint_url is empty".into()));
        }
        Ok(())
    }

    /// Environment variable consulted for `side`, or `None` when auth is off.
    pub fn key_var(&self, side: Side) -> Option<String> {
        match &self.api_key_env_var {
            Some(v) if v.is_empty() => None,
            Some(v) => Some(v.clone()),
            None => Some(default_key_var(side).to_string()),
        }
    }

    /// Worst-case blocking time of one `act` call.
    pub fn max_blocking(&self) -> Duration {
        let attempts = f64::from(self.max_retries + 1);
        let backoff: f64 = (0..self.max_retries).map(|i| self.backoff_base_secs * 2f64.powi(i as i32)).sum();
        Duration::from_secs_f64(self.timeout_secs * attempts + backoff)
    }
}

pub fn default_key_var(side: Side) -> &'static str {
    match side {
        Side::Red => "SIM_LLM_API_KEY_RED",
        Side::Blue => "SIM_LLM_API_KEY_BLUE",
    }
}

pub struct LlmAgent {
    cfg: LlmBackendConfig,
    side: Side,
    p_max: u32,
    api_key: Option<String>,
    http: ureq::Agent,
    events: Vec<String>,
}

impl LlmAgent {
    /// Resolves the API key up front so a missing credential fails before
    /// any round runs.
    pub fn new(cfg: LlmBackendConfig, side: Side, p_max: u32) -> Result<Self, AgentError> {
        cfg.validate()?;
        let api_key = match cfg.key_var(side) {
            None => None,
            Some(var) => match std::env::var(&var) {
                Ok(k) if !k.is_empty() => Some(k),
                _ => return Err(AgentError::AuthMissing { var }),
            },
        };
        let http: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .http_status_as_error(true)
            .build()
            .into();
        Ok(LlmAgent { cfg, side, p_max, api_key, http, events: Vec::new() })
    }

    fn system_prompt(&self) -> String {
        let role = self.cfg.role_instructions.clone().unwrap_or_else(|| {
            format!(
                "You are the {} broadcaster in an opinion-dynamics simulation. \
                 Your aim is to move the population toward the {} pole.",
                self.side,
                self.side
            )
        });
        format!(
            "{role}\nRespond with a single JSON object of the form \
             {{\"message\": <string>, \"potency\": <integer from 1 to {}>}}.",
            self.p_max
        )
    }

    pub fn render_prompt(&self, obs: &Observation) -> String {
        let c = obs.counts;
        let opponent = match &obs.opponent_last_message {
            Some((text, p)) => format!("\"{text}\" (potency {p})"),
            None => "none".to_string(),
        };
        self.cfg
            .prompt_template
            .replace("{topic}", &obs.topic)
            .replace("{round}", &obs.round.to_string())
            .replace("{counts}", &format!("red={} neutral={} blue={}", c.red, c.neutral, c.blue))
            .replace("{mean}", &format!("{:.4}", obs.mean_opinion))
            .replace("{energy}", &obs.own_energy.to_string())
            .replace("{opponent_message}", &opponent)
    }

    fn request_once(&self, body: &Value) -> Result<String, String> {
        let url = format!("{}/chat/completions", self.cfg.endpoint_url.trim_end_matches('/'));
        let mut req = self.http.post(&url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| format!("transport: {e}"))?;
        let reply: Value = resp.body_mut().read_json().map_err(|e| format!("response body: {e}"))?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| "response has no choices[0].message.content".to_string())
    }
}

impl Agent for LlmAgent {
    fn act(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        let body = json!({
            "model": self.cfg.model_name,
            "messages": [
                {"role": "system", "content": self.system_prompt()},
                {"role": "user", "content": self.render_prompt(obs)},
            ],
            "temperature": self.cfg.temperature,
        });
        let attempts = self.cfg.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.cfg.backoff_base_secs * 2f64.powi(attempt as i32 - 1);
                std::thread::sleep(Duration::from_secs_f64(delay));
            }
            let parsed = self.request_once(&body).and_then(|content| extract_action(&content, self.p_max));
            match parsed {
                Ok((action, clamped_from)) => {
                    if let Some(raw) = clamped_from {
                        let note = format!(
                            "round {}: {} potency {raw} clamped to {}",
                            obs.round, self.side, action.potency
                        );
                        log::warn!("{note}");
                        self.events.push(note);
                    }
                    return Ok(action);
                }
                Err(e) => {
                    log::warn!("{} backend attempt {}/{attempts} failed: {e}", self.side, attempt + 1);
                    last_error = e;
                }
            }
        }
        Err(AgentError::BackendUnavailable { attempts, last_error })
    }

    fn describe(&self) -> String {
        format!("llm:{}@{}", self.cfg.model_name, self.cfg.endpoint_url)
    }

    fn drain_events(&mut self) -> Vec<String> {
        std::mem::take(&mut self.events)
    }
}

/// Finds the first JSON object in `content` carrying a string `message` and
/// a numeric `potency`. Potency is rounded and clamped into `[1, p_max]`; the
/// second element holds the raw value when clamping changed it.
pub fn extract_action(content: &str, p_max: u32) -> Result<(AgentAction, Option<f64>), String> {
    for (start, _) in content.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&content[start..]).into_iter::<Value>();
        let Some(Ok(Value::Object(obj))) = stream.next() else {
            continue;
        };
        let (Some(message), Some(raw)) = (obj.get("message").and_then(Value::as_str), obj.get("potency")) else {
            continue;
        };
        let Some(raw) = raw.as_f64().or_else(|| raw.as_str().and_then(|s| s.trim().parse().ok())) else {
            continue;
        };
        if !raw.is_finite() {
            continue;
        }
        let potency = raw.round().clamp(1.0, f64::from(p_max)) as u32;
        let clamped = (f64::from(potency) != raw).then_some(raw);
        return Ok((AgentAction::new(message, potency), clamped));
    }
    Err("no JSON object with `message` and `potency` found in reply".to_string())
}
