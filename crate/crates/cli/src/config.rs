use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use seqclock::models::{presets, FullParams, GoodwinParams, PwaParams, ReducedParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Full,
    Reduced,
    Transformed,
    Pwa,
    Goodwin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Preset {
    #[value(name = "paper-standard")]
    #[serde(rename = "paper-standard")]
    Standard,
    #[value(name = "paper-gamma1.5")]
    #[serde(rename = "paper-gamma1.5")]
    Gamma15,
    #[value(name = "goodwin-fig8")]
    #[serde(rename = "goodwin-fig8")]
    Goodwin,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Named parameter set; ignored when --params is given.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// JSON file with the model's parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run grids and scans on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Parameters of whichever model was selected.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(untagged)]
pub enum Resolved {
    Full(FullParams),
    Reduced(ReducedParams),
    Pwa(PwaParams),
    Goodwin(GoodwinParams),
    None,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read parameter file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("bad parameter file {}", path.display()))
}

impl Common {
    pub fn model_or(&self, default: ModelKind) -> ModelKind {
        self.model.unwrap_or(default)
    }

    fn preset_or_default(&self, model: ModelKind) -> Preset {
        self.preset.unwrap_or(match model {
            ModelKind::Goodwin => Preset::Goodwin,
            _ => Preset::Standard,
        })
    }

    pub fn resolve(&self, model: ModelKind) -> Result<Resolved> {
        if let Some(path) = &self.params {
            return Ok(match model {
                ModelKind::Full => Resolved::Full(read_json(path)?),
                ModelKind::Reduced | ModelKind::Transformed => Resolved::Reduced(read_json(path)?),
                ModelKind::Pwa => Resolved::Pwa(read_json(path)?),
                ModelKind::Goodwin => Resolved::Goodwin(read_json(path)?),
            });
        }
        let preset = self.preset_or_default(model);
        let reduced = match preset {
            Preset::Standard => Some(presets::standard()),
            Preset::Gamma15 => Some(presets::gamma_1_5()),
            Preset::Goodwin => None,
        };
        Ok(match (model, reduced) {
            (ModelKind::Goodwin, None) => Resolved::Goodwin(presets::goodwin()),
            (ModelKind::Reduced | ModelKind::Transformed, Some(r)) => Resolved::Reduced(r),
            (ModelKind::Pwa, Some(r)) => Resolved::Pwa(r.pwa()),
            (ModelKind::Full, _) => bail!("the full model has no preset; pass --params"),
            (m, _) => bail!("preset {preset:?} does not apply to model {m:?}"),
        })
    }

    pub fn reduced(&self, model: ModelKind) -> Result<ReducedParams> {
        match self.resolve(model)? {
            Resolved::Reduced(p) => Ok(p),
            _ => bail!("this command needs reduced-model parameters"),
        }
    }

    pub fn pwa(&self) -> Result<PwaParams> {
        match self.resolve(ModelKind::Pwa)? {
            Resolved::Pwa(p) => Ok(p),
            _ => unreachable!(),
        }
    }

    pub fn goodwin(&self) -> Result<GoodwinParams> {
        match self.resolve(ModelKind::Goodwin)? {
            Resolved::Goodwin(p) => Ok(p),
            _ => unreachable!(),
        }
    }

    pub fn preset_label(&self, model: ModelKind) -> Option<Preset> {
        if self.params.is_some() {
            None
        } else {
            Some(self.preset_or_default(model))
        }
    }
}

/// Parses `a,b,c`, `lo:hi:n` (evenly spaced) or `geom:lo:hi:n` (log spaced).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let (geom, body) = match spec.strip_prefix("geom:") {
        Some(rest) => (true, rest),
        None => (false, spec),
    };
    if body.contains(':') {
        let f: Vec<&str> = body.split(':').collect();
        if f.len() != 3 {
            bail!("grid `{spec}` must look like lo:hi:n");
        }
        let lo: f64 = f[0].trim().parse().with_context(|| format!("grid `{spec}`"))?;
        let hi: f64 = f[1].trim().parse().with_context(|| format!("grid `{spec}`"))?;
        let n: usize = f[2].trim().parse().with_context(|| format!("grid `{spec}`"))?;
        if n == 0 {
            bail!("grid `{spec}` has no points");
        }
        if geom && !(lo > 0.0 && hi > 0.0) {
            bail!("log grid `{spec}` needs positive ends");
        }
        let at = |i: usize| {
            let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            if geom {
                (lo.ln() + s * (hi.ln() - lo.ln())).exp()
            } else {
                lo + s * (hi - lo)
            }
        };
        return Ok((0..n).map(at).collect());
    }
    body.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad grid value `{v}` in `{spec}`"))
        })
        .collect()
}

/// The JSON sidecar written next to every output.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a, O: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub model: ModelKind,
    pub preset: Option<Preset>,
    pub params_file: Option<&'a Path>,
    pub params: Resolved,
    pub seed: u64,
    pub options: O,
    pub outputs: Vec<String>,
    pub results: serde_json::Value,
    pub complete: bool,
}

pub fn write_sidecar<O: Serialize>(out: &Path, sidecar: &Sidecar<O>) -> Result<()> {
    let path = out.join(format!("{}.run.json", sidecar.command));
    let text = serde_json::to_string_pretty(sidecar)?;
    fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}
