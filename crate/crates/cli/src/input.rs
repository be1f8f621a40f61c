use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use cms_core::io::{MeasureSpec, SequenceSpec, ShiftSpec};
use cms_core::measures::Measure;
use cms_core::potential::Potential;
use cms_core::ShiftPresentation;
use serde::de::DeserializeOwned;

/// Parses JSON text, reporting the field path and position of the first error.
pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!(
            "{origin}: invalid input at field `{path}`: {}",
            e.into_inner()
        )
    })?;
    de.end()
        .map_err(|e| anyhow!("{origin}: trailing characters: {e}"))?;
    Ok(value)
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, &path.display().to_string())
}

pub fn shift(path: &Path) -> Result<ShiftPresentation> {
    let spec: ShiftSpec = load(path)?;
    spec.build()
        .with_context(|| format!("{}: invalid shift", path.display()))
}

pub fn potential(path: &Path) -> Result<Potential> {
    load(path)
}

pub fn measure(path: &Path, shift: &ShiftPresentation) -> Result<Measure> {
    let spec: MeasureSpec = load(path)?;
    spec.build(shift)
        .with_context(|| format!("{}: invalid measure", path.display()))
}

/// A single measure or a JSON list of measures.
pub fn measures(path: &Path, shift: &ShiftPresentation) -> Result<Vec<Measure>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let origin = path.display().to_string();
    let specs: Vec<MeasureSpec> = if text.trim_start().starts_with('[') {
        parse(&text, &origin)?
    } else {
        vec![parse(&text, &origin)?]
    };
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.build(shift)
                .with_context(|| format!("{origin}: measure {i} is invalid"))
        })
        .collect()
}

pub fn sequence(path: &Path, shift: &ShiftPresentation) -> Result<(Vec<u64>, Vec<Measure>)> {
    let spec: SequenceSpec = load(path)?;
    let seq = spec
        .build(shift)
        .with_context(|| format!("{}: invalid sequence", path.display()))?;
    Ok((spec.indices(), seq))
}
