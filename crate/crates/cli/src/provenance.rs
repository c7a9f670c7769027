//! `run.json` records: the resolved config and arguments of one run, enough
//! to reproduce its outputs. They carry no timestamps or host details.

use std::path::Path;

use eyetwin::harness::{parse_config, to_config_json, ARTIFACT_VERSION, SPEC_VERSION};
use eyetwin::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

pub const FILE_NAME: &str = "run.json";

/// A config read from disk, plus the arguments stored alongside it when the
/// file was a provenance record.
pub struct Loaded<T> {
    pub config: T,
    pub args: Value,
}

/// Reads either a plain config document or the `run.json` of an earlier
/// `command` run.
pub fn load<T: DeserializeOwned>(path: &Path, command: &str) -> Result<Loaded<T>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Option<Value> = serde_json::from_str(&text).ok();
    let Some(Value::Object(mut record)) = doc.filter(|v| v.get("command").is_some()) else {
        return Ok(Loaded { config: parse_config(&text)?, args: Value::Null });
    };
    if record.get("command").and_then(Value::as_str) != Some(command) {
        return Err(Error::Config {
            pointer: "/command".into(),
            message: format!("record is from a different command; expected \"{command}\""),
        });
    }
    let inner = record.remove("config").unwrap_or(Value::Null);
    let config = parse_config(&inner.to_string()).map_err(|e| match e {
        Error::Config { pointer, message } => Error::Config { pointer: format!("/config{pointer}"), message },
        other => other,
    })?;
    Ok(Loaded { config, args: record.remove("args").unwrap_or(Value::Null) })
}

pub fn write<T: Serialize>(dir: &Path, command: &str, config: &T, args: Value) -> Result<(), Error> {
    let config: Value = serde_json::from_str(&to_config_json(config)).expect("config serializes");
    let record = json!({
        "spec_version": SPEC_VERSION,
        "artifact_version": ARTIFACT_VERSION,
        "command": command,
        "config": config,
        "args": args,
    });
    let path = dir.join(FILE_NAME);
    let text = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
