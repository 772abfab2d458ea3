//! Output files and the per-run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn format_time(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Collects the outputs of one subcommand and writes `<command>.manifest.json`
/// once they are all in place.
pub struct Run {
    command: &'static str,
    out: PathBuf,
    seed: u64,
    now: Option<DateTime<Utc>>,
    config_sha256: String,
    params: Value,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Run {
    pub fn start(command: &'static str, cfg: &PipelineConfig, params: Value) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
        let canonical = serde_json::to_vec(cfg).expect("config serializes");
        Ok(Run {
            command,
            out: cfg.out.clone(),
            seed: cfg.seed,
            now: cfg.now,
            config_sha256: sha256_hex(&canonical),
            params,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    fn now_text(&self) -> String {
        self.now.map_or_else(|| "unset".to_string(), format_time)
    }

    pub fn meta(&self) -> Value {
        json!({ "seed": self.seed, "now": self.now.map(format_time) })
    }

    /// Comment line that opens every CSV output.
    pub fn header_comment(&self) -> String {
        format!("# seed={} now={}\n", self.seed, self.now_text())
    }

    /// Hashes an input file into the manifest.
    pub fn input(&mut self, label: &str, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.insert(label.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Hashes a file written elsewhere into the manifest outputs.
    pub fn track(&mut self, label: &str, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.outputs.insert(label.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        repotrend::io::write_atomic(&path, bytes)?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
        I: IntoIterator<Item = R>,
    {
        let mut buf = self.header_comment().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let csv_err = |e: csv::Error| CliError::validation(format!("{name}: {e}"));
            w.write_record(header).map_err(csv_err)?;
            for row in rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::io(Path::new(name), e))?;
        }
        self.write(name, &buf)
    }

    /// Writes `value` as a JSON object with a leading `meta` member.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).expect("output serializes");
        let v = match v {
            Value::Object(ref mut m) => {
                m.insert("meta".into(), self.meta());
                v
            }
            other => json!({ "meta": self.meta(), "data": other }),
        };
        let mut bytes = serde_json::to_vec_pretty(&v).expect("output serializes");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes JSON lines after a `{"meta": ...}` first line.
    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, items: &[T]) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec(&json!({ "meta": self.meta() })).expect("meta serializes");
        bytes.push(b'\n');
        for item in items {
            serde_json::to_writer(&mut bytes, item).expect("output serializes");
            bytes.push(b'\n');
        }
        self.write(name, &bytes)
    }

    pub fn write_svg(&mut self, name: &str, svg: &str) -> Result<(), CliError> {
        let comment = format!("<!-- seed={} now={} -->\n", self.seed, self.now_text());
        let body = match svg.find('\n') {
            Some(i) if svg.starts_with("<?xml") => format!("{}{}{}", &svg[..=i], comment, &svg[i + 1..]),
            _ => format!("{comment}{svg}"),
        };
        self.write(name, body.as_bytes())
    }

    pub fn finish(self) -> Result<(), CliError> {
        let manifest = json!({
            "command": self.command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "corpus_schema_version": repotrend::schema::SCHEMA_VERSION,
            "seed": self.seed,
            "now": self.now.map(format_time),
            "config_sha256": self.config_sha256,
            "params": self.params,
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        let path = self.out.join(format!("{}.manifest.json", self.command));
        repotrend::io::write_atomic(&path, &bytes)?;
        Ok(())
    }
}

/// Reads a JSON-lines output, skipping its `meta` line.
pub fn read_jsonl_items(path: &Path) -> Result<Vec<Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line)
            .map_err(|e| CliError::validation(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if i == 0 && v.get("meta").is_some() {
            continue;
        }
        items.push(v);
    }
    Ok(items)
}

/// File-name friendly form of a label.
pub fn slug(label: &str) -> String {
    let s: String = label
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}
