use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::dde::Trajectory;
use crate::spectral::StabilityReport;

use super::config::RunConfig;
use super::csv::{write_csv, Table};
use super::svg::{plot_svg, Plot};
use super::{write_file, ManifestEntry, ReportError};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Where a bundle came from: tool, command, resolved config and start time.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved configuration as re-parseable `key = value` text.
    pub config: String,
    pub started: String,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Deletes what an earlier run recorded in `root/manifest.json`. Only plain
/// relative paths inside `root` are touched.
fn remove_previous(root: &Path) {
    let manifest = root.join(MANIFEST_NAME);
    let Ok(text) = std::fs::read_to_string(&manifest) else {
        return;
    };
    let Ok(doc) = serde_json::from_str::<Value>(&text) else {
        log::warn!("ignoring unreadable {}", manifest.display());
        return;
    };
    let files = doc["files"].as_array().cloned().unwrap_or_default();
    for f in files {
        let Some(rel) = f["path"].as_str().map(Path::new) else {
            continue;
        };
        if rel
            .components()
            .all(|c| matches!(c, std::path::Component::Normal(_)))
        {
            let _ = std::fs::remove_file(root.join(rel));
        }
    }
    let _ = std::fs::remove_file(manifest);
}

/// Output directory of one run. Files go in only through the `write_*`
/// methods, and [`finish`](Self::finish) lists all of them in the manifest.
#[derive(Debug)]
pub struct ResultBundle {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    provenance: Provenance,
}

impl ResultBundle {
    /// Creates `root` and records the resolved config as `config.txt`.
    /// Files listed by an earlier manifest in `root` are removed first.
    pub fn create(root: &Path, command: &str, config: &RunConfig) -> Result<Self, ReportError> {
        std::fs::create_dir_all(root).map_err(|source| ReportError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        remove_previous(root);
        let mut bundle = Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
            provenance: Provenance {
                tool: "epidde".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config: config.echo(),
                started: now(),
            },
        };
        let echo = bundle.provenance.config.clone();
        bundle.write_text("config.txt", "config", &echo)?;
        Ok(bundle)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn record(&mut self, mut entry: ManifestEntry) -> &ManifestEntry {
        if let Ok(rel) = entry.path.strip_prefix(&self.root) {
            entry.path = rel.to_path_buf();
        }
        self.entries.retain(|e| e.path != entry.path);
        self.entries.push(entry);
        self.entries.last().unwrap()
    }

    pub fn write_table(
        &mut self,
        name: &str,
        table: &Table,
    ) -> Result<&ManifestEntry, ReportError> {
        let entry = write_csv(table, &self.root.join(name))?;
        Ok(self.record(entry))
    }

    pub fn write_trajectory(
        &mut self,
        name: &str,
        traj: &Trajectory,
        every: usize,
    ) -> Result<&ManifestEntry, ReportError> {
        let mut entry = write_csv(&Table::from_trajectory(traj, every), &self.root.join(name))?;
        entry.kind = "trajectory".into();
        Ok(self.record(entry))
    }

    pub fn write_plot(&mut self, name: &str, plot: &Plot) -> Result<&ManifestEntry, ReportError> {
        let entry = plot_svg(plot, &self.root.join(name))?;
        Ok(self.record(entry))
    }

    /// One JSON document per line.
    pub fn write_jsonl(
        &mut self,
        name: &str,
        kind: &str,
        records: &[Value],
    ) -> Result<&ManifestEntry, ReportError> {
        let mut text = String::new();
        for r in records {
            text.push_str(&r.to_string());
            text.push('\n');
        }
        let entry = write_file(&self.root.join(name), kind, text.as_bytes())?;
        Ok(self.record(entry))
    }

    pub fn write_text(
        &mut self,
        name: &str,
        kind: &str,
        text: &str,
    ) -> Result<&ManifestEntry, ReportError> {
        let entry = write_file(&self.root.join(name), kind, text.as_bytes())?;
        Ok(self.record(entry))
    }

    pub fn manifest(&self, finished: &str) -> Value {
        let files: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                let mut v = json!({
                    "path": e.path.to_string_lossy(),
                    "kind": e.kind,
                    "bytes": e.bytes,
                    "sha256": e.sha256,
                });
                if !e.columns.is_empty() {
                    v["columns"] = e
                        .columns
                        .iter()
                        .map(|(name, unit)| json!({ "name": name, "unit": unit }))
                        .collect();
                }
                v
            })
            .collect();
        let p = &self.provenance;
        json!({
            "tool": p.tool,
            "version": p.version,
            "command": p.command,
            "started": p.started,
            "finished": finished,
            "config": p.config,
            "files": files,
        })
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(self) -> Result<PathBuf, ReportError> {
        let path = self.root.join(MANIFEST_NAME);
        let text =
            serde_json::to_string_pretty(&self.manifest(&now())).expect("manifest serializes");
        write_file(&path, "manifest", format!("{text}\n").as_bytes())?;
        Ok(path)
    }
}

/// Flat JSON rendering of a stability report (non-finite numbers become null).
pub fn stability_json(report: &StabilityReport) -> Value {
    let coefficients: serde_json::Map<String, Value> = report
        .coefficients
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    let transversality = report
        .transversality
        .map(|t| json!({ "x": t.x, "y": t.y, "z": t.z, "holds": t.holds }));
    json!({
        "equilibrium": report.equilibrium.as_str(),
        "r0": report.r0,
        "verdict": report.verdict.as_str(),
        "omega_star": report.omega_star,
        "tau_star": report.tau_star,
        "transversality": transversality,
        "conditions": report.conditions,
        "coefficients": coefficients,
        "notes": report.notes,
    })
}
