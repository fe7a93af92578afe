//! File writers. Floats go out with 17 significant digits so every value
//! round-trips.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use wavebreak_core::evolution::{CharacteristicSample, SimulationTrace};

use crate::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_bool(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    }
}

/// Collects written paths for the manifest.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn trace(&mut self, name: &str, trace: &SimulationTrace) -> Result<(), CliError> {
        let rows: Vec<Vec<String>> = trace
            .rows
            .iter()
            .map(|r| {
                [r.t, r.m, r.big_m, r.z0, r.z1, r.z2, r.z3, r.tail_ratio]
                    .into_iter()
                    .map(num)
                    .collect()
            })
            .collect();
        self.csv(name, &["t", "m", "M", "z0", "z1", "z2", "z3", "tail_ratio"], &rows)
    }

    pub fn characteristics(
        &mut self,
        name: &str,
        seeds: &[f64],
        samples: &[CharacteristicSample],
    ) -> Result<(), CliError> {
        let mut rows = Vec::new();
        for s in samples {
            for (j, beta) in seeds.iter().enumerate() {
                rows.push(vec![
                    num(s.t),
                    num(*beta),
                    num(s.positions[j]),
                    num(s.slopes[j]),
                    num(s.forcing[j]),
                    num(s.forcing_sup),
                    num(s.m),
                    s.frozen[j].to_string(),
                ]);
            }
        }
        self.csv(
            name,
            &["t", "beta", "xi", "v", "n_ux", "n_ux_sup", "m", "frozen"],
            &rows,
        )
    }

    /// Write the manifest last; it lists everything written before it.
    pub fn manifest(
        mut self,
        command: &str,
        config: serde_json::Value,
        started: SystemTime,
        elapsed: Duration,
    ) -> Result<PathBuf, CliError> {
        let outputs: Vec<String> = self.written.iter().map(|p| p.display().to_string()).collect();
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "outputs": outputs,
            "started_unix": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            "wall_seconds": elapsed.as_secs_f64(),
        });
        let path = self.path("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        self.written.push(path.clone());
        Ok(path)
    }
}
