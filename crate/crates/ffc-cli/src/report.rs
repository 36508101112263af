//! Report envelope. Every artifact is `{config, payload, meta}` JSON where
//! `payload` is a pure function of config + seed (bit-reproducible) and all
//! timing lives in `meta`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliResult;

#[derive(Serialize)]
struct Meta {
    /// Seconds since the Unix epoch at write time.
    timestamp_unix: u64,
    /// Total wall-clock seconds for the subcommand.
    wall_time_s: f64,
    /// Per-phase wall-clock seconds, in execution order.
    phases: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct Envelope<'a, P: Serialize> {
    config: &'a BTreeMap<String, String>,
    payload: &'a P,
    meta: Meta,
}

/// Accumulates named phase durations for the meta section.
#[derive(Default)]
pub struct PhaseClock {
    phases: Vec<(String, f64)>,
}

impl PhaseClock {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.phases
            .push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

pub fn write_report<P: Serialize>(
    path: &Path,
    config: &BTreeMap<String, String>,
    payload: &P,
    wall_time_s: f64,
    clock: PhaseClock,
) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let envelope = Envelope {
        config,
        payload,
        meta: Meta {
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_s,
            phases: clock.phases,
        },
    };
    let json = serde_json::to_string_pretty(&envelope)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Read an envelope back, returning its resolved config and payload.
pub fn read_payload(path: &Path) -> CliResult<(BTreeMap<String, String>, serde_json::Value)> {
    let raw = std::fs::read_to_string(path)?;
    let doc: serde_json::Value = serde_json::from_str(&raw)?;
    let config = doc
        .get("config")
        .cloned()
        .map(serde_json::from_value)
        .transpose()?
        .unwrap_or_default();
    let payload = doc
        .get("payload")
        .cloned()
        .ok_or_else(|| crate::error::CliError::data(format!("{}: no payload section", path.display())))?;
    Ok((config, payload))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_section_is_stable_across_writes() {
        let dir = tempfile::tempdir().unwrap();
        let config: BTreeMap<String, String> =
            [("seed".to_string(), "7".to_string())].into_iter().collect();
        let payload = vec![1.0f64, 0.25, -3.5];
        let read_payload = |p: &Path| {
            let doc: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
            serde_json::to_string(&doc["payload"]).unwrap()
        };
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        write_report(&a, &config, &payload, 0.5, PhaseClock::default()).unwrap();
        write_report(&b, &config, &payload, 1.5, PhaseClock::default()).unwrap();
        assert_eq!(read_payload(&a), read_payload(&b));
    }

    #[test]
    fn meta_carries_phases_outside_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let mut clock = PhaseClock::default();
        let value = clock.time("phase-a", || 41) + 1;
        write_report(&path, &BTreeMap::new(), &value, 0.1, clock).unwrap();
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(doc["payload"], 42);
        assert_eq!(doc["meta"]["phases"][0][0], "phase-a");
        assert!(doc["meta"]["wall_time_s"].is_number());
    }
}
