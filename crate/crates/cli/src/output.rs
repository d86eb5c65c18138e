// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

use dpcusum::Error;
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// Writes `bytes` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    emit(out, text.as_bytes())
}

/// Writes `<out>.meta.json` next to a CSV artifact. The timestamp lives here
/// so the CSV itself is reproducible byte for byte.
pub fn emit_sidecar<T: Serialize>(out: Option<&Path>, command: &str, seed: Option<u64>, config: &T) -> Result<(), Error> {
    let Some(path) = out else {
        return Ok(());
    };
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "command": command,
        "seed": seed,
        "config": config,
        "created_unix": created,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    emit_json(Some(Path::new(&name)), &meta)
}
