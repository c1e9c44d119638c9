//! Bridge to an external deductive verifier.
//!
//! The prover is a black box: it gets the rendered file as its last argument
//! and its exit status decides whether the obligations closed. No prover
//! configured means a skipped report, never a failure.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::CodegenError;

pub const DEFAULT_TIMEOUT_SECS: u64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ObligationStatus {
    Closed,
    Open,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifierReport {
    pub skipped: bool,
    pub prover: Option<String>,
    pub obligations: Vec<(String, ObligationStatus)>,
    pub exit_code: Option<i32>,
    pub output_excerpt: String,
}

impl VerifierReport {
    pub fn skipped() -> Self {
        VerifierReport {
            skipped: true,
            prover: None,
            obligations: Vec::new(),
            exit_code: None,
            output_excerpt: String::new(),
        }
    }

    pub fn all_closed(&self) -> bool {
        self.obligations.iter().all(|(_, s)| *s == ObligationStatus::Closed)
    }
}

pub fn verify_external(
    path: &Path,
    prover_cmd: Option<&str>,
    timeout_secs: u64,
) -> Result<VerifierReport, CodegenError> {
    let Some(cmd) = prover_cmd else {
        return Ok(VerifierReport::skipped());
    };
    let mut parts = cmd.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| CodegenError::ProverNotFound("empty prover command".into()))?;
    let mut command = Command::new(program);
    command.args(parts).arg(path);
    command.stdout(Stdio::piped()).stderr(Stdio::piped());

    let mut child = command
        .spawn()
        .map_err(|e| CodegenError::ProverNotFound(format!("{program}: {e}")))?;

    let started = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if started.elapsed() > Duration::from_secs(timeout_secs) {
            let _ = child.kill();
            let _ = child.wait();
            return Err(CodegenError::ProverTimeout(timeout_secs));
        }
        std::thread::sleep(Duration::from_millis(25));
    };

    let output = child.wait_with_output()?;
    let mut excerpt = String::from_utf8_lossy(&output.stdout).to_string();
    excerpt.push_str(&String::from_utf8_lossy(&output.stderr));
    excerpt.truncate(2000);

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "unit".into());
    let verdict = if status.success() {
        ObligationStatus::Closed
    } else {
        ObligationStatus::Open
    };
    Ok(VerifierReport {
        skipped: false,
        prover: Some(cmd.to_string()),
        obligations: vec![(name, verdict)],
        exit_code: status.code(),
        output_excerpt: excerpt,
    })
}
