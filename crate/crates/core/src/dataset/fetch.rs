//! Downloading manifest files with SHA-256 verification.
//!
//! Files already on disk with the expected digest are left alone. A file
//! with the wrong digest is moved aside to `<name>.corrupt` and fetched
//! again. Transport errors and 5xx responses are retried with exponential
//! backoff; other HTTP errors fail that file only.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dataset::manifest::{DatasetManifest, Download};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct FetchOptions {
    /// Concurrent downloads.
    pub concurrency: usize,
    pub max_attempts: usize,
    /// Delay before the first retry; doubled for each further retry.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            concurrency: 4,
            max_attempts: 3,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(600),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FetchOutcome {
    /// Present with the expected digest; nothing transferred.
    Verified,
    Downloaded {
        attempts: usize,
        /// A previous copy failed verification and was quarantined.
        replaced_corrupt: bool,
    },
    Failed {
        message: String,
    },
    /// The manifest has no download entry for this file.
    NoSource,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FetchedFile {
    pub path: PathBuf,
    #[serde(flatten)]
    pub outcome: FetchOutcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FetchReport {
    pub files: Vec<FetchedFile>,
}

impl FetchReport {
    pub fn downloaded(&self) -> usize {
        self.count(|o| matches!(o, FetchOutcome::Downloaded { .. }))
    }

    pub fn verified(&self) -> usize {
        self.count(|o| matches!(o, FetchOutcome::Verified))
    }

    pub fn failed(&self) -> usize {
        self.count(|o| matches!(o, FetchOutcome::Failed { .. }))
    }

    pub fn without_source(&self) -> usize {
        self.count(|o| matches!(o, FetchOutcome::NoSource))
    }

    fn count(&self, f: impl Fn(&FetchOutcome) -> bool) -> usize {
        self.files.iter().filter(|e| f(&e.outcome)).count()
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Fetches every file of `manifest` that has a download entry into `dest`.
pub fn fetch_dataset(manifest: &DatasetManifest, dest: &Path, options: &FetchOptions) -> Result<FetchReport> {
    fs::create_dir_all(dest).map_err(|e| Error::io(format!("creating {}", dest.display()), e))?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(options.timeout))
        .http_status_as_error(true)
        .build()
        .into();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.concurrency.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("download pool: {e}")))?;
    let files = manifest.files();
    let fetched = pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let outcome = match &f.download {
                    None => FetchOutcome::NoSource,
                    Some(dl) => fetch_one(&agent, &dest.join(&f.path), dl, options),
                };
                FetchedFile {
                    path: f.path.clone(),
                    outcome,
                }
            })
            .collect()
    });
    Ok(FetchReport { files: fetched })
}

fn fetch_one(agent: &ureq::Agent, target: &Path, dl: &Download, options: &FetchOptions) -> FetchOutcome {
    let expected = dl.sha256.to_ascii_lowercase();
    let mut replaced_corrupt = false;
    if target.is_file() {
        match sha256_file(target) {
            Ok(digest) if digest == expected => return FetchOutcome::Verified,
            _ => {
                if let Err(e) = quarantine(target) {
                    return FetchOutcome::Failed {
                        message: format!("cannot quarantine corrupt file: {e}"),
                    };
                }
                replaced_corrupt = true;
            }
        }
    }
    if let Some(parent) = target.parent() {
        if let Err(e) = fs::create_dir_all(parent) {
            return FetchOutcome::Failed {
                message: format!("creating {}: {e}", parent.display()),
            };
        }
    }

    let mut delay = options.backoff;
    for attempt in 1..=options.max_attempts.max(1) {
        match download(agent, &dl.url, target) {
            Ok(digest) if digest == expected => {
                return FetchOutcome::Downloaded {
                    attempts: attempt,
                    replaced_corrupt,
                }
            }
            Ok(digest) => {
                let _ = quarantine(target);
                return FetchOutcome::Failed {
                    message: format!("checksum mismatch: expected {expected}, got {digest}"),
                };
            }
            Err(Attempt::Fatal(message)) => return FetchOutcome::Failed { message },
            Err(Attempt::Retry(message)) => {
                if attempt == options.max_attempts.max(1) {
                    return FetchOutcome::Failed {
                        message: format!("{message} (after {attempt} attempts)"),
                    };
                }
                thread::sleep(delay);
                delay *= 2;
            }
        }
    }
    unreachable!("loop returns on the last attempt")
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

/// Streams `url` into `target` (through a `.part` file) and returns its digest.
fn download(agent: &ureq::Agent, url: &str, target: &Path) -> std::result::Result<String, Attempt> {
    let mut response = match agent.get(url).call() {
        Ok(r) => r,
        Err(ureq::Error::StatusCode(code)) if code >= 500 || code == 429 => {
            return Err(Attempt::Retry(format!("HTTP {code}")))
        }
        Err(ureq::Error::StatusCode(code)) => return Err(Attempt::Fatal(format!("HTTP {code}"))),
        Err(e) => return Err(Attempt::Retry(e.to_string())),
    };
    let part = target.with_extension(match target.extension() {
        Some(ext) => format!("{}.part", ext.to_string_lossy()),
        None => "part".to_string(),
    });
    let result = (|| -> io::Result<String> {
        let mut out = fs::File::create(&part)?;
        let mut reader = response.body_mut().as_reader();
        let mut hasher = Sha256::new();
        let mut buf = vec![0u8; 1 << 16];
        loop {
            let n = reader.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            out.write_all(&buf[..n])?;
        }
        out.sync_all()?;
        drop(out);
        fs::rename(&part, target)?;
        Ok(hex::encode(hasher.finalize()))
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&part);
        Attempt::Retry(format!("transfer: {e}"))
    })
}

fn quarantine(path: &Path) -> io::Result<()> {
    let mut name = path.as_os_str().to_owned();
    name.push(".corrupt");
    fs::rename(path, PathBuf::from(name))
}
