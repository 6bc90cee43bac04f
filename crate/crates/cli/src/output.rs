use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mrn::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn io(path: &str, source: std::io::Error) -> Self {
        Self::Io { path: path.to_string(), source }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Io { .. } => "io",
            Self::Config(_) => "format",
            Self::Core(e) => match e {
                mrn::Error::Io(_) => "io",
                mrn::Error::Format { .. } => "format",
                mrn::Error::Shape { .. } => "shape",
                mrn::Error::InvalidArgument { .. } | mrn::Error::ResolutionTooLarge { .. } => "invalid_argument",
                _ => "internal",
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "usage" => 2,
            "io" => 3,
            "format" => 4,
            "shape" => 5,
            "invalid_argument" => 6,
            _ => 1,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit": self.exit_code(),
            "message": self.to_string().replace('\n', " "),
        })
        .to_string()
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn invalid(op: &'static str, detail: impl Into<String>) -> CliError {
    CliError::Core(mrn::Error::InvalidArgument { op, detail: detail.into() })
}

/// Sizes the rayon pool from `MRN_THREADS`. Results never depend on it.
pub fn configure_threads() -> CliResult {
    let Ok(v) = std::env::var("MRN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid("MRN_THREADS", format!("expected a positive integer, got {v:?}")))?;
    // Fails only if the pool already exists, which cannot happen here.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn read_bytes(path: &str) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_mrf(path: &str) -> CliResult<mrn::spaces::MultiResFunction> {
    Ok(mrn::io::decode_mrf(&read_bytes(path)?)?)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> CliResult<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{path}: {e}")))
}

/// Fails early when an output could not be created, before any work is done.
pub fn check_output(path: &str) -> CliResult {
    let p = Path::new(path);
    if path.is_empty() || p.is_dir() {
        return Err(invalid("output", format!("{path:?} is not a file path")));
    }
    match p.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "parent directory does not exist"),
        )),
        _ => Ok(()),
    }
}

/// `path` with its extension replaced.
pub fn sibling(path: &str, ext: &str) -> String {
    PathBuf::from(path).with_extension(ext).to_string_lossy().into_owned()
}

/// Collects outputs in memory so nothing is written unless the whole
/// command succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn bytes(&mut self, path: &str, data: Vec<u8>) {
        self.files.push((path.to_string(), data));
    }

    pub fn json<T: Serialize>(&mut self, path: &str, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
        s.push('\n');
        self.bytes(path, s.into_bytes());
    }

    pub fn csv<R: Serialize>(&mut self, path: &str, rows: impl IntoIterator<Item = R>) -> CliResult {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        }
        let data = w.into_inner().map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        self.bytes(path, data);
        Ok(())
    }

    pub fn mrf(&mut self, path: &str, f: &mrn::spaces::MultiResFunction) {
        self.bytes(path, mrn::io::encode_mrf(f));
    }

    /// Writes every output, then a manifest beside the first one.
    pub fn commit<A: Serialize>(self, command: &str, args: &A, seed: Option<u64>) -> CliResult {
        for (path, _) in &self.files {
            check_output(path)?;
        }
        for (path, data) in &self.files {
            fs::write(path, data).map_err(|e| CliError::io(path, e))?;
        }
        let Some((primary, _)) = self.files.first() else {
            return Ok(());
        };
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = serde_json::json!({
            "command": command,
            "args": args,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "timestamp": timestamp,
            "outputs": self.files.iter().map(|(p, _)| p).collect::<Vec<_>>(),
        });
        let path = format!("{primary}.manifest.json");
        let mut s = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        s.push('\n');
        fs::write(&path, s).map_err(|e| CliError::io(&path, e))
    }
}
