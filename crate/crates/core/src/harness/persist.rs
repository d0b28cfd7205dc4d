use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::TrialRecord;
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

pub const CSV_COLUMNS: [&str; 10] = [
    "trial",
    "K",
    "lambda",
    "gamma",
    "sigma_omega",
    "best_subopt",
    "best_gradsq",
    "max_dist",
    "diverged",
    "wall_time",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

impl OutputFormat {
    /// From the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) => ext.parse(),
            None => Ok(OutputFormat::Csv),
        }
    }
}

#[derive(Serialize)]
struct JsonOut<'a, T: Serialize> {
    schema: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    config: Option<&'a serde_json::Value>,
    records: &'a T,
}

#[derive(Deserialize)]
struct JsonIn {
    schema: String,
    records: Vec<TrialRecord>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes any serialisable payload as a `hclip-v1` JSON document.
pub fn write_json<T: Serialize>(
    payload: &T,
    path: &Path,
    echo: Option<&serde_json::Value>,
    timestamp: bool,
) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let doc = JsonOut {
        schema: SCHEMA_VERSION,
        generated_at_unix: timestamp.then(now_unix),
        config: echo,
        records: payload,
    };
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// CSV gets a header row even when `records` is empty; the config echo is JSON only.
pub fn write_records(
    records: &[TrialRecord],
    path: &Path,
    format: OutputFormat,
    echo: Option<&serde_json::Value>,
    timestamp: bool,
) -> Result<()> {
    match format {
        OutputFormat::Json => write_json(&records, path, echo, timestamp),
        OutputFormat::Csv => {
            let csv_err = |source| Error::Csv {
                path: path.to_path_buf(),
                source,
            };
            let mut file = File::create(path).map_err(io_err(path))?;
            if timestamp {
                writeln!(file, "# generated_at_unix={}", now_unix()).map_err(io_err(path))?;
            }
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(file);
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for r in records {
                w.serialize(r).map_err(csv_err)?;
            }
            w.flush().map_err(io_err(path))
        }
    }
}

/// Reads records written by [`write_records`].
pub fn load_records(path: &Path, format: OutputFormat) -> Result<Vec<TrialRecord>> {
    match format {
        OutputFormat::Csv => {
            let csv_err = |source| Error::Csv {
                path: path.to_path_buf(),
                source,
            };
            let mut r = csv::ReaderBuilder::new()
                .comment(Some(b'#'))
                .from_path(path)
                .map_err(csv_err)?;
            r.deserialize()
                .collect::<std::result::Result<_, _>>()
                .map_err(csv_err)
        }
        OutputFormat::Json => {
            let file = File::open(path).map_err(io_err(path))?;
            let doc: JsonIn =
                serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| {
                    Error::Json {
                        path: path.to_path_buf(),
                        source,
                    }
                })?;
            if doc.schema != SCHEMA_VERSION {
                return Err(Error::Config {
                    path: "schema".into(),
                    message: format!("expected {SCHEMA_VERSION}, found {}", doc.schema),
                });
            }
            Ok(doc.records)
        }
    }
}
