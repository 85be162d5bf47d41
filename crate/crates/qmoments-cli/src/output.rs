use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::SCHEMA_VERSION;
use crate::error::CliError;

/// Output directory for one run; every file carries the schema version and
/// the config hash.
pub struct Output {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

/// 17 significant digits, enough to round-trip an f64.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

impl Output {
    pub fn new(dir: &Path, hash: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), hash: hash.to_owned(), written: Vec::new() })
    }

    pub fn header(&self) -> String {
        format!("# qmoments schema_version={SCHEMA_VERSION} config_sha256={}", self.hash)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn persist(&mut self, name: &str, body: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        tmp.write_all(body).and_then(|_| tmp.flush()).map_err(|e| CliError::io(&path, e))?;
        tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv<I, R>(&mut self, name: &str, columns: &[String], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[String]>,
    {
        let mut body = self.header();
        body.push('\n');
        body.push_str(&columns.join(","));
        body.push('\n');
        for r in rows {
            body.push_str(&r.as_ref().join(","));
            body.push('\n');
        }
        self.persist(name, body.as_bytes())
    }

    /// JSON object with `schema_version` and `config_sha256` prepended.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut obj = Map::new();
        obj.insert("schema_version".into(), SCHEMA_VERSION.into());
        obj.insert("config_sha256".into(), self.hash.clone().into());
        match serde_json::to_value(value).map_err(|e| CliError::numerical(e.to_string()))? {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable");
        text.push('\n');
        self.persist(name, text.as_bytes())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        self.persist(name, body.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn files_carry_the_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Output::new(dir.path(), "abc").unwrap();
        out.csv("x.csv", &["a".into(), "b".into()], [vec!["1".to_string(), "2".to_string()]]).unwrap();
        out.json("x.json", &serde_json::json!({"k": 1})).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
        assert_eq!(csv, "# qmoments schema_version=1 config_sha256=abc\na,b\n1,2\n");
        let j: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.json")).unwrap()).unwrap();
        assert_eq!(j["config_sha256"], "abc");
        assert_eq!(j["k"], 1);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    }
}
