//! Self-describing model file container.
//!
//! A file is a UTF-8 header followed by raw parameter data:
//!
//! ```text
//! PATHSRL <version>
//! kind <kind>
//! meta <key> <value...>            (any number)
//! dict <name> <count>              (followed by <count> entry lines)
//! array <name> <rows> <cols>       (any number)
//! end
//! <f64 little-endian data of every array, row-major, in declaration order>
//! ```
//!
//! Names may contain spaces (the counts are the last fields of their
//! line); dictionary entries and meta values may not contain newlines.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::neural::Mat;

pub const MAGIC: &str = "PATHSRL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelFile {
    pub kind: String,
    pub meta: Vec<(String, String)>,
    pub dicts: Vec<(String, Vec<String>)>,
    pub arrays: Vec<(String, Mat)>,
}

fn model_err(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

fn check_line(what: &str, s: &str) -> Result<()> {
    if s.contains('\n') || s.contains('\r') {
        return Err(model_err(format!("{what} contains a line break: {s:?}")));
    }
    Ok(())
}

impl ModelFile {
    pub fn new(kind: &str) -> Self {
        ModelFile {
            kind: kind.to_owned(),
            ..Default::default()
        }
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_owned(), value.to_string()));
    }

    pub fn push_dict(&mut self, name: &str, entries: &[String]) {
        self.dicts.push((name.to_owned(), entries.to_vec()));
    }

    pub fn push_array(&mut self, name: &str, m: &Mat) {
        self.arrays.push((name.to_owned(), m.clone()));
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| model_err(format!("missing meta field {key:?}")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.meta(key)?;
        v.parse()
            .map_err(|_| model_err(format!("meta field {key:?} has invalid value {v:?}")))
    }

    pub fn meta_bool(&self, key: &str) -> Result<bool> {
        match self.meta(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(model_err(format!(
                "meta field {key:?} is not a boolean: {v:?}"
            ))),
        }
    }

    pub fn dict(&self, name: &str) -> Result<&[String]> {
        self.dicts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.as_slice())
            .ok_or_else(|| model_err(format!("missing dictionary {name:?}")))
    }

    pub fn array(&self, name: &str) -> Result<&Mat> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| model_err(format!("missing array {name:?}")))
    }

    pub fn has_array(&self, name: &str) -> bool {
        self.arrays.iter().any(|(n, _)| n == name)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        check_line("kind", &self.kind)?;
        let mut header = format!("{MAGIC} {FORMAT_VERSION}\nkind {}\n", self.kind);
        for (k, v) in &self.meta {
            check_line("meta key", k)?;
            check_line("meta value", v)?;
            if k.contains(' ') {
                return Err(model_err(format!("meta key contains a space: {k:?}")));
            }
            header.push_str(&format!("meta {k} {v}\n"));
        }
        for (name, entries) in &self.dicts {
            check_line("dictionary name", name)?;
            header.push_str(&format!("dict {} {}\n", name, entries.len()));
            for e in entries {
                check_line("dictionary entry", e)?;
                header.push_str(e);
                header.push('\n');
            }
        }
        for (name, m) in &self.arrays {
            check_line("array name", name)?;
            header.push_str(&format!("array {} {} {}\n", name, m.rows(), m.cols()));
        }
        header.push_str("end\n");
        w.write_all(header.as_bytes())?;

        let mut buf = Vec::new();
        for (_, m) in &self.arrays {
            buf.reserve(m.data().len() * 8);
            for v in m.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Self> {
        let next_line = |r: &mut R| -> Result<String> {
            let mut line = String::new();
            if r.read_line(&mut line)? == 0 {
                return Err(model_err("unexpected end of header"));
            }
            if line.ends_with('\n') {
                line.pop();
            }
            Ok(line)
        };

        let first = next_line(&mut r)?;
        let version = match first.split_once(' ') {
            Some((MAGIC, v)) => v
                .parse::<u32>()
                .map_err(|_| model_err(format!("bad version field {v:?}")))?,
            _ => return Err(model_err("not a model file (bad magic)")),
        };
        if version != FORMAT_VERSION {
            return Err(model_err(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let kind = next_line(&mut r)?;
        let kind = kind
            .strip_prefix("kind ")
            .ok_or_else(|| model_err("missing kind line"))?
            .to_owned();

        let mut file = ModelFile::new(&kind);
        let mut shapes = Vec::new();
        loop {
            let line = next_line(&mut r)?;
            if line == "end" {
                break;
            }
            let (tag, rest) = line
                .split_once(' ')
                .ok_or_else(|| model_err(format!("malformed header line {line:?}")))?;
            match tag {
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    file.meta.push((k.to_owned(), v.to_owned()));
                }
                "dict" => {
                    let (name, count) = rest
                        .rsplit_once(' ')
                        .ok_or_else(|| model_err(format!("malformed dict line {line:?}")))?;
                    let count: usize = count
                        .parse()
                        .map_err(|_| model_err(format!("bad dictionary size in {line:?}")))?;
                    let mut entries = Vec::with_capacity(count);
                    for _ in 0..count {
                        entries.push(next_line(&mut r)?);
                    }
                    file.dicts.push((name.to_owned(), entries));
                }
                "array" => {
                    let mut parts = rest.rsplitn(3, ' ');
                    let cols = parts.next();
                    let rows = parts.next();
                    let name = parts.next();
                    let (name, rows, cols) = match (name, rows, cols) {
                        (Some(n), Some(r), Some(c)) => (n, r, c),
                        _ => return Err(model_err(format!("malformed array line {line:?}"))),
                    };
                    let rows: usize = rows
                        .parse()
                        .map_err(|_| model_err(format!("bad array shape in {line:?}")))?;
                    let cols: usize = cols
                        .parse()
                        .map_err(|_| model_err(format!("bad array shape in {line:?}")))?;
                    shapes.push((name.to_owned(), rows, cols));
                }
                _ => return Err(model_err(format!("unknown header tag {tag:?}"))),
            }
        }

        for (name, rows, cols) in shapes {
            let mut bytes = vec![0u8; rows * cols * 8];
            r.read_exact(&mut bytes)
                .map_err(|_| model_err(format!("truncated data for array {name:?}")))?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            file.arrays.push((name, Mat::from_vec(rows, cols, data)));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(model_err("trailing data after last array"));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path)
            .map_err(|e| model_err(format!("{}: {}", path.display(), e)))?;
        Self::read(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ModelFile {
        let mut f = ModelFile::new("network");
        f.push_meta("task", "identification");
        f.push_meta("note", "has spaces in value");
        f.push_dict("labels", &["ARG".into(), "NONE".into()]);
        f.push_dict("lemma run senses", &["run.01".into(), "run.02".into()]);
        f.push_array(
            "w x",
            &Mat::from_vec(2, 2, vec![1.0, -0.0, f64::MIN_POSITIVE, 3.5e300]),
        );
        f.push_array("b", &Mat::from_vec(1, 3, vec![0.1, 0.2, 0.3]));
        f
    }

    #[test]
    fn round_trip() {
        let f = sample();
        let mut bytes = Vec::new();
        f.write(&mut bytes).unwrap();
        let g = ModelFile::read(bytes.as_slice()).unwrap();
        assert_eq!(f.kind, g.kind);
        assert_eq!(f.meta, g.meta);
        assert_eq!(f.dicts, g.dicts);
        let mut again = Vec::new();
        g.write(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        assert!(ModelFile::read(&b"NOPE 1\n"[..]).is_err());
        assert!(ModelFile::read(&b"PATHSRL 99\nkind x\nend\n"[..]).is_err());
    }

    #[test]
    fn rejects_truncated_data() {
        let mut bytes = Vec::new();
        sample().write(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(ModelFile::read(bytes.as_slice()).is_err());
    }

    #[test]
    fn rejects_newlines_in_entries() {
        let mut f = ModelFile::new("x");
        f.push_dict("d", &["a\nb".into()]);
        assert!(f.write(Vec::new()).is_err());
    }

    proptest! {
        #[test]
        fn arrays_round_trip_bit_exact(data in proptest::collection::vec(any::<f64>(), 1..40)) {
            let mut f = ModelFile::new("t");
            f.push_array("a", &Mat::from_vec(1, data.len(), data.clone()));
            let mut bytes = Vec::new();
            f.write(&mut bytes).unwrap();
            let g = ModelFile::read(bytes.as_slice()).unwrap();
            let back: Vec<u64> = g.array("a").unwrap().data().iter().map(|v| v.to_bits()).collect();
            let orig: Vec<u64> = data.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(back, orig);
        }
    }
}
