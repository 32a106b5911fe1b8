use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One tagged lexicon row (also one token of a gold tokenization file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub form: String,
    pub lemma: String,
    pub pos: String,
    /// Morphological features, e.g. gender=f;number=sg;case=nom.
    pub morph: BTreeMap<String, String>,
    pub frequency: u64,
}

impl LexiconEntry {
    pub fn morph_get(&self, key: &str) -> Option<&str> {
        self.morph.get(key).map(String::as_str)
    }
}

/// A token of the gold tokenization (surface form plus POS tag).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldToken {
    pub form: String,
    pub tag: String,
}

impl From<&LexiconEntry> for GoldToken {
    fn from(e: &LexiconEntry) -> Self {
        GoldToken {
            form: e.form.clone(),
            tag: e.pos.clone(),
        }
    }
}

fn parse_morph(raw: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for part in raw.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::format(format!("morph field {part:?} is not key=value")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn format_morph(map: &BTreeMap<String, String>) -> String {
    map.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

const HEADER: [&str; 5] = ["form", "lemma", "pos", "morph", "frequency"];

/// Read a lexicon / gold-token TSV. The header row is required.
pub fn read_lexicon<R: Read>(reader: R) -> Result<Vec<LexiconEntry>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    {
        let headers = rdr
            .headers()
            .map_err(|e| Error::format(format!("lexicon header: {e}")))?;
        let got: Vec<&str> = headers.iter().collect();
        if got != HEADER {
            return Err(Error::format(format!(
                "lexicon header must be {HEADER:?}, got {got:?}"
            )));
        }
    }
    let mut entries = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(format!("lexicon row {}: {e}", line + 2)))?;
        if rec.len() < 5 {
            return Err(Error::format(format!(
                "lexicon row {} has {} columns, expected 5",
                line + 2,
                rec.len()
            )));
        }
        let form = rec[0].to_string();
        if form.is_empty() {
            return Err(Error::format(format!("lexicon row {}: empty form", line + 2)));
        }
        let frequency: u64 = rec[4]
            .parse()
            .map_err(|_| Error::format(format!("lexicon row {}: bad frequency {:?}", line + 2, &rec[4])))?;
        entries.push(LexiconEntry {
            form,
            lemma: rec[1].to_string(),
            pos: rec[2].to_string(),
            morph: parse_morph(&rec[3])?,
            frequency,
        });
    }
    Ok(entries)
}

pub fn read_lexicon_file(path: &Path) -> Result<Vec<LexiconEntry>> {
    let f = std::fs::File::open(path)?;
    read_lexicon(std::io::BufReader::new(f))
}

/// Write a lexicon / gold-token TSV with the standard header.
pub fn write_lexicon<W: Write>(writer: W, entries: &[LexiconEntry]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(writer);
    wtr.write_record(HEADER)
        .map_err(|e| Error::format(format!("lexicon write: {e}")))?;
    for e in entries {
        wtr.write_record([
            e.form.as_str(),
            e.lemma.as_str(),
            e.pos.as_str(),
            &format_morph(&e.morph),
            &e.frequency.to_string(),
        ])
        .map_err(|err| Error::format(format!("lexicon write: {err}")))?;
    }
    wtr.flush()?;
    Ok(())
}
