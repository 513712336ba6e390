//! Reading and writing of CoNLL-2009 sentence files.
//!
//! Rows carry the columns
//!
//! ```text
//! ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD DEPREL PDEPREL FILLPRED PRED APRED1..APREDn
//! ```
//!
//! separated by tabs, one row per token, with a blank line after each
//! sentence. An underscore in the PRED and APRED columns means "empty".
//! All other columns are kept verbatim.

use std::io::{self, BufRead, Write};

use crate::error::{format_err, Error, Result};

/// Number of fixed columns before the APRED block.
pub const FIXED_COLUMNS: usize = 14;

const EMPTY: &str = "_";

/// One row of a CoNLL-2009 file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub plemma: String,
    pub pos: String,
    pub ppos: String,
    pub feat: String,
    pub pfeat: String,
    pub head: usize,
    pub phead: usize,
    pub deprel: String,
    pub pdeprel: String,
    pub fillpred: bool,
    pub pred: String,
    /// One role label per predicate of the sentence, empty for no role.
    pub apreds: Vec<String>,
}

impl Token {
    /// A token whose gold and predicted columns agree.
    pub fn new(id: usize, form: &str, lemma: &str, pos: &str, head: usize, deprel: &str) -> Self {
        Token {
            id,
            form: form.to_owned(),
            lemma: lemma.to_owned(),
            plemma: lemma.to_owned(),
            pos: pos.to_owned(),
            ppos: pos.to_owned(),
            feat: EMPTY.to_owned(),
            pfeat: EMPTY.to_owned(),
            head,
            phead: head,
            deprel: deprel.to_owned(),
            pdeprel: deprel.to_owned(),
            fillpred: false,
            pred: String::new(),
            apreds: Vec::new(),
        }
    }
}

/// A sentence: tokens in surface order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based id.
    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id - 1]
    }

    /// Ids of the predicate tokens, in surface order. The n-th entry owns
    /// APRED column n.
    pub fn predicate_ids(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .filter(|t| t.fillpred)
            .map(|t| t.id)
            .collect()
    }

    /// Gold arguments of the predicate owning APRED column `column`, as
    /// (argument id, role) pairs.
    pub fn arguments(&self, column: usize) -> Vec<(usize, &str)> {
        self.tokens
            .iter()
            .filter_map(|t| match t.apreds.get(column) {
                Some(role) if !role.is_empty() => Some((t.id, role.as_str())),
                _ => None,
            })
            .collect()
    }

    /// Remove all predicate and argument annotation.
    pub fn clear_annotation(&mut self) {
        for t in &mut self.tokens {
            t.fillpred = false;
            t.pred.clear();
            t.apreds.clear();
        }
    }

    /// Install predicates and their argument structures. `frames` holds
    /// (predicate id, sense, [(argument id, role)]) and is sorted by
    /// predicate id here.
    pub fn set_annotation(&mut self, mut frames: Vec<(usize, String, Vec<(usize, String)>)>) {
        self.clear_annotation();
        frames.sort_by_key(|f| f.0);
        let n = frames.len();
        for t in &mut self.tokens {
            t.apreds = vec![String::new(); n];
        }
        for (col, (pred, sense, args)) in frames.into_iter().enumerate() {
            let t = &mut self.tokens[pred - 1];
            t.fillpred = true;
            t.pred = sense;
            for (arg, role) in args {
                self.tokens[arg - 1].apreds[col] = role;
            }
        }
    }

    /// Check the structural invariants that the reader enforces.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        let npred = self.tokens.iter().filter(|t| t.fillpred).count();
        for (i, t) in self.tokens.iter().enumerate() {
            if t.id != i + 1 {
                return Err(format!("token {} has id {}", i + 1, t.id));
            }
            for (name, h) in [("HEAD", t.head), ("PHEAD", t.phead)] {
                if h > n {
                    return Err(format!("token {}: {} {} out of range", t.id, name, h));
                }
                if h == t.id {
                    return Err(format!("token {}: {} points to itself", t.id, name));
                }
            }
            if t.fillpred != !t.pred.is_empty() {
                return Err(format!("token {}: FILLPRED and PRED disagree", t.id));
            }
            if t.apreds.len() != npred {
                return Err(format!(
                    "token {}: {} APRED columns for {} predicates",
                    t.id,
                    t.apreds.len(),
                    npred
                ));
            }
        }
        if let Some(id) = find_cycle(self.tokens.iter().map(|t| t.phead)) {
            return Err(format!("predicted heads form a cycle through token {id}"));
        }
        Ok(())
    }
}

/// Returns a token id on a cycle of the head function, if there is one.
fn find_cycle(heads: impl Iterator<Item = usize>) -> Option<usize> {
    let heads: Vec<usize> = heads.collect();
    // 0 = unvisited, 1 = on current walk, 2 = known to reach a root
    let mut state = vec![0u8; heads.len() + 1];
    state[0] = 2;
    for start in 1..=heads.len() {
        let mut walk = Vec::new();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            walk.push(cur);
            cur = heads[cur - 1];
            if cur > heads.len() {
                break;
            }
        }
        if cur <= heads.len() && state[cur] == 1 {
            return Some(cur);
        }
        for w in walk {
            state[w] = 2;
        }
    }
    None
}

/// Read all sentences from a CoNLL-2009 stream.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Sentence>> {
    let mut corpus = Vec::new();
    let mut block: Vec<(usize, Vec<String>)> = Vec::new();
    let mut lineno = 0;

    for line in reader.split(b'\n') {
        let line = line?;
        lineno += 1;
        let mut line = String::from_utf8(line).map_err(|_| format_err(lineno, "invalid UTF-8"))?;
        if line.ends_with('\r') {
            line.pop();
        }
        if line.is_empty() {
            if !block.is_empty() {
                corpus.push(parse_block(std::mem::take(&mut block))?);
            }
            continue;
        }
        if line.ends_with(|c: char| c.is_whitespace()) {
            return Err(format_err(lineno, "trailing whitespace"));
        }
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if fields.len() < FIXED_COLUMNS {
            return Err(format_err(
                lineno,
                format!(
                    "expected at least {} columns, found {}",
                    FIXED_COLUMNS,
                    fields.len()
                ),
            ));
        }
        if let Some(col) = fields.iter().position(|f| f.is_empty()) {
            return Err(format_err(lineno, format!("column {} is empty", col + 1)));
        }
        block.push((lineno, fields));
    }
    if !block.is_empty() {
        corpus.push(parse_block(block)?);
    }

    Ok(corpus)
}

fn parse_index(line: usize, name: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| format_err(line, format!("{name} is not an integer: {value:?}")))
}

fn parse_block(rows: Vec<(usize, Vec<String>)>) -> Result<Sentence> {
    let first_line = rows[0].0;
    let width = rows[0].1.len();
    let npred = rows.iter().filter(|(_, f)| f[12] == "Y").count();
    let mut tokens = Vec::with_capacity(rows.len());

    for (i, (line, fields)) in rows.into_iter().enumerate() {
        if fields.len() != width {
            return Err(format_err(
                line,
                format!("row has {} columns, sentence has {}", fields.len(), width),
            ));
        }
        if fields.len() - FIXED_COLUMNS != npred {
            return Err(format_err(
                line,
                format!(
                    "{} APRED columns but {} predicates in sentence",
                    fields.len() - FIXED_COLUMNS,
                    npred
                ),
            ));
        }
        let id = parse_index(line, "ID", &fields[0])?;
        if id != i + 1 {
            return Err(format_err(
                line,
                format!("expected ID {}, found {}", i + 1, id),
            ));
        }
        let head = parse_index(line, "HEAD", &fields[8])?;
        let phead = parse_index(line, "PHEAD", &fields[9])?;
        let fillpred = match fields[12].as_str() {
            "Y" => true,
            EMPTY => false,
            other => return Err(format_err(line, format!("invalid FILLPRED {other:?}"))),
        };
        let pred = unescape(&fields[13]);
        if fillpred && pred.is_empty() {
            return Err(format_err(line, "FILLPRED is Y but PRED is empty"));
        }
        if !fillpred && !pred.is_empty() {
            return Err(format_err(line, "PRED given without FILLPRED"));
        }
        tokens.push(Token {
            id,
            form: fields[1].clone(),
            lemma: fields[2].clone(),
            plemma: fields[3].clone(),
            pos: fields[4].clone(),
            ppos: fields[5].clone(),
            feat: fields[6].clone(),
            pfeat: fields[7].clone(),
            head,
            phead,
            deprel: fields[10].clone(),
            pdeprel: fields[11].clone(),
            fillpred,
            pred,
            apreds: fields[FIXED_COLUMNS..]
                .iter()
                .map(|a| unescape(a))
                .collect(),
        });
    }

    let sentence = Sentence { tokens };
    sentence
        .validate()
        .map_err(|msg| format_err(first_line, msg))?;
    Ok(sentence)
}

fn unescape(field: &str) -> String {
    if field == EMPTY {
        String::new()
    } else {
        field.to_owned()
    }
}

fn escape(field: &str) -> &str {
    if field.is_empty() {
        EMPTY
    } else {
        field
    }
}

/// Write sentences in CoNLL-2009 format. Every sentence is followed by a
/// blank line.
pub fn write_corpus<W: Write>(corpus: &[Sentence], mut writer: W) -> io::Result<()> {
    for sentence in corpus {
        write_sentence(sentence, &mut writer)?;
    }
    writer.flush()
}

pub fn write_sentence<W: Write>(sentence: &Sentence, writer: &mut W) -> io::Result<()> {
    for t in &sentence.tokens {
        write!(
            writer,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            t.id,
            escape(&t.form),
            escape(&t.lemma),
            escape(&t.plemma),
            escape(&t.pos),
            escape(&t.ppos),
            escape(&t.feat),
            escape(&t.pfeat),
            t.head,
            t.phead,
            escape(&t.deprel),
            escape(&t.pdeprel),
            if t.fillpred { "Y" } else { EMPTY },
            escape(&t.pred),
        )?;
        for a in &t.apreds {
            write!(writer, "\t{}", escape(a))?;
        }
        writeln!(writer)?;
    }
    writeln!(writer)
}

/// Read a corpus from a file path.
pub fn read_corpus_file(path: impl AsRef<std::path::Path>) -> Result<Vec<Sentence>> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::Io(io::Error::new(
            e.kind(),
            format!("{}: {}", path.as_ref().display(), e),
        ))
    })?;
    read_corpus(io::BufReader::new(file))
}

pub fn write_corpus_file(corpus: &[Sentence], path: impl AsRef<std::path::Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_corpus(corpus, io::BufWriter::new(file))?;
    Ok(())
}
