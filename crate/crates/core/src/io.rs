//! CSV and plain-text file formats.
//!
//! Per-user files (`user_id,value`) may start with a header row whose first
//! field is `user_id`; it is skipped. Edge lists take an explicit header flag.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use crate::energy::{Label, Labeling};
use crate::error::{Error, Result};
use crate::graph::{BuildStats, EdgeSemantics, GraphBuilder, SocialGraph};
use crate::metrics::RocCurve;
use crate::opinion::{EquilibriumReport, OpinionState};
use crate::stubborn::{MatchMode, PhraseLexicon, TweetRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeListOptions {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for EdgeListOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: false,
        }
    }
}

impl EdgeListOptions {
    pub fn tab() -> Self {
        Self {
            delimiter: b'\t',
            ..Self::default()
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn display_name(path: &Path) -> String {
    path.display().to_string()
}

/// Iterates CSV records as `(line, record)`, turning csv errors into
/// [`Error::Parse`] with the offending line.
///
/// Line numbers come from byte offsets because the csv reader does not count
/// the blank lines it skips.
fn records<'a, R: Read + 'a>(
    mut reader: R,
    name: &'a str,
    delimiter: u8,
    has_header: bool,
) -> Box<dyn Iterator<Item = Result<(u64, StringRecord)>> + 'a> {
    let mut buf = Vec::new();
    if let Err(e) = reader.read_to_end(&mut buf) {
        return Box::new(std::iter::once(Err(Error::parse(name, 0, e.to_string()))));
    }
    let starts: Vec<usize> = std::iter::once(0)
        .chain(newline_ends(&buf))
        .collect();
    // The reported offset of a record may point at blank lines before it.
    let blank: Vec<bool> = starts
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let b = starts.get(k + 1).copied().unwrap_or(buf.len());
            buf[a..b].iter().all(u8::is_ascii_whitespace)
        })
        .collect();
    let line_of = move |byte: u64| {
        let mut l = starts.partition_point(|&s| s as u64 <= byte);
        while l < blank.len() && blank[l - 1] {
            l += 1;
        }
        l as u64
    };
    let rdr = ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(std::io::Cursor::new(buf));
    Box::new(rdr.into_records().filter_map(move |r| match r {
        Ok(rec) => {
            let line = rec.position().map_or(0, |p| line_of(p.byte()));
            // Whitespace-only lines come through as a single empty field.
            if rec.len() == 1 && rec[0].is_empty() {
                None
            } else {
                Some(Ok((line, rec)))
            }
        }
        Err(e) => {
            let line = e.position().map_or(0, |p| line_of(p.byte()));
            Some(Err(Error::parse(name, line, e.to_string())))
        }
    }))
}

fn newline_ends(buf: &[u8]) -> impl Iterator<Item = usize> + '_ {
    buf.iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .map(|(i, _)| i + 1)
}

fn parse_f64(name: &str, line: u64, field: &str, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(name, line, format!("{what} {field:?} is not a finite number")))
}

/// Reads `src,dst[,weight]` rows; a missing weight counts as 1.
pub fn read_edge_list_from<R: Read>(
    reader: R,
    name: &str,
    role: EdgeSemantics,
    opts: EdgeListOptions,
) -> Result<(SocialGraph, BuildStats)> {
    let mut b = GraphBuilder::new(role);
    for item in records(reader, name, opts.delimiter, opts.has_header) {
        let (line, rec) = item?;
        if !(2..=3).contains(&rec.len()) {
            return Err(Error::parse(
                name,
                line,
                format!("expected 2 or 3 fields, found {}", rec.len()),
            ));
        }
        let (src, dst) = (&rec[0], &rec[1]);
        if src.is_empty() || dst.is_empty() {
            return Err(Error::parse(name, line, "empty user id"));
        }
        let weight = match rec.get(2) {
            Some(w) if !w.is_empty() => parse_f64(name, line, w, "weight")?,
            _ => 1.0,
        };
        if weight < 0.0 {
            return Err(Error::NegativeWeight {
                source_name: name.to_owned(),
                line,
                weight,
            });
        }
        b.add_edge(src, dst, weight)?;
    }
    Ok(b.build())
}

pub fn read_edge_list(
    path: impl AsRef<Path>,
    role: EdgeSemantics,
    opts: EdgeListOptions,
) -> Result<(SocialGraph, BuildStats)> {
    let path = path.as_ref();
    read_edge_list_from(open(path)?, &display_name(path), role, opts)
}

/// Writes every edge as `src,dst,weight`. Isolated nodes are not represented.
pub fn write_edge_list_to<W: Write>(writer: W, graph: &SocialGraph, opts: EdgeListOptions) -> Result<()> {
    let mut w = WriterBuilder::new()
        .delimiter(opts.delimiter)
        .from_writer(writer);
    let io = |e: csv::Error| Error::io("<edge list>", e.into());
    if opts.has_header {
        w.write_record(["src", "dst", "weight"]).map_err(io)?;
    }
    for (s, d, wt) in graph.edges() {
        w.write_record([graph.name(s), graph.name(d), &wt.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<edge list>", e))
}

pub fn write_edge_list(path: impl AsRef<Path>, graph: &SocialGraph, opts: EdgeListOptions) -> Result<()> {
    let path = path.as_ref();
    write_edge_list_to(create(path)?, graph, opts).map_err(|e| retarget(e, path))
}

fn retarget(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

/// Reads `user_id,value` rows, applying `parse` to the value.
///
/// A repeated user is a parse error.
fn read_keyed<R: Read, T>(
    reader: R,
    name: &str,
    mut parse: impl FnMut(u64, &str) -> Result<T>,
) -> Result<BTreeMap<String, T>> {
    let mut out = BTreeMap::new();
    for (k, item) in records(reader, name, b',', false).enumerate() {
        let (line, rec) = item?;
        if k == 0 && rec[0].eq_ignore_ascii_case("user_id") {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::parse(
                name,
                line,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        if rec[0].is_empty() {
            return Err(Error::parse(name, line, "empty user id"));
        }
        let value = parse(line, &rec[1])?;
        if out.insert(rec[0].to_owned(), value).is_some() {
            return Err(Error::parse(name, line, format!("duplicate user {}", &rec[0])));
        }
    }
    Ok(out)
}

fn read_unit_interval<R: Read>(reader: R, name: &str, what: &str) -> Result<BTreeMap<String, f64>> {
    read_keyed(reader, name, |line, f| {
        let x = parse_f64(name, line, f, what)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::parse(name, line, format!("{what} {x} outside [0, 1]")));
        }
        Ok(x)
    })
}

/// `user_id,pi` prior bot probabilities.
pub fn read_priors_from<R: Read>(reader: R, name: &str) -> Result<BTreeMap<String, f64>> {
    read_unit_interval(reader, name, "prior")
}

/// `user_id,probability` scores.
pub fn read_scores_from<R: Read>(reader: R, name: &str) -> Result<BTreeMap<String, f64>> {
    read_unit_interval(reader, name, "score")
}

/// `user_id,opinion` stubborn opinions.
pub fn read_opinions_from<R: Read>(reader: R, name: &str) -> Result<BTreeMap<String, f64>> {
    read_unit_interval(reader, name, "opinion")
}

/// `user_id,rate` posting rates, each `≥ 0`.
pub fn read_rates_from<R: Read>(reader: R, name: &str) -> Result<BTreeMap<String, f64>> {
    read_keyed(reader, name, |line, f| {
        let x = parse_f64(name, line, f, "rate")?;
        if x < 0.0 {
            return Err(Error::parse(name, line, format!("negative rate {x}")));
        }
        Ok(x)
    })
}

/// `user_id,label` with label `bot`/`human` (also `1`/`0`).
pub fn read_labels_from<R: Read>(reader: R, name: &str) -> Result<BTreeMap<String, Label>> {
    read_keyed(reader, name, |line, f| match f.to_ascii_lowercase().as_str() {
        "bot" | "1" => Ok(Label::Bot),
        "human" | "0" => Ok(Label::Human),
        _ => Err(Error::parse(name, line, format!("label {f:?} is not bot or human"))),
    })
}

macro_rules! path_reader {
    ($(#[$m:meta])* $name:ident, $from:ident, $t:ty) => {
        $(#[$m])*
        pub fn $name(path: impl AsRef<Path>) -> Result<$t> {
            let path = path.as_ref();
            $from(open(path)?, &display_name(path))
        }
    };
}

path_reader!(read_priors, read_priors_from, BTreeMap<String, f64>);
path_reader!(read_scores, read_scores_from, BTreeMap<String, f64>);
path_reader!(read_opinions, read_opinions_from, BTreeMap<String, f64>);
path_reader!(read_rates, read_rates_from, BTreeMap<String, f64>);
path_reader!(read_labels, read_labels_from, BTreeMap<String, Label>);
path_reader!(read_tweets, read_tweets_from, Vec<TweetRecord>);
path_reader!(read_profiles, read_profiles_from, Vec<(String, String)>);

/// `user_id,score[,text][,timestamp]`. An empty score means text-only.
pub fn read_tweets_from<R: Read>(reader: R, name: &str) -> Result<Vec<TweetRecord>> {
    let mut out = Vec::new();
    for (k, item) in records(reader, name, b',', false).enumerate() {
        let (line, rec) = item?;
        if k == 0 && rec[0].eq_ignore_ascii_case("user_id") {
            continue;
        }
        if !(2..=4).contains(&rec.len()) {
            return Err(Error::parse(
                name,
                line,
                format!("expected 2 to 4 fields, found {}", rec.len()),
            ));
        }
        if rec[0].is_empty() {
            return Err(Error::parse(name, line, "empty user id"));
        }
        let score = match &rec[1] {
            "" => None,
            s => Some(parse_f64(name, line, s, "score")?),
        };
        let opt = |i: usize| rec.get(i).filter(|s| !s.is_empty()).map(str::to_owned);
        let text = opt(2);
        if score.is_none() && text.is_none() {
            return Err(Error::parse(name, line, "tweet has neither score nor text"));
        }
        out.push(TweetRecord {
            user_id: rec[0].to_owned(),
            text,
            score,
            timestamp: opt(3),
        });
    }
    Ok(out)
}

/// `user_id,description`.
pub fn read_profiles_from<R: Read>(reader: R, name: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, item) in records(reader, name, b',', false).enumerate() {
        let (line, rec) = item?;
        if k == 0 && rec[0].eq_ignore_ascii_case("user_id") {
            continue;
        }
        if !(1..=2).contains(&rec.len()) || rec[0].is_empty() {
            return Err(Error::parse(name, line, "expected user_id,description"));
        }
        out.push((rec[0].to_owned(), rec.get(1).unwrap_or("").to_owned()));
    }
    Ok(out)
}

/// Two sections, `[pro]` and `[anti]`, with one phrase per line.
/// Blank lines are ignored.
pub fn read_lexicon_from<R: Read>(reader: R, name: &str, mode: MatchMode) -> Result<PhraseLexicon> {
    let (mut pro, mut anti) = (Vec::new(), Vec::new());
    let mut section: Option<bool> = None;
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = k as u64 + 1;
        let line = line.map_err(|e| Error::parse(name, lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.to_ascii_lowercase().as_str() {
            "[pro]" => section = Some(true),
            "[anti]" => section = Some(false),
            _ => match section {
                Some(true) => pro.push(line.to_owned()),
                Some(false) => anti.push(line.to_owned()),
                None => {
                    return Err(Error::parse(name, lineno, "phrase before a [pro] or [anti] header"))
                }
            },
        }
    }
    PhraseLexicon::new(pro, anti, mode)
}

pub fn read_lexicon(path: impl AsRef<Path>, mode: MatchMode) -> Result<PhraseLexicon> {
    let path = path.as_ref();
    read_lexicon_from(open(path)?, &display_name(path), mode)
}

/// Aligns a per-user map with the node order of `graph`.
pub fn align<T: Clone>(graph: &SocialGraph, values: &BTreeMap<String, T>) -> Vec<Option<T>> {
    (0..graph.node_count())
        .map(|i| values.get(graph.name(i)).cloned())
        .collect()
}

/// A CSV table with a fixed header, written row by row.
pub struct CsvOut<W: Write> {
    inner: csv::Writer<W>,
}

impl CsvOut<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, header: &[&str]) -> Result<Self> {
        Self::new(create(path.as_ref())?, header)
    }
}

impl<W: Write> CsvOut<W> {
    pub fn new(writer: W, header: &[&str]) -> Result<Self> {
        let mut out = Self {
            inner: csv::Writer::from_writer(writer),
        };
        out.row(header)?;
        Ok(out)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| Error::io("<csv output>", e.into()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner
            .flush()
            .map_err(|e| Error::io("<csv output>", e))
    }
}

pub fn write_labels_to<W: Write>(writer: W, graph: &SocialGraph, labels: &Labeling) -> Result<()> {
    let mut out = CsvOut::new(writer, &["user_id", "label"])?;
    for i in 0..graph.node_count() {
        let l = if labels.get(i).is_bot() { "bot" } else { "human" };
        out.row([graph.name(i), l])?;
    }
    out.finish()
}

pub fn write_scores_to<W: Write>(writer: W, graph: &SocialGraph, scores: &[f64]) -> Result<()> {
    let mut out = CsvOut::new(writer, &["user_id", "probability"])?;
    for (i, p) in scores.iter().enumerate() {
        out.row([graph.name(i), &p.to_string()])?;
    }
    out.finish()
}

/// `user_id,opinion,is_stubborn`; unreachable users get an empty opinion.
pub fn write_equilibrium_to<W: Write>(
    writer: W,
    state: &OpinionState,
    report: &EquilibriumReport,
) -> Result<()> {
    let mut out = CsvOut::new(writer, &["user_id", "opinion", "is_stubborn"])?;
    for (i, o) in report.opinions.iter().enumerate() {
        let o = o.map(|x| x.to_string()).unwrap_or_default();
        let s = if state.is_stubborn(i) { "true" } else { "false" };
        out.row([state.graph().name(i), &o, s])?;
    }
    out.finish()
}

pub fn write_roc_to<W: Write>(writer: W, curve: &RocCurve) -> Result<()> {
    let mut out = CsvOut::new(writer, &["threshold", "fpr", "tpr"])?;
    for p in &curve.points {
        out.row([p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])?;
    }
    out.finish()
}

macro_rules! path_writer {
    ($name:ident, $to:ident, $($arg:ident: $t:ty),*) => {
        pub fn $name(path: impl AsRef<Path>, $($arg: $t),*) -> Result<()> {
            let path = path.as_ref();
            $to(create(path)?, $($arg),*).map_err(|e| retarget(e, path))
        }
    };
}

path_writer!(write_labels, write_labels_to, graph: &SocialGraph, labels: &Labeling);
path_writer!(write_scores, write_scores_to, graph: &SocialGraph, scores: &[f64]);
path_writer!(write_equilibrium, write_equilibrium_to, state: &OpinionState, report: &EquilibriumReport);
path_writer!(write_roc, write_roc_to, curve: &RocCurve);
