//! Corpus ingestion: deterministic tokenization, vocabulary construction,
//! and train/val/test split assignment.
//!
//! Input is JSON lines with required `text` and `label` string fields and an
//! optional `split` field. Identical (file, config) pairs always produce the
//! same corpus, byte for byte once serialized.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNK_TOKEN: &str = "[UNK]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" | "valid" | "validation" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub tokens: Vec<u32>,
    pub label: Option<usize>,
    pub split: Split,
}

/// Token strings with dense, first-occurrence-ordered indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    pub tokens: Vec<String>,
    pub freqs: Vec<u64>,
    pub min_freq: u64,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn unk_id(&self) -> Option<u32> {
        self.id(UNK_TOKEN)
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    pub class_names: Vec<String>,
}

impl Corpus {
    pub fn n_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn docs_in(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(move |d| d.split == split)
    }

    /// (document id, class) pairs for the training split.
    pub fn train_labels(&self) -> Vec<(usize, usize)> {
        self.docs_in(Split::Train)
            .filter_map(|d| d.label.map(|l| (d.id, l)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut corpus: Corpus = serde_json::from_str(s)?;
        corpus.vocabulary.rebuild_index();
        Ok(corpus)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Tokenizer selection. `Basic` needs no external files; `WordPiece` reads a
/// BERT-format vocabulary (one token per line, `##` continuation prefix).
#[derive(Debug, Clone)]
pub enum Tokenizer {
    Basic { lowercase: bool },
    WordPiece(WordPieceTokenizer),
}

impl Tokenizer {
    pub fn basic() -> Self {
        Tokenizer::Basic { lowercase: true }
    }

    pub fn wordpiece_from_file(path: &Path, lowercase: bool) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let vocab: Vec<String> = text.lines().map(|l| l.trim().to_string()).collect();
        Ok(Tokenizer::WordPiece(WordPieceTokenizer::new(
            vocab, lowercase,
        )))
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        match self {
            Tokenizer::Basic { lowercase } => basic_tokenize(text, *lowercase),
            Tokenizer::WordPiece(wp) => wp.tokenize(text),
        }
    }
}

/// Lowercases, splits on whitespace and punctuation boundaries, and keeps
/// punctuation marks as single tokens.
pub fn basic_tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
        } else if ch.is_alphanumeric() {
            if lowercase {
                word.extend(ch.to_lowercase());
            } else {
                word.push(ch);
            }
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Greedy longest-match-first subword segmentation.
///
/// Runs after basic pre-tokenization, so bracketed specials like `[CLS]` are
/// split apart and never emitted as tokens; `[UNK]` is produced only for
/// unsegmentable words.
#[derive(Debug, Clone)]
pub struct WordPieceTokenizer {
    vocab: HashMap<String, u32>,
    lowercase: bool,
    max_word_chars: usize,
}

impl WordPieceTokenizer {
    pub fn new(vocab: Vec<String>, lowercase: bool) -> Self {
        let vocab = vocab
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, i as u32))
            .collect();
        Self {
            vocab,
            lowercase,
            max_word_chars: 100,
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in basic_tokenize(text, self.lowercase) {
            self.split_word(&word, &mut out);
        }
        out
    }

    fn split_word(&self, word: &str, out: &mut Vec<String>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > self.max_word_chars {
            out.push(UNK_TOKEN.to_string());
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while end > start {
                let mut piece: String = chars[start..end].iter().collect();
                if start > 0 {
                    piece = format!("##{piece}");
                }
                if self.vocab.contains_key(&piece) {
                    found = Some(piece);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(piece) => {
                    pieces.push(piece);
                    start = end;
                }
                None => {
                    // No segmentation: the whole word maps to [UNK].
                    out.push(UNK_TOKEN.to_string());
                    return;
                }
            }
        }
        out.append(&mut pieces);
    }
}

/// Split assignment: either fractions applied with a seeded shuffle, or an
/// explicit per-line `split` field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSpec {
    Field,
    Fractions { train: f64, val: f64, test: f64 },
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub tokenizer: Tokenizer,
    pub min_freq: u64,
    pub split: SplitSpec,
    pub seed: u64,
    /// When set, any label outside this list is rejected.
    pub classes: Option<Vec<String>>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::basic(),
            min_freq: 2,
            split: SplitSpec::Fractions {
                train: 0.8,
                val: 0.1,
                test: 0.1,
            },
            seed: 42,
            classes: None,
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    text: String,
    label: String,
    #[serde(default)]
    split: Option<String>,
}

/// Loads a JSON-lines dataset into a tokenized corpus.
pub fn load_jsonl(path: &Path, config: &IngestConfig) -> Result<Corpus> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut token_docs: Vec<Vec<String>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut explicit_splits: Vec<Option<Split>> = Vec::new();
    let mut class_names: Vec<String> = config.classes.clone().unwrap_or_default();
    let classes_pinned = config.classes.is_some();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            })?;
        let tokens = config.tokenizer.tokenize(&record.text);
        if tokens.is_empty() {
            return Err(Error::MalformedLine {
                line: line_no,
                reason: "document has no tokens".into(),
            });
        }
        let class = match class_names.iter().position(|c| c == &record.label) {
            Some(c) => c,
            None if classes_pinned => {
                return Err(Error::UnknownLabel {
                    line: line_no,
                    label: record.label,
                })
            }
            None => {
                class_names.push(record.label.clone());
                class_names.len() - 1
            }
        };
        let split = match (&config.split, record.split.as_deref()) {
            (SplitSpec::Field, Some(s)) => Some(Some(Split::parse(s).ok_or_else(|| {
                Error::MalformedLine {
                    line: line_no,
                    reason: format!("unknown split {s:?}"),
                }
            })?)),
            (SplitSpec::Field, None) => {
                return Err(Error::MalformedLine {
                    line: line_no,
                    reason: "missing split field".into(),
                })
            }
            (SplitSpec::Fractions { .. }, _) => Some(None),
        };
        token_docs.push(tokens);
        labels.push(class);
        explicit_splits.push(split.unwrap());
    }

    if token_docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let splits = assign_splits(&config.split, &explicit_splits, config.seed)?;
    build_corpus(token_docs, labels, splits, class_names, config.min_freq)
}

fn assign_splits(
    spec: &SplitSpec,
    explicit: &[Option<Split>],
    seed: u64,
) -> Result<Vec<Split>> {
    match spec {
        SplitSpec::Field => Ok(explicit.iter().map(|s| s.unwrap()).collect()),
        SplitSpec::Fractions { train, val, test } => {
            let total = train + val + test;
            if !(0.999..=1.001).contains(&total) || *train <= 0.0 || *val < 0.0 || *test < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "split fractions must be non-negative and sum to 1 (got {train}, {val}, {test})"
                )));
            }
            let n = explicit.len();
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
            let n_train = (train * n as f64).round() as usize;
            let n_val = (val * n as f64).round() as usize;
            let mut splits = vec![Split::Test; n];
            for (rank, &doc) in order.iter().enumerate() {
                splits[doc] = if rank < n_train {
                    Split::Train
                } else if rank < n_train + n_val {
                    Split::Val
                } else {
                    Split::Test
                };
            }
            Ok(splits)
        }
    }
}

/// Assembles documents and vocabulary from pre-tokenized input.
///
/// Tokens below `min_freq` collapse onto a shared [UNK] node appended after
/// the kept tokens.
pub fn build_corpus(
    token_docs: Vec<Vec<String>>,
    labels: Vec<usize>,
    splits: Vec<Split>,
    class_names: Vec<String>,
    min_freq: u64,
) -> Result<Corpus> {
    if min_freq < 1 {
        return Err(Error::InvalidConfig("min_freq must be >= 1".into()));
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in &token_docs {
        for tok in doc {
            *freq.entry(tok.as_str()).or_insert(0) += 1;
        }
    }

    // Indices follow first occurrence over the corpus in input order.
    let mut vocab = Vocabulary {
        tokens: Vec::new(),
        freqs: Vec::new(),
        min_freq,
        index: HashMap::new(),
    };
    let mut needs_unk = false;
    for doc in &token_docs {
        for tok in doc {
            if tok == UNK_TOKEN {
                needs_unk = true;
                continue;
            }
            if vocab.index.contains_key(tok.as_str()) {
                continue;
            }
            if freq[tok.as_str()] >= min_freq {
                vocab.index.insert(tok.clone(), vocab.tokens.len() as u32);
                vocab.freqs.push(freq[tok.as_str()]);
                vocab.tokens.push(tok.clone());
            } else {
                needs_unk = true;
            }
        }
    }
    if needs_unk {
        vocab.index.insert(UNK_TOKEN.into(), vocab.tokens.len() as u32);
        let unk_count: u64 = freq
            .iter()
            .filter(|&(&t, &c)| c < min_freq || t == UNK_TOKEN)
            .map(|(_, &c)| c)
            .sum();
        vocab.freqs.push(unk_count);
        vocab.tokens.push(UNK_TOKEN.into());
    }

    let unk = vocab.id(UNK_TOKEN);
    let mut documents = Vec::with_capacity(token_docs.len());
    for (i, (doc, (label, split))) in token_docs
        .iter()
        .zip(labels.into_iter().zip(splits))
        .enumerate()
    {
        let ids: Vec<u32> = doc
            .iter()
            .map(|t| vocab.id(t).or(unk).expect("token must resolve"))
            .collect();
        documents.push(Document {
            id: i,
            tokens: ids,
            label: Some(label),
            split,
        });
    }

    Ok(Corpus {
        documents,
        vocabulary: vocab,
        class_names,
    })
}

/// Re-tokenizes free text against an existing vocabulary (used for inductive
/// prediction). Unknown tokens map to [UNK] when the vocabulary has one and
/// are dropped otherwise.
pub fn tokens_for_existing_vocab(
    text: &str,
    tokenizer: &Tokenizer,
    vocab: &Vocabulary,
) -> Vec<u32> {
    tokenizer
        .tokenize(text)
        .iter()
        .filter_map(|t| vocab.id(t).or_else(|| vocab.unk_id()))
        .collect()
}
