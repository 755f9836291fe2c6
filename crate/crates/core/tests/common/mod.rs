#![allow(dead_code)]

use c5_core::Document;
use rand::seq::SliceRandom;
use rand::Rng;

/// Blank set used by the oracle, written out independently of the library.
pub fn oracle_blank(c: char) -> bool {
    c.is_whitespace() || c == '\u{200B}' || c == '\u{FEFF}'
}

fn oracle_norm(window: &[String]) -> String {
    window
        .iter()
        .flat_map(|s| s.chars())
        .filter(|&c| !oracle_blank(c))
        .collect()
}

pub type PlainDoc = (u64, Vec<String>);

/// One first-wins pass by direct string comparison against every earlier
/// kept window.
fn oracle_pass(docs: &[PlainDoc]) -> Vec<PlainDoc> {
    let mut kept: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for (id, sentences) in docs {
        let mut removed = vec![false; sentences.len()];
        for start in 0..sentences.len().saturating_sub(3) {
            let w = oracle_norm(&sentences[start..start + 4]);
            if kept.contains(&w) {
                removed[start..start + 4].iter_mut().for_each(|r| *r = true);
            } else {
                kept.push(w);
            }
        }
        let survivors: Vec<String> = sentences
            .iter()
            .zip(&removed)
            .filter(|(_, r)| !**r)
            .map(|(s, _)| s.clone())
            .collect();
        if !survivors.is_empty() {
            out.push((*id, survivors));
        }
    }
    out
}

/// Pairwise check over all windows of the corpus.
pub fn oracle_has_repeat(docs: &[PlainDoc]) -> bool {
    let windows: Vec<String> = docs
        .iter()
        .flat_map(|(_, s)| (0..s.len().saturating_sub(3)).map(move |i| oracle_norm(&s[i..i + 4])))
        .collect();
    for i in 0..windows.len() {
        for j in i + 1..windows.len() {
            if windows[i] == windows[j] {
                return true;
            }
        }
    }
    false
}

/// Repeats the pass until no window occurs twice.
pub fn oracle_dedup(docs: &[PlainDoc]) -> Vec<PlainDoc> {
    let mut current = oracle_pass(docs);
    while oracle_has_repeat(&current) {
        current = oracle_pass(&current);
    }
    current
}

pub fn to_plain(docs: &[Document]) -> Vec<PlainDoc> {
    docs.iter()
        .map(|d| (d.doc_id, d.sentence_texts().map(str::to_string).collect()))
        .collect()
}

pub fn to_docs(plain: &[PlainDoc]) -> Vec<Document> {
    plain
        .iter()
        .map(|(id, s)| Document::from_sentences(*id, s.iter().map(String::as_str)).unwrap())
        .collect()
}

const HAN: &str = "天地人和日月山水风云花草鸟鱼春夏秋冬东南西北上下左右";

pub fn random_sentence<R: Rng>(rng: &mut R) -> String {
    let han: Vec<char> = HAN.chars().collect();
    let len = rng.gen_range(2..9);
    let mut s: String = (0..len).map(|_| *han.choose(rng).unwrap()).collect();
    s.push(*['。', '！', '？'].choose(rng).unwrap());
    s
}

/// Corpus with at most `max_docs` documents and `max_sentences` sentences in
/// total. Each document copies a run of an earlier span with probability
/// `dup_rate`, sometimes with a blank inserted; a small shared pool makes
/// accidental overlaps common too.
pub fn random_corpus<R: Rng>(
    rng: &mut R,
    max_docs: usize,
    max_sentences: usize,
    dup_rate: f64,
) -> Vec<PlainDoc> {
    let pool: Vec<String> = (0..rng.gen_range(4..20))
        .map(|_| random_sentence(rng))
        .collect();
    let n_docs = rng.gen_range(1..=max_docs);
    let mut docs: Vec<PlainDoc> = Vec::new();
    let mut budget = max_sentences;
    let mut id = 0u64;
    for _ in 0..n_docs {
        if budget == 0 {
            break;
        }
        let len = rng.gen_range(1..=budget.min(12));
        let mut sentences: Vec<String> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    pool.choose(rng).unwrap().clone()
                } else {
                    random_sentence(rng)
                }
            })
            .collect();
        let donors: Vec<&PlainDoc> = docs.iter().filter(|(_, s)| s.len() >= 4).collect();
        if !donors.is_empty() && rng.gen_bool(dup_rate) {
            let donor = &donors.choose(rng).unwrap().1;
            let run = rng.gen_range(4..=donor.len().min(6));
            let from = rng.gen_range(0..=donor.len() - run);
            let mut copied: Vec<String> = donor[from..from + run].to_vec();
            if rng.gen_bool(0.3) {
                let k = rng.gen_range(0..copied.len());
                copied[k].insert(0, ' ');
            }
            let at = rng.gen_range(0..=sentences.len());
            sentences.splice(at..at, copied);
            sentences.truncate(budget);
        }
        budget -= sentences.len();
        docs.push((id, sentences));
        id += rng.gen_range(1..4);
    }
    docs
}
