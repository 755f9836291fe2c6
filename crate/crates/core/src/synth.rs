//! Deterministic synthetic WET archives for tests, benches and demos.
//!
//! The generator exercises every cleaning rule: English and unlabeled
//! records, Javascript warnings, code with braces, badwords, short
//! sentences, unterminated tails, navigation-only pages, repeated four-sentence blocks (with
//! perturbed blanks) and the occasional non-UTF-8 record.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::write_conversion_record;

const COMMON: &str = "的一是不了人我在有他这为之大来以个中上们到说国和地也子时道出而要于就下得可你年生自会那后能对着事其里所去行过家十用发天如然作方成者多日都三小军二无同么经法当起与好看学进种将还分此心前面又定见只主没公从知全相两本员长高新点月理现手力正明问者通水外做山走回些想开意重部动实感业放最西情工教白头因便把名体机期向变关活海信象解结北路代性门及计话特车东变较今女数比展南转文平城形";

const BADWORDS: [&str; 3] = ["赌博", "色情", "博彩"];

pub fn badword_list_text() -> String {
    let mut s = String::from("# synthetic badword list\n");
    for w in BADWORDS {
        s.push_str(w);
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    /// Stop after at least this many bytes of WET output.
    pub target_bytes: usize,
    /// Probability that a document reuses a block of an earlier document.
    pub duplicate_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 2020,
            target_bytes: 1 << 20,
            duplicate_rate: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthSummary {
    pub records: u64,
    pub non_utf8_records: u64,
    pub bytes: u64,
}

struct Generator {
    rng: ChaCha8Rng,
    pool: Vec<char>,
    blocks: Vec<Vec<String>>,
}

impl Generator {
    fn chinese_run(&mut self, len: usize) -> String {
        (0..len)
            .map(|_| *self.pool.choose(&mut self.rng).unwrap())
            .collect()
    }

    fn sentence(&mut self) -> String {
        let len = self.rng.gen_range(3..30);
        let mut s = self.chinese_run(len);
        if self.rng.gen_bool(0.3) {
            s.push('，');
            let more = self.rng.gen_range(2..12);
            s.push_str(&self.chinese_run(more));
        }
        match self.rng.gen_range(0..20) {
            0 => {
                s = format!("他说：“{s}。”");
            }
            1 => s.push('！'),
            2 => s.push('？'),
            3 => s.push('…'),
            4 => s.push('；'),
            _ => s.push('。'),
        }
        s
    }

    fn chinese_lines(&mut self) -> Vec<String> {
        let paragraphs = self.rng.gen_range(1..8);
        let mut lines = Vec::new();
        for _ in 0..paragraphs {
            let n = self.rng.gen_range(1..7);
            let mut line = String::new();
            for _ in 0..n {
                line.push_str(&self.sentence());
            }
            match self.rng.gen_range(0..30) {
                0 => line = format!("  {line}\t\t"),
                1 => line.insert_str(0, "\u{3000}\u{3000}"),
                2 => {
                    let word = BADWORDS.choose(&mut self.rng).unwrap();
                    line.push_str(&format!("欢迎来到{word}网站。"));
                }
                3 => line.push_str("function init() { return 0; }"),
                4 => line = "请启用JavaScript以查看本页内容".to_string(),
                5 => line.push_str("好的。"),
                _ => {}
            }
            lines.push(line);
        }
        if self.rng.gen_bool(0.2) {
            lines.push(self.chinese_run(8));
        }
        lines
    }

    fn document(&mut self, dup_rate: f64) -> Vec<String> {
        let mut lines = self.chinese_lines();
        if !self.blocks.is_empty() && self.rng.gen_bool(dup_rate) {
            let block = self.blocks.choose(&mut self.rng).unwrap().clone();
            let at = self.rng.gen_range(0..=lines.len());
            let mut text = block.concat();
            if self.rng.gen_bool(0.3) {
                // Same span, different blanks.
                text = text.replacen('。', "。 ", 1);
            }
            lines.insert(at, text);
        } else {
            let block: Vec<String> = (0..self.rng.gen_range(4..7))
                .map(|_| self.sentence())
                .collect();
            lines.push(block.concat());
            if self.blocks.len() < 512 {
                self.blocks.push(block);
            }
        }
        lines
    }
}

/// Writes a WET stream of at least `cfg.target_bytes` bytes.
pub fn write_synthetic_wet<W: Write>(mut out: W, cfg: &SynthConfig) -> io::Result<SynthSummary> {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        pool: COMMON.chars().collect(),
        blocks: Vec::new(),
    };
    let mut summary = SynthSummary::default();
    let info = b"software: c5-synth\r\nformat: WARC File Format 1.0\r\n";
    let mut header = format!(
        "WARC/1.0\r\nWARC-Type: warcinfo\r\nWARC-Date: 2019-07-01T00:00:00Z\r\nContent-Length: {}\r\n\r\n",
        info.len()
    )
    .into_bytes();
    header.extend_from_slice(info);
    header.extend_from_slice(b"\r\n\r\n");
    out.write_all(&header)?;
    summary.bytes += header.len() as u64;

    let mut n = 0u64;
    while (summary.bytes as usize) < cfg.target_bytes {
        let url = format!("http://example{}.cn/page/{n}", n % 97);
        let date = format!(
            "2019-{:02}-{:02}T{:02}:00:00Z",
            7 + n % 6,
            1 + n % 28,
            n % 24
        );
        let kind = g.rng.gen_range(0..100);
        let (langs, body): (Vec<&str>, Vec<u8>) = match kind {
            0..=4 => (
                vec!["eng"],
                b"This page is written in English.\nNothing to see here.".to_vec(),
            ),
            5..=6 => (
                vec![],
                b"plain ascii text without metadata at all.".to_vec(),
            ),
            7 => {
                summary.non_utf8_records += 1;
                (vec!["zho"], vec![0xe4, 0xb8, 0xff, 0xfe, b'\n', 0xc3])
            }
            8..=9 => (
                vec!["zho"],
                "首页 新闻 体育 娱乐\n财经 科技 汽车".as_bytes().to_vec(),
            ),
            10..=20 => (
                vec![],
                g.document(cfg.duplicate_rate).join("\n").into_bytes(),
            ),
            21..=25 => (
                vec!["zho", "eng"],
                g.document(cfg.duplicate_rate).join("\r\n").into_bytes(),
            ),
            _ => (
                vec!["zho"],
                g.document(cfg.duplicate_rate).join("\n").into_bytes(),
            ),
        };
        let mut rec = Vec::with_capacity(body.len() + 256);
        write_conversion_record(&mut rec, &url, &date, &langs, &body)?;
        out.write_all(&rec)?;
        summary.bytes += rec.len() as u64;
        summary.records += 1;
        n += 1;
    }
    out.flush()?;
    Ok(summary)
}
