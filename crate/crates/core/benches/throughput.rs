use std::hint::black_box;
use std::path::Path;

use c5_core::clean::{clean_document, CleanConfig};
use c5_core::dedup::{window_digests, Deduper};
use c5_core::exec::with_workers;
use c5_core::ingest::{read_wet_stream, record_to_document};
use c5_core::segment::{segment_document, BadwordList, SegmentConfig};
use c5_core::synth::{write_synthetic_wet, SynthConfig};
use c5_core::{CleanReport, DedupState, Document, Vocabulary};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn raw_documents(bytes: usize) -> (Vec<Document>, u64) {
    let mut wet = Vec::new();
    let cfg = SynthConfig {
        target_bytes: bytes,
        ..SynthConfig::default()
    };
    write_synthetic_wet(&mut wet, &cfg).unwrap();
    let (records, _) = read_wet_stream(&wet[..], false).unwrap();
    let docs = records
        .into_iter()
        .enumerate()
        .map(|(i, r)| record_to_document(r, i as u64))
        .collect();
    (docs, wet.len() as u64)
}

fn segmented(docs: &[Document], seg: &SegmentConfig) -> Vec<Document> {
    let clean = CleanConfig::default();
    docs.iter()
        .cloned()
        .filter_map(|d| clean_document(d, &clean, &mut CleanReport::default()))
        .filter_map(|d| segment_document(d, seg, &mut CleanReport::default()).unwrap())
        .collect()
}

/// Sequential, then parallel on every available core (at least two threads).
fn modes() -> [(&'static str, usize); 2] {
    let cores = std::thread::available_parallelism().map_or(1, |p| p.get());
    [("sequential", 1), ("parallel", cores.max(2))]
}

fn bench_clean_segment(c: &mut Criterion) {
    let (docs, bytes) = raw_documents(4 << 20);
    let seg = SegmentConfig::default().with_badwords(BadwordList::new(["赌博", "色情"]).unwrap());
    let clean = CleanConfig::default();
    let mut group = c.benchmark_group("clean_segment");
    group.throughput(Throughput::Bytes(bytes));
    group.sample_size(10);
    for (name, workers) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            with_workers(workers, |exec| {
                b.iter(|| {
                    let out = exec.map(docs.clone(), |d| {
                        let mut r = CleanReport::default();
                        clean_document(d, &clean, &mut r)
                            .and_then(|d| segment_document(d, &seg, &mut r).unwrap())
                    });
                    black_box(out)
                })
            })
        });
    }
    group.finish();
}

fn bench_dedup(c: &mut Criterion) {
    let (docs, _) = raw_documents(4 << 20);
    let seg = SegmentConfig::default().with_badwords(BadwordList::empty());
    let docs = segmented(&docs, &seg);
    let windows: u64 = docs
        .iter()
        .map(|d| d.sentences.len().saturating_sub(3) as u64)
        .sum();
    let mut group = c.benchmark_group("dedup");
    group.throughput(Throughput::Elements(windows));
    group.sample_size(10);
    for (name, workers) in modes() {
        group.bench_function(BenchmarkId::new("window_digests", name), |b| {
            with_workers(workers, |exec| {
                b.iter(|| black_box(exec.map_ref(&docs, window_digests)))
            })
        });
        group.bench_function(BenchmarkId::new("process_batch", name), |b| {
            with_workers(workers, |exec| {
                b.iter(|| {
                    let mut state = DedupState::new();
                    let mut deduper = Deduper::new(&mut state, exec);
                    black_box(deduper.process_batch(docs.clone(), &mut CleanReport::default()))
                })
            })
        });
    }
    group.finish();
}

fn bench_tokenize(c: &mut Criterion) {
    let vocab_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/bert-base-chinese-vocab.txt");
    let vocab = Vocabulary::load(&vocab_path).unwrap();
    let (docs, _) = raw_documents(2 << 20);
    let seg = SegmentConfig::default().with_badwords(BadwordList::empty());
    let sentences: Vec<String> = segmented(&docs, &seg)
        .iter()
        .flat_map(|d| d.sentence_texts().map(String::from).collect::<Vec<_>>())
        .collect();
    let bytes: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let mut group = c.benchmark_group("tokenize");
    group.throughput(Throughput::Bytes(bytes));
    group.sample_size(10);
    for (name, workers) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            with_workers(workers, |exec| {
                b.iter(|| black_box(exec.map_ref(&sentences, |s| vocab.tokenize(s).len())))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_clean_segment, bench_dedup, bench_tokenize);
criterion_main!(benches);
