//! Peak heap use of parse + filter must not grow with corpus size.

use std::alloc::{GlobalAlloc, Layout, System};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use echoscope_core::ingest::{apply_filters, parse_corpus, CorpusFilter, FilterReport, RecordSchema};

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
            PEAK.fetch_max(now, Ordering::SeqCst);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::SeqCst);
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn replicate(src: &Path, dst: &Path, times: usize, gzip: bool) {
    let body = std::fs::read(src).unwrap();
    let file = std::fs::File::create(dst).unwrap();
    let mut out: Box<dyn Write> = if gzip {
        Box::new(flate2::write::GzEncoder::new(file, flate2::Compression::fast()))
    } else {
        Box::new(std::io::BufWriter::new(file))
    };
    for _ in 0..times {
        out.write_all(&body).unwrap();
    }
    out.flush().unwrap();
}

/// Peak bytes allocated above the starting level while streaming `path`.
fn streaming_peak(path: &Path) -> (usize, usize) {
    let base = CURRENT.load(Ordering::SeqCst);
    PEAK.store(base, Ordering::SeqCst);
    let filter = CorpusFilter::default();
    let mut report = FilterReport::default();
    let reader = parse_corpus(path, RecordSchema::Flat).unwrap();
    let kept = apply_filters(reader.map(Result::unwrap), &filter, &mut report).count();
    (PEAK.load(Ordering::SeqCst) - base, kept)
}

#[test]
fn peak_memory_is_flat_in_corpus_size() {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_corpus.jsonl");
    let dir = tempfile::tempdir().unwrap();
    for gzip in [false, true] {
        let ext = if gzip { "jsonl.gz" } else { "jsonl" };
        let one = dir.path().join(format!("x1.{ext}"));
        let ten = dir.path().join(format!("x10.{ext}"));
        replicate(&src, &one, 1, gzip);
        replicate(&src, &ten, 10, gzip);

        let (peak1, kept1) = streaming_peak(&one);
        let (peak10, kept10) = streaming_peak(&ten);
        assert_eq!(kept10, 10 * kept1);
        // the 10x file is ~2.5 MB; holding it would dwarf this bound
        assert!(peak10 <= peak1 + 64 * 1024, "gzip={gzip}: {peak1} -> {peak10}");
    }
}
