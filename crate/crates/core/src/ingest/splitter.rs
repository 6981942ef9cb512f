//! Recursive character splitter.
//!
//! The text is cut at the highest-priority separator that occurs in it, with
//! each separator kept at the start of the piece that follows it. Pieces that
//! still exceed `chunk_size` are split again with the remaining separators;
//! pieces that fit are merged greedily into windows of at most `chunk_size`
//! scalars, and consecutive windows keep up to `chunk_overlap` scalars of
//! trailing pieces. Finally each window is trimmed of surrounding whitespace
//! and whitespace-only windows are dropped.
//!
//! All positions are scalar-value offsets, so multi-byte characters are never
//! divided.

use std::collections::VecDeque;

use super::{ChunkConfig, ChunkDraft, IngestError};

type Span = (usize, usize);

struct Splitter<'a> {
    text: &'a str,
    /// Byte offset of every scalar, plus `text.len()` as a sentinel.
    offsets: Vec<usize>,
    size: usize,
    overlap: usize,
}

impl<'a> Splitter<'a> {
    fn new(text: &'a str, cfg: &ChunkConfig) -> Self {
        let offsets = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()))
            .collect();
        Self {
            text,
            offsets,
            size: cfg.chunk_size,
            overlap: cfg.chunk_overlap,
        }
    }

    fn scalars(&self) -> usize {
        self.offsets.len() - 1
    }

    fn slice(&self, (start, end): Span) -> &'a str {
        &self.text[self.offsets[start]..self.offsets[end]]
    }

    fn char_at_byte(&self, byte: usize) -> usize {
        self.offsets
            .binary_search(&byte)
            .expect("separator match must start on a scalar boundary")
    }

    fn pieces(&self, span: Span, sep: &str) -> Vec<Span> {
        if sep.is_empty() {
            return (span.0..span.1).map(|i| (i, i + 1)).collect();
        }
        let base = self.offsets[span.0];
        let mut starts = vec![span.0];
        for (b, _) in self.slice(span).match_indices(sep) {
            let c = self.char_at_byte(base + b);
            if c > span.0 {
                starts.push(c);
            }
        }
        let mut out = Vec::with_capacity(starts.len());
        for (i, &s) in starts.iter().enumerate() {
            let e = starts.get(i + 1).copied().unwrap_or(span.1);
            out.push((s, e));
        }
        out
    }

    fn split(&self, span: Span, separators: &[String], out: &mut Vec<Span>) {
        let sub = self.slice(span);
        let (idx, sep) = separators
            .iter()
            .enumerate()
            .find(|(_, s)| s.is_empty() || sub.contains(s.as_str()))
            .map(|(i, s)| (i, s.as_str()))
            .unwrap_or((separators.len(), ""));
        let rest = separators.get(idx + 1..).unwrap_or(&[]);

        let mut window: VecDeque<Span> = VecDeque::new();
        let mut total = 0usize;
        for piece in self.pieces(span, sep) {
            let len = piece.1 - piece.0;
            if len > self.size {
                flush(&mut window, &mut total, out);
                self.split(piece, rest, out);
                continue;
            }
            if total + len > self.size && !window.is_empty() {
                out.push(joined(&window));
                while total > self.overlap || (total + len > self.size && total > 0) {
                    let (s, e) = window.pop_front().expect("window non-empty while total > 0");
                    total -= e - s;
                }
            }
            window.push_back(piece);
            total += len;
        }
        flush(&mut window, &mut total, out);
    }

    fn trimmed(&self, (mut start, mut end): Span) -> Option<ChunkDraft> {
        let leading = self
            .slice((start, end))
            .chars()
            .take_while(|c| c.is_whitespace())
            .count();
        start += leading;
        let trailing = self
            .slice((start, end))
            .chars()
            .rev()
            .take_while(|c| c.is_whitespace())
            .count();
        end -= trailing;
        (start < end).then(|| ChunkDraft {
            text: self.slice((start, end)).to_string(),
            char_span: (start, end),
        })
    }
}

fn joined(window: &VecDeque<Span>) -> Span {
    (
        window.front().expect("non-empty window").0,
        window.back().expect("non-empty window").1,
    )
}

fn flush(window: &mut VecDeque<Span>, total: &mut usize, out: &mut Vec<Span>) {
    if !window.is_empty() {
        out.push(joined(window));
        window.clear();
        *total = 0;
    }
}

/// Splits `text` into chunk drafts of at most `cfg.chunk_size` scalars.
///
/// Empty (or whitespace-only) text yields no chunks.
pub fn split_text(text: &str, cfg: &ChunkConfig) -> Result<Vec<ChunkDraft>, IngestError> {
    cfg.validate()?;
    let splitter = Splitter::new(text, cfg);
    if splitter.scalars() == 0 {
        return Ok(Vec::new());
    }
    let mut spans = Vec::new();
    splitter.split((0, splitter.scalars()), &cfg.separators, &mut spans);
    Ok(spans.into_iter().filter_map(|s| splitter.trimmed(s)).collect())
}
