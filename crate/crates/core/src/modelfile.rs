//! On-disk model envelope shared by both learners.
//!
//! ```text
//! pseudolabel-model v1\n
//! kind crf|maxent\n
//! labels <n>\n
//! <label>\n            (n lines)
//! featvocab-v1\tfrozen=1\tsize=<m>\n
//! <feature>\t<index>\n (m lines)
//! blocks <k>\n
//! block <name> <rows> <cols>\n
//! <rows * cols little-endian f64, row-major>
//! ...                  (k blocks)
//! ```
//!
//! CRF blocks: `emission` (features x labels) then `transition` (labels x
//! labels). Maxent blocks: `weights` (features x classes) then `bias` (1 x
//! classes).

use std::path::Path;

use crate::crf::CrfModel;
use crate::error::{Error, Result};
use crate::features::FeatureVocab;
use crate::maxent::MaxentModel;

pub const MODEL_HEADER: &str = "pseudolabel-model v1";

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Crf(CrfModel),
    Maxent(MaxentModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Crf(_) => "crf",
            Model::Maxent(_) => "maxent",
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            Model::Crf(m) => m.labels(),
            Model::Maxent(m) => m.classes(),
        }
    }

    fn vocab(&self) -> &FeatureVocab {
        match self {
            Model::Crf(m) => m.vocab(),
            Model::Maxent(m) => m.vocab(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let labels = self.labels();
        let mut head = format!("{MODEL_HEADER}\nkind {}\nlabels {}\n", self.kind(), labels.len());
        for l in labels {
            head.push_str(l);
            head.push('\n');
        }
        head.push_str(&self.vocab().to_text());
        let n = labels.len();
        let f = self.vocab().len();
        let blocks: Vec<(&str, usize, usize, &[f64])> = match self {
            Model::Crf(m) => vec![("emission", f, n, m.emission()), ("transition", n, n, m.transition())],
            Model::Maxent(m) => vec![("weights", f, n, m.weights()), ("bias", 1, n, m.bias())],
        };
        head.push_str(&format!("blocks {}\n", blocks.len()));
        let mut out = head.into_bytes();
        for (name, rows, cols, data) in blocks {
            out.extend_from_slice(format!("block {name} {rows} {cols}\n").as_bytes());
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let header = cur.line()?;
        if header != MODEL_HEADER {
            return Err(Error::ModelFormat(format!("unsupported header {header:?}")));
        }
        let kind = cur
            .line()?
            .strip_prefix("kind ")
            .ok_or_else(|| bad("missing kind line"))?
            .to_owned();
        let n: usize = cur
            .line()?
            .strip_prefix("labels ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad labels line"))?;
        let labels = (0..n).map(|_| cur.line().map(str::to_owned)).collect::<Result<Vec<_>>>()?;

        let vocab_header = cur.line()?;
        let size: usize = vocab_header
            .rsplit_once("size=")
            .and_then(|(_, s)| s.parse().ok())
            .ok_or_else(|| bad("bad vocab header"))?;
        let mut vocab_lines = vec![vocab_header.to_owned()];
        for _ in 0..size {
            vocab_lines.push(cur.line()?.to_owned());
        }
        let (vocab, _) = FeatureVocab::parse_lines(vocab_lines.iter().map(String::as_str))?;

        let k: usize = cur
            .line()?
            .strip_prefix("blocks ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad blocks line"))?;
        let mut blocks = Vec::with_capacity(k);
        for _ in 0..k {
            let spec = cur.line()?.to_owned();
            let parts: Vec<&str> = spec.split(' ').collect();
            let (name, rows, cols) = match parts.as_slice() {
                ["block", name, rows, cols] => (
                    name.to_string(),
                    rows.parse::<usize>().map_err(|_| bad("bad block rows"))?,
                    cols.parse::<usize>().map_err(|_| bad("bad block cols"))?,
                ),
                _ => return Err(bad(&format!("bad block line {spec:?}"))),
            };
            blocks.push((name, cur.floats(rows * cols)?));
        }
        if cur.pos != bytes.len() {
            return Err(bad("trailing bytes after last block"));
        }
        let take = |blocks: &mut Vec<(String, Vec<f64>)>, want: &str| -> Result<Vec<f64>> {
            let i = blocks
                .iter()
                .position(|(n, _)| n == want)
                .ok_or_else(|| bad(&format!("missing block {want:?}")))?;
            Ok(blocks.remove(i).1)
        };
        match kind.as_str() {
            "crf" => {
                let e = take(&mut blocks, "emission")?;
                let t = take(&mut blocks, "transition")?;
                Ok(Model::Crf(CrfModel::from_weights(labels, vocab, e, t)?))
            }
            "maxent" => {
                let w = take(&mut blocks, "weights")?;
                let b = take(&mut blocks, "bias")?;
                Ok(Model::Maxent(MaxentModel::from_weights(labels, vocab, w, b)?))
            }
            other => Err(bad(&format!("unknown model kind {other:?}"))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::corpus::write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn bad(msg: &str) -> Error {
    Error::ModelFormat(msg.to_owned())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("unexpected end of file"))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not UTF-8"))
    }

    fn floats(&mut self, count: usize) -> Result<Vec<f64>> {
        let len = count.checked_mul(8).ok_or_else(|| bad("block too large"))?;
        if self.bytes.len() - self.pos < len {
            return Err(bad("truncated weight block"));
        }
        let out = self.bytes[self.pos..self.pos + len]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        self.pos += len;
        Ok(out)
    }
}
