//! Binary model checkpoints.
//!
//! All integers and floats are little endian. Layout, version 1:
//!
//! ```text
//! offset  size        field
//! 0       8           magic "KGRLCKPT"
//! 8       4    u32    version (1)
//! 12      1    u8     kind: 0 TransE, 1 DistMult, 2 RotatE
//! 13      1    u8     TransE norm (1 = L1, 2 = L2); 0 otherwise
//! 14      8    f64    TransE/RotatE margin, DistMult L2 coefficient
//! 22      4    u32    negatives per positive (1 for TransE)
//! 26      8    u64    |E|
//! 34      8    u64    |R|
//! 42      8    u64    d
//! 50      ...  f64    entity matrix, |E| x ew, row-major
//!              f64    relation matrix, |R| x rw
//!              u64    entity Adam step, then f64 m (|E| x ew), f64 v (|E| x ew)
//!              u64    relation Adam step, then f64 m (|R| x rw), f64 v (|R| x rw)
//!              names  |E| entity names, then |R| relation names,
//!                     each a u32 byte length followed by UTF-8 bytes
//! ```
//!
//! `ew` is `2d` for RotatE and `d` otherwise; `rw` is `d`. Nothing may
//! follow the last name.

use crate::error::{Error, Result};
use crate::graph::Vocab;

use super::{AdamState, EmbeddingStore, Matrix, ModelKind, Norm};

pub const MAGIC: &[u8; 8] = b"KGRLCKPT";
pub const VERSION: u32 = 1;

/// A store together with the names its rows belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub store: EmbeddingStore,
    pub entities: Vocab,
    pub relations: Vocab,
}

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub(crate) fn new() -> Self {
        Writer { buf: Vec::new() }
    }
    pub(crate) fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    pub(crate) fn u8(&mut self, x: u8) {
        self.buf.push(x);
    }
    pub(crate) fn u32(&mut self, x: u32) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }
    pub(crate) fn u64(&mut self, x: u64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }
    pub(crate) fn f64(&mut self, x: f64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }
    pub(crate) fn f64s(&mut self, xs: &[f64]) {
        self.buf.reserve(xs.len() * 8);
        for &x in xs {
            self.f64(x);
        }
    }
    pub(crate) fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
    }
    pub(crate) fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    what: &'static str,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(what: &'static str, data: &'a [u8]) -> Self {
        Reader { what, data, pos: 0 }
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.what, format!("at byte {}: {}", self.pos, msg.into()))
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| self.err(format!("truncated, wanted {n} more bytes")))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads a count and checks it against what the remaining bytes could hold.
    pub(crate) fn count(&mut self, bytes_per_item: usize) -> Result<usize> {
        let n = self.u64()?;
        let remaining = (self.data.len() - self.pos) as u64;
        if bytes_per_item > 0 && n > remaining / bytes_per_item as u64 {
            return Err(self.err(format!("count {n} exceeds remaining input")));
        }
        usize::try_from(n).map_err(|_| self.err("count overflows usize"))
    }

    pub(crate) fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| self.err("matrix size overflow"))?;
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| self.err("matrix size overflow"))?,
        )?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Matrix::from_vec(rows, cols, data))
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.err("name is not UTF-8"))
    }

    pub(crate) fn magic(&mut self, magic: &[u8; 8], version: u32) -> Result<()> {
        if self.take(8)? != magic {
            return Err(self.err("bad magic"));
        }
        let v = self.u32()?;
        if v != version {
            return Err(self.err(format!("unsupported version {v}")));
        }
        Ok(())
    }

    pub(crate) fn vocab(&mut self, n: usize) -> Result<Vocab> {
        let mut vocab = Vocab::new();
        for i in 0..n {
            let name = self.string()?;
            if vocab.intern(&name) != i {
                return Err(self.err(format!("duplicate name {name:?}")));
            }
        }
        Ok(vocab)
    }

    pub(crate) fn end(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.err(format!("{} trailing bytes", self.data.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn encode(store: &EmbeddingStore, entities: &Vocab, relations: &Vocab) -> Result<Vec<u8>> {
    if entities.len() != store.num_entities() || relations.len() != store.num_relations() {
        return Err(Error::invalid(format!(
            "vocabulary sizes {}x{} do not match store {}x{}",
            entities.len(),
            relations.len(),
            store.num_entities(),
            store.num_relations()
        )));
    }
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u32(VERSION);
    let (code, norm, param, negatives) = match store.kind {
        ModelKind::TransE { norm, margin } => (
            0u8,
            match norm {
                Norm::L1 => 1u8,
                Norm::L2 => 2,
            },
            margin,
            1u32,
        ),
        ModelKind::DistMult { l2, negatives } => (1, 0, l2, negatives as u32),
        ModelKind::RotatE { margin, negatives } => (2, 0, margin, negatives as u32),
    };
    w.u8(code);
    w.u8(norm);
    w.f64(param);
    w.u32(negatives);
    w.u64(store.num_entities() as u64);
    w.u64(store.num_relations() as u64);
    w.u64(store.dim as u64);
    w.f64s(store.entities.as_slice());
    w.f64s(store.relations.as_slice());
    for state in [&store.entity_adam, &store.relation_adam] {
        w.u64(state.step);
        w.f64s(state.m.as_slice());
        w.f64s(state.v.as_slice());
    }
    for name in entities.iter().chain(relations.iter()) {
        w.str(name);
    }
    Ok(w.finish())
}

pub fn decode(data: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new("model checkpoint", data);
    r.magic(MAGIC, VERSION)?;
    let code = r.u8()?;
    let norm = r.u8()?;
    let param = r.f64()?;
    let negatives = r.u32()? as usize;
    let kind = match (code, norm) {
        (0, 1) => ModelKind::TransE {
            norm: Norm::L1,
            margin: param,
        },
        (0, 2) => ModelKind::TransE {
            norm: Norm::L2,
            margin: param,
        },
        (1, 0) => ModelKind::DistMult {
            l2: param,
            negatives,
        },
        (2, 0) => ModelKind::RotatE {
            margin: param,
            negatives,
        },
        _ => return Err(r.err(format!("unknown model kind {code}/{norm}"))),
    };
    // every entity and relation row holds at least one f64
    let num_entities = r.count(8)?;
    let num_relations = r.count(8)?;
    let dim = r.count(8)?;
    if dim == 0 {
        return Err(r.err("dimension must be positive"));
    }
    let ew = kind.entity_width(dim);
    let rw = kind.relation_width(dim);
    let entities = r.matrix(num_entities, ew)?;
    let relations = r.matrix(num_relations, rw)?;
    let adam = |rows, cols, r: &mut Reader| -> Result<AdamState> {
        let step = r.u64()?;
        Ok(AdamState {
            step,
            m: r.matrix(rows, cols)?,
            v: r.matrix(rows, cols)?,
        })
    };
    let entity_adam = adam(num_entities, ew, &mut r)?;
    let relation_adam = adam(num_relations, rw, &mut r)?;
    let entity_vocab = r.vocab(num_entities)?;
    let relation_vocab = r.vocab(num_relations)?;
    r.end()?;
    Ok(Checkpoint {
        store: EmbeddingStore {
            kind,
            dim,
            entities,
            relations,
            entity_adam,
            relation_adam,
        },
        entities: entity_vocab,
        relations: relation_vocab,
    })
}
