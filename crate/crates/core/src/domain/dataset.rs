use std::io::{Read, Write};
use std::sync::Arc;

use crate::domain::{Label, LabeledSource};
use crate::seed::CounterStream;
use crate::{Error, Result};

/// Random access to the examples `z_1..z_n` a protocol may touch.
pub trait ExampleStore: Sync {
    fn len(&self) -> u64;

    fn dim(&self) -> usize;

    /// Calls `visit` with example `i`.
    fn with_example(&self, i: u64, visit: &mut dyn FnMut(&[f64], Label));

    /// When the store is an i.i.d. sample from a known finite population.
    fn population(&self) -> Option<&LabeledSource> {
        None
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A materialized sample, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
    labels: Vec<Label>,
    seed: u64,
}

impl Dataset {
    pub fn from_examples(dim: usize, examples: impl IntoIterator<Item = (Vec<f64>, Label)>, seed: u64) -> Result<Self> {
        let mut coords = Vec::new();
        let mut labels = Vec::new();
        for (x, y) in examples {
            if x.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "example has dimension {}, expected {dim}",
                    x.len()
                )));
            }
            coords.extend_from_slice(&x);
            labels.push(y);
        }
        Ok(Self { dim, coords, labels, seed })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> + '_ {
        self.coords.chunks_exact(self.dim).zip(self.labels.iter().copied())
    }

    /// CSV with header `x_1,...,x_d,label`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x_{j}")).collect();
        header.push("label".into());
        out.write_record(&header)?;
        for (x, y) in self.iter() {
            let mut row: Vec<String> = x.iter().map(|c| c.to_string()).collect();
            row.push(y.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, seed: u64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let dim = headers.len().saturating_sub(1);
        let expected: Vec<String> = (1..=dim).map(|j| format!("x_{j}")).chain(["label".to_string()]).collect();
        if dim == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::InvalidInput(format!("unexpected dataset header {headers:?}")));
        }
        let mut examples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
            };
            let x = rec.iter().take(dim).map(parse).collect::<Result<Vec<_>>>()?;
            let y = rec
                .get(dim)
                .ok_or_else(|| Error::InvalidInput("missing label column".into()))?
                .trim()
                .parse::<i64>()
                .map_err(|e| Error::InvalidInput(format!("bad label: {e}")))?;
            examples.push((x, Label::from_i64(y)?));
        }
        Self::from_examples(dim, examples, seed)
    }
}

impl ExampleStore for Dataset {
    fn len(&self) -> u64 {
        self.labels.len() as u64
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn with_example(&self, i: u64, visit: &mut dyn FnMut(&[f64], Label)) {
        let i = i as usize;
        visit(self.point(i), self.labels[i]);
    }
}

/// An i.i.d. sample of length `len` from a finite source, drawn lazily.
///
/// Example `i` is a pure function of `(seed, i)`, so the sample never has to
/// be materialized and can be read in any order.
#[derive(Debug, Clone)]
pub struct VirtualDataset {
    src: Arc<LabeledSource>,
    stream: CounterStream,
    len: u64,
}

impl VirtualDataset {
    pub fn new(src: Arc<LabeledSource>, len: u64, seed: u64) -> Self {
        Self { src, stream: CounterStream::new(seed), len }
    }

    /// Support index of example `i`.
    #[inline]
    pub fn support_index(&self, i: u64) -> usize {
        self.src.dist().draw_index(&self.stream, i)
    }

    pub fn source(&self) -> &Arc<LabeledSource> {
        &self.src
    }

    pub fn materialize(&self, seed: u64) -> Dataset {
        let dim = self.src.dim();
        let mut coords = Vec::with_capacity(self.len as usize * dim);
        let mut labels = Vec::with_capacity(self.len as usize);
        for i in 0..self.len {
            let k = self.support_index(i);
            coords.extend_from_slice(self.src.support()[k].coords());
            labels.push(self.src.labels()[k]);
        }
        Dataset { dim, coords, labels, seed }
    }
}

impl ExampleStore for VirtualDataset {
    fn len(&self) -> u64 {
        self.len
    }

    fn dim(&self) -> usize {
        self.src.dim()
    }

    fn with_example(&self, i: u64, visit: &mut dyn FnMut(&[f64], Label)) {
        assert!(i < self.len, "example {i} out of range");
        let k = self.support_index(i);
        visit(self.src.support()[k].coords(), self.src.labels()[k]);
    }

    fn population(&self) -> Option<&LabeledSource> {
        Some(&self.src)
    }
}

/// `n` i.i.d. labeled draws from `src`, deterministic in `seed`.
pub fn sample(src: &LabeledSource, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be >= 1".into()));
    }
    let v = VirtualDataset::new(Arc::new(src.clone()), n as u64, seed);
    Ok(v.materialize(seed))
}
