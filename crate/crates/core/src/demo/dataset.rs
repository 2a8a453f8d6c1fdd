use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::Demonstration;
use crate::domain::{encode_action, ActionId, NUM_ACTIONS};
use crate::error::{Error, Result};

/// A window of `m` consecutive observations and the action at its last tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<[f64; 4]>,
    pub label: ActionId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub m: usize,
    pub samples: Vec<Sample>,
    pub class_counts: [usize; NUM_ACTIONS],
}

impl WindowedDataset {
    pub fn empty(m: usize) -> Self {
        WindowedDataset {
            m,
            samples: Vec::new(),
            class_counts: [0; NUM_ACTIONS],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, s: Sample) {
        self.class_counts[s.label.index()] += 1;
        self.samples.push(s);
    }

    /// Append another dataset built with the same window length.
    pub fn concat(&mut self, other: WindowedDataset) -> Result<()> {
        if other.m != self.m {
            return Err(Error::Shape(format!("window {} vs {}", other.m, self.m)));
        }
        for s in other.samples {
            self.push(s);
        }
        Ok(())
    }

    /// SHA-256 over the window length, every observation and every label.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.m as u64).to_le_bytes());
        for s in &self.samples {
            for row in &s.x {
                for v in row {
                    h.update(v.to_le_bytes());
                }
            }
            h.update([s.label.index() as u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = ActionId> + '_ {
        self.samples.iter().map(|s| s.label)
    }
}

/// Slide a window of `m` ticks over `demo` with stride 1. Sample `i` covers
/// records `i..i+m` and is labelled with the action of record `i+m-1`.
pub fn window(demo: &Demonstration, m: usize) -> Result<WindowedDataset> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "window length must be positive".into(),
        ));
    }
    let n = demo.records.len();
    if n < m {
        return Err(Error::Size(format!(
            "demonstration has {n} records, window needs {m}"
        )));
    }
    let obs: Vec<[f64; 4]> = demo.records.iter().map(|r| r.obs.to_array()).collect();
    let mut ds = WindowedDataset::empty(m);
    for i in 0..=n - m {
        ds.push(Sample {
            x: obs[i..i + m].to_vec(),
            label: encode_action(demo.records[i + m - 1].action),
        });
    }
    Ok(ds)
}

/// Per-class loss weights `N / (K * n_c)` where `K` counts the classes that
/// occur. Absent classes get weight 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(pub [f64; NUM_ACTIONS]);

impl ClassWeights {
    pub fn uniform() -> Self {
        ClassWeights([1.0; NUM_ACTIONS])
    }

    pub fn get(&self, id: ActionId) -> f64 {
        self.0[id.index()]
    }
}

pub fn class_weights(counts: &[usize; NUM_ACTIONS]) -> Result<ClassWeights> {
    let n: usize = counts.iter().sum();
    let k = counts.iter().filter(|&&c| c > 0).count();
    if n == 0 {
        return Err(Error::Size("no samples to weight".into()));
    }
    let mut w = [0.0; NUM_ACTIONS];
    for (wc, &c) in w.iter_mut().zip(counts) {
        if c > 0 {
            *wc = n as f64 / (k as f64 * c as f64);
        }
    }
    Ok(ClassWeights(w))
}
