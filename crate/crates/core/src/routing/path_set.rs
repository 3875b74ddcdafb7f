//! Bounded path sets with route-choice proportions.

use crate::error::{Error, Result};
use crate::network::Path;

/// Paths known for one (OD, class, departure interval), in insertion order,
/// with proportions summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    cap: usize,
    paths: Vec<Path>,
    proportions: Vec<f64>,
}

impl PathSet {
    pub fn new(cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Config("path set capacity must be at least 1".into()));
        }
        Ok(PathSet {
            cap,
            paths: Vec::new(),
            proportions: Vec::new(),
        })
    }

    /// A set holding only `path` with proportion 1.
    pub fn singleton(cap: usize, path: Path) -> Result<Self> {
        let mut s = Self::new(cap)?;
        s.insert(path);
        Ok(s)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn position(&self, path: &Path) -> Option<usize> {
        self.paths.iter().position(|p| p == path)
    }

    /// Adds `path` if absent and returns its index.
    ///
    /// A new path enters at proportion 0 (1 in an empty set). At capacity the
    /// path with the smallest proportion goes first (oldest on ties) and the
    /// rest are renormalized.
    pub fn insert(&mut self, path: Path) -> usize {
        if let Some(i) = self.position(&path) {
            return i;
        }
        if self.paths.len() >= self.cap {
            let mut evict = 0;
            for i in 1..self.paths.len() {
                if self.proportions[i] < self.proportions[evict] {
                    evict = i;
                }
            }
            self.paths.remove(evict);
            self.proportions.remove(evict);
            let sum: f64 = self.proportions.iter().sum();
            if sum > 0.0 {
                for p in &mut self.proportions {
                    *p /= sum;
                }
            }
        }
        let share = if self.proportions.iter().sum::<f64>() > 0.0 {
            0.0
        } else {
            // nothing left carries flow
            self.proportions.iter_mut().for_each(|p| *p = 0.0);
            1.0
        };
        self.paths.push(path);
        self.proportions.push(share);
        self.paths.len() - 1
    }

    /// Replaces the proportions; they must be in `[0, 1]` and sum to one.
    pub fn set_proportions(&mut self, p: Vec<f64>) -> Result<()> {
        if p.len() != self.paths.len() {
            return Err(Error::Structural(format!(
                "{} proportions for {} paths",
                p.len(),
                self.paths.len()
            )));
        }
        check_proportions(&p)?;
        self.proportions = p;
        Ok(())
    }
}

fn check_proportions(p: &[f64]) -> Result<()> {
    if p.iter().any(|x| !(-1e-12..=1.0 + 1e-12).contains(x)) {
        return Err(Error::Structural("proportion outside [0, 1]".into()));
    }
    let sum: f64 = p.iter().sum();
    if !p.is_empty() && (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Structural(format!("proportions sum to {sum}")));
    }
    Ok(())
}

/// Returns `set` with `path` inserted under capacity `cap`.
pub fn update_path_set(set: &PathSet, path: Path, cap: usize) -> Result<PathSet> {
    let mut s = set.clone();
    if cap == 0 {
        return Err(Error::Config("path set capacity must be at least 1".into()));
    }
    s.cap = cap;
    while s.paths.len() > cap {
        // shrink through eviction of the smallest shares first
        let i = (0..s.paths.len())
            .min_by(|&a, &b| s.proportions[a].total_cmp(&s.proportions[b]).then(a.cmp(&b)))
            .unwrap();
        s.paths.remove(i);
        s.proportions.remove(i);
        let sum: f64 = s.proportions.iter().sum();
        if sum > 0.0 {
            s.proportions.iter_mut().for_each(|p| *p /= sum);
        }
    }
    s.insert(path);
    Ok(s)
}
