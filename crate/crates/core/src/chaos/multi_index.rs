use std::fmt;

use smallvec::SmallVec;

/// Finitely supported multi-index `α`, stored as `(basis index, count)`
/// pairs sorted by basis index with positive counts.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(SmallVec<[(u32, u32); 6]>);

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `ε_k`.
    pub fn unit(k: usize) -> Self {
        let mut v = SmallVec::new();
        v.push((k as u32, 1));
        Self(v)
    }

    /// Accepts pairs in any order; repeated indices are summed and zero
    /// counts dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut v: SmallVec<[(u32, u32); 6]> = pairs
            .into_iter()
            .filter(|p| p.1 > 0)
            .map(|(k, c)| (k as u32, c))
            .collect();
        v.sort_unstable();
        let mut out: SmallVec<[(u32, u32); 6]> = SmallVec::with_capacity(v.len());
        for (k, c) in v {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += c,
                _ => out.push((k, c)),
            }
        }
        Self(out)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|&(k, c)| (k as usize, c))
    }

    /// `|α|`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|p| p.1 as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, k: usize) -> u32 {
        self.0
            .binary_search_by_key(&(k as u32), |p| p.0)
            .map_or(0, |i| self.0[i].1)
    }

    /// Largest basis index in the support.
    pub fn max_index(&self) -> Option<usize> {
        self.0.last().map(|p| p.0 as usize)
    }

    /// `α + β`.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let (a, b) = (&self.0, &other.0);
        let mut out: SmallVec<[(u32, u32); 6]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        MultiIndex(out)
    }

    /// `α + ε_k`.
    pub fn with_unit(&self, k: usize) -> MultiIndex {
        let k = k as u32;
        let mut out = self.0.clone();
        match out.binary_search_by_key(&k, |p| p.0) {
            Ok(i) => out[i].1 += 1,
            Err(i) => out.insert(i, (k, 1)),
        }
        MultiIndex(out)
    }

    /// `α! = Π_k α_k!`.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&(_, c)| (1..=c).map(f64::from).product::<f64>())
            .product()
    }

    /// `Π_k x_k^{α_k}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(k, c)| x[k as usize].powi(c as i32)).product()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for MultiIndex {
    /// `k:c` pairs separated by spaces, `-` for the zero index.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for (n, (k, c)) in self.pairs().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}:{c}")?;
        }
        Ok(())
    }
}
