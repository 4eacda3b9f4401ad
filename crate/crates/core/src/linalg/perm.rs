use crate::error::{Error, Result};

/// Permutation stored as a gather map: `apply(x)[i] = x[mapping[i]]`.
///
/// The equivalent matrix `P` has `P[i, mapping[i]] = 1`. Maps are never
/// materialized densely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationMap {
    mapping: Vec<usize>,
}

impl PermutationMap {
    pub fn identity(size: usize) -> Self {
        Self {
            mapping: (0..size).collect(),
        }
    }

    /// Validates that `mapping` is a bijection on `[0, len)`.
    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &m in &mapping {
            if m >= mapping.len() {
                return Err(Error::InvalidPermutation(format!(
                    "index {m} out of range for size {}",
                    mapping.len()
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidPermutation(format!("index {m} hit twice")));
            }
        }
        Ok(Self { mapping })
    }

    pub fn size(&self) -> usize {
        self.mapping.len()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn apply<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.size() {
            return Err(Error::dims("permutation apply", self.size(), x.len()));
        }
        Ok(self.mapping.iter().map(|&m| x[m]).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.size()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Self { mapping: inv }
    }

    /// `self ∘ other`: applying the result equals applying `other` first, then `self`.
    pub fn compose(&self, other: &PermutationMap) -> Result<Self> {
        if self.size() != other.size() {
            return Err(Error::dims("permutation compose", self.size(), other.size()));
        }
        Ok(Self {
            mapping: self.mapping.iter().map(|&m| other.mapping[m]).collect(),
        })
    }

    /// Index map of `I_outer ⊗ P ⊗ I_inner`.
    pub fn lift(&self, outer: usize, inner: usize) -> Self {
        let s = self.size();
        let mut mapping = Vec::with_capacity(outer * s * inner);
        for a in 0..outer {
            for &m in &self.mapping {
                for b in 0..inner {
                    mapping.push((a * s + m) * inner + b);
                }
            }
        }
        Self { mapping }
    }
}

/// Commutation map `K_{m,n}`: takes `vec(A)` to `vec(Aᵀ)` for every `m × n` matrix `A`.
pub fn commutation_map(m: usize, n: usize) -> PermutationMap {
    let mut mapping = vec![0; m * n];
    // Aᵀ is n×m; its entry (c, r) is A(r, c).
    for r in 0..m {
        for c in 0..n {
            mapping[r * n + c] = c * m + r;
        }
    }
    PermutationMap { mapping }
}

/// Takes `kron(vec(A), vec(B))` to `vec(kron(A, B))` for `A` `m × n` and `B` `p × q`.
///
/// Built as `I_n ⊗ K_{q,m} ⊗ I_p`.
pub fn vec_kron_map(m: usize, n: usize, p: usize, q: usize) -> PermutationMap {
    commutation_map(q, m).lift(n, p)
}
