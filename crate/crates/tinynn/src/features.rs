//! Hashed bag-of-tokens caption features.

/// Default caption feature dimension.
pub const CAPTION_DIM: usize = 1024;

/// A sparse vector with sorted, unique indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Builds a sparse vector from unsorted `(index, value)` pairs, summing duplicates
    /// and dropping entries that cancel to zero.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            assert!((i as usize) < dim, "index {i} out of range for dimension {dim}");
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }
}

/// 64-bit FNV-1a. Stable across platforms and toolchains, unlike `DefaultHasher`.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Splits text on anything that is not alphanumeric and lowercases the pieces.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Signed feature hashing of the caption's tokens into `dim` buckets.
///
/// Each token contributes ±1 to one bucket; the sign comes from a bit of the
/// hash that is not used for the bucket index. Blank text maps to the zero vector.
pub fn featurize_caption(text: &str, dim: usize) -> SparseVec {
    assert!(dim > 0, "feature dimension must be positive");
    let pairs = tokenize(text)
        .map(|tok| {
            let h = fnv1a(tok.as_bytes());
            let bucket = (h % dim as u64) as u32;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            (bucket, sign)
        })
        .collect();
    SparseVec::from_pairs(dim, pairs)
}

/// Dense variant of [`featurize_caption`], used where the consumer wants a plain slice.
pub fn featurize_caption_dense(text: &str, dim: usize) -> Vec<f64> {
    featurize_caption(text, dim).to_dense()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_is_zero() {
        assert!(featurize_caption("", CAPTION_DIM).is_zero());
        assert!(featurize_caption("  ...  ", CAPTION_DIM).is_zero());
    }

    #[test]
    fn deterministic() {
        let a = featurize_caption("You kill the goblin!", CAPTION_DIM);
        let b = featurize_caption("You kill the goblin!", CAPTION_DIM);
        assert_eq!(a, b);
    }

    #[test]
    fn bag_semantics() {
        assert_eq!(
            featurize_caption("a b", CAPTION_DIM),
            featurize_caption("b a", CAPTION_DIM)
        );
        assert_eq!(
            featurize_caption("Gold gold", 64).to_dense(),
            featurize_caption("gold", 64)
                .to_dense()
                .iter()
                .map(|v| 2.0 * v)
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn duplicates_merge() {
        let v = SparseVec::from_pairs(8, vec![(3, 1.0), (1, 2.0), (3, -1.0), (1, 0.5)]);
        assert_eq!(v.entries(), &[(1, 2.5)]);
    }
}
