//! Loop descriptions and the canonical iteration space.
//!
//! Every loop is normalized onto logical iterations `0..N`; logical
//! iteration `k` corresponds to source index `lower + k * stride`.
//! Strategies only ever reason about `N`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LoopError;

/// Stable identity of a loop call site across invocations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteId(String);

impl SiteId {
    pub fn new(id: impl Into<String>) -> Self {
        SiteId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for SiteId {
    fn default() -> Self {
        SiteId("default".to_owned())
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Result of normalizing a strided loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Canonical {
    pub count: u64,
    pub lower: i64,
    pub stride: i64,
}

impl Canonical {
    /// Source index of logical iteration `k`.
    pub fn source_index(&self, k: u64) -> i64 {
        (self.lower as i128 + k as i128 * self.stride as i128) as i64
    }
}

/// Normalizes `for (i = lower; i < upper; i += stride)` (or `i > upper` for
/// negative strides) onto `0..count`.
pub fn canonicalize(lower: i64, upper: i64, stride: i64) -> Result<Canonical, LoopError> {
    if stride == 0 {
        return Err(LoopError::ZeroStride);
    }
    let span = if stride > 0 {
        upper as i128 - lower as i128
    } else {
        lower as i128 - upper as i128
    };
    let step = (stride as i128).abs();
    let count = if span <= 0 {
        0
    } else {
        ((span + step - 1) / step) as u64
    };
    Ok(Canonical {
        count,
        lower,
        stride,
    })
}

/// The iteration space of one worksharing loop plus its scheduling knobs.
///
/// Carries what a scheduler needs to see: lower bound, upper bound, stride,
/// chunk parameter and a site identity under which history is kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLoop", into = "RawLoop")]
pub struct LoopDescriptor {
    lower: i64,
    upper: i64,
    stride: i64,
    chunk: Option<u64>,
    site: SiteId,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct RawLoop {
    lower: i64,
    upper: i64,
    stride: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chunk: Option<u64>,
    #[serde(default)]
    site: SiteId,
}

impl TryFrom<RawLoop> for LoopDescriptor {
    type Error = LoopError;

    fn try_from(raw: RawLoop) -> Result<Self, LoopError> {
        let mut lp = LoopDescriptor::new(raw.lower, raw.upper, raw.stride)?.with_site(raw.site);
        if let Some(c) = raw.chunk {
            lp = lp.with_chunk(c)?;
        }
        Ok(lp)
    }
}

impl From<LoopDescriptor> for RawLoop {
    fn from(lp: LoopDescriptor) -> Self {
        RawLoop {
            lower: lp.lower,
            upper: lp.upper,
            stride: lp.stride,
            chunk: lp.chunk,
            site: lp.site,
        }
    }
}

impl LoopDescriptor {
    pub fn new(lower: i64, upper: i64, stride: i64) -> Result<Self, LoopError> {
        let canon = canonicalize(lower, upper, stride)?;
        Ok(LoopDescriptor {
            lower,
            upper,
            stride,
            chunk: None,
            site: SiteId::default(),
            count: canon.count,
        })
    }

    /// Unit-stride loop over `0..n`.
    pub fn range(n: u64) -> Self {
        let upper = i64::try_from(n).expect("iteration count exceeds i64::MAX");
        LoopDescriptor::new(0, upper, 1).expect("unit stride is valid")
    }

    pub fn with_chunk(mut self, chunk: u64) -> Result<Self, LoopError> {
        if chunk == 0 {
            return Err(LoopError::ZeroChunk);
        }
        self.chunk = Some(chunk);
        Ok(self)
    }

    pub fn with_site(mut self, site: impl Into<SiteId>) -> Self {
        self.site = site.into();
        self
    }

    pub fn lower(&self) -> i64 {
        self.lower
    }

    pub fn upper(&self) -> i64 {
        self.upper
    }

    pub fn stride(&self) -> i64 {
        self.stride
    }

    /// The grouping parameter; 1 unless set explicitly.
    pub fn chunk_param(&self) -> u64 {
        self.chunk.unwrap_or(1)
    }

    /// The chunk parameter only if the caller set one.
    pub fn explicit_chunk(&self) -> Option<u64> {
        self.chunk
    }

    pub fn site(&self) -> &SiteId {
        &self.site
    }

    pub fn iteration_count(&self) -> u64 {
        self.count
    }

    pub fn canonical(&self) -> Canonical {
        Canonical {
            count: self.count,
            lower: self.lower,
            stride: self.stride,
        }
    }

    pub fn source_index(&self, k: u64) -> i64 {
        self.canonical().source_index(k)
    }

    /// Logical iteration number of a source index produced by this loop.
    pub fn logical_index(&self, source: i64) -> u64 {
        ((source as i128 - self.lower as i128) / self.stride as i128) as u64
    }

    pub fn check_chunk(&self, chunk: &Chunk) -> Result<(), LoopError> {
        let in_range = chunk.size >= 1
            && chunk
                .first
                .checked_add(chunk.size)
                .is_some_and(|end| end <= self.count);
        if in_range {
            Ok(())
        } else {
            Err(LoopError::ChunkOutOfRange {
                first: chunk.first,
                size: chunk.size,
                count: self.count,
            })
        }
    }
}

impl From<&str> for SiteId {
    fn from(s: &str) -> Self {
        SiteId::new(s)
    }
}

impl From<String> for SiteId {
    fn from(s: String) -> Self {
        SiteId(s)
    }
}

/// A contiguous run of logical iterations handed out by one dequeue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chunk {
    pub first: u64,
    pub size: u64,
    pub seq: u64,
}

impl Chunk {
    pub fn new(first: u64, size: u64, seq: u64) -> Self {
        Chunk { first, size, seq }
    }

    /// One past the last logical iteration.
    pub fn end(&self) -> u64 {
        self.first + self.size
    }

    pub fn logical(&self) -> std::ops::Range<u64> {
        self.first..self.end()
    }
}

/// Expands a chunk to the source indices it covers, in execution order.
pub fn chunk_to_source_indices(chunk: &Chunk, lp: &LoopDescriptor) -> Result<Vec<i64>, LoopError> {
    lp.check_chunk(chunk)?;
    Ok(chunk.logical().map(|k| lp.source_index(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enumerate(lower: i64, upper: i64, stride: i64) -> Vec<i64> {
        let mut out = Vec::new();
        let mut i = lower;
        while (stride > 0 && i < upper) || (stride < 0 && i > upper) {
            out.push(i);
            i += stride;
        }
        out
    }

    #[test]
    fn canonical_counts() {
        assert_eq!(canonicalize(0, 100, 1).unwrap().count, 100);
        assert_eq!(canonicalize(10, 10, 1).unwrap().count, 0);
        // values frozen from the enumeration oracle
        assert_eq!(enumerate(0, 100, 3).len(), 34);
        assert_eq!(canonicalize(0, 100, 3).unwrap().count, 34);
        assert_eq!(enumerate(100, 0, -2).len(), 50);
        assert_eq!(canonicalize(100, 0, -2).unwrap().count, 50);
        assert_eq!(canonicalize(5, 0, 1).unwrap().count, 0);
        assert_eq!(canonicalize(0, 5, -1).unwrap().count, 0);
    }

    #[test]
    fn zero_stride_rejected() {
        assert_eq!(canonicalize(0, 10, 0), Err(LoopError::ZeroStride));
        assert!(LoopDescriptor::new(0, 10, 0).is_err());
    }

    #[test]
    fn extreme_bounds_do_not_overflow() {
        let c = canonicalize(i64::MIN, i64::MAX, 1).unwrap();
        assert_eq!(c.count, u64::MAX);
        let c = canonicalize(i64::MAX, i64::MIN, i64::MIN).unwrap();
        assert_eq!(c.count, 2);
    }

    #[test]
    fn chunk_expansion() {
        let a = LoopDescriptor::new(0, 100, 1).unwrap();
        assert_eq!(chunk_to_source_indices(&Chunk::new(0, 3, 0), &a).unwrap(), vec![0, 1, 2]);
        let b = LoopDescriptor::new(0, 100, 3).unwrap();
        assert_eq!(chunk_to_source_indices(&Chunk::new(2, 2, 0), &b).unwrap(), vec![6, 9]);
        let c = LoopDescriptor::new(100, 0, -2).unwrap();
        assert_eq!(chunk_to_source_indices(&Chunk::new(0, 1, 0), &c).unwrap(), vec![100]);
    }

    #[test]
    fn chunk_out_of_range_rejected() {
        let lp = LoopDescriptor::range(10);
        assert!(chunk_to_source_indices(&Chunk::new(8, 3, 0), &lp).is_err());
        assert!(chunk_to_source_indices(&Chunk::new(0, 0, 0), &lp).is_err());
        assert!(chunk_to_source_indices(&Chunk::new(u64::MAX, 2, 0), &lp).is_err());
    }

    #[test]
    fn logical_index_inverts_source_index() {
        let lp = LoopDescriptor::new(100, 0, -2).unwrap();
        for k in 0..lp.iteration_count() {
            assert_eq!(lp.logical_index(lp.source_index(k)), k);
        }
    }

    #[test]
    fn zero_chunk_param_rejected() {
        assert_eq!(LoopDescriptor::range(4).with_chunk(0), Err(LoopError::ZeroChunk));
        assert_eq!(LoopDescriptor::range(4).chunk_param(), 1);
    }

    #[test]
    fn descriptor_json_validates() {
        let lp = LoopDescriptor::new(3, 30, 4).unwrap().with_chunk(2).unwrap().with_site("k1");
        let text = serde_json::to_string(&lp).unwrap();
        let back: LoopDescriptor = serde_json::from_str(&text).unwrap();
        assert_eq!(back, lp);
        assert!(serde_json::from_str::<LoopDescriptor>(r#"{"lower":0,"upper":1,"stride":0}"#).is_err());
    }

    proptest::proptest! {
        #[test]
        fn round_trip_matches_enumeration(
            lower in -500i64..500,
            upper in -500i64..500,
            stride in prop_oneof(),
        ) {
            let lp = LoopDescriptor::new(lower, upper, stride).unwrap();
            let n = lp.iteration_count();
            let all = if n == 0 {
                Vec::new()
            } else {
                chunk_to_source_indices(&Chunk::new(0, n, 0), &lp).unwrap()
            };
            proptest::prop_assert_eq!(all, enumerate(lower, upper, stride));
        }
    }

    fn prop_oneof() -> impl proptest::strategy::Strategy<Value = i64> {
        use proptest::strategy::Strategy;
        (1i64..40, proptest::bool::ANY).prop_map(|(s, neg)| if neg { -s } else { s })
    }
}
