use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies one reproducible variate sequence.
///
/// The generator is ChaCha8 keyed by `master_seed`, with `stream_index` as
/// the cipher's stream word. Two streams with the same key and different
/// indices share no keystream, and the output does not depend on platform
/// or on which thread draws it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeededStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        SeededStream {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Stream for path `path` of candidate `candidate` when candidates do
    /// not share noise. Candidate streams live above bit 32 so they never
    /// collide with the common-noise streams `0..2^32`.
    pub fn for_candidate(master_seed: u64, candidate: u64, path: u64) -> Self {
        debug_assert!(path < (1u64 << 32));
        SeededStream::new(master_seed, ((candidate + 1) << 32) | path)
    }
}

pub fn substream(master_seed: u64, index: u64) -> SeededStream {
    SeededStream::new(master_seed, index)
}
