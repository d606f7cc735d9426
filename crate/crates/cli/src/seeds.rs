//! Seed hierarchy of a run.
//!
//! ```text
//! master_seed
//! └── child(replicate)                  replicate root R
//!     ├── stream(Data)                  dataset frames: frame f uses Data.child(f)
//!     ├── stream(Init).child(0)         U training (init, shuffle)
//!     ├── stream(Init).child(1)         N training (init, shuffle, ε)
//!     ├── stream(Eval)                  BER frames, disjoint from the dataset frames
//!     └── stream(Direction)             loss-landscape probe directions
//! ```
//!
//! Single runs use replicate 0.

use serde::Serialize;
use xai_chest_core::seed::{SeedTree, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedPlan {
    pub master: u64,
    pub replicate: u64,
    pub data: u64,
    pub u_training: u64,
    pub n_training: u64,
    pub eval: u64,
    pub probe: u64,
}

impl SeedPlan {
    pub fn new(master: u64, replicate: u64) -> Self {
        let root = SeedTree::new(master).child(replicate);
        SeedPlan {
            master,
            replicate,
            data: root.stream(Stream::Data).seed(),
            u_training: root.stream(Stream::Init).child(0).seed(),
            n_training: root.stream(Stream::Init).child(1).seed(),
            eval: root.stream(Stream::Eval).seed(),
            probe: root.stream(Stream::Direction).seed(),
        }
    }

    /// Seed of the `i`-th probe direction.
    pub fn probe_direction(&self, i: usize) -> u64 {
        SeedTree::new(self.probe).child(i as u64).seed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicates_get_distinct_streams() {
        let a = SeedPlan::new(1, 0);
        let b = SeedPlan::new(1, 1);
        assert_ne!(a.data, b.data);
        assert_ne!(a.u_training, a.n_training);
        assert_ne!(a.data, a.eval);
        assert_eq!(a, SeedPlan::new(1, 0));
        assert_ne!(a.probe_direction(0), a.probe_direction(1));
    }
}
