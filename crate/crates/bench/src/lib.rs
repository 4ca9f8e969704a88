//! Shared inputs for the criterion benches.

use ucf_core::{generate_synthetic, SynthConfig, SynthData};

/// Fixture-shaped data scaled to `identities * per_id` instances.
pub fn dataset(identities: usize, per_id: usize, seed: u64) -> SynthData {
    generate_synthetic(&SynthConfig {
        identities,
        per_id,
        ..SynthConfig::fixture(seed)
    })
    .expect("valid synthetic config")
}
