//! Stable 64-bit FNV-1a, used where ids or seeds must not depend on the
//! toolchain's hasher.

const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Derive an independent seed for a named pipeline stage.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(stage.as_bytes());
    fnv1a(&bytes)
}
