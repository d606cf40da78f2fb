use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use parking_lot::Mutex;
use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

const TOKEN_BYTES: usize = 32;

pub const TOKEN_ENTROPY_BITS: usize = TOKEN_BYTES * 8;

/// Source of decision-token values: 256 random bits, base64url without padding.
pub struct TokenGenerator {
    rng: Mutex<Box<dyn RngCore + Send>>,
}

impl TokenGenerator {
    pub fn from_entropy() -> Self {
        TokenGenerator { rng: Mutex::new(Box::new(StdRng::from_os_rng())) }
    }

    /// Reproducible sequence for simulations and tests.
    pub fn seeded(seed: u64) -> Self {
        TokenGenerator { rng: Mutex::new(Box::new(ChaCha20Rng::seed_from_u64(seed))) }
    }

    pub fn issue(&self) -> String {
        let mut bytes = [0u8; TOKEN_BYTES];
        self.rng.lock().fill_bytes(&mut bytes);
        URL_SAFE_NO_PAD.encode(bytes)
    }
}

impl Default for TokenGenerator {
    fn default() -> Self {
        TokenGenerator::from_entropy()
    }
}
