//! Seeded thermal initial conditions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use trapforge_core::shuttling::IonState;

pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Cold equilibrium positions with Maxwell-Boltzmann velocities at
/// `temperature`. Run `stream` of a sweep draws from its own ChaCha stream,
/// so results do not depend on scheduling.
pub fn thermal_state(cold: &IonState, mass: f64, temperature: f64, seed: u64, stream: u64) -> IonState {
    let mut state = *cold;
    if temperature <= 0.0 {
        return state;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let sigma = (BOLTZMANN * temperature / mass).sqrt();
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for v in state.vel.iter_mut().take(state.n) {
        for k in 0..3 {
            v[k] = normal.sample(&mut rng);
        }
    }
    state
}
