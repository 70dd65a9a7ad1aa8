//! Initial conditions: nodal interpolation of the configured profile.

use crate::config::IcSpec;
use crate::mesh::Mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Evaluate the initial condition at every mesh vertex. Random profiles are
/// reproducible from the seed (fixed generator, fixed draw order).
pub fn initial_condition(spec: &IcSpec, mesh: &Mesh, seed: u64) -> Vec<f64> {
    match spec {
        IcSpec::Constant(c) => vec![*c; mesh.n_vertices()],
        IcSpec::Random { amplitude, mean } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..mesh.n_vertices())
                .map(|_| mean + amplitude * rng.gen_range(-1.0..1.0))
                .collect()
        }
        IcSpec::TanhInterface {
            normal,
            offset,
            width,
        } => mesh
            .vertices
            .iter()
            .map(|p| ((p[0] * normal[0] + p[1] * normal[1] - offset) / width).tanh())
            .collect(),
    }
}
