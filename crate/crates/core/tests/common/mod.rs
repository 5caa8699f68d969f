//! Fixed test instances shared by the integration suites.
#![allow(dead_code)]

use dotdop::experiments::{
    make_block_game, make_sum_quadratic, BlockQuadraticGame, QuadraticScheme, SumQuadraticProblem,
};
use dotdop::network::{generate_strongly_connected, Network};
use dotdop::operators::{estimate_regularity, UniformSampler, KAPPA_SAFETY};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DELTA: f64 = 0.1;

/// Reference quadratic data with N = 10, n = 5 and ξ = 0.1 on a fixed random graph.
pub fn desk_sum_quadratic() -> (SumQuadraticProblem, Network) {
    let prob = make_sum_quadratic(10, 5, QuadraticScheme::Paper, 0.1).unwrap();
    let net = Network::new(generate_strongly_connected(10, 0.5, 4).unwrap()).unwrap();
    (prob, net)
}

/// Eight players with two-dimensional actions.
pub fn desk_game() -> (BlockQuadraticGame, Network) {
    let game = make_block_game(8, 2, 1, 0.2).unwrap();
    let net = Network::new(generate_strongly_connected(8, 0.6, 1).unwrap()).unwrap();
    (game, net)
}

/// Sampled regularity constant with the safety factor applied.
pub fn safe_kappa(f: &dotdop::operators::OperatorHandle) -> f64 {
    estimate_regularity(f, &UniformSampler::default(), 10_000, 0)
        .unwrap()
        .kappa_hat
        * KAPPA_SAFETY
}

pub fn uniform_start(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            x[(i, j)] = rng.random_range(0.0..1.0);
        }
    }
    x
}
