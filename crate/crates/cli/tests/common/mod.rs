//! Shared fixtures for the CLI integration and acceptance tests.

#![allow(dead_code)]

use std::path::Path;

use maxplus_cli::config::{ModeConfig, SystemConfig};
use maxplus_cli::{parse_config, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MINIMAL: &str = r#"
[system]
d = 1
M = 1

[[system.modes]]
A = [[0.0]]
D = [[0.0]]
Sigma = [[0.0]]
"#;

fn rows(m: &[[f64; 2]; 2]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

fn mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn gram(b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let bt = [[b[0][0], b[1][0]], [b[0][1], b[1][1]]];
    mul(b, &bt)
}

/// `R M Rᵀ` for the quarter turn `R`.
fn rotate(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[m[1][1], -m[1][0]], [-m[0][1], m[0][0]]]
}

/// The fixed d=2, M=2 test instance: a strongly stable random mode and its
/// quarter-turn rotation, so that neither mode dominates everywhere.
pub fn rotated_pair(seed: u64) -> SystemConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> [[f64; 2]; 2] {
        // Column-major fill.
        let mut m = [[0.0; 2]; 2];
        for j in 0..2 {
            for row in m.iter_mut() {
                row[j] = rng.random_range(-1.0..1.0);
            }
        }
        m
    };
    let u = draw();
    let b = draw();
    let c = draw();
    let a = [[-3.0 + 0.8 * u[0][0], 0.8 * u[0][1]], [0.8 * u[1][0], -3.0 + 0.8 * u[1][1]]];
    let d = gram(&b);
    let s = gram(&c);
    let mode = |a: [[f64; 2]; 2], d: [[f64; 2]; 2], s: [[f64; 2]; 2]| ModeConfig {
        a: rows(&a),
        d: rows(&d),
        sigma: rows(&s),
        l1: None,
        l2: None,
        alpha: 0.0,
    };
    SystemConfig {
        d: 2,
        m: 2,
        gamma: 1.0,
        modes: vec![mode(a, d, s), mode(rotate(&a), rotate(&d), rotate(&s))],
    }
}

/// Horizon-2 run on the rotated pair with keep 10.
pub fn desk_config(tau: f64, pruner: &str, out: &Path) -> RunConfig {
    let mut cfg = parse_config(MINIMAL).unwrap();
    cfg.system = rotated_pair(1);
    cfg.tau = tau;
    cfg.steps = (2.0 / tau).round() as usize;
    cfg.keep = "10".into();
    cfg.pruner = pruner.into();
    cfg.seed = 7;
    cfg.out = out.to_path_buf();
    cfg.validate().unwrap();
    cfg
}
