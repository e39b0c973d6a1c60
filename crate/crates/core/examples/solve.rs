//! One realization of the lattice SHE with field diagnostics along the way.
use shelab::field::{LatticeGrid, Mollifier};
use shelab::noise::NoiseGenerator;
use shelab::solver::{solve_she, SolveOptions, SolverConfig};
use shelab::stats::{purpose, RngStreamKey};

fn main() -> shelab::Result<()> {
    let m = Mollifier::standard(3);
    let grid = LatticeGrid::new(3, 0.5, 24)?;
    let cfg = SolverConfig::new(0.2, grid, 8.0)?;
    let gen = NoiseGenerator::new(grid, &m, cfg.dt)?;
    let opts = SolveOptions {
        checkpoint_every: Some(cfg.n_steps() / 4),
        ..SolveOptions::default()
    };
    let out = solve_she(&cfg, &mut gen.stream(RngStreamKey::new(3, 0, 0, purpose::NOISE)), &opts)?;
    println!("{} steps of dt = {:.5}", cfg.n_steps(), cfg.dt);
    for d in &out.checkpoints {
        println!("t = {:6.3}: mean {:.5}, min {:.5}, max {:.5}", d.time, d.mean, d.min, d.max);
    }
    Ok(())
}
