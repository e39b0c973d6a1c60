//! One noise slice and its empirical covariance at a few lattice lags.
use shelab::field::{LatticeGrid, Mollifier};
use shelab::noise::{NoiseGenerator, NoiseSource};
use shelab::stats::{purpose, RngStreamKey};

fn main() -> shelab::Result<()> {
    let m = Mollifier::standard(3);
    let grid = LatticeGrid::new(3, 0.5, 32)?;
    let dt = 0.0375;
    let gen = NoiseGenerator::new(grid, &m, dt)?;
    let mut stream = gen.stream(RngStreamKey::new(1, 0, 0, purpose::NOISE));
    let n_slices = 20;
    let mut v = vec![0.0; grid.len()];
    let mut acc = [0.0; 3];
    for _ in 0..n_slices {
        stream.fill_next(&mut v)?;
        for (lag, a) in acc.iter_mut().enumerate() {
            let s: f64 = (0..grid.len())
                .map(|i| {
                    let mut mi = grid.multi_index(i);
                    mi[0] = (mi[0] + lag) % grid.n_cells();
                    v[i] * v[grid.flat_index(&mi)]
                })
                .sum();
            *a += s * dt / (grid.len() * n_slices) as f64;
        }
    }
    for (lag, a) in acc.iter().enumerate() {
        let r = lag as f64 * grid.spacing();
        println!("lag {r:.1}: empirical {a:.4}, R = {:.4}", m.covariance_radial(r));
    }
    Ok(())
}
