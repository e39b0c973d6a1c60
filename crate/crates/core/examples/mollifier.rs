//! Spatial covariance of the smoothed noise.
use shelab::field::Mollifier;

fn main() {
    let m = Mollifier::standard(3);
    println!("R(0) = {:.6}, int R = {:.10}", m.r0(), m.integral_r());
    for r in [0.0, 0.25, 0.5, 0.75, 0.95, 1.0] {
        println!("R({r:.2}) = {:.6}", m.covariance_radial(r));
    }
}
