//! Throughput of a 64→64 3×3 convolution on a 64×64 feature map.

use std::time::Instant;
use tcmc::tensor::{conv2d, Activation, ConvSpec};
use tcmc::Grid;

fn main() {
    let x = Grid::<f32>::from_fn(64, 64, 64, |c, y, x| ((c * 7 + y * 3 + x) % 13) as f32 * 0.1);
    let spec = ConvSpec::new(3, 64, 64, 1, vec![0.01f32; 64 * 64 * 9], vec![0.0; 64], Activation::Leaky).unwrap();
    let t = Instant::now();
    let n = 10;
    for _ in 0..n {
        std::hint::black_box(conv2d(&x, &spec).unwrap());
    }
    let dt = t.elapsed().as_secs_f64() / n as f64;
    let macs = 64.0 * 64.0 * 9.0 * 4096.0;
    println!("{:.3} ms/conv, {:.2} GMAC/s", dt * 1e3, macs / dt / 1e9);
}
