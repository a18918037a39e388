//! Writes the 64x64 test image used by the shipped configs.
//!
//! Usage: `cargo run -p pdsplit --example make_phantom -- fixtures/phantom64.pgm`

use pdsplit::imaging::{write_pgm, Image};

const SIZE: usize = 64;

fn inside_ellipse(x: f64, y: f64, cx: f64, cy: f64, rx: f64, ry: f64, angle: f64) -> bool {
    let (s, c) = angle.sin_cos();
    let dx = x - cx;
    let dy = y - cy;
    let u = (c * dx + s * dy) / rx;
    let v = (-s * dx + c * dy) / ry;
    u * u + v * v <= 1.0
}

fn phantom() -> Vec<f64> {
    let mut px = vec![0.0; SIZE * SIZE];
    for row in 0..SIZE {
        for col in 0..SIZE {
            let x = col as f64 + 0.5;
            let y = row as f64 + 0.5;
            let mut v = 20.0;
            if inside_ellipse(x, y, 32.0, 32.0, 28.0, 22.0, 0.0) {
                v = 90.0;
            }
            if inside_ellipse(x, y, 32.0, 32.0, 25.0, 19.0, 0.0) {
                v = 60.0;
            }
            if inside_ellipse(x, y, 22.0, 28.0, 8.0, 5.0, 0.5) {
                v = 200.0;
            }
            if inside_ellipse(x, y, 42.0, 30.0, 6.0, 9.0, -0.3) {
                v = 150.0;
            }
            if (26..38).contains(&col) && (40..46).contains(&row) {
                v = 235.0;
            }
            if inside_ellipse(x, y, 40.0, 44.0, 2.5, 2.5, 0.0) {
                v = 10.0;
            }
            // Gentle ramp so the image is not piecewise constant everywhere.
            if (8..20).contains(&col) && (50..58).contains(&row) {
                v = 100.0 + 10.0 * (col - 8) as f64;
            }
            px[row * SIZE + col] = v;
        }
    }
    px
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "phantom64.pgm".into());
    let img = Image::new(SIZE, SIZE, phantom())?;
    write_pgm(&img, &path)?;
    println!("wrote {path}");
    Ok(())
}
