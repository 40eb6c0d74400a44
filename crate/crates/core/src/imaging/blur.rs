use super::{FloatGrid, Image};

/// Sampled, normalized 1-D Gaussian with radius `ceil(4 * sigma)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);
    kernel
}

/// Separable Gaussian blur of each channel with edge-clamped borders.
///
/// `sigma == 0` returns the channels converted to `f64` untouched.
pub fn gaussian_blur(image: &Image, sigma: f64) -> [FloatGrid; 3] {
    assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and >= 0");
    let (w, h) = (image.width(), image.height());
    let channel = |c: usize| -> Vec<f64> { image.pixels().iter().map(|p| p[c] as f64).collect() };
    let mut out = [channel(0), channel(1), channel(2)];

    if sigma > 0.0 {
        let kernel = gaussian_kernel(sigma);
        let radius = (kernel.len() / 2) as isize;
        let mut tmp = vec![0.0; w * h];
        for data in out.iter_mut() {
            // horizontal pass
            for y in 0..h {
                let row = &data[y * w..(y + 1) * w];
                for x in 0..w {
                    let mut acc = 0.0;
                    for (j, k) in kernel.iter().enumerate() {
                        let xi = (x as isize + j as isize - radius).clamp(0, w as isize - 1);
                        acc += k * row[xi as usize];
                    }
                    tmp[y * w + x] = acc;
                }
            }
            // vertical pass
            for y in 0..h {
                for x in 0..w {
                    let mut acc = 0.0;
                    for (j, k) in kernel.iter().enumerate() {
                        let yi = (y as isize + j as isize - radius).clamp(0, h as isize - 1);
                        acc += k * tmp[yi as usize * w + x];
                    }
                    data[y * w + x] = acc;
                }
            }
        }
    }

    out.map(|values| FloatGrid::new(w, h, values).expect("blur output is finite"))
}
