//! Persistence images: diagrams rasterised on a fixed grid.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{HomologyDims, PersistenceDiagram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightRule {
    /// `w(p) = p / cap`, zero on the diagonal.
    #[default]
    Linear,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageParams {
    pub resolution: usize,
    pub sigma: f64,
    /// Upper edge of the grid on both axes; also replaces infinite deaths.
    pub cap: f64,
    pub weight: WeightRule,
    pub dims: HomologyDims,
}

impl ImageParams {
    /// Grid side `resolution`, `sigma = cap / 20`, linear weight.
    pub fn with_cap(resolution: usize, cap: f64) -> Self {
        ImageParams {
            resolution,
            sigma: cap / 20.0,
            cap,
            weight: WeightRule::Linear,
            dims: HomologyDims::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceImage {
    pub resolution: usize,
    /// Row-major; row `r` is the persistence bin, column `c` the birth bin.
    pub pixels: Vec<f64>,
    pub sigma: f64,
    pub weight: WeightRule,
}

impl PersistenceImage {
    pub fn total_mass(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.resolution + col]
    }
}

/// Rasterises `diagram` in (birth, persistence) coordinates.
///
/// Each point contributes an isotropic Gaussian of width `sigma` scaled by its
/// weight; a pixel holds the Gaussian density at its centre times its area.
/// The grid spans `[0, cap]` on both axes.
pub fn persistence_image(diagram: &PersistenceDiagram, params: &ImageParams) -> PersistenceImage {
    let res = params.resolution;
    assert!(res >= 1, "resolution must be at least 1");
    assert!(params.sigma > 0.0, "sigma must be positive");
    assert!(params.cap > 0.0, "cap must be positive");

    let mut pixels = vec![0.0; res * res];
    let prepared = diagram.prepared(params.dims, params.cap);
    let width = params.cap / res as f64;
    let area = width * width;
    let two_var = 2.0 * params.sigma * params.sigma;
    let norm = area / (PI * two_var);
    let centres: Vec<f64> = (0..res).map(|i| (i as f64 + 0.5) * width).collect();

    for &(birth, death) in prepared.dim0.iter().chain(&prepared.dim1) {
        let pers = death - birth;
        let w = match params.weight {
            WeightRule::Linear => pers / params.cap,
            WeightRule::Uniform => 1.0,
        };
        if w == 0.0 {
            continue;
        }
        // Separable kernel: exp(-(dx^2 + dy^2)/2s^2) = gx * gy.
        let gx: Vec<f64> = centres.iter().map(|c| (-(c - birth).powi(2) / two_var).exp()).collect();
        let gy: Vec<f64> = centres.iter().map(|c| (-(c - pers).powi(2) / two_var).exp()).collect();
        for (row, &y) in gy.iter().enumerate() {
            if y == 0.0 {
                continue;
            }
            let scale = w * norm * y;
            for (col, &x) in gx.iter().enumerate() {
                pixels[row * res + col] += scale * x;
            }
        }
    }
    PersistenceImage {
        resolution: res,
        pixels,
        sigma: params.sigma,
        weight: params.weight,
    }
}

/// Writes one row per image: `graph_id,v0,...,v{P*P-1}`.
pub fn write_images_csv<W: Write>(mut w: W, images: &[(usize, PersistenceImage)]) -> std::io::Result<()> {
    let len = images.first().map_or(0, |(_, im)| im.pixels.len());
    write!(w, "graph_id")?;
    for i in 0..len {
        write!(w, ",v{i}")?;
    }
    writeln!(w)?;
    for (id, image) in images {
        write!(w, "{id}")?;
        for v in &image.pixels {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erf;

    fn single(birth: f64, death: f64) -> PersistenceDiagram {
        PersistenceDiagram {
            graph_id: 0,
            dim0: vec![(birth, death)],
            dim1: vec![],
        }
    }

    /// Exact Gaussian mass over [0, cap]^2 from the error function.
    fn gaussian_mass_in_grid(x: f64, y: f64, sigma: f64, cap: f64) -> f64 {
        let cdf = |t: f64, m: f64| 0.5 * (1.0 + erf((t - m) / (sigma * 2f64.sqrt())));
        (cdf(cap, x) - cdf(0.0, x)) * (cdf(cap, y) - cdf(0.0, y))
    }

    #[test]
    fn empty_diagram_gives_zero_image() {
        let im = persistence_image(&PersistenceDiagram::default(), &ImageParams::with_cap(10, 1.0));
        assert!(im.pixels.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn fifty_by_fifty() {
        let im = persistence_image(&single(0.1, 0.6), &ImageParams::with_cap(50, 1.0));
        assert_eq!(im.pixels.len(), 2500);
        assert!(im.pixels.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn narrow_kernel_concentrates_mass() {
        let (b, d, cap) = (0.31, 0.83, 1.0);
        let params = ImageParams {
            sigma: 0.03,
            ..ImageParams::with_cap(50, cap)
        };
        let im = persistence_image(&single(b, d), &params);
        let pers = d - b;
        let weight = pers / cap;
        let expected = weight * gaussian_mass_in_grid(b, pers, params.sigma, cap);
        let total = im.total_mass();
        assert!((total - weight).abs() / weight < 0.05, "{total} vs {weight}");
        assert!((total - expected).abs() / expected < 0.01);

        let argmax = im
            .pixels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let width = cap / 50.0;
        assert_eq!(argmax % 50, (b / width) as usize);
        assert_eq!(argmax / 50, (pers / width) as usize);
    }

    #[test]
    fn diagonal_points_vanish_under_linear_weight() {
        let im = persistence_image(&single(0.4, 0.4), &ImageParams::with_cap(8, 1.0));
        assert_eq!(im.total_mass(), 0.0);
        let uniform = ImageParams {
            weight: WeightRule::Uniform,
            ..ImageParams::with_cap(8, 1.0)
        };
        assert!(persistence_image(&single(0.4, 0.4), &uniform).total_mass() > 0.0);
    }

    #[test]
    fn essential_cycle_is_capped() {
        let d = PersistenceDiagram {
            graph_id: 0,
            dim0: vec![(0.0, f64::INFINITY)],
            dim1: vec![(0.5, f64::INFINITY)],
        };
        let params = ImageParams {
            sigma: 0.2,
            ..ImageParams::with_cap(20, 2.0)
        };
        let im = persistence_image(&d, &params);
        // Only the cycle (birth 0.5, persistence 1.5) contributes.
        assert!(im.total_mass() > 0.0);
        assert!(im.get(15, 5) > im.get(0, 0));
        assert!((im.total_mass() - 0.75).abs() < 0.05);
    }

    #[test]
    fn csv_layout() {
        let im = persistence_image(&single(0.0, 1.0), &ImageParams::with_cap(2, 1.0));
        let mut buf = Vec::new();
        write_images_csv(&mut buf, &[(4, im)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("graph_id,v0,v1,v2,v3"));
        assert!(lines.next().unwrap().starts_with("4,"));
    }
}
