use std::fmt;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::HierarchyError;

/// Outputs of a polarization map, each a weighted sum of the bilinear
/// entries `T_{r,r'}` of `a ⊗ b`, listed as `(r, r', weight)`.
pub type Weighting = Vec<Vec<(usize, usize, f64)>>;

/// A linear map `Π` on `V ⊗ V` given through its bilinear coefficients.
pub trait Polarization {
    fn weighting(&self, output_dim: usize, shape: Option<(usize, usize)>) -> Result<Weighting, HierarchyError>;

    /// `Π(a ⊗ b)`.
    fn apply(&self, a: &[f64], b: &[f64], shape: Option<(usize, usize)>) -> Result<Vec<f64>, HierarchyError> {
        let w = self.weighting(a.len(), shape)?;
        Ok(w.iter()
            .map(|out| out.iter().map(|&(r, rp, c)| c * a[r] * b[rp]).sum())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolarizationMap {
    /// Every entry of `a ⊗ b`.
    #[default]
    Identity,
    /// `Σ_r a_r b_r`.
    HilbertSchmidt,
    /// `aᵀb` for `ℓ × ℓ'` matrices, one output per `(j, k)`.
    MatrixProduct,
}

impl Polarization for PolarizationMap {
    fn weighting(&self, q: usize, shape: Option<(usize, usize)>) -> Result<Weighting, HierarchyError> {
        Ok(match self {
            PolarizationMap::Identity => (0..q)
                .flat_map(|r| (0..q).map(move |rp| vec![(r, rp, 1.0)]))
                .collect(),
            PolarizationMap::HilbertSchmidt => vec![(0..q).map(|r| (r, r, 1.0)).collect()],
            PolarizationMap::MatrixProduct => {
                let (rows, cols) = shape.ok_or(HierarchyError::ShapeRequired)?;
                if rows * cols != q {
                    return Err(HierarchyError::ShapeMismatch { rows, cols, outputs: q });
                }
                let mut out = Vec::with_capacity(cols * cols);
                for j in 0..cols {
                    for k in 0..cols {
                        out.push((0..rows).map(|i| (i * cols + j, i * cols + k, 1.0)).collect());
                    }
                }
                out
            }
        })
    }
}

impl fmt::Display for PolarizationMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolarizationMap::Identity => "id",
            PolarizationMap::HilbertSchmidt => "hs",
            PolarizationMap::MatrixProduct => "mp",
        })
    }
}

impl FromStr for PolarizationMap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "id" | "identity" => Ok(PolarizationMap::Identity),
            "hs" | "hilbert-schmidt" => Ok(PolarizationMap::HilbertSchmidt),
            "mp" | "matrix-product" => Ok(PolarizationMap::MatrixProduct),
            other => Err(format!("unknown polarization map {other:?} (expected id, hs or mp)")),
        }
    }
}

/// Samples random nonzero `a` and pairs `(a, b)` and checks that
/// `Π(a⊗a + b⊗b)` never vanishes. A randomized test, not a proof.
pub fn check_pi_soundness<P: Polarization + ?Sized>(
    pi: &P,
    output_dim: usize,
    shape: Option<(usize, usize)>,
    samples: usize,
    seed: u64,
) -> bool {
    if output_dim == 0 {
        return false;
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let draw = |rng: &mut StdRng| -> Vec<f64> {
        loop {
            // Sparse draws exercise maps that only see some coordinates.
            let density: f64 = rng.gen_range(0.1..=1.0);
            let v: Vec<f64> = (0..output_dim)
                .map(|_| if rng.gen_bool(density) { rng.gen_range(-1.0..1.0) } else { 0.0 })
                .collect();
            if v.iter().any(|x| *x != 0.0) {
                return v;
            }
        }
    };
    for k in 0..samples.max(1) {
        let a = draw(&mut rng);
        let b = if k % 2 == 0 { vec![0.0; output_dim] } else { draw(&mut rng) };
        let (Ok(aa), Ok(bb)) = (pi.apply(&a, &a, shape), pi.apply(&b, &b, shape)) else {
            return false;
        };
        let scale: f64 = a.iter().chain(&b).map(|x| x * x).sum();
        let norm: f64 = aa.iter().zip(&bb).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
        if !(norm > 1e-12 * scale) {
            return false;
        }
    }
    true
}
