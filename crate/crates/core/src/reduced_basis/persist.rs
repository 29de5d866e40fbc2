use std::fs;
use std::path::Path;

use super::{n_generators, n_pairs, ReducedBasis};
use crate::error::{Error, Result};
use crate::model_full::l2_inner;

pub const FORMAT_VERSION: u32 = 1;

/// Orthonormality tolerance checked on load.
const ORTHONORMALITY_TOLERANCE: f64 = 1e-10;

impl ReducedBasis {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rb: ReducedBasis = serde_json::from_str(text)?;
        rb.validate()?;
        Ok(rb)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        ReducedBasis::from_json(&fs::read_to_string(path)?)
    }

    /// Structural and orthonormality checks run before a loaded basis is used.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BasisFormat(m));
        if self.format_version != FORMAT_VERSION {
            return bad(format!("unsupported format version {}", self.format_version));
        }
        let n = self.dim();
        let len = self.disc.n_nodes();
        if n == 0 {
            return bad("basis has no modes".into());
        }
        if self.lift_profile.len() != len || self.modes.iter().any(|m| m.len() != len) {
            return bad("mode length does not match the grid".into());
        }
        let ops = &self.operators;
        let sizes = [
            (ops.stiffness.len(), n * n),
            (ops.stiffness_eigenvalues.len(), n),
            (ops.stiffness_eigenvectors.len(), n * n),
            (ops.forcing.len(), n),
            (ops.lift_diffusion.len(), n),
            (ops.lift_convection.len(), n),
            (ops.lift_self_convection.len(), n),
            (ops.mode_convection.len(), n * n),
            (ops.cross_convection.len(), n * n),
            (ops.quadratic_convection.len(), n * n_pairs(n)),
            (ops.output_weights.len(), n),
            (self.bound.generator_norms.len(), n_generators(n)),
            (self.bound.laplacian_spectrum.len(), self.disc.n_space() - 1),
            (self.bound.residual_modes.len(), (self.disc.n_space() - 1) * n_generators(n)),
            (self.bound.mode_sup.len(), n),
        ];
        if sizes.iter().any(|(got, want)| got != want) {
            return bad("operator dimensions are inconsistent".into());
        }
        for (i, mi) in self.modes.iter().enumerate() {
            if mi[0] != 0.0 || mi[len - 1] != 0.0 {
                return bad(format!("mode {i} does not vanish on the boundary"));
            }
            for (j, mj) in self.modes.iter().enumerate().take(i + 1) {
                let g = l2_inner(mi, mj, &self.disc);
                let want = if i == j { 1.0 } else { 0.0 };
                if (g - want).abs() > ORTHONORMALITY_TOLERANCE {
                    return bad(format!("modes {i} and {j} are not orthonormal (inner product {g})"));
                }
            }
        }
        Ok(())
    }
}
