use super::FusionError;
use crate::geometry::ErpGrid;

/// Per-pixel depth on an ERP grid with a validity mask, optional confidence
/// in [0, 1], and optional RGB color.
///
/// Invariants: `depth > 0` wherever `mask` is set; masked-out pixels carry
/// depth 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthField {
    grid: ErpGrid,
    depth: Vec<f64>,
    mask: Vec<bool>,
    confidence: Option<Vec<f64>>,
    color: Option<Vec<[f64; 3]>>,
}

impl DepthField {
    pub fn new(
        grid: ErpGrid,
        depth: Vec<f64>,
        mask: Vec<bool>,
        confidence: Option<Vec<f64>>,
    ) -> Result<Self, FusionError> {
        if depth.len() != grid.len() || mask.len() != grid.len() {
            return Err(FusionError::BadField(format!(
                "buffer length {} / {} does not match grid {}x{}",
                depth.len(),
                mask.len(),
                grid.width(),
                grid.height()
            )));
        }
        if let Some(c) = &confidence {
            if c.len() != grid.len() {
                return Err(FusionError::BadField("confidence length mismatch".into()));
            }
        }
        for i in 0..depth.len() {
            if mask[i] {
                if !(depth[i] > 0.0 && depth[i].is_finite()) {
                    return Err(FusionError::BadField(format!(
                        "masked pixel {i} has non-positive depth {}",
                        depth[i]
                    )));
                }
            } else if depth[i] != 0.0 {
                return Err(FusionError::BadField(format!(
                    "masked-out pixel {i} must carry depth 0, got {}",
                    depth[i]
                )));
            }
        }
        Ok(Self {
            grid,
            depth,
            mask,
            confidence,
            color: None,
        })
    }

    pub fn with_color(mut self, color: Vec<[f64; 3]>) -> Result<Self, FusionError> {
        if color.len() != self.grid.len() {
            return Err(FusionError::BadField("color length mismatch".into()));
        }
        self.color = Some(color);
        Ok(self)
    }

    pub fn grid(&self) -> ErpGrid {
        self.grid
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn confidence(&self) -> Option<&[f64]> {
        self.confidence.as_deref()
    }

    pub fn color(&self) -> Option<&[[f64; 3]]> {
        self.color.as_deref()
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub(crate) fn from_raw_unchecked(
        grid: ErpGrid,
        depth: Vec<f64>,
        mask: Vec<bool>,
        confidence: Option<Vec<f64>>,
        color: Option<Vec<[f64; 3]>>,
    ) -> Self {
        Self {
            grid,
            depth,
            mask,
            confidence,
            color,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_invariants_are_enforced() {
        let grid = ErpGrid::new(4, 2).unwrap();
        // valid
        assert!(DepthField::new(
            grid,
            vec![1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0, 0.0],
            vec![true, false, true, false, true, false, true, false],
            None
        )
        .is_ok());
        // masked pixel with zero depth
        assert!(DepthField::new(grid, vec![0.0; 8], vec![true; 8], None).is_err());
        // unmasked pixel with nonzero depth
        assert!(DepthField::new(grid, vec![1.0; 8], vec![false; 8], None).is_err());
        // bad length
        assert!(DepthField::new(grid, vec![1.0; 7], vec![true; 8], None).is_err());
    }
}
