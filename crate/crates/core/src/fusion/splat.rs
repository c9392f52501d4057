use super::{DepthField, FusionError, Pose};
use crate::geometry::{dir_to_erp, erp_to_dir, ErpGrid, UnitRay};
use nalgebra::Vector3;

/// One lifted surface sample.
#[derive(Debug, Clone, Copy)]
pub struct PointSample {
    /// Position in the common (world or reference) frame, meters.
    pub position: Vector3<f64>,
    pub color: Option<[f64; 3]>,
    pub confidence: Option<f64>,
    /// Index of the frame the sample came from.
    pub frame: usize,
}

/// Distance thresholds for the splat footprint sizes {7, 5, 3, 1}.
///
/// `d ≤ thresholds[0] → 7`, `d ≤ thresholds[1] → 5`, `d ≤ thresholds[2] → 3`,
/// larger distances splat as a single pixel. Near samples get large
/// footprints to cover resampling gaps; beyond a couple of meters one ERP
/// pixel already over-covers a source pixel at these resolutions, and wider
/// footprints would only smear the z-buffer minimum across neighbors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintTable {
    pub thresholds: [f64; 3],
}

impl Default for FootprintTable {
    fn default() -> Self {
        Self {
            thresholds: [0.5, 1.0, 2.0],
        }
    }
}

impl FootprintTable {
    /// Window size for a sample at distance `d` (meters), one of {1, 3, 5, 7}.
    pub fn footprint_size(&self, d: f64) -> Result<usize, FusionError> {
        if !(d > 0.0) {
            return Err(FusionError::NonPositiveDistance(d));
        }
        let [near, mid, far] = self.thresholds;
        Ok(if d <= near {
            7
        } else if d <= mid {
            5
        } else if d <= far {
            3
        } else {
            1
        })
    }
}

/// Lifts every masked pixel of a depth field to a world-frame point:
/// `p = R·(D·d) + t` with `d` the pixel-center ray.
pub fn lift_to_world(field: &DepthField, pose: &Pose, frame: usize) -> Vec<PointSample> {
    let grid = field.grid();
    let mut points = Vec::with_capacity(field.valid_count());
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let i = row * grid.width() + col;
            if !field.mask()[i] {
                continue;
            }
            let (x, y) = grid.pixel_center(col, row);
            let ray = erp_to_dir(x, y, grid).expect("pixel centers are in range");
            let p = pose.apply(ray.as_vector() * field.depth()[i]);
            points.push(PointSample {
                position: p,
                color: field.color().map(|c| c[i]),
                confidence: field.confidence().map(|c| c[i]),
                frame,
            });
        }
    }
    points
}

/// Re-expresses points in another frame (e.g. apply the inverse pose of the
/// fusion reference frame).
pub fn transform_points(points: &mut [PointSample], pose: &Pose) {
    for p in points {
        p.position = pose.apply(p.position);
    }
}

/// Splats points onto an ERP grid with a distance-aware z-buffer.
///
/// Each sample projects through [`dir_to_erp`] and writes its distance
/// `d = ‖p‖` to a `k(d)×k(d)` window around the landing pixel (longitude
/// wraps, latitude rows outside the grid are clipped). Per pixel the minimum
/// distance wins; color and confidence are averaged over all writes; the
/// mask marks pixels that received at least one write.
pub fn splat_to_erp(
    points: &[PointSample],
    grid: ErpGrid,
    table: &FootprintTable,
) -> Result<DepthField, FusionError> {
    let (w, h) = (grid.width(), grid.height());
    let mut depth = vec![f64::INFINITY; w * h];
    let mut count = vec![0u32; w * h];
    let has_color = points.iter().any(|p| p.color.is_some());
    let has_conf = points.iter().any(|p| p.confidence.is_some());
    let mut color_sum = if has_color {
        vec![[0.0f64; 3]; w * h]
    } else {
        Vec::new()
    };
    let mut conf_sum = if has_conf { vec![0.0f64; w * h] } else { Vec::new() };

    for p in points {
        let d = p.position.norm();
        if !d.is_finite() || d <= 0.0 {
            continue;
        }
        let ray = UnitRay::from_vector(p.position);
        let (x, y) = dir_to_erp(ray, grid);
        let ix = (x.floor() as isize).rem_euclid(w as isize);
        let iy = (y.floor() as isize).min(h as isize - 1).max(0);
        let k = table.footprint_size(d)? as isize;
        let r = (k - 1) / 2;
        for dy in -r..=r {
            let row = iy + dy;
            if row < 0 || row >= h as isize {
                continue;
            }
            for dx in -r..=r {
                let col = (ix + dx).rem_euclid(w as isize);
                let idx = row as usize * w + col as usize;
                if d < depth[idx] {
                    depth[idx] = d;
                }
                count[idx] += 1;
                if has_color {
                    let c = p.color.unwrap_or([0.0; 3]);
                    for ch in 0..3 {
                        color_sum[idx][ch] += c[ch];
                    }
                }
                if has_conf {
                    conf_sum[idx] += p.confidence.unwrap_or(0.0);
                }
            }
        }
    }

    let mask: Vec<bool> = count.iter().map(|&c| c > 0).collect();
    for (d, &m) in depth.iter_mut().zip(&mask) {
        if !m {
            *d = 0.0;
        }
    }
    let confidence = has_conf.then(|| {
        conf_sum
            .iter()
            .zip(&count)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect()
    });
    let color = has_color.then(|| {
        color_sum
            .iter()
            .zip(&count)
            .map(|(&s, &c)| {
                if c > 0 {
                    [s[0] / c as f64, s[1] / c as f64, s[2] / c as f64]
                } else {
                    [0.0; 3]
                }
            })
            .collect()
    });
    Ok(DepthField::from_raw_unchecked(
        grid, depth, mask, confidence, color,
    ))
}
