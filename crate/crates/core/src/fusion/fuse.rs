use super::{DepthField, FusionError};

const WEIGHT_EPS: f64 = 1e-8;

fn check_common_grid(fields: &[DepthField]) -> Result<(), FusionError> {
    let first = fields.first().ok_or(FusionError::NoFields)?;
    for f in &fields[1..] {
        if f.grid() != first.grid() {
            return Err(FusionError::GridMismatch(
                first.grid().width(),
                first.grid().height(),
                f.grid().width(),
                f.grid().height(),
            ));
        }
    }
    Ok(())
}

fn conf_at(field: &DepthField, i: usize) -> f64 {
    field.confidence().map_or(1.0, |c| c[i])
}

/// Masked per-pixel mean of depth (and confidence) across frames. The output
/// mask is the union of the input masks; the denominator clamps at 1 so
/// uncovered pixels stay at 0.
pub fn fuse_mean(fields: &[DepthField]) -> Result<DepthField, FusionError> {
    check_common_grid(fields)?;
    let grid = fields[0].grid();
    let n = grid.len();
    let mut depth = vec![0.0; n];
    let mut conf = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        let mut dsum = 0.0;
        let mut csum = 0.0;
        let mut msum = 0usize;
        for f in fields {
            if f.mask()[i] {
                dsum += f.depth()[i];
                csum += conf_at(f, i);
                msum += 1;
            }
        }
        let denom = msum.max(1) as f64;
        depth[i] = dsum / denom;
        conf[i] = csum / denom;
        mask[i] = msum >= 1;
    }
    Ok(DepthField::from_raw_unchecked(
        grid,
        depth,
        mask,
        Some(conf),
        None,
    ))
}

/// Per pixel, the minimum depth among masked frames. Confidence carries over
/// from the minimum-depth frame (maximum over exact ties, so the result does
/// not depend on frame order).
pub fn fuse_nearest(fields: &[DepthField]) -> Result<DepthField, FusionError> {
    check_common_grid(fields)?;
    let grid = fields[0].grid();
    let n = grid.len();
    let mut depth = vec![0.0; n];
    let mut conf = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut best_conf = 0.0f64;
        let mut any = false;
        for f in fields {
            if f.mask()[i] {
                let d = f.depth()[i];
                if d < best {
                    best = d;
                    best_conf = conf_at(f, i);
                } else if d == best {
                    best_conf = best_conf.max(conf_at(f, i));
                }
                any = true;
            }
        }
        if any {
            depth[i] = best;
            conf[i] = best_conf;
            mask[i] = true;
        }
    }
    Ok(DepthField::from_raw_unchecked(
        grid,
        depth,
        mask,
        Some(conf),
        None,
    ))
}

/// Confidence-weighted per-pixel mean:
/// `D = Σ M·C·D / max(ε, Σ M·C)` with `ε = 1e-8`. Pixels whose masked
/// confidences are all zero fall back to the unweighted mean. Fields without
/// a confidence channel weigh as 1.
pub fn fuse_weighted(fields: &[DepthField]) -> Result<DepthField, FusionError> {
    check_common_grid(fields)?;
    let grid = fields[0].grid();
    let n = grid.len();
    let mut depth = vec![0.0; n];
    let mut conf = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        let mut wd = 0.0;
        let mut wsum = 0.0;
        let mut dsum = 0.0;
        let mut csum = 0.0;
        let mut msum = 0usize;
        for f in fields {
            if f.mask()[i] {
                let c = conf_at(f, i);
                wd += c * f.depth()[i];
                wsum += c;
                dsum += f.depth()[i];
                csum += c;
                msum += 1;
            }
        }
        if msum >= 1 {
            depth[i] = if wsum > 0.0 {
                wd / wsum.max(WEIGHT_EPS)
            } else {
                dsum / msum as f64
            };
            conf[i] = csum / msum as f64;
            mask[i] = true;
        }
    }
    Ok(DepthField::from_raw_unchecked(
        grid,
        depth,
        mask,
        Some(conf),
        None,
    ))
}

/// Single-pass hole filling: a masked-out pixel with at least 5 of its 8
/// neighbors valid (longitude wraps, rows clip at the poles) receives the
/// mean of the valid neighbors; everything else is unchanged. Fills are
/// computed from the input state, so a large hole only gains one rim layer
/// per pass.
pub fn hole_fill(field: &DepthField) -> DepthField {
    let grid = field.grid();
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    let mut depth = field.depth().to_vec();
    let mut mask = field.mask().to_vec();
    let mut conf = field.confidence().map(|c| c.to_vec());
    let mut color = field.color().map(|c| c.to_vec());

    for row in 0..h {
        for col in 0..w {
            let idx = (row * w + col) as usize;
            if field.mask()[idx] {
                continue;
            }
            let mut cnt = 0usize;
            let mut dsum = 0.0;
            let mut csum = 0.0;
            let mut colsum = [0.0f64; 3];
            for dy in -1..=1isize {
                let r = row + dy;
                if r < 0 || r >= h {
                    continue;
                }
                for dx in -1..=1isize {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let c = (col + dx).rem_euclid(w);
                    let nidx = (r * w + c) as usize;
                    if field.mask()[nidx] {
                        cnt += 1;
                        dsum += field.depth()[nidx];
                        if let Some(cf) = field.confidence() {
                            csum += cf[nidx];
                        }
                        if let Some(cl) = field.color() {
                            for ch in 0..3 {
                                colsum[ch] += cl[nidx][ch];
                            }
                        }
                    }
                }
            }
            if cnt >= 5 {
                depth[idx] = dsum / cnt as f64;
                mask[idx] = true;
                if let Some(cf) = conf.as_mut() {
                    cf[idx] = csum / cnt as f64;
                }
                if let Some(cl) = color.as_mut() {
                    for ch in 0..3 {
                        cl[idx][ch] = colsum[ch] / cnt as f64;
                    }
                }
            }
        }
    }
    DepthField::from_raw_unchecked(grid, depth, mask, conf, color)
}
