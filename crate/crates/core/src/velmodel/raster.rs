use super::hull::ConvexPolygon;
use super::Grid2D;
use crate::field::Mask;

/// Mark every cell whose center lies inside at least one polygon.
///
/// Scanline fill: for each row intersecting a polygon's bounding box, the
/// polygon's horizontal span at the row's center depth selects the columns.
pub fn rasterize_union(polygons: &[ConvexPolygon], grid: &Grid2D) -> Mask {
    let mut mask = Mask::filled(grid.nz, grid.nx, false);
    for poly in polygons {
        let (_, _, z_min, z_max) = poly.bounds();
        let j_lo = floor_index(z_min / grid.dz - 0.5, grid.nz);
        let j_hi = floor_index(z_max / grid.dz - 0.5, grid.nz);
        for j in j_lo.saturating_sub(1)..=(j_hi + 1).min(grid.nz - 1) {
            let zc = grid.z_center(j);
            let Some((x_lo, x_hi)) = poly.span_at(zc) else {
                continue;
            };
            let i_lo = floor_index(x_lo / grid.dx - 0.5, grid.nx);
            let i_hi = floor_index(x_hi / grid.dx - 0.5, grid.nx);
            // Index estimates can be off by one after rounding; test each candidate exactly.
            for i in i_lo.saturating_sub(1)..=(i_hi + 1).min(grid.nx - 1) {
                let xc = grid.x_center(i);
                if xc >= x_lo && xc <= x_hi {
                    mask[(j, i)] = true;
                }
            }
        }
    }
    mask
}

fn floor_index(v: f64, n: usize) -> usize {
    if v <= 0.0 {
        0
    } else {
        (libm::floor(v) as usize).min(n - 1)
    }
}
