use super::GrayImage;
use crate::{Error, Result};

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Monotone-chain convex hull, counter-clockwise, without collinear points.
pub fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Crops a binary image to the bounding box of the convex hull of its
/// foreground (value 0) pixels.
pub fn convex_hull_crop(img: &GrayImage) -> Result<GrayImage> {
    let mut points = Vec::new();
    for y in 0..img.height {
        for x in 0..img.width {
            if img.get(x, y) < 0.5 {
                points.push((x as i64, y as i64));
            }
        }
    }
    if points.len() < 3 {
        return Err(Error::NoTracingRegion(format!("{} foreground pixel(s)", points.len())));
    }
    let hull = convex_hull(&points);
    if hull.len() < 3 {
        return Err(Error::NoTracingRegion("foreground pixels are collinear".into()));
    }
    let x0 = hull.iter().map(|p| p.0).min().unwrap() as usize;
    let x1 = hull.iter().map(|p| p.0).max().unwrap() as usize;
    let y0 = hull.iter().map(|p| p.1).min().unwrap() as usize;
    let y1 = hull.iter().map(|p| p.1).max().unwrap() as usize;
    Ok(img.crop(x0, y0, x1, y1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_points(w: usize, h: usize, pts: &[(usize, usize)]) -> GrayImage {
        let mut img = GrayImage::filled(w, h, 1.0);
        for &(x, y) in pts {
            img.set(x, y, 0.0);
        }
        img
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let h = convex_hull(&[(0, 0), (2, 0), (2, 2), (0, 2), (1, 1), (1, 0)]);
        assert_eq!(h, vec![(0, 0), (2, 0), (2, 2), (0, 2)]);
    }

    #[test]
    fn rectangle_crops_to_itself() {
        let mut pts = Vec::new();
        for y in 5..=9 {
            for x in 3..=12 {
                pts.push((x, y));
            }
        }
        let img = with_points(20, 20, &pts);
        let out = convex_hull_crop(&img).unwrap();
        assert_eq!((out.width, out.height), (10, 5));
        assert!(out.pixels.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn known_extremes() {
        let img = with_points(64, 64, &[(2, 3), (40, 57), (10, 30), (35, 5), (20, 50)]);
        let out = convex_hull_crop(&img).unwrap();
        assert_eq!((out.width, out.height), (39, 55));
    }

    #[test]
    fn degenerate_foregrounds() {
        assert!(matches!(convex_hull_crop(&with_points(8, 8, &[(3, 3)])), Err(Error::NoTracingRegion(_))));
        let line = with_points(8, 8, &[(1, 1), (2, 2), (3, 3), (4, 4)]);
        assert!(matches!(convex_hull_crop(&line), Err(Error::NoTracingRegion(_))));
    }
}
