//! Small planar-polygon predicates used for boundary checks.

type P = [f64; 2];

fn cross(o: P, a: P, b: P) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Shoelace signed area, positive for counterclockwise loops.
pub fn signed_area(pts: &[P]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn scale_of(pts: &[P]) -> f64 {
    pts.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max).max(1e-300)
}

/// Convex with either orientation; collinear runs allowed.
pub fn is_convex(pts: &[P]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    let tol = 1e-12 * scale_of(pts).powi(2);
    let (mut pos, mut neg) = (false, false);
    for i in 0..n {
        let c = cross(pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        pos |= c > tol;
        neg |= c < -tol;
    }
    !(pos && neg) && signed_area(pts).abs() > tol && winding_turns(pts) == 1
}

/// Number of full turns made by the edge directions (1 for a simple convex loop).
fn winding_turns(pts: &[P]) -> i64 {
    let n = pts.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b, c) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        let (u, v) = ([b[0] - a[0], b[1] - a[1]], [c[0] - b[0], c[1] - b[1]]);
        if u == [0.0, 0.0] || v == [0.0, 0.0] {
            continue;
        }
        total += (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
    }
    (total / std::f64::consts::TAU).round().abs() as i64
}

fn on_segment(p: P, a: P, b: P, tol: f64) -> bool {
    cross(a, b, p).abs() <= tol
        && p[0] >= a[0].min(b[0]) - tol
        && p[0] <= a[0].max(b[0]) + tol
        && p[1] >= a[1].min(b[1]) - tol
        && p[1] <= a[1].max(b[1]) + tol
}

/// Closed-segment intersection test.
pub fn segments_intersect(a: P, b: P, c: P, d: P) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d, 0.0))
        || (d2 == 0.0 && on_segment(b, c, d, 0.0))
        || (d3 == 0.0 && on_segment(c, a, b, 0.0))
        || (d4 == 0.0 && on_segment(d, a, b, 0.0))
}

/// No two non-adjacent edges meet and no vertex repeats.
pub fn is_simple(pts: &[P]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    // sort edges by min x to prune the pairwise test
    let mut order: Vec<usize> = (0..n).collect();
    let lo = |i: usize| pts[i][0].min(pts[(i + 1) % n][0]);
    let hi = |i: usize| pts[i][0].max(pts[(i + 1) % n][0]);
    order.sort_by(|&i, &j| lo(i).total_cmp(&lo(j)).then(i.cmp(&j)));
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            if lo(j) > hi(i) {
                break;
            }
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            let (a, b, c, d) = (pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]);
            if adjacent {
                // adjacent edges overlap only when they fold back along one line
                let (shared, p, q) = if (i + 1) % n == j { (b, a, d) } else { (a, b, c) };
                let dot = (p[0] - shared[0]) * (q[0] - shared[0]) + (p[1] - shared[1]) * (q[1] - shared[1]);
                if cross(shared, p, q) == 0.0 && dot > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Point inside or on the boundary of a simple polygon (either orientation).
pub fn contains_point(pts: &[P], p: P, tol: f64) -> bool {
    let n = pts.len();
    for i in 0..n {
        if on_segment(p, pts[i], pts[(i + 1) % n], tol) {
            return true;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Whether the segment `a–b` passes through the open axis-aligned box.
fn segment_enters_box(a: P, b: P, lo: P, hi: P) -> bool {
    // Liang–Barsky clipping against the open box
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = [b[0] - a[0], b[1] - a[1]];
    for k in 0..2 {
        if d[k] == 0.0 {
            if a[k] <= lo[k] || a[k] >= hi[k] {
                return false;
            }
        } else {
            let (mut ta, mut tb) = ((lo[k] - a[k]) / d[k], (hi[k] - a[k]) / d[k]);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
    }
    t0 < t1
}

/// Closed square `[x0, x0+s] × [y0, y0+s]` contained in the closed polygon.
pub fn contains_square(pts: &[P], corner: P, side: f64) -> bool {
    let tol = 1e-12 * side.max(scale_of(pts));
    let corners =
        [corner, [corner[0] + side, corner[1]], [corner[0] + side, corner[1] + side], [corner[0], corner[1] + side]];
    if !corners.iter().all(|&c| contains_point(pts, c, tol)) {
        return false;
    }
    let shrink = 1e-9 * side;
    let lo = [corner[0] + shrink, corner[1] + shrink];
    let hi = [corner[0] + side - shrink, corner[1] + side - shrink];
    let n = pts.len();
    !(0..n).any(|i| segment_enters_box(pts[i], pts[(i + 1) % n], lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQ: [P; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn square_predicates() {
        assert_eq!(signed_area(&SQ), 1.0);
        assert!(is_convex(&SQ));
        assert!(is_simple(&SQ));
        assert!(contains_point(&SQ, [0.5, 0.5], 0.0));
        assert!(contains_point(&SQ, [1.0, 0.5], 1e-12));
        assert!(!contains_point(&SQ, [1.5, 0.5], 1e-12));
        assert!(contains_square(&SQ, [0.0, 0.0], 1.0));
        assert!(contains_square(&SQ, [0.25, 0.25], 0.5));
        assert!(!contains_square(&SQ, [0.75, 0.25], 0.5));
    }

    #[test]
    fn l_shape_and_bowtie() {
        let l = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        assert!(is_simple(&l));
        assert!(!is_convex(&l));
        // square straddling the reflex corner has all corners inside but is not contained
        assert!(!contains_square(&l, [0.9, 0.9], 1.05));
        let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple(&bowtie));
        assert!(!is_convex(&bowtie));
    }

    #[test]
    fn doubly_wound_loop_is_not_convex() {
        let pts: Vec<P> = (0..10)
            .map(|k| {
                let th = 2.0 * std::f64::consts::TAU * k as f64 / 10.0;
                [th.cos(), th.sin()]
            })
            .collect();
        assert!(!is_convex(&pts));
        assert!(!is_simple(&pts));
    }
}
