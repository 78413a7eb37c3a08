//! Empirical BMO, reverse Hölder and A∞ statistics of positive per-element
//! weights (typically Jacobian determinants) over dyadic squares.
//!
//! All means are area-weighted element sums over the elements assigned to a
//! square. Under-resolved squares never enter a supremum.

use std::io::{self, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DyadicSquare, DyadicSquareSet, TriMesh};
use crate::homogenization::CellMap;

/// Which resolved squares take part in a supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum SquareScope {
    /// Squares inside the domain.
    #[default]
    Inside,
    /// Squares whose concentric double is inside the domain.
    DoubleInside,
}

impl SquareScope {
    pub fn admits(&self, sq: &DyadicSquare) -> bool {
        !sq.under_resolved
            && match self {
                SquareScope::Inside => sq.inside,
                SquareScope::DoubleInside => sq.double_inside,
            }
    }
}

fn check_weight(mesh: &TriMesh, w: &[f64]) -> Result<()> {
    if w.len() != mesh.n_triangles() {
        return Err(Error::InvalidInput(format!("{} weights for {} elements", w.len(), mesh.n_triangles())));
    }
    match w.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        Some((element, &value)) => Err(Error::NonPositiveWeight { element, value }),
        None => Ok(()),
    }
}

/// Area-weighted mean of `f(w)` over a square's elements, and the square's area.
fn square_mean(mesh: &TriMesh, sq: &DyadicSquare, w: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64) {
    let geo = mesh.geometry();
    let (s, a) = sq.elements.iter().fold((0.0, 0.0), |(s, a), &t| {
        let area = geo[t].area.abs();
        (s + area * f(w[t]), a + area)
    });
    (s / a, a)
}

fn log_oscillation(mesh: &TriMesh, sq: &DyadicSquare, w: &[f64]) -> f64 {
    let (mean_log, _) = square_mean(mesh, sq, w, f64::ln);
    square_mean(mesh, sq, w, |v| (v.ln() - mean_log).abs()).0
}

/// `sup_Q (1/|Q|) ∫_Q |log w − (log w)_Q|` over admissible squares.
pub fn bmo_norm(mesh: &TriMesh, w: &[f64], squares: &DyadicSquareSet) -> Result<f64> {
    check_weight(mesh, w)?;
    Ok(squares
        .squares
        .iter()
        .filter(|sq| SquareScope::Inside.admits(sq))
        .map(|sq| log_oscillation(mesh, sq, w))
        .fold(0.0, f64::max))
}

/// `sup_Q (w^p)_Q^{1/p} / (w)_Q` over the squares admitted by `scope`.
pub fn reverse_holder_constant(
    mesh: &TriMesh,
    w: &[f64],
    squares: &DyadicSquareSet,
    exponent: f64,
    scope: SquareScope,
) -> Result<f64> {
    check_weight(mesh, w)?;
    if !(exponent > 1.0 && exponent.is_finite()) {
        return Err(Error::InvalidInput(format!("exponent {exponent} must exceed 1")));
    }
    let admitted: Vec<&DyadicSquare> = squares.squares.iter().filter(|sq| scope.admits(sq)).collect();
    if admitted.is_empty() {
        return Err(Error::InvalidInput("no admissible square".into()));
    }
    Ok(admitted
        .into_iter()
        .map(|sq| {
            let (mean, _) = square_mean(mesh, sq, w, |v| v);
            let (mean_p, _) = square_mean(mesh, sq, w, |v| v.powf(exponent));
            mean_p.powf(1.0 / exponent) / mean
        })
        .fold(1.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareStats {
    pub id: usize,
    pub level: u32,
    pub area: f64,
    pub mean: f64,
    pub mean_square: f64,
    /// `(w^{1+θ})_Q` for each θ of the table.
    pub mean_powers: Vec<f64>,
    pub log_oscillation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareStatsTable {
    pub thetas: Vec<f64>,
    pub rows: Vec<SquareStats>,
}

impl SquareStatsTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "id,level,area,mean,mean_square")?;
        for theta in &self.thetas {
            write!(out, ",mean_pow_{theta}")?;
        }
        writeln!(out, ",log_oscillation")?;
        for r in &self.rows {
            write!(out, "{},{},{:e},{:e},{:e}", r.id, r.level, r.area, r.mean, r.mean_square)?;
            for m in &r.mean_powers {
                write!(out, ",{m:e}")?;
            }
            writeln!(out, ",{:e}", r.log_oscillation)?;
        }
        Ok(())
    }
}

/// Moments of `w` on every admissible square.
pub fn square_stats(mesh: &TriMesh, w: &[f64], squares: &DyadicSquareSet, thetas: &[f64]) -> Result<SquareStatsTable> {
    check_weight(mesh, w)?;
    let rows = squares
        .squares
        .iter()
        .filter(|sq| SquareScope::Inside.admits(sq))
        .map(|sq| {
            let (mean, area) = square_mean(mesh, sq, w, |v| v);
            SquareStats {
                id: sq.id,
                level: sq.level,
                area,
                mean,
                mean_square: square_mean(mesh, sq, w, |v| v * v).0,
                mean_powers: thetas.iter().map(|t| square_mean(mesh, sq, w, |v| v.powf(1.0 + t)).0).collect(),
                log_oscillation: log_oscillation(mesh, sq, w),
            }
        })
        .collect();
    Ok(SquareStatsTable { thetas: thetas.to_vec(), rows })
}

/// One sampled pair `E ⊂ P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetSample {
    pub square: usize,
    /// `|E| / |P|`.
    pub area_fraction: f64,
    /// `∫_E w / ∫_P w`.
    pub weight_fraction: f64,
}

/// Unions of whole elements at prescribed area fractions of each square:
/// the heaviest and lightest elements first, plus random collections.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSampler {
    pub fractions: Vec<f64>,
    pub random_per_fraction: usize,
    pub include_extremes: bool,
    pub seed: u64,
}

impl Default for SubsetSampler {
    fn default() -> Self {
        SubsetSampler {
            fractions: vec![1.0 / 16.0, 1.0 / 8.0, 0.25, 0.5, 0.75],
            random_per_fraction: 4,
            include_extremes: true,
            seed: 0,
        }
    }
}

impl SubsetSampler {
    fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() || (!self.include_extremes && self.random_per_fraction == 0) {
            return Err(Error::InvalidInput("subset sampler produces no subsets".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::InvalidInput(format!("area fraction {f} outside (0, 1]")));
        }
        Ok(())
    }

    /// Smallest prefix of `order` whose area reaches `fraction·|P|`.
    fn prefix<'a>(mesh: &TriMesh, order: &'a [usize], target: f64) -> &'a [usize] {
        let geo = mesh.geometry();
        let mut acc = 0.0;
        for (k, &t) in order.iter().enumerate() {
            acc += geo[t].area.abs();
            if acc >= target * (1.0 - 1e-12) {
                return &order[..=k];
            }
        }
        order
    }

    pub fn sample(&self, mesh: &TriMesh, w: &[f64], squares: &DyadicSquareSet) -> Result<Vec<SubsetSample>> {
        self.validate()?;
        check_weight(mesh, w)?;
        let geo = mesh.geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for sq in squares.squares.iter().filter(|sq| SquareScope::Inside.admits(sq)) {
            let area_p: f64 = sq.elements.iter().map(|&t| geo[t].area.abs()).sum();
            let mass_p: f64 = sq.elements.iter().map(|&t| geo[t].area.abs() * w[t]).sum();
            let mut record = |e: &[usize]| {
                let area: f64 = e.iter().map(|&t| geo[t].area.abs()).sum();
                let mass: f64 = e.iter().map(|&t| geo[t].area.abs() * w[t]).sum();
                out.push(SubsetSample { square: sq.id, area_fraction: area / area_p, weight_fraction: mass / mass_p });
            };
            let mut ascending = sq.elements.clone();
            ascending.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
            let descending: Vec<usize> = ascending.iter().rev().copied().collect();
            let mut shuffled = sq.elements.clone();
            for &f in &self.fractions {
                if self.include_extremes {
                    record(Self::prefix(mesh, &descending, f * area_p));
                    record(Self::prefix(mesh, &ascending, f * area_p));
                }
                for _ in 0..self.random_per_fraction {
                    shuffled.shuffle(&mut rng);
                    record(Self::prefix(mesh, &shuffled, f * area_p));
                }
            }
            record(&sq.elements);
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("no admissible square to sample".into()));
        }
        Ok(out)
    }
}

/// `ratio ≤ C t^δ` (upper) and `ratio ≥ M t^η` (lower) for all samples, with
/// `t = |E|/|P|`. Empirical constants, not derived ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub c: f64,
    pub delta: f64,
    pub m: f64,
    pub eta: f64,
    /// Every sample lies between the two envelopes (checked after the fit).
    pub bracketed: bool,
    pub samples: usize,
}

impl EnvelopeFit {
    pub fn upper(&self, t: f64) -> f64 {
        self.c * t.powf(self.delta)
    }

    pub fn lower(&self, t: f64) -> f64 {
        self.m * t.powf(self.eta)
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Monotone-chain hull over points sorted by x; `upper` keeps right turns.
fn hull(points: &[(f64, f64)], upper: bool) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::new();
    for &p in points {
        while h.len() >= 2 {
            let c = cross(h[h.len() - 2], h[h.len() - 1], p);
            if (upper && c >= 0.0) || (!upper && c <= 0.0) {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    h
}

/// Line of the hull segment spanning `x0`: `(slope, intercept)`.
fn tangent_at(h: &[(f64, f64)], x0: f64) -> (f64, f64) {
    let k = h.windows(2).position(|s| x0 <= s[1].0).unwrap_or(h.len() - 2);
    let (a, b) = (h[k], h[k + 1]);
    let slope = (b.1 - a.1) / (b.0 - a.0);
    (slope, a.1 - slope * a.0)
}

/// Fits both envelopes in `(log t, log ratio)` coordinates: the lines of the
/// upper and lower convex hulls at the mean of `log t`.
pub fn fit_envelopes(samples: &[SubsetSample]) -> Result<EnvelopeFit> {
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.area_fraction > 0.0 && s.weight_fraction > 0.0)
        .map(|s| (s.area_fraction.ln(), s.weight_fraction.ln()))
        .collect();
    if pts.is_empty() {
        return Err(Error::InvalidInput("no nonempty subset sampled".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let x0 = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    // one point per abscissa for each hull: the extreme one
    let mut top: Vec<(f64, f64)> = Vec::new();
    let mut bottom: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        match top.last_mut() {
            Some(q) if q.0 == p.0 => q.1 = q.1.max(p.1),
            _ => top.push(p),
        }
        match bottom.last_mut() {
            Some(q) if q.0 == p.0 => q.1 = q.1.min(p.1),
            _ => bottom.push(p),
        }
    }
    if top.len() < 2 {
        return Err(Error::InvalidInput("subsets sampled at a single area fraction".into()));
    }
    let (delta, log_c) = tangent_at(&hull(&top, true), x0);
    let (eta, log_m) = tangent_at(&hull(&bottom, false), x0);
    let tol = 1e-9;
    let bracketed = pts.iter().all(|&(x, y)| y <= log_c + delta * x + tol && y >= log_m + eta * x - tol);
    debug_assert!(bracketed, "envelope fit does not bracket its samples");
    Ok(EnvelopeFit { c: log_c.exp(), delta, m: log_m.exp(), eta, bracketed, samples: pts.len() })
}

/// Samples subsets with `sampler` and fits both envelopes.
pub fn ainfty_probe(
    mesh: &TriMesh,
    w: &[f64],
    squares: &DyadicSquareSet,
    sampler: &SubsetSampler,
) -> Result<EnvelopeFit> {
    fit_envelopes(&sampler.sample(mesh, w, squares)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantitativeCheck {
    /// `∫_E det DU^A / det A`.
    pub lhs: f64,
    /// `(|E|/|P|)^η ∫_P det DU^A / det A`.
    pub rhs_shape: f64,
    pub area_fraction: f64,
    /// `lhs` lies between `M·rhs_shape` and `C (|E|/|P|)^δ ∫_P`.
    pub within_envelope: bool,
}

/// Compares `|U^A(E)|/|det A|` with the fitted power laws on one pair `E ⊂ P`.
pub fn quantitative_jacobian_check(
    cell: &CellMap,
    subset: &[usize],
    square: &DyadicSquare,
    fit: &EnvelopeFit,
) -> Result<QuantitativeCheck> {
    let det_a = cell.a.det();
    if det_a == 0.0 {
        return Err(Error::InvalidInput("A is singular".into()));
    }
    if subset.is_empty() {
        return Err(Error::InvalidInput("empty subset".into()));
    }
    let mut in_square = vec![false; cell.map.det_du.len()];
    for &t in &square.elements {
        in_square[t] = true;
    }
    if let Some(&t) = subset.iter().find(|&&t| t >= in_square.len() || !in_square[t]) {
        return Err(Error::InvalidInput(format!("element {t} is not in the square")));
    }
    let geo = cell.map.mesh().geometry();
    let integral = |e: &[usize]| e.iter().map(|&t| cell.map.det_du[t] * geo[t].area).sum::<f64>() / det_a;
    let area = |e: &[usize]| e.iter().map(|&t| geo[t].area).sum::<f64>();
    let t = area(subset) / area(&square.elements);
    let whole = integral(&square.elements);
    let lhs = integral(subset);
    let rhs_shape = t.powf(fit.eta) * whole;
    let tol = 1e-9 * whole.abs();
    let within_envelope = lhs >= fit.m * rhs_shape - tol && lhs <= fit.upper(t) * whole + tol;
    Ok(QuantitativeCheck { lhs, rhs_shape, area_fraction: t, within_envelope })
}

/// Per-element gradients of one solve.
#[derive(Debug, Clone)]
pub struct GradientSample {
    pub resolution: usize,
    pub mesh: Arc<TriMesh>,
    pub gradients: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityRow {
    pub resolution: usize,
    pub p: f64,
    /// `((1/|D'|) ∫_{D'} |∇u|^p)^{1/p}` on the interior subdomain `D'`.
    pub norm: f64,
    pub below_p_sup: bool,
}

/// Fraction of the bounding box removed on each side for the interior subdomain.
pub const INTERIOR_MARGIN: f64 = 0.125;

/// Area-normalized interior `L^p` norms of `|∇u|` for each sample and `p`.
pub fn higher_integrability_probe(samples: &[GradientSample], p_list: &[f64], p_sup: f64) -> Vec<IntegrabilityRow> {
    let mut rows = Vec::with_capacity(samples.len() * p_list.len());
    for s in samples {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in s.mesh.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let inside = |b: [f64; 2]| {
            (0..2).all(|k| {
                let m = INTERIOR_MARGIN * (hi[k] - lo[k]);
                b[k] > lo[k] + m && b[k] < hi[k] - m
            })
        };
        let interior: Vec<(f64, f64)> = s
            .mesh
            .geometry()
            .iter()
            .zip(&s.gradients)
            .filter(|(g, _)| inside(g.barycenter))
            .map(|(g, d)| (g.area.abs(), d[0].hypot(d[1])))
            .collect();
        let total: f64 = interior.iter().map(|x| x.0).sum();
        for &p in p_list {
            let integral: f64 = interior.iter().map(|&(a, n)| a * n.powf(p)).sum();
            rows.push(IntegrabilityRow {
                resolution: s.resolution,
                p,
                norm: (integral / total).powf(1.0 / p),
                below_p_sup: p < p_sup,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mesh, dyadic_squares, Domain};
    use proptest::prelude::*;

    fn square(n: usize) -> TriMesh {
        build_mesh(Domain::UnitSquare, n).unwrap()
    }

    fn two_value(mesh: &TriMesh, low: f64, high: f64) -> Vec<f64> {
        mesh.geometry().iter().map(|g| if g.barycenter[0] < 0.5 { low } else { high }).collect()
    }

    #[test]
    fn constant_weight() {
        let mesh = square(8);
        let set = dyadic_squares(&mesh, 2);
        let w = vec![3.0; mesh.n_triangles()];
        assert!(bmo_norm(&mesh, &w, &set).unwrap() < 1e-14);
        assert!((reverse_holder_constant(&mesh, &w, &set, 2.0, SquareScope::Inside).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_value_closed_forms() {
        let mesh = square(8);
        let set = dyadic_squares(&mesh, 0);
        let e = std::f64::consts::E;
        let bmo = bmo_norm(&mesh, &two_value(&mesh, 1.0, e), &set).unwrap();
        assert!((bmo - 0.5).abs() < 1e-12);
        let rh = reverse_holder_constant(&mesh, &two_value(&mesh, 1.0, 3.0), &set, 2.0, SquareScope::Inside).unwrap();
        assert!((rh - 5f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_weight_is_located() {
        let mesh = square(4);
        let set = dyadic_squares(&mesh, 1);
        let mut w = vec![1.0; mesh.n_triangles()];
        w[7] = -0.5;
        assert_eq!(bmo_norm(&mesh, &w, &set), Err(Error::NonPositiveWeight { element: 7, value: -0.5 }));
    }

    #[test]
    fn double_inside_scope_excludes_top_square() {
        let mesh = square(8);
        let set = dyadic_squares(&mesh, 0);
        let w = two_value(&mesh, 1.0, 3.0);
        assert!(reverse_holder_constant(&mesh, &w, &set, 2.0, SquareScope::DoubleInside).is_err());
    }

    #[test]
    fn unit_weight_envelope() {
        let mesh = square(16);
        let set = dyadic_squares(&mesh, 2);
        let w = vec![1.0; mesh.n_triangles()];
        let fit = ainfty_probe(&mesh, &w, &set, &SubsetSampler::default()).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-12 && (fit.delta - 1.0).abs() < 1e-12);
        assert!((fit.m - 1.0).abs() < 1e-12 && (fit.eta - 1.0).abs() < 1e-12);
        assert!(fit.bracketed);
    }

    #[test]
    fn degenerate_sampler_rejected() {
        let mesh = square(8);
        let set = dyadic_squares(&mesh, 1);
        let w = vec![1.0; mesh.n_triangles()];
        let empty = SubsetSampler { fractions: vec![], ..SubsetSampler::default() };
        assert!(empty.sample(&mesh, &w, &set).is_err());
        let none = SubsetSampler { random_per_fraction: 0, include_extremes: false, ..SubsetSampler::default() };
        assert!(none.sample(&mesh, &w, &set).is_err());
    }

    /// Extreme ratios of a half-1, half-3 weight at area fraction `t`.
    fn two_value_extremes(t: f64) -> (f64, f64) {
        let max = if t <= 0.5 { 1.5 * t } else { 0.5 * (1.0 + t) };
        let min = if t <= 0.5 { 0.5 * t } else { 0.5 * (3.0 * t - 1.0) };
        (min, max)
    }

    #[test]
    fn two_value_extremes_are_sampled_exactly() {
        let mesh = square(16);
        let set = dyadic_squares(&mesh, 0);
        let w = two_value(&mesh, 1.0, 3.0);
        let sampler = SubsetSampler { random_per_fraction: 0, ..SubsetSampler::default() };
        let samples = sampler.sample(&mesh, &w, &set).unwrap();
        for s in &samples {
            let (min, max) = two_value_extremes(s.area_fraction);
            assert!(s.weight_fraction >= min - 1e-12 && s.weight_fraction <= max + 1e-12);
        }
        for f in &sampler.fractions {
            let (min, max) = two_value_extremes(*f);
            let hit = |target: f64| samples.iter().any(|s| (s.weight_fraction - target).abs() < 1e-12);
            assert!(hit(min) && hit(max), "fraction {f}");
        }
    }

    /// Brute-force envelope: among lines through two sample points lying above
    /// (or below) every sample, the one closest to the cloud at `x0`.
    fn brute_envelope(pts: &[(f64, f64)], upper: bool) -> (f64, f64) {
        let x0 = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let mut best: Option<(f64, f64, f64)> = None;
        for a in pts {
            for b in pts {
                if b.0 <= a.0 {
                    continue;
                }
                let slope = (b.1 - a.1) / (b.0 - a.0);
                let icpt = a.1 - slope * a.0;
                let ok = pts.iter().all(|p| {
                    let y = icpt + slope * p.0;
                    if upper {
                        p.1 <= y + 1e-12
                    } else {
                        p.1 >= y - 1e-12
                    }
                });
                if ok {
                    let at = icpt + slope * x0;
                    let better = match best {
                        None => true,
                        Some((_, _, v)) => (upper && at < v - 1e-13) || (!upper && at > v + 1e-13),
                    };
                    if better {
                        best = Some((slope, icpt, at));
                    }
                }
            }
        }
        let (s, i, _) = best.unwrap();
        (s, i)
    }

    #[test]
    fn two_value_envelope_matches_brute_force() {
        let mesh = square(16);
        let set = dyadic_squares(&mesh, 0);
        let w = two_value(&mesh, 1.0, 3.0);
        let samples = SubsetSampler::default().sample(&mesh, &w, &set).unwrap();
        let fit = fit_envelopes(&samples).unwrap();
        let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.area_fraction.ln(), s.weight_fraction.ln())).collect();
        let (du, cu) = brute_envelope(&pts, true);
        let (dl, cl) = brute_envelope(&pts, false);
        assert!((fit.delta - du).abs() < 1e-9 && (fit.c.ln() - cu).abs() < 1e-9);
        assert!((fit.eta - dl).abs() < 1e-9 && (fit.m.ln() - cl).abs() < 1e-9);
        assert!(fit.bracketed);
        assert!(fit.eta >= 1.0 - 1e-12 && fit.delta <= 1.0 + 1e-12);
    }

    #[test]
    fn interior_norms_of_constant_gradient() {
        let samples: Vec<GradientSample> = [8, 16]
            .iter()
            .map(|&n| {
                let mesh = Arc::new(square(n));
                let gradients = vec![[3.0, 4.0]; mesh.n_triangles()];
                GradientSample { resolution: n, mesh, gradients }
            })
            .collect();
        let rows = higher_integrability_probe(&samples, &[1.5, 2.0, 6.0], 4.0);
        assert_eq!(rows.len(), 6);
        for r in rows {
            assert!((r.norm - 5.0).abs() < 1e-12);
            assert_eq!(r.below_p_sup, r.p < 4.0);
        }
    }

    #[test]
    fn stats_table_csv() {
        let mesh = square(8);
        let set = dyadic_squares(&mesh, 1);
        let table = square_stats(&mesh, &two_value(&mesh, 1.0, 2.0), &set, &[0.5, 1.0]).unwrap();
        assert_eq!(table.rows.len(), 5);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("id,level,area,mean,mean_square,mean_pow_0.5,mean_pow_1,log_oscillation\n"));
        assert_eq!(text.lines().count(), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn bmo_scale_invariant(seed in any::<u64>(), c in 0.01..100.0f64) {
            use rand::Rng;
            let mesh = square(8);
            let set = dyadic_squares(&mesh, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..mesh.n_triangles()).map(|_| rng.gen_range(0.1..10.0)).collect();
            let scaled: Vec<f64> = w.iter().map(|v| c * v).collect();
            let a = bmo_norm(&mesh, &w, &set).unwrap();
            let b = bmo_norm(&mesh, &scaled, &set).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn reverse_holder_monotone_in_exponent(seed in any::<u64>()) {
            use rand::Rng;
            let mesh = square(8);
            let set = dyadic_squares(&mesh, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..mesh.n_triangles()).map(|_| rng.gen_range(0.1..10.0)).collect();
            let mut last = 1.0;
            for p in [1.5, 2.0, 3.0, 5.0] {
                let r = reverse_holder_constant(&mesh, &w, &set, p, SquareScope::Inside).unwrap();
                prop_assert!(r >= last - 1e-12);
                last = r;
            }
        }

        #[test]
        fn envelopes_bracket_random_weights(seed in any::<u64>()) {
            use rand::Rng;
            let mesh = square(16);
            let set = dyadic_squares(&mesh, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..mesh.n_triangles()).map(|_| rng.gen_range(0.1..10.0)).collect();
            let samples = SubsetSampler { seed, ..SubsetSampler::default() }.sample(&mesh, &w, &set).unwrap();
            let fit = fit_envelopes(&samples).unwrap();
            prop_assert!(fit.bracketed);
            for s in &samples {
                prop_assert!(s.weight_fraction <= fit.upper(s.area_fraction) * (1.0 + 1e-9));
                prop_assert!(s.weight_fraction >= fit.lower(s.area_fraction) * (1.0 - 1e-9));
            }
        }
    }
}
