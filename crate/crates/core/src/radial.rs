//! Finite-difference radial Dirac operator `D⁰ − λφ` in one κ channel.
//!
//! Unknowns are the upper and lower radial components `G, F`. `G` lives on
//! the nodes `r_i = i·h`, `F` on the half nodes between them, and the two are
//! interleaved so the matrix is symmetric tridiagonal. The coupling block
//! `B ≈ d/dr + κ/r` is a one-sided difference with `κ/r` taken at the half
//! node; its transpose appears in the other off-diagonal block. For κ < 0 the
//! half node is `r_i + h/2`, for κ > 0 it is `r_i − h/2`. With this choice the
//! free (λ = 0) spectrum satisfies `|E| ≥ 1` exactly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::nuclear::ChargeDensity;
use crate::tridiag::SymTridiagonal;

/// Largest admissible `h·(|κ| + λφ(r₁))`.
pub const MAX_STEP_PRODUCT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub n: usize,
    pub r_max: f64,
}

impl Default for RadialGrid {
    fn default() -> Self {
        RadialGrid { n: 2000, r_max: 60.0 }
    }
}

impl RadialGrid {
    pub fn new(n: usize, r_max: f64) -> Result<Self> {
        if n < 100 {
            return Err(Error::invalid(format!("grid needs at least 100 nodes, got {n}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::invalid("r_max must be positive"));
        }
        Ok(RadialGrid { n, r_max })
    }

    pub fn h(&self) -> f64 {
        self.r_max / self.n as f64
    }

    /// Node `r_i = i·h`, `i = 1..=n`.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// Same box, half the step.
    pub fn refined(&self) -> RadialGrid {
        RadialGrid {
            n: 2 * self.n,
            r_max: self.r_max,
        }
    }
}

/// Which radial component a matrix row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    G,
    F,
}

#[derive(Debug, Clone)]
pub struct DiscreteDiracOperator {
    pub kappa: i32,
    pub lambda: f64,
    pub grid: RadialGrid,
    pub density: ChargeDensity,
    pub matrix: SymTridiagonal,
    /// Component and radius of each row, in matrix order.
    pub layout: Vec<(Component, f64)>,
}

/// Assemble the interleaved tridiagonal operator for channel `kappa`.
pub fn assemble(kappa: i32, lambda: f64, density: &ChargeDensity, grid: RadialGrid) -> Result<DiscreteDiracOperator> {
    if kappa == 0 {
        return Err(Error::invalid("κ must be nonzero"));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!("coupling must be ≥ 0, got {lambda}")));
    }
    let n = grid.n;
    let h = grid.h();
    let k = kappa as f64;
    let stiff = h * (k.abs() + lambda * density.potential_at(h));
    if stiff > MAX_STEP_PRODUCT {
        return Err(Error::GridTooCoarse(format!(
            "h·(|κ| + λφ(r₁)) = {stiff:.3} exceeds {MAX_STEP_PRODUCT} (N = {n}, r_max = {})",
            grid.r_max
        )));
    }
    let mut diag = Vec::with_capacity(2 * n);
    let mut off = Vec::with_capacity(2 * n - 1);
    let mut layout = Vec::with_capacity(2 * n);
    if kappa < 0 {
        // G₁, F₁, G₂, F₂, …  with F_i at r_i + h/2
        for i in 1..=n {
            let r = grid.node(i);
            let rf = r + 0.5 * h;
            diag.push(1.0 - lambda * density.potential_at(r));
            diag.push(-1.0 - lambda * density.potential_at(rf));
            layout.push((Component::G, r));
            layout.push((Component::F, rf));
            off.push(-1.0 / h + k / (2.0 * rf));
            if i < n {
                off.push(1.0 / h + k / (2.0 * rf));
            }
        }
    } else {
        // F₁, G₁, F₂, G₂, …  with F_i at r_i − h/2
        for i in 1..=n {
            let r = grid.node(i);
            let rf = r - 0.5 * h;
            diag.push(-1.0 - lambda * density.potential_at(rf));
            diag.push(1.0 - lambda * density.potential_at(r));
            layout.push((Component::F, rf));
            layout.push((Component::G, r));
            off.push(1.0 / h + k / (2.0 * rf));
            if i < n {
                let rf_next = r + 0.5 * h;
                off.push(-1.0 / h + k / (2.0 * rf_next));
            }
        }
    }
    Ok(DiscreteDiracOperator {
        kappa,
        lambda,
        grid,
        density: density.clone(),
        matrix: SymTridiagonal::new(diag, off)?,
        layout,
    })
}

impl DiscreteDiracOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Number of free negative-energy states, the index of the lowest gap state.
    pub fn sea_size(&self) -> usize {
        self.grid.n
    }

    pub fn count_below(&self, x: f64) -> usize {
        self.matrix.count_below(x)
    }

    /// Dense matrix in interleaved order.
    pub fn dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }

    /// Dense matrix reordered as `[[G block, Bᵀ], [B, F block]]`.
    pub fn block_form(&self) -> DMatrix<f64> {
        let perm = self.block_permutation();
        let d = self.dense();
        DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(perm[i], perm[j])])
    }

    /// Row indices of all `G` entries followed by all `F` entries.
    pub fn block_permutation(&self) -> Vec<usize> {
        let mut g: Vec<usize> = Vec::new();
        let mut f: Vec<usize> = Vec::new();
        for (i, (c, _)) in self.layout.iter().enumerate() {
            match c {
                Component::G => g.push(i),
                Component::F => f.push(i),
            }
        }
        g.extend(f);
        g
    }

    /// Eigenvalues in `(lo, hi)` labelled by global index minus the sea size.
    /// Labels below zero are continuum states; they are not returned.
    pub fn labelled_in(&self, lo: f64, hi: f64) -> Vec<(usize, f64)> {
        let sea = self.sea_size();
        self.matrix
            .eigenvalues_in(lo, hi)
            .into_iter()
            .filter(|(k, e)| *k >= sea && *e > lo)
            .map(|(k, e)| (k - sea, e))
            .collect()
    }
}

/// A gap eigenvalue with its two-grid convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapState {
    pub label: usize,
    pub energy: f64,
    /// Below `1 − edge_margin`.
    pub bound: bool,
    /// `|e_h − e_{h/2}|`.
    pub convergence: f64,
}

/// Largest two-grid discrepancy accepted before a state counts as spurious.
pub const CAUCHY_TOL: f64 = 0.05;

/// Eigenvalues in `(−1, 1)`, each checked against the same operator on the
/// grid with half the step. States without a partner on the fine grid within
/// [`CAUCHY_TOL`] are dropped.
pub fn gap_eigenvalues(op: &DiscreteDiracOperator, edge_margin: f64) -> Result<Vec<GapState>> {
    if !(edge_margin > 0.0 && edge_margin < 0.5) {
        return Err(Error::invalid("edge margin must lie in (0, 0.5)"));
    }
    let coarse = op.labelled_in(-1.0, 1.0);
    if coarse.is_empty() {
        return Ok(Vec::new());
    }
    let fine_op = assemble(op.kappa, op.lambda, &op.density, op.grid.refined())?;
    let fine: Vec<f64> = fine_op.labelled_in(-1.0, 1.0).into_iter().map(|(_, e)| e).collect();
    let mut used = vec![false; fine.len()];
    let mut out = Vec::with_capacity(coarse.len());
    for (label, e) in coarse {
        let best = fine
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .min_by(|a, b| (a.1 - e).abs().total_cmp(&(b.1 - e).abs()));
        if let Some((j, ef)) = best {
            let diff = (ef - e).abs();
            if diff <= CAUCHY_TOL {
                used[j] = true;
                out.push(GapState {
                    label,
                    energy: e,
                    bound: e < 1.0 - edge_margin,
                    convergence: diff,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dirac_coulomb(lambda: f64, kappa: i32, nr: usize) -> f64 {
        let g = ((kappa * kappa) as f64 - lambda * lambda).sqrt();
        1.0 / (1.0 + (lambda / (nr as f64 + g)).powi(2)).sqrt()
    }

    #[test]
    fn free_operator_has_empty_gap() {
        let d = ChargeDensity::gaussian(0.05).unwrap();
        for kappa in [-2, -1, 1, 2] {
            let op = assemble(kappa, 0.0, &d, RadialGrid::new(1000, 50.0).unwrap()).unwrap();
            assert_eq!(op.count_below(-0.99), op.count_below(0.99));
            assert_eq!(op.count_below(-1.0), 1000);
            assert_eq!(op.count_below(1.0), 1000);
            assert!(gap_eigenvalues(&op, 1e-3).unwrap().is_empty());
        }
    }

    #[test]
    fn matrix_structure() {
        let d = ChargeDensity::gaussian(0.05).unwrap();
        let grid = RadialGrid::new(120, 6.0).unwrap();
        let h = grid.h();
        for kappa in [-1, 2] {
            let op = assemble(kappa, 0.7, &d, grid).unwrap();
            let m = op.dense();
            assert_eq!(m, m.transpose());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if i.abs_diff(j) > 1 {
                        assert_eq!(m[(i, j)], 0.0);
                    }
                }
            }
            let b = op.block_form();
            let n = grid.n;
            for i in 0..n {
                let r = grid.node(i + 1);
                assert_eq!(b[(i, i)], 1.0 - 0.7 * d.potential_at(r));
                // B row i: one-sided difference of G plus κ/r at the half node
                let rf = op.layout[op.block_permutation()[n + i]].1;
                let plus = 1.0 / h + kappa as f64 / (2.0 * rf);
                let minus = -1.0 / h + kappa as f64 / (2.0 * rf);
                let row = b.view((n + i, 0), (1, n));
                let nz: Vec<f64> = row.iter().copied().filter(|x| *x != 0.0).collect();
                assert!(nz.len() <= 2);
                let near = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs();
                assert!(nz.iter().any(|x| near(*x, plus)) || i == n - 1);
                assert!(nz.iter().all(|x| near(*x, plus) || near(*x, minus)));
            }
            assert_eq!(b.view((0, n), (n, n)), b.view((n, 0), (n, n)).transpose());
        }
    }

    #[test]
    fn rejects_bad_input() {
        let d = ChargeDensity::gaussian(0.05).unwrap();
        let g = RadialGrid::default();
        assert!(assemble(0, 1.0, &d, g).is_err());
        assert!(assemble(-1, -0.1, &d, g).is_err());
        assert!(RadialGrid::new(50, 10.0).is_err());
        let coarse = RadialGrid::new(100, 1000.0).unwrap();
        assert!(matches!(assemble(-1, 1.0, &d, coarse), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn weak_coupling_matches_point_coulomb_levels() {
        let d = ChargeDensity::gaussian(0.02).unwrap();
        let lam = 0.3;
        let op = assemble(-1, lam, &d, RadialGrid::default()).unwrap();
        let s = gap_eigenvalues(&op, 1e-3).unwrap();
        for nr in 0..2 {
            let exact = dirac_coulomb(lam, -1, nr);
            assert!((s[nr].energy - exact).abs() < 2e-5, "{:?} {exact}", s[nr]);
            // nonrelativistic ladder to leading order
            let n = (nr + 1) as f64;
            assert!((1.0 - s[nr].energy - lam * lam / (2.0 * n * n)).abs() < 0.1 * lam * lam / (2.0 * n * n));
        }
        let op = assemble(1, lam, &d, RadialGrid::default()).unwrap();
        let s = gap_eigenvalues(&op, 1e-3).unwrap();
        assert!((s[0].energy - dirac_coulomb(lam, 1, 1)).abs() < 2e-5);
    }

    #[test]
    fn moderate_coupling_hydrogenic_estimate() {
        let d = ChargeDensity::gaussian(0.05).unwrap();
        let op = assemble(-1, 0.5, &d, RadialGrid::default()).unwrap();
        let s = gap_eigenvalues(&op, 1e-3).unwrap();
        assert!((s[0].energy - 0.875).abs() < 0.01);
        assert!(s[0].bound);
    }

    #[test]
    fn two_grid_estimate_bounds_next_refinement() {
        let d = ChargeDensity::gaussian(0.05).unwrap();
        let grid = RadialGrid::new(500, 30.0).unwrap();
        let op = assemble(-1, 0.9, &d, grid).unwrap();
        let s = gap_eigenvalues(&op, 1e-3).unwrap();
        let fine = assemble(-1, 0.9, &d, grid.refined()).unwrap();
        let finer = assemble(-1, 0.9, &d, grid.refined().refined()).unwrap();
        let a = fine.labelled_in(-1.0, 1.0);
        let b = finer.labelled_in(-1.0, 1.0);
        for st in s.iter().filter(|s| s.energy < 0.99) {
            let ea = a[st.label].1;
            let eb = b[st.label].1;
            assert!((ea - eb).abs() < st.convergence, "{st:?}");
        }
    }

    #[test]
    fn doubling_box_leaves_localized_states() {
        let d = ChargeDensity::gaussian(0.05).unwrap();
        let a = assemble(-1, 0.9, &d, RadialGrid::new(2000, 60.0).unwrap()).unwrap();
        let b = assemble(-1, 0.9, &d, RadialGrid::new(4000, 120.0).unwrap()).unwrap();
        // Rydberg states above ~0.95 still reach r_max = 60 at this coupling
        let ea = a.labelled_in(-1.0, 0.95);
        let eb = b.labelled_in(-1.0, 0.95);
        assert!(!ea.is_empty());
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x.1 - y.1).abs() < 1e-6, "{x:?} {y:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn prop_eigenvalues_nonincreasing_in_coupling(l0 in 0.0..1.5f64, dl in 0.0..0.3f64, kappa in prop::sample::select(vec![-2, -1, 1, 2])) {
            let d = ChargeDensity::gaussian(0.05).unwrap();
            let grid = RadialGrid::new(400, 20.0).unwrap();
            let a = assemble(kappa, l0, &d, grid).unwrap().labelled_in(-1.0, 1.0);
            let b = assemble(kappa, l0 + dl, &d, grid).unwrap();
            for (label, e) in a {
                let eb = b.matrix.kth_eigenvalue(label + grid.n).unwrap();
                prop_assert!(eb <= e + 1e-12);
            }
            // gap count grows until states dive
            prop_assert!(b.count_below(1.0) >= grid.n);
        }
    }
}
