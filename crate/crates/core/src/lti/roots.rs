use nalgebra::{linalg::Schur, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Polynomial;
use crate::error::{Error, Result};

pub const DEFAULT_ROOT_TOL: f64 = 1e-9;
pub const DEFAULT_RHP_TOL: f64 = 1e-9;

/// Roots of a real polynomial, classified by half plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// Indices of roots with `Re > tol`.
    pub rhp: Vec<usize>,
    /// Indices of roots with `|Re| <= tol`.
    pub on_axis: Vec<usize>,
    pub tol: f64,
}

impl RootSet {
    pub fn empty() -> Self {
        Self::classify(Vec::new(), DEFAULT_RHP_TOL)
    }

    pub fn classify(roots: Vec<Complex64>, tol: f64) -> Self {
        let rhp = (0..roots.len()).filter(|&i| roots[i].re > tol).collect();
        let on_axis = (0..roots.len())
            .filter(|&i| roots[i].re.abs() <= tol)
            .collect();
        Self {
            roots,
            rhp,
            on_axis,
            tol,
        }
    }

    pub fn rhp_roots(&self) -> Vec<Complex64> {
        self.rhp.iter().map(|&i| self.roots[i]).collect()
    }

    pub fn on_axis_roots(&self) -> Vec<Complex64> {
        self.on_axis.iter().map(|&i| self.roots[i]).collect()
    }

    /// Only the right-half-plane roots, reclassified as a set of their own.
    pub fn rhp_subset(&self) -> Self {
        Self::classify(self.rhp_roots(), self.tol)
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().fold(0.0_f64, |m, r| m.max(r.norm()))
    }
}

/// All complex roots of `p`, via the eigenvalues of its companion matrix with
/// a Newton polish on each eigenvalue. Roots at the origin are split off
/// exactly before the eigen-solve.
pub fn poly_roots(p: &Polynomial, tol: f64) -> Result<RootSet> {
    poly_roots_with_axis_tol(p, tol, DEFAULT_RHP_TOL)
}

pub fn poly_roots_with_axis_tol(p: &Polynomial, tol: f64, rhp_tol: f64) -> Result<RootSet> {
    if p.degree() == 0 {
        return Err(Error::NoRoots);
    }
    let zeros = p.zero_root_multiplicity();
    let reduced = Polynomial::new(p.coeffs()[zeros..].to_vec())?;
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let n = reduced.degree();
    if n > 0 {
        let c = reduced.coeffs();
        let lead = reduced.leading();
        let companion = DMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -c[n - 1 - j] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let schur = Schur::try_new(companion, f64::EPSILON, 10_000).ok_or_else(|| {
            Error::RootFindingFailed(format!(
                "Schur iteration did not converge for degree {n} polynomial"
            ))
        })?;
        let eig = schur.complex_eigenvalues();
        let deriv = reduced.derivative();
        for z in eig.iter() {
            roots.push(polish(&reduced, &deriv, *z));
        }
    }
    symmetrize_conjugates(&mut roots);
    roots.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });

    let scale = p.max_abs_coeff();
    let deg = p.degree() as i32;
    for r in &roots {
        let resid = p.eval(*r).norm();
        let allowed = tol * scale * r.norm().max(1.0).powi(deg);
        if !(resid <= allowed) {
            return Err(Error::RootFindingFailed(format!(
                "residual {resid:.3e} at root {r} exceeds {allowed:.3e}"
            )));
        }
    }
    Ok(RootSet::classify(roots, rhp_tol))
}

fn polish(p: &Polynomial, dp: &Polynomial, mut z: Complex64) -> Complex64 {
    let mut fz = p.eval(z).norm();
    for _ in 0..3 {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval(z) / d;
        let fc = p.eval(cand).norm();
        if !(fc < fz) {
            break;
        }
        z = cand;
        fz = fc;
    }
    z
}

/// Snaps near-real roots onto the real axis and makes complex pairs exact
/// conjugates of each other.
fn symmetrize_conjugates(roots: &mut [Complex64]) {
    for r in roots.iter_mut() {
        if r.im.abs() <= 1e-10 * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    let n = roots.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] || roots[i].im <= 0.0 {
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..n)
            .filter(|&j| !used[j] && j != i && roots[j].im < 0.0)
            .min_by(|&a, &b| {
                (roots[a] - target)
                    .norm()
                    .partial_cmp(&(roots[b] - target).norm())
                    .unwrap()
            });
        if let Some(j) = partner {
            let avg = Complex64::new(
                0.5 * (roots[i].re + roots[j].re),
                0.5 * (roots[i].im - roots[j].im),
            );
            roots[i] = avg;
            roots[j] = avg.conj();
            used[i] = true;
            used[j] = true;
        }
    }
}
