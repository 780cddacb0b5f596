//! Boundary (restriction) and coboundary (δ-layer) maps for affine
//! submanifolds, and the shift operators `T_g u = u ∘ g⁻¹`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::grid::FourierGrid;
use super::sobolev::SobolevVector;
use crate::error::{Error, Result};
use crate::geometry::{GroupAction, Submanifold, SubmanifoldKind};

/// `X = origin + P·t`; `tangent` holds the orthonormal columns of P and
/// `normal` an orthonormal complement Q.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFrame {
    pub origin: DVector<f64>,
    pub tangent: DMatrix<f64>,
    pub normal: DMatrix<f64>,
}

impl AffineFrame {
    pub fn new(origin: &[f64], basis: &[Vec<f64>]) -> Result<Self> {
        let sub = Submanifold::new(SubmanifoldKind::Affine { origin: origin.to_vec(), basis: basis.to_vec() })?;
        Self::from_submanifold(&sub)
    }

    pub fn from_submanifold(sub: &Submanifold) -> Result<Self> {
        let SubmanifoldKind::Affine { origin, basis } = sub.kind() else {
            return Err(Error::Unsupported("operator assembly needs an affine submanifold".into()));
        };
        let n = origin.len();
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for b in basis {
            let mut v = DVector::from_row_slice(b);
            for c in &cols {
                v -= c * c.dot(&v);
            }
            cols.push(v.normalize());
        }
        let k = cols.len();
        for e in 0..n {
            if cols.len() == n {
                break;
            }
            let mut v = DVector::from_fn(n, |i, _| if i == e { 1.0 } else { 0.0 });
            for c in &cols {
                v -= c * c.dot(&v);
            }
            if v.norm() > 1e-8 {
                cols.push(v.normalize());
            }
        }
        Ok(AffineFrame {
            origin: DVector::from_row_slice(origin),
            tangent: DMatrix::from_columns(&cols[..k]),
            normal: DMatrix::from_columns(&cols[k..]),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    pub fn dim(&self) -> usize {
        self.tangent.ncols()
    }

    pub fn codim(&self) -> usize {
        self.normal.ncols()
    }
}

/// `Σ_{m<N} e^{iδ t_m}` over the physical nodes of a 1-d grid, times the
/// forward-transform scale of that axis.
fn dirichlet(grid: &FourierGrid, delta: f64) -> Complex64 {
    let n = grid.modes;
    let l = grid.half_width;
    let h = 2.0 * l / n as f64;
    let z = Complex64::from_polar(1.0, delta * h);
    let sum = if (Complex64::new(1.0, 0.0) - z).norm() < 1e-6 {
        (0..n).map(|m| Complex64::from_polar(1.0, delta * (-l + m as f64 * h))).sum()
    } else {
        Complex64::from_polar(1.0, -delta * l) * (Complex64::new(1.0, 0.0) - z.powu(n as u32))
            / (Complex64::new(1.0, 0.0) - z)
    };
    sum * (h / (2.0 * l).sqrt())
}

/// Matrix of `restrict`: sample the ambient expansion on X's physical nodes
/// and transform on X's grid.
pub fn restriction_matrix(
    ambient: &FourierGrid,
    target: &FourierGrid,
    frame: &AffineFrame,
) -> Result<DMatrix<Complex64>> {
    if ambient.dim != frame.ambient_dim() || target.dim != frame.dim() {
        return Err(Error::GridMismatch(format!(
            "grids of dimension {}/{} for a {}-dimensional submanifold of R^{}",
            ambient.dim,
            target.dim,
            frame.dim(),
            frame.ambient_dim()
        )));
    }
    let scale = (2.0 * ambient.half_width).powf(-0.5 * ambient.dim as f64);
    let eta = target.axis_frequencies();
    let mut m = DMatrix::zeros(target.len(), ambient.len());
    for col in 0..ambient.len() {
        let xi = DVector::from_vec(ambient.frequency(col));
        let tang = frame.tangent.transpose() * &xi;
        let lead = Complex64::from_polar(scale, xi.dot(&frame.origin));
        let axis: Vec<Vec<Complex64>> =
            (0..target.dim).map(|d| eta.iter().map(|e| dirichlet(target, tang[d] - e)).collect()).collect();
        for row in 0..target.len() {
            let mut v = lead;
            for (d, j) in target.unflatten(row).into_iter().enumerate() {
                v *= axis[d][j];
            }
            m[(row, col)] = v;
        }
    }
    Ok(m)
}

/// Restriction `i*`: `H^s(M) → H^{s-ν/2}(X)`, bounded only for `s > ν/2`.
pub fn restrict(u: &SobolevVector, target: &FourierGrid, frame: &AffineFrame) -> Result<SobolevVector> {
    let half_nu = 0.5 * frame.codim() as f64;
    if u.index <= half_nu {
        return Err(Error::SobolevIndex { index: u.index, bound: half_nu });
    }
    let m = restriction_matrix(&u.grid, target, frame)?;
    SobolevVector::new(*target, m * &u.coeffs, u.index - half_nu)
}

/// Coboundary `i_*` (the δ-layer `u ⊗ δ_X`), the exact adjoint of
/// [`restrict`]. For `s < 0` the layer lies in `H^{s-ν/2}(M)`.
pub fn embed(u: &SobolevVector, ambient: &FourierGrid, frame: &AffineFrame) -> Result<SobolevVector> {
    let m = restriction_matrix(ambient, &u.grid, frame)?;
    let index = u.index.min(0.0) - 0.5 * frame.codim() as f64;
    SobolevVector::new(*ambient, m.adjoint() * &u.coeffs, index)
}

/// `(T_g u)(x) = u(g⁻¹x)`. Translations act by the exact phase `e^{-iξ·b}`;
/// rotations resample the trigonometric interpolant, which is exact (and
/// unitary) whenever the rotation maps the frequency set into itself.
pub fn shift_apply(action: &GroupAction, param: &[f64], u: &SobolevVector) -> Result<SobolevVector> {
    let g = action.element(param)?;
    if g.dim() != u.grid.dim {
        return Err(Error::GridMismatch("action and grid dimensions differ".into()));
    }
    let n = g.dim();
    let pure_translation = (&g.linear - DMatrix::<f64>::identity(n, n)).amax() == 0.0;
    let coeffs = if pure_translation {
        DVector::from_fn(u.grid.len(), |i, _| {
            let xi = u.grid.frequency(i);
            let phase: f64 = xi.iter().zip(g.offset.iter()).map(|(a, b)| a * b).sum();
            u.coeffs[i] * Complex64::from_polar(1.0, -phase)
        })
    } else {
        let inv = g.inverse();
        let samples = DVector::from_iterator(
            u.grid.len(),
            u.grid.points().into_iter().map(|x| {
                let y = inv.apply(&DVector::from_vec(x));
                u.grid.eval(&u.coeffs, y.as_slice())
            }),
        );
        u.grid.forward(&samples)?
    };
    SobolevVector::new(u.grid, coeffs, u.index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ActionKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random(grid: FourierGrid, seed: u64, index: f64) -> SobolevVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c =
            DVector::from_fn(grid.len(), |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        SobolevVector::new(grid, c, index).unwrap()
    }

    fn plane_wave(grid: FourierGrid, xi: &[f64]) -> SobolevVector {
        let samples = DVector::from_iterator(
            grid.len(),
            grid.points()
                .into_iter()
                .map(|x| Complex64::from_polar(1.0, x.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>())),
        );
        SobolevVector::new(grid, grid.forward(&samples).unwrap(), 2.0).unwrap()
    }

    #[test]
    fn restricting_a_plane_wave() {
        let amb = FourierGrid::new(2, 8, 3.0, false).unwrap();
        let sub = FourierGrid::new(1, 8, 3.0, false).unwrap();
        let frame = AffineFrame::new(&[0.0, 0.6], &[vec![1.0, 0.0]]).unwrap();
        let d = amb.spacing();
        let xi = [2.0 * d, -3.0 * d];
        let r = restrict(&plane_wave(amb, &xi), &sub, &frame).unwrap();
        let expect = plane_wave(sub, &[2.0 * d]);
        let phase = Complex64::from_polar(1.0, xi[1] * 0.6);
        assert!((r.coeffs - expect.coeffs * phase).norm() < 1e-12);
        assert_eq!(r.index, 1.5);
    }

    #[test]
    fn constants_restrict_to_constants() {
        let amb = FourierGrid::new(3, 4, 2.0, false).unwrap();
        let sub = FourierGrid::new(2, 4, 2.0, false).unwrap();
        let frame = AffineFrame::new(&[0.1, 0.2, 0.3], &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let one = plane_wave(amb, &[0.0, 0.0, 0.0]);
        let r = restrict(&one, &sub, &frame).unwrap();
        let values = sub.inverse(&r.coeffs).unwrap();
        for v in values.iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn embed_is_adjoint_of_restrict() {
        let amb = FourierGrid::new(2, 8, 2.5, true).unwrap();
        let sub = FourierGrid::new(1, 8, 2.5, true).unwrap();
        let frame = AffineFrame::new(&[0.2, -0.4], &[vec![1.0, 0.0]]).unwrap();
        for seed in 0..100 {
            let u = random(amb, seed, 1.0);
            let v = random(sub, 1000 + seed, -0.5);
            let lhs = embed(&v, &amb, &frame).unwrap().inner(&u).unwrap();
            let rhs = v.inner(&restrict(&u, &sub, &frame).unwrap()).unwrap();
            assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1e-300));
        }
        assert_eq!(embed(&SobolevVector::zeros(sub, -0.5), &amb, &frame).unwrap().coeffs.norm(), 0.0);
    }

    #[test]
    fn single_tangential_mode_is_constant_across_transverse_modes() {
        let amb = FourierGrid::new(2, 8, 2.0, false).unwrap();
        let sub = FourierGrid::new(1, 8, 2.0, false).unwrap();
        let frame = AffineFrame::new(&[0.0, 0.0], &[vec![1.0, 0.0]]).unwrap();
        let mut c = DVector::zeros(8);
        c[5] = Complex64::new(1.0, 0.0);
        let e = embed(&SobolevVector::new(sub, c, -1.0).unwrap(), &amb, &frame).unwrap();
        for i in 0..amb.len() {
            let m = amb.unflatten(i);
            let expect = if m[0] == 5 { 0.5 } else { 0.0 };
            assert!((e.coeffs[i] - Complex64::new(expect, 0.0)).norm() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn restriction_index_guard() {
        let amb = FourierGrid::new(2, 4, 1.0, false).unwrap();
        let sub = FourierGrid::new(1, 4, 1.0, false).unwrap();
        let frame = AffineFrame::new(&[0.0, 0.0], &[vec![1.0, 0.0]]).unwrap();
        let u = random(amb, 1, 0.5);
        assert!(matches!(restrict(&u, &sub, &frame), Err(Error::SobolevIndex { .. })));
    }

    #[test]
    fn translations_are_unitary_and_compose() {
        let grid = FourierGrid::new(2, 8, 2.0, true).unwrap();
        let g = GroupAction::new(ActionKind::PlanarTranslation { direction: [0.6, 0.8], half_range: 3.0 }, 4).unwrap();
        let u = random(grid, 3, 0.0);
        let a = shift_apply(&g, &[0.7], &u).unwrap();
        assert!((a.coeffs.norm() - u.coeffs.norm()).abs() < 1e-12);
        let ab = shift_apply(&g, &[-0.2], &a).unwrap();
        let direct = shift_apply(&g, &g.compose(&[-0.2], &[0.7]).unwrap(), &u).unwrap();
        assert!((ab.coeffs - direct.coeffs).norm() < 1e-10);
        assert_eq!(shift_apply(&g, &[0.0], &u).unwrap().coeffs, u.coeffs);
    }

    #[test]
    fn rotations_of_plane_waves_and_quarter_turns() {
        let grid = FourierGrid::new(2, 12, 2.0, false).unwrap();
        let g = GroupAction::new(ActionKind::PlanarRotation { center: [0.0, 0.0] }, 4).unwrap();
        let d = grid.spacing();
        // (3,4) rotated onto (5,0)
        let phi = -(4.0f64).atan2(3.0);
        let out = shift_apply(&g, &[phi], &plane_wave(grid, &[3.0 * d, 4.0 * d])).unwrap();
        assert!((out.coeffs - plane_wave(grid, &[5.0 * d, 0.0]).coeffs).norm() < 1e-10);

        let offset = FourierGrid::new(2, 8, 2.0, true).unwrap();
        let u = random(offset, 8, 0.0);
        let a = shift_apply(&g, &[FRAC_PI_2], &u).unwrap();
        assert!((a.coeffs.norm() - u.coeffs.norm()).abs() < 1e-12);
        let twice = shift_apply(&g, &[FRAC_PI_2], &a).unwrap();
        let direct = shift_apply(&g, &[2.0 * FRAC_PI_2], &u).unwrap();
        assert!((twice.coeffs - direct.coeffs).norm() < 1e-10);
    }

    #[test]
    fn rotation_of_a_resolved_gaussian_is_nearly_unitary() {
        let grid = FourierGrid::new(2, 72, 6.0, false).unwrap();
        let samples = DVector::from_iterator(
            grid.len(),
            grid.points().into_iter().map(|x| Complex64::new((-3.0 * ((x[0] - 0.5).powi(2) + x[1] * x[1])).exp(), 0.0)),
        );
        let u = SobolevVector::new(grid, grid.forward(&samples).unwrap(), 0.0).unwrap();
        let g = GroupAction::new(ActionKind::PlanarRotation { center: [0.0, 0.0] }, 4).unwrap();
        let a = shift_apply(&g, &[0.3], &u).unwrap();
        assert!((a.coeffs.norm() - u.coeffs.norm()).abs() < 1e-10 * u.coeffs.norm());
        let ab = shift_apply(&g, &[0.5], &a).unwrap();
        let direct = shift_apply(&g, &[0.8], &u).unwrap();
        let err = (ab.coeffs - direct.coeffs).norm() / u.coeffs.norm();
        assert!(err < 1e-10, "{err:e}");
    }
}
