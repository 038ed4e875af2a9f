//! Single-qubit process tomography in a fixed operator basis.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::density::{hermitian_part, partial_trace, psd_factor, DensityMatrix};
use crate::dynamics::Ensemble;
use crate::error::{Error, Result};
use crate::model::{ChainModel, CARBON};
use crate::pauli::Pauli;
use crate::propagate::{EvolveOptions, Propagator};
use crate::state::StateVector;

/// Largest held-out residual accepted from a reconstruction.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Tolerance for positivity and completeness checks.
pub const PROCESS_TOL: f64 = 1e-8;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Operator basis for χ, normalized with bare Pauli matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorBasis {
    /// `(I, σ_x, iσ_y, σ_z)`: all four elements are real matrices.
    #[default]
    RealPauli,
    /// `(I, σ_x, σ_y, σ_z)`.
    Pauli,
}

impl OperatorBasis {
    /// `E_m = d_m P_m` with `P = (I, X, Y, Z)`.
    fn phases(self) -> [Complex64; 4] {
        match self {
            OperatorBasis::RealPauli => [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)],
            OperatorBasis::Pauli => [c(1.0, 0.0); 4],
        }
    }

    pub fn elements(self) -> [Matrix2<Complex64>; 4] {
        let d = self.phases();
        [
            Matrix2::identity() * d[0],
            Pauli::X.matrix() * d[1],
            Pauli::Y.matrix() * d[2],
            Pauli::Z.matrix() * d[3],
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorBasis::RealPauli => "I,X,iY,Z",
            OperatorBasis::Pauli => "I,X,Y,Z",
        }
    }
}

/// `ρ_f = Σ_mn χ_mn E_m ρ E_n†`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    chi: Matrix4<Complex64>,
    basis: OperatorBasis,
}

impl ProcessMatrix {
    /// Validates Hermiticity and positivity within [`PROCESS_TOL`].
    pub fn new(chi: Matrix4<Complex64>, basis: OperatorBasis) -> Result<Self> {
        let p = Self { chi, basis };
        let herm = (chi - chi.adjoint()).norm();
        if herm > PROCESS_TOL {
            return Err(Error::NonPhysical(format!("χ is not Hermitian (residual {herm:e})")));
        }
        let min = p.eigenvalues()[0];
        if min < -PROCESS_TOL {
            return Err(Error::NonPhysical(format!("χ has negative eigenvalue {min:e}")));
        }
        Ok(p)
    }

    pub fn chi(&self) -> &Matrix4<Complex64> {
        &self.chi
    }

    pub fn basis(&self) -> OperatorBasis {
        self.basis
    }

    pub fn trace(&self) -> f64 {
        self.chi.trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_fn(4, 4, |i, j| self.chi[(i, j)]);
        let mut ev: Vec<f64> = SymmetricEigen::new(hermitian_part(&m)).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `‖Σ_mn χ_mn E_n† E_m − 𝕀‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let e = self.basis.elements();
        let mut acc = Matrix2::<Complex64>::zeros();
        for m in 0..4 {
            for n in 0..4 {
                acc += e[n].adjoint() * e[m] * self.chi[(m, n)];
            }
        }
        (acc - Matrix2::identity()).norm()
    }

    /// Applies the channel to a 2×2 matrix.
    pub fn apply(&self, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let e = self.basis.elements();
        let mut out = Matrix2::zeros();
        for m in 0..4 {
            for n in 0..4 {
                out += e[m] * rho * e[n].adjoint() * self.chi[(m, n)];
            }
        }
        out
    }

    /// The same process expressed in another basis.
    pub fn to_basis(&self, target: OperatorBasis) -> ProcessMatrix {
        // E_m = d_m P_m, so χ^P_mn = χ_mn d_m d_n* and χ^T_mn = χ^P_mn / (t_m t_n*).
        let d = self.basis.phases();
        let t = target.phases();
        let chi = Matrix4::from_fn(|m, n| self.chi[(m, n)] * d[m] * d[n].conj() / (t[m] * t[n].conj()));
        ProcessMatrix { chi, basis: target }
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_rows(&self) -> [[[f64; 2]; 4]; 4] {
        let mut rows = [[[0.0; 2]; 4]; 4];
        for (m, row) in rows.iter_mut().enumerate() {
            for (n, v) in row.iter_mut().enumerate() {
                *v = [self.chi[(m, n)].re, self.chi[(m, n)].im];
            }
        }
        rows
    }
}

/// The four probe states `|0⟩, |1⟩, |+⟩, |+i⟩`.
pub fn probe_states() -> [Matrix2<Complex64>; 4] {
    let h = 0.5;
    [
        Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
        Matrix2::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)),
        Matrix2::new(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(h, 0.0)),
        Matrix2::new(c(h, 0.0), c(0.0, -h), c(0.0, h), c(h, 0.0)),
    ]
}

/// Held-out inputs used to validate a reconstruction.
fn held_out_states() -> Vec<Matrix2<Complex64>> {
    let (th, ph) = (0.37_f64, 1.91_f64);
    let a = c(th.cos(), 0.0);
    let b = Complex64::from_polar(th.sin(), ph);
    let pure = Matrix2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj());
    let mixed = Matrix2::new(c(0.7, 0.0), c(0.1, 0.15), c(0.1, -0.15), c(0.3, 0.0));
    vec![pure, mixed]
}

fn as_density(m: &Matrix2<Complex64>) -> Result<DensityMatrix> {
    DensityMatrix::new(DMatrix::from_fn(2, 2, |i, j| m[(i, j)]))
}

fn as_matrix2(d: &DensityMatrix) -> Matrix2<Complex64> {
    let m = d.matrix();
    Matrix2::from_fn(|i, j| m[(i, j)])
}

/// Linear inversion of the channel's action on the probes.
pub fn reconstruct_chi<F>(channel: F, basis: OperatorBasis) -> Result<ProcessMatrix>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
{
    let probes = probe_states();
    let out: Vec<Matrix2<Complex64>> =
        probes.iter().map(|p| channel(&as_density(p)?).map(|d| as_matrix2(&d))).collect::<Result<_>>()?;

    // Images of the matrix units |a⟩⟨b| by linearity.
    let diag = out[0] + out[1];
    let i = c(0.0, 1.0);
    let e01 = out[2] + out[3] * i - diag * c(0.5, 0.5);
    let e10 = out[2] - out[3] * i - diag * c(0.5, -0.5);
    let images = [(0, 0, out[0]), (0, 1, e01), (1, 0, e10), (1, 1, out[1])];

    let e = basis.elements();
    let mut lhs = DMatrix::<Complex64>::zeros(16, 16);
    let mut rhs = DVector::<Complex64>::zeros(16);
    for (block, &(a, b, img)) in images.iter().enumerate() {
        let mut unit = Matrix2::<Complex64>::zeros();
        unit[(a, b)] = c(1.0, 0.0);
        for r in 0..4 {
            rhs[block * 4 + r] = img[(r / 2, r % 2)];
        }
        for m in 0..4 {
            for n in 0..4 {
                let term = e[m] * unit * e[n].adjoint();
                for r in 0..4 {
                    lhs[(block * 4 + r, m * 4 + n)] = term[(r / 2, r % 2)];
                }
            }
        }
    }
    let x = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidParameter("operator basis is singular".into()))?;
    let raw = Matrix4::from_fn(|m, n| x[m * 4 + n]);
    let chi = (raw + raw.adjoint()) * c(0.5, 0.0);
    let p = ProcessMatrix::new(chi, basis)?;

    let mut residual: f64 = 0.0;
    for h in held_out_states() {
        let expect = as_matrix2(&channel(&as_density(&h)?)?);
        residual = residual.max((p.apply(&h) - expect).norm());
    }
    if residual > RESIDUAL_TOL {
        return Err(Error::ChannelResidual(residual));
    }
    let completeness = p.completeness_residual();
    if completeness > PROCESS_TOL {
        return Err(Error::NonPhysical(format!("channel is not trace preserving (residual {completeness:e})")));
    }
    Ok(p)
}

/// χ of the channel `ρ ↦ Σ_k K_k ρ K_k†`, expanding each Kraus operator in the basis.
pub fn chi_from_kraus(kraus: &[Matrix2<Complex64>], basis: OperatorBasis) -> Result<ProcessMatrix> {
    let e = basis.elements();
    let mut chi = Matrix4::<Complex64>::zeros();
    for k in kraus {
        // Tr(E_m† E_n) = 2 δ_mn.
        let a: Vec<Complex64> = e.iter().map(|em| (em.adjoint() * k).trace() * 0.5).collect();
        for m in 0..4 {
            for n in 0..4 {
                chi[(m, n)] += a[m] * a[n].conj();
            }
        }
    }
    ProcessMatrix::new(chi, basis)
}

/// Kraus operators of complete relaxation to `|0⟩`.
pub fn relaxation_to_ground_kraus() -> [Matrix2<Complex64>; 2] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    [Matrix2::new(l, o, o, o), Matrix2::new(o, l, o, o)]
}

/// Uhlmann fidelity `[Tr √(√a' b' √a')]² = ‖√a' √b'‖_tr²` of the trace-normalized matrices.
pub fn process_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64> {
    let to_dense = |p: &ProcessMatrix| -> Result<DMatrix<Complex64>> {
        let tr = p.trace();
        if tr <= 0.0 {
            return Err(Error::NonPhysical("χ has non-positive trace".into()));
        }
        Ok(DMatrix::from_fn(4, 4, |i, j| p.chi[(i, j)] / tr))
    };
    let b = if a.basis == b.basis { b.clone() } else { b.to_basis(a.basis) };
    let (da, db) = (to_dense(a)?, to_dense(&b)?);
    let overlap = psd_factor(&da).adjoint() * psd_factor(&db);
    let root: f64 = overlap.singular_values().iter().sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// Carbon channel obtained by evolving `ρ_in ⊗ |bath⟩⟨bath|` under the
/// engineered Hamiltonian for a fixed time and tracing out the hydrogens.
#[derive(Debug)]
pub struct ThermalizationChannel {
    propagator: Propagator,
    bath: Ensemble,
    time: f64,
}

impl ThermalizationChannel {
    /// `bath` members must have the carbon in `|0⟩`; its state is replaced by each input.
    pub fn new(model: &ChainModel, bath: Ensemble, time: f64, opts: &EvolveOptions) -> Result<Self> {
        if bath.n_sites() != model.n_sites() {
            return Err(Error::DimensionMismatch { expected: model.n_sites(), got: bath.n_sites() });
        }
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::InvalidParameter(format!("channel time must be ≥ 0, got {time}")));
        }
        let h = model.effective_hamiltonian()?;
        Ok(Self { propagator: Propagator::new(&h, opts)?, bath, time })
    }

    /// Carbon in `v`, hydrogens in the given basis state.
    fn joint(member: &StateVector, v: [Complex64; 2]) -> StateVector {
        let amps = member.amplitudes();
        let mut out = vec![c(0.0, 0.0); amps.len()];
        for (i, a) in amps.iter().enumerate() {
            if a.norm_sqr() != 0.0 {
                let rest = i & !1;
                out[rest] += a * v[0];
                out[rest | 1] += a * v[1];
            }
        }
        StateVector::from_raw(member.n_sites(), out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_sites() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: rho.n_sites() });
        }
        let e = SymmetricEigen::new(hermitian_part(rho.matrix()));
        let w = 1.0 / self.bath.len() as f64;
        let mut out = DMatrix::<Complex64>::zeros(2, 2);
        for k in 0..2 {
            let p = e.eigenvalues[k];
            if p <= 0.0 {
                continue;
            }
            let v = [e.eigenvectors[(0, k)], e.eigenvectors[(1, k)]];
            for member in self.bath.members() {
                let psi = self.propagator.evolve(&Self::joint(member, v), self.time)?;
                out += partial_trace(&psi, &[CARBON])?.matrix() * c(p * w, 0.0);
            }
        }
        DensityMatrix::new(hermitian_part(&out))
    }
}
