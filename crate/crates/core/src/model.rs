//! Physical model: the XXZ chain, the Tavis-Cummings coupling, the pump and
//! loss channels, and the vectorized Liouvillian.
//!
//! The master equation is
//!
//! ```text
//! dρ/dt = −i[H_XXZ + H_TC, ρ] + P Σ_i D[σ_i†](ρ) + κ D[a](ρ)
//! D[x](ρ) = x ρ x† − ½ (x†x ρ + ρ x†x)
//! H_XXZ = J Σ_⟨i,i+1⟩ (X_i X_{i+1} + Y_i Y_{i+1}) + U Σ_⟨i,i+1⟩ Z_i Z_{i+1}
//! H_TC  = g Σ_i (a σ_i† + a† σ_i)
//! ```
//!
//! on an open chain with `L − 1` bonds. Density matrices are vectorized by
//! stacking columns, so `vec(X ρ Y) = (Yᵀ ⊗ X) vec(ρ)`.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hilbert::{boson_operator, spin_operator, BosonKind, SpaceDescriptor, SparseOperator, SpinKind};
use crate::ness::DensityMatrix;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
}

/// Model constants. Energies and rates are in units of `J`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    #[serde(rename = "L")]
    pub num_spins: usize,
    #[serde(rename = "J")]
    pub hopping: f64,
    #[serde(rename = "U")]
    pub interaction: f64,
    #[serde(rename = "g")]
    pub coupling: f64,
    #[serde(rename = "P")]
    pub pump: f64,
    #[serde(rename = "kappa")]
    pub loss: f64,
    /// Retained Fock states `|0⟩ … |n_max − 1⟩`.
    #[serde(rename = "n_max")]
    pub fock_dim: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl SystemParams {
    /// Light-matter coupling of the figure runs, `g = 0.1 J`.
    pub const FIGURE_COUPLING: f64 = 0.1;
    /// Cavity loss of the figure runs, `κ = 0.5 g`.
    pub const FIGURE_LOSS: f64 = 0.5 * Self::FIGURE_COUPLING;

    /// `J = 1`, `g = 0.1`, `κ = 0.05`, with the smallest useful cutoff `L + 2`.
    pub fn figure_defaults(num_spins: usize, interaction: f64, pump: f64) -> Self {
        Self {
            num_spins,
            hopping: 1.0,
            interaction,
            coupling: Self::FIGURE_COUPLING,
            pump,
            loss: Self::FIGURE_LOSS,
            fock_dim: num_spins + 2,
            boundary: Boundary::Open,
        }
    }

    pub fn with_fock_dim(mut self, fock_dim: usize) -> Self {
        self.fock_dim = fock_dim;
        self
    }

    pub fn with_hopping(mut self, hopping: f64) -> Self {
        self.hopping = hopping;
        self
    }

    pub fn with_interaction(mut self, interaction: f64) -> Self {
        self.interaction = interaction;
        self
    }

    pub fn with_pump(mut self, pump: f64) -> Self {
        self.pump = pump;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_loss(mut self, loss: f64) -> Self {
        self.loss = loss;
        self
    }

    /// The same emitters with the spin-chain Hamiltonian switched off (`J = U = 0`).
    pub fn without_chain(mut self) -> Self {
        self.hopping = 0.0;
        self.interaction = 0.0;
        self
    }

    pub fn with_num_spins(mut self, num_spins: usize) -> Self {
        self.num_spins = num_spins;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("J", self.hopping),
            ("U", self.interaction),
            ("g", self.coupling),
            ("P", self.pump),
            ("kappa", self.loss),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("{v} is not finite") });
            }
        }
        for (name, v) in [("J", self.hopping), ("g", self.coupling), ("P", self.pump), ("kappa", self.loss)] {
            if v < 0.0 {
                return Err(Error::InvalidParameter { name, reason: "must be non-negative".into() });
            }
        }
        SpaceDescriptor::new(self.num_spins, self.fock_dim)?;
        Ok(())
    }

    pub fn space(&self) -> Result<SpaceDescriptor> {
        SpaceDescriptor::new(self.num_spins, self.fock_dim)
    }

    /// Largest energy or rate scale in the model, used to bound time steps.
    pub fn max_rate(&self) -> f64 {
        [self.hopping, self.interaction.abs(), self.pump, self.loss, self.coupling]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Diagonal part of `H_XXZ` on a spin configuration (bit set = ↓).
pub(crate) fn xxz_diagonal(params: &SystemParams, spin: usize) -> f64 {
    let l = params.num_spins;
    (0..l.saturating_sub(1))
        .map(|b| {
            let same = ((spin >> (l - 1 - b)) & 1) == ((spin >> (l - 2 - b)) & 1);
            if same {
                params.interaction
            } else {
                -params.interaction
            }
        })
        .sum()
}

/// Off-diagonal part of `H_XXZ`: each antiparallel bond flips with amplitude `2J`.
pub(crate) fn xxz_flips(params: &SystemParams, spin: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let l = params.num_spins;
    (0..l.saturating_sub(1)).filter_map(move |b| {
        let pair = (1usize << (l - 1 - b)) | (1usize << (l - 2 - b));
        let bits = spin & pair;
        (bits != 0 && bits != pair).then_some((spin ^ pair, 2.0 * params.hopping))
    })
}

/// `H_XXZ` assembled from embedded Pauli products.
pub fn build_hxxz(params: &SystemParams, desc: &SpaceDescriptor) -> Result<SparseOperator> {
    let mut h = SparseOperator::zeros(desc.dim(), desc.dim());
    let j = Complex64::from(params.hopping);
    let u = Complex64::from(params.interaction);
    for i in 1..desc.num_spins() {
        let bond = |k: SpinKind| -> Result<SparseOperator> {
            spin_operator(desc, i, k)?.matmul(&spin_operator(desc, i + 1, k)?)
        };
        let hop = bond(SpinKind::X)?.add(&bond(SpinKind::Y)?)?.scale(j);
        h = h.add(&hop)?.add(&bond(SpinKind::Z)?.scale(u))?;
    }
    Ok(h)
}

/// `H_TC = g Σ_i (a σ_i† + a† σ_i)`.
pub fn build_htc(params: &SystemParams, desc: &SpaceDescriptor) -> Result<SparseOperator> {
    let a = boson_operator(desc, BosonKind::Annihilate);
    let ad = boson_operator(desc, BosonKind::Create);
    let mut h = SparseOperator::zeros(desc.dim(), desc.dim());
    for i in 1..=desc.num_spins() {
        let absorb = a.matmul(&spin_operator(desc, i, SpinKind::Raise)?)?;
        let emit = ad.matmul(&spin_operator(desc, i, SpinKind::Lower)?)?;
        h = h.add(&absorb)?.add(&emit)?;
    }
    Ok(h.scale(Complex64::from(params.coupling)))
}

pub fn hamiltonian(params: &SystemParams, desc: &SpaceDescriptor) -> Result<SparseOperator> {
    build_hxxz(params, desc)?.add(&build_htc(params, desc)?)
}

/// Total excitation number `a†a + Σ_i (Z_i + 1)/2`, conserved by `H_XXZ + H_TC`.
pub fn excitation_number(desc: &SpaceDescriptor) -> SparseOperator {
    let diag: Vec<Complex64> = (0..desc.dim())
        .map(|idx| {
            let (spin, n) = desc.split(idx);
            Complex64::from((n + crate::hilbert::count_up(spin, desc.num_spins())) as f64)
        })
        .collect();
    SparseOperator::diagonal(&diag)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// `√P σ_site†` (site is 1-based).
    Pump(usize),
    /// `√κ a`.
    Loss,
}

/// A Lindblad jump operator with its rate folded in.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub channel: Channel,
    pub operator: SparseOperator,
}

/// `{√P σ_i†}` for every site followed by `√κ a`.
pub fn jump_operators(params: &SystemParams, desc: &SpaceDescriptor) -> Result<Vec<JumpOperator>> {
    let mut ops = Vec::with_capacity(desc.num_spins() + 1);
    let sp = Complex64::from(params.pump.sqrt());
    for i in 1..=desc.num_spins() {
        ops.push(JumpOperator {
            channel: Channel::Pump(i),
            operator: spin_operator(desc, i, SpinKind::Raise)?.scale(sp),
        });
    }
    ops.push(JumpOperator {
        channel: Channel::Loss,
        operator: boson_operator(desc, BosonKind::Annihilate).scale(Complex64::from(params.loss.sqrt())),
    });
    Ok(ops)
}

/// `D[x](ρ) = x ρ x† − ½ (x†x ρ + ρ x†x)` on a dense density matrix.
pub fn apply_dissipator(x: &SparseOperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let d = rho.dim();
    if x.rows() != d || x.cols() != d {
        return Err(Error::DimensionMismatch { op: "apply_dissipator", left: (x.rows(), x.cols()), right: (d, d) });
    }
    let r = rho.to_dense();
    let xd = x.to_dense();
    let xdx = x.adjoint().matmul(x)?.to_dense();
    let half = Complex64::from(0.5);
    let out = &xd * &r * xd.adjoint() - (&xdx * &r + &r * &xdx) * faer::Scale(half);
    Ok(DensityMatrix::from_dense(*rho.space(), out))
}

/// Right side of the master equation evaluated directly on a dense `ρ`.
pub fn master_equation_rhs(params: &SystemParams, rho: &Mat<Complex64>) -> Result<Mat<Complex64>> {
    let desc = params.space()?;
    let h = hamiltonian(params, &desc)?.to_dense();
    let mut out = (&h * rho - rho * &h) * faer::Scale(-I);
    let half = Complex64::from(0.5);
    for jump in jump_operators(params, &desc)? {
        let c = jump.operator.to_dense();
        let cdc = c.adjoint() * &c;
        out += &c * rho * c.adjoint() - (&cdc * rho + rho * &cdc) * faer::Scale(half);
    }
    Ok(out)
}

/// Upper bound on the Liouville-space dimension `(2^L n_max)²` accepted by
/// [`build_liouvillian`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiouvillianBudget {
    pub max_dim: usize,
}

impl Default for LiouvillianBudget {
    fn default() -> Self {
        // (2^6 · 10)²
        Self { max_dim: 640 * 640 }
    }
}

/// Sparse matrix of the master equation acting on column-stacked `vec(ρ)`.
#[derive(Clone, Debug)]
pub struct LiouvillianMatrix {
    pub matrix: SparseOperator,
    pub params: SystemParams,
    space: SpaceDescriptor,
}

impl LiouvillianMatrix {
    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    /// `L · vec(ρ)` reshaped back into a matrix.
    pub fn apply(&self, rho: &Mat<Complex64>) -> Mat<Complex64> {
        let d = self.space.dim();
        let v = vectorize(rho);
        let out = self.matrix.mul_vec(&v);
        Mat::from_fn(d, d, |i, j| out[i + j * d])
    }

    /// Largest modulus of `vec(I)† · L`, which vanishes for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.space.dim();
        let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
        for (r, c, v) in self.matrix.iter() {
            if r % (d + 1) == 0 {
                acc[c] += v;
            }
        }
        acc.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn vectorize(rho: &Mat<Complex64>) -> Vec<Complex64> {
    let d = rho.nrows();
    (0..d * d).map(|k| rho[(k % d, k / d)]).collect()
}

/// Assembles `L = −i(I ⊗ H − Hᵀ ⊗ I) + Σ_c [c̄ ⊗ c − ½ I ⊗ c†c − ½ (c†c)ᵀ ⊗ I]`.
pub fn build_liouvillian(params: &SystemParams, budget: LiouvillianBudget) -> Result<LiouvillianMatrix> {
    params.validate()?;
    let desc = params.space()?;
    let d = desc.dim();
    let required = d.checked_mul(d).unwrap_or(usize::MAX);
    if required > budget.max_dim {
        return Err(Error::SizeBudget { what: "Liouvillian dimension", required, budget: budget.max_dim });
    }
    let id = SparseOperator::identity(d);
    let h = hamiltonian(params, &desc)?;
    let mut l = id.kron(&h).sub(&h.transpose().kron(&id))?.scale(-I);
    let half = Complex64::from(-0.5);
    for jump in jump_operators(params, &desc)? {
        let c = &jump.operator;
        let cdc = c.adjoint().matmul(c)?;
        l = l
            .add(&c.conj().kron(c))?
            .add(&id.kron(&cdc).scale(half))?
            .add(&cdc.transpose().kron(&id).scale(half))?;
    }
    Ok(LiouvillianMatrix { matrix: l, params: *params, space: desc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::count_up;
    use faer::Mat;

    fn dense_eigenvalues_hermitian(m: &Mat<Complex64>) -> Vec<f64> {
        let evd = m.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let s = evd.S();
        let mut v: Vec<f64> = (0..m.nrows()).map(|i| s[i].re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    fn random_density(d: usize, seed: u64) -> Mat<Complex64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::<Complex64>::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut r = &a * a.adjoint();
        let tr: Complex64 = (0..d).map(|i| r[(i, i)]).sum();
        r *= faer::Scale(Complex64::from(1.0) / tr);
        r
    }

    fn max_abs(m: &Mat<Complex64>) -> f64 {
        let mut best = 0.0f64;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                best = best.max(m[(i, j)].norm());
            }
        }
        best
    }

    #[test]
    fn hxxz_single_site_is_zero() {
        let p = SystemParams::figure_defaults(1, 1.0, 1.0);
        assert_eq!(build_hxxz(&p, &p.space().unwrap()).unwrap().nnz(), 0);
    }

    #[test]
    fn hxxz_symmetric_single_excitation_has_energy_l_minus_1() {
        let p = SystemParams::figure_defaults(3, 1.0, 1.0).with_fock_dim(1);
        let d = p.space().unwrap();
        let h = build_hxxz(&p, &d).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); 8];
        // |↑↑↓⟩, |↑↓↑⟩, |↓↑↑⟩
        for s in [0b001, 0b010, 0b100] {
            psi[s] = Complex64::from(1.0);
        }
        let out = h.mul_vec(&psi);
        for s in 0..8 {
            assert!((out[s] - psi[s] * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn xx_dimer_spectrum() {
        // Independent 4x4 oracle: J(XX+YY) on two spins with J=1 has the matrix
        // [[0,0,0,0],[0,0,2,0],[0,2,0,0],[0,0,0,0]] in the {↑↑,↑↓,↓↑,↓↓} basis.
        let p = SystemParams::figure_defaults(2, 0.0, 1.0).with_fock_dim(1);
        let h = build_hxxz(&p, &p.space().unwrap()).unwrap();
        assert_eq!(h.get(1, 2), Complex64::from(2.0));
        assert_eq!(h.get(2, 1), Complex64::from(2.0));
        assert_eq!(h.nnz(), 2);
        let ev = dense_eigenvalues_hermitian(&h.to_dense());
        let expected = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bit_level_chain_matches_operator_algebra() {
        for (l, u) in [(2, 0.3), (3, 1.0), (4, -0.7), (5, 2.5)] {
            let p = SystemParams::figure_defaults(l, u, 1.0).with_fock_dim(1);
            let h = build_hxxz(&p, &p.space().unwrap()).unwrap();
            let mut t = Vec::new();
            for s in 0..(1usize << l) {
                t.push((s, s, Complex64::from(xxz_diagonal(&p, s))));
                for (s2, amp) in xxz_flips(&p, s) {
                    t.push((s2, s, Complex64::from(amp)));
                }
            }
            let fast = SparseOperator::from_triplets(1 << l, 1 << l, t);
            assert!(h.max_abs_diff(&fast).unwrap() < 1e-14);
        }
    }

    #[test]
    fn htc_zero_coupling_and_vacuum_rabi_element() {
        let p = SystemParams::figure_defaults(1, 1.0, 1.0).with_fock_dim(3).with_coupling(0.0);
        assert_eq!(build_htc(&p, &p.space().unwrap()).unwrap().nnz(), 0);
        let p = p.with_coupling(0.37);
        let d = p.space().unwrap();
        let h = build_htc(&p, &d).unwrap();
        // ⟨↑,0| H |↓,1⟩
        assert!((h.get(d.index(0, 0), d.index(1, 1)) - Complex64::from(0.37)).norm() < 1e-15);
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn htc_conserves_excitations() {
        let p = SystemParams::figure_defaults(2, 1.0, 1.0).with_fock_dim(4);
        let d = p.space().unwrap();
        let h = build_htc(&p, &d).unwrap();
        let comm = h.commutator(&excitation_number(&d)).unwrap();
        assert!(comm.max_abs() < 1e-14);
        let full = hamiltonian(&p, &d).unwrap();
        assert!(full.commutator(&excitation_number(&d)).unwrap().max_abs() < 1e-13);
        assert!(full.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn dissipator_examples() {
        let d = SpaceDescriptor::new(1, 3).unwrap();
        let a = boson_operator(&d, BosonKind::Annihilate);
        let pure = |idx: usize| {
            let mut m = Mat::<Complex64>::zeros(d.dim(), d.dim());
            m[(idx, idx)] = Complex64::from(1.0);
            DensityMatrix::from_dense(d, m)
        };
        let vac = apply_dissipator(&a, &pure(d.index(0, 0))).unwrap().to_dense();
        assert_eq!(max_abs(&vac), 0.0);
        let one = apply_dissipator(&a, &pure(d.index(1, 1))).unwrap().to_dense();
        let mut expected = Mat::<Complex64>::zeros(d.dim(), d.dim());
        expected[(d.index(1, 0), d.index(1, 0))] = Complex64::from(1.0);
        expected[(d.index(1, 1), d.index(1, 1))] = Complex64::from(-1.0);
        assert!(max_abs(&(one - expected)) < 1e-15);
    }

    #[test]
    fn dissipator_is_traceless_for_random_inputs() {
        use rand::{Rng, SeedableRng};
        let d = SpaceDescriptor::new(2, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for seed in 0..5 {
            let x = SparseOperator::from_triplets(
                12,
                12,
                (0..30).map(|_| {
                    (rng.random_range(0..12), rng.random_range(0..12), Complex64::new(rng.random(), rng.random()))
                }),
            );
            let rho = DensityMatrix::from_dense(d, random_density(12, seed));
            let out = apply_dissipator(&x, &rho).unwrap().to_dense();
            let tr: Complex64 = (0..12).map(|i| out[(i, i)]).sum();
            assert!(tr.norm() < 1e-12);
        }
        let bad = SparseOperator::identity(5);
        let rho = DensityMatrix::from_dense(d, random_density(12, 0));
        assert!(apply_dissipator(&bad, &rho).is_err());
    }

    #[test]
    fn liouvillian_matches_direct_superoperator() {
        let p = SystemParams::figure_defaults(2, 0.7, 1.3).with_fock_dim(3);
        let liou = build_liouvillian(&p, LiouvillianBudget::default()).unwrap();
        for seed in 0..3 {
            let rho = random_density(12, seed);
            let direct = master_equation_rhs(&p, &rho).unwrap();
            let via_matrix = liou.apply(&rho);
            assert!(max_abs(&(direct - via_matrix)) < 1e-12);
        }
        assert!(liou.trace_defect() < 1e-12);
    }

    #[test]
    fn pure_commutator_case() {
        let p = SystemParams::figure_defaults(2, 0.4, 0.0).with_coupling(0.0).with_loss(0.0).with_fock_dim(2);
        let liou = build_liouvillian(&p, LiouvillianBudget::default()).unwrap();
        let d = p.space().unwrap();
        let h = build_hxxz(&p, &d).unwrap();
        let id = SparseOperator::identity(d.dim());
        let expected = id.kron(&h).sub(&h.transpose().kron(&id)).unwrap().scale(-I);
        assert!(liou.matrix.max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn hermiticity_preserved_by_generator() {
        let p = SystemParams::figure_defaults(3, 1.2, 0.8).with_fock_dim(4);
        let liou = build_liouvillian(&p, LiouvillianBudget::default()).unwrap();
        for seed in 0..3 {
            let out = liou.apply(&random_density(32, seed));
            assert!(max_abs(&(out.adjoint().to_owned() - &out)) < 1e-12);
        }
    }

    #[test]
    fn pump_acts_on_spins_and_loss_on_cavity() {
        // Tracing out the cavity after the loss channel changes nothing; tracing
        // out the spins after the pump channel changes nothing.
        let p = SystemParams::figure_defaults(2, 1.0, 1.0).with_fock_dim(3);
        let d = p.space().unwrap();
        let rho = DensityMatrix::from_dense(d, random_density(12, 4));
        let jumps = jump_operators(&p, &d).unwrap();
        for jump in &jumps {
            let out = apply_dissipator(&jump.operator, &rho).unwrap().to_dense();
            let (ns, nc) = (d.spin_dim(), d.fock_dim());
            match jump.channel {
                Channel::Loss => {
                    for s1 in 0..ns {
                        for s2 in 0..ns {
                            let tr: Complex64 = (0..nc).map(|n| out[(d.index(s1, n), d.index(s2, n))]).sum();
                            assert!(tr.norm() < 1e-14);
                        }
                    }
                }
                Channel::Pump(_) => {
                    for n1 in 0..nc {
                        for n2 in 0..nc {
                            let tr: Complex64 = (0..ns).map(|s| out[(d.index(s, n1), d.index(s, n2))]).sum();
                            assert!(tr.norm() < 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn liouvillian_budget_refuses_large_systems() {
        let p = SystemParams::figure_defaults(6, 1.0, 1.0).with_fock_dim(20);
        let err = build_liouvillian(&p, LiouvillianBudget::default()).unwrap_err();
        assert!(matches!(err, Error::SizeBudget { .. }));
    }

    #[test]
    fn excitation_operator_counts_up_spins() {
        let d = SpaceDescriptor::new(3, 2).unwrap();
        let n = excitation_number(&d);
        assert_eq!(n.get(d.index(0, 1), d.index(0, 1)), Complex64::from(4.0));
        assert_eq!(count_up(0b111, 3), 0);
    }

    #[test]
    fn validation_rejects_bad_params() {
        let p = SystemParams::figure_defaults(2, 1.0, 1.0);
        assert!(p.validate().is_ok());
        assert!(p.with_pump(-1.0).validate().is_err());
        assert!(SystemParams { hopping: -1.0, ..p }.validate().is_err());
        assert!(p.without_chain().validate().is_ok());
        assert!(p.with_fock_dim(0).validate().is_err());
        assert!(p.with_interaction(f64::NAN).validate().is_err());
        assert!(p.with_interaction(-3.0).validate().is_ok());
    }
}
