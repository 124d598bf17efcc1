//! Exact non-equilibrium steady state.
//!
//! The steady state solves `L vec(ρ) = 0` with `tr ρ = 1`. Adding the trace row
//! to the equation of the first vectorized element gives the bordered system
//!
//! ```text
//! (L + e₀ vec(I)†) x = e₀
//! ```
//!
//! which is nonsingular exactly when the steady state is unique. Two routes
//! solve it:
//!
//! - [`solve_ness`] factorizes the full `(2^L n_max)²` Liouvillian. It is the
//!   literal construction and serves as a reference at small sizes.
//! - [`solve_ness_with`] works on the excitation-number blocks of
//!   [`crate::sector`], where the unique steady state lives, and picks sparse LU
//!   or preconditioned GMRES by size. It is what every production path uses.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::hilbert::SpaceDescriptor;
use crate::linalg::{self, GmresOptions, SparseLu};
use crate::model::{LiouvillianBudget, LiouvillianMatrix, SystemParams};
use crate::sector::{ExcitationSectors, SectorLiouvillian};
use crate::{CutoffTrial, Error, Result, SparseOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Probe threshold on `σ_min(B) / ‖L‖_max` below which the bordered matrix is
/// declared singular.
const SINGULAR_PROBE: f64 = 1e-11;

/// Laplace variable of the relaxation solve, relative to `‖L‖_max`.
const RELAXATION_SHIFT: f64 = 1e-8;
/// Repeated resolvent applications; each one multiplies the decaying part by `s / gap`.
const RELAXATION_SWEEPS: usize = 3;

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    matrix: Mat<Complex64>,
}

/// A density matrix stored as dense blocks on disjoint sets of basis indices.
///
/// Elements coupling two different blocks are zero. A general matrix is a
/// single block over the whole space; steady states are stored per
/// excitation-number sector, which keeps `L = 6` states at a few megabytes.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: SpaceDescriptor,
    blocks: Vec<Block>,
    locator: Vec<(usize, usize)>,
}

impl DensityMatrix {
    pub fn from_dense(space: SpaceDescriptor, matrix: Mat<Complex64>) -> Self {
        assert_eq!(matrix.nrows(), space.dim(), "matrix does not match its space");
        assert_eq!(matrix.ncols(), space.dim(), "matrix does not match its space");
        let indices = (0..space.dim()).collect();
        Self::from_blocks(space, vec![(indices, matrix)]).expect("single block covers the space")
    }

    /// Builds from `(indices, block)` pairs. Indices must be disjoint and
    /// together cover the space.
    pub fn from_blocks(space: SpaceDescriptor, parts: Vec<(Vec<usize>, Mat<Complex64>)>) -> Result<Self> {
        let mut locator = vec![(usize::MAX, 0); space.dim()];
        let mut blocks = Vec::with_capacity(parts.len());
        for (b, (indices, matrix)) in parts.into_iter().enumerate() {
            if matrix.nrows() != indices.len() || matrix.ncols() != indices.len() {
                return Err(Error::DimensionMismatch {
                    op: "DensityMatrix::from_blocks",
                    left: (matrix.nrows(), matrix.ncols()),
                    right: (indices.len(), indices.len()),
                });
            }
            for (pos, &i) in indices.iter().enumerate() {
                if i >= space.dim() || locator[i].0 != usize::MAX {
                    return Err(Error::InvalidParameter { name: "blocks", reason: format!("index {i} repeated or out of range") });
                }
                locator[i] = (b, pos);
            }
            blocks.push(Block { indices, matrix });
        }
        if locator.iter().any(|l| l.0 == usize::MAX) {
            return Err(Error::InvalidParameter { name: "blocks", reason: "blocks do not cover the space".into() });
        }
        Ok(Self { space, blocks, locator })
    }

    /// Unpacks a vector in the packed sector layout.
    pub fn from_packed(sectors: &ExcitationSectors, packed: &[Complex64]) -> Self {
        let parts = (0..sectors.num_sectors())
            .filter(|&k| sectors.sector_dim(k) > 0)
            .map(|k| (sectors.members(k).to_vec(), sectors.block(packed, k).to_owned()))
            .collect();
        Self::from_blocks(*sectors.space(), parts).expect("sectors partition the space")
    }

    /// Pure state `|ψ⟩⟨ψ|`.
    pub fn pure(space: SpaceDescriptor, psi: &[Complex64]) -> Self {
        let d = space.dim();
        Self::from_dense(space, Mat::from_fn(d, d, |i, j| psi[i] * psi[j].conj()))
    }

    /// `|i⟩⟨i|` for a basis index.
    pub fn basis_state(space: SpaceDescriptor, index: usize) -> Self {
        let mut psi = vec![ZERO; space.dim()];
        psi[index] = ONE;
        Self::pure(space, &psi)
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `(indices, matrix)` for every stored block.
    pub fn blocks(&self) -> impl Iterator<Item = (&[usize], &Mat<Complex64>)> {
        self.blocks.iter().map(|b| (b.indices.as_slice(), &b.matrix))
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        let (br, pr) = self.locator[row];
        let (bc, pc) = self.locator[col];
        if br == bc {
            self.blocks[br].matrix[(pr, pc)]
        } else {
            ZERO
        }
    }

    /// Real parts of the diagonal, i.e. basis-state populations.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.element(i, i).re).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(|b| (0..b.indices.len()).map(|i| b.matrix[(i, i)]).sum::<Complex64>()).sum()
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let d = self.dim();
        let mut out = Mat::<Complex64>::zeros(d, d);
        for b in &self.blocks {
            for (q, &j) in b.indices.iter().enumerate() {
                for (p, &i) in b.indices.iter().enumerate() {
                    out[(i, j)] = b.matrix[(p, q)];
                }
            }
        }
        out
    }

    /// Largest entry of `ρ − ρ†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for b in &self.blocks {
            let m = &b.matrix;
            for j in 0..m.ncols() {
                for i in 0..=j {
                    worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                }
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut lowest = f64::INFINITY;
        for b in &self.blocks {
            let h = hermitian_part(&b.matrix);
            let evd = h.self_adjoint_eigen(faer::Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
            let s = evd.S().column_vector();
            for i in 0..h.nrows() {
                lowest = lowest.min(s[i].re);
            }
        }
        Ok(lowest)
    }

    /// Total population of the highest retained Fock state.
    pub fn top_fock_population(&self) -> f64 {
        let top = self.space.fock_dim() - 1;
        (0..self.space.spin_dim()).map(|s| self.element(self.space.index(s, top), self.space.index(s, top)).re).sum()
    }

    /// Replaces `ρ` by `(ρ + ρ†) / (2 Re tr ρ)`.
    pub fn symmetrize_and_normalize(&mut self) {
        let tr = self.trace().re;
        for b in &mut self.blocks {
            b.matrix = hermitian_part(&b.matrix) * faer::Scale(Complex64::from(1.0 / tr));
        }
    }

    /// `tr(ρ O)` for an operator diagonal in the product basis.
    pub fn expect_diagonal(&self, f: impl Fn(usize) -> f64) -> f64 {
        let f = &f;
        self.blocks.iter().flat_map(|b| b.indices.iter().enumerate().map(move |(p, &i)| b.matrix[(p, p)].re * f(i))).sum()
    }
}

fn hermitian_part(m: &Mat<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Validation of a density matrix without reference to a generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDiagnostics {
    pub hermiticity_defect: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub top_fock_population: f64,
    /// All three checks pass at the requested tolerance (positivity at `−tol`).
    pub within_tolerance: bool,
}

/// Computes the density-matrix checks. The input is not modified.
pub fn validate_density_matrix(rho: &DensityMatrix, tol: f64) -> Result<StateDiagnostics> {
    let hermiticity_defect = rho.hermiticity_defect();
    let trace_error = (rho.trace() - ONE).norm();
    let min_eigenvalue = rho.min_eigenvalue()?;
    let top_fock_population = rho.top_fock_population();
    Ok(StateDiagnostics {
        hermiticity_defect,
        trace_error,
        min_eigenvalue,
        top_fock_population,
        within_tolerance: hermiticity_defect <= tol && trace_error <= tol && min_eigenvalue >= -tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NessRoute {
    /// Sparse LU of the full bordered Liouvillian.
    FullLu,
    /// Sparse LU on the excitation-number blocks.
    SectorLu,
    /// GMRES on the excitation-number blocks.
    SectorGmres,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NessMethod {
    /// Sector LU below [`NessOptions::direct_limit`], GMRES above.
    Auto,
    FullLiouvillian,
    SectorDirect,
    SectorIterative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NessOptions {
    pub method: NessMethod,
    /// Accepted residual `‖L vec(ρ)‖₂ / ‖L‖_max`.
    pub residual_tolerance: f64,
    /// Largest packed sector system factorized directly in `Auto` mode.
    pub direct_limit: usize,
    /// Largest packed sector system attempted at all.
    pub sector_budget: usize,
    pub liouvillian_budget: LiouvillianBudget,
    pub gmres: GmresOptions,
    /// Run the singularity probe on the bordered matrix.
    pub probe_uniqueness: bool,
}

impl Default for NessOptions {
    fn default() -> Self {
        Self {
            method: NessMethod::Auto,
            residual_tolerance: 1e-9,
            direct_limit: 12_000,
            sector_budget: 1_000_000,
            liouvillian_budget: LiouvillianBudget::default(),
            gmres: GmresOptions { restart: 80, max_iterations: 6000, tolerance: 1e-11 },
            probe_uniqueness: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NessDiagnostics {
    /// `‖L vec(ρ)‖₂` after trace normalization, before symmetrization.
    pub residual_norm: f64,
    /// `‖L‖_max` of the operator that was solved.
    pub liouvillian_max: f64,
    /// `|tr x − 1|` of the raw solution vector.
    pub trace_error: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub top_fock_population: f64,
    /// Estimate of `σ_min` of the bordered matrix, when probed.
    pub uniqueness_probe: Option<f64>,
    pub iterations: usize,
    pub route: NessRoute,
}

#[derive(Clone, Debug)]
pub struct NessSolution {
    pub params: SystemParams,
    pub state: DensityMatrix,
    pub diagnostics: NessDiagnostics,
}

/// Solves the bordered full Liouvillian by sparse LU.
pub fn solve_ness(liou: &LiouvillianMatrix) -> Result<NessSolution> {
    let d = liou.space().dim();
    let n = d * d;
    let lmax = liou.matrix.max_abs();
    let trace_positions: Vec<usize> = (0..d).map(|i| i * (d + 1)).collect();
    let border = trace_positions.iter().map(|&c| (0, c, ONE));
    let bordered = SparseOperator::from_triplets(n, n, liou.matrix.iter().chain(border));
    let lu = SparseLu::new(&bordered).map_err(|_| Error::DegenerateSteadyState { probe: 0.0 })?;
    let mut e0 = vec![ZERO; n];
    e0[0] = ONE;
    let x = lu.solve(&e0).map_err(|_| Error::DegenerateSteadyState { probe: 0.0 })?;
    let probe = probe_direct(&lu, n, lmax)?;

    let trace: Complex64 = trace_positions.iter().map(|&p| x[p]).sum();
    let x: Vec<Complex64> = x.iter().map(|v| v / trace).collect();
    let residual = linalg::norm(&liou.matrix.mul_vec(&x));
    let rho = DensityMatrix::from_dense(*liou.space(), Mat::from_fn(d, d, |i, j| x[i + j * d]));
    finish(liou.params, rho, residual, lmax, (trace - ONE).norm(), Some(probe), 1, NessRoute::FullLu, 1e-9)
}

/// Solves for the steady state of `params` on the excitation-number blocks.
pub fn solve_ness_with(params: &SystemParams, opts: &NessOptions) -> Result<NessSolution> {
    if opts.method == NessMethod::FullLiouvillian {
        let liou = crate::model::build_liouvillian(params, opts.liouvillian_budget)?;
        let sol = solve_ness(&liou)?;
        if sol.diagnostics.residual_norm > opts.residual_tolerance * sol.diagnostics.liouvillian_max {
            return Err(Error::Convergence {
                residual: sol.diagnostics.residual_norm,
                target: opts.residual_tolerance * sol.diagnostics.liouvillian_max,
                iterations: 1,
            });
        }
        return Ok(sol);
    }
    params.validate()?;
    check_budget(params, opts)?;
    let liou = SectorLiouvillian::new(params)?;
    solve_sectors(&liou, opts, None)
}

/// Refuses oversized problems before any operator is built.
fn check_budget(params: &SystemParams, opts: &NessOptions) -> Result<()> {
    let required = ExcitationSectors::packed_len_for(params.num_spins, params.fock_dim);
    if required > opts.sector_budget {
        return Err(Error::SizeBudget { what: "sector unknowns", required, budget: opts.sector_budget });
    }
    Ok(())
}

fn use_direct(liou: &SectorLiouvillian, opts: &NessOptions) -> bool {
    match opts.method {
        NessMethod::SectorDirect => true,
        NessMethod::SectorIterative => false,
        _ => liou.len() <= opts.direct_limit,
    }
}

/// Sector solve with an optional warm start in the packed layout.
fn solve_sectors(liou: &SectorLiouvillian, opts: &NessOptions, guess: Option<Vec<Complex64>>) -> Result<NessSolution> {
    check_budget(liou.params(), opts)?;
    let sec = liou.sectors();
    let n = liou.len();
    let lmax = liou.max_abs();
    let anchor = sec.packed_index(0, 0).expect("diagonal element");
    let trace_positions: Vec<usize> = sec.diagonal_positions().collect();
    let mut e0 = vec![ZERO; n];
    e0[anchor] = ONE;

    let (x, probe, iterations, route) = if use_direct(liou, opts) {
        let lu = bordered_lu(liou, &trace_positions, anchor, ZERO)?;
        let x = lu.solve(&e0).map_err(|_| Error::DegenerateSteadyState { probe: 0.0 })?;
        let probe = if opts.probe_uniqueness { Some(probe_direct(&lu, n, lmax)?) } else { None };
        (x, probe, 1, NessRoute::SectorLu)
    } else {
        let pre = liou.block_preconditioner(ZERO)?;
        let bordered = |v: &[Complex64], out: &mut [Complex64]| {
            liou.apply(v, out, ZERO);
            out[anchor] += trace_positions.iter().map(|&p| v[p]).sum::<Complex64>();
        };
        let target = 0.25 * opts.residual_tolerance * lmax;
        let gm = GmresOptions { tolerance: opts.gmres.tolerance.min(target), ..opts.gmres };
        let mut x = guess.unwrap_or_else(|| e0.clone());
        let out = linalg::gmres(bordered, |v, o| pre.apply(v, o), &e0, &mut x, gm);
        if !out.converged {
            return Err(Error::Convergence { residual: out.relative_residual, target: gm.tolerance, iterations: out.iterations });
        }
        let probe = if opts.probe_uniqueness {
            let r = probe_vector(n);
            let mut y = vec![ZERO; n];
            let gp = GmresOptions { tolerance: 1e-6, ..opts.gmres };
            let po = linalg::gmres(bordered, |v, o| pre.apply(v, o), &r, &mut y, gp);
            let estimate = if po.converged { 1.0 / linalg::norm(&y) } else { 0.0 };
            if estimate < SINGULAR_PROBE * lmax {
                return Err(Error::DegenerateSteadyState { probe: estimate });
            }
            Some(estimate)
        } else {
            None
        };
        (x, probe, out.iterations, NessRoute::SectorGmres)
    };

    let trace: Complex64 = trace_positions.iter().map(|&p| x[p]).sum();
    let x: Vec<Complex64> = x.iter().map(|v| v / trace).collect();
    let mut lx = vec![ZERO; n];
    liou.apply(&x, &mut lx, ZERO);
    let residual = linalg::norm(&lx);
    let rho = DensityMatrix::from_packed(sec, &x);
    finish(*liou.params(), rho, residual, lmax, (trace - ONE).norm(), probe, iterations, route, opts.residual_tolerance)
}

fn bordered_lu(liou: &SectorLiouvillian, trace_positions: &[usize], anchor: usize, shift: Complex64) -> Result<SparseLu> {
    let n = liou.len();
    let border = trace_positions.iter().map(|&c| (anchor, c, ONE));
    let m = SparseOperator::from_triplets(n, n, liou.assemble(shift).into_iter().chain(border));
    SparseLu::new(&m).map_err(|_| Error::DegenerateSteadyState { probe: 0.0 })
}

fn probe_vector(n: usize) -> Vec<Complex64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut r: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let nr = linalg::norm(&r);
    r.iter_mut().for_each(|v| *v /= nr);
    r
}

/// `‖r‖ / ‖B⁻¹ r‖` for a fixed random unit `r`, an upper bound on `σ_min(B)`.
fn probe_direct(lu: &SparseLu, n: usize, lmax: f64) -> Result<f64> {
    let y = lu.solve(&probe_vector(n)).map_err(|_| Error::DegenerateSteadyState { probe: 0.0 })?;
    let estimate = 1.0 / linalg::norm(&y);
    if estimate < SINGULAR_PROBE * lmax {
        return Err(Error::DegenerateSteadyState { probe: estimate });
    }
    Ok(estimate)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    params: SystemParams,
    mut rho: DensityMatrix,
    residual: f64,
    lmax: f64,
    trace_error: f64,
    probe: Option<f64>,
    iterations: usize,
    route: NessRoute,
    tolerance: f64,
) -> Result<NessSolution> {
    if !residual.is_finite() || residual > tolerance * lmax {
        return Err(Error::Convergence { residual, target: tolerance * lmax, iterations });
    }
    let hermiticity_defect = rho.hermiticity_defect();
    rho.symmetrize_and_normalize();
    let diagnostics = NessDiagnostics {
        residual_norm: residual,
        liouvillian_max: lmax,
        trace_error,
        hermiticity_defect,
        min_eigenvalue: rho.min_eigenvalue()?,
        top_fock_population: rho.top_fock_population(),
        uniqueness_probe: probe,
        iterations,
        route,
    };
    Ok(NessSolution { params, state: rho, diagnostics })
}

/// Long-time limit of the evolution from `initial`, for generators whose
/// steady state is not unique.
///
/// Applies the resolvent `s (s − L)⁻¹` three times at `s = 1e−8 ‖L‖_max`. The
/// stationary part of `ρ₀` passes unchanged while a mode decaying at rate `γ`
/// shrinks by `(s / γ)³`, so the result is `lim_{t→∞} e^{Lt} ρ₀` unless some
/// gap is absurdly small. Only the excitation-diagonal blocks of `initial` are used.
pub fn relax_to_steady_state(params: &SystemParams, initial: &DensityMatrix, opts: &NessOptions) -> Result<NessSolution> {
    params.validate()?;
    check_budget(params, opts)?;
    let liou = SectorLiouvillian::new(params)?;
    if initial.space() != liou.sectors().space() {
        return Err(Error::DimensionMismatch {
            op: "relax_to_steady_state",
            left: (initial.dim(), initial.dim()),
            right: (liou.sectors().space().dim(), liou.sectors().space().dim()),
        });
    }
    let sec = liou.sectors();
    let n = liou.len();
    let lmax = liou.max_abs();
    let s = Complex64::from(RELAXATION_SHIFT * lmax);
    let mut x = pack_state(initial, sec);
    let lu = if use_direct(&liou, opts) { Some(SparseLu::new(&SparseOperator::from_triplets(n, n, liou.assemble(s)))?) } else { None };
    let pre = if lu.is_none() { Some(liou.block_preconditioner(s)?) } else { None };
    let mut iterations = 0;
    for _ in 0..RELAXATION_SWEEPS {
        let rhs: Vec<Complex64> = x.iter().map(|v| -s * v).collect();
        x = match (&lu, &pre) {
            (Some(lu), _) => {
                iterations += 1;
                lu.solve(&rhs)?
            }
            (None, Some(pre)) => {
                let mut y = x.clone();
                let out = linalg::gmres(|v, o| liou.apply(v, o, s), |v, o| pre.apply(v, o), &rhs, &mut y, opts.gmres);
                if !out.converged {
                    return Err(Error::Convergence { residual: out.relative_residual, target: opts.gmres.tolerance, iterations: out.iterations });
                }
                iterations += out.iterations;
                y
            }
            (None, None) => unreachable!(),
        };
        let trace = sec.trace(&x);
        x.iter_mut().for_each(|v| *v /= trace);
    }
    let route = if lu.is_some() { NessRoute::SectorLu } else { NessRoute::SectorGmres };
    let trace = sec.trace(&x);
    let mut lx = vec![ZERO; n];
    liou.apply(&x, &mut lx, ZERO);
    let residual = linalg::norm(&lx);
    let rho = DensityMatrix::from_packed(sec, &x);
    finish(*params, rho, residual, lmax, (trace - ONE).norm(), None, iterations, route, opts.residual_tolerance)
}

/// All spins down, cavity empty: `|↓…↓⟩ ⊗ |0⟩`.
pub fn ground_vacuum(space: SpaceDescriptor) -> DensityMatrix {
    DensityMatrix::basis_state(space, space.index(space.spin_dim() - 1, 0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSchedule {
    /// Geometric growth factor between cutoffs.
    pub growth: f64,
    pub top_population: f64,
    pub relative_change: f64,
    /// Photon numbers below this are treated as zero when comparing cutoffs.
    pub photon_floor: f64,
}

impl Default for CutoffSchedule {
    fn default() -> Self {
        Self { growth: 1.5, top_population: 1e-8, relative_change: 1e-4, photon_floor: 1e-12 }
    }
}

impl CutoffSchedule {
    pub fn first(&self, num_spins: usize) -> usize {
        num_spins + 2
    }

    pub fn next(&self, fock_dim: usize) -> usize {
        ((fock_dim as f64 * self.growth).ceil() as usize).max(fock_dim + 1)
    }
}

#[derive(Clone, Debug)]
pub struct AdaptiveNess {
    /// Solution at the chosen cutoff.
    pub solution: NessSolution,
    pub chosen_fock_dim: usize,
    /// Every cutoff solved, in order. The last entry is the confirming one.
    pub trend: Vec<CutoffTrial>,
    /// Singularity probe taken at the first cutoff.
    pub uniqueness_probe: Option<f64>,
}

/// Grows the Fock cutoff until the top state is empty and the photon number no
/// longer moves.
///
/// Cutoff `n_k` is accepted when its top-Fock population is below the
/// threshold and the photon number at the next cutoff `n_{k+1}` agrees to the
/// relative tolerance. The solve at `n_{k+1}` is warm-started from `n_k`.
pub fn adaptive_cutoff_ness(params: &SystemParams, opts: &NessOptions, schedule: &CutoffSchedule) -> Result<AdaptiveNess> {
    params.validate()?;
    let mut fock_dim = schedule.first(params.num_spins);
    let mut trend: Vec<CutoffTrial> = Vec::new();
    let mut previous: Option<(NessSolution, Vec<Complex64>, ExcitationSectors)> = None;
    let mut uniqueness_probe = None;
    loop {
        let p = params.with_fock_dim(fock_dim);
        if trend.is_empty() {
            check_budget(&p, opts)?;
        } else if ExcitationSectors::packed_len_for(p.num_spins, p.fock_dim) > opts.sector_budget {
            return Err(Error::CutoffBudget { next: fock_dim, trend });
        }
        let liou = SectorLiouvillian::new(&p)?;
        let guess = previous.as_ref().map(|(_, x, sec)| embed_packed(sec, x, liou.sectors()));
        // Uniqueness does not depend on the cutoff once it is probed at the first one.
        let local = NessOptions { probe_uniqueness: opts.probe_uniqueness && previous.is_none(), ..*opts };
        let solution = solve_sectors(&liou, &local, guess)?;
        if previous.is_none() {
            uniqueness_probe = solution.diagnostics.uniqueness_probe;
        }
        let photons = crate::observables::photon_number(&solution.state);
        let top = solution.diagnostics.top_fock_population;
        trend.push(CutoffTrial { fock_dim, photon_number: photons, top_fock_population: top });

        if let Some((prev, _, _)) = &previous {
            let prev_trial = trend[trend.len() - 2];
            let scale = photons.abs().max(prev_trial.photon_number.abs());
            let change = if scale < schedule.photon_floor { 0.0 } else { (photons - prev_trial.photon_number).abs() / scale };
            if prev_trial.top_fock_population < schedule.top_population && change < schedule.relative_change {
                return Ok(AdaptiveNess { solution: prev.clone(), chosen_fock_dim: prev_trial.fock_dim, trend, uniqueness_probe });
            }
        }
        let packed = pack_state(&solution.state, liou.sectors());
        previous = Some((solution, packed, liou.sectors().clone()));
        fock_dim = schedule.next(fock_dim);
    }
}

/// Packs a block-diagonal state into the sector layout.
pub fn pack_state(rho: &DensityMatrix, sec: &ExcitationSectors) -> Vec<Complex64> {
    let mut out = vec![ZERO; sec.packed_len()];
    for k in 0..sec.num_sectors() {
        let m = sec.members(k);
        let d = m.len();
        let off = sec.block_range(k).start;
        for b in 0..d {
            for a in 0..d {
                out[off + a + b * d] = rho.element(m[a], m[b]);
            }
        }
    }
    out
}

/// Copies a packed vector to a larger cutoff, zero-filling new Fock states.
fn embed_packed(from: &ExcitationSectors, x: &[Complex64], to: &ExcitationSectors) -> Vec<Complex64> {
    let (fs, ts) = (from.space(), to.space());
    let mut out = vec![ZERO; to.packed_len()];
    for k in 0..from.num_sectors() {
        let m = from.members(k);
        let d = m.len();
        let off = from.block_range(k).start;
        for b in 0..d {
            let (sb, nb) = fs.split(m[b]);
            for a in 0..d {
                let (sa, na) = fs.split(m[a]);
                if let Some(p) = to.packed_index(ts.index(sa, na), ts.index(sb, nb)) {
                    out[p] = x[off + a + b * d];
                }
            }
        }
    }
    out
}
