//! Physical observables of a density matrix: photon statistics, magnetization,
//! cooperativities, ZZ correlations, and the decomposition of the emitter
//! state over eigenstates of the bare XXZ chain.

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::hilbert::{count_up, SpaceDescriptor};
use crate::model::{xxz_diagonal, xxz_flips, SystemParams};
use crate::ness::DensityMatrix;
use crate::{Error, Result};

/// Smallest `⟨a†a⟩` for which `g²(0)` is reported.
pub const PHOTON_FLOOR: f64 = 1e-12;
/// Smallest `|⟨Z_m⟩⟨Z_l⟩|` for which the normalized ZZ ratio is reported.
pub const ZZ_DENOMINATOR_FLOOR: f64 = 1e-9;

/// `⟨a†a⟩`.
pub fn photon_number(rho: &DensityMatrix) -> f64 {
    let space = *rho.space();
    rho.expect_diagonal(|i| space.split(i).1 as f64)
}

/// `⟨a†a†aa⟩ = ⟨n(n − 1)⟩`.
pub fn photon_second_moment(rho: &DensityMatrix) -> f64 {
    let space = *rho.space();
    rho.expect_diagonal(|i| {
        let n = space.split(i).1 as f64;
        n * (n - 1.0)
    })
}

/// `⟨a†a†aa⟩ / ⟨a†a⟩²`.
pub fn g2_zero(rho: &DensityMatrix) -> Result<f64> {
    g2_from_moments(photon_number(rho), photon_second_moment(rho))
}

pub fn g2_from_moments(n: f64, second: f64) -> Result<f64> {
    if n <= PHOTON_FLOOR {
        return Err(Error::UndefinedStatistic("g2(0) at vanishing photon number"));
    }
    Ok(second / (n * n))
}

/// `Z_T = Σ_i ⟨Z_i⟩`.
pub fn total_magnetization(rho: &DensityMatrix) -> f64 {
    let space = *rho.space();
    let l = space.num_spins();
    rho.expect_diagonal(|i| {
        let up = count_up(space.split(i).0, l) as f64;
        2.0 * up - l as f64
    })
}

fn z_value(space: &SpaceDescriptor, spin: usize, site: usize) -> f64 {
    if spin & space.site_mask(site) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_site(space: &SpaceDescriptor, site: usize) -> Result<()> {
    if site == 0 || site > space.num_spins() {
        return Err(Error::SiteOutOfRange { site, num_spins: space.num_spins() });
    }
    Ok(())
}

/// `⟨Z_site⟩` with 1-based sites.
pub fn site_magnetization(rho: &DensityMatrix, site: usize) -> Result<f64> {
    let space = *rho.space();
    check_site(&space, site)?;
    Ok(rho.expect_diagonal(|i| z_value(&space, space.split(i).0, site)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZzCorrelation {
    /// `⟨Z_m Z_l⟩ / (⟨Z_m⟩⟨Z_l⟩)`, absent when the denominator is below
    /// [`ZZ_DENOMINATOR_FLOOR`].
    pub ratio: Option<f64>,
    /// `⟨Z_m Z_l⟩`.
    pub raw: f64,
    pub z_m: f64,
    pub z_l: f64,
}

/// ZZ correlation between sites `m` and `l` (1-based).
pub fn zz_correlation(rho: &DensityMatrix, m: usize, l: usize) -> Result<ZzCorrelation> {
    let space = *rho.space();
    check_site(&space, m)?;
    check_site(&space, l)?;
    let raw = rho.expect_diagonal(|i| {
        let s = space.split(i).0;
        z_value(&space, s, m) * z_value(&space, s, l)
    });
    let z_m = site_magnetization(rho, m)?;
    let z_l = site_magnetization(rho, l)?;
    let denom = z_m * z_l;
    let ratio = (denom.abs() >= ZZ_DENOMINATOR_FLOOR).then(|| raw / denom);
    Ok(ZzCorrelation { ratio, raw, z_m, z_l })
}

/// Reference site `m = ⌊L/2⌋` of the correlation plots, 1-based.
pub fn reference_site(num_spins: usize) -> usize {
    (num_spins / 2).max(1)
}

fn signed_contrast(a: f64, b: f64, what: &'static str) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::InvalidParameter { name: "photon number", reason: format!("{what} needs non-negative inputs, got {a} and {b}") });
    }
    if a + b == 0.0 {
        return Err(Error::UndefinedStatistic(what));
    }
    Ok((a - b) / (a + b))
}

/// `C_f = (N_L − L N_1) / (N_L + L N_1)`.
pub fn cooperativity_fraction(n_many: f64, n_single: f64, num_spins: usize) -> Result<f64> {
    signed_contrast(n_many, num_spins as f64 * n_single, "cooperative fraction")
}

/// `C_XXZ = (N_XXZ − N_free) / (N_XXZ + N_free)`.
pub fn cooperativity_xxz(n_xxz: f64, n_free: f64) -> Result<f64> {
    signed_contrast(n_xxz, n_free, "XXZ cooperativity")
}

/// `tr_C ρ` on the `2^L` spin space (a descriptor with one Fock state).
pub fn partial_trace_cavity(rho: &DensityMatrix) -> DensityMatrix {
    let space = *rho.space();
    let ns = space.spin_dim();
    let mut out = Mat::<Complex64>::zeros(ns, ns);
    for (indices, m) in rho.blocks() {
        for (q, &j) in indices.iter().enumerate() {
            let (sj, nj) = space.split(j);
            for (p, &i) in indices.iter().enumerate() {
                let (si, ni) = space.split(i);
                if ni == nj {
                    out[(si, sj)] += m[(p, q)];
                }
            }
        }
    }
    let spin_space = SpaceDescriptor::new(space.num_spins(), 1).expect("valid spin count");
    DensityMatrix::from_dense(spin_space, out)
}

/// Largest chain handled by [`diagonalize_xxz`].
pub const MAX_DIAGONALIZED_SPINS: usize = 12;

/// Eigenstates of `H_XXZ` on the spin space, grouped by magnetization.
#[derive(Clone, Debug)]
pub struct XxzEigenbasis {
    pub num_spins: usize,
    /// Sorted by magnetization (descending), then energy.
    pub energies: Vec<f64>,
    pub magnetizations: Vec<i32>,
    /// Column `i` is eigenvector `i` on the `2^L` product basis.
    pub vectors: Mat<Complex64>,
    /// Index ranges of numerically degenerate `(energy, magnetization)` multiplets.
    pub multiplets: Vec<std::ops::Range<usize>>,
}

/// Diagonalizes `H_XXZ` inside each fixed-`Z_T` sector.
pub fn diagonalize_xxz(params: &SystemParams) -> Result<XxzEigenbasis> {
    let l = params.num_spins;
    if l == 0 || l > MAX_DIAGONALIZED_SPINS {
        return Err(Error::SizeBudget { what: "spins for dense diagonalization", required: l, budget: MAX_DIAGONALIZED_SPINS });
    }
    let ns = 1usize << l;
    let mut energies = Vec::with_capacity(ns);
    let mut magnetizations = Vec::with_capacity(ns);
    let mut vectors = Mat::<Complex64>::zeros(ns, ns);
    let mut multiplets = Vec::new();
    let tol = 1e-9 * params.max_rate().max(1.0) * l as f64;
    let mut col = 0;
    for downs in 0..=l {
        let members: Vec<usize> = (0..ns).filter(|&s| s.count_ones() as usize == downs).collect();
        let mut pos = vec![usize::MAX; ns];
        for (p, &s) in members.iter().enumerate() {
            pos[s] = p;
        }
        let d = members.len();
        let mut h = Mat::<Complex64>::zeros(d, d);
        for (c, &s) in members.iter().enumerate() {
            h[(c, c)] += Complex64::from(xxz_diagonal(params, s));
            for (s2, amp) in xxz_flips(params, s) {
                h[(pos[s2], c)] += Complex64::from(amp);
            }
        }
        let evd = h.self_adjoint_eigen(faer::Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let (u, s) = (evd.U(), evd.S().column_vector());
        let start = col;
        for k in 0..d {
            energies.push(s[k].re);
            magnetizations.push(l as i32 - 2 * downs as i32);
            for (p, &basis) in members.iter().enumerate() {
                vectors[(basis, col)] = u[(p, k)];
            }
            col += 1;
        }
        let mut first = start;
        for i in start + 1..=col {
            if i == col || energies[i] - energies[i - 1] > tol {
                multiplets.push(first..i);
                first = i;
            }
        }
    }
    Ok(XxzEigenbasis { num_spins: l, energies, magnetizations, vectors, multiplets })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralRecord {
    pub eigen_index: usize,
    pub energy: f64,
    pub magnetization: i32,
    pub probability: f64,
    /// `|⟨S, magnetization|i⟩|²` for the bright state of the same magnetization.
    pub bright_overlap: f64,
    /// Among the three most probable records.
    pub top3: bool,
}

/// Overlap above which a record counts as a bright state.
pub const BRIGHT_OVERLAP_THRESHOLD: f64 = 0.99;

impl SpectralRecord {
    pub fn is_bright(&self) -> bool {
        self.bright_overlap > BRIGHT_OVERLAP_THRESHOLD
    }
}

/// `p_i = ⟨i|ρ_spin|i⟩` over the XXZ eigenbasis.
///
/// Inside each degenerate multiplet the basis is rotated to diagonalize the
/// projected `ρ_spin`, which makes the probabilities independent of how the
/// eigensolver chose the multiplet basis. Records keep eigenbasis order.
pub fn spectral_decomposition(rho_spin: &DensityMatrix, basis: &XxzEigenbasis) -> Result<Vec<SpectralRecord>> {
    let ns = 1usize << basis.num_spins;
    if rho_spin.dim() != ns {
        return Err(Error::DimensionMismatch { op: "spectral_decomposition", left: (rho_spin.dim(), rho_spin.dim()), right: (ns, ns) });
    }
    let rho = rho_spin.to_dense();
    let bright = bright_states(basis.num_spins);
    let mut records = Vec::with_capacity(ns);
    for range in &basis.multiplets {
        let v = basis.vectors.subcols(range.start, range.len());
        let projected = v.adjoint() * &rho * v;
        let projected = Mat::from_fn(range.len(), range.len(), |i, j| (projected[(i, j)] + projected[(j, i)].conj()) * 0.5);
        let evd = projected.self_adjoint_eigen(faer::Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let rotated = v * evd.U();
        let probs = evd.S().column_vector();
        for k in 0..range.len() {
            let idx = range.start + k;
            let m = basis.magnetizations[idx];
            let n = ((basis.num_spins as i32 - m) / 2) as usize;
            let overlap: Complex64 = bright[n].amplitudes.iter().enumerate().map(|(s, &a)| rotated[(s, k)] * a).sum();
            records.push(SpectralRecord {
                eigen_index: idx,
                energy: basis.energies[idx],
                magnetization: m,
                probability: probs[k].re,
                bright_overlap: overlap.norm_sqr(),
                top3: false,
            });
        }
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[b].probability.total_cmp(&records[a].probability));
    for &i in order.iter().take(3) {
        records[i].top3 = true;
    }
    Ok(records)
}

/// `|S, L − 2n⟩`, the uniform superposition of all states with `n` down spins.
#[derive(Clone, Debug, PartialEq)]
pub struct BrightState {
    pub n: usize,
    pub magnetization: i32,
    /// Real amplitudes on the `2^L` spin basis.
    pub amplitudes: Vec<f64>,
}

pub fn bright_states(num_spins: usize) -> Vec<BrightState> {
    let ns = 1usize << num_spins;
    (0..=num_spins)
        .map(|n| {
            let count = (0..ns).filter(|s| s.count_ones() as usize == n).count();
            let a = 1.0 / (count as f64).sqrt();
            BrightState {
                n,
                magnetization: num_spins as i32 - 2 * n as i32,
                amplitudes: (0..ns).map(|s| if s.count_ones() as usize == n { a } else { 0.0 }).collect(),
            }
        })
        .collect()
}

/// `‖H_XXZ|S, L−2n⟩ − (L−1)J|S, L−2n⟩‖` for `n = 0..=L`.
pub fn bright_ladder_residuals(params: &SystemParams) -> Vec<f64> {
    let l = params.num_spins;
    let target = (l as f64 - 1.0) * params.hopping;
    bright_states(l)
        .iter()
        .map(|b| {
            let mut out = vec![0.0; b.amplitudes.len()];
            for (s, &a) in b.amplitudes.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                out[s] += (xxz_diagonal(params, s) - target) * a;
                for (s2, amp) in xxz_flips(params, s) {
                    out[s2] += amp * a;
                }
            }
            out.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .collect()
}

/// `⟨S|H_XXZ|S⟩` for each bright state.
pub fn bright_energies(params: &SystemParams) -> Vec<f64> {
    bright_states(params.num_spins)
        .iter()
        .map(|b| {
            let mut e = 0.0;
            for (s, &a) in b.amplitudes.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                e += xxz_diagonal(params, s) * a * a;
                for (s2, amp) in xxz_flips(params, s) {
                    e += b.amplitudes[s2] * amp * a;
                }
            }
            e
        })
        .collect()
}
