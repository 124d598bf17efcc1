//! Excitation-number block structure of the Liouvillian.
//!
//! `H_XXZ + H_TC` conserves `N = a†a + #↑`, the pump raises `N` by one and the
//! loss lowers it by one. A steady state that is unique therefore commutes with
//! `N` and lives in the blocks `ρ_k = Π_k ρ Π_k`. Restricted to those blocks the
//! master equation reads
//!
//! ```text
//! 0 = −i(G_k ρ_k − ρ_k G_k†) + P Σ_i σ_i† ρ_{k−1} σ_i + κ a ρ_{k+1} a†
//! G_k = Π_k (H − i/2 (P Σ_i σ_i σ_i† + κ a†a)) Π_k
//! ```
//!
//! which is block tridiagonal in `k`. Each diagonal block is a Sylvester
//! operator, inverted exactly through the eigendecomposition of `G_k`.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::hilbert::{count_up, SpaceDescriptor, SparseOperator};
use crate::model::{xxz_diagonal, xxz_flips, SystemParams};
use crate::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Partition of the basis by total excitation number.
#[derive(Clone, Debug)]
pub struct ExcitationSectors {
    space: SpaceDescriptor,
    members: Vec<Vec<usize>>,
    locate: Vec<(usize, usize)>,
    offsets: Vec<usize>,
}

impl ExcitationSectors {
    pub fn new(space: SpaceDescriptor) -> Self {
        let l = space.num_spins();
        let mut members = vec![Vec::new(); l + space.fock_dim()];
        let mut locate = vec![(0, 0); space.dim()];
        for (idx, slot) in locate.iter_mut().enumerate() {
            let (spin, n) = space.split(idx);
            let k = n + count_up(spin, l);
            *slot = (k, members[k].len());
            members[k].push(idx);
        }
        let mut offsets = Vec::with_capacity(members.len() + 1);
        let mut acc = 0;
        for m in &members {
            offsets.push(acc);
            acc += m.len() * m.len();
        }
        offsets.push(acc);
        Self { space, members, locate, offsets }
    }

    /// `packed_len` for `L` spins and `fock_dim` Fock states, counted without
    /// building the partition.
    pub fn packed_len_for(num_spins: usize, fock_dim: usize) -> usize {
        let mut binom = vec![1usize; num_spins + 1];
        for k in 1..=num_spins {
            binom[k] = binom[k - 1].saturating_mul(num_spins + 1 - k) / k;
        }
        (0..num_spins + fock_dim).fold(0usize, |acc, total| {
            let lo = total.saturating_sub(fock_dim - 1);
            let dim = (lo..=total.min(num_spins)).fold(0usize, |d, up| d.saturating_add(binom[up]));
            acc.saturating_add(dim.saturating_mul(dim))
        })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn num_sectors(&self) -> usize {
        self.members.len()
    }

    /// Basis indices with `N = k`, ascending.
    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    pub fn sector_dim(&self, k: usize) -> usize {
        self.members[k].len()
    }

    /// `(k, position inside sector k)` of a basis index.
    pub fn locate(&self, index: usize) -> (usize, usize) {
        self.locate[index]
    }

    /// Length of the packed vector holding every `ρ_k` column-major.
    pub fn packed_len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Packed position of `ρ[row, col]` when both indices share a sector.
    pub fn packed_index(&self, row: usize, col: usize) -> Option<usize> {
        let (kr, a) = self.locate[row];
        let (kc, b) = self.locate[col];
        (kr == kc).then(|| self.offsets[kr] + a + b * self.members[kr].len())
    }

    /// Packed positions of the diagonal elements.
    pub fn diagonal_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().flat_map(move |(k, m)| {
            let d = m.len();
            (0..d).map(move |a| self.offsets[k] + a + a * d)
        })
    }

    pub fn trace(&self, packed: &[Complex64]) -> Complex64 {
        self.diagonal_positions().map(|p| packed[p]).sum()
    }

    pub fn block<'a>(&self, packed: &'a [Complex64], k: usize) -> MatRef<'a, Complex64> {
        let d = self.members[k].len();
        MatRef::from_column_major_slice(&packed[self.block_range(k)], d, d)
    }
}

/// Block-tridiagonal representation of the Liouvillian on the `N`-diagonal blocks.
#[derive(Clone, Debug)]
pub struct SectorLiouvillian {
    params: SystemParams,
    sectors: ExcitationSectors,
    /// `G_k` in sector-local indices.
    effective: Vec<SparseOperator>,
    /// `[k][site]`: `(dst in k, src in k−1)` for `σ_site†`.
    pump_maps: Vec<Vec<Vec<(usize, usize)>>>,
    /// `[k]`: `(dst in k, src in k+1, √n_src)` for `a`.
    loss_maps: Vec<Vec<(usize, usize, f64)>>,
    max_abs: f64,
}

impl SectorLiouvillian {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let space = params.space()?;
        let sectors = ExcitationSectors::new(space);
        let l = space.num_spins();
        let nmax = space.fock_dim();
        let g = params.coupling;

        let mut effective = Vec::with_capacity(sectors.num_sectors());
        for k in 0..sectors.num_sectors() {
            let d = sectors.sector_dim(k);
            let mut t = Vec::new();
            for (col, &idx) in sectors.members(k).iter().enumerate() {
                let (spin, n) = space.split(idx);
                let downs = l - count_up(spin, l);
                let decay = 0.5 * (params.pump * downs as f64 + params.loss * n as f64);
                t.push((col, col, Complex64::new(xxz_diagonal(params, spin), -decay)));
                for (s2, amp) in xxz_flips(params, spin) {
                    t.push((sectors.locate(space.index(s2, n)).1, col, Complex64::from(amp)));
                }
                if g != 0.0 {
                    for site in 1..=l {
                        let mask = space.site_mask(site);
                        if spin & mask != 0 && n >= 1 {
                            // a σ†: ↓ → ↑, one photon absorbed
                            let row = sectors.locate(space.index(spin ^ mask, n - 1)).1;
                            t.push((row, col, Complex64::from(g * (n as f64).sqrt())));
                        } else if spin & mask == 0 && n + 1 < nmax {
                            // a† σ: ↑ → ↓, one photon emitted
                            let row = sectors.locate(space.index(spin ^ mask, n + 1)).1;
                            t.push((row, col, Complex64::from(g * ((n + 1) as f64).sqrt())));
                        }
                    }
                }
            }
            effective.push(SparseOperator::from_triplets(d, d, t));
        }

        let mut pump_maps = vec![vec![Vec::new(); l]; sectors.num_sectors()];
        let mut loss_maps = vec![Vec::new(); sectors.num_sectors()];
        for k in 0..sectors.num_sectors() {
            if k > 0 && params.pump > 0.0 {
                for (src, &idx) in sectors.members(k - 1).iter().enumerate() {
                    let (spin, n) = space.split(idx);
                    for site in 1..=l {
                        let mask = space.site_mask(site);
                        if spin & mask != 0 {
                            let dst = sectors.locate(space.index(spin ^ mask, n)).1;
                            pump_maps[k][site - 1].push((dst, src));
                        }
                    }
                }
            }
            if k + 1 < sectors.num_sectors() && params.loss > 0.0 {
                for (src, &idx) in sectors.members(k + 1).iter().enumerate() {
                    let (spin, n) = space.split(idx);
                    if n >= 1 {
                        let dst = sectors.locate(space.index(spin, n - 1)).1;
                        loss_maps[k].push((dst, src, (n as f64).sqrt()));
                    }
                }
            }
        }

        let mut max_abs = 0.0f64;
        for (k, gk) in effective.iter().enumerate() {
            let diag: Vec<Complex64> = (0..gk.rows()).map(|a| gk.get(a, a)).collect();
            for &ga in &diag {
                for &gb in &diag {
                    max_abs = max_abs.max((ga - gb.conj()).norm());
                }
            }
            for (r, c, v) in gk.iter() {
                if r != c {
                    max_abs = max_abs.max(v.norm());
                }
            }
            let w = loss_maps[k].iter().map(|m| m.2).fold(0.0, f64::max);
            max_abs = max_abs.max(params.loss * w * w);
            if pump_maps[k].iter().any(|m| !m.is_empty()) {
                max_abs = max_abs.max(params.pump);
            }
        }

        Ok(Self { params: *params, sectors, effective, pump_maps, loss_maps, max_abs })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn sectors(&self) -> &ExcitationSectors {
        &self.sectors
    }

    pub fn len(&self) -> usize {
        self.sectors.packed_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest matrix element of the restricted Liouvillian.
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn effective_hamiltonian(&self, k: usize) -> &SparseOperator {
        &self.effective[k]
    }

    /// `y = (L − shift) x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64], shift: Complex64) {
        let sec = &self.sectors;
        for k in 0..sec.num_sectors() {
            let d = sec.sector_dim(k);
            if d == 0 {
                continue;
            }
            let range = sec.block_range(k);
            let xk = &x[range.clone()];
            let yk = &mut y[range];
            let g = &self.effective[k];
            for b in 0..d {
                let xcol = &xk[b * d..(b + 1) * d];
                let ycol = &mut yk[b * d..(b + 1) * d];
                for (a, out) in ycol.iter_mut().enumerate() {
                    let gx: Complex64 = g.row(a).map(|(c, v)| v * xcol[c]).sum();
                    *out = -I * gx - shift * xcol[a];
                }
                for (c, v) in g.row(b) {
                    let w = I * v.conj();
                    let xc = &xk[c * d..(c + 1) * d];
                    for (out, &xv) in ycol.iter_mut().zip(xc) {
                        *out += w * xv;
                    }
                }
            }
            if k > 0 {
                let ds = sec.sector_dim(k - 1);
                let xs = &x[sec.block_range(k - 1)];
                let p = self.params.pump;
                for map in &self.pump_maps[k] {
                    for &(db, sb) in map {
                        for &(da, sa) in map {
                            yk[da + db * d] += p * xs[sa + sb * ds];
                        }
                    }
                }
            }
            if k + 1 < sec.num_sectors() {
                let ds = sec.sector_dim(k + 1);
                let xs = &x[sec.block_range(k + 1)];
                let kappa = self.params.loss;
                let map = &self.loss_maps[k];
                for &(db, sb, wb) in map {
                    for &(da, sa, wa) in map {
                        yk[da + db * d] += (kappa * wa * wb) * xs[sa + sb * ds];
                    }
                }
            }
        }
    }

    /// Explicit sparse matrix of `L − shift` on the packed layout.
    pub fn assemble(&self, shift: Complex64) -> Vec<(usize, usize, Complex64)> {
        let sec = &self.sectors;
        let mut t = Vec::new();
        for k in 0..sec.num_sectors() {
            let d = sec.sector_dim(k);
            let off = sec.block_range(k).start;
            let g = &self.effective[k];
            for b in 0..d {
                for a in 0..d {
                    let row = off + a + b * d;
                    t.push((row, row, -shift));
                    for (c, v) in g.row(a) {
                        t.push((row, off + c + b * d, -I * v));
                    }
                }
                for (c, v) in g.row(b) {
                    for a in 0..d {
                        t.push((off + a + b * d, off + a + c * d, I * v.conj()));
                    }
                }
            }
            if k > 0 {
                let ds = sec.sector_dim(k - 1);
                let soff = sec.block_range(k - 1).start;
                for map in &self.pump_maps[k] {
                    for &(db, sb) in map {
                        for &(da, sa) in map {
                            t.push((off + da + db * d, soff + sa + sb * ds, Complex64::from(self.params.pump)));
                        }
                    }
                }
            }
            if k + 1 < sec.num_sectors() {
                let ds = sec.sector_dim(k + 1);
                let soff = sec.block_range(k + 1).start;
                for &(db, sb, wb) in &self.loss_maps[k] {
                    for &(da, sa, wa) in &self.loss_maps[k] {
                        t.push((off + da + db * d, soff + sa + sb * ds, Complex64::from(self.params.loss * wa * wb)));
                    }
                }
            }
        }
        t
    }

    /// Block-diagonal Sylvester inverse used to precondition Krylov solves.
    pub fn block_preconditioner(&self, shift: Complex64) -> Result<BlockPreconditioner> {
        let scale = self.max_abs.max(f64::MIN_POSITIVE);
        let floor = 1e-10 * scale;
        let mut blocks = Vec::with_capacity(self.sectors.num_sectors());
        for g in &self.effective {
            let d = g.rows();
            if d == 0 {
                blocks.push(None);
                continue;
            }
            let dense = g.to_dense();
            let evd = dense.eigen().map_err(|e| crate::Error::Linalg(format!("{e:?}")))?;
            let v = evd.U().to_owned();
            let lambda: Vec<Complex64> = (0..d).map(|i| evd.S().column_vector()[i]).collect();
            let vinv = v.partial_piv_lu().inverse();
            let mut denom = Mat::<Complex64>::zeros(d, d);
            for b in 0..d {
                for a in 0..d {
                    let mut z = -I * (lambda[a] - lambda[b].conj()) - shift;
                    if z.norm() < floor {
                        z = Complex64::from(-floor);
                    }
                    denom[(a, b)] = Complex64::from(1.0) / z;
                }
            }
            let finite = (0..d).all(|j| (0..d).all(|i| vinv[(i, j)].re.is_finite() && vinv[(i, j)].im.is_finite()));
            blocks.push(finite.then_some(SylvesterBlock { v, vinv, inv_denom: denom }));
        }
        Ok(BlockPreconditioner { sectors: self.sectors.clone(), blocks, fallback: 1.0 / scale })
    }

    /// Column-major block of a dense operator restricted to sector `k`.
    pub fn restrict(&self, op: &Mat<Complex64>, k: usize) -> Mat<Complex64> {
        let m = self.sectors.members(k);
        Mat::from_fn(m.len(), m.len(), |a, b| op[(m[a], m[b])])
    }
}

#[derive(Clone, Debug)]
struct SylvesterBlock {
    v: Mat<Complex64>,
    vinv: Mat<Complex64>,
    inv_denom: Mat<Complex64>,
}

#[derive(Clone, Debug)]
pub struct BlockPreconditioner {
    sectors: ExcitationSectors,
    blocks: Vec<Option<SylvesterBlock>>,
    fallback: f64,
}

impl BlockPreconditioner {
    /// `y ≈ (diagonal blocks of L − shift)⁻¹ x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (k, block) in self.blocks.iter().enumerate() {
            let range = self.sectors.block_range(k);
            if range.is_empty() {
                continue;
            }
            let d = self.sectors.sector_dim(k);
            match block {
                Some(b) => {
                    let r = MatRef::from_column_major_slice(&x[range.clone()], d, d);
                    let mut t = &b.vinv * r * b.vinv.adjoint();
                    for j in 0..d {
                        for i in 0..d {
                            t[(i, j)] *= b.inv_denom[(i, j)];
                        }
                    }
                    let out = &b.v * t * b.v.adjoint();
                    let dst = &mut y[range];
                    for j in 0..d {
                        for i in 0..d {
                            dst[i + j * d] = out[(i, j)];
                        }
                    }
                }
                None => {
                    for (o, &xi) in y[range.clone()].iter_mut().zip(&x[range]) {
                        *o = xi * self.fallback;
                    }
                }
            }
        }
    }
}

/// Packs the `N`-diagonal blocks of a dense matrix.
pub fn pack_dense(sectors: &ExcitationSectors, rho: &Mat<Complex64>) -> Vec<Complex64> {
    let mut out = vec![ZERO; sectors.packed_len()];
    for k in 0..sectors.num_sectors() {
        let m = sectors.members(k);
        let d = m.len();
        let off = sectors.block_range(k).start;
        for b in 0..d {
            for a in 0..d {
                out[off + a + b * d] = rho[(m[a], m[b])];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{master_equation_rhs, SystemParams};

    #[test]
    fn unknown_count_matches_the_partition() {
        for (l, n) in [(1, 1), (1, 5), (2, 3), (3, 7), (4, 2), (5, 9)] {
            let sec = ExcitationSectors::new(SpaceDescriptor::new(l, n).unwrap());
            assert_eq!(ExcitationSectors::packed_len_for(l, n), sec.packed_len(), "L={l} n_max={n}");
        }
    }

    fn random_packed_hermitian(sec: &ExcitationSectors, seed: u64) -> Mat<Complex64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = sec.space().dim();
        let mut m = Mat::<Complex64>::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                if sec.locate(i).0 == sec.locate(j).0 {
                    let z = Complex64::new(rng.random::<f64>() - 0.5, if i == j { 0.0 } else { rng.random::<f64>() - 0.5 });
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
        }
        m
    }

    #[test]
    fn sector_partition_is_complete() {
        let space = SpaceDescriptor::new(3, 4).unwrap();
        let sec = ExcitationSectors::new(space);
        let total: usize = (0..sec.num_sectors()).map(|k| sec.sector_dim(k)).sum();
        assert_eq!(total, space.dim());
        assert_eq!(sec.num_sectors(), 3 + 4);
        // all-down vacuum is alone in N = 0
        assert_eq!(sec.members(0), &[space.index(0b111, 0)]);
    }

    #[test]
    fn sector_action_matches_direct_master_equation() {
        for (l, u, p, nmax) in [(1, 0.0, 0.7, 4), (2, 0.5, 1.0, 3), (3, 1.3, 0.4, 3)] {
            let params = SystemParams::figure_defaults(l, u, p).with_fock_dim(nmax).with_coupling(0.3).with_loss(0.2);
            let liou = SectorLiouvillian::new(&params).unwrap();
            let rho = random_packed_hermitian(liou.sectors(), 3);
            let direct = master_equation_rhs(&params, &rho).unwrap();
            let x = pack_dense(liou.sectors(), &rho);
            let mut y = vec![ZERO; x.len()];
            liou.apply(&x, &mut y, ZERO);
            let expected = pack_dense(liou.sectors(), &direct);
            let err = y.iter().zip(&expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "L={l}: {err}");

            let assembled = SparseOperator::from_triplets(x.len(), x.len(), liou.assemble(ZERO));
            let z = assembled.mul_vec(&x);
            let err = z.iter().zip(&expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12);
            assert!((assembled.max_abs() - liou.max_abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn preconditioner_inverts_diagonal_blocks() {
        let params = SystemParams::figure_defaults(2, 0.5, 0.3).with_fock_dim(4);
        let liou = SectorLiouvillian::new(&params).unwrap();
        let shift = Complex64::new(-0.7, 0.0);
        let pre = liou.block_preconditioner(shift).unwrap();
        let rho = random_packed_hermitian(liou.sectors(), 9);
        let x = pack_dense(liou.sectors(), &rho);
        let mut y = vec![ZERO; x.len()];
        pre.apply(&x, &mut y);
        // Undo with the diagonal-block action: −i(G Y − Y G†) − shift Y.
        for k in 0..liou.sectors().num_sectors() {
            let g = liou.effective_hamiltonian(k).to_dense();
            let yk = liou.sectors().block(&y, k).to_owned();
            let back = (&g * &yk - &yk * g.adjoint()) * faer::Scale(-I) - &yk * faer::Scale(shift);
            let xk = liou.sectors().block(&x, k);
            for j in 0..xk.ncols() {
                for i in 0..xk.nrows() {
                    assert!((back[(i, j)] - xk[(i, j)]).norm() < 1e-10);
                }
            }
        }
    }
}
