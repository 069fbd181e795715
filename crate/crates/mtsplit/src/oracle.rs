//! Exact rational Lie algebra oracle for the Ribet-style lemma: explicit
//! subalgebras of `gl(V_1) + ... + gl(V_n)`, bracket closures, commutants,
//! and a brute-force check of the lemma's hypotheses and conclusion.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Q = BigRational;

pub const MAX_DIMENSION: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("matrix of size {found} does not match ambient dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ambient dimension {0} exceeds {MAX_DIMENSION}")]
    TooLarge(usize),
    #[error("block dimensions must be a nonempty list of positive integers")]
    BadBlocks,
    #[error("generator {0} is not block diagonal")]
    NotBlockDiagonal(usize),
    #[error("block index {0} out of range")]
    InvalidBlock(usize),
    #[error("{line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

/// Square matrix with exact rational entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    n: usize,
    data: Vec<Q>,
}

impl ExactMatrix {
    pub fn zero(n: usize) -> Self {
        ExactMatrix { n, data: vec![Q::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    /// Unit matrix `E_{ij}`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zero(n);
        m.set(i, j, Q::one());
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self, OracleError> {
        let n = rows.len();
        if n > MAX_DIMENSION {
            return Err(OracleError::TooLarge(n));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(OracleError::DimensionMismatch { expected: n, found: row.len() });
            }
            data.extend(row);
        }
        Ok(ExactMatrix { n, data })
    }

    pub fn from_integers(rows: &[&[i64]]) -> Result<Self, OracleError> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| Q::from_integer(BigInt::from(x))).collect()).collect())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.data[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[Q] {
        &self.data
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        ExactMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn bracket(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        ExactMatrix { n: self.n, data: self.data.iter().map(|a| -a).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Block-diagonal matrix with the given blocks.
    pub fn block_diagonal(blocks: &[ExactMatrix]) -> Self {
        let n = blocks.iter().map(|b| b.n).sum();
        let mut out = Self::zero(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    out.set(off + i, off + j, b.get(i, j).clone());
                }
            }
            off += b.n;
        }
        out
    }

    /// Submatrix on the index set `idx` (rows and columns).
    pub fn restrict(&self, idx: &[usize]) -> Self {
        let mut out = Self::zero(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(a, b, self.get(i, j).clone());
            }
        }
        out
    }
}

impl fmt::Display for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Reduced row echelon form in place; returns pivot columns.
fn rref(rows: &mut Vec<Vec<Q>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let factor = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= &factor * y;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

fn rank(vectors: &[Vec<Q>], ncols: usize) -> usize {
    let mut rows = vectors.to_vec();
    rref(&mut rows, ncols).len()
}

/// Basis of `{x : A x = 0}` for the system given by `rows`.
fn nullspace(mut rows: Vec<Vec<Q>>, ncols: usize) -> Vec<Vec<Q>> {
    let pivots = rref(&mut rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::one();
            for (row, &p) in rows.iter().zip(&pivots) {
                v[p] = -row[f].clone();
            }
            v
        })
        .collect()
}

/// Incremental echelon basis for span membership.
#[derive(Default)]
struct Span {
    rows: Vec<(usize, Vec<Q>)>,
}

impl Span {
    fn insert(&mut self, mut v: Vec<Q>) -> bool {
        for (p, row) in &self.rows {
            if !v[*p].is_zero() {
                let factor = v[*p].clone();
                for (x, y) in v.iter_mut().zip(row) {
                    if !y.is_zero() {
                        *x -= &factor * y;
                    }
                }
            }
        }
        let Some(p) = v.iter().position(|x| !x.is_zero()) else { return false };
        let inv = v[p].recip();
        for x in v.iter_mut() {
            *x *= &inv;
        }
        self.rows.push((p, v));
        true
    }
}

/// Linear maps `M: V_src -> V_dst` with `B_k M = M A_k` for all `k`.
fn intertwiners(src: &[ExactMatrix], dst: &[ExactMatrix], n_src: usize, n_dst: usize) -> Vec<Vec<Q>> {
    // Unknown M[r][c] sits at r * n_src + c.
    let unknowns = n_dst * n_src;
    let mut rows = Vec::new();
    for (a, b) in src.iter().zip(dst) {
        for r in 0..n_dst {
            for c in 0..n_src {
                let mut eq = vec![Q::zero(); unknowns];
                for k in 0..n_dst {
                    let x = b.get(r, k);
                    if !x.is_zero() {
                        eq[k * n_src + c] += x;
                    }
                }
                for k in 0..n_src {
                    let x = a.get(k, c);
                    if !x.is_zero() {
                        eq[r * n_src + k] -= x;
                    }
                }
                if eq.iter().any(|x| !x.is_zero()) {
                    rows.push(eq);
                }
            }
        }
    }
    nullspace(rows, unknowns)
}

fn reshape(v: &[Q], n: usize) -> ExactMatrix {
    ExactMatrix { n, data: v.to_vec() }
}

/// A Lie subalgebra of `gl(V_1) + ... + gl(V_n)` given by a basis of
/// block-diagonal matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAlgebra {
    block_dims: Vec<usize>,
    basis: Vec<ExactMatrix>,
}

impl BlockAlgebra {
    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn basis(&self) -> &[ExactMatrix] {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dimension(&self) -> usize {
        self.block_dims.iter().sum()
    }

    fn block_indices(&self, block: usize) -> std::ops::Range<usize> {
        let start: usize = self.block_dims[..block].iter().sum();
        start..start + self.block_dims[block]
    }

    /// Images of the basis in `gl(V_block)`, possibly dependent.
    pub fn block_images(&self, block: usize) -> Vec<ExactMatrix> {
        let idx: Vec<usize> = self.block_indices(block).collect();
        self.basis.iter().map(|b| b.restrict(&idx)).collect()
    }

    /// A basis of `g_i`, the projection of `g` to block `i`.
    pub fn projection_basis(&self, block: usize) -> Vec<ExactMatrix> {
        let mut span = Span::default();
        self.block_images(block).into_iter().filter(|m| span.insert(m.entries().to_vec())).collect()
    }
}

fn check_blocks(block_dims: &[usize]) -> Result<usize, OracleError> {
    if block_dims.is_empty() || block_dims.contains(&0) {
        return Err(OracleError::BadBlocks);
    }
    let n: usize = block_dims.iter().sum();
    if n > MAX_DIMENSION {
        return Err(OracleError::TooLarge(n));
    }
    Ok(n)
}

fn is_block_diagonal(m: &ExactMatrix, block_dims: &[usize]) -> bool {
    let mut owner = Vec::with_capacity(m.size());
    for (b, &d) in block_dims.iter().enumerate() {
        owner.extend(std::iter::repeat_n(b, d));
    }
    (0..m.size()).all(|i| (0..m.size()).all(|j| owner[i] == owner[j] || m.get(i, j).is_zero()))
}

/// Smallest bracket-closed subspace containing the generators.
pub fn bracket_closure(generators: &[ExactMatrix], block_dims: &[usize]) -> Result<BlockAlgebra, OracleError> {
    let n = check_blocks(block_dims)?;
    for (k, g) in generators.iter().enumerate() {
        if g.size() != n {
            return Err(OracleError::DimensionMismatch { expected: n, found: g.size() });
        }
        if !is_block_diagonal(g, block_dims) {
            return Err(OracleError::NotBlockDiagonal(k));
        }
    }
    let mut span = Span::default();
    let mut basis: Vec<ExactMatrix> =
        generators.iter().filter(|g| span.insert(g.entries().to_vec())).cloned().collect();
    let mut i = 0;
    while i < basis.len() {
        for j in 0..i {
            let c = basis[i].bracket(&basis[j]);
            if span.insert(c.entries().to_vec()) {
                basis.push(c);
            }
        }
        i += 1;
    }
    Ok(BlockAlgebra { block_dims: block_dims.to_vec(), basis })
}

/// `gl(V_1) + ... + gl(V_n)` itself.
pub fn full_block_algebra(block_dims: &[usize]) -> Result<BlockAlgebra, OracleError> {
    let n = check_blocks(block_dims)?;
    let mut gens = Vec::new();
    let mut off = 0;
    for &d in block_dims {
        for i in 0..d {
            for j in 0..d {
                gens.push(ExactMatrix::unit(n, off + i, off + j));
            }
        }
        off += d;
    }
    bracket_closure(&gens, block_dims)
}

/// Dimension of the image of `g` under the projection to the selected blocks.
pub fn projection_dimension(g: &BlockAlgebra, blocks: &[usize]) -> Result<usize, OracleError> {
    let mut idx = Vec::new();
    for &b in blocks {
        if b >= g.block_dims.len() {
            return Err(OracleError::InvalidBlock(b));
        }
        idx.extend(g.block_indices(b));
    }
    let vecs: Vec<Vec<Q>> = g.basis.iter().map(|m| m.restrict(&idx).entries().to_vec()).collect();
    Ok(rank(&vecs, idx.len() * idx.len()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commutant {
    pub dimension: usize,
    pub basis: Vec<ExactMatrix>,
}

/// All endomorphisms of the whole ambient space commuting with `g`.
pub fn commutant(g: &BlockAlgebra) -> Commutant {
    let n = g.ambient_dimension();
    let kernel = intertwiners(&g.basis, &g.basis, n, n);
    Commutant { dimension: kernel.len(), basis: kernel.iter().map(|v| reshape(v, n)).collect() }
}

fn commutant_of(mats: &[ExactMatrix], n: usize) -> Vec<ExactMatrix> {
    intertwiners(mats, mats, n, n).iter().map(|v| reshape(v, n)).collect()
}

/// Dimension of the center of the algebra spanned by `mats` (closed under product).
fn center_dimension(mats: &[ExactMatrix]) -> usize {
    if mats.is_empty() {
        return 0;
    }
    let k = mats.len();
    let n = mats[0].size();
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(k * k * n * n);
    // Coefficients c with [sum c_a M_a, M_b] = 0 for every b.
    for b in mats {
        let brackets: Vec<ExactMatrix> = mats.iter().map(|a| a.bracket(b)).collect();
        for e in 0..n * n {
            rows.push(brackets.iter().map(|m| m.entries()[e].clone()).collect());
        }
    }
    nullspace(rows, k).len()
}

/// Coordinates of `v` in the independent family `basis`.
fn coordinates(basis: &[ExactMatrix], v: &ExactMatrix) -> Option<Vec<Q>> {
    let k = basis.len();
    let len = v.entries().len();
    let mut rows: Vec<Vec<Q>> = (0..len)
        .map(|e| {
            let mut r: Vec<Q> = basis.iter().map(|b| b.entries()[e].clone()).collect();
            r.push(v.entries()[e].clone());
            r
        })
        .collect();
    let pivots = rref(&mut rows, k + 1);
    if pivots.contains(&k) {
        return None;
    }
    let mut c = vec![Q::zero(); k];
    for (row, &p) in rows.iter().zip(&pivots) {
        c[p] = row[k].clone();
    }
    Some(c)
}

/// Simplicity of the Lie algebra with the given matrix basis: trivial center,
/// perfect, and adjoint representation with scalar commutant.
pub fn simplicity_failure(basis: &[ExactMatrix]) -> Option<String> {
    let k = basis.len();
    if k == 0 {
        return Some("zero algebra".to_string());
    }
    let mut ad: Vec<ExactMatrix> = Vec::with_capacity(k);
    let mut derived = Span::default();
    let mut derived_dim = 0;
    for a in basis {
        let mut m = ExactMatrix::zero(k);
        for (c, b) in basis.iter().enumerate() {
            let br = a.bracket(b);
            if derived.insert(br.entries().to_vec()) {
                derived_dim += 1;
            }
            let Some(coords) = coordinates(basis, &br) else {
                return Some("basis is not bracket closed".to_string());
            };
            for (e, x) in coords.into_iter().enumerate() {
                m.set(e, c, x);
            }
        }
        ad.push(m);
    }
    // Center: sum c_a ad(b_a) = 0.
    let rows: Vec<Vec<Q>> = (0..k * k).map(|e| ad.iter().map(|m| m.entries()[e].clone()).collect()).collect();
    if !nullspace(rows, k).is_empty() {
        return Some("nontrivial center".to_string());
    }
    if derived_dim != k {
        return Some("not perfect".to_string());
    }
    let ad_commutant = commutant_of(&ad, k).len();
    if ad_commutant != 1 {
        return Some(format!("adjoint commutant has dimension {ad_commutant}"));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    pub projection_dimension: usize,
    /// Condition (a) for this pair.
    pub onto: bool,
    /// Whether `g_i` and `g_j` are taken to be isomorphic.
    pub isomorphic: bool,
    /// Condition (b1) for this pair; vacuous when not isomorphic.
    pub b1: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RibetReport {
    pub dimension: usize,
    pub block_algebra_dimensions: Vec<usize>,
    pub commutant_dimension: usize,
    pub pairs: Vec<PairReport>,
    pub condition_a: bool,
    pub condition_b1: bool,
    pub condition_b2: bool,
    pub conclusion: bool,
    /// `(b1 and b2) => a` and `a => conclusion`.
    pub implications_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RibetOutcome {
    Applicable(RibetReport),
    Inapplicable { block: usize, reason: String },
}

impl RibetOutcome {
    pub fn report(&self) -> Option<&RibetReport> {
        match self {
            RibetOutcome::Applicable(r) => Some(r),
            RibetOutcome::Inapplicable { .. } => None,
        }
    }
}

/// Constituent data of `V_i` as a `g_i`-module: `Some(dim W)` when isotypic.
fn isotypic_constituent(images: &[ExactMatrix], n: usize) -> Option<usize> {
    let end = commutant_of(images, n);
    if center_dimension(&end) != 1 {
        return None;
    }
    let m = (1..=n).find(|m| m * m == end.len())?;
    Some(n / m)
}

fn dual_action(images: &[ExactMatrix]) -> Vec<ExactMatrix> {
    images.iter().map(|m| m.transpose().neg()).collect()
}

/// Evaluates the lemma on `g`: conditions (a), (b1), (b2) and the conclusion.
pub fn verify_ribet(g: &BlockAlgebra) -> RibetOutcome {
    let nblocks = g.block_dims.len();
    let mut dims = Vec::with_capacity(nblocks);
    for b in 0..nblocks {
        let basis = g.projection_basis(b);
        if let Some(reason) = simplicity_failure(&basis) {
            return RibetOutcome::Inapplicable { block: b, reason };
        }
        dims.push(basis.len());
    }
    let images: Vec<Vec<ExactMatrix>> = (0..nblocks).map(|b| g.block_images(b)).collect();
    let constituents: Vec<Option<usize>> =
        (0..nblocks).map(|b| isotypic_constituent(&images[b], g.block_dims[b])).collect();
    // Automorphism stability of the constituent, tested as self-duality.
    let stable: Vec<bool> = (0..nblocks)
        .map(|b| {
            let n = g.block_dims[b];
            !intertwiners(&images[b], &dual_action(&images[b]), n, n).is_empty()
        })
        .collect();

    let mut pairs = Vec::new();
    for i in 0..nblocks {
        for j in i + 1..nblocks {
            let pd = projection_dimension(g, &[i, j]).expect("valid blocks");
            let onto = pd == dims[i] + dims[j];
            let isomorphic = dims[i] == dims[j];
            let b1 = !isomorphic || {
                let same_w = match (constituents[i], constituents[j]) {
                    (Some(wi), Some(wj)) if onto => wi == wj,
                    (Some(_), Some(_)) => {
                        !intertwiners(&images[i], &images[j], g.block_dims[i], g.block_dims[j]).is_empty()
                    }
                    _ => false,
                };
                same_w && stable[i] && stable[j]
            };
            pairs.push(PairReport { i, j, projection_dimension: pd, onto, isomorphic, b1 });
        }
    }
    let condition_a = pairs.iter().all(|p| p.onto);
    let condition_b1 = pairs.iter().all(|p| p.b1);

    let mut condition_b2 = true;
    let mut seen = vec![false; nblocks];
    for i in 0..nblocks {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (i..nblocks).filter(|&k| dims[k] == dims[i]).collect();
        for &k in &class {
            seen[k] = true;
        }
        if class.len() < 2 {
            continue;
        }
        let idx: Vec<usize> = class.iter().flat_map(|&k| g.block_indices(k)).collect();
        let restricted: Vec<ExactMatrix> = g.basis.iter().map(|m| m.restrict(&idx)).collect();
        let whole = commutant_of(&restricted, idx.len()).len();
        let parts: usize = class.iter().map(|&k| commutant_of(&images[k], g.block_dims[k]).len()).sum();
        condition_b2 &= whole == parts;
    }

    let conclusion = g.dimension() == dims.iter().sum::<usize>();
    let implications_hold = (!(condition_b1 && condition_b2) || condition_a) && (!condition_a || conclusion);
    RibetOutcome::Applicable(RibetReport {
        dimension: g.dimension(),
        block_algebra_dimensions: dims,
        commutant_dimension: commutant(g).dimension,
        pairs,
        condition_a,
        condition_b1,
        condition_b2,
        conclusion,
        implications_hold,
    })
}

/// A named generator set on fixed blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub name: String,
    pub block_dims: Vec<usize>,
    pub generators: Vec<ExactMatrix>,
}

impl Fixture {
    pub fn algebra(&self) -> Result<BlockAlgebra, OracleError> {
        bracket_closure(&self.generators, &self.block_dims)
    }
}

fn sl2_triple() -> [ExactMatrix; 3] {
    let e = ExactMatrix::from_integers(&[&[0, 1], &[0, 0]]).unwrap();
    let f = ExactMatrix::from_integers(&[&[0, 0], &[1, 0]]).unwrap();
    let h = ExactMatrix::from_integers(&[&[1, 0], &[0, -1]]).unwrap();
    [e, f, h]
}

/// Chevalley-type generators of `sl_n`: `E_{i,i+1}` and `E_{i+1,i}`.
fn sl_generators(n: usize) -> Vec<ExactMatrix> {
    (0..n - 1).flat_map(|i| [ExactMatrix::unit(n, i, i + 1), ExactMatrix::unit(n, i + 1, i)]).collect()
}

fn adjoint_sl2(x: &ExactMatrix) -> ExactMatrix {
    // Coordinates in the basis e, f, h.
    let basis = sl2_triple();
    let mut m = ExactMatrix::zero(3);
    for (c, b) in basis.iter().enumerate() {
        let coords = coordinates(&basis, &x.bracket(b)).expect("sl2 closed");
        for (r, v) in coords.into_iter().enumerate() {
            m.set(r, c, v);
        }
    }
    m
}

fn zero_block(n: usize) -> ExactMatrix {
    ExactMatrix::zero(n)
}

/// The deterministic fixture corpus.
pub fn builtin_fixtures() -> Vec<Fixture> {
    let sl2 = sl2_triple();
    let sl3 = sl_generators(3);
    let bd = ExactMatrix::block_diagonal;
    let fixture = |name: &str, block_dims: Vec<usize>, generators: Vec<ExactMatrix>| Fixture {
        name: name.to_string(),
        block_dims,
        generators,
    };
    vec![
        fixture("sl2_single", vec![2], sl2.to_vec()),
        fixture("diag_sl2", vec![2, 2], sl2.iter().map(|x| bd(&[x.clone(), x.clone()])).collect()),
        fixture(
            "full_sl2_sl2",
            vec![2, 2],
            sl2.iter()
                .flat_map(|x| [bd(&[x.clone(), zero_block(2)]), bd(&[zero_block(2), x.clone()])])
                .collect(),
        ),
        fixture(
            "outer_twist_sl2",
            vec![2, 2],
            sl2.iter().map(|x| bd(&[x.clone(), x.transpose().neg()])).collect(),
        ),
        fixture("sl3_std_dual", vec![3, 3], sl3.iter().map(|x| bd(&[x.clone(), x.transpose().neg()])).collect()),
        fixture(
            "sl3_pair_full",
            vec![3, 3],
            sl3.iter()
                .flat_map(|x| [bd(&[x.clone(), zero_block(3)]), bd(&[zero_block(3), x.clone()])])
                .collect(),
        ),
        fixture("sl2_std_adjoint", vec![2, 3], sl2.iter().map(|x| bd(&[x.clone(), adjoint_sl2(x)])).collect()),
        fixture(
            "diag12_free3",
            vec![2, 2, 2],
            sl2.iter()
                .flat_map(|x| {
                    [bd(&[x.clone(), x.clone(), zero_block(2)]), bd(&[zero_block(2), zero_block(2), x.clone()])]
                })
                .collect(),
        ),
        fixture(
            "sl2_sl3_sum",
            vec![2, 3],
            sl2.iter()
                .map(|x| bd(&[x.clone(), zero_block(3)]))
                .chain(sl3.iter().map(|y| bd(&[zero_block(2), y.clone()])))
                .collect(),
        ),
    ]
}

pub fn builtin_fixture(name: &str) -> Option<Fixture> {
    builtin_fixtures().into_iter().find(|f| f.name == name)
}

fn parse_rational(token: &str) -> Option<Q> {
    let t = token.replace('\u{2212}', "-");
    let q = Q::from_str(&t).ok()?;
    Some(q)
}

/// Parses fixtures in the text format:
///
/// ```text
/// fixture diag_sl2
/// blocks 2 2
/// matrix
/// 0 1 0 0
/// 0 0 0 0
/// 0 0 0 1
/// 0 0 0 0
/// end
/// ```
///
/// Each `matrix` is followed by `sum(blocks)` rows; `#` starts a comment.
pub fn parse_fixtures(text: &str) -> Result<Vec<Fixture>, OracleError> {
    let err = |line: usize, column: usize, message: String| OracleError::Parse { line, column, message };
    let mut out = Vec::new();
    let mut current: Option<Fixture> = None;
    let mut pending: Option<(usize, Vec<Vec<Q>>)> = None;
    let mut last_line = 0;
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        last_line = line_no;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut col = 0;
        for piece in content.split_inclusive(char::is_whitespace) {
            let word = piece.trim_end();
            if !word.is_empty() {
                tokens.push((content[..col].chars().count() + 1, word));
            }
            col += piece.len();
        }
        let Some(&(first_col, head)) = tokens.first() else { continue };
        if let Some((n, rows)) = pending.as_mut() {
            let mut row = Vec::with_capacity(*n);
            for &(c, t) in &tokens {
                row.push(parse_rational(t).ok_or_else(|| err(line_no, c, format!("bad rational `{t}`")))?);
            }
            if row.len() != *n {
                return Err(err(line_no, first_col, format!("expected {} entries, found {}", n, row.len())));
            }
            rows.push(row);
            if rows.len() == *n {
                let (_, rows) = pending.take().unwrap();
                let m = ExactMatrix::from_rows(rows).map_err(|e| err(line_no, 1, e.to_string()))?;
                current.as_mut().unwrap().generators.push(m);
            }
            continue;
        }
        match head {
            "fixture" => {
                if current.is_some() {
                    return Err(err(line_no, first_col, "missing `end`".to_string()));
                }
                let name = tokens.get(1).map(|t| t.1).ok_or_else(|| err(line_no, first_col, "missing name".into()))?;
                current = Some(Fixture { name: name.to_string(), block_dims: Vec::new(), generators: Vec::new() });
            }
            "blocks" | "matrix" | "end" if current.is_none() => {
                return Err(err(line_no, first_col, format!("`{head}` outside a fixture")));
            }
            "blocks" => {
                let mut dims = Vec::new();
                for &(c, t) in &tokens[1..] {
                    let d: usize = t.parse().map_err(|_| err(line_no, c, format!("bad block dimension `{t}`")))?;
                    dims.push(d);
                }
                check_blocks(&dims).map_err(|e| err(line_no, first_col, e.to_string()))?;
                current.as_mut().unwrap().block_dims = dims;
            }
            "matrix" => {
                let n: usize = current.as_ref().unwrap().block_dims.iter().sum();
                if n == 0 {
                    return Err(err(line_no, first_col, "`matrix` before `blocks`".to_string()));
                }
                pending = Some((n, Vec::new()));
            }
            "end" => {
                let f = current.take().unwrap();
                if f.block_dims.is_empty() {
                    return Err(err(line_no, first_col, "fixture without `blocks`".to_string()));
                }
                out.push(f);
            }
            other => return Err(err(line_no, first_col, format!("unexpected `{other}`"))),
        }
    }
    if pending.is_some() || current.is_some() {
        return Err(err(last_line + 1, 1, "unexpected end of input".to_string()));
    }
    Ok(out)
}

/// Writes fixtures in the format read by [`parse_fixtures`].
pub fn format_fixture(f: &Fixture) -> String {
    let mut s = format!("fixture {}\nblocks", f.name);
    for d in &f.block_dims {
        s.push_str(&format!(" {d}"));
    }
    s.push('\n');
    for g in &f.generators {
        s.push_str("matrix\n");
        s.push_str(&g.to_string());
    }
    s.push_str("end\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(name: &str) -> RibetReport {
        let g = builtin_fixture(name).unwrap().algebra().unwrap();
        verify_ribet(&g).report().cloned().unwrap_or_else(|| panic!("{name} inapplicable"))
    }

    #[test]
    fn closure_dimensions() {
        let dim = |n: &str| builtin_fixture(n).unwrap().algebra().unwrap().dimension();
        assert_eq!(dim("sl2_single"), 3);
        assert_eq!(dim("diag_sl2"), 3);
        assert_eq!(dim("full_sl2_sl2"), 6);
        assert_eq!(dim("sl3_std_dual"), 8);
    }

    #[test]
    fn projections_and_commutants() {
        let diag = builtin_fixture("diag_sl2").unwrap().algebra().unwrap();
        assert_eq!(projection_dimension(&diag, &[0, 1]).unwrap(), 3);
        assert_eq!(projection_dimension(&diag, &[0]).unwrap(), 3);
        assert_eq!(commutant(&diag).dimension, 4);
        let full = builtin_fixture("full_sl2_sl2").unwrap().algebra().unwrap();
        assert_eq!(projection_dimension(&full, &[0, 1]).unwrap(), 6);
        assert_eq!(commutant(&full).dimension, 2);
        let single = builtin_fixture("sl2_single").unwrap().algebra().unwrap();
        assert_eq!(commutant(&single).dimension, 1);
        assert_eq!(projection_dimension(&single, &[3]), Err(OracleError::InvalidBlock(3)));
    }

    #[test]
    fn ribet_examples() {
        let d = report("diag_sl2");
        assert!(d.condition_b1 && !d.condition_b2 && !d.condition_a && !d.conclusion);
        let f = report("full_sl2_sl2");
        assert!(f.condition_a && f.conclusion);
        let s = report("sl3_std_dual");
        assert!(!s.condition_b1 && !s.conclusion);
        let a = report("sl2_std_adjoint");
        assert!(!a.condition_b1 && a.condition_b2 && !a.conclusion);
        assert!(report("outer_twist_sl2").condition_b1);
        assert!(report("sl2_sl3_sum").conclusion);
        let three = report("diag12_free3");
        assert!(!three.condition_a && !three.conclusion);
    }

    #[test]
    fn gl2_is_inapplicable() {
        let [e, f, _] = sl2_triple();
        let g = bracket_closure(&[ExactMatrix::identity(2), e, f], &[2]).unwrap();
        assert!(matches!(verify_ribet(&g), RibetOutcome::Inapplicable { block: 0, .. }));
    }

    #[test]
    fn rejects_bad_generators() {
        let x = ExactMatrix::unit(4, 0, 3);
        assert_eq!(bracket_closure(&[x], &[2, 2]), Err(OracleError::NotBlockDiagonal(0)));
        assert_eq!(
            bracket_closure(&[ExactMatrix::zero(3)], &[2, 2]),
            Err(OracleError::DimensionMismatch { expected: 4, found: 3 })
        );
    }

    #[test]
    fn text_format_roundtrip() {
        for f in builtin_fixtures() {
            let parsed = parse_fixtures(&format_fixture(&f)).unwrap();
            assert_eq!(parsed, vec![f]);
        }
        let src = "fixture t\nblocks 1\nmatrix\n\u{2212}1/2\nend\n";
        let f = &parse_fixtures(src).unwrap()[0];
        assert_eq!(f.generators[0].get(0, 0), &Q::new(BigInt::from(-1), BigInt::from(2)));
        let e = parse_fixtures("fixture t\nblocks 2\nmatrix\n1 x\n").unwrap_err();
        assert_eq!(e, OracleError::Parse { line: 4, column: 3, message: "bad rational `x`".into() });
    }
}
