//! Real frequencies as exact rational vectors over a declared ℚ-basis.
//!
//! A [`FrequencyContext`] fixes finitely many basis symbols `b₁, …, b_d`, each with a
//! floating value used only when a character `χ_l(x) = e^{ilx}` is evaluated. A
//! [`Frequency`] is a coordinate vector in `ℚ^d`. ℤ-independence of real numbers is
//! equivalent to ℚ-independence, so everything about the index set `(I, ≤_ℤ)` is
//! decided by exact elimination on these vectors.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, IntMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSymbol {
    pub id: String,
    pub value: f64,
}

/// An ordered, finite ℚ-basis surrogate for the reals that frequencies may use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyContext {
    basis: Vec<BasisSymbol>,
}

impl FrequencyContext {
    pub fn new(basis: Vec<BasisSymbol>) -> Result<Arc<Self>> {
        if basis.is_empty() {
            return Err(Error::InvalidBasis("basis must contain at least one symbol".into()));
        }
        for (i, sym) in basis.iter().enumerate() {
            if !sym.value.is_finite() || sym.value == 0.0 {
                return Err(Error::InvalidBasis(format!(
                    "symbol {:?} has value {}; values must be finite and nonzero",
                    sym.id, sym.value
                )));
            }
            if basis[..i].iter().any(|other| other.id == sym.id) {
                return Err(Error::InvalidBasis(format!("duplicate symbol id {:?}", sym.id)));
            }
        }
        Ok(Arc::new(Self { basis }))
    }

    /// Context with one symbol `"one"` of value 1, i.e. rational frequencies.
    pub fn rationals() -> Arc<Self> {
        Self::new(vec![BasisSymbol {
            id: "one".into(),
            value: 1.0,
        }])
        .expect("static basis is valid")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisSymbol] {
        &self.basis
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.basis.iter().position(|s| s.id == id)
    }
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let trimmed = text.trim();
    BigRational::from_str(trimmed).map_err(|_| Error::InvalidRational(text.to_string()))
}

fn same_context(a: &Arc<FrequencyContext>, b: &Arc<FrequencyContext>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A real number `l = Σ qᵢ bᵢ` with exact rational coordinates.
#[derive(Debug, Clone)]
pub struct Frequency {
    ctx: Arc<FrequencyContext>,
    coords: Vec<BigRational>,
}

impl PartialEq for Frequency {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && same_context(&self.ctx, &other.ctx)
    }
}

impl Frequency {
    pub fn new(ctx: &Arc<FrequencyContext>, coords: Vec<BigRational>) -> Result<Self> {
        if coords.len() != ctx.dim() {
            return Err(Error::DimensionMismatch {
                expected: ctx.dim(),
                found: coords.len(),
            });
        }
        Ok(Self {
            ctx: Arc::clone(ctx),
            coords,
        })
    }

    pub fn zero(ctx: &Arc<FrequencyContext>) -> Self {
        Self {
            ctx: Arc::clone(ctx),
            coords: vec![BigRational::zero(); ctx.dim()],
        }
    }

    /// The basis direction `b_index`.
    pub fn basis(ctx: &Arc<FrequencyContext>, index: usize) -> Result<Self> {
        if index >= ctx.dim() {
            return Err(Error::IndexOutOfRange {
                index: index + 1,
                len: ctx.dim(),
            });
        }
        let mut f = Self::zero(ctx);
        f.coords[index] = BigRational::one();
        Ok(f)
    }

    pub fn from_ints(ctx: &Arc<FrequencyContext>, coords: &[i64]) -> Result<Self> {
        Self::new(
            ctx,
            coords.iter().map(|&c| BigRational::from_integer(c.into())).collect(),
        )
    }

    /// Parses `"p/q"` or integer strings, one per basis symbol.
    pub fn parse<S: AsRef<str>>(ctx: &Arc<FrequencyContext>, coords: &[S]) -> Result<Self> {
        let parsed = coords
            .iter()
            .map(|s| parse_rational(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ctx, parsed)
    }

    pub fn context(&self) -> &Arc<FrequencyContext> {
        &self.ctx
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<BigRational> {
        self.coords
    }

    pub fn coord_strings(&self) -> Vec<String> {
        self.coords.iter().map(ToString::to_string).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    /// Floating reconstruction `Σ qᵢ · valueᵢ`.
    pub fn value(&self) -> f64 {
        self.coords
            .iter()
            .zip(self.ctx.basis.iter())
            .map(|(q, sym)| q.to_f64().unwrap_or(f64::NAN) * sym.value)
            .sum()
    }

    pub fn scaled(&self, factor: &BigRational) -> Self {
        Self {
            ctx: Arc::clone(&self.ctx),
            coords: self.coords.iter().map(|q| q * factor).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            ctx: Arc::clone(&self.ctx),
            coords: self.coords.iter().map(|q| -q).collect(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if !same_context(&self.ctx, &other.ctx) {
            return Err(Error::ContextMismatch);
        }
        Ok(Self {
            ctx: Arc::clone(&self.ctx),
            coords: self
                .coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub(crate) fn shares_context(&self, ctx: &Arc<FrequencyContext>) -> bool {
        same_context(&self.ctx, ctx)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coords
            .iter()
            .zip(self.ctx.basis.iter())
            .filter(|(q, _)| !q.is_zero())
            .map(|(q, sym)| format!("{q}*{}", sym.id))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// `e^{i·l·x}`, renormalized to unit modulus.
pub fn char_eval(l: &Frequency, x: f64) -> Complex64 {
    if l.is_zero() {
        return Complex64::new(1.0, 0.0);
    }
    let phase = l.value() * x;
    let z = Complex64::new(phase.cos(), phase.sin());
    z / z.norm()
}

fn check_shared(freqs: &[Frequency]) -> Result<()> {
    if let Some(first) = freqs.first() {
        if freqs.iter().any(|f| !same_context(&f.ctx, &first.ctx)) {
            return Err(Error::ContextMismatch);
        }
    }
    Ok(())
}

/// Rank of the rational row vectors, by exact elimination.
fn rational_rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for i in (rank + 1)..m.len() {
            if m[i][col].is_zero() {
                continue;
            }
            let factor = &m[i][col] / &pivot;
            let pivot_row = m[rank].clone();
            for (v, pv) in m[i].iter_mut().zip(pivot_row.iter()) {
                *v -= &factor * pv;
            }
        }
        rank += 1;
    }
    rank
}

/// True iff the frequencies are ℤ- (equivalently ℚ-) linearly independent.
pub fn is_z_independent(freqs: &[Frequency]) -> Result<bool> {
    check_shared(freqs)?;
    let rows: Vec<Vec<BigRational>> = freqs.iter().map(|f| f.coords.clone()).collect();
    Ok(rational_rank(&rows) == freqs.len())
}

/// A nonempty ℤ-independent tuple `L = (l₁, …, l_k)`, an element of the index set `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTuple {
    entries: Vec<Frequency>,
}

impl FrequencyTuple {
    pub fn new(entries: Vec<Frequency>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyTuple);
        }
        if !is_z_independent(&entries)? {
            return Err(Error::DependentTuple);
        }
        Ok(Self { entries })
    }

    pub fn single(l: Frequency) -> Result<Self> {
        Self::new(vec![l])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Frequency] {
        &self.entries
    }

    pub fn context(&self) -> &Arc<FrequencyContext> {
        &self.entries[0].ctx
    }

    pub fn coord_strings(&self) -> Vec<Vec<String>> {
        self.entries.iter().map(Frequency::coord_strings).collect()
    }

    /// Integer coordinates of `l` in this tuple, or `None` if `l ∉ span_ℤ(self)`.
    pub fn integer_coordinates(&self, l: &Frequency) -> Result<Option<Vec<BigInt>>> {
        if !l.shares_context(self.context()) {
            return Err(Error::ContextMismatch);
        }
        Ok(rational_solve(&self.entries, std::slice::from_ref(l))
            .and_then(|mut cols| integral_column(cols.pop().expect("one column"))))
    }

    pub fn le(&self, other: &FrequencyTuple) -> Result<bool> {
        Ok(matches!(solve_span(self, other)?, SpanSolution::Relation(_)))
    }
}

impl fmt::Display for FrequencyTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Exponents `n^i_j` with `l_j = Σ_i n^i_j l'_i`; stored with one row per fine
/// entry `i` and one column per coarse entry `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerRelationMatrix {
    fine: usize,
    coarse: usize,
    entries: Vec<BigInt>,
}

impl IntegerRelationMatrix {
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let fine = rows.len();
        let coarse = rows.first().map_or(0, Vec::len);
        if fine == 0 || coarse == 0 || rows.iter().any(|r| r.len() != coarse) {
            return Err(Error::InvalidInput(
                "relation matrix must be a nonempty rectangle".into(),
            ));
        }
        Ok(Self {
            fine,
            coarse,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
    }

    pub fn identity(k: usize) -> Self {
        let mut entries = vec![BigInt::zero(); k * k];
        for i in 0..k {
            entries[i * k + i] = BigInt::one();
        }
        Self {
            fine: k,
            coarse: k,
            entries,
        }
    }

    /// Number of entries of the finer tuple `L′`.
    pub fn fine_len(&self) -> usize {
        self.fine
    }

    /// Number of entries of the coarser tuple `L`.
    pub fn coarse_len(&self) -> usize {
        self.coarse
    }

    pub fn get(&self, fine: usize, coarse: usize) -> &BigInt {
        &self.entries[fine * self.coarse + coarse]
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.entries.chunks(self.coarse).map(<[BigInt]>::to_vec).collect()
    }

    /// Given `self` relating `L ≤ L′` and `finer` relating `L′ ≤ L″`, the relation
    /// of `L ≤ L″` (the product `finer · self`).
    pub fn compose(&self, finer: &IntegerRelationMatrix) -> Result<Self> {
        if finer.coarse != self.fine {
            return Err(Error::InvalidInput(format!(
                "cannot compose relation with {} fine entries and one with {} coarse entries",
                self.fine, finer.coarse
            )));
        }
        let mut entries = Vec::with_capacity(finer.fine * self.coarse);
        for h in 0..finer.fine {
            for j in 0..self.coarse {
                let mut acc = BigInt::zero();
                for i in 0..self.fine {
                    acc += finer.get(h, i) * self.get(i, j);
                }
                entries.push(acc);
            }
        }
        Ok(Self {
            fine: finer.fine,
            coarse: self.coarse,
            entries,
        })
    }

    /// Rebuilds the coarse coordinates `Σ_i n^i_j l'_i` exactly.
    pub fn reconstruct(&self, fine: &FrequencyTuple) -> Result<Vec<Frequency>> {
        if fine.len() != self.fine {
            return Err(Error::DimensionMismatch {
                expected: self.fine,
                found: fine.len(),
            });
        }
        let ctx = fine.context();
        (0..self.coarse)
            .map(|j| {
                let mut coords = vec![BigRational::zero(); ctx.dim()];
                for (i, lp) in fine.entries().iter().enumerate() {
                    let n = BigRational::from_integer(self.get(i, j).clone());
                    for (c, q) in coords.iter_mut().zip(lp.coords.iter()) {
                        *c += &n * q;
                    }
                }
                Frequency::new(ctx, coords)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpanSolution {
    Relation(IntegerRelationMatrix),
    NotInSpan,
}

/// Solves `targets_j = Σ_i x_ij basis_i` over ℚ; `None` if some target is outside
/// the rational span. `basis` must be ℚ-independent. Returns one column per target.
fn rational_solve(basis: &[Frequency], targets: &[Frequency]) -> Option<Vec<Vec<BigRational>>> {
    let kp = basis.len();
    let k = targets.len();
    let d = basis[0].coords.len();
    // Augmented d × (k' + k) system, columns are the basis then the targets.
    let mut m: Vec<Vec<BigRational>> = (0..d)
        .map(|r| {
            basis
                .iter()
                .chain(targets.iter())
                .map(|f| f.coords[r].clone())
                .collect()
        })
        .collect();
    let mut row = 0;
    for col in 0..kp {
        let p = (row..d).find(|&i| !m[i][col].is_zero())?;
        m.swap(row, p);
        let inv = m[row][col].recip();
        for v in m[row].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = m[row].clone();
        for (i, r) in m.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for (v, pv) in r.iter_mut().zip(pivot_row.iter()) {
                *v -= &factor * pv;
            }
        }
        row += 1;
    }
    if m[kp..].iter().any(|r| r[kp..].iter().any(|v| !v.is_zero())) {
        return None;
    }
    Some(
        (0..k)
            .map(|j| (0..kp).map(|i| m[i][kp + j].clone()).collect())
            .collect(),
    )
}

fn integral_column(col: Vec<BigRational>) -> Option<Vec<BigInt>> {
    col.into_iter()
        .map(|q| q.is_integer().then(|| q.to_integer()))
        .collect()
}

/// Decides `L ≤_ℤ L′`: the unique integer matrix with `l_j = Σ_i n^i_j l'_i`, or
/// [`SpanSolution::NotInSpan`].
pub fn solve_span(l: &FrequencyTuple, lp: &FrequencyTuple) -> Result<SpanSolution> {
    if !same_context(l.context(), lp.context()) {
        return Err(Error::ContextMismatch);
    }
    let Some(columns) = rational_solve(&lp.entries, &l.entries) else {
        return Ok(SpanSolution::NotInSpan);
    };
    let mut rows = vec![vec![BigInt::zero(); l.len()]; lp.len()];
    for (j, col) in columns.into_iter().enumerate() {
        let Some(ints) = integral_column(col) else {
            return Ok(SpanSolution::NotInSpan);
        };
        for (i, n) in ints.into_iter().enumerate() {
            rows[i][j] = n;
        }
    }
    Ok(SpanSolution::Relation(IntegerRelationMatrix::from_rows(rows)?))
}

fn common_denominator(freqs: &[&Frequency]) -> BigInt {
    freqs
        .iter()
        .flat_map(|f| f.coords.iter())
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

fn to_integer_rows(freqs: &[&Frequency], denom: &BigInt) -> IntMatrix {
    let scale = BigRational::from_integer(denom.clone());
    freqs
        .iter()
        .map(|f| f.coords.iter().map(|q| (q * &scale).to_integer()).collect())
        .collect()
}

fn from_integer_rows(
    ctx: &Arc<FrequencyContext>,
    rows: impl IntoIterator<Item = Vec<BigInt>>,
    denom: &BigInt,
) -> Vec<Frequency> {
    rows.into_iter()
        .map(|r| Frequency {
            ctx: Arc::clone(ctx),
            coords: r.into_iter().map(|n| BigRational::new(n, denom.clone())).collect(),
        })
        .collect()
}

/// ℤ-basis, in canonical order, of the subgroup generated by `gens`.
fn lattice_basis(ctx: &Arc<FrequencyContext>, gens: &[&Frequency]) -> Vec<Frequency> {
    let denom = common_denominator(gens);
    let hnf = lattice::hermite_form(&to_integer_rows(gens, &denom));
    let mut rows: Vec<Vec<BigInt>> = hnf.rows.into_iter().take(hnf.rank).collect();
    // Pivot index first, then coordinates; the Hermite rows are already in this order.
    rows.sort_by(|a, b| {
        lattice::pivot_index(a)
            .cmp(&lattice::pivot_index(b))
            .then_with(|| a.cmp(b))
    });
    from_integer_rows(ctx, rows, &denom)
}

/// An upper bound `L″` of `L` and `L′` with `span_ℤ(L″) = span_ℤ(L ∪ L′)`.
pub fn join(l: &FrequencyTuple, lp: &FrequencyTuple) -> Result<FrequencyTuple> {
    if !same_context(l.context(), lp.context()) {
        return Err(Error::ContextMismatch);
    }
    let gens: Vec<&Frequency> = l.entries.iter().chain(lp.entries.iter()).collect();
    FrequencyTuple::new(lattice_basis(l.context(), &gens))
}

/// ℤ-basis of `span_ℤ(L) ∩ span_ℤ(L′)`, or `None` when the intersection is trivial.
pub fn meet(l: &FrequencyTuple, lp: &FrequencyTuple) -> Result<Option<FrequencyTuple>> {
    if !same_context(l.context(), lp.context()) {
        return Err(Error::ContextMismatch);
    }
    let gens: Vec<&Frequency> = l.entries.iter().chain(lp.entries.iter()).collect();
    let denom = common_denominator(&gens);
    let hnf = lattice::hermite_form(&to_integer_rows(&gens, &denom));
    // Left-kernel rows (α, β) with Σ αᵢ lᵢ + Σ βⱼ l'ⱼ = 0; the α-parts give the meet.
    let k = l.len();
    let mut meet_gens = Vec::new();
    for relation in &hnf.transform[hnf.rank..] {
        let mut coords = vec![BigRational::zero(); l.context().dim()];
        for (alpha, li) in relation[..k].iter().zip(l.entries.iter()) {
            let a = BigRational::from_integer(alpha.clone());
            for (c, q) in coords.iter_mut().zip(li.coords.iter()) {
                *c += &a * q;
            }
        }
        meet_gens.push(Frequency::new(l.context(), coords)?);
    }
    let refs: Vec<&Frequency> = meet_gens.iter().filter(|f| !f.is_zero()).collect();
    if refs.is_empty() {
        return Ok(None);
    }
    Ok(Some(FrequencyTuple::new(lattice_basis(l.context(), &refs))?))
}
