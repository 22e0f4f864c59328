//! Finite groups given by Cayley tables, and the regular action on
//! multi-channel signals.
//!
//! Elements are plain indices `0..order`. The identity is always index 0.
//! Dihedral groups list rotations first (`r^0..r^{n-1}`) and then
//! reflections (`s r^0..s r^{n-1}`). Direct products index the pair
//! `(a, b)` as `a * |H| + b`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Group sizes up to which associativity is verified exhaustively on
/// construction from an explicit table.
pub const EXHAUSTIVE_CHECK_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("invalid group order {0}: must be at least 1")]
    InvalidOrder(usize),
    #[error("element index {index} out of range for group of order {order}")]
    ElementOutOfRange { index: usize, order: usize },
    #[error("cayley table has {found} entries, expected {expected}")]
    TableShape { expected: usize, found: usize },
    #[error("identity law fails at element {0}")]
    Identity(usize),
    #[error("element {0} has no two-sided inverse")]
    Inverse(usize),
    #[error("associativity fails for ({a}, {b}, {c}): (ab)c = {left}, a(bc) = {right}")]
    Associativity {
        a: usize,
        b: usize,
        c: usize,
        left: usize,
        right: usize,
    },
    #[error("row {0} of the cayley table is not a permutation")]
    NotLatin(usize),
    #[error("cannot parse group spec {0:?}: expected c<n>, d<n> or c<m>xc<n>")]
    BadSpec(String),
    #[error("signal belongs to a different group ({found}) than expected ({expected})")]
    GroupMismatch { expected: String, found: String },
    #[error("signal shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("signal contains a non-finite value at position {0}")]
    NonFinite(usize),
    #[error("{sub} is not a subgroup of {ambient} under any supported embedding")]
    NoEmbedding { sub: String, ambient: String },
}

/// How a group was built. Doubles as its canonical spec string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Cyclic(usize),
    Dihedral(usize),
    Product(Box<GroupKind>, Box<GroupKind>),
    /// Loaded from an explicit table.
    Table(usize),
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Cyclic(n) => write!(f, "c{n}"),
            GroupKind::Dihedral(n) => write!(f, "d{n}"),
            GroupKind::Product(a, b) => write!(f, "{a}x{b}"),
            GroupKind::Table(n) => write!(f, "table{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    cayley: Vec<usize>,
    inv: Vec<usize>,
    abelian: bool,
    kind: GroupKind,
}

impl FiniteGroup {
    /// The cyclic group `C_n` with `a * b = (a + b) mod n`.
    pub fn cyclic(n: usize) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::InvalidOrder(n));
        }
        let cayley = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a + b) % n))
            .collect();
        Ok(Self::assemble(n, cayley, GroupKind::Cyclic(n)))
    }

    /// The dihedral group `D_n` of order `2n`, built from `s r = r^{-1} s`.
    pub fn dihedral(n: usize) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::InvalidOrder(n));
        }
        let order = 2 * n;
        // element (f, i) = s^f r^i lives at f * n + i
        let mul = |x: usize, y: usize| {
            let (f1, i1) = (x / n, x % n);
            let (f2, i2) = (y / n, y % n);
            // s^f1 r^i1 s^f2 r^i2 = s^(f1+f2) r^((-1)^f2 i1 + i2)
            let rot = if f2 == 0 { i1 + i2 } else { n - i1 + i2 };
            ((f1 + f2) % 2) * n + rot % n
        };
        let cayley = (0..order)
            .flat_map(|a| (0..order).map(move |b| mul(a, b)))
            .collect();
        Ok(Self::assemble(order, cayley, GroupKind::Dihedral(n)))
    }

    /// Direct product `G x H` with lexicographic indexing.
    pub fn product(g: &FiniteGroup, h: &FiniteGroup) -> Self {
        let (ng, nh) = (g.order, h.order);
        let order = ng * nh;
        let mut cayley = Vec::with_capacity(order * order);
        for x in 0..order {
            for y in 0..order {
                let a = g.mul(x / nh, y / nh);
                let b = h.mul(x % nh, y % nh);
                cayley.push(a * nh + b);
            }
        }
        Self::assemble(
            order,
            cayley,
            GroupKind::Product(Box::new(g.kind.clone()), Box::new(h.kind.clone())),
        )
    }

    /// Builds a group from a row-major Cayley table, checking every axiom.
    ///
    /// Associativity is checked exhaustively for orders up to
    /// [`EXHAUSTIVE_CHECK_ORDER`]; the first failing triple is reported.
    pub fn from_table(order: usize, cayley: Vec<usize>) -> Result<Self, GroupError> {
        if order == 0 {
            return Err(GroupError::InvalidOrder(0));
        }
        if cayley.len() != order * order {
            return Err(GroupError::TableShape {
                expected: order * order,
                found: cayley.len(),
            });
        }
        if let Some(&bad) = cayley.iter().find(|&&v| v >= order) {
            return Err(GroupError::ElementOutOfRange { index: bad, order });
        }
        for a in 0..order {
            let mut seen = vec![false; order];
            for b in 0..order {
                let v = cayley[a * order + b];
                if seen[v] {
                    return Err(GroupError::NotLatin(a));
                }
                seen[v] = true;
            }
        }
        let group = Self::assemble(order, cayley, GroupKind::Table(order));
        group.check_axioms()?;
        Ok(group)
    }

    fn assemble(order: usize, cayley: Vec<usize>, kind: GroupKind) -> Self {
        let inv = (0..order)
            .map(|a| {
                (0..order)
                    .find(|&b| cayley[a * order + b] == 0)
                    .unwrap_or(usize::MAX)
            })
            .collect();
        let abelian =
            (0..order).all(|a| (0..a).all(|b| cayley[a * order + b] == cayley[b * order + a]));
        FiniteGroup {
            order,
            cayley,
            inv,
            abelian,
            kind,
        }
    }

    /// Verifies identity, inverse and associativity laws.
    ///
    /// Associativity is exhaustive up to [`EXHAUSTIVE_CHECK_ORDER`]; above
    /// that only triples involving small indices are sampled.
    pub fn check_axioms(&self) -> Result<(), GroupError> {
        let n = self.order;
        for a in 0..n {
            if self.mul(0, a) != a || self.mul(a, 0) != a {
                return Err(GroupError::Identity(a));
            }
            let ia = self.inv[a];
            if ia >= n || self.mul(a, ia) != 0 || self.mul(ia, a) != 0 {
                return Err(GroupError::Inverse(a));
            }
        }
        let limit = if n <= EXHAUSTIVE_CHECK_ORDER { n } else { 8 };
        for a in 0..limit {
            for b in 0..n {
                let ab = self.mul(a, b);
                for c in 0..n {
                    let left = self.mul(ab, c);
                    let right = self.mul(a, self.mul(b, c));
                    if left != right {
                        return Err(GroupError::Associativity {
                            a,
                            b,
                            c,
                            left,
                            right,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn spec_string(&self) -> String {
        self.kind.to_string()
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.cayley[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn cayley(&self) -> &[usize] {
        &self.cayley
    }

    pub fn check_element(&self, g: usize) -> Result<(), GroupError> {
        if g < self.order {
            Ok(())
        } else {
            Err(GroupError::ElementOutOfRange {
                index: g,
                order: self.order,
            })
        }
    }

    /// Order of element `g` (smallest k >= 1 with g^k = e).
    pub fn element_order(&self, g: usize) -> usize {
        let mut k = 1;
        let mut x = g;
        while x != 0 {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    /// The permutation `h -> g h` of the regular representation.
    ///
    /// Moving the value at position `h` to position `g h` implements
    /// `[g.x](h) = x(g^{-1} h)`.
    pub fn regular_perm(&self, g: usize) -> Result<Vec<usize>, GroupError> {
        self.check_element(g)?;
        Ok((0..self.order).map(|h| self.mul(g, h)).collect())
    }

    /// Applies `g` to every channel of `x`.
    pub fn act(&self, g: usize, x: &GroupSignal) -> Result<GroupSignal, GroupError> {
        self.check_element(g)?;
        x.check_group(self)?;
        let n = self.order;
        let mut values = vec![0.0; x.values.len()];
        for k in 0..x.channels {
            let src = &x.values[k * n..(k + 1) * n];
            let dst = &mut values[k * n..(k + 1) * n];
            for (h, &v) in src.iter().enumerate() {
                dst[self.mul(g, h)] = v;
            }
        }
        Ok(GroupSignal {
            group: x.group.clone(),
            channels: x.channels,
            values,
        })
    }

    /// Brute-force group cross-correlation `y(g) = sum_h w(g^{-1} h) x(h)`.
    ///
    /// Every other convolution path in the crate is checked against this loop.
    pub fn convolve(&self, w: &[f64], x: &[f64]) -> Result<Vec<f64>, GroupError> {
        let n = self.order;
        for len in [w.len(), x.len()] {
            if len != n {
                return Err(GroupError::ShapeMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        let mut y = vec![0.0; n];
        self.convolve_into(w, x, &mut y);
        Ok(y)
    }

    /// Accumulates `w * x` into `out` without shape checks.
    ///
    /// Sums `w(j) x(g j)` in order of `j`, so the terms for `y(a g)` on the
    /// shifted input are the terms for `y(g)` in the same order and the
    /// result is equivariant bit for bit.
    #[inline]
    pub(crate) fn convolve_into(&self, w: &[f64], x: &[f64], out: &mut [f64]) {
        let n = self.order;
        for (g, o) in out.iter_mut().enumerate() {
            let row = &self.cayley[g * n..(g + 1) * n];
            let mut acc = 0.0;
            for (&wj, &gj) in w.iter().zip(row) {
                acc += wj * x[gj];
            }
            *o += acc;
        }
    }
}

impl FromStr for FiniteGroup {
    type Err = GroupError;

    /// Parses `c<n>`, `d<n>` and products such as `c2xc4`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GroupError::BadSpec(s.to_string());
        let s = s.trim().to_ascii_lowercase();
        let mut factors = s.split('x').map(|part| {
            let (tag, digits) = part.split_at(part.len().min(1));
            let n: usize = digits.parse().map_err(|_| bad())?;
            match tag {
                "c" => FiniteGroup::cyclic(n),
                "d" => FiniteGroup::dihedral(n),
                _ => Err(bad()),
            }
        });
        let first = factors.next().ok_or_else(bad)??;
        factors.try_fold(first, |acc, next| Ok(FiniteGroup::product(&acc, &next?)))
    }
}

/// Shared handle to an immutable group.
pub type GroupRef = Arc<FiniteGroup>;

pub fn parse_group(spec: &str) -> Result<GroupRef, GroupError> {
    spec.parse().map(Arc::new)
}

/// A `c`-channel real function on a finite group.
///
/// Storage is channel-major: channel `k` occupies
/// `values[k * |G| .. (k + 1) * |G|]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSignal {
    group: GroupRef,
    channels: usize,
    values: Vec<f64>,
}

impl GroupSignal {
    pub fn zeros(group: GroupRef, channels: usize) -> Self {
        let values = vec![0.0; group.order() * channels];
        GroupSignal {
            group,
            channels,
            values,
        }
    }

    /// Builds a signal from channel-major values.
    pub fn from_channels(
        group: GroupRef,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self, GroupError> {
        let expected = group.order() * channels;
        if channels == 0 || values.len() != expected {
            return Err(GroupError::ShapeMismatch {
                expected,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(GroupError::NonFinite(pos));
        }
        Ok(GroupSignal {
            group,
            channels,
            values,
        })
    }

    /// Builds a signal from a row-major `|G| x c` matrix (`rows[g * c + k]`).
    pub fn from_rows(group: GroupRef, channels: usize, rows: &[f64]) -> Result<Self, GroupError> {
        let n = group.order();
        if channels == 0 || rows.len() != n * channels {
            return Err(GroupError::ShapeMismatch {
                expected: n * channels,
                found: rows.len(),
            });
        }
        let mut values = vec![0.0; rows.len()];
        for g in 0..n {
            for k in 0..channels {
                values[k * n + g] = rows[g * channels + k];
            }
        }
        Self::from_channels(group, channels, values)
    }

    /// Row-major `|G| x c` copy of the values.
    pub fn to_rows(&self) -> Vec<f64> {
        let n = self.group.order();
        let mut rows = vec![0.0; self.values.len()];
        for k in 0..self.channels {
            for g in 0..n {
                rows[g * self.channels + k] = self.values[k * n + g];
            }
        }
        rows
    }

    pub fn group(&self) -> &GroupRef {
        &self.group
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, g: usize, k: usize) -> f64 {
        self.values[k * self.group.order() + g]
    }

    pub fn channel(&self, k: usize) -> &[f64] {
        let n = self.group.order();
        &self.values[k * n..(k + 1) * n]
    }

    /// Euclidean norm, summed in sorted order so that any permutation of the
    /// entries gives the same bits.
    pub fn norm(&self) -> f64 {
        let mut sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        sq.sort_by(f64::total_cmp);
        sq.iter().sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> GroupSignal {
        GroupSignal {
            group: self.group.clone(),
            channels: self.channels,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn check_group(&self, group: &FiniteGroup) -> Result<(), GroupError> {
        let same = std::ptr::eq(self.group.as_ref(), group)
            || match group.kind() {
                GroupKind::Table(_) => self.group.as_ref() == group,
                kind => self.group.kind() == kind,
            };
        if same {
            Ok(())
        } else {
            Err(GroupError::GroupMismatch {
                expected: group.spec_string(),
                found: self.group.spec_string(),
            })
        }
    }
}

/// A subgroup `H < G` together with an injective homomorphism `H -> G`.
#[derive(Debug, Clone)]
pub struct Subgroup {
    pub sub: GroupRef,
    pub ambient: GroupRef,
    /// `embed[h]` is the index in the ambient group of element `h` of `sub`.
    pub embed: Vec<usize>,
}

impl Subgroup {
    /// Finds an embedding of `sub` into `ambient`.
    ///
    /// Supported: `C_n` into any group with an element of order `n` (cyclic
    /// ambients use the generator `N/n`; dihedral ambients use rotations),
    /// and `D_n` into `D_N` for `n | N` via `r -> r^{N/n}`, `s -> s`.
    pub fn embed(sub: GroupRef, ambient: GroupRef) -> Result<Self, GroupError> {
        let err = GroupError::NoEmbedding {
            sub: sub.spec_string(),
            ambient: ambient.spec_string(),
        };
        if ambient.order() % sub.order() != 0 {
            return Err(err);
        }
        let embed = match (sub.kind(), ambient.kind()) {
            (GroupKind::Cyclic(n), GroupKind::Cyclic(big)) => {
                let step = big / n;
                (0..*n).map(|i| i * step).collect()
            }
            (GroupKind::Cyclic(n), _) => {
                let n = *n;
                let gen = (0..ambient.order())
                    .find(|&g| ambient.element_order(g) == n)
                    .ok_or_else(|| err.clone())?;
                let mut embed = Vec::with_capacity(n);
                let mut x = 0;
                for _ in 0..n {
                    embed.push(x);
                    x = ambient.mul(x, gen);
                }
                embed
            }
            (GroupKind::Dihedral(n), GroupKind::Dihedral(big)) if big % n == 0 => {
                let step = big / n;
                (0..2 * n)
                    .map(|e| {
                        let (f, i) = (e / n, e % n);
                        f * big + i * step
                    })
                    .collect()
            }
            _ if sub.kind() == ambient.kind() => (0..sub.order()).collect(),
            _ => return Err(err),
        };
        let candidate = Subgroup {
            sub,
            ambient,
            embed,
        };
        if candidate.is_homomorphism() {
            Ok(candidate)
        } else {
            Err(err)
        }
    }

    fn is_homomorphism(&self) -> bool {
        let n = self.sub.order();
        let mut seen = vec![false; self.ambient.order()];
        for &e in &self.embed {
            if seen[e] {
                return false;
            }
            seen[e] = true;
        }
        (0..n).all(|a| {
            (0..n).all(|b| {
                self.embed[self.sub.mul(a, b)] == self.ambient.mul(self.embed[a], self.embed[b])
            })
        })
    }

    /// Representatives of the right cosets `H t`, one per coset, each the
    /// smallest ambient index in its coset, sorted ascending.
    pub fn right_transversal(&self) -> Vec<usize> {
        let mut covered = vec![false; self.ambient.order()];
        let mut reps = Vec::new();
        for t in 0..self.ambient.order() {
            if covered[t] {
                continue;
            }
            reps.push(t);
            for &h in &self.embed {
                covered[self.ambient.mul(h, t)] = true;
            }
        }
        reps
    }

    /// Reinterprets a `c`-channel signal over the ambient group as a
    /// `c * [G:H]`-channel signal over the subgroup.
    ///
    /// New channel `k * [G:H] + j` holds `h -> x_k(h t_j)` for the `j`-th
    /// transversal element, so the ambient action restricted to `H`
    /// becomes the regular action of `H` on every block.
    pub fn restrict(&self, x: &GroupSignal) -> Result<GroupSignal, GroupError> {
        x.check_group(&self.ambient)?;
        let reps = self.right_transversal();
        let n_sub = self.sub.order();
        let mut values = Vec::with_capacity(x.values().len());
        for k in 0..x.channels() {
            let chan = x.channel(k);
            for &t in &reps {
                values.extend(
                    self.embed
                        .iter()
                        .map(|&h| chan[self.ambient.mul(h, t)]),
                );
            }
        }
        debug_assert_eq!(values.len(), n_sub * x.channels() * reps.len());
        GroupSignal::from_channels(self.sub.clone(), x.channels() * reps.len(), values)
    }
}
