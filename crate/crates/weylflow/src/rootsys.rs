//! Weighted root systems, Weyl groups, and chamber geometry.
//!
//! A weighted root system is a finite set of covectors (the roots) on an
//! l-dimensional Euclidean space, a nonnegative integer multiplicity per
//! root that is constant on Weyl orbits, and a sign `epsilon` selecting the
//! trigonometric (+1) or hyperbolic (-1) curvature kernel used downstream.
//!
//! Coordinates are always taken with respect to an orthonormal basis, so a
//! covector and its metric dual share the same coefficient vector. Roots are
//! realized from the classical tables: `a_l` lives on the sum-zero hyperplane
//! of R^(l+1) (projected to l orthonormal coordinates), `b_l`, `c_l`, `d_l`
//! and the non-reduced `bc_l` use the standard e_i coordinates, and `g_2`,
//! `f_4` come from their usual tables. Positivity of a root is decided by its
//! pairing with the fixed regular vector (1, 10^-1, 10^-2, ...), which also
//! selects the highest root.
//!
//! With `epsilon = +1` the geometry closes up at the critical radius
//! `r_s = pi / ||highest root||`; with `epsilon = -1` there is no critical
//! radius and `r_s` is reported as infinity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used to decide that a root vanishes on a direction.
pub const WALL_TOL: f64 = 1e-9;

/// Entrywise tolerance for identifying equal Weyl group elements.
const GROUP_TOL: f64 = 1e-9;

/// Safety cap on Weyl group closure; exceeded only by invalid custom inputs.
const GROUP_CAP: usize = 20_000;

#[derive(Debug, Error)]
pub enum RootSystemError {
    #[error("unknown root system family `{0}` (supported: a, b, c, d, bc, g2, f4)")]
    UnknownFamily(String),
    #[error("family `{0}` is not supported (supported: a, b, c, d, bc, g2, f4)")]
    UnsupportedFamily(String),
    #[error("rank must be at least 2, got {0}")]
    RankTooSmall(usize),
    #[error("family {family} does not admit rank {rank}{note}")]
    RankMismatch {
        family: String,
        rank: usize,
        note: String,
    },
    #[error(
        "family {family} of rank {rank} has {expected} root-length orbit(s) \
         (ordered by increasing root length) but {got} multiplicit{} given",
        if *.got == 1 { "y was" } else { "ies were" }
    )]
    WrongMultiplicityCount {
        family: String,
        rank: usize,
        expected: usize,
        got: usize,
    },
    #[error("custom root input invalid: {0}")]
    InvalidRoots(String),
    #[error("Weyl group closure exceeded the safety cap of {cap} elements; the root set is not reflection-closed")]
    ClosureCapExceeded { cap: usize },
    #[error("expected {expected} simple roots for rank {expected}, found {found}; the positive system is inconsistent")]
    SimpleRootCount { expected: usize, found: usize },
    #[error("operation requires a rank-2 system, got rank {0}")]
    NotRankTwo(usize),
    #[error("no chamber arc found; the positive roots do not cut out a sector")]
    NoChamberArc,
}

/// Sign selecting the curvature kernel: `Plus` is the compact (cot) case with
/// a finite critical radius, `Minus` the noncompact (coth) case.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Epsilon {
    Plus,
    Minus,
}

impl Epsilon {
    pub fn sign(self) -> f64 {
        match self {
            Epsilon::Plus => 1.0,
            Epsilon::Minus => -1.0,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Epsilon::Plus),
            -1 => Some(Epsilon::Minus),
            _ => None,
        }
    }
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(match self {
            Epsilon::Plus => 1,
            Epsilon::Minus => -1,
        })
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Epsilon::from_i8(v).ok_or_else(|| serde::de::Error::custom("epsilon must be 1 or -1"))
    }
}

/// A covector on R^l, stored by its coefficients in an orthonormal basis.
/// Under that identification the metric dual has the same coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Covector {
    coeffs: Vec<f64>,
}

impl Covector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Covector { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluate on a vector: the Euclidean dot product of the coefficient
    /// vectors.
    pub fn pairing(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(self.coeffs.len(), v.len());
        self.coeffs.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Metric dual vector (same coefficients in orthonormal coordinates).
    pub fn dual(&self) -> Vec<f64> {
        self.coeffs.clone()
    }

    pub fn norm(&self) -> f64 {
        self.pairing(&self.coeffs).sqrt()
    }
}

/// Dense square matrix, row major. Small (rank <= 4 in practice), so no
/// external linear algebra is pulled in.
#[derive(Clone, Debug)]
pub struct Matrix {
    n: usize,
    a: Vec<f64>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        Matrix { n, a }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Householder reflection across the hyperplane orthogonal to `v`.
    pub fn reflection(v: &[f64]) -> Self {
        let n = v.len();
        let nn: f64 = v.iter().map(|x| x * x).sum();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                a[i * n + j] = id - 2.0 * v[i] * v[j] / nn;
            }
        }
        Matrix { n, a }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let s = self.a[i * n + k];
                if s == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[i * n + j] += s * other.a[k * n + j];
                }
            }
        }
        Matrix { n, a }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.a[i * n + j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn approx_eq(&self, other: &Matrix, tol: f64) -> bool {
        self.n == other.n
            && self
                .a
                .iter()
                .zip(&other.a)
                .all(|(x, y)| (x - y).abs() <= tol)
    }
}

/// Classical family tags. `Custom` marks systems built from an explicit root
/// list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootFamily {
    A,
    B,
    C,
    D,
    BC,
    G2,
    F4,
    Custom,
}

impl RootFamily {
    pub fn label(self) -> &'static str {
        match self {
            RootFamily::A => "a",
            RootFamily::B => "b",
            RootFamily::C => "c",
            RootFamily::D => "d",
            RootFamily::BC => "bc",
            RootFamily::G2 => "g2",
            RootFamily::F4 => "f4",
            RootFamily::Custom => "custom",
        }
    }

    /// Display tag with the rank attached where the name does not already
    /// carry it: "a3", "bc2", but "g2", "f4", "custom" unchanged.
    pub fn tag(self, rank: usize) -> String {
        match self {
            RootFamily::G2 | RootFamily::F4 | RootFamily::Custom => self.label().to_string(),
            _ => format!("{}{rank}", self.label()),
        }
    }

    /// Parse "a", "bc", "g2", optionally with a trailing rank as in "a2" or
    /// "bc3". Returns the family and the embedded rank, if any.
    pub fn parse(s: &str) -> Result<(Self, Option<usize>), RootSystemError> {
        let t = s.trim().to_ascii_lowercase();
        let split = t.find(|c: char| c.is_ascii_digit()).unwrap_or(t.len());
        let (name, digits) = t.split_at(split);
        let rank = if digits.is_empty() {
            None
        } else {
            digits.parse::<usize>().ok()
        };
        let fam = match name {
            "a" => RootFamily::A,
            "b" => RootFamily::B,
            "c" => RootFamily::C,
            "d" => RootFamily::D,
            "bc" | "bd" => RootFamily::BC,
            "g" => RootFamily::G2,
            "f" => RootFamily::F4,
            "e" => {
                return Err(RootSystemError::UnsupportedFamily(t));
            }
            _ => return Err(RootSystemError::UnknownFamily(s.to_string())),
        };
        if fam == RootFamily::G2 && rank.is_some() && rank != Some(2) {
            return Err(RootSystemError::RankMismatch {
                family: "g2".into(),
                rank: rank.unwrap(),
                note: " (g2 has rank 2)".into(),
            });
        }
        if fam == RootFamily::F4 && rank.is_some() && rank != Some(4) {
            return Err(RootSystemError::RankMismatch {
                family: "f4".into(),
                rank: rank.unwrap(),
                note: " (f4 has rank 4)".into(),
            });
        }
        Ok((fam, rank))
    }
}

/// The regular vector (1, 10^-1, 10^-2, ...) fixing positivity and the
/// highest root. Any regular choice yields the same highest-root norm.
fn regular_vector(l: usize) -> Vec<f64> {
    (0..l).map(|k| 10f64.powi(-(k as i32))).collect()
}

/// Full root list (both signs) for a classical family at the given rank.
fn family_roots(family: RootFamily, rank: usize) -> Result<Vec<Vec<f64>>, RootSystemError> {
    let l = rank;
    let mut roots: Vec<Vec<f64>> = Vec::new();
    let push_pm = |v: Vec<f64>, roots: &mut Vec<Vec<f64>>| {
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        roots.push(v);
        roots.push(neg);
    };
    match family {
        RootFamily::A => {
            // e_i - e_j in R^(l+1), expressed in an orthonormal basis of the
            // sum-zero hyperplane: u_k = (e_1 + ... + e_k - k e_{k+1}) / sqrt(k(k+1)).
            let basis: Vec<Vec<f64>> = (1..=l)
                .map(|k| {
                    let mut u = vec![0.0; l + 1];
                    let s = 1.0 / ((k * (k + 1)) as f64).sqrt();
                    for e in u.iter_mut().take(k) {
                        *e = s;
                    }
                    u[k] = -(k as f64) * s;
                    u
                })
                .collect();
            for i in 0..=l {
                for j in (i + 1)..=l {
                    let coords: Vec<f64> = basis.iter().map(|u| u[i] - u[j]).collect();
                    push_pm(coords, &mut roots);
                }
            }
        }
        RootFamily::B | RootFamily::C | RootFamily::D | RootFamily::BC => {
            let short = |i: usize| {
                let mut v = vec![0.0; l];
                v[i] = 1.0;
                v
            };
            if family != RootFamily::D {
                for i in 0..l {
                    let mut v = short(i);
                    if family == RootFamily::C {
                        v[i] = 2.0;
                    }
                    push_pm(v, &mut roots);
                    if family == RootFamily::BC {
                        let mut w = short(i);
                        w[i] = 2.0;
                        push_pm(w, &mut roots);
                    }
                }
            }
            for i in 0..l {
                for j in (i + 1)..l {
                    for s in [1.0, -1.0] {
                        let mut v = vec![0.0; l];
                        v[i] = 1.0;
                        v[j] = s;
                        push_pm(v, &mut roots);
                    }
                }
            }
        }
        RootFamily::G2 => {
            if rank != 2 {
                return Err(RootSystemError::RankMismatch {
                    family: "g2".into(),
                    rank,
                    note: " (g2 has rank 2)".into(),
                });
            }
            let deg = std::f64::consts::PI / 180.0;
            // Short roots of norm 1 every 60 degrees, long roots of norm
            // sqrt(3) every 60 degrees offset by 30.
            for k in 0..3 {
                let th = (60.0 * k as f64) * deg;
                push_pm(vec![th.cos(), th.sin()], &mut roots);
                let tl = (30.0 + 60.0 * k as f64) * deg;
                let n = 3f64.sqrt();
                push_pm(vec![n * tl.cos(), n * tl.sin()], &mut roots);
            }
        }
        RootFamily::F4 => {
            if rank != 4 {
                return Err(RootSystemError::RankMismatch {
                    family: "f4".into(),
                    rank,
                    note: " (f4 has rank 4)".into(),
                });
            }
            for i in 0..4 {
                let mut v = vec![0.0; 4];
                v[i] = 1.0;
                push_pm(v, &mut roots);
            }
            for i in 0..4 {
                for j in (i + 1)..4 {
                    for s in [1.0, -1.0] {
                        let mut v = vec![0.0; 4];
                        v[i] = 1.0;
                        v[j] = s;
                        push_pm(v, &mut roots);
                    }
                }
            }
            // Half-sum roots (+-e1 +-e2 +-e3 +-e4)/2; enumerating sign
            // patterns with a fixed leading + and pushing both signs covers
            // all sixteen.
            for mask in 0..8u32 {
                let mut v = vec![0.5; 4];
                for (b, e) in v.iter_mut().enumerate().skip(1) {
                    if mask >> (b - 1) & 1 == 1 {
                        *e = -0.5;
                    }
                }
                push_pm(v, &mut roots);
            }
        }
        RootFamily::Custom => {
            return Err(RootSystemError::InvalidRoots(
                "custom systems are built from an explicit root list".into(),
            ))
        }
    }
    Ok(roots)
}

/// Weighted root system: positive roots, per-root multiplicities, and the
/// kernel sign. Multiplicities are stored per positive root; families take
/// one multiplicity per root-length orbit and expand it.
#[derive(Clone, Debug)]
pub struct WeightedRootSystem {
    family: RootFamily,
    rank: usize,
    epsilon: Epsilon,
    positive_roots: Vec<Covector>,
    root_norms: Vec<f64>,
    mults: Vec<u32>,
    /// Orbit partition of the positive roots under root reflections, ordered
    /// by increasing root length (ties broken lexicographically).
    orbits: Vec<Vec<usize>>,
    highest_root: Covector,
    r_s: f64,
}

impl WeightedRootSystem {
    /// Build a classical family. `mults_per_orbit` gives one multiplicity per
    /// root-length orbit, shortest first. Multiplicity 0 is admitted as a
    /// test mode in which the curvature correction vanishes identically.
    pub fn build(
        family: RootFamily,
        rank: usize,
        mults_per_orbit: &[u32],
        epsilon: Epsilon,
    ) -> Result<Self, RootSystemError> {
        if rank < 2 {
            return Err(RootSystemError::RankTooSmall(rank));
        }
        let all_roots = family_roots(family, rank)?;
        let vreg = regular_vector(rank);
        let mut positive: Vec<Covector> = Vec::new();
        for r in &all_roots {
            let c = Covector::new(r.clone());
            let p = c.pairing(&vreg);
            debug_assert!(
                p.abs() > 1e-12 * c.norm(),
                "regular vector is orthogonal to a table root"
            );
            if p > 0.0 {
                positive.push(c);
            }
        }
        let orbits = orbit_partition(&positive);
        if orbits.len() != mults_per_orbit.len() {
            return Err(RootSystemError::WrongMultiplicityCount {
                family: family.label().into(),
                rank,
                expected: orbits.len(),
                got: mults_per_orbit.len(),
            });
        }
        let mut mults = vec![0u32; positive.len()];
        for (orbit, &m) in orbits.iter().zip(mults_per_orbit) {
            for &i in orbit {
                mults[i] = m;
            }
        }
        Ok(Self::assemble(family, rank, epsilon, positive, mults, orbits))
    }

    /// Build from an explicit list of positive roots with one multiplicity
    /// per root. The list is trusted as the positive half; use
    /// [`WeightedRootSystem::validate`] to audit it.
    pub fn custom(
        positive_roots: Vec<Vec<f64>>,
        mults: Vec<u32>,
        epsilon: Epsilon,
    ) -> Result<Self, RootSystemError> {
        if positive_roots.is_empty() {
            return Err(RootSystemError::InvalidRoots("empty root list".into()));
        }
        let rank = positive_roots[0].len();
        if rank < 2 {
            return Err(RootSystemError::RankTooSmall(rank));
        }
        if positive_roots.iter().any(|r| r.len() != rank) {
            return Err(RootSystemError::InvalidRoots(
                "roots have inconsistent dimensions".into(),
            ));
        }
        if mults.len() != positive_roots.len() {
            return Err(RootSystemError::InvalidRoots(format!(
                "{} roots but {} multiplicities",
                positive_roots.len(),
                mults.len()
            )));
        }
        let positive: Vec<Covector> = positive_roots.into_iter().map(Covector::new).collect();
        if positive.iter().any(|c| c.norm() < 1e-12) {
            return Err(RootSystemError::InvalidRoots("zero root".into()));
        }
        let orbits = orbit_partition(&positive);
        Ok(Self::assemble(
            RootFamily::Custom,
            rank,
            epsilon,
            positive,
            mults,
            orbits,
        ))
    }

    fn assemble(
        family: RootFamily,
        rank: usize,
        epsilon: Epsilon,
        positive: Vec<Covector>,
        mults: Vec<u32>,
        orbits: Vec<Vec<usize>>,
    ) -> Self {
        let vreg = regular_vector(rank);
        let hi = positive
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                a.pairing(&vreg)
                    .partial_cmp(&b.pairing(&vreg))
                    .expect("finite pairings")
            })
            .map(|(i, _)| i)
            .expect("nonempty root list");
        let highest_root = positive[hi].clone();
        let r_s = match epsilon {
            Epsilon::Plus => std::f64::consts::PI / highest_root.norm(),
            Epsilon::Minus => f64::INFINITY,
        };
        let root_norms = positive.iter().map(Covector::norm).collect();
        WeightedRootSystem {
            family,
            rank,
            epsilon,
            positive_roots: positive,
            root_norms,
            mults,
            orbits,
            highest_root,
            r_s,
        }
    }

    pub fn family(&self) -> RootFamily {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn epsilon(&self) -> Epsilon {
        self.epsilon
    }

    pub fn positive_roots(&self) -> &[Covector] {
        &self.positive_roots
    }

    pub fn root_norm(&self, i: usize) -> f64 {
        self.root_norms[i]
    }

    pub fn mults(&self) -> &[u32] {
        &self.mults
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn highest_root(&self) -> &Covector {
        &self.highest_root
    }

    /// Critical radius pi / ||highest root|| for epsilon = +1, infinity for
    /// epsilon = -1.
    pub fn r_s(&self) -> f64 {
        self.r_s
    }

    /// Sum of all positive-root multiplicities.
    pub fn total_multiplicity(&self) -> u32 {
        self.mults.iter().sum()
    }

    /// Indices of the simple roots: positive roots that are not the sum of
    /// two positive roots.
    pub fn simple_root_indices(&self) -> Result<Vec<usize>, RootSystemError> {
        let n = self.positive_roots.len();
        let mut simple = Vec::new();
        for i in 0..n {
            let a = &self.positive_roots[i];
            let mut decomposable = false;
            'outer: for j in 0..n {
                for k in 0..n {
                    let b = &self.positive_roots[j];
                    let c = &self.positive_roots[k];
                    let ok = (0..self.rank)
                        .all(|d| (b.coeffs()[d] + c.coeffs()[d] - a.coeffs()[d]).abs() < 1e-9);
                    if ok {
                        decomposable = true;
                        break 'outer;
                    }
                }
            }
            if !decomposable {
                simple.push(i);
            }
        }
        if simple.len() != self.rank {
            return Err(RootSystemError::SimpleRootCount {
                expected: self.rank,
                found: simple.len(),
            });
        }
        Ok(simple)
    }

    /// Generate the Weyl group by closing the simple reflections under
    /// products. Breadth-first, deterministic element order starting at the
    /// identity.
    ///
    /// Elements are deduplicated by their action on a regular vector: the
    /// stabilizer of a regular point in a reflection group is trivial, so
    /// the action determines the element. A quantized hash of the action
    /// keeps the closure near-linear in the group order.
    pub fn weyl_group(&self) -> Result<WeylGroup, RootSystemError> {
        let simple = self.simple_root_indices()?;
        let generators: Vec<Matrix> = simple
            .iter()
            .map(|&i| Matrix::reflection(&self.positive_roots[i].dual()))
            .collect();

        // A probe vector off every root hyperplane; jitter deterministically
        // if a custom system happens to contain it in a wall.
        let mut probe = regular_vector(self.rank);
        for attempt in 0..64 {
            let regular = self
                .positive_roots
                .iter()
                .all(|r| r.pairing(&probe).abs() > 1e-6 * r.norm());
            if regular {
                break;
            }
            debug_assert!(attempt < 63, "no regular probe vector found");
            for (k, p) in probe.iter_mut().enumerate() {
                *p *= 1.0 + 1e-3 * ((attempt + 1) * (k + 2)) as f64;
            }
        }

        const QUANT: f64 = 1e-7;
        let key = |action: &[f64]| -> Vec<i64> {
            action.iter().map(|x| (x / QUANT).round() as i64).collect()
        };
        let mut elements: Vec<Matrix> = vec![Matrix::identity(self.rank)];
        let mut actions: Vec<Vec<f64>> = vec![probe.clone()];
        let mut index: std::collections::HashMap<Vec<i64>, Vec<usize>> =
            std::collections::HashMap::new();
        index.insert(key(&probe), vec![0]);

        // Neighbor offsets in {-1,0,1}^rank guard against quantization
        // straddle at bucket boundaries.
        let mut offsets: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..self.rank {
            let mut next = Vec::with_capacity(offsets.len() * 3);
            for o in &offsets {
                for d in [-1i64, 0, 1] {
                    let mut e = o.clone();
                    e.push(d);
                    next.push(e);
                }
            }
            offsets = next;
        }

        let mut frontier = std::collections::VecDeque::from([0usize]);
        while let Some(idx) = frontier.pop_front() {
            for g in &generators {
                let cand = elements[idx].mul(g);
                let act = cand.apply(&probe);
                let k0 = key(&act);
                let mut dup = false;
                'scan: for off in &offsets {
                    let k: Vec<i64> = k0.iter().zip(off).map(|(a, b)| a + b).collect();
                    if let Some(bucket) = index.get(&k) {
                        for &i in bucket {
                            let close = actions[i]
                                .iter()
                                .zip(&act)
                                .all(|(x, y)| (x - y).abs() <= GROUP_TOL);
                            if close {
                                dup = true;
                                break 'scan;
                            }
                        }
                    }
                }
                if !dup {
                    if elements.len() >= GROUP_CAP {
                        return Err(RootSystemError::ClosureCapExceeded { cap: GROUP_CAP });
                    }
                    elements.push(cand);
                    actions.push(act);
                    index.entry(k0).or_default().push(elements.len() - 1);
                    frontier.push_back(elements.len() - 1);
                }
            }
        }
        Ok(WeylGroup {
            elements,
            generators,
            simple_indices: simple,
        })
    }

    /// The closed fundamental chamber as an arc of directions (rank 2 only).
    pub fn chamber_arc(&self) -> Result<ChamberArc, RootSystemError> {
        if self.rank != 2 {
            return Err(RootSystemError::NotRankTwo(self.rank));
        }
        // Wall directions: for root (a, b) the wall line has directions
        // atan2(a, -b) and its antipode.
        let mut angles: Vec<f64> = Vec::new();
        for r in &self.positive_roots {
            let (a, b) = (r.coeffs()[0], r.coeffs()[1]);
            let t = f64::atan2(a, -b);
            for cand in [t, t + std::f64::consts::PI] {
                let mut c = cand.rem_euclid(2.0 * std::f64::consts::PI);
                if c >= 2.0 * std::f64::consts::PI - 1e-12 {
                    c = 0.0;
                }
                if !angles.iter().any(|x| (x - c).abs() < 1e-10) {
                    angles.push(c);
                }
            }
        }
        angles.sort_by(|x, y| x.partial_cmp(y).expect("finite angles"));
        let m = angles.len();
        for k in 0..m {
            let lo = angles[k];
            let hi = if k + 1 < m {
                angles[k + 1]
            } else {
                angles[0] + 2.0 * std::f64::consts::PI
            };
            let mid = 0.5 * (lo + hi);
            let dir = [mid.cos(), mid.sin()];
            if self
                .positive_roots
                .iter()
                .all(|r| r.pairing(&dir) > 1e-12)
            {
                // Present the arc starting in (-pi, pi] so symmetric chambers
                // read symmetrically.
                let shift = if lo >= std::f64::consts::PI {
                    -2.0 * std::f64::consts::PI
                } else {
                    0.0
                };
                return Ok(ChamberArc {
                    theta_lo: lo + shift,
                    theta_hi: hi + shift,
                });
            }
        }
        Err(RootSystemError::NoChamberArc)
    }

    /// Indices of positive roots vanishing on a direction `z` (unit scale),
    /// within [`WALL_TOL`] relative to the root norm.
    pub fn wall_roots(&self, z: &[f64]) -> Vec<usize> {
        self.positive_roots
            .iter()
            .enumerate()
            .filter(|(i, r)| r.pairing(z).abs() < WALL_TOL * self.root_norms[*i])
            .map(|(i, _)| i)
            .collect()
    }

    /// Audit the axioms: reflection closure of the full root set, Weyl
    /// invariance of the multiplicities, and positivity of the given positive
    /// half on a regular vector.
    pub fn validate(&self) -> SystemDiagnostics {
        let mut checks = Vec::new();

        // Reflection closure: s_alpha(beta) must land on a root for all
        // pairs, up to sign.
        let mut worst = 0.0f64;
        let full: Vec<Vec<f64>> = self
            .positive_roots
            .iter()
            .flat_map(|r| {
                let v = r.dual();
                let n: Vec<f64> = v.iter().map(|x| -x).collect();
                [v, n]
            })
            .collect();
        for r in &self.positive_roots {
            let refl = Matrix::reflection(&r.dual());
            for b in &full {
                let img = refl.apply(b);
                let d = full
                    .iter()
                    .map(|c| {
                        c.iter()
                            .zip(&img)
                            .map(|(x, y)| (x - y) * (x - y))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
            }
        }
        checks.push(AxiomCheck {
            name: "reflection_closure".into(),
            pass: worst < 1e-10,
            value: worst,
            note: "largest distance from a reflected root to the nearest root"
                .into(),
        });

        // Multiplicities constant on orbits.
        let mut spread = 0u32;
        for orbit in &self.orbits {
            let ms: Vec<u32> = orbit.iter().map(|&i| self.mults[i]).collect();
            let lo = *ms.iter().min().expect("nonempty orbit");
            let hi = *ms.iter().max().expect("nonempty orbit");
            spread = spread.max(hi - lo);
        }
        checks.push(AxiomCheck {
            name: "weyl_invariant_multiplicities".into(),
            pass: spread == 0,
            value: f64::from(spread),
            note: "largest multiplicity spread across a reflection orbit".into(),
        });

        // Positivity: the half-sum vector pairs strictly positively with
        // every declared positive root.
        let mut rho = vec![0.0; self.rank];
        for r in &self.positive_roots {
            for (acc, c) in rho.iter_mut().zip(r.coeffs()) {
                *acc += c;
            }
        }
        let min_pair = self
            .positive_roots
            .iter()
            .map(|r| r.pairing(&rho) / r.norm())
            .fold(f64::INFINITY, f64::min);
        checks.push(AxiomCheck {
            name: "positive_system".into(),
            pass: min_pair > 1e-10,
            value: min_pair,
            note: "smallest normalized pairing with the half-sum vector; \
                   strictly positive puts all roots in an open half-space"
                .into(),
        });

        SystemDiagnostics { checks }
    }
}

/// Partition positive-root indices into reflection orbits, ordered by
/// increasing root length with lexicographic tie-breaking.
fn orbit_partition(positive: &[Covector]) -> Vec<Vec<usize>> {
    let n = positive.len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(comp: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while comp[r] != r {
            r = comp[r];
        }
        let mut c = i;
        while comp[c] != r {
            let nx = comp[c];
            comp[c] = r;
            c = nx;
        }
        r
    }
    for i in 0..n {
        let refl = Matrix::reflection(&positive[i].dual());
        for j in 0..n {
            let img = refl.apply(&positive[j].dual());
            for (k, c) in positive.iter().enumerate() {
                let dp: f64 = c
                    .coeffs()
                    .iter()
                    .zip(&img)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let dm: f64 = c
                    .coeffs()
                    .iter()
                    .zip(&img)
                    .map(|(x, y)| (x + y) * (x + y))
                    .sum::<f64>()
                    .sqrt();
                if dp < 1e-9 || dm < 1e-9 {
                    let (rj, rk) = (find(&mut comp, j), find(&mut comp, k));
                    if rj != rk {
                        comp[rj] = rk;
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<(usize, usize)> = Vec::new(); // (representative, group index)
    for i in 0..n {
        let r = find(&mut comp, i);
        if let Some(&(_, g)) = seen.iter().find(|(rep, _)| *rep == r) {
            groups[g].push(i);
        } else {
            seen.push((r, groups.len()));
            groups.push(vec![i]);
        }
    }
    groups.sort_by(|ga, gb| {
        let na = positive[ga[0]].norm();
        let nb = positive[gb[0]].norm();
        na.partial_cmp(&nb)
            .expect("finite norms")
            .then_with(|| lex_min(positive, ga).partial_cmp(&lex_min(positive, gb)).expect("finite"))
    });
    groups
}

fn lex_min(positive: &[Covector], orbit: &[usize]) -> f64 {
    // Scalar surrogate for lexicographic comparison of the smallest
    // coefficient tuple in the orbit; only used to break exact norm ties.
    orbit
        .iter()
        .map(|&i| {
            positive[i]
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| c * 10f64.powi(-(k as i32)))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Weyl group given by explicit orthogonal matrices. `elements[0]` is the
/// identity; the order of the remaining elements is the deterministic
/// breadth-first closure order.
#[derive(Clone, Debug)]
pub struct WeylGroup {
    elements: Vec<Matrix>,
    generators: Vec<Matrix>,
    simple_indices: Vec<usize>,
}

impl WeylGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn simple_indices(&self) -> &[usize] {
        &self.simple_indices
    }

    /// Map `v` into the closed fundamental chamber. Returns the index of the
    /// first element (in stored order) whose image of `v` has nonnegative
    /// pairing with every positive root, together with the image. The
    /// identity comes first, so chamber points fold to themselves.
    pub fn fold_to_chamber(
        &self,
        system: &WeightedRootSystem,
        v: &[f64],
    ) -> (usize, Vec<f64>) {
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        for (k, w) in self.elements.iter().enumerate() {
            let img = w.apply(v);
            let ok = system
                .positive_roots()
                .iter()
                .enumerate()
                .all(|(i, r)| r.pairing(&img) >= -1e-12 * system.root_norm(i) * scale);
            if ok {
                return (k, img);
            }
        }
        unreachable!("a finite reflection group folds every vector into the chamber");
    }
}

/// Fast chamber folding by simple-reflection descent. Does not identify the
/// group element; used by samplers that only need the folded direction.
pub fn fold_direction(system: &WeightedRootSystem, v: &[f64]) -> Vec<f64> {
    let simple = system
        .simple_root_indices()
        .expect("folding requires a consistent positive system");
    let mut x = v.to_vec();
    let scale = x.iter().map(|t| t * t).sum::<f64>().sqrt().max(1e-300);
    loop {
        let mut moved = false;
        for &i in &simple {
            let r = &system.positive_roots()[i];
            let p = r.pairing(&x);
            if p < -1e-15 * scale {
                let d = r.dual();
                let nn = system.root_norm(i) * system.root_norm(i);
                let c = 2.0 * p / nn;
                for (xe, de) in x.iter_mut().zip(&d) {
                    *xe -= c * de;
                }
                moved = true;
            }
        }
        if !moved {
            return x;
        }
    }
}

/// Closed arc of directions [theta_lo, theta_hi] cut out by the chamber
/// (rank 2). Angles are plain polar angles; theta_hi - theta_lo = pi / m for
/// a dihedral group of order 2m.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChamberArc {
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl ChamberArc {
    pub fn width(&self) -> f64 {
        self.theta_hi - self.theta_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.theta_lo + self.theta_hi)
    }
}

/// Unit direction for a polar angle.
pub fn dir(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

/// Outcome of one axiom audit. `note` states what `value` measures and
/// which direction is good; residuals want zero, margins want positive.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub note: String,
}

/// Diagnostics from [`WeightedRootSystem::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct SystemDiagnostics {
    pub checks: Vec<AxiomCheck>,
}

impl SystemDiagnostics {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a2() -> WeightedRootSystem {
        WeightedRootSystem::build(RootFamily::A, 2, &[1], Epsilon::Plus).expect("a2 builds")
    }

    #[test]
    fn a2_has_three_positive_roots_of_norm_sqrt2() {
        let s = a2();
        assert_eq!(s.positive_roots().len(), 3);
        for r in s.positive_roots() {
            assert!((r.norm() - 2f64.sqrt()).abs() < 1e-12);
        }
        assert!((s.r_s() - std::f64::consts::PI / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn critical_radius_matches_highest_root_norm() {
        let s = a2();
        assert_eq!(s.r_s(), std::f64::consts::PI / s.highest_root().norm());
        let h = WeightedRootSystem::build(RootFamily::A, 2, &[1], Epsilon::Minus).unwrap();
        assert!(h.r_s().is_infinite());
    }

    #[test]
    fn weyl_orders_match_dihedral_counts() {
        for (fam, rank, mults, order) in [
            (RootFamily::A, 2, vec![1u32], 6usize),
            (RootFamily::B, 2, vec![1, 1], 8),
            (RootFamily::G2, 2, vec![1, 1], 12),
            (RootFamily::C, 2, vec![1, 1], 8),
            (RootFamily::D, 2, vec![1, 1], 4),
            (RootFamily::BC, 2, vec![1, 1, 1], 8),
        ] {
            let s = WeightedRootSystem::build(fam, rank, &mults, Epsilon::Plus).unwrap();
            let w = s.weyl_group().unwrap();
            assert_eq!(w.order(), order, "family {:?}", fam);
        }
    }

    #[test]
    fn higher_rank_weyl_orders() {
        let a3 = WeightedRootSystem::build(RootFamily::A, 3, &[1], Epsilon::Plus).unwrap();
        assert_eq!(a3.weyl_group().unwrap().order(), 24);
        let b3 = WeightedRootSystem::build(RootFamily::B, 3, &[1, 1], Epsilon::Plus).unwrap();
        assert_eq!(b3.weyl_group().unwrap().order(), 48);
        let f4 = WeightedRootSystem::build(RootFamily::F4, 4, &[1, 1], Epsilon::Plus).unwrap();
        assert_eq!(f4.weyl_group().unwrap().order(), 1152);
    }

    #[test]
    fn distinct_images_of_interior_point() {
        let s = a2();
        let w = s.weyl_group().unwrap();
        let arc = s.chamber_arc().unwrap();
        let v = dir(arc.midpoint());
        let images: Vec<Vec<f64>> = w.elements().iter().map(|e| e.apply(&v)).collect();
        for i in 0..images.len() {
            for j in (i + 1)..images.len() {
                let d: f64 = images[i]
                    .iter()
                    .zip(&images[j])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                assert!(d.sqrt() > 1e-6, "elements {} and {} coincide on interior point", i, j);
            }
        }
    }

    #[test]
    fn chamber_widths() {
        let cases = [
            (RootFamily::A, vec![1u32], std::f64::consts::PI / 3.0),
            (RootFamily::B, vec![1, 1], std::f64::consts::PI / 4.0),
            (RootFamily::G2, vec![1, 1], std::f64::consts::PI / 6.0),
        ];
        for (fam, mults, width) in cases {
            let s = WeightedRootSystem::build(fam, 2, &mults, Epsilon::Plus).unwrap();
            let arc = s.chamber_arc().unwrap();
            assert!((arc.width() - width).abs() < 1e-12);
            let w = s.weyl_group().unwrap();
            assert!((w.order() as f64 * arc.width() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        }
    }

    #[test]
    fn chamber_endpoints_have_wall_roots() {
        let s = WeightedRootSystem::build(RootFamily::B, 2, &[1, 1], Epsilon::Plus).unwrap();
        let arc = s.chamber_arc().unwrap();
        let lo = s.wall_roots(&dir(arc.theta_lo));
        let hi = s.wall_roots(&dir(arc.theta_hi));
        assert_eq!(lo.len(), 1);
        assert_eq!(hi.len(), 1);
        // For b2 the two walls lie on different length orbits.
        assert!(
            (s.root_norm(lo[0]) - s.root_norm(hi[0])).abs() > 0.1,
            "wall roots should come from distinct orbits"
        );
        let interior = s.wall_roots(&dir(arc.midpoint()));
        assert!(interior.is_empty());
    }

    #[test]
    fn fold_is_idempotent_and_lands_in_chamber() {
        let s = WeightedRootSystem::build(RootFamily::G2, 2, &[2, 3], Epsilon::Plus).unwrap();
        let w = s.weyl_group().unwrap();
        for k in 0..40 {
            let th = 0.37 + k as f64 * 0.9;
            let v = [1.3 * th.cos(), 1.3 * th.sin()];
            let (_, folded) = w.fold_to_chamber(&s, &v);
            for (i, r) in s.positive_roots().iter().enumerate() {
                assert!(r.pairing(&folded) >= -1e-10 * s.root_norm(i));
            }
            let n0: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n1: f64 = folded.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n0 - n1).abs() < 1e-12);
            let (k2, refolded) = w.fold_to_chamber(&s, &folded);
            assert_eq!(k2, 0, "already-folded vectors fold by the identity");
            assert_eq!(refolded, folded);
            // Fast descent folding reaches the same direction.
            let fast = fold_direction(&s, &v);
            let d: f64 = fast
                .iter()
                .zip(&folded)
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            assert!(d.sqrt() < 1e-9);
        }
    }

    #[test]
    fn orbit_counts_per_family() {
        let cases = [
            (RootFamily::A, 2, 1usize),
            (RootFamily::B, 3, 2),
            (RootFamily::C, 3, 2),
            (RootFamily::BC, 2, 3),
            (RootFamily::G2, 2, 2),
            (RootFamily::F4, 4, 2),
        ];
        for (fam, rank, orbits) in cases {
            let mults = vec![1u32; orbits];
            let s = WeightedRootSystem::build(fam, rank, &mults, Epsilon::Plus).unwrap();
            assert_eq!(s.orbits().len(), orbits, "family {:?}", fam);
        }
        // Wrong multiplicity count is rejected with the expected count.
        let err = WeightedRootSystem::build(RootFamily::B, 2, &[1], Epsilon::Plus).unwrap_err();
        match err {
            RootSystemError::WrongMultiplicityCount { expected, got, .. } => {
                assert_eq!((expected, got), (2, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bc2_positive_root_count_and_orbit_sizes() {
        let s = WeightedRootSystem::build(RootFamily::BC, 2, &[3, 2, 1], Epsilon::Minus).unwrap();
        assert_eq!(s.positive_roots().len(), 6);
        let sizes: Vec<usize> = s.orbits().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 2, 2]);
        // Shortest orbit first: e_i (norm 1), then e_i +- e_j, then 2 e_i.
        assert!((s.positive_roots()[s.orbits()[0][0]].norm() - 1.0).abs() < 1e-12);
        assert!((s.positive_roots()[s.orbits()[2][0]].norm() - 2.0).abs() < 1e-12);
        // Multiplicities landed on the right orbits.
        for &i in &s.orbits()[0] {
            assert_eq!(s.mults()[i], 3);
        }
        for &i in &s.orbits()[2] {
            assert_eq!(s.mults()[i], 1);
        }
        assert!(s.r_s().is_infinite());
    }

    #[test]
    fn b2_has_two_short_and_two_long_positive_roots() {
        let s = WeightedRootSystem::build(RootFamily::B, 2, &[1, 1], Epsilon::Minus).unwrap();
        assert_eq!(s.positive_roots().len(), 4);
        let short = s
            .positive_roots()
            .iter()
            .filter(|r| (r.norm() - 1.0).abs() < 1e-12)
            .count();
        let long = s
            .positive_roots()
            .iter()
            .filter(|r| (r.norm() - 2f64.sqrt()).abs() < 1e-12)
            .count();
        assert_eq!((short, long), (2, 2));
    }

    #[test]
    fn validation_passes_for_families_and_catches_broken_inputs() {
        for (fam, rank, mults) in [
            (RootFamily::A, 2, vec![1u32]),
            (RootFamily::B, 2, vec![1, 2]),
            (RootFamily::G2, 2, vec![1, 1]),
            (RootFamily::BC, 2, vec![1, 2, 3]),
        ] {
            let s = WeightedRootSystem::build(fam, rank, &mults, Epsilon::Plus).unwrap();
            let d = s.validate();
            assert!(d.all_pass(), "family {:?}: {:?}", fam, d);
        }

        // Break orbit invariance of the multiplicities on a2.
        let a2 = a2();
        let roots: Vec<Vec<f64>> = a2.positive_roots().iter().map(|r| r.dual()).collect();
        let broken = WeightedRootSystem::custom(roots.clone(), vec![1, 2, 1], Epsilon::Plus).unwrap();
        let d = broken.validate();
        let m = d
            .checks
            .iter()
            .find(|c| c.name == "weyl_invariant_multiplicities")
            .unwrap();
        assert!(!m.pass);

        // Drop one root: reflection closure fails.
        let partial =
            WeightedRootSystem::custom(roots[..2].to_vec(), vec![1, 1], Epsilon::Plus).unwrap();
        let d = partial.validate();
        let c = d
            .checks
            .iter()
            .find(|c| c.name == "reflection_closure")
            .unwrap();
        assert!(!c.pass);
    }

    #[test]
    fn closure_cap_triggers_on_incommensurate_custom_roots() {
        // Two reflections at an angle that is an irrational multiple of pi
        // generate an infinite dihedral group.
        let th = 1.0f64; // radians
        let roots = vec![vec![1.0, 0.0], vec![th.cos(), th.sin()]];
        let s = WeightedRootSystem::custom(roots, vec![1, 1], Epsilon::Plus).unwrap();
        match s.weyl_group() {
            Err(RootSystemError::ClosureCapExceeded { .. }) => {}
            other => panic!("expected closure cap, got {other:?}"),
        }
    }

    #[test]
    fn family_parsing() {
        assert_eq!(RootFamily::parse("a2").unwrap(), (RootFamily::A, Some(2)));
        assert_eq!(RootFamily::parse("bc3").unwrap(), (RootFamily::BC, Some(3)));
        assert_eq!(RootFamily::parse("g2").unwrap(), (RootFamily::G2, Some(2)));
        assert_eq!(RootFamily::parse("f4").unwrap(), (RootFamily::F4, Some(4)));
        assert!(matches!(
            RootFamily::parse("e8"),
            Err(RootSystemError::UnsupportedFamily(_))
        ));
        assert!(RootFamily::parse("q1").is_err());
    }

    #[test]
    fn rank_below_two_rejected() {
        assert!(matches!(
            WeightedRootSystem::build(RootFamily::A, 1, &[1], Epsilon::Plus),
            Err(RootSystemError::RankTooSmall(1))
        ));
    }
}
