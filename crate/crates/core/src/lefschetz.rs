//! Jordan types of graded nilpotent operators, bicentric Hard Lefschetz
//! checks, weight filtrations, and the coarse-map HL criteria for orbifold
//! data.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::orbifold::OrbifoldDatum;
use crate::scalar::{rat_int, Rat, Scalar};

/// A Q-graded vector space with a degree-2 nilpotent endomorphism.
#[derive(Clone, Debug)]
pub struct GradedNilpotentPair {
    pub degrees: Vec<Rat>,
    pub omega: Mat,
}

impl GradedNilpotentPair {
    pub fn new(degrees: Vec<Rat>, omega: Mat) -> Result<Self> {
        let n = degrees.len();
        if omega.rows != n || omega.cols != n {
            return Err(Error::Shape("omega must be square of the graded dimension".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if !omega[(i, j)].is_zero() && degrees[i] != degrees[j].clone() + rat_int(2) {
                    return Err(Error::Shape(format!(
                        "omega is not homogeneous of degree 2: entry ({}, {}) maps degree {} to {}",
                        i, j, degrees[j], degrees[i]
                    )));
                }
            }
        }
        let p = GradedNilpotentPair { degrees, omega };
        if !p.omega.pow(n).is_zero_within(0.0) {
            return Err(Error::Shape("omega is not nilpotent".into()));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    fn degree_values(&self) -> Vec<Rat> {
        let mut ds = self.degrees.clone();
        ds.sort();
        ds.dedup();
        ds
    }
}

/// One graded Jordan string: generator phi with omega^{a+1} phi = 0;
/// vectors are omega^0 phi .. omega^a phi.
#[derive(Clone, Debug)]
pub struct JordanString {
    pub length: u32,
    pub center: Rat,
    pub vectors: Vec<Vec<Scalar>>,
}

/// The multiset {(a_j, lambda_j)} sorted by length then center, descending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JordanType(pub Vec<(u32, Rat)>);

impl JordanType {
    fn from_strings(strings: &[JordanString]) -> Self {
        let mut t: Vec<(u32, Rat)> = strings.iter().map(|s| (s.length, s.center.clone())).collect();
        t.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
        JordanType(t)
    }

    /// Block lengths only (the ungraded Jordan data).
    pub fn ungraded(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.0.iter().map(|(a, _)| *a).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

// -- small subspace utilities over Scalar -----------------------------------

struct SpanBuilder {
    dim: usize,
    basis: Vec<Vec<Scalar>>,
    tol: f64,
}

impl SpanBuilder {
    fn new(dim: usize, tol: f64) -> Self {
        SpanBuilder {
            dim,
            basis: Vec::new(),
            tol,
        }
    }

    fn rank_of(&self, extra: Option<&[Scalar]>) -> usize {
        let mut cols: Vec<Vec<Scalar>> = self.basis.clone();
        if let Some(v) = extra {
            cols.push(v.to_vec());
        }
        if cols.is_empty() {
            return 0;
        }
        let m = Mat::from_fn(self.dim, cols.len(), |i, j| cols[j][i].clone());
        m.rank(self.tol)
    }

    fn contains(&self, v: &[Scalar]) -> bool {
        self.rank_of(Some(v)) == self.rank_of(None)
    }

    /// Add the vector if it enlarges the span; returns true when added.
    fn try_extend(&mut self, v: &[Scalar]) -> bool {
        if self.contains(v) {
            false
        } else {
            self.basis.push(v.to_vec());
            true
        }
    }
}

/// Extract a graded Jordan basis. Generators of length a in degree d span
/// (ker omega^{a+1} cap V_d) modulo (ker omega^a cap V_d) + omega(ker
/// omega^{a+2} cap V_{d-2}).
pub fn jordan_strings(p: &GradedNilpotentPair, tol: f64) -> Result<Vec<JordanString>> {
    let n = p.dim();
    let mut powers = vec![Mat::identity(n)];
    for _ in 0..=n {
        let next = powers.last().unwrap().matmul(&p.omega);
        powers.push(next);
    }
    let max_len = (0..=n)
        .find(|&k| powers[k].is_zero_within(0.0))
        .unwrap_or(n)
        .saturating_sub(1);

    // kernel bases of omega^s restricted to each degree block
    let degree_values = p.degree_values();
    let block_indices: Vec<Vec<usize>> = degree_values
        .iter()
        .map(|d| {
            (0..n)
                .filter(|&i| &p.degrees[i] == d)
                .collect()
        })
        .collect();
    let kernel_in_degree = |s: usize, di: usize| -> Vec<Vec<Scalar>> {
        let idx = &block_indices[di];
        if idx.is_empty() {
            return Vec::new();
        }
        let m = Mat::from_fn(n, idx.len(), |i, j| powers[s][(i, idx[j])].clone());
        m.kernel(tol)
            .into_iter()
            .map(|k| {
                let mut v = vec![Scalar::zero(); n];
                for (j, &gi) in idx.iter().enumerate() {
                    v[gi] = k[j].clone();
                }
                v
            })
            .collect()
    };

    let mut strings: Vec<JordanString> = Vec::new();
    for a in (0..=max_len).rev() {
        for (di, d) in degree_values.iter().enumerate() {
            // span to quotient by: shorter kernels plus images of longer strings
            let mut quotient = SpanBuilder::new(n, tol);
            for v in kernel_in_degree(a, di) {
                quotient.try_extend(&v);
            }
            // omega(ker omega^{a+2} cap V_{d-2})
            let d_prev = d.clone() - rat_int(2);
            if let Some(pi) = degree_values.iter().position(|x| *x == d_prev) {
                for v in kernel_in_degree(a + 2, pi) {
                    let w = p.omega.apply(&v);
                    quotient.try_extend(&w);
                }
            }
            for v in kernel_in_degree(a + 1, di) {
                if quotient.try_extend(&v) {
                    // new generator of length exactly a at degree d
                    let mut vectors = vec![v.clone()];
                    for _ in 0..a {
                        let next = p.omega.apply(vectors.last().unwrap());
                        vectors.push(next);
                    }
                    strings.push(JordanString {
                        length: a as u32,
                        center: d.clone() + rat_int(a as i64),
                        vectors,
                    });
                }
            }
        }
    }
    let total: usize = strings.iter().map(|s| s.length as usize + 1).sum();
    if total != n {
        return Err(Error::Data(format!(
            "Jordan extraction found {} vectors in dimension {}",
            total, n
        )));
    }
    Ok(strings)
}

pub fn jordan_type(p: &GradedNilpotentPair, tol: f64) -> Result<JordanType> {
    Ok(JordanType::from_strings(&jordan_strings(p, tol)?))
}

/// Bicentric Hard Lefschetz data: the bicenter {n, n+1} and the graded split.
#[derive(Clone, Debug)]
pub struct BicentricSplit {
    pub n: Rat,
    /// Strings centered at n.
    pub v0: Vec<JordanString>,
    /// Strings centered at n+1.
    pub v1: Vec<JordanString>,
}

/// Succeeds iff every Jordan center lies in a set {n, n+1}; the mono-centric
/// case returns the single center as n with v1 empty.
pub fn is_bicentric_hl(p: &GradedNilpotentPair, tol: f64) -> Result<Option<BicentricSplit>> {
    let strings = jordan_strings(p, tol)?;
    if strings.is_empty() {
        return Ok(Some(BicentricSplit {
            n: Rat::zero(),
            v0: Vec::new(),
            v1: Vec::new(),
        }));
    }
    let mut centers: Vec<Rat> = strings.iter().map(|s| s.center.clone()).collect();
    centers.sort();
    centers.dedup();
    if centers.len() > 2 {
        return Ok(None);
    }
    if centers.len() == 2 && centers[1].clone() - centers[0].clone() != Rat::one() {
        return Ok(None);
    }
    let n = centers[0].clone();
    let (v0, v1) = strings
        .into_iter()
        .partition(|s| s.center == n);
    Ok(Some(BicentricSplit { n, v0, v1 }))
}

/// The increasing weight filtration W_k determined by a nilpotent operator:
/// omega W_k in W_{k-2} and omega^i: Gr_i = Gr_{-i}.
#[derive(Clone, Debug)]
pub struct WeightFiltration {
    /// Sorted list of (k, basis of W_k).
    pub steps: Vec<(i64, Vec<Vec<Scalar>>)>,
}

pub fn weight_filtration(p: &GradedNilpotentPair, tol: f64) -> Result<WeightFiltration> {
    let strings = jordan_strings(p, tol)?;
    let mut weights: Vec<i64> = Vec::new();
    for s in &strings {
        for i in 0..=s.length {
            weights.push(s.length as i64 - 2 * i as i64);
        }
    }
    weights.sort_unstable();
    weights.dedup();
    let mut steps = Vec::new();
    for &k in &weights {
        let mut basis = Vec::new();
        for s in &strings {
            for i in 0..=s.length as i64 {
                if s.length as i64 - 2 * i <= k {
                    basis.push(s.vectors[i as usize].clone());
                }
            }
        }
        steps.push((k, basis));
    }
    Ok(WeightFiltration { steps })
}

impl WeightFiltration {
    /// Check the defining conditions by rank computations.
    pub fn verify(&self, p: &GradedNilpotentPair, tol: f64) -> Result<()> {
        let n = p.dim();
        let span_rank = |vs: &[Vec<Scalar>]| -> usize {
            if vs.is_empty() {
                return 0;
            }
            Mat::from_fn(n, vs.len(), |i, j| vs[j][i].clone()).rank(tol)
        };
        let w_basis = |k: i64| -> Vec<Vec<Scalar>> {
            self.steps
                .iter()
                .rev()
                .find(|(kk, _)| *kk <= k)
                .map(|(_, b)| b.clone())
                .unwrap_or_default()
        };
        for (k, basis) in &self.steps {
            // omega W_k subset W_{k-2}
            let lower = w_basis(k - 2);
            let mut sb = SpanBuilder::new(n, tol);
            for v in &lower {
                sb.try_extend(v);
            }
            for v in basis {
                let w = p.omega.apply(v);
                if w.iter().all(|c| c.is_zero() || c.abs() <= tol) {
                    continue;
                }
                if !sb.contains(&w) {
                    return Err(Error::Data(format!(
                        "omega W_{} is not contained in W_{}",
                        k,
                        k - 2
                    )));
                }
            }
        }
        // omega^i: Gr_i -> Gr_{-i} isomorphism via dimension counts
        let dim_w = |k: i64| span_rank(&w_basis(k));
        let max_k = self.steps.last().map(|(k, _)| *k).unwrap_or(0);
        for i in 1..=max_k {
            let gr_i = dim_w(i) as i64 - dim_w(i - 1) as i64;
            let gr_mi = dim_w(-i) as i64 - dim_w(-i - 1) as i64;
            if gr_i != gr_mi {
                return Err(Error::Data(format!(
                    "Gr_{} and Gr_{} have different dimensions",
                    i, -i
                )));
            }
        }
        Ok(())
    }
}

/// Hard Lefschetz for the coarse map: iota_v = iota_{inv(v)} on every sector.
pub fn hl_coarse_check(datum: &OrbifoldDatum) -> bool {
    datum
        .sectors
        .iter()
        .all(|s| s.age == datum.sectors[s.inv_partner].age)
}

#[derive(Clone, Debug)]
pub struct GenHlGroup {
    pub fractional_age: Rat,
    pub sectors: Vec<usize>,
    pub n_f: Option<Rat>,
    pub pass: bool,
}

/// Generalized HL for the coarse map: per fractional age f, the quantities
/// n_v + 2 iota_v take at most the two values {n_f, n_f + 1}.
pub fn gen_hl_coarse_check(datum: &OrbifoldDatum) -> Vec<GenHlGroup> {
    let mut groups: Vec<GenHlGroup> = Vec::new();
    for (v, s) in datum.sectors.iter().enumerate() {
        let f = s.age.clone() - s.age.floor();
        match groups.iter_mut().find(|g| g.fractional_age == f) {
            Some(g) => g.sectors.push(v),
            None => groups.push(GenHlGroup {
                fractional_age: f,
                sectors: vec![v],
                n_f: None,
                pass: false,
            }),
        }
    }
    for g in groups.iter_mut() {
        let values: Vec<Rat> = g
            .sectors
            .iter()
            .map(|&v| rat_int(datum.sectors[v].dim_v) + rat_int(2) * datum.sectors[v].age.clone())
            .collect();
        let min = values.iter().min().cloned().unwrap();
        g.pass = values
            .iter()
            .all(|x| *x == min || *x == min.clone() + Rat::one());
        g.n_f = if g.pass { Some(min) } else { None };
    }
    groups
}

/// Outcome of the graded-intertwiner construction.
#[derive(Clone, Debug)]
pub enum WitnessOutcome {
    Found(Mat),
    None { reason: String },
}

/// Construct a graded isomorphism phi with phi omega_1 = omega_2 phi, given
/// that p1 is bicentric HL, the ungraded Jordan data agree and the graded
/// dimensions match; the graded types are then forced to be equal and the
/// witness maps matched Jordan strings onto each other.
pub fn graded_iso_witness(
    p1: &GradedNilpotentPair,
    p2: &GradedNilpotentPair,
    tol: f64,
) -> Result<WitnessOutcome> {
    if p1.dim() != p2.dim() {
        return Ok(WitnessOutcome::None {
            reason: "dimensions differ".into(),
        });
    }
    // graded dimensions must agree
    {
        let mut d1 = p1.degrees.clone();
        let mut d2 = p2.degrees.clone();
        d1.sort();
        d2.sort();
        if d1 != d2 {
            return Ok(WitnessOutcome::None {
                reason: "graded dimensions differ".into(),
            });
        }
    }
    let t1 = jordan_type(p1, tol)?;
    let t2 = jordan_type(p2, tol)?;
    if t1.ungraded() != t2.ungraded() {
        return Ok(WitnessOutcome::None {
            reason: "no ungraded intertwiner: Jordan block lengths differ".into(),
        });
    }
    if is_bicentric_hl(p1, tol)?.is_none() {
        return Ok(WitnessOutcome::None {
            reason: "first pair is not bicentric HL".into(),
        });
    }
    if t1 != t2 {
        return Ok(WitnessOutcome::None {
            reason: format!("graded types differ: {:?} vs {:?}", t1.0, t2.0),
        });
    }
    // match strings sorted by (length, center) and map vectors pairwise
    let mut s1 = jordan_strings(p1, tol)?;
    let mut s2 = jordan_strings(p2, tol)?;
    let key = |s: &JordanString| (std::cmp::Reverse(s.length), std::cmp::Reverse(s.center.clone()));
    s1.sort_by_key(key);
    s2.sort_by_key(key);
    let n = p1.dim();
    let mut b1 = Vec::new();
    let mut b2 = Vec::new();
    for (x, y) in s1.iter().zip(s2.iter()) {
        for (vx, vy) in x.vectors.iter().zip(y.vectors.iter()) {
            b1.push(vx.clone());
            b2.push(vy.clone());
        }
    }
    let m1 = Mat::from_fn(n, n, |i, j| b1[j][i].clone());
    let m2 = Mat::from_fn(n, n, |i, j| b2[j][i].clone());
    let phi = m2.matmul(&m1.inverse()?);
    // verify the intertwining identity and gradedness
    let comm = phi.matmul(&p1.omega).sub(&p2.omega.matmul(&phi));
    if !comm.is_zero_within(tol.max(1e-9)) {
        return Err(Error::Data(format!(
            "constructed witness fails the intertwining identity: {}",
            comm.max_abs()
        )));
    }
    for i in 0..n {
        for j in 0..n {
            if !phi[(i, j)].is_zero()
                && phi[(i, j)].abs() > tol
                && p2.degrees[i] != p1.degrees[j]
            {
                return Err(Error::Data("constructed witness is not graded".into()));
            }
        }
    }
    Ok(WitnessOutcome::Found(phi))
}

// ---------------------------------------------------------------------------
// Brute-force oracle and randomized generators (used by the test suites)
// ---------------------------------------------------------------------------

/// Decide by linear algebra plus randomized sampling whether a graded
/// invertible intertwiner exists: solve phi omega_1 = omega_2 phi over the
/// graded entries of phi, then look for an invertible element of the solution
/// space by seeded random combinations.
pub fn graded_intertwiner_exists_bruteforce(
    p1: &GradedNilpotentPair,
    p2: &GradedNilpotentPair,
    seed: u64,
    tol: f64,
) -> bool {
    if p1.dim() != p2.dim() {
        return false;
    }
    let n = p1.dim();
    // unknowns: entries (i, j) with deg2(i) == deg1(j)
    let unknowns: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| p2.degrees[i] == p1.degrees[j])
        .collect();
    if unknowns.is_empty() {
        return false;
    }
    // equations: for all (r, c): sum_j phi[r][j] w1[j][c] - sum_i w2[r][i] phi[i][c] = 0
    let mut rows = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let mut row = vec![Scalar::zero(); unknowns.len()];
            let mut nonzero = false;
            for (u, &(i, j)) in unknowns.iter().enumerate() {
                let mut coeff = Scalar::zero();
                if i == r {
                    coeff = coeff.add(&p1.omega[(j, c)]);
                }
                if j == c {
                    coeff = coeff.sub(&p2.omega[(r, i)]);
                }
                if !coeff.is_zero() {
                    row[u] = coeff;
                    nonzero = true;
                }
            }
            if nonzero {
                rows.push(row);
            }
        }
    }
    let kernel = if rows.is_empty() {
        // no constraints: all graded maps intertwine
        let mut id = Vec::new();
        for u in 0..unknowns.len() {
            let mut v = vec![Scalar::zero(); unknowns.len()];
            v[u] = Scalar::one();
            id.push(v);
        }
        id
    } else {
        Mat::from_rows(rows).kernel(tol)
    };
    if kernel.is_empty() {
        return false;
    }
    // sample random combinations and test invertibility
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) % 41) as i64 - 20
    };
    for _ in 0..8 {
        let mut phi = Mat::zeros(n, n);
        for k in &kernel {
            let c = Scalar::from_int(next());
            for (u, &(i, j)) in unknowns.iter().enumerate() {
                phi[(i, j)] = phi[(i, j)].add(&k[u].mul(&c));
            }
        }
        if phi.rank(tol) == n {
            return true;
        }
    }
    false
}

/// Build the canonical pair of the given type and conjugate it by a random
/// graded invertible matrix with small integer entries.
pub fn pair_of_type(
    spec: &[(u32, Rat)],
    rng: &mut impl FnMut() -> i64,
) -> (GradedNilpotentPair, JordanType) {
    let mut degrees = Vec::new();
    let mut edges = Vec::new();
    for (a, lam) in spec {
        let start = degrees.len();
        for i in 0..=*a {
            degrees.push(lam.clone() - rat_int(*a as i64) + rat_int(2 * i as i64));
        }
        for i in 0..*a {
            edges.push((start + i as usize + 1, start + i as usize));
        }
    }
    let n = degrees.len();
    let mut omega = Mat::zeros(n, n);
    for (to, from) in edges {
        omega[(to, from)] = Scalar::one();
    }
    // conjugate by a random graded invertible matrix
    loop {
        let mut g = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if degrees[i] == degrees[j] {
                    g[(i, j)] = Scalar::from_int(rng());
                }
            }
        }
        if g.rank(0.0) == n {
            let gi = g.inverse().expect("invertible by rank check");
            let w = g.matmul(&omega).matmul(&gi);
            let pair = GradedNilpotentPair {
                degrees: degrees.clone(),
                omega: w,
            };
            let mut t: Vec<(u32, Rat)> = spec.to_vec();
            t.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
            return (pair, JordanType(t));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::rat;

    fn simple_rng(seed: u64) -> impl FnMut() -> i64 {
        let mut state = seed.wrapping_add(0x9e3779b97f4a7c15);
        move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) % 7) as i64 - 3
        }
    }

    #[test]
    fn single_block_type() {
        // degrees {-2, 0, 2}, centered at 0
        let degrees = vec![rat(-2, 1), rat(0, 1), rat(2, 1)];
        let mut omega = Mat::zeros(3, 3);
        omega[(1, 0)] = Scalar::one();
        omega[(2, 1)] = Scalar::one();
        let p = GradedNilpotentPair::new(degrees, omega).unwrap();
        let t = jordan_type(&p, 0.0).unwrap();
        assert_eq!(t.0, vec![(2, rat(0, 1))]);
    }

    #[test]
    fn p2_cohomology_type() {
        // H*(P2) with omega = cup by the hyperplane class: degrees {0, 2, 4}
        let degrees = vec![rat(0, 1), rat(2, 1), rat(4, 1)];
        let mut omega = Mat::zeros(3, 3);
        omega[(1, 0)] = Scalar::one();
        omega[(2, 1)] = Scalar::one();
        let p = GradedNilpotentPair::new(degrees, omega).unwrap();
        let t = jordan_type(&p, 0.0).unwrap();
        assert_eq!(t.0, vec![(2, rat(2, 1))]);
        let b = is_bicentric_hl(&p, 0.0).unwrap().unwrap();
        assert_eq!(b.n, rat(2, 1));
        assert!(b.v1.is_empty());
    }

    #[test]
    fn zero_omega_types() {
        let degrees = vec![rat(0, 1), rat(4, 1)];
        let p = GradedNilpotentPair::new(degrees, Mat::zeros(2, 2)).unwrap();
        let t = jordan_type(&p, 0.0).unwrap();
        assert_eq!(t.0, vec![(0, rat(4, 1)), (0, rat(0, 1))]);
        // centers differ by 4: not bicentric
        assert!(is_bicentric_hl(&p, 0.0).unwrap().is_none());
    }

    #[test]
    fn weight_filtration_of_single_block() {
        let degrees = vec![rat(-2, 1), rat(0, 1), rat(2, 1)];
        let mut omega = Mat::zeros(3, 3);
        omega[(1, 0)] = Scalar::one();
        omega[(2, 1)] = Scalar::one();
        let p = GradedNilpotentPair::new(degrees, omega).unwrap();
        let w = weight_filtration(&p, 0.0).unwrap();
        w.verify(&p, 0.0).unwrap();
        let dims: Vec<(i64, usize)> = w.steps.iter().map(|(k, b)| (*k, b.len())).collect();
        assert_eq!(dims, vec![(-2, 1), (0, 2), (2, 3)]);
    }

    #[test]
    fn weight_filtration_of_zero() {
        let degrees = vec![rat(0, 1), rat(4, 1)];
        let p = GradedNilpotentPair::new(degrees, Mat::zeros(2, 2)).unwrap();
        let w = weight_filtration(&p, 0.0).unwrap();
        assert_eq!(w.steps.len(), 1);
        assert_eq!(w.steps[0].0, 0);
        assert_eq!(w.steps[0].1.len(), 2);
    }

    #[test]
    fn coarse_checks_on_fixtures() {
        assert!(hl_coarse_check(&fixtures::c2z2().datum));
        assert!(hl_coarse_check(&fixtures::c2z3().datum));
        assert!(hl_coarse_check(&fixtures::c2z4().datum));
        assert!(!hl_coarse_check(&fixtures::c3z3().datum));
        assert!(hl_coarse_check(&fixtures::p1().datum));
    }

    #[test]
    fn gen_hl_on_c3z3() {
        let d = fixtures::c3z3().datum;
        let groups = gen_hl_coarse_check(&d);
        // integer ages: one group, values {3, 2, 4}: fails (spread 2)
        let g0 = groups
            .iter()
            .find(|g| g.fractional_age.is_zero())
            .unwrap();
        assert!(!g0.pass);
        // abelian quotient with all ages 1 passes
        let d2 = fixtures::c2z4().datum;
        for g in gen_hl_coarse_check(&d2) {
            assert!(g.pass);
        }
    }

    #[test]
    fn gen_hl_constructed_failure() {
        let mut d = fixtures::c2z2().datum;
        // force values n_v + 2 iota = {2, 5} inside one fractional-age group
        d.sectors[1].age = rat(2, 1);
        d.sectors[1].dim_v = 1;
        let groups = gen_hl_coarse_check(&d);
        let g0 = groups
            .iter()
            .find(|g| g.fractional_age.is_zero())
            .unwrap();
        assert_eq!(g0.sectors.len(), 2);
        assert!(!g0.pass);
    }

    #[test]
    fn witness_identity_case() {
        let mut rng = simple_rng(7);
        let (p, t) = pair_of_type(&[(2, rat(2, 1)), (1, rat(3, 1))], &mut rng);
        assert_eq!(jordan_type(&p, 0.0).unwrap(), t);
        match graded_iso_witness(&p, &p, 0.0).unwrap() {
            WitnessOutcome::Found(_) => {}
            WitnessOutcome::None { reason } => panic!("{}", reason),
        }
    }

    #[test]
    fn witness_across_bases() {
        let mut rng1 = simple_rng(11);
        let mut rng2 = simple_rng(23);
        let spec = [(2u32, rat(1, 1)), (2, rat(2, 1)), (0, rat(1, 1))];
        let (p1, _) = pair_of_type(&spec, &mut rng1);
        let (p2, _) = pair_of_type(&spec, &mut rng2);
        match graded_iso_witness(&p1, &p2, 0.0).unwrap() {
            WitnessOutcome::Found(phi) => {
                let comm = phi.matmul(&p1.omega).sub(&p2.omega.matmul(&phi));
                assert!(comm.is_zero_within(1e-12));
                assert_eq!(phi.rank(0.0), p1.dim());
            }
            WitnessOutcome::None { reason } => panic!("{}", reason),
        }
    }

    #[test]
    fn witness_rejects_unequal_graded_types() {
        // equal ungraded types, unequal graded types, p1 NOT bicentric:
        // centers {0, 3}
        let mut rng1 = simple_rng(3);
        let mut rng2 = simple_rng(5);
        let (p1, _) = pair_of_type(&[(1, rat(0, 1)), (1, rat(3, 1))], &mut rng1);
        let (p2, _) = pair_of_type(&[(1, rat(3, 1)), (1, rat(0, 1))], &mut rng2);
        // same spec set: these ARE equal graded types; perturb instead:
        let (p3, _) = pair_of_type(&[(1, rat(0, 1)), (1, rat(5, 1))], &mut rng2);
        let _ = p2;
        match graded_iso_witness(&p1, &p3, 0.0).unwrap() {
            WitnessOutcome::Found(_) => panic!("should not find a witness"),
            WitnessOutcome::None { reason } => {
                assert!(reason.contains("graded dimensions differ"), "{}", reason)
            }
        }
    }

    #[test]
    fn bruteforce_agrees_on_small_cases() {
        let mut rng = simple_rng(41);
        let spec_a = [(2u32, rat(0, 1)), (0, rat(1, 1))];
        let spec_b = [(1u32, rat(0, 1)), (1, rat(1, 1))];
        let (pa1, _) = pair_of_type(&spec_a, &mut rng);
        let (pa2, _) = pair_of_type(&spec_a, &mut rng);
        let (pb, _) = pair_of_type(&spec_b, &mut rng);
        assert!(graded_intertwiner_exists_bruteforce(&pa1, &pa2, 1, 0.0));
        assert!(!graded_intertwiner_exists_bruteforce(&pa1, &pb, 2, 0.0));
    }
}
