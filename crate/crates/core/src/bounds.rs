//! Lower bounds on the broadcast time.

use std::fmt;

use num::rational::Ratio;
use num::ToPrimitive;

use crate::bitset::VertexSet;
use crate::decomposition::{validate_elimination_tree, EliminationTree, PathDecomposition};
use crate::error::SolveError;
use crate::graph::{components, diameter, distances, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundKind {
    TrivialLog,
    Eccentricity,
    SeparatorCount,
    DiameterHalf,
    SeparatorDiameter,
    TreeDepth,
    PathwidthLength,
    PathwidthN,
}

impl BoundKind {
    pub const ALL: [BoundKind; 8] = [
        BoundKind::TrivialLog,
        BoundKind::Eccentricity,
        BoundKind::SeparatorCount,
        BoundKind::DiameterHalf,
        BoundKind::SeparatorDiameter,
        BoundKind::TreeDepth,
        BoundKind::PathwidthLength,
        BoundKind::PathwidthN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::TrivialLog => "trivialLog",
            BoundKind::Eccentricity => "eccentricity",
            BoundKind::SeparatorCount => "separatorCount",
            BoundKind::DiameterHalf => "diameterHalf",
            BoundKind::SeparatorDiameter => "separatorDiameter",
            BoundKind::TreeDepth => "treeDepth",
            BoundKind::PathwidthLength => "pathwidthLength",
            BoundKind::PathwidthN => "pathwidthN",
        }
    }
}

/// A bound value: exact where the formula is rational, otherwise a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Exact(Ratio<u64>),
    Real(f64),
}

/// Slack absorbed when rounding a float bound up to an integer.
pub const FLOAT_SLACK: f64 = 1e-9;

impl BoundValue {
    pub fn to_f64(self) -> f64 {
        match self {
            BoundValue::Exact(r) => r.to_f64().unwrap_or(f64::MAX),
            BoundValue::Real(x) => x,
        }
    }

    /// Smallest integer round count not below the bound.
    pub fn rounds(self) -> u32 {
        match self {
            BoundValue::Exact(r) => r.ceil().to_integer() as u32,
            BoundValue::Real(x) => (x - FLOAT_SLACK).ceil().max(0.0) as u32,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Exact(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            BoundValue::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            BoundValue::Real(x) => write!(f, "{x:.6}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    None,
    Set(VertexSet),
    EliminationTree { height: usize },
    PathDecomposition { width: usize, length: usize },
    Width(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundCertificate {
    pub kind: BoundKind,
    pub witness: Witness,
    pub value: BoundValue,
}

impl LowerBoundCertificate {
    pub fn rounds(&self) -> u32 {
        self.value.rounds()
    }
}

fn nonempty(s: &VertexSet) -> Result<(), SolveError> {
    if s.is_empty() {
        Err(SolveError::Precondition("separator must be nonempty".into()))
    } else {
        Ok(())
    }
}

/// `|cc(G - S)| / |S|`.
pub fn separator_bound(g: &Graph, s: &VertexSet) -> Result<Ratio<u64>, SolveError> {
    nonempty(s)?;
    Ok(Ratio::new(components(g, s).len() as u64, s.len() as u64))
}

/// `diam(G) / 2`.
pub fn diameter_half_bound(g: &Graph) -> Result<Ratio<u64>, SolveError> {
    let d = diameter(g, &VertexSet::full(g.n())).map_err(|_| SolveError::Disconnected)?;
    Ok(Ratio::new(d as u64, 2))
}

/// `sqrt(sum of diam(C) over components C of G - S, divided by 2|S|)`.
pub fn separator_diameter_bound(g: &Graph, s: &VertexSet) -> Result<f64, SolveError> {
    nonempty(s)?;
    let total: u64 = components(g, s)
        .iter()
        .map(|c| diameter(g, c).expect("components are connected") as u64)
        .sum();
    Ok((total as f64 / (2.0 * s.len() as f64)).sqrt())
}

/// `n^(1/td) / td` for the height `td` of a valid elimination tree.
pub fn treedepth_bound(g: &Graph, et: &EliminationTree) -> Result<f64, SolveError> {
    let td = validate_elimination_tree(g, et)
        .map_err(|e| SolveError::Precondition(format!("invalid elimination tree: {e}")))?;
    if g.n() <= 1 {
        return Err(SolveError::Precondition("needs more than one vertex".into()));
    }
    let td = td as f64;
    Ok((g.n() as f64).powf(1.0 / td) / td)
}

/// `sqrt(l^(1/(pw+1)) / (2 pw))` for a standard path decomposition of width
/// `pw` and length `l`.
pub fn pathwidth_bound(g: &Graph, pd: &PathDecomposition) -> Result<f64, SolveError> {
    pd.validate(g)
        .map_err(|e| SolveError::Precondition(format!("invalid path decomposition: {e}")))?;
    if !pd.is_standard() {
        return Err(SolveError::Precondition("path decomposition is not standard".into()));
    }
    let pw = pd.width();
    if pw < 1 || g.n() <= 1 || !g.is_connected() {
        return Err(SolveError::Precondition("needs width >= 1 and a connected graph with n > 1".into()));
    }
    let (l, pw) = (pd.length() as f64, pw as f64);
    Ok((l.powf(1.0 / (pw + 1.0)) / (2.0 * pw)).sqrt())
}

/// `sqrt((n/(pw+1))^(1/(pw+1)) / (2 pw))`.
pub fn pathwidth_n_bound(n: usize, pw: usize) -> Result<f64, SolveError> {
    if n <= 1 || pw < 1 {
        return Err(SolveError::Precondition("needs n > 1 and width >= 1".into()));
    }
    let (n, pw) = (n as f64, pw as f64);
    Ok(((n / (pw + 1.0)).powf(1.0 / (pw + 1.0)) / (2.0 * pw)).sqrt())
}

pub fn trivial_log_bound(n: usize) -> u32 {
    usize::BITS - (n.max(1) - 1).leading_zeros()
}

pub fn eccentricity_bound(g: &Graph, s: usize) -> Result<u32, SolveError> {
    distances(g, s)
        .into_iter()
        .try_fold(0, |m, d| d.map(|d| m.max(d)))
        .ok_or(SolveError::Disconnected)
}

/// Optional witnesses for [`best_bound`].
#[derive(Debug, Clone, Default)]
pub struct BoundWitnesses {
    pub elimination_tree: Option<EliminationTree>,
    pub path_decomposition: Option<PathDecomposition>,
    pub separators: Vec<VertexSet>,
}

pub const SEPARATOR_CAP: usize = 3;

/// Every certificate computable for `(g, s)`: the trivial and eccentricity
/// bounds, the diameter bound, separator bounds for every set of at most
/// `cap` vertices plus the supplied separators, and the decomposition
/// bounds for supplied witnesses.
pub fn all_bounds(g: &Graph, s: usize, w: &BoundWitnesses, cap: usize) -> Result<Vec<LowerBoundCertificate>, SolveError> {
    if !g.is_connected() {
        return Err(SolveError::Disconnected);
    }
    let n = g.n();
    let mut out = vec![
        LowerBoundCertificate {
            kind: BoundKind::TrivialLog,
            witness: Witness::None,
            value: BoundValue::Exact(Ratio::from_integer(trivial_log_bound(n) as u64)),
        },
        LowerBoundCertificate {
            kind: BoundKind::Eccentricity,
            witness: Witness::Set(VertexSet::singleton(n, s)),
            value: BoundValue::Exact(Ratio::from_integer(eccentricity_bound(g, s)? as u64)),
        },
    ];
    let mut seps = subsets_up_to(n, cap);
    seps.extend(w.separators.iter().filter(|x| !x.is_empty()).cloned());
    for sep in &seps {
        out.push(LowerBoundCertificate {
            kind: BoundKind::SeparatorCount,
            witness: Witness::Set(sep.clone()),
            value: BoundValue::Exact(separator_bound(g, sep)?),
        });
    }
    out.push(LowerBoundCertificate {
        kind: BoundKind::DiameterHalf,
        witness: Witness::None,
        value: BoundValue::Exact(diameter_half_bound(g)?),
    });
    for sep in &seps {
        out.push(LowerBoundCertificate {
            kind: BoundKind::SeparatorDiameter,
            witness: Witness::Set(sep.clone()),
            value: BoundValue::Real(separator_diameter_bound(g, sep)?),
        });
    }
    if let Some(et) = &w.elimination_tree {
        if n > 1 {
            let height = validate_elimination_tree(g, et)
                .map_err(|e| SolveError::Precondition(format!("invalid elimination tree: {e}")))?;
            out.push(LowerBoundCertificate {
                kind: BoundKind::TreeDepth,
                witness: Witness::EliminationTree { height },
                value: BoundValue::Real(treedepth_bound(g, et)?),
            });
        }
    }
    if let Some(pd) = &w.path_decomposition {
        let (width, length) = (pd.width(), pd.length());
        if width >= 1 && n > 1 {
            if pd.is_standard() {
                out.push(LowerBoundCertificate {
                    kind: BoundKind::PathwidthLength,
                    witness: Witness::PathDecomposition { width, length },
                    value: BoundValue::Real(pathwidth_bound(g, pd)?),
                });
            }
            pd.validate(g)
                .map_err(|e| SolveError::Precondition(format!("invalid path decomposition: {e}")))?;
            out.push(LowerBoundCertificate {
                kind: BoundKind::PathwidthN,
                witness: Witness::Width(width),
                value: BoundValue::Real(pathwidth_n_bound(n, width)?),
            });
        }
    }
    Ok(out)
}

/// The certificate with the largest value; ties go to the earlier kind and
/// then to the lexicographically smaller witness.
pub fn best_bound(g: &Graph, s: usize, w: &BoundWitnesses) -> Result<LowerBoundCertificate, SolveError> {
    let all = all_bounds(g, s, w, SEPARATOR_CAP)?;
    let mut best: Option<&LowerBoundCertificate> = None;
    for c in &all {
        let better = match best {
            None => true,
            Some(b) => {
                let (x, y) = (c.value.to_f64(), b.value.to_f64());
                x > y || (x == y && (c.kind, witness_key(&c.witness)) < (b.kind, witness_key(&b.witness)))
            }
        };
        if better {
            best = Some(c);
        }
    }
    Ok(best.expect("trivial bound always present").clone())
}

fn witness_key(w: &Witness) -> Vec<usize> {
    match w {
        Witness::Set(s) => s.to_vec(),
        _ => Vec::new(),
    }
}

/// Nonempty subsets of `[0, n)` with at most `cap` members, by size and
/// then lexicographically.
fn subsets_up_to(n: usize, cap: usize) -> Vec<VertexSet> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for size in 1..=cap.min(n) {
        combos(n, size, 0, &mut cur, &mut out);
    }
    out
}

fn combos(n: usize, size: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<VertexSet>) {
    if cur.len() == size {
        out.push(VertexSet::from_slice(n, cur));
        return;
    }
    for v in from..n {
        cur.push(v);
        combos(n, size, v + 1, cur, out);
        cur.pop();
    }
}
