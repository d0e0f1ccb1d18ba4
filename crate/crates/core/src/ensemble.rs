//! Split-variable-node LDPC ensembles `C(λs, λp, ρ)`.
//!
//! Source and parity variable nodes carry separate edge degree
//! distributions. Coefficients are edge fractions over the *whole* edge set,
//! so `Σ λs_i = α_s`, `Σ λp_i = α_p` and `α_s + α_p = 1`.
//!
//! Degrees are node degrees everywhere in this module and in the JSON file
//! format: the key `"3"` holds the coefficient of `x²` in `λ(x) = Σ λ_i x^{i-1}`.
//!
//! ```json
//! {
//!   "lambda_s": {"3": 0.2362, "5": 0.227},
//!   "lambda_p": {"2": 0.161, "20": 0.3758},
//!   "rho": {"10": 0.9229, "11": 0.0771},
//!   "rate": 0.8
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge-perspective degree polynomial keyed by node degree.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DegreePolynomial(BTreeMap<u32, f64>);

impl DegreePolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a polynomial from `(node degree, edge fraction)` pairs. Zero
    /// coefficients are dropped; repeated degrees are summed.
    pub fn from_pairs<I: IntoIterator<Item = (u32, f64)>>(pairs: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (deg, c) in pairs {
            if deg == 0 {
                return Err(Error::InvalidParameter("degree 0 is not allowed".into()));
            }
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "coefficient {c} at degree {deg} must be a non-negative number"
                )));
            }
            if c > 0.0 {
                *map.entry(deg).or_insert(0.0) += c;
            }
        }
        Ok(Self(map))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.0.iter().map(|(&d, &c)| (d, c))
    }

    pub fn coeff(&self, degree: u32) -> f64 {
        self.0.get(&degree).copied().unwrap_or(0.0)
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.0.keys().copied().collect()
    }

    pub fn max_degree(&self) -> u32 {
        self.0.keys().next_back().copied().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.0.keys().next().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ_i c_i`.
    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    /// `Σ_i c_i / i`, proportional to the number of nodes.
    pub fn node_sum(&self) -> f64 {
        self.0.iter().map(|(&d, &c)| c / d as f64).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|(&d, &c)| (d, c * factor)).collect())
    }

    /// Coefficients rescaled to sum to one.
    pub fn normalized(&self) -> Self {
        let t = self.total();
        if t > 0.0 {
            self.scaled(1.0 / t)
        } else {
            self.clone()
        }
    }

    /// Node-perspective fractions `(λ_i/i) / Σ_j λ_j/j`.
    pub fn node_fractions(&self) -> Vec<(u32, f64)> {
        let s = self.node_sum();
        self.0
            .iter()
            .map(|(&d, &c)| (d, if s > 0.0 { c / d as f64 / s } else { 0.0 }))
            .collect()
    }

    /// Coefficient-wise sum.
    pub fn plus(&self, other: &Self) -> Self {
        let mut map = self.0.clone();
        for (&d, &c) in &other.0 {
            *map.entry(d).or_insert(0.0) += c;
        }
        Self(map)
    }

    /// Renders the polynomial in `x^{i-1}` notation.
    pub fn to_poly_string(&self) -> String {
        let terms: Vec<String> = self
            .0
            .iter()
            .map(|(&d, &c)| match d {
                1 => format!("{c}"),
                2 => format!("{c}x"),
                _ => format!("{c}x^{}", d - 1),
            })
            .collect();
        terms.join(" + ")
    }
}

/// How strictly [`EnsembleSpec::validate`] checks the constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// Simplex constraints at 1e-9, edge balance at 1e-6.
    Strict,
    /// 1e-3 slack everywhere, for coefficients published rounded to four
    /// decimals.
    Published,
}

impl ValidationMode {
    fn simplex_tol(self) -> f64 {
        match self {
            Self::Strict => 1e-9,
            Self::Published => 1e-3,
        }
    }

    fn balance_tol(self) -> f64 {
        match self {
            Self::Strict => 1e-6,
            Self::Published => 1e-3,
        }
    }
}

/// A violated ensemble constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyPolynomial(&'static str),
    VariableEdgeSum { total: f64 },
    CheckEdgeSum { total: f64 },
    CheckDegreeTooSmall { degree: u32 },
    EdgeBalance { parity: f64, check: f64 },
    RateMismatch { declared: f64, design: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyPolynomial(name) => write!(f, "{name} has no coefficients"),
            Self::VariableEdgeSum { total } => {
                write!(f, "Σλs+Σλp=1 violated (α_s+α_p = {total})")
            }
            Self::CheckEdgeSum { total } => write!(f, "Σρ=1 violated (Σρ = {total})"),
            Self::CheckDegreeTooSmall { degree } => {
                write!(f, "check degree {degree} is below 2")
            }
            Self::EdgeBalance { parity, check } => write!(
                f,
                "edge balance Σλp_i/i = Σρ_i/i violated ({parity} vs {check})"
            ),
            Self::RateMismatch { declared, design } => write!(
                f,
                "declared rate {declared} differs from design rate {design}"
            ),
        }
    }
}

/// The ensemble `C(λs, λp, ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub lambda_s: DegreePolynomial,
    pub lambda_p: DegreePolynomial,
    pub rho: DegreePolynomial,
    /// Nominal rate `m/k`. When present it fixes the parity count of a
    /// realized graph; otherwise the design rate is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

impl EnsembleSpec {
    pub fn new(
        lambda_s: DegreePolynomial,
        lambda_p: DegreePolynomial,
        rho: DegreePolynomial,
    ) -> Self {
        Self {
            lambda_s,
            lambda_p,
            rho,
            rate: None,
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = Some(rate);
        self
    }

    /// `α_s = |Π_s| / |Π|`.
    pub fn alpha_s(&self) -> f64 {
        self.lambda_s.total()
    }

    /// `α_p = |Π_p| / |Π|`.
    pub fn alpha_p(&self) -> f64 {
        self.lambda_p.total()
    }

    /// `|Σ λp_i/i − Σ ρ_i/i|`: parity nodes and check nodes are equally many.
    pub fn edge_balance_residual(&self) -> f64 {
        (self.lambda_p.node_sum() - self.rho.node_sum()).abs()
    }

    /// Lists every violated constraint; empty when the spec is valid.
    pub fn validate(&self, mode: ValidationMode) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, poly) in [
            ("lambda_s", &self.lambda_s),
            ("lambda_p", &self.lambda_p),
            ("rho", &self.rho),
        ] {
            if poly.is_empty() {
                out.push(Violation::EmptyPolynomial(name));
            }
        }
        let var_total = self.alpha_s() + self.alpha_p();
        if (var_total - 1.0).abs() > mode.simplex_tol() {
            out.push(Violation::VariableEdgeSum { total: var_total });
        }
        let rho_total = self.rho.total();
        if (rho_total - 1.0).abs() > mode.simplex_tol() {
            out.push(Violation::CheckEdgeSum { total: rho_total });
        }
        if let Some(d) = self.rho.degrees().into_iter().find(|&d| d < 2) {
            out.push(Violation::CheckDegreeTooSmall { degree: d });
        }
        if self.edge_balance_residual() > mode.balance_tol() {
            out.push(Violation::EdgeBalance {
                parity: self.lambda_p.node_sum(),
                check: self.rho.node_sum(),
            });
        }
        if let (Some(declared), Ok(design)) = (self.rate, self.design_rate()) {
            if (declared - design).abs() > 1e-3 {
                out.push(Violation::RateMismatch { declared, design });
            }
        }
        out
    }

    pub fn is_valid(&self, mode: ValidationMode) -> bool {
        self.validate(mode).is_empty()
    }

    /// `R_c = (Σ λp_i/i) / (Σ λs_i/i)`.
    pub fn design_rate(&self) -> Result<f64> {
        let s = self.lambda_s.node_sum();
        if s <= 0.0 {
            return Err(Error::InvalidParameter(
                "Σ λs_i/i is zero; the design rate is undefined".into(),
            ));
        }
        Ok(self.lambda_p.node_sum() / s)
    }

    /// The rate used to size realized graphs.
    pub fn nominal_rate(&self) -> Result<f64> {
        match self.rate {
            Some(r) => Ok(r),
            None => self.design_rate(),
        }
    }

    /// Largest variable node degree of either class.
    pub fn max_variable_degree(&self) -> u32 {
        self.lambda_s.max_degree().max(self.lambda_p.max_degree())
    }

    /// The conventional ensemble with one variable distribution
    /// `λ = λs + λp` shared by both node classes. Node counts keep the
    /// original `k : m` partition, so the design rate is unchanged.
    pub fn merge_to_conventional(&self) -> Result<Self> {
        let rate = self.nominal_rate()?;
        let lambda = self.lambda_s.plus(&self.lambda_p);
        let alpha_s = 1.0 / (1.0 + rate);
        Ok(Self {
            lambda_s: lambda.scaled(alpha_s),
            lambda_p: lambda.scaled(1.0 - alpha_s),
            rho: self.rho.clone(),
            rate: self.rate,
        })
    }

    /// `λs + λp`; for a conventional ensemble this is its single variable
    /// distribution.
    pub fn combined_lambda(&self) -> DegreePolynomial {
        self.lambda_s.plus(&self.lambda_p)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    /// Node degree sequences of a length-`k` realization.
    pub fn node_degree_sequences(&self, k: usize) -> Result<DegreeSequences> {
        node_degree_sequences(self, k)
    }
}

fn poly(pairs: &[(u32, f64)]) -> DegreePolynomial {
    DegreePolynomial::from_pairs(pairs.iter().copied()).expect("built-in coefficients are valid")
}

/// Code `C1`, rate 0.8.
pub fn c1() -> EnsembleSpec {
    EnsembleSpec::new(
        poly(&[(3, 0.2362), (5, 0.227)]),
        poly(&[(2, 0.161), (20, 0.3758)]),
        poly(&[(10, 0.9229), (11, 0.0771)]),
    )
    .with_rate(0.8)
}

/// Code `C2`, rate 1.2.
pub fn c2() -> EnsembleSpec {
    EnsembleSpec::new(
        poly(&[(3, 0.1024), (7, 0.3631)]),
        poly(&[(2, 0.1817), (11, 0.0749), (50, 0.2779)]),
        poly(&[(9, 0.2886), (10, 0.7114)]),
    )
    .with_rate(1.2)
}

/// Code `C3`: the conventional counterpart of `C2`.
pub fn c3() -> EnsembleSpec {
    c2().merge_to_conventional()
        .expect("C2 has a well-defined rate")
}

/// Resolves a built-in ensemble name.
pub fn builtin(name: &str) -> Option<EnsembleSpec> {
    match name.to_ascii_uppercase().as_str() {
        "C1" => Some(c1()),
        "C2" => Some(c2()),
        "C3" => Some(c3()),
        _ => None,
    }
}

/// Resolves either a built-in name or a path to an ensemble file.
pub fn resolve(name_or_path: &str) -> Result<EnsembleSpec> {
    match builtin(name_or_path) {
        Some(spec) => Ok(spec),
        None => EnsembleSpec::load(Path::new(name_or_path)),
    }
}

/// Integer node degrees of a finite realization.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSequences {
    pub source: Vec<u32>,
    pub parity: Vec<u32>,
    pub check: Vec<u32>,
    pub m: usize,
}

impl DegreeSequences {
    pub fn variable_edges(&self) -> usize {
        self.source.iter().chain(&self.parity).map(|&d| d as usize).sum()
    }

    pub fn check_edges(&self) -> usize {
        self.check.iter().map(|&d| d as usize).sum()
    }
}

/// Splits `total` nodes across degrees in proportion to `weights` using
/// largest-remainder rounding.
fn largest_remainder(weights: &[(u32, f64)], total: usize) -> Vec<(u32, usize)> {
    let wsum: f64 = weights.iter().map(|w| w.1).sum();
    if wsum <= 0.0 || weights.is_empty() {
        return Vec::new();
    }
    let exact: Vec<f64> = weights.iter().map(|w| w.1 / wsum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    weights.iter().map(|w| w.0).zip(counts).collect()
}

fn expand(counts: &[(u32, usize)]) -> Vec<u32> {
    counts
        .iter()
        .flat_map(|&(d, n)| std::iter::repeat(d).take(n))
        .collect()
}

/// Realizes the node degree multisets for `k` source nodes.
///
/// Node counts follow the node-perspective fractions with largest-remainder
/// rounding; `m = round(k · R)` where `R` is the nominal rate. The check
/// sequence is then repaired so both sides of the graph carry the same
/// number of edges: nodes are moved to an adjacent degree inside the support
/// of `ρ` where possible, otherwise nodes of the largest degree are
/// incremented or decremented.
pub fn node_degree_sequences(spec: &EnsembleSpec, k: usize) -> Result<DegreeSequences> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let rate = spec.nominal_rate()?;
    let m = (k as f64 * rate).round() as usize;
    if m == 0 {
        return Err(Error::Infeasible(format!("k = {k} yields no parity nodes")));
    }
    let source = expand(&largest_remainder(&spec.lambda_s.node_fractions(), k));
    let parity = expand(&largest_remainder(&spec.lambda_p.node_fractions(), m));
    let mut check_counts: BTreeMap<u32, usize> =
        largest_remainder(&spec.rho.node_fractions(), m).into_iter().collect();

    let var_edges: usize = source.iter().chain(&parity).map(|&d| d as usize).sum();
    let check_edges =
        |c: &BTreeMap<u32, usize>| c.iter().map(|(&d, &n)| d as usize * n).sum::<usize>();
    let mut imbalance = var_edges as i64 - check_edges(&check_counts) as i64;
    if imbalance.unsigned_abs() as usize > m {
        return Err(Error::Infeasible(format!(
            "edge imbalance {imbalance} cannot be repaired with ±1 moves on {m} check nodes"
        )));
    }
    let support: Vec<u32> = spec.rho.degrees();
    let rho_frac: BTreeMap<u32, f64> = spec.rho.node_fractions().into_iter().collect();
    // Moves inside the support are chosen from the degree class that is most
    // over-represented relative to its target count.
    while imbalance != 0 {
        let step: i64 = imbalance.signum();
        let candidate = check_counts
            .iter()
            .filter(|(&d, &n)| {
                n > 0 && {
                    let nd = d as i64 + step;
                    nd >= 2 && support.contains(&(nd as u32))
                }
            })
            .map(|(&d, &n)| (d, n as f64 - rho_frac.get(&d).copied().unwrap_or(0.0) * m as f64))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)));
        let from = match candidate {
            Some((d, _)) => d,
            // No adjacent degree inside the support: adjust the largest degree.
            None if step > 0 => *check_counts.keys().next_back().unwrap(),
            None => {
                *check_counts
                    .iter()
                    .rev()
                    .find(|(&d, &n)| n > 0 && d > 2)
                    .ok_or_else(|| {
                        Error::Infeasible("cannot decrement check degrees below 2".into())
                    })?
                    .0
            }
        };
        let to = (from as i64 + step) as u32;
        *check_counts.get_mut(&from).unwrap() -= 1;
        *check_counts.entry(to).or_insert(0) += 1;
        imbalance -= step;
    }
    check_counts.retain(|_, n| *n > 0);
    let check = expand(&check_counts.into_iter().collect::<Vec<_>>());
    debug_assert_eq!(check.len(), m);
    Ok(DegreeSequences {
        source,
        parity,
        check,
        m,
    })
}
