//! Basis-adaptive sparse PCE: the static truncation rule and the degree &
//! q-norm, forward-neighbor and anisotropic-degree schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cv_error::ErrorEstimate;
use crate::error::{PceError, Result};
use crate::input_model::InputModel;
use crate::multi_index::{hyperbolic_set_capped, MultiIndexSet};
use crate::poly_basis::PolyBasis;
use crate::sampling::Design;
use crate::solvers::{solve, SolverId, SolverOptions};
use crate::surrogate::SparseSurrogate;

mod anisotropic;
mod forward;
mod pq;
mod static_rule;

pub use anisotropic::{anisotropic_adaptive, removal_count, restrict_smallest};
pub use forward::{expand_admissible, forward_neighbor_adaptive};
pub use pq::pq_adaptive;
pub use static_rule::{closest_degree, static_basis, static_q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SchemeId {
    Static,
    Pq,
    Fn,
    Ad,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [SchemeId::Static, SchemeId::Pq, SchemeId::Fn, SchemeId::Ad];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeId::Static => "static",
            SchemeId::Pq => "pq",
            SchemeId::Fn => "fn",
            SchemeId::Ad => "ad",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = PceError;
    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| PceError::UnknownId(s.to_string()))
    }
}

impl From<SchemeId> for String {
    fn from(id: SchemeId) -> Self {
        id.as_str().to_string()
    }
}

impl TryFrom<String> for SchemeId {
    type Error = PceError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

pub const DEFAULT_MAX_BASIS_SIZE: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptivityConfig {
    /// Inclusive degree range of the degree & q-norm grid.
    pub p_range: (u32, u32),
    pub q_values: Vec<f64>,
    pub fn_t: usize,
    /// Initial total degree of forward-neighbor adaptivity; closest to `10 N` when absent.
    pub fn_initial_p: Option<u32>,
    /// q-norm of the forward-neighbor initial basis; the largest `q_values` entry when absent.
    pub fn_initial_q: Option<f64>,
    /// Initial total degree of anisotropic adaptivity; `ceil(p_max / 2)` when absent.
    pub ad_initial_p: Option<u32>,
    /// Static-basis degree; the `10/3 N` rule when absent.
    pub static_p: Option<u32>,
    pub static_q: Option<f64>,
    pub max_basis_size: usize,
    pub solver: SolverOptions,
}

impl Default for AdaptivityConfig {
    fn default() -> Self {
        Self {
            p_range: (1, 10),
            q_values: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            fn_t: 3,
            fn_initial_p: None,
            fn_initial_q: None,
            ad_initial_p: None,
            static_p: None,
            static_q: None,
            max_basis_size: DEFAULT_MAX_BASIS_SIZE,
            solver: SolverOptions::default(),
        }
    }
}

impl AdaptivityConfig {
    /// Rule-based defaults for a model of dimension `d`: degree range up to
    /// the largest degree whose basis stays below `10^4` terms (at most 25).
    pub fn for_dimension(d: usize) -> Self {
        let q_values = if d < 20 {
            vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
        } else {
            vec![0.5]
        };
        let q_max = q_values.iter().copied().fold(0.0, f64::max);
        let mut p_max = 1;
        while p_max < 25 && hyperbolic_set_capped(d, p_max + 1, q_max, 10_000).is_some() {
            p_max += 1;
        }
        Self {
            p_range: (1, p_max),
            q_values,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.p_range;
        if lo > hi {
            return Err(PceError::InvalidArgument(format!("empty degree range {lo}..={hi}")));
        }
        if self.q_values.is_empty() || self.q_values.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return Err(PceError::InvalidArgument("q-norm values must lie in (0, 1]".into()));
        }
        if self.fn_t < 1 {
            return Err(PceError::InvalidArgument("forward-neighbor T must be >= 1".into()));
        }
        if let Some(q) = self.fn_initial_q.or(self.static_q) {
            if !(q > 0.0 && q <= 1.0) {
                return Err(PceError::InvalidArgument(format!("q-norm {q} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn q_max(&self) -> f64 {
        self.q_values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Scheme-specific position, e.g. `p=3,q=0.5` or `outer=2,inner=4`.
    pub label: String,
    /// Candidate basis descriptor.
    pub basis: String,
    pub basis_size: usize,
    pub criterion: f64,
    pub selected: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityTrace {
    pub entries: Vec<TraceEntry>,
}

impl AdaptivityTrace {
    fn push_fit(&mut self, label: String, basis: String, size: usize, criterion: ErrorEstimate) -> usize {
        self.entries.push(TraceEntry {
            label,
            basis,
            basis_size: size,
            criterion: criterion.value,
            selected: false,
            note: None,
        });
        self.entries.len() - 1
    }

    fn push_skip(&mut self, label: String, basis: String, note: String) {
        self.entries.push(TraceEntry {
            label,
            basis,
            basis_size: 0,
            criterion: f64::INFINITY,
            selected: false,
            note: Some(note),
        });
    }

    fn annotate(&mut self, entry: usize, note: impl Into<String>) {
        let e = &mut self.entries[entry];
        let note = note.into();
        e.note = Some(match e.note.take() {
            Some(prev) => format!("{prev}; {note}"),
            None => note,
        });
    }

    fn select(&mut self, entry: usize) {
        for (i, e) in self.entries.iter_mut().enumerate() {
            e.selected = i == entry;
        }
    }

    pub fn selected(&self) -> Option<&TraceEntry> {
        self.entries.iter().find(|e| e.selected)
    }

    /// Smallest finite criterion recorded.
    pub fn min_criterion(&self) -> Option<f64> {
        self.entries
            .iter()
            .map(|e| e.criterion)
            .filter(|c| c.is_finite())
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    pub surrogate: SparseSurrogate,
    pub trace: AdaptivityTrace,
}

/// Everything a scheme needs to fit a PCE on a candidate basis.
pub struct FitContext<'a> {
    pub input_model: &'a InputModel,
    pub design: &'a Design,
    pub solver: SolverId,
    pub config: &'a AdaptivityConfig,
    fingerprint: String,
}

impl<'a> FitContext<'a> {
    pub fn new(input_model: &'a InputModel, design: &'a Design, solver: SolverId, config: &'a AdaptivityConfig) -> Result<Self> {
        config.validate()?;
        if design.dim() != input_model.dim() {
            return Err(PceError::DimensionMismatch {
                expected: input_model.dim(),
                got: design.dim(),
            });
        }
        design.responses()?;
        Ok(Self {
            input_model,
            design,
            solver,
            config,
            fingerprint: design.fingerprint(),
        })
    }

    pub fn dim(&self) -> usize {
        self.input_model.dim()
    }

    pub fn n(&self) -> usize {
        self.design.len()
    }

    /// Runs the solver on `set`. Solver failures yield `Err`.
    pub fn fit(&self, set: &MultiIndexSet, scheme: SchemeId) -> Result<SparseSurrogate> {
        let basis = PolyBasis::new(set.clone(), self.input_model.families())?;
        let psi = basis.matrix(&self.design.standardized)?;
        let y = self.design.responses()?;
        let sol = solve(self.solver, &psi, y, &self.config.solver)?;
        SparseSurrogate::from_solution(self.input_model, set, &sol, scheme, &self.fingerprint)
    }
}

/// Fits a sparse PCE with the given scheme.
pub fn fit_adaptive(
    scheme: SchemeId,
    solver: SolverId,
    input_model: &InputModel,
    design: &Design,
    config: &AdaptivityConfig,
) -> Result<AdaptiveFit> {
    let ctx = FitContext::new(input_model, design, solver, config)?;
    match scheme {
        SchemeId::Static => static_adaptive(&ctx),
        SchemeId::Pq => pq_adaptive(&ctx),
        SchemeId::Fn => forward_neighbor_adaptive(&ctx),
        SchemeId::Ad => anisotropic_adaptive(&ctx),
    }
}

fn static_adaptive(ctx: &FitContext<'_>) -> Result<AdaptiveFit> {
    let d = ctx.dim();
    let q = ctx.config.static_q.unwrap_or_else(|| static_q(d));
    let p = match ctx.config.static_p {
        Some(p) => p,
        None => static_rule::static_degree(d, ctx.n(), q, ctx.config.max_basis_size),
    };
    let set = hyperbolic_set_capped(d, p, q, ctx.config.max_basis_size).ok_or_else(|| {
        PceError::InvalidArgument(format!(
            "static basis p={p}, q={q} exceeds the maximum basis size {}",
            ctx.config.max_basis_size
        ))
    })?;
    let surrogate = ctx.fit(&set, SchemeId::Static)?;
    let mut trace = AdaptivityTrace::default();
    let e = trace.push_fit(
        "static".into(),
        format!("p={p},q={q}"),
        set.len(),
        surrogate.criterion(),
    );
    trace.select(e);
    Ok(AdaptiveFit { surrogate, trace })
}

/// Index of the best candidate: smallest criterion, then smallest basis,
/// then earliest. Degenerate candidates only win if nothing else exists.
fn argmin_candidate(cands: &[(SparseSurrogate, usize)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (s, _)) in cands.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let (bs, _) = &cands[b];
                let (c, bc) = (s.criterion().value, bs.criterion().value);
                c < bc || (c == bc && s.candidate_size() < bs.candidate_size())
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}
