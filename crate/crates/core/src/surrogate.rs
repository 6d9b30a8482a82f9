//! Fitted sparse PCE: the active multi-indices, their coefficients and the
//! input model needed to evaluate it on physical inputs.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::adaptivity::SchemeId;
use crate::cv_error::{hybrid_estimate_matrix, ErrorEstimate, EstimateKind};
use crate::error::{PceError, Result};
use crate::input_model::InputModel;
use crate::multi_index::{MultiIndex, MultiIndexSet};
use crate::poly_basis::PolyBasis;
use crate::sampling::Design;
use crate::solvers::{SolverId, SparseSolution};

const FORMAT: &str = "sparse-pce-surrogate";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub solver: SolverId,
    pub scheme: SchemeId,
    pub criterion: ErrorEstimate,
    /// SHA-256 of the experimental design the surrogate was fitted on.
    pub design_fingerprint: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSurrogate {
    input_model: InputModel,
    active: MultiIndexSet,
    coefficients: Vec<f64>,
    candidate_size: usize,
    provenance: Provenance,
}

impl SparseSurrogate {
    pub fn new(
        input_model: InputModel,
        active: MultiIndexSet,
        coefficients: Vec<f64>,
        candidate_size: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if active.len() != coefficients.len() {
            return Err(PceError::DimensionMismatch {
                expected: active.len(),
                got: coefficients.len(),
            });
        }
        if !active.is_empty() && active.dim() != input_model.dim() {
            return Err(PceError::DimensionMismatch {
                expected: input_model.dim(),
                got: active.dim(),
            });
        }
        Ok(Self {
            input_model,
            active,
            coefficients,
            candidate_size,
            provenance,
        })
    }

    /// Restricts a solver output on `candidate` to its active terms.
    pub fn from_solution(
        input_model: &InputModel,
        candidate: &MultiIndexSet,
        solution: &SparseSolution,
        scheme: SchemeId,
        design_fingerprint: &str,
    ) -> Result<Self> {
        let active = candidate.subset(&solution.active);
        Self::new(
            input_model.clone(),
            active,
            solution.active_coefficients(),
            candidate.len(),
            Provenance {
                solver: solution.solver,
                scheme,
                criterion: solution.criterion,
                design_fingerprint: design_fingerprint.to_string(),
                config_hash: String::new(),
            },
        )
    }

    pub fn input_model(&self) -> &InputModel {
        &self.input_model
    }

    pub fn dim(&self) -> usize {
        self.input_model.dim()
    }

    pub fn active(&self) -> &MultiIndexSet {
        &self.active
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn candidate_size(&self) -> usize {
        self.candidate_size
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn criterion(&self) -> ErrorEstimate {
        self.provenance.criterion
    }

    pub fn set_config_hash(&mut self, hash: impl Into<String>) {
        self.provenance.config_hash = hash.into();
    }

    pub fn set_scheme(&mut self, scheme: SchemeId) {
        self.provenance.scheme = scheme;
    }

    /// Coefficient of `alpha`, zero if inactive.
    pub fn coefficient_of(&self, alpha: &MultiIndex) -> f64 {
        self.active
            .position(alpha)
            .map_or(0.0, |i| self.coefficients[i])
    }

    /// Mean of the expansion (coefficient of the constant term).
    pub fn mean(&self) -> f64 {
        self.coefficient_of(&MultiIndex::zero(self.dim()))
    }

    /// Variance of the expansion (sum of squared non-constant coefficients).
    pub fn variance(&self) -> f64 {
        self.active
            .iter()
            .zip(&self.coefficients)
            .filter(|(a, _)| !a.is_zero())
            .map(|(_, c)| c * c)
            .sum()
    }

    /// Evaluates at standardized points (rows of `u`).
    pub fn predict_standardized(&self, u: &DMatrix<f64>) -> Result<Vec<f64>> {
        if u.ncols() != self.dim() {
            return Err(PceError::DimensionMismatch {
                expected: self.dim(),
                got: u.ncols(),
            });
        }
        if self.active.is_empty() {
            return Ok(vec![0.0; u.nrows()]);
        }
        let basis = PolyBasis::new(self.active.clone(), self.input_model.families())?;
        let terms: Vec<usize> = (0..self.active.len()).collect();
        basis.evaluate_terms(u, &terms, &self.coefficients)
    }

    /// Evaluates at physical points (rows of `x`).
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.dim() {
            return Err(PceError::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        let mut u = DMatrix::zeros(x.nrows(), x.ncols());
        for i in 0..x.nrows() {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let s = self.input_model.to_standard(&row)?;
            for (j, v) in s.into_iter().enumerate() {
                u[(i, j)] = v;
            }
        }
        self.predict_standardized(&u)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SurrogateFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<SurrogateFile>(s)?.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Hybrid error estimate of a surrogate on the design it was fitted on.
pub fn hybrid_estimate(kind: EstimateKind, surrogate: &SparseSurrogate, design: &Design) -> Result<ErrorEstimate> {
    if surrogate.active().is_empty() {
        return Ok(ErrorEstimate::degenerate(kind));
    }
    let y = design.responses()?;
    let basis = PolyBasis::new(surrogate.active().clone(), surrogate.input_model().families())?;
    let psi = basis.matrix(&design.standardized)?;
    if matches!(kind, EstimateKind::HybridLoo | EstimateKind::HybridModifiedLoo) && psi.ncols() >= psi.nrows() {
        return Ok(ErrorEstimate::degenerate(kind));
    }
    hybrid_estimate_matrix(kind, &psi, y)
}

/// Decimal encoding with 17 significant digits, exact on round trip.
pub fn encode_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn decode_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| PceError::Schema(format!("not a number: '{s}'")))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurrogateFile {
    format: String,
    version: u32,
    input_model: InputModel,
    multi_indices: Vec<Vec<u32>>,
    coefficients: Vec<String>,
    candidate_size: usize,
    provenance: ProvenanceFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProvenanceFile {
    solver: SolverId,
    scheme: SchemeId,
    criterion_kind: EstimateKind,
    criterion_value: String,
    design_fingerprint: String,
    config_hash: String,
}

impl From<&SparseSurrogate> for SurrogateFile {
    fn from(s: &SparseSurrogate) -> Self {
        let p = &s.provenance;
        Self {
            format: FORMAT.into(),
            version: VERSION,
            input_model: s.input_model.clone(),
            multi_indices: s.active.to_vecs(),
            coefficients: s.coefficients.iter().map(|&c| encode_f64(c)).collect(),
            candidate_size: s.candidate_size,
            provenance: ProvenanceFile {
                solver: p.solver,
                scheme: p.scheme,
                criterion_kind: p.criterion.kind,
                criterion_value: encode_f64(p.criterion.value),
                design_fingerprint: p.design_fingerprint.clone(),
                config_hash: p.config_hash.clone(),
            },
        }
    }
}

impl TryFrom<SurrogateFile> for SparseSurrogate {
    type Error = PceError;

    fn try_from(f: SurrogateFile) -> Result<Self> {
        if f.format != FORMAT {
            return Err(PceError::Schema(format!("unexpected format '{}'", f.format)));
        }
        if f.version != VERSION {
            return Err(PceError::Schema(format!("unsupported version {}", f.version)));
        }
        let d = f.input_model.dim();
        let n = f.multi_indices.len();
        let indices: Vec<MultiIndex> = f.multi_indices.into_iter().map(MultiIndex::new).collect();
        // keep file order: coefficients are aligned with it
        let set = MultiIndexSet::from_indices(d, indices.clone())?;
        if set.len() != n {
            return Err(PceError::Schema("duplicate multi-indices".into()));
        }
        if f.coefficients.len() != n {
            return Err(PceError::Schema(format!(
                "{} coefficients for {n} multi-indices",
                f.coefficients.len()
            )));
        }
        let mut coefficients = vec![0.0; n];
        for (alpha, c) in indices.iter().zip(&f.coefficients) {
            let pos = set.position(alpha).expect("index from the same list");
            coefficients[pos] = decode_f64(c)?;
        }
        let criterion = ErrorEstimate::new(decode_f64(&f.provenance.criterion_value)?, f.provenance.criterion_kind);
        SparseSurrogate::new(
            f.input_model,
            set,
            coefficients,
            f.candidate_size,
            Provenance {
                solver: f.provenance.solver,
                scheme: f.provenance.scheme,
                criterion,
                design_fingerprint: f.provenance.design_fingerprint,
                config_hash: f.provenance.config_hash,
            },
        )
    }
}
