//! The JSON document written by `fit` and read by `plot`.

use std::f64::consts::LN_2;

use hypersmml_core::{
    adjacent_cells, affine_to_hyperbolic_plane, cell_polytope, AffineFunctional, FitReport,
    HyperbolicPlane, NaturalParam, SmmlCode, TruncatedDomain,
};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRecord {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRecord {
    /// `"sphere"` or `"vertical"`.
    pub variant: String,
    /// Sphere centre or vertical-plane normal.
    pub c: Vec<f64>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

impl PlaneRecord {
    pub fn from_plane(plane: &HyperbolicPlane) -> Self {
        match plane {
            HyperbolicPlane::Sphere { center, radius } => PlaneRecord {
                variant: plane.variant_name().into(),
                c: center.iter().copied().collect(),
                radius: Some(*radius),
                d: None,
            },
            HyperbolicPlane::Vertical { normal, offset } => PlaneRecord {
                variant: plane.variant_name().into(),
                c: normal.iter().copied().collect(),
                radius: None,
                d: Some(*offset),
            },
        }
    }

    pub fn to_plane(&self) -> CliResult<HyperbolicPlane> {
        let c = DVector::from_vec(self.c.clone());
        match (self.variant.as_str(), self.radius, self.d) {
            ("sphere", Some(radius), _) => Ok(HyperbolicPlane::Sphere { center: c, radius }),
            ("vertical", _, Some(offset)) => Ok(HyperbolicPlane::Vertical { normal: c, offset }),
            _ => Err(CliError::Input(format!(
                "malformed hyperbolic plane record ({})",
                self.variant
            ))),
        }
    }
}

/// Boundary between cells `i < j`: `a·x + b ≤ 0` on the side of cell `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetRecord {
    pub cells: [usize; 2],
    pub a: Vec<f64>,
    pub b: f64,
    pub hyperbolic: Option<PlaneRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeFile {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub domain: DomainRecord,
    pub assertions: Vec<Vec<f64>>,
    pub coding_probs: Vec<f64>,
    #[serde(rename = "I1_nats")]
    pub i1_nats: f64,
    #[serde(rename = "I1_bits")]
    pub i1_bits: f64,
    pub iterations: usize,
    pub seed: u64,
    pub facets: Vec<FacetRecord>,
}

impl CodeFile {
    /// Facets are listed for the cell pairs that share a boundary on the
    /// fitting grid.
    pub fn from_report(report: &FitReport, n: usize, seed: u64) -> CliResult<Self> {
        let code = &report.code;
        let i1 = code.message_length().expect("fitted codes carry I₁");
        let mut facets = Vec::new();
        for (i, j) in adjacent_cells(code, n)? {
            let facet = cell_polytope(code, i, n)
                .facets
                .into_iter()
                .find(|f| f.neighbor == j)
                .expect("every pair has a facet");
            let hyperbolic = AffineFunctional::new(facet.a.clone(), facet.b)
                .and_then(|l| affine_to_hyperbolic_plane(&l))
                .ok()
                .map(|plane| PlaneRecord::from_plane(&plane));
            facets.push(FacetRecord {
                cells: [i, j],
                a: facet.a.iter().copied().collect(),
                b: facet.b,
                hyperbolic,
            });
        }
        let domain = code.domain();
        Ok(CodeFile {
            m: code.m(),
            n,
            p: code.p(),
            domain: DomainRecord {
                lower: domain.lower().iter().copied().collect(),
                upper: domain.upper().iter().copied().collect(),
                resolution: domain.resolution(),
            },
            assertions: code
                .assertions()
                .iter()
                .map(|t| t.as_vector().iter().copied().collect())
                .collect(),
            coding_probs: code.coding_probs().to_vec(),
            i1_nats: i1,
            i1_bits: i1 / LN_2,
            iterations: report.iterations,
            seed,
            facets,
        })
    }

    pub fn to_json(&self) -> String {
        crate::jsonfmt::to_string(self)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let file: CodeFile = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("not a code file: {e}")))?;
        if file.assertions.len() != file.m || file.coding_probs.len() != file.m {
            return Err(CliError::Input(format!(
                "code file lists a different number of cells than m = {}",
                file.m
            )));
        }
        Ok(file)
    }

    /// Rebuilds the code; the stored `I₁` is attached as is.
    pub fn to_code(&self) -> CliResult<SmmlCode> {
        let domain = TruncatedDomain::from_slices(
            &self.domain.lower,
            &self.domain.upper,
            self.domain.resolution,
        )?;
        let assertions = self
            .assertions
            .iter()
            .map(|t| NaturalParam::from_slice(t))
            .collect::<Result<Vec<_>, _>>()?;
        if assertions.iter().any(|t| t.p() != self.p) {
            return Err(CliError::Input(format!(
                "assertions do not have p + 1 = {} entries",
                self.p + 1
            )));
        }
        Ok(
            SmmlCode::new(assertions, self.coding_probs.clone(), domain)?
                .with_message_length(self.i1_nats),
        )
    }
}
