//! Built-in example problems and the loader for user-supplied problem
//! files.
//!
//! A problem bundles a semispray, candidate objects (semi-basic 1-forms,
//! Lagrangians, 0-homogeneous functions), an optional map of expected
//! verdicts for regression testing, and the sampling region respecting
//! the chart (for example `x2 > 0` for the hyperbolic half-plane).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::calculus::FormField;
use crate::error::CatalogError;
use crate::expr::{parse_expr, CoordIndex, PhasePoint, ScalarField};
use crate::geom::Semispray;
use crate::sample::{SampleBox, DEFAULT_SEED};

/// What a candidate object is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    /// A semi-basic 1-form given by its `n` base components.
    OneForm,
    /// A Lagrangian function on `TM \ {0}`.
    Lagrangian,
    /// A 0-homogeneous function for the Hamel condition on flat sprays.
    ZeroHomogFunction,
}

impl CandidateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CandidateKind::OneForm => "one_form",
            CandidateKind::Lagrangian => "lagrangian",
            CandidateKind::ZeroHomogFunction => "zero_homog_function",
        }
    }
}

/// A candidate object with an optional expected-verdict map
/// (condition name or "verdict" -> expected pass).
#[derive(Debug, Clone)]
pub struct Candidate {
    pub name: String,
    pub kind: CandidateKind,
    /// `n` components for a one-form, a single entry otherwise.
    pub fields: Vec<ScalarField>,
    pub expected: Option<BTreeMap<String, bool>>,
}

impl Candidate {
    /// The candidate as a semi-basic 1-form (one-form candidates only).
    pub fn as_one_form(&self, n: usize) -> Option<FormField> {
        if self.kind == CandidateKind::OneForm {
            Some(FormField::semi_basic(n, &self.fields))
        } else {
            None
        }
    }

    /// The candidate as a scalar field (non-one-form candidates).
    pub fn as_scalar(&self) -> Option<&ScalarField> {
        if self.kind == CandidateKind::OneForm {
            None
        } else {
            Some(&self.fields[0])
        }
    }
}

/// A fully constructed example problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub n: usize,
    pub spray: Semispray,
    pub candidates: Vec<Candidate>,
    pub sampling: SampleBox,
    pub seed: u64,
    pub count: usize,
}

impl Problem {
    pub fn candidate(&self, name: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.name == name)
    }

    pub fn sample(&self) -> Vec<PhasePoint> {
        self.sampling.sample(self.seed, self.count)
    }
}

/// Names of the built-in problems.
pub const BUILTIN_NAMES: [&str; 3] = ["flat2d", "poincare-halfplane", "damped1d"];

fn cand(
    name: &str,
    kind: CandidateKind,
    n: usize,
    exprs: &[&str],
    expected: &[(&str, bool)],
) -> Candidate {
    Candidate {
        name: name.to_string(),
        kind,
        fields: exprs.iter().map(|e| parse_expr(e, n).unwrap()).collect(),
        expected: if expected.is_empty() {
            None
        } else {
            Some(
                expected
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect(),
            )
        },
    }
}

/// Constructs a built-in problem by name.
pub fn builtin(name: &str) -> Result<Problem, CatalogError> {
    match name {
        "flat2d" => Ok(Problem {
            name: "flat2d".to_string(),
            n: 2,
            spray: Semispray::flat(2),
            candidates: vec![
                cand(
                    "energy",
                    CandidateKind::Lagrangian,
                    2,
                    &["y1^2 + y2^2"],
                    &[("verdict", true)],
                ),
                cand(
                    "norm",
                    CandidateKind::OneForm,
                    2,
                    &["y1/sqrt(y1^2 + y2^2)", "y2/sqrt(y1^2 + y2^2)"],
                    &[("verdict", true)],
                ),
                cand(
                    "asym",
                    CandidateKind::OneForm,
                    2,
                    &["y2", "0"],
                    &[("verdict", false), ("d_J_theta", false)],
                ),
            ],
            sampling: SampleBox::default_for(2),
            seed: DEFAULT_SEED,
            count: 20,
        }),
        "poincare-halfplane" => Ok(Problem {
            name: "poincare-halfplane".to_string(),
            n: 2,
            spray: Semispray::new(
                2,
                vec![
                    parse_expr("-y1*y2/x2", 2).unwrap(),
                    parse_expr("(y1^2 - y2^2)/(2*x2)", 2).unwrap(),
                ],
            ),
            candidates: vec![
                cand(
                    "energy",
                    CandidateKind::Lagrangian,
                    2,
                    &["(y1^2 + y2^2)/x2^2"],
                    &[("verdict", true)],
                ),
                cand(
                    "norm",
                    CandidateKind::OneForm,
                    2,
                    &[
                        "y1/(x2*sqrt(y1^2 + y2^2))",
                        "y2/(x2*sqrt(y1^2 + y2^2))",
                    ],
                    &[("verdict", true)],
                ),
            ],
            sampling: SampleBox {
                box_x: vec![[-1.0, 1.0], [0.5, 2.0]],
                box_y: vec![[-1.0, 1.0], [-1.0, 1.0]],
                y_min: crate::expr::DEFAULT_Y_MIN,
            },
            seed: DEFAULT_SEED,
            count: 20,
        }),
        "damped1d" => Ok(Problem {
            name: "damped1d".to_string(),
            n: 1,
            spray: Semispray::new(1, vec![parse_expr("y1/2", 1).unwrap()]),
            candidates: vec![cand(
                "logform",
                CandidateKind::OneForm,
                1,
                &["2*log(y1)"],
                &[("verdict", true)],
            )],
            sampling: SampleBox {
                box_x: vec![[-1.0, 1.0]],
                box_y: vec![[0.5, 2.0]],
                y_min: crate::expr::DEFAULT_Y_MIN,
            },
            seed: DEFAULT_SEED,
            count: 20,
        }),
        other => Err(CatalogError::UnknownExample(other.to_string())),
    }
}

/// Symbolic inverse of a symmetric matrix of scalar fields via the
/// adjugate; supports `n <= 3`.
fn symbolic_inverse(g: &[Vec<ScalarField>], n: usize) -> (Vec<Vec<ScalarField>>, ScalarField) {
    let dim = g[0][0].dim();
    let det = match n {
        1 => g[0][0].clone(),
        2 => g[0][0].mul(&g[1][1]).sub(&g[0][1].mul(&g[1][0])),
        3 => {
            let m = |i: usize, j: usize| &g[i][j];
            let c0 = m(1, 1).mul(m(2, 2)).sub(&m(1, 2).mul(m(2, 1)));
            let c1 = m(1, 0).mul(m(2, 2)).sub(&m(1, 2).mul(m(2, 0)));
            let c2 = m(1, 0).mul(m(2, 1)).sub(&m(1, 1).mul(m(2, 0)));
            m(0, 0).mul(&c0).sub(&m(0, 1).mul(&c1)).add(&m(0, 2).mul(&c2))
        }
        _ => unreachable!(),
    };
    let adj = |i: usize, j: usize| -> ScalarField {
        // cofactor C_ji for the inverse (adjugate is the transposed
        // cofactor matrix)
        match n {
            1 => ScalarField::one(dim),
            2 => {
                let val = match (j, i) {
                    (0, 0) => g[1][1].clone(),
                    (0, 1) => g[1][0].neg(),
                    (1, 0) => g[0][1].neg(),
                    (1, 1) => g[0][0].clone(),
                    _ => unreachable!(),
                };
                val
            }
            3 => {
                let rows: Vec<usize> = (0..3).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..3).filter(|&c| c != i).collect();
                let minor = g[rows[0]][cols[0]]
                    .mul(&g[rows[1]][cols[1]])
                    .sub(&g[rows[0]][cols[1]].mul(&g[rows[1]][cols[0]]));
                if (i + j) % 2 == 0 {
                    minor
                } else {
                    minor.neg()
                }
            }
            _ => unreachable!(),
        }
    };
    let inv: Vec<Vec<ScalarField>> = (0..n)
        .map(|i| (0..n).map(|j| adj(i, j).div(&det)).collect())
        .collect();
    (inv, det)
}

/// Geodesic spray of a Riemannian metric `g_ij(x)`:
/// `G^i = (1/2) Γ^i_jk y^j y^k` with the Christoffel symbols of `g`.
///
/// The metric must depend on `x` only and be invertible at every sample
/// point; `n <= 3`.
pub fn riemannian_spray(
    metric: &[Vec<ScalarField>],
    points: &[PhasePoint],
) -> Result<Semispray, CatalogError> {
    let n = metric.len();
    assert!(n >= 1 && n <= 3, "riemannian_spray supports n <= 3");
    let dim = metric[0][0].dim();
    assert_eq!(dim, n);

    let (ginv, det) = symbolic_inverse(metric, n);
    for p in points {
        let d = det.eval(p)?;
        if d.abs() < 1e-12 {
            return Err(CatalogError::SingularMetric { point: format!("{p:?}") });
        }
    }

    // Christoffels: Gamma^i_jk = (1/2) g^il (d_k g_lj + d_j g_lk - d_l g_jk)
    let dx = |f: &ScalarField, a: usize| f.diff(CoordIndex::base(a + 1));
    let mut g_coeffs = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = ScalarField::zero(n);
        for j in 0..n {
            for k in 0..n {
                let mut gamma = ScalarField::zero(n);
                for l in 0..n {
                    let term = dx(&metric[l][j], k)
                        .add(&dx(&metric[l][k], j))
                        .sub(&dx(&metric[j][k], l));
                    gamma = gamma.add(&ginv[i][l].mul(&term));
                }
                let yj = ScalarField::var(n, CoordIndex::fiber(j + 1));
                let yk = ScalarField::var(n, CoordIndex::fiber(k + 1));
                acc = acc.add(&gamma.mul(&yj).mul(&yk));
            }
        }
        g_coeffs.push(acc.scale(0.25).simplify());
    }
    Ok(Semispray::new(n, g_coeffs))
}

// ---------------------------------------------------------------------------
// Problem-file loading
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileProblem {
    name: String,
    n: usize,
    spray: FileSpray,
    candidates: Vec<FileCandidate>,
    sampling: Option<FileSampling>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSpray {
    #[serde(rename = "G")]
    g: Option<Vec<String>>,
    metric: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCandidate {
    kind: String,
    name: Option<String>,
    expr: Option<String>,
    components: Option<Vec<String>>,
    expected: Option<BTreeMap<String, bool>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSampling {
    box_x: Vec<[f64; 2]>,
    box_y: Vec<[f64; 2]>,
    y_min: Option<f64>,
    seed: Option<u64>,
    count: Option<usize>,
}

fn schema_err(path: &str, message: impl Into<String>) -> CatalogError {
    CatalogError::SchemaError { path: path.to_string(), message: message.into() }
}

/// Loads a problem from a JSON file.
pub fn load_problem(path: &Path) -> Result<Problem, CatalogError> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}

/// Parses a problem from JSON text (see the file schema in the README).
pub fn parse_problem(text: &str) -> Result<Problem, CatalogError> {
    let fp: FileProblem = serde_json::from_str(text)
        .map_err(|e| schema_err("$", e.to_string()))?;
    let n = fp.n;
    if n == 0 || n > 3 {
        return Err(schema_err("n", format!("dimension {n} outside supported range 1..=3")));
    }

    let sampling = match &fp.sampling {
        Some(s) => {
            if s.box_x.len() != n {
                return Err(schema_err(
                    "sampling.box_x",
                    format!("expected {n} entries, got {}", s.box_x.len()),
                ));
            }
            if s.box_y.len() != n {
                return Err(schema_err(
                    "sampling.box_y",
                    format!("expected {n} entries, got {}", s.box_y.len()),
                ));
            }
            SampleBox {
                box_x: s.box_x.clone(),
                box_y: s.box_y.clone(),
                y_min: s.y_min.unwrap_or(crate::expr::DEFAULT_Y_MIN),
            }
        }
        None => SampleBox::default_for(n),
    };
    let seed = fp.sampling.as_ref().and_then(|s| s.seed).unwrap_or(DEFAULT_SEED);
    let count = fp.sampling.as_ref().and_then(|s| s.count).unwrap_or(20);

    let spray = match (&fp.spray.g, &fp.spray.metric) {
        (Some(_), Some(_)) => {
            return Err(schema_err("spray", "give either G or metric, not both"));
        }
        (None, None) => {
            return Err(schema_err("spray", "either G or metric is required"));
        }
        (Some(g), None) => {
            if g.len() != n {
                return Err(schema_err("G", format!("expected {n} entries, got {}", g.len())));
            }
            let coeffs = g
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    parse_expr(s, n).map_err(|e| schema_err(&format!("G[{i}]"), e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Semispray::new(n, coeffs)
        }
        (None, Some(m)) => {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(schema_err("metric", format!("expected an {n}x{n} matrix")));
            }
            let mut rows = Vec::with_capacity(n);
            for (i, row) in m.iter().enumerate() {
                let mut out = Vec::with_capacity(n);
                for (j, s) in row.iter().enumerate() {
                    let f = parse_expr(s, n)
                        .map_err(|e| schema_err(&format!("metric[{i}][{j}]"), e.to_string()))?;
                    out.push(f);
                }
                rows.push(out);
            }
            let points = sampling.sample(seed, count.max(8));
            riemannian_spray(&rows, &points)?
        }
    };

    let mut candidates = Vec::with_capacity(fp.candidates.len());
    for (idx, c) in fp.candidates.iter().enumerate() {
        let path = format!("candidates[{idx}]");
        let kind = match c.kind.as_str() {
            "one_form" => CandidateKind::OneForm,
            "lagrangian" => CandidateKind::Lagrangian,
            "zero_homog_function" => CandidateKind::ZeroHomogFunction,
            other => {
                return Err(schema_err(
                    &format!("{path}.kind"),
                    format!("unknown kind `{other}`"),
                ))
            }
        };
        let fields = match kind {
            CandidateKind::OneForm => {
                let comps = c.components.as_ref().ok_or_else(|| {
                    schema_err(&format!("{path}.components"), "required for one_form")
                })?;
                if comps.len() != n {
                    return Err(schema_err(
                        &format!("{path}.components"),
                        format!("expected {n} entries, got {}", comps.len()),
                    ));
                }
                comps
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        parse_expr(s, n).map_err(|e| {
                            schema_err(&format!("{path}.components[{i}]"), e.to_string())
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            _ => {
                let expr = c.expr.as_ref().ok_or_else(|| {
                    schema_err(&format!("{path}.expr"), "required for this kind")
                })?;
                vec![parse_expr(expr, n)
                    .map_err(|e| schema_err(&format!("{path}.expr"), e.to_string()))?]
            }
        };
        candidates.push(Candidate {
            name: c.name.clone().unwrap_or_else(|| format!("candidate{idx}")),
            kind,
            fields,
            expected: c.expected.clone(),
        });
    }

    Ok(Problem { name: fp.name, n, spray, candidates, sampling, seed, count })
}
