use serde::{Deserialize, Serialize};

/// Which algorithm produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    Eig,
    Dnc,
    Hutchpp,
    ClosedForm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Eig => "eig",
            Method::Dnc => "dnc",
            Method::Hutchpp => "hutchpp",
            Method::ClosedForm => "closed-form",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Solver diagnostics; fields a method does not produce stay empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub elapsed_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stationary_residual: Option<f64>,
    /// Largest relative residual among the linear solves that were checked.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub leaves: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub krylov_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub krylov_fallbacks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub probe_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub imaginary_residue: Option<f64>,
    /// Name of the closed-form identity used.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formula: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KemenyResult {
    pub kappa: f64,
    pub method: Method,
    pub n: usize,
    pub nnz: usize,
    pub diagnostics: Diagnostics,
}

impl KemenyResult {
    pub(crate) fn new(kappa: f64, method: Method, n: usize, nnz: usize) -> Self {
        Self { kappa, method, n, nnz, diagnostics: Diagnostics::default() }
    }

    /// Every irreducible n-state chain has κ ≥ (n − 1)/2.
    pub fn satisfies_lower_bound(&self, tol: f64) -> bool {
        self.kappa >= (self.n as f64 - 1.0) / 2.0 - tol
    }
}
