//! Sparse and dense linear-algebra kernels.

pub mod dense;
pub mod ilu;
pub mod krylov;
pub mod lu;
pub mod ordering;
pub mod sparse;

pub use ilu::{FactorKind, Ic0, Ilu0};
pub use krylov::{bicgstab, cg, gmres, IdentityPreconditioner, KrylovOptions, KrylovSolution, LinearOperator, Preconditioner};
pub use lu::SparseLu;
pub use ordering::{nested_dissection, Bisection, Ordering, OrderingMethod, Partitioner};
pub use sparse::CsrMatrix;

/// Any of the sparse factorizations, behind one solve interface.
#[derive(Clone, Debug)]
pub enum SparseFactorization {
    Lu(SparseLu),
    Ilu0(Ilu0),
    Ic0(Ic0),
}

impl SparseFactorization {
    pub fn kind(&self) -> FactorKind {
        match self {
            Self::Lu(_) => FactorKind::Lu,
            Self::Ilu0(_) => FactorKind::Ilu0,
            Self::Ic0(_) => FactorKind::Ic0,
        }
    }
}

impl Preconditioner for SparseFactorization {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Self::Lu(lu) => z.copy_from_slice(&lu.solve(r)),
            Self::Ilu0(f) => f.apply(r, z),
            Self::Ic0(f) => f.apply(r, z),
        }
    }
}

/// Column order for a sparse LU: nested dissection on larger patterns,
/// natural order otherwise.
pub fn fill_reducing_order(a: &CsrMatrix) -> Vec<usize> {
    if a.nrows() > 256 {
        nested_dissection(a).perm
    } else {
        (0..a.nrows()).collect()
    }
}
