/// Default refusal threshold for materialized vectors.
pub const DEFAULT_VECTOR_CAP: u64 = 100_000_000;
/// Default refusal threshold for estimated search operations (node visits
/// plus candidate scans) in the representation-number engine.
pub const DEFAULT_WORK_CAP: u64 = 200_000_000_000;

/// Resource limits shared by enumeration and theta computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub vector_cap: u64,
    pub work_cap: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            vector_cap: DEFAULT_VECTOR_CAP,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

impl Limits {
    pub fn with_vector_cap(mut self, cap: u64) -> Self {
        self.vector_cap = cap;
        self
    }

    pub fn with_work_cap(mut self, cap: u64) -> Self {
        self.work_cap = cap;
        self
    }
}
