#[path = "../tests/common/dense.rs"]
pub mod dense;
