pub mod complex;
pub mod expr;
pub mod flow;
pub mod geometry;
pub mod groupoid;
pub mod linalg;
pub mod morse;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod symmetry;
