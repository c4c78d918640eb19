pub mod expr;
pub mod series;

pub use expr::{admissible_connectivity, branch_points, expand_at_infinity, ConnectivityConstraint, ConnectivityMode, FunctionExpr};
pub use series::LaurentSeries;
