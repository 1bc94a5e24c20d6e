//! Multistage stochastic clinical-trial planning models.

mod case;
mod lp;
mod model;

pub use case::{builtin_ids, CaseStudy, Drug};
pub use lp::{fmt_g6, write_lp, write_model, write_mps, EmitSummary, Format};
pub use model::{build_model, count_nacs, MsspModel, NacPair, Row, RowCounts, RowGroup, Sense, Var};
