//! Generating series, the offspring law, criticality and limit parameters.

mod brownian;
mod limits;
mod offspring;
mod series;

pub use brownian::{brownian_marginal, MAX_MARGINAL_SIZE};
pub use limits::{
    criticality_classify, gadget_probability_size_biased, limit_parameter_p, p_at, same_part_probability,
    same_part_probability_enumerated, sigma2_at, solve_kappa, Criticality, KappaSolution, KeyTerms, LimitParameters,
};
pub use offspring::{OffspringModel, TAIL_TOLERANCE};
pub use series::{
    binomial, binomial_f64, estimate_radius, gadget_count, gadget_count_f64, RadiusEstimate, SeriesTable,
    MAX_EXACT_ORDER,
};
