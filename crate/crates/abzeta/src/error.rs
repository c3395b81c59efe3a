use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("cannot expand {factor} as a power series: zero constant term at this prime")]
    SeriesPole { factor: String },
    #[error("series coefficient {index} is not an integer: {value}")]
    NonIntegral { index: usize, value: String },
    #[error("bad factor: {0}")]
    BadFactor(String),
    #[error("cannot parse {0}")]
    Parse(String),
    #[error("mismatched structure constants k={0} and k={1}")]
    MismatchedK(String, String),
    #[error("unknown family {0}")]
    UnknownFamily(String),
    #[error("bad parameters for {family}: {reason}")]
    BadParams { family: String, reason: String },
    #[error("work limit {limit} exceeded at exponent {reached} (completed exponents 0..{reached})")]
    Budget { limit: u64, reached: usize },
    #[error("missing local data for prime {prime} at depth {depth}")]
    MissingPrime { prime: u64, depth: usize },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("holonomy of order {0} is not prime; pass the intermediate subgroups to catalog::full_zeta_with")]
    NonPrimeHolonomy(usize),
}
