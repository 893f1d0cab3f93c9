use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// A vanishing (or nearly vanishing) Sylvester denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    /// Energy difference ε_b − ε_a (or D_bb − D_aa) of the offending entry.
    pub gap: f64,
    /// The shift jω the gap collided with.
    pub shift: f64,
    /// Order in the drive strength, when known.
    pub order: Option<u32>,
    /// Harmonic index j, when known.
    pub harmonic: Option<i32>,
    /// Power of the hopping amplitude for hopping-series solves.
    pub hopping_order: Option<usize>,
    pub what: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input outside the admissible domain (bad counts, sector mismatch, ...).
    Domain(String),
    Resonance(Resonance),
    /// A documented precondition on an input was violated.
    Contract(String),
    /// The requested operation does not exist for this class of model.
    Unsupported(String),
    /// A numerical routine failed to deliver the promised accuracy.
    Numeric(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Resonance(_) => "resonance",
            Error::Contract(_) => "contract",
            Error::Unsupported(_) => "unsupported-model",
            Error::Numeric(_) => "numeric",
        }
    }

    pub(crate) fn resonance(gap: f64, shift: f64, what: &str) -> Self {
        Error::Resonance(Resonance {
            gap,
            shift,
            order: None,
            harmonic: None,
            hopping_order: None,
            what: what.into(),
        })
    }

    /// Attach (order, harmonic) context to a resonance error; other kinds pass through.
    pub fn at(self, order: u32, harmonic: i32) -> Self {
        match self {
            Error::Resonance(mut r) => {
                r.order = Some(order);
                r.harmonic = Some(harmonic);
                Error::Resonance(r)
            }
            e => e,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Resonance(r) => {
                write!(f, "resonance ({}): gap {} against shift {}", r.what, r.gap, r.shift)?;
                if let (Some(n), Some(j)) = (r.order, r.harmonic) {
                    write!(f, " at order {n}, harmonic {j}")?;
                }
                if let Some(k) = r.hopping_order {
                    write!(f, ", hopping order {k}")?;
                }
                Ok(())
            }
            Error::Contract(m) => write!(f, "contract violated: {m}"),
            Error::Unsupported(m) => write!(f, "unsupported model: {m}"),
            Error::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl core::error::Error for Error {}
