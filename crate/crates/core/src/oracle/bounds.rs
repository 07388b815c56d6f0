use crate::error::{Error, Result};

/// Shape factors of the deviation bounds for `S_{T,r}` with `N` particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryBounds {
    /// `Υ^N_{r,T} = √(r+1) (√(1+r) ∧ √(T−r+1) + √((1+r)(T−r+1)/N))`.
    pub upsilon: f64,
    /// `Θ_{r,T} = (1+r) ((1+r) ∧ (T−r+1))`.
    pub theta: f64,
}

pub fn theory_bounds(r: usize, horizon: usize, n_particles: usize) -> Result<TheoryBounds> {
    if r > horizon {
        return Err(Error::InvalidParameter(format!("lag r = {r} exceeds T = {horizon}")));
    }
    if n_particles == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let lag = (r + 1) as f64;
    let span = (horizon - r + 1) as f64;
    let n = n_particles as f64;
    let upsilon = lag.sqrt() * (lag.min(span).sqrt() + (lag * span / n).sqrt());
    let theta = lag * lag.min(span);
    Ok(TheoryBounds { upsilon, theta })
}
