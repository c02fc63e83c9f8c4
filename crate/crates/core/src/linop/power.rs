use super::{LinearOperator, PsdClaim};
use crate::error::{Error, Result};

/// `A^p` applied as `p` successive products with the base operator.
#[derive(Debug, Clone)]
pub struct PowerOperator<O> {
    base: O,
    power: u32,
}

pub fn power_operator<O: LinearOperator>(base: O, power: u32) -> Result<PowerOperator<O>> {
    if power == 0 {
        return Err(Error::param(
            "power must be at least 1; use ScaledIdentity for A^0",
        ));
    }
    Ok(PowerOperator { base, power })
}

impl<O> PowerOperator<O> {
    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn power(&self) -> u32 {
        self.power
    }
}

impl<O: LinearOperator> LinearOperator for PowerOperator<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.base.apply_column(x, y)?;
        let mut scratch = vec![0.0; x.len()];
        for _ in 1..self.power {
            scratch.copy_from_slice(y);
            self.base.apply_column(&scratch, y)?;
        }
        Ok(())
    }

    fn is_symmetric(&self) -> bool {
        self.base.is_symmetric()
    }

    fn psd_claim(&self) -> PsdClaim {
        match self.base.psd_claim() {
            PsdClaim::Psd => PsdClaim::Psd,
            // even powers of a symmetric matrix are PSD
            _ if self.power.is_multiple_of(2) && self.base.is_symmetric() => PsdClaim::Psd,
            _ => PsdClaim::Unknown,
        }
    }
}
