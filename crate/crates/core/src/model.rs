use crate::return_law::ReturnLaw;
use crate::sequence::{PeriodicSequence, XiMatrix};

/// A charge sequence together with its excursion-charge matrix and the
/// return law reduced mod `T_ω`. Every analytic quantity hangs off this.
#[derive(Debug, Clone)]
pub struct Copolymer {
    seq: PeriodicSequence,
    xi: XiMatrix,
    law: ReturnLaw,
}

impl Copolymer {
    pub fn new(seq: PeriodicSequence) -> Self {
        let law = ReturnLaw::new(seq.period());
        Self::with_law(seq, law)
    }

    /// Panics if the law's modulus differs from the sequence period.
    pub fn with_law(seq: PeriodicSequence, law: ReturnLaw) -> Self {
        assert_eq!(law.modulus(), seq.period(), "return law modulus must equal T_ω");
        let xi = seq.xi_matrix();
        Self { seq, xi, law }
    }

    pub fn sequence(&self) -> &PeriodicSequence {
        &self.seq
    }

    pub fn xi(&self) -> &XiMatrix {
        &self.xi
    }

    pub fn law(&self) -> &ReturnLaw {
        &self.law
    }

    pub fn period(&self) -> usize {
        self.seq.period()
    }

    /// Residue class `β − α mod T`.
    #[inline]
    pub fn class(&self, alpha: usize, beta: usize) -> usize {
        let t = self.period();
        (beta + t - alpha) % t
    }
}
