//! Relative gaps of the two classes.

use crate::error::{Error, Result};

/// One (OD, interval) term of a class gap.
#[derive(Debug, Clone, Copy)]
pub struct GapTerm<'a> {
    /// Flow on each known path.
    pub flows: &'a [f64],
    /// Cost of each known path (travel or marginal time).
    pub costs: &'a [f64],
    /// Least cost over the candidate paths.
    pub min_cost: f64,
    /// Class demand.
    pub demand: f64,
}

/// `Σ f (c − c_min) / Σ q c_min`. Zero when the class has no demand.
pub fn relative_gap(terms: &[GapTerm<'_>]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut demand = 0.0;
    for t in terms {
        if t.flows.len() != t.costs.len() {
            return Err(Error::Structural(format!(
                "{} flows for {} path costs",
                t.flows.len(),
                t.costs.len()
            )));
        }
        for (&f, &c) in t.flows.iter().zip(t.costs) {
            num += f * (c - t.min_cost);
        }
        den += t.demand * t.min_cost;
        demand += t.demand;
    }
    if demand <= 0.0 {
        return Ok(0.0);
    }
    if den <= 0.0 {
        return Err(Error::UndefinedGap);
    }
    Ok(num / den)
}

/// UE gap: experienced (generalized) path times against the least time `π`.
pub fn relative_gap_ue(terms: &[GapTerm<'_>]) -> Result<f64> {
    relative_gap(terms)
}

/// SO gap: marginal path times against the least marginal time `δ`.
pub fn relative_gap_so(terms: &[GapTerm<'_>]) -> Result<f64> {
    relative_gap(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let ue = relative_gap_ue(&[GapTerm {
            flows: &[6.0, 4.0],
            costs: &[10.0, 12.0],
            min_cost: 10.0,
            demand: 10.0,
        }])
        .unwrap();
        assert!((ue - 0.08).abs() < 1e-12);
        let so = relative_gap_so(&[GapTerm {
            flows: &[5.0, 5.0],
            costs: &[20.0, 24.0],
            min_cost: 20.0,
            demand: 10.0,
        }])
        .unwrap();
        assert!((so - 0.10).abs() < 1e-12);
    }

    #[test]
    fn all_flow_on_minimal_paths_is_zero() {
        let g = relative_gap(&[GapTerm {
            flows: &[10.0, 0.0],
            costs: &[10.0, 12.0],
            min_cost: 10.0,
            demand: 10.0,
        }])
        .unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn scale_invariant() {
        let t = |k: f64| GapTerm {
            flows: &[6.0, 4.0],
            costs: if k == 1.0 { &[10.0, 12.0] } else { &[20.0, 24.0] },
            min_cost: 10.0 * k,
            demand: 10.0,
        };
        assert_eq!(relative_gap(&[t(1.0)]).unwrap(), relative_gap(&[t(2.0)]).unwrap());
    }

    #[test]
    fn empty_class_and_degenerate_denominator() {
        assert_eq!(relative_gap(&[]).unwrap(), 0.0);
        let zero = GapTerm {
            flows: &[0.0],
            costs: &[5.0],
            min_cost: 5.0,
            demand: 0.0,
        };
        assert_eq!(relative_gap(&[zero]).unwrap(), 0.0);
        let free = GapTerm {
            flows: &[3.0],
            costs: &[0.0],
            min_cost: 0.0,
            demand: 3.0,
        };
        assert!(matches!(relative_gap(&[free]), Err(Error::UndefinedGap)));
    }
}
