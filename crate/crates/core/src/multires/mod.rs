//! Multiresolution estimators: the p-Averaging and Energy functions, under
//! the disjoint-block definition and the overlapping (circular) definition,
//! plus autocorrelation and the autocorrelation route to the Averaging
//! function.
//!
//! Every profile stores one value per dyadic block size `2^b`, `b = 0..m`.
//! The scale label attached to position `b` depends on the definition:
//! disjoint blocks are labelled `b + 1` (`j = 1..=m`), overlapping blocks `b`
//! (`j = 0..m`).

mod autocorr;
mod dyadic;
mod overlap;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use autocorr::{autocorrelation, averaging_via_autocorr, circular_autocovariance, AutocorrSeries};
pub use dyadic::{averaging_def1, energy_def1};
pub use overlap::{averaging_def2, energy_def2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definition {
    /// Disjoint dyadic blocks anchored at the first sample.
    Def1,
    /// Overlapping blocks over every circular origin.
    Def2,
}

impl Definition {
    /// Scale label of the first profile entry.
    pub fn first_index(self) -> u32 {
        match self {
            Definition::Def1 => 1,
            Definition::Def2 => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    Averaging,
    Energy,
}

/// Per-scale values of an Averaging or Energy function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiresProfile {
    pub kind: ProfileKind,
    pub definition: Definition,
    /// Exponent of the Averaging function; 2 for Energy.
    pub p: f64,
    pub m: u32,
    /// `values[b]` belongs to block size `2^b`.
    pub values: Vec<f64>,
}

impl MultiresProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scale label of position `pos`.
    pub fn scale_label(&self, pos: usize) -> u32 {
        self.definition.first_index() + pos as u32
    }

    /// Position of scale label `j`, if inside the profile.
    pub fn position_of(&self, j: u32) -> Option<usize> {
        let first = self.definition.first_index();
        (j >= first && ((j - first) as usize) < self.values.len()).then(|| (j - first) as usize)
    }

    /// Binary logarithms, with `None` wherever the value is zero.
    pub fn log2_values(&self) -> Vec<Option<f64>> {
        self.values
            .iter()
            .map(|&v| (v > 0.0 && v.is_finite()).then(|| v.log2()))
            .collect()
    }

    /// Log profile shifted so that the first present entry is 0.
    pub fn anchored_log2(&self) -> Vec<Option<f64>> {
        let logs = self.log2_values();
        let anchor = logs.iter().flatten().next().copied().unwrap_or(0.0);
        logs.into_iter().map(|v| v.map(|x| x - anchor)).collect()
    }

    /// CSV with header `j,value,log2_value`; missing logarithms are empty.
    pub fn write_csv<W: Write>(&self, mut w: W, anchored: bool) -> Result<()> {
        let logs = if anchored {
            self.anchored_log2()
        } else {
            self.log2_values()
        };
        writeln!(w, "j,value,log2_value")?;
        for (pos, (v, l)) in self.values.iter().zip(logs).enumerate() {
            match l {
                Some(l) => writeln!(w, "{},{v},{l}", self.scale_label(pos))?,
                None => writeln!(w, "{},{v},", self.scale_label(pos))?,
            }
        }
        Ok(())
    }
}

/// Residuals `log2 E_J - (J - 2 + 2·log2 A_J)` of the elementary identity
/// between the Energy and the 2-Averaging function. `J` is the
/// disjoint-block label (block size `2^(J-1)`), so the identity is checked
/// at matching block sizes under either definition. Scales where either
/// value is zero give `None`.
pub fn energy_averaging_residuals(
    energy: &MultiresProfile,
    averaging: &MultiresProfile,
) -> Result<Vec<Option<f64>>> {
    if energy.kind != ProfileKind::Energy || averaging.kind != ProfileKind::Averaging {
        return Err(Error::invalid("expected an Energy and an Averaging profile"));
    }
    if averaging.p != 2.0 {
        return Err(Error::invalid("the identity holds for p = 2 only"));
    }
    if energy.definition != averaging.definition || energy.len() != averaging.len() {
        return Err(Error::invalid("profiles must share definition and length"));
    }
    let le = energy.log2_values();
    let la = averaging.log2_values();
    Ok(le
        .iter()
        .zip(&la)
        .enumerate()
        .map(|(b, (e, a))| match (e, a) {
            (Some(e), Some(a)) => {
                let j = (b + 1) as f64;
                Some(e - (j - 2.0 + 2.0 * a))
            }
            _ => None,
        })
        .collect())
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("exponent p must be positive, got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::DyadicView;

    #[test]
    fn csv_layout() {
        let x = DyadicView::new(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let prof = averaging_def1(&x, 2.0).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "j,value,log2_value\n1,1,0\n2,0,\n");
    }

    #[test]
    fn labels() {
        let x = DyadicView::new(vec![1.0; 8]).unwrap();
        let d2 = averaging_def2(&x, 2.0).unwrap();
        assert_eq!(d2.scale_label(0), 0);
        assert_eq!(d2.position_of(2), Some(2));
        let d1 = averaging_def1(&x, 2.0).unwrap();
        assert_eq!(d1.scale_label(0), 1);
        assert_eq!(d1.position_of(0), None);
        assert_eq!(d1.position_of(3), Some(2));
        assert_eq!(d1.position_of(4), None);
    }
}
