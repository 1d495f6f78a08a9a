use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, DenseOperator, PSD_FLOOR};

/// Completeness tolerance for `Σ E = support`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Final identification verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    /// The "don't know" outcome of unambiguous schemes.
    Inconclusive,
    /// The input is the first reference state.
    First,
    /// The input is the second reference state.
    Second,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Inconclusive => 0,
            Label::First => 1,
            Label::Second => 2,
        }
    }

    /// Exchanges `First` and `Second`.
    pub fn swapped(self) -> Self {
        match self {
            Label::First => Label::Second,
            Label::Second => Label::First,
            Label::Inconclusive => Label::Inconclusive,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Label::Inconclusive),
            "1" => Ok(Label::First),
            "2" => Ok(Label::Second),
            other => Err(Error::InvalidPovm(format!(
                "label {other:?} is not 0, 1 or 2"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PovmElement {
    pub label: String,
    pub operator: DenseOperator,
}

impl PovmElement {
    pub fn new(label: impl Into<String>, operator: DenseOperator) -> Self {
        Self {
            label: label.into(),
            operator,
        }
    }
}

/// A labeled set of PSD operators summing to a support projector.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<PovmElement>,
    support: DenseOperator,
}

impl Povm {
    /// Validated construction: every element PSD, `Σ E = support` entrywise.
    pub fn new(elements: Vec<PovmElement>, support: DenseOperator) -> Result<Self> {
        let povm = Self::new_unchecked(elements, support)?;
        povm.validate()?;
        Ok(povm)
    }

    /// POVM complete on the whole space.
    pub fn complete(elements: Vec<PovmElement>) -> Result<Self> {
        let n = elements
            .first()
            .map(|e| e.operator.dim())
            .ok_or_else(|| Error::InvalidPovm("no elements".into()))?;
        Self::new(elements, DenseOperator::identity(n))
    }

    /// Skips the PSD eigenvalue checks (used for elements built from
    /// orthogonal projectors); completeness and shapes are still checked.
    pub fn new_unchecked(elements: Vec<PovmElement>, support: DenseOperator) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        for e in &elements {
            if e.operator.dim() != support.dim() {
                return Err(Error::DimensionMismatch {
                    expected: support.dim(),
                    actual: e.operator.dim(),
                });
            }
        }
        let povm = Self { elements, support };
        let defect = povm.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to the support only within {defect:.3e}"
            )));
        }
        Ok(povm)
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.elements {
            if let Some(low) = min_eigenvalue(&e.operator)? {
                if low < -PSD_FLOOR {
                    return Err(Error::InvalidPovm(format!(
                        "element {} has eigenvalue {low:.3e}",
                        e.label
                    )));
                }
            }
        }
        let defect = self.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to the support only within {defect:.3e}"
            )));
        }
        Ok(())
    }

    pub fn completeness_defect(&self) -> f64 {
        let sum: DenseOperator = self.elements.iter().map(|e| e.operator.clone()).sum();
        sum.max_abs_diff(&self.support)
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn support(&self) -> &DenseOperator {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, label: &str) -> Option<&DenseOperator> {
        self.elements
            .iter()
            .find(|e| e.label == label)
            .map(|e| &e.operator)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|e| e.label.as_str())
    }
}
