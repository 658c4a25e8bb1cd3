use crate::error::{Error, Result};

/// Receive element selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApertureMask {
    active: Vec<bool>,
}

impl ApertureMask {
    pub fn new(active: Vec<bool>) -> Self {
        Self { active }
    }

    pub fn full(n: usize) -> Self {
        Self { active: vec![true; n] }
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    #[inline]
    pub fn is_active(&self, element: usize) -> bool {
        self.active[element]
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn active_elements(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.active
    }

    pub fn complement(&self) -> Self {
        Self { active: self.active.iter().map(|a| !a).collect() }
    }

    pub(crate) fn check(&self, num_elements: usize) -> Result<()> {
        if self.active.len() != num_elements {
            return Err(Error::shape(format!(
                "aperture mask has {} entries for {num_elements} elements",
                self.active.len()
            )));
        }
        if self.count() == 0 {
            return Err(Error::invalid("aperture mask selects no elements"));
        }
        Ok(())
    }
}
