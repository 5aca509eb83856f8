//! JSON lattice description files.
//!
//! ```json
//! {
//!   "U": 2, "n": 1, "k": 2,
//!   "users": [
//!     { "N": 1, "basis": [ [[[0.5, -1.2], [0.3, 0.0]]], ... ] },
//!     ...
//!   ]
//! }
//! ```
//!
//! `basis` lists the `2kn` basis matrices of a user; each matrix is a list of
//! `n` rows, each row a list of `k` `[re, im]` pairs. Every field is checked
//! on load and errors name the offending path.

use serde::{Deserialize, Serialize};

use crate::cplx_linalg::ComplexMat;
use crate::error::{Error, Result};
use crate::lattice_codes::{CodeEnsemble, CodebookWindow, LatticeBasis};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(rename = "U")]
    pub users_count: usize,
    pub n: usize,
    pub k: usize,
    pub users: Vec<UserSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    #[serde(rename = "N")]
    pub bound: u64,
    pub basis: Vec<Vec<Vec<[f64; 2]>>>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { field: field.into(), message: message.into() }
}

impl LatticeSpec {
    pub fn from_ensemble(e: &CodeEnsemble) -> Self {
        Self {
            users_count: e.user_count(),
            n: e.n(),
            k: e.k(),
            users: e
                .users()
                .iter()
                .map(|w| UserSpec {
                    bound: w.bound(),
                    basis: w.basis().matrices().iter().map(ComplexMat::to_pairs).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| schema("<document>", e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Validates every field and builds the ensemble.
    pub fn to_ensemble(&self) -> Result<CodeEnsemble> {
        let (n, k) = (self.n, self.k);
        if self.users_count == 0 {
            return Err(schema("U", "must be at least 1"));
        }
        if n == 0 {
            return Err(schema("n", "must be at least 1"));
        }
        if k == 0 {
            return Err(schema("k", "must be at least 1"));
        }
        if k < self.users_count * n {
            return Err(schema("k", format!("k={k} is below U*n={}", self.users_count * n)));
        }
        if self.users.len() != self.users_count {
            return Err(schema("users", format!("{} entries but U={}", self.users.len(), self.users_count)));
        }
        let mut windows = Vec::with_capacity(self.users.len());
        for (j, user) in self.users.iter().enumerate() {
            if user.bound == 0 {
                return Err(schema(format!("users[{j}].N"), "must be at least 1"));
            }
            if user.basis.len() != 2 * n * k {
                return Err(schema(
                    format!("users[{j}].basis"),
                    format!("{} matrices, full rank needs 2kn = {}", user.basis.len(), 2 * n * k),
                ));
            }
            let mut mats = Vec::with_capacity(user.basis.len());
            for (i, m) in user.basis.iter().enumerate() {
                let field = format!("users[{j}].basis[{i}]");
                if m.len() != n {
                    return Err(schema(field, format!("{} rows, expected n={n}", m.len())));
                }
                if let Some(r) = m.iter().position(|row| row.len() != k) {
                    return Err(schema(format!("{field}[{r}]"), format!("{} entries, expected k={k}", m[r].len())));
                }
                if m.iter().flatten().flatten().any(|x| !x.is_finite()) {
                    return Err(schema(field, "non-finite entry"));
                }
                mats.push(ComplexMat::from_pairs(m).map_err(|e| schema(format!("users[{j}].basis[{i}]"), e.to_string()))?);
            }
            let basis = LatticeBasis::new(j, n, k, mats).map_err(|e| schema(format!("users[{j}].basis"), e.to_string()))?;
            windows.push(CodebookWindow::new(basis, user.bound).map_err(|e| schema(format!("users[{j}].N"), e.to_string()))?);
        }
        CodeEnsemble::new(windows).map_err(|e| schema("users", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_codes::random_ensemble;

    #[test]
    fn round_trip_is_fixed_point() {
        let e = random_ensemble(2, 1, 2, 1).unwrap();
        let text = LatticeSpec::from_ensemble(&e).to_json().unwrap();
        let back = LatticeSpec::from_json(&text).unwrap().to_ensemble().unwrap();
        assert_eq!(back, e);
        assert_eq!(LatticeSpec::from_ensemble(&back).to_json().unwrap(), text);
    }

    #[test]
    fn errors_name_the_field() {
        let e = random_ensemble(2, 1, 2, 1).unwrap();
        let mut spec = LatticeSpec::from_ensemble(&e);
        spec.users[1].basis.pop();
        match spec.to_ensemble() {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "users[1].basis"),
            other => panic!("{other:?}"),
        }

        let mut spec = LatticeSpec::from_ensemble(&e);
        spec.users[0].basis[2][0].pop();
        match spec.to_ensemble() {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "users[0].basis[2][0]"),
            other => panic!("{other:?}"),
        }

        let mut spec = LatticeSpec::from_ensemble(&e);
        spec.k = 1;
        assert!(matches!(spec.to_ensemble(), Err(Error::Schema { field, .. }) if field == "k"));

        let mut spec = LatticeSpec::from_ensemble(&e);
        spec.users[0].basis[1] = spec.users[0].basis[0].clone();
        assert!(matches!(spec.to_ensemble(), Err(Error::Schema { field, .. }) if field == "users[0].basis"));

        assert!(LatticeSpec::from_json("{\"U\": 1}").is_err());
    }
}
