//! Fixed basis conventions for the two-qubit and qubit-field spaces.
//!
//! Every matrix in this crate is written in the product basis
//! `{|ee⟩, |eg⟩, |ge⟩, |gg⟩}` with the excited state first in each qubit
//! factor, i.e. the single-qubit basis is `{|e⟩, |g⟩}`. The ordering is
//! immutable: index constants below are the only way entries are addressed,
//! and all matrix literals in tests follow it.
//!
//! Joint qubit-field spaces append the field mode as the last (fastest)
//! tensor factor: a basis state `|atoms, n⟩` sits at index
//! `atoms · (n_max + 1) + n`.

/// Single-qubit excited-state index.
pub const E: usize = 0;
/// Single-qubit ground-state index.
pub const G: usize = 1;

/// Two-qubit dimension.
pub const TWO_QUBIT_DIM: usize = 4;

/// `|ee⟩`
pub const EE: usize = 0;
/// `|eg⟩`
pub const EG: usize = 1;
/// `|ge⟩`
pub const GE: usize = 2;
/// `|gg⟩`
pub const GG: usize = 3;

/// Dimension of the joint two-qubit ⊗ field space with photon cutoff `n_max`.
pub const fn joint_dim(n_max: usize) -> usize {
    TWO_QUBIT_DIM * (n_max + 1)
}

/// Flattened index of `|atoms, n⟩` in the joint space.
pub const fn joint_index(atoms: usize, photons: usize, n_max: usize) -> usize {
    atoms * (n_max + 1) + photons
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_indexing_matches_tensor_layout() {
        assert_eq!(joint_dim(8), 36);
        assert_eq!(joint_index(EE, 0, 8), 0);
        assert_eq!(joint_index(EG, 3, 8), 12);
        assert_eq!(joint_index(GG, 8, 8), 35);
    }
}
