//! Two-variable p-adic L-functions for twisted triple products over real
//! quadratic fields.
//!
//! The library is organized bottom-up:
//!
//! - [`padic`]: capped-precision p-adic numbers over big integers, with the
//!   unramified quadratic extension, Teichmüller lifts, Iwasawa logarithm and
//!   exponential, and Hensel square roots.
//! - [`jet`]: truncated Taylor expansions ("jets") in the two weight
//!   directions, the common coefficient ring for all family computations.
//! - [`quadfield`]: real quadratic fields, narrow class groups via binary
//!   quadratic forms, totally odd characters, and trace slices of ideals.
//! - [`eisenstein`]: diagonal restrictions of Hilbert Eisenstein families as
//!   weight-jet q-expansions, with p-depletion.
//! - [`msym`]: classical Manin symbols, Hecke operators, and rational
//!   eigen-symbols for weight-2 forms.
//! - [`distmsym`]: modular symbols valued in p-adic moment distributions,
//!   ordinary lifting of classical symbols, and the attached measures.
//! - [`padicl`]: one-variable cyclotomic p-adic L-functions of elliptic
//!   curves from lifted symbols.
//! - [`ordinary`]: ordinary projection of q-expansions via a finite
//!   U_p matrix on an overconvergent basis.
//! - [`triple`]: the two-variable L-function, its square root, the
//!   Stark-Heegner logarithm, and the factorization verifier.

pub mod distmsym;
pub mod eisenstein;
pub mod jet;
pub mod linalg;
pub mod msym;
pub mod padic;
pub mod padicl;
pub mod quadfield;

pub use padic::{PadicError, PadicNum};
