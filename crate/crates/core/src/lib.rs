//! Dirac equation in external fields: symmetry algebras, separable and
//! noncommutative-integration bases, reduced ODE systems and their checks.

pub mod gamma;
pub mod jet;
pub mod lie;
pub mod operator;
pub mod report;
pub mod scenarios;
pub mod ode;
pub mod special;
