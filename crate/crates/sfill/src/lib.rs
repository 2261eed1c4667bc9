//! Minimal symplectic fillings of small Seifert 3-manifolds
//! `Y(-b; (a1,b1), (a2,b2), (a3,b3))` with `b >= 4`, classified through
//! curve configurations in rational surfaces and related by rational
//! blowdowns.

pub mod blowdown;
pub mod catalog;
pub mod cfrac;
pub mod curveconfig;
pub mod enumerate;
pub mod homlattice;
pub mod plumbing;
