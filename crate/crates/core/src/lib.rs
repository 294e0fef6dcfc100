//! Numerical toolkit for eigenfunction delocalization on large regular graphs.

pub mod graph;
pub mod quadrature;
pub mod operators;
pub mod tree;
pub mod kernel;
pub mod deloc;
pub mod report;
