pub mod gap;
pub mod hydro;
pub mod interchange;
pub mod lln;
pub mod minimizer;
pub mod sample;
pub mod scaling;
pub mod selftest;
