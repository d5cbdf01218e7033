pub mod bilinear;
pub mod cli;
pub mod evolve;
pub mod exact;
pub mod grid;
pub mod io;
pub mod model;
pub mod residual;
pub mod stencil;
