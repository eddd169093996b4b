pub mod dh;
pub mod lie3;
pub mod pendulum;
pub mod spectra;
