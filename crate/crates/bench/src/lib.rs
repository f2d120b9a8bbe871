pub use freecorr;
