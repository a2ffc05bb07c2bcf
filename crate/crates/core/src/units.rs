//! Field-unit conversion constants (ft, mD, psi, cp, day, lb-mol).

/// Darcy flux constant: ft³/day per (mD · ft · psi / cp).
pub const DARCY: f64 = 0.006_328_3;

/// Hydrostatic gradient per unit mass density: psi/ft per lb/ft³.
pub const GRAVITY: f64 = 1.0 / 144.0;

/// Standard cubic feet of ideal gas per lb-mol at 60 °F and 14.7 psia.
pub const SCF_PER_LBMOL: f64 = 379.5;

/// Cubic feet per stock-tank barrel.
pub const FT3_PER_BBL: f64 = 5.614_583;
