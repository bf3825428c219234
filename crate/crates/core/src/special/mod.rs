//! Special functions used by the closed-form metrics.

mod gamma;
mod hyp2f1;

pub use gamma::{
    exp_integral_en, exp_integral_en_scaled, gamma, upper_incomplete_gamma,
    upper_incomplete_gamma_scaled,
};
pub use hyp2f1::{hyp2f1_one_b, hyp2f1_one_b_minus_one};
