//! Closed-form second-order structure of `E_v(·)` and its finite-dimensional
//! transforms.

mod lst;
pub mod quadrature;
mod second_order;

pub use lst::{finite_dim_lst, lst_cross_moments, lst_mean, lst_means, LstValue};
pub use second_order::{
    autocorrelation, autocovariance, fixed_v_autocorrelation, mean_externality,
    stationary_mean_closed_form, variance_externality, MomentReport, SecondOrderModel,
};
