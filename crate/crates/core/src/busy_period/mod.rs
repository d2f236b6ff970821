//! Number of customers served during one busy period: fixed-point transform,
//! pmf recursion and moment recursion.

pub mod bell;
mod law;
mod moments;
mod transform;

pub use bell::{bell_incomplete, bell_table};
pub use law::{count_pmf, BusyPeriodLaw, PmfOptions};
pub use moments::{
    count_moment, count_moments, count_moments_closed_form, first_inconsistent_order,
};
pub use transform::{count_lst, pgf_fixed_point};

pub(crate) use transform::count_lst_unchecked;
