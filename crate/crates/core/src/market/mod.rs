//! Network-blind market stage producing the baseline operating points that
//! redispatch adjusts.

mod check;
mod dispatch;
mod schedule;

pub use check::{check_schedule, hp_buildings, import_schedule};
pub use dispatch::{clear_merit_order, merit_order_dispatch, Offer};
pub use schedule::{hp_key, Field, MarketSchedule, UnitSeries};
