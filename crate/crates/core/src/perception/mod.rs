//! Scan filtering, occupancy mapping and costmap inflation.

pub mod costmap;
pub mod grid;
pub mod gridfile;
pub mod scan_filter;

pub use costmap::{inflate, inflate_with, Costmap, InflationParams, LETHAL, MAX_COST};
pub use grid::{LogOddsParams, MapError, OccupancyGrid, ScanUpdate};
pub use gridfile::{load_grid, parse_grid, to_char_text, to_probability_text};
pub use scan_filter::{filter_scan, ScanFilterConfig};
