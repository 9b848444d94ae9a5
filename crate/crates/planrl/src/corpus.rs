//! Built-in benchmark maps. The same maps ship as text files under
//! `maps/` and can be regenerated anywhere with `corpus generate`.

use crate::mdp::{parse_grid_map, MapError, PlanningProblem};

pub const MAPS: [(&str, &str); 11] = [
    ("open_room", include_str!("../maps/open_room.map")),
    ("small_room", include_str!("../maps/small_room.map")),
    ("single_wall", include_str!("../maps/single_wall.map")),
    ("four_rooms", include_str!("../maps/four_rooms.map")),
    ("bottleneck", include_str!("../maps/bottleneck.map")),
    ("cross", include_str!("../maps/cross.map")),
    ("corridor", include_str!("../maps/corridor.map")),
    ("zigzag", include_str!("../maps/zigzag.map")),
    ("maze", include_str!("../maps/maze.map")),
    ("spiral", include_str!("../maps/spiral.map")),
    ("open_40", include_str!("../maps/open_40.map")),
];

pub fn map_text(name: &str) -> Option<&'static str> {
    MAPS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn problem(name: &str) -> Option<Result<PlanningProblem, MapError>> {
    map_text(name).map(parse_grid_map)
}

/// Every corpus problem, parsed. The corpus is curated to be valid, so
/// parsing cannot fail.
pub fn all_problems() -> Vec<(&'static str, PlanningProblem)> {
    MAPS.iter()
        .map(|(name, text)| (*name, parse_grid_map(text).expect("corpus maps are valid")))
        .collect()
}
