//! Default synthetic building: 3 floors of 40 nodes each. Per floor, two
//! parallel corridors of 10 nodes (500 cm spacing) joined by cross rungs
//! every second position, 9 rooms off each corridor, and 2 stairwell nodes
//! at the corridor ends. Both exits sit at the east end of the first floor,
//! one per corridor.
//!
//! Node ids per floor (base = 40 * (floor - 1)):
//!   base+0..=9    south corridor C0..C9
//!   base+10..=19  north corridor D0..D9
//!   base+20..=28  rooms off the south corridor
//!   base+29..=37  rooms off the north corridor
//!   base+38, +39  stairwells at the west and east ends
//!
//! Room nodes hold one person, corridor and stairwell nodes hold three.

use crate::building::{parse, BuildingGraph};

const FLOORS: u32 = 3;
const PER_FLOOR: u32 = 40;
const FLOOR_HEIGHT_CM: f64 = 400.0;

/// The shipped copy of the generated layout.
pub const DEFAULT_BUILDING_TEXT: &str = include_str!("../fixtures/default_building.txt");

/// Parse the shipped default layout.
pub fn default_building() -> BuildingGraph {
    parse(DEFAULT_BUILDING_TEXT).expect("shipped fixture is valid")
}

/// Regenerate the default layout text. The shipped file must stay identical
/// to this output (a test enforces it).
pub fn generate_default_building_text() -> String {
    let mut out = String::from("# synthetic 3-floor office block\nbuilding default3f\n");
    for floor in 1..=FLOORS {
        let b = PER_FLOOR * (floor - 1);
        let z = FLOOR_HEIGHT_CM * (floor - 1) as f64;
        let exit = |on_first: bool| if floor == 1 && on_first { " exit" } else { "" };
        // corridors
        for i in 0..10 {
            out.push_str(&format!(
                "node {} {} 0 {} {} 3{}\n",
                b + i,
                i * 500,
                z,
                floor,
                exit(i == 0 || i == 9)
            ));
        }
        for i in 0..10 {
            out.push_str(&format!(
                "node {} {} 1000 {} {} 3\n",
                b + 10 + i,
                i * 500,
                z,
                floor
            ));
        }
        // rooms
        for i in 0..9 {
            out.push_str(&format!(
                "node {} {} -600 {} {} 1\n",
                b + 20 + i,
                i * 500,
                z,
                floor
            ));
        }
        for i in 0..9 {
            out.push_str(&format!(
                "node {} {} 1600 {} {} 1\n",
                b + 29 + i,
                i * 500,
                z,
                floor
            ));
        }
        // stairwells
        out.push_str(&format!("node {} -400 0 {} {} 3\n", b + 38, z, floor));
        out.push_str(&format!("node {} 4900 0 {} {} 3\n", b + 39, z, floor));
    }
    for floor in 1..=FLOORS {
        let b = PER_FLOOR * (floor - 1);
        for i in 0..9 {
            out.push_str(&format!("edge {} {} 500\n", b + i, b + i + 1));
        }
        for i in 0..9 {
            out.push_str(&format!("edge {} {} 500\n", b + 10 + i, b + 11 + i));
        }
        // cross links west / middle / east
        out.push_str(&format!("edge {} {} 1000\n", b, b + 10));
        out.push_str(&format!("edge {} {} 1000\n", b + 4, b + 14));
        out.push_str(&format!("edge {} {} 1000\n", b + 9, b + 19));
        // room doors
        for i in 0..9 {
            out.push_str(&format!("edge {} {} 600\n", b + 20 + i, b + i));
        }
        for i in 0..9 {
            out.push_str(&format!("edge {} {} 600\n", b + 29 + i, b + 10 + i));
        }
        // stairwell landings
        out.push_str(&format!("edge {} {} 400\n", b + 38, b));
        out.push_str(&format!("edge {} {} 400\n", b + 39, b + 9));
    }
    // stair flights between floors
    for floor in 1..FLOORS {
        let lo = PER_FLOOR * (floor - 1);
        let hi = PER_FLOOR * floor;
        out.push_str(&format!("edge {} {} 400\n", lo + 38, hi + 38));
        out.push_str(&format!("edge {} {} 400\n", lo + 39, hi + 39));
    }
    out
}
