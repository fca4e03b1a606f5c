//! CSV and binary PGM writers for escape maps, grid functions, and state
//! distributions. All writers emit rows in a fixed order and format floats
//! with the shortest round-trip representation, so equal data gives equal
//! bytes.

use crate::error::Error;
use crate::escape::EscapeMap;
use crate::operator::GridFunction;
use crate::rscc::{State, StateSpace, WGrid};
use std::io::Write;
use std::path::Path;

/// CSV with columns `re,im,estimate,std_error,escaped,truncated`, rows in
/// grid order (imaginary axis ascending, then real).
pub fn escape_map_csv(map: &EscapeMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(map.cells.len() * 48);
    out.extend_from_slice(b"re,im,estimate,std_error,escaped,truncated\n");
    for (i, cell) in map.cells.iter().enumerate() {
        let z = map.grid.node(i / map.grid.n.max(1), i % map.grid.n.max(1));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            z.re, z.im, cell.estimate, cell.std_error, cell.escaped_count, cell.truncated_count
        );
    }
    out
}

/// 8-bit binary PGM (P5), estimate scaled to 0-255, top row at the largest
/// imaginary coordinate.
pub fn escape_map_pgm(map: &EscapeMap) -> Vec<u8> {
    let n = map.grid.n;
    let mut out = Vec::with_capacity(32 + n * n);
    let _ = write!(out, "P5\n{n} {n}\n255\n");
    for iy in (0..n).rev() {
        for ix in 0..n {
            let v = map.cells[iy * n + ix].estimate;
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

pub fn write_escape_map_csv(map: &EscapeMap, path: &Path) -> Result<(), Error> {
    std::fs::write(path, escape_map_csv(map))?;
    Ok(())
}

pub fn write_escape_map_pgm(map: &EscapeMap, path: &Path) -> Result<(), Error> {
    std::fs::write(path, escape_map_pgm(map))?;
    Ok(())
}

fn state_columns(space: &StateSpace) -> &'static str {
    match space {
        StateSpace::IntervalTimesBit { .. } => "w,bit",
        _ => "w",
    }
}

fn write_state_fields(out: &mut Vec<u8>, space: &StateSpace, s: State) {
    match space {
        StateSpace::IntervalTimesBit { .. } => {
            let _ = write!(out, "{},{}", s.coord, s.bit);
        }
        _ => {
            let _ = write!(out, "{}", s.coord);
        }
    }
}

/// CSV with columns `z_re,z_im,<state coords>,value`; the infinity node
/// writes `inf,inf` for its coordinates.
pub fn grid_function_csv(f: &GridFunction) -> Vec<u8> {
    let grid = &f.grid;
    let n = grid.z.n;
    let mut out = Vec::with_capacity(f.values.len() * 32);
    let _ = writeln!(out, "z_re,z_im,{},value", state_columns(&grid.w.space));
    for (w, &state) in grid.w.nodes.iter().enumerate() {
        for iy in 0..n {
            for ix in 0..n {
                let z = grid.z.node(iy, ix);
                let _ = write!(out, "{},{},", z.re, z.im);
                write_state_fields(&mut out, &grid.w.space, state);
                let _ = writeln!(out, ",{}", f.value(w, iy * n + ix));
            }
        }
        let _ = write!(out, "inf,inf,");
        write_state_fields(&mut out, &grid.w.space, state);
        let _ = writeln!(out, ",{}", f.value(w, grid.infinity_index()));
    }
    out
}

pub fn write_grid_function_csv(f: &GridFunction, path: &Path) -> Result<(), Error> {
    std::fs::write(path, grid_function_csv(f))?;
    Ok(())
}

/// PGM of one state slice of a grid function (finite nodes only), same
/// conventions as the escape-map PGM.
pub fn grid_slice_pgm(f: &GridFunction, w: usize) -> Vec<u8> {
    let n = f.grid.z.n;
    let slice = f.slice(w);
    let mut out = Vec::with_capacity(32 + n * n);
    let _ = write!(out, "P5\n{n} {n}\n255\n");
    for iy in (0..n).rev() {
        for ix in 0..n {
            out.push((slice[iy * n + ix].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

pub fn write_grid_slice_pgm(f: &GridFunction, w: usize, path: &Path) -> Result<(), Error> {
    std::fs::write(path, grid_slice_pgm(f, w))?;
    Ok(())
}

/// CSV with columns `<state coords>,weight` over the nodes of a state grid.
pub fn distribution_csv(grid: &WGrid, weights: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(weights.len() * 24);
    let _ = writeln!(out, "{},weight", state_columns(&grid.space));
    for (&state, &w) in grid.nodes.iter().zip(weights) {
        write_state_fields(&mut out, &grid.space, state);
        let _ = writeln!(out, ",{w}");
    }
    out
}

pub fn write_distribution_csv(grid: &WGrid, weights: &[f64], path: &Path) -> Result<(), Error> {
    std::fs::write(path, distribution_csv(grid, weights))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::escape::{escape_map, EscapeParams, ZGrid};
    use crate::models::{build_example, ExampleSpec};
    use crate::poly::escape_radius;
    use crate::rscc::State;

    #[test]
    fn csv_and_pgm_have_expected_shape() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let grid = ZGrid::new(2.0, 8).unwrap();
        let params = EscapeParams { samples: 10, ..EscapeParams::new(r) };
        let map = escape_map(&model, State::new(0.0), &grid, &params).unwrap();
        let csv = escape_map_csv(&map);
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 65); // header + 64 cells
        assert!(text.starts_with("re,im,estimate,std_error,escaped,truncated\n"));
        let pgm = escape_map_pgm(&map);
        assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
        assert_eq!(pgm.len(), 10 + 64);
    }

    #[test]
    fn single_cell_map_csv() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let grid = ZGrid::new(1.0, 1).unwrap();
        let params = EscapeParams { samples: 10, ..EscapeParams::new(r) };
        let map = escape_map(&model, State::new(0.0), &grid, &params).unwrap();
        let text = String::from_utf8(escape_map_csv(&map)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,0,"));
    }
}
