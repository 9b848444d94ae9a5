//! Text grid maps: `#` obstacle, `.` free, `S` start, `G` goal.
//! One state per non-obstacle cell, unit step costs, 4-neighbor moves.

use super::{ActionId, ModelError, PlanningProblem, StateId};
use num_rational::Rational64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("line {line} has {got} columns, expected {expected}")]
    NonRectangular { line: usize, got: usize, expected: usize },
    #[error("invalid character '{ch}' at line {line}, column {col}")]
    InvalidChar { line: usize, col: usize, ch: char },
    #[error("map has no start cell")]
    NoStart,
    #[error("second start cell at line {line}, column {col}")]
    MultipleStart { line: usize, col: usize },
    #[error("map has no goal cell")]
    NoGoal,
    #[error("start cell at line {line}, column {col} is an obstacle")]
    StartOnObstacle { line: usize, col: usize },
    #[error("map is empty")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Cell geometry of a grid-backed problem, for CSV output and the
/// map serializer.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeta {
    rows: usize,
    cols: usize,
    cell_state: Vec<Option<StateId>>,
    state_cell: Vec<(usize, usize)>,
}

impl GridMeta {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn state_at(&self, row: usize, col: usize) -> Option<StateId> {
        self.cell_state[row * self.cols + col]
    }

    /// (row, col) of a state.
    pub fn cell_of(&self, x: StateId) -> (usize, usize) {
        self.state_cell[x.0]
    }
}

// moves in the fixed N, E, S, W action order
const MOVES: [(ActionId, isize, isize); 4] = [
    (ActionId::NORTH, -1, 0),
    (ActionId::EAST, 0, 1),
    (ActionId::SOUTH, 1, 0),
    (ActionId::WEST, 0, -1),
];

/// Parses a rectangular map into a deterministic unit-cost problem.
pub fn parse_grid_map(text: &str) -> Result<PlanningProblem, MapError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() {
        return Err(MapError::Empty);
    }
    let cols = lines[0].chars().count();
    let rows = lines.len();
    if cols == 0 {
        return Err(MapError::Empty);
    }

    let mut cells = vec![vec!['#'; cols]; rows];
    let mut start = None;
    let mut goals_cells = Vec::new();
    for (r, line) in lines.iter().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != cols {
            return Err(MapError::NonRectangular { line: r + 1, got: chars.len(), expected: cols });
        }
        for (c, &ch) in chars.iter().enumerate() {
            match ch {
                '#' | '.' => {}
                'S' => {
                    if start.is_some() {
                        return Err(MapError::MultipleStart { line: r + 1, col: c + 1 });
                    }
                    start = Some((r, c));
                }
                'G' => goals_cells.push((r, c)),
                _ => return Err(MapError::InvalidChar { line: r + 1, col: c + 1, ch }),
            }
            cells[r][c] = ch;
        }
    }
    let start = start.ok_or(MapError::NoStart)?;
    if goals_cells.is_empty() {
        return Err(MapError::NoGoal);
    }

    // states in row-major order over non-obstacle cells
    let mut cell_state = vec![None; rows * cols];
    let mut state_cell = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if cells[r][c] != '#' {
                cell_state[r * cols + c] = Some(StateId(state_cell.len()));
                state_cell.push((r, c));
            }
        }
    }

    let num_states = state_cell.len();
    let state_of = |r: usize, c: usize| cell_state[r * cols + c];
    let mut b = PlanningProblem::builder(num_states);
    for (x, &(r, c)) in state_cell.iter().enumerate() {
        for (u, dr, dc) in MOVES {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr as usize >= rows || nc as usize >= cols {
                continue;
            }
            if let Some(succ) = state_of(nr as usize, nc as usize) {
                b = b.action(StateId(x), u, succ, Rational64::from_integer(1));
            }
        }
    }
    b = b.initial(state_of(start.0, start.1).expect("start is a free cell"));
    for &(r, c) in &goals_cells {
        b = b.goal(state_of(r, c).expect("goal is a free cell"));
    }
    let meta = GridMeta { rows, cols, cell_state: cell_state.clone(), state_cell };
    Ok(b.grid(meta).build()?)
}

/// Renders a grid-backed problem back to map text. Inverse of
/// `parse_grid_map` on well-formed maps.
pub fn serialize_grid_map(p: &PlanningProblem) -> Result<String, ModelError> {
    let meta = p
        .grid()
        .ok_or_else(|| ModelError::InvalidProblem("problem is not grid-backed".into()))?;
    let mut out = String::new();
    for r in 0..meta.rows() {
        for c in 0..meta.cols() {
            let ch = match meta.state_at(r, c) {
                None => '#',
                Some(x) if x == p.initial() => 'S',
                Some(x) if p.is_goal(x) => 'G',
                Some(_) => '.',
            };
            out.push(ch);
        }
        out.push('\n');
    }
    Ok(out)
}
