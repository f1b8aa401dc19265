//! Text mazes and their reduction to rooted trees.
//!
//! Grid format: one row per line, `#` wall, `.` open, `S` start, `G` goal.
//! LF or CRLF line endings; any other character (trailing spaces included)
//! is rejected. Cells outside the grid count as walls.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use super::{ProblemError, ProblemKind, TreeProblem};
use crate::scalar::Scalar;
use crate::solutions::{decode_path, Solution};
use crate::tree::{Combinator, FeatureSchema, LabeledTree, RawEdge, RawNode, RawTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MazeError {
    #[error("maze is empty")]
    Empty,
    #[error("line {line} has width {found}, expected {expected}")]
    NonRectangular { line: usize, found: usize, expected: usize },
    #[error("unexpected character {ch:?} at line {line}, column {column}")]
    InvalidCharacter { line: usize, column: usize, ch: char },
    #[error("maze has no start cell `S`")]
    MissingStart,
    #[error("maze has no goal cell `G`")]
    MissingGoal,
    #[error("marker `{0}` appears more than once")]
    DuplicateMarker(char),
    #[error("open cells are not all connected to the start")]
    Disconnected,
    #[error("passages contain a loop ({open} open cells, {adjacent} adjacent pairs)")]
    NotSimplyConnected { open: usize, adjacent: usize },
    #[error("solution does not belong to this maze: {0}")]
    ForeignSolution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn node_id(self) -> String {
        format!("r{:02}c{:02}", self.row, self.col)
    }

    fn parse_node_id(id: &str) -> Option<Cell> {
        let rest = id.strip_prefix('r')?;
        let (row, col) = rest.split_once('c')?;
        Some(Cell { row: row.parse().ok()?, col: col.parse().ok()? })
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Label of the goal tip when the goal cell is not itself a dead end.
pub const GOAL_TIP: &str = "goal";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeGrid {
    width: usize,
    height: usize,
    open: Vec<bool>,
    start: Cell,
    goal: Cell,
}

impl MazeGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn is_open(&self, c: Cell) -> bool {
        c.row < self.height && c.col < self.width && self.open[c.row * self.width + c.col]
    }

    pub fn open_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height)
            .flat_map(move |row| (0..self.width).map(move |col| Cell { row, col }))
            .filter(|&c| self.is_open(c))
    }

    /// Open 4-neighbours in the order up, left, right, down.
    pub fn neighbours(&self, c: Cell) -> Vec<Cell> {
        let mut out = Vec::with_capacity(4);
        if c.row > 0 {
            out.push(Cell { row: c.row - 1, col: c.col });
        }
        if c.col > 0 {
            out.push(Cell { row: c.row, col: c.col - 1 });
        }
        out.push(Cell { row: c.row, col: c.col + 1 });
        out.push(Cell { row: c.row + 1, col: c.col });
        out.retain(|&n| self.is_open(n));
        out
    }

    /// Cells along the unique passage from `from` to `to`, both included.
    pub fn path_between(&self, from: Cell, to: Cell) -> Option<Vec<Cell>> {
        let idx = |c: Cell| c.row * self.width + c.col;
        let mut prev: Vec<Option<Cell>> = vec![None; self.open.len()];
        let mut seen = vec![false; self.open.len()];
        let mut queue = VecDeque::from([from]);
        seen[idx(from)] = true;
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut cur = to;
                while let Some(p) = prev[idx(cur)] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for n in self.neighbours(u) {
                if !seen[idx(n)] {
                    seen[idx(n)] = true;
                    prev[idx(n)] = Some(u);
                    queue.push_back(n);
                }
            }
        }
        None
    }
}

pub fn parse_maze(text: &str) -> Result<MazeGrid, MazeError> {
    let mut lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(MazeError::Empty);
    }
    let width = lines[0].chars().count();
    if width == 0 {
        return Err(MazeError::Empty);
    }
    let mut open = Vec::with_capacity(width * lines.len());
    let (mut start, mut goal) = (None, None);
    for (row, line) in lines.iter().enumerate() {
        let mut count = 0;
        for (col, ch) in line.chars().enumerate() {
            count += 1;
            let here = Cell { row, col };
            match ch {
                '#' => open.push(false),
                '.' => open.push(true),
                'S' | 'G' => {
                    let slot = if ch == 'S' { &mut start } else { &mut goal };
                    if slot.replace(here).is_some() {
                        return Err(MazeError::DuplicateMarker(ch));
                    }
                    open.push(true);
                }
                _ => return Err(MazeError::InvalidCharacter { line: row + 1, column: col + 1, ch }),
            }
        }
        if count != width {
            return Err(MazeError::NonRectangular { line: row + 1, found: count, expected: width });
        }
    }
    let start = start.ok_or(MazeError::MissingStart)?;
    let goal = goal.ok_or(MazeError::MissingGoal)?;
    let grid = MazeGrid { width, height: lines.len(), open, start, goal };

    let total = grid.open_cells().count();
    let mut seen = vec![false; grid.open.len()];
    let mut stack = vec![start];
    seen[start.row * width + start.col] = true;
    let mut reached = 0;
    while let Some(u) = stack.pop() {
        reached += 1;
        for n in grid.neighbours(u) {
            let i = n.row * width + n.col;
            if !seen[i] {
                seen[i] = true;
                stack.push(n);
            }
        }
    }
    if reached != total {
        return Err(MazeError::Disconnected);
    }
    let adjacent: usize = grid
        .open_cells()
        .map(|c| {
            grid.is_open(Cell { row: c.row, col: c.col + 1 }) as usize
                + grid.is_open(Cell { row: c.row + 1, col: c.col }) as usize
        })
        .sum();
    if adjacent + 1 != total {
        return Err(MazeError::NotSimplyConnected { open: total, adjacent });
    }
    Ok(grid)
}

/// Reduces a maze to a binarized tree problem rooted at the start cell.
///
/// Nodes are the start, the goal, dead ends and junctions; each corridor
/// between them becomes one edge whose length is its step count. Dead ends
/// are terminals with outcome 0. The goal is a terminal with outcome 1 when it
/// is a dead end; otherwise its cell stays internal and gets a zero-length
/// pendant tip [`GOAL_TIP`].
pub fn maze_to_tree<S: Scalar>(maze: &MazeGrid) -> Result<TreeProblem<S>, ProblemError> {
    let is_key = |c: Cell| c == maze.start || c == maze.goal || maze.neighbours(c).len() != 2;
    let goal_is_tip = maze.neighbours(maze.goal).len() == 1;

    let mut nodes: Vec<RawNode<S>> = Vec::new();
    let mut edges: Vec<RawEdge<S>> = Vec::new();
    let add_node = |c: Cell, nodes: &mut Vec<RawNode<S>>| {
        let terminal = c != maze.start && maze.neighbours(c).len() == 1;
        let labels = if !terminal {
            Vec::new()
        } else if c == maze.goal {
            vec![S::one()]
        } else {
            vec![S::zero()]
        };
        nodes.push(RawNode { id: c.node_id(), terminal, labels });
    };

    add_node(maze.start, &mut nodes);
    let mut stack: Vec<(Cell, Option<Cell>)> = vec![(maze.start, None)];
    while let Some((u, came_from)) = stack.pop() {
        for first in maze.neighbours(u) {
            if Some(first) == came_from {
                continue;
            }
            let (mut prev, mut cur, mut steps) = (u, first, 1usize);
            while !is_key(cur) {
                let next =
                    maze.neighbours(cur).into_iter().find(|&n| n != prev).expect("corridor cell has two neighbours");
                prev = cur;
                cur = next;
                steps += 1;
            }
            add_node(cur, &mut nodes);
            edges.push(RawEdge { from: u.node_id(), to: cur.node_id(), features: vec![S::lit(steps as f64)] });
            stack.push((cur, Some(prev)));
        }
    }
    if !goal_is_tip {
        nodes.push(RawNode { id: GOAL_TIP.to_string(), terminal: true, labels: vec![S::one()] });
        edges.push(RawEdge { from: maze.goal.node_id(), to: GOAL_TIP.to_string(), features: vec![S::zero()] });
    }

    let tree = LabeledTree::new(RawTree {
        schema: FeatureSchema::single("length", Combinator::Additive),
        root: maze.start.node_id(),
        nodes,
        edges,
    })?;
    TreeProblem::new("maze", ProblemKind::Maze, tree, false)
}

/// Expands a path solution of a maze problem back to the grid cells it walks through.
pub fn maze_path_cells<S: Scalar>(
    maze: &MazeGrid,
    problem: &TreeProblem<S>,
    solution: &Solution,
) -> Result<Vec<Cell>, MazeError> {
    let tree = problem.tree();
    let tip = decode_path(tree, solution).map_err(|e| MazeError::ForeignSolution(e.to_string()))?;
    let mut chain = Vec::new();
    let mut u = tree.node_index(&tip).expect("decoded terminal exists");
    loop {
        chain.push(tree.id(u).to_string());
        match tree.parent(u) {
            Some(p) => u = p,
            None => break,
        }
    }
    chain.reverse();
    let key_cells: Vec<Cell> = chain.iter().filter_map(|id| Cell::parse_node_id(id)).collect();
    let mut cells = vec![*key_cells.first().ok_or_else(|| MazeError::ForeignSolution("path has no cells".into()))?];
    for pair in key_cells.windows(2) {
        let leg = maze
            .path_between(pair[0], pair[1])
            .ok_or_else(|| MazeError::ForeignSolution(format!("no passage between {} and {}", pair[0], pair[1])))?;
        cells.extend_from_slice(&leg[1..]);
    }
    Ok(cells)
}
