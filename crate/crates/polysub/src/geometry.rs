//! Exact integer-lattice geometry: cells, polyominoes, the square symmetry
//! group, placements, inflation, and boundary/turn words.
//!
//! Coordinates are mathematical (y grows upward). Rendering flips the axis at
//! output time, never here.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// A unit lattice square, addressed by its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
}

impl Cell {
    pub const fn new(x: i64, y: i64) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Cell::new(self.x + dx, self.y + dy)
    }
}

impl From<(i64, i64)> for Cell {
    fn from((x, y): (i64, i64)) -> Self {
        Cell::new(x, y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// The eight symmetries of the square. `R90` maps (x,y) to (-y,x); `MR0`
/// mirrors across the y-axis, (x,y) to (-x,y); `MRk` applies `Rk` first and
/// the mirror second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum D4Transform {
    R0,
    R90,
    R180,
    R270,
    MR0,
    MR90,
    MR180,
    MR270,
}

pub const D4_ALL: [D4Transform; 8] = [
    D4Transform::R0,
    D4Transform::R90,
    D4Transform::R180,
    D4Transform::R270,
    D4Transform::MR0,
    D4Transform::MR90,
    D4Transform::MR180,
    D4Transform::MR270,
];

impl D4Transform {
    /// Integer 2x2 matrix of the transform, row-major: x' = m0*x + m1*y,
    /// y' = m2*x + m3*y.
    pub fn matrix(self) -> [i64; 4] {
        use D4Transform::*;
        match self {
            R0 => [1, 0, 0, 1],
            R90 => [0, -1, 1, 0],
            R180 => [-1, 0, 0, -1],
            R270 => [0, 1, -1, 0],
            MR0 => [-1, 0, 0, 1],
            MR90 => [0, 1, 1, 0],
            MR180 => [1, 0, 0, -1],
            MR270 => [0, -1, -1, 0],
        }
    }

    fn from_matrix(m: [i64; 4]) -> Self {
        for t in D4_ALL {
            if t.matrix() == m {
                return t;
            }
        }
        unreachable!("matrix {m:?} is not a signed permutation of order dividing 8")
    }

    pub fn apply(self, c: Cell) -> Cell {
        let [a, b, d, e] = self.matrix();
        Cell::new(a * c.x + b * c.y, d * c.x + e * c.y)
    }

    /// Apply to a point in an arbitrary integer frame (used for doubled
    /// mark coordinates, which transform the same way as cells).
    pub fn apply_point(self, p: (i64, i64)) -> (i64, i64) {
        let [a, b, d, e] = self.matrix();
        (a * p.0 + b * p.1, d * p.0 + e * p.1)
    }

    /// Correction between the cell-address action and the geometric action
    /// on cell regions: the address action moves cell (x,y) to t(x,y), while
    /// the transformed unit square anchors at t(x,y) - cell_shift(t). The
    /// shift counts the negative entries per matrix row.
    pub fn cell_shift(self) -> (i64, i64) {
        let [a, b, c, d] = self.matrix();
        let neg = |v: i64| i64::from(v < 0);
        (neg(a) + neg(b), neg(c) + neg(d))
    }

    /// Group composition: `self.compose(other)` applies `other` first.
    pub fn compose(self, other: D4Transform) -> D4Transform {
        let [a1, b1, c1, d1] = self.matrix();
        let [a2, b2, c2, d2] = other.matrix();
        D4Transform::from_matrix([
            a1 * a2 + b1 * c2,
            a1 * b2 + b1 * d2,
            c1 * a2 + d1 * c2,
            c1 * b2 + d1 * d2,
        ])
    }

    pub fn inverse(self) -> D4Transform {
        for t in D4_ALL {
            if self.compose(t) == D4Transform::R0 {
                return t;
            }
        }
        unreachable!("every D4 element has an inverse")
    }

    pub fn symbol(self) -> &'static str {
        use D4Transform::*;
        match self {
            R0 => "R0",
            R90 => "R90",
            R180 => "R180",
            R270 => "R270",
            MR0 => "MR0",
            MR90 => "MR90",
            MR180 => "MR180",
            MR270 => "MR270",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        D4_ALL.into_iter().find(|t| t.symbol() == s)
    }
}

impl fmt::Display for D4Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A rigid motion of the lattice: transform first, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub transform: D4Transform,
    pub offset: (i64, i64),
}

impl Placement {
    pub const IDENTITY: Placement = Placement {
        transform: D4Transform::R0,
        offset: (0, 0),
    };

    pub fn new(transform: D4Transform, offset: (i64, i64)) -> Self {
        Placement { transform, offset }
    }

    pub fn apply(self, c: Cell) -> Cell {
        let t = self.transform.apply(c);
        Cell::new(t.x + self.offset.0, t.y + self.offset.1)
    }

    pub fn apply_point(self, p: (i64, i64)) -> (i64, i64) {
        let t = self.transform.apply_point(p);
        (t.0 + self.offset.0, t.1 + self.offset.1)
    }

    /// `self.compose(other)` applies `other` first: closure of placements
    /// under composition.
    pub fn compose(self, other: Placement) -> Placement {
        let t = self.transform.compose(other.transform);
        let o = self.transform.apply_point(other.offset);
        Placement::new(t, (o.0 + self.offset.0, o.1 + self.offset.1))
    }

    pub fn inverse(self) -> Placement {
        let t = self.transform.inverse();
        let o = t.apply_point(self.offset);
        Placement::new(t, (-o.0, -o.1))
    }

    /// Lift to a k-inflated frame: the placement that maps the k-inflation
    /// of a shape exactly onto the k-inflation of the shape's image under
    /// `self`. Offsets multiply by k, with the cell-address anchor
    /// correction for transforms that flip an axis.
    pub fn inflate(self, k: i64) -> Placement {
        let s = self.transform.cell_shift();
        Placement::new(
            self.transform,
            (
                k * self.offset.0 + (k - 1) * s.0,
                k * self.offset.1 + (k - 1) * s.1,
            ),
        )
    }

    /// Geometric action on a point in the doubled mark frame: rotate about
    /// the cell-center anchor so marks stay glued to the cells they
    /// decorate under the cell-address placement convention.
    pub fn apply_doubled(self, p: (i64, i64)) -> (i64, i64) {
        let q = self.transform.apply_point((p.0 - 1, p.1 - 1));
        (q.0 + 1 + 2 * self.offset.0, q.1 + 1 + 2 * self.offset.1)
    }
}

/// A finite, non-empty, edge-connected set of cells. Cells are kept sorted
/// by (y, x) and deduplicated, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polyomino {
    cells: Vec<Cell>,
}

impl Polyomino {
    pub fn new(mut cells: Vec<Cell>) -> Result<Self, GeometryError> {
        if cells.is_empty() {
            return Err(GeometryError::EmptyPolyomino);
        }
        cells.sort_by_key(|c| (c.y, c.x));
        let before = cells.len();
        cells.dedup();
        if cells.len() != before {
            return Err(GeometryError::DuplicateCell(cells[0]));
        }
        let p = Polyomino { cells };
        if !p.is_edge_connected() {
            return Err(GeometryError::Disconnected);
        }
        Ok(p)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn area(&self) -> usize {
        self.cells.len()
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.cells.binary_search_by_key(&(c.y, c.x), |k| (k.y, k.x)).is_ok()
    }

    fn is_edge_connected(&self) -> bool {
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            let c = self.cells[i];
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let n = c.offset(dx, dy);
                if let Ok(j) = self.cells.binary_search_by_key(&(n.y, n.x), |k| (k.y, k.x)) {
                    if !seen[j] {
                        seen[j] = true;
                        count += 1;
                        stack.push(j);
                    }
                }
            }
        }
        count == self.cells.len()
    }

    /// Bounding box as (min_x, min_y, max_x, max_y), inclusive of cells.
    pub fn bounds(&self) -> (i64, i64, i64, i64) {
        let mut min_x = i64::MAX;
        let mut max_x = i64::MIN;
        let mut min_y = i64::MAX;
        let mut max_y = i64::MIN;
        for c in &self.cells {
            min_x = min_x.min(c.x);
            max_x = max_x.max(c.x);
            min_y = min_y.min(c.y);
            max_y = max_y.max(c.y);
        }
        (min_x, min_y, max_x, max_y)
    }

    /// Image under a placement; cardinality and connectivity are preserved.
    pub fn place(&self, pl: Placement) -> Polyomino {
        let mut cells: Vec<Cell> = self.cells.iter().map(|&c| pl.apply(c)).collect();
        cells.sort_by_key(|c| (c.y, c.x));
        Polyomino { cells }
    }

    /// Each cell (x,y) becomes the k x k block starting at (kx, ky).
    pub fn inflate(&self, k: i64) -> Polyomino {
        assert!(k >= 1, "inflation factor must be at least 1");
        let mut cells = Vec::with_capacity(self.cells.len() * (k * k) as usize);
        for c in &self.cells {
            for j in 0..k {
                for i in 0..k {
                    cells.push(Cell::new(k * c.x + i, k * c.y + j));
                }
            }
        }
        cells.sort_by_key(|c| (c.y, c.x));
        Polyomino { cells }
    }

    /// Translate so the minimum x and minimum y are both zero.
    pub fn normalized(&self) -> (Polyomino, (i64, i64)) {
        let (min_x, min_y, _, _) = self.bounds();
        let cells = self.cells.iter().map(|c| c.offset(-min_x, -min_y)).collect();
        (Polyomino { cells }, (-min_x, -min_y))
    }

    /// Canonical representative under D4 and translation, plus the placement
    /// mapping `self` onto it. Two polyominoes are congruent iff their
    /// canonical shapes are equal.
    pub fn canonical(&self) -> (Polyomino, Placement) {
        let mut best: Option<(Polyomino, Placement)> = None;
        for t in D4_ALL {
            let placed = self.place(Placement::new(t, (0, 0)));
            let (norm, shift) = placed.normalized();
            let pl = Placement::new(t, shift);
            match &best {
                Some((b, _)) if b.cells <= norm.cells => {}
                _ => best = Some((norm, pl)),
            }
        }
        best.expect("polyomino is non-empty")
    }

    /// Counterclockwise outer boundary as a closed vertex path, starting at
    /// the least (y, x) boundary vertex heading east. The interior stays on
    /// the left of the walk.
    pub fn outer_boundary(&self) -> Vec<(i64, i64)> {
        let start = self
            .cells
            .first()
            .map(|c| (c.x, c.y))
            .expect("polyomino is non-empty");
        // Cells are sorted by (y, x): the first cell's lower-left corner is
        // the least (y, x) boundary vertex.
        let mut path = vec![start];
        let mut pos = start;
        let mut heading = (1i64, 0i64);
        loop {
            let next = (pos.0 + heading.0, pos.1 + heading.1);
            path.push(next);
            pos = next;
            if pos == start {
                break;
            }
            heading = self
                .next_boundary_heading(pos, heading)
                .expect("outer boundary walk is closed");
        }
        path
    }

    fn next_boundary_heading(&self, v: (i64, i64), h: (i64, i64)) -> Option<(i64, i64)> {
        let left = (-h.1, h.0);
        let straight = h;
        let right = (h.1, -h.0);
        [left, straight, right]
            .into_iter()
            .find(|&d| self.is_ccw_boundary_edge(v, d))
    }

    /// Directed edge from vertex v in direction d, valid when the cell on its
    /// left is inside and the cell on its right is outside.
    fn is_ccw_boundary_edge(&self, v: (i64, i64), d: (i64, i64)) -> bool {
        let (lc, rc) = match d {
            (1, 0) => (Cell::new(v.0, v.1), Cell::new(v.0, v.1 - 1)),
            (0, 1) => (Cell::new(v.0 - 1, v.1), Cell::new(v.0, v.1)),
            (-1, 0) => (Cell::new(v.0 - 1, v.1 - 1), Cell::new(v.0 - 1, v.1)),
            (0, -1) => (Cell::new(v.0, v.1 - 1), Cell::new(v.0 - 1, v.1 - 1)),
            _ => unreachable!("headings are axis-parallel unit vectors"),
        };
        self.contains(lc) && !self.contains(rc)
    }
}

/// One turn symbol per lattice vertex of a rectilinear path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Turn {
    L,
    R,
    S,
}

impl Turn {
    pub fn swapped(self) -> Turn {
        match self {
            Turn::L => Turn::R,
            Turn::R => Turn::L,
            Turn::S => Turn::S,
        }
    }
}

/// Cyclic (when closed) word over {L, R, S} describing a rectilinear curve.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TurnWord {
    pub symbols: Vec<Turn>,
    pub closed: bool,
}

impl TurnWord {
    pub fn new(symbols: Vec<Turn>, closed: bool) -> Self {
        TurnWord { symbols, closed }
    }

    pub fn from_letters(s: &str, closed: bool) -> Self {
        let symbols = s
            .chars()
            .map(|c| match c {
                'L' => Turn::L,
                'R' => Turn::R,
                'S' => Turn::S,
                _ => panic!("turn letters are L, R, S"),
            })
            .collect();
        TurnWord { symbols, closed }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// count(L) - count(R); +4 for a simple closed curve walked with the
    /// interior on the left.
    pub fn turning_number(&self) -> i64 {
        self.symbols
            .iter()
            .map(|t| match t {
                Turn::L => 1,
                Turn::R => -1,
                Turn::S => 0,
            })
            .sum()
    }

    pub fn swapped(&self) -> TurnWord {
        TurnWord {
            symbols: self.symbols.iter().map(|t| t.swapped()).collect(),
            closed: self.closed,
        }
    }

    /// Reversal of the traversal direction. Turns keep their vertex but flip
    /// chirality, and the symbol order reverses.
    pub fn reversed(&self) -> TurnWord {
        TurnWord {
            symbols: self.symbols.iter().rev().map(|t| t.swapped()).collect(),
            closed: self.closed,
        }
    }

    /// Equality of closed words up to cyclic rotation, in linear time.
    pub fn cyclic_eq(&self, other: &TurnWord) -> bool {
        if !self.closed || !other.closed {
            return *self == *other;
        }
        if self.symbols.len() != other.symbols.len() {
            return false;
        }
        if self.symbols.is_empty() {
            return true;
        }
        let mut haystack = self.symbols.clone();
        haystack.extend_from_slice(&self.symbols);
        kmp_contains(&haystack, &other.symbols)
    }

    /// Equality up to rotation, reversal, and global L/R swap.
    pub fn congruent(&self, other: &TurnWord) -> bool {
        let candidates = [
            other.clone(),
            other.swapped(),
            other.reversed(),
            other.reversed().swapped(),
        ];
        candidates.iter().any(|c| self.cyclic_eq(c))
    }

    pub fn to_letters(&self) -> String {
        self.symbols
            .iter()
            .map(|t| match t {
                Turn::L => 'L',
                Turn::R => 'R',
                Turn::S => 'S',
            })
            .collect()
    }
}

impl fmt::Display for TurnWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_letters())
    }
}

fn kmp_contains(haystack: &[Turn], needle: &[Turn]) -> bool {
    debug_assert!(!needle.is_empty());
    let mut failure = vec![0usize; needle.len()];
    let mut k = 0;
    for i in 1..needle.len() {
        while k > 0 && needle[i] != needle[k] {
            k = failure[k - 1];
        }
        if needle[i] == needle[k] {
            k += 1;
        }
        failure[i] = k;
    }
    let mut k = 0;
    for &t in haystack {
        while k > 0 && t != needle[k] {
            k = failure[k - 1];
        }
        if t == needle[k] {
            k += 1;
        }
        if k == needle.len() {
            return true;
        }
    }
    false
}

fn heading_between(a: (i64, i64), b: (i64, i64)) -> Result<(i64, i64), GeometryError> {
    let d = (b.0 - a.0, b.1 - a.1);
    match d {
        (1, 0) | (-1, 0) | (0, 1) | (0, -1) => Ok(d),
        _ => Err(GeometryError::MalformedPath { from: a, to: b }),
    }
}

fn turn_between(h1: (i64, i64), h2: (i64, i64)) -> Result<Turn, GeometryError> {
    if h2 == h1 {
        Ok(Turn::S)
    } else if h2 == (-h1.1, h1.0) {
        Ok(Turn::L)
    } else if h2 == (h1.1, -h1.0) {
        Ok(Turn::R)
    } else {
        Err(GeometryError::BacktrackingPath)
    }
}

/// Turn word of a rectilinear unit-step polyline given as lattice vertices.
/// A path whose last vertex equals its first is closed and yields one symbol
/// per visited vertex; an open path yields one symbol per interior vertex.
pub fn turn_word(path: &[(i64, i64)]) -> Result<TurnWord, GeometryError> {
    if path.len() < 2 {
        return Err(GeometryError::PathTooShort);
    }
    let closed = path.first() == path.last();
    let mut headings = Vec::with_capacity(path.len() - 1);
    for w in path.windows(2) {
        headings.push(heading_between(w[0], w[1])?);
    }
    let mut symbols = Vec::new();
    for i in 1..headings.len() {
        symbols.push(turn_between(headings[i - 1], headings[i])?);
    }
    if closed {
        symbols.push(turn_between(headings[headings.len() - 1], headings[0])?);
    }
    Ok(TurnWord::new(symbols, closed))
}

/// Walk a closed turn word from the origin heading east, turning before each
/// step. Returns (returns to origin with initial heading, visits no vertex
/// twice).
pub fn walk_closed_word(word: &TurnWord) -> (bool, bool) {
    let mut h = (1i64, 0i64);
    let mut pos = (0i64, 0i64);
    let mut visited = std::collections::HashSet::with_capacity(word.len());
    visited.insert(pos);
    let mut simple = true;
    for t in &word.symbols {
        h = match t {
            Turn::L => (-h.1, h.0),
            Turn::R => (h.1, -h.0),
            Turn::S => h,
        };
        pos = (pos.0 + h.0, pos.1 + h.1);
        if !visited.insert(pos) {
            simple = false;
        }
    }
    // The final vertex re-enters the origin, which is not a self-crossing.
    let closed = pos == (0, 0) && h == (1, 0);
    if pos == (0, 0) {
        simple = visited.len() == word.len();
    }
    (closed, simple)
}
