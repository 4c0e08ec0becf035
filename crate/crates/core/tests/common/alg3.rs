//! Literal, unoptimised growing-archive update over 2-D Euclidean points:
//! full pairwise scans, a full nearest-centroid search per cell when
//! repairing, no shared code with the library.

#[derive(Clone, Debug, PartialEq)]
pub struct RefElite {
    pub id: u64,
    pub fitness: f64,
    pub behavior: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefCell {
    pub centroid: Vec<f64>,
    pub elite: RefElite,
    pub backup: RefElite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefResult {
    Added(usize),
    Grew(usize),
    Replaced(usize),
    Rejected,
}

pub struct RefArchive {
    pub capacity: usize,
    pub cells: Vec<RefCell>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

impl RefArchive {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, cells: vec![] }
    }

    pub fn find_cell(&self, b: &[f64]) -> usize {
        let mut best = 0;
        for i in 1..self.cells.len() {
            if dist(&self.cells[i].centroid, b) < dist(&self.cells[best].centroid, b) {
                best = i;
            }
        }
        best
    }

    fn repair(&mut self) {
        for i in 0..self.cells.len() {
            if self.find_cell(&self.cells[i].elite.behavior) != i {
                self.cells[i].elite = self.cells[i].backup.clone();
            }
        }
    }

    fn compete(&mut self, e: RefElite) -> RefResult {
        let c = self.find_cell(&e.behavior);
        if e.fitness > self.cells[c].elite.fitness {
            self.cells[c].elite = e;
            RefResult::Replaced(c)
        } else {
            RefResult::Rejected
        }
    }

    pub fn update(&mut self, e: RefElite) -> RefResult {
        let fresh = RefCell { centroid: e.behavior.clone(), elite: e.clone(), backup: e.clone() };
        if self.cells.len() < self.capacity {
            let taken = self.cells.iter().any(|c| dist(&c.centroid, &e.behavior) == 0.0);
            if taken {
                return self.compete(e);
            }
            self.cells.push(fresh);
            self.repair();
            return RefResult::Added(self.cells.len() - 1);
        }
        let n = self.cells.len();
        let mut d_min = f64::INFINITY;
        let (mut j, mut k) = (0, 0);
        for a in 0..n {
            for b in a + 1..n {
                let d = dist(&self.cells[a].centroid, &self.cells[b].centroid);
                if d < d_min {
                    d_min = d;
                    j = a;
                    k = b;
                }
            }
        }
        let d = self.cells.iter().map(|c| dist(&c.centroid, &e.behavior)).fold(f64::INFINITY, f64::min);
        if d > d_min {
            let closest_to_others = |x: usize| {
                let mut m = f64::INFINITY;
                for i in 0..n {
                    if i != x {
                        m = m.min(dist(&self.cells[x].centroid, &self.cells[i].centroid));
                    }
                }
                m
            };
            if closest_to_others(j) < closest_to_others(k) {
                k = j;
            }
            self.cells[k] = fresh;
            self.repair();
            return RefResult::Grew(k);
        }
        self.compete(e)
    }
}
