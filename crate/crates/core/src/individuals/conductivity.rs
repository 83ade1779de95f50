//! Conductor connectivity and the feed/short rule.

use super::InvalidReason;

/// Disjoint-set forest with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Smaller root wins so component labels are order-independent.
        if ra < rb {
            self.parent[rb] = ra;
        } else {
            self.parent[ra] = rb;
        }
    }
}

/// Conductors as vertices, touching pairs as edges. Feeds and free space are
/// not part of the graph.
#[derive(Debug, Clone)]
pub struct ConductivityGraph {
    components: Vec<usize>,
}

impl ConductivityGraph {
    pub fn new(n_conductors: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut uf = UnionFind::new(n_conductors);
        for (a, b) in edges {
            uf.union(a, b);
        }
        let components = (0..n_conductors).map(|i| uf.find(i)).collect();
        Self { components }
    }

    pub fn component(&self, conductor: usize) -> usize {
        self.components[conductor]
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.components[a] == self.components[b]
    }

    /// Checks one feed given the conductors it touches.
    ///
    /// Fewer than two touched conductors leaves the feed unterminated. Two or
    /// more touched conductors that all lie in one component form a
    /// conductive path around the feed: a short.
    pub fn check_feed(&self, touched: &[usize]) -> Result<(), InvalidReason> {
        if touched.len() < 2 {
            return Err(InvalidReason::FeedUnterminated);
        }
        let first = self.components[touched[0]];
        if touched.iter().all(|&c| self.components[c] == first) {
            return Err(InvalidReason::Short);
        }
        Ok(())
    }

    /// Distinct components among `touched`, in ascending label order.
    pub fn terminals(&self, touched: &[usize]) -> Vec<usize> {
        let mut comps: Vec<usize> = touched.iter().map(|&c| self.components[c]).collect();
        comps.sort_unstable();
        comps.dedup();
        comps
    }
}
