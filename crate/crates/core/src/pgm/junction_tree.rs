//! Min-fill triangulation and junction-tree assembly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{AttrSet, Domain};

/// Bytes per stored cell when sizing a junction tree.
pub const BYTES_PER_CELL: f64 = 8.0;

/// Maximal cliques of a triangulation joined into a tree with the
/// running-intersection property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionTree {
    cliques: Vec<AttrSet>,
    /// `(i, j, separator)` with `i < j`.
    edges: Vec<(usize, usize, AttrSet)>,
    elimination_order: Vec<usize>,
}

impl JunctionTree {
    /// Triangulates the union graph of `cliques` by greedy min-fill.
    ///
    /// Ties go to the smallest resulting clique (by cell count), then to the
    /// smallest attribute index. Only attributes that appear in some clique
    /// take part.
    pub fn build(cliques: &[AttrSet], domain: &Domain) -> JunctionTree {
        let mut vertices: BTreeSet<usize> = BTreeSet::new();
        let d = domain.d();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); d];
        for c in cliques {
            for a in c.iter() {
                vertices.insert(a);
                for b in c.iter() {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
        }

        let mut order = Vec::with_capacity(vertices.len());
        let mut raw_cliques: Vec<AttrSet> = Vec::new();
        let mut alive = vertices.clone();
        while !alive.is_empty() {
            let mut best: Option<(usize, usize, usize)> = None; // (fill, cells, v)
            for &v in &alive {
                let nbrs: Vec<usize> = adj[v].iter().copied().collect();
                let mut fill = 0;
                for (i, &a) in nbrs.iter().enumerate() {
                    for &b in &nbrs[i + 1..] {
                        if !adj[a].contains(&b) {
                            fill += 1;
                        }
                    }
                }
                let cells = nbrs.iter().fold(domain.size(v), |acc, &a| acc.saturating_mul(domain.size(a)));
                let key = (fill, cells, v);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
            let (_, _, v) = best.expect("alive is non-empty");
            let nbrs: Vec<usize> = adj[v].iter().copied().collect();
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
            for &a in &nbrs {
                adj[a].remove(&v);
            }
            raw_cliques.push(AttrSet::new(nbrs.iter().copied().chain([v])));
            alive.remove(&v);
            order.push(v);
        }

        // keep maximal cliques, in creation order
        let mut maximal: Vec<AttrSet> = Vec::new();
        for (i, c) in raw_cliques.iter().enumerate() {
            let dominated =
                raw_cliques.iter().enumerate().any(|(j, o)| j != i && c.is_subset(o) && (c.len() < o.len() || j < i));
            if !dominated {
                maximal.push(c.clone());
            }
        }

        // maximum-weight spanning tree over separator sizes (Kruskal); zero
        // weights join disconnected components
        let k = maximal.len();
        let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                candidates.push((maximal[i].intersection_len(&maximal[j]), i, j));
            }
        }
        candidates.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut edges = Vec::with_capacity(k.saturating_sub(1));
        for (_, i, j) in candidates {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
                edges.push((i, j, maximal[i].intersection(&maximal[j])));
            }
        }

        JunctionTree { cliques: maximal, edges, elimination_order: order }
    }

    pub fn cliques(&self) -> &[AttrSet] {
        &self.cliques
    }

    pub fn edges(&self) -> &[(usize, usize, AttrSet)] {
        &self.edges
    }

    pub fn elimination_order(&self) -> &[usize] {
        &self.elimination_order
    }

    pub fn total_cells(&self, domain: &Domain) -> f64 {
        self.cliques.iter().map(|c| domain.cells(c) as f64).sum()
    }

    /// Model footprint in MB (10^6 bytes), at 8 bytes per clique cell.
    pub fn size_mb(&self, domain: &Domain) -> f64 {
        self.total_cells(domain) * BYTES_PER_CELL / 1e6
    }

    /// Index of the smallest clique containing `r`, if any.
    pub fn host(&self, r: &AttrSet, domain: &Domain) -> Option<usize> {
        self.cliques
            .iter()
            .enumerate()
            .filter(|(_, c)| r.is_subset(c))
            .min_by_key(|(i, c)| (domain.cells(c), *i))
            .map(|(i, _)| i)
    }

    /// Checks that for every attribute the cliques holding it form a connected subtree.
    pub fn has_running_intersection(&self) -> bool {
        let k = self.cliques.len();
        if k == 0 {
            return true;
        }
        if self.edges.len() + 1 != k {
            return false;
        }
        let attrs: BTreeSet<usize> = self.cliques.iter().flat_map(|c| c.iter()).collect();
        attrs.into_iter().all(|a| {
            let holders: Vec<usize> = (0..k).filter(|&i| self.cliques[i].contains(a)).collect();
            // walk edges whose endpoints both hold `a`
            let mut seen = vec![false; k];
            let mut stack = vec![holders[0]];
            seen[holders[0]] = true;
            while let Some(u) = stack.pop() {
                for (i, j, _) in &self.edges {
                    let other = if *i == u {
                        *j
                    } else if *j == u {
                        *i
                    } else {
                        continue;
                    };
                    if !seen[other] && self.cliques[other].contains(a) {
                        seen[other] = true;
                        stack.push(other);
                    }
                }
            }
            holders.iter().all(|&h| seen[h])
        })
    }
}

/// Memory in MB of the junction tree implied by `cliques`.
pub fn jt_size(cliques: &[AttrSet], domain: &Domain) -> f64 {
    JunctionTree::build(cliques, domain).size_mb(domain)
}

/// Footprint of a fitted model over `cliques`: the junction tree after every
/// attribute of the domain is given at least a singleton clique.
pub fn model_size_mb(cliques: &[AttrSet], domain: &Domain) -> f64 {
    let mut all = cliques.to_vec();
    all.extend((0..domain.d()).map(AttrSet::single));
    jt_size(&all, domain)
}
