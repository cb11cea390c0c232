//! Small digraph routines over index-based adjacency lists.

/// Adjacency lists indexed by vertex; vertices may be deactivated to work on
/// induced subgraphs without renumbering.
#[derive(Clone, Debug)]
pub(crate) struct Digraph {
    succ: Vec<Vec<usize>>,
    active: Vec<bool>,
}

impl Digraph {
    pub fn new(succ: Vec<Vec<usize>>) -> Self {
        let active = vec![true; succ.len()];
        Digraph { succ, active }
    }

    /// Restricts to `keep`: inactive vertices lose all arcs, and arcs into them are dropped.
    pub fn induced(&self, keep: &[bool]) -> Self {
        let succ = self
            .succ
            .iter()
            .enumerate()
            .map(|(v, out)| {
                if keep[v] {
                    out.iter().copied().filter(|&w| keep[w]).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        Digraph {
            succ,
            active: keep.to_vec(),
        }
    }

    pub fn without_arcs(&self, mut drop: impl FnMut(usize, usize) -> bool) -> Self {
        let succ = self
            .succ
            .iter()
            .enumerate()
            .map(|(v, out)| out.iter().copied().filter(|&w| !drop(v, w)).collect())
            .collect();
        Digraph {
            succ,
            active: self.active.clone(),
        }
    }

    pub fn add_arc(&mut self, v: usize, w: usize) {
        self.succ[v].push(w);
    }

    pub fn remove_arc(&mut self, v: usize, w: usize) {
        self.succ[v].retain(|&x| x != w);
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.len()];
        for (v, out) in self.succ.iter().enumerate() {
            for &w in out {
                pred[w].push(v);
            }
        }
        pred
    }

    /// Active vertices in topological order, or a directed cycle as witness.
    pub fn topological_order(&self) -> Result<Vec<usize>, Vec<usize>> {
        let n = self.len();
        let mut indeg = vec![0usize; n];
        for out in &self.succ {
            for &w in out {
                indeg[w] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..n)
            .filter(|&v| self.active[v] && indeg[v] == 0)
            .collect();
        ready.reverse();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for &w in &self.succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(w);
                }
            }
        }
        if order.len() == self.active.iter().filter(|&&a| a).count() {
            Ok(order)
        } else {
            Err(self
                .find_cycle()
                .expect("leftover vertices lie on or reach a cycle"))
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Vertices from which some directed cycle can be reached: what survives
    /// repeatedly deleting active vertices with no remaining out-arcs.
    pub fn cycle_reaching(&self) -> Vec<bool> {
        let n = self.len();
        let pred = self.predecessors();
        let mut outdeg: Vec<usize> = self.succ.iter().map(Vec::len).collect();
        let mut alive = self.active.clone();
        let mut stack: Vec<usize> = (0..n).filter(|&v| alive[v] && outdeg[v] == 0).collect();
        while let Some(v) = stack.pop() {
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            for &u in &pred[v] {
                outdeg[u] -= 1;
                if outdeg[u] == 0 && alive[u] {
                    stack.push(u);
                }
            }
        }
        alive
    }

    /// Some directed cycle (as a vertex sequence, first vertex not repeated), if any.
    ///
    /// Deterministic: walks from the lowest vertex that reaches a cycle, always
    /// following the first successor that also reaches one.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let alive = self.cycle_reaching();
        let start = alive.iter().position(|&a| a)?;
        Some(self.lasso_from(start, &alive).1)
    }

    /// From `start` (which must reach a cycle) follow the first successor that
    /// reaches a cycle until a vertex repeats. Returns (stem, cycle).
    pub fn lasso_from(&self, start: usize, alive: &[bool]) -> (Vec<usize>, Vec<usize>) {
        let mut seen = vec![usize::MAX; self.len()];
        let mut walk = Vec::new();
        let mut v = start;
        while seen[v] == usize::MAX {
            seen[v] = walk.len();
            walk.push(v);
            v = *self.succ[v]
                .iter()
                .find(|&&w| alive[w])
                .expect("cycle-reaching vertex has a cycle-reaching successor");
        }
        let cycle = walk.split_off(seen[v]);
        (walk, cycle)
    }

    /// Vertices that can reach any vertex of `targets`.
    pub fn reaching(&self, targets: &[bool]) -> Vec<bool> {
        let pred = self.predecessors();
        let mut seen = targets.to_vec();
        let mut stack: Vec<usize> = (0..self.len()).filter(|&v| targets[v]).collect();
        while let Some(v) = stack.pop() {
            for &u in &pred[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_and_order() {
        let g = Digraph::new(vec![vec![1], vec![2], vec![0, 3], vec![]]);
        assert!(!g.is_acyclic());
        assert_eq!(g.find_cycle(), Some(vec![0, 1, 2]));
        assert_eq!(g.cycle_reaching(), vec![true, true, true, false]);
        let dag = g.without_arcs(|v, w| (v, w) == (2, 0));
        assert_eq!(dag.topological_order(), Ok(vec![0, 1, 2, 3]));
    }

    #[test]
    fn self_loop_counts_as_cycle() {
        let g = Digraph::new(vec![vec![0, 1], vec![]]);
        assert_eq!(g.find_cycle(), Some(vec![0]));
        assert_eq!(g.topological_order(), Err(vec![0]));
    }

    #[test]
    fn induced_drops_outside_arcs() {
        let g = Digraph::new(vec![vec![1], vec![0], vec![0]]);
        let sub = g.induced(&[true, false, true]);
        assert!(sub.is_acyclic());
        assert_eq!(sub.topological_order(), Ok(vec![2, 0]));
        assert_eq!(sub.reaching(&[true, false, false]), vec![true, false, true]);
    }
}
