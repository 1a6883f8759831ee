//! Small explicit-graph routines shared by the checkers.

use std::collections::VecDeque;

/// BFS from `start`; returns the predecessor of each reached node
/// (`Some(start)` for the start itself) and the edge label used.
pub fn bfs_tree<L: Copy>(
    n: usize,
    start: usize,
    succ: impl Fn(usize) -> Vec<(L, usize)>,
) -> Vec<Option<(usize, Option<L>)>> {
    let mut pred: Vec<Option<(usize, Option<L>)>> = vec![None; n];
    pred[start] = Some((start, None));
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for (label, v) in succ(u) {
            if pred[v].is_none() {
                pred[v] = Some((u, Some(label)));
                queue.push_back(v);
            }
        }
    }
    pred
}

/// Labels along the BFS-tree path from the start to `target`.
pub fn path_to<L: Copy>(pred: &[Option<(usize, Option<L>)>], target: usize) -> Option<Vec<L>> {
    let mut labels = Vec::new();
    let mut cur = target;
    loop {
        let (p, label) = pred[cur]?;
        match label {
            None => break,
            Some(l) => labels.push(l),
        }
        cur = p;
    }
    labels.reverse();
    Some(labels)
}

/// Nodes that can reach some node in `targets`.
pub fn backward_reach(n: usize, edges: &[Vec<usize>], targets: impl Iterator<Item = usize>) -> Vec<bool> {
    let mut rev = vec![Vec::new(); n];
    for (u, outs) in edges.iter().enumerate() {
        for &v in outs {
            rev[v].push(u);
        }
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for t in targets {
        if !seen[t] {
            seen[t] = true;
            queue.push_back(t);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen
}

/// Strongly connected components (iterative Tarjan), in reverse
/// topological order.
pub fn sccs(n: usize, edges: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, next edge position)
        let mut work = vec![(root, 0usize)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (u, ref mut pos)) = work.last_mut() {
            if let Some(&v) = edges[u].get(*pos) {
                *pos += 1;
                if index[v] == UNSEEN {
                    index[v] = next;
                    low[v] = next;
                    next += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    work.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[u]);
                }
                if low[u] == index[u] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == u {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out
}
