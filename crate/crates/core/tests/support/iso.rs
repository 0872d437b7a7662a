//! Brute-force graph isomorphism by backtracking, used as an oracle for
//! canonical keys.

use g2t_core::MolGraph;

fn signature(g: &MolGraph, i: usize) -> (g2t_core::Element, i8, usize, u32) {
    let a = g.atom(i);
    (a.element, a.charge, g.degree(i), g.bond_order_sum(i))
}

pub fn isomorphic(g: &MolGraph, h: &MolGraph) -> bool {
    let n = g.atom_count();
    if n != h.atom_count() || g.bond_count() != h.bond_count() {
        return false;
    }
    let mut sg: Vec<_> = (0..n).map(|i| signature(g, i)).collect();
    let mut sh: Vec<_> = (0..n).map(|i| signature(h, i)).collect();
    sg.sort();
    sh.sort();
    if sg != sh {
        return false;
    }
    // Visit g in BFS order so every atom after the first has a mapped neighbour.
    let mut order = vec![0];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut k = 0;
    while k < order.len() {
        for &(v, _) in g.neighbors(order[k]) {
            if !seen[v] {
                seen[v] = true;
                order.push(v);
            }
        }
        k += 1;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend(g, h, &order, 0, &mut map, &mut used)
}

fn extend(g: &MolGraph, h: &MolGraph, order: &[usize], depth: usize, map: &mut [usize], used: &mut [bool]) -> bool {
    if depth == order.len() {
        return true;
    }
    let u = order[depth];
    for x in 0..h.atom_count() {
        if used[x] || signature(g, u) != signature(h, x) {
            continue;
        }
        let consistent = order[..depth].iter().all(|&w| g.bond_order(u, w) == h.bond_order(x, map[w]));
        if !consistent {
            continue;
        }
        map[u] = x;
        used[x] = true;
        if extend(g, h, order, depth + 1, map, used) {
            return true;
        }
        used[x] = false;
        map[u] = usize::MAX;
    }
    false
}
