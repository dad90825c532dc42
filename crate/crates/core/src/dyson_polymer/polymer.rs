use super::Diagram;

/// A connected component of a diagram under the adjacency relation.
#[derive(Clone, Debug, PartialEq)]
pub struct Polymer {
    pub diagram: Diagram,
    /// Indices (0-based) of the interactions of the parent diagram it owns.
    pub interactions: Vec<usize>,
}

impl Polymer {
    pub fn roots(&self) -> Vec<i64> {
        self.diagram.roots()
    }

    pub fn horizontal_length(&self) -> f64 {
        self.diagram.horizontal_length()
    }

    pub fn vertical_length(&self) -> usize {
        self.diagram.vertical_length()
    }
}

/// Vertical segment or maximal horizontal run of a diagram.
#[derive(Clone, Debug)]
struct Piece {
    sites: Vec<i64>,
    t0: f64,
    t1: f64,
    /// Interaction index for vertical segments.
    vertex: Option<usize>,
}

fn pieces(d: &Diagram) -> Vec<Piece> {
    let n = d.order();
    let mut edges = vec![0.0];
    edges.extend(&d.times);
    edges.push(d.beta);
    let mut out: Vec<Piece> = d
        .b
        .iter()
        .enumerate()
        .map(|(k, b)| Piece { sites: b.clone(), t0: d.times[k], t1: d.times[k], vertex: Some(k) })
        .collect();
    for site in d.support() {
        let mut start: Option<usize> = None;
        for k in 0..=n + 1 {
            let on = k <= n && d.s[k].contains(&site);
            match (on, start) {
                (true, None) => start = Some(k),
                (false, Some(a)) => {
                    out.push(Piece { sites: vec![site], t0: edges[a], t1: edges[k], vertex: None });
                    start = None;
                }
                _ => {}
            }
        }
    }
    out
}

fn distance(a: &[i64], b: &[i64]) -> i64 {
    a.iter().flat_map(|x| b.iter().map(move |y| (x - y).abs())).min().unwrap_or(i64::MAX)
}

fn adjacent(a: &Piece, b: &Piece, r: usize) -> bool {
    let overlap_t = a.t0 <= b.t1 && b.t0 <= a.t1;
    overlap_t && distance(&a.sites, &b.sites) <= 2 * r as i64 - 2
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut root = i;
    while parent[root] != root {
        root = parent[root];
    }
    let mut j = i;
    while parent[j] != root {
        let next = parent[j];
        parent[j] = root;
        j = next;
    }
    root
}

/// Splits a diagram into polymers: connected components of its vertical
/// segments and horizontal runs under overlap of their `r`-neighbourhoods.
///
/// Polymers are ordered by their first interaction, then by lowest site.
pub fn polymer_decompose(d: &Diagram, r: usize) -> Vec<Polymer> {
    let ps = pieces(d);
    let mut parent: Vec<usize> = (0..ps.len()).collect();
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            if adjacent(&ps[i], &ps[j], r) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; ps.len()];
    for i in 0..ps.len() {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[label[root]].push(i);
    }

    let mut out: Vec<Polymer> = groups
        .into_iter()
        .map(|g| {
            let mut ks: Vec<usize> = g.iter().filter_map(|&i| ps[i].vertex).collect();
            ks.sort_unstable();
            let times: Vec<f64> = ks.iter().map(|&k| d.times[k]).collect();
            let b: Vec<Vec<i64>> = ks.iter().map(|&k| d.b[k].clone()).collect();
            let mut edges = vec![0.0];
            edges.extend(&times);
            edges.push(d.beta);
            let runs: Vec<&Piece> = g.iter().map(|&i| &ps[i]).filter(|p| p.vertex.is_none()).collect();
            let s: Vec<Vec<i64>> = (0..=times.len())
                .map(|j| {
                    let mid = 0.5 * (edges[j] + edges[j + 1]);
                    let mut set: Vec<i64> = runs.iter().filter(|p| p.t0 < mid && mid < p.t1).map(|p| p.sites[0]).collect();
                    set.sort_unstable();
                    set.dedup();
                    set
                })
                .collect();
            Polymer { diagram: Diagram { beta: d.beta, times, s, b }, interactions: ks }
        })
        .collect();
    out.sort_by_key(|p| (p.interactions.first().copied().unwrap_or(usize::MAX), p.diagram.support().first().copied()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn loop_at(beta: f64, sites: [i64; 2], t: [f64; 2]) -> Diagram {
        Diagram::new(beta, t.to_vec(), vec![vec![], sites.to_vec(), vec![]], vec![sites.to_vec(), sites.to_vec()]).unwrap()
    }

    #[test]
    fn single_vertical_segment() {
        let d = Diagram::new(2.0, vec![1.0], vec![vec![], vec![0, 1]], vec![vec![0, 1]]).unwrap();
        let p = polymer_decompose(&d, 1);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].diagram, d);
    }

    #[test]
    fn spatially_separated_loops() {
        let d = Diagram::new(
            4.0,
            vec![1.0, 1.5, 2.0, 2.5],
            vec![vec![], vec![0, 1], vec![0, 1, 5, 6], vec![5, 6], vec![]],
            vec![vec![0, 1], vec![5, 6], vec![0, 1], vec![5, 6]],
        )
        .unwrap();
        let p = polymer_decompose(&d, 1);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].diagram, loop_at(4.0, [0, 1], [1.0, 2.0]));
        assert_eq!(p[1].diagram, loop_at(4.0, [5, 6], [1.5, 2.5]));
        // range 3 lets neighbourhoods of sites 1 and 5 meet
        assert_eq!(polymer_decompose(&d, 3).len(), 1);
    }

    #[test]
    fn composite_with_four_polymers() {
        let d = Diagram::new(
            6.0,
            vec![1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
            vec![
                vec![9],
                vec![1, 2, 9],
                vec![1, 2, 5, 6, 9],
                vec![5, 6, 9],
                vec![9],
                vec![1, 2, 9],
                vec![9],
            ],
            vec![vec![1, 2], vec![5, 6], vec![1, 2], vec![5, 6], vec![1, 2], vec![1, 2]],
        )
        .unwrap();
        assert!(d.is_member());
        let p = polymer_decompose(&d, 1);
        assert_eq!(p.len(), 4);
        assert_eq!(p.iter().map(|q| q.diagram.order()).sum::<usize>(), 6);
        let lh: f64 = p.iter().map(|q| q.horizontal_length()).sum();
        assert!((lh - d.horizontal_length()).abs() < 1e-12);
        assert_eq!(p.iter().map(|q| q.vertical_length()).sum::<usize>(), d.vertical_length());
        assert!(p.iter().any(|q| q.diagram.order() == 0 && q.diagram.s[0] == vec![9]));
    }

    #[test]
    fn touching_in_time_joins() {
        // a run of site 1 ends at the vertex on {1, 2}
        let d = Diagram::new(3.0, vec![1.0, 2.0], vec![vec![1], vec![1], vec![1, 2]], vec![vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(polymer_decompose(&d, 1).len(), 1);
    }

    fn random_diagram() -> impl Strategy<Value = Diagram> {
        (1usize..=4, prop::collection::vec((0i64..6, any::<bool>()), 4), prop::collection::vec(0u8..64, 1)).prop_map(|(n, bs, s0)| {
            let times: Vec<f64> = (1..=n).map(|k| k as f64).collect();
            let b: Vec<Vec<i64>> = bs.iter().take(n).map(|&(i, pair)| if pair { vec![i, i + 1] } else { vec![i] }).collect();
            let mut s = vec![(0..6).filter(|i| s0[0] & (1 << i) != 0).collect::<Vec<i64>>()];
            for k in 0..n {
                // toggle the sites of B_k to stay inside the diagram set
                let mut next: Vec<i64> = s[k].iter().filter(|i| !b[k].contains(i)).copied().collect();
                for &i in &b[k] {
                    if !s[k].contains(&i) {
                        next.push(i);
                    }
                }
                next.sort_unstable();
                s.push(next);
            }
            Diagram::new(n as f64 + 1.0, times, s, b).unwrap()
        })
    }

    proptest! {
        #[test]
        fn decomposition_is_a_partition(d in random_diagram(), r in 1usize..3) {
            prop_assert!(d.is_member());
            let p = polymer_decompose(&d, r);
            let mut ks: Vec<usize> = p.iter().flat_map(|q| q.interactions.clone()).collect();
            ks.sort_unstable();
            prop_assert_eq!(ks, (0..d.order()).collect::<Vec<_>>());
            let lh: f64 = p.iter().map(|q| q.horizontal_length()).sum();
            prop_assert!((lh - d.horizontal_length()).abs() < 1e-12);
            for q in &p {
                prop_assert!(q.diagram.is_member());
            }
            // distinct polymers are not adjacent
            let pieces: Vec<Vec<Piece>> = p.iter().map(|q| pieces(&q.diagram)).collect();
            for a in 0..p.len() {
                for b in a + 1..p.len() {
                    for x in &pieces[a] {
                        for y in &pieces[b] {
                            prop_assert!(!adjacent(x, y, r));
                        }
                    }
                }
            }
        }
    }
}
