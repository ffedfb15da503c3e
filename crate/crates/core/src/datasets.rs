//! Small built-in knowledge bases: the family domain and two synthetic
//! generators for ranking experiments.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Family domain: sixteen axioms over six concepts, one role and four
/// individuals.
pub const FAMILY_KB: &str = "\
subclass(Male, Person)
subclass(Female, Person)
subclass(Father, Male)
subclass(Mother, Female)
subclass(Father, Parent)
subclass(Mother, Parent)
subclass(and(Female, Male), bottom)
subclass(and(Female, Parent), Mother)
subclass(and(Male, Parent), Father)
subclass(some(hasChild, Person), Parent)
subclass(Parent, Person)
subclass(Parent, some(hasChild, Person))
instance(Father, Alex)
instance(Father, Bob)
instance(Mother, Marie)
instance(Mother, Alice)
";

/// A concept tree. `parent[i]` is the direct superclass of concept `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hierarchy {
    pub names: Vec<String>,
    pub parent: Vec<Option<usize>>,
}

impl Hierarchy {
    /// Four levels: 2 roots, 6, 18 and 24 concepts (50 in total). Every
    /// inner node has 3 children except on the last level, where the first
    /// six third-level concepts get two children and the rest one.
    pub fn four_level() -> Self {
        let mut names = Vec::new();
        let mut parent = Vec::new();
        let mut add = |level: usize, idx: usize, p: Option<usize>| {
            names.push(format!("L{level}_{idx}"));
            parent.push(p);
            names.len() - 1
        };
        let roots: Vec<usize> = (0..2).map(|i| add(1, i, None)).collect();
        let l2: Vec<usize> = (0..6).map(|i| add(2, i, Some(roots[i / 3]))).collect();
        let l3: Vec<usize> = (0..18).map(|i| add(3, i, Some(l2[i / 3]))).collect();
        let mut k = 0;
        for (j, &p) in l3.iter().enumerate() {
            for _ in 0..if j < 6 { 2 } else { 1 } {
                add(4, k, Some(p));
                k += 1;
            }
        }
        Self { names, parent }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Strict ancestors of `i`, nearest first.
    pub fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.parent[i];
        while let Some(p) = cur {
            out.push(p);
            cur = self.parent[p];
        }
        out
    }

    /// Every `(sub, sup)` pair of the transitive closure, with a flag telling
    /// whether it is a direct edge.
    pub fn closure(&self) -> Vec<(usize, usize, bool)> {
        (0..self.len())
            .flat_map(|i| {
                self.ancestors(i)
                    .into_iter()
                    .enumerate()
                    .map(move |(k, a)| (i, a, k == 0))
            })
            .collect()
    }
}

/// KB texts of a train/test split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: String,
    pub test: String,
}

/// Holds out `round(fraction · |closure|)` indirect subsumptions of the
/// hierarchy for testing; direct edges always stay in training, so every
/// test pair is entailed by the training axioms.
pub fn hierarchy_split(h: &Hierarchy, fraction: f64, seed: u64) -> Split {
    let closure = h.closure();
    let mut indirect: Vec<(usize, usize)> = closure
        .iter()
        .filter(|p| !p.2)
        .map(|&(a, b, _)| (a, b))
        .collect();
    let n_test = ((closure.len() as f64 * fraction).round() as usize).min(indirect.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indirect.shuffle(&mut rng);
    let test: Vec<(usize, usize)> = indirect[..n_test].to_vec();
    let line = |&(a, b): &(usize, usize)| format!("subclass({}, {})\n", h.names[a], h.names[b]);
    let train = closure
        .iter()
        .map(|&(a, b, _)| (a, b))
        .filter(|p| !test.contains(p))
        .map(|p| line(&p))
        .collect();
    let mut test_sorted = test;
    test_sorted.sort_unstable();
    Split {
        train,
        test: test_sorted.iter().map(line).collect(),
    }
}

/// Parameters of [`link_split`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSpec {
    pub cells: usize,
    pub heads_per_cell: usize,
    pub tails_per_cell: usize,
    pub links_per_head: usize,
    pub others: usize,
    pub holdout: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        Self {
            cells: 6,
            heads_per_cell: 6,
            tails_per_cell: 6,
            links_per_head: 2,
            others: 6,
            holdout: 0.2,
        }
    }
}

/// A link-prediction KB whose role has to halve its domain. Head cells
/// `D_0 .. D_{k-1}` tile `Dom`, tail cells `R_j` tile `Ran`, and `R_j` lies
/// inside `D_{j/2}`, so `Ran` covers the first half of `Dom` while `Other`
/// covers the rest. `r` maps `D_j` onto `R_j` (in both directions), which a
/// pure translation cannot do. Heads of `D_j` link only to tails of `R_j`;
/// a fraction of those links is held out.
pub fn link_split(spec: &LinkSpec, seed: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tbox = String::from(
        "subclass(Ran, Dom)\nsubclass(Other, Dom)\nsubclass(and(Ran, Other), bottom)\nsubclass(Dom, some(r, Ran))\n",
    );
    let mut abox = String::new();
    let mut links = Vec::new();
    for j in 0..spec.cells {
        tbox += &format!(
            "subclass(D{j}, Dom)\nsubclass(R{j}, Ran)\nsubclass(R{j}, D{})\nsubclass(D{j}, some(r, R{j}))\nsubclass(some(r, R{j}), D{j})\n",
            j / 2
        );
        for k in j + 1..spec.cells {
            tbox +=
                &format!("subclass(and(D{j}, D{k}), bottom)\nsubclass(and(R{j}, R{k}), bottom)\n");
        }
        for t in 0..spec.tails_per_cell {
            abox += &format!("instance(R{j}, t{j}_{t})\n");
        }
        for h in 0..spec.heads_per_cell {
            abox += &format!("instance(D{j}, h{j}_{h})\n");
            let mut tails: Vec<usize> = (0..spec.tails_per_cell).collect();
            tails.shuffle(&mut rng);
            for &t in tails.iter().take(spec.links_per_head) {
                links.push(format!("relation(r, h{j}_{h}, t{j}_{t})\n"));
            }
        }
    }
    for o in 0..spec.others {
        abox += &format!("instance(Other, o{o})\n");
    }
    let n_test = (links.len() as f64 * spec.holdout).round() as usize;
    let mut order: Vec<usize> = (0..links.len()).collect();
    order.shuffle(&mut rng);
    let mut test_idx: Vec<usize> = order[..n_test].to_vec();
    test_idx.sort_unstable();
    let mut train = tbox + &abox;
    let mut test = String::new();
    for (i, l) in links.iter().enumerate() {
        if test_idx.binary_search(&i).is_ok() {
            test += l;
        } else {
            train += l;
        }
    }
    Split { train, test }
}
