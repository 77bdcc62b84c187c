//! Brown clustering of word types by adjacent-class mutual information.
//!
//! Windowed variant: the `k` most frequent types start as singleton
//! clusters; every further type (in frequency order) enters as a new
//! cluster and the pair of clusters whose merge loses the least average
//! mutual information is merged. The final `k` clusters are then merged
//! greedily down to one, and the merge tree gives each cluster its
//! bit-string path (left child `0`, right child `1`).
//!
//! Ordering is deterministic: types by descending frequency then
//! lexicographically, merge candidates by ascending slot index.

use std::collections::{BTreeMap, HashMap};

use super::CrfError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BrownClustering {
    paths: BTreeMap<String, String>,
    k: usize,
}

impl BrownClustering {
    pub fn from_paths(paths: BTreeMap<String, String>, k: usize) -> BrownClustering {
        BrownClustering { paths, k }
    }

    pub fn path(&self, word: &str) -> Option<&str> {
        self.paths.get(word).map(String::as_str)
    }

    pub fn paths(&self) -> &BTreeMap<String, String> {
        &self.paths
    }

    pub fn cluster_count(&self) -> usize {
        self.k
    }
}

/// Cluster bigram counts over the active window.
struct Window {
    counts: Vec<Vec<f64>>,
    members: Vec<Vec<u32>>,
    total: f64,
}

#[inline]
fn q(c: f64, left: f64, right: f64, total: f64) -> f64 {
    if c > 0.0 {
        c / total * (c * total / (left * right)).ln()
    } else {
        0.0
    }
}

impl Window {
    fn sums(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.counts.len();
        let left: Vec<f64> = self.counts.iter().map(|r| r.iter().sum()).collect();
        let right: Vec<f64> = (0..n).map(|b| self.counts.iter().map(|r| r[b]).sum()).collect();
        (left, right)
    }

    /// The pair `(i, j)`, `i < j`, whose merge loses the least mutual information.
    fn best_merge(&self) -> (usize, usize) {
        let n = self.counts.len();
        let total = self.total.max(1.0);
        let (left, right) = self.sums();
        let cell = |a: usize, b: usize| q(self.counts[a][b], left[a], right[b], total);
        let mut row_q = vec![0.0; n];
        let mut col_q = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                let v = cell(a, b);
                row_q[a] += v;
                col_q[b] += v;
            }
        }
        let mut best = (f64::INFINITY, 0, 1);
        for i in 0..n {
            for j in i + 1..n {
                let before = row_q[i] + row_q[j] + col_q[i] + col_q[j]
                    - cell(i, i)
                    - cell(i, j)
                    - cell(j, i)
                    - cell(j, j);
                let lm = left[i] + left[j];
                let rm = right[i] + right[j];
                let mut after = q(
                    self.counts[i][i] + self.counts[i][j] + self.counts[j][i] + self.counts[j][j],
                    lm,
                    rm,
                    total,
                );
                for x in 0..n {
                    if x == i || x == j {
                        continue;
                    }
                    after += q(self.counts[i][x] + self.counts[j][x], lm, right[x], total);
                    after += q(self.counts[x][i] + self.counts[x][j], left[x], rm, total);
                }
                let loss = before - after;
                if loss < best.0 - 1e-12 {
                    best = (loss, i, j);
                }
            }
        }
        (best.1, best.2)
    }

    /// Folds slot `j` into slot `i` (`i < j`) and removes `j`.
    fn merge(&mut self, i: usize, j: usize) {
        let n = self.counts.len();
        for x in 0..n {
            let v = self.counts[j][x];
            self.counts[i][x] += v;
        }
        for x in 0..n {
            let v = self.counts[x][j];
            self.counts[x][i] += v;
        }
        self.counts.remove(j);
        for row in &mut self.counts {
            row.remove(j);
        }
        let moved = self.members.remove(j);
        self.members[i].extend(moved);
    }
}

/// Clusters the types of `sequences` (verses of base strings) into `k` classes.
pub fn brown_cluster(sequences: &[Vec<String>], k: usize) -> Result<BrownClustering, CrfError> {
    if k < 2 {
        return Err(CrfError::InvalidClusterCount(k));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for seq in sequences {
        for w in seq {
            *freq.entry(w.as_str()).or_default() += 1;
        }
    }
    if freq.len() < k {
        return Err(CrfError::VocabTooSmall {
            vocab: freq.len(),
            k,
        });
    }
    let mut vocab: Vec<(&str, usize)> = freq.into_iter().collect();
    vocab.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let id: HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (*w, i as u32))
        .collect();

    // Word bigram lists: right[w] = (next word, count).
    let v = vocab.len();
    let mut bigrams: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut total = 0.0;
    for seq in sequences {
        for pair in seq.windows(2) {
            *bigrams.entry((id[pair[0].as_str()], id[pair[1].as_str()])).or_default() += 1.0;
            total += 1.0;
        }
    }
    let mut right: Vec<Vec<(u32, f64)>> = vec![Vec::new(); v];
    let mut left: Vec<Vec<(u32, f64)>> = vec![Vec::new(); v];
    for (&(a, b), &c) in &bigrams {
        right[a as usize].push((b, c));
        if a != b {
            left[b as usize].push((a, c));
        }
    }

    let mut slot_of: Vec<Option<usize>> = vec![None; v];
    let mut window = Window {
        counts: Vec::new(),
        members: Vec::new(),
        total,
    };
    let add = |window: &mut Window, slot_of: &mut Vec<Option<usize>>, w: usize| {
        let s = window.counts.len();
        for row in &mut window.counts {
            row.push(0.0);
        }
        window.counts.push(vec![0.0; s + 1]);
        window.members.push(vec![w as u32]);
        slot_of[w] = Some(s);
        for &(nx, c) in &right[w] {
            if let Some(t) = slot_of[nx as usize] {
                window.counts[s][t] += c;
            }
        }
        for &(pv, c) in &left[w] {
            if let Some(t) = slot_of[pv as usize] {
                window.counts[t][s] += c;
            }
        }
    };
    let reslot = |window: &Window, slot_of: &mut Vec<Option<usize>>| {
        for (s, members) in window.members.iter().enumerate() {
            for &m in members {
                slot_of[m as usize] = Some(s);
            }
        }
    };

    for w in 0..k {
        add(&mut window, &mut slot_of, w);
    }
    for w in k..v {
        add(&mut window, &mut slot_of, w);
        let (i, j) = window.best_merge();
        window.merge(i, j);
        reslot(&window, &mut slot_of);
    }

    // Hierarchy over the final clusters. Nodes 0..k are leaves.
    let mut children: Vec<Option<(usize, usize)>> = vec![None; k];
    let mut node_of_slot: Vec<usize> = (0..k).collect();
    let leaf_members = window.members.clone();
    while window.counts.len() > 1 {
        let (i, j) = window.best_merge();
        window.merge(i, j);
        children.push(Some((node_of_slot[i], node_of_slot[j])));
        node_of_slot[i] = children.len() - 1;
        node_of_slot.remove(j);
    }
    let mut leaf_path = vec![String::new(); k];
    let mut stack = vec![(children.len() - 1, String::new())];
    while let Some((node, path)) = stack.pop() {
        match children[node] {
            Some((l, r)) => {
                stack.push((r, format!("{path}1")));
                stack.push((l, format!("{path}0")));
            }
            None => leaf_path[node] = path,
        }
    }
    let mut paths = BTreeMap::new();
    for (leaf, members) in leaf_members.iter().enumerate() {
        for &m in members {
            paths.insert(vocab[m as usize].0.to_string(), leaf_path[leaf].clone());
        }
    }
    Ok(BrownClustering { paths, k })
}
