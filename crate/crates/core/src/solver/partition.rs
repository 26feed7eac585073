use serde::Serialize;

use crate::cn_core::CnForm;
use crate::error::{CnError, Result};

/// A coordinate shared between two consecutive blocks.
///
/// The earlier block optimizes a private copy of `coordinate`; the later
/// block owns it and is pulled toward the copy by `sigma * (anchor - w)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OverlapLink {
    /// Index into the joined `(x, y)` vector.
    pub coordinate: usize,
    pub earlier: usize,
    pub later: usize,
}

/// Block decomposition of the lifted variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// `x` indices (into `0..n`) of each block.
    pub x_blocks: Vec<Vec<usize>>,
    /// `y` indices (into `0..m`) of each block.
    pub y_blocks: Vec<Vec<usize>>,
    /// Block owning each equality constraint.
    pub constraint_owner: Vec<usize>,
    pub overlap_links: Vec<OverlapLink>,
}

impl Partition {
    pub fn new(
        x_blocks: Vec<Vec<usize>>,
        y_blocks: Vec<Vec<usize>>,
        constraint_owner: Vec<usize>,
        overlap_links: Vec<OverlapLink>,
    ) -> Self {
        Self { x_blocks, y_blocks, constraint_owner, overlap_links }
    }

    /// The trivial one-block partition.
    pub fn monolithic(form: &CnForm) -> Self {
        Self {
            x_blocks: vec![(0..form.n()).collect()],
            y_blocks: vec![(0..form.m()).collect()],
            constraint_owner: vec![0; form.r()],
            overlap_links: Vec::new(),
        }
    }

    /// Groups coordinates by the connected components of constraint
    /// supports, giving the finest decomposable partition.
    pub fn finest(form: &CnForm) -> Self {
        let dim = form.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            let mut k = i;
            while p[k] != r {
                let next = p[k];
                p[k] = r;
                k = next;
            }
            r
        }
        for c in form.constraints() {
            let s = c.support();
            for w in s.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let mut root_to_block: Vec<Option<usize>> = vec![None; dim];
        let mut x_blocks: Vec<Vec<usize>> = Vec::new();
        let mut y_blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = vec![0; dim];
        for (i, slot) in block_of.iter_mut().enumerate() {
            let r = find(&mut parent, i);
            let b = *root_to_block[r].get_or_insert_with(|| {
                x_blocks.push(Vec::new());
                y_blocks.push(Vec::new());
                x_blocks.len() - 1
            });
            *slot = b;
            if i < form.n() {
                x_blocks[b].push(i);
            } else {
                y_blocks[b].push(i - form.n());
            }
        }
        let constraint_owner =
            form.constraints().iter().map(|c| c.support().first().map_or(0, |&i| block_of[i])).collect();
        Self { x_blocks, y_blocks, constraint_owner, overlap_links: Vec::new() }
    }

    pub fn p(&self) -> usize {
        self.x_blocks.len()
    }

    /// Joined `(x, y)` indices of block `j`, `x` part first.
    pub fn block_coords(&self, j: usize, n: usize) -> Vec<usize> {
        self.x_blocks[j].iter().copied().chain(self.y_blocks[j].iter().map(|&i| i + n)).collect()
    }

    /// Block index of every joined coordinate.
    pub fn coordinate_owner(&self, n: usize, m: usize) -> Vec<usize> {
        let mut owner = vec![usize::MAX; n + m];
        for j in 0..self.p() {
            for &i in &self.x_blocks[j] {
                owner[i] = j;
            }
            for &i in &self.y_blocks[j] {
                owner[n + i] = j;
            }
        }
        owner
    }

    /// Equality constraints owned by block `j`, in global order.
    pub fn owned_constraints(&self, j: usize) -> Vec<usize> {
        (0..self.constraint_owner.len()).filter(|&i| self.constraint_owner[i] == j).collect()
    }

    /// Checks the structural conditions against a form.
    ///
    /// Blocks must be pairwise disjoint and cover every coordinate. Each
    /// constraint must read only its owner block, except for coordinates
    /// reached through an overlap link whose earlier block is the owner.
    pub fn validate(&self, form: &CnForm) -> Result<()> {
        let (n, m) = (form.n(), form.m());
        let p = self.p();
        if p == 0 {
            return Err(CnError::InvalidPartition("no blocks".into()));
        }
        if self.y_blocks.len() != p {
            return Err(CnError::InvalidPartition(format!("{} x blocks but {} y blocks", p, self.y_blocks.len())));
        }
        let mut seen = vec![false; n + m];
        for j in 0..p {
            for &i in &self.x_blocks[j] {
                if i >= n {
                    return Err(CnError::InvalidPartition(format!("x index {i} out of range")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(CnError::InvalidPartition(format!("x{} appears in two blocks", i + 1)));
                }
            }
            for &i in &self.y_blocks[j] {
                if i >= m {
                    return Err(CnError::InvalidPartition(format!("y index {i} out of range")));
                }
                if std::mem::replace(&mut seen[n + i], true) {
                    return Err(CnError::InvalidPartition(format!("y{} appears in two blocks", i + 1)));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(CnError::InvalidPartition(format!("coordinate {i} is in no block")));
        }
        if self.constraint_owner.len() != form.r() {
            return Err(CnError::InvalidPartition(format!(
                "{} constraint owners for {} constraints",
                self.constraint_owner.len(),
                form.r()
            )));
        }
        if let Some(&j) = self.constraint_owner.iter().find(|&&j| j >= p) {
            return Err(CnError::BlockIndexOutOfRange { index: j, blocks: p });
        }
        let owner = self.coordinate_owner(n, m);
        for l in &self.overlap_links {
            if l.earlier >= p || l.later >= p {
                return Err(CnError::BlockIndexOutOfRange { index: l.earlier.max(l.later), blocks: p });
            }
            if l.coordinate >= n + m || owner[l.coordinate] != l.later || l.earlier >= l.later {
                return Err(CnError::InvalidPartition(format!(
                    "overlap link on coordinate {} must point from an earlier block into its owner",
                    l.coordinate
                )));
            }
        }
        for (i, c) in form.constraints().iter().enumerate() {
            let j = self.constraint_owner[i];
            let ok = c
                .support()
                .iter()
                .all(|&k| owner[k] == j || self.overlap_links.iter().any(|l| l.coordinate == k && l.earlier == j));
            if !ok {
                return Err(CnError::NotDecomposable { constraint: i });
            }
        }
        Ok(())
    }

    /// Overlap coordinates whose private copy lives in block `j`.
    pub fn copies_of(&self, j: usize) -> Vec<usize> {
        self.overlap_links.iter().filter(|l| l.earlier == j).map(|l| l.coordinate).collect()
    }

    /// Overlap links anchoring a coordinate of block `j`.
    pub fn anchors_into(&self, j: usize) -> Vec<OverlapLink> {
        self.overlap_links.iter().filter(|l| l.later == j).copied().collect()
    }
}
