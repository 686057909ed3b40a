//! Set partitions, pair partitions, cluster partitions, adapted subsets and
//! the central-moment combinatorics built on them.

use std::fmt;

use serde::Serialize;

use crate::correlation_models::CorrelationModel;
use crate::error::{Error, Result};
use crate::kac_rice_densities::rho_k;
use crate::pair_correlation_variance::{predicted_covariance, QuadratureSpec, TestFunction};

/// A partition of `{0, …, n-1}` in canonical form: every block sorted, blocks
/// sorted by their smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IndexPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl IndexPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidInput("partition blocks must be non-empty".into()));
            }
            for &i in b {
                if i >= n || seen[i] {
                    return Err(Error::InvalidInput(format!("index {i} repeated or outside 0..{n}")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput(format!("blocks do not cover 0..{n}")));
        }
        let mut blocks = blocks;
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(IndexPartition { n, blocks })
    }

    /// All singletons, the minimum of the refinement order.
    pub fn singletons(n: usize) -> Self {
        IndexPartition { n, blocks: (0..n).map(|i| vec![i]).collect() }
    }

    /// The single block `{0, …, n-1}`, the maximum of the refinement order.
    pub fn one_block(n: usize) -> Self {
        IndexPartition { n, blocks: if n == 0 { vec![] } else { vec![(0..n).collect()] } }
    }

    /// Parses `"{0,1},{2}"` (blocks in braces, indices 0-based).
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            rest = rest.trim_start_matches([',', ' ', ';']);
            if rest.is_empty() {
                break;
            }
            let open = rest.strip_prefix('{').ok_or_else(|| bad_partition(text))?;
            let close = open.find('}').ok_or_else(|| bad_partition(text))?;
            let block: std::result::Result<Vec<usize>, _> =
                open[..close].split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse()).collect();
            blocks.push(block.map_err(|_| bad_partition(text))?);
            rest = &open[close + 1..];
        }
        Self::new(n, blocks)
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(&i)).expect("index in ground set")
    }
}

fn bad_partition(text: &str) -> Error {
    Error::InvalidInput(format!("cannot parse partition '{text}' (expected e.g. {{0,1}},{{2}})"))
}

impl fmt::Display for IndexPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

pub const MAX_PARTITION_SIZE: usize = 8;
pub const MAX_PAIR_PARTITION_SIZE: usize = 10;

/// Every set partition of `{0, …, n-1}`, `Bell(n)` of them, in
/// restricted-growth-string order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<IndexPartition>> {
    if n > MAX_PARTITION_SIZE {
        return Err(Error::SizeCap { n, max: MAX_PARTITION_SIZE });
    }
    if n == 0 {
        return Ok(vec![IndexPartition { n: 0, blocks: vec![] }]);
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, max_label: usize, labels: &mut Vec<usize>, out: &mut Vec<IndexPartition>) {
        let n = labels.len();
        if i == n {
            let mut blocks = vec![Vec::new(); max_label + 1];
            for (j, &l) in labels.iter().enumerate() {
                blocks[l].push(j);
            }
            out.push(IndexPartition { n, blocks });
            return;
        }
        for l in 0..=max_label + 1 {
            labels[i] = l;
            rec(i + 1, max_label.max(l), labels, out);
        }
    }
    rec(1, 0, &mut labels, &mut out);
    Ok(out)
}

/// Every partition of `{0, …, n-1}` into pairs; empty for odd `n`.
///
/// # Panics
/// If `n` exceeds [`MAX_PAIR_PARTITION_SIZE`].
pub fn enumerate_pair_partitions(n: usize) -> Vec<IndexPartition> {
    assert!(n <= MAX_PAIR_PARTITION_SIZE, "pair partitions are enumerated up to n = {MAX_PAIR_PARTITION_SIZE}");
    if n % 2 == 1 || n == 0 {
        return Vec::new();
    }
    fn rec(rest: &[usize], acc: &mut Vec<Vec<usize>>, n: usize, out: &mut Vec<IndexPartition>) {
        if rest.is_empty() {
            out.push(IndexPartition::new(n, acc.clone()).expect("valid pairing"));
            return;
        }
        let first = rest[0];
        for k in 1..rest.len() {
            let remaining: Vec<usize> = rest[1..].iter().copied().filter(|&v| v != rest[k]).collect();
            acc.push(vec![first, rest[k]]);
            rec(&remaining, acc, n, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    let all: Vec<usize> = (0..n).collect();
    rec(&all, &mut Vec::new(), n, &mut out);
    out
}

/// Bell numbers by the Bell triangle.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            next.push(next.last().unwrap() + v);
        }
        row = next;
    }
    row[0]
}

/// `μ_p`: number of pair partitions of a `p`-element set, which is also the
/// `p`-th moment of a standard normal variable.
pub fn pair_partition_count(p: usize) -> u64 {
    if p % 2 == 1 {
        return 0;
    }
    (1..p).step_by(2).map(|k| k as u64).product()
}

/// Connected components of the graph joining `i` and `j` when
/// `|x_i - x_j| <= eta`.
pub fn cluster_partition(x: &[f64], eta: f64) -> IndexPartition {
    let n = x.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (x[i] - x[j]).abs() <= eta {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_block = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_block[r] == usize::MAX {
            root_block[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[root_block[r]].push(i);
    }
    IndexPartition { n, blocks }
}

/// Whether every block of `fine` lies inside a block of `coarse`.
pub fn partition_leq(fine: &IndexPartition, coarse: &IndexPartition) -> Result<bool> {
    if fine.n != coarse.n {
        return Err(Error::GroundSetMismatch(fine.n, coarse.n));
    }
    Ok(fine.blocks.iter().all(|b| {
        let target = coarse.block_of(b[0]);
        b.iter().all(|&i| coarse.block_of(i) == target)
    }))
}

/// Subsets `B` of `{0, …, n-1}` containing every non-singleton block, listed
/// by increasing bit mask of the singletons they add.
pub fn adapted_subsets(n: usize, partition: &IndexPartition) -> Result<Vec<Vec<usize>>> {
    if partition.n != n {
        return Err(Error::GroundSetMismatch(n, partition.n));
    }
    let forced: Vec<usize> = partition.blocks.iter().filter(|b| b.len() >= 2).flatten().copied().collect();
    let free: Vec<usize> = partition.blocks.iter().filter(|b| b.len() == 1).map(|b| b[0]).collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for mask in 0u64..(1u64 << free.len()) {
        let mut b = forced.clone();
        b.extend(free.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v));
        b.sort_unstable();
        out.push(b);
    }
    Ok(out)
}

/// `F_I(x) = Σ_{B adapted to I} (-1/π)^{n - |B|} ρ_{|I_B|}(x restricted to I_B)`,
/// where `x` holds one position per block of `partition` and `ρ_0 = 1`.
#[allow(non_snake_case)]
pub fn moment_integrand_F(model: &CorrelationModel, partition: &IndexPartition, x: &[f64]) -> Result<f64> {
    if x.len() != partition.num_blocks() {
        return Err(Error::InvalidInput(format!(
            "expected one position per block ({} blocks, {} positions)",
            partition.num_blocks(),
            x.len()
        )));
    }
    let n = partition.ground_size();
    let mut total = 0.0;
    for b in adapted_subsets(n, partition)? {
        let pts: Vec<f64> = partition
            .blocks()
            .iter()
            .enumerate()
            .filter(|(_, blk)| blk.iter().all(|i| b.contains(i)))
            .map(|(k, _)| x[k])
            .collect();
        let rho = if pts.is_empty() { 1.0 } else { rho_k(model, &pts)?.rho };
        total += (-1.0 / std::f64::consts::PI).powi((n - b.len()) as i32) * rho;
    }
    Ok(total)
}

/// Leading term of the `p`-th central moment of the linear statistics:
/// `Σ_{pair partitions} Π m_2(φ_a, φ_b)`.
pub fn predicted_central_moment(
    model: &CorrelationModel,
    test_functions: &[TestFunction],
    r: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let p = test_functions.len();
    if p % 2 == 1 || p == 0 {
        return Ok(0.0);
    }
    let mut cache: Vec<(usize, usize, f64)> = Vec::new();
    let mut total = 0.0;
    for pp in enumerate_pair_partitions(p) {
        let mut prod = 1.0;
        for blk in pp.blocks() {
            let (a, b) = (blk[0], blk[1]);
            let hit = cache.iter().find(|(i, j, _)| {
                let same = |x: usize, y: usize| test_functions[x] == test_functions[y];
                (same(*i, a) && same(*j, b)) || (same(*i, b) && same(*j, a))
            });
            let v = match hit {
                Some(&(_, _, v)) => v,
                None => {
                    let v = predicted_covariance(model, &test_functions[a], &test_functions[b], r, quad)?;
                    cache.push((a, b, v));
                    v
                }
            };
            prod *= v;
        }
        total += prod;
    }
    Ok(total)
}
