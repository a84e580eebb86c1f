//! Face-connected component labelling.

use std::collections::VecDeque;

use super::VoxelSet;

/// Labels occupied voxels by face-connected component. Label 0 marks empty
/// voxels; components are numbered from 1 in order of their smallest linear
/// index. Returns the labels and the number of components.
pub fn label_components(vs: &VoxelSet) -> (Vec<u32>, usize) {
    let g = vs.grid();
    let d = g.dim();
    let mut labels = vec![0u32; g.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..g.len() {
        if !vs.get_linear(start) || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(lin) = queue.pop_front() {
            let idx = g.unravel(lin);
            for axis in 0..d {
                for dir in [-1i64, 1] {
                    let mut nb = [idx[0] as i64, idx[1] as i64, idx[2] as i64];
                    nb[axis] += dir;
                    if let Some(nl) = g.checked_linear(nb) {
                        if vs.get_linear(nl) && labels[nl] == 0 {
                            labels[nl] = next;
                            queue.push_back(nl);
                        }
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

/// Face-connected components on the grid of `vs`, sorted by descending
/// measure; ties keep the component with the smaller first voxel first.
pub fn connected_components(vs: &VoxelSet) -> Vec<VoxelSet> {
    let (labels, count) = label_components(vs);
    let mut sizes = vec![0usize; count];
    for &l in &labels {
        if l > 0 {
            sizes[l as usize - 1] += 1;
        }
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]));
    order
        .into_iter()
        .map(|c| {
            let want = c as u32 + 1;
            let bits = labels.iter().map(|&l| l == want).collect();
            VoxelSet::from_bits(*vs.grid(), bits).expect("same grid")
        })
        .collect()
}
