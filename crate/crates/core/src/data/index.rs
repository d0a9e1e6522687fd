//! Row-major cell indexing shared by marginals and model factors.
//!
//! Cells of a table over attributes `(a_0, .., a_k)` are laid out with the
//! last attribute varying fastest.

/// Row-major strides for the given axis sizes.
pub fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    let mut acc = 1usize;
    for (s, &n) in out.iter_mut().zip(sizes).rev() {
        *s = acc;
        acc *= n;
    }
    out
}

/// For every cell of a table with axis sizes `sizes` (row-major), the offset
/// `sum_i coord_i * target_strides[i]`.
///
/// With `target_strides[i] = 0` for dropped axes this is the projection map
/// onto a sub-table; with a permuted stride vector it is a transpose.
pub fn index_map(sizes: &[usize], target_strides: &[usize]) -> Vec<usize> {
    debug_assert_eq!(sizes.len(), target_strides.len());
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    let k = sizes.len();
    let mut coord = vec![0usize; k];
    let mut offset = 0usize;
    for _ in 0..total {
        out.push(offset);
        // odometer increment, last axis fastest
        let mut axis = k;
        while axis > 0 {
            axis -= 1;
            coord[axis] += 1;
            offset += target_strides[axis];
            if coord[axis] < sizes[axis] {
                break;
            }
            offset -= target_strides[axis] * sizes[axis];
            coord[axis] = 0;
        }
    }
    out
}
