//! Sampling pairs for the binary descriptor: 256 point pairs `(x1, y1, x2,
//! y2)` within a 31x31 patch, drawn uniformly from a fixed-seed ChaCha8
//! stream. A test regenerates the table from the seed.

#[cfg(test)]
pub(crate) const PATTERN_SEED: u64 = 0x0000_0000_4f52_4231;
#[cfg(test)]
pub(crate) const PATTERN_HALF: i32 = 15;

#[rustfmt::skip]
pub(crate) const PATTERN: [[i8; 4]; 256] = [
    [12, 13, -8, -2],
    [-6, 1, -2, 14],
    [1, -9, -9, 5],
    [-6, 0, 12, 5],
    [-1, -3, -9, 13],
    [-15, 9, -11, 6],
    [-13, -5, 0, 15],
    [9, -14, -15, 1],
    [13, -4, -8, -3],
    [15, 1, -3, 12],
    [2, -7, -12, -6],
    [-2, 0, -9, -7],
    [-11, -11, -3, 9],
    [14, 6, 3, -14],
    [-3, 8, 8, -4],
    [7, 12, -7, -4],
    [8, 6, 13, -3],
    [-1, 14, -12, -11],
    [0, -14, 10, 13],
    [14, -8, -13, 5],
    [3, 8, 15, -5],
    [7, -9, 8, -11],
    [-11, 3, 11, -11],
    [-2, -3, 4, 3],
    [-12, -3, -10, 15],
    [-11, -9, 0, -7],
    [11, 9, -12, 2],
    [13, -2, 9, 1],
    [-5, 0, 13, 8],
    [14, 5, 5, 1],
    [9, 5, 8, -10],
    [-7, -10, -15, 7],
    [-5, 9, 12, -9],
    [-12, -5, -14, -13],
    [-8, -2, -6, -3],
    [5, -7, 7, 13],
    [-12, -10, 15, 9],
    [-8, -9, -15, -2],
    [-15, 4, 10, -14],
    [13, 11, -14, -3],
    [-5, 9, 9, 10],
    [-15, -6, -12, 10],
    [-6, 12, -9, 2],
    [15, 6, 8, 5],
    [-5, 4, 15, 11],
    [2, 8, 12, 9],
    [-3, -14, 10, 13],
    [3, -4, -3, 15],
    [-11, 10, -12, -12],
    [6, -12, 14, -9],
    [-6, -7, -5, 4],
    [10, 4, 2, 13],
    [-4, -7, 0, -7],
    [0, 2, 5, 6],
    [1, 7, -4, -14],
    [10, 12, 13, 3],
    [-11, -3, 7, -3],
    [-8, 5, 11, 7],
    [1, -4, -6, -8],
    [4, -14, 3, 0],
    [10, 9, 13, 0],
    [10, -12, -4, -2],
    [3, -15, 6, -3],
    [5, 1, 2, -13],
    [-6, 13, -8, -6],
    [-10, -7, 0, 0],
    [1, 2, 5, 9],
    [13, 6, -13, -14],
    [-2, -5, 9, -10],
    [-9, 2, -3, 14],
    [6, 12, 15, 15],
    [12, 10, -10, -13],
    [-15, -7, 11, 10],
    [10, 10, 15, -15],
    [11, -13, 1, -2],
    [4, -1, -9, 4],
    [-10, -10, 13, -3],
    [12, 10, -1, -2],
    [-5, 11, -1, 2],
    [-10, -13, 2, 12],
    [12, 7, -1, -14],
    [3, 15, -2, -4],
    [-9, 6, 2, 2],
    [11, 7, 10, 5],
    [1, -1, 1, -15],
    [12, -12, 9, 11],
    [3, -9, 8, 0],
    [6, -4, 10, -3],
    [15, -12, -13, 15],
    [7, 6, -8, -15],
    [-2, -2, -5, 4],
    [-9, 15, 1, -10],
    [-12, 12, -8, -8],
    [-5, -10, -12, -13],
    [-2, 2, 12, -6],
    [-11, 12, 13, -7],
    [6, 6, 9, -5],
    [7, 15, -9, -6],
    [-7, -8, -9, -9],
    [10, -13, 2, 10],
    [10, -3, 11, 15],
    [4, 10, -14, 10],
    [4, 13, 10, 14],
    [-2, -15, 10, 4],
    [8, 14, -14, -2],
    [0, 7, -15, 1],
    [7, -12, -8, -14],
    [6, 12, 10, 7],
    [-10, 6, 12, 5],
    [-10, 4, 6, -8],
    [11, 7, -10, 11],
    [-14, 11, -9, -8],
    [8, 14, 1, -3],
    [-10, -13, 11, -14],
    [-1, -6, 1, -4],
    [0, -2, 1, 9],
    [-8, 3, 15, 7],
    [11, 12, 1, 14],
    [12, -6, 2, -4],
    [-1, -15, -13, -5],
    [-13, 0, 2, -1],
    [8, -5, -6, 14],
    [-10, 3, -11, -7],
    [-8, -3, 6, -15],
    [-15, 1, -7, 12],
    [1, 1, 12, 8],
    [15, 4, 13, -9],
    [10, 12, 12, -9],
    [10, -15, 15, 0],
    [14, -12, -7, 6],
    [7, 9, 10, -1],
    [13, 12, -4, 11],
    [-9, 5, -10, -5],
    [-2, -13, 11, -10],
    [-1, -3, -7, 8],
    [7, 0, -5, 3],
    [-2, 8, -9, 12],
    [5, -14, 5, 11],
    [8, -2, 8, -6],
    [-2, -13, 6, -14],
    [-11, 4, -1, 2],
    [-1, 2, 5, 10],
    [-11, 1, -7, -3],
    [8, 9, 5, 11],
    [-7, -14, 5, 14],
    [-1, -13, 6, -7],
    [-12, -3, 1, 12],
    [0, 5, 5, 15],
    [12, 11, 9, 5],
    [-14, -14, 10, -11],
    [15, -13, 11, -3],
    [3, -1, 3, 12],
    [-10, 3, -2, 15],
    [-5, -10, 12, -15],
    [7, -8, -12, -8],
    [13, -13, 7, 15],
    [-8, -13, 3, 6],
    [-13, -1, 13, 12],
    [4, -6, 1, -15],
    [3, -12, -13, -1],
    [-7, 2, 11, 15],
    [-12, -6, -8, -13],
    [-11, -13, 7, -1],
    [0, 1, 1, -11],
    [2, 15, 4, -1],
    [5, 15, 4, 12],
    [-15, -8, -13, 1],
    [-7, 12, 10, 0],
    [9, -8, 15, -13],
    [5, 3, -14, -4],
    [-14, -10, 12, 3],
    [-12, 3, -3, -8],
    [4, 14, 2, 8],
    [10, 8, -14, -12],
    [13, 0, -9, 6],
    [0, 11, 14, 6],
    [-2, 5, 14, 1],
    [10, 8, 10, 0],
    [14, 12, 9, -5],
    [4, -15, 1, 1],
    [13, 15, 4, -6],
    [15, 2, 0, 0],
    [-11, -10, 7, 11],
    [-11, 14, -13, -11],
    [-6, 10, -8, -9],
    [2, -8, 14, -6],
    [-6, 1, 9, 5],
    [-1, 5, -10, 1],
    [7, 2, 1, -14],
    [3, 2, 10, -12],
    [13, 13, 2, -5],
    [-14, -12, -2, 3],
    [-5, 8, 3, -9],
    [-1, -7, 1, 9],
    [3, 14, -15, 8],
    [-5, 3, 12, 9],
    [-8, 0, 9, 8],
    [10, 13, -15, -7],
    [9, -13, 4, -2],
    [7, -10, 9, 5],
    [4, -8, -15, -3],
    [-8, 5, 4, 2],
    [14, -12, -13, 14],
    [-5, -4, 8, -4],
    [5, -11, 14, 7],
    [2, -1, -5, 3],
    [3, -15, 15, 8],
    [2, 12, -13, 11],
    [-10, 15, -6, 0],
    [9, -15, -7, 0],
    [3, -9, -7, -14],
    [7, -13, 5, -15],
    [9, -15, -9, -13],
    [12, -4, 12, -8],
    [1, 10, -12, -11],
    [6, 14, -8, -12],
    [2, 1, 3, 3],
    [-1, 10, -13, 6],
    [15, 2, -5, 9],
    [-10, -2, -4, -4],
    [2, -9, -14, -15],
    [-14, -8, -11, -10],
    [13, 12, 11, -13],
    [14, -9, 5, -6],
    [-15, -2, -4, -5],
    [6, 8, 5, 10],
    [10, 7, 14, 8],
    [11, 2, 4, -14],
    [14, 7, 11, -14],
    [-9, -3, -14, 13],
    [-5, 3, 0, -3],
    [-15, -11, 1, 8],
    [1, 6, -2, 1],
    [2, -13, 7, 9],
    [-13, 7, 13, 10],
    [6, -14, 0, 7],
    [-12, 6, 14, 8],
    [1, -6, 11, -11],
    [-2, -15, 1, 4],
    [-1, -12, 3, 5],
    [-5, -15, 1, 5],
    [-14, -7, 0, 10],
    [-3, 8, 9, -1],
    [7, -14, -5, 5],
    [11, -6, -11, 11],
    [12, -2, -4, 11],
    [-14, 8, -8, 0],
    [5, 6, -10, 1],
    [-6, -3, 15, -7],
    [13, -5, 14, -6],
    [-4, 9, 13, -11],
    [3, 2, -11, 14],
    [15, 10, 6, 2],
    [0, -11, 14, 13],
    [-9, 0, -12, -13],
    [0, -15, -12, -4],
];

#[cfg(test)]
pub(crate) fn generate(seed: u64) -> [[i8; 4]; 256] {
    use rand_chacha::ChaCha8Rng;
    use rand_core::{Rng, SeedableRng};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = (2 * PATTERN_HALF + 1) as u32;
    let mut out = [[0i8; 4]; 256];
    for pair in out.iter_mut() {
        loop {
            let mut p = [0i8; 4];
            for v in p.iter_mut() {
                *v = ((rng.next_u32() % span) as i32 - PATTERN_HALF) as i8;
            }
            if p[..2] != p[2..] {
                *pair = p;
                break;
            }
        }
    }
    out
}
