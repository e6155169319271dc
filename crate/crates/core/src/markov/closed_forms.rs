//! Published closed forms of the pathway computation, transcribed as
//! `(a, b, d)` triples meaning `(a + b√7)/d`.

use crate::exactnum::Q7Number;

type Triple = (i64, i64, i64);

fn vector(t: [Triple; 3]) -> [Q7Number; 3] {
    t.map(|(a, b, d)| Q7Number::frac(a, b, d))
}

fn matrix(t: [[Triple; 3]; 3]) -> [[Q7Number; 3]; 3] {
    t.map(vector)
}

const Z: Triple = (0, 0, 1);

pub fn c_squared() -> [[Q7Number; 3]; 3] {
    matrix([
        [(11, -4, 4), (-11, 5, 4), (-1, 1, 4)],
        [(-15, 6, 2), (11, -4, 4), (-11, 5, 4)],
        [(23, -8, 4), (4, -1, 4), (8, -3, 2)],
    ])
}

pub fn c_cubed() -> [[Q7Number; 3]; 3] {
    matrix([
        [(-129, 50, 8), (23, -8, 4), (-49, 19, 8)],
        [(216, -81, 8), (-129, 50, 8), (23, -8, 4)],
        [(-79, 31, 8), (91, -34, 8), (11, -3, 8)],
    ])
}

/// `C_0·y*`.
pub fn c0_fixed() -> [Q7Number; 3] {
    vector([(-7, 3, 2), (3, -1, 1), (3, -1, 2)])
}

/// `C_1·y*`.
pub fn c1_fixed() -> [Q7Number; 3] {
    vector([(-5, 2, 2), (3, -1, 1), (1, 0, 2)])
}

pub fn branch_v0() -> [Q7Number; 3] {
    vector([(-307, 117, 8), (258, -97, 4), (-201, 77, 8)])
}

pub fn branch_v1() -> [Q7Number; 3] {
    vector([(-248, 95, 8), (429, -161, 8), (-173, 66, 8)])
}

pub fn recombination_matrices() -> [[[Q7Number; 3]; 3]; 3] {
    [
        matrix([
            [(137, -50, 16), Z, (145, -50, 16)],
            [(-121, 50, 16), (137, -50, 16), Z],
            [Z, (-121, 50, 16), (-129, 50, 16)],
        ]),
        matrix([[(-19, 8, 8), Z, (-15, 8, 8)], [(27, -8, 8), (-19, 8, 8), Z], [Z, (27, -8, 8), (23, -8, 8)]]),
        matrix([
            [(57, -19, 16), Z, (65, -19, 16)],
            [(-41, 19, 16), (57, -19, 16), Z],
            [Z, (-41, 19, 16), (-49, 19, 16)],
        ]),
    ]
}

pub fn recombinations() -> [[Q7Number; 3]; 3] {
    [
        vector([(-115411, 43635, 128), (178381, -67402, 128), (-62842, 23767, 128)]),
        vector([(9856, -3721, 32), (-35509, 13429, 64), (15861, -5987, 64)]),
        vector([(-28183, 10663, 64), (41681, -15746, 64), (-13434, 5083, 64)]),
    ]
}

pub fn final_distribution() -> [Q7Number; 3] {
    vector([(75588, -28561, 64), (-251801, 95189, 128), (100753, -38067, 128)])
}

/// The decimals quoted for `d*` and `y*`.
pub const FINAL_DECIMALS: [&str; 3] = ["0.35464", "0.35486", "0.29050"];
pub const FIXED_POINT_DECIMALS: [&str; 3] = ["0.35425", "0.35425", "0.2915"];
