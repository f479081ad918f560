//! Brute-force enumeration of admissible matrix forms.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::matrix::{MatrixKind, StateMatrix};

/// Families that can be enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumKind {
    Sm,
    Sc,
    Lm,
}

/// Per-interval block `(x_A, y_A, x_B, y_B)`.
type Block = (u8, u8, u8, u8);

/// Admissible onset blocks: `x <= y` per unit, and if neither unit is ON at
/// the onset then neither turns ON during the tone.
fn main_blocks() -> Vec<Block> {
    let mut out = Vec::new();
    for bits in 0..16u8 {
        let (xa, ya, xb, yb) = (bits >> 3 & 1, bits >> 2 & 1, bits >> 1 & 1, bits & 1);
        if xa <= ya && xb <= yb && !(xa == 0 && xb == 0 && (ya == 1 || yb == 1)) {
            out.push((xa, ya, xb, yb));
        }
    }
    out
}

fn sm_admissible(v1: Block, v2: Block) -> bool {
    let (xa1, ya1, xb1, yb1) = v1;
    let (xa2, ya2, xb2, yb2) = v2;
    let min = [xa1, ya1, xa2, ya2, xb1, yb1, xb2, yb2].into_iter().min().unwrap_or(0);
    !(ya1 == 1 && yb2 == 1 && xa1 != xb2)
        && !(ya2 == 1 && yb1 == 1 && xa2 != xb1)
        && !(yb1 == yb2 && xa1 < xa2)
        && !(ya1 == ya2 && xb2 < xb1)
        && !(ya2 == 1 && xb1 > min)
        && !(yb1 == 1 && xa2 > min)
        && !(ya2 == yb2 && ya1 == yb1 && !(xa1 >= xb1 && xb2 >= xa2))
}

fn enumerate_sm() -> BTreeSet<StateMatrix> {
    let blocks = main_blocks();
    let mut out = BTreeSet::new();
    for &v1 in &blocks {
        for &v2 in &blocks {
            if !sm_admissible(v1, v2) {
                continue;
            }
            let row_a = vec![v1.0, v1.1, v2.0, v2.1];
            let row_b = vec![v1.2, v1.3, v2.2, v2.3];
            if row_a.iter().chain(&row_b).all(|&e| e == 0) {
                continue;
            }
            out.insert(StateMatrix::new(MatrixKind::Sm, row_a, row_b).expect("valid shape"));
        }
    }
    out
}

type Triple = [u8; 3];

/// Per-interval pairs of `(x, y, z)` rows with `x <= y <= z`.
fn sc_blocks() -> Vec<(Triple, Triple)> {
    let rows: Vec<Triple> = (0..8u8)
        .map(|b| [b >> 2 & 1, b >> 1 & 1, b & 1])
        .filter(|r| r[0] <= r[1] && r[1] <= r[2])
        .collect();
    let mut out = Vec::new();
    for &ra in &rows {
        for &rb in &rows {
            if ra[0] == 0 && rb[0] == 0 && (ra[1] == 1 || rb[1] == 1) {
                continue;
            }
            out.push((ra, rb));
        }
    }
    out
}

fn sc_admissible(w1: (Triple, Triple), w2: (Triple, Triple)) -> bool {
    let ([xa1, ya1, za1], [xb1, yb1, zb1]) = w1;
    let ([xa2, ya2, za2], [xb2, yb2, zb2]) = w2;
    let min = [xa1, ya1, za1, xb1, yb1, zb1, xa2, ya2, za2, xb2, yb2, zb2]
        .into_iter()
        .min()
        .unwrap_or(0);
    let checks = [
        !(za1 == 1 && zb2 == 1 && xa1 != xb2),
        !(za2 == 1 && zb1 == 1 && xa2 != xb1),
        !(zb1 == zb2 && xa1 < xa2),
        !(za1 == za2 && xb2 < xb1),
        !(za2 == 1 && xb1 > min),
        !(zb1 == 1 && xa2 > min),
        !(za2 == zb2 && za1 == zb1 && !(xa1 >= xb1 && xb2 >= xa2)),
        // at least one turn-on strictly inside a tone
        za1 > ya1 || za2 > ya2 || zb1 > yb1 || zb2 > yb2,
        // each unit is ON somewhere
        (za1 == 1 || za2 == 1) && (zb1 == 1 || zb2 == 1),
        !(za1 == 1 && zb1 == 1 && ya2 == yb2 && zb2 < za2),
        !(za2 == 1 && zb2 == 1 && ya1 == yb1 && za1 < zb1),
        !(za2 == 1 && zb1 == 1 && zb2 != 1),
        !(za1 == zb2 && zb1 == za2 && xa1 == xb2 && ya2 != yb1),
    ];
    checks.iter().all(|&c| c)
}

fn enumerate_sc() -> BTreeSet<StateMatrix> {
    let blocks = sc_blocks();
    let mut out = BTreeSet::new();
    for &w1 in &blocks {
        for &w2 in &blocks {
            if !sc_admissible(w1, w2) {
                continue;
            }
            let row_a = [w1.0, w2.0].concat();
            let row_b = [w1.1, w2.1].concat();
            out.insert(StateMatrix::new(MatrixKind::Sc, row_a, row_b).expect("valid shape"));
        }
    }
    out
}

fn enumerate_lm() -> BTreeSet<StateMatrix> {
    let blocks = main_blocks();
    let mut out = BTreeSet::new();
    // both units are ON during the first tone and stay ON after it
    for &(xa1, ya1, xb1, yb1) in blocks.iter().filter(|b| b.1 == 1 && b.3 == 1) {
        for &(xa2, ya2, xb2, yb2) in &blocks {
            for w2 in 0..2u8 {
                if w2 == 1 && !(ya2 == 1 && yb2 == 1) {
                    continue;
                }
                if xa2 > xb2 || xa2 > xb1 || xb2 > xa1 {
                    continue;
                }
                if w2 == 1 && !(xa2 == xb1 && xb2 == xa1 && ya2 == yb1 && yb2 == ya1) {
                    continue;
                }
                if w2 == 0 && ya2 == 0 && yb2 == 0 && xa1 < xb1 {
                    continue;
                }
                let m = StateMatrix::new(
                    MatrixKind::Lm,
                    vec![xa1, ya1, 1, xa2, ya2, w2],
                    vec![xb1, yb1, 1, xb2, yb2, w2],
                )
                .expect("valid shape");
                out.insert(m.conjugate());
                out.insert(m);
            }
        }
    }
    out
}

/// All admissible matrices of a family, closed under conjugation.
pub fn enumerate_valid_matrices(kind: EnumKind) -> Vec<StateMatrix> {
    let set = match kind {
        EnumKind::Sm => enumerate_sm(),
        EnumKind::Sc => enumerate_sc(),
        EnumKind::Lm => enumerate_lm(),
    };
    set.into_iter().collect()
}

/// Groups matrices into conjugacy classes, each sorted, in sorted order.
pub fn conjugacy_classes(mats: &[StateMatrix]) -> Vec<Vec<StateMatrix>> {
    let mut classes = BTreeSet::new();
    for m in mats {
        let mut c = vec![m.clone(), m.conjugate()];
        c.sort();
        c.dedup();
        classes.insert(c);
    }
    classes.into_iter().collect()
}
