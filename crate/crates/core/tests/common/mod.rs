//! Expectation matrices transcribed from the reference tables, as
//! functions of the measurement rate.

#![allow(dead_code)]

use std::rc::Rc;

use ctqw_hitting::{CMatrix64, Complex64};

pub type Entry = Rc<dyn Fn(f64) -> (f64, f64)>;

pub struct Reference {
    pub label: &'static str,
    pub graph: &'static str,
    pub final_vertex: usize,
    pub probability: Vec<Vec<Entry>>,
    pub time: Vec<Vec<Entry>>,
    /// 0-based entries of `time` excluded from comparison.
    pub excluded: Vec<(usize, usize)>,
}

impl Reference {
    pub fn probability_at(&self, lam: f64) -> CMatrix64 {
        eval(&self.probability, lam)
    }

    pub fn time_at(&self, lam: f64) -> CMatrix64 {
        eval(&self.time, lam)
    }
}

pub fn eval(rows: &[Vec<Entry>], lam: f64) -> CMatrix64 {
    let n = rows.len();
    CMatrix64::from_fn(n, n, |r, c| {
        let (re, im) = rows[r][c](lam);
        Complex64::new(re, im)
    })
}

fn e(re: impl Fn(f64) -> f64 + 'static, im: impl Fn(f64) -> f64 + 'static) -> Entry {
    Rc::new(move |l| (re(l), im(l)))
}

fn k(v: f64) -> impl Fn(f64) -> f64 {
    move |_| v
}

fn constant_rows(rows: &[&[f64]]) -> Vec<Vec<Entry>> {
    rows.iter().map(|r| r.iter().map(|&v| e(k(v), k(0.0))).collect()).collect()
}

fn identity(n: usize) -> Vec<Vec<Entry>> {
    (0..n).map(|r| (0..n).map(|c| e(k(if r == c { 1.0 } else { 0.0 }), k(0.0))).collect()).collect()
}

const THIRD: f64 = 1.0 / 3.0;

pub fn k2_v1() -> Reference {
    Reference {
        label: "K2/v1",
        graph: "K2",
        final_vertex: 0,
        probability: identity(2),
        time: vec![
            vec![e(|l: f64| 2.0 / l, k(0.0)), e(k(0.0), |l: f64| 1.0 / l)],
            vec![e(k(0.0), |l: f64| -1.0 / l), e(|l: f64| 2.0 / l + l / 2.0, k(0.0))],
        ],
        excluded: vec![],
    }
}

pub fn l3_v1() -> Reference {
    Reference {
        label: "L3/v1",
        graph: "L3",
        final_vertex: 0,
        probability: identity(3),
        time: vec![
            vec![
                e(|l: f64| 3.0 / l, k(0.0)),
                e(|l: f64| -1.0 / (2.0 * l), k(1.0)),
                e(|l: f64| 1.0 / (2.0 * l), k(-0.5)),
            ],
            vec![
                e(|l: f64| -1.0 / (2.0 * l), k(-1.0)),
                e(|l: f64| l + 4.0 / l, k(0.0)),
                e(|l: f64| l / 2.0 - 1.0 / (2.0 * l), k(0.5)),
            ],
            vec![
                e(|l: f64| 1.0 / (2.0 * l), k(0.5)),
                e(|l: f64| l / 2.0 - 1.0 / (2.0 * l), k(-0.5)),
                e(|l: f64| 3.0 * l / 2.0 + 3.0 / l, k(0.0)),
            ],
        ],
        excluded: vec![],
    }
}

pub fn l3_v2() -> Reference {
    let a = e(|l: f64| l / 8.0 + 9.0 / (8.0 * l), k(0.0));
    let b = e(|l: f64| 1.0 / (4.0 * l), k(-0.25));
    let bc = e(|l: f64| 1.0 / (4.0 * l), k(0.25));
    Reference {
        label: "L3/v2",
        graph: "L3",
        final_vertex: 1,
        probability: constant_rows(&[&[0.5, 0.0, 0.5], &[0.0, 1.0, 0.0], &[0.5, 0.0, 0.5]]),
        time: vec![
            vec![a.clone(), b.clone(), a.clone()],
            vec![bc.clone(), e(|l: f64| 2.0 / l, k(0.0)), bc.clone()],
            vec![a.clone(), b.clone(), a.clone()],
        ],
        excluded: vec![],
    }
}

fn kl31_v1_rows() -> (Vec<Vec<Entry>>, Vec<Vec<Entry>>) {
    let p = constant_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.5, 0.5],
        &[0.0, 0.0, 0.5, 0.5],
    ]);
    let c13 = e(|l: f64| 3.0 / (4.0 * l), k(0.5));
    let c31 = e(|l: f64| 3.0 / (4.0 * l), k(-0.5));
    let c23 = e(|l: f64| l / 2.0 - 1.0 / l, k(0.25));
    let c32 = e(|l: f64| l / 2.0 - 1.0 / l, k(-0.25));
    let d = e(|l: f64| l + 15.0 / (8.0 * l), k(0.0));
    let h = vec![
        vec![e(|l: f64| 3.0 / l, k(0.0)), e(|l: f64| -1.0 / l, k(1.0)), c13.clone(), c13.clone()],
        vec![e(|l: f64| -1.0 / l, k(-1.0)), e(|l: f64| l + 13.0 / (2.0 * l), k(0.0)), c23.clone(), c23.clone()],
        vec![c31.clone(), c32.clone(), d.clone(), d.clone()],
        vec![c31.clone(), c32.clone(), d.clone(), d.clone()],
    ];
    (p, h)
}

fn kl31_v2_rows() -> (Vec<Vec<Entry>>, Vec<Vec<Entry>>) {
    let p = constant_rows(&[&[THIRD, 0.0, THIRD, THIRD], &[0.0, 1.0, 0.0, 0.0], &[THIRD, 0.0, THIRD, THIRD], &[THIRD, 0.0, THIRD, THIRD]]);
    let a = e(|l: f64| l / 18.0 + 8.0 / (9.0 * l), k(0.0));
    let b = e(|l: f64| 1.0 / (3.0 * l), |_: f64| -1.0 / 6.0);
    let bc = e(|l: f64| 1.0 / (3.0 * l), |_: f64| 1.0 / 6.0);
    let h = vec![
        vec![a.clone(), b.clone(), a.clone(), a.clone()],
        vec![bc.clone(), e(|l: f64| 2.0 / l, k(0.0)), bc.clone(), bc.clone()],
        vec![a.clone(), b.clone(), a.clone(), a.clone()],
        vec![a.clone(), b.clone(), a.clone(), a.clone()],
    ];
    (p, h)
}

pub fn kl31_v1() -> Reference {
    let (probability, time) = kl31_v1_rows();
    Reference { label: "KL31/v1", graph: "KL31", final_vertex: 0, probability, time, excluded: vec![] }
}

pub fn s4_v1() -> Reference {
    let (probability, time) = kl31_v1_rows();
    Reference { label: "S4/v1", graph: "S4", final_vertex: 0, probability, time, excluded: vec![] }
}

pub fn kl31_v2() -> Reference {
    let (probability, time) = kl31_v2_rows();
    Reference { label: "KL31/v2", graph: "KL31", final_vertex: 1, probability, time, excluded: vec![] }
}

pub fn s4_v2() -> Reference {
    let (probability, time) = kl31_v2_rows();
    Reference { label: "S4/v2", graph: "S4", final_vertex: 1, probability, time, excluded: vec![] }
}

/// As tabulated, including the (4,1) entry that is excluded from comparison.
pub fn kl31_v3() -> Reference {
    let h = vec![
        vec![
            e(|l: f64| l + 5.0 / l, k(0.0)),
            e(|l: f64| -l / 2.0 - 1.0 / l, k(-0.5)),
            e(k(0.0), k(0.0)),
            e(|l: f64| -l / 2.0, k(-1.0)),
        ],
        vec![
            e(|l: f64| -l / 2.0 - 1.0 / l, k(0.5)),
            e(|l: f64| 5.0 / (2.0 * l) + 7.0 / l, k(0.0)),
            e(|l: f64| -1.0 / l, k(-1.5)),
            e(|l: f64| -l - 1.0 / l, k(0.5)),
        ],
        vec![
            e(k(0.0), k(0.0)),
            e(|l: f64| -1.0 / l, k(1.5)),
            e(|l: f64| 4.0 / l, k(0.0)),
            e(|l: f64| 1.0 / l, k(0.0)),
        ],
        vec![
            e(|l: f64| l / 18.0 + 8.0 / (9.0 * l), k(0.0)),
            e(|l: f64| -l - 1.0 / l, k(-0.5)),
            e(|l: f64| 1.0 / l, k(0.0)),
            e(|l: f64| l + 4.0 / l, k(0.0)),
        ],
    ];
    Reference { label: "KL31/v3", graph: "KL31", final_vertex: 2, probability: identity(4), time: h, excluded: vec![(3, 0)] }
}

pub fn all() -> Vec<Reference> {
    vec![k2_v1(), l3_v1(), l3_v2(), kl31_v1(), kl31_v2(), kl31_v3(), s4_v1(), s4_v2()]
}

pub fn graph(name: &str) -> ctqw_hitting::Graph {
    ctqw_hitting::fixtures::all()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, g)| g)
        .expect("known fixture")
}
