use pfci::graph::default_names;
use pfci::metrics::{aggregate, confusion_counts, f1, mcc, shd, shd_skeleton, ConfusionCounts, MetricsReport, Summary};
use pfci::{Mark, MixedGraph, Skeleton};
use proptest::prelude::*;
use Mark::*;

fn mixed(p: usize, edges: &[(usize, usize, Mark, Mark)]) -> MixedGraph {
    let mut g = MixedGraph::empty(default_names(p));
    for &(u, v, mu, mv) in edges {
        g.add_edge(u, v, mu, mv).unwrap();
    }
    g
}

#[test]
fn shd_examples() {
    let a = mixed(3, &[(0, 1, Tail, Arrow), (1, 2, Circle, Circle)]);
    assert_eq!(shd(&a, &a).unwrap(), 0);
    assert_eq!(shd(&a, &mixed(3, &[])).unwrap(), 2);
    // A reversed edge and a changed circle each cost one.
    let b = mixed(3, &[(0, 1, Arrow, Tail), (1, 2, Circle, Arrow)]);
    assert_eq!(shd(&a, &b).unwrap(), 2);
    let c = mixed(3, &[(0, 1, Tail, Arrow), (0, 2, Circle, Circle)]);
    assert_eq!(shd(&a, &c).unwrap(), 2);
    assert!(shd(&a, &mixed(4, &[])).is_err());
}

#[test]
fn confusion_and_scores() {
    let names = default_names(5);
    let truth = Skeleton::from_edges(names.clone(), &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let est = Skeleton::from_edges(names, &[(0, 1), (1, 2), (3, 4)]).unwrap();
    let c = confusion_counts(&est, &truth).unwrap();
    assert_eq!(c, ConfusionCounts { tp: 2, fp: 1, tn: 6, fn_: 1 });
    assert_eq!(c.total(), 10);
    assert!((f1(&c).value - 2.0 / 3.0).abs() < 1e-15);
    assert!((mcc(&c).value - 11.0 / 21.0).abs() < 1e-15);
    assert_eq!(shd_skeleton(&est, &truth).unwrap(), 2);
}

#[test]
fn degenerate_scores_are_flagged() {
    let empty = ConfusionCounts { tn: 10, ..Default::default() };
    assert_eq!((f1(&empty).value, f1(&empty).degenerate), (1.0, true));
    assert_eq!((mcc(&empty).value, mcc(&empty).degenerate), (0.0, true));
    let all_wrong = ConfusionCounts { fp: 3, fn_: 2, tn: 5, tp: 0 };
    assert!(!f1(&all_wrong).degenerate);
    assert_eq!(f1(&all_wrong).value, 0.0);
}

#[test]
fn summary_uses_sample_sd() {
    let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(s.mean, 2.5);
    assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(Summary::of(&[7.0]).sd, 0.0);
    assert!(Summary::of(&[]).mean.is_nan());
}

fn report(p: usize, method: &str, replicate: usize, shd: usize, runtime_s: f64) -> MetricsReport {
    MetricsReport {
        p,
        method: method.into(),
        replicate,
        n: 100,
        shd,
        f1: 0.5,
        mcc: 0.25,
        f1_degenerate: false,
        mcc_degenerate: false,
        tp: 1,
        fp: 1,
        tn: 1,
        fn_: 1,
        edges_ns: 0,
        edges_refined: 0,
        edges_final: 0,
        lambda: None,
        ms_stage1: 0,
        ms_stage2: 0,
        runtime_s,
    }
}

#[test]
fn aggregate_groups_by_p_and_method() {
    let rows = vec![
        report(10, "pfci", 0, 4, 1.0),
        report(10, "pfci", 1, 6, 3.0),
        report(10, "fci", 0, 9, 2.0),
        report(20, "pfci", 0, 1, 0.5),
    ];
    let agg = aggregate(&rows);
    assert_eq!(agg.len(), 3);
    assert_eq!((agg[0].p, agg[0].method.as_str()), (10, "pfci"));
    assert_eq!(agg[0].shd_mean, 5.0);
    assert!((agg[0].shd_sd - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(agg[0].runtime_mean_s, 2.0);
    assert_eq!((agg[1].method.as_str(), agg[1].shd_mean, agg[1].shd_sd), ("fci", 9.0, 0.0));
    assert_eq!(agg[2].p, 20);
}

const MARKS: [Mark; 3] = [Tail, Arrow, Circle];

fn graph_strategy(p: usize) -> impl Strategy<Value = MixedGraph> {
    proptest::collection::vec(0u8..12, p * (p - 1) / 2).prop_map(move |codes| {
        let mut g = MixedGraph::empty(default_names(p));
        let mut k = 0;
        for u in 0..p {
            for v in u + 1..p {
                let c = codes[k];
                k += 1;
                if c < 9 {
                    g.add_edge(u, v, MARKS[(c % 3) as usize], MARKS[(c / 3) as usize]).unwrap();
                }
            }
        }
        g
    })
}

fn relabel(g: &MixedGraph, perm: &[usize]) -> MixedGraph {
    let mut out = MixedGraph::empty(g.names().to_vec());
    for (u, v, mu, mv) in g.edges() {
        out.add_edge(perm[u], perm[v], mu, mv).unwrap();
    }
    out
}

proptest! {
    #[test]
    fn shd_is_a_metric(a in graph_strategy(7), b in graph_strategy(7), c in graph_strategy(7)) {
        prop_assert_eq!(shd(&a, &b).unwrap(), shd(&b, &a).unwrap());
        prop_assert_eq!(shd(&a, &b).unwrap() == 0, a == b);
        prop_assert!(shd(&a, &c).unwrap() <= shd(&a, &b).unwrap() + shd(&b, &c).unwrap());
        prop_assert!(shd_skeleton(&a.skeleton(), &b.skeleton()).unwrap() <= shd(&a, &b).unwrap());
    }

    #[test]
    fn shd_ignores_relabeling(a in graph_strategy(6), b in graph_strategy(6), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        prop_assert_eq!(shd(&a, &b).unwrap(), shd(&relabel(&a, &perm), &relabel(&b, &perm)).unwrap());
    }

    #[test]
    fn identical_skeletons_score_one(g in graph_strategy(7)) {
        let sk = g.skeleton();
        let c = confusion_counts(&sk, &sk).unwrap();
        prop_assert_eq!(c.fp + c.fn_, 0);
        if c.tp > 0 {
            prop_assert_eq!(f1(&c).value, 1.0);
        }
        if c.tp > 0 && c.tn > 0 {
            prop_assert_eq!(mcc(&c).value, 1.0);
        }
    }
}
