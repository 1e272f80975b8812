use congest_mds::cover::{CoverInstance, SetSystem};
use congest_mds::forest::{decompose, DecompConfig};
use congest_mds::graph::{generate, read_graph, Graph, GraphSpec};
use congest_mds::harness::{bench, ExperimentConfig};
use congest_mds::oracle::{exact_mds, exact_setcover, existence_bound_check, is_dominating, OracleBudget};
use congest_mds::pipeline::{certified_ratio_bound, run_pipeline, PipelineConfig};
use congest_mds::setcover::{audit, solve, solve_set_system};
use congest_mds::sim::{budget, SimConfig};
use num_rational::Ratio;

fn gen(spec: GraphSpec) -> Graph {
    generate(&spec).unwrap().graph
}

fn star() -> Graph {
    gen(GraphSpec::Star { n: 6 })
}

#[test]
fn graph_examples() {
    let p4 = generate(&GraphSpec::Path { n: 4 }).unwrap();
    assert_eq!(p4.graph.edges(), &[(0, 1), (1, 2), (2, 3)]);
    assert_eq!(p4.certificate.bound(), 1);

    let fu = generate(&GraphSpec::ForestUnion { n: 20, alpha: 3, seed: 7 }).unwrap();
    assert_eq!(fu.graph.node_count(), 20);
    assert_eq!(fu.certificate.bound(), 3);
    fu.certificate.verify(&fu.graph).unwrap();

    assert_eq!(p4.graph.max_degree(), 2);
    assert_eq!(star().max_degree(), 5);
    assert_eq!(gen(GraphSpec::SubdividedClique { k: 4 }).max_degree(), 3);

    let p3 = read_graph("3 2 \n 0 1 \n 1 2").unwrap();
    assert_eq!(p3, gen(GraphSpec::Path { n: 3 }));
    let err = read_graph("2 1 \n 1 1").unwrap_err().to_string();
    assert!(err.contains("line 2") && err.contains("self-loop"), "{err}");
}

#[test]
fn budget_examples() {
    assert_eq!(budget(1, 4), 4);
    assert_eq!(budget(1000, 4), 40);
    for k in 0..20 {
        assert_eq!(budget(1 << k, 4), 4 * (k + 1));
    }
}

#[test]
fn cover_examples() {
    let cfg = DecompConfig::new(1, Ratio::from_integer(1)).unwrap();
    let fd = decompose(&star(), &cfg, SimConfig::default()).unwrap().decomposition;
    let inst = CoverInstance::build(&fd);
    assert_eq!(inst.set(0).len(), 6);
    assert_eq!(inst.frequency, 2);

    let two = Ratio::from_integer(2);
    let star_cover = solve(&star(), &inst, two, SimConfig::default()).unwrap();
    assert_eq!(star_cover.chosen, vec![0]);

    let sys = SetSystem::new(2, vec![vec![0, 1], vec![0]]).unwrap();
    let res = solve_set_system(&sys, two, SimConfig::default()).unwrap();
    assert_eq!((res.chosen.clone(), res.phases), (vec![0], 1));
    assert!(audit(&sys, &res, two).holds());

    let budget = OracleBudget::default();
    assert_eq!(exact_setcover(&sys, &budget).unwrap().size, 1);
    let singletons = SetSystem::new(7, (0..7).map(|e| vec![e]).collect()).unwrap();
    assert_eq!(exact_setcover(&singletons, &budget).unwrap().size, 7);
    assert_eq!(exact_setcover(&inst.to_set_system(), &budget).unwrap().size, 1);
}

#[test]
fn oracle_examples() {
    let budget = OracleBudget::default();
    let k5 = gen(GraphSpec::Complete { n: 5 });
    let c4 = gen(GraphSpec::Cycle { n: 4 });
    let p7 = gen(GraphSpec::Path { n: 7 });
    assert_eq!(exact_mds(&k5, &budget).unwrap().len(), 1);
    assert_eq!(exact_mds(&c4, &budget).unwrap().len(), 2);
    let m = exact_mds(&p7, &budget).unwrap();
    assert_eq!(m.len(), 3);
    assert_eq!(is_dominating(&p7, &m), Ok(true));
    assert_eq!(is_dominating(&k5, &[3]), Ok(true));
    assert_eq!(is_dominating(&c4, &[0]), Ok(false));

    let cfg = DecompConfig::new(1, Ratio::from_integer(1)).unwrap();
    let fd = decompose(&star(), &cfg, SimConfig::default()).unwrap().decomposition;
    let check = existence_bound_check(&star(), &fd, &[0]);
    assert!(check.passed());
    assert_eq!(check.witness, vec![0]);
    assert_eq!(check.threshold_bound, 4);
}

#[test]
fn pipeline_examples() {
    let out = run_pipeline(&star(), &PipelineConfig::new(1)).unwrap();
    assert_eq!(out.result.dominating_set, vec![0]);
    let out = run_pipeline(&Graph::edgeless(4), &PipelineConfig::new(3)).unwrap();
    assert_eq!(out.result.dominating_set, vec![0, 1, 2, 3]);

    let g = gen(GraphSpec::ForestUnion { n: 18, alpha: 2, seed: 11 });
    let out = run_pipeline(&g, &PipelineConfig::new(2)).unwrap();
    let opt = exact_mds(&g, &OracleBudget::default()).unwrap().len();
    assert!(is_dominating(&g, &out.result.dominating_set).unwrap());
    assert!(out.result.size <= 98 * opt);
    println!("forest-union-18-a2-s11: {} vs optimum {opt}", out.result.size);

    let (one, two) = (Ratio::from_integer(1), Ratio::from_integer(2));
    assert_eq!(certified_ratio_bound(1, one, two), Ratio::from_integer(32));
    assert_eq!(certified_ratio_bound(2, one, two), Ratio::from_integer(98));
}

#[test]
fn bench_scaling_sweep() {
    let specs = (4..=12).map(|e| GraphSpec::ForestUnion { n: 1 << e, alpha: 2, seed: 7 }).collect();
    let table = bench(&ExperimentConfig::new(specs, PipelineConfig::new(2)));
    assert_eq!(table.failures().count(), 0);
    let rounds: Vec<u32> = table.rows.iter().map(|r| r.rounds.unwrap()).collect();
    assert!(rounds.windows(2).all(|w| w[0] <= w[1]), "{rounds:?}");
    let per_log: Vec<f64> = table.rows.iter().map(|r| r.rounds_per_log2n.unwrap()).collect();
    assert!(per_log.iter().all(|&c| c <= per_log[0]), "{per_log:?}");
}

#[test]
fn bench_with_oracle_respects_bound() {
    let specs = (0..12).map(|i| GraphSpec::ForestUnion { n: 10 + i, alpha: 1 + i % 3, seed: i as u64 }).collect();
    let mut exp = ExperimentConfig::new(specs, PipelineConfig::new(1));
    exp.oracle = true;
    let table = bench(&exp);
    for row in &table.rows {
        let (ratio, bound) = (row.ratio.unwrap(), row.certified_bound.unwrap());
        assert!(ratio <= bound, "{}: {ratio} > {bound}", row.graph_id);
        assert_eq!(row.valid, Some(true));
    }
}
