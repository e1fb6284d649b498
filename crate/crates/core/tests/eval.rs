use std::time::Instant;

use privcode_core::eval::{
    evaluate, evaluate_with, pass_at_k, run_candidate, BenchmarkProblem, CandidateResult, CandidateRunner,
    CandidateStatus, EvalConfig, EvalError, SandboxConfig, TaskCompletions,
};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact binomial coefficient.
fn choose(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

#[test]
fn pass_at_k_matches_binomial_ratio_exhaustively() {
    for n in 1..=15u64 {
        for c in 0..=n {
            for k in 1..=n {
                let oracle = 1.0 - choose(n - c, k) as f64 / choose(n, k) as f64;
                let got = pass_at_k(n as usize, c as usize, k as usize).unwrap();
                assert!((got - oracle).abs() <= 1e-9, "n={n} c={c} k={k}: {got} vs {oracle}");
            }
        }
    }
}

#[test]
fn pass_at_one_is_fraction_correct() {
    for n in 1..=200usize {
        for c in 0..=n {
            assert!((pass_at_k(n, c, 1).unwrap() - c as f64 / n as f64).abs() <= 1e-12);
        }
    }
}

#[test]
fn pass_at_k_is_monotone() {
    for n in 1..=30usize {
        for c in 0..=n {
            for k in 1..=n {
                let v = pass_at_k(n, c, k).unwrap();
                assert!((0.0..=1.0).contains(&v));
                if c < n {
                    assert!(pass_at_k(n, c + 1, k).unwrap() >= v - 1e-15);
                }
                if k < n {
                    assert!(pass_at_k(n, c, k + 1).unwrap() >= v - 1e-15);
                }
            }
        }
    }
}

#[test]
fn pass_at_k_agrees_with_subset_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let trials = 100_000;
    for (n, c, k) in [(10, 3, 1), (10, 3, 5), (20, 1, 10), (15, 7, 3), (100, 5, 10)] {
        let p = pass_at_k(n, c, k).unwrap();
        // Samples 0..c are the correct ones.
        let hits = (0..trials)
            .filter(|_| sample(&mut rng, n, k).iter().any(|i| i < c))
            .count() as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits / trials as f64 - p).abs() <= 3.0 * sigma + 1e-12, "n={n} c={c} k={k}");
    }
}

fn problem(id: &str) -> BenchmarkProblem {
    BenchmarkProblem {
        task_id: id.into(),
        context: "def add(a, b):\n".into(),
        test_code: "assert add(2, 3) == 5\n".into(),
        oracle_api_ids: vec![],
        difficulty_api_count: 0,
    }
}

fn python(timeout_ms: u64) -> SandboxConfig {
    SandboxConfig {
        timeout_ms,
        ..SandboxConfig::default()
    }
}

#[test]
fn sandbox_statuses() {
    let cfg = python(5_000);
    let p = problem("t");
    let run = |c: &str| run_candidate(&p, 0, c, &cfg).unwrap().status;
    assert_eq!(run("    return a + b"), CandidateStatus::Pass);
    assert_eq!(run("    return a - b"), CandidateStatus::Fail);
    assert_eq!(run("    return (("), CandidateStatus::Fail);
    assert_eq!(
        run("    import os, signal\n    os.kill(os.getpid(), signal.SIGKILL)"),
        CandidateStatus::Crash
    );
}

#[test]
fn infinite_loop_times_out_near_limit() {
    let cfg = python(2_000);
    let start = Instant::now();
    let r = run_candidate(&problem("t"), 3, "    while True:\n        pass", &cfg).unwrap();
    let outer = start.elapsed().as_millis() as u64;
    assert_eq!(r.status, CandidateStatus::Timeout);
    assert_eq!(r.sample_index, 3);
    assert!(r.wall_ms >= 2_000 && r.wall_ms <= 2_500, "wall {}", r.wall_ms);
    assert!(outer <= 3_000);
}

#[test]
fn misconfigured_sandbox_is_a_setup_error() {
    let missing = SandboxConfig {
        interpreter_cmd: "/nonexistent/interp {file}".into(),
        ..SandboxConfig::default()
    };
    assert!(matches!(missing.check(), Err(EvalError::Setup(_))));
    // Per-candidate spawn failure is a crash, not a setup error.
    assert_eq!(
        run_candidate(&problem("t"), 0, "", &missing).unwrap().status,
        CandidateStatus::Crash
    );
    let no_placeholder = SandboxConfig {
        interpreter_cmd: "python3".into(),
        ..SandboxConfig::default()
    };
    assert!(matches!(no_placeholder.check(), Err(EvalError::Setup(_))));
    assert!(matches!(
        run_candidate(&problem("t"), 0, "", &no_placeholder),
        Err(EvalError::Setup(_))
    ));
    let completions = vec![TaskCompletions {
        task_id: "t".into(),
        completions: vec!["    return a + b".into()],
        prompted_apis: vec![],
        retrieved: vec![],
    }];
    let cfg = EvalConfig {
        k_set: vec![1],
        sandbox: missing,
        ..EvalConfig::default()
    };
    assert!(matches!(evaluate(&[problem("t")], &completions, &cfg), Err(EvalError::Setup(_))));
}

#[test]
fn evaluate_counts_three_of_ten() {
    let mut samples: Vec<String> = vec!["    return a + b".into(); 3];
    samples.extend(vec!["    return a * b".to_string(); 7]);
    let completions = vec![TaskCompletions {
        task_id: "t".into(),
        completions: samples,
        prompted_apis: vec!["add".into()],
        retrieved: vec![],
    }];
    let cfg = EvalConfig {
        k_set: vec![1, 10],
        sandbox: SandboxConfig {
            workers: 4,
            ..python(10_000)
        },
        ..EvalConfig::default()
    };
    let report = evaluate(&[problem("t")], &completions, &cfg).unwrap();
    assert_eq!((report.per_problem[0].n, report.per_problem[0].c), (10, 3));
    assert!((report.pass_at_k["1"] - 0.3).abs() < 1e-12);
    assert_eq!(report.pass_at_k["10"], 1.0);
    assert_eq!(report.classification_counts.passed, 3);
    assert_eq!(report.classification_counts.invalid, 7);
    assert!(report.retrieval.is_none());
}

/// Statuses fixed per (task, sample) instead of running anything.
struct Pinned(fn(&str, usize) -> CandidateStatus);

impl CandidateRunner for Pinned {
    fn run(&self, p: &BenchmarkProblem, i: usize, _: &str) -> Result<CandidateResult, EvalError> {
        Ok(CandidateResult {
            task_id: p.task_id.clone(),
            sample_index: i,
            status: (self.0)(&p.task_id, i),
            wall_ms: 0,
        })
    }
}

fn completions(ids: &[&str], n: usize) -> Vec<TaskCompletions> {
    ids.iter()
        .map(|id| TaskCompletions {
            task_id: id.to_string(),
            completions: (0..n).map(|i| format!("    kf.iscontain({i})")).collect(),
            prompted_apis: vec!["KnowledgeFrame.iscontain".into()],
            retrieved: vec!["x".into(), "y".into()],
        })
        .collect()
}

#[test]
fn macro_average_and_tallies() {
    let problems = vec![
        BenchmarkProblem {
            oracle_api_ids: vec!["x".into()],
            difficulty_api_count: 1,
            ..problem("a")
        },
        BenchmarkProblem {
            oracle_api_ids: vec!["x".into(), "z".into()],
            difficulty_api_count: 2,
            ..problem("b")
        },
    ];
    let cfg = EvalConfig {
        k_set: vec![1],
        ..EvalConfig::default()
    };
    let runner = Pinned(|task, _| if task == "b" { CandidateStatus::Pass } else { CandidateStatus::Fail });
    let report = evaluate_with(&problems, &completions(&["a", "b"], 4), &cfg, &runner, 3).unwrap();
    assert_eq!(report.pass_at_k["1"], 0.5);
    assert_eq!(report.classification_counts.passed, 4);
    assert_eq!(report.classification_counts.incorrect, 4);
    let retrieval = report.retrieval.clone().unwrap();
    assert_eq!(retrieval.recall_at_k, 0.75);
    assert_eq!(retrieval.accuracy, 0.5);
    let again = evaluate_with(&problems, &completions(&["a", "b"], 4), &cfg, &runner, 1).unwrap();
    assert_eq!(report, again);

    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["pass_at_k"]["1"], 0.5);
    assert_eq!(json["per_problem"][0]["classification_counts"]["incorrect"], 4);

    let all_fail = Pinned(|_, _| CandidateStatus::Timeout);
    let cfg = EvalConfig {
        k_set: vec![1, 2, 4],
        ..EvalConfig::default()
    };
    let report = evaluate_with(&problems, &completions(&["a", "b"], 4), &cfg, &all_fail, 2).unwrap();
    assert!(report.pass_at_k.values().all(|&v| v == 0.0));
}

#[test]
fn missing_samples_name_the_task() {
    let cfg = EvalConfig {
        k_set: vec![1, 5],
        ..EvalConfig::default()
    };
    let runner = Pinned(|_, _| CandidateStatus::Pass);
    let mut comps = completions(&["a"], 5);
    comps.extend(completions(&["b"], 4));
    match evaluate_with(&[problem("a"), problem("b")], &comps, &cfg, &runner, 1) {
        Err(EvalError::MissingSamples { task_id, have, need }) => {
            assert_eq!((task_id.as_str(), have, need), ("b", 4, 5))
        }
        other => panic!("unexpected {other:?}"),
    }
    match evaluate_with(&[problem("a"), problem("c")], &completions(&["a"], 5), &cfg, &runner, 1) {
        Err(EvalError::MissingSamples { task_id, .. }) => assert_eq!(task_id, "c"),
        other => panic!("unexpected {other:?}"),
    }
}
