use dce::data::{generate_synthetic, DomainTask, FeatureRecord, FeatureSet, GenConfig, TaskStream};
use dce::engine::{
    load_checkpoint, run_dce, run_domain_specific_baseline, run_prototype_baseline,
    run_shared_baseline, save_checkpoint, DceModel, FinalModel, RunConfig,
};
use dce::eval::cpd_summary;
use dce::model::train_expert_group;
use dce::numerics::RngState;
use dce::Error;

fn small_stream(seed: u64, domains: usize) -> TaskStream {
    generate_synthetic(&GenConfig {
        num_domains: domains,
        num_classes: 6,
        dim: 8,
        n_max: 200,
        rho: 10.0,
        test_per_class: 20,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn quick_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig {
        k: 32,
        seed,
        ..Default::default()
    };
    cfg.train.epochs_stage1 = 5;
    cfg.train.epochs_stage2 = 3;
    cfg
}

#[test]
fn pool_grows_and_old_experts_stay_frozen() {
    let stream = small_stream(7, 3);
    let mut model = DceModel::new(quick_config(7)).unwrap();
    let mut rng = RngState::new(7);
    let mut history = Vec::new();
    for (b, task) in stream.tasks.iter().enumerate() {
        model.learn_task(task, &mut rng).unwrap();
        assert_eq!(model.experts.len(), 3 * (b + 1));
        assert_eq!(model.selector().unwrap().output_dim(), 3 * (b + 1));
        assert_eq!(model.repo.num_domains(), b + 1);
        for (old, now) in history.iter().zip(&model.experts) {
            assert_eq!(old, now);
        }
        history = model.experts.clone();
    }
    let tasks: Vec<(usize, f64)> = model.experts.iter().map(|e| (e.task, e.alpha)).collect();
    assert_eq!(tasks[..4], [(1, 0.0), (1, 1.0), (1, 2.0), (2, 0.0)]);
}

#[test]
fn four_alphas_grow_pool_by_four() {
    let stream = small_stream(3, 2);
    let cfg = RunConfig {
        alphas: vec![0.0, 1.0, 2.0, 3.0],
        ..quick_config(3)
    };
    let run = run_dce(&stream, &cfg).unwrap();
    let FinalModel::Dce(model) = run.model else {
        panic!()
    };
    assert_eq!(model.experts.len(), 8);
    assert_eq!(run.ledger.snapshots.len(), 2);
}

#[test]
fn single_task_run() {
    let stream = small_stream(1, 1);
    let run = run_dce(&stream, &quick_config(1)).unwrap();
    let FinalModel::Dce(model) = &run.model else {
        panic!()
    };
    assert_eq!(model.experts.len(), 3);
    assert_eq!(model.selector().unwrap().output_dim(), 3);
    assert_eq!(run.ledger.snapshots.len(), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let stream = small_stream(7, 3);
    let cfg = quick_config(7);
    for run in [
        run_dce,
        run_shared_baseline,
        run_domain_specific_baseline,
        run_prototype_baseline,
    ] {
        let a = run(&stream, &cfg).unwrap().report().unwrap().to_json();
        let b = run(&stream, &cfg).unwrap().report().unwrap().to_json();
        assert_eq!(a, b);
    }
    let other = run_dce(&stream, &quick_config(8))
        .unwrap()
        .report()
        .unwrap()
        .to_json();
    assert_ne!(
        other,
        run_dce(&stream, &cfg).unwrap().report().unwrap().to_json()
    );
}

#[test]
fn shared_baseline_on_one_task_is_a_plain_expert() {
    let stream = small_stream(5, 1);
    let cfg = quick_config(5);
    let run = run_shared_baseline(&stream, &cfg).unwrap();
    let FinalModel::Shared(shared) = run.model else {
        panic!()
    };
    let mut rng = RngState::new(5).fork();
    let expert = train_expert_group(&stream.tasks[0], &cfg.train, &[0.0], &mut rng)
        .unwrap()
        .remove(0);
    assert_eq!(shared.params, expert.params);
}

#[test]
fn domain_routing_on_separated_clusters() {
    let stream = generate_synthetic(&GenConfig {
        num_domains: 3,
        num_classes: 6,
        dim: 8,
        n_max: 200,
        rho: 10.0,
        test_per_class: 30,
        noise_sigma: 0.5,
        drift_strength: 8.0,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let run = run_domain_specific_baseline(&stream, &quick_config(2)).unwrap();
    let FinalModel::Domain(model) = run.model else {
        panic!()
    };
    let mut hits = 0;
    let mut total = 0;
    for (b, task) in stream.tasks.iter().enumerate() {
        for r in task.test.records() {
            hits += usize::from(model.route(&r.features) == b);
            total += 1;
        }
    }
    let acc = hits as f64 / total as f64;
    assert!(acc >= 0.95, "routing accuracy {acc}");

    let single = run_domain_specific_baseline(&small_stream(2, 1), &quick_config(2)).unwrap();
    let FinalModel::Domain(one) = single.model else {
        panic!()
    };
    assert_eq!(one.route(&[100.0; 8]), 0);
}

fn task_from(records: Vec<FeatureRecord>, d: usize, c: usize) -> DomainTask {
    let set = FeatureSet::from_records(d, c, records).unwrap();
    DomainTask::new(1, "t", set.clone(), set)
}

#[test]
fn prototypes_from_single_samples() {
    let records = vec![
        FeatureRecord {
            label: 0,
            features: vec![1.0, 0.0],
        },
        FeatureRecord {
            label: 1,
            features: vec![0.0, 2.0],
        },
        FeatureRecord {
            label: 2,
            features: vec![-1.0, -1.0],
        },
    ];
    let task = task_from(records.clone(), 2, 3);
    let stream = TaskStream {
        dim: 2,
        num_classes: 3,
        tasks: vec![task],
        thresholds: Default::default(),
    };
    let run = run_prototype_baseline(&stream, &RunConfig::default()).unwrap();
    let FinalModel::Prototype(model) = run.model else {
        panic!()
    };
    for r in &records {
        assert_eq!(model.prototype(r.label).unwrap(), r.features);
        assert_eq!(model.predict(&r.features).unwrap(), r.label);
    }
    assert_eq!(run.ledger.snapshots[0].a_b, 1.0);
}

#[test]
fn insufficient_covariance_data_is_reported() {
    let mut rng = RngState::new(0);
    let records = (0..12)
        .map(|i| FeatureRecord {
            label: i % 4,
            features: vec![rng.gaussian(), rng.gaussian()],
        })
        .collect();
    let stream = TaskStream {
        dim: 2,
        num_classes: 4,
        tasks: vec![task_from(records, 2, 4)],
        thresholds: Default::default(),
    };
    let err = run_dce(&stream, &quick_config(0)).unwrap_err();
    assert!(matches!(err, Error::InsufficientCovarianceData { .. }));
    assert!(err
        .to_string()
        .starts_with("insufficient data for domain covariance"));
    let lowered = RunConfig {
        cov_min_samples: 3,
        ..quick_config(0)
    };
    assert!(run_dce(&stream, &lowered).is_ok());
}

#[test]
fn checkpoint_roundtrip_predicts_identically() {
    let stream = small_stream(4, 2);
    let run = run_dce(&stream, &quick_config(4)).unwrap();
    let FinalModel::Dce(model) = run.model else {
        panic!()
    };
    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(&model, dir.path()).unwrap();
    let back = load_checkpoint(dir.path()).unwrap();
    assert_eq!(back.experts, model.experts);
    assert_eq!(back.selector, model.selector);
    assert_eq!(back.repo, model.repo);
    assert_eq!(back.tasks_seen(), 2);
    for r in stream.tasks[1].test.records() {
        assert_eq!(
            back.fused_logits(&r.features).unwrap(),
            model.fused_logits(&r.features).unwrap()
        );
    }
}

#[test]
fn empty_stream_rejected() {
    let stream = TaskStream {
        dim: 2,
        num_classes: 2,
        tasks: Vec::new(),
        thresholds: Default::default(),
    };
    assert!(run_dce(&stream, &RunConfig::default()).is_err());
    assert!(run_prototype_baseline(&stream, &RunConfig::default()).is_err());
}

#[test]
fn paradigm_trends_on_default_benchmark() {
    let stream = generate_synthetic(&GenConfig::default()).unwrap();
    let cfg = RunConfig::default();
    let shared = cpd_summary(&run_shared_baseline(&stream, &cfg).unwrap().ledger).unwrap();
    let domain = cpd_summary(&run_domain_specific_baseline(&stream, &cfg).unwrap().ledger).unwrap();
    let dce = cpd_summary(&run_dce(&stream, &cfg).unwrap().ledger).unwrap();
    assert!(
        shared.many.unwrap().mean > 0.0,
        "shared head should forget many-shot classes"
    );
    let few_domain = domain.few.unwrap().mean;
    let few_dce = dce.few.unwrap().mean;
    assert!(
        few_domain > few_dce,
        "few-shot CPD: domain {few_domain} vs dce {few_dce}"
    );
}
