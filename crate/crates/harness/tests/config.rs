use cscgd_core::{LogPolicy, Regime, UpdateMode};
use cscgd_harness::config::{ExperimentConfig, GammaRule, GammaSetting, OracleMode, SolverSection};
use cscgd_harness::problems::InstanceSpec;
use cscgd_queuing::presets::paper_ex1;
use cscgd_queuing::InstanceConfig;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = InstanceSpec> {
    prop_oneof![
        prop::sample::select(vec!["paper-ex1", "paper-ex3", "toy-quadratic", "mm1"]).prop_map(InstanceSpec::preset),
        (0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0)
            .prop_map(|(lambda, r, h)| InstanceSpec::Inline(InstanceConfig::Mm1 { lambda, r, h })),
        (0.01f64..1.0).prop_map(|d| {
            let mut w = paper_ex1();
            w.d_max = d;
            InstanceSpec::Inline(InstanceConfig::Wired(w))
        }),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        instance(),
        (0.5f64..0.99, 0.01f64..1.0, 0.0f64..1.0),
        prop::bool::ANY,
        2usize..1_000_000,
        prop_oneof![
            (0.0f64..10.0).prop_map(GammaSetting::Value),
            Just(GammaSetting::Rule(GammaRule::ZeroViolation))
        ],
        prop::option::of(0.5f64..100.0),
        prop::sample::select(vec![UpdateMode::Full, UpdateMode::Unconstrained, UpdateMode::TrackingOnly]),
        prop_oneof![Just(LogPolicy::Auto), Just(LogPolicy::Every), (2usize..5000).prop_map(LogPolicy::LogSpaced)],
        prop::collection::btree_set(0u64..=i64::MAX as u64, 1..20),
        prop::option::of(prop::collection::vec(-10.0f64..10.0, 1..4)),
        2usize..1_000_000,
        prop::bool::ANY,
    )
        .prop_map(|(inst, (a, fb, fc), constant, horizon, gamma, c_ell, mode, log, seeds, x1, eval, off)| {
            // 1 > a >= c >= b > 0
            let b = a * fb.max(1e-3);
            let c = b + (a - b) * fc;
            let mut cfg = ExperimentConfig::new(
                inst,
                SolverSection {
                    a,
                    b,
                    c,
                    regime: if constant { Regime::Constant } else { Regime::Diminishing },
                    horizon,
                    gamma,
                    c_ell,
                    mode,
                    log,
                    initial_point: x1,
                },
                seeds.into_iter().collect(),
            );
            cfg.eval_samples = eval;
            if off {
                cfg.oracle = OracleMode::Off;
            }
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn canonical_form_round_trips(cfg in config()) {
        let text = cfg.canonical().unwrap();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.canonical().unwrap(), text);
        prop_assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
    }
}

#[test]
fn inline_instance_table_parses() {
    let text = r#"
seeds = [0]
oracle = "off"

[instance]
example = "mm1"
lambda = 2.0
r = 1.0
h = 0.5

[solver]
a = 0.1
b = 0.1
c = 0.1
regime = "diminishing"
horizon = 1000
log = { kind = "log_spaced", points = 50 }
"#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(
        cfg.instance,
        InstanceSpec::Inline(InstanceConfig::Mm1 {
            lambda: 2.0,
            r: 1.0,
            h: 0.5
        })
    );
    assert_eq!(cfg.solver.log, LogPolicy::LogSpaced(50));
    assert_eq!(cfg.instance.label(), "inline-mm1");
}

#[test]
fn malformed_files_are_parse_errors() {
    assert!(ExperimentConfig::parse("seeds = [0]\n[solver]\na = 1").is_err());
    assert!(ExperimentConfig::parse("this is not toml").is_err());
    let mut cfg = ExperimentConfig::parse(&text_with_seed(0)).unwrap();
    cfg.seeds = vec![u64::MAX];
    assert!(cfg.validate().is_err());
}

fn text_with_seed(seed: u64) -> String {
    format!("seeds = [{seed}]\n[instance]\npreset = \"mm1\"\n[solver]\na = 0.5\nb = 0.25\nc = 0.25\nregime = \"constant\"\nhorizon = 10\n")
}
