use std::path::PathBuf;

use proptest::prelude::*;
use widomlab_cli::config::{ConfigError, ExperimentConfig, ExperimentKind};
use widomlab_cli::descriptors::Grid;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "conf") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg =
            ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = ExperimentConfig::parse(&cfg.to_string()).unwrap();
        assert_eq!(again, cfg, "{}", path.display());
        assert_eq!(again.to_string(), cfg.to_string());
        seen += 1;
    }
    assert!(seen >= 8, "only {seen} configs found");
}

#[test]
fn unknown_keys_are_named_with_their_line() {
    let text = "[experiment]\nkind = lemma51\n\n[numerics]\nlength = 4\nlenght = 5\n";
    match ExperimentConfig::parse(text).unwrap_err() {
        ConfigError::UnknownKey { line, key } => {
            assert_eq!(line, 6);
            assert_eq!(key, "numerics.lenght");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn empty_r_grid_is_config_invalid() {
    for grid in ["", "5:50:log:0"] {
        let text = format!(
            "[experiment]\nkind = trace2\n[domain]\nomega = box half=1\ngamma = box half=1\n[grid]\nr = {grid}\n"
        );
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(err.key(), Some("grid.r"), "{err}");
    }
}

#[test]
fn kind_can_come_from_the_command_line() {
    let text = "[numerics]\nlength = 3\n";
    let cfg = ExperimentConfig::parse_as(text, Some(ExperimentKind::Lemma51)).unwrap();
    assert_eq!(cfg.kind, ExperimentKind::Lemma51);
    assert!(ExperimentConfig::parse(text).is_err());
    let clash = "[experiment]\nkind = fit\n";
    assert!(ExperimentConfig::parse_as(clash, Some(ExperimentKind::Lemma51)).is_err());
}

#[test]
fn cross_key_checks() {
    let bad_dims = "[experiment]\nkind = trace2\n[domain]\nomega = box half=1\ngamma = box half=1,1\n[grid]\nr = 1\n";
    assert_eq!(
        ExperimentConfig::parse(bad_dims).unwrap_err().key(),
        Some("domain.gamma")
    );
    let bad_len = "[experiment]\nkind = fit\n[grid]\nr = 1,2,3\n[fit]\nvalues = 1,2\n";
    assert_eq!(
        ExperimentConfig::parse(bad_len).unwrap_err().key(),
        Some("fit.values")
    );
    let long = "[experiment]\nkind = lemma51\n[numerics]\nlength = 10\n";
    assert_eq!(
        ExperimentConfig::parse(long).unwrap_err().key(),
        Some("numerics.length")
    );
}

fn arb_grid() -> impl Strategy<Value = Grid> {
    prop_oneof![
        prop::collection::vec(1e-3f64..1e4, 1..8).prop_map(Grid::List),
        (1e-3f64..10.0, 1.0f64..100.0, 2usize..40, any::<bool>()).prop_map(
            |(min, span, count, log)| Grid::Range {
                min,
                max: min * span,
                spacing: if log {
                    widomlab_cli::descriptors::Spacing::Log
                } else {
                    widomlab_cli::descriptors::Spacing::Linear
                },
                count,
            }
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_configs_round_trip(
        seed in any::<u64>(),
        grid in arb_grid(),
        half in prop::collection::vec(0.1f64..5.0, 1..4),
        radius in 0.1f64..5.0,
        tol in prop::option::of(1e-6f64..1.0),
        timing in prop::option::of(any::<bool>()),
    ) {
        let d = half.len();
        let mut cfg = ExperimentConfig::empty(ExperimentKind::Trace2);
        cfg.seed = seed;
        cfg.omega = Some(widomlab::Domain::centered_box(&half).unwrap());
        cfg.gamma = Some(widomlab::Domain::ball(vec![0.0; d], radius).unwrap());
        cfg.r_grid = Some(grid);
        cfg.relative_tolerance = tol;
        cfg.timing = timing;
        let text = cfg.to_string();
        let parsed = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(parsed, cfg);
    }

    #[test]
    fn grid_text_round_trips(grid in arb_grid()) {
        let back: Grid = grid.to_string().parse().unwrap();
        prop_assert_eq!(&back, &grid);
        let v = grid.values();
        prop_assert_eq!(v.len(), grid.len());
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]) || matches!(grid, Grid::List(_)));
    }

    #[test]
    fn parser_never_panics(text in "[ -~\n]{0,200}") {
        let _ = ExperimentConfig::parse(&text);
    }
}
