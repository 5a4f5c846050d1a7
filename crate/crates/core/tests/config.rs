use partial_transfer::config::*;
use partial_transfer::montecarlo::{Metric, SweepVariable};
use partial_transfer::pipeline::TransferMethod;
use partial_transfer::Error;
use toml::Value;

const BASE: &str = r#"
[ground_truth]
s = 5
s1 = 5
s2 = 5
w1_norm = 1.0
q1_norm = 1.0
q2_norm = 1.0
sigma1 = 0.5
sigma2 = 0.5

[learner]
p = 5
p1 = 5
p2 = 5
n1 = 100
n2 = 50

[experiment]
method = "option_b"
replicates = 10

[sweep]
variable = "p2"
start = 52
stop = 120
step = 2
"#;

fn base() -> toml::Table {
    parse_table(BASE).unwrap()
}

#[test]
fn every_preset_resolves() {
    let expected = [("fig1a", 8), ("fig1b", 8), ("fig1c", 2), ("tightness", 4)];
    for (name, curves) in expected {
        let table = parse_table(presets::get(name).unwrap()).unwrap();
        let runs = resolve_runs(&table).unwrap();
        assert_eq!(runs.len(), curves, "{name}");
        for r in &runs {
            assert!(r.id.is_some());
            r.spec.validate().unwrap();
        }
    }
    assert_eq!(presets::NAMES.len(), 4);
    assert!(presets::get("nope").is_none());
}

#[test]
fn tightness_preset_is_noiseless_and_asks_for_bounds() {
    let table = parse_table(presets::get("tightness").unwrap()).unwrap();
    let cfg = ExperimentConfig::from_table(&table).unwrap();
    assert!(cfg.experiment.bias_bound_columns);
    for r in resolve_runs(&table).unwrap() {
        assert_eq!(r.truth.sigma1, 0.0);
        assert_eq!(r.truth.sigma2, 0.0);
        assert_eq!(r.spec.metric, Metric::TransferError);
        assert_eq!(r.spec.variable, SweepVariable::P);
    }
}

#[test]
fn range_grid_is_inclusive() {
    let runs = resolve_runs(&base()).unwrap();
    assert_eq!(runs.len(), 1);
    let r = &runs[0];
    assert_eq!(r.id, None);
    assert_eq!(r.spec.method, TransferMethod::OptionB);
    assert_eq!(r.spec.grid.len(), 35);
    assert_eq!(r.spec.grid[0], 52.0);
    assert_eq!(*r.spec.grid.last().unwrap(), 120.0);
}

#[test]
fn overrides_are_typed() {
    let mut t = base();
    apply_overrides(
        &mut t,
        &[
            ("learner.p".into(), "7".into()),
            ("experiment.method".into(), "option_a".into()),
            ("ground_truth.sigma1".into(), "0.25".into()),
            ("sweep.values".into(), "[10, 20]".into()),
        ],
    )
    .unwrap();
    let r = &resolve_runs(&t).unwrap()[0];
    assert_eq!(r.learner.p, 7);
    assert_eq!(r.spec.method, TransferMethod::OptionA);
    assert_eq!(r.truth.sigma1, 0.25);
    assert_eq!(r.spec.grid, vec![10.0, 20.0]);
    assert_eq!(parse_value("abc"), Value::String("abc".into()));
    assert_eq!(parse_value("3"), Value::Integer(3));
}

#[test]
fn curve_overrides_accept_nested_or_dotted_keys() {
    let mut dotted = base();
    dotted.extend(parse_table("[[curve]]\nid = \"a\"\nset = { \"learner.p\" = 9 }").unwrap());
    let mut nested = base();
    nested.extend(parse_table("[[curve]]\nid = \"a\"\nset.learner.p = 9").unwrap());
    let a = resolve_runs(&dotted).unwrap();
    let b = resolve_runs(&nested).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].learner.p, 9);
    assert_eq!(a[0].id.as_deref(), Some("a"));

    let (_, table) = curve_tables(&dotted).unwrap().remove(0);
    assert!(!table.contains_key("curve"));
    assert_eq!(run_from_table(&table, Some("a".into())).unwrap(), a[0]);
}

#[test]
fn duplicate_curve_ids_are_rejected() {
    let mut t = base();
    t.extend(parse_table("[[curve]]\nid = \"a\"\n[[curve]]\nid = \"a\"").unwrap());
    assert!(matches!(resolve_runs(&t), Err(Error::Config(_))));
}

#[test]
fn unknown_fields_and_bad_names_are_rejected() {
    let mut t = base();
    set_dotted(&mut t, "learner.q", Value::Integer(1)).unwrap();
    assert!(matches!(resolve_runs(&t), Err(Error::Config(_))));

    let mut t = base();
    set_dotted(&mut t, "experiment.method", Value::String("option_c".into())).unwrap();
    assert!(resolve_runs(&t).is_err());

    let mut t = base();
    set_dotted(&mut t, "sweep.variable", Value::String("q".into())).unwrap();
    assert!(resolve_runs(&t).is_err());

    assert!(parse_method("sample_transfer").is_ok());
    assert!(parse_metric("transfer_error").is_ok());
    assert!(parse_metric("loss").is_err());
    assert!(set_dotted(&mut base(), "learner.p.x", Value::Integer(1)).is_err());
    assert!(set_dotted(&mut base(), "", Value::Integer(1)).is_err());
}

#[test]
fn incomplete_ranges_are_rejected() {
    let mut t = base();
    t["sweep"].as_table_mut().unwrap().remove("step");
    assert!(resolve_runs(&t).is_err());
    let mut t = base();
    set_dotted(&mut t, "sweep.step", Value::Float(-1.0)).unwrap();
    assert!(resolve_runs(&t).is_err());
}

#[test]
fn empty_grid_is_an_error() {
    let mut t = base();
    set_dotted(&mut t, "sweep.values", Value::Array(vec![])).unwrap();
    let err = resolve_runs(&t).and_then(|runs| runs[0].spec.validate());
    assert!(err.is_err());
}

#[test]
fn manifest_table_is_ignored_on_input() {
    let mut t = base();
    set_dotted(&mut t, "manifest.command", Value::String("sweep".into())).unwrap();
    assert_eq!(resolve_runs(&t).unwrap(), resolve_runs(&base()).unwrap());
}
