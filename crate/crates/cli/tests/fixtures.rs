//! The packaged fixtures are data the code must agree with: scenario
//! files must match their in-code builders, the zone file the demo zone,
//! and the two day tables must be internally consistent across both CSV
//! layouts.

use std::fs;
use std::path::{Path, PathBuf};

use ppe_core::counter::parse_counts_csv;
use ppe_core::detector::scenario::ScenarioConfig;
use ppe_core::detector::scripts;
use ppe_core::evaluation::DayTable;
use ppe_core::pipeline::{BackendConfig, PipelineConfig, SourceConfig};
use ppe_core::types::ZoneConfig;

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(path)
}

fn read(path: &str) -> String {
    let path = fixture(path);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn scenario_fixtures_match_their_builders() {
    let cases: [(&str, ScenarioConfig); 6] = [
        ("straight_through.json", scripts::straight_through()),
        ("lingering.json", scripts::lingering()),
        ("late_helmet.json", scripts::late_helmet()),
        ("slow_walk.json", scripts::slow_walk()),
        ("idle_periods.json", scripts::idle_periods()),
        ("random_flow_09.json", scripts::random_flow(9)),
    ];
    for (name, expected) in cases {
        let parsed: ScenarioConfig =
            serde_json::from_str(&read(&format!("scenarios/{name}"))).unwrap();
        parsed.validate().unwrap();
        assert_eq!(parsed, expected, "fixture {name} drifted from its builder");
    }
}

#[test]
fn zone_fixture_matches_the_demo_zone() {
    let parsed: ZoneConfig = serde_json::from_str(&read("zones/gate.json")).unwrap();
    parsed.validate().unwrap();
    assert_eq!(parsed, scripts::demo_zone());
}

#[test]
fn demo_config_is_valid_and_points_at_packaged_files() {
    let cfg = PipelineConfig::from_json(&read("configs/demo.json")).unwrap();
    assert_eq!(cfg.zone, scripts::demo_zone());
    assert!(matches!(cfg.backend, BackendConfig::Synthetic));
    let SourceConfig::Scenario { path, render } = &cfg.source else {
        panic!("demo config must use a scenario source");
    };
    assert!(*render, "demo exercises the prefilter, so it must render");
    assert!(cfg.prefilter.any_enabled());
    let scenario = fixture("..").join(path);
    assert!(scenario.exists(), "{} missing", scenario.display());
}

#[test]
fn day_tables_are_internally_consistent() {
    for name in ["table1", "table2"] {
        let table = DayTable::from_path(&fixture(&format!("tables/{name}.csv"))).unwrap();
        assert_eq!(table.labels.len(), 14);
        assert_eq!(table.labels[0], "05:00");
        assert_eq!(table.labels[13], "18:00");
        for i in 0..14 {
            assert_eq!(
                table.diff_in[i],
                table.camera_in.values[i] as i64 - table.model_in.values[i] as i64,
                "{name} diff_in bucket {i}"
            );
            assert_eq!(
                table.diff_out[i],
                table.camera_out.values[i] as i64 - table.model_out.values[i] as i64,
                "{name} diff_out bucket {i}"
            );
        }

        for (side, in_series, out_series) in [
            ("camera", &table.camera_in, &table.camera_out),
            ("model", &table.model_in, &table.model_out),
        ] {
            let counts =
                parse_counts_csv(&read(&format!("tables/{name}_{side}_counts.csv"))).unwrap();
            assert_eq!(counts.labels(), table.labels, "{name} {side} labels");
            assert_eq!(counts.in_counts(), in_series.values, "{name} {side} in");
            assert_eq!(counts.out_counts(), out_series.values, "{name} {side} out");
        }
    }
}

#[test]
fn day_table_totals_match_the_published_sums() {
    let table1 = DayTable::from_path(&fixture("tables/table1.csv")).unwrap();
    assert_eq!(table1.camera_in.total(), 562);
    assert_eq!(table1.camera_out.total(), 544);
    assert_eq!(table1.model_in.total(), 649);
    assert_eq!(table1.model_out.total(), 525);
    assert_eq!(table1.diff_in.iter().sum::<i64>(), -87);
    assert_eq!(table1.diff_out.iter().sum::<i64>(), 19);

    let table2 = DayTable::from_path(&fixture("tables/table2.csv")).unwrap();
    assert_eq!(table2.camera_in.total(), 678);
    assert_eq!(table2.camera_out.total(), 639);
    assert_eq!(table2.model_in.total(), 747);
    assert_eq!(table2.model_out.total(), 584);
    assert_eq!(table2.diff_in.iter().sum::<i64>(), -69);
    assert_eq!(table2.diff_out.iter().sum::<i64>(), 55);
}
