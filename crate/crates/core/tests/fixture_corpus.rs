use std::collections::BTreeMap;
use std::path::Path;

use designprobe_core::analysis::find_injection_sites;
use designprobe_core::corpus::{load_project, parse_unit, render_class, render_unit, resolve_hierarchy, SourceProject};
use designprobe_core::transforms::{apply_coupling, MutationKind};

fn fixture() -> SourceProject {
    load_project(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus/shop")).unwrap()
}

/// (method, fields it touches, same-class methods it calls), labeled by reading the sources.
type Label = (&'static str, &'static [&'static str], &'static [&'static str]);

fn hand_labels() -> BTreeMap<&'static str, Vec<Label>> {
    BTreeMap::from([
        (
            "com.shop.util.ScoreBoard",
            vec![
                ("addScore", &["scores"][..], &[][..]),
                ("topScorer", &["scores"], &[]),
                ("totalScore", &["scores"], &[]),
            ],
        ),
        (
            "com.shop.util.TextBuffer",
            vec![
                ("appendText", &["buffer"][..], &[][..]),
                ("bufferLength", &["buffer"], &[]),
                ("clearBuffer", &["buffer"], &[]),
                ("reverseBuffer", &["buffer"], &[]),
            ],
        ),
        (
            "com.shop.util.GeoPoint",
            vec![
                ("latitudeDegrees", &["lat"][..], &[][..]),
                ("longitudeDegrees", &["lon"], &[]),
                ("shiftNorth", &["lat"], &["normalizeCoords"]),
                ("normalizeCoords", &["lat", "lon"], &[]),
            ],
        ),
        (
            "com.shop.util.DiceRoller",
            vec![
                ("rollOnce", &["rng", "sides"][..], &[][..]),
                ("rollMany", &[], &["rollOnce"]),
                ("changeSides", &["sides"], &[]),
            ],
        ),
        (
            "com.shop.util.LapTimer",
            vec![
                ("recordLap", &["laps"][..], &[][..]),
                ("fastestLap", &["laps"], &[]),
                ("totalLapTime", &["laps"], &[]),
            ],
        ),
        (
            "com.shop.util.SeatMap",
            vec![
                ("bookSeat", &["taken"][..], &[][..]),
                ("releaseSeat", &["taken"], &[]),
                ("freeSeats", &["taken"], &[]),
            ],
        ),
        (
            "com.shop.model.SplitBrain",
            vec![
                ("bumpLeft", &["leftCount"][..], &[][..]),
                ("leftValue", &["leftCount"], &[]),
                ("renameRight", &["rightLabel"], &[]),
                ("rightValue", &["rightLabel"], &[]),
            ],
        ),
        (
            "com.shop.service.OrderService",
            vec![("placeOrder", &["repository", "notifier"][..], &[][..]), ("lookup", &["repository"], &[])],
        ),
        (
            "com.shop.util.WordFrequency",
            vec![
                ("ingestLine", &[][..], &["countWord"][..]),
                ("countWord", &["frequencies"], &[]),
                ("mostFrequent", &["frequencies"], &[]),
            ],
        ),
        (
            "com.shop.util.TemperatureLog",
            vec![
                ("addReading", &["readings"][..], &[][..]),
                ("averageReading", &["readings"], &[]),
                ("maxReading", &["readings"], &[]),
                ("describeUnit", &["readings", "unit"], &[]),
            ],
        ),
        (
            "com.shop.repo.CachedOrderRepository",
            vec![("find", &["cache"][..], &[][..]), ("save", &["cache", "capacity"], &[])],
        ),
        (
            "com.shop.util.StockTicker",
            vec![
                ("tickPrice", &["lastPrice"][..], &[][..]),
                ("dailyChange", &["lastPrice", "openPrice"], &[]),
                ("dailyChangePercent", &["openPrice"], &["dailyChange"]),
            ],
        ),
    ])
}

#[test]
fn member_access_matches_hand_labels() {
    let project = fixture();
    let labels = hand_labels();
    assert!(labels.len() >= 10);
    for (class_name, methods) in labels {
        let class = project.class(class_name).unwrap_or_else(|| panic!("{class_name} missing"));
        assert_eq!(class.methods.len(), methods.len(), "{class_name}");
        for (name, fields, calls) in methods {
            let m = class.methods.iter().find(|m| m.name == name).unwrap();
            let got_fields: Vec<&str> = m.accessed_fields.iter().map(String::as_str).collect();
            let got_calls: Vec<&str> = m.invoked_methods.iter().map(String::as_str).collect();
            let mut fields = fields.to_vec();
            let mut calls = calls.to_vec();
            fields.sort();
            calls.sort();
            assert_eq!(got_fields, fields, "{class_name}.{name} fields");
            assert_eq!(got_calls, calls, "{class_name}.{name} calls");
        }
    }
}

#[test]
fn unedited_render_is_byte_identical() {
    let project = fixture();
    assert_eq!(project.units.len(), 41);
    assert!(project.skipped.is_empty());
    for unit in &project.units {
        assert_eq!(render_unit(unit, &[]).unwrap(), unit.text, "{}", unit.path.display());
        for class in &unit.classes {
            assert_eq!(render_class(class, &[]).unwrap(), class.text);
            assert_eq!(class.decl_span.slice(&unit.text), class.text);
        }
    }
}

#[test]
fn every_coupling_edit_reparses() {
    let project = fixture();
    let hierarchy = resolve_hierarchy(&project).unwrap();
    let sites = find_injection_sites(&project, &hierarchy);
    assert!(!sites.is_empty());
    for site in &sites {
        for kind in MutationKind::COUPLING {
            for seed in 0..4 {
                let record = apply_coupling(kind, &project, &hierarchy, site, seed).unwrap();
                for (path, text) in &record.edited_units {
                    parse_unit(path, text).unwrap_or_else(|e| panic!("{kind} {}: {e}", path.display()));
                }
            }
        }
    }
}
