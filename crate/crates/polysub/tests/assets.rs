//! Integration checks of the bundled tilesets: the shipped files stay in
//! sync with the programmatic builders, and the ax family has the
//! structure the analyses rely on.

use std::collections::BTreeSet;

use polysub::analysis::{
    cover_check, match_snowflake, patch_marks, periodicity_scan, stitch_histogram,
    substitution_stats, trace_closed_curves, Window,
};
use polysub::assets;
use polysub::engine::expand_tile;
use polysub::model::{
    derived_super_marks, mark_coherence_report, parse_tileset, serialize_tileset,
    validate_tileset, MarkLayer,
};

fn asset_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets")
        .join(name)
}

#[test]
fn shipped_files_match_builders() {
    for (file, ts) in [
        ("chair.tiles", assets::chair()),
        ("ax-seed.tiles", assets::ax_seed()),
        ("ax5.tiles", assets::ax5()),
        ("ax.tiles", assets::ax()),
    ] {
        let shipped = std::fs::read(asset_path(file))
            .unwrap_or_else(|e| panic!("missing asset {file}: {e}"));
        assert_eq!(
            shipped,
            serialize_tileset(&ts),
            "{file} is out of sync with its builder"
        );
        // Structural round trip: parsing the canonical form and
        // re-serializing is the identity on bytes.
        let parsed = parse_tileset(&shipped).unwrap();
        assert_eq!(serialize_tileset(&parsed), shipped, "{file} round-trip");
    }
}

#[test]
fn ax_family_validates_with_coherent_marks() {
    for ts in [assets::ax_seed(), assets::ax5(), assets::ax()] {
        let report = validate_tileset(&ts).unwrap();
        assert!(report.pass, "{} fails cover validation", ts.name);
        assert!(
            report.rules.iter().all(|r| r.area_identity),
            "{} fails the area identity",
            ts.name
        );
        let coherence = mark_coherence_report(&ts).unwrap();
        assert!(coherence.full_match(), "{} super marks diverge", ts.name);
        assert!(coherence.continuous(), "{} curves break", ts.name);
    }
}

#[test]
fn ax_has_three_prototiles_with_expected_shapes() {
    let ts = assets::ax();
    assert_eq!(ts.tiles.len(), 3);
    let mut areas: Vec<usize> = ts.tiles.iter().map(|t| t.shape.area()).collect();
    areas.sort_unstable();
    assert_eq!(areas, vec![9, 18, 36]);
}

#[test]
fn ax_expansions_are_clean_and_area_conserving() {
    let ts = assets::ax();
    for tile in ["square3", "domino", "square6"] {
        for depth in [1, 5] {
            let report = polysub::analysis::cover_check_expansion(&ts, tile, depth).unwrap();
            assert!(
                report.clean(),
                "ax tile {tile} depth {depth}: {report:?}"
            );
        }
        let mut patch = expand_tile(&ts, tile, 0).unwrap();
        let mut cells = ts.tile(tile).unwrap().shape.area();
        for _ in 0..4 {
            patch = polysub::engine::expand_patch(&ts, &patch).unwrap();
            let covered = polysub::engine::patch_cells(&ts, &patch).unwrap().len();
            assert_eq!(covered, cells * 4);
            cells = covered;
        }
    }
}

#[test]
fn ax_derived_super_marks_have_stitch_lengths_two_and_three() {
    let ts = assets::ax();
    let mut support: BTreeSet<i64> = BTreeSet::new();
    for rule in &ts.rules {
        let derived = derived_super_marks(&ts, &rule.parent).unwrap();
        assert!(!derived.is_empty(), "{} derives no super marks", rule.parent);
        for (len, _) in stitch_histogram(&derived) {
            support.insert(len);
        }
    }
    // Doubled lengths 4 and 6 are cell lengths 2 and 3.
    assert_eq!(support, BTreeSet::from([4, 6]));
}

#[test]
fn ax_depth4_closed_curves_are_all_snowflakes() {
    let ts = assets::ax();
    let patch = expand_tile(&ts, "square6", 4).unwrap();
    let marks = patch_marks(&ts, &patch, MarkLayer::Tile).unwrap();
    let trace = trace_closed_curves(&marks);
    assert!(!trace.closed.is_empty(), "expected closed curves at depth 4");
    for w in &trace.closed {
        assert!(
            match_snowflake(w).is_some(),
            "unmatched closed curve: {}",
            w.to_letters()
        );
    }
    assert_eq!(trace.junction_points, 0);
    assert_eq!(trace.open_threads, 0);
}

#[test]
fn ax_depth5_window_has_no_period() {
    let ts = assets::ax();
    let patch = expand_tile(&ts, "square6", 5).unwrap();
    let cover = cover_check(&ts, &patch).unwrap();
    assert!(cover.clean());
    let bounds = (0, 0, 6 * 32 - 1, 6 * 32 - 1);
    let window = Window::central_third(bounds);
    let radius = (window.max_x - window.min_x + 1) / 3;
    let periods = periodicity_scan(&ts, &patch, window, radius).unwrap();
    assert!(periods.is_empty(), "found periods {periods:?}");
}

#[test]
fn ax_pipeline_reproduces_the_shipped_tileset() {
    let seed = assets::ax_seed();
    assert_eq!(seed.tiles.len(), 6);
    let fused = polysub::algebra::fuse(&seed, &assets::ax_seed_pair_relation(), "column").unwrap();
    assert_eq!(fused.tiles.len(), 5);
    let (deduped, mapping) = polysub::algebra::dedup(&fused).unwrap();
    assert_eq!(deduped.tiles.len(), 4);
    assert_eq!(mapping.get("domino2"), Some(&"domino".to_string()));
    let final_ts =
        polysub::algebra::eliminate(&deduped, &assets::ax_column_decomposition()).unwrap();
    assert_eq!(final_ts.tiles.len(), 3);

    // Congruent to the shipped ax.tiles: canonical shapes and marks match
    // tile for tile.
    let shipped = assets::ax();
    let canon = |ts: &polysub::Tileset| -> BTreeSet<String> {
        ts.tiles
            .iter()
            .map(|t| {
                let (shape, pl) = t.shape.canonical();
                let mut marks: Vec<_> = t.marks.iter().map(|m| m.placed(pl)).collect();
                marks.sort();
                format!("{:?}|{:?}", shape.cells(), marks)
            })
            .collect()
    };
    assert_eq!(canon(&final_ts), canon(&shipped));
}

#[test]
fn ax_substitution_stats_converge() {
    let ts = assets::ax();
    let stats = substitution_stats(&ts, 6).unwrap();
    assert!((stats.perron_value - 4.0).abs() < 1e-9);
    assert!(
        stats.l1_distance <= 0.02,
        "empirical frequencies at depth 6 are {} away from the eigenvector",
        stats.l1_distance
    );
    assert!(polysub::analysis::matrix_area_identity(&ts, &stats.matrix));
}

#[test]
fn chair_file_is_the_reference_asset() {
    let shipped = std::fs::read(asset_path("chair.tiles")).unwrap();
    let ts = parse_tileset(&shipped).unwrap();
    assert_eq!(ts.name, "chair");
    assert_eq!(ts.scale, 2);
    assert_eq!(ts.tiles.len(), 1);
    let rule = ts.rule("L").unwrap();
    assert_eq!(rule.children.len(), 4);
}
