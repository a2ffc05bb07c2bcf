use super::*;
use crate::addm::{CouplingPattern, SaturationDelta};
use crate::timeloop::ReportRow;

const MINIMAL: &str = r#"
[grid]
dims = [8, 8, 2]
permeability = { kind = "uniform", value = 100.0 }

[fluid]

[schedule]
end_time = 10.0
"#;

#[test]
fn minimal_deck_gets_defaults() {
    let d = parse_deck(MINIMAL).unwrap();
    assert_eq!(d.solver.method, Method::Fim);
    assert_eq!(d.solver.tiles, [4, 4]);
    assert_eq!(d.grid.cell_size, [20.0, 20.0, 10.0]);
    assert_eq!(d.fluid, FluidParams::default());
    assert!(d.wells.is_empty());
    assert_eq!(d.initial, InitialSection::default());
    assert_eq!(d.solver.blocks, None);
}

#[test]
fn echo_round_trips() {
    let d = parse_deck(MINIMAL).unwrap();
    assert_eq!(parse_deck(&d.echo()).unwrap(), d);
    let c = generate_case2_mini(CaseScale::Tiny, 3);
    assert_eq!(parse_deck(&c.echo()).unwrap(), c);
}

#[test]
fn addm03_records_default_block_count() {
    let text = format!("{MINIMAL}\n[solver]\nmethod = \"ADDM03\"\n");
    let d = parse_deck(&text).unwrap();
    // 16 subdomains -> ⌈16/4⌉ blocks.
    assert_eq!(d.solver.blocks, Some(4));
    assert!(d.echo().contains("blocks = 4"));
}

#[test]
fn unknown_keys_and_syntax_errors_are_reported() {
    let e = parse_deck(&MINIMAL.replace("[fluid]", "[fluid]\nviscosity = 2.0")).unwrap_err();
    assert!(matches!(e, DeckError::Syntax(_)), "{e}");
    let e = parse_deck("[grid\ndims = 1").unwrap_err();
    assert!(e.to_string().contains("line"), "{e}");
}

#[test]
fn semantic_errors_carry_the_key_path() {
    let bad = MINIMAL.replace("end_time = 10.0", "end_time = 10.0\nreport_times = [20.0]");
    match parse_deck(&bad).unwrap_err() {
        DeckError::Semantic { path, .. } => assert_eq!(path, "schedule"),
        e => panic!("{e}"),
    }
    let bad = MINIMAL.replace(
        "value = 100.0 }",
        "value = 100.0 }\n[initial]\ngas_saturation = 1.5",
    );
    match parse_deck(&bad).unwrap_err() {
        DeckError::Semantic { path, .. } => assert_eq!(path, "initial.gas_saturation"),
        e => panic!("{e}"),
    }
}

#[test]
fn well_spanning_two_tiles_is_rejected_by_name() {
    // 8 × 8 with 4 × 4 tiles: columns 1 and 2 belong to different tiles.
    let text = format!(
        r#"{MINIMAL}
[[wells]]
name = "P-7"
kind = "producer"
component = "oil"
cells = [[1, 0, 0], [2, 0, 1]]
control = {{ mode = "bhp", target = 1000.0 }}
"#
    );
    let e = parse_deck(&text).unwrap_err();
    assert!(e.to_string().contains("P-7"), "{e}");
}

#[test]
fn duplicate_well_names_are_rejected() {
    let well = r#"
[[wells]]
name = "W"
kind = "injector"
component = "gas"
cells = [[0, 0, 0]]
control = { mode = "rate", target = 1.0 }
"#;
    let e = parse_deck(&format!("{MINIMAL}{well}{well}")).unwrap_err();
    assert!(e.to_string().contains("duplicate"), "{e}");
}

#[test]
fn tiny_case_counts() {
    let d = generate_case1_mini(CaseScale::Tiny);
    let res = d.build_reservoir().unwrap();
    assert_eq!(res.grid.num_cells(), 1728);
    assert_eq!(res.wells.len(), 5);
    // Three layers: injectors in the top layer only.
    for w in d.wells.iter().filter(|w| w.kind == WellKind::Injector) {
        assert_eq!(w.cells.iter().map(|c| c[2]).collect::<Vec<_>>(), vec![0]);
    }
    let prod = d.wells.iter().find(|w| w.kind == WellKind::Producer).unwrap();
    assert_eq!(prod.cells.iter().map(|c| c[2]).collect::<Vec<_>>(), vec![1, 2]);
}

#[test]
fn band_layers_scale_with_the_layer_count() {
    assert_eq!(band_layers(3), [1, 1, 1]);
    assert_eq!(band_layers(6), [1, 2, 3]);
    assert_eq!(band_layers(10), [2, 3, 5]);
    assert_eq!(banded(6, BAND_PERMEABILITY), vec![500.0, 50.0, 50.0, 200.0, 200.0, 200.0]);
}

#[test]
fn band_permeabilities_appear_in_the_echo() {
    let echo = generate_case1_mini(CaseScale::Small).echo();
    for v in ["500.0", "50.0", "200.0"] {
        assert!(echo.contains(v), "{v} missing from\n{echo}");
    }
}

#[test]
fn gaussian_fields_are_seed_deterministic() {
    let a = generate_case2_mini(CaseScale::Tiny, 7).build_grid().unwrap();
    let b = generate_case2_mini(CaseScale::Tiny, 7).build_grid().unwrap();
    let c = generate_case2_mini(CaseScale::Tiny, 8).build_grid().unwrap();
    assert_eq!(a.perm, b.perm);
    assert_ne!(a.perm, c.perm);
    assert!(a.perm.iter().all(|k| k[0] >= 1.0));
}

#[test]
fn gaussian_layer_mean_is_close_to_the_target() {
    let k = gaussian_permeability([100, 100, 3], &BAND_PERMEABILITY, 0.3, 11, 1.0).unwrap();
    let layer = &k[..10_000];
    let mean = layer.iter().sum::<f64>() / layer.len() as f64;
    assert!((mean - 500.0).abs() < 0.05 * 500.0, "{mean}");
}

#[test]
fn zero_stddev_reduces_to_case1() {
    let g1 = generate_case1_mini(CaseScale::Tiny);
    let g2 = generate_case2_with_stddev(CaseScale::Tiny, 99, 0.0);
    assert_eq!(g1.build_grid().unwrap().perm, g2.build_grid().unwrap().perm);
    assert_eq!(g1.wells, g2.wells);
    assert_eq!(g1.solver, g2.solver);
    assert_eq!(g1.schedule, g2.schedule);
}

#[test]
fn generate_case_parses_names() {
    assert_eq!(generate_case("case1-mini:tiny", 0).unwrap(), generate_case1_mini(CaseScale::Tiny));
    assert!(matches!(generate_case("case3-mini:tiny", 0), Err(DeckError::UnknownCase(_))));
    assert!(matches!(generate_case("case1-mini:huge", 0), Err(DeckError::UnknownCase(_))));
}

#[test]
fn initial_state_is_hydrostatic_and_static() {
    let d = generate_case1_mini(CaseScale::Tiny);
    let res = d.build_reservoir().unwrap();
    let s = d.initial_state(&res).unwrap();
    let g = &res.grid;
    assert!(s.p[g.index(0, 0, 2)] > s.p[g.index(0, 0, 0)]);
    // Without wells the assembled residual vanishes at the initial state.
    let res = crate::assembly::Reservoir::new(res.grid.clone(), res.fluid.clone(), Vec::new());
    let scope = crate::assembly::ProblemScope::global(&res).unwrap();
    let f = crate::assembly::assemble(&res, &scope, &scope.gather(&s), &scope.gather_moles(&s), 1.0, false)
        .unwrap()
        .residual;
    let scale = res.row_scale(&scope, 1.0);
    let worst = f.iter().zip(&scale).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

fn row(t: f64) -> ReportRow {
    ReportRow {
        time: t,
        fpr: 3999.123456789,
        fgpr: 0.1 + t,
        fopr: 1e-17,
        nr_iter: 3,
        ls_iter: 77,
        ls_per_nr: 77.0 / 3.0,
        nr_iter_w: 1,
        nr_iter_ddm: 12,
        nr_iter_w_ddm: 0,
    }
}

#[test]
fn empty_report_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    write_reports(&[], &p).unwrap();
    assert_eq!(
        std::fs::read_to_string(&p).unwrap(),
        "time,FPR,FGPR,FOPR,NRiter,LSiter,LS/NR,NRiterW,NRiter_DDM,NRiterW_DDM\n"
    );
    assert!(read_reports(&p).unwrap().is_empty());
}

#[test]
fn reports_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    let rows: Vec<ReportRow> = [0.5, 20.0, 1.0 / 3.0].into_iter().map(row).collect();
    write_reports(&rows, &p).unwrap();
    assert_eq!(read_reports(&p).unwrap(), rows);
}

#[test]
fn wrong_header_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    std::fs::write(&p, "a,b\n1,2\n").unwrap();
    assert!(matches!(read_reports(&p), Err(OutputError::Header { .. })));
    let missing = dir.path().join("none.csv");
    assert!(read_reports(&missing).unwrap_err().to_string().contains("none.csv"));
}

#[test]
fn coupling_file_layout() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.csv");
    write_coupling(&CouplingPattern::from_labels(&[0, 0, 1]), &p).unwrap();
    assert_eq!(
        std::fs::read_to_string(&p).unwrap(),
        "subdomain,region,independent\n0,0,0\n1,0,0\n2,1,1\n"
    );
}

#[test]
fn snapshot_of_gas_free_state_has_zero_saturation_block() {
    let grid = Grid::cartesian([2, 2, 1], [10.0, 10.0, 5.0], 0.0, vec![[1.0; 3]; 4], 0.2).unwrap();
    let layout = tile_partition(&grid, 2, 1).unwrap();
    let state = FluidState::uniform(4, 3000.0, [10.0, 0.0]);
    let fields = SnapshotFields::new(&FluidParams::default(), &layout, &state, None, Some(&SaturationDelta::zeros(4)));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.vtk");
    write_snapshot(&grid, &fields, 1.5, &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let block = |name: &str| -> Vec<String> {
        let start = text.find(&format!("SCALARS {name} ")).unwrap();
        text[start..].lines().skip(2).take(4).map(String::from).collect()
    };
    assert_eq!(block("S_gas"), vec!["0"; 4]);
    assert_eq!(block("dS_gas"), vec!["0"; 4]);
    assert_eq!(block("pressure"), vec!["3000"; 4]);
    assert_eq!(block("subdomain"), vec!["0", "1", "0", "1"]);
    assert_eq!(block("region"), vec!["-1"; 4]);
    let order: Vec<&str> = text.lines().filter(|l| l.starts_with("SCALARS")).collect();
    assert_eq!(
        order,
        [
            "SCALARS pressure double 1",
            "SCALARS S_gas double 1",
            "SCALARS dS_gas double 1",
            "SCALARS subdomain int 1",
            "SCALARS region int 1"
        ]
    );
    assert!(text.starts_with("# vtk DataFile Version 3.0\nsnapshot t=1.5\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS 3 3 2\n"));
}

#[test]
fn summary_prints_reductions_against_fim() {
    let line = |m: &str, nr, ls| SummaryLine {
        method: m.into(),
        nr_iter: nr,
        ls_iter: ls,
        nr_iter_w: 0,
        nr_iter_ddm: 0,
        steps: 1,
        failed_steps: 0,
        runtime_seconds: 1.0,
        linear_seconds: 0.5,
    };
    let s = format_summary(&[line("FIM", 200, 1000), line("ADDM02", 150, 1100)]);
    assert!(s.contains("25.0%"), "{s}");
    assert!(s.contains("-10.0%"), "{s}");
}
