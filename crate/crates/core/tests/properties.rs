use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;
use scanner_core::config::ToolConfig;
use scanner_core::geometry::{config1_report, ScannerParams};
use scanner_core::optics::field::{lens_fourier, FieldGrid, Lens, Plane};
use scanner_core::optics::hologram::{quantize_value, PhaseMask};
use scanner_core::optics::sweep::{Instance, ShapeKind, SimulationConfig};
use scanner_core::partitions::{
    build_catalog, canonicalize, enumerate_canonical_patterns, partition_count, AddressPattern, PatchCatalog, Site,
};
use scanner_core::scheduler::{compile_config1, decompose_layer, GateLayer};
use scanner_core::Exec;

fn pattern(max: u32, len: usize) -> impl Strategy<Value = AddressPattern> {
    prop::collection::btree_set((0..max, 0..max), 1..=len)
        .prop_map(|s| AddressPattern::new(s.into_iter().map(|(r, c)| Site::new(r, c))).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_is_transpose_symmetric(m in 1u32..12, n in 1u32..12, k in 1u32..6) {
        prop_assume!(k <= m * n);
        prop_assert_eq!(partition_count(m, n, k).unwrap(), partition_count(n, m, k).unwrap());
    }

    #[test]
    fn single_site_has_one_class(m in 1u32..50, n in 1u32..50) {
        prop_assert_eq!(partition_count(m, n, 1).unwrap(), 1);
    }

    #[test]
    fn enumeration_is_complete(m in 1u32..6, n in 1u32..6, k in 1u32..4) {
        prop_assume!(k <= m * n);
        let listed = enumerate_canonical_patterns(m, n, k).unwrap();
        prop_assert_eq!(listed.len() as u128, partition_count(m, n, k).unwrap());
        for p in &listed {
            prop_assert!(p.is_canonical());
            prop_assert_eq!(p.len(), k as usize);
            let (rows, cols) = p.extent();
            prop_assert!(rows <= m && cols <= n);
        }
    }

    #[test]
    fn canonical_form_is_idempotent(p in pattern(20, 6)) {
        let (c, off) = canonicalize(&p).unwrap();
        prop_assert!(c.is_canonical());
        let (again, zero) = canonicalize(&c).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(zero, (0, 0));
        let back: Vec<Site> = c.sites().map(|s| Site::new(s.row + off.0, s.col + off.1)).collect();
        prop_assert_eq!(AddressPattern::new(back).unwrap(), p);
    }

    #[test]
    fn decomposition_round_trips(p in pattern(4, 4), dr in 0u32..30, dc in 0u32..30) {
        let moved = AddressPattern::new(p.sites().map(|s| Site::new(s.row + dr, s.col + dc))).unwrap();
        let (c, off) = decompose_layer(&moved, 4, 4).unwrap();
        let placed = AddressPattern::new(c.sites().map(|s| Site::new(s.row + off.0, s.col + off.1))).unwrap();
        prop_assert_eq!(placed, moved);
    }

    #[test]
    fn catalog_text_round_trips(m in 1u32..5, n in 1u32..5, k in 1u32..4) {
        prop_assume!(k <= m * n);
        let cat = build_catalog(m, n, k, u64::MAX).unwrap();
        prop_assert_eq!(PatchCatalog::from_text(&cat.to_text()).unwrap(), cat);
    }

    #[test]
    fn config_text_round_trips(
        q_slm in 3.0f64..8.0,
        q_a in 2.0f64..5.0,
        q_aod_a in 30.0f64..200.0,
        tbw in 200.0f64..1000.0,
        r_slm in 100.0f64..5000.0,
        grid in 9u32..13,
        bits in prop::option::of(1u32..16),
    ) {
        let mut c = ToolConfig::default();
        c.scanner.q_slm = q_slm;
        c.scanner.q_a = q_a;
        c.scanner.q_aod_a = q_aod_a;
        c.scanner.tbw = tbw;
        c.scanner.r_slm = r_slm;
        c.simulation.config.grid_n = 1 << grid;
        c.simulation.config.bits = bits;
        c.simulation.config.q_slm = q_slm;
        c.simulation.config.q_a = q_a;
        let back = ToolConfig::parse(&c.serialize()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn quantization_error_is_half_a_level(phase in -20.0f64..20.0, bits in 1u32..16) {
        let q = quantize_value(phase, bits);
        prop_assert!((0.0..TAU).contains(&q));
        let d = (q - phase).rem_euclid(TAU);
        let err = d.min(TAU - d);
        prop_assert!(err <= PI / (1u64 << bits) as f64 + 1e-12);
    }

    #[test]
    fn config1_timeline_matches_closed_form(l in 1usize..300, r_slm in 200.0f64..2000.0) {
        let p = ScannerParams { r_slm, ..ScannerParams::default() };
        let burst = config1_report(&p).unwrap().burst_time;
        let layers: Vec<_> = (0..l)
            .map(|i| GateLayer::new(format!("g{i}"), AddressPattern::from_pairs(&[(0, 0)]).unwrap(), 0.0).unwrap())
            .collect();
        let t = compile_config1(&layers, &p).unwrap();
        let expected = l.div_ceil(49) as f64 / r_slm + l as f64 * burst;
        prop_assert!((t.total_time - expected).abs() <= 1e-12 * expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lens_preserves_power(seed in prop::collection::vec(-1.0f64..1.0, 2 * 32 * 32)) {
        let data: Vec<Complex64> = seed.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let f = FieldGrid::from_data(32, 5e-6, Plane::Slm, data).unwrap();
        let out = lens_fourier(&f, &Lens::new(0.02, 5e-7).unwrap(), Exec::Sequential);
        prop_assert!((out.power() - f.power()).abs() <= 1e-10 * f.power());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn power_budget_closes(
        phases in prop::collection::vec(0.0f64..TAU, 32 * 32),
        sites in pattern(4, 3),
    ) {
        let cfg = SimulationConfig { grid_n: 256, sim_per_slm: 2, bits: None, ..SimulationConfig::desk() };
        let inst = Instance::new(&cfg, 32, &sites, ShapeKind::Gaussian, Exec::Sequential).unwrap();
        let mask = PhaseMask { phases, ..PhaseMask::flat(32, 2, None) };
        let m = inst.evaluate(&mask, Exec::Sequential).unwrap();
        prop_assert!(m.efficiency >= 0.0 && m.crosstalk >= 0.0 && m.out_of_array >= -1e-9);
        prop_assert!(m.efficiency + m.crosstalk <= 1.0 + 1e-9);
        prop_assert!((m.efficiency + m.crosstalk + m.out_of_array - 1.0).abs() < 1e-6);
    }
}
