use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use scanner_core::optics::field::{flattop_field, gaussian_field, lens_fourier, FieldGrid, Lens, Plane};
use scanner_core::optics::hologram::{gs_refine, gs_refine_traced, make_hologram, PhaseMask};
use scanner_core::optics::metrics::{measure, propagate, SpotShape, TargetSpec};
use scanner_core::optics::sweep::{benchmark_pattern, simulate, standard_sweep, Instance, ShapeKind, SimulationConfig};
use scanner_core::partitions::AddressPattern;
use scanner_core::Exec;

fn small() -> SimulationConfig {
    SimulationConfig {
        grid_n: 1024,
        bits: None,
        ..SimulationConfig::desk()
    }
}

fn lens() -> Lens {
    Lens::new(23e-3, 459e-9).unwrap()
}

fn peak_index(f: &FieldGrid) -> (usize, usize) {
    let i = f
        .intensity()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    (i / f.n(), i % f.n())
}

#[test]
fn lens_maps_waist_to_conjugate_waist() {
    let n = 512;
    let dx = 4e-6;
    let w = 120e-6;
    let f = gaussian_field(n, dx, w, (0.0, 0.0), Plane::Slm).unwrap();
    let out = lens_fourier(&f, &lens(), Exec::Sequential);
    let inten = out.intensity();
    // second moment along x: <x^2> = w^2 / 4 for a Gaussian of 1/e^2 radius w
    let mut m2 = 0.0;
    let mut tot = 0.0;
    for r in 0..n {
        for c in 0..n {
            let x = out.coord(c);
            m2 += x * x * inten[r * n + c];
            tot += inten[r * n + c];
        }
    }
    let measured = 2.0 * (m2 / tot).sqrt();
    let expected = 459e-9 * 23e-3 / (PI * w);
    assert!((measured / expected - 1.0).abs() < 0.01, "{measured} vs {expected}");
}

#[test]
fn gaussian_autocorrelation_peaks_at_displacement() {
    let n = 128;
    let pitch = 1.0;
    let d = (7.0, -5.0);
    let a = gaussian_field(n, pitch, 6.0, (0.0, 0.0), Plane::Array).unwrap();
    let b = gaussian_field(n, pitch, 6.0, d, Plane::Array).unwrap();
    let mut best = (f64::MIN, (0i64, 0i64));
    for sy in -10i64..=10 {
        for sx in -10i64..=10 {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..n as i64 {
                for c in 0..n as i64 {
                    let (r2, c2) = (r + sy, c + sx);
                    if (0..n as i64).contains(&r2) && (0..n as i64).contains(&c2) {
                        acc += a.at(r as usize, c as usize).conj() * b.at(r2 as usize, c2 as usize);
                    }
                }
            }
            if acc.norm() > best.0 {
                best = (acc.norm(), (sx, sy));
            }
        }
    }
    assert_eq!(best.1, (7, -5));
}

#[test]
fn flattop_focus_has_sinc_zero() {
    // a square aperture of side a focuses to sinc^2 with first zero at lambda f / a
    let n = 1024;
    let du = 1e-6;
    let side = 64e-6;
    let f = flattop_field(n, du, side, (0.0, 0.0), Plane::Slm).unwrap();
    let out = lens_fourier(&f, &lens(), Exec::Sequential);
    let mid = n / 2;
    let row: Vec<f64> = (0..n).map(|c| out.at(mid, c).norm_sqr()).collect();
    let first_min = (mid + 1..n - 1)
        .find(|&c| row[c] <= row[c - 1] && row[c] <= row[c + 1])
        .unwrap();
    let expected = 459e-9 * 23e-3 / side;
    let got = out.coord(first_min);
    assert!((got - expected).abs() <= out.pitch(), "{got} vs {expected}");
    assert!(row[first_min] < 1e-3 * row[mid]);
}

#[test]
fn linear_ramp_shifts_focus() {
    let n = 512;
    let dx = 4e-6;
    let lens = lens();
    let aperture = n as f64 * dx / 2.5;
    let base = gaussian_field(n, dx, 200e-6, (0.0, 0.0), Plane::Slm).unwrap();
    for v in 1..=10 {
        let mut f = base.clone();
        for (i, z) in f.data_mut().iter_mut().enumerate() {
            let x = (i % n) as f64 * dx - (n / 2) as f64 * dx;
            *z *= Complex64::from_polar(1.0, TAU * v as f64 * x / aperture);
        }
        let out = lens_fourier(&f, &lens, Exec::Sequential);
        let (r, c) = peak_index(&out);
        let expected = v as f64 * lens.wavelength * lens.focal_length / aperture;
        assert_eq!(r, n / 2);
        assert!((out.coord(c) - expected).abs() <= out.pitch(), "v={v}");
    }
}

#[test]
fn unmodulated_target_gives_uniform_mask() {
    let cfg = small();
    let lens = cfg.lens().unwrap();
    let n = cfg.grid_n;
    let input = gaussian_field(n, cfg.slm_sample_pitch(), 200e-6, (0.0, 0.0), Plane::Slm).unwrap();
    let flat = PhaseMask::flat(64, cfg.sim_per_slm, None);
    let target = propagate(&input, &flat, &lens, Exec::Sequential).unwrap();
    let mask = make_hologram(&input, &target, &lens, 64, cfg.sim_per_slm, None, Exec::Sequential).unwrap();
    let p0 = mask.phases[0];
    for &p in &mask.phases {
        let d = (p - p0).rem_euclid(TAU);
        assert!(d.min(TAU - d) < 1e-9);
    }
}

#[test]
fn adjacent_site_adds_expected_fringes() {
    let cfg = small();
    let px = 64u32;
    let mask_for = |col: u32| {
        let sites = AddressPattern::from_pairs(&[(0, col)]).unwrap();
        let inst = Instance::new(&cfg, px, &sites, ShapeKind::Gaussian, Exec::Sequential).unwrap();
        inst.hologram(&cfg, Exec::Sequential).unwrap()
    };
    let (a, b) = (mask_for(0), mask_for(1));
    let mid = px as usize / 2;
    let mut total = 0.0;
    let mut prev = None;
    for c in 0..px as usize {
        let d = b.phase(mid, c) - a.phase(mid, c);
        if let Some(p) = prev {
            let mut step: f64 = d - p;
            step -= TAU * (step / TAU).round();
            total += step;
        }
        prev = Some(d);
    }
    let fringes = total / TAU * px as f64 / (px as f64 - 1.0);
    assert!((fringes - 4.8).abs() <= 0.3, "{fringes}");
}

#[test]
fn mirrored_spots_share_power() {
    let cfg = small();
    let sites = AddressPattern::from_pairs(&[(0, 1), (1, 0)]).unwrap();
    let m = simulate(&cfg, 64, &sites, ShapeKind::Gaussian, Exec::Sequential).unwrap();
    let (a, b) = (m.per_site[0].1, m.per_site[1].1);
    assert!((a / b - 1.0).abs() < 0.02, "{a} {b}");
}

#[test]
fn flat_mask_sends_power_on_axis() {
    let cfg = small();
    let px = 64;
    let lens = cfg.lens().unwrap();
    let w_a = cfg.addressing_waist(px).unwrap();
    let sites = AddressPattern::from_pairs(&[(0, 0)]).unwrap();
    let mut spec = TargetSpec::new(1, cfg.q_a, w_a, sites, SpotShape::Gaussian { waist: w_a }).unwrap();
    spec.origin = (0.0, 0.0);
    let w_slm = px as f64 * cfg.slm_pitch / cfg.q_slm;
    let input = gaussian_field(cfg.grid_n, cfg.slm_sample_pitch(), w_slm, (0.0, 0.0), Plane::Slm).unwrap();
    let flat = PhaseMask::flat(px as usize, cfg.sim_per_slm, None);
    let out = propagate(&input, &flat, &lens, Exec::Sequential).unwrap();
    let m = measure(&out, input.power(), &spec).unwrap();
    assert!(m.efficiency > 0.95, "{}", m.efficiency);
}

#[test]
fn ten_bits_track_continuous_phase() {
    let base = small();
    let sites = benchmark_pattern(2).unwrap();
    let eta = |bits| {
        let cfg = SimulationConfig { bits, ..base.clone() };
        simulate(&cfg, 64, &sites, ShapeKind::Gaussian, Exec::Sequential)
            .unwrap()
            .efficiency
    };
    let (cont, ten, eight) = (eta(None), eta(Some(10)), eta(Some(8)));
    assert!((ten - cont).abs() <= 0.01);
    assert!((ten - cont).abs() <= (eight - cont).abs() + 1e-3);
}

#[test]
fn refinement_does_not_hurt_accuracy() {
    let cfg = small();
    let sites = AddressPattern::from_pairs(&[(0, 1), (2, 3)]).unwrap();
    let inst = Instance::new(&cfg, 64, &sites, ShapeKind::Gaussian, Exec::Sequential).unwrap();
    let target = inst.target().unwrap();
    let direct = inst.hologram(&cfg, Exec::Sequential).unwrap();
    let same = gs_refine(&inst.input, &target, &inst.lens, &direct, 0, None, Exec::Sequential).unwrap();
    assert_eq!(same, direct);

    let region = Some(inst.spec.signal_region());
    let (refined, trace) =
        gs_refine_traced(&inst.input, &target, &inst.lens, &direct, 20, region, Exec::Sequential).unwrap();
    assert_eq!(trace.len(), 20);
    for s in &trace {
        assert!((s.power_after - s.power_before).abs() <= 1e-9 * s.power_before);
    }
    let e_direct = inst.evaluate(&direct, Exec::Sequential).unwrap().accuracy;
    let e_gs = inst.evaluate(&refined, Exec::Sequential).unwrap().accuracy;
    assert!(e_gs <= 1.05 * e_direct, "{e_gs} vs {e_direct}");
}

#[test]
fn policies_agree_bitwise() {
    let cfg = small();
    let sites = benchmark_pattern(3).unwrap();
    let a = simulate(&cfg, 48, &sites, ShapeKind::Flattop, Exec::Sequential).unwrap();
    let b = simulate(&cfg, 48, &sites, ShapeKind::Flattop, Exec::Parallel).unwrap();
    let c = simulate(&cfg, 48, &sites, ShapeKind::Flattop, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn sweep_trends() {
    let cfg = SimulationConfig {
        grid_n: 1024,
        ..SimulationConfig::desk()
    };
    for shape in [ShapeKind::Gaussian, ShapeKind::Flattop] {
        let rows = standard_sweep(&cfg, shape, Exec::Parallel).unwrap();
        assert_eq!(rows.len(), 20);
        let single: Vec<_> = rows.iter().filter(|r| r.n_targets == 1).collect();
        for w in single.windows(2) {
            assert!(w[1].metrics.efficiency > w[0].metrics.efficiency, "{shape}");
            assert!(w[1].metrics.accuracy < w[0].metrics.accuracy, "{shape}");
        }
        for r in rows.iter().filter(|r| r.pixels >= 48) {
            let m = &r.metrics;
            assert!(m.crosstalk < 0.03, "{shape} {} {}", r.pixels, r.n_targets);
            assert!((m.efficiency + m.crosstalk + m.out_of_array - 1.0).abs() < 1e-6);
        }
    }
}
