//! Independent checks of the stage propagator against closed-form results.
//!
//! For κ = s = 0, C' = 0, w = 1 the two-field problem has Bessel-function
//! kernels: an impulse S_in(ε') maps to the stored wave
//! B_out(z) = iC·J₀(2C√(z(1−ε'))) and an impulse B_in(z') maps to
//! S_out(ε) = iC·J₀(2C√(ε(1−z'))). These come from iterating the coupled
//! integral equations (the Riemann function of ∂_z∂_ε u = −C²u) and are
//! entirely independent of the marching scheme.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use raman_fwm::{
    build_greens, channel_retrieval, channel_transmission, check_commutators, derive_couplings,
    memory_efficiency_model, uniform_mode, Couplings, Discretization, InputKind, InputState,
    MemoryParams,
};

/// Bessel J0 by power series; exact to machine precision for |x| < 10.
fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..40 {
        term *= q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn passive_couplings(c: f64) -> Couplings {
    Couplings {
        c,
        c_prime: 0.0,
        r: 0.0,
        s: 0.0,
        kappa: 0.0,
        w: 1.0,
        k_omega_disp: 0.0,
        k_s_disp: 0.0,
        k_a_disp: 0.0,
        k_b: 0.0,
    }
}

/// Max kernel-level deviation of G_SB and G_BS from the Bessel solution.
fn kernel_error(n: usize) -> f64 {
    let c = 0.82;
    let disc = Discretization::square(n).unwrap();
    let g = build_greens(&passive_couplings(c), disc).unwrap();
    let h = 1.0 / n as f64;
    let scale = h; // √(h_z h_ε) on a square grid
    let mut worst = 0.0_f64;
    for i in 0..n {
        let z = (i as f64 + 0.5) * h;
        for k in 0..n {
            let eps = (k as f64 + 0.5) * h;
            let want_sb = C64::new(0.0, c * bessel_j0(2.0 * c * (z * (1.0 - eps)).sqrt()));
            let got_sb = g.g_sb[[i, k]] / scale;
            worst = worst.max((got_sb - want_sb).norm());
            let want_bs = C64::new(0.0, c * bessel_j0(2.0 * c * (eps * (1.0 - z)).sqrt()));
            let got_bs = g.g_bs[[k, i]] / scale;
            worst = worst.max((got_bs - want_bs).norm());
        }
    }
    worst
}

#[test]
fn storage_kernels_match_bessel_solution() {
    let err = kernel_error(96);
    assert!(err < 5e-4, "kernel error {err}");
}

#[test]
fn kernel_error_is_second_order() {
    let coarse = kernel_error(32);
    let fine = kernel_error(64);
    let ratio = coarse / fine;
    assert!(ratio > 3.0, "refinement ratio {ratio} (coarse {coarse}, fine {fine})");
}

#[test]
fn read_in_efficiency_matches_quadrature() {
    // η_read_in for the flat mode: C²·∫dz |∫ J₀(2C√(z(1−u))) du|²,
    // evaluated with Simpson's rule on a fine grid.
    let c = 0.82;
    let m = 2000; // even
    let h = 1.0 / m as f64;
    let simpson_w = |i: usize| -> f64 {
        if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let inner = |z: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..=m {
            let u = i as f64 * h;
            acc += simpson_w(i) * bessel_j0(2.0 * c * (z * (1.0 - u)).sqrt());
        }
        acc * h / 3.0
    };
    let mut eta = 0.0;
    for i in 0..=m {
        let z = i as f64 * h;
        let b = inner(z);
        eta += simpson_w(i) * b * b;
    }
    eta *= c * c * h / 3.0;

    let disc = Discretization::square(128).unwrap();
    let g = build_greens(&passive_couplings(c), disc).unwrap();
    let eff = memory_efficiency_model(&g, &g, &uniform_mode(128)).unwrap();
    assert!(
        (eff.eta_read_in - eta).abs() < 2e-4,
        "solver {} vs quadrature {eta}",
        eff.eta_read_in
    );
}

#[test]
fn retrieved_statistics_converge_under_refinement() {
    // downstream g² of the retrieved lossy single photon changes by
    // less than 1e-3 between N = 128 and N = 256
    let cpl = derive_couplings(&MemoryParams::paper_nominal()).unwrap();
    let g2_at = |n: usize| -> f64 {
        let disc = Discretization::square(n).unwrap();
        let g = build_greens(&cpl, disc).unwrap();
        let mode = uniform_mode(n);
        let ret = channel_retrieval(&g, &g, &mode, (1.0, 0.0), None).unwrap();
        let state = InputState::new(InputKind::FockWithLoss(0.22), mode).unwrap();
        raman_fwm::channel_moments(&ret, &state).unwrap().g2.unwrap()
    };
    let a = g2_at(128);
    let b = g2_at(256);
    assert!((a - b).abs() < 1e-3, "g2(128) = {a}, g2(256) = {b}");
}

#[test]
fn commutator_residual_tightens_quadratically_or_better() {
    let cpl = derive_couplings(&MemoryParams::paper_nominal()).unwrap();
    let res = |n: usize| {
        let g = build_greens(&cpl, Discretization::square(n).unwrap()).unwrap();
        check_commutators(&g, cpl.w)
    };
    let (r32, r64, r128) = (res(32), res(64), res(128));
    assert!(r64 * 3.9 < r32, "32→64: {r32} → {r64}");
    assert!(r128 * 3.9 < r64, "64→128: {r64} → {r128}");
    assert!(r128 < 1e-6);
}

#[test]
fn nominal_efficiencies_in_expected_range() {
    let cpl = derive_couplings(&MemoryParams::paper_nominal()).unwrap();
    let disc = Discretization::square(128).unwrap();
    let g = build_greens(&cpl, disc).unwrap();
    let eff = memory_efficiency_model(&g, &g, &uniform_mode(128)).unwrap();
    assert!(
        (0.1..=0.6).contains(&eff.eta_read_in),
        "eta_read_in = {}",
        eff.eta_read_in
    );
    assert!((0.05..=0.5).contains(&eff.eta_tot), "eta_tot = {}", eff.eta_tot);
}

#[test]
fn no_coupling_means_no_storage() {
    let mut p = MemoryParams::paper_nominal();
    p.c_override = Some(1e-12);
    let cpl = derive_couplings(&p).unwrap();
    let disc = Discretization::square(32).unwrap();
    let g = build_greens(&cpl, disc).unwrap();
    let eff = memory_efficiency_model(&g, &g, &uniform_mode(32)).unwrap();
    assert!(eff.eta_read_in < 1e-12);
    assert!(eff.eta_tot < 1e-20);
}

#[test]
fn passive_efficiency_ordering() {
    let mut p = MemoryParams::paper_nominal();
    p.r_override = Some(0.0);
    let cpl = derive_couplings(&p).unwrap();
    let disc = Discretization::square(64).unwrap();
    let g = build_greens(&cpl, disc).unwrap();
    let eff = memory_efficiency_model(&g, &g, &uniform_mode(64)).unwrap();
    assert!(eff.eta_tot <= eff.eta_read_in + 1e-9);
    assert!(eff.eta_read_in <= 1.0 + 1e-9);
}

#[test]
fn beam_splitter_invariance_of_g2() {
    // passive channel: output g² equals input g² for all three families
    let mut p = MemoryParams::paper_nominal();
    p.r_override = Some(0.0);
    let cpl = derive_couplings(&p).unwrap();
    let disc = Discretization::square(64).unwrap();
    let g = build_greens(&cpl, disc).unwrap();
    let mode = uniform_mode(64);
    let trans = channel_transmission(&g, &mode, (1.0, 0.0)).unwrap();
    let ret = channel_retrieval(&g, &g, &mode, (1.0, 0.0), None).unwrap();
    let cases: [(InputKind, f64); 3] = [
        (InputKind::Coherent(0.5), 1.0),
        (InputKind::Thermal(0.5), 2.0),
        (InputKind::FockWithLoss(0.7), 0.0),
    ];
    for (kind, want) in cases {
        let state = InputState::new(kind.clone(), mode.clone()).unwrap();
        for ch in [&trans, &ret] {
            let m = raman_fwm::channel_moments(ch, &state).unwrap();
            let g2 = m.g2.unwrap();
            assert!((g2 - want).abs() < 1e-6, "{kind:?}: g2 = {g2}, want {want}");
        }
    }
}

/// A vector with a relative phase ramp stays normalized and is accepted as
/// a mode; statistics stay invariant under a global phase of the mode.
#[test]
fn global_mode_phase_is_irrelevant() {
    let cpl = derive_couplings(&MemoryParams::paper_nominal()).unwrap();
    let disc = Discretization::square(32).unwrap();
    let g = build_greens(&cpl, disc).unwrap();
    let mode = uniform_mode(32);
    let phased: Array1<C64> = mode.mapv(|v| v * C64::from_polar(1.0, 0.7));
    let t1 = channel_transmission(&g, &mode, (1.0, 0.0)).unwrap();
    let t2 = channel_transmission(&g, &phased, (1.0, 0.0)).unwrap();
    let s1 = InputState::new(InputKind::Coherent(0.23), mode).unwrap();
    let s2 = InputState::new(InputKind::Coherent(0.23), phased).unwrap();
    let m1 = raman_fwm::channel_moments(&t1, &s1).unwrap();
    let m2 = raman_fwm::channel_moments(&t2, &s2).unwrap();
    assert!((m1.mean_photons - m2.mean_photons).abs() < 1e-12);
    assert!((m1.g2.unwrap() - m2.g2.unwrap()).abs() < 1e-12);
}
