mod common;

use common::*;
use proptest::prelude::*;
use spdc_core::*;

fn split_case(seed: u64, layer_pick: f64, fraction: f64) -> (f64, f64, f64) {
    let s = random_stack(seed, 5);
    let l = 1 + ((layer_pick * s.n_layers() as f64) as usize).min(s.n_layers() - 1);
    let t = s.split_layer(l, fraction).unwrap();
    let p = pump();
    let setup = setup(4);
    let opts = EmissionOptions::default();
    let a = emission(&s, &p, &setup, &opts);
    let b = emission(&t, &p, &setup, &opts);
    let g = rel(&a.g_total().unwrap(), &b.g_total().unwrap());
    let f = rel(&a.f_linear, &b.f_linear);
    (f, g, a.g_total().unwrap().max_abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn splitting_a_layer_changes_nothing(seed in any::<u64>(), pick in 0.0f64..1.0, fraction in 0.05f64..0.95) {
        let (f, g, _) = split_case(seed, pick, fraction);
        prop_assert!(f < 1e-9, "F changed by {f:e}");
        prop_assert!(g < 1e-9, "G changed by {g:e}");
    }

    #[test]
    fn lossless_stacks_conserve_energy(seed in any::<u64>(), x in 0.0f64..1.0) {
        let s = random_stack(seed, 8);
        let omega = 1.5e15 + 4e15 * x;
        for side in Dir::ALL {
            let t = linear_transmission(&s, omega, side).unwrap();
            prop_assert!((t.transmittance + t.reflectance - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn scattering_matrix_is_unitary(seed in any::<u64>()) {
        let s = random_stack(seed, 6);
        let p = pump();
        let setup = setup(3);
        let field = propagate_pump(&s, &p, setup.pairs.omegas()).unwrap();
        let ctx = MatrixContext::new(&s, &setup, &field).unwrap();
        let f = ctx.linear_parts().unwrap().f;
        let ks = setup.signal.len();
        let fs = f.block(0, 0, 4 * ks, 4 * ks);
        let err = fs.adjoint().matmul(&fs).unwrap().sub(&CMatrix::identity(4 * ks)).unwrap().max_abs();
        prop_assert!(err < 1e-9, "{err:e}");
    }

    #[test]
    fn emission_is_a_sum_over_layers(seed in any::<u64>()) {
        let s = random_stack(seed, 4);
        let p = pump();
        let setup = setup(3);
        let opts = EmissionOptions::default();
        let full = emission(&s, &p, &setup, &opts).g_total().unwrap();
        let mut sum = CMatrix::zeros(full.rows(), full.cols());
        for l in 1..=s.n_layers() {
            let only = s.keep_nonlinear_only(&[l]).unwrap();
            if only.is_linear() {
                continue;
            }
            sum.add_assign(&emission(&only, &p, &setup, &opts).g_total().unwrap()).unwrap();
        }
        prop_assert!(rel(&full, &sum) < 1e-10, "{:e}", rel(&full, &sum));
    }

    #[test]
    fn pair_number_scales_with_pump_energy(seed in any::<u64>(), factor in 0.1f64..10.0) {
        let s = random_stack(seed, 3);
        prop_assume!(!s.is_linear());
        let setup = setup(4);
        let p1 = pump();
        let p2 = PumpSpec { energy_per_area: p1.energy_per_area * factor, ..p1 };
        let ch = Channel::new(Mode::new(Dir::F, Pol::X), Mode::new(Dir::F, Pol::Y));
        let n = |p: &PumpSpec| {
            let em = emission(&s, p, &setup, &EmissionOptions::default());
            channel_observables(&em, &setup, ch).unwrap().marginals.count_sv
        };
        let (a, b) = (n(&p1), n(&p2));
        prop_assume!(a > 0.0);
        prop_assert!((b / a / factor - 1.0).abs() < 1e-10);
    }
}

#[test]
fn volume_and_surface_parts_depend_on_the_split() {
    // only their sum is a property of the physical stack
    let s = four_layers();
    let t = s.split_layer(1, 0.37).unwrap();
    let p = pump();
    let setup = setup(6);
    let opts = EmissionOptions {
        keep_boundary_terms: true,
        ..Default::default()
    };
    let a = emission(&s, &p, &setup, &opts);
    let b = emission(&t, &p, &setup, &opts);
    assert!(rel(&a.g_total().unwrap(), &b.g_total().unwrap()) < 1e-12);
    assert!(rel(&a.g_v, &b.g_v) > 1e-3);
    // surface term at the fictitious boundary between the two halves
    let (_, ss) = &b.boundary_terms[1];
    assert!(ss.max_abs() > 1e-3 * b.g_s.max_abs());
}

#[test]
fn runs_are_bitwise_repeatable() {
    let s = four_layers();
    let p = pump();
    let setup = setup(6);
    let a = emission(&s, &p, &setup, &EmissionOptions::default());
    let b = emission(&s, &p, &setup, &EmissionOptions::default());
    assert_eq!(a.g_v, b.g_v);
    assert_eq!(a.g_s, b.g_s);
    assert_eq!(a.f_linear, b.f_linear);
}
