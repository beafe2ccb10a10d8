//! Worked examples for the hard-function construction on the instance `n = 2`,
//! `succ = (2, 3, 3, 4)`, whose only solution is node 2.

use flowtrap::hardfn::{
    bicubic_coeffs, cell_catalogue, check_box_group, corner_data, derive_params, iter_solutions_bruteforce,
    reflect_x, reflect_y, region_label, verify_no_spurious, GridCorner, HardFunction, IterInstance, RegionLabel,
};

fn instance() -> IterInstance {
    IterInstance::new(2, vec![2, 3, 3, 4]).unwrap()
}

fn corner(value: f64, gx: f64, gy: f64) -> GridCorner {
    GridCorner { value, grad: [gx, gy] }
}

#[test]
fn parameters_follow_the_parity_rule() {
    let p = derive_params(&IterInstance::new(1, vec![2, 2]).unwrap());
    assert_eq!((p.n_grid, p.m, p.k), (16, 53, 26.5));
    let p = derive_params(&instance());
    assert_eq!((p.n_grid, p.m, p.k), (32, 101, 50.5));
}

#[test]
fn region_labels_and_corner_data() {
    let inst = instance();
    let p = derive_params(&inst);
    let m = p.m;
    let k_minus_3_2 = (p.k - 1.5) as i64;
    let k_minus_1_2 = (p.k - 0.5) as i64;
    let k_plus_1_2 = (p.k + 0.5) as i64;

    assert_eq!(region_label(1, 1, &p, &inst), RegionLabel::Background);
    assert_eq!(corner_data(1, 1, &p, &inst), corner((m - 1) as f64, -0.5, 0.0));

    assert_eq!(region_label(k_minus_3_2, 0, &p, &inst), RegionLabel::DarkBlue);
    assert_eq!(corner_data(k_minus_3_2, 0, &p, &inst), corner(-(p.k - 1.5) - 6.0 * m as f64, -0.5, 0.0));
    assert_eq!(corner_data(k_minus_1_2, 0, &p, &inst).grad, [0.0, -0.5]);

    assert_eq!(region_label(k_plus_1_2, m, &p, &inst), RegionLabel::TopRed);
}

#[test]
fn bicubic_examples() {
    let c = 7.25;
    let flat = bicubic_coeffs(&[[corner(c, 0.0, 0.0); 2]; 2]);
    assert_eq!(flat.a[0][0], c);
    assert!(flat.a.iter().flatten().skip(1).all(|&v| v == 0.0));

    let plane = |x: f64, y: f64| corner(-x - y, -1.0, -1.0);
    let cell = bicubic_coeffs(&[[plane(0.0, 0.0), plane(0.0, 1.0)], [plane(1.0, 0.0), plane(1.0, 1.0)]]);
    for k in 0..=10 {
        for l in 0..=10 {
            let (x, y) = (k as f64 / 10.0, l as f64 / 10.0);
            let (v, g) = cell.value_grad(x, y);
            assert!((v + x + y).abs() < 1e-12 && (g[0] + 1.0).abs() < 1e-12 && (g[1] + 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn lattice_values_and_bounds() {
    let inst = instance();
    let p = derive_params(&inst);
    let raw = HardFunction::new(inst.clone(), false);
    for (a, b) in [(0, 0), (1, 1), (50, 0), (70, 70), (100, 3), (5, 100)] {
        let (v, g) = raw.eval_raw(a as f64, b as f64);
        let c = corner_data(a, b, &p, &inst);
        assert_eq!((v, g), (c.value, c.grad), "lattice point ({a}, {b})");
    }
    let bounds = raw.certify();
    assert!(bounds.max_coeff <= 1024.0 * p.m as f64, "max coefficient {}", bounds.max_coeff);

    let normalized = HardFunction::new(inst, true);
    let m = p.m as f64;
    for k in 0..400 {
        for l in 0..400 {
            let v = normalized.value(k as f64 * m / 400.0, l as f64 * m / 400.0);
            assert!(v.abs() <= 16384.0);
        }
    }
}

#[test]
fn verification_passes_and_decodes_the_solution() {
    let inst = instance();
    let expected: Vec<u32> = iter_solutions_bruteforce(&inst).iter().map(|s| s.v).collect();
    assert_eq!(expected, vec![2]);
    let report = verify_no_spurious(&HardFunction::new(inst, false), 0.05).unwrap();
    assert!(report.offenders.is_empty(), "{:?}", &report.offenders[..report.offenders.len().min(3)]);
    assert!(report.passed());
    assert_eq!(report.decoded_solutions, vec![2]);
    assert_eq!(report.hits_box_a, vec![2]);
    assert_eq!(report.hits_box_b, vec![2]);
}

#[test]
fn a_missing_connector_creates_offenders() {
    let hf = HardFunction::new(instance(), false).omitting_connector(1);
    let report = verify_no_spurious(&hf, 0.05).unwrap();
    assert!(!report.offenders.is_empty());
    assert!(!report.passed());
}

#[test]
fn box_groups() {
    // Background: values drop by one per column, arrows point left.
    let background = [[corner(10.0, -0.5, 0.0), corner(10.0, -0.5, 0.0)], [corner(9.0, -0.5, 0.0), corner(9.0, -0.5, 0.0)]];
    assert!(check_box_group(&background) >= 0.01);

    // Equal values with arrows facing each other leave a flat spot between them.
    let invalid = [[corner(0.0, 0.5, 0.0), corner(0.0, 0.5, 0.0)], [corner(0.0, -0.5, 0.0), corner(0.0, -0.5, 0.0)]];
    assert!(check_box_group(&invalid) < 0.01);

    let hf = HardFunction::new(instance(), false);
    let catalogue = cell_catalogue(&hf);
    assert!(catalogue.len() > 4);
    for (cfg, _) in catalogue.iter().take(64) {
        let base = check_box_group(cfg);
        for mirrored in [reflect_x(cfg), reflect_y(cfg)] {
            let other = check_box_group(&mirrored);
            assert!((base - other).abs() <= 1e-6 * base.max(1.0), "{base} vs {other} for {cfg:?}");
        }
    }
}
