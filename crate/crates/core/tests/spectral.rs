use std::f64::consts::PI;

use proptest::prelude::*;
use surfflow::spectral::*;

fn grid3(points: usize) -> HorizontalGrid {
    HorizontalGrid::for_dimension(3, 2.0 * PI, points).unwrap()
}

proptest! {
    #[test]
    fn fourier_round_trip(values in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let h = grid3(8);
        let f = HeightField::from_values(&h, values).unwrap();
        let back = inverse_height(&forward_height(&f).unwrap());
        for (a, b) in f.values.iter().zip(&back.values) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }
}

#[test]
fn bulk_round_trip() {
    let h = grid3(8);
    let v = VerticalGrid::new(2.0, 9).unwrap();
    let f = BulkField::from_fn(&h, &v, 2, |x, z| vec![(x[0] + 2.0 * x[1]).sin() * z, (3.0 * x[1]).cos() + z * z]);
    let back = inverse_bulk(&forward_bulk(&f).unwrap());
    assert!(f.sub(&back).max_abs() < 1e-14);
}

#[test]
fn horizontal_derivative_is_exact_on_modes() {
    let h = grid3(16);
    let f = HeightField::from_fn(&h, |x| (2.0 * x[0] - 3.0 * x[1]).sin());
    let d0 = height_derivative(&f, 0).unwrap();
    let d1 = height_derivative(&f, 1).unwrap();
    for i in 0..h.len() {
        let x = h.coords(i);
        let c = (2.0 * x[0] - 3.0 * x[1]).cos();
        assert!((d0.values[i] - 2.0 * c).abs() < 1e-12);
        assert!((d1.values[i] + 3.0 * c).abs() < 1e-12);
    }
}

#[test]
fn vertical_derivative_is_second_order() {
    let h = grid3(4);
    let err = |m: usize| {
        let v = VerticalGrid::new(1.0, m).unwrap();
        let f = BulkField::from_fn(&h, &v, 1, |_, z| vec![(2.0 * z).sin()]);
        let d = f.dz(1);
        let exact = BulkField::from_fn(&h, &v, 1, |_, z| vec![2.0 * (2.0 * z).cos()]);
        d.sub(&exact).max_abs()
    };
    let order = (err(33) / err(65)).log2();
    assert!(order > 1.9, "order {order}");
}

#[test]
fn extensions_match_closed_forms() {
    let h = grid3(16);
    let v = VerticalGrid::new(3.0, 13).unwrap();
    let f = HeightField::from_fn(&h, |x| (3.0 * x[0] + 4.0 * x[1]).cos() + 0.5);
    let a = extend_a(&f, &v).unwrap();
    let b = extend_b(&f, &v).unwrap();
    let k = 5.0f64;
    let kb = (1.0 + k * k).sqrt();
    for ih in 0..h.len() {
        let x = h.coords(ih);
        let c = (3.0 * x[0] + 4.0 * x[1]).cos();
        for iz in 0..v.points() {
            let z = v.node(iz);
            assert!((a.get(0, ih, iz) - (c * (k * z).exp() + 0.5)).abs() < 1e-12);
            assert!((b.get(0, ih, iz) - (c * (kb * z).exp() + 0.5 * z.exp())).abs() < 1e-12);
        }
    }
    assert_eq!(ExtensionKind::for_dimension(3).unwrap(), ExtensionKind::Harmonic);
    assert_eq!(ExtensionKind::for_dimension(4).unwrap(), ExtensionKind::Bessel);
    assert!(ExtensionKind::for_dimension(5).is_err());
}

#[test]
fn lq_norms_of_simple_fields() {
    let h = grid3(16);
    let one = HeightField::from_fn(&h, |_| 1.0);
    let area = (2.0 * PI).powi(2);
    assert!((norm_lq_height(&one, 2.0).unwrap() - area.sqrt()).abs() < 1e-12);
    assert!((norm_lq_height(&one, 4.0).unwrap() - area.powf(0.25)).abs() < 1e-12);
    let s = HeightField::from_fn(&h, |x| x[0].sin());
    assert!((norm_lq_height(&s, 2.0).unwrap() - (area / 2.0).sqrt()).abs() < 1e-12);
    assert!(norm_lq_height(&s, 0.5).is_err());
    let v = VerticalGrid::new(2.0, 5).unwrap();
    let b = BulkField::from_fn(&h, &v, 2, |_, _| vec![3.0, 4.0]);
    assert!((norm_lq_bulk(&b, 2.0).unwrap() - 5.0 * (2.0 * area).sqrt()).abs() < 1e-11);
}

#[test]
fn sobolev_norm_of_a_single_mode() {
    let h = grid3(16);
    let s = HeightField::from_fn(&h, |x| (3.0 * x[1]).sin());
    let l2 = norm_lq_height(&s, 2.0).unwrap();
    let h1 = sobolev_height(&s, 2.0, SobolevOrder::Integer(1)).unwrap();
    assert!((h1 / l2 - 10f64.sqrt()).abs() < 1e-10, "{}", h1 / l2);
}

#[test]
fn grids_reject_bad_sizes() {
    assert!(HorizontalGrid::for_dimension(5, 1.0, 8).is_err());
    assert!(VerticalGrid::new(-1.0, 8).is_err());
    let v = VerticalGrid::new(2.0, 5).unwrap();
    assert_eq!(v.node(0), -2.0);
    assert_eq!(v.node(4), 0.0);
    let w: f64 = (0..5).map(|i| v.trapezoid_weight(i)).sum();
    assert!((w - 2.0).abs() < 1e-15);
}
