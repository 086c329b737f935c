//! Mixed-mode transform, cascading and the scalar frequency-domain metrics
//! against closed-form and brute-force oracles.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use pwbsi_core::metrics::{
    designed_in_skew, flight_time, loss_per_inch, random_skew, scd21_db, sdd11_crossing, total_skew, unwrap_phase,
    DB_FLOOR, METERS_PER_INCH,
};
use pwbsi_core::network::{cascade_diff, to_mixed_mode, DiffBlock, Matrix2, Matrix4, NetworkData, PortMap};
use pwbsi_core::record::NetRecord;
use pwbsi_core::synth::{generate_population, pair_network, LineParams, PopulationSpec};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn grid() -> Vec<f64> {
    (1..=600).map(|k| k as f64 * 10e6).collect()
}

fn rec(lp: f64, ln: f64) -> NetRecord {
    NetRecord {
        net_name: "NET1".into(),
        board_serial: "SN1".into(),
        routing_core: 0,
        len_p_in: Some(lp),
        len_n_in: Some(ln),
        tester_id: "T".into(),
        s4p_path: "x.s4p".into(),
        port_map: PortMap::default(),
    }
}

/// Uncoupled lines with through terms `p(f)` and `n(f)` and no reflection.
fn through_pair(f: &[f64], p: impl Fn(f64) -> Complex64, n: impl Fn(f64) -> Complex64) -> NetworkData {
    let s = f
        .iter()
        .map(|&x| {
            let mut m = [[ZERO; 4]; 4];
            m[1][0] = p(x);
            m[0][1] = p(x);
            m[3][2] = n(x);
            m[2][3] = n(x);
            m
        })
        .collect();
    NetworkData::new(f.to_vec(), s, 50.0).unwrap()
}

fn delay(tau: f64) -> impl Fn(f64) -> Complex64 {
    move |f| Complex64::from_polar(1.0, -2.0 * PI * f * tau)
}

fn lossy_line(z: f64, delay_s: f64, len: f64) -> LineParams {
    LineParams {
        z_ohm: z,
        delay_s,
        length_in: len,
        k_skin_db_per_in: 0.09,
        k_diel_db_per_in: 0.06,
        via_c_near_f: 0.0,
        via_c_far_f: 0.0,
    }
}

#[test]
fn identical_lossless_lines_are_purely_differential() {
    let f = grid();
    let mm = to_mixed_mode(&through_pair(&f, delay(1e-9), delay(1e-9)));
    for (i, &x) in f.iter().enumerate() {
        assert_eq!(mm.scd[i][1][0], ZERO);
        assert!((mm.sdd[i][1][0] - delay(1e-9)(x)).norm() < 1e-15);
    }
    assert_eq!(mm.z_ref_diff_ohm, 100.0);
    assert_eq!(mm.z_ref_comm_ohm, 25.0);
}

#[test]
fn two_delay_identity_over_skew_sweep() {
    let f = grid();
    for dt_ps in [5.0, 20.0, 56.0] {
        let tau = 1.3e-9;
        let mm = to_mixed_mode(&through_pair(&f, delay(tau + dt_ps * 1e-12), delay(tau)));
        for fs in [1e9, 2e9, 4e9] {
            let expected = 20.0 * (PI * fs * dt_ps * 1e-12).sin().abs().log10();
            let got = scd21_db(&mm, fs).unwrap();
            assert!((got - expected).abs() < 0.01, "dt {dt_ps} ps f {fs}: {got} vs {expected}");
        }
        for i in 0..f.len() {
            let e = mm.sdd[i][1][0].norm_sqr() + mm.scd[i][1][0].norm_sqr();
            assert!((e - 1.0).abs() < 1e-9);
        }
    }
    // Δτ = 50 ps at 2 GHz
    let mm = to_mixed_mode(&through_pair(&f, delay(50e-12), delay(0.0)));
    assert!((scd21_db(&mm, 2e9).unwrap() - (-10.2)).abs() < 0.05);
}

#[test]
fn generated_networks_are_passive() {
    let spec = PopulationSpec { boards: 2, nets_per_board: 6, freq_points: 120, ..PopulationSpec::default() };
    let gt = generate_population(&spec).unwrap();
    for i in 0..gt.nets.len() {
        let net = gt.network(i);
        for m in net.matrices() {
            let a = DMatrix::from_fn(4, 4, |r, c| m[r][c]);
            let smax = a.singular_values().max();
            assert!(smax <= 1.0 + 1e-6, "net {i}: {smax}");
        }
        let mm = to_mixed_mode(&net);
        for blocks in [&mm.sdd, &mm.sdc, &mm.scd, &mm.scc] {
            assert!(blocks.iter().flatten().flatten().all(|v| v.norm() <= 1.0 + 1e-6));
        }
    }
}

fn random_matrix4(v: &[f64]) -> Matrix4 {
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let k = 2 * (4 * r + c);
            m[r][c] = Complex64::new(v[k], v[k + 1]);
        }
    }
    m
}

proptest! {
    #[test]
    fn mixed_mode_is_linear(
        a in prop::collection::vec(-1.0f64..1.0, 32),
        b in prop::collection::vec(-1.0f64..1.0, 32),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
    ) {
        let f = vec![1e9, 2e9];
        let (sa, sb) = (random_matrix4(&a), random_matrix4(&b));
        let mut sum = [[ZERO; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                sum[r][c] = sa[r][c] * alpha + sb[r][c] * beta;
            }
        }
        let net = |m: Matrix4| to_mixed_mode(&NetworkData::new(f.clone(), vec![m; 2], 50.0).unwrap());
        let (ma, mb, ms) = (net(sa), net(sb), net(sum));
        for (x, (y, z)) in [(&ms.sdd, (&ma.sdd, &mb.sdd)), (&ms.scd, (&ma.scd, &mb.scd)), (&ms.sdc, (&ma.sdc, &mb.sdc)), (&ms.scc, (&ma.scc, &mb.scc))] {
            for r in 0..2 {
                for c in 0..2 {
                    let lhs = x[0][r][c];
                    let rhs = y[0][r][c] * alpha + z[0][r][c] * beta;
                    prop_assert!((lhs - rhs).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cascade_is_associative(seeds in prop::collection::vec((40.0f64..70.0, 0.1e-9f64..2e-9, 1.0f64..20.0), 3)) {
        let f: Vec<f64> = (1..=60).map(|k| k as f64 * 1e8).collect();
        let blocks: Vec<DiffBlock> = seeds.iter().map(|&(z, d, l)| line_block(&f, &lossy_line(z, d, l))).collect();
        let left = cascade_diff(&cascade_diff(&blocks[0], &blocks[1]).unwrap(), &blocks[2]).unwrap();
        let right = cascade_diff(&blocks[0], &cascade_diff(&blocks[1], &blocks[2]).unwrap()).unwrap();
        for (x, y) in left.s.iter().zip(&right.s) {
            for r in 0..2 {
                for c in 0..2 {
                    prop_assert!((x[r][c] - y[r][c]).norm() < 1e-8);
                }
            }
        }
    }
}

fn line_block(f: &[f64], p: &LineParams) -> DiffBlock {
    let s = f.iter().map(|&x| p.abcd(x).to_s(50.0)).collect();
    DiffBlock::new(f.to_vec(), s, 50.0).unwrap()
}

/// Redheffer star product: the textbook signal-flow cascade of two 2-ports.
fn star(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let one = Complex64::new(1.0, 0.0);
    let d = one - a[1][1] * b[0][0];
    [
        [a[0][0] + a[0][1] * b[0][0] * a[1][0] / d, a[0][1] * b[0][1] / d],
        [b[1][0] * a[1][0] / d, b[1][1] + b[1][0] * a[1][1] * b[0][1] / d],
    ]
}

#[test]
fn mismatched_sections_cascade_like_signal_flow() {
    let f: Vec<f64> = (1..=200).map(|k| k as f64 * 3e7).collect();
    let mut sec = lossy_line(65.0, 0.4e-9, 2.5);
    sec.via_c_far_f = 0.3e-12;
    let b = line_block(&f, &sec);
    let c = cascade_diff(&b, &b).unwrap();
    for (i, &x) in f.iter().enumerate() {
        let s = sec.abcd(x).to_s(50.0);
        let oracle = star(&s, &s);
        // and the ABCD product of the two sections
        let abcd = sec.abcd(x).then(&sec.abcd(x)).to_s(50.0);
        for r in 0..2 {
            for k in 0..2 {
                assert!((c.s[i][r][k] - oracle[r][k]).norm() < 1e-9);
                assert!((c.s[i][r][k] - abcd[r][k]).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn cascaded_delays_add() {
    let f = grid();
    let c = cascade_diff(&DiffBlock::delay(&f, 0.7e-9, 100.0), &DiffBlock::delay(&f, 1.1e-9, 100.0)).unwrap();
    let d = DiffBlock::delay(&f, 1.8e-9, 100.0);
    for (x, y) in c.s21().iter().zip(d.s21()) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn delay_line_phase_and_flight_time() {
    let f = grid();
    let s: Vec<Complex64> = f.iter().map(|&x| delay(1.562e-9)(x)).collect();
    let phase = unwrap_phase(&s).unwrap();
    assert!((phase[99] - (-360.0 * 1e9 * 1.562e-9)).abs() < 1e-6);
    let t: Vec<f64> = [1e9, 2e9, 4e9].iter().map(|&fs| flight_time(&s, &f, fs).unwrap()).collect();
    assert!((t[0] - 1.562e-9).abs() < 1e-15);
    assert!(t.iter().all(|x| (x - t[0]).abs() < 1e-15));
    let through = vec![Complex64::new(1.0, 0.0); f.len()];
    assert_eq!(flight_time(&through, &f, 2e9).unwrap(), 0.0);
    assert!(unwrap_phase(&[Complex64::new(1.0, 0.0), ZERO]).is_err());
}

#[test]
fn injected_skew_is_recovered() {
    let f = grid();
    let v = 1.6e8;
    let net = through_pair(&f, delay(2e-9 + 10e-12), delay(2e-9));
    for fs in [1e9, 2e9, 4e9] {
        let rs = random_skew(&net, &rec(12.0, 12.0), v, fs).unwrap();
        assert!((rs - 10.0).abs() < 0.1, "{rs}");
    }
    // the length mismatch fully explains an 8 ps physical skew
    let dlen = 8e-12 * v / METERS_PER_INCH;
    let r = rec(12.0 + dlen, 12.0);
    assert!((designed_in_skew(&r, v).unwrap() - 8e-12).abs() < 1e-24);
    let net = through_pair(&f, delay(2e-9 + 8e-12), delay(2e-9));
    assert!(random_skew(&net, &r, v, 1e9).unwrap().abs() < 1e-6);
    let mut incomplete = rec(1.0, 1.0);
    incomplete.len_n_in = None;
    assert!(random_skew(&net, &incomplete, v, 1e9).is_err());
}

#[test]
fn skew_is_antisymmetric_and_ignores_common_delay() {
    let f = grid();
    let mut p = lossy_line(52.0, 1.3e-9, 8.0);
    p.via_c_near_f = 0.2e-12;
    let mut n = p;
    n.delay_s += 17e-12;
    let net = pair_network(&p, &n, &f, 50.0);
    let swapped = net.remapped(&PortMap::default().swapped_pn());
    for fs in [1e9, 2e9, 4e9] {
        assert_eq!(total_skew(&net, fs).unwrap(), -total_skew(&swapped, fs).unwrap());
    }

    // a matched delay appended at the far end of both conductors
    let r = rec(8.0, 8.0);
    let extra = 0.9e-9;
    let s: Vec<Matrix4> = net
        .matrices()
        .iter()
        .zip(&f)
        .map(|(m, &x)| {
            let d = delay(extra)(x);
            let mut out = *m;
            for far in [1, 3] {
                for k in 0..4 {
                    out[far][k] *= d;
                    out[k][far] *= d;
                }
            }
            out
        })
        .collect();
    let delayed = NetworkData::new(f.clone(), s, 50.0).unwrap();
    for fs in [1e9, 2e9, 4e9] {
        let a = random_skew(&net, &r, 1.6e8, fs).unwrap();
        let b = random_skew(&delayed, &r, 1.6e8, fs).unwrap();
        assert!((a - b).abs() < 0.01, "{a} vs {b}");
    }
}

#[test]
fn loss_per_inch_cases() {
    let f = grid();
    let lossless = to_mixed_mode(&through_pair(&f, delay(1e-9), delay(1e-9)));
    assert!(loss_per_inch(&lossless, &rec(7.0, 7.0), 4e9).unwrap().abs() < 1e-12);

    let half = to_mixed_mode(&through_pair(&f, |_| Complex64::new(0.5, 0.0), |_| Complex64::new(0.5, 0.0)));
    assert!((loss_per_inch(&half, &rec(10.0, 10.0), 2e9).unwrap() - 0.60206).abs() < 1e-5);

    let dead = to_mixed_mode(&through_pair(&f, |_| ZERO, |_| ZERO));
    assert!(loss_per_inch(&dead, &rec(1.0, 1.0), 1e9).is_err());

    // symmetric pair: swapping P and N leaves loss unchanged
    let p = lossy_line(52.0, 2e-9, 13.0);
    let mut n = p;
    n.delay_s += 6e-12;
    let net = pair_network(&p, &n, &f, 50.0);
    let sw = to_mixed_mode(&net.remapped(&PortMap::default().swapped_pn()));
    let mm = to_mixed_mode(&net);
    for fs in [1e9, 2e9, 4e9] {
        let a = loss_per_inch(&mm, &rec(13.0, 13.0), fs).unwrap();
        let b = loss_per_inch(&sw, &rec(13.0, 13.0), fs).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn loss_budget_of_a_twenty_inch_line() {
    let f = grid();
    let p = LineParams { z_ohm: 50.0, ..lossy_line(50.0, 3e-9, 20.0) };
    let mm = to_mixed_mode(&pair_network(&p, &p, &f, 50.0));
    let i = f.iter().position(|&x| x == 4e9).unwrap();
    assert!((mm.sdd[i][1][0].norm() - 0.380).abs() < 0.005);
    assert!((loss_per_inch(&mm, &rec(20.0, 20.0), 4e9).unwrap() - 0.42).abs() < 0.01);
}

#[test]
fn mode_conversion_floor() {
    let f = grid();
    let mm = to_mixed_mode(&through_pair(&f, delay(1e-9), delay(1e-9)));
    assert_eq!(scd21_db(&mm, 1e9).unwrap(), DB_FLOOR);
}

#[test]
fn sdd11_crossing_matches_dense_search() {
    let coarse = grid();
    let dense: Vec<f64> = (1..=60_000).map(|k| k as f64 * 1e5).collect();
    let mut p = lossy_line(50.0, 0.25e-9, 1.5);
    p.via_c_near_f = 0.6e-12;
    p.via_c_far_f = 0.6e-12;
    let hit = sdd11_crossing(&to_mixed_mode(&pair_network(&p, &p, &coarse, 50.0)), -10.0).unwrap();
    let mm = to_mixed_mode(&pair_network(&p, &p, &dense, 50.0));
    let first = mm.sdd.iter().position(|m| 20.0 * m[0][0].norm().log10() > -10.0).unwrap();
    assert!((hit - dense[first]).abs() <= 10e6, "{hit} vs {}", dense[first]);

    let matched = to_mixed_mode(&through_pair(&coarse, delay(1e-9), delay(1e-9)));
    assert_eq!(sdd11_crossing(&matched, -10.0), None);

    let s: Vec<Matrix4> = coarse
        .iter()
        .map(|_| {
            let mut m = [[ZERO; 4]; 4];
            m[0][0] = Complex64::new(0.5, 0.0);
            m[2][2] = Complex64::new(0.5, 0.0);
            m
        })
        .collect();
    let reflective = to_mixed_mode(&NetworkData::new(coarse.clone(), s, 50.0).unwrap());
    assert_eq!(sdd11_crossing(&reflective, -10.0), Some(coarse[0]));
}
