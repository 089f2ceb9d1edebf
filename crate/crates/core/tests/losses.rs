use pano_depth::losses::{self, LossKind, LossOptions, LossValue, VnlConfig};
use pano_depth::Grid;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const W: usize = 16;
const H: usize = 8;
const FIXTURES: u64 = 20;

fn all() -> Grid<bool> {
    Grid::filled(W, H, true)
}

fn noisy(rng: &mut ChaCha8Rng) -> Grid<f64> {
    Grid::from_fn(W, H, |_, _| rng.gen_range(0.5..4.0))
}

/// Low-frequency depth: a few random harmonics in longitude and latitude.
fn smooth(rng: &mut ChaCha8Rng) -> Grid<f64> {
    let c: Vec<(f64, f64, f64)> = (0..3).map(|_| (rng.gen_range(-0.3..0.3), rng.gen_range(0.0..6.3), rng.gen_range(-0.2..0.2))).collect();
    Grid::from_fn(W, H, |i, j| {
        let x = std::f64::consts::TAU * i as f64 / W as f64;
        let y = j as f64 / H as f64;
        2.0 + c.iter().enumerate().map(|(k, &(a, p, b))| a * ((k + 1) as f64 * x + p).sin() + b * y * y).sum::<f64>()
    })
}

fn opts() -> LossOptions {
    LossOptions {
        grad_scales: 4,
        vnl: VnlConfig { n_triplets: 200, seed: 3, ..VnlConfig::default() },
    }
}

fn fd_check(kind: LossKind, tol: f64, smooth_inputs: bool) {
    for seed in 0..FIXTURES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pred, gt) = if smooth_inputs { (smooth(&mut rng), smooth(&mut rng)) } else { (noisy(&mut rng), noisy(&mut rng)) };
        let rel = losses::finite_difference_check(kind, &pred, &gt, &all(), &opts(), losses::DEFAULT_FD_STEP).unwrap();
        assert!(rel < tol, "{kind} fixture {seed}: relative discrepancy {rel:e}");
    }
}

#[test]
fn l1_gradient_matches_fd() {
    fd_check(LossKind::L1, 1e-5, false);
}

#[test]
fn log_gradient_matches_fd() {
    fd_check(LossKind::Log, 1e-5, false);
}

#[test]
fn berhu_gradient_matches_fd() {
    // residuals exactly at the threshold are a measure-zero kink
    fd_check(LossKind::Berhu, 1e-4, false);
}

#[test]
fn grad_matching_gradient_matches_fd() {
    fd_check(LossKind::Grad, 1e-4, false);
}

#[test]
fn cosine_gradient_matches_fd() {
    fd_check(LossKind::Cosine, 1e-4, true);
}

#[test]
fn vnl_gradient_matches_fd() {
    fd_check(LossKind::Vnl, 1e-4, true);
}

#[test]
fn compositions_match_fd() {
    fd_check(LossKind::Comb, 1e-4, true);
    fd_check(LossKind::CombVnl, 1e-4, true);
    fd_check(LossKind::L1Vnl, 1e-4, true);
}

#[test]
fn masked_pixels_have_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (pred, gt) = (smooth(&mut rng), smooth(&mut rng));
    let mut mask = all();
    for k in [3, 20, 21, 50, 99] {
        mask.as_mut_slice()[k] = false;
    }
    for kind in LossKind::ALL {
        let l = losses::evaluate(kind, &pred, &gt, &mask, &opts()).unwrap();
        for k in [3, 20, 21, 50, 99] {
            assert_eq!(l.gradient.as_slice()[k], 0.0, "{kind}");
        }
        let rel = losses::finite_difference_check(kind, &pred, &gt, &mask, &opts(), losses::DEFAULT_FD_STEP).unwrap();
        assert!(rel < 1e-4, "{kind}: {rel:e}");
    }
}

#[test]
fn every_loss_vanishes_at_ground_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gt = smooth(&mut rng);
    for kind in LossKind::ALL {
        let l = losses::evaluate(kind, &gt, &gt, &all(), &opts()).unwrap();
        assert_eq!(l, LossValue::zero(W, H), "{kind}");
    }
}

#[test]
fn grad_matching_ignores_offsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let gt = noisy(&mut rng);
    let pred = gt.map(|g| g + 0.75);
    let l = losses::grad_matching(&pred, &gt, &all(), 4).unwrap();
    assert!(l.value.abs() < 1e-12);
}

#[test]
fn normal_losses_ignore_uniform_scale() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gt = smooth(&mut rng);
        let s = rng.gen_range(0.3..3.0);
        let pred = gt.map(|g| g * s);
        let c = losses::cosine_normal(&pred, &gt, &all()).unwrap();
        assert!(c.value < 1e-12, "cosine {}", c.value);
        let v = losses::vnl(&pred, &gt, &all(), &opts().vnl).unwrap();
        assert!(v.value < 1e-12, "vnl {}", v.value);

        // joint scaling of pred and gt leaves both unchanged
        let other = smooth(&mut rng);
        let base = losses::cosine_normal(&other, &gt, &all()).unwrap().value;
        let scaled = losses::cosine_normal(&other.map(|x| x * s), &gt.map(|x| x * s), &all()).unwrap().value;
        assert!((base - scaled).abs() < 1e-12);
        let base = losses::vnl(&other, &gt, &all(), &opts().vnl).unwrap().value;
        let scaled = losses::vnl(&other.map(|x| x * s), &gt.map(|x| x * s), &all(), &opts().vnl).unwrap().value;
        assert!((base - scaled).abs() < 1e-12);
    }
}

#[test]
fn vnl_is_deterministic_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (pred, gt) = (smooth(&mut rng), smooth(&mut rng));
    let cfg = opts().vnl;
    let a = losses::vnl(&pred, &gt, &all(), &cfg).unwrap();
    assert_eq!(a, losses::vnl(&pred, &gt, &all(), &cfg).unwrap());
    let b = losses::vnl(&pred, &gt, &all(), &VnlConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a.value, b.value);
}

#[test]
fn comb_is_sum_of_its_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (pred, gt) = (smooth(&mut rng), smooth(&mut rng));
    let o = opts();
    let parts: Vec<f64> = [LossKind::L1, LossKind::Grad, LossKind::Cosine, LossKind::Vnl]
        .iter()
        .map(|&k| losses::evaluate(k, &pred, &gt, &all(), &o).unwrap().value)
        .collect();
    let comb = losses::evaluate(LossKind::Comb, &pred, &gt, &all(), &o).unwrap().value;
    let comb_vnl = losses::evaluate(LossKind::CombVnl, &pred, &gt, &all(), &o).unwrap().value;
    let l1_vnl = losses::evaluate(LossKind::L1Vnl, &pred, &gt, &all(), &o).unwrap().value;
    assert!((comb - (parts[0] + parts[1] + parts[2])).abs() < 1e-12);
    assert!((comb_vnl - (comb + parts[3])).abs() < 1e-12);
    assert!((l1_vnl - (parts[0] + parts[3])).abs() < 1e-12);
}

proptest! {
    #[test]
    fn combine_is_linear(a in prop::collection::vec(-5.0f64..5.0, 4), b in prop::collection::vec(-5.0f64..5.0, 4), va in 0.0f64..10.0, vb in 0.0f64..10.0) {
        let ta = LossValue { value: va, gradient: Grid::from_vec(4, 1, a.clone()).unwrap() };
        let tb = LossValue { value: vb, gradient: Grid::from_vec(4, 1, b.clone()).unwrap() };
        let c = losses::combine(&[ta, tb], None).unwrap();
        prop_assert_eq!(c.value, va + vb);
        for k in 0..4 {
            prop_assert_eq!(c.gradient.as_slice()[k], a[k] + b[k]);
        }
    }
}
