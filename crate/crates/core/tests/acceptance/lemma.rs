//! Properties of the disjoint measure under the modified volume, for
//! non-inverted boxes with non-zero volume:
//! (1) `0 ≤ D ≤ 1` before clamping,
//! (2) `D = 0` implies `b1 ⊆ b2`,
//! (3) `D = 1` implies the hard intersection is empty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use boxel::geometry::{contains, disjoint_measure_raw, intersect, mvol, BoxN};
use boxel::{VolumeConfig, VolumeKind};

use crate::{Error, Verdict};

const PAIRS: usize = 10_000;
const EPSILONS: [f64; 2] = [0.01, 0.1];

/// Half the boxes snap to a 0.25 grid so that containment and disjointness
/// occur often; the rest use continuous corners.
fn random_box(rng: &mut ChaCha8Rng, dim: usize, grid: bool) -> BoxN {
    let mut coord = || {
        if grid {
            f64::from(rng.gen_range(0..=8u8)) * 0.25
        } else {
            rng.gen_range(0.0..2.0)
        }
    };
    let (mut lower, mut upper) = (Vec::with_capacity(dim), Vec::with_capacity(dim));
    for _ in 0..dim {
        let (a, b) = (coord(), coord());
        lower.push(a.min(b));
        upper.push(a.max(b));
    }
    BoxN::new(lower, upper)
}

pub fn run() -> Result<Verdict, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut failures = 0;
    let mut summary = Vec::new();
    for epsilon in EPSILONS {
        let cfg = VolumeConfig {
            epsilon,
            temperature: 1.0,
        };
        let (mut zeros, mut ones) = (0, 0);
        for _ in 0..PAIRS {
            let dim = rng.gen_range(1..=3);
            let grid = rng.gen_bool(0.5);
            let b1 = random_box(&mut rng, dim, grid);
            let b2 = random_box(&mut rng, dim, grid);
            if mvol(&b1, &cfg) == 0.0 {
                continue;
            }
            let d = disjoint_measure_raw(&b1, &b2, VolumeKind::Modified, &cfg)?;
            if !(0.0..=1.0).contains(&d) {
                failures += 1;
            }
            if d == 0.0 {
                zeros += 1;
                if !contains(&b2, &b1, 0.0)? {
                    failures += 1;
                }
            }
            if d == 1.0 {
                ones += 1;
                if !intersect(&b1, &b2)?.is_empty() {
                    failures += 1;
                }
            }
        }
        summary.push(format!("ε={epsilon}: D=0 in {zeros}, D=1 in {ones}"));
    }
    Ok(Verdict::new(
        failures == 0,
        format!(
            "{PAIRS} pairs per ε; {}; failures={failures}",
            summary.join("; ")
        ),
    ))
}
