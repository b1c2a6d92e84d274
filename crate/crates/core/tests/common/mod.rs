#![allow(dead_code)]

use menuforge::generate::{random_instance, GenConfig};
use menuforge::{augment_with_loner, TaskInstance};

/// Thirty seeded instances of 4 to 7 commands (counting the loner magnet),
/// alternating sparse and dense associations, some with a loner magnet and
/// some with tab preferences.
pub fn oracle_instances() -> Vec<TaskInstance> {
    (0..30u64)
        .map(|k| {
            let n = 4 + (k % 4) as usize;
            let loner = k % 3 == 1;
            let cfg = GenConfig {
                n: if loner { n - 1 } else { n },
                seed: 1000 + k,
                density: if k % 2 == 0 { 0.35 } else { 0.9 },
                preference_rate: if k % 5 < 2 { 0.4 } else { 0.0 },
            };
            let inst = random_instance(&cfg).expect("generated instance");
            if loner {
                augment_with_loner(&inst).expect("augmentation")
            } else {
                inst
            }
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
