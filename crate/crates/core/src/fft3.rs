//! Unnormalized 3D FFTs on arrays laid out with the first axis fastest.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward (`e^{−2πi}`) and inverse (`e^{+2πi}`) plans for one array shape.
#[derive(Clone)]
pub struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
    scratch_len: usize,
}

/// Shared plan cache; plans are immutable once built.
pub struct PlanCache {
    planner: Mutex<FftPlanner<f64>>,
    shapes: Mutex<HashMap<[usize; 3], Fft3>>,
}

impl Default for PlanCache {
    fn default() -> Self {
        PlanCache {
            planner: Mutex::new(FftPlanner::new()),
            shapes: Mutex::new(HashMap::new()),
        }
    }
}

impl PlanCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, dims: [usize; 3]) -> Fft3 {
        if let Some(p) = self.shapes.lock().expect("plan cache").get(&dims) {
            return p.clone();
        }
        let mut planner = self.planner.lock().expect("planner");
        let forward = dims.map(|d| planner.plan_fft_forward(d));
        let inverse = dims.map(|d| planner.plan_fft_inverse(d));
        let scratch_len = forward
            .iter()
            .chain(inverse.iter())
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let plan = Fft3 {
            dims,
            forward,
            inverse,
            scratch_len,
        };
        self.shapes
            .lock()
            .expect("plan cache")
            .insert(dims, plan.clone());
        plan
    }
}

impl Fft3 {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let [d0, d1, d2] = self.dims;
        assert_eq!(data.len(), d0 * d1 * d2, "fft3 shape");
        let plans = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        if d0 > 1 {
            plans[0].process_with_scratch(data, &mut scratch);
        }
        if d1 > 1 {
            let mut t = vec![Complex64::new(0.0, 0.0); d0 * d1];
            for slab in data.chunks_exact_mut(d0 * d1) {
                transpose(slab, &mut t, d1, d0);
                plans[1].process_with_scratch(&mut t, &mut scratch);
                transpose(&t, slab, d0, d1);
            }
        }
        if d2 > 1 {
            let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
            transpose(data, &mut t, d2, d0 * d1);
            plans[2].process_with_scratch(&mut t, &mut scratch);
            transpose(&t, data, d0 * d1, d2);
        }
    }
}

/// `dst[c·rows + r] = src[r·cols + c]` for a `rows × cols` row-major source.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Smallest integer `≥ v` whose prime factors are all 2, 3 or 5.
pub fn smooth_at_least(v: usize) -> usize {
    let mut m = v.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
