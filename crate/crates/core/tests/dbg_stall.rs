use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use s3d_core::numerics::*;
use s3d_core::splitting::gain_signed;

fn project_weights(w: &mut [f64], c: f64) {
    let m = w.len() as f64;
    let shift = (1.0 - w.iter().sum::<f64>()) / m;
    for x in w.iter_mut() { *x += shift; }
    let abs_sum: f64 = w.iter().map(|x| x.abs()).sum();
    if abs_sum <= c { return; }
    let uniform = 1.0 / m;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let t = 0.5 * (lo + hi);
        let s: f64 = w.iter().map(|x| (uniform + t * (x - uniform)).abs()).sum();
        if s <= c { lo = t; } else { hi = t; }
    }
    for x in w.iter_mut() { *x = uniform + lo * (*x - uniform); }
}

// POCS until tight: uniform mean subtraction + norm clip
fn project_free(w: &mut [f64], deltas: &mut [Vec<f64>], c: f64) -> bool {
    project_weights(w, c);
    let dim = deltas[0].len();
    for _ in 0..400 {
        let mut mean = vec![0.0; dim];
        for (wi, d) in w.iter().zip(deltas.iter()) {
            for (m, x) in mean.iter_mut().zip(d) { *m += wi * x; }
        }
        for d in deltas.iter_mut() {
            for (x, m) in d.iter_mut().zip(&mean) { *x -= m; }
        }
        let mut clipped = false;
        for d in deltas.iter_mut() {
            let n = norm(d);
            if n > 1.0 + 1e-15 {
                for x in d.iter_mut() { *x /= n; }
                clipped = true;
            }
        }
        if !clipped && norm(&mean) <= 1e-13 { break; }
    }
    let mut mean = vec![0.0; dim];
    for (wi, d) in w.iter().zip(deltas.iter()) {
        for (m, x) in mean.iter_mut().zip(d) { *m += wi * x; }
    }
    norm(&mean) <= 1e-10
}

fn eval(s: &SymMatrix, w: &[f64], deltas: &[Vec<f64>]) -> f64 {
    w.iter().zip(deltas).map(|(wi, d)| wi * s.quadratic_form(d)).sum()
}

// variant C: alternate delta-only and w-only projected gradient blocks
fn search_alternating(s: &SymMatrix, m: usize, c: f64, rng: &mut ChaCha8Rng, outer: usize) -> f64 {
    let dim = s.dim();
    let mut w: Vec<f64> = (0..m).map(|_| rng.random_range(-c..c)).collect();
    let mut deltas: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    if !project_free(&mut w, &mut deltas, c) { return 0.0; }
    let mut best = eval(s, &w, &deltas);
    for _ in 0..outer {
        // delta block
        let mut step = 0.1;
        for _ in 0..60 {
            let grad_d: Vec<Vec<f64>> = w.iter().zip(&deltas)
                .map(|(wi, d)| s.mat_vec(d).iter().map(|x| 2.0 * wi * x).collect()).collect();
            let mut wc = w.clone();
            let mut dc: Vec<Vec<f64>> = deltas.iter().zip(&grad_d)
                .map(|(d, g)| d.iter().zip(g).map(|(x, gx)| x - step * gx).collect()).collect();
            if project_free(&mut wc, &mut dc, c) {
                let value = eval(s, &wc, &dc);
                if value < best - 1e-15 {
                    best = value; w = wc; deltas = dc;
                    step = (step * 2.0f64).min(0.1);
                    continue;
                }
            }
            step *= 0.5;
            if step < 1e-12 { break; }
        }
        // w block
        let mut step = 0.1;
        for _ in 0..60 {
            let grad_w: Vec<f64> = deltas.iter().map(|d| s.quadratic_form(d)).collect();
            let mut wc: Vec<f64> = w.iter().zip(&grad_w).map(|(x, g)| x - step * g).collect();
            let mut dc = deltas.clone();
            if project_free(&mut wc, &mut dc, c) {
                let value = eval(s, &wc, &dc);
                if value < best - 1e-15 {
                    best = value; w = wc; deltas = dc;
                    step = (step * 2.0f64).min(0.1);
                    continue;
                }
            }
            step *= 0.5;
            if step < 1e-12 { break; }
        }
    }
    best
}

#[test]
fn dbg_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut misses = 0;
    let mut total = 0;
    let mut worst = 0.0f64;
    let t0 = std::time::Instant::now();
    for trial in 0..60u64 {
        let d = rng.random_range(2..=4);
        let entries: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = SymMatrix::new(d, entries).unwrap();
        let c = [1.0f64, 1.5, 2.0, 3.0][rng.random_range(0..4)];
        let m = 4usize;
        let closed = gain_signed(&s, m, c).unwrap().0;
        let mut inner = ChaCha8Rng::seed_from_u64(trial * 7 + 1);
        let mut brute = 0.0f64;
        for _ in 0..16 {
            brute = brute.min(search_alternating(&s, m, c, &mut inner, 12));
        }
        let rho = spectral_extremes(&s).rho;
        let tol = 1e-3 * rho.max(1.0);
        let gap = brute - closed;
        worst = worst.max(gap.abs() / rho.max(1.0));
        total += 1;
        if gap.abs() > tol {
            misses += 1;
            println!("MISS {trial}: d={d} c={c} closed={closed:.5} brute={brute:.5}");
        }
    }
    println!("misses={misses}/{total} worst={worst:.2e} in {:.1}s", t0.elapsed().as_secs_f64());
}
