// scratch calibration driver; not part of the shipped crate
use paraspace::grading::{hom, hom_to_f64, index_set_below, Hom, MultiIndex, ScalingVector};
use paraspace::lpanalysis::{DyadicPartition, GridField, GridSpec};
use paraspace::models::{
    make_synthetic_field, pam_model, pam_modelled, poly_lift, poly_model, synthetic_poly_lift,
};
use paraspace::paraproducts::residual_curve;
use paraspace::sampling::PairSampler;

fn admissible_k(s: &ScalingVector, budget: f64) -> Vec<MultiIndex> {
    index_set_below(budget, s)
}

fn run_poly(n: usize, gamma: (i64, i64), alpha_target: f64, cutoff: f64, seed: u64) {
    let s = ScalingVector::isotropic(2);
    let spec = GridSpec::new(vec![n, n], s.clone()).unwrap();
    let partition = DyadicPartition::build(spec.clone()).unwrap();
    let model = poly_model(&s, hom(gamma.0, gamma.1)).unwrap();
    let lift = synthetic_poly_lift(&spec, &model, alpha_target, seed, cutoff).unwrap();
    let points = PairSampler::with_seed(seed ^ 0x5eed).points(&spec, 8);
    let gf = hom_to_f64(hom(gamma.0, gamma.1));
    println!("== poly n={n} gamma={gf} alpha_target={alpha_target} cutoff={cutoff} seed={seed}");
    for sec in 0..model.space().sector_count() {
        let alpha = model.space().alpha(sec);
        let af = hom_to_f64(alpha);
        for k in admissible_k(&s, gf - af) {
            let target = gf - af - k.weight(&s) as f64;
            let curve =
                residual_curve(&lift, &model, &partition, &points, alpha, &k, 3).unwrap();
            let pts: Vec<String> =
                curve.scales.iter().map(|(sc, v)| format!("{sc}:{v:.3e}")).collect();
            println!(
                "  alpha={af:.3} k={:?} target={target:.3} fitted={:?} dev={:.3} [{}]",
                k.as_slice(),
                curve.exponent.map(|e| (e * 1000.0).round() / 1000.0),
                curve.fit_residual,
                pts.join(" ")
            );
        }
    }
}

fn run_pam(n: usize, seed: u64, r_ixi: f64, r_g: f64, r_w: f64, cutoff: f64) {
    let s = ScalingVector::isotropic(2);
    let spec = GridSpec::new(vec![n, n], s.clone()).unwrap();
    let partition = DyadicPartition::build(spec.clone()).unwrap();
    let ixi = make_synthetic_field(&spec, r_ixi, seed ^ 0x11, cutoff).unwrap();
    let model = pam_model(&s, hom(3, 4), hom(6, 5), &ixi).unwrap();
    let g = make_synthetic_field(&spec, r_g, seed ^ 0x22, cutoff).unwrap();
    let w = make_synthetic_field(&spec, r_w, seed ^ 0x33, cutoff).unwrap();
    let lift = pam_modelled(&g, &w, &model, &partition).unwrap();
    let points = PairSampler::with_seed(seed ^ 0x5eed).points(&spec, 8);
    let gf = 1.2;
    println!("== pam n={n} seed={seed} rough=({r_ixi},{r_g},{r_w}) cutoff={cutoff}");
    for sec in 0..model.space().sector_count() {
        let alpha = model.space().alpha(sec);
        let af = hom_to_f64(alpha);
        for k in admissible_k(&s, gf - af) {
            let target = gf - af - k.weight(&s) as f64;
            let curve =
                residual_curve(&lift, &model, &partition, &points, alpha, &k, 3).unwrap();
            let pts: Vec<String> =
                curve.scales.iter().map(|(sc, v)| format!("{sc}:{v:.3e}")).collect();
            println!(
                "  alpha={af:.3} k={:?} target={target:.3} fitted={:?} dev={:.3} [{}]",
                k.as_slice(),
                curve.exponent.map(|e| (e * 1000.0).round() / 1000.0),
                curve.fit_residual,
                pts.join(" ")
            );
        }
    }
}

fn run_broken(n: usize, gamma: (i64, i64), alpha_target: f64, cutoff: f64, seed: u64) {
    let s = ScalingVector::isotropic(2);
    let spec = GridSpec::new(vec![n, n], s.clone()).unwrap();
    let partition = DyadicPartition::build(spec.clone()).unwrap();
    let model = poly_model(&s, hom(gamma.0, gamma.1)).unwrap();
    let f = make_synthetic_field(&spec, alpha_target, seed, cutoff).unwrap();
    let lift = poly_lift(&f, &model).unwrap();
    let points = PairSampler::with_seed(seed ^ 0x5eed).points(&spec, 8);
    println!("== broken n={n}");
    // offset each sector's first symbol by a constant and watch k=0
    for sec in 0..model.space().sector_count() {
        let alpha = model.space().alpha(sec);
        let af = hom_to_f64(alpha);
        let sym = model.space().sector(sec).range().start;
        let mut comps: Vec<GridField> = (0..model.space().dim())
            .map(|i| lift.component_field(i))
            .collect();
        let ripple = GridField::from_fn(spec.clone(), |x| {
            35.0 * (std::f64::consts::TAU * 124.0 * x[0]).cos()
        });
        comps[sym] = comps[sym].add(&ripple).unwrap();
        let broken =
            paraspace::models::ModelledField::from_components(model.space().clone(), &comps)
                .unwrap();
        let k = MultiIndex::zero(2);
        let curve = residual_curve(&broken, &model, &partition, &points, alpha, &k, 3).unwrap();
        let pts: Vec<String> =
            curve.scales.iter().map(|(sc, v)| format!("{sc}:{v:.3e}")).collect();
        println!(
            "  alpha={af:.3} offset-sym={sym} fitted={:?} dev={:.3} [{}]",
            curve.exponent.map(|e| (e * 1000.0).round() / 1000.0),
            curve.fit_residual,
            pts.join(" ")
        );
    }
}

fn fit_log2(scales: &[(i32, f64)]) -> f64 {
    let n = scales.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(sc, v) in scales {
        let x = sc as f64;
        let y = v.log2();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    -(n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn run_pool(n: usize, cutoff: f64, seeds: &[u64]) {
    let s = ScalingVector::isotropic(2);
    let spec = GridSpec::new(vec![n, n], s.clone()).unwrap();
    let partition = DyadicPartition::build(spec.clone()).unwrap();
    let gamma = hom(6, 5);
    let gf = hom_to_f64(gamma);

    for family in ["poly", "pam"] {
        let model = if family == "poly" {
            poly_model(&s, gamma).unwrap()
        } else {
            let ixi = make_synthetic_field(&spec, 0.75, 0xA11CE, cutoff).unwrap();
            pam_model(&s, hom(3, 4), gamma, &ixi).unwrap()
        };
        // row -> per-seed curves
        struct Row {
            alpha: Hom,
            k: MultiIndex,
            target: f64,
            curves: Vec<Vec<(i32, f64)>>,
            fits: Vec<f64>,
            flags: usize,
        }
        let mut rows: Vec<Row> = Vec::new();
        for sec in 0..model.space().sector_count() {
            let alpha = model.space().alpha(sec);
            let af = hom_to_f64(alpha);
            for k in admissible_k(&s, gf - af) {
                let target = gf - af - k.weight(&s) as f64;
                rows.push(Row { alpha, k, target, curves: Vec::new(), fits: Vec::new(), flags: 0 });
            }
        }
        for &seed in seeds {
            let lift = if family == "poly" {
                synthetic_poly_lift(&spec, &model, gf, seed, cutoff).unwrap()
            } else {
                let g = make_synthetic_field(&spec, 0.45, seed ^ 0x22, cutoff).unwrap();
                let w = make_synthetic_field(&spec, 1.2, seed ^ 0x33, cutoff).unwrap();
                pam_modelled(&g, &w, &model, &partition).unwrap()
            };
            let points = PairSampler::with_seed(seed ^ 0x5eed).points(&spec, 8);
            for row in rows.iter_mut() {
                let curve = residual_curve(
                    &lift, &model, &partition, &points, row.alpha, &row.k, 3,
                )
                .unwrap();
                if let Some(e) = curve.exponent {
                    row.fits.push(e);
                }
                row.curves.push(curve.scales.clone());
                // the loose flag rule: n_min=2, threshold tau/2
                let flag_curve = residual_curve(
                    &lift, &model, &partition, &points, row.alpha, &row.k, 2,
                )
                .unwrap();
                if let Some(e) = flag_curve.exponent {
                    if e < row.target / 2.0 {
                        row.flags += 1;
                    }
                }
            }
        }
        println!("== pool {family} n={n} cutoff={cutoff} K={}", seeds.len());
        for row in &rows {
            // geometric-mean curve over seeds, per scale
            let mut pooled: Vec<(i32, f64)> = Vec::new();
            if let Some(first) = row.curves.first() {
                for (i, &(sc, _)) in first.iter().enumerate() {
                    let mut acc = 0.0;
                    let mut cnt = 0usize;
                    for c in &row.curves {
                        if let Some(&(sc2, v)) = c.get(i) {
                            assert_eq!(sc, sc2);
                            acc += v.log2();
                            cnt += 1;
                        }
                    }
                    if cnt == row.curves.len() {
                        pooled.push((sc, (acc / cnt as f64).exp2()));
                    }
                }
            }
            let pooled_fit = if pooled.len() >= 2 { fit_log2(&pooled) } else { f64::NAN };
            let lo = row.fits.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.fits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            println!(
                "  alpha={:.3} k={:?} target={:.3} pooled={pooled_fit:.3} dev={:+.3} per-seed=[{lo:.2},{hi:.2}] flags={}/{}",
                hom_to_f64(row.alpha),
                row.k.as_slice(),
                row.target,
                pooled_fit - row.target,
                row.flags,
                seeds.len()
            );
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");
    if which == "pool" {
        run_pool(256, 1024.0, &[101, 102, 103, 104, 105, 106, 107, 108]);
    }
    if which == "suite" {
        use paraspace::harness::{build_context, check_ids, run_check, RunConfig};
        let mut config = RunConfig::default_run();
        config.output.report = Some("/tmp/calib-report.json".into());
        config.output.curves = Some("/tmp/calib-curves".into());
        let t0 = std::time::Instant::now();
        let ctx = build_context(&config).unwrap();
        println!("context build: {:.1}s", t0.elapsed().as_secs_f64());
        for id in check_ids() {
            let t = std::time::Instant::now();
            let result = run_check(&ctx, id).unwrap();
            println!("{}  ({:.1}s)", result.summary_line(), t.elapsed().as_secs_f64());
            println!("    {}", result.witness);
        }
    }
    if which == "poly" || which == "all" {
        run_poly(256, (3, 4), 0.75, 512.0, 7);
        run_poly(256, (6, 5), 1.2, 512.0, 7);
    }
    if which == "seeds" {
        for seed in [11, 12, 13, 14] {
            run_poly(256, (6, 5), 1.2, 512.0, seed);
        }
        for seed in [11, 12] {
            run_pam(256, seed, 0.75, 0.45, 1.2, 512.0);
        }
    }
    if which == "poly512" {
        run_poly(512, (3, 4), 0.75, 240.0, 7);
        run_poly(512, (6, 5), 1.2, 240.0, 7);
    }
    if which == "pam" || which == "all" {
        run_pam(256, 7, 0.75, 0.45, 1.2, 512.0);
    }
    if which == "pam512" {
        run_pam(512, 7, 0.75, 0.45, 1.2, 240.0);
    }
    if which == "broken" || which == "all" {
        run_broken(256, (6, 5), 1.2, 512.0, 7);
    }
}
