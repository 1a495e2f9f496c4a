//! Acceptance checks. Each check prints one `PASS`/`FAIL` line with the
//! measured quantities; the process fails if any check fails.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use glyphstroke::bitmap::{count_components, structural_stats};
use glyphstroke::geometry::{sample_count, sample_stroke};
use glyphstroke::masking::{discard_probabilities, plan_mask, MaskConfig, MaskPlan};
use glyphstroke::matcher::{
    baseline_match, explore, query_coverages, rank_with_plans, trial_plans, MatchOptions,
    PixelEmbedding, PoolEntry,
};
use glyphstroke::metrics::{evaluate_corpus, InvalidRateMode, Sample};
use glyphstroke::optimizer::{greedy_fit, OptimizerConfig};
use glyphstroke::{
    aggregate_reward, parse_stroke_output, serialize_stroke_set, synth, BinaryGlyph, Point,
    RewardConfig, Stroke, StrokeSet,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(name: &str, pass: bool, detail: String) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sampling_law() {
    let start = Instant::now();
    let d = 0.05;
    let mut r = rng(1);
    let mut worst = 0usize;
    let mut violations = 0;
    for _ in 0..1000 {
        let s = Stroke::from_coords(r.random(), r.random(), r.random(), r.random());
        let len = s.length();
        let sampled = sample_stroke(&s, d).unwrap();
        let m = sampled.m;
        let ok_below = len / ((m + 1) as f64) < d;
        let ok_minimal = m == 0 || len / (m as f64) >= d;
        if !(ok_below && ok_minimal && sampled.interior_points.len() == m) {
            violations += 1;
        }
        worst = worst.max(m);
    }
    let closed = sample_count(0.5, d);
    let elapsed = start.elapsed();
    verdict(
        "sampling law",
        violations == 0 && closed == 10 && elapsed < Duration::from_secs(1),
        format!("1000 strokes, {violations} violations, max m = {worst}, m(0.5) = {closed}, {elapsed:.2?}"),
    );
}

/// Black pixels inside the stroke's ideal coverage region, counted by a
/// flood fill from the stroke midpoint. The region is the stroke swept to
/// the bar half-width `h` plus triangular caps of length `h` past each end.
fn flood_oracle(glyph: &BinaryGlyph, a: Point, b: Point, h: f64) -> usize {
    let (w, ht) = (glyph.width(), glyph.height());
    let len = a.distance(b);
    let t = (b - a) * (1.0 / len);
    let inside = |c: usize, r: usize| {
        let p = glyph.pixel_center(c, r) - a;
        let u = p.x * t.x + p.y * t.y;
        let v = (p.x * -t.y + p.y * t.x).abs();
        let reach = if u < 0.0 {
            h + u
        } else if u > len {
            h - (u - len)
        } else {
            h
        };
        v <= reach
    };
    let mid = a.midpoint(b);
    let (c0, r0) = glyph.pixel_at(mid).unwrap();
    let mut seen = vec![false; w * ht];
    let mut queue = VecDeque::from([(c0, r0)]);
    seen[r0 * w + c0] = true;
    let mut count = 0;
    while let Some((c, r)) = queue.pop_front() {
        count += 1;
        for (dc, dr) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (nc, nr) = (c as i64 + dc, r as i64 + dr);
            if nc < 0 || nr < 0 || nc >= w as i64 || nr >= ht as i64 {
                continue;
            }
            let (nc, nr) = (nc as usize, nr as usize);
            if !seen[nr * w + nc] && glyph.pixel(nc, nr) && inside(nc, nr) {
                seen[nr * w + nc] = true;
                queue.push_back((nc, nr));
            }
        }
    }
    count
}

fn coverage_matches_flood_oracle() {
    let start = Instant::now();
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let size = r.random_range(64..=128usize);
        let thick = r.random_range(4..=size / 6);
        let lo = r.random_range(2..size / 4);
        let hi = r.random_range(3 * size / 4..size - 2);
        let off = r.random_range(2..size - thick - 2);
        let vertical = r.random_bool(0.5);
        let glyph = BinaryGlyph::from_fn(size, size, format!("bar{i}"), |c, row| {
            let (along, across) = if vertical { (row, c) } else { (c, row) };
            (lo..hi).contains(&along) && (off..off + thick).contains(&across)
        })
        .unwrap();
        let n = size as f64;
        let h = thick as f64 / 2.0 / n;
        let center = (off as f64 + thick as f64 / 2.0) / n;
        // Keep the caps inside the bar so the oracle region is uncut.
        let a0 = lo as f64 / n + h + 1.5 / n;
        let a1 = hi as f64 / n - h - 1.5 / n;
        let (a, b) = if vertical {
            (Point::new(center, a0), Point::new(center, a1))
        } else {
            (Point::new(a0, center), Point::new(a1, center))
        };
        let strokes = StrokeSet::new(vec![Stroke { start: a, end: b }]);
        let report = aggregate_reward(&glyph, &strokes, true, &RewardConfig::default()).unwrap();
        assert!(report.per_stroke[0].accepted(), "bar {i} stroke rejected");
        let got = report.final_coverage_pixels as f64;
        let want = flood_oracle(&glyph, a, b, h) as f64;
        worst = worst.max((got - want).abs() / want);
    }
    let elapsed = start.elapsed();
    verdict(
        "coverage oracle",
        worst <= 0.05 && elapsed < Duration::from_secs(30),
        format!("50 bars, worst relative error {:.4}, {elapsed:.2?}", worst),
    );
}

fn reward_formula_exactness() {
    let cfg = RewardConfig::default();
    let solid = BinaryGlyph::from_mask(50, 50, vec![true; 2500], "solid").unwrap();
    let full = StrokeSet::new(vec![Stroke::from_coords(0.0, 0.5, 1.0, 0.5)]);
    let rep = aggregate_reward(&solid, &full, true, &cfg).unwrap();
    let full_ok = (0.99..=1.0).contains(&rep.r_s) && rep.r == rep.r_s + 0.125;

    let bar = synth::horizontal_bar(100, 0.5, 0.2, 0.8, 12.0);
    let s = Stroke::from_coords(0.25, 0.5, 0.75, 0.5);
    let single = aggregate_reward(&bar, &StrokeSet::new(vec![s]), true, &cfg).unwrap();
    let dup = aggregate_reward(&bar, &StrokeSet::new(vec![s, s]), true, &cfg).unwrap();
    let coverage = single.final_coverage_pixels as f64 / single.omega_b_pixels as f64;
    let dup_ok = dup.n_invalid == 1
        && dup.final_coverage_pixels == single.final_coverage_pixels
        && dup.r_s == coverage * 0.9;
    verdict(
        "reward formula",
        full_ok && dup_ok,
        format!(
            "full: r_s = {}, r = {}; duplicate: N_invalid = {}, r_s = {} vs coverage*0.9 = {}",
            rep.r_s,
            rep.r,
            dup.n_invalid,
            dup.r_s,
            coverage * 0.9
        ),
    );
}

fn penalty_monotonicity() {
    let start = Instant::now();
    let glyph = synth::horizontal_bar(100, 0.5, 0.2, 0.8, 12.0);
    let strokes = StrokeSet::new(vec![
        Stroke::from_coords(0.25, 0.5, 0.75, 0.5),
        Stroke::from_coords(0.1, 0.1, 0.9, 0.1),
        Stroke::from_coords(0.25, 0.5, 0.75, 0.5),
        Stroke::from_coords(0.5, 0.2, 0.5, 0.8),
    ]);
    let mut values = Vec::new();
    let mut exact = true;
    for alpha in [0.0, 0.01, 0.1, 0.5] {
        let cfg = RewardConfig {
            alpha,
            ..Default::default()
        };
        let rep = aggregate_reward(&glyph, &strokes, true, &cfg).unwrap();
        assert_eq!(rep.n_invalid, 3);
        let cov = rep.final_coverage_pixels as f64 / rep.omega_b_pixels as f64;
        exact &= rep.r_s == cov * (1.0 - alpha * 3.0);
        values.push(rep.r_s);
    }
    let decreasing = values.windows(2).all(|w| w[0] > w[1]);
    let elapsed = start.elapsed();
    verdict(
        "penalty monotonicity",
        decreasing && exact && elapsed < Duration::from_secs(1),
        format!("r_s over alpha {{0, 0.01, 0.1, 0.5}} = {values:?}, {elapsed:.2?}"),
    );
}

fn rotate(p: Point) -> Point {
    Point::new(1.0 - p.y, p.x)
}

/// A non-dyadic coordinate in `[lo, hi)`, kept off pixel boundaries.
fn jitter(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>() + 1e-7 * std::f64::consts::PI
}

fn rotation_equivariance() {
    let mut r = rng(3);
    let mut mismatches = 0;
    let mut accepted_total = 0;
    for i in 0..20 {
        let size = r.random_range(48..=96usize);
        let k = r.random_range(2..=4);
        let segs: Vec<(Point, Point)> = (0..k)
            .map(|_| {
                (
                    Point::new(jitter(&mut r, 0.15, 0.85), jitter(&mut r, 0.15, 0.85)),
                    Point::new(jitter(&mut r, 0.15, 0.85), jitter(&mut r, 0.15, 0.85)),
                )
            })
            .collect();
        let glyph = synth::render_segments(size, &segs, r.random_range(4.0..9.0), &format!("g{i}"));
        let mut strokes: Vec<Stroke> = segs
            .iter()
            .map(|&(a, b)| Stroke { start: a, end: b })
            .collect();
        strokes.push(Stroke::from_coords(
            jitter(&mut r, 0.0, 1.0),
            jitter(&mut r, 0.0, 1.0),
            jitter(&mut r, 0.0, 1.0),
            jitter(&mut r, 0.0, 1.0),
        ));
        let set = StrokeSet::new(strokes.clone());
        let rotated_set = StrokeSet::new(
            strokes
                .iter()
                .map(|s| Stroke {
                    start: rotate(s.start),
                    end: rotate(s.end),
                })
                .collect(),
        );
        let cfg = RewardConfig::default();
        let a = aggregate_reward(&glyph, &set, true, &cfg).unwrap();
        let b = aggregate_reward(&glyph.rotated_quarter(), &rotated_set, true, &cfg).unwrap();
        accepted_total += a.accepted_count();
        if a.final_coverage_pixels != b.final_coverage_pixels || a.r_s.to_bits() != b.r_s.to_bits()
        {
            mismatches += 1;
        }
    }
    verdict(
        "rotation equivariance",
        mismatches == 0,
        format!("20 glyphs, {accepted_total} accepted strokes, {mismatches} mismatches"),
    );
}

fn optimizer_suite() -> Vec<BinaryGlyph> {
    let mut r = rng(4);
    let p = Point::new;
    let mut out = Vec::new();
    for i in 0..4 {
        let w = 4.0 + i as f64;
        let y = r.random_range(0.3..0.7);
        out.push(synth::render_segments(
            128,
            &[(p(0.15, y), p(0.85, y + r.random_range(-0.2..0.2)))],
            w,
            &format!("bar{i}"),
        ));
    }
    for i in 0..4 {
        let w = 5.0 + i as f64;
        let c = p(r.random_range(0.4..0.6), r.random_range(0.4..0.6));
        let arm = r.random_range(0.25..0.35);
        let tilt: f64 = r.random_range(-0.4..0.4);
        let (dx, dy) = (tilt.cos() * arm, tilt.sin() * arm);
        let segs = [
            (p(c.x - dx, c.y - dy), p(c.x + dx, c.y + dy)),
            (p(c.x + dy, c.y - dx), p(c.x - dy, c.y + dx)),
        ];
        out.push(synth::render_segments(128, &segs, w, &format!("cross{i}")));
    }
    for i in 0..4 {
        let w = 4.0 + (i % 3) as f64 * 2.0;
        let a = p(r.random_range(0.35..0.65), r.random_range(0.1..0.25));
        let b = p(r.random_range(0.7..0.9), r.random_range(0.7..0.9));
        let c = p(r.random_range(0.1..0.3), r.random_range(0.7..0.9));
        out.push(synth::triangle(128, a, b, c, w).with_source_id(format!("triangle{i}")));
    }
    for i in 0..8 {
        let w = 4.0 + (i % 5) as f64;
        let segments = 3 + i % 4;
        let mut pts = vec![p(r.random_range(0.15..0.85), r.random_range(0.15..0.85))];
        while pts.len() <= segments {
            let last = *pts.last().unwrap();
            let next = p(r.random_range(0.12..0.88), r.random_range(0.12..0.88));
            if next.distance(last) >= 0.25 {
                pts.push(next);
            }
        }
        out.push(synth::render_polyline(
            128,
            &pts,
            w,
            &format!("polyline{i}"),
        ));
    }
    out
}

fn greedy_optimizer_efficacy() {
    let suite = optimizer_suite();
    assert_eq!(suite.len(), 20);
    let ocfg = OptimizerConfig {
        rng_seed: 0,
        ..Default::default()
    };
    let cfg = RewardConfig::default();
    let (mut co_sum, mut invalid, mut max_strokes) = (0.0, 0, 0);
    let mut slowest = Duration::ZERO;
    for glyph in &suite {
        let start = Instant::now();
        let (strokes, report) = greedy_fit(glyph, &ocfg, &cfg).unwrap();
        slowest = slowest.max(start.elapsed());
        let co = 100.0 * report.coverage_fraction();
        println!(
            "  {:<12} CO {:>6.2}%  strokes {:>2}  invalid {}",
            glyph.source_id(),
            co,
            strokes.len(),
            report.n_invalid
        );
        co_sum += co;
        invalid += report.n_invalid;
        max_strokes = max_strokes.max(strokes.len());
    }
    let mean_co = co_sum / suite.len() as f64;
    verdict(
        "greedy optimizer",
        mean_co >= 85.0 && invalid == 0 && max_strokes <= 12 && slowest < Duration::from_secs(10),
        format!("mean CO {mean_co:.2}%, IS {invalid}, max strokes {max_strokes}, slowest glyph {slowest:.2?}"),
    );
}

fn masking_statistics() {
    let start = Instant::now();
    let strokes = StrokeSet::new(vec![
        Stroke::from_coords(0.0, 0.4, 0.0, 0.6),
        Stroke::from_coords(0.5, 0.4, 0.5, 0.6),
        Stroke::from_coords(1.0, 0.4, 1.0, 0.6),
    ]);
    let cfg = MaskConfig::default();
    let plan = discard_probabilities(&strokes, &cfg, 0).unwrap();

    // Scalar chain, written out independently.
    let w = [1.0f64, (-0.5f64 / 0.4).exp(), (-1.0f64 / 0.4).exp()];
    let mean = (w[0] + w[1] + w[2]) / 3.0;
    let scalar: Vec<f64> = w.iter().map(|x| (0.5 * x / mean).min(1.0)).collect();
    let expected = [1.0, 0.314, 0.090];
    let closed_ok = plan
        .probabilities
        .iter()
        .zip(&expected)
        .zip(&scalar)
        .all(|((p, e), s)| (p - e).abs() < 1e-3 && (p - s).abs() < 1e-12);

    let draws = 20_000;
    let mut counts = [0usize; 3];
    let mut r = rng(5);
    for _ in 0..draws {
        let plan: MaskPlan = plan_mask(&strokes, &cfg, &mut r, Some(0)).unwrap();
        for (c, &z) in counts.iter_mut().zip(&plan.outcomes) {
            *c += usize::from(z);
        }
    }
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
    let freq_ok = freqs
        .iter()
        .zip(&plan.probabilities)
        .all(|(f, p)| (f - p).abs() <= 0.02);
    let elapsed = start.elapsed();
    verdict(
        "masking statistics",
        closed_ok && freq_ok && elapsed < Duration::from_secs(5),
        format!(
            "p = {:?}, empirical = {freqs:?}, {elapsed:.2?}",
            plan.probabilities
        ),
    );
}

fn matcher_reductions() {
    let q = synth::plus_sign(64, 0.3, 6.0).with_source_id("query");
    let pool: Vec<PoolEntry> = vec![
        (
            "ring".into(),
            synth::ring(64, Point::new(0.5, 0.5), 0.3, 5.0),
        ),
        ("bar".into(), synth::horizontal_bar(64, 0.5, 0.2, 0.8, 6.0)),
        (
            "tri".into(),
            synth::triangle(
                64,
                Point::new(0.5, 0.2),
                Point::new(0.8, 0.8),
                Point::new(0.2, 0.8),
                5.0,
            ),
        ),
        ("query".into(), q.clone()),
    ];
    let strokes = StrokeSet::new(vec![
        Stroke::from_coords(0.2, 0.5, 0.8, 0.5),
        Stroke::from_coords(0.5, 0.2, 0.5, 0.8),
    ]);
    let rcfg = RewardConfig::default();
    let opts = MatchOptions {
        k: 10,
        ..Default::default()
    };

    let (accepted, polys) = query_coverages(&q, &strokes, &rcfg).unwrap();
    let plans: Vec<MaskPlan> = trial_plans(&accepted, &MaskConfig::default())
        .unwrap()
        .into_iter()
        .map(MaskPlan::keep_all)
        .collect();
    let zero =
        rank_with_plans(&q, &accepted, &polys, &plans, &pool, &PixelEmbedding, &opts).unwrap();
    let base = baseline_match(&q, &pool, &PixelEmbedding, &opts).unwrap();
    let reduction_ok = zero.len() == base.len()
        && zero.iter().zip(&base).all(|(a, b)| {
            a.candidate_id == b.candidate_id && a.aggregated_score == b.aggregated_score
        });
    let self_ok = base[0].candidate_id == "query" && base[0].aggregated_score == 1.0;

    let mut monotone = true;
    let mut prev: Option<Vec<(String, f64)>> = None;
    for trials in 1..=3 {
        let mcfg = MaskConfig {
            trials,
            rng_seed: 9,
            ..Default::default()
        };
        let res = explore(&q, &strokes, &pool, &PixelEmbedding, &mcfg, &rcfg, &opts).unwrap();
        let scores: Vec<(String, f64)> = res
            .iter()
            .map(|m| (m.candidate_id.clone(), m.aggregated_score))
            .collect();
        if let Some(prev) = &prev {
            for (id, s) in &scores {
                let old = prev.iter().find(|(pid, _)| pid == id).unwrap().1;
                monotone &= *s >= old;
            }
        }
        prev = Some(scores);
    }
    verdict(
        "matcher reductions",
        reduction_ok && self_ok && monotone,
        format!(
            "all-zero masks == baseline: {reduction_ok}; self match first with score {}: {self_ok}; non-decreasing in T: {monotone}",
            base[0].aggregated_score
        ),
    );
}

fn structural_stats_consistency() {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..100 {
        let (w, h) = (r.random_range(1..=40usize), r.random_range(1..=40usize));
        let density = r.random_range(0.05..0.95);
        let mask: Vec<bool> = (0..w * h).map(|_| r.random_bool(density)).collect();
        let g = BinaryGlyph::from_mask(w, h, mask, format!("m{i}")).unwrap();
        let s = structural_stats(&g);
        if let Some(bar) = s.bar {
            worst = worst.max((bar * s.fa - s.fb).abs());
            checked += 1;
        }
    }
    let squares = BinaryGlyph::from_fn(20, 20, "squares", |c, row| {
        (c < 5 && row < 5) || (c >= 12 && row >= 12)
    })
    .unwrap();
    let cc = count_components(&squares);
    let black = structural_stats(&BinaryGlyph::from_mask(9, 7, vec![true; 63], "black").unwrap());
    verdict(
        "structural stats",
        worst <= 1e-9 && checked > 90 && cc == 2 && black.fa == 1.0,
        format!("max |BAR*FA - FB| = {worst:e} over {checked} masks, two squares CC = {cc}, solid FA = {}", black.fa),
    );
}

fn random_sample(r: &mut ChaCha8Rng, i: usize) -> Sample {
    let size = r.random_range(24..=48usize);
    let segs: Vec<(Point, Point)> = (0..r.random_range(1..=3))
        .map(|_| {
            (
                Point::new(r.random_range(0.1..0.9), r.random_range(0.1..0.9)),
                Point::new(r.random_range(0.1..0.9), r.random_range(0.1..0.9)),
            )
        })
        .collect();
    let glyph = synth::render_segments(size, &segs, r.random_range(3.0..6.0), &format!("s{i}"));
    let mut strokes: Vec<Stroke> = segs
        .iter()
        .map(|&(a, b)| Stroke { start: a, end: b })
        .collect();
    if r.random_bool(0.5) {
        strokes.push(Stroke::from_coords(
            r.random(),
            r.random(),
            r.random(),
            r.random(),
        ));
    }
    Sample {
        glyph,
        strokes: StrokeSet::new(strokes),
        format_ok: r.random_bool(0.8),
    }
}

fn metrics_aggregation() {
    let cfg = RewardConfig::default();
    let mut r = rng(7);
    let one = random_sample(&mut r, 0);
    let rep = aggregate_reward(&one.glyph, &one.strokes, one.format_ok, &cfg).unwrap();
    let m = evaluate_corpus(std::slice::from_ref(&one), &cfg, InvalidRateMode::Corpus).unwrap();
    let co = 100.0 * rep.final_coverage_pixels as f64 / rep.omega_b_pixels as f64;
    let cs = if rep.accepted_count() == 0 {
        0.0
    } else {
        co / rep.accepted_count() as f64
    };
    let single_ok = m.re == rep.r
        && m.re_s == rep.r_s
        && m.co == co
        && m.is_pct == 100.0 * rep.n_invalid as f64 / rep.stroke_count() as f64
        && m.ts == rep.stroke_count() as f64
        && (m.cs - cs).abs() < 1e-12
        && m.n_samples == 1;

    let mut corpus: Vec<Sample> = (0..100).map(|i| random_sample(&mut r, i)).collect();
    let base = evaluate_corpus(&corpus, &cfg, InvalidRateMode::Corpus).unwrap();
    let mut identical = true;
    for _ in 0..5 {
        corpus.shuffle(&mut r);
        let shuffled = evaluate_corpus(&corpus, &cfg, InvalidRateMode::Corpus).unwrap();
        identical &= [
            (base.re, shuffled.re),
            (base.re_s, shuffled.re_s),
            (base.co, shuffled.co),
            (base.is_pct, shuffled.is_pct),
            (base.cs, shuffled.cs),
            (base.ts, shuffled.ts),
        ]
        .iter()
        .all(|(a, b)| a.to_bits() == b.to_bits());
    }
    verdict(
        "metrics aggregation",
        single_ok && identical,
        format!("single-pair fields match: {single_ok}; 5 shuffles of 100 pairs bit-identical: {identical}"),
    );
}

/// Independent statement of the output grammar, without regular
/// expressions.
mod grammar {
    fn number(s: &str) -> Option<f64> {
        let body = s.strip_prefix(['+', '-']).unwrap_or(s);
        let (int, frac) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        let ok = digits(int)
            && frac.is_none_or(digits)
            && (!int.is_empty() || frac.is_some_and(|f| !f.is_empty()));
        if !ok {
            return None;
        }
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    }

    fn point(s: &str) -> Option<()> {
        let inner = s.strip_prefix('(')?.strip_suffix(')')?;
        let (x, y) = inner.split_once(',')?;
        number(x.trim())?;
        number(y.trim())?;
        Some(())
    }

    fn segment(line: &str) -> bool {
        match line.split_once("->") {
            Some((a, b)) => point(a.trim_end()).is_some() && point(b.trim_start()).is_some(),
            None => false,
        }
    }

    pub fn conforms(text: &str) -> bool {
        let lines: Vec<&str> = text.lines().map(str::trim).collect();
        let Some(open) = lines.iter().position(|l| *l == "<strokes>") else {
            return false;
        };
        let mut n = 0;
        for line in &lines[open + 1..] {
            if *line == "</strokes>" {
                return n > 0;
            }
            if line.is_empty() {
                continue;
            }
            if !segment(line) {
                return false;
            }
            n += 1;
        }
        false
    }
}

fn mutate(r: &mut ChaCha8Rng, text: &str) -> Vec<u8> {
    let mut bytes = text.as_bytes().to_vec();
    let alphabet = b"()<>/,.-+ \n\t0123456789strokes";
    for _ in 0..r.random_range(1..=3) {
        let pos = r.random_range(0..=bytes.len());
        match r.random_range(0..3) {
            0 if pos < bytes.len() => {
                bytes.remove(pos);
            }
            1 if pos < bytes.len() => bytes[pos] = alphabet[r.random_range(0..alphabet.len())],
            _ => bytes.insert(pos, alphabet[r.random_range(0..alphabet.len())]),
        }
    }
    bytes
}

fn format_reward() {
    let mut r = rng(8);
    let mut roundtrip_ok = true;
    let mut worst: f64 = 0.0;
    let mut corpus = Vec::new();
    for _ in 0..200 {
        let n = r.random_range(1..=12);
        let set: StrokeSet = (0..n)
            .map(|_| Stroke::from_coords(r.random(), r.random(), r.random(), r.random()))
            .collect();
        let text = serialize_stroke_set(&set);
        let parsed = parse_stroke_output(&text);
        roundtrip_ok &= parsed.format_ok && parsed.strokes.len() == set.len();
        for (a, b) in set.iter().zip(parsed.strokes.iter()) {
            for d in [
                a.start.x - b.start.x,
                a.start.y - b.start.y,
                a.end.x - b.end.x,
                a.end.y - b.end.y,
            ] {
                worst = worst.max(d.abs());
            }
        }
        corpus.push(text);
    }
    roundtrip_ok &= worst <= 5e-5;

    let mut disagreements = 0;
    let mut false_accepts = 0;
    let mut conforming = 0;
    for i in 0..10_000 {
        let bytes: Vec<u8> = if i % 2 == 0 {
            let len = r.random_range(0..64);
            (0..len).map(|_| r.random()).collect()
        } else {
            mutate(&mut r, &corpus[i % corpus.len()])
        };
        let text = String::from_utf8_lossy(&bytes);
        let ok = parse_stroke_output(&text).format_ok;
        let expected = grammar::conforms(&text);
        conforming += usize::from(expected);
        false_accepts += usize::from(ok && !expected);
        disagreements += usize::from(ok != expected);
    }
    verdict(
        "format reward",
        roundtrip_ok && false_accepts == 0 && disagreements == 0,
        format!(
            "200 round trips, max endpoint error {worst:.1e}; 10000 fuzz inputs ({conforming} conforming), {false_accepts} false accepts, {disagreements} disagreements"
        ),
    );
}

fn main() {
    let checks = [
        ("sampling_law", sampling_law as fn()),
        (
            "coverage_matches_flood_oracle",
            coverage_matches_flood_oracle as fn(),
        ),
        ("reward_formula_exactness", reward_formula_exactness as fn()),
        ("penalty_monotonicity", penalty_monotonicity as fn()),
        ("rotation_equivariance", rotation_equivariance as fn()),
        (
            "greedy_optimizer_efficacy",
            greedy_optimizer_efficacy as fn(),
        ),
        ("masking_statistics", masking_statistics as fn()),
        ("matcher_reductions", matcher_reductions as fn()),
        (
            "structural_stats_consistency",
            structural_stats_consistency as fn(),
        ),
        ("metrics_aggregation", metrics_aggregation as fn()),
        ("format_reward", format_reward as fn()),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        if std::panic::catch_unwind(check).is_err() {
            eprintln!("check {name} failed");
            failed += 1;
        }
    }
    println!(
        "{} of {} acceptance checks passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
