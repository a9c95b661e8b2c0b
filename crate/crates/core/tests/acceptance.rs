//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs with no model and no network.

use std::collections::{BTreeSet, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anchorkit::digest::fnv1a64;
use anchorkit::lenskit::jaccard_distance;
use anchorkit::probekit::fixtures::{orthogonal_suite, random_suite, scale_bundle};
use anchorkit::probekit::{layer_sweep, maxsim, probe_instance};
use anchorkit::rng::SplitMix64;
use anchorkit::scorer::{compute_deltas, Tenths};
use anchorkit::shapegen::{generate_maze, generate_squiggle, maze_passages, render_scene, Family, Label};
use anchorkit::taskforge::{
    build_correspondence_instance, build_task_finetune_set, BuiltInstance, Split, TaskConfig,
    TASK_FINETUNE_COMPLEXITY, TRAIN_SEED_BIT,
};
use anchorkit::tensorstore::{
    region_to_tokens, HiddenStateBundle, Matrix, RegionBox, StoreError, TokenGridGeometry, VisualToken,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const JACCARD_PAIRS: usize = 10_000;
const JACCARD_BUDGET: Duration = Duration::from_secs(5);
const MAXSIM_PAIRS: usize = 1_000;
const MAXSIM_TOL: f64 = 1e-6;
const MAXSIM_MAX_ROWS: u64 = 64;
const MAXSIM_MAX_DIM: u64 = 128;
const SCALED_FIXTURES: usize = 1_000;
const REGION_CASES: usize = 1_000;
const ORTHOGONAL_INSTANCES: usize = 100;
const ORTHOGONAL_LAYERS: usize = 6;
const RANDOM_INSTANCES: usize = 1_000;
const CHANCE: f64 = 0.25;
const CHANCE_TOL: f64 = 0.05;
const MAZES: u64 = 100;
const SQUIGGLES: u64 = 100;
const CLOSURE_TOL: f64 = 1e-9;
const DATASET_INSTANCES: u64 = 1_000;
const CHI_SQUARE_ALPHA: f64 = 0.01;
const DATASET_BUDGET: Duration = Duration::from_secs(120);
const ANCH1_ROUND_TRIPS: usize = 50;
const ANCH1_BIT_FLIPS: usize = 100;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_set(rng: &mut SplitMix64, universe: u64) -> BTreeSet<u32> {
    let k = rng.below(24);
    (0..k).map(|_| rng.below(universe) as u32).collect()
}

fn jaccard_oracle(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> f64 {
    let a: HashSet<u32> = a.iter().copied().collect();
    let b: HashSet<u32> = b.iter().copied().collect();
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let union = a.len() + b.iter().filter(|x| !a.contains(x)).count();
    1.0 - inter as f64 / union as f64
}

fn jaccard_criterion() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x4A41);
    let (mut mismatches, mut violations, mut undefined) = (0usize, 0usize, 0usize);
    for i in 0..JACCARD_PAIRS {
        let universe = [8, 32, 200][i % 3];
        let a = random_set(&mut rng, universe);
        let b = random_set(&mut rng, universe);
        if a.is_empty() && b.is_empty() {
            undefined += 1;
            if jaccard_distance(&a, &b).is_ok() {
                violations += 1;
            }
            continue;
        }
        let d = jaccard_distance(&a, &b).unwrap();
        if d != jaccard_oracle(&a, &b) {
            mismatches += 1;
        }
        if jaccard_distance(&b, &a).unwrap() != d {
            violations += 1;
        }
        if !a.is_empty() && jaccard_distance(&a, &a).unwrap() != 0.0 {
            violations += 1;
        }
        let disjoint: BTreeSet<u32> = b.iter().map(|x| x + 1_000_000).collect();
        if !(a.is_empty() && disjoint.is_empty()) && jaccard_distance(&a, &disjoint).unwrap() != 1.0 {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && violations == 0 && elapsed < JACCARD_BUDGET,
        format!(
            "{JACCARD_PAIRS} pairs, {mismatches} oracle mismatches, {violations} axiom violations, \
             {undefined} empty-empty pairs rejected, {:.2}s (budget {}s)",
            elapsed.as_secs_f64(),
            JACCARD_BUDGET.as_secs()
        ),
    )
}

fn random_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0) as f32).collect();
    Matrix::new(rows, cols, data)
}

fn maxsim_oracle(q: &Matrix, c: &Matrix) -> f64 {
    let mut total = 0.0;
    for i in 0..q.rows() {
        let mut best = f64::NEG_INFINITY;
        for j in 0..c.rows() {
            let (mut dot, mut nq, mut nc) = (0.0f64, 0.0f64, 0.0f64);
            for k in 0..q.cols() {
                let (x, y) = (q.row(i)[k] as f64, c.row(j)[k] as f64);
                dot += x * y;
                nq += x * x;
                nc += y * y;
            }
            best = best.max(dot / (nq.sqrt() * nc.sqrt()));
        }
        total += best;
    }
    total / q.rows() as f64
}

fn maxsim_criterion() -> Outcome {
    let mut rng = SplitMix64::new(0x4D53);
    let mut worst = 0.0f64;
    for _ in 0..MAXSIM_PAIRS {
        let d = 1 + rng.below(MAXSIM_MAX_DIM) as usize;
        let n = 1 + rng.below(MAXSIM_MAX_ROWS) as usize;
        let m = 1 + rng.below(MAXSIM_MAX_ROWS) as usize;
        let q = random_matrix(&mut rng, n, d);
        let c = random_matrix(&mut rng, m, d);
        worst = worst.max((maxsim(&q, &c).unwrap() - maxsim_oracle(&q, &c)).abs());
    }

    let mut flips = 0;
    let mut krng = SplitMix64::new(0x5343);
    for (bundle, inst) in random_suite(SCALED_FIXTURES, 0x5343) {
        let k = 10f64.powf(krng.uniform(-3.0, 3.0)) as f32;
        let before = probe_instance(&bundle, &inst, 0).unwrap().predicted;
        let after = probe_instance(&scale_bundle(&bundle, k), &inst, 0).unwrap().predicted;
        if before != after {
            flips += 1;
        }
    }
    outcome(
        worst <= MAXSIM_TOL && flips == 0,
        format!(
            "{MAXSIM_PAIRS} pairs, max |error| {worst:.2e} (tol {MAXSIM_TOL:.0e}); \
             {SCALED_FIXTURES} rescaled fixtures, {flips} prediction flips"
        ),
    )
}

fn region_oracle(rect: [f64; 4], g: &TokenGridGeometry) -> BTreeSet<(u32, u32)> {
    let p = g.patch_px as f64;
    let overlaps = |lo: f64, hi: f64, k: u32| lo < (k + 1) as f64 * p && k as f64 * p < hi;
    let mut out = BTreeSet::new();
    for r in 0..g.grid_rows {
        for c in 0..g.grid_cols {
            if overlaps(rect[1], rect[3], r) && overlaps(rect[0], rect[2], c) {
                out.insert((r, c));
            }
        }
    }
    out
}

fn region_criterion() -> Outcome {
    let worked_grid = TokenGridGeometry {
        image_idx: 0,
        patch_px: 14,
        grid_rows: 37,
        grid_cols: 37,
        image_w_px: 512,
        image_h_px: 512,
    };
    let worked = region_to_tokens(&RegionBox::new([15.0, 15.0], 30), &worked_grid).unwrap();
    let worked_expected: BTreeSet<(u32, u32)> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).collect();
    let worked_ok = worked == worked_expected && worked == region_oracle([0.0, 0.0, 30.0, 30.0], &worked_grid);

    let mut rng = SplitMix64::new(0x5247);
    let mut mismatches = 0;
    for _ in 0..REGION_CASES {
        let patch = [8, 14, 16, 28, 32][rng.below(5) as usize];
        let w = 64 + rng.below(900) as u32;
        let h = 64 + rng.below(900) as u32;
        let g = TokenGridGeometry {
            image_idx: 0,
            patch_px: patch,
            grid_rows: h.div_ceil(patch),
            grid_cols: w.div_ceil(patch),
            image_w_px: w,
            image_h_px: h,
        };
        let side = 1 + rng.below(w.min(h) as u64) as u32;
        let half = side as f64 / 2.0;
        let mut center = [rng.uniform(half, w as f64 - half), rng.uniform(half, h as f64 - half)];
        if rng.below(2) == 0 {
            // integer centers put edges exactly on patch boundaries more often
            center = center.map(|v| v.round());
            if center[0] - half < 0.0 || center[0] + half > w as f64 || center[1] - half < 0.0 || center[1] + half > h as f64 {
                center = [w as f64 / 2.0, h as f64 / 2.0];
            }
        }
        let region = RegionBox::new(center, side);
        let rect = [center[0] - half, center[1] - half, center[0] + half, center[1] + half];
        if region_to_tokens(&region, &g).unwrap() != region_oracle(rect, &g) {
            mismatches += 1;
        }
    }
    outcome(
        worked_ok && mismatches == 0,
        format!(
            "worked example {} (9 cells rows 0..2 x cols 0..2), {REGION_CASES} random cases, {mismatches} mismatches",
            if worked_ok { "ok" } else { "WRONG" }
        ),
    )
}

fn probe_sanity_criterion() -> Outcome {
    let (bundles, instances): (Vec<_>, Vec<_>) =
        orthogonal_suite(ORTHOGONAL_INSTANCES, ORTHOGONAL_LAYERS, 0x4F52).into_iter().unzip();
    let orth = layer_sweep(&bundles, &instances).unwrap();
    let orth_ok = orth.layers.len() == ORTHOGONAL_LAYERS && orth.layers.iter().all(|l| l.accuracy == 1.0);
    let worst = orth.layers.iter().map(|l| l.accuracy).fold(1.0f64, f64::min);

    let (bundles, instances): (Vec<_>, Vec<_>) = random_suite(RANDOM_INSTANCES, 0x524E).into_iter().unzip();
    let rand = layer_sweep(&bundles, &instances).unwrap();
    let acc = rand.layers[0].accuracy;
    let rand_ok = (acc - CHANCE).abs() <= CHANCE_TOL;
    outcome(
        orth_ok && rand_ok,
        format!(
            "orthogonal: {ORTHOGONAL_INSTANCES} instances x {ORTHOGONAL_LAYERS} layers, min accuracy {worst:.3}; \
             random: {RANDOM_INSTANCES} instances, accuracy {acc:.3} (target {CHANCE} +/- {CHANCE_TOL})"
        ),
    )
}

/// FNV-1a-64 of the reference and target PNG bytes of each golden instance.
const GOLDEN: [(Family, u32, u64, u64, u64); 20] = [
    (Family::Squiggle, 20, 0, 0x77924a4284f5bf71, 0x0bdb608a65017556),
    (Family::Squiggle, 20, 1, 0x4b876178ba9e5395, 0xb907fb8d1704ef05),
    (Family::Squiggle, 20, 2, 0x0c4ab8dd712c225d, 0x0bc6908371e69cb1),
    (Family::Squiggle, 30, 0, 0x4113f63c3e285d2a, 0x588c35bff45b4d0c),
    (Family::Squiggle, 30, 1, 0x2020414c1b3280f6, 0x76b994f033e0ffbd),
    (Family::Squiggle, 30, 2, 0x359ace73e8567364, 0x0e51cf78e142e233),
    (Family::Squiggle, 100, 0, 0xfb55e28a616ede48, 0x17d2cc7c42e57abd),
    (Family::Squiggle, 100, 1, 0x5a55341eb77bc4d6, 0xab42b30532d4e46f),
    (Family::Squiggle, 100, 2, 0xda5c3906e2dd6788, 0x7de8960196df3d72),
    (Family::Maze, 3, 0, 0xb9252b810d8f57f5, 0xfa4b3d6aea48f3b7),
    (Family::Maze, 3, 1, 0x703edacf453cb457, 0xf9dfa41d357888ff),
    (Family::Maze, 3, 2, 0x7424d7e0e93f6381, 0x73e1872ff1a832d2),
    (Family::Maze, 10, 0, 0x36bca113dd8f749d, 0xcc7199c49f04777e),
    (Family::Maze, 10, 1, 0x57b285ab4665aa7d, 0x31430a13b03ed6b9),
    (Family::Maze, 10, 2, 0x321e031482d7e5a6, 0x23b7579bd7094f3a),
    (Family::Known, 0, 0, 0x5e1853490fc860a4, 0x45112a989de1c4ac),
    (Family::Known, 0, 1, 0xf81e171618d918b2, 0xd32a05edd0506e33),
    (Family::Known, 0, 2, 0x6c89372932013ea6, 0xd80b2f6f1d0684a7),
    (Family::Known, 0, 3, 0x13eac5a8ffbf571e, 0xedc2ff9b9c101edf),
    (Family::Known, 0, 4, 0xf0dbd2aec469bb34, 0x3c0d1a7fff7e4d28),
];

fn render_pair(family: Family, n: u32, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let cfg = TaskConfig::with_complexity(n);
    let b = build_correspondence_instance(family, seed, &cfg).unwrap();
    let png = |s| render_scene(s, seed).unwrap().to_png().unwrap();
    (png(&b.ref_scene), png(&b.target_scene))
}

fn spanning_tree(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n * n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    edges.len() == n * n - 1
}

fn determinism_criterion() -> Outcome {
    let mut unstable = 0;
    let mut drifted = Vec::new();
    for &(family, n, seed, ref_digest, target_digest) in &GOLDEN {
        let first = render_pair(family, n, seed);
        let second = render_pair(family, n, seed);
        if first != second {
            unstable += 1;
        }
        let got = (fnv1a64(&first.0), fnv1a64(&first.1));
        if got != (ref_digest, target_digest) {
            drifted.push(format!("({family:?}, {n}, {seed}, {:#018x}, {:#018x})", got.0, got.1));
        }
    }
    let mut bad_mazes = 0;
    for seed in 0..MAZES {
        let n = 2 + (seed % 12) as u32;
        let g = generate_maze(seed, n).unwrap();
        if !spanning_tree(n as usize, &maze_passages(&g)) {
            bad_mazes += 1;
        }
    }
    let mut worst_gap = 0.0f64;
    for seed in 0..SQUIGGLES {
        let n = [20, 30, 40, 50, 100][seed as usize % 5];
        let g = generate_squiggle(seed, n).unwrap();
        let (a, b) = (g.outline.first().unwrap(), g.outline.last().unwrap());
        worst_gap = worst_gap.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
    }
    let mut detail = format!(
        "{} golden instances, {unstable} unstable across runs, {} differ from pinned digests; \
         {MAZES} mazes, {bad_mazes} not spanning trees; {SQUIGGLES} squiggles, max closure gap {worst_gap:.1e}",
        GOLDEN.len(),
        drifted.len()
    );
    if !drifted.is_empty() {
        detail.push_str("\n         current digests:\n         ");
        detail.push_str(&drifted.join(",\n         "));
    }
    outcome(
        unstable == 0 && drifted.is_empty() && bad_mazes == 0 && worst_gap < CLOSURE_TOL,
        detail,
    )
}

/// `(D, C, C-D, R, R-max(D,C))` rows as published, semantic
/// correspondence first, then faces and 2D shapes.
const PUBLISHED_ROWS: [[&str; 5]; 32] = [
    ["36.6", "57.4", "20.8", "68.7", "11.3"],
    ["32.4", "42.2", "9.8", "60.2", "18.0"],
    ["52.5", "62.9", "10.4", "68.4", "5.5"],
    ["37.2", "46.7", "9.5", "62.1", "15.4"],
    ["53.8", "65.3", "11.5", "68.6", "3.3"],
    ["40.3", "47.9", "7.6", "61.6", "13.7"],
    ["28.1", "34.0", "5.9", "56.8", "22.8"],
    ["24.8", "30.0", "5.2", "47.4", "17.4"],
    ["34.3", "46.7", "12.4", "56.7", "10.0"],
    ["28.2", "34.4", "6.2", "51.1", "16.7"],
    ["31.9", "43.4", "11.5", "56.4", "13.0"],
    ["28.4", "36.5", "8.1", "53.8", "17.3"],
    ["77.1", "59.2", "-17.9", "97.2", "20.1"],
    ["41.1", "37.4", "-3.7", "70.8", "29.7"],
    ["84.2", "83.2", "-1.0", "93.2", "9.0"],
    ["56.9", "55.7", "-1.2", "73.4", "16.5"],
    ["83.9", "85.2", "1.3", "92.8", "7.6"],
    ["65.7", "63.8", "-1.9", "74.1", "8.4"],
    ["49.8", "52.7", "2.9", "61.2", "8.5"],
    ["32.4", "31.9", "-0.5", "42.9", "10.5"],
    ["50.4", "48.6", "-1.8", "51.8", "1.4"],
    ["36.5", "34.2", "-2.3", "42.1", "5.6"],
    ["54.1", "97.3", "43.2", "100", "2.7"],
    ["29.0", "27.3", "-1.7", "74.2", "45.2"],
    ["93.5", "99.4", "5.9", "100", "0.6"],
    ["48.4", "40.0", "-8.4", "91.7", "43.3"],
    ["99.7", "99.9", "0.2", "100", "0.1"],
    ["57.1", "37.7", "-19.4", "86.1", "29.0"],
    ["50.6", "70.5", "19.9", "98.9", "28.4"],
    ["30.5", "32.3", "1.8", "91.7", "59.4"],
    ["72.7", "91.8", "19.1", "98.5", "6.7"],
    ["40.2", "42.9", "2.7", "89.3", "46.4"],
];

fn delta_criterion() -> Outcome {
    let t = |s: &str| s.parse::<Tenths>().unwrap();
    let mut wrong = Vec::new();
    for row in &PUBLISHED_ROWS {
        let (cd, rmax) = compute_deltas(t(row[0]), t(row[1]), t(row[3]));
        if cd != t(row[2]) {
            wrong.push(format!("C-D of {row:?} gives {cd}"));
        }
        if rmax != t(row[4]) {
            wrong.push(format!("R-max of {row:?} gives {rmax}"));
        }
    }
    let example = compute_deltas(t("53.8"), t("65.3"), t("68.6")) == (t("11.5"), t("3.3"))
        && compute_deltas(t("29.0"), t("27.3"), t("74.2")) == (t("-1.7"), t("45.2"));
    let mut detail = format!(
        "{} delta cells from {} published rows, {} mismatches",
        PUBLISHED_ROWS.len() * 2,
        PUBLISHED_ROWS.len(),
        wrong.len()
    );
    for w in &wrong {
        detail.push_str("\n         ");
        detail.push_str(w);
    }
    outcome(wrong.is_empty() && example, detail)
}

fn provenance_matches(b: &BuiltInstance) -> (usize, bool) {
    let inst = &b.instance;
    let reference = inst.reference().unwrap();
    let matches: Vec<_> = inst
        .entity_descriptors
        .iter()
        .filter(|e| e.image_idx == 1 && e.provenance == reference.provenance)
        .collect();
    let gt_label = match inst.ground_truth.index() {
        0 => Label::A,
        1 => Label::B,
        2 => Label::C,
        _ => Label::D,
    };
    (matches.len(), matches.first().is_some_and(|e| e.role == gt_label))
}

fn dataset_criterion() -> Outcome {
    let start = Instant::now();
    let cfg = TaskConfig::default();
    let mut counts = [0u64; 4];
    let mut bad_provenance = 0;
    let mut eval_shape_seeds = HashSet::new();
    for seed in 0..DATASET_INSTANCES {
        let b = build_correspondence_instance(Family::Squiggle, seed, &cfg).unwrap();
        counts[b.instance.ground_truth.index()] += 1;
        let (k, on_gt) = provenance_matches(&b);
        if k != 1 || !on_gt {
            bad_provenance += 1;
        }
        eval_shape_seeds.extend(b.instance.entity_descriptors.iter().map(|e| e.provenance.seed));
    }
    let expected = DATASET_INSTANCES as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(1.0 - CHI_SQUARE_ALPHA);

    let train = build_task_finetune_set(0, &cfg).unwrap();
    let eval_seeds: HashSet<u64> = (0..DATASET_INSTANCES).collect();
    let train_ok = train.len() == 1000
        && train.iter().all(|b| {
            let i = &b.instance;
            i.family == Family::Squiggle
                && i.complexity_n == TASK_FINETUNE_COMPLEXITY
                && i.split == Split::Train
                && i.seed & TRAIN_SEED_BIT != 0
                && !eval_seeds.contains(&i.seed)
                && provenance_matches(b) == (1, true)
        });
    let shared_shapes = train
        .iter()
        .flat_map(|b| b.instance.entity_descriptors.iter())
        .filter(|e| eval_shape_seeds.contains(&e.provenance.seed))
        .count();
    let elapsed = start.elapsed();
    outcome(
        chi2 < critical && bad_provenance == 0 && train_ok && shared_shapes == 0 && elapsed < DATASET_BUDGET,
        format!(
            "GT letters {counts:?}, chi-square {chi2:.3} < {critical:.3} (df 3, alpha {CHI_SQUARE_ALPHA}); \
             {bad_provenance} instances without exactly one provenance match; task finetune set {} pairs {}, \
             {shared_shapes} shapes shared with eval; {:.1}s (budget {}s)",
            train.len(),
            if train_ok { "ok" } else { "INVALID" },
            elapsed.as_secs_f64(),
            DATASET_BUDGET.as_secs()
        ),
    )
}

fn random_bundle(rng: &mut SplitMix64, id: usize) -> HiddenStateBundle {
    let layers = 1 + rng.below(4) as usize;
    let dim = 1 + rng.below(48) as usize;
    let mut grids = Vec::new();
    let mut index = Vec::new();
    for img in 0..(1 + rng.below(2) as u32) {
        let patch = [8, 14, 16][rng.below(3) as usize];
        let (rows, cols) = (1 + rng.below(6) as u32, 1 + rng.below(6) as u32);
        grids.push(TokenGridGeometry {
            image_idx: img,
            patch_px: patch,
            grid_rows: rows,
            grid_cols: cols,
            image_w_px: cols * patch,
            image_h_px: rows * patch,
        });
        for r in 0..rows {
            for c in 0..cols {
                let seq_pos = 7 + index.len() as u64;
                index.push(VisualToken { image_idx: img, row: r, col: c, seq_pos });
            }
        }
    }
    let mats = (0..layers)
        .map(|_| {
            let data = (0..index.len() * dim)
                .map(|_| f32::from_bits(rng.next_u64() as u32 & 0xBFFF_FFFF))
                .collect();
            Matrix::new(index.len(), dim, data)
        })
        .collect();
    HiddenStateBundle::new(format!("model-{id}"), format!("inst-{id}"), dim, grids, index, mats).unwrap()
}

fn anch1_criterion() -> Outcome {
    let mut rng = SplitMix64::new(0x414E);
    let mut not_exact = 0;
    for i in 0..ANCH1_ROUND_TRIPS {
        let b = random_bundle(&mut rng, i);
        let bytes = b.to_bytes();
        match HiddenStateBundle::from_bytes(&bytes) {
            Ok(back) if back.to_bytes() == bytes => {}
            _ => not_exact += 1,
        }
    }
    let (mut detected, mut by_digest) = (0, 0);
    for i in 0..ANCH1_BIT_FLIPS {
        let mut bytes = random_bundle(&mut rng, i).to_bytes();
        let bit = rng.below(bytes.len() as u64 * 8);
        bytes[(bit / 8) as usize] ^= 1 << (bit % 8);
        match HiddenStateBundle::from_bytes(&bytes) {
            Err(StoreError::Integrity { .. }) => {
                detected += 1;
                by_digest += 1;
            }
            Err(_) => detected += 1,
            Ok(_) => {}
        }
    }
    outcome(
        not_exact == 0 && detected == ANCH1_BIT_FLIPS,
        format!(
            "{ANCH1_ROUND_TRIPS} random bundles, {not_exact} not bit-exact; {detected}/{ANCH1_BIT_FLIPS} \
             single-bit flips rejected ({by_digest} by the digest, the rest by framing checks)"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("jaccard oracle equivalence", jaccard_criterion),
        ("maxsim oracle equivalence", maxsim_criterion),
        ("region mapping", region_criterion),
        ("probe sanity", probe_sanity_criterion),
        ("generation determinism", determinism_criterion),
        ("delta arithmetic", delta_criterion),
        ("dataset statistics", dataset_criterion),
        ("format round-trips", anch1_criterion),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

