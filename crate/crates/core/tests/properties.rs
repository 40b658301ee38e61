mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use slipnav::frontier::{
    expansion_count, extract_frontiers, goal_value, pareto_front, pareto_indices, Selection, SelectionStrategy,
};
use slipnav::gp::{GpModel, KernelParams};
use slipnav::nav::{astar, build_obstacle_map, plan_path};
use slipnav::safecert::{SafeSet, UNBOUNDED};
use slipnav::terrain::{interpolate, FieldParams, NoisySample};
use slipnav::{generate_field, FieldKind, Mask, Point, ScalarGrid, StrategyKind, WorkspaceSpec};

fn kind_of(i: u8) -> FieldKind {
    [FieldKind::Smooth, FieldKind::Heterogeneous, FieldKind::GpPrior][i as usize % 3]
}

fn samples(rng: &mut impl Rng, n: usize, width: f64) -> Vec<NoisySample> {
    (0..n)
        .map(|_| NoisySample {
            location: Point::new(rng.random_range(0.0..width), rng.random_range(0.0..width)),
            value: rng.random_range(0.0..1.0),
            noise_std: 0.02,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fields_are_deterministic_clamped_and_bounded(seed in any::<u64>(), kind in 0u8..3) {
        let spec = WorkspaceSpec::new(6.0, 5.0, 0.25).unwrap();
        let params = FieldParams { num_patches: 2, ..FieldParams::default() };
        let a = generate_field(&spec, kind_of(kind), &params, seed).unwrap();
        let b = generate_field(&spec, kind_of(kind), &params, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.grid.iter().all(|v| (0.0..=1.0).contains(v)));

        let (rows, cols) = (a.grid.rows() as isize, a.grid.cols() as isize);
        let mut steepest: f64 = 0.0;
        for r in 0..rows {
            for c in 0..cols {
                for (dr, dc) in [(0, 1), (1, -1), (1, 0), (1, 1)] {
                    if let Some(&w) = a.grid.get(r + dr, c + dc) {
                        let d = ((dr * dr + dc * dc) as f64).sqrt() * spec.resolution;
                        steepest = steepest.max((w - a.grid[(r * cols + c) as usize]).abs() / d);
                    }
                }
            }
        }
        prop_assert!(a.lipschitz_bound >= steepest - 1e-12, "{} < {}", a.lipschitz_bound, steepest);

        let mut rng = rng(seed);
        let (lo, hi) = spec.bounds();
        for _ in 0..50 {
            let p = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            let v = interpolate(&a, p).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn adding_samples_never_increases_variance(seed in any::<u64>(), n in 0usize..30, extra in 1usize..10) {
        let mut rng = rng(seed);
        let params = KernelParams {
            signal_std: rng.random_range(0.1..0.5),
            length_scale: rng.random_range(0.5..3.0),
            noise_std: rng.random_range(0.01..0.1),
        };
        let all = samples(&mut rng, n + extra, 10.0);
        let queries: Vec<Point> = (0..40)
            .map(|_| Point::new(rng.random_range(-1.0..11.0), rng.random_range(-1.0..11.0)))
            .collect();
        let before = GpModel::fit(&all[..n], params, 0.5).unwrap().predict(&queries).1;
        let after = GpModel::fit(&all, params, 0.5).unwrap().predict(&queries).1;
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(*a <= b + 1e-9, "std rose from {b} to {a}");
        }
    }

    #[test]
    fn constant_field_gives_constant_mean(seed in any::<u64>(), c in 0.0f64..1.0, n in 1usize..40) {
        let mut rng = rng(seed);
        let mut data = samples(&mut rng, n, 8.0);
        for s in &mut data {
            s.value = c;
        }
        let queries: Vec<Point> = (0..30)
            .map(|_| Point::new(rng.random_range(-2.0..10.0), rng.random_range(-2.0..10.0)))
            .collect();
        let model = GpModel::fit(&data, KernelParams::default(), c).unwrap();
        for m in model.predict(&queries).0 {
            prop_assert!((m - c).abs() <= 1e-6);
        }
        // Noiseless fit with a different prior mean still reproduces c at the data.
        let exact = KernelParams { noise_std: 0.0, ..KernelParams::default() };
        let mut distinct = data.clone();
        distinct.dedup_by(|a, b| a.location.dist(&b.location) < 0.3);
        let model = GpModel::fit(&distinct[..1], exact, 0.5).unwrap();
        prop_assert!((model.predict_point(distinct[0].location).0 - c).abs() <= 1e-6);
    }

    #[test]
    fn expansion_is_order_independent_and_matches_a_scan(seed in any::<u64>(), l in 0.05f64..1.0) {
        let mut rng = rng(seed);
        let (rows, cols) = (rng.random_range(8..20), rng.random_range(8..20));
        let mask = random_mask(&mut rng, rows, cols, 0.2);
        let upper = ScalarGrid::from_fn(rows, cols, |_| {
            if rng.random_bool(0.1) { UNBOUNDED } else { rng.random_range(0.0..1.0) }
        });
        let resolution = 0.5;
        let set = SafeSet { mask: mask.clone(), threshold: 0.8, lipschitz: l, resolution, epoch: 0 };
        let fwd = set.expand(&upper).unwrap();
        let rev = set.expand_reversed(&upper).unwrap();
        prop_assert_eq!(&fwd.mask, &rev.mask);

        let cells = |i: usize| ((i / cols) as f64, (i % cols) as f64);
        let scan = Mask::from_fn(rows, cols, |c| {
            let j = c.row * cols + c.col;
            mask[j] || mask.set_indices().any(|i| {
                let slack = 0.8 - upper[i];
                if upper[i] >= UNBOUNDED || slack < 0.0 {
                    return false;
                }
                let radius = slack / l / resolution;
                let ((ri, ci), (rj, cj)) = (cells(i), cells(j));
                let d2 = (ri - rj).powi(2) + (ci - cj).powi(2);
                radius >= 1.0 && d2 <= radius * radius * (1.0 + 1e-9) + 1e-12
            })
        });
        prop_assert_eq!(&fwd.mask, &scan);
        prop_assert!(mask.is_subset_of(&fwd.mask));
    }

    #[test]
    fn frontiers_match_direct_scan(seed in any::<u64>(), density in 0.05f64..0.95) {
        let mut rng = rng(seed);
        let (rows, cols) = (rng.random_range(3..25), rng.random_range(3..25));
        let mask = random_mask(&mut rng, rows, cols, density);
        prop_assert_eq!(extract_frontiers(&mask).cells, frontier_scan(&mask));
    }

    #[test]
    fn ring_frontiers_have_two_contours(
        size in 4usize..12,
        thickness in 1usize..3,
        top in 1usize..4,
        left in 1usize..4,
    ) {
        prop_assume!(size > 2 * thickness);
        let mask = ring_mask(16, 16, top, left, size, thickness);
        let f = extract_frontiers(&mask);
        prop_assert_eq!(&f.cells, &frontier_scan(&mask));
        prop_assert_eq!(f.contours.len(), 2);
        prop_assert_eq!(f.contours.iter().filter(|c| c.hole).count(), 1);
    }

    #[test]
    fn pareto_front_matches_brute_force(seed in any::<u64>(), n in 1usize..60, ties in any::<bool>()) {
        let mut rng = rng(seed);
        let cands = random_candidates(&mut rng, n, ties);
        let pts: Vec<(f64, f64)> = cands.iter().map(|c| (c.expansion_prob, c.goal_value)).collect();
        prop_assert_eq!(pareto_indices(&pts), pareto_brute(&pts));
        let mut by_cell = pareto_brute(&pts);
        by_cell.sort_by_key(|&i| cands[i].cell);
        prop_assert_eq!(pareto_front(&cands).unwrap(), by_cell);
    }

    #[test]
    fn psane_pick_is_the_unrestricted_argmax(seed in any::<u64>(), n in 1usize..60, ties in any::<bool>()) {
        let mut rng = rng(seed);
        let cands = random_candidates(&mut rng, n, ties);
        let best = (0..n)
            .max_by(|&a, &b| cands[a].overall.total_cmp(&cands[b].overall).then(cands[b].cell.cmp(&cands[a].cell)))
            .unwrap();
        prop_assume!(cands[best].overall > 0.0);
        let pick = SelectionStrategy::new(StrategyKind::Psane).select(&cands, None).unwrap();
        prop_assert_eq!(pick, Selection::Frontier(best));
    }

    #[test]
    fn scaling_goal_values_keeps_the_psane_pick(seed in any::<u64>(), n in 1usize..60, scale in 0.05f64..20.0) {
        let mut rng = rng(seed);
        let cands = random_candidates(&mut rng, n, false);
        let scaled: Vec<_> = cands
            .iter()
            .map(|c| {
                let mut c = *c;
                c.goal_value *= scale;
                c.overall = c.expansion_prob * c.goal_value;
                c
            })
            .collect();
        let pick = |cs: &[_]| SelectionStrategy::new(StrategyKind::Psane).select(cs, None).unwrap();
        prop_assert_eq!(pick(&cands), pick(&scaled));
    }

    #[test]
    fn selection_is_deterministic(seed in any::<u64>(), n in 1usize..40, kind in 1usize..4) {
        let mut rng = rng(seed);
        let cands = random_candidates(&mut rng, n, true);
        let kind = StrategyKind::ALL[kind];
        let goal = Some(Point::new(5.0, 5.0));
        let mut a = SelectionStrategy::new(kind);
        let mut b = SelectionStrategy::new(kind);
        for _ in 0..4 {
            prop_assert_eq!(a.select(&cands, goal).unwrap(), b.select(&cands, goal).unwrap());
        }
    }

    #[test]
    fn goal_value_is_the_exponential_of_summed_distances(
        cx in 0.0f64..12.0, cy in 0.0f64..12.0, gx in 0.0f64..12.0, gy in 0.0f64..12.0, k in 0.01f64..1.0,
    ) {
        let (c, g, robot) = (Point::new(cx, cy), Point::new(gx, gy), Point::new(1.0, 1.0));
        let v = goal_value(c, Some(g), robot, k);
        prop_assert!((v - (-k * (c.dist(&g) + c.dist(&robot))).exp()).abs() < 1e-12);
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!((goal_value(c, None, robot, k) - (-k * c.dist(&robot)).exp()).abs() < 1e-12);
    }

    #[test]
    fn astar_cost_matches_dijkstra(seed in any::<u64>(), density in 0.0f64..0.4) {
        let mut rng = rng(seed);
        let (rows, cols) = (rng.random_range(4..20), rng.random_range(4..20));
        let blocked = random_mask(&mut rng, rows, cols, density);
        let n = rows * cols;
        let (from, to) = (rng.random_range(0..n), rng.random_range(0..n));
        prop_assume!(!blocked[from] && !blocked[to]);
        match (astar(&blocked, from, to), dijkstra_cost(&blocked, from, to)) {
            (Ok((path, cost)), Some(reference)) => {
                prop_assert!((cost - reference).abs() < 1e-9, "{cost} vs {reference}");
                prop_assert!(path.iter().all(|&i| !blocked[i]));
                prop_assert_eq!((path[0], *path.last().unwrap()), (from, to));
            }
            (Err(_), None) => {}
            (a, b) => prop_assert!(false, "astar {:?} vs dijkstra {:?}", a.map(|p| p.1), b),
        }
    }

    #[test]
    fn planned_paths_avoid_blocked_cells(seed in any::<u64>(), margin in 0.0f64..1.2) {
        let mut rng = rng(seed);
        let spec = WorkspaceSpec::new(8.0, 8.0, 0.5).unwrap();
        let safe = random_mask(&mut rng, spec.rows(), spec.cols(), 0.85);
        let Ok(map) = build_obstacle_map(&safe, margin, spec.resolution) else { return Ok(()) };
        let free: Vec<usize> = (0..spec.len()).filter(|&i| map.is_free(i)).collect();
        let from = spec.center_of(free[rng.random_range(0..free.len())]);
        let to = Point::new(rng.random_range(0.0..8.0), rng.random_range(0.0..8.0));
        if let Ok(p) = plan_path(&map, &spec, from, to) {
            prop_assert!(p.cells.iter().all(|&i| map.is_free(i)));
            prop_assert_eq!(p.waypoints.len(), p.cells.len());
            let reference = dijkstra_cost(&map.blocked, p.cells[0], p.target).unwrap();
            prop_assert!((p.length_m - reference * spec.resolution).abs() < 1e-9);
        }
    }

    #[test]
    fn erosion_matches_brute_force(seed in any::<u64>(), margin in 0.0f64..2.0) {
        let mut rng = rng(seed);
        let (rows, cols) = (rng.random_range(4..18), rng.random_range(4..18));
        let safe = random_mask(&mut rng, rows, cols, 0.8);
        let resolution = 0.5;
        match build_obstacle_map(&safe, margin, resolution) {
            Ok(map) => {
                prop_assert_eq!(map.margin_cells, (margin / resolution - 1e-9).ceil().max(0.0) as usize);
                prop_assert_eq!(map.blocked, erosion_brute(&safe, map.margin_cells));
            }
            Err(_) => {
                let radius = (margin / resolution - 1e-9).ceil().max(0.0) as usize;
                prop_assert!(erosion_brute(&safe, radius).iter().all(|&b| b));
            }
        }
    }

    #[test]
    fn expansion_count_matches_whole_grid_scan(seed in any::<u64>(), l in 0.05f64..2.0) {
        let mut rng = rng(seed);
        let spec = WorkspaceSpec::new(rng.random_range(4.0..10.0), rng.random_range(4.0..10.0), 0.5).unwrap();
        let safe = random_mask(&mut rng, spec.rows(), spec.cols(), 0.4);
        let lower = ScalarGrid::from_fn(spec.rows(), spec.cols(), |_| rng.random_range(-0.5..1.0));
        for cell in safe.set_indices() {
            prop_assert_eq!(
                expansion_count(&spec, cell, &lower, &safe, l, 0.8),
                expansion_scan(&spec, cell, &lower, &safe, l, 0.8)
            );
        }
    }
}
