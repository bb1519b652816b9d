use dualmap::baselines::{bfs_hops, dijkstra, GridGraph};
use dualmap::channel::{Location3D, RadioConfig};
use dualmap::encoder::{attention_weights, encode, EncoderParams, MessageSet};
use dualmap::env::{Action, EntityClass, EnvConfig, Environment, NetworkState, ServingAp};
use dualmap::trainer::targets::{assign_centroids, matching_cost};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point<R: Rng>(rng: &mut R) -> [f64; 3] {
    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
}

pub fn messages<R: Rng>(count: usize, rng: &mut R) -> MessageSet {
    MessageSet { class: EntityClass::Ue, own: point(rng), neighbors: (0..count).map(|_| point(rng)).collect() }
}

pub fn permutation_invariance(sets: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..sets {
        let p = EncoderParams::init(16, &mut rng);
        let mut m = messages(rng.random_range(1..=15), &mut rng);
        let before = encode(&p, &m);
        m.neighbors.shuffle(&mut rng);
        let after = encode(&p, &m);
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

pub fn fixed_output_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = EncoderParams::init(24, &mut rng);
    for count in 0..=15 {
        let phi = encode(&p, &messages(count, &mut rng));
        assert_eq!(phi.len(), 24);
        assert!(phi.iter().all(|v| v.is_finite()));
    }
    assert!(encode(&p, &messages(0, &mut rng)).iter().all(|&v| v == 0.0));
}

pub fn softmax_normalization(draws: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..draws {
        let n = rng.random_range(1..=64);
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let keys: Vec<Vec<f64>> = (0..rng.random_range(1..=15))
            .map(|_| (0..n).map(|_| rng.random_range(-50.0..50.0)).collect())
            .collect();
        let w = attention_weights(&q, &keys).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(w.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }
}

/// Asserts one server per UE, the connection cap, the zone and the step
/// length for the transition `prev -> state`.
pub fn check_feasible(env: &Environment, prev: &NetworkState, state: &NetworkState) {
    let cfg = &env.config;
    let mut seen = vec![0usize; state.ues.len()];
    for (i, map) in state.maps.iter().enumerate() {
        assert!(map.connected_ues.len() <= cfg.max_connections, "MAP {i} over capacity");
        for &u in &map.connected_ues {
            seen[u] += 1;
            assert_eq!(state.ues[u].serving_ap, ServingAp::Map(i));
        }
    }
    for (u, ue) in state.ues.iter().enumerate() {
        match ue.serving_ap {
            ServingAp::Mbs => assert_eq!(seen[u], 0),
            ServingAp::Map(_) => assert_eq!(seen[u], 1),
        }
    }
    for (before, after) in prev.maps.iter().zip(&state.maps) {
        assert!(cfg.in_zone(&after.loc), "MAP left the zone: {:?}", after.loc);
        assert!(before.loc.distance(&after.loc) <= cfg.step_size_m + 1e-9);
    }
}

/// `steps` random actions, redeploying every episode.
pub fn random_walk(cfg: EnvConfig, seed: u64, steps: usize) {
    let env = Environment::new(cfg, RadioConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = env.reset(&mut rng);
    check_feasible(&env, &state, &state);
    for t in 0..steps {
        if t % env.config.episode_len == 0 && t > 0 {
            state = env.reset(&mut rng);
            check_feasible(&env, &state, &state);
        }
        let actions: Vec<Action> = (0..state.maps.len())
            .map(|_| Action::from_index(rng.random_range(0..Action::COUNT)))
            .collect();
        let prev = state.clone();
        env.step(&mut state, &actions, &mut rng).unwrap();
        check_feasible(&env, &prev, &state);
    }
}

fn loc<R: Rng>(rng: &mut R) -> Location3D {
    Location3D::new(rng.random_range(0.0..200.0), rng.random_range(0.0..200.0), rng.random_range(10.0..150.0))
}

fn permutations(items: Vec<usize>) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.clone();
        let head = rest.remove(i);
        for mut p in permutations(rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// MAP counts cycle through 1..=4.
pub fn matching_vs_brute_force(instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for instance in 0..instances {
        let m = 1 + instance % 4;
        let maps: Vec<Location3D> = (0..m).map(|_| loc(&mut rng)).collect();
        let centroids: Vec<Location3D> = (0..m).map(|_| loc(&mut rng)).collect();
        let best = permutations((0..m).collect())
            .into_iter()
            .map(|p| matching_cost(&maps, &centroids, &p))
            .fold(f64::INFINITY, f64::min);
        let got = assign_centroids(&maps, &centroids);
        let mut sorted = got.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..m).collect::<Vec<_>>(), "not a permutation");
        assert!((matching_cost(&maps, &centroids, &got) - best).abs() < 1e-9);
    }
}

pub fn dijkstra_vs_bfs(pairs: usize) {
    let grid = GridGraph::new(&EnvConfig::default(), 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..pairs {
        let s = rng.random_range(0..grid.num_nodes());
        let t = rng.random_range(0..grid.num_nodes());
        let path = dijkstra(&grid, s, t);
        let hops = bfs_hops(&grid, s, t).unwrap();
        assert_eq!(path.cost_m, hops as f64 * 5.0);
        assert_eq!(path.actions.len(), hops);
        // No obstacles, so the hop count is the L1 lattice distance.
        let (a, b) = (grid.coords(s), grid.coords(t));
        assert_eq!(hops, (0..3).map(|k| a[k].abs_diff(b[k])).sum::<usize>());
        assert_eq!((path.nodes[0], *path.nodes.last().unwrap()), (s, t));
    }
}
