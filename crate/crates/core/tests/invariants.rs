use proptest::prelude::*;
use simcache::config::load_config;
use simcache::memhier::CacheLevel;
use simcache::model::run_simulation;
use simcache::pipeline::PipelineState;
use simcache::{generate_stream, Engine, FillPolicy, PipelineConfig, SimConfig, Simulation, WorkloadConfig};

fn small_config(
    threads: usize,
    policy: u8,
    prefetch: usize,
    target: usize,
    window: usize,
    seed_det: bool,
) -> SimConfig {
    let policy = ["global", "partitioned", "ideal"][policy as usize];
    let text = format!(
        "total_instructions=1500\nthreads={threads}\npolicy={policy}\naddr_high=200\n\
         l1_capacity=16\nl2_capacity=48\nl3_capacity=96\nwindow_capacity={window}\n\
         prefetch={}\nprefetch_degree={prefetch}\nprefetch_target_level={target}\n\
         deterministic={seed_det}\n",
        prefetch > 0
    );
    load_config(&text).unwrap()
}

fn levels_within_capacity(sim: &Simulation) -> bool {
    let h = sim.hierarchy();
    (0..h.depth()).all(|l| {
        let level: &CacheLevel = h.level(l);
        level.len() <= level.capacity() && level.is_consistent()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_conserve_instructions_and_order_counters(
        threads in 1usize..=4,
        policy in 0u8..3,
        prefetch in 0usize..=6,
        target in 1usize..=3,
        window in 4usize..=40,
        det in any::<bool>(),
        seed in 0u64..1000,
    ) {
        let cfg = small_config(threads, policy, prefetch, target, window, det);
        let mut sim = Simulation::new(&cfg, seed).unwrap();
        prop_assert_eq!(sim.in_flight(), 1500);
        let mut engine = Engine::new();
        sim.start(&mut engine).unwrap();
        let mut ok = true;
        engine
            .run(&mut sim, |m, _| {
                // conservation and capacity checked after every event
                ok &= m.retired() + m.in_flight() == 1500;
                ok &= m.pipelines().iter().all(|p| p.occupancy() <= window);
                ok &= m.hierarchy().counters.is_ordered();
                ok &= levels_within_capacity(m);
                m.is_done()
            })
            .unwrap();
        prop_assert!(ok);
        let s = sim.summarize(&engine).unwrap();
        prop_assert_eq!(s.retired, 1500);
        prop_assert!(s.counters_ordered());
        prop_assert!(s.max_window_occupancy <= window);
        prop_assert!(s.accesses >= s.memory_instructions);
        if cfg.mem.policy == FillPolicy::Ideal {
            prop_assert_eq!(s.l1_misses, 0);
            prop_assert_eq!(s.accesses, s.memory_instructions);
            prop_assert_eq!(s.prefetches, 0);
        }
        if prefetch == 0 {
            prop_assert_eq!(s.prefetches, 0);
        }
        prop_assert!(s.sim_time > 0.0);
    }
}

#[test]
fn window_capacity_bounds_decode() {
    let cfg = PipelineConfig {
        window_capacity: 5,
        ..PipelineConfig::default()
    };
    let wl = WorkloadConfig {
        count: 40,
        mem_fraction: 1.0,
        ..WorkloadConfig::default()
    };
    let mut stream = generate_stream(&wl, 0, 1).unwrap();
    let mut p = PipelineState::new();
    assert_eq!(p.decode_step(&mut stream, &cfg), 4);
    assert_eq!(p.decode_step(&mut stream, &cfg), 1);
    assert_eq!(p.decode_step(&mut stream, &cfg), 0);
    // nothing hits, nothing retires
    let out = p.execute_step(&cfg, |_| false);
    assert_eq!((out.retired, out.first_accesses), (0, 5));
    let out = p.execute_step(&cfg, |_| true);
    assert_eq!((out.retired, out.first_accesses), (5, 0));
    assert_eq!(p.retired + p.occupancy() as u64 + stream.remaining() as u64, 40);
}

#[test]
fn width_budget_is_shared_between_passes() {
    let cfg = PipelineConfig {
        execute_width: 3,
        ..PipelineConfig::default()
    };
    let wl = WorkloadConfig {
        count: 8,
        mem_fraction: 0.5,
        ..WorkloadConfig::default()
    };
    let mut stream = generate_stream(&wl, 0, 3).unwrap();
    let mut p = PipelineState::new();
    while p.decode_step(&mut stream, &cfg) > 0 {}
    let mut total = 0;
    loop {
        let out = p.execute_step(&cfg, |_| true);
        assert!(out.retired <= 3);
        if out.retired == 0 {
            break;
        }
        total += out.retired;
    }
    assert_eq!(total, 8);
}

#[test]
fn compute_only_workload_never_touches_memory() {
    let cfg: SimConfig = load_config("instructions=800\nmem_fraction=0\nthreads=2\n").unwrap();
    let s = run_simulation(Simulation::new(&cfg, 4).unwrap()).unwrap();
    assert_eq!((s.accesses, s.l1_misses, s.retired), (0, 0, 1600));
}
