mod common;

use common::{check_case, fifo_oracle, level_events, partition_oracle, random_cases, traced_run, Event};
use proptest::prelude::*;
use simcache::config::load_config;
use simcache::memhier::{CacheLevel, FillTarget};
use simcache::FillPolicy;
use simcache::Simulation;

#[test]
fn thousand_random_strings_match_the_oracles() {
    for (i, case) in random_cases(7, 1000).iter().enumerate() {
        if let Err(e) = check_case(case) {
            panic!("case {i}: {e}");
        }
    }
}

#[test]
fn fifo_hit_does_not_refresh_age() {
    let accesses: Vec<(u64, u32)> = [1, 2, 1, 3].iter().map(|&a| (a, 0)).collect();
    let mut level = CacheLevel::global(2).unwrap();
    let got = level_events(&mut level, &accesses);
    assert_eq!(
        got,
        vec![Event::Miss(None), Event::Miss(None), Event::Hit, Event::Miss(Some(1))]
    );
}

#[test]
fn partition_fill_evicts_only_own_blocks() {
    let mut level = CacheLevel::partitioned(4, 2).unwrap();
    for (a, t) in [(10, 0), (11, 0), (20, 1), (21, 1)] {
        assert_eq!(level.fill(a, t, FillTarget::Owner), None);
    }
    // thread 1 sees thread 0's block as a hit
    assert!(level.contains(10));
    assert_eq!(level.fill(22, 1, FillTarget::Owner), Some(20));
    assert!(level.contains(10) && level.contains(11));
}

#[test]
fn uneven_split_gives_remainder_to_low_partitions() {
    let level = CacheLevel::partitioned(7, 3).unwrap();
    let caps: Vec<usize> = (0..3).map(|p| level.partition_capacity(p)).collect();
    assert_eq!(caps, vec![3, 2, 2]);
    assert!(CacheLevel::partitioned(2, 3).is_err());
    assert!(CacheLevel::global(0).is_err());
}

#[test]
fn one_partition_equals_global_over_a_whole_run() {
    let text = "instructions=3000\nl1_capacity=16\nl2_capacity=32\nl3_capacity=64\naddr_high=120\n";
    let global = load_config::<f64>(text).unwrap();
    let part = global
        .clone()
        .with_policy(FillPolicy::PartitionedFifo { partitions: 1 });
    assert_eq!(part.mem.policy, FillPolicy::PartitionedFifo { partitions: 1 });
    for seed in 1..=3 {
        let (log_g, sum_g) = traced_run(Simulation::new(&global, seed).unwrap());
        let (log_p, sum_p) = traced_run(Simulation::new(&part, seed).unwrap());
        assert_eq!(log_g, log_p, "seed {seed}");
        assert_eq!(
            (
                sum_g.accesses,
                sum_g.l1_misses,
                sum_g.l2_misses,
                sum_g.l3_misses,
                sum_g.sim_time
            ),
            (
                sum_p.accesses,
                sum_p.l1_misses,
                sum_p.l2_misses,
                sum_p.l3_misses,
                sum_p.sim_time
            )
        );
        assert!(sum_g.l1_misses > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn global_matches_queue_oracle(
        capacity in 1usize..=8,
        addrs in prop::collection::vec(1u64..=16, 0..=200),
    ) {
        let accesses: Vec<(u64, u32)> = addrs.iter().map(|&a| (a, 0)).collect();
        let mut level = CacheLevel::global(capacity).unwrap();
        prop_assert_eq!(level_events(&mut level, &accesses), fifo_oracle(capacity, &addrs));
        prop_assert!(level.is_consistent());
        prop_assert!(level.len() <= capacity);
    }

    #[test]
    fn partitioned_matches_per_partition_oracle(
        (capacity, partitions) in (1usize..=8).prop_flat_map(|c| (Just(c), 1..=c)),
        accesses in prop::collection::vec((1u64..=16, 0u32..8), 0..=200),
    ) {
        let mut level = CacheLevel::partitioned(capacity, partitions).unwrap();
        prop_assert_eq!(
            level_events(&mut level, &accesses),
            partition_oracle(capacity, partitions, &accesses)
        );
        for p in 0..partitions {
            prop_assert!(level.partition_len(p) <= level.partition_capacity(p));
        }
        prop_assert!(level.is_consistent());
    }

    #[test]
    fn oldest_target_never_exceeds_capacity(
        accesses in prop::collection::vec((1u64..=16, 0u32..4), 0..=200),
    ) {
        let mut level = CacheLevel::partitioned(8, 4).unwrap();
        for &(a, t) in &accesses {
            level.fill(a, t, FillTarget::Oldest);
            prop_assert!(level.len() <= 8);
            prop_assert!(level.contains(a));
        }
        prop_assert!(level.is_consistent());
    }
}
