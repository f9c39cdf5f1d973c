use linkdyn_core::service::{random_graph, random_state};
use linkdyn_core::shedding::oracle::brute_force_criterion;
use linkdyn_core::shedding::shok_member;
use linkdyn_core::{Error, Universe};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn engine_and_oracle_agree_on_random_threads() {
    let u = Universe::new(["s", "t"], ["f"], ["a", "b"], ["n"]).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let bound = 200_000;
    let (mut members, mut refused) = (0, 0);
    for _ in 0..20_000 {
        let g = random_graph(&u, 5, &mut rng);
        let l = random_state(&u, 3, &mut rng);
        let engine = shok_member(&g, g.root(), &l, &u, bound);
        let oracle = brute_force_criterion(&g, g.root(), &l, &u, bound);
        match (engine, oracle) {
            (Ok(v), Ok(o)) => {
                assert_eq!(
                    v.member,
                    o,
                    "thread:\n{}state: {}",
                    g.to_spec_text(&u),
                    l.display(&u)
                );
                members += o as usize;
            }
            (Err(Error::BoundExceeded(_)), _) | (_, Err(Error::BoundExceeded(_))) => refused += 1,
            (e, o) => panic!("{e:?} {o:?}"),
        }
    }
    assert!(refused < 20, "{refused}");
    // both verdicts must be well represented for the comparison to mean much
    assert!(members > 1000 && members < 19_000, "{members}");
}
