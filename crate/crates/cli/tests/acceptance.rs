//! Acceptance gate. Each test prints one `PASS` or `FAIL` line for its
//! criterion and then asserts it.

use std::process::Command;
use std::time::{Duration, Instant};

use linkdyn_core::dla::laws::{check_laws, random_link, LAWS};
use linkdyn_core::dld::{effect, fgc, reachable_atoms};
use linkdyn_core::service::{check_service_conditions, sample, DldService, ServiceKind};
use linkdyn_core::shedding::oracle::brute_force_criterion;
use linkdyn_core::shedding::shok_member;
use linkdyn_core::{
    AtomicLink, DataLinkage, DlaTerm, DldAction, Field, Node, NodeId, Spot, ThreadAction,
    ThreadGraph, Universe,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const BIN: &str = env!("CARGO_BIN_EXE_linkdyn");

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn linkdyn(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("utf-8 output"),
    )
}

fn report(n: u32, ok: bool, detail: &str) {
    println!(
        "{} criterion {n}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_1_example_one() {
    let start = Instant::now();
    let (c1, shed) = linkdyn(&["run", "--service", "shed", &fixture("example1.ws")]);
    let (c2, plain) = linkdyn(&["run", "--service", "plain", &fixture("example1.ws")]);
    let took = start.elapsed();
    let ok = c1 == 0
        && c2 == 0
        && shed == "tau s = fresh -> true\ntau t = fresh -> true\nstop\n"
        && plain == "tau s = fresh -> true\ntau t = fresh -> false\ndead\n"
        && took < Duration::from_secs(1);
    report(
        1,
        ok,
        &format!(
            "shed {:?}, plain {:?}, {took:?}",
            shed.lines().collect::<Vec<_>>(),
            plain.lines().collect::<Vec<_>>()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_2_example_two() {
    let start = Instant::now();
    let (c0, check) = linkdyn(&["shed-check", &fixture("example2.ws")]);
    let (c1, shed) = linkdyn(&["run", "--service", "shed", &fixture("example2.ws")]);
    let (c2, plain) = linkdyn(&["run", "--service", "plain", &fixture("example2.ws")]);
    let took = start.elapsed();
    let not_member = c0 == 0 && check.starts_with("member: false\n");
    let identical = c1 == 0 && c2 == 0 && shed == plain;
    let ok = not_member && identical && took < Duration::from_secs(1);
    report(
        2,
        ok,
        &format!(
            "member=false {not_member}, traces identical {identical} (shed {:?}, plain {:?}), {took:?}",
            shed.lines().collect::<Vec<_>>(),
            plain.lines().collect::<Vec<_>>()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_3_law_suite() {
    let u = Universe::new(["s", "t", "r"], ["f", "g"], ["a", "b", "c"], ["n", "m"]).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    let start = Instant::now();
    let outcomes = check_laws(&u, 1000, &mut rng);
    let took = start.elapsed();
    let short: Vec<_> = outcomes
        .iter()
        .filter(|o| o.checked < 1000)
        .map(|o| o.name)
        .collect();
    let violated: Vec<_> = outcomes
        .iter()
        .filter(|o| o.violations > 0)
        .map(|o| format!("{} ({}/{})", o.name, o.violations, o.checked))
        .collect();
    let ok = outcomes.len() == LAWS.len()
        && short.is_empty()
        && violated.is_empty()
        && took < Duration::from_secs(30);
    report(
        3,
        ok,
        &format!(
            "{} laws x 1000 instances, under-sampled {short:?}, violated {violated:?}, {took:?}",
            outcomes.len()
        ),
    );
    assert!(ok);
}

fn random_term(u: &Universe, depth: usize, rng: &mut StdRng) -> DlaTerm {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.1) {
            DlaTerm::Empty
        } else {
            DlaTerm::Link(random_link(u, rng))
        };
    }
    let (l, r) = (
        random_term(u, depth - 1, rng),
        random_term(u, depth - 1, rng),
    );
    if rng.gen_bool(0.5) {
        DlaTerm::combine(l, r)
    } else {
        DlaTerm::override_(l, r)
    }
}

#[test]
fn criterion_4_normal_forms() {
    let u = Universe::new(["s", "t", "r"], ["f", "g"], ["a", "b", "c"], ["n", "m"]).unwrap();
    let mut rng = StdRng::seed_from_u64(4);
    let mut violations = 0;
    for _ in 0..10_000 {
        let t = random_term(&u, 6, &mut rng);
        assert!(t.depth() <= 6);
        let n = t.normalize();
        let reparsed = DlaTerm::parse(&t.display(&u).to_string(), &u);
        let renormalized = DlaTerm::parse(&n.display(&u).to_string(), &u).map(|b| b.normalize());
        let basic = DlaTerm::from_linkage(&n).normalize();
        if reparsed.as_ref() != Ok(&t)
            || renormalized.as_ref() != Ok(&n)
            || basic != n
            || n.validate(&u).is_err()
        {
            violations += 1;
        }
    }
    let ok = violations == 0;
    report(
        4,
        ok,
        &format!("10000 terms of depth <= 6, {violations} violations"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_service_conditions() {
    let u = Universe::new(["s", "t", "r"], ["f", "g"], ["a", "b"], ["n"]).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in [
        ServiceKind::Plain,
        ServiceKind::Mimic,
        ServiceKind::Shedding,
    ] {
        let h = DldService::new(kind, &u, DataLinkage::empty()).unwrap();
        let samples: Vec<_> = (0..5000).map(|_| sample(&u, kind, &mut rng)).collect();
        let cases = count_cases(&samples);
        let r = check_service_conditions(&h, samples).unwrap();
        let this = r.checked == 5000 && r.passed() && cases.iter().all(|&c| c > 0);
        ok &= this;
        lines.push(format!(
            "{kind:?} {} checked, {} violations, cases stop/dead {} tau {} mismatch {} blocked {}",
            r.checked,
            r.violations.len(),
            cases[0],
            cases[1],
            cases[2],
            cases[3]
        ));
    }
    report(5, ok, &lines.join("; "));
    assert!(ok);
}

fn count_cases(samples: &[linkdyn_core::service::Sample]) -> [usize; 4] {
    let mut c = [0; 4];
    for s in samples {
        match s.graph.node(s.node) {
            Node::Stop | Node::DeadEnd => c[0] += 1,
            Node::Post {
                action: ThreadAction::Tau,
                ..
            } => c[1] += 1,
            Node::Post {
                action: ThreadAction::Call { method, .. },
                ..
            } if *method != s.method => c[2] += 1,
            _ => {}
        }
        if s.state == linkdyn_core::ServiceState::Blocked {
            c[3] += 1;
        }
    }
    c
}

/// The seven action kinds over spots {s, t} and field f.
fn family_actions() -> Vec<DldAction> {
    let spots = [Spot(0), Spot(1)];
    let f = Field(0);
    let mut out = Vec::new();
    for &s in &spots {
        out.push(DldAction::GetFresh(s));
        out.push(DldAction::ClrSpot(s));
        out.push(DldAction::UndefTst(s));
        for &t in &spots {
            out.push(DldAction::SetSpot { dst: s, src: t });
            out.push(DldAction::GetField {
                dst: s,
                src: t,
                field: f,
            });
            out.push(DldAction::SetField {
                obj: s,
                field: f,
                src: t,
            });
            out.push(DldAction::EqualTst(s, t));
        }
    }
    out
}

/// Post nodes 0..k, then stop and dead; node 0 is the root.
fn thread(posts: &[(usize, usize, usize)], actions: &[DldAction]) -> ThreadGraph {
    let k = posts.len();
    let mut nodes: Vec<Node> = posts
        .iter()
        .map(|&(a, l, r)| Node::Post {
            left: NodeId(l as u32),
            action: ThreadAction::dld(actions[a]),
            right: NodeId(r as u32),
        })
        .collect();
    nodes.push(Node::Stop);
    nodes.push(Node::DeadEnd);
    debug_assert_eq!(nodes.len(), k + 2);
    ThreadGraph::from_nodes(nodes, NodeId(0)).unwrap()
}

/// Every state with at most `max` links.
fn states(u: &Universe, max: usize) -> Vec<DataLinkage> {
    let mut links = Vec::new();
    for s in u.spots() {
        for a in u.atoms() {
            links.push(AtomicLink::Spot(s, a));
        }
    }
    for a in u.atoms() {
        for f in u.fields() {
            links.push(AtomicLink::PartialField(a, f));
            for b in u.atoms() {
                links.push(AtomicLink::Field(a, f, b));
            }
        }
        for n in u.values() {
            links.push(AtomicLink::Value(a, n));
        }
    }
    let mut out = vec![DataLinkage::empty()];
    let mut frontier: Vec<(usize, DataLinkage)> = vec![(0, DataLinkage::empty())];
    for _ in 0..max {
        let mut next = Vec::new();
        for (from, l) in &frontier {
            for (i, link) in links.iter().enumerate().skip(*from) {
                let mut m = l.clone();
                m.insert(*link);
                out.push(m.clone());
                next.push((i + 1, m));
            }
        }
        frontier = next;
    }
    out
}

struct Tally {
    instances: usize,
    members: usize,
    disagreements: Vec<String>,
}

fn compare(g: &ThreadGraph, l: &DataLinkage, u: &Universe, t: &mut Tally) {
    let engine = shok_member(g, g.root(), l, u, 1_000_000)
        .expect("engine within bound")
        .member;
    let oracle = brute_force_criterion(g, g.root(), l, u, 1_000_000).expect("oracle within bound");
    t.instances += 1;
    t.members += engine as usize;
    if engine != oracle && t.disagreements.len() < 5 {
        t.disagreements
            .push(format!("{}| {}", g.to_spec_text(u), l.display(u)));
    }
}

#[test]
fn criterion_6_oracle_equivalence() {
    let u = Universe::new(["s", "t"], ["f"], ["a", "b"], ["n"]).unwrap();
    let actions = family_actions();
    let all_states = states(&u, 3);
    assert_eq!(all_states.len(), 299);
    let start = Instant::now();
    let mut t = Tally {
        instances: 0,
        members: 0,
        disagreements: Vec::new(),
    };
    let na = actions.len();

    // every thread with one post node, against every state of <= 3 links
    for a in 0..na {
        for l in 0..3 {
            for r in 0..3 {
                let g = thread(&[(a, l, r)], &actions);
                for st in &all_states {
                    compare(&g, st, &u, &mut t);
                }
            }
        }
    }
    // every thread with two post nodes, against every state
    for a0 in 0..na {
        for a1 in 0..na {
            for ends in 0..256 {
                let e = |i: usize| (ends >> (2 * i)) & 3;
                let g = thread(&[(a0, e(0), e(1)), (a1, e(2), e(3))], &actions);
                for st in &all_states {
                    compare(&g, st, &u, &mut t);
                }
            }
        }
    }
    let exhaustive = t.instances;
    // seeded sample of three- and four-post threads, against every state
    let mut rng = StdRng::seed_from_u64(6);
    let sampled_threads = 2000;
    for _ in 0..sampled_threads {
        let k = rng.gen_range(3..=4);
        let posts: Vec<_> = (0..k)
            .map(|_| {
                (
                    rng.gen_range(0..na),
                    rng.gen_range(0..k + 2),
                    rng.gen_range(0..k + 2),
                )
            })
            .collect();
        let g = thread(&posts, &actions);
        for st in &all_states {
            compare(&g, st, &u, &mut t);
        }
    }
    let took = start.elapsed();
    let ok = t.disagreements.is_empty() && took < Duration::from_secs(300);
    report(
        6,
        ok,
        &format!(
            "{} instances ({exhaustive} exhaustive over <= 2 posts, {sampled_threads} sampled 3-4 post threads x 299 states), {} members, {} disagreements {:?}, {took:?}",
            t.instances,
            t.members,
            t.disagreements.len(),
            t.disagreements
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_fgc() {
    let u = Universe::new(["s", "t", "r"], ["f", "g"], ["a", "b", "c", "d"], ["n"]).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let mut violations = 0;
    for i in 0..5000 {
        let uu = if i % 2 == 0 { u.clone() } else { u.mimic() };
        let l = linkdyn_core::service::random_state(&uu, 10, &mut rng);
        let once = fgc(&l, &uu);
        let live = reachable_atoms(&once, &uu);
        let idempotent = fgc(&once, &uu) == once;
        let spots_kept = l
            .iter()
            .filter(|x| matches!(x, AtomicLink::Spot(..)))
            .all(|x| once.contains(x));
        let no_garbage = once
            .iter()
            .all(|x| x.carrier().is_none_or(|c| live.contains(&c)));
        let out = effect(&DldAction::Fgc, &l, &uu).unwrap();
        if !(idempotent && spots_kept && no_garbage && out.reply && out.next == once) {
            violations += 1;
        }
    }
    let ok = violations == 0;
    report(7, ok, &format!("5000 states, {violations} violations"));
    assert!(ok);
}

#[test]
fn criterion_8_determinism() {
    let mut ok = true;
    let mut runs = 0;
    for ws in ["example1.ws", "example2.ws"] {
        let path = fixture(ws);
        let commands: [Vec<&str>; 5] = [
            vec!["run", "--service", "plain", "--states", &path],
            vec!["run", "--service", "shed", "--states", "--garbage", &path],
            vec!["shed-check", &path],
            vec!["dot", &path],
            vec!["normalize", &path, "(s = a) (>) (t = a) (+) a.f"],
        ];
        for args in &commands {
            let first = linkdyn(args);
            for _ in 1..10 {
                ok &= linkdyn(args) == first;
                runs += 1;
            }
        }
    }
    report(
        8,
        ok,
        &format!("{runs} repeated invocations compared byte for byte"),
    );
    assert!(ok);
}
