//! Random event sequences against small reference models of each program:
//! the head of the result signal and whether it ticked, after every event.

use proptest::prelude::*;
use rizzo_rt::driver::{load, run_events, with_big_stack, RunConfig};
use rizzo_rt::oracle::Checks;
use rizzo_rt::stdlib::file;
use rizzo_rt::syntax::Term;

/// (result head, ticked) for the initial state and after each event.
type Heads = Vec<(String, bool)>;

fn run(program: &str, channels: &[(&str, &str)], events: &[(usize, String)], collect: bool) -> Heads {
    let mut trace: String = channels.iter().map(|(n, t)| format!("chan {n} : {t}\n")).collect();
    for (k, payload) in events {
        trace += &format!("{} {payload}\n", channels[*k].0);
    }
    with_big_stack(move || {
        let loaded = load(file(program).unwrap()).unwrap();
        let events = loaded.events(&trace).unwrap();
        let cfg = RunConfig { checks: Checks::all(), collect, ..Default::default() };
        let out = run_events(&loaded, events, cfg);
        assert!(out.ok(), "{:?} {:?}", out.violations(), out.fault());
        out.run
            .states
            .iter()
            .map(|st| {
                let Term::Loc(l) = &*st.result else { panic!("result is not a signal") };
                let c = st.heap.get(*l).unwrap();
                (c.signal.head.to_string(), c.signal.updated)
            })
            .collect()
    })
}

fn ints(v: &[(usize, i64)]) -> Vec<(usize, String)> {
    v.iter().map(|(k, x)| (*k, x.to_string())).collect()
}

fn two_channels() -> impl Strategy<Value = Vec<(usize, i64)>> {
    prop::collection::vec((0..2usize, 0..200i64), 0..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counter_is_a_running_total(xs in prop::collection::vec(-50..50i64, 0..12)) {
        let mut want = vec![("0".to_string(), false)];
        let mut acc = 0;
        for x in &xs {
            acc += x;
            want.push((acc.to_string(), true));
        }
        let events: Vec<(usize, String)> = xs.iter().map(|x| (0, x.to_string())).collect();
        prop_assert_eq!(run("counter.rzo", &[("n", "Int")], &events, true), want);
    }

    #[test]
    fn filter_keeps_even_inputs(xs in prop::collection::vec(0..100i64, 0..12)) {
        let mut want = vec![("0".to_string(), false)];
        let mut last = 0;
        for x in &xs {
            let even = x % 2 == 0;
            if even {
                last = *x;
            }
            want.push((last.to_string(), even));
        }
        let events: Vec<(usize, String)> = xs.iter().map(|x| (0, x.to_string())).collect();
        prop_assert_eq!(run("filter.rzo", &[("k1", "Int")], &events, true), want);
    }

    #[test]
    fn merge_follows_the_last_update(evs in two_channels()) {
        let mut want = vec![("0".to_string(), false)];
        for (_, x) in &evs {
            want.push((x.to_string(), true));
        }
        prop_assert_eq!(run("merge.rzo", &[("a", "Int"), ("b", "Int")], &ints(&evs), true), want);
    }

    #[test]
    fn jumper_sticks_after_the_first_large_input(xs in prop::collection::vec(0..120i64, 0..12)) {
        let mut want = vec![("0".to_string(), false)];
        let mut stuck: Option<i64> = None;
        for x in &xs {
            match stuck {
                Some(v) => want.push((v.to_string(), false)),
                None if *x > 100 => {
                    stuck = Some(x * 2);
                    want.push(((x * 2).to_string(), true));
                }
                None => want.push((x.to_string(), true)),
            }
        }
        let events: Vec<(usize, String)> = xs.iter().map(|x| (0, x.to_string())).collect();
        prop_assert_eq!(run("jumper.rzo", &[("k", "Int")], &events, true), want);
    }

    #[test]
    fn switcher_counts_resets_once_switched(evs in two_channels()) {
        let mut want = vec![("0".to_string(), false)];
        let mut head = 0;
        let mut resets: Option<i64> = None;
        let mut events = Vec::new();
        for (k, x) in &evs {
            if *k == 0 {
                events.push((0, x.to_string()));
                if resets.is_none() {
                    head = *x;
                }
                want.push((head.to_string(), resets.is_none()));
            } else {
                events.push((1, "()".to_string()));
                let n = resets.map_or(1, |n| n + 1);
                resets = Some(n);
                head = n;
                want.push((head.to_string(), true));
            }
        }
        prop_assert_eq!(run("switcher.rzo", &[("num", "Int"), ("reset", "Unit")], &events, true), want);
    }

    #[test]
    fn sample_ticks_with_its_first_argument_and_zip_with_either(
        evs in prop::collection::vec((0..2usize, 0..200i64, prop::char::range('a', 'z')), 0..10)
    ) {
        let mut x = 0;
        let mut y = 'a';
        let mut sample = vec![(format!("({x}, {y:?})"), false)];
        let mut zip = sample.clone();
        let mut events = Vec::new();
        for (k, n, c) in &evs {
            if *k == 0 {
                x = *n;
                events.push((0, n.to_string()));
            } else {
                y = *c;
                events.push((1, format!("{c:?}")));
            }
            // sample reads ys's head at the moment xs ticks.
            let prev = sample.last().unwrap().0.clone();
            sample.push(if *k == 0 { (format!("({x}, {y:?})"), true) } else { (prev, false) });
            zip.push((format!("({x}, {y:?})"), true));
        }
        let channels = [("k1", "Int"), ("k2", "Char")];
        prop_assert_eq!(run("sample.rzo", &channels, &events, true), sample);
        prop_assert_eq!(run("zip.rzo", &channels, &events, true), zip);
    }

    // Collection only drops cells the result cannot reach, so what the
    // program shows is the same with or without it.
    #[test]
    fn collection_does_not_change_results(evs in prop::collection::vec((0..2usize, 0..200i64), 0..7)) {
        let channels = [("a", "Int"), ("b", "Int")];
        prop_assert_eq!(run("merge.rzo", &channels, &ints(&evs), false), run("merge.rzo", &channels, &ints(&evs), true));
        let sw = [("num", "Int"), ("reset", "Unit")];
        let events: Vec<(usize, String)> =
            evs.iter().map(|(k, x)| (*k, if *k == 0 { x.to_string() } else { "()".into() })).collect();
        prop_assert_eq!(run("switcher.rzo", &sw, &events, false), run("switcher.rzo", &sw, &events, true));
    }
}
