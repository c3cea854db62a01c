//! Property tests: parser/printer round trips, compiled-versus-interpreted
//! formula agreement, margin monotonicity, and wrapping laws on random
//! MDPs.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use aegis_core::mdp::{self, project_policy, TabularPolicy};
use aegis_core::monitor::builtins;
use aegis_core::monitor::compile::Compiled;
use aegis_core::monitor::{parse_formula, Cmp, Formula, Term};
use aegis_core::state::{Action, SymObject, SymbolicState};

const VARS: [&str; 4] = ["a", "b", "c", "d"];

fn term_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0..VARS.len()).prop_map(|i| Term::Var(VARS[i].to_string())),
        (-50i32..50).prop_map(|n| Term::Const(n as f64 / 4.0)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Mul(Box::new(a), Box::new(b))),
            // Division only by nonzero constants, matching the DSL contract.
            (inner.clone(), (1i32..20)).prop_map(|(a, d)| Term::Div(
                Box::new(a),
                Box::new(Term::Const(d as f64 / 2.0))
            )),
            inner.clone().prop_map(|t| Term::Neg(Box::new(t))),
            (inner, 0u32..4).prop_map(|(t, n)| Term::Pow(Box::new(t), n)),
        ]
    })
}

fn formula_strategy() -> impl Strategy<Value = Formula> {
    let cmp = prop_oneof![
        Just(Cmp::Le),
        Just(Cmp::Lt),
        Just(Cmp::Eq),
        Just(Cmp::Gt),
        Just(Cmp::Ge)
    ];
    let leaf = (cmp, term_strategy(), term_strategy())
        .prop_map(|(op, a, b)| Formula::Cmp(op, a, b));
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(p, q)| Formula::And(Box::new(p), Box::new(q))),
            (inner.clone(), inner.clone()).prop_map(|(p, q)| Formula::Or(Box::new(p), Box::new(q))),
            (inner.clone(), inner.clone())
                .prop_map(|(p, q)| Formula::Implies(Box::new(p), Box::new(q))),
            inner.prop_map(|p| Formula::Not(Box::new(p))),
        ]
    })
}

proptest! {
    // parse . print is idempotent: one round of printing normalizes the
    // tree, after which print/parse is a bijection.
    #[test]
    fn printer_parser_round_trip(f in formula_strategy()) {
        let once = parse_formula(&f.to_string()).expect("printed formula reparses");
        let twice = parse_formula(&once.to_string()).expect("round-tripped formula reparses");
        prop_assert_eq!(once, twice);
    }

    // The compiled stack machine agrees with the reference interpreter.
    #[test]
    fn compiled_matches_interpreter(
        f in formula_strategy(),
        vals in proptest::array::uniform4(-8.0f64..8.0),
    ) {
        let slots: BTreeMap<String, u16> =
            VARS.iter().enumerate().map(|(i, v)| (v.to_string(), i as u16)).collect();
        let compiled = Compiled::compile(&f, &slots).expect("formula compiles");
        let lookup = |name: &str| VARS.iter().position(|v| *v == name).map(|i| vals[i]);
        let interpreted = f.eval(&lookup).expect("interpreter total on nonzero-const divisors");
        prop_assert_eq!(compiled.eval(&vals), interpreted);
    }

    // Growing the perception margin never turns a rejected action into an
    // admitted one.
    #[test]
    fn guard_margin_monotonicity(
        eps_lo in 0.0f64..0.4,
        delta in 0.0f64..0.4,
        hx in -4.0f64..4.0,
        hy in -4.0f64..4.0,
        vx in -1.5f64..1.5,
        vy in -1.5f64..1.5,
        ai in 0usize..25,
    ) {
        let lo = builtins::circle_stop_2d(1.0, 0.1, eps_lo, 0.6, 0.3).unwrap();
        let hi = builtins::circle_stop_2d(1.0, 0.1, eps_lo + delta, 0.6, 0.3).unwrap();
        let state = SymbolicState::new(
            vec![
                SymObject { class: 0, x: 0.0, y: 0.0 },
                SymObject { class: 1, x: hx, y: hy },
            ],
            [vx, vy],
        );
        let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let action = Action::Accel2(levels[ai / 5], levels[ai % 5]);
        prop_assert!(!hi.eval(&state, &action) || lo.eval(&state, &action));
    }

    // Wrapping laws on random MDPs: idempotence, and projection lands on
    // the safe simplex.
    #[test]
    fn wrapping_laws(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = mdp::random_mdp(&mut rng, 8, 4);
        let wrapped = mdp.wrap().expect("generated MDPs admit wrapping");
        prop_assert_eq!(wrapped.wrap().unwrap(), wrapped.clone());
        prop_assert!(wrapped.all_safe());

        let pi = mdp::equivalence::random_policy(&mut rng, &wrapped, false);
        let projected = project_policy(&pi, &mdp).unwrap();
        prop_assert!(projected.is_safe_for(&mdp));
        // Rows remain distributions by construction.
        let again = TabularPolicy::new(
            projected.n_states(),
            projected.n_actions(),
            (0..projected.n_states())
                .flat_map(|s| (0..projected.n_actions()).map(move |a| (s, a)))
                .map(|(s, a)| projected.p(s, a))
                .collect(),
        );
        prop_assert!(again.is_ok());
    }
}
