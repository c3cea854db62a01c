//! Structured-text serialization of finite MDPs, used for counterexample
//! dumps. Zero transition entries are omitted.

use super::{FiniteMdp, MdpError};

pub fn to_text(mdp: &FiniteMdp) -> String {
    let mut out = String::new();
    out.push_str("mdp\n");
    out.push_str(&format!("states {}\n", mdp.n_states()));
    out.push_str(&format!("actions {}\n", mdp.n_actions()));
    out.push_str(&format!("gamma {}\n", mdp.gamma()));
    let initial: Vec<String> = mdp.initial().iter().map(|s| s.to_string()).collect();
    out.push_str(&format!("initial {}\n", initial.join(" ")));
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            for s2 in 0..mdp.n_states() {
                let p = mdp.t(s, a, s2);
                if p != 0.0 {
                    out.push_str(&format!("t {s} {a} {s2} {p}\n"));
                }
            }
        }
    }
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            out.push_str(&format!("r {s} {a} {}\n", mdp.r(s, a)));
        }
    }
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            out.push_str(&format!("c {s} {a} {}\n", u8::from(mdp.is_safe(s, a))));
        }
    }
    out
}

pub fn from_text(text: &str) -> Result<FiniteMdp, String> {
    let mut n_states = 0usize;
    let mut n_actions = 0usize;
    let mut gamma = 0.0f64;
    let mut initial: Vec<usize> = Vec::new();
    let mut trans: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut rewards: Vec<(usize, usize, f64)> = Vec::new();
    let mut safety: Vec<(usize, usize, bool)> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "mdp" {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        let fail = |msg: &str| format!("line {}: {}", lineno + 1, msg);
        match key {
            "states" => n_states = rest.first().and_then(|v| v.parse().ok()).ok_or_else(|| fail("bad states"))?,
            "actions" => n_actions = rest.first().and_then(|v| v.parse().ok()).ok_or_else(|| fail("bad actions"))?,
            "gamma" => gamma = rest.first().and_then(|v| v.parse().ok()).ok_or_else(|| fail("bad gamma"))?,
            "initial" => {
                initial = rest
                    .iter()
                    .map(|v| v.parse().map_err(|_| fail("bad initial")))
                    .collect::<Result<_, _>>()?;
            }
            "t" => {
                if rest.len() != 4 {
                    return Err(fail("t needs s a s' p"));
                }
                trans.push((
                    rest[0].parse().map_err(|_| fail("bad s"))?,
                    rest[1].parse().map_err(|_| fail("bad a"))?,
                    rest[2].parse().map_err(|_| fail("bad s'"))?,
                    rest[3].parse().map_err(|_| fail("bad p"))?,
                ));
            }
            "r" => {
                if rest.len() != 3 {
                    return Err(fail("r needs s a value"));
                }
                rewards.push((
                    rest[0].parse().map_err(|_| fail("bad s"))?,
                    rest[1].parse().map_err(|_| fail("bad a"))?,
                    rest[2].parse().map_err(|_| fail("bad reward"))?,
                ));
            }
            "c" => {
                if rest.len() != 3 {
                    return Err(fail("c needs s a flag"));
                }
                safety.push((
                    rest[0].parse().map_err(|_| fail("bad s"))?,
                    rest[1].parse().map_err(|_| fail("bad a"))?,
                    rest[2] == "1",
                ));
            }
            other => return Err(fail(&format!("unknown key `{other}`"))),
        }
    }

    let mut t = vec![0.0; n_states * n_actions * n_states];
    for (s, a, s2, p) in trans {
        if s >= n_states || a >= n_actions || s2 >= n_states {
            return Err("transition index out of range".into());
        }
        t[(s * n_actions + a) * n_states + s2] = p;
    }
    let mut r = vec![0.0; n_states * n_actions];
    for (s, a, v) in rewards {
        if s >= n_states || a >= n_actions {
            return Err("reward index out of range".into());
        }
        r[s * n_actions + a] = v;
    }
    let mut c = vec![false; n_states * n_actions];
    for (s, a, v) in safety {
        if s >= n_states || a >= n_actions {
            return Err("safety index out of range".into());
        }
        c[s * n_actions + a] = v;
    }
    FiniteMdp::new(n_states, n_actions, t, r, gamma, c, initial).map_err(|e: MdpError| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::equivalence::{gridworld_case, random_mdp, two_state_chain};
    use rand::SeedableRng;

    #[test]
    fn round_trip_hand_cases() {
        for mdp in [two_state_chain(), gridworld_case()] {
            let back = from_text(&to_text(&mdp)).unwrap();
            assert_eq!(back, mdp);
        }
    }

    #[test]
    fn round_trip_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let mdp = random_mdp(&mut rng, 10, 4);
            let back = from_text(&to_text(&mdp)).unwrap();
            assert_eq!(back, mdp);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_text("states 1\nactions 1\nwhat 0").is_err());
        assert!(from_text("states 1\nactions 1\ngamma 0.9\ninitial 0\nt 0 0 5 1").is_err());
    }
}
