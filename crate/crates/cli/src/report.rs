//! Aggregation of training CSVs: a final-reward/violations table with
//! medians over seeds, a machine-readable CSV, and SVG learning curves.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use aegis_core::learn::EpisodeRow;
use aegis_core::stats::median;

use crate::svg;

#[derive(Debug, Clone)]
struct Run {
    env: String,
    agent: String,
    shield: bool,
    rows: Vec<EpisodeRow>,
}

/// Mean return over the final tenth of a run (at least one episode).
pub fn tail_mean(rows: &[EpisodeRow]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let k = (rows.len() / 10).max(1);
    rows.iter().rev().take(k).map(|r| r.ret).sum::<f64>() / k as f64
}

fn parse_csv(path: &Path) -> Result<Vec<EpisodeRow>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| format!("{}: empty", path.display()))?;
    if header != EpisodeRow::CSV_HEADER {
        return Err(format!("{}: unexpected header", path.display()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!("{}: line {} malformed", path.display(), i + 2));
        }
        let parse_err = |what: &str| format!("{}: line {} bad {what}", path.display(), i + 2);
        rows.push(EpisodeRow {
            episode: f[0].parse().map_err(|_| parse_err("episode"))?,
            ret: f[1].parse().map_err(|_| parse_err("return"))?,
            steps: f[2].parse().map_err(|_| parse_err("steps"))?,
            violations: f[3].parse().map_err(|_| parse_err("violations"))?,
            interventions: f[4].parse().map_err(|_| parse_err("interventions"))?,
            epsilon_greedy: f[5].parse().map_err(|_| parse_err("epsilon"))?,
            seed: f[6].parse().map_err(|_| parse_err("seed"))?,
        });
    }
    Ok(rows)
}

// train_{env}_{agent}_shield-{on|off}_seed{N}.csv
fn parse_stem(stem: &str) -> Option<(String, String, bool, u64)> {
    let rest = stem.strip_prefix("train_")?;
    let parts: Vec<&str> = rest.split('_').collect();
    if parts.len() != 4 {
        return None;
    }
    let shield = match parts[2].strip_prefix("shield-")? {
        "on" => true,
        "off" => false,
        _ => return None,
    };
    let seed = parts[3].strip_prefix("seed")?.parse().ok()?;
    Some((parts[0].to_string(), parts[1].to_string(), shield, seed))
}

fn collect_runs(dir: &Path) -> Result<Vec<Run>, String> {
    let mut runs = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for entry in entries {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        let Some((env, agent, shield, _seed)) = parse_stem(stem) else { continue };
        runs.push(Run { env, agent, shield, rows: parse_csv(&path)? });
    }
    Ok(runs)
}

/// Builds `report.csv`, `report.txt`, and one SVG learning curve per
/// (env, agent, shield) group under `out`. Medians are taken across the
/// seeds of a group; groups with fewer than 4 seeds are flagged.
pub fn build(in_dir: &Path, out: &Path) -> Result<String, String> {
    let runs = collect_runs(in_dir)?;
    if runs.is_empty() {
        return Err(format!("no train_*.csv files under {}", in_dir.display()));
    }
    fs::create_dir_all(out).map_err(|e| e.to_string())?;

    let mut groups: BTreeMap<(String, String, bool), Vec<&Run>> = BTreeMap::new();
    for run in &runs {
        groups.entry((run.env.clone(), run.agent.clone(), run.shield)).or_default().push(run);
    }

    let mut csv = String::from("env,agent,shield,seeds,median_final_return,total_violations,total_interventions,flag\n");
    let mut table = format!(
        "{:<6} {:<8} {:<7} {:>6} {:>16} {:>12} {:>14}\n",
        "env", "agent", "shield", "seeds", "R(median final)", "U(total)", "interventions"
    );
    for ((env, agent, shield), members) in &groups {
        let finals: Vec<f64> = members.iter().map(|r| tail_mean(&r.rows)).collect();
        let med = median(&finals);
        let violations: u64 =
            members.iter().map(|r| r.rows.iter().map(|x| x.violations).sum::<u64>()).sum();
        let interventions: u64 =
            members.iter().map(|r| r.rows.iter().map(|x| x.interventions).sum::<u64>()).sum();
        let flag = if members.len() < 4 { "fewer-than-4-replicates" } else { "" };
        csv.push_str(&format!(
            "{env},{agent},{},{},{med},{violations},{interventions},{flag}\n",
            shield,
            members.len()
        ));
        table.push_str(&format!(
            "{:<6} {:<8} {:<7} {:>6} {:>16.4} {:>12} {:>14}\n",
            env,
            agent,
            if *shield { "on" } else { "off" },
            members.len(),
            med,
            violations,
            interventions
        ));

        // Median learning curve across seeds, per episode index.
        let horizon = members.iter().map(|r| r.rows.len()).min().unwrap_or(0);
        let curve: Vec<f64> = (0..horizon)
            .map(|i| {
                let at: Vec<f64> = members.iter().map(|r| r.rows[i].ret).collect();
                median(&at)
            })
            .collect();
        let name = format!("curve_{env}_{agent}_shield-{}.svg", if *shield { "on" } else { "off" });
        let title = format!("{env} / {agent} / shield {}", if *shield { "on" } else { "off" });
        fs::write(out.join(&name), svg::line_chart(&title, "episode", "return", &curve))
            .map_err(|e| e.to_string())?;
    }

    fs::write(out.join("report.csv"), &csv).map_err(|e| e.to_string())?;
    fs::write(out.join("report.txt"), &table).map_err(|e| e.to_string())?;
    Ok(format!("{table}\nwrote report.csv, report.txt, and {} curves under {}", groups.len(), out.display()))
}
