use handover_core::runner::Summary;

pub const HEADER: &str = "policy,seed,total_objective,association_changes,preparation_changes,\
final_avg_regret,final_avg_regret_continuous,mean_slot_ms";

/// CSV comparison of summaries from one scenario, sorted by total objective (descending).
pub fn table(summaries: &[Summary]) -> Result<String, String> {
    let Some(first) = summaries.first() else {
        return Err("nothing to compare".into());
    };
    for s in summaries {
        if s.scenario_hash != first.scenario_hash {
            return Err(format!(
                "summaries come from different scenarios: {} ({}) vs {} ({})",
                first.scenario_hash, first.policy, s.scenario_hash, s.policy
            ));
        }
        if s.horizon != first.horizon {
            return Err(format!("horizon mismatch: {} vs {}", first.horizon, s.horizon));
        }
    }
    let mut rows: Vec<&Summary> = summaries.iter().collect();
    rows.sort_by(|a, b| b.totals.objective.total_cmp(&a.totals.objective).then_with(|| a.policy.cmp(&b.policy)));
    let mut out = String::from(HEADER);
    out.push('\n');
    for s in rows {
        let t = &s.totals;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.policy,
            s.seed,
            t.objective,
            t.association_changes,
            t.preparation_changes,
            t.final_avg_regret_discrete,
            t.final_avg_regret_continuous,
            s.timing.mean_slot_ms
        ));
    }
    Ok(out)
}
