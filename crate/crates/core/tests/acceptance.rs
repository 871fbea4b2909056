//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints its own PASS/FAIL line; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use atv_core::lab::{
    bernoulli_pair, check_adapted_pinsker, check_classical_pinsker, check_sandwich,
    default_eps_grid, generate_ensemble, sweep_instances, tightness_experiment, EnsembleSpec,
    Family, SweepConfig, DEFAULT_N_LIST,
};
use atv_core::{
    atv_dp, atv_lp, atv_recursive, coupling_cost, is_bicausal, kl, kl_chain,
    optimal_bicausal_coupling, tv_paths, Alphabet, Coupling, Dist, ExtReal, ProcessLaw,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn closed_form_atv() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for eps in [0.25, 0.1, 0.01, 1e-3, 1e-4] {
            let (mu, nu) = bernoulli_pair(n, eps).unwrap();
            let atv = atv_recursive(&mu, &nu).unwrap().total;
            let exact = 2.0 - 2.0 * (1.0 - eps).powi(n as i32);
            worst = worst.max((atv - exact).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && within(elapsed, Duration::from_secs(1)),
        format!("max |atv - (2 - 2(1-eps)^n)| = {worst:.3e} over 30 pairs in {elapsed:.2?}"),
    )
}

fn three_way_agreement() -> Outcome {
    let start = Instant::now();
    let config = SweepConfig {
        seed: 2024,
        count: 500,
        ..SweepConfig::default()
    };
    let mut dp_gap = 0.0f64;
    for (mu, nu) in sweep_instances(&config).unwrap() {
        let rec = atv_recursive(&mu, &nu).unwrap().total;
        dp_gap = dp_gap.max((rec - atv_dp(&mu, &nu).unwrap()).abs());
    }
    let mut lp_gap = 0.0f64;
    let mut lp_count = 0;
    for (n, count) in [(1, 34), (2, 33), (3, 33)] {
        for (i, family) in [Family::UniformRandom, Family::Markov, Family::Product]
            .into_iter()
            .enumerate()
        {
            let share = count / 3 + usize::from(i < count % 3);
            let spec = EnsembleSpec::new(n, 2, family, share, 7 + n as u64);
            for (mu, nu) in generate_ensemble(&spec).unwrap() {
                let rec = atv_recursive(&mu, &nu).unwrap().total;
                lp_gap = lp_gap.max((rec - atv_lp(&mu, &nu).unwrap()).abs());
                lp_count += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        dp_gap <= 1e-9
            && lp_gap <= 1e-7
            && lp_count == 100
            && within(elapsed, Duration::from_secs(60)),
        format!(
            "max |rec - dp| = {dp_gap:.3e} on 500, max |rec - lp| = {lp_gap:.3e} on {lp_count}, {elapsed:.2?}"
        ),
    )
}

fn adapted_pinsker(sweep: &[(ProcessLaw, ProcessLaw)]) -> Outcome {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut vacuous = 0;
    for (mu, nu) in sweep {
        let check = check_adapted_pinsker(mu, nu).unwrap();
        match check.slack {
            ExtReal::Finite(s) => worst = worst.min(s),
            ExtReal::Infinite => vacuous += 1,
        }
    }
    let mut grid_worst = f64::INFINITY;
    let mut grid_ok = true;
    for row in tightness_experiment(&DEFAULT_N_LIST, &default_eps_grid()).unwrap() {
        let slack = (row.n as f64).sqrt() * (2.0 * row.kl).sqrt() - row.atv;
        grid_worst = grid_worst.min(slack);
        grid_ok &= row.bound_ok;
    }
    let elapsed = start.elapsed();
    outcome(
        worst >= -1e-9
            && grid_worst >= -1e-9
            && grid_ok
            && within(elapsed, Duration::from_secs(60)),
        format!(
            "min slack {worst:.3e} on {} sweep pairs ({vacuous} vacuous), {grid_worst:.3e} on the tightness grid, {elapsed:.2?}",
            sweep.len()
        ),
    )
}

fn tightness() -> Outcome {
    let grid = default_eps_grid();
    let rows = tightness_experiment(&DEFAULT_N_LIST, &grid).unwrap();
    let mut increasing = true;
    for &n in &DEFAULT_N_LIST {
        let mut stage: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| (r.eps, r.ratio))
            .collect();
        // walk the grid from large to small eps
        stage.sort_by(|a, b| b.0.total_cmp(&a.0));
        increasing &= stage.len() == grid.len() && stage.windows(2).all(|w| w[1].1 > w[0].1);
    }
    let at_small = tightness_experiment(&DEFAULT_N_LIST, &[1e-4]).unwrap();
    let lowest = at_small
        .iter()
        .map(|r| r.ratio)
        .fold(f64::INFINITY, f64::min);
    let highest = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    outcome(
        increasing && lowest >= 0.999 && highest <= 1.0 + 1e-9,
        format!(
            "ratio strictly increasing in 1/eps for n in {DEFAULT_N_LIST:?}: {increasing}, min ratio at eps=1e-4 {lowest:.9}, max ratio {highest:.12}"
        ),
    )
}

fn sandwich(sweep: &[(ProcessLaw, ProcessLaw)]) -> Outcome {
    let mut failures = 0;
    let mut one_stage_gap = 0.0f64;
    let mut one_stage = 0;
    for (mu, nu) in sweep {
        let s = check_sandwich(mu, nu).unwrap();
        if !s.pass {
            failures += 1;
        }
        if mu.horizon() == 1 {
            one_stage += 1;
            one_stage_gap = one_stage_gap.max((s.atv - s.tv).abs());
        }
    }
    outcome(
        failures == 0 && one_stage_gap <= 1e-12,
        format!(
            "{failures} violations on {} pairs, max |atv - tv| = {one_stage_gap:.3e} on {one_stage} one-stage pairs",
            sweep.len()
        ),
    )
}

fn chain_rule(sweep: &[(ProcessLaw, ProcessLaw)]) -> Outcome {
    let mut worst = 0.0f64;
    let mut finite = 0;
    for (mu, nu) in sweep {
        if let (ExtReal::Finite(a), ExtReal::Finite(b)) =
            (kl(mu, nu).unwrap(), kl_chain(mu, nu).unwrap())
        {
            finite += 1;
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst <= 1e-10 && finite > 0,
        format!("max |kl_chain - kl| = {worst:.3e} on {finite} finite pairs"),
    )
}

fn anticipative_coupling() -> bool {
    // y1 = x2 and y2 = x1: both marginals are fair coin pairs, but the first
    // output already reveals the second input
    let alphabets = vec![Alphabet::binary(); 2];
    let coin = Dist::uniform(2).unwrap();
    let mu = ProcessLaw::product(alphabets.clone(), vec![coin.clone(), coin.clone()]).unwrap();
    let nu = ProcessLaw::product(alphabets, vec![coin.clone(), coin]).unwrap();
    let space = mu.space();
    let mut table = BTreeMap::new();
    for x1 in 0..2 {
        for x2 in 0..2 {
            let x = space.flat(&[x1, x2]);
            let y = space.flat(&[x2, x1]);
            table.insert((x, y), 0.25);
        }
    }
    let pi = Coupling::new(&mu, &nu, table).unwrap();
    !is_bicausal(&pi, 1e-9).bicausal
}

fn attainment(sweep: &[(ProcessLaw, ProcessLaw)]) -> Outcome {
    let mut cost_gap = 0.0f64;
    let mut not_bicausal = 0;
    for (mu, nu) in sweep {
        let pi = optimal_bicausal_coupling(mu, nu).unwrap();
        if !is_bicausal(&pi, 1e-9).bicausal {
            not_bicausal += 1;
        }
        let rec = atv_recursive(mu, nu).unwrap().total;
        cost_gap = cost_gap.max((coupling_cost(&pi) - rec).abs());
    }
    let rejected = anticipative_coupling();
    outcome(
        not_bicausal == 0 && cost_gap <= 1e-9 && rejected,
        format!(
            "{not_bicausal} non-bicausal optima, max |cost - atv| = {cost_gap:.3e}, anticipative coupling rejected: {rejected}"
        ),
    )
}

fn degenerate_inputs() -> Outcome {
    let alphabets = vec![Alphabet::binary(); 2];
    let mu = ProcessLaw::product(alphabets.clone(), vec![Dist::uniform(2).unwrap(); 2]).unwrap();
    let nu = ProcessLaw::product(
        alphabets,
        vec![Dist::point(2, 0).unwrap(), Dist::uniform(2).unwrap()],
    )
    .unwrap();
    let infinite = kl(&mu, &nu).unwrap() == ExtReal::Infinite;
    let vacuous = check_adapted_pinsker(&mu, &nu).unwrap().pass
        && check_classical_pinsker(&mu, &nu).unwrap().pass;

    let mut errors = 0;
    let mut zeros = 0;
    let mut instances = 0;
    let shapes = [(1, 3), (2, 2), (2, 3), (3, 2), (3, 3), (4, 2)];
    let families = [Family::UniformRandom, Family::Markov, Family::Product];
    for (k, (family, (n, a))) in families
        .iter()
        .flat_map(|&f| shapes.iter().map(move |&s| (f, s)))
        .enumerate()
    {
        // 18 groups sharing 200 pairs
        let count = 11 + usize::from(k < 2);
        let spec = EnsembleSpec {
            zero_fraction: 0.1,
            ..EnsembleSpec::new(n, a, family, count, 99 + n as u64 * 10 + a as u64)
        };
        for (mu, nu) in generate_ensemble(&spec).unwrap() {
            instances += 1;
            zeros += mu.joint_dense().iter().filter(|&&p| p == 0.0).count();
            let ok = atv_recursive(&mu, &nu).is_ok()
                && atv_dp(&mu, &nu).is_ok()
                && atv_lp(&mu, &nu).is_ok()
                && tv_paths(&mu, &nu).is_ok()
                && kl(&mu, &nu).is_ok()
                && kl_chain(&mu, &nu).is_ok()
                && optimal_bicausal_coupling(&mu, &nu).is_ok()
                && check_adapted_pinsker(&mu, &nu).is_ok_and(|c| c.pass)
                && check_classical_pinsker(&mu, &nu).is_ok_and(|c| c.pass)
                && check_sandwich(&mu, &nu).is_ok_and(|c| c.pass);
            if !ok {
                errors += 1;
            }
        }
    }
    outcome(
        infinite && vacuous && errors == 0 && instances == 200 && zeros > 0,
        format!(
            "kl = inf: {infinite}, vacuous pass: {vacuous}, {errors} failing of {instances} hard-zero pairs ({zeros} zero paths)"
        ),
    )
}

fn main() -> ExitCode {
    let sweep = sweep_instances(&SweepConfig::default()).unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (
            "closed-form ATV on Bernoulli products",
            Box::new(closed_form_atv),
        ),
        ("three-way oracle agreement", Box::new(three_way_agreement)),
        ("adapted Pinsker", Box::new(|| adapted_pinsker(&sweep))),
        ("tightness", Box::new(tightness)),
        ("sandwich bounds", Box::new(|| sandwich(&sweep))),
        ("chain rule", Box::new(|| chain_rule(&sweep))),
        (
            "attainment and bicausality",
            Box::new(|| attainment(&sweep)),
        ),
        ("degenerate inputs", Box::new(degenerate_inputs)),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = run();
        all &= result.pass;
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} ({})", i + 1, result.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
