use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use fantomette::analytics::analytics_row;
use fantomette::experiment::{run_preset, ExperimentPreset, PresetName};
use fantomette::netsim::{mean_at, SimConfig};

fn preset_names() -> Vec<&'static str> {
    PresetName::ALL.iter().map(|p| p.as_str()).collect()
}

fn run_command() -> Command {
    let mut cmd = Command::new("run")
        .about("Run a preset and write its CSV artifacts")
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .value_parser(value_parser!(PathBuf)),
        )
        .arg(
            Arg::new("preset")
                .long("preset")
                .value_name("NAME")
                .default_value("baseline")
                .value_parser(preset_names()),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .default_value("out")
                .value_parser(value_parser!(PathBuf)),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .action(ArgAction::Append)
                .help("Override any config field"),
        );
    for (key, default) in SimConfig::default().entries() {
        let mut arg = Arg::new(key)
            .long(key)
            .value_name("VALUE")
            .help(format!("default {default}"));
        if key == "n_players" {
            arg = arg.visible_alias("players");
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

fn analytics_command() -> Command {
    let num = |name: &'static str, default: &'static str| {
        Arg::new(name)
            .long(name)
            .default_value(default)
            .value_parser(value_parser!(u64))
    };
    let real = |name: &'static str, default: &'static str| {
        Arg::new(name)
            .long(name)
            .default_value(default)
            .value_parser(value_parser!(f64))
    };
    Command::new("analytics")
        .about("Print the closed-form coalition estimates")
        .arg(num("n", "150"))
        .arg(num("n_c", "50").visible_alias("n-c"))
        .arg(num("k", "3"))
        .arg(real("pun", "6"))
        .arg(real("c", "1"))
}

fn cli() -> Command {
    Command::new("fantomette")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Blockdag consensus simulator")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(run_command())
        .subcommand(analytics_command())
        .subcommand(
            Command::new("config")
                .about("Print the effective configuration")
                .args(
                    run_command()
                        .get_arguments()
                        .filter(|a| a.get_id() != "preset" && a.get_id() != "out")
                        .cloned(),
                ),
        )
}

fn effective_config(m: &ArgMatches) -> Result<SimConfig, String> {
    let mut cfg = SimConfig::default();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg = cfg
            .parse_onto(&text)
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    for (key, _) in SimConfig::default().entries() {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v).map_err(|e| format!("--{key}: {e}"))?;
        }
    }
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set {kv}: expected KEY=VALUE"))?;
        cfg.set(k, v).map_err(|e| format!("--set {kv}: {e}"))?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(m: &ArgMatches) -> Result<(), String> {
    let cfg = effective_config(m)?;
    let name: PresetName = m
        .get_one::<String>("preset")
        .expect("defaulted")
        .parse()
        .map_err(|e| format!("{e}"))?;
    let out = m.get_one::<PathBuf>("out").expect("defaulted");
    let preset = ExperimentPreset::new(name, cfg);
    eprint!("{}", preset.manifest());
    let art = run_preset(&preset, out).map_err(|e| e.to_string())?;
    for r in &art.analytics {
        println!(
            "n={} n_c={} consecutive={:.4} grinding={:.4} harm={:.6} ratio={:.4}",
            r.n,
            r.n_c,
            r.expected_consecutive,
            r.grinding_expectation,
            r.harm_probability,
            r.immunity_ratio
        );
    }
    for s in &preset.sizes {
        let at = |f: fn(&fantomette::netsim::RunMetrics) -> f64| mean_at(&art.rows, *s, f);
        println!(
            "size={s:<3} fork={:.2} quality_coalition={:.4} payoff_altruistic={:.4} payoff_coalition={:.4}",
            at(|r| r.longest_fork as f64),
            at(|r| r.quality_coalition),
            at(|r| r.payoff_altruistic),
            at(|r| r.payoff_coalition),
        );
    }
    for f in &art.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn analytics(m: &ArgMatches) -> Result<(), String> {
    let n = *m.get_one::<u64>("n").expect("defaulted");
    let n_c = *m.get_one::<u64>("n_c").expect("defaulted");
    let k = u32::try_from(*m.get_one::<u64>("k").expect("defaulted")).map_err(|e| e.to_string())?;
    let pun = *m.get_one::<f64>("pun").expect("defaulted");
    let c = *m.get_one::<f64>("c").expect("defaulted");
    let r = analytics_row(n, n_c, k, pun, c).map_err(|e| e.to_string())?;
    println!("quantity                 value");
    println!("expected_consecutive     {:.6}", r.expected_consecutive);
    println!("grinding_expectation     {:.6}", r.grinding_expectation);
    println!("harm_probability         {:.6}", r.harm_probability);
    println!("immunity_ratio           {:.6}", r.immunity_ratio);
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let result = match matches.subcommand() {
        Some(("run", m)) => run(m),
        Some(("analytics", m)) => analytics(m),
        Some(("config", m)) => effective_config(m).map(|c| print!("{c}")),
        _ => unreachable!("subcommand required"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
