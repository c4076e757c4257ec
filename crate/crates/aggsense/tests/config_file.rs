use aggsense::config::{load_sim_config, parse_sim_config, DEFAULT_SIM_CONFIG};
use aggsense_core::simulator::default_configs;
use aggsense_core::FIXTURES;
use std::path::Path;

fn err(text: &str) -> String {
    parse_sim_config(text).unwrap_err().to_string()
}

fn without(name: &str) -> String {
    let mut out = String::new();
    for block in DEFAULT_SIM_CONFIG.split("[[fixture]]").skip(1) {
        if !block.contains(&format!("name = \"{name}\"")) {
            out.push_str("[[fixture]]");
            out.push_str(block);
        }
    }
    out
}

#[test]
fn shipped_config_is_the_default_household() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/default_sim.toml");
    let cfgs = load_sim_config(&path).unwrap();
    assert_eq!(cfgs, default_configs());
    let order: Vec<_> = cfgs.iter().map(|c| c.fixture).collect();
    assert_eq!(order, FIXTURES);
}

#[test]
fn sections_may_come_in_any_order() {
    let blocks: Vec<&str> = DEFAULT_SIM_CONFIG.split("[[fixture]]").skip(1).collect();
    let reversed: String = blocks.iter().rev().map(|b| format!("[[fixture]]{b}")).collect();
    assert_eq!(parse_sim_config(&reversed).unwrap(), default_configs());
}

#[test]
fn missing_fixture_is_named() {
    assert!(err(&without("dishwasher")).contains("fixture dishwasher absent"));
}

#[test]
fn duplicate_fixture_is_rejected() {
    let text = format!("{DEFAULT_SIM_CONFIG}\n[[fixture]]{}", DEFAULT_SIM_CONFIG.split("[[fixture]]").nth(1).unwrap());
    assert!(err(&text).contains("defined twice"));
}

#[test]
fn negative_rate_names_the_key() {
    let text = DEFAULT_SIM_CONFIG.replacen("uses_per_day = 10.0", "uses_per_day = -1", 1);
    assert!(err(&text).contains("toilet.uses_per_day"));
}

#[test]
fn malformed_sections_are_rejected() {
    let short = DEFAULT_SIM_CONFIG.replacen("0.3, 0.2, 0.1, 0.1, 0.2, 0.6,", "", 1);
    assert!(err(&short).contains("toilet.diurnal_weights"));
    let both = DEFAULT_SIM_CONFIG.replacen("median = 60.0, sigma", "median = 60.0, mu = 4.0, sigma", 1);
    assert!(err(&both).contains("toilet.duration"));
    let unknown = DEFAULT_SIM_CONFIG.replacen("name = \"toilet\"", "name = \"bathtub\"", 1);
    assert!(err(&unknown).contains("bathtub"));
    let gap_only = DEFAULT_SIM_CONFIG.replace("flow_fraction = 1.0", "flow_fraction = 0.0");
    assert!(err(&gap_only).contains("cycle_template"));
}

#[test]
fn log_parameters_can_be_given_directly() {
    let text = DEFAULT_SIM_CONFIG.replacen("{ median = 1.1, sigma = 0.15 }", "{ mu = 0.5, sigma = 0.15 }", 1);
    let cfgs = parse_sim_config(&text).unwrap();
    assert_eq!(cfgs[0].intensity.mu, 0.5);
}
