use std::path::PathBuf;
use std::process::{Command, Output};

fn network(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "networks", name].iter().collect();
    p.to_str().unwrap().to_owned()
}

fn qlnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlnc")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn counts_for_the_swap() {
    let out = qlnc(&["counts", "--network", &network("butterfly_swap.json")]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["qudits"], 20);
    assert_eq!(v["entangling_ops"], 30);
    assert_eq!(v["classical_messages_extra"], 18);
}

#[test]
fn cyclic_network_is_rejected() {
    let out = qlnc(&["validate", "--network", &network("cyclic.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cycle"));
}

#[test]
fn non_injective_network_exits_2() {
    for cmd in ["run-coherent", "run-mbqc"] {
        let out = qlnc(&[cmd, "--network", &network("non_injective.json"), "--input", "1,1"]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
    }
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(qlnc(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(qlnc(&["--help"]).status.code(), Some(0));
    let swap = network("butterfly_swap.json");
    assert_eq!(qlnc(&["run-coherent", "--network", &swap, "--input", "1"]).status.code(), Some(64));
    assert_eq!(qlnc(&["run-coherent", "--network", &swap, "--input", "1,7"]).status.code(), Some(64));
    let out = qlnc(&["run-coherent", "--network", &swap, "--input", "1,0", "--force-outcomes", "0,1"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn classical_swap() {
    let out = qlnc(&["run-classical", "--network", &network("butterfly_swap.json"), "--input", "1,2", "--format", "text"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2,1");
}

#[test]
fn bell_state_through_the_swap_agrees_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let bell = dir.path().join("bell.json");
    let h = 0.5f64.sqrt();
    let mut amps = vec![[0.0, 0.0]; 9];
    amps[0] = [h, 0.0];
    amps[8] = [h, 0.0];
    std::fs::write(&bell, serde_json::to_string(&amps).unwrap()).unwrap();
    for mode in ["free", "constrained"] {
        let out = qlnc(&["compare", "--network", &network("butterfly_swap.json"), "--input-state", bell.to_str().unwrap(), "--mode", mode]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["version"], 1);
        assert_eq!(v["agree"], true);
        for p in v["fidelities"].as_array().unwrap() {
            assert!((p["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn unnormalized_state_warns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, "[[2.0, 0.0], [0.0, 0.0], [0.0, 0.0]]").unwrap();
    let out = qlnc(&["run-coherent", "--network", &network("identity_wire.json"), "--input-state", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn same_seed_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = qlnc(&[
            "run-mbqc", "--network", &network("butterfly_multicast.json"), "--input", "1,0", "--seed", "11",
            "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read_to_string(path).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(v.get("wall_time_ms").is_none_or(|w| w.is_null()));
    assert!((v["fidelity_vs_oracle"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn forced_outcomes_replay_a_sampled_run() {
    let swap = network("butterfly_swap.json");
    let first = json(&qlnc(&["run-mbqc", "--network", &swap, "--input", "2,1", "--seed", "5"]));
    let outcomes: Vec<String> =
        first["outcome_vector"].as_array().unwrap().iter().map(|r| r.as_u64().unwrap().to_string()).collect();
    let replay = json(&qlnc(&["run-mbqc", "--network", &swap, "--input", "2,1", "--force-outcomes", &outcomes.join(",")]));
    assert_eq!(first["outcome_vector"], replay["outcome_vector"]);
    assert_eq!(first["corrections"], replay["corrections"]);
}

#[test]
fn exhaustive_constrained_parity() {
    let out = qlnc(&[
        "run-coherent", "--network", &network("butterfly_parity.json"), "--input", "1,1", "--mode", "constrained",
        "--exhaustive",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["summary"]["branches"].as_u64().unwrap() > 1);
    assert!((v["summary"]["min_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn geometry_lists_every_edge() {
    let v = json(&qlnc(&["compile-mbqc", "--network", &network("butterfly_swap.json")]));
    assert_eq!(v["edges"].as_array().unwrap().len(), 21);
    assert_eq!(v["qudits"].as_array().unwrap().len(), 20);
}
