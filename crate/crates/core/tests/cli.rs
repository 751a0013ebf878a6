mod common;

use std::path::Path;
use std::process::Command;

use spp::format::parse_instance;

fn spp(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_spp")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn corpus(name: &str) -> String {
    common::corpus_dir().join(name).to_string_lossy().into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_reports_verdicts_and_witnesses() {
    let (code, out, _) = spp(&["check", "--instance", &corpus("all_zero.spp"), "--policy", ""]);
    assert_eq!((code, out.as_str()), (0, "VALID\n"));

    let (code, out, _) = spp(&["check", "--instance", &corpus("chain_indicator.spp"), "--policy", "a"]);
    assert_eq!(code, 1);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("INVALID place=ps clearance=1"));
    let witness = lines.next().unwrap().strip_prefix("witness: ").unwrap();
    assert_eq!(witness, "t1 t2 t3");

    // the witness replays on the referenced net
    let inst = parse_instance(&std::fs::read_to_string(corpus("chain_indicator.spp")).unwrap()).unwrap();
    let run = inst.net.parse_sequence(witness.split_whitespace()).unwrap();
    assert!(inst.net.fire_sequence(&inst.initial, &run).is_ok());

    for engine in ["karp-miller", "oracle"] {
        let (code, out, _) = spp(&["--engine", engine, "check", "--instance", &corpus("chain_parikh.spp"), "--policy", "a"]);
        assert_eq!((code, out.as_str()), (0, "VALID\n"), "{engine}");
    }
}

#[test]
fn solve_then_check_is_consistent() {
    let (code, out, _) = spp(&["solve", "--instance", &corpus("mixed_semantics.spp")]);
    assert_eq!(code, 0);
    assert_eq!(out, "OPTIMAL cost=11/6 policy={a,b}\n");
    let (code, out, _) = spp(&["check", "--instance", &corpus("mixed_semantics.spp"), "--policy", "a,b"]);
    assert_eq!((code, out.as_str()), (0, "VALID\n"));

    let (code, out, _) = spp(&["solve", "--instance", &corpus("chain_indicator.spp")]);
    assert_eq!((code, out.as_str()), (2, "INFEASIBLE\n"));
}

#[test]
fn decide_uses_file_budget_unless_overridden() {
    let (code, out, _) = spp(&["decide", "--instance", &corpus("mixed_semantics.spp")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("YES "));
    let (code, out, _) = spp(&["decide", "--instance", &corpus("mixed_semantics.spp"), "--budget", "1.5"]);
    assert_eq!((code, out.as_str()), (1, "NO\n"));
    let (code, _, err) = spp(&["decide", "--instance", &corpus("two_place.spp")]);
    assert_eq!(code, 3);
    assert!(err.contains("budget"));
}

#[test]
fn gen_hard_then_decide() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("gadget.spp");
    let (code, _, _) = spp(&["gen-hard", "--net", &corpus("hard_source.spp"), "--target", "p2=2", "--out", path(&out_file)]);
    assert_eq!(code, 0);
    let (code, out, _) = spp(&["decide", "--instance", path(&out_file)]);
    assert_eq!((code, out.as_str()), (1, "NO\n"));

    let (code, _, _) = spp(&["gen-hard", "--net", &corpus("hard_source.spp"), "--target", "p2=3", "--out", path(&out_file)]);
    assert_eq!(code, 0);
    let (code, out, _) = spp(&["decide", "--instance", path(&out_file)]);
    assert_eq!((code, out.as_str()), (0, "YES cost=0/1 policy={}\n"));
    let written = parse_instance(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let expected = parse_instance(&std::fs::read_to_string(corpus("hard_gadget_uncoverable.spp")).unwrap()).unwrap();
    assert_eq!(written, expected);
}

#[test]
fn cover_reports_witnesses() {
    for engine in ["backward", "karp-miller", "oracle"] {
        let (code, out, _) = spp(&["--engine", engine, "cover", "--net", &corpus("net_only.spp"), "--target", "c>=1"]);
        assert_eq!(code, 0, "{engine}");
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("COVERABLE"));
        let names = lines.next().unwrap().strip_prefix("witness: ").unwrap();
        let inst = parse_instance(&std::fs::read_to_string(corpus("net_only.spp")).unwrap()).unwrap();
        let run = inst.net.parse_sequence(names.split_whitespace()).unwrap();
        let ms = inst.net.fire_sequence(&inst.initial, &run).unwrap();
        assert!(ms.last().unwrap()[inst.net.place("c").unwrap()] >= 1u32.into());
    }
    let (code, out, _) = spp(&["cover", "--net", &corpus("hard_source.spp"), "--target", "p2≥3"]);
    assert_eq!((code, out.as_str()), (1, "NOT-COVERABLE\n"));
}

#[test]
fn oracle_subcommand() {
    let (code, out, _) = spp(&["oracle", "--instance", &corpus("chain_parikh.spp"), "--policy", "a", "--bound", "1", "--depth", "10"]);
    assert_eq!((code, out.as_str()), (0, "VALID\n"));
    let (code, out, _) = spp(&["oracle", "--instance", &corpus("chain_parikh.spp"), "--policy", "", "--bound", "1", "--depth", "10"]);
    assert_eq!(code, 1);
    assert!(out.starts_with("INVALID"));
    let (code, out, _) = spp(&["oracle", "--instance", &corpus("unbounded_source.spp"), "--policy", "g", "--bound", "2", "--depth", "50"]);
    assert_eq!((code, out.as_str()), (4, "UNKNOWN\n"));
}

#[test]
fn transform_writes_a_uniform_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("u.spp");
    let (code, _, _) = spp(&["transform", "--instance", &corpus("fig_chain_k3.spp"), "--to", "uniform", "--out", path(&out_file)]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out_file).unwrap();
    assert!(text.contains("# origin t <- t##chain0 t##chain1 t##chain2"));
    let written = parse_instance(&text).unwrap();
    let expected = parse_instance(&std::fs::read_to_string(corpus("fig_chain_k3_uniform.spp")).unwrap()).unwrap();
    assert_eq!(written, expected);
    let (code, out, _) = spp(&["solve", "--instance", path(&out_file)]);
    assert_eq!((code, out.as_str()), (0, "OPTIMAL cost=2/1 policy={a}\n"));
}

#[test]
fn input_errors_exit_three() {
    let (code, _, err) = spp(&["frobnicate"]);
    assert_eq!(code, 3);
    assert!(err.contains("Usage"));
    let (code, _, _) = spp(&["solve", "--instance", &corpus("two_place.spp"), "--bogus"]);
    assert_eq!(code, 3);
    let (code, _, _) = spp(&["--engine", "magic", "solve", "--instance", &corpus("two_place.spp")]);
    assert_eq!(code, 3);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.spp");
    std::fs::write(&bad, "[places]\np1 init=1 l=2\n[transitions]\nt\n").unwrap();
    let (code, _, err) = spp(&["solve", "--instance", path(&bad)]);
    assert_eq!(code, 3);
    assert!(err.contains("line 2") && err.contains("initially marked secret place p1"), "{err}");
    let (code, _, err) = spp(&["check", "--instance", &corpus("two_place.spp"), "--policy", "zz"]);
    assert_eq!(code, 3);
    assert!(err.contains("zz"));
    let (code, _, _) = spp(&["solve", "--instance", "/nonexistent/x.spp"]);
    assert_eq!(code, 3);
}

#[test]
fn resource_exhaustion_exits_five() {
    let (code, out, _) = spp(&["--max-nodes", "1", "solve", "--instance", &corpus("monitor_example.spp")]);
    assert_eq!((code, out.as_str()), (5, "RESOURCE-EXHAUSTED\n"));
}

#[test]
fn generator_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (f, seed) in [(&a, "4"), (&b, "4"), (&c, "5")] {
        let (code, _, _) = spp(&["--seed", seed, "gen-random", "--out", path(f)]);
        assert_eq!(code, 0);
    }
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(parse_instance(&read(&a)).is_ok());
}
