use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sample_kb() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/sample.kb")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syllogic"))
        .args(args)
        .env_remove("SYLLOGIC_ASSISTANT_URL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn prove_sample_emits_checkable_proof() {
    let kb = sample_kb();
    let o = run(&["prove", "--kb", p(&kb), "--hypothesis", "A x6 x11", "--assistant", "none", "--seed", "7", "--emit-proof"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dump = stdout(&o);
    assert!(dump.starts_with("(ii) r1 A x6 x11\n"), "{dump}");

    let dir = tempfile::tempdir().unwrap();
    let proof = dir.path().join("proof.txt");
    std::fs::write(&proof, &dump).unwrap();
    let o = run(&["check-proof", "--kb", p(&kb), "--proof", p(&proof), "--hypothesis", "A x6 x11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("valid\tA x6 x11"));

    // A leaf that is not a premise.
    std::fs::write(&proof, dump.replace("(i) A x6 x7", "(i) A x6 x8")).unwrap();
    let o = run(&["check-proof", "--kb", p(&kb), "--proof", p(&proof)]);
    assert_eq!(o.status.code(), Some(8));
    assert!(stderr(&o).starts_with("error[code=proof-invalid]"));

    std::fs::write(&proof, "(ii) r9 A x6 x11\n").unwrap();
    let o = run(&["check-proof", "--kb", p(&kb), "--proof", p(&proof)]);
    assert_eq!(o.status.code(), Some(9));
}

#[test]
fn premise_hypothesis_takes_one_step() {
    let o = run(&["prove", "--kb", p(&sample_kb()), "--hypothesis", "I x1 x8"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "proved");
    assert_eq!(row[5], "1");
}

#[test]
fn prove_is_deterministic_per_seed() {
    let kb = sample_kb();
    let args = ["prove", "--kb", p(&kb), "--hypothesis", "O x5 x1", "--assistant", "noisy", "--seed", "3"];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(a, b);
    assert!(a.contains(",proved,"));
}

#[test]
fn failures_have_distinct_codes_and_one_line() {
    let kb = sample_kb();
    let cases: Vec<(Vec<&str>, i32, &str)> = vec![
        (vec!["prove", "--kb", "/nonexistent.kb", "--hypothesis", "A x1 x2"], 3, "io"),
        (vec!["prove", "--kb", p(&kb), "--hypothesis", "A x1"], 5, "formula"),
        (vec!["prove", "--kb", p(&kb), "--hypothesis", "A x11 x6"], 13, "not-proved"),
        (vec!["prove", "--kb", p(&kb), "--hypothesis", "O x5 x1", "--budget", "3"], 14, "budget"),
        (vec!["prove", "--kb", p(&kb), "--hypothesis", "A x1 x2", "--assistant", "remote"], 12, "assistant"),
        (vec!["prove", "--kb", p(&kb), "--hypothesis", "A x1 x2", "--assistant", "file"], 12, "assistant"),
    ];
    for (args, code, name) in cases {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(code), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with(&format!("error[code={name}]: ")), "{err}");
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.kb");
    std::fs::write(&bad, "schema = \"syllogic-kb/1\"\nid = \"b\"\nterms = [\"a\"]\nformulas = [\"A a b\"]\n").unwrap();
    let o = run(&["enum", "--kb", p(&bad)]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(run(&["prove"]).status.code(), Some(2));
}

#[test]
fn help_lists_every_subcommand() {
    let out = stdout(&run(&["--help"]));
    for c in ["gen-kb", "enum", "export-dataset", "prove", "check-proof", "bench", "dump-hints"] {
        assert!(out.contains(c), "{c}");
    }
}

#[test]
fn gen_kb_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = run(&["gen-kb", "--out", p(d), "--count", "2", "--preset", "small", "--seed", "11"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 2);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
    }
    let o = run(&["gen-kb", "--out", p(&a), "--preset", "small", "--min-chain-len", "4", "--max-chain-len", "2"]);
    assert_eq!(o.status.code(), Some(6));
}

#[test]
fn gen_kb_params_file() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.toml");
    std::fs::write(
        &params,
        "num_subgraphs = 1\nmin_chain_len = 3\nmax_chain_len = 3\na_per_subgraph = 3\n\
         e_edges = 0\ne_min_depth = 0\ni_edges = 0\ni_max_depth = 0\no_edges = 0\n",
    )
    .unwrap();
    let out = dir.path().join("kbs");
    let o = run(&["gen-kb", "--out", p(&out), "--params", p(&params)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("premises=3"));
}

#[test]
fn enum_lists_minimal_inferences() {
    let o = run(&["enum", "--kb", p(&sample_kb())]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "2\t3\tA x6 x11\tA x6 x7, A x7 x9, A x9 x11"), "{out}");
    let json = stdout(&run(&["enum", "--kb", p(&sample_kb()), "--format", "json"]));
    let first: serde_json::Value = serde_json::from_str(json.lines().next().unwrap()).unwrap();
    assert!(first["premises"].is_array());
}

#[test]
fn export_is_seeded_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = dir.path().join(name);
        let o = run(&[
            "export-dataset", "--kb", p(&sample_kb()), "--task", "proof-by-contradiction", "--subs", "2", "--perms", "2",
            "--seed", "5", "--out", p(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outs.push(out);
    }
    assert_eq!(std::fs::read(&outs[0]).unwrap(), std::fs::read(&outs[1]).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.jsonl.manifest.json")).unwrap()).unwrap();
    let lines = std::fs::read_to_string(&outs[0]).unwrap().lines().count();
    assert_eq!(manifest["records"].as_u64().unwrap() as usize, lines);
    assert_eq!(manifest["task"], "proof-by-contradiction");
}

#[test]
fn dumped_hints_drive_the_file_assistant() {
    let dir = tempfile::tempdir().unwrap();
    let hints = dir.path().join("hints.jsonl");
    let o = run(&["dump-hints", "--kb", p(&sample_kb()), "--out", p(&hints)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = |assistant: &str| {
        let o = run(&[
            "prove", "--kb", p(&sample_kb()), "--hypothesis", "O x5 x1", "--seed", "2", "--assistant", assistant, "--hints",
            p(&hints),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        stdout(&o).lines().nth(1).unwrap().split_once(',').unwrap().1.split_once(',').unwrap().1.to_string()
    };
    assert_eq!(report("file"), report("oracle"));
}

fn write_plan(dir: &Path, budget: u64) -> PathBuf {
    std::fs::copy(sample_kb(), dir.join("sample.kb")).unwrap();
    let plan = dir.join("plan.toml");
    std::fs::write(
        &plan,
        format!(
            "seed = \"4\"\nrepetitions = 2\nbudget = {budget}\nmin_chain_len = 1\n[kbs]\nfiles = [\"sample.kb\"]\n\
             [[configs]]\nname = \"symbolic\"\nassistant = \"symbolic\"\n\
             [[configs]]\nname = \"oracle\"\nassistant = \"oracle\"\n"
        ),
    )
    .unwrap();
    plan
}

#[test]
fn bench_reports_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), 10_000_000);
    let mut bytes = Vec::new();
    for out in ["r1", "r2"] {
        let out = dir.path().join(out);
        let o = run(&["bench", "--plan", p(&plan), "--out", p(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        bytes.push((std::fs::read(out.join("runs.csv")).unwrap(), std::fs::read(out.join("summary.csv")).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
    let runs = String::from_utf8(bytes[0].0.clone()).unwrap();
    assert!(runs.starts_with("schema,config,kb,"));
    let summary = String::from_utf8(bytes[0].1.clone()).unwrap();
    assert_eq!(summary.lines().filter(|l| l.contains(",overall,")).count(), 2);

    let o = run(&["bench", "--plan", p(&plan), "--out", p(&dir.path().join("j")), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("j/summary.json").exists());
}

#[test]
fn bench_failures_need_permission() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), 5);
    let out = dir.path().join("out");
    let o = run(&["bench", "--plan", p(&plan), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(11), "{}", stderr(&o));
    assert!(out.join("runs.csv").exists());
    let o = run(&["bench", "--plan", p(&plan), "--out", p(&out), "--allow-failures"]);
    assert_eq!(o.status.code(), Some(0));

    std::fs::write(&plan, "configs = []\n").unwrap();
    let o = run(&["bench", "--plan", p(&plan), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(10));
}
